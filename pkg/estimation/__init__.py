from .weights import *
from .posture import *
from .evaluation import *
from .calibration import *
