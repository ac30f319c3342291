from .demonstrations import *
from .transform import *
from .strategy import *
