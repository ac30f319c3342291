from .training import *
from .plot import *
