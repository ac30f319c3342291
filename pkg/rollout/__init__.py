from .simulation import *
