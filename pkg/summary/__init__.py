from .table import *
