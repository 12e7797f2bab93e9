from .json_parser import JSONParser
from .middleware import SweepMiddleware
from .symbol import DispersionSymbol, FourierSymbol
