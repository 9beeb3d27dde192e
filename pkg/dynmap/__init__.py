"""dynmap: classificazione numerica di mappe dinamiche quantistiche dipendenti dal tempo."""
from .errors import ConfigError, DomainError, DynmapError, NumericalError, SingularMap
from .models import MODELS, MapFamily, eval_family, make_family
from .witness import ToleranceConfig, classify

__all__ = [
    "ConfigError", "DomainError", "DynmapError", "NumericalError", "SingularMap",
    "MODELS", "MapFamily", "eval_family", "make_family",
    "ToleranceConfig", "classify",
]
