"""
okdroplet - sharp-interface droplet lab for the nonlocal isoperimetric problem.
"""

__version__ = "0.1.0"

from .domain import Domain
from .energy import DropletFunctional, ModelParams
from .models import Resolution, RunConfig
from .shape import DropletShape

__all__ = [
    "Domain",
    "DropletFunctional",
    "DropletShape",
    "ModelParams",
    "Resolution",
    "RunConfig",
    "__version__",
]
