"""Multi-channel 2D Gel'fand-Calderon inverse problem: forward DtN solver,
Bukhgeim-type oscillatory amplitudes and pointwise reconstruction."""

from . import errors
from .geometry import DomainGrid, contains, make_disc, make_ellipse
from .fields import BoundaryField, MatrixField
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["errors", "DomainGrid", "make_disc", "make_ellipse", "contains", "MatrixField",
           "BoundaryField", "BACKEND", "__version__"]
