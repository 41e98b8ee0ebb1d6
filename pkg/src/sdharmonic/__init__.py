"""Exact and numerical tools for self-dual harmonic 2-forms near their zero circle.

Submodules:

- ``ring``: exact trig-exp polynomial coefficients on S^1 x D^3
- ``forms``: exterior algebra, d, Hodge star, affine chart maps
- ``models``: the local models A and B, splitting classification
- ``acs``: the compatible almost complex structure off the zero circle
- ``moser``: Moser-flow grafting onto a model
- ``reeb``: the contact form on S^1 x S^2, its Reeb field and orbits
- ``cli``: command-line front end
"""
from .exceptions import *  # noqa: F401,F403
from .ring import ChartPoint, RingElement, RingTerm, Trig
from .forms import AffineChartMap, DiffForm, ext_d, hodge4, pullback_affine, wedge
from .models import (
    LocalModel,
    ModelSpec,
    classify_splitting,
    extract_L,
    make_model,
    omega_A,
    omega_B,
)
from .acs import acs_at, omega_matrix
from .moser import FormFamily, graft_experiment, integrate_flow, primitive_homotopy, taylor_correction
from .reeb import integrate_orbit, make_contact, orbit_census, reeb_at

__version__ = "0.1.0"
