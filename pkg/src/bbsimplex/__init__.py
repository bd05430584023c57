"""Imports all public functions under the `bbsimplex` namespace."""

from .constants import *
from .problem import *
from .simplex import *
from .branch import *
from .serialize import *
from .rng import *
from .lattice import *
from .highs import *
