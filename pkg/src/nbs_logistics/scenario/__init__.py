"""Declarative scenario description, validation and the time-expanded grid."""
# pylint: disable=unused-import

from nbs_logistics.scenario._defaults import *
from nbs_logistics.scenario._grid import *
from nbs_logistics.scenario._io import *
from nbs_logistics.scenario._types import *
from nbs_logistics.scenario._validate import *
