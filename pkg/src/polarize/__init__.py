"""Lower and upper bounds on maximal polarization of planar regions."""

from .geometry import (ON_A, ON_CONV_A, Disk, Polygon, RegionUnion, SampleNet, build_net,
                       contains, hull_membership, parse_region, validate_net)
from .model import MipInstance, build_lower_instance, build_upper_instance, weight_matrix
from .potential import PotentialSpec, control_g, control_hat, eval_f, potential_U
from .solver import BoundReport, brute_force_oracle, dual_bound, greedy_incumbent, solve_bnb

__version__ = "0.1.0"
