"""Two-stage vehicle routing: assign nodes to vehicles by binary integer programming, then route each vehicle."""

from .geom import MILES_PER_DEGREE, Point, convex_hull, degrees_to_miles, euclid_dist
from .instance import DailyInstance, DemandNode, UnitMap, VehicleConfig, vehicle_count
from .bip import BipProblem, solve_bip
from .assign import Assignment, NoFeasibleAssignment, assign_nodes, select_seeds
from .route import Route, brute_force_route, greedy_route, simulated_annealing, subtour_reversal

__version__ = "0.1.0"
