"""Equilibria, potentials, tolls and efficiency for two-type routing games."""

from .costs import (AffineEdgeCost, EdgeCost, GeneralEdgeCost, PhysicalConstants, PlatooningParams,
                    cost_jacobian, edge_cost, path_cost, platooning_affine, validate_assumption1)
from .efficiency import (PoAReport, price_of_anarchy, social_cost, solve_social_optimum,
                         theorem3_applicable)
from .equilibrium import (NashCertificate, SolveOptions, brute_force_equilibrium, solve_equilibrium,
                          verify_nash)
from .errors import *  # noqa: F401,F403
from .game import Game
from .gamefile import load_game, parse_game, serialize_game
from .network import Commodity, Graph, PathSet, edge_flows, enumerate_paths, validate_feasible
from .potential import (SymmetryReport, Verdict, check_potential_exists, potential_gradient,
                        potential_value, symmetry_residual)
from .tolls import (IndistinguishableToll, LinearToll, TollScheme, apply_tolls, distinguishable_tolls,
                    indistinguishable_tolls, verify_toll_condition)

__version__ = "0.1.0"
