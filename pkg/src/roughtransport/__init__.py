"""Generalized solutions of scalar transport equations with rough coefficients."""

from .errors import (AssertionFailure, BoundsViolated, ConditionViolated,
                     ForwardUniquenessViolated, MissingMetadata, NoConvergence, NotApplicable,
                     NotAutonomous, NotDifferentiable, NotSolutionPair, OutsideDomain, ParseError,
                     PrescribedMissing, ProductUndefined, QuadratureFailure, RoughTransportError,
                     StepFailure, TailBoundFailure)
from .expr import Expr
from .measures import DensityPanel, MeasureState
from .pairing import (PairingTable, SpaceTimeTest, TestFunction, default_family,
                      default_space_time_family, distribution_distance, make_bump, pair,
                      pair_many, pairing_table)
from .piecewise import PiecewiseCoefficient, SmoothCoefficient
from .flows import caratheodory_flow, filippov_flow, filippov_flow_map, flow_semigroup_check
from .transport import (MeasureSolution, bouchut_james_solve, caratheodory_solve, closed_form,
                        poupaud_rascle_solve, weak_residual)
from .products import (ProductResult, diamond_product, model_product, model_product_rule,
                       pr_product)
from .colombeau import (coefficient_net, growth_fit, moderateness_exponent, mollify,
                        regularized_pairings, shadow, solve_regularized)
from .energy import energy_check, garding_probe, h_function
from .semigroup import bound_table, build_context, resolvent, semigroup_apply
from .applicability import PlanarField, TheoryMatrix, classify, render_table
from .scenarios import builtin, list_scenarios, load_scenario, parse_scenario
from .runner import RunOptions, RunReport, run_scenario

__version__ = "0.1.0"
