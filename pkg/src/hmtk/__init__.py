"""Dyadic cubes, Haar-type wavelets and inhomogeneous Lipschitz/Carleson
norms on finite metric-measure spaces."""
from .diagnostics import (GeometryConfig, ahlfors_test, bounds_experiment, default_probes,
                          equiv_experiment, geometry_lower, geometry_upper)
from .dyadic import DyadicTree, NetHierarchy, build_cubes, build_nets, build_tree, verify_cube_axioms
from .errors import (AxiomViolation, DegenerateCube, HmtkError, NetError, ParseError,
                     PreconditionError, ValidationError)
from .generators import GeneratorSpec, generate, planted_suite
from .io import load, save
from .norms import (NormReport, ball_functional, carleson_norm, check_multiplier_bound,
                    check_pairing_bound, check_pointwise_bounds, holder_norm, kernel_E, kernel_P,
                    lip_norm, test_function_norm)
from .space import (BallQueryCache, DoublingProfile, FiniteHomSpace, ball_measure,
                    check_ball_ratio_bound, doubling_profile, validate_space, vol_pair)
from .wavelets import (CoefficientSet, WaveletBasis, analyze, build_mra, fit_decay, partial_sum,
                       synthesize)

__version__ = "0.1.0"
