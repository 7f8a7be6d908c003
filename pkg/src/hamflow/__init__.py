"""Random Hamiltonian diffeomorphisms of the flat 2-torus.

Sampling of Gaussian random Hamiltonians, symplectic flow integration,
group operations on generating Hamiltonians, random walks, RKHS norms, and
the Monte Carlo experiment harness (diffusion, Lagrangian intersections,
tail and invariance statistics).
"""

from .basis import Mode, SpectralBasis, TorusPoint, Truncation, build_basis, torus_distance
from .config import ExperimentConfig, parse_config, serialize_config
from .errors import (DegenerateOverlap, FactorizationFailure, HamflowError, NonFinite,
                     NotAutonomous, OutOfRange, ParseError, RefinementOverflow,
                     Unsupported, ValidationError)
from .field import (HamiltonianLaw, RandomHamiltonian, gaussian_dimension, make_law,
                    sample_hamiltonian, spectral_weight)
from .flow import (BumpFunction, CallableHamiltonian, FlowSettings, LagrangianCurve,
                   advect_curve, circle_curve, composition_hamiltonian,
                   concatenate_autonomous, flow_jacobian_determinant, flow_points,
                   flow_points_through, horizontal_circle, integrate_point,
                   inverse_generating_hamiltonian, inverse_point, sloped_circle,
                   time_reversed_hamiltonian, vertical_circle, zero_hamiltonian)
from .rkhs import (CoefficientTable, coefficient_expansion, reconstruct_value,
                   rkhs_norm, weighted_coefficient_sum)
from .rng import derive
from .temporal import (CONSTANT, KernelKind, PERIODIC, SQEXP, TemporalSample,
                       evaluate_temporal, kernel_value, sample)
from .walk import (WalkState, apply_walk, apply_walk_points, induced_point_walk,
                   sample_walk, walk_generating_hamiltonian)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
