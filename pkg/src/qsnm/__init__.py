"""Quarter-symmetric non-metric connections on generalized Riemannian manifolds.

Symbolic fields on a coordinate chart, the connection and curvature engine, and
a registry of identities checked numerically at sampled points.
"""

from .expr import DomainError, Evaluator, Expr, ExprSyntaxError, differentiate, evaluate, parse, simplify, to_string
from .fields import (
    Chart, DegeneracyError, GeneralizedMetric, GeneratorField, StructureField, TensorField,
    compute_A, compute_P, split_metric,
)
from .connections import (
    CANONICAL, ConnectionCoefficients, QSFamilyParams, TorsionField, christoffel,
    covariant_derivative, dual_connection, qs_connection, symmetric_part_connection, torsion,
)
from .curvature import CurvatureField, curvature_closed_forms, curvature_mixed, curvature_standard
from .manifold import (
    E1_SPEC, ManifoldSpec, QSManifold, RandomManifoldConfig, load_manifold, random_manifold,
)
from .verify import emit_report, registry, run_check, run_suite

__version__ = "0.1.0"
