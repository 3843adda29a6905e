"""possem: decide, certify, and falsify positivity of elliptic-system semigroups.

The semigroup generated by a second-order divergence-form system with
matrix-valued coefficients is positive exactly when the symmetrized
coefficients are real diagonal matrices at almost every point; the system is
then equivalent to independent scalar equations.  This package turns that
dichotomy into an executable decision with certified outputs on both sides:
extracted scalar systems and a factorized propagator when positive, a
disjointly supported pair with positive form value when not.
"""

from .assembly import (
    DiscreteForm,
    Grid,
    assemble,
    commutation_residual,
    export_matrix_text,
    form_value,
)
from .catalog import CatalogEntry, get as get_catalog_entry, names as catalog_names
from .coefficients import (
    ConstantField,
    EllipticSystem,
    EllipticityReport,
    GridSampledField,
    PolynomialField,
    check_ellipticity,
    eval_coefficient,
    realify_field,
    realify_matrix,
    symmetrized,
)
from .decoupling import (
    NonrealWitness,
    ProbeResult,
    Verdict,
    WitnessCertificate,
    construct_witness,
    decide_decoupling,
    extract_offdiag_2d,
    extract_scalar_systems,
    form_criterion_sample,
    lattice_pair_value,
    probe,
    probe_system,
)
from .errors import (
    CapacityError,
    ConfigError,
    ContractViolation,
    DomainError,
    GeometryError,
    IndeterminateDecision,
    NumericalError,
    PossemError,
    UnsupportedContract,
    WitnessNotLocalized,
)
from .multop import (
    MultWitness,
    diag_projection,
    find_witness,
    is_multiplication,
    lift_is_diagonal,
    trace_duality_residual,
)
from .polynomials import MultiPoly
from .semigroup import (
    GeneratorOperator,
    PositivityReport,
    expm_apply,
    expm_dense,
    factorization_residual,
    positivity_scan,
)
from .tents import (
    PiecewisePoly1D,
    TensorTestFunction,
    TestPair,
    build_test_pair,
    double_hat,
    hat,
    tensor_product_integral,
)

__version__ = "0.1.0"
