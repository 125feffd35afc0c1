"""Matrix step-function filters on the circle and their dilation analysis.

The package builds filters relative to a chain of supports and a dilation
factor, verifies their defining coset identities exactly on rational
grids, realizes the associated averaging operator and its adjoint on step
fields, and decides between the two sides of the purity dichotomy: decay
of all averages against a shared modulus-one eigenvector, backed either
way by checkable evidence (a direct eigenpair re-test or an expansion
certificate on a region around 0).
"""

from .bundleio import (
    canonical_json,
    emit_bundle,
    float_str,
    load_bundle,
    parse_bundle,
    save_bundle,
)
from .errors import (
    BundleFormatError,
    DimensionCapError,
    GmraFilterError,
    GridAlignmentError,
    ParameterError,
    ResolutionError,
)
from .filters import (
    FilterMatrix,
    JourneParams,
    ResidualReport,
    StepFn,
    SupportReport,
    coarsen_check,
    cocycle_product,
    filter_equation_residual,
    generalized_filter_residual,
    journe_profile,
    journe_sigma_chain,
    make_journe_step,
    make_constant,
    make_haar,
    make_journe_family,
    make_shannon,
    refine,
    support_violations,
)
from .gmra import IntersectionReport, Tower, build_tower, intersection_report
from .lowpass import (
    BoundCheck,
    Certificate,
    CertificateFailure,
    JourneDerivation,
    certificate_eps,
    check_certificate,
    derive_journe,
    search_certificate,
)
from .ruelle import (
    INCONCLUSIVE,
    NOT_PURE_CERTIFIED,
    PURE_AT_RESOLUTION,
    PURE_CERTIFIED,
    EigenPair,
    PurityVerdict,
    TransferMatrix,
    VecField,
    assemble_transfer_matrix,
    classify_purity,
    decay_probe,
    isometry_residual,
    martingale_sequence,
    random_vecfield,
    ruelle_apply,
    transfer_apply,
)
from .torus import (
    GridSpec,
    IntervalSet,
    SigmaChain,
    TorusPoint,
    kernel_points,
    rat_str,
)

__version__ = "0.1.0"

__all__ = [
    "BoundCheck",
    "BundleFormatError",
    "Certificate",
    "CertificateFailure",
    "DimensionCapError",
    "EigenPair",
    "FilterMatrix",
    "GmraFilterError",
    "GridAlignmentError",
    "GridSpec",
    "INCONCLUSIVE",
    "IntersectionReport",
    "IntervalSet",
    "JourneDerivation",
    "JourneParams",
    "NOT_PURE_CERTIFIED",
    "PURE_AT_RESOLUTION",
    "PURE_CERTIFIED",
    "ParameterError",
    "PurityVerdict",
    "ResidualReport",
    "ResolutionError",
    "SigmaChain",
    "StepFn",
    "SupportReport",
    "Tower",
    "TorusPoint",
    "TransferMatrix",
    "VecField",
    "assemble_transfer_matrix",
    "build_tower",
    "canonical_json",
    "certificate_eps",
    "check_certificate",
    "classify_purity",
    "coarsen_check",
    "cocycle_product",
    "decay_probe",
    "derive_journe",
    "emit_bundle",
    "filter_equation_residual",
    "float_str",
    "generalized_filter_residual",
    "intersection_report",
    "isometry_residual",
    "journe_profile",
    "journe_sigma_chain",
    "kernel_points",
    "load_bundle",
    "make_journe_step",
    "make_constant",
    "make_haar",
    "make_journe_family",
    "make_shannon",
    "martingale_sequence",
    "parse_bundle",
    "random_vecfield",
    "rat_str",
    "refine",
    "ruelle_apply",
    "save_bundle",
    "search_certificate",
    "support_violations",
    "transfer_apply",
]
