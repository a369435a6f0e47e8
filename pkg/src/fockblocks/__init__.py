"""Signature-string calculus and recursive self-energy renormalization on
truncated Fock spaces."""

from .errors import BudgetError, ConfigError
from .signatures import (
    Handedness,
    SigString,
    Signature,
    adjoint,
    classify,
    compose,
    count_a,
    count_b,
    enumerate_strings,
    format_string,
    is_handed,
    parse_string,
    split_points,
)
from .tuples import (
    BlockTuple,
    PSet,
    ambidextrous_substrings,
    canonical_tuple,
    enumerate_psets,
    enumerate_tuples,
    equivalent,
    format_tuple,
    markers,
    parse_tuple,
    subordinates,
    tuple_to_string,
)
from .model import (
    KernelSet,
    ModelConfig,
    MomentumGrid,
    build_kernels,
    dispersion_a,
    dispersion_b,
)
from .fock import (
    FockBasis,
    FockSystem,
    build_h0,
    build_hi,
    build_operators,
    c_lambda_bound,
    export_matrix_market,
    interaction_term,
)
from .wick import (
    ContractionPattern,
    Diagram,
    evaluate_diagram,
    fully_contracted,
    normal_order_product,
    order2_counterterm,
    pattern_signature,
    patterns_for,
    self_energy_oracle,
)
from .renorm import BlockEngine, BlockHandle, SeriesReport, adaptive_threshold, opnorm

__version__ = "0.1.0"
