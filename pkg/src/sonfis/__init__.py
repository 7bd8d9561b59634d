"""SONFIS: self-organizing neuro-fuzzy inference system.

A SOM reduces the training data to crisp granules, a TSK fuzzy system turns
the granules into rules, and a close-open controller balances the two
granulation levels either by random structure search (SONFIS-R) or by an
adaptive linear neuron-growth law (SONFIS-AR). Ships with a Plitt-based
synthetic hydrocyclone data generator and a batch CLI.
"""

__version__ = "0.1.0"

from .controller import (
    BalanceReport,
    IterationRecord,
    RunTrace,
    SonfisArConfig,
    SonfisRConfig,
    constant_mean_baseline,
    detect_balance,
    next_neuron_count,
    rmse,
    run_iteration,
    run_sonfis_ar,
    run_sonfis_r,
    trace_from_csv,
    trace_to_csv,
)
from .dataset import (
    CANONICAL_COLUMNS,
    Dataset,
    NormalizationSpec,
    Record,
    apply_normalization,
    denormalize,
    load_csv,
    normalize,
    save_csv,
    split,
    validate_cyclone_schema,
)
from .nfis import (
    B_FLOOR,
    LSE_RIDGE,
    MIN_FIRING,
    SIGMA_FLOOR,
    NfisTrainConfig,
    RuleBase,
    TSKRegressor,
    eval_consequent,
    extract_rules_text,
    firing_strengths,
    fit_consequents_lse,
    generalized_bell,
    infer,
    init_rulebase,
    load_model,
    predict,
    premise_gradient,
    save_model,
    train_hybrid,
)
from .plitt import (
    CycloneGeometry,
    FeedPsd,
    K_FLOW,
    OperatingPoint,
    PartitionCurve,
    cumulative_passing,
    feed_cumulative,
    flow_rate,
    generate_dataset,
    imperfection,
    partition_value,
    plitt_d50,
    underflow_mass_fraction,
)
from .som import (
    SelfOrganizingMap,
    SomConfig,
    best_matching_unit,
    codebook_to_csv,
    extract_granules,
    factor_grid,
    occupied_prototypes,
    quantization_error,
)

__all__ = [
    "__version__",
    # dataset
    "CANONICAL_COLUMNS", "Dataset", "NormalizationSpec", "Record",
    "apply_normalization", "denormalize", "load_csv", "normalize", "save_csv",
    "split", "validate_cyclone_schema",
    # som
    "SelfOrganizingMap", "SomConfig", "best_matching_unit", "codebook_to_csv",
    "extract_granules", "factor_grid", "occupied_prototypes",
    "quantization_error",
    # nfis
    "B_FLOOR", "LSE_RIDGE", "MIN_FIRING", "SIGMA_FLOOR", "NfisTrainConfig",
    "RuleBase", "TSKRegressor", "eval_consequent", "extract_rules_text",
    "firing_strengths", "fit_consequents_lse", "generalized_bell", "infer",
    "init_rulebase", "load_model", "predict", "premise_gradient", "save_model",
    "train_hybrid",
    # controller
    "BalanceReport", "IterationRecord", "RunTrace", "SonfisArConfig",
    "SonfisRConfig", "constant_mean_baseline", "detect_balance",
    "next_neuron_count", "rmse", "run_iteration", "run_sonfis_ar",
    "run_sonfis_r", "trace_from_csv", "trace_to_csv",
    # plitt
    "CycloneGeometry", "FeedPsd", "K_FLOW", "OperatingPoint", "PartitionCurve",
    "cumulative_passing", "feed_cumulative", "flow_rate", "generate_dataset",
    "imperfection", "partition_value", "plitt_d50", "underflow_mass_fraction",
]
