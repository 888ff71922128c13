"""Generic-chaining tail bounds and exact simulators for vanishing process suprema."""
from .chaining import (
    ChainingParams,
    TailBoundReport,
    bound_constant,
    chaining_weight,
    entropy_sum,
    hypothesis_check,
    tail_bound,
)
from .errors import ConfigurationError, DomainError, HypothesisError, KernelAuditError
from .metric import (
    UNIT_INTERVAL,
    IndexSpace,
    PartitionFamily,
    build_partition_family,
    covering_number,
    entropy_integral,
    largest_trivial_level,
)
from .montecarlo import ExperimentConfig, estimate_sup_prob, moment_audit, run_sweep
from .processes import (
    CppModel,
    IndicatorModel,
    KernelSpec,
    PowerLawIntensity,
    b_eps,
    cpp_path,
    indicator_moments,
    indicator_path,
    kernel_hoelder_audit,
    region_mass,
    var_t0,
)

__version__ = "0.1.0"
