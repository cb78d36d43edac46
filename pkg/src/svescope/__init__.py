"""svescope: vectorization-effectiveness analysis for ARM SVE platforms.

Measures or ingests hardware-counter data for scalar/ASIMD/SVE builds of
computational kernels, derives instruction-reduction and arithmetic-
intensity metrics, evaluates a vector-aware roofline model, and classifies
each workload into one of four performance classes.
"""

__version__ = "0.1.0"

from .machine import (  # noqa: F401
    GRACE,
    EventSet,
    MachineModel,
    PmuEvent,
    REGISTRY,
    bandwidth_at,
    default_event_set,
    load_machine_model,
    peak_scalar_flops,
)
from .collector import (  # noqa: F401
    MeasurementRecord,
    ReplayBackend,
    RoiSession,
    SyntheticBackend,
    configure_measure,
    dump_measurements,
    load_measurements,
    read_results,
    start_measure,
    stop_measure,
)
from .metrics import (  # noqa: F401
    AI_UNBOUNDED,
    KernelAnalysis,
    analyze,
    analyze_all,
    estimated_ai,
    instruction_reduction,
    llc_miss_ratio,
    speedup,
    vectorization_bound,
)
from .roofline import (  # noqa: F401
    RooflineConfig,
    RooflinePoint,
    attainable,
    inflection_scalar,
    inflection_vector,
    roofline_dataset,
)
from .classifier import (  # noqa: F401
    Classification,
    ClassifierConfig,
    classify,
    classify_suite,
)
