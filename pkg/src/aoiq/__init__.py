"""Average Age of Information of processor-sharing status-update queues.

Four layers, importable independently:

* :mod:`aoiq.closed_form` - exact AAoI expressions and ratio bounds;
* :mod:`aoiq.shs` / :mod:`aoiq.builders` - linear age solver over Markov
  models with reset maps, plus constructors for every supported queue;
* :mod:`aoiq.simulate` - discrete-event Monte Carlo estimator;
* :mod:`aoiq.analysis` - bound sweeps, extremum location, conjecture
  evidence, two-source comparisons.
"""

from .closed_form import (
    ClosedFormId,
    ConjectureBounds,
    RateParams,
    StabilityError,
    aaoi,
    conjecture_bounds,
    ratio,
    ratio_limit,
)
from .shs import (
    AgeSystemSolution,
    NonnegativityError,
    ResetMap,
    ShsModel,
    SolverError,
    StructureError,
    Transition,
    dump_table,
    solve_age_system,
    stationary_distribution,
)
from .builders import (
    Discipline,
    TruncationSpec,
    TruncationSweep,
    aaoi_vs_truncation,
    build_finite_model,
    build_truncated_mm1,
    build_two_source_preemptive,
    mm1_ps_truncated_aaoi,
)
from .simulate import (
    AgeTrace,
    FullPolicy,
    ModelId,
    SimConfig,
    SimDiscipline,
    SimEstimate,
    SimulationError,
    sawtooth_trace,
    simulate,
)
from .analysis import (
    BoundReport,
    ConjectureSample,
    ExtremumResult,
    PropositionId,
    SimCheck,
    SweepRow,
    conjecture_evidence,
    default_log_grid,
    find_ratio_extremum,
    ratio_limits,
    two_source_sweep,
    verify_bound,
)

__version__ = "0.1.0"
