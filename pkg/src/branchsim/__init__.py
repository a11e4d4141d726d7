"""Single-branch initial-state ensembles for small qubit universes.

A schedule of record-writing events splits the evolved state into history
branches; running each branch back to t=0 gives an ensemble of initial states
whose weights reproduce the Born rule for the recorded histories.
"""

__version__ = "0.1.0"

from .branching import (
    Branch,
    History,
    born_weight,
    check_annihilation,
    decompose,
    enumerate_histories,
    history_operator_apply,
)
from .ensemble import EnsembleEntry, ReplayReport, build_ensemble, replay, sample, sample_many
from .experiments import (
    BellConfig,
    CorrelationResult,
    bell_correlation,
    bell_exact,
    build_bell_subsystem,
    build_bell_system,
    build_toy,
)
from .schedule import (
    EventSchedule,
    Gate,
    ScheduleError,
    SplittingEvent,
    SystemSpec,
    evolve_window,
    event_unitary_record,
    validate,
)
from .statevec import (
    BitAssignment,
    StateVector,
    apply_local_unitary,
    evolve_diagonal,
    inner,
    project,
    tensor,
)
