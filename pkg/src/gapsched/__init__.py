"""Quality-aware periodic DAG scheduling into the idle gaps of pre-occupied VMs."""

from .heft import (
    CycleWindow,
    PartialSchedule,
    PlacementFailure,
    ScheduleEntry,
    earliest_start_time,
    enhance_quality,
    place_task,
    schedule_base,
)
from .metrics import RewardReport, ScheduleStats, normalized_reward, schedule_stats
from .oracle import Violation, brute_force_optimal, verify_schedule
from .periodic import HyperSchedule, cycle_windows, hyperperiod, schedule_periodic
from .platform import (
    EventQueue,
    IdleSlot,
    Platform,
    VmDescriptor,
    allocate_interval,
    find_feasible_gap,
    make_platform,
    normalize_event_queue,
    release_interval,
)
from .ranking import priority_order, upward_ranks
from .workload import (
    DagSpec,
    EdgeSpec,
    QualityVersion,
    TaskInstance,
    TaskSpec,
    comm_delay,
    instantiate_cycle,
    make_task,
    validate_dag,
)

__version__ = "0.1.0"
