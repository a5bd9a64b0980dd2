"""Online load balancing on related machines with strategic jobs and machines."""

from ._validation import InvalidInputError, Q, as_fraction
from .base import MECHANISMS, BaseMechanism, make_mechanism
from .baselines import (
    GreedyIdenticalScheduler,
    GreedyTrueScheduler,
    VCGScheduler,
    run_greedy_identical,
    run_greedy_true,
    run_vcg,
)
from .core import (
    Instance,
    Job,
    Machine,
    MechanismOutcome,
    ScheduleState,
    TieBreakOrder,
    apply_assignment,
    fixed_ordering,
    makespan,
)
from .generators import FamilySpec, gen_greedy_counter, gen_hardness, gen_random, generate
from .experiments import ExperimentRow, SuiteConfig, run_cell, summarize, sweep, verify_suite
from .opt import OptResult, opt2_sandwich, opt_approx, opt_enumerate, opt_exact, opt_from_witness
from .payments import Payment, WorkloadCurve, payment, utility, workload_curve
from .pricing import (
    PostedPriceScheduler,
    PprConfig,
    PriceVector,
    active_machines,
    compute_prices,
    round_speed,
    run_ppr,
    selfish_choice,
)
from .verify import (
    VerificationReport,
    check_anonymity,
    check_fairness,
    check_job_counts_increasing,
    check_run,
    check_well_behaved,
    replay_report,
    scan_job_truthfulness,
    scan_machine_monotonicity,
)

__version__ = "0.1.0"
