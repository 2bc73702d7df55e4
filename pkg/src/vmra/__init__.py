"""Resource allocation for cloud video mixing.

Places virtual mixers on servers across zones so that the end-to-end
mixing response time stays within a QoS threshold while allocating as few
resources as possible.  Ships an exact enumerative solver for the integer
model, an incremental per-arrival heuristic, closed-form comparison models
and an experiment harness with CSV/SVG reporting.
"""

from .baselines import (
    BaselineResult,
    FixedNodesEval,
    ModelKind,
    baseline_result,
    cmcu_eval,
    cmcu_max_users,
    fixed_nodes_eval,
    fixed_nodes_max_users,
    mcu_eval,
    mcu_max_users,
)
from .errors import (
    CapacityExceeded,
    ConfigError,
    DomainError,
    SaturatedError,
    VmraError,
)
from .harness import (
    Scenario,
    ScenarioCell,
    ScenarioConfig,
    ScenarioResult,
    emit_results,
    max_users_oracle,
    run_scenario,
)
from .heuristic import (
    AdmitDecision,
    DecisionKind,
    HeuristicRun,
    HeuristicState,
    admit_one,
    rebalance,
    run_to_capacity,
)
from .ilp import (
    IlpInstance,
    IlpSolution,
    LinearConstraint,
    SolveStatus,
    VerifyReport,
    build_instance,
    export_lp,
    solve_exact,
    verify_solution,
)
from .model import (
    MixingParams,
    ResponseBreakdown,
    Rule,
    Violation,
    ZoneAllocation,
    cross_zone_waits,
    local_merge_ms,
    marginal_r_mix,
    r_mix,
    response_breakdown,
    server_load,
    t_mix,
    validate_allocation,
    validate_params,
    zone_response_time,
)

__version__ = "0.1.0"
