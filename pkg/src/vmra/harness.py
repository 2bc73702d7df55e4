"""Experiment harness: composes zones, runs the comparison scenarios over
all models, and certifies user-count claims with a brute-force oracle that
never touches the incremental allocator's code path.

Scenario semantics:

* ``max-users`` / ``total-users``: every model is pushed to its own QoS
  limit per zone count; the per-zone and data-center-wide totals fall out.
* ``meet-by-all``: all models serve the largest user count that *every*
  enabled model can handle within QoS (the single-mixer bound in practice).
* ``meet-by-some``: all models serve the adaptive allocator's maximum; the
  other models keep serving with the QoS constraint relaxed, and the share
  of response time beyond the threshold is reported.

Response times include the cross-zone wait: zones exchange results and the
slowest zone paces everyone, so the composed response equals the largest
zone-local mixing time plus the shared exchange and merge terms.  With
symmetric zones every wait is zero; asymmetric per-zone user counts are
supported through ``zone_users``.
"""

import csv
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .baselines import (
    ModelKind,
    baseline_result,
    cmcu_max_users,
    fixed_nodes_max_users,
    mcu_max_users,
    violation_ratio,
)
from .errors import ConfigError, DomainError
from .heuristic import DecisionKind, HeuristicState, admit_one, rebalance
from .model import (
    FLOAT_TOL,
    MixingParams,
    cross_zone_waits,
    local_merge_ms,
    r_mix,
    t_mix,
    validate_params,
    zone_response_time,
)


class Scenario(Enum):
    MAX_USERS = "max-users"
    TOTAL_USERS = "total-users"
    MEET_BY_ALL = "meet-by-all"
    MEET_BY_SOME = "meet-by-some"


ALL_MODELS = (ModelKind.VMRA, ModelKind.MCU, ModelKind.CMCU, ModelKind.FIXED_NODES)

CSV_HEADER = ("model", "Z", "max_users", "total_users", "avg_alloc_frac",
              "max_alloc_frac", "avg_response_ms", "violation_ratio")

#: scenario -> (output basename, figure basenames)
SCENARIO_FILES = {
    Scenario.MAX_USERS: ("fig4", ("fig4",)),
    Scenario.TOTAL_USERS: ("fig5", ("fig5",)),
    Scenario.MEET_BY_ALL: ("fig6", ("fig6", "fig7")),
    Scenario.MEET_BY_SOME: ("fig8", ("fig8", "fig9")),
}


@dataclass(frozen=True)
class ScenarioConfig:
    params: MixingParams
    scenario: Scenario
    zone_range: tuple[int, ...] = (1, 2, 3, 4, 5, 6)
    models: tuple[ModelKind, ...] = ALL_MODELS
    fixed_nodes: int | None = None
    zone_users: tuple[int, ...] | None = None
    seed: int = 0  # reserved; all current models are deterministic


@dataclass(frozen=True)
class ScenarioCell:
    """Metrics for one (model, zone count) combination."""

    model: ModelKind
    zones: int
    max_users_per_zone: int
    total_users: int
    avg_alloc_fraction: float
    max_alloc_fraction: float
    avg_response_ms: float
    violation_ratio: float
    #: brute-force certificate for the adaptive allocator (None for others)
    oracle_max_users: int | None = None
    #: final mixer count of the adaptive allocator (None for others)
    vm_count: int | None = None


@dataclass(frozen=True)
class ScenarioResult:
    scenario: Scenario
    cells: tuple[ScenarioCell, ...]


def max_users_oracle(p: MixingParams, model: ModelKind,
                     n_nodes: int | None = None) -> int:
    """Largest per-zone user count a model can serve within QoS.

    For the adaptive allocator this is an exhaustive scan over user counts
    and mixer counts with a first-fit packing check, entirely independent
    of the incremental admission logic.  The other models use their
    closed-form scans.
    """
    if model is ModelKind.MCU:
        return mcu_max_users(p)
    if model is ModelKind.CMCU:
        return cmcu_max_users(p)
    if model is ModelKind.FIXED_NODES:
        nodes = n_nodes if n_nodes is not None else p.servers_per_zone
        return fixed_nodes_max_users(nodes, p)
    bound = _vmra_scan_bound(p)
    best = 0
    for m in range(1, bound + 1):
        if _vmra_feasible(m, p):
            best = m
    return best


def _vmra_feasible(m: int, p: MixingParams) -> bool:
    for alpha in range(1, m + 1):
        try:
            if zone_response_time(1, alpha, p) > p.t_qos + FLOAT_TOL:
                break  # merging this many mixers already busts the budget
            v = math.ceil(m / alpha)
            if zone_response_time(v, alpha, p) > p.t_qos + FLOAT_TOL:
                continue
        except DomainError:
            break  # outside an explicit mixing table
        loads = [p.r_operating + r_mix(u, p) for u in rebalance(m, alpha)]
        if _first_fit(loads, p.servers_per_zone, p.r_capacity):
            return True
    return False


def _first_fit(loads: list[float], n_servers: int, cap: float) -> bool:
    residual = [cap] * n_servers
    for load in loads:
        for i in range(n_servers):
            if load <= residual[i] + FLOAT_TOL:
                residual[i] -= load
                break
        else:
            return False
    return True


def _vmra_scan_bound(p: MixingParams) -> int:
    """A sound upper bound on the serviceable user count, from capacity
    and from the response-time budget."""
    bounds: list[int] = []
    if p.r_mix_table is not None:
        bounds.append(p.servers_per_zone * (len(p.r_mix_table) - 1))
    elif p.r_mix_per_source > 0:
        per_server = int((p.r_capacity - p.r_operating) // p.r_mix_per_source)
        bounds.append(p.servers_per_zone * per_server)
    if p.t_mix_table is not None:
        bounds.append(len(p.t_mix_table) ** 2)
    elif p.t_mix_slope > 0:
        slack = (p.t_qos - p.t_int - p.ext_exchange_ms()
                 - p.t_mix_slope * (p.num_zones - 1))
        budget = int(slack / p.t_mix_slope + 2 + FLOAT_TOL)  # max v + alpha
        bounds.append(max((a * (budget - a) for a in range(1, budget)), default=0))
    if not bounds:
        raise DomainError("user count is unbounded for these parameters")
    return max(0, min(bounds))


def run_scenario(cfg: ScenarioConfig, jobs: int = 1) -> ScenarioResult:
    """Evaluate the configured scenario for every (model, zone count) cell.

    Cells are independent and may be evaluated in parallel; the assembled
    result is sorted by model tag then zone count, so it does not depend
    on the job count.
    """
    if not cfg.models:
        raise ConfigError("models: at least one model is required")
    if not cfg.zone_range and cfg.zone_users is None:
        raise ConfigError("zone_range: at least one zone count is required")
    validate_params(cfg.params)

    if cfg.zone_users is not None:
        cells = _asymmetric_cells(cfg)
    else:
        tasks = [(cfg.params, cfg.scenario, cfg.models, z, cfg.fixed_nodes)
                 for z in cfg.zone_range]
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                chunks = list(pool.map(_zone_cells_task, tasks))
        else:
            chunks = [_zone_cells_task(t) for t in tasks]
        cells = [cell for chunk in chunks for cell in chunk]
    cells.sort(key=lambda c: (c.model.value, c.zones))
    return ScenarioResult(cfg.scenario, tuple(cells))


def _zone_cells_task(task) -> list[ScenarioCell]:
    params, scenario, models, z, fixed_nodes = task
    return _zone_cells(params.with_zones(z), scenario, models, z, fixed_nodes)


def _zone_cells(p: MixingParams, scenario: Scenario,
                models: tuple[ModelKind, ...], z: int,
                fixed_nodes: int | None) -> list[ScenarioCell]:
    nodes = fixed_nodes if fixed_nodes is not None else p.servers_per_zone
    maxima = {model: max_users_oracle(p, model, nodes) for model in models}
    vmra_run = None
    if ModelKind.VMRA in models:
        target = maxima[ModelKind.VMRA] + max(8, maxima[ModelKind.VMRA] // 8)
        vmra_run = _VmraTrace.collect(p, target)

    cells = []
    for model in models:
        if scenario in (Scenario.MAX_USERS, Scenario.TOTAL_USERS):
            m_star = (vmra_run.max_served if model is ModelKind.VMRA
                      else maxima[model])
        elif scenario is Scenario.MEET_BY_ALL:
            m_star = min(maxima.values())
        else:  # MEET_BY_SOME pushes everyone to the adaptive maximum
            if ModelKind.VMRA not in models:
                raise ConfigError("meet-by-some needs the VMRA model enabled")
            m_star = maxima[ModelKind.VMRA]
        cells.append(_evaluate_cell(model, p, z, m_star, nodes, vmra_run,
                                    maxima.get(ModelKind.VMRA)))
    return cells


class _VmraTrace:
    """Arrival-by-arrival trajectory of the adaptive allocator."""

    def __init__(self, allocated: list[float], response: list[float],
                 local: list[float], alphas: list[int], max_served: int):
        self.allocated = allocated
        self.response = response
        self.local = local
        self.alphas = alphas
        self.max_served = max_served

    @classmethod
    def collect(cls, p: MixingParams, m_target: int) -> "_VmraTrace":
        state = HeuristicState.empty()
        allocated, response, local, alphas = [], [], [], []
        for _ in range(m_target):
            decision, state = admit_one(state, p)
            if decision.kind is DecisionKind.REJECTED:
                break
            alloc = state.alloc
            allocated.append(sum(p.r_operating + r_mix(u, p)
                                 for u in alloc.vm_users))
            response.append(zone_response_time(alloc.v_max, alloc.vm_count, p))
            local.append(local_merge_ms(alloc.v_max, alloc.vm_count, p))
            alphas.append(alloc.vm_count)
        return cls(allocated, response, local, alphas, state.max_served)


def _evaluate_cell(model: ModelKind, p: MixingParams, z: int, m_star: int,
                   nodes: int, vmra_run: "_VmraTrace | None",
                   vmra_oracle: int | None) -> ScenarioCell:
    if model is ModelKind.VMRA:
        if vmra_run is None or m_star > vmra_run.max_served:
            raise ConfigError(
                f"adaptive allocator cannot serve {m_star} users per zone")
        allocated = vmra_run.allocated[:m_star]
        response = vmra_run.response[:m_star]
        denominator = p.servers_per_zone * p.r_capacity
        vm_count = vmra_run.alphas[m_star - 1] if m_star else 0
    else:
        closed = baseline_result(model, p, nodes)
        allocated = [closed.allocated_mb(m) for m in range(1, m_star + 1)]
        response = [closed.response_time(m) for m in range(1, m_star + 1)]
        denominator = (nodes * p.r_capacity if model is ModelKind.FIXED_NODES
                       else p.r_capacity)
        vm_count = None
    avg_alloc = statistics.fmean(allocated) / denominator if allocated else 0.0
    max_alloc = max(allocated, default=0.0) / denominator
    avg_rt = statistics.fmean(response) if response else 0.0
    viol = violation_ratio(response[-1], p) if response else 0.0
    return ScenarioCell(
        model, z, m_star, z * m_star, avg_alloc, max_alloc, avg_rt, viol,
        oracle_max_users=vmra_oracle if model is ModelKind.VMRA else None,
        vm_count=vm_count)


def _asymmetric_cells(cfg: ScenarioConfig) -> list[ScenarioCell]:
    """Evaluate zones with individual user counts and compose the waits.

    Zones advance in lockstep until each reaches its own count; at every
    step the composed response is the slowest zone's local mixing time
    plus the model's shared exchange/merge terms.
    """
    if cfg.scenario in (Scenario.MAX_USERS, Scenario.TOTAL_USERS):
        raise ConfigError("zone_users only applies to the meet-by scenarios")
    counts = cfg.zone_users
    if not counts or any(c < 1 for c in counts):
        raise ConfigError("zone_users: every zone needs at least one user")
    z = len(counts)
    p = cfg.params.with_zones(z)
    validate_params(p)
    nodes = cfg.fixed_nodes if cfg.fixed_nodes is not None else p.servers_per_zone

    cells = []
    for model in cfg.models:
        shared = (p.ext_exchange_ms() + t_mix(z, p)
                  + (p.t_int if model in (ModelKind.VMRA, ModelKind.FIXED_NODES)
                     else 0.0))
        per_zone = [_zone_profile(model, p, c, nodes) for c in counts]
        steps = max(counts)
        allocated, response = [], []
        for t in range(1, steps + 1):
            locals_now = [prof.local[min(t, c) - 1]
                          for prof, c in zip(per_zone, counts)]
            waits = cross_zone_waits(locals_now)
            assert min(waits) == 0.0
            response.append(max(locals_now) + shared)
            allocated.append(sum(prof.allocated[min(t, c) - 1]
                                 for prof, c in zip(per_zone, counts)))
        denominator = z * (p.servers_per_zone * p.r_capacity
                           if model in (ModelKind.VMRA, ModelKind.FIXED_NODES)
                           else p.r_capacity)
        cells.append(ScenarioCell(
            model, z, max(counts), sum(counts),
            statistics.fmean(allocated) / denominator,
            max(allocated) / denominator,
            statistics.fmean(response),
            violation_ratio(response[-1], p)))
    return cells


@dataclass(frozen=True)
class _ZoneProfile:
    local: list[float]
    allocated: list[float]


def _zone_profile(model: ModelKind, p: MixingParams, count: int,
                  nodes: int) -> _ZoneProfile:
    if model is ModelKind.VMRA:
        trace = _VmraTrace.collect(p, count)
        if trace.max_served < count:
            raise ConfigError(
                f"adaptive allocator saturates at {trace.max_served} users, "
                f"zone asks for {count}")
        return _ZoneProfile(trace.local, trace.allocated)
    closed = baseline_result(model, p, nodes)
    if model is ModelKind.FIXED_NODES:
        local = [t_mix(math.ceil(m / nodes), p) + t_mix(nodes, p)
                 for m in range(1, count + 1)]
    else:
        local = [t_mix(m, p) for m in range(1, count + 1)]
    allocated = [closed.allocated_mb(m) for m in range(1, count + 1)]
    return _ZoneProfile(local, allocated)


def emit_results(result: ScenarioResult, out_dir: str | Path) -> list[Path]:
    """Write the scenario's CSV (the source of truth) and its figure
    analogs next to it.  Re-running on identical input produces a
    byte-identical CSV."""
    from . import plots  # deferred: pulls in matplotlib

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    base, figures = SCENARIO_FILES[result.scenario]
    written = []

    csv_path = out / f"{base}.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for cell in result.cells:
            writer.writerow([
                cell.model.value, cell.zones, cell.max_users_per_zone,
                cell.total_users, f"{cell.avg_alloc_fraction:.6f}",
                f"{cell.max_alloc_fraction:.6f}",
                f"{cell.avg_response_ms:.6f}", f"{cell.violation_ratio:.6f}",
            ])
    written.append(csv_path)

    for name in figures:
        path = out / f"{name}.svg"
        if name == "fig4":
            plots.user_count_figure(result.cells, path, total=False)
        elif name == "fig5":
            plots.user_count_figure(result.cells, path, total=True)
        elif name in ("fig6", "fig8"):
            plots.allocation_figure(result.cells, path)
        else:  # fig7 / fig9
            plots.response_figure(
                result.cells, path,
                with_violation=result.scenario is Scenario.MEET_BY_SOME)
        written.append(path)
    return written
