"""Exact integer model of the per-zone allocation problem.

The model decides which server hosts which mixer (binaries ``x_i_j``), how
many users each mixer serves (integers ``u_j``), and carries products
``c_i_j = u_j * x_i_j`` through the standard big-M linearization so the
per-server capacity constraint stays linear.  The objective minimizes the
mixer count plus the normalized per-mixer maximum, so fewer mixers always
win and ties are broken toward balanced loads.

Small instances are solved exactly by symmetry-reduced enumeration: mixer
identities and user identities are interchangeable, so the search runs
over (mixer count, per-mixer maximum, non-increasing user partition,
server packing) instead of raw variable space.  Instances can also be
exported as CPLEX-LP text for external solvers.
"""

import math
from dataclasses import dataclass
from enum import Enum

from .errors import ConfigError, DomainError
from .model import (
    FLOAT_TOL,
    MixingParams,
    ZoneAllocation,
    r_mix,
    validate_params,
    zone_response_time,
)


@dataclass(frozen=True)
class LinearConstraint:
    """``sum(coef * var) sense rhs`` with deterministic term order."""

    name: str
    coeffs: tuple[tuple[str, float], ...]
    sense: str  # "<=", ">=" or "="
    rhs: float

    def evaluate(self, assignment: dict[str, float]) -> float:
        return sum(coef * assignment.get(var, 0.0) for var, coef in self.coeffs)

    def satisfied(self, assignment: dict[str, float]) -> bool:
        lhs = self.evaluate(assignment)
        if self.sense == "<=":
            return lhs <= self.rhs + FLOAT_TOL
        if self.sense == ">=":
            return lhs >= self.rhs - FLOAT_TOL
        return abs(lhs - self.rhs) <= FLOAT_TOL


@dataclass(frozen=True)
class IlpInstance:
    """A fully materialized instance: variables, bounds and constraints."""

    n_servers: int
    n_users: int
    n_zones: int
    params: MixingParams
    big_m: int
    objective: tuple[tuple[str, float], ...]
    constraints: tuple[LinearConstraint, ...]
    binaries: tuple[str, ...]
    generals: tuple[str, ...]
    bounds: tuple[tuple[str, int, int], ...]  # (var, lower, upper)


class SolveStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    NODE_BUDGET = "node-budget-exhausted"


@dataclass(frozen=True)
class IlpSolution:
    status: SolveStatus
    alloc: ZoneAllocation | None
    objective_value: float | None
    nodes: int
    #: which constraint family blocked an infeasible instance:
    #: "qos" when no mixer count admits the users within the response-time
    #: threshold, "capacity" when the threshold allows them but no packing
    #: onto servers exists.
    binding: str | None = None

    @property
    def optimal(self) -> bool:
        return self.status is SolveStatus.OPTIMAL


def x_name(i: int, j: int) -> str:
    return f"x_{i}_{j}"


def u_name(j: int) -> str:
    return f"u_{j}"


def c_name(i: int, j: int) -> str:
    return f"c_{i}_{j}"


V_NAME = "Vz"


def build_instance(p: MixingParams, m_users: int) -> IlpInstance:
    """Materialize the model for ``m_users`` users in one zone.

    Requires the linear mixing forms; explicit value tables cannot be
    encoded as linear constraints.
    """
    if m_users < 1:
        raise DomainError("m_users must be >= 1")
    if p.t_mix_table is not None or p.r_mix_table is not None:
        raise ConfigError(
            "the integer model needs the linear mixing forms; "
            "value tables are not representable")
    validate_params(p)

    n, m, z = p.servers_per_zone, m_users, p.num_zones
    big_m = m + 1
    slope, per = p.t_mix_slope, p.r_mix_per_source

    objective = tuple([(x_name(i, j), 1.0) for i in range(n) for j in range(m)]
                      + [(V_NAME, 1.0 / m)])

    cons: list[LinearConstraint] = []
    # each mixer sits on at most one server
    for j in range(m):
        cons.append(LinearConstraint(
            f"place_{j}", tuple((x_name(i, j), 1.0) for i in range(n)), "<=", 1.0))
    # every user is connected to exactly one mixer (aggregated over counts)
    cons.append(LinearConstraint(
        "users_total", tuple((u_name(j), 1.0) for j in range(m)), "=", float(m)))
    # users only on mixers that exist, and existing mixers are not empty
    for j in range(m):
        cons.append(LinearConstraint(
            f"active_ub_{j}",
            tuple([(u_name(j), 1.0)] + [(x_name(i, j), -float(big_m)) for i in range(n)]),
            "<=", 0.0))
    for j in range(m):
        cons.append(LinearConstraint(
            f"active_lb_{j}",
            tuple([(u_name(j), 1.0)] + [(x_name(i, j), -1.0) for i in range(n)]),
            ">=", 0.0))
    # c_i_j = u_j when server i hosts mixer j, else 0
    for i in range(n):
        for j in range(m):
            cons.append(LinearConstraint(
                f"link_cap_{i}_{j}",
                ((c_name(i, j), 1.0), (x_name(i, j), -float(m))), "<=", 0.0))
    for i in range(n):
        for j in range(m):
            cons.append(LinearConstraint(
                f"link_users_{i}_{j}",
                ((c_name(i, j), 1.0), (u_name(j), -1.0)), "<=", 0.0))
    for i in range(n):
        for j in range(m):
            cons.append(LinearConstraint(
                f"link_floor_{i}_{j}",
                ((c_name(i, j), 1.0), (u_name(j), -1.0), (x_name(i, j), -float(m))),
                ">=", -float(m)))
    for i in range(n):
        for j in range(m):
            cons.append(LinearConstraint(
                f"link_nonneg_{i}_{j}", ((c_name(i, j), 1.0),), ">=", 0.0))
    # per-server capacity: operating overhead plus mixing resources
    for i in range(n):
        cons.append(LinearConstraint(
            f"capacity_{i}",
            tuple([(x_name(i, j), p.r_operating) for j in range(m)]
                  + [(c_name(i, j), per) for j in range(m)]),
            "<=", p.r_capacity))
    # the per-mixer maximum dominates every mixer's count
    for j in range(m):
        cons.append(LinearConstraint(
            f"vmax_{j}", ((u_name(j), 1.0), (V_NAME, -1.0)), "<=", 0.0))
    # response time within QoS, in linear form:
    #   slope*(Vz-1) + t_int + slope*(sum x - 1) + t_ext + slope*(Z-1) <= t_qos
    qos_rhs = (p.t_qos - p.t_int - p.ext_exchange_ms()
               - slope * (z - 1) + 2.0 * slope)
    cons.append(LinearConstraint(
        "qos",
        tuple([(V_NAME, slope)]
              + [(x_name(i, j), slope) for i in range(n) for j in range(m)]),
        "<=", qos_rhs))

    binaries = tuple(x_name(i, j) for i in range(n) for j in range(m))
    generals = tuple([u_name(j) for j in range(m)]
                     + [c_name(i, j) for i in range(n) for j in range(m)]
                     + [V_NAME])
    bounds = tuple([(u_name(j), 0, m) for j in range(m)]
                   + [(c_name(i, j), 0, m) for i in range(n) for j in range(m)]
                   + [(V_NAME, 1, m)])
    return IlpInstance(n, m, z, p, big_m, objective, tuple(cons),
                       binaries, generals, bounds)


class _Budget:
    """Counts search nodes and aborts once the allowance is spent."""

    def __init__(self, limit: int):
        self.limit = limit
        self.used = 0

    def charge(self):
        self.used += 1
        if self.used > self.limit:
            raise _BudgetExhausted


class _BudgetExhausted(Exception):
    pass


def solve_exact(inst: IlpInstance, node_budget: int = 2_000_000) -> IlpSolution:
    """Solve the instance to proven optimality by enumeration.

    Mixer counts are tried in ascending order; because the normalized
    balance term is strictly below one, the first feasible mixer count is
    optimal, and within it the smallest feasible per-mixer maximum is
    optimal.  For each (count, maximum) pair the non-increasing user
    partitions are enumerated and packed onto servers by backtracking, so
    unbalanced splits are found when balanced ones do not fit.
    """
    p, m, n = inst.params, inst.n_users, inst.n_servers
    budget = _Budget(node_budget)
    qos_allows_some_alpha = False
    v_cap = _single_vm_user_cap(p)
    try:
        for alpha in range(1, m + 1):
            v_lo = math.ceil(m / alpha)
            v_qos = _qos_v_limit(p, alpha, m)
            if v_qos >= v_lo:
                qos_allows_some_alpha = True
            v_hi = min(v_qos, v_cap, m - alpha + 1)
            for v in range(v_lo, v_hi + 1):
                for partition in _partitions_with_max(m, alpha, v, budget):
                    loads = [p.r_operating + r_mix(u, p) for u in partition]
                    packing = _pack(loads, n, p.r_capacity, budget)
                    if packing is not None:
                        alloc = ZoneAllocation(m, tuple(packing), tuple(partition))
                        objective = alpha + v / m
                        return IlpSolution(SolveStatus.OPTIMAL, alloc,
                                           objective, budget.used)
    except _BudgetExhausted:
        return IlpSolution(SolveStatus.NODE_BUDGET, None, None, budget.used)
    binding = "capacity" if qos_allows_some_alpha else "qos"
    return IlpSolution(SolveStatus.INFEASIBLE, None, None, budget.used, binding)


def _single_vm_user_cap(p: MixingParams) -> int:
    """Largest user count one mixer can hold within server capacity."""
    room = p.r_capacity - p.r_operating
    if p.r_mix_per_source == 0:
        return 10 ** 9
    return int((room + FLOAT_TOL) // p.r_mix_per_source)


def _qos_v_limit(p: MixingParams, alpha: int, m: int) -> int:
    """Largest per-mixer maximum meeting the response-time threshold."""
    if p.t_mix_slope == 0:
        return m if zone_response_time(1, alpha, p) <= p.t_qos + FLOAT_TOL else 0
    slack = (p.t_qos - p.t_int - p.ext_exchange_ms()
             - p.t_mix_slope * (p.num_zones - 1))
    v = int(slack / p.t_mix_slope - alpha + 2 + FLOAT_TOL)
    v = min(v, m)
    # settle float edges against the ground-truth response time
    while v >= 1 and zone_response_time(v, alpha, p) > p.t_qos + FLOAT_TOL:
        v -= 1
    while v < m and v >= 1 and \
            zone_response_time(v + 1, alpha, p) <= p.t_qos + FLOAT_TOL:
        v += 1
    return max(v, 0)


def _partitions_with_max(total: int, parts: int, vmax: int, budget: _Budget):
    """Non-increasing partitions of ``total`` into ``parts`` positive parts
    whose largest part equals ``vmax``."""
    if parts < 1 or vmax < 1 or total < parts or vmax > total - (parts - 1):
        return
    for tail in _bounded_partitions(total - vmax, parts - 1, vmax, budget):
        budget.charge()
        yield (vmax,) + tail


def _bounded_partitions(total: int, parts: int, ub: int, budget: _Budget):
    if parts == 0:
        if total == 0:
            yield ()
        return
    if total < parts or total > parts * ub:
        return
    first_hi = min(ub, total - (parts - 1))
    first_lo = math.ceil(total / parts)
    for first in range(first_hi, first_lo - 1, -1):
        budget.charge()
        for tail in _bounded_partitions(total - first, parts - 1, first, budget):
            yield (first,) + tail


def _pack(loads: list[float], n_servers: int, cap: float,
          budget: _Budget) -> list[int] | None:
    """Backtracking bin packing of mixer loads onto identical servers.
    Servers with equal residual load are interchangeable and tried once."""
    server_loads = [0.0] * n_servers
    assign = [-1] * len(loads)

    def place(k: int) -> bool:
        budget.charge()
        if k == len(loads):
            return True
        seen: set[float] = set()
        for i in range(n_servers):
            key = round(server_loads[i], 6)
            if key in seen:
                continue
            seen.add(key)
            if server_loads[i] + loads[k] <= cap + FLOAT_TOL:
                server_loads[i] += loads[k]
                assign[k] = i
                if place(k + 1):
                    return True
                server_loads[i] -= loads[k]
                assign[k] = -1
        return False

    return assign if place(0) else None


def export_lp(inst: IlpInstance) -> str:
    """Render the instance as CPLEX-LP text.

    Output is byte-stable for identical instances: objective terms by
    variable index, constraints in model order, fixed section layout.
    """
    lines = ["Minimize", f" obj: {_expr(inst.objective)}", "Subject To"]
    for con in inst.constraints:
        lines.append(f" {con.name}: {_expr(con.coeffs)} {con.sense} {_num(con.rhs)}")
    lines.append("Bounds")
    for var, lo, hi in inst.bounds:
        lines.append(f" {lo} <= {var} <= {hi}")
    lines.append("Generals")
    lines.append(" " + " ".join(inst.generals))
    lines.append("Binaries")
    lines.append(" " + " ".join(inst.binaries))
    lines.append("End")
    return "\n".join(lines) + "\n"


def _expr(coeffs: tuple[tuple[str, float], ...]) -> str:
    chunks: list[str] = []
    for idx, (var, coef) in enumerate(coeffs):
        sign = "-" if coef < 0 else "+"
        mag = abs(coef)
        body = var if mag == 1 else f"{_num(mag)} {var}"
        if idx == 0:
            chunks.append(body if coef >= 0 else f"- {body}")
        else:
            chunks.append(f"{sign} {body}")
    return " ".join(chunks)


def _num(value: float) -> str:
    if value == int(value):
        return str(int(value))
    return repr(value)


@dataclass(frozen=True)
class VerifyReport:
    feasible: bool
    objective: float | None
    violations: tuple[str, ...]


def verify_solution(inst: IlpInstance, alloc: ZoneAllocation) -> VerifyReport:
    """Evaluate every constraint of the instance on a concrete allocation."""
    m, n = inst.n_users, inst.n_servers
    if alloc.vm_count > m:
        return VerifyReport(False, None,
                            (f"shape: {alloc.vm_count} mixers for {m} users",))
    assignment = assignment_from_allocation(inst, alloc)
    violations = [con.name for con in inst.constraints
                  if not con.satisfied(assignment)]
    for var, lo, hi in inst.bounds:
        val = assignment.get(var, 0.0)
        if not lo - FLOAT_TOL <= val <= hi + FLOAT_TOL:
            violations.append(f"bound: {var}={val} outside [{lo}, {hi}]")
    if violations:
        return VerifyReport(False, None, tuple(violations))
    objective = alloc.vm_count + alloc.v_max / m
    return VerifyReport(True, objective, ())


def assignment_from_allocation(inst: IlpInstance,
                               alloc: ZoneAllocation) -> dict[str, float]:
    """Map an allocation onto the instance variables.  Mixer ``k`` of the
    allocation occupies variable slot ``k``; unused slots stay zero.  An
    out-of-range server leaves the placement column at zero, which the
    activation constraints then flag."""
    assignment: dict[str, float] = {}
    for k, (server, users) in enumerate(zip(alloc.vm_server, alloc.vm_users)):
        assignment[u_name(k)] = float(users)
        if 0 <= server < inst.n_servers:
            assignment[x_name(server, k)] = 1.0
            assignment[c_name(server, k)] = float(users)
    assignment[V_NAME] = float(max(alloc.v_max, 1))
    return assignment
