"""Comparison models: a statically provisioned single mixer (MCU), the
same topology with on-demand allocation (CMCU), and a fixed-node model
that always spreads users evenly over a constant number of mixing nodes.

A single mixer has no intra-zone exchange and nothing to merge locally,
so MCU and CMCU share the response-time formula and differ only in what
they allocate.  The fixed-node model runs the full fork/join pipeline but
cannot adapt its node count, so its response time keeps growing with the
user count.
"""

from collections.abc import Callable
from dataclasses import dataclass
from enum import Enum

from .errors import CapacityExceeded, DomainError
from .model import MixingParams, FLOAT_TOL, r_mix, t_mix


class ModelKind(Enum):
    VMRA = "VMRA"
    MCU = "MCU"
    CMCU = "CMCU"
    FIXED_NODES = "FixedNodes"


@dataclass(frozen=True)
class BaselineResult:
    """Closed-form behaviour of one comparison model."""

    model_tag: ModelKind
    max_users_qos: int
    allocated_mb: Callable[[int], float]
    response_time: Callable[[int], float]


@dataclass(frozen=True)
class FixedNodesEval:
    allocated_mb: float
    response_ms: float
    violation_ratio: float
    max_users_qos: int | None = None


def violation_ratio(response_ms: float, p: MixingParams) -> float:
    """Fraction of the response time spent beyond the QoS threshold."""
    if response_ms <= 0:
        return 0.0
    return max(0.0, (response_ms - p.t_qos) / response_ms)


def _single_mixer_response(m: int, p: MixingParams) -> float:
    return t_mix(m, p) + p.ext_exchange_ms() + t_mix(p.num_zones, p)


def mcu_eval(m: int, p: MixingParams) -> tuple[float, float]:
    """Statically provisioned single mixer: one full server is always
    allocated, the mixer serves everyone sequentially."""
    if m < 1:
        raise DomainError("m must be >= 1")
    if r_mix(m, p) > p.r_capacity + FLOAT_TOL:
        raise CapacityExceeded(f"mixing {m} sources needs {r_mix(m, p)} MB, "
                               f"server holds {p.r_capacity} MB")
    return p.r_capacity, _single_mixer_response(m, p)


def cmcu_eval(m: int, p: MixingParams) -> tuple[float, float]:
    """On-demand single mixer: allocates only what the load requires,
    response time identical to the static variant."""
    if m < 1:
        raise DomainError("m must be >= 1")
    allocated = p.r_operating + r_mix(m, p)
    if allocated > p.r_capacity + FLOAT_TOL:
        raise CapacityExceeded(f"on-demand mixer needs {allocated} MB, "
                               f"server holds {p.r_capacity} MB")
    return allocated, _single_mixer_response(m, p)


def fixed_nodes_eval(m: int, n_nodes: int, p: MixingParams,
                     enforce_qos: bool = False) -> FixedNodesEval:
    """Evaluate the fixed-node model at ``m`` users.

    Users split evenly over exactly ``n_nodes`` mixers, one per server,
    and the full fork/join pipeline applies.  With ``enforce_qos`` the
    result also carries the largest user count the node set can serve
    within the QoS threshold.
    """
    if m < 1:
        raise DomainError("m must be >= 1")
    if n_nodes < 1:
        raise DomainError("n_nodes must be >= 1")
    v = -(-m // n_nodes)
    per_node = p.r_operating + r_mix(v, p)
    if per_node > p.r_capacity + FLOAT_TOL:
        raise CapacityExceeded(f"node with {v} users needs {per_node} MB, "
                               f"server holds {p.r_capacity} MB")
    response = (t_mix(v, p) + p.t_int + t_mix(n_nodes, p)
                + p.ext_exchange_ms() + t_mix(p.num_zones, p))
    allocated = n_nodes * p.r_operating + r_mix(m, p)
    max_users = fixed_nodes_max_users(n_nodes, p) if enforce_qos else None
    return FixedNodesEval(allocated, response, violation_ratio(response, p),
                          max_users)


def mcu_max_users(p: MixingParams) -> int:
    return _scan_max(lambda m: mcu_eval(m, p)[1], p)


def cmcu_max_users(p: MixingParams) -> int:
    return _scan_max(lambda m: cmcu_eval(m, p)[1], p)


def fixed_nodes_max_users(n_nodes: int, p: MixingParams) -> int:
    return _scan_max(lambda m: fixed_nodes_eval(m, n_nodes, p).response_ms, p)


def _scan_max(response_at: Callable[[int], float], p: MixingParams) -> int:
    """Largest m whose response stays within QoS and capacity; the scan
    stops at the first failure since both pressures grow with m."""
    best = 0
    m = 1
    while True:
        try:
            rt = response_at(m)
        except CapacityExceeded:
            return best
        if rt > p.t_qos + FLOAT_TOL:
            return best
        best = m
        m += 1


def baseline_result(kind: ModelKind, p: MixingParams,
                    n_nodes: int | None = None) -> BaselineResult:
    """Bundle a model's closed forms, including its idle footprint at
    ``m == 0`` (full server for MCU, nothing for CMCU, bare nodes for the
    fixed-node model)."""
    if kind is ModelKind.MCU:
        return BaselineResult(
            kind, mcu_max_users(p),
            allocated_mb=lambda m: p.r_capacity,
            response_time=lambda m: _single_mixer_response(m, p))
    if kind is ModelKind.CMCU:
        return BaselineResult(
            kind, cmcu_max_users(p),
            allocated_mb=lambda m: 0.0 if m == 0 else p.r_operating + r_mix(m, p),
            response_time=lambda m: _single_mixer_response(m, p))
    if kind is ModelKind.FIXED_NODES:
        nodes = n_nodes if n_nodes is not None else p.servers_per_zone
        return BaselineResult(
            kind, fixed_nodes_max_users(nodes, p),
            allocated_mb=lambda m: nodes * p.r_operating + r_mix(m, p),
            response_time=lambda m: fixed_nodes_eval(m, nodes, p).response_ms)
    raise DomainError(f"no closed-form baseline for {kind}")
