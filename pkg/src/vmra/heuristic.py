"""Incremental per-arrival placement of users onto virtual mixers.

Arrivals are admitted one at a time.  Each admission tries, in order:

* phase 2 - bootstrap the first mixer when the data center is empty,
* phase 1 - top up a mixer that serves fewer users than the zone maximum,
* phase 3 - raise the zone maximum on an existing mixer,
* phase 4 - instantiate a mixer on the current server and rebalance,
* phase 5 - instantiate a mixer on the next unused server and rebalance.

New mixers are created on the *current* server (the highest-index server
already in use) while it has room, then on the next fresh one; earlier
servers are never revisited for placement, although rebalancing keeps
shifting user counts across all of them.  Once an arrival is rejected the
state saturates and all later arrivals are rejected too.
"""

import dataclasses
import math
from dataclasses import dataclass
from enum import Enum

from .errors import SaturatedError, DomainError
from .model import (
    FLOAT_TOL,
    MixingParams,
    ZoneAllocation,
    marginal_r_mix,
    server_load,
    validate_allocation,
    zone_response_time,
)


def _marginal(k: int, p: MixingParams) -> float | None:
    """Cost of one more source on a k-source mixer; ``None`` past the end
    of an explicit resource table (the mixer cannot take another user)."""
    try:
        return marginal_r_mix(k, p)
    except DomainError:
        return None


def _qos_ok(v_max: int, vm_count: int, p: MixingParams) -> bool:
    try:
        return zone_response_time(v_max, vm_count, p) <= p.t_qos + FLOAT_TOL
    except DomainError:
        return False  # past the end of an explicit mixing-time table


class DecisionKind(Enum):
    REUSED_VM = "reused-vm"
    GREW_VM = "grew-vm"
    NEW_VM_SAME_SERVER = "new-vm-same-server"
    NEW_VM_NEW_SERVER = "new-vm-new-server"
    REJECTED = "rejected"


@dataclass(frozen=True)
class AdmitDecision:
    """Outcome of one admission attempt.

    ``vm`` is the mixer that received the user for phase-1/3 decisions and
    the newly created mixer for phase-4/5 decisions.  ``repaired`` is set
    when the even rebalance had to be adjusted to fit server capacity.
    """

    kind: DecisionKind
    phase: int
    vm: int | None = None
    repaired: bool = False


@dataclass(frozen=True)
class HeuristicState:
    """Running allocator state for one zone."""

    alloc: ZoneAllocation
    used_servers: int
    max_served: int
    saturated: bool

    @classmethod
    def empty(cls) -> "HeuristicState":
        return cls(ZoneAllocation.empty(), 0, 0, False)


@dataclass(frozen=True)
class HeuristicRun:
    """Result of feeding a whole arrival sequence through the allocator."""

    state: HeuristicState
    phase_counts: dict[int, int]

    @property
    def alpha(self) -> int:
        return self.state.alloc.vm_count

    @property
    def vm_users(self) -> tuple[int, ...]:
        return self.state.alloc.vm_users

    @property
    def max_served(self) -> int:
        return self.state.max_served


def rebalance(m: int, alpha: int) -> list[int]:
    """Split ``m`` users over ``alpha`` mixers as evenly as possible.

    Implements the descending integer-division loop: mixer ``alpha`` takes
    ``m // alpha`` users, each earlier mixer its share of the remainder, so
    mixer 1 ends up with the largest count.  The result is a balanced
    partition: every entry is ``floor(m/alpha)`` or ``ceil(m/alpha)``.
    """
    if alpha < 1:
        raise DomainError("need at least one mixer")
    if m < alpha:
        raise DomainError(f"cannot spread {m} users over {alpha} mixers "
                          "without leaving a mixer empty")
    counts = [0] * alpha
    remain = m
    for j in range(alpha, 0, -1):
        share = remain // j
        counts[j - 1] = share
        remain -= share
    assert remain == 0 and sum(counts) == m
    assert max(counts) == math.ceil(m / alpha) and min(counts) == m // alpha
    return counts


def admit_one(state: HeuristicState, p: MixingParams) -> tuple[AdmitDecision, HeuristicState]:
    """Admit the next arrival, returning the decision and the new state."""
    if state.saturated:
        raise SaturatedError("allocator already rejected an arrival")
    alloc = state.alloc
    m = alloc.num_users + 1

    # phase 2: first user bootstraps the data center
    if alloc.vm_count == 0:
        new_alloc = ZoneAllocation(1, (0,), (1,))
        decision = AdmitDecision(DecisionKind.NEW_VM_NEW_SERVER, phase=2, vm=0)
        return decision, HeuristicState(new_alloc, 1, 1, False)

    v = alloc.v_max
    spare = [p.r_capacity - server_load(alloc, i, p)
             for i in range(p.servers_per_zone)]

    # phase 1: top up the least loaded mixer below the zone maximum,
    # provided its server can absorb one more user
    best = None
    for j, u in enumerate(alloc.vm_users):
        step = _marginal(u, p)
        if u < v and step is not None \
                and spare[alloc.vm_server[j]] >= step - FLOAT_TOL:
            if best is None or u < alloc.vm_users[best]:
                best = j
    if best is not None:
        return (AdmitDecision(DecisionKind.REUSED_VM, phase=1, vm=best),
                _grow(state, best, m))

    # phase 3: raise the zone maximum on the lowest-index mixer whose
    # server still has room, if the response time allows it
    alpha = alloc.vm_count
    if _qos_ok(v + 1, alpha, p):
        step = _marginal(v, p)
        if step is not None:
            for j, u in enumerate(alloc.vm_users):
                if u == v and spare[alloc.vm_server[j]] >= step - FLOAT_TOL:
                    return (AdmitDecision(DecisionKind.GREW_VM, phase=3, vm=j),
                            _grow(state, j, m))

    # phases 4/5: instantiate a mixer and rebalance everyone
    current = max(alloc.vm_server)
    fresh = state.used_servers  # next never-used server index, if any
    new_vm_cost = p.r_operating + marginal_r_mix(0, p)
    if spare[current] >= new_vm_cost - FLOAT_TOL:
        placed = _try_new_vm(alloc, current, p)
        if placed is None:
            return AdmitDecision(DecisionKind.REJECTED, phase=4), _saturate(state)
        new_alloc, repaired = placed
        decision = AdmitDecision(DecisionKind.NEW_VM_SAME_SERVER, phase=4,
                                 vm=new_alloc.vm_count - 1, repaired=repaired)
        return decision, HeuristicState(new_alloc, state.used_servers, m, False)
    if fresh < p.servers_per_zone and p.r_capacity >= new_vm_cost - FLOAT_TOL:
        placed = _try_new_vm(alloc, fresh, p)
        if placed is None:
            return AdmitDecision(DecisionKind.REJECTED, phase=5), _saturate(state)
        new_alloc, repaired = placed
        decision = AdmitDecision(DecisionKind.NEW_VM_NEW_SERVER, phase=5,
                                 vm=new_alloc.vm_count - 1, repaired=repaired)
        return decision, HeuristicState(new_alloc, state.used_servers + 1, m, False)

    return AdmitDecision(DecisionKind.REJECTED, phase=5), _saturate(state)


def run_to_capacity(p: MixingParams, m_target: int) -> HeuristicRun:
    """Feed arrivals ``1..m_target`` through :func:`admit_one`.

    Stops early once an arrival is rejected.  The returned run carries the
    final state and how many admissions each phase handled.
    """
    if m_target < 0:
        raise DomainError("m_target must be >= 0")
    state = HeuristicState.empty()
    phase_counts: dict[int, int] = {1: 0, 2: 0, 3: 0, 4: 0, 5: 0}
    for _ in range(m_target):
        decision, state = admit_one(state, p)
        if decision.kind is DecisionKind.REJECTED:
            break
        phase_counts[decision.phase] += 1
    return HeuristicRun(state, phase_counts)


def _grow(state: HeuristicState, vm: int, m: int) -> HeuristicState:
    users = list(state.alloc.vm_users)
    users[vm] += 1
    alloc = ZoneAllocation(m, state.alloc.vm_server, tuple(users))
    return HeuristicState(alloc, state.used_servers, m, False)


def _saturate(state: HeuristicState) -> HeuristicState:
    return dataclasses.replace(state, saturated=True)


def _try_new_vm(alloc: ZoneAllocation, server: int,
                p: MixingParams) -> tuple[ZoneAllocation, bool] | None:
    """Add a mixer on ``server``, rebalance all users (including the new
    arrival) evenly, and repair per-server capacity if the even split does
    not fit.  Returns ``None`` when no feasible allocation exists."""
    m = alloc.num_users + 1
    alpha = alloc.vm_count + 1
    counts = rebalance(m, alpha)
    candidate = ZoneAllocation(m, alloc.vm_server + (server,), tuple(counts))
    repaired = False
    if _overloaded_servers(candidate, p):
        fixed = _repair_capacity(candidate, p)
        if fixed is None:
            return None
        candidate = fixed
        repaired = True
    if validate_allocation(candidate, p):
        return None
    return candidate, repaired


def _load_or_inf(alloc: ZoneAllocation, server: int, p: MixingParams) -> float:
    """Server load; infinite when the total is beyond an explicit table."""
    try:
        return server_load(alloc, server, p)
    except DomainError:
        return float("inf")


def _overloaded_servers(alloc: ZoneAllocation, p: MixingParams) -> list[int]:
    return [i for i in range(p.servers_per_zone)
            if _load_or_inf(alloc, i, p) > p.r_capacity + FLOAT_TOL]


def _repair_capacity(alloc: ZoneAllocation,
                     p: MixingParams) -> ZoneAllocation | None:
    """Shift users off over-capacity servers one at a time.

    Donors are the most loaded mixers on the over-capacity server (highest
    index on ties, mirroring the rebalance order); recipients are the least
    loaded mixers on the least loaded server with room.  Mixers are never
    emptied and never migrate.  Returns ``None`` when the overload cannot
    be resolved.
    """
    users = list(alloc.vm_users)
    servers = alloc.vm_server

    def load(i: int) -> float:
        cur = ZoneAllocation(alloc.num_users, servers, tuple(users))
        return _load_or_inf(cur, i, p)

    for _ in range(alloc.num_users + 1):
        over = [i for i in range(p.servers_per_zone)
                if load(i) > p.r_capacity + FLOAT_TOL]
        if not over:
            return ZoneAllocation(alloc.num_users, servers, tuple(users))
        src = over[0]
        donor = None
        for j, s in enumerate(servers):
            if s == src and users[j] >= 2:
                if donor is None or users[j] >= users[donor]:
                    donor = j
        if donor is None:
            return None
        recipient = None
        recipient_key = None
        for j, s in enumerate(servers):
            if s in over:
                continue
            step = _marginal(users[j], p)
            if step is None or load(s) + step > p.r_capacity + FLOAT_TOL:
                continue
            key = (load(s), s, users[j], j)
            if recipient is None or key < recipient_key:
                recipient, recipient_key = j, key
        if recipient is None:
            return None
        users[donor] -= 1
        users[recipient] += 1
    return None
