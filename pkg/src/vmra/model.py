"""Core domain model for QoS-bounded cloud video mixing.

Mixing is organized as a fork/join pipeline.  Each virtual mixer (VM) mixes
its own video sources in parallel with the others, so the local mixing time
is driven by the most loaded mixer.  Mixers then exchange partial results
inside the zone, merge them, exchange the zone result with the other zones
and merge once more.  The total must stay below the QoS threshold.

All times are milliseconds, all resources are megabytes.  Allocations are
plain value objects; nothing here mutates shared state, so every function
is safe to call concurrently.
"""

import dataclasses
from dataclasses import dataclass
from enum import Enum

from .errors import ConfigError, DomainError

#: Absolute slack used when comparing derived float quantities against
#: configured thresholds (capacity, QoS).
FLOAT_TOL = 1e-9


@dataclass(frozen=True)
class MixingParams:
    """Tunables of the mixing pipeline and of the hosting data center.

    ``t_ext`` stores the configured inter-zone exchange time.  A deployment
    with a single zone has no inter-zone traffic, so the effective value
    (:meth:`ext_exchange_ms`) is forced to zero whenever ``num_zones == 1``;
    the stored value is kept so that the same parameter set can be re-used
    across zone counts.

    The mixing-time and mixing-resource functions default to linear forms:
    ``t_mix(k) = t_mix_slope * (k - 1)`` (mixing a single source is free)
    and ``r_mix(k) = r_mix_per_source * k``.  Explicit value tables may be
    supplied instead; ``t_mix_table[i]`` is the time for ``k = i + 1``
    sources and ``r_mix_table[i]`` the resources for ``k = i`` sources.
    """

    num_zones: int
    servers_per_zone: int
    t_int: float
    t_ext: float
    t_mix_slope: float
    r_mix_per_source: float
    r_operating: float
    r_capacity: float
    t_qos: float
    t_mix_table: tuple[float, ...] | None = None
    r_mix_table: tuple[float, ...] | None = None

    def ext_exchange_ms(self) -> float:
        """Effective inter-zone exchange time (zero for a single zone)."""
        return 0.0 if self.num_zones == 1 else self.t_ext

    def with_zones(self, num_zones: int) -> "MixingParams":
        """Same parameter set evaluated at a different zone count."""
        return dataclasses.replace(self, num_zones=num_zones)


@dataclass(frozen=True)
class ZoneAllocation:
    """Placement state of one zone: which server hosts each mixer and how
    many users each mixer serves.

    Users are interchangeable, so only per-mixer counts are stored; mixer
    ``j`` sits on server ``vm_server[j]`` and serves ``vm_users[j]`` users.
    The record itself is permissive: consistency with the model constraints
    is checked by :func:`validate_allocation`, which reports violations as
    data rather than raising.
    """

    num_users: int
    vm_server: tuple[int, ...]
    vm_users: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "vm_server", tuple(int(s) for s in self.vm_server))
        object.__setattr__(self, "vm_users", tuple(int(u) for u in self.vm_users))
        if len(self.vm_server) != len(self.vm_users):
            raise ValueError("vm_server and vm_users must have the same length")

    @property
    def vm_count(self) -> int:
        return len(self.vm_users)

    @property
    def v_max(self) -> int:
        """Largest per-mixer user count (0 when no mixer exists)."""
        return max(self.vm_users, default=0)

    def users_on_server(self, server: int) -> int:
        return sum(u for s, u in zip(self.vm_server, self.vm_users) if s == server)

    def vms_on_server(self, server: int) -> int:
        return sum(1 for s in self.vm_server if s == server)

    @classmethod
    def empty(cls) -> "ZoneAllocation":
        return cls(0, (), ())


class Rule(Enum):
    """Constraint families checked on a concrete allocation."""

    VM_PLACEMENT = "vm-placement"        # every mixer sits on one valid server
    USER_TOTAL = "user-total"            # per-mixer counts sum to the zone total
    VM_OCCUPANCY = "vm-occupancy"        # a mixer exists iff it serves >= 1 user
    SERVER_CAPACITY = "server-capacity"  # per-server resource cap
    RESPONSE_TIME = "response-time"      # end-to-end mixing time within QoS


@dataclass(frozen=True)
class Violation:
    """One violated constraint, naming its family and the offending index."""

    rule: Rule
    index: int | None
    message: str


@dataclass(frozen=True)
class ResponseBreakdown:
    """The additive latency terms of one zone's mixing response time."""

    t_local_mix: float   # mixing at the most loaded mixer
    t_intra: float       # intra-zone exchange
    t_vm_merge: float    # merging the per-mixer results
    t_wait: float        # waiting for slower zones
    t_inter: float       # inter-zone exchange
    t_zone_merge: float  # merging the per-zone results
    total: float

    def __post_init__(self):
        parts = (self.t_local_mix + self.t_intra + self.t_vm_merge
                 + self.t_wait + self.t_inter + self.t_zone_merge)
        if abs(parts - self.total) > FLOAT_TOL:
            raise ValueError("total must equal the sum of the six terms")
        if self.t_wait < 0:
            raise ValueError("t_wait must be non-negative")


def t_mix(k: int, p: MixingParams) -> float:
    """Time to mix ``k`` video sources on one mixer.

    Mixing a single source is free; each additional source costs
    ``t_mix_slope`` unless an explicit table overrides the linear form.
    """
    if k < 1:
        raise DomainError("mixing zero sources is undefined (k must be >= 1)")
    if p.t_mix_table is not None:
        if k > len(p.t_mix_table):
            raise DomainError(
                f"t_mix table covers k <= {len(p.t_mix_table)}, got k={k}")
        return p.t_mix_table[k - 1]
    return p.t_mix_slope * (k - 1)


def r_mix(k: int, p: MixingParams) -> float:
    """Resources needed to mix ``k`` video sources (``r_mix(0) == 0``)."""
    if k < 0:
        raise DomainError("negative source count")
    if p.r_mix_table is not None:
        if k >= len(p.r_mix_table):
            raise DomainError(
                f"r_mix table covers k <= {len(p.r_mix_table) - 1}, got k={k}")
        return p.r_mix_table[k]
    return p.r_mix_per_source * k


def marginal_r_mix(k: int, p: MixingParams) -> float:
    """Extra resources needed to go from ``k`` to ``k + 1`` mixed sources."""
    return r_mix(k + 1, p) - r_mix(k, p)


def server_load(alloc: ZoneAllocation, server: int, p: MixingParams) -> float:
    """Megabytes consumed on ``server``: per-mixer operating overhead plus
    the mixing resources for all users its mixers serve.  An empty server
    loads zero."""
    if not 0 <= server < p.servers_per_zone:
        raise DomainError(f"server {server} out of range 0..{p.servers_per_zone - 1}")
    vms = alloc.vms_on_server(server)
    users = alloc.users_on_server(server)
    return p.r_operating * vms + r_mix(users, p)


def zone_response_time(v_max: int, vm_count: int, p: MixingParams) -> float:
    """End-to-end mixing response time of one zone.

    The intra-zone exchange is charged even with a single mixer (the mixer
    still publishes its result on the zone bus); inter-zone terms vanish
    for a single zone.
    """
    if v_max < 1:
        raise DomainError("v_max must be >= 1")
    if vm_count < 1:
        raise DomainError("vm_count must be >= 1")
    return (t_mix(v_max, p) + p.t_int + t_mix(vm_count, p)
            + p.ext_exchange_ms() + t_mix(p.num_zones, p))


def response_breakdown(v_max: int, vm_count: int, p: MixingParams,
                       wait: float = 0.0) -> ResponseBreakdown:
    """Itemized response time for one zone, including a cross-zone wait."""
    local = t_mix(v_max, p)
    merge = t_mix(vm_count, p)
    inter = p.ext_exchange_ms()
    zone_merge = t_mix(p.num_zones, p)
    total = local + p.t_int + merge + wait + inter + zone_merge
    return ResponseBreakdown(local, p.t_int, merge, wait, inter, zone_merge, total)


def local_merge_ms(v_max: int, vm_count: int, p: MixingParams) -> float:
    """The zone-local part of the pipeline that differs across zones:
    mixing at the most loaded mixer plus merging the mixer results.
    Exchange times are shared by all zones and excluded on purpose."""
    return t_mix(v_max, p) + t_mix(vm_count, p)


def cross_zone_waits(local_times: list[float]) -> list[float]:
    """Per-zone wait before the final merge can start.

    Every zone waits for the slowest one, so ``wait[z]`` is the gap between
    zone ``z``'s local time and the largest local time.  At least one entry
    is zero and adding the waits back makes all zones finish together.
    """
    if not local_times:
        raise DomainError("at least one zone is required")
    peak = max(local_times)
    return [peak - t for t in local_times]


def validate_allocation(alloc: ZoneAllocation, p: MixingParams) -> list[Violation]:
    """Check a concrete allocation against every placement, capacity and
    QoS constraint.  Returns an empty list iff all constraints hold.

    The per-mixer maximum is derived from the stored counts, so the bound
    tying it to individual mixers can never be violated here.  The response
    time is only evaluated when every mixer is occupied; unoccupied mixers
    are already reported as occupancy violations.
    """
    out: list[Violation] = []
    n = p.servers_per_zone
    for j, s in enumerate(alloc.vm_server):
        if not 0 <= s < n:
            out.append(Violation(
                Rule.VM_PLACEMENT, j,
                f"mixer {j} assigned to server {s}, valid range is 0..{n - 1}"))
    for j, u in enumerate(alloc.vm_users):
        if u < 1:
            out.append(Violation(
                Rule.VM_OCCUPANCY, j, f"mixer {j} exists but serves {u} users"))
    total = sum(alloc.vm_users)
    if total != alloc.num_users:
        out.append(Violation(
            Rule.USER_TOTAL, None,
            f"mixers serve {total} users, zone has {alloc.num_users}"))
    for i in range(n):
        # negative counts (already flagged above) contribute no load
        vms = alloc.vms_on_server(i)
        users = sum(max(u, 0) for s, u in zip(alloc.vm_server, alloc.vm_users)
                    if s == i)
        try:
            load = p.r_operating * vms + r_mix(users, p)
        except DomainError:
            out.append(Violation(
                Rule.SERVER_CAPACITY, i,
                f"server {i} holds {users} users, beyond the mixing table"))
            continue
        if load > p.r_capacity + FLOAT_TOL:
            out.append(Violation(
                Rule.SERVER_CAPACITY, i,
                f"server {i} loaded with {load} MB, capacity is {p.r_capacity} MB"))
    if alloc.vm_count >= 1 and min(alloc.vm_users) >= 1:
        try:
            rt = zone_response_time(alloc.v_max, alloc.vm_count, p)
        except DomainError:
            out.append(Violation(
                Rule.RESPONSE_TIME, None,
                "mixing load is beyond the mixing-time table"))
            rt = None
        if rt is not None and rt > p.t_qos + FLOAT_TOL:
            out.append(Violation(
                Rule.RESPONSE_TIME, None,
                f"response time {rt} ms exceeds threshold {p.t_qos} ms"))
    return out


def validate_params(p: MixingParams) -> list[str]:
    """Validate a parameter set.  Raises :class:`ConfigError` on any hard
    invariant failure and returns a list of non-fatal warnings otherwise.
    """
    if p.num_zones < 1:
        raise ConfigError("num_zones: must be >= 1")
    if p.servers_per_zone < 1:
        raise ConfigError("servers_per_zone: must be >= 1")
    for name in ("t_int", "t_ext", "t_mix_slope", "r_mix_per_source",
                 "r_operating", "r_capacity", "t_qos"):
        if getattr(p, name) < 0:
            raise ConfigError(f"{name}: must be non-negative")
    if p.t_mix_table is not None:
        _check_table("t_mix_table", p.t_mix_table, first_must_be_zero=True)
    if p.r_mix_table is not None:
        _check_table("r_mix_table", p.r_mix_table, first_must_be_zero=True)
        if len(p.r_mix_table) < 2:
            raise ConfigError("r_mix_table: needs at least the one-source cost")

    marginal = _largest_marginal(p)
    if p.r_operating <= marginal:
        raise ConfigError(
            "r_operating: must strictly exceed the per-source mixing "
            f"resources ({p.r_operating} <= {marginal})")
    if p.r_capacity < p.r_operating + marginal_r_mix(0, p):
        raise ConfigError(
            "r_capacity: a server must be able to host one mixer with one user")
    floor = p.t_int + p.ext_exchange_ms() + t_mix(p.num_zones, p)
    if p.t_qos < floor:
        raise ConfigError(
            f"t_qos: below the minimum achievable response time ({floor} ms); "
            "no allocation can ever meet the threshold")

    warnings: list[str] = []
    if marginal > 0 and p.r_operating < 10 * marginal:
        warnings.append(
            "r_operating is less than 10x the per-source mixing resources "
            f"({p.r_operating} vs {marginal}); the model assumes mixer "
            "overhead dominates, results may be distorted")
    return warnings


def _largest_marginal(p: MixingParams) -> float:
    if p.r_mix_table is None:
        return p.r_mix_per_source
    steps = [b - a for a, b in zip(p.r_mix_table, p.r_mix_table[1:])]
    return max(steps, default=0.0)


def _check_table(name: str, table: tuple[float, ...], first_must_be_zero: bool):
    if not table:
        raise ConfigError(f"{name}: table must not be empty")
    if first_must_be_zero and table[0] != 0:
        raise ConfigError(f"{name}: first entry must be 0")
    if any(v < 0 for v in table):
        raise ConfigError(f"{name}: entries must be non-negative")
    if any(b < a for a, b in zip(table, table[1:])):
        raise ConfigError(f"{name}: entries must be non-decreasing")
