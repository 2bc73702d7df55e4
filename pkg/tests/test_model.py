import dataclasses

import pytest
from hypothesis import given, strategies as st

from vmra import (
    ConfigError,
    DomainError,
    MixingParams,
    Rule,
    ZoneAllocation,
    cross_zone_waits,
    marginal_r_mix,
    r_mix,
    response_breakdown,
    server_load,
    t_mix,
    validate_allocation,
    validate_params,
    zone_response_time,
)


class TestMixTime:
    def test_single_source_is_free(self, params):
        assert t_mix(1, params) == 0.0

    def test_two_sources(self, params):
        assert t_mix(2, params) == 7.0

    def test_large_count(self, params):
        assert t_mix(43, params) == 294.0

    def test_zero_sources_rejected(self, params):
        with pytest.raises(DomainError):
            t_mix(0, params)

    def test_table_override(self, params):
        p = dataclasses.replace(params, t_mix_table=(0.0, 5.0, 9.0))
        assert t_mix(2, p) == 5.0
        assert t_mix(3, p) == 9.0
        with pytest.raises(DomainError):
            t_mix(4, p)

    @given(k=st.integers(min_value=1, max_value=10_000))
    def test_non_decreasing(self, k):
        p = MixingParams(1, 3, 10, 15, 7, 20, 400, 10240, 300)
        assert t_mix(k + 1, p) >= t_mix(k, p)


class TestMixResources:
    def test_zero_sources(self, params):
        assert r_mix(0, params) == 0.0

    def test_one_source(self, params):
        assert r_mix(1, params) == 20.0

    def test_many_sources(self, params):
        assert r_mix(21, params) == 420.0

    def test_marginal(self, params):
        assert marginal_r_mix(5, params) == 20.0

    @given(a=st.integers(min_value=0, max_value=5000),
           b=st.integers(min_value=0, max_value=5000))
    def test_additive(self, a, b):
        p = MixingParams(1, 3, 10, 15, 7, 20, 400, 10240, 300)
        assert r_mix(a + b, p) == r_mix(a, p) + r_mix(b, p)


class TestServerLoad:
    def test_empty_server(self, params):
        assert server_load(ZoneAllocation.empty(), 0, params) == 0.0

    def test_one_mixer(self, params):
        alloc = ZoneAllocation(21, (0,), (21,))
        assert server_load(alloc, 0, params) == 820.0

    def test_two_mixers(self, params):
        alloc = ZoneAllocation(43, (0, 0), (22, 21))
        assert server_load(alloc, 0, params) == 1660.0
        assert server_load(alloc, 1, params) == 0.0

    def test_out_of_range_server(self, params):
        with pytest.raises(DomainError):
            server_load(ZoneAllocation.empty(), 3, params)


class TestZoneResponseTime:
    def test_minimal_zone(self, params):
        assert zone_response_time(1, 1, params) == 10.0

    def test_near_threshold(self, params):
        assert zone_response_time(21, 22, params) == 297.0

    def test_two_mixers(self, params):
        assert zone_response_time(22, 2, params) == 164.0

    def test_multi_zone_terms(self, params):
        p6 = params.with_zones(6)
        # intra 10 + inter 15 + zone merge 35 on top of the local terms
        assert zone_response_time(1, 1, p6) == 60.0

    def test_single_zone_suppresses_inter_exchange(self, params):
        assert params.ext_exchange_ms() == 0.0
        assert params.with_zones(2).ext_exchange_ms() == 15.0

    def test_preconditions(self, params):
        with pytest.raises(DomainError):
            zone_response_time(0, 1, params)
        with pytest.raises(DomainError):
            zone_response_time(1, 0, params)

    @given(v=st.integers(min_value=1, max_value=400),
           a=st.integers(min_value=1, max_value=400))
    def test_monotone_in_both_arguments(self, v, a):
        p = MixingParams(1, 3, 10, 15, 7, 20, 400, 10240, 300)
        base = zone_response_time(v, a, p)
        assert zone_response_time(v + 1, a, p) >= base
        assert zone_response_time(v, a + 1, p) >= base


class TestResponseBreakdown:
    def test_terms_sum_to_total(self, params):
        bd = response_breakdown(22, 2, params)
        assert bd.total == 164.0
        assert bd.t_local_mix == 147.0
        assert bd.t_intra == 10.0
        assert bd.t_vm_merge == 7.0
        assert bd.t_inter == 0.0 and bd.t_zone_merge == 0.0

    def test_wait_added(self, params):
        bd = response_breakdown(22, 2, params, wait=30.0)
        assert bd.t_wait == 30.0
        assert bd.total == 194.0


class TestCrossZoneWaits:
    def test_single_zone(self):
        assert cross_zone_waits([100.0]) == [0.0]

    def test_symmetric_zones(self):
        assert cross_zone_waits([100.0, 100.0, 100.0]) == [0.0, 0.0, 0.0]

    def test_mixed_zones(self):
        assert cross_zone_waits([140.0, 200.0, 170.0]) == [60.0, 0.0, 30.0]

    def test_empty_rejected(self):
        with pytest.raises(DomainError):
            cross_zone_waits([])

    @given(st.lists(st.floats(min_value=0, max_value=1e6,
                              allow_nan=False), min_size=1, max_size=12))
    def test_equalizing_property(self, times):
        waits = cross_zone_waits(times)
        assert min(waits) == 0.0
        assert all(w >= 0 for w in waits)
        peak = max(times)
        for t, w in zip(times, waits):
            assert t + w == pytest.approx(peak)


class TestValidateAllocation:
    def test_empty_allocation_passes(self, params):
        assert validate_allocation(ZoneAllocation.empty(), params) == []

    def test_response_time_violation(self, params):
        p = dataclasses.replace(params, servers_per_zone=1)
        alloc = ZoneAllocation(43, (0,), (43,))
        report = validate_allocation(alloc, p)
        assert [v.rule for v in report] == [Rule.RESPONSE_TIME]

    def test_capacity_violation(self, params):
        p = dataclasses.replace(params, servers_per_zone=1)
        alloc = ZoneAllocation(26, (0,) * 26, (1,) * 26)
        report = validate_allocation(alloc, p)
        assert [v.rule for v in report] == [Rule.SERVER_CAPACITY]
        assert report[0].index == 0

    def test_placement_violation(self, params):
        alloc = ZoneAllocation(5, (7,), (5,))
        rules = {v.rule for v in validate_allocation(alloc, params)}
        assert rules == {Rule.VM_PLACEMENT}

    def test_user_total_violation(self, params):
        alloc = ZoneAllocation(9, (0, 0), (5, 5))
        rules = {v.rule for v in validate_allocation(alloc, params)}
        assert rules == {Rule.USER_TOTAL}

    def test_occupancy_violation(self, params):
        alloc = ZoneAllocation(5, (0, 0), (5, 0))
        rules = {v.rule for v in validate_allocation(alloc, params)}
        assert rules == {Rule.VM_OCCUPANCY}

    def test_healthy_allocation(self, params):
        alloc = ZoneAllocation(43, (0, 0), (22, 21))
        assert validate_allocation(alloc, params) == []


class TestValidateParams:
    def test_reference_values_clean(self, params):
        assert validate_params(params) == []

    def test_overhead_must_dominate(self, params):
        p = dataclasses.replace(params, r_operating=20.0)
        with pytest.raises(ConfigError, match="r_operating"):
            validate_params(p)

    def test_soft_overhead_warning(self, params):
        p = dataclasses.replace(params, r_operating=100.0)
        warnings = validate_params(p)
        assert len(warnings) == 1
        assert "r_operating" in warnings[0]

    def test_unreachable_qos_rejected(self, params):
        p = dataclasses.replace(params, t_qos=0.0)
        with pytest.raises(ConfigError, match="t_qos"):
            validate_params(p)

    def test_server_must_fit_a_mixer(self, params):
        p = dataclasses.replace(params, r_capacity=410.0)
        with pytest.raises(ConfigError, match="r_capacity"):
            validate_params(p)

    def test_negative_field_rejected(self, params):
        p = dataclasses.replace(params, t_int=-1.0)
        with pytest.raises(ConfigError, match="t_int"):
            validate_params(p)

    def test_bad_mix_table_rejected(self, params):
        p = dataclasses.replace(params, t_mix_table=(3.0, 5.0))
        with pytest.raises(ConfigError, match="t_mix_table"):
            validate_params(p)
        p = dataclasses.replace(params, t_mix_table=(0.0, 9.0, 5.0))
        with pytest.raises(ConfigError, match="t_mix_table"):
            validate_params(p)


class TestZoneAllocation:
    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            ZoneAllocation(3, (0, 0), (3,))

    def test_derived_views(self):
        alloc = ZoneAllocation(10, (0, 1, 0), (4, 3, 3))
        assert alloc.vm_count == 3
        assert alloc.v_max == 4
        assert alloc.users_on_server(0) == 7
        assert alloc.vms_on_server(1) == 1
