import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from udnsim.channel import load_amc_table
from udnsim.scheduling import (
    ScheduleAllocation,
    beta_fractions,
    theta_comp_only,
    theta_scheme_a,
    theta_scheme_b,
    theta_scheme_c,
    user_rates,
)


def test_theta_scheme_a_examples():
    assert theta_scheme_a(2, 1, 3) == 0.5
    assert theta_scheme_a(0, 0, 5) == 0.0
    assert theta_scheme_a(4, 2, 0) == 1.0
    assert theta_scheme_a(0, 0, 0) == 0.0


def test_theta_scheme_b_examples():
    assert theta_scheme_b(1, 1, 1, 1) == 0.5
    assert theta_scheme_b(0, 0, 3, 2) == 0.0
    assert theta_scheme_b(2, 0, 1, 1) == 0.5


def test_theta_scheme_c_and_comp_only():
    assert theta_scheme_c(1, 2, 1, 2) == 0.5
    assert theta_comp_only(3, 1) == 0.75
    assert theta_comp_only(0, 0) == 0.0


@given(
    counts=st.tuples(*[st.integers(0, 50)] * 4),
    k=st.integers(1, 20),
)
def test_theta_scale_invariant_and_bounded(counts, k):
    a, b, c, d = counts
    for f, args in ((theta_scheme_b, counts), (theta_scheme_c, counts), (theta_scheme_a, (a, b, c))):
        t = f(*args)
        assert 0.0 <= t <= 1.0
        assert f(*(k * x for x in args)) == pytest.approx(t, rel=1e-15)


def test_beta_fractions():
    assert beta_fractions(4) == [0.25] * 4
    assert beta_fractions(1) == [1.0]
    assert beta_fractions(3) == [1 / 3] * 3
    assert beta_fractions(0) == []


def test_oma_comp_user_rate(params, table):
    sinr = table.thresholds_linear[4]
    eff = table.efficiency(sinr)
    alloc = ScheduleAllocation(theta={0: 0.5}, comp_entities={0: [[(0, sinr)], [(1, sinr)]]})
    res = user_rates(alloc, 2, params, table, "x")
    assert res.rate[0] == pytest.approx(0.5 * 0.5 * 16.8e6 * eff, rel=1e-12)


def test_unit_efficiency_rate_is_4_2_mbps(params, tmp_path):
    path = tmp_path / "unit.txt"
    path.write_text("-10 1.0\n")
    table = load_amc_table(path)
    alloc = ScheduleAllocation(theta={0: 0.5}, comp_entities={0: [[(0, 1.0)], [(1, 1.0)]]})
    res = user_rates(alloc, 2, params, table, "x")
    assert res.rate.tolist() == pytest.approx([4.2e6, 4.2e6], rel=1e-12)


def test_zero_theta_silences_comp_phase(params, table):
    alloc = ScheduleAllocation(
        theta={0: 0.0},
        comp_entities={0: [[(0, 10.0)]]},
        bs_entities={0: [[(1, 10.0)]]},
        cluster_of_bs=np.array([0]),
    )
    res = user_rates(alloc, 2, params, table, "x")
    assert res.rate[0] == 0.0 and res.rate[1] > 0


def test_noma_pair_members_share_time(params, table):
    s_sinr, w_sinr = 100.0, 2.0
    alloc = ScheduleAllocation(
        theta={0: 0.0}, bs_entities={0: [[(0, s_sinr), (1, w_sinr)]]}, cluster_of_bs=np.array([0])
    )
    res = user_rates(alloc, 2, params, table, "x")
    link = 16.8e6
    assert res.rate[0] == pytest.approx(link * table.efficiency(s_sinr))
    assert res.rate[1] == pytest.approx(link * table.efficiency(w_sinr))


def test_unscheduled_user_is_internal_error(params, table):
    alloc = ScheduleAllocation(bs_entities={0: [[(0, 5.0)]]})
    with pytest.raises(RuntimeError):
        user_rates(alloc, 2, params, table, "x")


def test_covered_flag_follows_efficiency(params, table):
    alloc = ScheduleAllocation(bs_entities={0: [[(0, 0.01)], [(1, 5.0)]]})
    res = user_rates(alloc, 2, params, table, "x")
    assert res.covered.tolist() == [False, True]
    assert res.coverage == 0.5
