"""Closed-form bound values and their structural properties."""

import dataclasses
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import make_aimd_flow, make_flow
from qosched.bounds import UndefinedBound, compute_bounds, drift_constants


def paper_params(zeta=1.0, v=1000.0):
    return make_flow(0, alpha=0.2, lam=10.0, nu=300, v=v, zeta=zeta)


class TestComputeBounds:
    def test_reference_delay_values(self):
        bs = compute_bounds(paper_params(), n=2, s_max=50, s_min=50, a_max=300,
                            max_a_max_over_flows=300)
        assert bs.delay_bound_pi_hat == pytest.approx(231.0)
        assert bs.delay_bound_pi_static == pytest.approx(131.0)
        assert bs.q_bound == pytest.approx(1300.0)

    def test_z_and_qz(self):
        bs = compute_bounds(paper_params(zeta=2.0), n=1, s_max=50, s_min=50,
                            a_max=300, max_a_max_over_flows=300)
        assert bs.z_bound == pytest.approx(1000.0 / 2 + 2 * 0.2 * 50)
        assert bs.qz_bound == pytest.approx(1000.0 + 4 * 0.2 * 50 + 300)

    def test_y_bound(self):
        bs = compute_bounds(paper_params(), n=2, s_max=50, s_min=50, a_max=300,
                            max_a_max_over_flows=300)
        assert bs.y_bound == pytest.approx(2 * (1000 + 50 + 300) + 3 * 50)

    def test_undefined_without_s_min(self):
        bs = compute_bounds(paper_params(), n=2, s_max=50, s_min=0, a_max=300,
                            max_a_max_over_flows=300)
        assert bs.delay_bound_pi_hat is None
        with pytest.raises(UndefinedBound):
            compute_bounds(paper_params(), n=2, s_max=50, s_min=0, a_max=300,
                           max_a_max_over_flows=300, strict=True)

    def test_undefined_without_a_max(self):
        bs = compute_bounds(paper_params(), n=1, s_max=50, s_min=50, a_max=None,
                            max_a_max_over_flows=None)
        assert bs.q_bound is None and bs.qz_bound is None and bs.y_bound is None
        assert bs.z_bound is not None  # needs no arrival bound

    def test_delay_gap_identity(self):
        """Gap between the two delay bounds: s_max/s_min - 1 + v*w/(zeta^2*alpha*s_min)."""
        for zeta in (0.5, 1.0, 3.0, 31.0):
            for v in (0.0, 100.0, 1000.0):
                for s_max, s_min in ((50, 50), (60, 20)):
                    cfg = paper_params(zeta=zeta, v=v)
                    bs = compute_bounds(cfg, n=2, s_max=s_max, s_min=s_min,
                                        a_max=300, max_a_max_over_flows=300)
                    gap = bs.delay_bound_pi_hat - bs.delay_bound_pi_static
                    want = s_max / s_min - 1 + v * 1.0 / (zeta**2 * 0.2 * s_min)
                    assert gap == pytest.approx(want, rel=1e-12)

    @given(
        v1=st.floats(0, 5000), v2=st.floats(0, 5000),
        a1=st.integers(0, 500), a2=st.integers(0, 500),
    )
    def test_monotone_in_v_and_a_max(self, v1, v2, a1, a2):
        if v1 > v2:
            v1, v2 = v2, v1
        if a1 > a2:
            a1, a2 = a2, a1
        lo = compute_bounds(paper_params(v=v1), n=2, s_max=50, s_min=50,
                            a_max=a1, max_a_max_over_flows=a1)
        hi = compute_bounds(paper_params(v=v2), n=2, s_max=50, s_min=50,
                            a_max=a2, max_a_max_over_flows=a2)
        for name in ("q_bound", "z_bound", "qz_bound", "y_bound",
                     "delay_bound_pi_hat", "delay_bound_pi_static"):
            assert getattr(lo, name) <= getattr(hi, name) + 1e-9

    def test_delay_bound_nonincreasing_in_zeta(self):
        values = [
            compute_bounds(paper_params(zeta=z), n=2, s_max=50, s_min=50,
                           a_max=300, max_a_max_over_flows=300).delay_bound_pi_hat
            for z in (1.0, 2.0, 5.0, 31.0)
        ]
        assert all(a >= b for a, b in zip(values, values[1:]))


class TestDriftConstants:
    def test_reference_values(self):
        flow = make_flow(0, eta=1, lam=0.5, nu=1, drop_cap=1)  # a_max = 1
        c1, c2 = drift_constants([flow], s_max=2)
        assert c1 == pytest.approx(12.0)  # 1*4 + (1+2+1)^2/2
        assert c2 == pytest.approx(9.0)  # (2+1)^2

    def test_all_zero_caps(self):
        flow = dataclasses.replace(make_aimd_flow(0), a_max=0, drop_cap=0)
        assert drift_constants([flow], s_max=0) == (0.0, 0.0)

    def test_requires_caps(self):
        with pytest.raises(UndefinedBound):
            drift_constants([make_flow(0)], s_max=50)  # no drop_cap
        with pytest.raises(UndefinedBound):
            drift_constants([make_aimd_flow(0, drop_cap=5)], s_max=50)  # no a_max

    def test_additive_over_flows(self):
        f1 = make_flow(0, eta=2, lam=1.0, nu=3, drop_cap=6)
        f2 = make_flow(1, eta=1, lam=1.0, nu=4, drop_cap=4)
        c1_both, c2_both = drift_constants([f1, f2], s_max=5)
        c1_a, c2_a = drift_constants([f1], s_max=5)
        c1_b, c2_b = drift_constants([f2], s_max=5)
        assert c1_both == pytest.approx(c1_a + c1_b)  # n*s_max^2 term is per flow
        assert c2_both == pytest.approx(c2_a + c2_b)
