"""Acceptance suite: one test per criterion, one printed line per check.

Full-horizon runs (1e5 slots) are shared across criteria via a lazy cache.
Runtime for the whole module is a couple of minutes.
"""

import filecmp
import time
from pathlib import Path

import numpy as np
import pytest

from qosched.arrivals import AimdSourceSpec, BurstySourceSpec
from qosched.engine import run
from qosched.model import ChannelModel, FlowConfig, ScenarioSpec
from qosched.policies import drift_objective, oracle_min_drift, step_policy
from qosched.presets import run_preset, table1_row

SEED = 20240
T = 10**5
CHANNEL = ChannelModel.constant(50)

_RUNS: dict = {}


def criterion(name: str, ok: bool, detail: str = "") -> None:
    print(f"{'PASS' if ok else 'FAIL'} [{name}] {detail}")
    assert ok, f"{name}: {detail}"


def scenario(row: int, policy: str, v=1000.0, zeta=1.0, eta=1, seed=SEED):
    cap = 300 if policy == "pi_bar" else None
    return ScenarioSpec(
        flows=table1_row(row, v, zeta=zeta, eta=eta, drop_cap=cap),
        channel=CHANNEL,
        policy=policy,
        horizon=T,
        seed=seed,
    )


def feedback_scenario(policy: str, d: int, seed=SEED):
    return ScenarioSpec(
        flows=(
            FlowConfig(id=0, alpha=0.2, source=AimdSourceSpec(), v_param=1000.0,
                       leave_slot=7 * 10**4),
            FlowConfig(id=1, alpha=0.6, source=AimdSourceSpec(), v_param=1000.0,
                       join_slot=3 * 10**4),
        ),
        channel=CHANNEL,
        policy=policy,
        horizon=T,
        feedback_delay=d,
        seed=seed,
    )


def cached(key, spec, record_trace=False):
    if key not in _RUNS:
        _RUNS[key] = run(spec, record_trace=record_trace)
    return _RUNS[key]


def table_runs():
    for row, eta in [(1, 1), (2, 1), (3, 1), (3, 10)]:
        for policy in ("pi_bar", "pi_hat", "pi_static"):
            yield (row, eta, policy), scenario(row, policy, eta=eta)


# --- Bound suite -------------------------------------------------------------


@pytest.mark.parametrize("row,eta", [(1, 1), (2, 1), (3, 1), (3, 10)])
def test_bound_suite_pi_hat(row, eta):
    """Zero violations of the four queue bounds under pi_hat, V=1000, zeta=1."""
    t0 = time.monotonic()
    res = cached((row, eta, "pi_hat"), scenario(row, "pi_hat", eta=eta))
    wall = time.monotonic() - t0
    viols = res.report.violations
    criterion(
        f"bound-suite pi_hat row{row} eta{eta}",
        not viols,
        f"{len(viols)} violations, runtime {res.report.runtime_seconds:.1f}s",
    )
    criterion(
        f"bound-suite runtime row{row} eta{eta}",
        res.report.runtime_seconds < 30.0,
        f"{res.report.runtime_seconds:.1f}s < 30s",
    )


def test_bound_suite_pi_bar_row2():
    res = cached((2, 1, "pi_bar"), scenario(2, "pi_bar"))
    viols = res.report.violations
    criterion("bound-suite pi_bar row2", not viols, f"{len(viols)} violations")
    criterion(
        "bound-suite pi_bar runtime",
        res.report.runtime_seconds < 30.0,
        f"{res.report.runtime_seconds:.1f}s",
    )


# --- Delay-bound suite -------------------------------------------------------


def test_delay_bounds_pi_hat():
    res = cached((2, 1, "pi_hat"), scenario(2, "pi_hat"))
    mw = res.report.epochs[0].per_flow[0]["max_wait"]
    criterion("delay-bound pi_hat alpha=0.2", mw <= 231, f"max wait {mw} <= 231")
    for fid in (0, 1):
        bound = res.report.theoretical_bounds[fid]["delay_bound_pi_hat"]
        observed = res.report.epochs[0].per_flow[fid]["max_wait"]
        criterion(
            f"delay-bound pi_hat flow{fid} formula",
            observed <= bound,
            f"{observed} <= {bound:.1f}",
        )


def test_delay_bounds_pi_static():
    res = cached((2, 1, "pi_static"), scenario(2, "pi_static"))
    mw = res.report.epochs[0].per_flow[0]["max_wait"]
    criterion("delay-bound pi_static alpha=0.2", mw <= 131, f"max wait {mw} <= 131")
    for fid in (0, 1):
        bound = res.report.theoretical_bounds[fid]["delay_bound_pi_static"]
        observed = res.report.epochs[0].per_flow[fid]["max_wait"]
        criterion(
            f"delay-bound pi_static flow{fid} formula",
            observed <= bound,
            f"{observed} <= {bound:.1f}",
        )


# --- Oracle equivalence ------------------------------------------------------


def test_oracle_equivalence_1000_instances():
    from test_policies import random_small_instance

    rng = np.random.default_rng(SEED)
    mismatches = 0
    for _ in range(1000):
        inp, caps = random_small_instance(rng)
        closed = step_policy("pi_bar", inp)
        _, best = oracle_min_drift(inp, caps)
        if drift_objective(inp, closed) != best:
            mismatches += 1
    criterion("oracle equivalence", mismatches == 0, f"{mismatches}/1000 mismatches")


# --- Rate stability and GFBR -------------------------------------------------


def test_rate_stability_all_policies_all_scenarios():
    worst = 0.0
    for key, spec in table_runs():
        res = cached(key, spec)
        for fid, ratio in res.report.y_over_t.items():
            worst = max(worst, ratio)
            assert ratio <= 0.01, f"{key} flow {fid}: Y(T)/T = {ratio}"
    criterion("rate stability", worst <= 0.01, f"worst Y(T)/T = {worst:.5f}")


def test_gfbr_row1():
    for policy in ("pi_hat", "pi_static"):
        res = cached((1, 1, policy), scenario(1, policy))
        for fid, alpha in ((0, 0.2), (1, 0.8)):
            served = res.report.epochs[0].per_flow[fid]["served_avg"]
            target = alpha * 50 - 0.5
            criterion(
                f"GFBR {policy} flow{fid}",
                served >= target,
                f"served {served:.2f} >= {target}",
            )


# --- Table II reproduction ---------------------------------------------------


def table2_mean(v: float, fid: int) -> float:
    means = []
    for seed in range(5):
        key = ("table2", v, seed)
        res = cached(key, scenario(2, "pi_hat", v=v, seed=seed))
        means.append(res.report.epochs[0].per_flow[fid]["q_mean"])
    return float(np.mean(means))


def test_table2_f1_at_v100():
    m = table2_mean(100.0, 0)
    criterion("Table II f1 V=100", abs(m - 78.6) / 78.6 <= 0.20, f"mean {m:.1f} vs 78.6 +/-20%")


def test_table2_f2_at_v100():
    m = table2_mean(100.0, 1)
    criterion("Table II f2 V=100", abs(m - 60.7) / 60.7 <= 0.20, f"mean {m:.1f} vs 60.7 +/-20%")


def test_table2_f1_at_v200():
    m = table2_mean(200.0, 0)
    criterion("Table II f1 V=200", abs(m - 178.6) / 178.6 <= 0.20, f"mean {m:.1f} vs 178.6 +/-20%")


# --- Trend checks ------------------------------------------------------------


def test_trend_zeta_1_to_31():
    lo = cached((1, 1, "pi_hat"), scenario(1, "pi_hat"))
    hi = cached(("zeta31",), scenario(1, "pi_hat", zeta=31.0))
    mw_lo = max(e["max_wait"] for e in lo.report.epochs[0].per_flow.values())
    mw_hi = max(e["max_wait"] for e in hi.report.epochs[0].per_flow.values())
    criterion("zeta trend max wait", mw_hi < mw_lo, f"{mw_hi} < {mw_lo}")
    d_lo = lo.report.epochs[0].wdrop_decision_avg
    d_hi = hi.report.epochs[0].wdrop_decision_avg
    criterion("zeta trend weighted drops", d_hi > d_lo, f"{d_hi:.4f} > {d_lo:.4f}")


def test_trend_policy_gap_shrinks_with_v():
    gaps = {}
    for v in (50.0, 200.0):
        dec = {}
        for policy in ("pi_bar", "pi_hat"):
            res = cached(("fig3", policy, v), scenario(2, policy, v=v))
            dec[policy] = res.report.epochs[0].wdrop_decision_avg
        criterion(
            f"pi_bar decisions exceed pi_hat at V={v:.0f}",
            dec["pi_bar"] > dec["pi_hat"],
            f"{dec['pi_bar']:.2f} > {dec['pi_hat']:.2f}",
        )
        gaps[v] = dec["pi_bar"] - dec["pi_hat"]
    criterion(
        "decision gap shrinks by V=200",
        gaps[200.0] < gaps[50.0],
        f"{gaps[200.0]:.2f} < {gaps[50.0]:.2f}",
    )


def test_trend_isolation_bursty():
    hat = cached((3, 10, "pi_hat"), scenario(3, "pi_hat", eta=10))
    iso = cached((3, 10, "pi_static"), scenario(3, "pi_static", eta=10))
    d_hat = hat.report.epochs[0].wdrop_actual_avg
    d_iso = iso.report.epochs[0].wdrop_actual_avg
    criterion("isolation drops", d_iso >= d_hat, f"{d_iso:.4f} >= {d_hat:.4f}")
    for fid in (0, 1):
        w_hat = hat.report.epochs[0].per_flow[fid]["max_wait"]
        w_iso = iso.report.epochs[0].per_flow[fid]["max_wait"]
        criterion(
            f"isolation max wait flow{fid}", w_iso >= w_hat, f"{w_iso} >= {w_hat}"
        )


# --- Closed-loop checks ------------------------------------------------------


def whole_run_drop_rate(res) -> float:
    return sum(t["dropped"] for t in res.report.totals.values()) / T


def test_closed_loop_d0_service():
    res = cached(("fb", "pi_hat", 0), feedback_scenario("pi_hat", 0), record_trace=True)
    served = res.report.epochs[0].per_flow[0]["served_avg"]
    criterion("closed-loop d=0 service", 45.0 <= served <= 50.0, f"served {served:.2f} in [45, 50]")


def test_closed_loop_d0_drop_rate():
    res = cached(("fb", "pi_hat", 0), feedback_scenario("pi_hat", 0), record_trace=True)
    drops = res.report.epochs[0].per_flow[0]["drop_actual_avg"]
    criterion("closed-loop d=0 drop rate", drops >= 8.0, f"drops {drops:.2f} >= 8")


def test_closed_loop_pi_static_service():
    res = cached(("fb", "pi_static", 0), feedback_scenario("pi_static", 0))
    served = res.report.epochs[0].per_flow[0]["served_avg"]
    criterion(
        "closed-loop pi_static service", 8.0 <= served <= 12.0, f"served {served:.2f} in [8, 12]"
    )


def test_closed_loop_periodicity_at_d500():
    res = cached(("fb", "pi_hat", 500), feedback_scenario("pi_hat", 500), record_trace=True)
    x = res.trace.a[0][3 * 10**4 : 7 * 10**4].astype(float)
    x -= x.mean()
    acf = np.correlate(x, x, "full")[len(x) - 1 :]
    lags = np.arange(200, 5001)
    peak = int(lags[np.argmax(acf[200:5001])])
    criterion(
        "closed-loop periodicity 2d",
        abs(peak - 1000) <= 50,
        f"autocorrelation peak at lag {peak}, target 1000 +/-5%",
    )


def test_closed_loop_drop_rate_ordering():
    rates = {}
    for d in (0, 50, 500):
        res = cached(("fb", "pi_hat", d), feedback_scenario("pi_hat", d), record_trace=True)
        rates[d] = whole_run_drop_rate(res)
    criterion(
        "closed-loop drop ordering",
        rates[500] > rates[50] > rates[0],
        f"{rates[500]:.2f} > {rates[50]:.2f} > {rates[0]:.2f}",
    )


# --- Determinism -------------------------------------------------------------


def test_determinism_byte_identical_preset(tmp_path):
    a = run_preset("join_leave", tmp_path / "a", seed=SEED)
    b = run_preset("join_leave", tmp_path / "b", seed=SEED)
    files_a = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
    files_b = sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file())
    assert files_a == files_b
    diffs = [
        str(rel)
        for rel in files_a
        if not filecmp.cmp(a / rel, b / rel, shallow=False)
    ]
    criterion("determinism", not diffs, f"{len(files_a)} files compared, diffs: {diffs}")
