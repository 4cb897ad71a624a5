"""Acceptance criteria at full scale.

Each test prints one ``ACCEPTANCE <n> PASS|FAIL`` line with its measured
numbers, then asserts.
"""

import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from beamsnr.beamspace import dft_unitary, power_sort_batch
from beamsnr.estimator import (ThresholdSchedule, build_schedule, detect_boundary, estimate, estimate_batch,
                               naive_detect_boundary)
from beamsnr.harness import (SweepConfig, run_fxcompare, run_orderstat_validation, run_separation_validation,
                             run_sweep)

pytestmark = pytest.mark.acceptance


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE {n} {'PASS' if ok else 'FAIL'}: {detail}")
        return ok
    return emit


def test_1_gap_statistics(report):
    t0 = time.perf_counter()
    rep = run_orderstat_validation(M=64, N0=1.0, trials=100000, seed=1)
    secs = time.perf_counter() - t0
    worst_z = max(abs(r.z) for r in rep.rows if r.m <= 60)
    worst_v = max(abs(r.var_rel_err) for r in rep.rows)
    ok = rep.passed and secs <= 60
    assert report(1, ok, f"max|z|={worst_z:.2f} (<=5) max var err={worst_v:.3f} (<=0.10) "
                         f"max|corr|={rep.max_abs_corr:.4f} (<=0.02) time={secs:.1f}s")


def test_2_oracle_under_separation(report):
    r64 = run_separation_validation(M=64, k=4, trials=100000, seed=2)
    r256 = run_separation_validation(M=256, k=4, trials=100000, seed=3)
    ok = (abs(r64.bias) <= 0.005 and abs(r256.bias) <= 0.005 and abs(r64.var_rel_err) <= 0.1
          and abs(r256.var_rel_err) <= 0.1 and r256.var < r64.var)
    assert report(2, ok, f"bias64={r64.bias:+.5f} bias256={r256.bias:+.5f} var err64={r64.var_rel_err:+.3f} "
                         f"var err256={r256.var_rel_err:+.3f} var256<var64={r256.var < r64.var} "
                         f"discarded={r64.discarded}/{r256.discarded}")


def test_3_running_mean_monotone(report):
    rng = np.random.default_rng(3)
    violations = 0
    count = 0
    for M in (8, 64, 256):
        s = build_schedule(M)
        n = 3334
        P = rng.exponential(1.0, (n, M)) * rng.uniform(0.01, 100, (n, 1))
        k = rng.integers(0, M // 4 + 1, n)
        P[np.arange(M) >= M - k[:, None]] *= 1000.0
        P[: n // 3] = np.floor(P[: n // 3] * 64) / 64  # ties and exact dyadics
        P = np.sort(P, axis=1)
        mu = np.cumsum(P, axis=1) / np.arange(1, M + 1)
        violations += int(np.sum(np.diff(mu, axis=1) < 0))
        out = estimate_batch(P, s)
        violations += int(np.sum(out["n0"] > out["S_M"] / M))
        count += n
    assert report(3, violations == 0, f"{count} vectors, violations={violations}")


def _ulp_close(a, b, n=8):
    return abs(a - b) <= n * np.spacing(max(abs(a), abs(b)))


def test_4_streaming_equals_naive(report):
    rng = np.random.default_rng(4)
    dy_mismatch = 0
    for _ in range(10000):
        M = int(rng.choice([8, 16, 64]))
        s = ThresholdSchedule(M, *(2.0 ** rng.integers(-3, 4, 3)), M // 4, M // 2)
        p = np.sort(rng.integers(0, 2**12, M)).astype(float) / 2.0 ** int(rng.integers(0, 10))
        if rng.random() < 0.5:
            p[-int(rng.integers(1, 4)):] *= 2.0 ** int(rng.integers(2, 8))
            p = np.sort(p)
        a, b = detect_boundary(p, s), naive_detect_boundary(p, s)
        dy_mismatch += (a.m_star, a.hit) != (b.m_star, b.hit)
    gen_bad = gen_boundary = 0
    for _ in range(10000):
        M = int(rng.choice([8, 64]))
        s = ThresholdSchedule(M, *(2.0 ** rng.integers(-3, 4, 3)), M // 4, M // 2)
        p = np.sort(rng.exponential(1.0, M))
        p[-2:] *= rng.uniform(1, 30)
        p = np.sort(p)
        a, b = detect_boundary(p, s), naive_detect_boundary(p, s)
        if (a.m_star, a.hit) != (b.m_star, b.hit):
            m = min(a.m_star, b.m_star)
            S = math.fsum(p[:m])
            lhs, rhs = m * (p[m] - p[m - 1]), s.level(m) * S
            if _ulp_close(lhs, rhs):
                gen_boundary += 1
            else:
                gen_bad += 1
    ok = dy_mismatch == 0 and gen_bad == 0
    assert report(4, ok, f"dyadic mismatches={dy_mismatch}/10000; general-double mismatches outside "
                         f"8 ulp={gen_bad}, at boundary={gen_boundary}")


def test_5_scale_and_permutation(report):
    rng = np.random.default_rng(5)
    s = build_schedule(64)
    bad = 0
    worst = 0.0
    for _ in range(1000):
        x = np.zeros(64, dtype=complex)
        x[rng.integers(0, 64, 3)] = rng.standard_normal(3) * 10
        ybar = x + (rng.standard_normal(64) + 1j * rng.standard_normal(64)) / math.sqrt(2)
        base = estimate(ybar, s, domain="beamspace")
        for c in (2.0 ** -4, 3.0, 2.0 ** 10):
            r = estimate(ybar * math.sqrt(c), s, domain="beamspace")
            rel = [abs(r.N0_hat / (c * base.N0_hat) - 1), abs(r.rho_hat / base.rho_hat - 1)]
            if base.Px_hat > 0:
                rel.append(abs(r.Px_hat / (c * base.Px_hat) - 1))
            worst = max(worst, *rel)
            bad += r.boundary.m_star != base.boundary.m_star or max(rel) > 1e-9
        perm = rng.permutation(64)
        r = estimate(ybar[perm], s, domain="beamspace")
        bad += (r.boundary.m_star, r.N0_hat, r.rho_hat) != (base.boundary.m_star, base.N0_hat, base.rho_hat)
    assert report(5, bad == 0, f"violations={bad}, worst relative deviation={worst:.2e} (<=1e-9)")


def test_6_fixed_point_fidelity(report):
    cfg = SweepConfig(M=64, L=3, snr_grid=[-10.0, 0.0, 10.0, 20.0, 30.0], trials=10000, seed=6,
                      fx_profile="headroom")
    recs = run_fxcompare(cfg)
    parts = [f"{r.snr_db:+.0f}dB sort={r.sort_exact:.3f} n0={r.n0_within:.4f} rho={r.rho_within:.4f} "
             f"sat={r.unexpected_saturations}" for r in recs]
    ok = all(r.passed(0.99) for r in recs)
    assert report(6, ok, "profile=headroom; " + "; ".join(parts))


@pytest.fixture(scope="module")
def quality_records():
    cfg = SweepConfig(M=64, L=3, trials=10000, seed=7)
    return cfg, run_sweep(cfg)


def _by(records, name, lo=-math.inf, hi=math.inf):
    return [r for r in records if r.estimator == name and lo <= r.snr_db <= hi]


def test_7a_median_noise_estimate(report, quality_records):
    _, recs = quality_records
    rows = _by(recs, "proposed_dynamic", 0, 20)
    worst = max(rows, key=lambda r: abs(r.n0_median_db))
    detail = " ".join(f"{r.snr_db:.0f}:{r.n0_median_db:+.2f}" for r in rows)
    ok = all(abs(r.n0_median_db) <= 1.5 for r in rows)
    assert report("7a", ok, f"median N0 dB by SNR {detail}; worst {worst.n0_median_db:+.2f} dB at "
                            f"{worst.snr_db:.0f} dB (limit 1.5)")


def test_7b_dynamic_beats_fixed(report, quality_records):
    _, recs = quality_records
    dyn = np.mean([r.snr_rmse_db for r in _by(recs, "proposed_dynamic")])
    fix = np.mean([r.snr_rmse_db for r in _by(recs, "proposed_fixed")])
    assert report("7b", dyn <= fix, f"mean SNR RMSE dynamic={dyn:.2f} dB fixed={fix:.2f} dB")


def test_7c_dynamic_beats_baselines(report, quality_records):
    _, recs = quality_records
    dyn = np.mean([r.n0_rmse for r in _by(recs, "proposed_dynamic", 0, 20)])
    base = {b: np.mean([r.n0_rmse for r in _by(recs, b, 0, 20)]) for b in ("mad", "mad_refined", "truncated_mean")}
    ok = all(dyn <= v for v in base.values())
    assert report("7c", ok, f"mean N0 RMSE 0..20 dB dynamic={dyn:.3f} " +
                  " ".join(f"{k}={v:.3f}" for k, v in base.items()))


def test_8_throughput(report):
    rng = np.random.default_rng(8)
    s = build_schedule(64)
    ys = (rng.standard_normal((2000, 64)) + 1j * rng.standard_normal((2000, 64)))
    for y in ys[:200]:
        estimate(y, s)
    times = []
    for y in ys:
        t0 = time.perf_counter()
        estimate(y, s)
        times.append(time.perf_counter() - t0)
    med_us = float(np.median(times)) * 1e6
    cfg = SweepConfig(M=64, L=3, snr_grid=[10.0], trials=10000, seed=8)
    t0 = time.perf_counter()
    run_sweep(cfg)
    point = time.perf_counter() - t0
    ok = med_us <= 50 and point <= 5
    assert report(8, ok, f"median single estimate={med_us:.1f} us (<=50); 10^4-trial point with "
                         f"{len(cfg.estimators)} estimators={point:.2f} s (<=5)")


def test_9_cli_determinism(report, tmp_path):
    def sweep(threads, name):
        out = tmp_path / name
        cmd = [sys.executable, "-m", "beamsnr", "--seed", "99", "sweep", "--snr=-10:30:10", "--trials", "2000",
               "--estimators", "all", "--threads", str(threads), "--out", str(out)]
        subprocess.run(cmd, check=True, env=dict(os.environ))
        return out.read_bytes()

    a, b, c = sweep(1, "a.csv"), sweep(1, "b.csv"), sweep(4, "c.csv")
    ok = a == b == c and len(a) > 0
    assert report(9, ok, f"run1==run2: {a == b}; 1 thread==4 threads: {a == c}; {len(a)} bytes")
