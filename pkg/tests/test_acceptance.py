"""Acceptance checks, one test per criterion, each printing a PASS/FAIL line.

Everything runs at full resolution (N_x = 401, n_t = 1001) unless the
criterion itself names the ci profile. The complete module takes about seven
minutes on a single core, most of it in the frequency sweeps.

Run directly with ``python3 tests/test_acceptance.py`` or through pytest.
"""

import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from ndrecon.elliptic import elliptic_nd_map
from ndrecon.harness import ExperimentConfig, add_noise, preset_config, report_body, run_experiment
from ndrecon.operators import apply_S_star, build_time_operators
from ndrecon.reconstruction import (
    assemble_K,
    extended_weights,
    stability_probe,
    weighted_frobenius,
)

sys.path.insert(0, str(Path(__file__).parent))
from test_reconstruction import blagoveshchenskii_errors, k_asymmetry  # noqa: E402
from test_wave import commutator_ratio, finite_speed_leak, weighted_asymmetry  # noqa: E402

pytestmark = pytest.mark.slow

RESULTS = {}

EUCLID_TRUTH = np.array([[1.3495, 0.6534], [0.6534, 1.6640]])
CONFORMAL_TRUTH = np.array([[1.2005, 0.3985], [0.3985, 1.1645]])
REFERENCE_NOISE_ERRORS = {0.01: 0.0195, 0.02: 0.0431, 0.05: 0.114}
NOISE_SEEDS = (7, 11, 23)


def check(number, title, ok, detail):
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {title} | {detail}"
    RESULTS[number] = line
    assert ok, line


@pytest.fixture(autouse=True)
def echo_result(capsys):
    """Print each criterion line outside pytest's capture, right after its test."""
    before = set(RESULTS)
    yield
    with capsys.disabled():
        for number in sorted(set(RESULTS) - before):
            print("\n" + RESULTS[number], end="", flush=True)


def test_criterion_01_ground_truth(full_setup, full_conformal_setup):
    details, ok = [], True
    for name, setup, expected in (("euclid", full_setup, EUCLID_TRUTH), ("conformal", full_conformal_setup, CONFORMAL_TRUTH)):
        grid, coeff = setup[0], setup[1]
        t0 = time.perf_counter()
        L = elliptic_nd_map(grid, coeff, 0.0).L
        elapsed = time.perf_counter() - t0
        dev = np.abs(L - expected).max()
        ok &= dev <= 1e-3 and elapsed < 1.0
        details.append(f"{name}: max dev {dev:.2e} in {elapsed * 1e3:.1f} ms")
    check(1, "elliptic ND maps match the reference values", ok, "; ".join(details))


def test_criterion_02_noise_free_reconstruction():
    t0 = time.perf_counter()
    full = run_experiment(ExperimentConfig(preset="exp1"), write=False)
    full_time = time.perf_counter() - t0
    t0 = time.perf_counter()
    ci = run_experiment(ExperimentConfig(preset="exp1", profile="ci"), write=False)
    ci_time = time.perf_counter() - t0
    err, ci_err = full.rows[0].rel_frob_err, ci.rows[0].rel_frob_err
    ok = 0.003 <= err <= 0.02 and full_time <= 600 and ci_err <= 0.06 and ci_time <= 30
    L = np.round(full.rows[0].L, 4).tolist()
    check(
        2,
        "exp1 noise-free reconstruction",
        ok,
        f"full err {err:.4%} in {full_time:.1f} s, L={L}; ci err {ci_err:.4%} in {ci_time:.1f} s",
    )


def test_criterion_03_conformal_reconstruction(full_conformal_setup):
    nd = full_conformal_setup[2]
    report = run_experiment(ExperimentConfig(preset="exp3", coefficients="conformal"), nd=nd, write=False)
    err = report.rows[0].rel_frob_err
    check(3, "exp3 noise-free reconstruction", 0.003 <= err <= 0.025, f"err {err:.4%}")


def test_criterion_04_noise_trend(full_setup):
    nd = full_setup[2]
    good, details = 0, []
    for seed in NOISE_SEEDS:
        cfg = preset_config("exp1")
        cfg.seed = seed
        cfg.snapshot = False
        report = run_experiment(cfg, nd=nd, write=False)
        errs = {r.noise: r.rel_frob_err for r in report.rows}
        levels = sorted(REFERENCE_NOISE_ERRORS)
        within = all(0.5 <= errs[lv] / REFERENCE_NOISE_ERRORS[lv] <= 2.0 for lv in levels)
        increasing = all(errs[a] < errs[b] for a, b in zip(levels, levels[1:]))
        good += within and increasing
        details.append(
            f"seed {seed}: " + "/".join(f"{errs[lv]:.2%}" for lv in levels)
            + f" (factor-2 {'ok' if within else 'no'}, increasing {'ok' if increasing else 'no'})"
        )
    check(4, "noise trend on at least 2 of 3 seeds", good >= 2, f"{good}/3 seeds; " + "; ".join(details))


def test_criterion_05_alpha_sweep(full_setup):
    report = run_experiment(preset_config("exp2"), nd=full_setup[2], write=False)
    errs = report.errors()
    asserted = errs[:6]
    monotone = all(b <= a for a, b in zip(asserted, asserted[1:]))
    ratio = asserted[5] / asserted[0]
    check(
        5,
        "regularization sweep",
        monotone and ratio <= 0.1,
        "errors " + ", ".join(f"{e:.3%}" for e in errs) + f"; e(1e-6)/e(1e-1) = {ratio:.3f}",
    )


def test_criterion_06_frequency_sweep():
    eigenvalues = np.array([math.pi, math.pi**2 / 4 + math.pi])
    real = run_experiment(preset_config("exp4-real"), write=False)
    lams = np.array([r.lam.real for r in real.rows])
    errs = real.snapshot_errors()
    baseline = errs[np.flatnonzero(lams == 0.0)[0]]
    spikes = lams[errs > 10 * baseline]
    near = np.abs(spikes[:, None] - eigenvalues[None, :]).min(axis=1) <= 0.3 if spikes.size else np.array([], bool)
    outside = spikes[~near]
    spike_near_each = all(np.any(np.abs(spikes - ev) <= 0.3) for ev in eigenvalues)
    real_ok = outside.size == 0 and spike_near_each

    imag = run_experiment(preset_config("exp4-imag"), write=False)
    imag_max = np.nanmax(imag.snapshot_errors())
    imag_ok = imag_max <= 0.05
    far = np.abs(lams[:, None] - eigenvalues[None, :]).min(axis=1) > 0.3
    reach = np.abs(spikes[:, None] - eigenvalues[None, :]).min(axis=1).max() if spikes.size else 0.0
    check(
        6,
        "frequency sweep",
        real_ok and imag_ok,
        f"real axis: baseline {baseline:.2e}, {spikes.size} points above 10x baseline, "
        f"{outside.size} of them farther than 0.3 from an eigenvalue (farthest {reach:.2f}), "
        f"max err away from eigenvalues {errs[far].max():.2%}, max err overall {errs.max():.3g}; "
        f"imaginary axis max err {imag_max:.2%}",
    )


def test_criterion_07_operator_identities():
    t0 = time.perf_counter()
    T, n = 4.0, 1001
    ops = build_time_operators(n, T)
    eye = np.eye(2 * n)
    r2 = np.array_equal(ops.R @ ops.R, eye)
    pp = np.array_equal(ops.P_T @ ops.P_T.T, eye)
    z = np.array_equal(ops.Z, ops.R @ ops.int1 @ ops.R)
    s_dev = np.abs(ops.S @ np.ones(2 * n) - T**2 / 2).max() / (T**2 / 2)
    j_dev = np.abs(ops.J @ np.ones(4 * n) - apply_S_star(ops, [1.0, 1.0])).max() / T
    elapsed = time.perf_counter() - t0
    ok = r2 and pp and z and s_dev <= 1e-12 and j_dev <= 1e-12 and elapsed < 5
    check(
        7,
        "operator identities",
        ok,
        f"R^2=I {r2}, P P^T=I {pp}, Z=R int1 R {z}, S*1 rel dev {s_dev:.1e}, "
        f"J vs (T-t) rel dev {j_dev:.1e}, {elapsed:.2f} s",
    )


def test_criterion_08_oracles(full_setup):
    grid, _, nd, ops = full_setup
    blag = blagoveshchenskii_errors(full_setup, seed=1).max()
    comm = commutator_ratio(nd, ops, grid)
    lam_asym = weighted_asymmetry(nd, ops)
    k_asym = k_asymmetry(assemble_K(nd, ops).K, ops)
    margin = 0.05 * grid.tau_max
    leak = finite_speed_leak(nd, grid, margin)
    ok = blag <= 0.01 and comm <= 10 and lam_asym <= 0.02 and k_asym <= 0.02 and leak <= 1e-6
    check(
        8,
        "oracle suite",
        ok,
        f"pairing err {blag:.2e}; commutator {comm:.2e} x (dt+dx^2)|f|; "
        f"weighted asymmetry Lambda_T {lam_asym:.2%}, K {k_asym:.2%}; "
        f"leak before tau-{margin:.2f} {leak:.1e}",
    )


def test_criterion_09_stability(full_setup):
    _, _, nd, ops = full_setup
    w, w_ext = ops.quadrature_weights(), extended_weights(ops)
    K = assemble_K(nd, ops).K
    worst = 0.0
    for seed in range(10):
        noisy = nd.with_lambda(add_noise(nd.Lambda, 0.01, seed))
        dK = weighted_frobenius(assemble_K(noisy, ops).K - K, w, w)
        dLambda = weighted_frobenius(noisy.Lambda - nd.Lambda, w_ext, w_ext)
        worst = max(worst, dK / (math.sqrt(2) * ops.horizon_T * dLambda))
    ratios = []
    for level in (0.005, 0.01, 0.02):
        probe = stability_probe(nd, nd.with_lambda(add_noise(nd.Lambda, level, 7)), ops, 0.0, 1e-4)
        ratios.append(probe.ratio)
    spread = max(ratios) / min(ratios)
    check(
        9,
        "stability probe",
        worst <= 1 and spread <= 3,
        f"max dK / (sqrt2 T dLambda) {worst:.4f} over 10 draws; "
        f"dL/dLambda " + ", ".join(f"{r:.3f}" for r in ratios) + f" (spread {spread:.2f}x)",
    )


def test_criterion_10_determinism(tmp_path):
    bodies, signals = [], []
    for name in ("first", "second"):
        cfg = preset_config("exp1")
        cfg.out_dir = str(tmp_path / name)
        run_experiment(cfg)
        out = tmp_path / name
        bodies.append(report_body(out / "report.csv"))
        signals.append({p.name: p.read_bytes() for p in sorted(out.glob("*_*.csv"))})
    same = bodies[0] == bodies[1] and signals[0] == signals[1]
    check(
        10,
        "determinism",
        same,
        f"report bodies identical {bodies[0] == bodies[1]}, "
        f"{len(signals[0])} control/snapshot files identical {signals[0] == signals[1]}",
    )


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
