"""Experiment driver: presets, seeded noise, error metrics and CSV reports."""

from __future__ import annotations

import configparser
import csv
import io
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .elliptic import elliptic_nd_map, elliptic_solve
from .exceptions import ConfigError, MissingSeed, NoWork, ShapeMismatch, ZeroTruth
from .grid import build_grid
from .operators import build_operators
from .reconstruction import NormalTerms, assemble_K, build_regularized_system, reconstruct
from .wave import Coefficients, HyperbolicNDMap, assemble_hyperbolic_nd_map

logger = logging.getLogger(__name__)

COEFFICIENT_PRESETS = {
    "euclid-q": ("1", "1/(x+2)"),
    "conformal": ("cos((x+1)/2)", "1/(x+2)"),
    "eigen-sweep": ("1", "pi"),
}

PROFILES = {"full": 401, "ci": 101}

_EXPR_NAMESPACE = {
    name: getattr(np, name)
    for name in ("sin", "cos", "tan", "exp", "log", "sqrt", "cosh", "sinh", "tanh", "abs", "arctan")
}
_EXPR_NAMESPACE.update(pi=np.pi, e=np.e)


def parse_coefficient(expr: str) -> Callable[[np.ndarray], np.ndarray]:
    """Turn an expression in ``x`` (numpy functions, ``pi``) into a vectorized callable."""
    try:
        code = compile(expr, "<coefficient>", "eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse coefficient {expr!r}: {exc}") from exc
    for name in code.co_names:
        if name != "x" and name not in _EXPR_NAMESPACE:
            raise ConfigError(f"unknown name {name!r} in coefficient {expr!r}")

    def coef(x):
        return np.broadcast_to(eval(code, {"__builtins__": {}}, {**_EXPR_NAMESPACE, "x": x}), x.shape)

    return coef


@dataclass
class ExperimentConfig:
    preset: str = "run"
    coefficients: str = "euclid-q"
    c_expr: str | None = None
    q_expr: str | None = None
    n_x: int | None = None
    t_final: float = 4.0
    lambdas: list = field(default_factory=lambda: [0.0])
    alphas: list = field(default_factory=lambda: [1e-4])
    noise_levels: list = field(default_factory=lambda: [0.0])
    seed: int | None = None
    boundary_data: tuple = (1.0, 2.0)
    out_dir: str | None = None
    snapshot: bool = False
    profile: str = "full"
    workers: int = 1
    cache_dir: str | None = None
    closure: str = "one_sided"

    def resolved_nx(self) -> int:
        if self.n_x is not None:
            return int(self.n_x)
        if self.profile not in PROFILES:
            raise ConfigError(f"unknown profile {self.profile!r}")
        return PROFILES[self.profile]

    def coefficient_exprs(self) -> tuple[str, str]:
        if self.coefficients not in COEFFICIENT_PRESETS and (self.c_expr is None or self.q_expr is None):
            raise ConfigError(f"unknown coefficient preset {self.coefficients!r}")
        c, q = COEFFICIENT_PRESETS.get(self.coefficients, (None, None))
        return (self.c_expr or c, self.q_expr or q)

    def validate(self) -> None:
        if not self.lambdas:
            raise NoWork("empty lambda list")
        if not self.alphas:
            raise NoWork("empty alpha list")
        if not self.noise_levels:
            raise NoWork("empty noise list")
        if any(not a > 0 for a in self.alphas):
            raise ConfigError("alphas must be positive")
        if any(n < 0 for n in self.noise_levels):
            raise ConfigError("noise levels must be nonnegative")
        if any(n > 0 for n in self.noise_levels) and self.seed is None:
            raise MissingSeed("a seed is required when any noise level is positive")
        if self.resolved_nx() < 3:
            raise ConfigError("n_x must be >= 3")
        if not self.t_final > 0:
            raise ConfigError("t_final must be positive")
        if self.closure not in ("one_sided", "ghost"):
            raise ConfigError(f"unknown closure {self.closure!r}")
        if len(self.boundary_data) != 2:
            raise ConfigError("boundary data needs two values")
        self.coefficient_exprs()


def _sweep(lo: float, hi: float, step: float) -> list[float]:
    # open interval (lo, hi) on the lattice lo + k*step
    n = int(round((hi - lo) / step))
    return [round(lo + k * step, 10) for k in range(1, n)]


def preset_config(name: str) -> ExperimentConfig:
    if name == "exp1":
        return ExperimentConfig(preset="exp1", noise_levels=[0.0, 0.01, 0.02, 0.05], seed=7, snapshot=True)
    if name == "exp2":
        return ExperimentConfig(preset="exp2", alphas=[10.0**-k for k in range(1, 11)], snapshot=True)
    if name == "exp3":
        return ExperimentConfig(
            preset="exp3", coefficients="conformal", noise_levels=[0.0, 0.01, 0.02, 0.05], seed=7, snapshot=True
        )
    if name in ("exp4", "exp4-real", "exp4-imag"):
        real = _sweep(-8.0, 8.0, 0.1)
        lambdas = []
        if name != "exp4-imag":
            lambdas += [complex(v, 0.0) for v in real]
        if name != "exp4-real":
            lambdas += [complex(0.0, v) for v in real]
        return ExperimentConfig(
            preset=name, coefficients="eigen-sweep", lambdas=lambdas, alphas=[1e-6], snapshot=True
        )
    if name == "run":
        return ExperimentConfig()
    raise ConfigError(f"unknown preset {name!r}")


def load_config(path, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Read an INI-style file; keys in ``[experiment]`` override ``base``.

    List-valued keys (``lambda``, ``alpha``, ``noise``) take comma or
    whitespace separated values; complex frequencies are written ``re:im``.
    """
    parser = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    if not parser.has_section("experiment"):
        raise ConfigError(f"{path} has no [experiment] section")
    sec = parser["experiment"]
    cfg = replace(base) if base is not None else ExperimentConfig()
    unknown = set(sec) - set(_CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        for key, value in sec.items():
            attr, conv = _CONFIG_KEYS[key]
            setattr(cfg, attr, conv(value))
    except ValueError as exc:
        raise ConfigError(f"bad value in {path}: {exc}") from exc
    return cfg


def parse_lambda(text: str) -> complex:
    parts = [p for p in text.replace(":", ",").split(",") if p.strip()]
    if not 1 <= len(parts) <= 2:
        raise ValueError(f"cannot parse frequency {text!r}")
    re_ = float(parts[0])
    im = float(parts[1]) if len(parts) == 2 else 0.0
    return complex(re_, im)


def _split(value: str) -> list[str]:
    return [v for v in value.replace(",", " ").split() if v]


def _bool(value: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


_CONFIG_KEYS = {
    "preset": ("preset", str.strip),
    "coefficients": ("coefficients", str.strip),
    "c": ("c_expr", str.strip),
    "q": ("q_expr", str.strip),
    "nx": ("n_x", int),
    "t_final": ("t_final", float),
    "lambda": ("lambdas", lambda v: [parse_lambda(s) for s in _split(v)]),
    "alpha": ("alphas", lambda v: [float(s) for s in _split(v)]),
    "noise": ("noise_levels", lambda v: [float(s) for s in _split(v)]),
    "seed": ("seed", int),
    "boundary_data": ("boundary_data", lambda v: tuple(float(s) for s in _split(v))),
    "out": ("out_dir", str.strip),
    "snapshot": ("snapshot", _bool),
    "profile": ("profile", str.strip),
    "workers": ("workers", int),
    "cache": ("cache_dir", str.strip),
    "closure": ("closure", str.strip),
}


def add_noise(Lambda: np.ndarray, level: float, seed: int | None = None) -> np.ndarray:
    """Add i.i.d. Gaussian noise scaled by ``level`` times the RMS entry of ``Lambda``.

    With this scaling ``level`` is (up to sampling error) the relative
    Frobenius size of the perturbation.
    """
    if level < 0:
        raise ValueError("noise level must be nonnegative")
    if level == 0:
        return Lambda
    if seed is None:
        raise MissingSeed("noise requires a seed")
    rng = np.random.default_rng(seed)
    rms = np.linalg.norm(Lambda) / math.sqrt(Lambda.size)
    return Lambda + (level * rms) * rng.standard_normal(Lambda.shape)


def error_metrics(reconstructed, truth) -> dict:
    reconstructed, truth = np.asarray(reconstructed), np.asarray(truth)
    if reconstructed.shape != truth.shape:
        raise ShapeMismatch(f"shapes differ: {reconstructed.shape} vs {truth.shape}")
    fro = np.linalg.norm(truth)
    if fro == 0:
        raise ZeroTruth("reference has zero norm")
    diff = reconstructed - truth
    out = {"rel_frobenius": float(np.linalg.norm(diff) / fro)}
    if truth.ndim == 2:
        out["rel_2norm"] = float(np.linalg.norm(diff, 2) / np.linalg.norm(truth, 2))
    else:
        out["rel_2norm"] = out["rel_frobenius"]
    return out


REPORT_COLUMNS = (
    ["preset", "lambda_re", "lambda_im", "alpha", "noise", "seed"]
    + [f"L{i}{j}_{p}" for i in range(2) for j in range(2) for p in ("re", "im")]
    + [f"truth_L{i}{j}_{p}" for i in range(2) for j in range(2) for p in ("re", "im")]
    + ["rel_frob_err", "snapshot_rel_err", "wall_ms"]
)


@dataclass
class ReportRow:
    job: int
    lam: complex
    alpha: float
    noise: float
    seed: int | None
    L: np.ndarray
    truth: np.ndarray
    rel_frob_err: float
    snapshot_rel_err: float | None
    wall_ms: float
    control: np.ndarray | None = field(default=None, repr=False)
    snapshot: np.ndarray | None = field(default=None, repr=False)
    u_elliptic: np.ndarray | None = field(default=None, repr=False)

    @property
    def job_id(self) -> str:
        return f"{self.job:04d}"


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    rows: list
    t_nodes: np.ndarray = field(repr=False)
    x_nodes: np.ndarray = field(repr=False)

    def errors(self) -> np.ndarray:
        return np.array([r.rel_frob_err for r in self.rows])

    def snapshot_errors(self) -> np.ndarray:
        return np.array([np.nan if r.snapshot_rel_err is None else r.snapshot_rel_err for r in self.rows])

    def csv_text(self, include_timing: bool = True) -> str:
        buf = io.StringIO()
        write_report(buf, self, include_timing=include_timing)
        return buf.getvalue()


def _num(v) -> str:
    return "" if v is None else repr(float(v))


def _row_values(preset: str, row: ReportRow) -> list[str]:
    vals = [preset, _num(row.lam.real), _num(row.lam.imag), _num(row.alpha), _num(row.noise)]
    vals.append("" if row.seed is None else str(row.seed))
    for mat in (row.L, row.truth):
        for z in np.asarray(mat, dtype=complex).ravel():
            vals += [_num(z.real), _num(z.imag)]
    vals += [_num(row.rel_frob_err), _num(row.snapshot_rel_err), f"{row.wall_ms:.3f}"]
    return vals


def write_report(fh, report: ExperimentReport, include_timing: bool = True) -> None:
    cols = REPORT_COLUMNS if include_timing else REPORT_COLUMNS[:-1]
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(cols)
    for row in report.rows:
        vals = _row_values(report.config.preset, row)
        writer.writerow(vals if include_timing else vals[:-1])


def report_body(path, drop=("wall_ms",)) -> str:
    """CSV text of a report without run-dependent columns, for determinism checks."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    keep = [i for i, name in enumerate(rows[0]) if name not in drop]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for r in rows:
        writer.writerow([r[i] for i in keep])
    return buf.getvalue()


def _write_signal_csvs(out: Path, report: ExperimentReport, row: ReportRow) -> None:
    if row.control is not None:
        with open(out / f"control_{row.job_id}.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "f_left_re", "f_left_im", "f_right_re", "f_right_im"])
            n = len(report.t_nodes)
            for k, t in enumerate(report.t_nodes):
                a, b = complex(row.control[k]), complex(row.control[n + k])
                w.writerow([_num(t), _num(a.real), _num(a.imag), _num(b.real), _num(b.imag)])
    if row.snapshot is not None:
        with open(out / f"snapshot_{row.job_id}.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "u_recon_re", "u_recon_im", "u_elliptic_re", "u_elliptic_im"])
            for x, u, ue in zip(report.x_nodes, row.snapshot, row.u_elliptic):
                u, ue = complex(u), complex(ue)
                w.writerow([_num(x), _num(u.real), _num(u.imag), _num(ue.real), _num(ue.imag)])


def write_outputs(report: ExperimentReport, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "report.csv", "w", newline="", encoding="utf-8") as fh:
        write_report(fh, report)
    for row in report.rows:
        _write_signal_csvs(out, report, row)
    return out


def run_experiment(
    config: ExperimentConfig,
    nd: HyperbolicNDMap | None = None,
    write: bool = True,
) -> ExperimentReport:
    """Run grid -> Lambda (+cache) -> noise -> K -> reconstruct -> metrics.

    Jobs are enumerated noise-major, then lambda, then alpha, and rows keep
    that order whatever the worker count. ``nd`` may be passed to reuse an
    already assembled noise-free map built on the same grid.
    """
    config.validate()
    c_expr, q_expr = config.coefficient_exprs()
    c_fun, q_fun = parse_coefficient(c_expr), parse_coefficient(q_expr)
    grid = build_grid(-1.0, 1.0, config.resolved_nx(), config.t_final, c_fun)
    grid.check_observation_time()
    coeff = Coefficients.on_grid(grid, c_fun, q_fun)
    ops = build_operators(grid)
    if nd is None:
        nd = assemble_hyperbolic_nd_map(grid, coeff, cache_dir=config.cache_dir)
    elif nd.n_t != grid.n_t:
        raise ShapeMismatch("supplied hyperbolic map does not match the configured grid")

    f_bdry = np.asarray(config.boundary_data, dtype=float)
    truth_cache: dict = {}

    def truth(lam):
        if lam not in truth_cache:
            L = elliptic_nd_map(grid, coeff, lam, config.closure).L
            u = elliptic_solve(grid, coeff, lam, f_bdry, config.closure) if config.snapshot else None
            truth_cache[lam] = (L, u)
        return truth_cache[lam]

    # ground truth first: fails fast (exit code 3) at an eigenfrequency
    lambdas = [complex(l) for l in config.lambdas]
    for lam in lambdas:
        truth(lam)

    report = ExperimentReport(config=config, rows=[], t_nodes=grid.t_nodes, x_nodes=grid.x_nodes)
    jobs = [(noise, lam, alpha) for noise in config.noise_levels for lam in lambdas for alpha in config.alphas]
    done: dict[int, ReportRow] = {}

    def run_job(index, nd_noisy, K, terms, lam, alpha, noise):
        t0 = time.perf_counter()
        sys_ = build_regularized_system(K, ops, lam, alpha, terms=terms)
        res = reconstruct(sys_, nd_noisy, ops, with_snapshot=config.snapshot, grid=grid, coeff=coeff)
        L_true, u_true = truth(lam)
        err = error_metrics(res.L_reconstructed, L_true)["rel_frobenius"]
        snap = snap_err = None
        if config.snapshot:
            snap = res.snapshot_for(f_bdry)
            snap_err = error_metrics(snap, u_true)["rel_2norm"]
        wall = (time.perf_counter() - t0) * 1e3
        return ReportRow(
            job=index,
            lam=lam,
            alpha=float(alpha),
            noise=float(noise),
            seed=config.seed if noise > 0 else None,
            L=res.L_reconstructed,
            truth=L_true,
            rel_frob_err=err,
            snapshot_rel_err=snap_err,
            wall_ms=wall,
            control=res.control_for(f_bdry),
            snapshot=snap,
            u_elliptic=u_true,
        )

    try:
        index = 0
        for noise in config.noise_levels:
            nd_noisy = nd.with_lambda(add_noise(nd.Lambda, noise, config.seed))
            K = assemble_K(nd_noisy, ops)
            # nonzero frequencies share the expanded products of the normal matrix
            terms = NormalTerms.from_operator(K, ops) if any(lam != 0 for lam in lambdas) else None
            batch = [(index + k, lam, alpha) for k, (lam, alpha) in enumerate(
                (lam, alpha) for lam in lambdas for alpha in config.alphas)]
            index += len(batch)
            if config.workers > 1:
                with ThreadPoolExecutor(max_workers=config.workers) as pool:
                    futures = [pool.submit(run_job, i, nd_noisy, K, terms, lam, alpha, noise) for i, lam, alpha in batch]
                    for fut in futures:
                        row = fut.result()
                        done[row.job] = row
            else:
                for i, lam, alpha in batch:
                    done[i] = run_job(i, nd_noisy, K, terms, lam, alpha, noise)
            logger.info("noise %.3g: %d jobs finished", noise, len(batch))
    finally:
        report.rows = [done[i] for i in sorted(done)]
        if write and config.out_dir is not None and report.rows:
            write_outputs(report, config.out_dir)
    assert len(report.rows) == len(jobs)
    return report
