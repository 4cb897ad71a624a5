"""Monte-Carlo experiments, validation suites and result serialization.

Every trial of a sweep draws from its own generator seeded with
``[seed, snr_index, trial_index]`` (a :class:`numpy.random.SeedSequence`
entropy list), so results do not depend on the order in which trials run
or on the number of worker threads.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import baselines, estimator
from .beamspace import dft_unitary, power_sort_batch
from .channel import ChannelConfig, add_awgn, is_power_of_two, qpsk_symbol, scale_to_snr, synth_channel
from .errors import DegenerateInputError, InvalidArgumentError, SampleParseError
from .estimator import ThresholdSchedule

ESTIMATORS = ("proposed_dynamic", "proposed_fixed", "oracle", "mad", "mad_refined",
              "truncated_mean", "fx_pipeline")
DEFAULT_ESTIMATORS = ESTIMATORS[:-1]

CSV_COLUMNS = ("snr_db", "estimator", "n0_mean", "n0_median", "n0_rmse", "px_mean", "px_rmse",
               "snr_mean_db", "snr_rmse_db", "trials", "dropped", "wall_ms")

#: Estimated SNRs are clamped to this range (dB) before dB statistics.
SNR_DB_FLOOR = -30.0
SNR_DB_CEIL = 60.0

SEED_MASK = (1 << 64) - 1


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

def default_snr_grid() -> list:
    return [float(s) for s in range(-10, 31, 2)]


@dataclass
class SweepConfig:
    """Experiment description; JSON config files use these field names."""

    M: int = 64
    L: int = 3
    snr_grid: list = field(default_factory=default_snr_grid)
    trials: int = 10000
    seed: int = 0
    estimators: list = field(default_factory=lambda: list(DEFAULT_ESTIMATORS))
    alpha: float = estimator.DEFAULT_ALPHA
    M1: int | None = None
    M2: int | None = None
    gamma: float | None = None
    noise_ref: str = "mean"
    N0: float = 1.0
    decay: float = 0.5
    fx_profile: str = "headroom"
    threads: int = 1
    timing: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not isinstance(self.M, int) or not is_power_of_two(self.M) or self.M < 4:
            raise InvalidArgumentError(f"M must be a power of two >= 4, got {self.M!r}")
        ChannelConfig(self.M, self.L, self.decay)
        if not isinstance(self.trials, int) or self.trials < 1:
            raise InvalidArgumentError(f"trials must be >= 1, got {self.trials!r}")
        if len(self.snr_grid) == 0:
            raise InvalidArgumentError("snr_grid must be non-empty")
        if not all(math.isfinite(float(s)) for s in self.snr_grid):
            raise InvalidArgumentError("snr_grid entries must be finite")
        unknown = [e for e in self.estimators if e not in ESTIMATORS]
        if unknown or not self.estimators:
            raise InvalidArgumentError(f"estimators must be a non-empty subset of {ESTIMATORS}, got {self.estimators}")
        if len(set(self.estimators)) != len(self.estimators):
            raise InvalidArgumentError("estimators must not repeat")
        if not isinstance(self.seed, int):
            raise InvalidArgumentError(f"seed must be an integer, got {self.seed!r}")
        if not self.N0 > 0:
            raise InvalidArgumentError(f"N0 must be > 0, got {self.N0}")
        if not isinstance(self.threads, int) or self.threads < 1:
            raise InvalidArgumentError(f"threads must be >= 1, got {self.threads!r}")
        from .hwmodel import get_profile
        get_profile(self.fx_profile)
        self.dynamic_schedule()
        self.fixed_schedule()

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        names = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - names)
        if unknown:
            raise InvalidArgumentError(f"unknown config fields: {', '.join(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "SweepConfig":
        with open(path, encoding="utf-8") as fh:
            try:
                d = json.load(fh)
            except json.JSONDecodeError as e:
                raise InvalidArgumentError(f"{path}: invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}") from None
        if not isinstance(d, dict):
            raise InvalidArgumentError(f"{path}: config must be a JSON object")
        return cls.from_dict(d)

    def to_dict(self) -> dict:
        return asdict(self)

    def dynamic_schedule(self) -> ThresholdSchedule:
        return estimator.build_schedule(self.M, self.alpha, self.M1, self.M2, self.noise_ref)

    def fixed_schedule(self) -> ThresholdSchedule:
        if self.gamma is not None:
            return ThresholdSchedule.constant(float(self.gamma), self.M)
        return estimator.fixed_schedule(self.M, self.alpha, self.noise_ref)


# ---------------------------------------------------------------------------
# trial generation
# ---------------------------------------------------------------------------

def trial_rng(seed: int, snr_index: int, trial_index: int) -> np.random.Generator:
    """Generator for one trial; a pure function of its three keys."""
    return np.random.default_rng([seed & SEED_MASK, snr_index, trial_index])


@dataclass
class TrialBatch:
    """All samples of one SNR point, in trial order."""

    y: np.ndarray           # (trials, M) antenna-domain observations
    m0: np.ndarray          # true noise-only bin count per trial
    degenerate: np.ndarray  # zero-channel draws (signal left at zero)


def _draw_trials(cfg: SweepConfig, snr_index: int, rho: float, start: int, stop: int, out: TrialBatch):
    ch = ChannelConfig(cfg.M, cfg.L, cfg.decay)
    for t in range(start, stop):
        rng = trial_rng(cfg.seed, snr_index, t)
        h = synth_channel(ch, rng)
        s = qpsk_symbol(rng)
        try:
            x = scale_to_snr(h, s, rho, cfg.N0)
        except DegenerateInputError:
            x = np.zeros(cfg.M, dtype=complex)
            out.degenerate[t] = True
        xbar = dft_unitary(x)
        out.m0[t] = max(1, int(np.count_nonzero(xbar.real ** 2 + xbar.imag ** 2 < cfg.N0)))
        out.y[t] = add_awgn(x, cfg.N0, rng)


def generate_trials(cfg: SweepConfig, snr_index: int, threads: int | None = None) -> TrialBatch:
    """Draw every trial of one SNR point.

    The oracle boundary ``m0`` counts beamspace bins whose noiseless power is
    below ``N0``: those are the bins where noise dominates.
    """
    rho = 10.0 ** (float(cfg.snr_grid[snr_index]) / 10.0)
    T = cfg.trials
    out = TrialBatch(np.empty((T, cfg.M), dtype=complex), np.empty(T, dtype=np.int64), np.zeros(T, dtype=bool))
    threads = cfg.threads if threads is None else threads
    if threads <= 1 or T < 2 * threads:
        _draw_trials(cfg, snr_index, rho, 0, T, out)
        return out
    bounds = np.linspace(0, T, threads + 1).astype(int)
    with ThreadPoolExecutor(threads) as pool:
        jobs = [pool.submit(_draw_trials, cfg, snr_index, rho, a, b, out) for a, b in zip(bounds[:-1], bounds[1:])]
        for j in jobs:
            j.result()
    return out


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepRecord:
    snr_db: float
    estimator: str
    n0_mean: float
    n0_median: float
    n0_rmse: float
    px_mean: float
    px_rmse: float
    snr_mean_db: float
    snr_rmse_db: float
    trials: int
    dropped: int
    wall_ms: float | None
    n0_median_db: float
    snr_median_db: float

    def csv_row(self) -> list:
        return [_fmt(getattr(self, c)) for c in CSV_COLUMNS]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def snr_db(rho) -> np.ndarray:
    """``10 log10(rho)`` clamped to ``[SNR_DB_FLOOR, SNR_DB_CEIL]`` (0 and inf included)."""
    rho = np.asarray(rho, dtype=float)
    with np.errstate(divide="ignore"):
        d = 10.0 * np.log10(rho)
    return np.clip(d, SNR_DB_FLOOR, SNR_DB_CEIL)


def summarize(snr_db_true: float, name: str, n0, px, rho, N0: float, dropped: int,
              wall_ms: float | None) -> SweepRecord:
    """Aggregate per-trial estimates into one record (all trials are included)."""
    n0 = np.asarray(n0, dtype=float)
    px = np.asarray(px, dtype=float)
    rho_true = 10.0 ** (snr_db_true / 10.0)
    d = snr_db(rho)
    med = float(np.median(n0))
    return SweepRecord(
        snr_db=float(snr_db_true),
        estimator=name,
        n0_mean=float(np.mean(n0)),
        n0_median=med,
        n0_rmse=float(np.sqrt(np.mean((n0 - N0) ** 2))),
        px_mean=float(np.mean(px)),
        px_rmse=float(np.sqrt(np.mean((px - rho_true * N0) ** 2))),
        snr_mean_db=float(np.mean(d)),
        snr_rmse_db=float(np.sqrt(np.mean((d - snr_db_true) ** 2))),
        trials=int(n0.size),
        dropped=int(dropped),
        wall_ms=wall_ms,
        n0_median_db=float(10 * math.log10(med / N0)) if med > 0 else SNR_DB_FLOOR,
        snr_median_db=float(np.median(d)),
    )


def _degenerate(n0, rho):
    rho = np.asarray(rho)
    return (np.asarray(n0) <= 0) | (rho <= 0) | ~np.isfinite(rho)


def evaluate_batch(cfg: SweepConfig, batch: TrialBatch, names=None) -> dict:
    """Run the selected estimators on one batch.

    Returns ``name -> (n0, px, rho, flagged, seconds)``; ``flagged`` marks
    trials reported in the ``dropped`` column.
    """
    names = cfg.estimators if names is None else names
    M = cfg.M
    Ybar = dft_unitary(batch.y)
    P = power_sort_batch(Ybar)
    S_M = P.sum(axis=1)
    bcfg = baselines.BaselineConfig()
    out = {}

    def finish(name, n0, t0, extra=None):
        px = np.maximum(S_M / M - n0, 0.0)
        rho = estimator.snr_ratio(px, n0)
        flagged = _degenerate(n0, rho) | batch.degenerate
        if extra is not None:
            flagged |= extra
        out[name] = (n0, px, rho, flagged, time.perf_counter() - t0)

    for name in names:
        t0 = time.perf_counter()
        if name == "proposed_dynamic":
            finish(name, estimator.estimate_batch(P, cfg.dynamic_schedule())["n0"], t0)
        elif name == "proposed_fixed":
            finish(name, estimator.estimate_batch(P, cfg.fixed_schedule())["n0"], t0)
        elif name == "oracle":
            S = np.cumsum(P, axis=1)
            finish(name, S[np.arange(len(P)), batch.m0 - 1] / batch.m0, t0)
        elif name == "mad":
            finish(name, baselines.mad_batch(Ybar, bcfg), t0)
        elif name == "mad_refined":
            finish(name, baselines.mad_refined_batch(Ybar, bcfg), t0)
        elif name == "truncated_mean":
            finish(name, baselines.truncated_mean_batch(P, bcfg), t0)
        elif name == "fx_pipeline":
            from .hwmodel import FxPipeline
            res = FxPipeline(M, cfg.dynamic_schedule(), cfg.fx_profile).process_batch(batch.y)
            rho = res["rho"]
            flagged = _degenerate(res["n0"], rho) | batch.degenerate | (res["unexpected"] > 0)
            out[name] = (res["n0"], res["px"], rho, flagged, time.perf_counter() - t0)
        else:  # pragma: no cover - rejected by validate()
            raise InvalidArgumentError(name)
    return out


def run_sweep(cfg: SweepConfig, progress=None) -> list:
    """All SNR points times all estimators, in grid order then estimator order."""
    cfg.validate()
    records = []
    for i, s in enumerate(cfg.snr_grid):
        batch = generate_trials(cfg, i)
        res = evaluate_batch(cfg, batch)
        for name in cfg.estimators:
            n0, px, rho, flagged, secs = res[name]
            wall = round(secs * 1e3, 3) if cfg.timing else None
            records.append(summarize(float(s), name, n0, px, rho, cfg.N0, int(flagged.sum()), wall))
        if progress is not None:
            progress(i, float(s))
    return records


# ---------------------------------------------------------------------------
# order statistics of pure noise
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OrderStatRow:
    m: int
    mean: float
    expected_mean: float
    std_err: float
    z: float
    var: float
    expected_var: float
    var_rel_err: float


@dataclass(frozen=True)
class OrderStatReport:
    M: int
    N0: float
    trials: int
    rows: tuple
    max_abs_corr: float
    mean_ok: bool
    var_ok: bool
    corr_ok: bool

    @property
    def passed(self) -> bool:
        return self.mean_ok and self.var_ok and self.corr_ok

    def to_dict(self) -> dict:
        return {"M": self.M, "N0": self.N0, "trials": self.trials, "max_abs_corr": self.max_abs_corr,
                "mean_ok": self.mean_ok, "var_ok": self.var_ok, "corr_ok": self.corr_ok,
                "passed": self.passed, "rows": [asdict(r) for r in self.rows]}


def noise_gaps(M: int, N0: float, trials: int, rng: np.random.Generator, chunk: int = 20000) -> np.ndarray:
    """Gaps of sorted beamspace noise powers, shape ``(trials, M - 1)``."""
    out = np.empty((trials, M - 1))
    done = 0
    while done < trials:
        n = min(chunk, trials - done)
        y = math.sqrt(N0 / 2) * (rng.standard_normal((n, M)) + 1j * rng.standard_normal((n, M)))
        out[done:done + n] = np.diff(power_sort_batch(dft_unitary(y)), axis=1)
        done += n
    return out


def run_orderstat_validation(M: int = 64, N0: float = 1.0, trials: int = 100000, seed: int = 0,
                             mean_sigmas: float = 5.0, var_tol: float = 0.10,
                             corr_tol: float = 0.02) -> OrderStatReport:
    """Check that noise-only sorted-power gaps are independent ``Exp(N0/(M-m))``.

    Means are checked for ``m <= max(1, M - 4)``; variances and the largest
    absolute pairwise correlation over all ``m``.
    """
    if not is_power_of_two(M) or M < 2:
        raise InvalidArgumentError(f"M must be a power of two >= 2, got {M}")
    if trials < 2:
        raise InvalidArgumentError("trials must be >= 2")
    if not N0 > 0:
        raise InvalidArgumentError("N0 must be > 0")
    D = noise_gaps(M, N0, trials, np.random.default_rng(seed & SEED_MASK))
    mean = D.mean(axis=0)
    var = D.var(axis=0, ddof=1)
    m = np.arange(1, M)
    emean = N0 / (M - m)
    evar = emean ** 2
    se = np.sqrt(var / trials)
    z = (mean - emean) / se
    rel = var / evar - 1.0
    if M > 2:
        C = np.corrcoef(D, rowvar=False)
        np.fill_diagonal(C, 0.0)
        max_corr = float(np.max(np.abs(C)))
    else:
        max_corr = 0.0
    mwin = max(1, M - 4)
    rows = tuple(OrderStatRow(int(m[i]), float(mean[i]), float(emean[i]), float(se[i]), float(z[i]),
                              float(var[i]), float(evar[i]), float(rel[i])) for i in range(M - 1))
    return OrderStatReport(M, float(N0), trials, rows, max_corr,
                           bool(np.all(np.abs(z[:mwin]) <= mean_sigmas)),
                           bool(np.all(np.abs(rel) <= var_tol)),
                           bool(max_corr <= corr_tol))


# ---------------------------------------------------------------------------
# oracle estimator under perfect separation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SeparationReport:
    M: int
    k: int
    N0: float
    accepted: int
    discarded: int
    mean: float
    var: float
    expected_var: float
    std_err: float

    @property
    def bias(self) -> float:
        return self.mean - self.N0

    @property
    def var_rel_err(self) -> float:
        return self.var / self.expected_var - 1.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(bias=self.bias, var_rel_err=self.var_rel_err)
        return d


def run_separation_validation(M: int = 64, k: int = 4, N0: float = 1.0, trials: int = 100000,
                              seed: int = 0, power: float = 100.0, chunk: int = 20000) -> SeparationReport:
    """Oracle noise estimate on ``k``-sparse beamspace vectors plus noise.

    A trial is accepted when every signal bin is stronger than every noise
    bin; rejected trials are counted in ``discarded``. The oracle estimate
    is the mean of the ``M - k`` smallest powers.
    """
    if not 0 <= k < M:
        raise InvalidArgumentError(f"need 0 <= k < M, got k={k}, M={M}")
    if trials < 2:
        raise InvalidArgumentError("trials must be >= 2")
    rng = np.random.default_rng(seed & SEED_MASK)
    est = np.empty(trials)
    got = discarded = 0
    amp = math.sqrt(power)
    while got < trials:
        n = min(chunk, 2 * (trials - got) + 16)
        idx = np.argsort(rng.random((n, M)), axis=1)[:, :k]
        xbar = np.zeros((n, M), dtype=complex)
        np.put_along_axis(xbar, idx, amp * np.exp(2j * np.pi * rng.random((n, k))), axis=1)
        noise = math.sqrt(N0 / 2) * (rng.standard_normal((n, M)) + 1j * rng.standard_normal((n, M)))
        p = np.abs(xbar + noise) ** 2
        sig = np.zeros((n, M), dtype=bool)
        np.put_along_axis(sig, idx, True, axis=1)
        if k:
            ok = np.where(sig, p, np.inf).min(axis=1) > np.where(sig, -np.inf, p).max(axis=1)
        else:
            ok = np.ones(n, dtype=bool)
        discarded += int(n - ok.sum())
        vals = np.sort(p[ok], axis=1)[:, : M - k].mean(axis=1)
        take = min(vals.size, trials - got)
        est[got:got + take] = vals[:take]
        got += take
    var = float(est.var(ddof=1))
    return SeparationReport(M, k, float(N0), trials, discarded, float(est.mean()), var,
                            N0 * N0 / (M - k), math.sqrt(var / trials))


# ---------------------------------------------------------------------------
# fixed-point versus float
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FxCompareRecord:
    snr_db: float
    trials: int
    sort_exact: float
    n0_within: float
    rho_within: float
    m_star_agree: float
    unexpected_saturations: int
    n0_max_abs_err: float

    def passed(self, frac: float = 0.99) -> bool:
        return (self.sort_exact == 1.0 and self.n0_within >= frac and self.rho_within >= frac
                and self.unexpected_saturations == 0)


FX_N0_TOL = 2.0 ** -4
FX_RHO_ABS_TOL = 2.0 ** -3
FX_RHO_REL_TOL = 0.05


def run_fxcompare(cfg: SweepConfig, trace=None) -> list:
    """Fixed-point pipeline against the float estimator on the sweep's samples.

    Both use the dynamic schedule. ``trace`` (a writable text stream)
    receives the step trace of the first trial of the first SNR point.
    """
    from .hwmodel import FxPipeline

    cfg.validate()
    sched = cfg.dynamic_schedule()
    out = []
    for i, s in enumerate(cfg.snr_grid):
        batch = generate_trials(cfg, i)
        if trace is not None and i == 0:
            FxPipeline(cfg.M, sched, cfg.fx_profile, trace=trace).process(batch.y[0])
        fx = FxPipeline(cfg.M, sched, cfg.fx_profile).process_batch(batch.y)
        fl = estimator.estimate_batch(power_sort_batch(dft_unitary(batch.y)), sched)
        dn = np.abs(fx["n0"] - fl["n0"])
        with np.errstate(invalid="ignore"):
            drho = np.abs(fx["rho"] - fl["rho"])
        tol = np.maximum(FX_RHO_ABS_TOL, FX_RHO_REL_TOL * fl["rho"])
        rho_ok = (drho <= tol) | (np.isinf(fx["rho"]) & np.isinf(fl["rho"]))
        out.append(FxCompareRecord(float(s), cfg.trials, float(fx["sort_exact"].mean()),
                                   float(np.mean(dn <= FX_N0_TOL)), float(np.mean(rho_ok)),
                                   float(np.mean(fx["m_star"] == fl["m_star"])),
                                   int(fx["unexpected"].sum()), float(dn.max())))
    return out


# ---------------------------------------------------------------------------
# single-sample estimation from a file
# ---------------------------------------------------------------------------

def parse_text_samples(text: str) -> np.ndarray:
    """Parse ``re,im`` lines. Blank lines and lines starting with ``#`` are skipped."""
    vals = []
    for ln, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) != 2:
            col = len(line) + 1 if len(parts) < 2 else len(parts[0]) + len(parts[1]) + 2
            raise SampleParseError(f"expected two comma-separated fields, got {len(parts)}", ln, col)
        col = 1
        pair = []
        for part in parts:
            lead = len(part) - len(part.lstrip())
            try:
                v = float(part)
            except ValueError:
                raise SampleParseError(f"not a number: {part.strip()!r}", ln, col + lead) from None
            if not math.isfinite(v):
                raise SampleParseError(f"non-finite value {part.strip()!r}", ln, col + lead)
            pair.append(v)
            col += len(part) + 1
        vals.append(complex(pair[0], pair[1]))
    return np.array(vals, dtype=complex)


def parse_binary_samples(data: bytes) -> np.ndarray:
    """Little-endian float64 pairs ``re, im``."""
    if len(data) % 16:
        raise SampleParseError(f"binary sample file length {len(data)} is not a multiple of 16 bytes", 1, 1)
    a = np.frombuffer(data, dtype="<f8")
    if not np.all(np.isfinite(a)):
        bad = int(np.flatnonzero(~np.isfinite(a))[0])
        raise SampleParseError(f"non-finite value at float index {bad}", 1, bad * 8 + 1)
    return (a[0::2] + 1j * a[1::2]).astype(complex)


def read_samples(path, binary: bool | None = None) -> np.ndarray:
    """Read a sample file; ``binary=None`` picks binary for ``.bin``/``.f64`` names."""
    if binary is None:
        binary = str(path).lower().endswith((".bin", ".f64"))
    with open(path, "rb") as fh:
        data = fh.read()
    if binary:
        y = parse_binary_samples(data)
    else:
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as e:
            raise SampleParseError("file is not UTF-8 text", 1, e.start + 1) from None
        y = parse_text_samples(text)
    if y.size == 0:
        raise InvalidArgumentError("sample file holds no samples")
    if not is_power_of_two(y.size) or y.size < 4:
        raise InvalidArgumentError(f"sample count M={y.size} must be a power of two >= 4")
    return y


def schedule_for(M: int, alpha: float = estimator.DEFAULT_ALPHA, M1=None, M2=None, gamma=None,
                 noise_ref: str = "mean") -> ThresholdSchedule:
    """Dynamic schedule, or a constant one when ``gamma`` is given."""
    if gamma is not None:
        return ThresholdSchedule.constant(float(gamma), M)
    return estimator.build_schedule(M, alpha, M1, M2, noise_ref)


def estimate_file(input_path, output_path=None, *, alpha: float = estimator.DEFAULT_ALPHA, M1=None, M2=None,
                  gamma=None, noise_ref: str = "mean", domain: str = "antenna", binary=None,
                  fx_profile: str | None = None, trace=None) -> dict:
    """Estimate from one sample file and optionally write the JSON result.

    ``domain="beamspace"`` treats the samples as ``ybar``. ``fx_profile``
    also runs the fixed-point pipeline (antenna domain only). Nothing is
    written unless every step succeeds.
    """
    y = read_samples(input_path, binary)
    sched = schedule_for(y.size, alpha, M1, M2, gamma, noise_ref)
    res = estimator.estimate(y, sched, domain)
    out = {"M": int(y.size), "domain": domain, "schedule": sched.to_dict(), "estimate": res.to_dict()}
    if fx_profile is not None:
        from .hwmodel import fx_pipeline_estimate

        ant = y if domain == "antenna" else np.fft.ifft(y, norm="ortho")
        out["fx"] = fx_pipeline_estimate(ant, sched, fx_profile, trace).to_dict()
        out["fx"]["profile"] = fx_profile
    if output_path is not None:
        atomic_write_text(output_path, dumps_json(out))
    return out


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def _json_safe(v):
    if isinstance(v, float) and not math.isfinite(v):
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    if isinstance(v, dict):
        return {k: _json_safe(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_safe(x) for x in v]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return _json_safe(float(v))
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def dumps_json(obj) -> str:
    """JSON text; non-finite floats become the strings ``"inf"``, ``"-inf"``, ``"nan"``."""
    return json.dumps(_json_safe(obj), indent=2, allow_nan=False) + "\n"


def records_to_csv(records, columns=CSV_COLUMNS) -> str:
    """RFC 4180 CSV (CRLF line ends, minimal quoting) of sweep records."""
    buf = io.StringIO(newline="")
    w = csv.writer(buf)
    w.writerow(columns)
    for r in records:
        w.writerow(r.csv_row() if columns == CSV_COLUMNS else [_fmt(getattr(r, c)) for c in columns])
    return buf.getvalue()


def rows_to_csv(columns, rows) -> str:
    buf = io.StringIO(newline="")
    w = csv.writer(buf)
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def records_to_json(records, config: SweepConfig | None = None) -> str:
    body = {"records": [asdict(r) for r in records]}
    if config is not None:
        body = {"config": config.to_dict(), **body}
    return dumps_json(body)


def atomic_write_text(path, text: str):
    """Write via a temporary file in the same directory, then rename."""
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
