"""Experiment orchestration: config parsing, single-point reports, ratio
sweeps (double-descent curves), ridge tuning curves, and the two-ratio summary
table, with CSV/JSON emission.
"""

import json
import math
import os
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, FrmRiskError, InterpolationSingularity, RegimeError
from .model import (
    DenseCovariance,
    DenseLoadings,
    Dimensions,
    IdentityScaled,
    LeadingEigenvectors,
    ModelConfig,
    ScaledUnitary,
    ToeplitzMix,
    materialize,
    null_risk,
)
from .montecarlo import Gls, Ls, Ridge, run_trials
from .theory import (
    DEFAULT_LAMBDA_RANGE,
    build_spectral,
    gls_predict,
    ls_predict,
    optimal_lambda,
    ridge_predict,
)

DEFAULT_RATIO_GRID = (0.5, 0.7, 1.5, 2.0, 3.0, 5.0, 10.0, 20.0, 40.0, 60.0)
DEFAULT_TRIALS = 50
SINGULAR_BAND = 1e-3  # |alpha - 1| below this: theory cells reported singular

SWEEP_COLUMNS = (
    "inv_alpha", "m", "k", "null_risk",
    "gls_theory", "gls_mc", "gls_mc_stderr",
    "ls_theory", "ls_mc", "ls_mc_stderr",
    "lambda_star", "ridge_theory", "ridge_mc", "ridge_mc_stderr",
    "error",
)


@dataclass(frozen=True, eq=False)
class ParsedConfig:
    """Validated experiment configuration plus the raw dict echo."""

    n: int
    inv_alpha: float | None
    m: int | None
    kappa: float
    sigma_sq: float
    factor_cov: object
    feature_noise_cov: object
    response_noise_cov: object
    loadings: object
    beta_bar: object   # None for default, else list of floats
    entry_distribution: str
    seed: int
    raw: dict

    def dimensions(self):
        if self.m is not None:
            return Dimensions(n=self.n, m=self.m, k=int(math.floor(self.kappa * self.m + 0.5)))
        return Dimensions.from_ratios(self.n, self.inv_alpha, self.kappa)

    def model_config(self, dims=None):
        dims = dims or self.dimensions()
        beta = None if self.beta_bar is None else np.asarray(self.beta_bar, dtype=np.float64)
        return ModelConfig(
            dims=dims,
            sigma_sq=self.sigma_sq,
            loadings=self.loadings,
            factor_cov=self.factor_cov,
            feature_noise_cov=self.feature_noise_cov,
            response_noise_cov=self.response_noise_cov,
            beta_bar=beta,
            entry_distribution=self.entry_distribution,
        )

    def model_config_at(self, inv_alpha):
        """Config for a sweep grid point: dimensions rebuilt, generating rules kept."""
        if self.beta_bar is not None:
            raise ConfigError("sweeps need beta_bar = \"default\" (explicit vectors cannot be resized)")
        if isinstance(self.loadings, DenseLoadings) or any(
                isinstance(c, DenseCovariance)
                for c in (self.factor_cov, self.feature_noise_cov, self.response_noise_cov)):
            raise ConfigError("sweeps need dimension-independent covariance/loadings rules, not dense matrices")
        return self.model_config(Dimensions.from_ratios(self.n, inv_alpha, self.kappa))


def _take(d, key, kinds, required=True, default=None):
    if key not in d:
        if required:
            raise ConfigError(f"missing config key {key!r}")
        return default
    v = d.pop(key)
    if not isinstance(v, kinds):
        raise ConfigError(f"config key {key!r} has wrong type {type(v).__name__}")
    return v


def _parse_cov(entry, what):
    if entry is None:
        return IdentityScaled()
    if not isinstance(entry, dict):
        raise ConfigError(f"{what} must be an object with a 'kind'")
    entry = dict(entry)
    kind = _take(entry, "kind", str)
    if kind == "identity":
        spec = IdentityScaled(scale=float(_take(entry, "scale", (int, float), required=False, default=1.0)))
    elif kind == "toeplitz_mix":
        spec = ToeplitzMix(q=float(_take(entry, "q", (int, float))),
                           scale=float(_take(entry, "scale", (int, float), required=False, default=1.0)))
    elif kind == "dense":
        spec = DenseCovariance(matrix=np.asarray(_take(entry, "matrix", list), dtype=np.float64))
    else:
        raise ConfigError(f"{what}: unknown covariance kind {kind!r}")
    if entry:
        raise ConfigError(f"{what}: unknown keys {sorted(entry)}")
    return spec


def _parse_loadings(entry):
    if not isinstance(entry, dict):
        raise ConfigError("loadings must be an object with a 'kind'")
    entry = dict(entry)
    kind = _take(entry, "kind", str)
    if kind == "scaled_unitary":
        spec = ScaledUnitary(c_l=float(_take(entry, "c_l", (int, float))))
    elif kind == "leading_eigenvectors":
        spec = LeadingEigenvectors(q_L=float(_take(entry, "q_L", (int, float))))
    elif kind == "dense":
        spec = DenseLoadings(matrix=np.asarray(_take(entry, "matrix", list), dtype=np.float64))
    else:
        raise ConfigError(f"loadings: unknown kind {kind!r}")
    if entry:
        raise ConfigError(f"loadings: unknown keys {sorted(entry)}")
    return spec


def parse_config(data):
    """Validate a raw config dict; unknown keys are errors."""
    if not isinstance(data, dict):
        raise ConfigError("config root must be an object")
    raw = dict(data)
    work = dict(data)
    n = int(_take(work, "n", int))
    inv_alpha = _take(work, "inv_alpha", (int, float), required=False)
    m = _take(work, "m", int, required=False)
    if (inv_alpha is None) == (m is None):
        raise ConfigError("exactly one of 'inv_alpha' or 'm' is required")
    if inv_alpha is not None and inv_alpha <= 0:
        raise ConfigError(f"inv_alpha must be > 0, got {inv_alpha}")
    kappa = float(_take(work, "kappa", (int, float)))
    sigma_sq = float(_take(work, "sigma_sq", (int, float)))
    factor_cov = _parse_cov(_take(work, "factor_cov", dict, required=False), "factor_cov")
    feature_cov = _parse_cov(_take(work, "feature_noise_cov", dict, required=False), "feature_noise_cov")
    response_cov = _parse_cov(_take(work, "response_noise_cov", dict, required=False), "response_noise_cov")
    loadings = _parse_loadings(_take(work, "loadings", dict))
    beta = _take(work, "beta_bar", (str, list), required=False, default="default")
    if isinstance(beta, str):
        if beta != "default":
            raise ConfigError(f"beta_bar must be \"default\" or a list, got {beta!r}")
        beta = None
    dist = _take(work, "entry_distribution", str, required=False, default="gaussian")
    seed = int(_take(work, "seed", int, required=False, default=0))
    if work:
        raise ConfigError(f"unknown config keys {sorted(work)}")
    return ParsedConfig(n=n, inv_alpha=None if inv_alpha is None else float(inv_alpha), m=m,
                        kappa=kappa, sigma_sq=sigma_sq, factor_cov=factor_cov,
                        feature_noise_cov=feature_cov, response_noise_cov=response_cov,
                        loadings=loadings, beta_bar=beta, entry_distribution=dist,
                        seed=seed, raw=raw)


def load_config(path):
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return parse_config(data)


@dataclass(eq=False)
class ExperimentReport:
    config: dict
    seed: int
    estimators: dict = field(default_factory=dict)  # name -> {"theory": {...}, "mc": {...}|None, ...}
    wall_clock: float = 0.0

    def to_json(self):
        return json.dumps({"config": self.config, "seed": self.seed,
                           "estimators": self.estimators, "wall_clock": self.wall_clock},
                          indent=2, sort_keys=True)


def _gls_fields(pred):
    return {"risk": pred.risk, "objective": pred.objective, "norm_sq": pred.norm_sq,
            "residual_sq": 0.0, "gamma_hat": pred.gamma_hat, "a1": pred.a1, "a2": pred.a2,
            "nu1_hat": pred.nu1_hat, "sigma_bar_sq": pred.sigma_bar_sq}


def _ridge_fields(pred):
    return {"risk": pred.risk, "objective": pred.objective, "norm_sq": pred.norm_sq,
            "residual_sq": pred.residual_sq, "gamma_hat": pred.gamma_hat,
            "a1r": pred.a1r, "a2r": pred.a2r, "nu1_hat": pred.nu1_hat,
            "lambda": pred.lam, "sigma_bar_sq": pred.sigma_bar_sq}


def _ls_fields(pred):
    return {"risk": pred.risk, "objective": pred.objective, "norm_sq": pred.norm_sq,
            "residual_sq": pred.residual_sq, "gamma_hat": pred.gamma_hat,
            "a1r": pred.a1r, "nu1_hat": pred.nu1_hat, "sigma_bar_sq": pred.sigma_bar_sq}


def _theory_entries(parsed, lambda_range=DEFAULT_LAMBDA_RANGE):
    dims = parsed.dimensions()
    if dims.m == dims.n:
        raise InterpolationSingularity("alpha is exactly 1: the risk diverges at the interpolation threshold")
    instance = materialize(parsed.model_config(dims))
    spec = build_spectral(instance)
    alpha = dims.alpha
    entries = {"null": {"theory": {"risk": null_risk(instance)}}}
    if alpha < 1.0:
        entries["gls"] = {"theory": _gls_fields(gls_predict(spec, alpha, instance.sigma_bar_sq))}
    if alpha > 1.0:
        entries["ls"] = {"theory": _ls_fields(ls_predict(instance, spec, alpha, instance.sigma_bar_sq))}
    lam_star, ridge = optimal_lambda(spec, alpha, instance.sigma_bar_sq, lambda_range)
    entries["ridge_opt"] = {"theory": _ridge_fields(ridge), "lambda_star": lam_star}
    return instance, spec, entries


def cmd_theory(parsed, lambda_range=DEFAULT_LAMBDA_RANGE):
    """Closed-form predictions for every estimator applicable at the configured point."""
    t0 = time.perf_counter()
    _, _, entries = _theory_entries(parsed, lambda_range)
    return ExperimentReport(config=parsed.raw, seed=parsed.seed, estimators=entries,
                            wall_clock=time.perf_counter() - t0)


def _mc_fields(agg):
    return {"risk": agg.mean.excess_risk, "risk_stderr": agg.stderr.excess_risk,
            "objective": agg.mean.objective, "objective_stderr": agg.stderr.objective,
            "norm_sq": agg.mean.norm_sq, "norm_sq_stderr": agg.stderr.norm_sq,
            "residual_sq": agg.mean.residual_sq, "residual_sq_stderr": agg.stderr.residual_sq,
            "trials": agg.count}


def _relative_gap(theory, mc):
    if theory == 0.0:
        return abs(mc)
    return abs(mc - theory) / abs(theory)


def cmd_simulate(parsed, trials=DEFAULT_TRIALS, seed=None, lambda_range=DEFAULT_LAMBDA_RANGE):
    """Theory and Monte Carlo side by side, with relative gaps."""
    t0 = time.perf_counter()
    seed = parsed.seed if seed is None else seed
    instance, _, entries = _theory_entries(parsed, lambda_range)
    alpha = instance.dims.alpha
    kinds = {}
    if alpha < 1.0:
        kinds["gls"] = Gls()
    if alpha > 1.0:
        kinds["ls"] = Ls()
    kinds["ridge_opt"] = Ridge(lam=entries["ridge_opt"]["lambda_star"])
    for name, kind in kinds.items():
        agg = run_trials(instance, kind, trials, seed)
        entries[name]["mc"] = _mc_fields(agg)
        entries[name]["risk_gap"] = _relative_gap(entries[name]["theory"]["risk"], agg.mean.excess_risk)
    return ExperimentReport(config=parsed.raw, seed=seed, estimators=entries,
                            wall_clock=time.perf_counter() - t0)


@dataclass
class SweepRow:
    """One grid point of a double-descent curve; absent cells stay None."""

    inv_alpha: float
    m: int
    k: int
    null_risk: float | None = None
    gls_theory: float | None = None
    gls_mc: float | None = None
    gls_mc_stderr: float | None = None
    ls_theory: float | None = None
    ls_mc: float | None = None
    ls_mc_stderr: float | None = None
    lambda_star: float | None = None
    ridge_theory: float | None = None
    ridge_mc: float | None = None
    ridge_mc_stderr: float | None = None
    error: str = ""


def _row_seed(seed, index):
    return int(np.random.SeedSequence((int(seed), int(index))).generate_state(1, np.uint64)[0])


def _sweep_row(parsed, inv_alpha, trials, seed, index, lambda_range):
    config = parsed.model_config_at(inv_alpha)
    dims = config.dims
    row = SweepRow(inv_alpha=inv_alpha, m=dims.m, k=dims.k)
    alpha = dims.alpha
    try:
        instance = materialize(config)
        row.null_risk = null_risk(instance)
        if abs(alpha - 1.0) <= SINGULAR_BAND:
            row.error = "singular"
            return row
        spec = build_spectral(instance)
        row_seed = _row_seed(seed, index)
        if alpha < 1.0:
            row.gls_theory = gls_predict(spec, alpha, instance.sigma_bar_sq).risk
            if trials:
                agg = run_trials(instance, Gls(), trials, row_seed)
                row.gls_mc, row.gls_mc_stderr = agg.mean.excess_risk, agg.stderr.excess_risk
        if alpha > 1.0:
            row.ls_theory = ls_predict(instance, spec, alpha, instance.sigma_bar_sq).risk
            if trials:
                agg = run_trials(instance, Ls(), trials, row_seed)
                row.ls_mc, row.ls_mc_stderr = agg.mean.excess_risk, agg.stderr.excess_risk
        row.lambda_star, ridge = optimal_lambda(spec, alpha, instance.sigma_bar_sq, lambda_range)
        row.ridge_theory = ridge.risk
        if trials:
            agg = run_trials(instance, Ridge(lam=row.lambda_star), trials, row_seed)
            row.ridge_mc, row.ridge_mc_stderr = agg.mean.excess_risk, agg.stderr.excess_risk
    except FrmRiskError as exc:
        row.error = f"{type(exc).__name__}: {exc}"
    return row


def cmd_sweep(parsed, ratio_grid=DEFAULT_RATIO_GRID, trials=DEFAULT_TRIALS, seed=None,
              lambda_range=DEFAULT_LAMBDA_RANGE, workers=1):
    """One SweepRow per over-parametrization ratio, rows in grid order.

    Per-row failures land in the row's error column; the sweep continues.
    Rows are seeded by (seed, grid index), so results do not depend on the
    worker count.
    """
    for r in ratio_grid:
        if r <= 0:
            raise ConfigError(f"grid ratios must be > 0, got {r}")
        if r == 1.0:
            raise ConfigError("grid ratio 1 sits exactly at the interpolation threshold")
    seed = parsed.seed if seed is None else seed
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_sweep_row, parsed, r, trials, seed, i, lambda_range)
                       for i, r in enumerate(ratio_grid)]
            return [f.result() for f in futures]
    return [_sweep_row(parsed, r, trials, seed, i, lambda_range) for i, r in enumerate(ratio_grid)]


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{value:.9g}"


def sweep_csv(rows):
    lines = [",".join(SWEEP_COLUMNS)]
    for row in rows:
        lines.append(",".join(_fmt(getattr(row, c)) for c in SWEEP_COLUMNS))
    return "\n".join(lines) + "\n"


def parse_sweep_csv(text):
    """Inverse of sweep_csv (round-trip for regression artifacts)."""
    lines = [ln for ln in text.splitlines() if ln]
    if not lines or lines[0] != ",".join(SWEEP_COLUMNS):
        raise ConfigError("unexpected sweep CSV header")
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != len(SWEEP_COLUMNS):
            raise ConfigError(f"bad sweep CSV row: {ln!r}")
        vals = dict(zip(SWEEP_COLUMNS, parts))
        rows.append(SweepRow(
            inv_alpha=float(vals["inv_alpha"]), m=int(vals["m"]), k=int(vals["k"]),
            error=vals["error"],
            **{c: (None if vals[c] == "" else float(vals[c]))
               for c in SWEEP_COLUMNS if c not in ("inv_alpha", "m", "k", "error")},
        ))
    return rows


def rows_to_json(rows, columns):
    payload = [{c: getattr(row, c) for c in columns} for row in rows]
    return json.dumps(payload, indent=2)


def write_text_atomic(path, text):
    """Single writer for all file outputs; atomic replace."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@dataclass
class TuneCurvePoint:
    lam: float
    risk: float


def cmd_tune(parsed, lambda_range=DEFAULT_LAMBDA_RANGE, grid_points=60):
    """Ridge risk curve over a log-lambda grid plus the tuned optimum.

    Flags the tuning as marginal when the optimum improves on the
    zero-penalty interpolator risk by less than 1%.
    """
    lo, hi = lambda_range
    instance, spec, entries = _theory_entries(parsed, lambda_range if lo < hi else DEFAULT_LAMBDA_RANGE)
    alpha = instance.dims.alpha
    if lo == hi:
        lam_star = lo
        pred = ridge_predict(spec, alpha, lam_star, instance.sigma_bar_sq)
        curve = [TuneCurvePoint(lam=lam_star, risk=pred.risk)]
    else:
        lam_star, pred = optimal_lambda(spec, alpha, instance.sigma_bar_sq, lambda_range)
        grid = np.logspace(math.log10(lo), math.log10(hi), grid_points)
        curve = [TuneCurvePoint(lam=float(l), risk=ridge_predict(spec, alpha, float(l), instance.sigma_bar_sq).risk)
                 for l in grid]
    result = {"lambda_star": lam_star, "risk": pred.risk, "null_risk": null_risk(instance)}
    if alpha < 1.0:
        gls_risk = entries["gls"]["theory"]["risk"] if "gls" in entries \
            else gls_predict(spec, alpha, instance.sigma_bar_sq).risk
        gap = _relative_gap(gls_risk, pred.risk)
        result["gls_risk"] = gls_risk
        result["smoothing_gap"] = gap
        result["smoothing_marginal"] = bool(gap < 0.01)
    return result, curve


def tune_csv(curve):
    lines = ["lambda,ridge_theory_risk"]
    for pt in curve:
        lines.append(f"{_fmt(pt.lam)},{_fmt(pt.risk)}")
    return "\n".join(lines) + "\n"


TABLE1_RATIOS = (0.7, 3.0)
TABLE1_COLUMNS = ("inv_alpha", "estimator",
                  "norm_theory", "norm_mc", "objective_theory", "objective_mc",
                  "in_sample_theory", "in_sample_mc",
                  "out_of_sample_theory", "out_of_sample_mc")


@dataclass
class Table1Row:
    inv_alpha: float
    estimator: str
    norm_theory: float
    norm_mc: float
    objective_theory: float
    objective_mc: float
    in_sample_theory: float
    in_sample_mc: float
    out_of_sample_theory: float
    out_of_sample_mc: float


def table1_config(inv_alpha, seed=0):
    return parse_config({
        "n": 600, "inv_alpha": inv_alpha, "kappa": 0.5, "sigma_sq": 0.2,
        "loadings": {"kind": "scaled_unitary", "c_l": 4.0},
        "seed": seed,
    })


def cmd_table1(seed=0, trials=DEFAULT_TRIALS):
    """The two-ratio summary grid: norm / objective / in-sample / out-of-sample,
    theory next to simulation, for the regime-matched estimator and the
    optimally tuned ridge."""
    rows = []
    for index, ratio in enumerate(TABLE1_RATIOS):
        parsed = table1_config(ratio, seed)
        instance, spec, entries = _theory_entries(parsed)
        alpha = instance.dims.alpha
        row_seed = _row_seed(seed, index)
        if alpha < 1.0:
            plans = [("gls", Gls(), entries["gls"]["theory"])]
        else:
            plans = [("ls", Ls(), entries["ls"]["theory"])]
        plans.append(("ridge", Ridge(lam=entries["ridge_opt"]["lambda_star"]), entries["ridge_opt"]["theory"]))
        for name, kind, theory in plans:
            agg = run_trials(instance, kind, trials, row_seed)
            rows.append(Table1Row(
                inv_alpha=ratio, estimator=name,
                norm_theory=theory["norm_sq"], norm_mc=agg.mean.norm_sq,
                objective_theory=theory["objective"], objective_mc=agg.mean.objective,
                in_sample_theory=theory["residual_sq"], in_sample_mc=agg.mean.residual_sq,
                out_of_sample_theory=theory["risk"], out_of_sample_mc=agg.mean.excess_risk,
            ))
    return rows


def table1_csv(rows):
    lines = [",".join(TABLE1_COLUMNS)]
    for row in rows:
        lines.append(",".join(_fmt(getattr(row, c)) for c in TABLE1_COLUMNS))
    return "\n".join(lines) + "\n"


def format_table1(rows):
    """Human-readable rendering of the summary grid (theory/simulated)."""
    metrics = (("norm", "Estimator norm"), ("objective", "Objective value"),
               ("in_sample", "In-sample risk"), ("out_of_sample", "Out-of-sample risk"))
    headers = [f"1/alpha={row.inv_alpha:g} {row.estimator}" for row in rows]
    width = max(len(h) for h in headers) + 2
    out = [" " * 22 + "".join(h.rjust(width) for h in headers)]
    for key, label in metrics:
        cells = []
        for row in rows:
            th = getattr(row, f"{key}_theory")
            mc = getattr(row, f"{key}_mc")
            cells.append(f"{th:.4f}/{mc:.4f}".rjust(width))
        out.append(label.ljust(22) + "".join(cells))
    return "\n".join(out) + "\n"
