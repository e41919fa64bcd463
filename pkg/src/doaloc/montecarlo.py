"""Seeded Monte Carlo campaigns over noise level and number of epochs.

Each trial index gets its own generator, ``SeedSequence([seed, trial])``.
One scenario with ``max(K)`` epochs is drawn per trial and every
``(sigma, K)`` cell uses its first ``K`` epochs with the same unit noise
draws rescaled to ``sigma`` (common random numbers), so differences between
cells reflect the cell parameters rather than resampling.  Results are
keyed by trial index, which makes the output independent of how trials are
scheduled across worker processes.
"""

from __future__ import annotations

import csv
import io
import json
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import DoalocError
from .mle import MleOptions, NoiseModel
from .pipeline import refine_report, solve_sdp_o
from .scenario import generate_scenario
from .sdp import SolverOptions, Status

CAMPAIGN_METHODS = ("sdp", "sdp+ml")
_CONFIG_KEYS = {
    "sigmas_deg",
    "elevation_ratio",
    "k_range",
    "k_values",
    "trials",
    "seed",
    "methods",
    "constraint_set",
    "workers",
}


class ConfigError(DoalocError, ValueError):
    pass


@dataclass(frozen=True)
class CampaignConfig:
    sigmas_deg: tuple[float, ...] = (0.1, 1.0, 2.0)
    elevation_ratio: float = 4.0
    k_range: tuple[int, int] = (2, 20)
    k_values: tuple[int, ...] | None = None
    trials: int = 100
    seed: int = 0
    methods: tuple[str, ...] = CAMPAIGN_METHODS
    constraint_set: str = "full"
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if any(s < 0 for s in self.sigmas_deg) or not self.sigmas_deg:
            raise ConfigError("sigmas_deg must be a non-empty list of non-negative values")
        if not all(m in CAMPAIGN_METHODS for m in self.methods) or not self.methods:
            raise ConfigError(f"methods must be drawn from {CAMPAIGN_METHODS}")
        if self.k_values is None and not (1 <= self.k_range[0] <= self.k_range[1]):
            raise ConfigError("k_range must satisfy 1 <= min <= max")
        if self.k_values is not None and (not self.k_values or min(self.k_values) < 1):
            raise ConfigError("k_values must be positive")
        if self.constraint_set not in ("full", "independent-only"):
            raise ConfigError("constraint_set must be 'full' or 'independent-only'")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")

    @property
    def ks(self) -> list[int]:
        if self.k_values is not None:
            return sorted(set(int(k) for k in self.k_values))
        return list(range(self.k_range[0], self.k_range[1] + 1))

    @classmethod
    def from_dict(cls, d: dict) -> CampaignConfig:
        unknown = set(d) - _CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown campaign key(s): {', '.join(sorted(unknown))}")
        kw = dict(d)
        try:
            for key in ("sigmas_deg", "methods"):
                if key in kw:
                    kw[key] = tuple(kw[key])
            if "k_range" in kw:
                lo, hi = kw["k_range"]
                kw["k_range"] = (int(lo), int(hi))
            if kw.get("k_values") is not None:
                kw["k_values"] = tuple(int(k) for k in kw["k_values"])
            return cls(**kw)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"invalid campaign config: {exc}") from exc

    @classmethod
    def load(cls, path) -> CampaignConfig:
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except OSError as exc:
            raise ConfigError(f"{path}: cannot read ({exc.strerror})") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON ({exc.msg})") from exc

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sigmas_deg"] = list(self.sigmas_deg)
        d["methods"] = list(self.methods)
        d["k_range"] = list(self.k_range)
        d["k_values"] = None if self.k_values is None else list(self.k_values)
        return d


@dataclass
class CampaignResult:
    config: CampaignConfig
    # errors[method] has shape (n_sigma, n_K, trials, 2): rotation (rad), position
    errors: dict[str, np.ndarray] = field(default_factory=dict)

    def rows(self) -> list[dict]:
        out = []
        for i, s in enumerate(self.config.sigmas_deg):
            for j, K in enumerate(self.config.ks):
                for method in self.config.methods:
                    e = self.errors[method][i, j]
                    ok = ~np.isnan(e[:, 0])
                    rot = float(np.rad2deg(np.median(e[ok, 0]))) if ok.any() else float("nan")
                    pos = float(np.median(e[ok, 1])) if ok.any() else float("nan")
                    out.append(
                        {
                            "sigma_az_deg": s,
                            "sigma_el_deg": s * self.config.elevation_ratio,
                            "K": K,
                            "method": method,
                            "median_rot_err_deg": rot,
                            "median_pos_err": pos,
                            "trials": int(e.shape[0]),
                            "failures": int((~ok).sum()),
                        }
                    )
        return out

    def median(self, method: str, sigma_deg: float, K: int, metric: str = "position") -> float:
        i = list(self.config.sigmas_deg).index(sigma_deg)
        j = self.config.ks.index(K)
        e = self.errors[method][i, j, :, 0 if metric == "rotation" else 1]
        return float(np.nanmedian(e))


RESULT_COLUMNS = ("sigma_az_deg", "sigma_el_deg", "K", "method", "median_rot_err_deg", "median_pos_err", "trials", "failures")


def results_csv(result: CampaignResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESULT_COLUMNS)
    for r in result.rows():
        w.writerow(
            [
                f"{r['sigma_az_deg']:g}",
                f"{r['sigma_el_deg']:g}",
                r["K"],
                r["method"],
                f"{r['median_rot_err_deg']:.9e}",
                f"{r['median_pos_err']:.9e}",
                r["trials"],
                r["failures"],
            ]
        )
    return buf.getvalue()


def read_results_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        for k in ("sigma_az_deg", "sigma_el_deg", "median_rot_err_deg", "median_pos_err"):
            r[k] = float(r[k])
        for k in ("K", "trials", "failures"):
            r[k] = int(r[k])
    return rows


def _ml_noise(sig_az: float, sig_el: float, ratio: float) -> NoiseModel:
    # noiseless cells: any positive weights give the same (exact) minimiser
    if sig_az > 0 and sig_el > 0:
        return NoiseModel(sig_az, sig_el)
    return NoiseModel(1e-3, 1e-3 * max(ratio, 1.0))


def run_trial(config: CampaignConfig, trial: int) -> dict[str, np.ndarray]:
    """All ``(sigma, K)`` cells of one trial; ``NaN`` marks a failure."""
    ks = config.ks
    base = generate_scenario(max(ks), seed=np.random.SeedSequence([config.seed, trial]))
    opts = SolverOptions(constraint_set=config.constraint_set)
    out = {m: np.full((len(config.sigmas_deg), len(ks), 2), np.nan) for m in config.methods}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for i, s in enumerate(config.sigmas_deg):
            sig_az = float(np.deg2rad(s))
            sig_el = sig_az * config.elevation_ratio
            for j, K in enumerate(ks):
                scn = base.truncate(K).with_noise(sig_az, sig_el)
                try:
                    rep = solve_sdp_o(scn.measurements(), opts)
                except (DoalocError, np.linalg.LinAlgError, ValueError):
                    continue
                if rep.status != Status.OPTIMAL.value:
                    continue
                if "sdp" in out:
                    e = scn.evaluate(rep.rotation, rep.translation)
                    out["sdp"][i, j] = (e.rotation_error_rad, e.position_error)
                if "sdp+ml" in out:
                    try:
                        ml = refine_report(rep, scn.body_observations(), _ml_noise(sig_az, sig_el, config.elevation_ratio), MleOptions())
                    except (DoalocError, np.linalg.LinAlgError, ValueError):
                        continue
                    e = scn.evaluate(ml.rotation, ml.translation)
                    out["sdp+ml"][i, j] = (e.rotation_error_rad, e.position_error)
    return out


def _trial_job(args):
    return run_trial(*args)


def monte_carlo(config: CampaignConfig, progress=None) -> CampaignResult:
    """Run every trial and collect errors in trial order."""
    jobs = [(config, t) for t in range(config.trials)]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as ex:
            outs = list(ex.map(_trial_job, jobs, chunksize=max(1, len(jobs) // (4 * config.workers))))
    else:
        outs = []
        for job in jobs:
            outs.append(_trial_job(job))
            if progress is not None:
                progress(len(outs), len(jobs))
    errors = {m: np.stack([o[m] for o in outs], axis=2) for m in config.methods}
    return CampaignResult(config, errors)
