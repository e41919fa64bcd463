"""Command-line front end.

Exit codes: 0 success, 1 solver failure, 2 degenerate input, 3 configuration
or I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .diagnostics import detect_unsuitable
from .errors import DoalocError, InfeasibleError, SolverError
from .geometry import GLOBAL, Pose, local_ins
from .io import InputFormatError, read_json, read_measurement_csv, write_json, write_trajectory_csv
from .linear_system import Measurements
from .metrics import mean_separation, reconstruct_positions
from .mle import AttitudeLog, BodyObservations, MleOptions, NoiseModel
from .montecarlo import CAMPAIGN_METHODS, CampaignConfig, ConfigError, monte_carlo, read_results_csv, results_csv
from .pipeline import METHODS, localise
from .procrustes import closest_rotation
from .scenario import DriftParams, Scenario, TrajectoryParams, from_positions, generate_scenario
from .sdp import SolverOptions, Status
from .svgplot import campaign_plots
from .three_agent import TriMeasurements, solve_tri_scenario

EXIT_OK, EXIT_SOLVER, EXIT_DEGENERATE, EXIT_CONFIG = 0, 1, 2, 3

# ML weights when no noise level is given: only the ratio matters
DEFAULT_ML_SIGMA_DEG = (1.0, 4.0)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _triple(text: str) -> tuple[float, float, float]:
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected x,y,z, got {text!r}") from None
    if len(vals) != 3:
        raise argparse.ArgumentTypeError(f"expected three comma-separated numbers, got {text!r}")
    return vals


def _nonneg(text: str) -> float:
    v = float(text)
    if not np.isfinite(v) or v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative number, got {text!r}")
    return v


def _positive(text: str) -> float:
    v = float(text)
    if not np.isfinite(v) or v <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return v


def _global_flags(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--seed", type=int, default=d, help="random seed (default 0)")
    p.add_argument("--out-dir", type=Path, default=d, help="output directory (default: current directory)")
    p.add_argument("--degrees", action="store_true", default=d, help="angle columns of measurement CSV input are in degrees")


def _solver_flags(p):
    g = p.add_argument_group("SDP solver")
    g.add_argument("--sdp-tol", type=_positive, default=1e-12, help="relative duality gap target")
    g.add_argument("--sdp-max-iter", type=int, default=200)
    g.add_argument("--constraint-set", choices=("full", "independent-only"), default="full")
    g.add_argument("--t-scale", type=_positive, default=None, help="translation column scaling (metres)")
    g.add_argument("--t-shift", type=_triple, default=None, metavar="X,Y,Z", help="a-priori translation subtracted before solving")
    g.add_argument("--no-polish", action="store_true", help="skip local refinement of the extracted pose")


def _mle_flags(p):
    g = p.add_argument_group("ML refinement")
    g.add_argument("--mle-max-iter", type=int, default=500)
    g.add_argument("--mle-grad-tol", type=_positive, default=1e-7)
    g.add_argument("--no-mle", action="store_true", help="stop after SDP+O")


def _noise_flags(p):
    g = p.add_argument_group("noise (standard deviations in degrees)")
    g.add_argument("--sigma-az-deg", type=_nonneg, default=None)
    g.add_argument("--sigma-el-deg", type=_nonneg, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="doaloc", description="Relative localisation from direction-of-arrival measurements.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _global_flags(parser, suppress=False)
    common = _Parser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", parents=[common], help="write a simulated scenario JSON")
    g.add_argument("--k", type=int, default=6, help="number of epochs")
    g.add_argument("--agents", type=int, choices=(2, 3), default=2)
    g.add_argument("--planar-a", action="store_true", help="keep the broadcaster at constant altitude")
    g.add_argument("--output", default="scenario.json", help="file name inside --out-dir")
    _noise_flags(g)

    s = sub.add_parser("solve", parents=[common], help="localise B from a measurement CSV or scenario JSON")
    s.add_argument("--input", type=Path, required=True)
    s.add_argument("--method", choices=METHODS, default="sdp+ml")
    s.add_argument("--allow-degenerate", action="store_true", help="solve even when diagnostics flag the geometry")
    _solver_flags(s)
    _mle_flags(s)
    _noise_flags(s)

    t = sub.add_parser("tri-solve", parents=[common], help="localise B and C from a three-agent scenario JSON")
    t.add_argument("--input", type=Path, required=True)
    t.add_argument("--mle", action="store_true", help="alternating ML refinement after SDP+O")
    _solver_flags(t)
    _noise_flags(t)

    m = sub.add_parser("montecarlo", parents=[common], help="run a seeded campaign and plot median errors")
    m.add_argument("--config", type=Path, default=None, help="campaign JSON")
    m.add_argument("--trials", type=int, default=None)
    m.add_argument("--sigma", type=_nonneg, nargs="+", default=None, metavar="DEG", help="azimuth noise levels (degrees)")
    m.add_argument("--k-min", type=int, default=None)
    m.add_argument("--k-max", type=int, default=None)
    m.add_argument("--methods", nargs="+", choices=CAMPAIGN_METHODS, default=None)
    m.add_argument("--constraint-set", choices=("full", "independent-only"), default=None)
    m.add_argument("--workers", type=int, default=None)
    m.add_argument("--plot-from", type=Path, default=None, metavar="CSV", help="only re-render plots from an existing results CSV")

    d = sub.add_parser("diagnose", parents=[common], help="flag unsuitable trajectories")
    d.add_argument("--input", type=Path, required=True)
    return parser


# --------------------------------------------------------------------------
# helpers


def _out_dir(args) -> Path:
    out = args.out_dir or Path(".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _seed(args) -> int:
    return 0 if args.seed is None else args.seed


def _sigma_rad(args) -> tuple[float, float] | None:
    if args.sigma_az_deg is None and args.sigma_el_deg is None:
        return None
    az = args.sigma_az_deg if args.sigma_az_deg is not None else args.sigma_el_deg / 4.0
    el = args.sigma_el_deg if args.sigma_el_deg is not None else 4.0 * args.sigma_az_deg
    return float(np.deg2rad(az)), float(np.deg2rad(el))


def _solver_options(args) -> SolverOptions:
    if args.sdp_max_iter < 1:
        raise ConfigError("--sdp-max-iter must be positive")
    return SolverOptions(
        tol=args.sdp_tol,
        max_iter=args.sdp_max_iter,
        constraint_set=args.constraint_set,
        t_scale=args.t_scale,
        t_shift=args.t_shift,
        polish=not args.no_polish,
    )


def _load_scenario(path: Path) -> Scenario:
    d = read_json(path)
    try:
        return Scenario.from_dict(d)
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise InputFormatError(f"{path}: not a valid scenario ({type(exc).__name__}: {exc})") from exc


def rigid_fit(src: np.ndarray, dst: np.ndarray) -> Pose:
    """Least-squares ``dst ~ R src + t`` over SO(3)."""
    cs, cd = src.mean(axis=0), dst.mean(axis=0)
    R = closest_rotation((dst - cd).T @ (src - cs))
    return Pose(R, cd - R @ cs, GLOBAL, local_ins("B"))


class _Problem:
    """Solver inputs plus optional truth for one two-agent instance."""

    def __init__(self, measurements: Measurements, body: BodyObservations, scenario: Scenario | None, truth_track, noise):
        self.measurements = measurements
        self.body = body
        self.scenario = scenario
        self.truth_track = truth_track
        self.noise = noise


def _two_agent_problem(args) -> _Problem:
    path = args.input
    sigma = _sigma_rad(args)
    if path.suffix.lower() == ".json":
        scn = _load_scenario(path)
        if "C" in scn.tracks:
            raise InputFormatError(f"{path}: three-agent scenario; use tri-solve")
        if sigma is not None:
            scn = scn.redraw_noise(*sigma, _seed(args))
        return _Problem(scn.measurements(), scn.body_observations(), scn, scn.drift("B").apply(scn.global_positions("B")), scn.noise_model)

    tab = read_measurement_csv(path, degrees=bool(args.degrees))
    m = tab.measurements
    if sigma is not None and any(s > 0 for s in sigma):
        if tab.p_b_global is None:
            raise InputFormatError(f"{path}: noise injection needs true observer positions (uB, vB, wB)")
        # replay on the recorded tracks: the drift is the rigid fit of INS to true positions
        pose = rigid_fit(tab.p_b_global, m.p_b)
        scn = from_positions(m.p_a, pose.inverse().apply(m.p_b), pose, sigma=sigma, seed=_seed(args))
        return _Problem(scn.measurements(), scn.body_observations(), scn, tab.p_b_global, scn.noise_model)
    body = BodyObservations(m.p_a, m.azimuth, m.elevation, AttitudeLog.identity(m.p_b))
    noise = NoiseModel(*sigma) if sigma is not None and all(s > 0 for s in sigma) else None
    return _Problem(m, body, None, tab.p_b_global, noise)


def _mle_options(args) -> MleOptions:
    if args.mle_max_iter < 1:
        raise ConfigError("--mle-max-iter must be positive")
    return MleOptions(max_iter=args.mle_max_iter, grad_tol=args.mle_grad_tol)


# --------------------------------------------------------------------------
# commands


def cmd_generate(args) -> int:
    if args.k < 1:
        raise ConfigError("--k must be at least 1")
    sigma = _sigma_rad(args) or (0.0, 0.0)
    scn = generate_scenario(
        args.k,
        seed=_seed(args),
        params=TrajectoryParams(planar_a=args.planar_a),
        drift=DriftParams(),
        sigma=sigma,
        agents=args.agents,
    )
    path = _out_dir(args) / args.output
    scn.save(path)
    print(f"wrote {path} ({args.agents} agents, K={args.k})")
    return EXIT_OK


def _report_degenerate(diag) -> None:
    if diag.ls_rank < 12:
        print(f"RankDeficient: linear system rank {diag.ls_rank} < 12", file=sys.stderr)
    for msg in diag.messages:
        print(f"degenerate input: {msg}", file=sys.stderr)


def cmd_solve(args) -> int:
    prob = _two_agent_problem(args)
    method = "sdp" if (args.no_mle and args.method == "sdp+ml") else args.method
    solver = _solver_options(args)
    diag = detect_unsuitable(prob.measurements)
    if diag.degenerate and not args.allow_degenerate:
        _report_degenerate(diag)
        return EXIT_DEGENERATE
    noise = prob.noise or NoiseModel.from_degrees(*DEFAULT_ML_SIGMA_DEG)

    truth = None
    if prob.scenario is not None:
        scn = prob.scenario

        def truth(R, t):
            e = scn.evaluate(R, t)
            return e.rotation_error_rad, e.position_error

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            rep = localise(prob.measurements, method, prob.body, noise, solver, _mle_options(args), truth)
        except (SolverError, InfeasibleError, np.linalg.LinAlgError) as exc:
            print(f"solver failure: {exc}", file=sys.stderr)
            return EXIT_SOLVER
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)

    if rep.status == "rank_deficient":
        print(f"RankDeficient: {'; '.join(rep.notes)}", file=sys.stderr)
        return EXIT_DEGENERATE
    if method != "ls" and rep.status != Status.OPTIMAL.value:
        print(f"solver failure: status {rep.status}", file=sys.stderr)
        return EXIT_SOLVER

    if prob.scenario is not None:
        e = prob.scenario.evaluate(rep.rotation, rep.translation)
        rep.metrics = {"position_error": e.position_error, "rotation_error_rad": e.rotation_error_rad}
    recon = reconstruct_positions(rep.rotation, rep.translation, prob.measurements.p_b)
    if prob.truth_track is not None and prob.scenario is None:
        offset = float(np.mean(np.linalg.norm(recon - prob.truth_track, axis=1)))
        rep.metrics = {"position_error": offset / mean_separation(prob.truth_track, prob.measurements.p_a)}

    out = _out_dir(args)
    report = rep.to_dict()
    report["diagnostics"] = diag.to_dict()
    report["input"] = str(args.input)
    write_json(out / "report.json", report)
    write_trajectory_csv(out / "trajectory.csv", recon, prob.truth_track)
    summary = f"{rep.method}: status {rep.status}"
    if rep.metrics:
        summary += ", " + ", ".join(f"{k} {v:.4g}" for k, v in sorted(rep.metrics.items()))
    print(summary)
    return EXIT_OK


def cmd_tri_solve(args) -> int:
    scn = _load_scenario(args.input)
    if "C" not in scn.tracks:
        raise InputFormatError(f"{args.input}: two-agent scenario; use solve")
    sigma = _sigma_rad(args)
    if sigma is not None:
        scn = scn.redraw_noise(*sigma, _seed(args))
    diag = detect_unsuitable(TriMeasurements.from_scenario(scn).pair("BA"))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            rep = solve_tri_scenario(scn, _solver_options(args), mle=args.mle)
        except (SolverError, InfeasibleError, np.linalg.LinAlgError) as exc:
            print(f"solver failure: {exc}", file=sys.stderr)
            return EXIT_SOLVER
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    if rep.status != Status.OPTIMAL.value:
        print(f"solver failure: status {rep.status}", file=sys.stderr)
        return EXIT_SOLVER
    out = _out_dir(args)
    report = rep.to_dict()
    report["diagnostics"] = diag.to_dict()
    write_json(out / "tri_report.json", report)
    for agent, name in (("B", "AB"), ("C", "AC")):
        recon = reconstruct_positions(*rep.poses[name], scn.local_positions(agent))
        write_trajectory_csv(out / f"trajectory_{agent}.csv", recon, scn.global_positions(agent))
    print("tri-solve: status " + rep.status + ", " + ", ".join(f"{k} {v:.4g}" for k, v in sorted(rep.metrics.items())))
    return EXIT_OK


def _campaign_config(args) -> CampaignConfig:
    base = CampaignConfig.load(args.config).to_dict() if args.config else CampaignConfig().to_dict()
    if args.seed is not None:
        base["seed"] = args.seed
    if args.trials is not None:
        base["trials"] = args.trials
    if args.sigma is not None:
        base["sigmas_deg"] = args.sigma
    if args.k_min is not None or args.k_max is not None:
        lo, hi = base["k_range"]
        base["k_range"] = [args.k_min if args.k_min is not None else lo, args.k_max if args.k_max is not None else hi]
        base["k_values"] = None
    if args.methods is not None:
        base["methods"] = args.methods
    if args.constraint_set is not None:
        base["constraint_set"] = args.constraint_set
    if args.workers is not None:
        base["workers"] = args.workers
    return CampaignConfig.from_dict(base)


def cmd_montecarlo(args) -> int:
    out = _out_dir(args)
    if args.plot_from is not None:
        try:
            rows = read_results_csv(args.plot_from)
        except (OSError, KeyError, ValueError) as exc:
            raise InputFormatError(f"{args.plot_from}: cannot read results ({exc})") from exc
        for p in campaign_plots(rows, out / "plots"):
            print(f"wrote {p}")
        return EXIT_OK
    cfg = _campaign_config(args)
    result = monte_carlo(cfg)
    csv_path = out / "results.csv"
    csv_path.write_text(results_csv(result))
    (out / "campaign.json").write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")
    rows = read_results_csv(csv_path)
    paths = campaign_plots(rows, out / "plots") + campaign_plots(rows, out / "plots", metric="median_rot_err_deg")
    failures = sum(r["failures"] for r in rows)
    print(f"wrote {csv_path} ({len(rows)} rows, {failures} failed solves) and {len(paths)} plots")
    return EXIT_OK


def cmd_diagnose(args) -> int:
    if args.input.suffix.lower() == ".json":
        scn = _load_scenario(args.input)
        m = scn.measurements()
    else:
        m = read_measurement_csv(args.input, degrees=bool(args.degrees)).measurements
    diag = detect_unsuitable(m)
    write_json(_out_dir(args) / "diagnostics.json", diag.to_dict())
    if diag.degenerate:
        _report_degenerate(diag)
        return EXIT_DEGENERATE
    print(f"no degeneracy detected (linear system rank {diag.ls_rank})")
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "solve": cmd_solve,
    "tri-solve": cmd_tri_solve,
    "montecarlo": cmd_montecarlo,
    "diagnose": cmd_diagnose,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigError, InputFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DoalocError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
