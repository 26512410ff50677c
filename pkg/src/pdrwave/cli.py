"""Command-line entry point: ``pdrwave {design,evaluate,mismatch,baselines,cases}``."""
from __future__ import annotations

import argparse
import json
import sys
import warnings
from collections import Counter
from contextlib import nullcontext
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .beampattern import (
    DesignResult,
    RadarConfig,
    Scenario,
    design_beampattern,
    deviation_db,
    evaluate_pattern,
    quadratic_matrix,
    unconstrained_baseline,
)
from .config import BUNDLED, ConfigError, RunConfig, bundled_text, load_config
from .errors import (
    DegenerateDenominator,
    DimensionMismatch,
    MonotonicityViolation,
    NegativePsi,
    SolverError,
    ZeroModulusElement,
)
from .io import OutputLocked, locked_dir, read_waveform, write_csv, write_json, write_pattern, write_waveform
from .manifold import is_feasible, random_point
from .ortho import (
    MismatchSetup,
    closed_form_peak_loss,
    coherent_set,
    fine_grid,
    isl0,
    lfm_set,
    mismatch_curves,
    orthogonality_penalty,
    waveform_matrix,
)

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3
SOLVER_ERRORS = (SolverError, MonotonicityViolation, DegenerateDenominator, ZeroModulusElement, NegativePsi)


@dataclass
class ResultBundle:
    x: np.ndarray
    pattern_db: np.ndarray
    deviation_db: float
    isl0_db: float
    design: Optional[DesignResult] = None
    config_echo: dict = field(default_factory=dict)

    def summary(self) -> dict:
        out = {
            "version": __version__,
            "deviation_db": self.deviation_db,
            "isl0_db": self.isl0_db,
            "config": self.config_echo,
        }
        if self.design is not None:
            d = self.design
            out.update(
                iterations=d.total_iterations,
                outer_iterations=len(d.outer),
                wall_time_s=d.wall_time_s,
                inner_terminations=dict(Counter(t.termination.value for t in d.inner)),
            )
        return out


def initial_code(cfg: RadarConfig, seed: int) -> np.ndarray:
    return random_point(cfg.L, np.random.default_rng(seed))


def metrics(cfg: RadarConfig, scenario: Scenario, x) -> tuple[np.ndarray, float, float]:
    _, grid_db = evaluate_pattern(cfg, x)
    return grid_db, deviation_db(cfg, scenario, x), isl0(waveform_matrix(x, cfg.M, cfg.N))


def run_design(rc: RunConfig) -> ResultBundle:
    cfg = rc.radar_config()
    scenario = rc.build_scenario()
    penalty = orthogonality_penalty(cfg.M, cfg.N, rc.alpha) if rc.alpha > 0 else None
    res = design_beampattern(
        cfg, scenario, rc.solver.params(), initial_code(cfg, rc.seed),
        zeta=rc.solver.zeta, outer_max=rc.solver.outer_max, penalty=penalty,
    )
    grid_db, dev, isl = metrics(cfg, scenario, res.x)
    return ResultBundle(res.x, grid_db, dev, isl, res, rc.echo())


def write_design(out: Path, rc: RunConfig, bundle: ResultBundle) -> None:
    cfg = rc.radar_config()
    meta = bundle.config_echo
    write_waveform(out / "waveform.csv", bundle.x, cfg.M, cfg.N, meta)
    write_pattern(out / "pattern.csv", cfg.theta_grid, cfg.bin_freqs, bundle.pattern_db, meta)
    d = bundle.design
    inner_rows = (
        (m, k, float(c), float(g))
        for m, t in enumerate(d.inner, 1)
        for k, (c, g) in enumerate(zip(t.costs, t.projected_grad_norms))
    )
    write_csv(out / "inner_trace.csv", ("outer_index", "iteration", "cost", "projected_grad_norm"), inner_rows, meta)
    outer_rows = (
        (r.index, float(r.deviation_db), r.inner_iterations, r.termination.value, float(r.step_norm), float(r.cost))
        for r in d.outer
    )
    write_csv(
        out / "outer_trace.csv",
        ("outer_index", "deviation_db", "inner_iterations", "termination", "step_norm", "cost"),
        outer_rows,
        meta,
    )
    write_json(out / "summary.json", bundle.summary())


def _apply_overrides(rc: RunConfig, args) -> RunConfig:
    upd = {}
    if getattr(args, "seed", None) is not None:
        upd["seed"] = args.seed
    if getattr(args, "alpha", None) is not None:
        upd["alpha"] = args.alpha
    if getattr(args, "output_dir", None) is not None:
        upd["output_dir"] = args.output_dir
    solver = {}
    if getattr(args, "beta", None) is not None:
        solver["beta"] = args.beta
    if getattr(args, "safe_mode", False):
        solver["safe_mode"] = True
    data = rc.model_dump()
    data.update(upd)
    data["solver"].update(solver)
    try:
        return RunConfig.model_validate(data)
    except Exception as exc:
        raise ConfigError(f"invalid override: {exc}") from exc


def cmd_design(args) -> int:
    rc = _apply_overrides(load_config(args.config), args)
    bundle = run_design(rc)
    with locked_dir(rc.output_dir) as out:
        write_design(out, rc, bundle)
    print(json.dumps({k: v for k, v in bundle.summary().items() if k != "config"}, indent=2, default=str))
    return EXIT_OK


def cmd_evaluate(args) -> int:
    rc = _apply_overrides(load_config(args.config), args)
    cfg = rc.radar_config()
    x, M, N = read_waveform(args.waveform)
    if (M, N) != (cfg.M, cfg.N):
        raise DimensionMismatch(f"waveform is {M} x {N} but the config expects {cfg.M} x {cfg.N}")
    if not is_feasible(x):
        warnings.warn("waveform is not unit-modulus; evaluating anyway", stacklevel=1)
    grid_db, dev, isl = metrics(cfg, rc.build_scenario(), x)
    summary = {"version": __version__, "deviation_db": dev, "isl0_db": isl, "waveform": str(args.waveform)}
    with locked_dir(rc.output_dir) as out:
        write_pattern(out / "pattern.csv", cfg.theta_grid, cfg.bin_freqs, grid_db, rc.echo())
        write_json(out / "evaluation.json", summary | {"config": rc.echo()})
    print(json.dumps(summary, indent=2, default=str))
    return EXIT_OK


def _mismatch_waveform(rc: RunConfig, cfg: RadarConfig, setup: MismatchSetup, mode: str, waveform):
    if waveform is not None:
        x, M, N = read_waveform(waveform)
        return waveform_matrix(x, M, N)
    if mode == "lfm":
        return lfm_set(cfg.M, cfg.N)
    if mode == "coherent":
        return coherent_set(setup, cfg.N)
    return waveform_matrix(run_design(rc).x, cfg.M, cfg.N)


def cmd_mismatch(args) -> int:
    rc = _apply_overrides(load_config(args.config), args)
    cfg = rc.radar_config()
    mm = rc.mismatch
    mode = args.mode or mm.mode
    deltas = args.delta if args.delta else mm.delta_deg
    if 0.0 not in deltas:
        deltas = [0.0] + list(deltas)
    setup = MismatchSetup.from_radar(cfg, M_R=mm.M_R, theta_steer=mm.theta_steer_deg, rx_spacing=mm.rx_spacing_m)
    X = _mismatch_waveform(rc, cfg, setup, mode, args.waveform)
    theta = fine_grid()
    curves, losses = mismatch_curves(setup, X, deltas, theta)
    table = []
    for delta in deltas:
        closed = closed_form_peak_loss(setup, mode, delta) if mode in ("lfm", "coherent") else None
        table.append({"delta_deg": float(delta), "peak_loss_db": losses[float(delta)], "closed_form_loss_db": closed})
    with locked_dir(rc.output_dir) as out:
        for delta, g in curves.items():
            with np.errstate(divide="ignore"):
                g_db = np.maximum(10.0 * np.log10(g), -300.0)
            rows = ((float(t), float(v), float(v_db)) for t, v, v_db in zip(theta, g, g_db))
            write_csv(out / f"gtr_{mode}_delta{delta:g}.csv", ("theta_deg", "g_tr", "g_tr_db"), rows, rc.echo())
        write_csv(
            out / f"peak_loss_{mode}.csv",
            ("delta_deg", "peak_loss_db", "closed_form_loss_db"),
            ((r["delta_deg"], r["peak_loss_db"], "" if r["closed_form_loss_db"] is None else float(r["closed_form_loss_db"])) for r in table),
            rc.echo(),
        )
    print(json.dumps({"mode": mode, "peak_loss": table}, indent=2))
    return EXIT_OK


def cmd_baselines(args) -> int:
    rc = _apply_overrides(load_config(args.config), args)
    cfg = rc.radar_config()
    scenario = rc.build_scenario()
    x_u, dev_u = unconstrained_baseline(cfg, scenario, seed=rc.seed, P=quadratic_matrix(cfg))
    x_lfm = lfm_set(cfg.M, cfg.N).T.reshape(-1)
    _, dev_lfm, isl_lfm = metrics(cfg, scenario, x_lfm)
    summary = {
        "version": __version__,
        "scenario": scenario.name,
        "unconstrained_deviation_db": dev_u,
        "lfm_deviation_db": dev_lfm,
        "lfm_isl0_db": isl_lfm,
    }
    with locked_dir(rc.output_dir) as out:
        write_json(out / "baselines.json", summary | {"config": rc.echo()})
    print(json.dumps(summary, indent=2, default=str))
    return EXIT_OK


def cmd_cases(args) -> int:
    names = [args.name] if args.name else BUNDLED
    for name in names:
        if len(names) > 1:
            print(f"// {name}.json")
        print(bundled_text(name), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pdrwave", description=__doc__)
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("--threads", type=int, default=None, help="cap BLAS/OpenMP threads")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, design_flags=True):
        p.add_argument("--config", required=True, help="JSON config path, or case1/case2/case3 for a bundled one")
        p.add_argument("--output-dir", default=None)
        p.add_argument("--seed", type=int, default=None)
        if design_flags:
            p.add_argument("--alpha", type=float, default=None, help="orthogonality penalty weight (0 disables)")
            p.add_argument("--beta", type=float, default=None, help="PDR step size")
            p.add_argument("--safe-mode", action="store_true", help="use the provably monotone step size and regularizer")

    p = sub.add_parser("design", help="optimize a constant-modulus code")
    common(p)
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("evaluate", help="pattern and metrics of an existing code")
    common(p, design_flags=False)
    p.add_argument("--waveform", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("mismatch", help="transmit/receive pattern under steering mismatch")
    common(p)
    p.add_argument("--mode", choices=("pdr", "lfm", "coherent"), default=None)
    p.add_argument("--delta", type=float, nargs="+", default=None, help="steering errors in degrees")
    p.add_argument("--waveform", default=None, help="use this code instead of building one")
    p.set_defaults(func=cmd_mismatch)

    p = sub.add_parser("baselines", help="unconstrained bound and LFM reference")
    common(p, design_flags=False)
    p.set_defaults(func=cmd_baselines)

    p = sub.add_parser("cases", help="print the bundled case configs")
    p.add_argument("name", nargs="?", choices=BUNDLED)
    p.set_defaults(func=cmd_cases)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads is not None:
        from threadpoolctl import threadpool_limits

        limiter = threadpool_limits(limits=args.threads)
    else:
        limiter = nullcontext()
    with limiter:
        try:
            return args.func(args)
        except SOLVER_ERRORS as exc:
            print(f"solver error: {exc}", file=sys.stderr)
            return EXIT_SOLVER
        except (ConfigError, DimensionMismatch, OutputLocked, ValueError, OSError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG

if __name__ == "__main__":
    sys.exit(main())
