"""Command-line runner: GP solves, direct solves, comparisons and checks."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from .config import MODES, ConfigError, RunConfig, config_from_dict, load_config, parse_complex
from .fredholm import NearSingularOperator, gp_solution_at_time
from .hankel import CompanionVariant
from .splitstep import integrate, splitstep_initial_data
from .verify import (
    check_adjoint_pair,
    check_inverse_operator_identity,
    check_kernel_product_rule,
    check_key_identity_i,
    check_pde_residual,
    compare_solvers,
    determinant_monitor,
)

log = logging.getLogger("gpquintic")

EXIT_OK, EXIT_CONFIG, EXIT_SINGULAR = 0, 2, 3


def _time_label(t: float) -> str:
    return f"{t:.6f}".rstrip("0").rstrip(".") if t else "0"


def _block_columns(name: str, arr: np.ndarray) -> dict:
    """``re/im/abs`` columns per block entry (plain names for scalar blocks)."""
    out = {}
    _, a, b = arr.shape
    for i in range(a):
        for j in range(b):
            tag = name if a == b == 1 else f"{name}{i}{j}"
            z = arr[:, i, j]
            out[f"re_{tag}"] = z.real
            out[f"im_{tag}"] = z.imag
            out[f"abs_{tag}"] = np.abs(z)
    return out


class SnapshotWriter:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.out = Path(cfg.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.files: list[str] = []
        self._echo = json.dumps(cfg.to_dict(), sort_keys=True)

    def write(self, t: float, columns: dict) -> None:
        if "csv" not in self.cfg.formats:
            return
        x = self.cfg.grid.x
        cols = {"x": x, **columns}
        name = f"t{_time_label(t)}.csv"
        header = ",".join(cols)
        data = np.column_stack([np.asarray(v, float) for v in cols.values()])
        comments = f"# mode: {self.cfg.mode}\n# t: {t!r}\n# config: {self._echo}\n"
        with open(self.out / name, "w") as fh:
            fh.write(comments)
            fh.write(header + "\n")
            np.savetxt(fh, data, delimiter=",", fmt="%.17g")
        self.files.append(name)


def _det_columns(det: np.ndarray) -> dict:
    return {"det_re": det.real, "det_im": det.imag}


def _gp_solve(cfg: RunConfig, writer: SnapshotWriter) -> dict:
    p0 = cfg.initial_field()
    mins = []
    for t in cfg.checkpoints:
        s = gp_solution_at_time(p0, t, cfg.companion, cfg.coefficients, rule=cfg.quadrature,
                                workers=cfg.workers, solve_companion=False)
        writer.write(t, {**_block_columns("g", s.g), **_det_columns(s.det1)})
        mins.append(float(np.abs(s.det1).min()))
    return {"min_abs_det1": mins}


def _direct_solve(cfg: RunConfig, writer: SnapshotWriter) -> dict:
    p0 = cfg.initial_field()
    state = splitstep_initial_data(p0, cfg.companion, cfg.dt, cfg.coefficients, rule=cfg.quadrature,
                                   workers=cfg.workers)
    nan = np.full(cfg.nx, np.nan)
    norms = []

    def record(st):
        u = st.physical
        writer.write(st.t, {**_block_columns("g", u), "det_re": nan, "det_im": nan})
        norms.append(float(np.sqrt(cfg.grid.dx * np.sum(np.abs(u) ** 2))))

    final = integrate(state, cfg.T, cfg.coefficients, cfg.companion, checkpoints=cfg.checkpoints,
                      nonlinear=cfg.nonlinear, dealias=cfg.dealias, callback=record)
    return {"steps": final.step_count, "l2_norm": norms}


def _compare(cfg: RunConfig, writer: SnapshotWriter) -> dict:
    cmp = compare_solvers(cfg.initial_field(), cfg.T, cfg.coefficients, cfg.companion, dt=cfg.dt,
                          checkpoints=cfg.checkpoints, nonlinear=cfg.nonlinear,
                          dealias=cfg.dealias, workers=cfg.workers)
    for t, gp, ss, det in zip(cmp.times, cmp.gp_profiles, cmp.ss_profiles, cmp.gp_det):
        det = np.full(cfg.nx, np.nan) if det is None else det
        cols = {**_block_columns("g", gp), **_det_columns(det), **_block_columns("g_ss", ss)}
        cols["abs_diff"] = np.sqrt(np.sum(np.abs(gp - ss) ** 2, axis=(1, 2)))
        writer.write(t, cols)
    return cmp.summary()


def _determinants(cfg: RunConfig, writer: SnapshotWriter) -> dict:
    series = determinant_monitor(cfg.initial_field(), cfg.T, cfg.coefficients, cfg.companion,
                                 checkpoints=cfg.checkpoints)
    for t, det in zip(series.times, series.dets):
        writer.write(t, {**_det_columns(det), "det_abs": np.abs(det)})
    return series.summary()


def _verify(cfg: RunConfig, writer: SnapshotWriter) -> dict:
    p0 = cfg.initial_field()
    c, v = cfg.coefficients, cfg.companion
    t = cfg.checkpoints[-1] if cfg.checkpoints else cfg.T
    reports = [check_kernel_product_rule(),
               check_inverse_operator_identity(p0, t, v, c),
               check_key_identity_i(p0, t, v, c),
               check_pde_residual(p0, t, v, c, grids=None, workers=cfg.workers)]
    if v is CompanionVariant.ADJOINT:
        reports.insert(2, check_adjoint_pair(p0, t, c))
    for r in reports:
        log.info(r.line())
    return {"t": t, "reports": [r.summary() for r in reports]}


RUNNERS = {
    "gp-solve": _gp_solve,
    "direct-solve": _direct_solve,
    "compare": _compare,
    "verify-identities": _verify,
    "determinant-monitor": _determinants,
}


def run(cfg: RunConfig) -> dict:
    """Execute ``cfg.mode``; write snapshots, ``summary.json`` and ``timings.json``.

    Wall-clock timings live in their own file so that repeated runs give
    bit-identical snapshot and summary payloads.
    """
    writer = SnapshotWriter(cfg)
    start = time.perf_counter()
    result = RUNNERS[cfg.mode](cfg, writer)
    elapsed = time.perf_counter() - start
    summary = {"mode": cfg.mode, "config": cfg.to_dict(), "checkpoints": cfg.checkpoints,
               "files": writer.files, "results": result}
    if "json" in cfg.formats:
        (writer.out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
        (writer.out / "timings.json").write_text(json.dumps({"wall_seconds": elapsed}) + "\n")
    return summary


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gpquintic",
                                 description="Quintic NLS by Fredholm linearisation, with a split-step reference.")
    ap.add_argument("--config", help="flat YAML config file")
    ap.add_argument("--mode", choices=MODES)
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--mu2", metavar="RE,IM")
    ap.add_argument("--mu3", metavar="RE,IM")
    ap.add_argument("--mu4", metavar="RE,IM")
    ap.add_argument("--variant")
    ap.add_argument("--T", type=float)
    ap.add_argument("--dt", type=float)
    ap.add_argument("--nx", type=int)
    ap.add_argument("--nquad", type=int)
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


_OVERRIDES = ("mode", "out", "mu2", "mu3", "mu4", "variant", "T", "dt", "nx", "nquad")


def config_with_overrides(args: argparse.Namespace) -> RunConfig:
    base = load_config(args.config) if args.config else config_from_dict({})
    raw = base.to_dict()
    for key in _OVERRIDES:
        value = getattr(args, key)
        if value is None:
            continue
        raw[key] = parse_complex(value, key) if key.startswith("mu") else value
    # derived defaults follow their overridden parents
    if args.T is not None and base.checkpoints == [float(t) for t in np.linspace(0.0, base.T, 11)]:
        raw["checkpoints"] = None
    if args.nx is not None and args.nquad is None and base.nquad == base.nx // 2:
        raw["nquad"] = None
    return config_from_dict(raw)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = config_with_overrides(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        summary = run(cfg)
    except NearSingularOperator as err:
        print(f"near-singular operator: {err}", file=sys.stderr)
        return EXIT_SINGULAR
    print(f"{cfg.mode}: wrote {len(summary['files'])} snapshot(s) to {cfg.out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
