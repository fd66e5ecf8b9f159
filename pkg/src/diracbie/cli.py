"""Command-line front end: ``diracbie {verify,convergence,spectrum,assemble,kernel}``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys

import numpy as np

from .config import ConfigError, RunConfig, load_config_file
from .geometry import GeometryError

log = logging.getLogger("diracbie")

THREADS_ENV = "DIRACBIE_THREADS"
OPERATORS_2D = ("R", "Rstar", "C", "sigma_nu", "V", "Lambda", "K_principal",
                "K_boundary_triple", "K_corollary")
OPERATORS_3D = ("R", "Rstar", "C", "sigma_nu", "V", "Lambda", "S", "T", "K_corollary")


def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="flat key = value config file; flags override it")
    p.add_argument("--dim", type=int, choices=(2, 3))
    p.add_argument("--geometry", choices=("circle", "ellipse", "bean"))
    for name in ("r", "a", "b", "e2", "e3"):
        p.add_argument(f"--{name}", type=float, help="shape parameter")
    p.add_argument("--z", type=float)
    p.add_argument("--m", type=float)
    p.add_argument("--c-lambda", dest="c_lambda", type=float)
    p.add_argument("--n", type=int, help="2D truncation N (modes -N..N)")
    p.add_argument("--resolutions", type=int, nargs="+", help="2D sweep of N")
    p.add_argument("--level", type=int, help="sphere grid level")
    p.add_argument("--levels", type=int, nargs="+", help="sphere levels for comparisons")
    p.add_argument("--oversample", type=int)
    p.add_argument("--pv", choices=("polar", "richardson"))
    p.add_argument("--eps-schedule", dest="eps_schedule", type=float, nargs="+")
    p.add_argument("--no-controls", dest="controls", action="store_const", const=False)
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, help=f"BLAS threads (default ${THREADS_ENV})")
    p.add_argument("--out", help="output path")
    p.add_argument("--csv-dir", dest="csv_dir", help="write every report table as CSV here")
    p.add_argument("--svg", help="residual-vs-resolution plot (needs matplotlib)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser():
    common = _common()
    parser = argparse.ArgumentParser(prog="diracbie", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("verify", parents=[common], help="run the identity suite")
    sub.add_parser("convergence", parents=[common], help="residuals versus resolution")
    sub.add_parser("spectrum", parents=[common], help="eigenvalues of symmetrized R + R*")
    a = sub.add_parser("assemble", parents=[common], help="dump an operator matrix")
    a.add_argument("--op", default="C", help="operator name")
    a.add_argument("--format", choices=("npz", "json"), default="npz")
    k = sub.add_parser("kernel", help="evaluate a resolvent kernel")
    k.add_argument("action", choices=("eval",))
    k.add_argument("--q", type=int, choices=(2, 3), default=2)
    k.add_argument("--z", type=float, default=0.0)
    k.add_argument("--m", type=float, default=1.0)
    k.add_argument("--x", type=float, nargs="+", required=True)
    return parser


def _config(args):
    cfg = RunConfig()
    if args.config:
        cfg.update(load_config_file(args.config))
    keys = {f for f in vars(cfg)}
    cfg.update({k: v for k, v in vars(args).items() if k in keys and v is not None})
    if cfg.threads is None and os.environ.get(THREADS_ENV):
        try:
            cfg.threads = int(os.environ[THREADS_ENV])
        except ValueError as exc:
            raise ConfigError(f"{THREADS_ENV} must be an integer") from exc
    return cfg.validate()


def _write(path, text):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _emit(rep, cfg):
    print(rep.summary())
    if cfg.out:
        _write(cfg.out, rep.to_json())
    if cfg.csv_dir:
        os.makedirs(cfg.csv_dir, exist_ok=True)
        for t in rep.tables:
            _write(os.path.join(cfg.csv_dir, f"{t['name']}.csv"), rep.table_csv(t["name"]))
    if cfg.svg:
        _plot(rep, cfg.svg)
    return 0 if rep.passed else 1


def _plot(rep, path):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    table = next((t for t in rep.tables if t["name"] == "identity_residuals"), None)
    if table is None:
        log.warning("no residual table to plot in suite %s", rep.suite)
        return
    rows = table["rows"]
    xkey = "N" if "N" in rows[0] else "level"
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for key in rows[0]:
        if key in (xkey, "nodes"):
            continue
        ax.semilogy([r[xkey] for r in rows], [max(r[key], 1e-17) for r in rows], "o-", label=key)
    ax.set_xlabel(xkey)
    ax.set_ylabel("residual")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def _cmd_verify(cfg):
    from .verify import run_suite_2d, run_suite_3d
    rep = run_suite_2d(cfg) if cfg.dim == 2 else run_suite_3d(cfg)
    return _emit(rep, cfg)


def _cmd_convergence(cfg):
    from .verify import convergence_sweep
    if cfg.dim == 3 and len(cfg.levels) < 3:
        cfg.levels = [1, 2, 3]
    return _emit(convergence_sweep(cfg), cfg)


def _spectrum_rows(cfg):
    if cfg.dim == 3:
        from .verify import _asm3d
        asm = _asm3d(cfg, cfg.level)
        mu = asm.split.mu
    else:
        from .verify import _asm2d
        asm = _asm2d(cfg, cfg.n)
        M = asm.compress(asm.R + asm.Rstar).matrix
        mu = np.linalg.eigvalsh((M + M.conj().T) / 2)
    n = len(mu)
    return [(i, mu[i], n - 1 - i, abs(mu[i] + mu[n - 1 - i])) for i in range(n)]


def _cmd_spectrum(cfg):
    rows = _spectrum_rows(cfg)
    out = open(cfg.out, "w", newline="", encoding="utf-8") if cfg.out else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["index", "mu", "partner", "pairing_residual"])
        for i, mu, j, r in rows:
            w.writerow([i, f"{mu:.15e}", j, f"{r:.3e}"])
    finally:
        if out is not sys.stdout:
            out.close()
    worst = max(r for *_, r in rows)
    print(f"{len(rows)} eigenvalues, max pairing residual {worst:.3e}", file=sys.stderr)
    return 0 if worst <= 1e-4 else 1


def _operator(cfg, name):
    if cfg.dim == 2:
        from . import ops2d
        from .verify import _asm2d
        asm = _asm2d(cfg, cfg.n)
        table = {"R": lambda: asm.R, "Rstar": lambda: asm.Rstar, "C": lambda: asm.C,
                 "sigma_nu": lambda: asm.sigma_nu, "V": lambda: asm.V,
                 "Lambda": lambda: asm.lam(1),
                 "K_principal": lambda: ops2d.remainder_K_decomposition(asm),
                 "K_boundary_triple": lambda: ops2d.remainder_K_boundary_triple(asm),
                 "K_corollary": lambda: ops2d.decomposition_corollary(asm)}
        if name not in table:
            raise ConfigError(f"unknown 2D operator {name!r}; choose from {OPERATORS_2D}")
        op = table[name]()
        if op.basis is asm.work:
            op = asm.compress(op)
        meta = {"basis": "trigonometric", **asm.space.describe(), "channels": op.channels,
                "modes": [-asm.N, asm.N], "geometry": json.loads(asm.curve.to_json())}
    else:
        from . import ops3d
        from .verify import _asm3d
        asm = _asm3d(cfg, cfg.level)
        table = {"R": lambda: asm.R, "Rstar": lambda: asm.Rstar, "C": lambda: asm.C,
                 "sigma_nu": lambda: asm.sigma_nu, "V": lambda: asm.V,
                 "Lambda": lambda: asm.lam(1), "S": lambda: asm.S("S_m1"), "T": lambda: asm.T,
                 "K_corollary": lambda: ops3d.decomposition_corollary3(asm)}
        if name not in table:
            raise ConfigError(f"unknown 3D operator {name!r}; choose from {OPERATORS_3D}")
        op = table[name]()
        meta = {**asm.basis.describe(), "channels": op.channels, "level": cfg.level}
    meta.update({"operator": name, "z": cfg.z, "m": cfg.m, "shape": list(op.shape)})
    return op, meta


def _cmd_assemble(cfg, args):
    op, meta = _operator(cfg, args.op)
    path = cfg.out or f"{args.op}.{args.format}"
    if args.format == "npz":
        np.savez_compressed(path, matrix=op.matrix, meta=json.dumps(meta, sort_keys=True))
    else:
        A = op.matrix
        _write(path, json.dumps({"meta": meta, "real": A.real.tolist(), "imag": A.imag.tolist()}))
    print(f"wrote {args.op} {op.shape[0]}x{op.shape[1]} to {path}")
    return 0


def _cmd_kernel(args):
    from .kernels import SpectralPoint, eval_G2, eval_G3
    if len(args.x) != args.q:
        raise ConfigError(f"--x needs {args.q} coordinates for q={args.q}")
    p = SpectralPoint(args.z, args.m)
    x = np.array(args.x)
    if not np.linalg.norm(x) > 0:
        raise ConfigError("kernel is singular at x = 0")
    G = eval_G2(p, x) if args.q == 2 else eval_G3(p, x)
    print(json.dumps({"q": args.q, "z": args.z, "m": args.m, "x": list(args.x),
                      "real": G.real.tolist(), "imag": G.imag.tolist()}, indent=2))
    return 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "kernel":
            return _cmd_kernel(args)
        cfg = _config(args)
        from threadpoolctl import threadpool_limits
        with threadpool_limits(limits=cfg.threads):
            if args.command == "verify":
                return _cmd_verify(cfg)
            if args.command == "convergence":
                return _cmd_convergence(cfg)
            if args.command == "spectrum":
                return _cmd_spectrum(cfg)
            return _cmd_assemble(cfg, args)
    except (ConfigError, GeometryError) as exc:
        print(f"diracbie: error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        # remaining parameter validation errors from the compute modules
        print(f"diracbie: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
