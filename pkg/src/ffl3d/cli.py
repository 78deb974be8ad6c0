"""Command-line surface: phantoms, projections, simulation, reconstruction."""

import argparse
import sys
from dataclasses import replace

import numpy as np

from . import io
from .fields import maxwell_validate, sample_static_field
from .forward import add_noise, simulate_fast, simulate_oracle
from .grids import make_grid
from .metrics import volume_metrics
from .phantoms import ball_phantom, cone_phantom
from .recon import ProjectionStack, ReconError, stage3_fbp, stage1_bin, stage1_solve, stage1_trace, stage2_deconvolve
from .fields import transform_signal, ffl_trajectory
from .render import render_image, render_slice, save_png
from .solvers import SolverError
from .xray import xray_project


def _floats(text, n):
    parts = [float(s) for s in text.split(",")]
    if len(parts) != n:
        raise ValueError(f"expected {n} comma-separated numbers, got {text!r}")
    return parts


def _ints(text, n):
    parts = [int(s) for s in text.split(",")]
    if len(parts) != n:
        raise ValueError(f"expected {n} comma-separated integers, got {text!r}")
    return parts


def _load_run_config(args):
    if getattr(args, "paper_defaults", False):
        cfg = io.paper_default_config()
    elif getattr(args, "config", None):
        cfg = io.load_config(args.config)
    else:
        raise ValueError("pass --config FILE or --paper-defaults")
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise ValueError(f"--set needs key=value, got {item!r}")
        key, text = item.split("=", 1)
        key = key.strip()
        from dataclasses import fields as dc_fields

        if key not in {f.name for f in dc_fields(io.RunConfig)}:
            raise ValueError(f"--set: unknown config key {key!r}")
        cfg = replace(cfg, **{key: io._parse_config_value(key, text.strip())})
    return cfg


def _add_config_args(p):
    p.add_argument("--config", help="run-config document")
    p.add_argument("--paper-defaults", action="store_true", help="use the published experiment's parameters")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")


def _grid_from_args(args):
    e = _floats(args.extents, 6)
    dims = _ints(args.dims, 3)
    return make_grid(((e[0], e[1]), (e[2], e[3]), (e[4], e[5])), dims)


def cmd_phantom(args):
    grid = _grid_from_args(args)
    if args.kind == "ball":
        vol = ball_phantom(grid, center=_floats(args.center, 3), radius=args.radius)
    elif args.kind == "cone":
        vol = cone_phantom(
            grid,
            apex=_floats(args.apex, 3),
            base_center=_floats(args.base_center, 3),
            base_radius=args.base_radius,
        )
    else:
        raise ValueError(f"unknown phantom kind {args.kind!r}")
    io.write_volume(args.out, vol)
    print(f"wrote {args.out}")
    return 0


def cmd_xray(args):
    vol = io.read_volume(args.volume)
    thetas = [float(s) for s in args.theta.split(",")]
    for i, theta in enumerate(thetas):
        img = xray_project(vol, theta)
        path = args.out if len(thetas) == 1 else f"{args.out_prefix}{i:03d}.ffli"
        if path is None:
            raise ValueError("pass --out for a single angle or --out-prefix for several")
        io.write_image(path, img)
        print(f"wrote {path} (theta={theta:.6g})")
    return 0


def cmd_simulate(args):
    cfg = _load_run_config(args)
    vol = io.read_volume(args.volume)
    geom = cfg.geometry()
    noise = cfg.noise_level if args.noise is None else args.noise
    seed = cfg.seed if args.seed is None else args.seed
    for l, theta in enumerate(geom.angles):
        if args.oracle:
            rec = simulate_oracle(vol, theta, geom)
        else:
            rec = simulate_fast(vol, theta, geom, truncation_radius=cfg.truncation_radius)
        if noise > 0:
            rec = add_noise(rec, noise, seed)
        path = f"{args.out_dir}/signals_{l:03d}.ffls"
        io.write_signals(path, rec)
        print(f"wrote {path} (theta={theta:.6g})")
    return 0


def cmd_reconstruct(args):
    cfg = _load_run_config(args)
    geom = cfg.geometry()
    grid = cfg.grid()
    rcfg = cfg.recon_config()
    records = [io.read_signals(p) for p in args.signals]
    if len(records) != len(geom.angles):
        raise ValueError(f"got {len(records)} signal files for {len(geom.angles)} configured angles")
    plane = grid.plane_grid()
    projections = []
    for l, (theta, rec) in enumerate(zip(geom.angles, records)):
        traj = ffl_trajectory(rec.times, geom)
        s_tilde = transform_signal(rec.values, theta, geom)
        bins = stage1_bin(traj.r, traj.v, s_tilde[:, 1:], plane)
        u = stage1_trace(stage1_solve(bins), inpaint=rcfg.inpaint, recenter=rcfg.recenter)
        if args.dump_intermediates:
            io.write_image(f"{args.out_dir}/trace_{l:03d}.ffli", u)
        if args.stage == "1":
            continue
        try:
            chi, _ = stage2_deconvolve(
                u, geom.h, rcfg.lam_for(l),
                cg_tol=rcfg.cg_tol, cg_max_iter=rcfg.cg_max_iter,
                truncation_radius=rcfg.truncation_radius,
            )
        except SolverError as e:
            raise ReconError(f"stage2 failed at angle {l} (theta={theta:.6g}): {e}") from e
        projections.append(chi)
        if args.dump_intermediates:
            io.write_image(f"{args.out_dir}/projection_{l:03d}.ffli", chi)
    if args.stage in ("1", "2"):
        print(f"stopped after stage {args.stage}")
        return 0
    stack = ProjectionStack(angles=tuple(geom.angles), images=projections)
    vol = stage3_fbp(stack, window=rcfg.window, cutoff=rcfg.cutoff, out_grid=grid)
    io.write_volume(args.out, vol)
    print(f"wrote {args.out}")
    return 0


def cmd_metrics(args):
    a = io.read_volume(args.volume_a)
    b = io.read_volume(args.volume_b)
    m = volume_metrics(a, b, threshold_frac=args.threshold)
    print(f"rmse={m['rmse']:.8g} rel_l2={m['rel_l2']:.8g} dice={m['dice']:.8g}")
    return 0


def cmd_render(args):
    with open(args.file, "rb") as f:
        magic = f.read(6)
    if magic == io.VOLUME_MAGIC:
        vol = io.read_volume(args.file)
        axis = {"x": 0, "y": 1, "z": 2}.get(args.axis, None)
        if axis is None:
            axis = int(args.axis)
        index = vol.grid.dims[axis] // 2 if args.index is None else args.index
        pixels = render_slice(vol, axis, index, global_norm=args.global_norm)
    elif magic == io.IMAGE_MAGIC:
        pixels = render_image(io.read_image(args.file))
    else:
        raise io.FileFormatError(f"{args.file}: not a volume or image container")
    save_png(args.out, pixels)
    print(f"wrote {args.out}")
    return 0


def cmd_validate_field(args):
    field, spacing = sample_static_field(args.theta, args.gradient, n=args.grid_n, extent=args.extent)
    norms = maxwell_validate(field, spacing)
    print(
        f"div_norm={norms['div_norm']:.3e} curl_norm={norms['curl_norm']:.3e} "
        f"jac_asym_norm={norms['jac_asym_norm']:.3e}"
    )
    return 0


def cmd_config(args):
    cfg = _load_run_config(args)
    doc = io.config_document(cfg)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(doc)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(doc)
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="ffl3d", description="3D field-free-line MPI simulation and reconstruction")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("phantom", help="write an analytic phantom volume")
    sp.add_argument("--kind", required=True, choices=["ball", "cone"])
    sp.add_argument("--dims", default="64,64,64")
    sp.add_argument("--extents", default="-1,1,-1,1,-1,1")
    sp.add_argument("--center", default="0,0,0")
    sp.add_argument("--radius", type=float, default=0.5)
    sp.add_argument("--apex", default="0.6,0,0")
    sp.add_argument("--base-center", default="-0.6,0,0")
    sp.add_argument("--base-radius", type=float, default=0.45)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_phantom)

    sp = sub.add_parser("xray", help="X-ray projection of a volume")
    sp.add_argument("volume")
    sp.add_argument("--theta", required=True, help="angle(s) in radians, comma separated")
    sp.add_argument("--out", help="output image (single angle)")
    sp.add_argument("--out-prefix", help="output prefix (several angles)")
    sp.set_defaults(func=cmd_xray)

    sp = sub.add_parser("simulate", help="synthesize per-angle scan signals")
    sp.add_argument("volume")
    _add_config_args(sp)
    sp.add_argument("--oracle", action="store_true", help="direct-integral oracle instead of the fast path")
    sp.add_argument("--noise", type=float, default=None, help="noise level override (fraction)")
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--out-dir", default=".")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("reconstruct", help="three-stage reconstruction from signal files")
    sp.add_argument("signals", nargs="+")
    _add_config_args(sp)
    sp.add_argument("--stage", choices=["1", "2", "3", "all"], default="all")
    sp.add_argument("--dump-intermediates", action="store_true")
    sp.add_argument("--out-dir", default=".")
    sp.add_argument("--out", default="reconstruction.fflv")
    sp.set_defaults(func=cmd_reconstruct)

    sp = sub.add_parser("metrics", help="compare two volumes")
    sp.add_argument("volume_a")
    sp.add_argument("volume_b")
    sp.add_argument("--threshold", type=float, default=0.05)
    sp.set_defaults(func=cmd_metrics)

    sp = sub.add_parser("render", help="render a volume slice or image to PNG")
    sp.add_argument("file")
    sp.add_argument("--axis", default="z")
    sp.add_argument("--index", type=int, default=None)
    sp.add_argument("--global-norm", action="store_true")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_render)

    sp = sub.add_parser("validate-field", help="Maxwell consistency of the static FFL field")
    sp.add_argument("--theta", type=float, required=True)
    sp.add_argument("--gradient", type=float, default=1.0)
    sp.add_argument("--grid-n", type=int, default=9)
    sp.add_argument("--extent", type=float, default=1.0)
    sp.set_defaults(func=cmd_validate_field)

    sp = sub.add_parser("config", help="print or write a run-config document")
    _add_config_args(sp)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_config)

    return p


def cli_main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except (SolverError, ReconError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def main():
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
