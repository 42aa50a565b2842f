"""``finslerfill`` command line.

Exit codes: 0 ok, 1 usage or configuration error, 2 a hypothesis of the
requested check failed, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import io as fio

EXIT_OK, EXIT_USAGE, EXIT_HYPOTHESIS, EXIT_NUMERIC = 0, 1, 2, 3
COMMANDS = ("area", "distance", "lowerbound", "verify", "pu", "render")


class UsageError(Exception):
    pass


class HypothesisFailed(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    p = _Parser(prog="finslerfill", description="Filling-area certificates for Finsler discs.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--h", type=float, help="mesh spacing")
    p.add_argument("--R", type=int, help="stencil radius in grid steps")
    p.add_argument("--n", type=int, help="number of boundary samples")
    p.add_argument("--m", type=int, help="sphere polygon size")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--what", choices=("indicatrices", "geodesics", "hulls", "traces"),
                   help="render target (default from the config)")
    return p


def _metric(spec):
    from .metric import metric_from_spec
    return metric_from_spec(spec)


def _mesh(metric, cfg):
    from .mesh import build_mesh
    return build_mesh(metric, cfg.h, cfg.R)


def cmd_area(cfg):
    from .area import busemann_area, ht_area
    metric = _metric(cfg.metric)
    ht = ht_area(metric, cfg.h if cfg.R == 3 else _mesh(metric, cfg), m=cfg.m)
    rep = {"metric": cfg.metric, "mesh": {"h": cfg.h, "R": cfg.R}, "m": cfg.m,
           "ht_area": ht.value, "ht_error": ht.error}
    if metric.reversible:
        b = busemann_area(metric, cfg.h if cfg.R == 3 else _mesh(metric, cfg), m=cfg.m)
        rep["busemann_area"] = b.value
        rep["busemann_error"] = b.error
    rep["tool_version"] = fio.TOOL_VERSION
    rep["config_hash"] = cfg.config_hash
    rep["config"] = cfg.to_dict()
    fio.write_json(os.path.join(cfg.out, "area.json"), rep)
    return rep


def cmd_distance(cfg):
    from .distance import boundary_distance_matrix, triangle_violation
    metric = _metric(cfg.metric)
    mesh = _mesh(metric, cfg)
    if cfg.n < 3:
        raise UsageError("distance needs n >= 3")
    bd, ring = boundary_distance_matrix(mesh, cfg.n)
    ang = mesh.geometry.boundary_angles[ring]
    fio.write_matrix(os.path.join(cfg.out, "distance_matrix.csv"), bd, ang)
    rep = {"n": cfg.n, "mesh": {"h": cfg.h, "R": cfg.R}, "triangle_violation": triangle_violation(bd),
           "asymmetry": float(np.max(np.abs(bd - bd.T))), "tool_version": fio.TOOL_VERSION,
           "config_hash": cfg.config_hash, "config": cfg.to_dict()}
    fio.write_json(os.path.join(cfg.out, "distance.json"), rep)
    return rep


def cmd_lowerbound(cfg):
    from .certificates import lower_bound
    metric = _metric(cfg.metric)
    mesh = _mesh(metric, cfg)
    sched = cfg.schedule or sorted({k for k in (4, 8, 16, 32, 64) if k < cfg.n} | {cfg.n})
    res = lower_bound(metric, mesh, sched)
    fio.write_csv(os.path.join(cfg.out, "convergence.csv"),
                  ["n", "I_interior", "I_boundary", "excluded_error", "richardson", "error_bar"],
                  [[e.n, e.I_interior, e.I_boundary, e.excluded_error, e.richardson, e.error_bar]
                   for e in res.table])
    doc = fio.write_certificate(os.path.join(cfg.out, "certificate.json"), res.certificate, cfg)
    if res.certificate.verdict == "bound-violated":
        raise ArithmeticError("lower bound exceeds the computed area")
    return doc


def cmd_verify(cfg):
    from .certificates import verify_filling
    if cfg.metric0 is None:
        raise fio.ConfigError("verify needs 'metric0' (reference) and 'metric'")
    cert, _, _ = verify_filling(_metric(cfg.metric0), _metric(cfg.metric), cfg.h, cfg.R, cfg.n)
    doc = fio.write_certificate(os.path.join(cfg.out, "certificate.json"), cert, cfg)
    if cert.verdict == "inapplicable":
        raise HypothesisFailed("boundary distances of metric are not at least those of metric0")
    if cert.verdict == "bound-violated":
        raise ArithmeticError("bound exceeds the computed area")
    return doc


def cmd_pu(cfg):
    from .metric import MetricError
    from .pu import Rp2Model, pu_check
    metric = _metric(cfg.metric)
    try:
        model = Rp2Model(metric)
    except MetricError as exc:
        raise HypothesisFailed(str(exc)) from exc
    rep = pu_check(model, _mesh(metric, cfg), m=cfg.m, tol=cfg.tol("pu_ratio"))
    doc = rep.to_dict()
    doc.update({"mesh": {"h": cfg.h, "R": cfg.R}, "tool_version": fio.TOOL_VERSION,
                "config_hash": cfg.config_hash, "config": cfg.to_dict()})
    fio.write_json(os.path.join(cfg.out, "pu_report.json"), doc)
    if not rep.passed:
        raise ArithmeticError(f"Pu ratio {rep.ratio:.6f} below 1 - {rep.tolerance}")
    return doc


def cmd_render(cfg):
    from . import render
    metric = _metric(cfg.metric)
    what = cfg.what
    if what not in render.TARGETS:
        raise UsageError(f"unknown render target {what!r}")
    if what == "indicatrices":
        text = render.indicatrices(metric)
    elif what == "geodesics":
        text = render.geodesics(metric)
    else:
        from .certificates import distance_cyclic_map
        data = distance_cyclic_map(metric, _mesh(metric, cfg), cfg.n)
        text = render.hulls(data) if what == "hulls" else render.traces(data)
    path = os.path.join(cfg.out, f"{what}.svg")
    os.makedirs(cfg.out, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return {"figure": path}


HANDLERS = {"area": cmd_area, "distance": cmd_distance, "lowerbound": cmd_lowerbound,
            "verify": cmd_verify, "pu": cmd_pu, "render": cmd_render}


def main(argv=None):
    from .metric import MetricError
    try:
        args = build_parser().parse_args(argv)
        overrides = {k: getattr(args, k) for k in ("h", "R", "n", "m", "seed", "out", "what")}
        cfg = fio.load_config(args.config, overrides)
        np.random.seed(cfg.seed)
        HANDLERS[args.command](cfg)
    except (UsageError, fio.ConfigError) as exc:
        print(f"finslerfill: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except HypothesisFailed as exc:
        print(f"finslerfill: hypothesis failed: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except (ArithmeticError, RuntimeError, FloatingPointError, MetricError, ValueError) as exc:
        print(f"finslerfill: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
