"""Batch front-end: configuration, pipeline orchestration, artifact emission.

Stages run in dependency order and each one that runs writes its artifact,
so re-running a later stage over unchanged upstream inputs reproduces
byte-identical files.  Exit codes: 0 all checks passed, 1 a verification
flag failed or a stage errored, 2 usage or I/O trouble.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from typing import List

log = logging.getLogger("cantorarc")

STAGES = (
    "analyze",
    "decompose",
    "intervals",
    "arcs",
    "modify",
    "assemble",
    "verify",
    "render",
)


@dataclass
class RunConfig:
    input: str
    mode: str = "qs"
    depth: int = 3
    delta: float = 0.1
    grid_cells: int = 256
    seed: int = 0
    out_dir: str = "."
    stages: List[str] = field(default_factory=lambda: list(STAGES))

    def validate(self):
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        if not 0.0 < self.delta < 0.5:
            raise ValueError("delta must lie in (0, 0.5)")
        if self.grid_cells < 64:
            raise ValueError("grid_cells must be >= 64")
        if self.mode not in ("qs", "topological"):
            raise ValueError(f"unknown mode {self.mode!r}")
        bad = [s for s in self.stages if s not in STAGES]
        if bad:
            raise ValueError(f"unknown stages {bad}; choose from {STAGES}")


def _stage_closure(requested: List[str]) -> List[str]:
    """Requested stages plus everything they depend on, in pipeline order."""
    deepest = max(STAGES.index(s) for s in requested)
    return list(STAGES[: deepest + 1])


def run(config: RunConfig) -> int:
    from cantorarc import io as cio
    from cantorarc.arcs import arcs_to_json, build_arcs, verify_pairwise_disjoint
    from cantorarc.assemble import assemble_phi, injectivity_gap, phi_to_json
    from cantorarc.defining import (
        build_exhaustion,
        build_tree,
        compute_constants,
        select_entries_exits,
        tree_to_json,
    )
    from cantorarc.errors import CantorArcError, NoPath
    from cantorarc.geometry import uniform_disconnectedness
    from cantorarc.intervals import build_intervals, intervals_to_json
    from cantorarc.modify import run_modifications
    from cantorarc.verify import build_report, report_to_json

    config.validate()
    if not os.path.isfile(config.input):
        log.error("input file not found: %s", config.input)
        return 2
    os.makedirs(config.out_dir, exist_ok=True)
    out = lambda name: os.path.join(config.out_dir, name)

    stages = _stage_closure(config.stages)
    log.info("stages: %s", " ".join(stages))
    try:
        E = cio.load_points(config.input)
    except CantorArcError as exc:
        log.error("could not load %s: %s", config.input, exc)
        return 2
    log.info("loaded %d sample points", len(E))

    mode = config.mode
    analysis = {}
    exit_code = 0
    try:
        if "analyze" in stages:
            delta_star, witness = uniform_disconnectedness(E)
            analysis = {
                "delta_star": delta_star,
                "witness": [[witness[0].x, witness[0].y], [witness[1].x, witness[1].y]],
            }
            log.info("chain threshold delta* = %.6g", delta_star)
            if mode == "qs" and delta_star < 2.0 * config.delta:
                log.warning(
                    "sample admits delta-chains near the configured delta "
                    "(delta* = %.3g < 2*%.3g); falling back to topological mode",
                    delta_star,
                    config.delta,
                )
                mode = "topological"
                analysis["mode_fallback"] = "qs -> topological"
        if stages == ["analyze"]:
            cio.write_json(out("report.json"), {"analysis": analysis, "mode": mode})
            return 0

        tree = build_tree(
            E, delta=config.delta, max_depth=config.depth,
            grid_cells=config.grid_cells, mode=mode,
        )
        compute_constants(tree)
        select_entries_exits(tree, seed=config.seed)
        build_exhaustion(tree, levels=3)
        log.info(
            "tree: %d nodes, xi = %.4f", len(tree.words()), tree.xi_measured
        )
        if "decompose" in stages:
            cio.write_json(out("tree.json"), tree_to_json(tree))
        if "intervals" not in stages:
            return exit_code

        intervals = build_intervals(tree.n_children_map(), tree.diam_map())
        cio.write_json(out("intervals.json"), intervals_to_json(intervals))
        if "arcs" not in stages:
            return exit_code

        system = build_arcs(tree, intervals)
        log.info(
            "arcs: %d pieces, beta* = %.3g, eta = %.3g, min separation %.3g",
            len(system.pieces), system.beta_star, system.eta_measured,
            verify_pairwise_disjoint(system),
        )
        if "modify" not in stages:
            return exit_code

        mods = run_modifications(tree, system, intervals)
        log.info(
            "modify: %d connectors, theta = %.3g, kappa_min = %.3g",
            len(mods.connectors), mods.theta, min(mods.kappa.values()),
        )
        if "assemble" not in stages:
            return exit_code

        phi = assemble_phi(tree, intervals, system, mods)
        cio.write_json(out("curve.json"), phi_to_json(phi))
        log.info(
            "assemble: %d vertices, %d residual blocks, injectivity gap %.3g",
            len(phi.curve.vertices), len(phi.limit_marks),
            injectivity_gap(phi, seed=config.seed),
        )

        if "verify" in stages:
            rep = build_report(tree, intervals, system, mods, phi, seed=config.seed)
            payload = report_to_json(rep)
            payload["analysis"] = analysis
            payload["mode"] = mode
            cio.write_json(out("report.json"), payload)
            write_report_csv(out("report.csv"), payload)
            render_dimension_fit(out("dimension_fit.svg"), tree, phi, rep)
            for name, ok in sorted(rep.pass_flags.items()):
                log.info("check %-22s %s", name, "pass" if ok else "FAIL")
            if not rep.all_passed():
                exit_code = 1

        if "render" in stages:
            render(out("scene.svg"), tree, phi)
            log.info("scene written to %s", out("scene.svg"))
    except NoPath as exc:
        log.error("stage failed: %s (context: %r)", exc, exc.context)
        return 1
    except CantorArcError as exc:
        log.error("stage failed: %s", exc)
        return 1
    return exit_code


def write_report_csv(path: str, payload: dict):
    """Flat key,value table of every scalar in the report."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["key", "value"])
        for k in sorted(payload):
            v = payload[k]
            if isinstance(v, (int, float, str, bool)):
                w.writerow([k, v])
            elif isinstance(v, dict):
                for kk in sorted(v):
                    if isinstance(v[kk], (int, float, str, bool)):
                        w.writerow([f"{k}.{kk}", v[kk]])


def _mpl():
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "cantorarc"
    import matplotlib.pyplot as plt

    return plt


PROV_COLORS = {
    "h": "#1f77b4",
    "Gamma": "#d62728",
    "geodesic": "#2ca02c",
    "limit-block": "#9467bd",
}


def render(path: str, tree, phi):
    """Scene figure: sample points, region outlines per depth, and the
    assembled curve colored by provenance.  Byte-deterministic for
    identical inputs (fixed figure geometry, salted SVG ids, no
    timestamps)."""
    plt = _mpl()
    fig, ax = plt.subplots(figsize=(8, 8))
    x0, y0, x1, y1 = tree.node(tree.ROOT).region.bbox()
    pad = 0.03 * max(x1 - x0, y1 - y0)
    ax.set_xlim(x0 - pad, x1 + pad)
    ax.set_ylim(y0 - pad, y1 + pad)
    ax.set_aspect("equal")
    ax.set_axis_off()

    max_d = max(len(w) for w in tree.words())
    for w in sorted(tree.words()):
        bx0, by0, bx1, by1 = tree.node(w).region.bbox()
        d = len(w)
        ax.add_patch(
            plt.Rectangle(
                (bx0, by0), bx1 - bx0, by1 - by0,
                fill=False, linewidth=0.5,
                edgecolor="0.75", alpha=0.4 + 0.5 * d / max(max_d, 1),
            )
        )
    E = tree.E.coords
    ax.plot(E[:, 0], E[:, 1], ".", color="black", markersize=2, zorder=3)

    curve = phi.curve
    bps = [float(t) for t in curve.breakpoints]
    seen = set()
    for lo, hi, tag in phi.provenance:
        import bisect

        i0 = bisect.bisect_left(bps, float(lo))
        i1 = bisect.bisect_right(bps, float(hi))
        seg = curve.vertices[max(i0 - 1, 0) : i1 + 1]
        ax.plot(
            seg[:, 0], seg[:, 1], "-",
            color=PROV_COLORS[tag], linewidth=0.7, zorder=2,
            label=None if tag in seen else tag,
        )
        seen.add(tag)
    ax.legend(loc="upper right", fontsize=8)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def render_dimension_fit(path: str, tree, phi, rep):
    """Box-count fit figure for the sample set and the assembled curve."""
    import numpy as np

    from cantorarc.verify import arclength_samples, dimension_scales

    plt = _mpl()
    fig, ax = plt.subplots(figsize=(5, 4))
    E = tree.E.coords
    scales = dimension_scales(E)
    for pts, name, dim in (
        (E, "sample set", rep.box_dim_E),
        (arclength_samples(phi.curve, 20000), "curve", rep.box_dim_arc),
    ):
        xs, ys = [], []
        for s in scales:
            xs.append(math.log(1.0 / s))
            ys.append(math.log(len(np.unique(np.floor(pts / s), axis=0))))
        ax.plot(xs, ys, "o-", label=f"{name}: slope {dim:.3f}")
    ax.set_xlabel("log 1/scale")
    ax.set_ylabel("log box count")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="cantorarc",
        description="Construct an arc through a totally disconnected planar sample.",
    )
    p.add_argument("--input", required=True, help="IFS JSON or CSV point file")
    p.add_argument("--mode", default="qs", choices=("qs", "topological"))
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--grid-cells", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--out-dir", default=os.environ.get("CANTORARC_OUT", "."),
        help="artifact directory (env CANTORARC_OUT)",
    )
    p.add_argument(
        "--stages", default=",".join(STAGES),
        help="comma list from: " + ",".join(STAGES),
    )
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(message)s",
        stream=sys.stderr,
    )
    config = RunConfig(
        input=args.input,
        mode=args.mode,
        depth=args.depth,
        delta=args.delta,
        grid_cells=args.grid_cells,
        seed=args.seed,
        out_dir=args.out_dir,
        stages=[s.strip() for s in args.stages.split(",") if s.strip()],
    )
    try:
        config.validate()
    except ValueError as exc:
        log.error("bad configuration: %s", exc)
        return 2
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
