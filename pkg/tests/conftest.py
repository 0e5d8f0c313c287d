import json
import os
import pickle

import pytest

REPO = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
FOURCORNER = os.path.join(REPO, "fourcorner.json")


def fourcorner_maps():
    with open(FOURCORNER) as fh:
        spec = json.load(fh)
    return [
        (m["scale"], m.get("rot", 0.0), m["tx"], m["ty"]) for m in spec["maps"]
    ]


def build_pipeline(depth, max_depth=None, grid_cells=256, delta=0.1, seed=0,
                   exhaustion=3):
    """Full pipeline through arc construction on the 4-corner input."""
    from cantorarc.arcs import build_arcs
    from cantorarc.defining import (
        build_exhaustion,
        build_tree,
        compute_constants,
        select_entries_exits,
    )
    from cantorarc.intervals import build_intervals
    from cantorarc.io import expand_ifs

    E = expand_ifs(fourcorner_maps(), depth=depth)
    tree = build_tree(
        E, delta=delta, max_depth=max_depth or depth,
        grid_cells=grid_cells, mode="qs",
    )
    compute_constants(tree)
    select_entries_exits(tree, seed=seed)
    if exhaustion:
        build_exhaustion(tree, levels=exhaustion)
    intervals = build_intervals(tree.n_children_map(), tree.diam_map())
    system = build_arcs(tree, intervals)
    return tree, intervals, system


@pytest.fixture(scope="session")
def pipeline3(tmp_path_factory):
    """Depth-3 pipeline, cached on disk for the whole test run."""
    cache = tmp_path_factory.getbasetemp() / "pipeline3.pkl"
    if cache.exists():
        with open(cache, "rb") as fh:
            return pickle.load(fh)
    out = build_pipeline(depth=3)
    with open(cache, "wb") as fh:
        pickle.dump(out, fh)
    return out


@pytest.fixture(scope="session")
def modified3(pipeline3):
    from cantorarc.modify import run_modifications

    tree, intervals, system = pipeline3
    return run_modifications(tree, system, intervals)


@pytest.fixture(scope="session")
def phi3(pipeline3, modified3):
    from cantorarc.assemble import assemble_phi

    tree, intervals, system = pipeline3
    return assemble_phi(tree, intervals, system, modified3)
