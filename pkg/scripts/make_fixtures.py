"""Regenerate the checked-in correction-script fixtures.

Strokes are authored the way a user would draw them: against the map as
currently displayed, one correction at a time. Each stroke is a segment
fitted to the world points of a chosen pose span (optionally one side of
the hallway), then the correction is applied before the next stroke is
computed. Run from the repo root:

    python3 scripts/make_fixtures.py
"""

import pathlib
import sys

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from hitl_slam import dataset
from hitl_slam.geometry import Segment, fit_segment
from hitl_slam.graph import CorrectionMode
from hitl_slam.interpret import RawCorrection
from hitl_slam.session import Session, SessionConfig

FIXTURES = pathlib.Path(__file__).resolve().parents[1] / "fixtures"


def span_points(graph, lo, hi, side=None, xwin=None):
    pts = []
    for pid in range(lo, hi + 1):
        scan = graph.scan_for(pid)
        if scan is None or not len(scan.points):
            continue
        world = graph.world_points(pid)
        if side == "lower":
            world = world[scan.points[:, 1] < -0.3]
        elif side == "upper":
            world = world[scan.points[:, 1] > 0.3]
        if xwin is not None:
            world = world[(world[:, 0] >= xwin[0]) & (world[:, 0] <= xwin[1])]
        pts.append(world)
    return np.concatenate(pts) if pts else np.empty((0, 2))


def stroke(graph, lo, hi, side=None, xwin=None, shrink=0.1):
    pts = span_points(graph, lo, hi, side, xwin)
    seg = fit_segment(pts, np.ones(len(pts)))
    d = seg.p1 - seg.p0
    return Segment(seg.p0 + shrink * d, seg.p1 - shrink * d)


def author(graph, max_range, plan):
    session = Session(graph, SessionConfig(max_range=max_range,
                                           compute_inconsistency=False))
    raws = []
    for mode, a_span, b_span in plan:
        raw = RawCorrection(stroke(session.graph, *a_span),
                            stroke(session.graph, *b_span), mode)
        update = session.submit_correction(raw)
        status = update.error or f"cost {update.total_cost:.4g}"
        print(f"  {mode.value}: {status}")
        if update.error:
            raise SystemExit(f"fixture authoring failed: {update.error}")
        raws.append(raw)
    return raws, session


def lost_poses():
    print("lost-poses fixture")
    graph, meta, selectors, measurements = dataset.generate_lost_poses()
    dataset.save_graph(graph, FIXTURES / "lost_poses.graph", meta)
    dataset.save_truth(selectors, measurements, FIXTURES / "lost_poses.truth")
    legs = [selectors[i].pose_range for i in range(4)]
    n = graph.num_poses
    overlap = (legs[3][1] + 4, n - 1)  # revisit leg after the last turn

    def inner(span, lo_frac, hi_frac):
        lo, hi = span
        size = hi - lo
        return (lo + int(lo_frac * size), lo + int(hi_frac * size))

    plan = [
        (CorrectionMode.PERPENDICULARITY, inner(legs[0], 0.1, 0.9), inner(legs[1], 0.1, 0.9)),
        (CorrectionMode.PERPENDICULARITY, inner(legs[1], 0.1, 0.9), inner(legs[2], 0.1, 0.9)),
        (CorrectionMode.PERPENDICULARITY, inner(legs[2], 0.1, 0.9), inner(legs[3], 0.1, 0.9)),
        (CorrectionMode.COLLINEARITY, inner(legs[0], 0.0, 0.9), inner(overlap, 0.1, 1.0)),
        # same physical patch of the revisited wall, seen in both passes
        (CorrectionMode.COLOCATION, inner(legs[0], 0.0, 0.6) + (None, (1.0, 2.6)),
         inner(overlap, 0.1, 1.0) + (None, (1.0, 2.6))),
    ]
    raws, session = author(graph, 1.5, plan)
    dataset.save_script(raws, FIXTURES / "lost_poses.script")
    return session


def bent_hallway():
    print("bent-hallway fixture")
    graph, meta, selectors, measurements = dataset.generate_bent_hallway()
    dataset.save_graph(graph, FIXTURES / "bent_hallway.graph", meta)
    dataset.save_truth(selectors, measurements, FIXTURES / "bent_hallway.truth")
    n = graph.num_poses
    mid = n // 2
    first = (2, mid - 4)
    second = (mid + 4, n - 3)
    plan = [
        (CorrectionMode.COLLINEARITY, first + ("lower",), second + ("lower",)),
        (CorrectionMode.COLLINEARITY, first + ("upper",), second + ("upper",)),
    ]
    raws, session = author(graph, 4.0, plan)
    dataset.save_script(raws, FIXTURES / "bent_hallway.script")
    return session


if __name__ == "__main__":
    FIXTURES.mkdir(exist_ok=True)
    lost_poses()
    bent_hallway()
    print("fixtures written to", FIXTURES)
