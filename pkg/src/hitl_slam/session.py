"""The iterative correction loop: interpret a stroke pair, apply the
explicit correction, heal the chain, jointly re-optimize, evaluate.

A Session owns the evolving graph; every accepted correction appends to
the cumulative factor set, and a pre-iteration snapshot backs undo. Failed
corrections leave the graph untouched and surface their error in the
returned update.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from . import dataset, metrics
from .correction import (CorrectionPlan, apply_rigid, backpropagate,
                         compute_transform, discontinuity_correction,
                         reconcile_odometry)
from .errors import HitlError
from .graph import FactorGraph, validate
from .interpret import InterpretationParams, RawCorrection, interpret
from .optimizer import ResidualWeights, SolverParams, optimize, total_cost

MAX_DISPLAY_POINTS = 50_000


@dataclass(frozen=True)
class SessionConfig:
    interpretation: InterpretationParams = InterpretationParams()
    weights: ResidualWeights = ResidualWeights()
    solver: SolverParams = SolverParams()
    resolution: float = metrics.DEFAULT_RESOLUTION
    max_range: float = float("inf")
    compute_inconsistency: bool = True


@dataclass
class MapUpdate:
    iteration: int
    poses: np.ndarray
    display_points: np.ndarray
    factors: list
    total_cost: float
    inconsistency: float
    timing_ms: float
    error: str = ""
    solver_message: str = ""

    def to_payload(self):
        """JSON-serializable snapshot for the wire."""
        return {
            "type": "map_update",
            "iteration": self.iteration,
            "poses": [[float(v) for v in p] for p in self.poses],
            "points": [[float(v) for v in p] for p in self.display_points],
            "factors": [
                {
                    "mode": h.mode.value,
                    "seg_a": [list(map(float, h.seg_a.p0)), list(map(float, h.seg_a.p1))],
                    "seg_b": [list(map(float, h.seg_b.p0)), list(map(float, h.seg_b.p1))],
                    "poses_a": list(h.poses_a),
                    "poses_b": list(h.poses_b),
                }
                for h in self.factors
            ],
            "total_cost": self.total_cost,
            "inconsistency": self.inconsistency,
            "timing_ms": self.timing_ms,
            "error": self.error,
            "solver_message": self.solver_message,
        }


def _display_points(graph: FactorGraph):
    clouds = [graph.world_points(s.pose_id) for s in graph.scans]
    total = sum(len(c) for c in clouds)
    if total == 0:
        return np.empty((0, 2))
    stride = max(1, -(-total // MAX_DISPLAY_POINTS))  # ceil division
    return np.concatenate([c[::stride] for c in clouds if len(c)])


class Session:
    def __init__(self, graph: FactorGraph, config: SessionConfig = SessionConfig()):
        violations = validate(graph)
        if violations:
            raise HitlError(f"initial graph invalid: {violations}")
        self.graph = graph.copy()
        self.config = config
        self.history = []       # accepted HumanCorrectionFactor, append-only
        self.snapshots = []     # pre-iteration graphs, for undo
        self.metrics_log = []

    @property
    def iteration(self):
        return len(self.history)

    def _update(self, timing_ms, error="", solver_message=""):
        cost = total_cost(self.graph, self.config.weights)
        inconsistency = float("nan")
        if self.config.compute_inconsistency:
            inconsistency = metrics.total_inconsistency(
                self.graph, self.config.resolution, self.config.max_range)
        update = MapUpdate(self.iteration, self.graph.poses.copy(),
                           _display_points(self.graph),
                           list(self.graph.human_factors), cost, inconsistency,
                           timing_ms, error, solver_message)
        return update

    def snapshot_update(self):
        return self._update(0.0)

    def submit_correction(self, raw: RawCorrection) -> MapUpdate:
        t0 = time.perf_counter()
        before = self.graph.copy()
        try:
            graph, factor, solver_message = self._pipeline(raw)
        except HitlError as exc:
            self.graph = before
            return self._update((time.perf_counter() - t0) * 1e3,
                                error=f"{type(exc).__name__}: {exc}")
        self.snapshots.append(before)
        self.history.append(factor)
        self.graph = graph
        update = self._update((time.perf_counter() - t0) * 1e3,
                              solver_message=solver_message)
        self.metrics_log.append(
            {"iteration": update.iteration, "total_cost": update.total_cost,
             "inconsistency": update.inconsistency})
        return update

    def _pipeline(self, raw: RawCorrection):
        cfg = self.config
        factor = interpret(self.graph, raw, cfg.interpretation)

        plan_t = compute_transform(factor.seg_a, factor.seg_b, factor.mode)
        b0 = min(factor.poses_b)
        pre = self.graph
        moved = apply_rigid(pre, CorrectionPlan(plan_t, factor.seg_b.cm, b0))
        # the later stroke's feature rides along with its pose block
        factor.seg_b = factor.seg_b.transformed(plan_t)

        a_end = max(factor.poses_a)
        c = b0 - 1
        if c > a_end:
            C = discontinuity_correction(pre, moved, b0)
            moved, _ = backpropagate(moved, a_end, c, C)

        # corrections are updates to the relative transformations, not just
        # to the estimates; fold them into the chain measurements
        reconcile_odometry(moved, pre.poses)

        moved.human_factors = moved.human_factors + [factor]
        result = optimize(moved, cfg.weights, cfg.solver)
        result.graph.normalize_angles()
        return result.graph, factor, result.message

    def undo_last(self):
        if not self.snapshots:
            raise HitlError("nothing to undo")
        self.graph = self.snapshots.pop()
        self.history.pop()
        if self.metrics_log:
            self.metrics_log.pop()


def replay(graph_path, script_path, out_path, metrics_path=None,
           truth_path=None, config: SessionConfig = SessionConfig()):
    """Headless script replay: apply each correction in order, write the
    final graph and a per-iteration metrics log. Deterministic; timing is
    deliberately omitted from the files."""
    graph, meta = dataset.load_graph(graph_path)
    if "max_range" in meta and config.max_range == float("inf"):
        config = SessionConfig(config.interpretation, config.weights, config.solver,
                               config.resolution, float(meta["max_range"]),
                               config.compute_inconsistency)
    corrections = dataset.load_script(script_path)
    session = Session(graph, config)
    records = []
    initial = session.snapshot_update()
    records.append(("initial", initial))
    for k, raw in enumerate(corrections):
        update = session.submit_correction(raw)
        if update.error:
            update.error = f"record {k}: {update.error}"
        records.append((f"correction {k}", update))
    dataset.save_graph(session.graph, out_path, metadata=meta)
    if metrics_path:
        with open(metrics_path, "w") as fh:
            for label, u in records:
                fh.write(f"{label}: cost {u.total_cost!r} inconsistency {u.inconsistency!r}"
                         + (f" ERROR {u.error}" if u.error else "") + "\n")
            if truth_path:
                selectors, measurements = dataset.load_truth(truth_path)
                try:
                    report = metrics.ground_truth_report(session.graph, selectors, measurements)
                    fh.write(report.summary_line() + "\n")
                except HitlError as exc:
                    fh.write(f"ground truth report unavailable: {exc}\n")
    return session
