"""File formats and synthetic dataset generators.

Graph, correction-script and ground-truth files are line-oriented text
with an explicit version header; floats are serialized with full
round-trip precision so fixtures diff cleanly and reload bit-exactly.

Formats (one record per line, whitespace-separated):

  graph (.graph), header "HITLG 1":
    META <key> <value>
    POSE <id> <x> <y> <theta>
    ODOM <i> <j> <dx> <dy> <dtheta> <i11> <i12> <i13> <i22> <i23> <i33>
    SCAN <pose_id> <n> <x1> <y1> ... <xn> <yn>       # sensor frame

  script (.script), header "HITLS 1":
    CORR <mode> <ax0> <ay0> <ax1> <ay1> <bx0> <by0> <bx1> <by1>

  truth (.truth), header "HITLT 1":
    FEATURE <name> <x0> <y0> <x1> <y1> <neighborhood> [<pose_lo> <pose_hi>]
    ANGLE <name1> <name2> <degrees>
    DISTANCE <name1> <name2> <meters>
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError, VersionMismatch
from .geometry import Segment, Transform2D, compose, relative, Pose2D, rot2, wrap_angle
from .graph import CorrectionMode, FactorGraph, RelativePoseFactor, Scan, validate
from .interpret import RawCorrection
from .metrics import FeatureSelector, GroundTruthMeasurement

GRAPH_MAGIC = "HITLG"
SCRIPT_MAGIC = "HITLS"
TRUTH_MAGIC = "HITLT"
VERSION = 1


def _fmt(x):
    return repr(float(x))


class _Reader:
    def __init__(self, path):
        self.path = path
        with open(path, "r") as fh:
            self.text = fh.read()

    def lines(self):
        offset = 0
        for lineno, line in enumerate(self.text.split("\n"), start=1):
            stripped = line.strip()
            if stripped and not stripped.startswith("#"):
                yield lineno, offset, stripped.split()
            offset += len(line) + 1

    def error(self, lineno, offset, msg):
        return ParseError(f"{self.path}:{lineno} (byte offset {offset}): {msg}")


def _check_header(reader, magic):
    it = reader.lines()
    try:
        lineno, offset, fields = next(it)
    except StopIteration:
        raise ParseError(f"{reader.path}: empty file (byte offset 0)") from None
    if len(fields) != 2 or fields[0] != magic:
        raise reader.error(lineno, offset, f"expected header '{magic} {VERSION}'")
    if fields[1] != str(VERSION):
        raise VersionMismatch(f"{reader.path}: unsupported {magic} version {fields[1]}")
    return it


def save_graph(graph: FactorGraph, path, metadata=None):
    with open(path, "w") as fh:
        fh.write(f"{GRAPH_MAGIC} {VERSION}\n")
        for key, value in (metadata or {}).items():
            fh.write(f"META {key} {value}\n")
        for i, (x, y, th) in enumerate(graph.poses):
            fh.write(f"POSE {i} {_fmt(x)} {_fmt(y)} {_fmt(th)}\n")
        for f in graph.odometry:
            m = f.info
            fh.write("ODOM {} {} {} {} {} {} {} {} {} {} {}\n".format(
                f.i, f.j, _fmt(f.z.t[0]), _fmt(f.z.t[1]), _fmt(f.z.rotation),
                _fmt(m[0, 0]), _fmt(m[0, 1]), _fmt(m[0, 2]),
                _fmt(m[1, 1]), _fmt(m[1, 2]), _fmt(m[2, 2])))
        for s in graph.scans:
            coords = " ".join(f"{_fmt(p[0])} {_fmt(p[1])}" for p in s.points)
            fh.write(f"SCAN {s.pose_id} {len(s.points)}{' ' if coords else ''}{coords}\n")


def load_graph(path):
    """Returns (FactorGraph, metadata dict)."""
    reader = _Reader(path)
    poses, odom, scans, meta = {}, [], [], {}
    for lineno, offset, fields in _check_header(reader, GRAPH_MAGIC):
        tag = fields[0]
        try:
            if tag == "META":
                meta[fields[1]] = fields[2]
            elif tag == "POSE":
                poses[int(fields[1])] = [float(v) for v in fields[2:5]]
                if len(fields) != 5:
                    raise ValueError("POSE takes 4 fields")
            elif tag == "ODOM":
                if len(fields) != 12:
                    raise ValueError("ODOM takes 11 fields")
                i, j = int(fields[1]), int(fields[2])
                dx, dy, dth = (float(v) for v in fields[3:6])
                a, b, c, d, e, f = (float(v) for v in fields[6:12])
                info = np.array([[a, b, c], [b, d, e], [c, e, f]])
                odom.append(RelativePoseFactor(i, j, Transform2D(dth, (dx, dy)), info))
            elif tag == "SCAN":
                pid, n = int(fields[1]), int(fields[2])
                vals = [float(v) for v in fields[3:]]
                if len(vals) != 2 * n:
                    raise ValueError(f"SCAN for pose {pid} expects {2 * n} coordinates")
                scans.append(Scan(pid, np.array(vals).reshape(-1, 2)))
            else:
                raise ValueError(f"unknown record tag {tag!r}")
        except (ValueError, IndexError) as exc:
            raise reader.error(lineno, offset, str(exc)) from None
    if not poses:
        raise ParseError(f"{reader.path}: no POSE records")
    n = max(poses) + 1
    if sorted(poses) != list(range(n)):
        raise ParseError(f"{reader.path}: pose ids not contiguous from 0")
    arr = np.array([poses[i] for i in range(n)])
    graph = FactorGraph(arr, scans, odom)
    return graph, meta


def save_script(corrections, path):
    with open(path, "w") as fh:
        fh.write(f"{SCRIPT_MAGIC} {VERSION}\n")
        for c in corrections:
            coords = [c.seg_a.p0, c.seg_a.p1, c.seg_b.p0, c.seg_b.p1]
            flat = " ".join(f"{_fmt(p[0])} {_fmt(p[1])}" for p in coords)
            fh.write(f"CORR {c.mode.value} {flat}\n")


def load_script(path):
    reader = _Reader(path)
    out = []
    modes = {m.value: m for m in CorrectionMode}
    for lineno, offset, fields in _check_header(reader, SCRIPT_MAGIC):
        if fields[0] != "CORR" or len(fields) != 10:
            raise reader.error(lineno, offset,
                               f"record {len(out)}: expected 'CORR <mode> <8 coords>'")
        if fields[1] not in modes:
            raise reader.error(lineno, offset,
                               f"record {len(out)}: unknown mode {fields[1]!r}")
        try:
            v = [float(x) for x in fields[2:]]
        except ValueError as exc:
            raise reader.error(lineno, offset, f"record {len(out)}: {exc}") from None
        out.append(RawCorrection(Segment(v[0:2], v[2:4]), Segment(v[4:6], v[6:8]),
                                 modes[fields[1]]))
    return out


def save_truth(selectors, measurements, path):
    with open(path, "w") as fh:
        fh.write(f"{TRUTH_MAGIC} {VERSION}\n")
        for s in selectors:
            extra = ""
            if s.pose_range is not None:
                extra = f" {s.pose_range[0]} {s.pose_range[1]}"
            fh.write(f"FEATURE {s.name} {_fmt(s.segment.p0[0])} {_fmt(s.segment.p0[1])} "
                     f"{_fmt(s.segment.p1[0])} {_fmt(s.segment.p1[1])} "
                     f"{_fmt(s.neighborhood)}{extra}\n")
        for m in measurements:
            tag = m.kind.upper()
            fh.write(f"{tag} {m.feature_1} {m.feature_2} {_fmt(m.truth)}\n")


def load_truth(path):
    """Returns (selectors, measurements)."""
    reader = _Reader(path)
    selectors, measurements = [], []
    for lineno, offset, fields in _check_header(reader, TRUTH_MAGIC):
        try:
            if fields[0] == "FEATURE":
                name = fields[1]
                v = [float(x) for x in fields[2:7]]
                pr = None
                if len(fields) == 9:
                    pr = (int(fields[7]), int(fields[8]))
                elif len(fields) != 7:
                    raise ValueError("FEATURE takes 6 or 8 fields")
                selectors.append(FeatureSelector(name, Segment(v[0:2], v[2:4]), v[4], pr))
            elif fields[0] in ("ANGLE", "DISTANCE"):
                measurements.append(GroundTruthMeasurement(
                    fields[0].lower(), fields[1], fields[2], float(fields[3])))
            else:
                raise ValueError(f"unknown record tag {fields[0]!r}")
        except (ValueError, IndexError) as exc:
            raise reader.error(lineno, offset, str(exc)) from None
    return selectors, measurements


# ---------------------------------------------------------------------------
# synthetic generators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LostPosesConfig:
    """A loop around a room whose width exceeds the laser range, so poses
    between wall encounters localize on odometry alone."""

    room_width: float = 6.33   # x extent, meters
    room_length: float = 8.0   # y extent, meters
    laser_range: float = 1.5
    standoff: float = 0.7      # path distance from the walls
    step: float = 0.25         # travel per pose, meters
    overlap: float = 2.0       # revisit distance past the start, meters
    trans_noise: float = 0.003  # odometry noise per step, meters
    rot_noise: float = 0.012    # odometry noise per step, radians
    beams: int = 181           # rays over the 180 degree field of view
    seed: int = 9

    def __post_init__(self):
        if self.laser_range >= self.room_width:
            raise ValueError("laser range must be below room width to lose poses")


@dataclass(frozen=True)
class BentHallwayConfig:
    """A straight hallway whose odometry mis-estimates heading at the
    midpoint, bending the estimated map."""

    length: float = 24.0
    width: float = 3.0
    laser_range: float = 4.0
    step: float = 0.25
    bias: float = math.radians(30.0)  # injected heading error at the midpoint
    trans_noise: float = 0.003
    rot_noise: float = 0.001
    beams: int = 181
    seed: int = 1


def _ray_rect(origin, angle, walls):
    """Range to the nearest of a list of ((x0,y0),(x1,y1)) wall segments."""
    dx, dy = math.cos(angle), math.sin(angle)
    best = math.inf
    for (x0, y0), (x1, y1) in walls:
        ex, ey = x1 - x0, y1 - y0
        denom = dx * ey - dy * ex
        if abs(denom) < 1e-12:
            continue
        qx, qy = x0 - origin[0], y0 - origin[1]
        t = (qx * ey - qy * ex) / denom
        s = (qx * dy - qy * dx) / denom
        if t > 1e-9 and -1e-9 <= s <= 1 + 1e-9:
            best = min(best, t)
    return best


def _simulate(true_poses, walls, beams, laser_range, trans_noise, rot_noise, rng,
              info=None):
    """Scans from the true poses; a noisy odometry chain; estimates from
    integrating the noisy chain."""
    scans = []
    for pid, (x, y, th) in enumerate(true_poses):
        pts = []
        for b in range(beams):
            rel = -math.pi / 2 + math.pi * b / (beams - 1)
            rng_dist = _ray_rect((x, y), th + rel, walls)
            if rng_dist <= laser_range:
                pts.append((rng_dist * math.cos(rel), rng_dist * math.sin(rel)))
        scans.append(Scan(pid, np.array(pts).reshape(-1, 2)))

    if info is None:
        info = np.diag([1.0 / trans_noise ** 2, 1.0 / trans_noise ** 2,
                        1.0 / rot_noise ** 2])
    odom = []
    est = [Pose2D(*true_poses[0])]
    for k in range(1, len(true_poses)):
        z_true = relative(Pose2D(*true_poses[k - 1]), Pose2D(*true_poses[k]))
        noise = rng.normal(0.0, [trans_noise, trans_noise, rot_noise])
        z = Transform2D(z_true.rotation + noise[2],
                        (z_true.t[0] + noise[0], z_true.t[1] + noise[1]))
        odom.append(RelativePoseFactor(k - 1, k, z, info))
        est.append(compose(est[-1], z))
    poses = np.array([[p.x, p.y, p.theta] for p in est])
    return FactorGraph(poses, scans, odom)


def _loop_waypoints(cfg: LostPosesConfig):
    """Counter-clockwise rectangular path with in-place corner turns, plus a
    revisit of the first wall. Returns (poses, leg_ranges) where each leg
    range is the inclusive pose-index span of that leg's travel poses."""
    s = cfg.standoff
    w, l = cfg.room_width, cfg.room_length
    corners = [(s, s), (w - s, s), (w - s, l - s), (s, l - s)]
    legs = [(corners[0], corners[1], 0.0),
            (corners[1], corners[2], math.pi / 2),
            (corners[2], corners[3], math.pi),
            (corners[3], corners[0], -math.pi / 2),
            (corners[0], (corners[0][0] + cfg.overlap, corners[0][1]), 0.0)]
    poses = []
    ranges = []
    for li, ((x0, y0), (x1, y1), heading) in enumerate(legs):
        start = len(poses)
        length = math.hypot(x1 - x0, y1 - y0)
        n = max(1, int(round(length / cfg.step)))
        for k in range(n):
            t = k / n
            poses.append((x0 + (x1 - x0) * t, y0 + (y1 - y0) * t, heading))
        poses.append((x1, y1, heading))
        ranges.append((start, len(poses) - 1))
        if li < len(legs) - 1:
            # in-place turn toward the next heading
            for frac in (1.0 / 3.0, 2.0 / 3.0, 1.0):
                poses.append((x1, y1, wrap_angle(heading + frac * math.pi / 2)))
    return poses, ranges


def generate_lost_poses(cfg: LostPosesConfig = LostPosesConfig()):
    """Returns (graph, metadata, selectors, measurements)."""
    rng = np.random.default_rng(cfg.seed)
    w, l = cfg.room_width, cfg.room_length
    walls = [((0, 0), (w, 0)), ((w, 0), (w, l)), ((w, l), (0, l)), ((0, l), (0, 0))]
    true_poses, legs = _loop_waypoints(cfg)
    graph = _simulate(true_poses, walls, cfg.beams, cfg.laser_range,
                      cfg.trans_noise, cfg.rot_noise, rng)
    assert not validate(graph)
    meta = {"max_range": repr(cfg.laser_range), "seed": str(cfg.seed),
            "generator": "lost-poses"}
    nb = 1.0
    selectors = [
        FeatureSelector("south", Segment((1.0, 0.0), (w - 1.0, 0.0)), nb, legs[0]),
        FeatureSelector("east", Segment((w, 1.0), (w, l - 1.0)), nb, legs[1]),
        FeatureSelector("north", Segment((w - 1.0, l), (1.0, l)), nb, legs[2]),
        FeatureSelector("west", Segment((0.0, l - 1.0), (0.0, 1.0)), nb, legs[3]),
    ]
    measurements = [
        GroundTruthMeasurement("distance", "south", "north", l),
        GroundTruthMeasurement("distance", "west", "east", w),
        GroundTruthMeasurement("angle", "south", "north", 0.0),
        GroundTruthMeasurement("angle", "west", "east", 0.0),
        GroundTruthMeasurement("angle", "south", "east", 90.0),
        GroundTruthMeasurement("angle", "south", "west", 90.0),
        GroundTruthMeasurement("angle", "north", "east", 90.0),
        GroundTruthMeasurement("angle", "north", "west", 90.0),
    ]
    return graph, meta, selectors, measurements


def generate_bent_hallway(cfg: BentHallwayConfig = BentHallwayConfig()):
    """Returns (graph, metadata, selectors, measurements).

    Scans come from the true straight hallway; the odometry measurement at
    the midpoint link carries the heading bias, so the estimated chain (and
    the displayed map) kinks there while staying internally consistent.
    """
    rng = np.random.default_rng(cfg.seed)
    half = cfg.width / 2.0
    walls = [((0, -half), (cfg.length, -half)), ((0, half), (cfg.length, half))]
    n = int(round(cfg.length / cfg.step))
    true_poses = [(k * cfg.step, 0.0, 0.0) for k in range(n + 1)]
    graph = _simulate(true_poses, walls, cfg.beams, cfg.laser_range,
                      cfg.trans_noise, cfg.rot_noise, rng)
    mid = len(graph.odometry) // 2
    if abs(cfg.bias) > 0:
        f = graph.odometry[mid]
        graph.odometry[mid] = RelativePoseFactor(
            f.i, f.j, Transform2D(f.z.rotation + cfg.bias, tuple(f.z.t)), f.info)
        # re-integrate the estimate from the biased chain
        est = [Pose2D(*graph.poses[0])]
        for fac in graph.odometry:
            est.append(compose(est[-1], fac.z))
        graph.poses = np.array([[p.x, p.y, p.theta] for p in est])
    assert not validate(graph)
    meta = {"max_range": repr(cfg.laser_range), "seed": str(cfg.seed),
            "generator": "bent-hallway"}
    q = cfg.length / 4.0
    selectors = [
        FeatureSelector("lower_first", Segment((1.0, -half), (q, -half)), 0.45,
                        pose_range=(0, mid)),
        FeatureSelector("upper_first", Segment((1.0, half), (q, half)), 0.45,
                        pose_range=(0, mid)),
        FeatureSelector("lower_second", Segment((cfg.length - q, -half), (cfg.length - 1.0, -half)),
                        0.45, pose_range=(mid, n)),
        FeatureSelector("upper_second", Segment((cfg.length - q, half), (cfg.length - 1.0, half)),
                        0.45, pose_range=(mid, n)),
    ]
    measurements = [
        GroundTruthMeasurement("angle", "lower_first", "lower_second", 0.0),
        GroundTruthMeasurement("angle", "upper_first", "upper_second", 0.0),
        GroundTruthMeasurement("angle", "lower_first", "upper_second", 0.0),
        GroundTruthMeasurement("distance", "lower_first", "upper_first", cfg.width),
        GroundTruthMeasurement("distance", "lower_second", "upper_second", cfg.width),
    ]
    return graph, meta, selectors, measurements
