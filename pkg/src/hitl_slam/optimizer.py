"""Joint nonlinear least squares over poses and human-factor segment endpoints.

The residual stack holds, per odometry factor, the information-weighted
SE(2) chain error, and per human correction factor three scalar rows: the
RMS distance of each side's selected observations to its segment, and the
mode-dependent geometric relation between the two segments. Segment
endpoints are free parameters; a soft barrier keeps segments from
collapsing. Damped Gauss-Newton (Levenberg-Marquardt) with sparse normal
equations; the first pose is held fixed as gauge.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .geometry import PERP, Segment, Transform2D, drot2, rot2, wrap_angle
from .graph import CorrectionMode, FactorGraph

_EPS = 1e-12          # smoothing for sqrt/norm residuals at zero
_BARRIER_MIN = 0.1    # segments shorter than this accrue cost
_BARRIER_GAIN = 10.0


@dataclass(frozen=True)
class ResidualWeights:
    k1: float = 2.0  # translation cost scale, 1/m
    k2: float = 1.0  # rotation cost scale

    def __post_init__(self):
        if self.k1 <= 0 or self.k2 <= 0:
            raise ValueError("residual weights must be positive")


@dataclass(frozen=True)
class SolverParams:
    max_iterations: int = 100
    function_tol: float = 1e-10
    param_tol: float = 1e-10
    initial_damping: float = 1e-6


@dataclass
class OptimizeResult:
    graph: FactorGraph
    initial_cost: float
    final_cost: float
    iterations: int
    converged: bool
    message: str = ""


def _segment_frame(e0, e1):
    """Direction, left normal, length and normal derivatives of a segment."""
    d = e1 - e0
    L = math.hypot(d[0], d[1])
    u = d / L
    n = PERP @ u
    dn_de1 = PERP @ (np.eye(2) - np.outer(u, u)) / L
    return u, n, L, -dn_de1, dn_de1


def _sq_dists_batch(p, e0, e1, with_grads):
    """delta(p_k, segment) for a batch of points, plus gradients wrt the
    points (Mx2) and the two endpoints (summed over points, 2-vectors)."""
    u, n, L, dn0, dn1 = _segment_frame(e0, e1)
    rel = p - e0
    s = rel @ u
    mid = (s >= 0.0) & (s <= L)
    lo = s < 0.0
    hi = s > L
    d2 = np.empty(len(p))
    g = rel @ n
    d2[mid] = g[mid] ** 2
    d2[lo] = np.einsum("ij,ij->i", rel[lo], rel[lo])
    rel1 = p - e1
    d2[hi] = np.einsum("ij,ij->i", rel1[hi], rel1[hi])
    if not with_grads:
        return d2, None, None, None
    dp = np.empty_like(p)
    dp[mid] = 2.0 * g[mid, None] * n
    dp[lo] = 2.0 * rel[lo]
    dp[hi] = 2.0 * rel1[hi]
    # endpoint gradients, already summed over the batch
    gm = g[mid]
    relm = rel[mid]
    de0 = 2.0 * ((gm[:, None] * (-n + relm @ dn0)).sum(axis=0)) - 2.0 * rel[lo].sum(axis=0)
    de1 = 2.0 * ((gm[:, None] * (relm @ dn1)).sum(axis=0)) - 2.0 * rel1[hi].sum(axis=0)
    return d2, dp, de0, de1


class Problem:
    """Parameter bookkeeping and residual/Jacobian evaluation for one graph."""

    def __init__(self, graph: FactorGraph, weights: ResidualWeights = ResidualWeights(),
                 fixed_poses=frozenset({0}), optimize_segments=True):
        self.graph = graph.copy()
        self.weights = weights
        self.fixed = set(fixed_poses)
        self.optimize_segments = optimize_segments

        self.free_poses = [i for i in range(graph.num_poses) if i not in self.fixed]
        self.pose_col = {p: 3 * k for k, p in enumerate(self.free_poses)}
        self.seg_base = 3 * len(self.free_poses)
        self.n_params = self.seg_base + (8 * len(graph.human_factors) if optimize_segments else 0)

        # square roots of the odometry information matrices (upper Cholesky)
        self.sqrt_info = [np.linalg.cholesky(f.info).T for f in graph.odometry]

        # sensor-frame points behind each human-factor selection, grouped per side
        self.factor_obs = []
        for h in graph.human_factors:
            sides = []
            for sel in (h.sel_a, h.sel_b):
                pose_ids = np.array([p for p, _ in sel], dtype=np.int64)
                pts = np.array([graph.scan_for(p).points[i] for p, i in sel])
                sides.append((pose_ids, pts))
            self.factor_obs.append(sides)

        self.template_poses = graph.poses.copy()
        self.n_residuals = 3 * len(graph.odometry) + 5 * len(graph.human_factors)

    def _poses_from(self, x):
        poses = self.template_poses.copy()
        for p, c in self.pose_col.items():
            poses[p] = x[c:c + 3]
        return poses

    def _segments_from(self, x, k):
        if self.optimize_segments:
            b = self.seg_base + 8 * k
            return (Segment(x[b:b + 2], x[b + 2:b + 4]),
                    Segment(x[b + 4:b + 6], x[b + 6:b + 8]))
        h = self.graph.human_factors[k]
        return h.seg_a, h.seg_b

    # ---- parameter vector ----

    def pack(self, graph=None):
        g = graph if graph is not None else self.graph
        x = np.empty(self.n_params)
        for p, c in self.pose_col.items():
            x[c:c + 3] = g.poses[p]
        if self.optimize_segments:
            for k, h in enumerate(g.human_factors):
                b = self.seg_base + 8 * k
                x[b:b + 8] = np.concatenate([h.seg_a.p0, h.seg_a.p1, h.seg_b.p0, h.seg_b.p1])
        return x

    def unpack(self, x, graph=None):
        g = (graph if graph is not None else self.graph).copy()
        for p, c in self.pose_col.items():
            g.poses[p] = x[c:c + 3]
        g.normalize_angles()
        if self.optimize_segments:
            new_factors = []
            for k, h in enumerate(g.human_factors):
                b = self.seg_base + 8 * k
                h = type(h)(Segment(x[b:b + 2], x[b + 2:b + 4]),
                            Segment(x[b + 4:b + 6], x[b + 6:b + 8]),
                            h.sel_a, h.sel_b, h.poses_a, h.poses_b, h.mode)
                new_factors.append(h)
            g.human_factors = new_factors
        return g

    # ---- evaluation ----

    def evaluate(self, x, with_jac=True):
        poses = self._poses_from(x)
        r = np.zeros(self.n_residuals)
        rows, cols, vals = [], [], []

        row = 0
        for f, Lu in zip(self.graph.odometry, self.sqrt_info):
            r[row:row + 3], jac = self._odometry(poses, f, Lu, with_jac)
            if with_jac and jac:
                for col, block in jac:
                    for dr in range(3):
                        for dc in range(3):
                            rows.append(row + dr)
                            cols.append(col + dc)
                            vals.append(block[dr, dc])
            row += 3
        for k, h in enumerate(self.graph.human_factors):
            row = self._human(x, poses, k, h, r, row, rows, cols, vals, with_jac)

        if not with_jac:
            return r, None
        J = sp.coo_matrix((vals, (rows, cols)), shape=(self.n_residuals, self.n_params))
        return r, J.tocsr()

    def _odometry(self, poses, f, Lu, with_jac):
        xi, xj = poses[f.i], poses[f.j]
        Ri = rot2(xi[2])
        dt = xj[:2] - xi[:2]
        d = Ri.T @ dt
        Rz = f.z.R
        err = np.empty(3)
        err[:2] = Rz.T @ (d - f.z.t)
        err[2] = wrap_angle(xj[2] - xi[2] - f.z.rotation)
        res = Lu @ err
        if not with_jac:
            return res, None
        # de/dxi = [-Rz^T Ri^T, Rz^T dRi^T/dth dt; 0 0 -1], de/dxj = [Rz^T Ri^T, 0; 0 0 1]
        Ei = np.zeros((3, 3))
        Ei[:2, :2] = -Rz.T @ Ri.T
        Ei[:2, 2] = Rz.T @ (drot2(xi[2]).T @ dt)
        Ei[2, 2] = -1.0
        Ej = np.zeros((3, 3))
        Ej[:2, :2] = Rz.T @ Ri.T
        Ej[2, 2] = 1.0
        jac = []
        if f.i in self.pose_col:
            jac.append((self.pose_col[f.i], Lu @ Ei))
        if f.j in self.pose_col:
            jac.append((self.pose_col[f.j], Lu @ Ej))
        return res, jac

    def _human(self, x, poses, k, h, r, row, rows, cols, vals, with_jac):
        segs = self._segments_from(x, k)
        base = self.seg_base + 8 * k

        def add_seg(row_idx, grads_seg):
            if self.optimize_segments:
                for d in np.nonzero(grads_seg)[0]:
                    rows.append(row_idx)
                    cols.append(base + int(d))
                    vals.append(float(grads_seg[d]))

        # R_a / R_b: RMS point-to-segment distance per side
        for side in range(2):
            seg = segs[side]
            pose_ids, q = self.factor_obs[k][side]
            m = len(q)
            th = poses[pose_ids, 2]
            c, s = np.cos(th), np.sin(th)
            p = np.stack([poses[pose_ids, 0] + c * q[:, 0] - s * q[:, 1],
                          poses[pose_ids, 1] + s * q[:, 0] + c * q[:, 1]], axis=1)
            d2, dp, de0, de1 = _sq_dists_batch(p, seg.p0, seg.p1, with_jac)
            val = math.sqrt(d2.sum() / m + _EPS)
            r[row] = val
            if with_jac:
                scale = 1.0 / (2.0 * val * m)
                # d p / d theta = dR(theta) q, folded into a per-point 3-grad
                dth = dp[:, 0] * (-s * q[:, 0] - c * q[:, 1]) \
                    + dp[:, 1] * (c * q[:, 0] - s * q[:, 1])
                uniq, inv = np.unique(pose_ids, return_inverse=True)
                acc = np.zeros((len(uniq), 3))
                np.add.at(acc, inv, np.stack([dp[:, 0], dp[:, 1], dth], axis=1))
                for pid, grad in zip(uniq, acc):
                    col = self.pose_col.get(int(pid))
                    if col is not None:
                        for d in range(3):
                            rows.append(row)
                            cols.append(col + d)
                            vals.append(scale * grad[d])
                dseg = np.zeros(8)
                off = 4 * side
                dseg[off:off + 2] = de0
                dseg[off + 2:off + 4] = de1
                add_seg(row, dseg * scale)
            row += 1

        # R_p: geometric relation between the two segments
        rp, dseg = self._relation(h.mode, segs[0], segs[1], with_jac)
        r[row] = rp
        if with_jac:
            add_seg(row, dseg)
        row += 1

        # soft anti-collapse barrier per segment
        for side in range(2):
            seg = segs[side]
            L = seg.length
            if L < _BARRIER_MIN:
                r[row] = _BARRIER_GAIN * (_BARRIER_MIN - L)
                if with_jac:
                    u = seg.direction
                    dseg = np.zeros(8)
                    off = 4 * side
                    dseg[off:off + 2] = _BARRIER_GAIN * u
                    dseg[off + 2:off + 4] = -_BARRIER_GAIN * u
                    add_seg(row, dseg)
            row += 1
        return row

    def _relation(self, mode, sa, sb, with_jac):
        """Mode residual between segments and its gradient wrt the 8 endpoint
        coordinates (a0, a1, b0, b1)."""
        k1, k2 = self.weights.k1, self.weights.k2
        _, na, _, dna0, dna1 = _segment_frame(sa.p0, sa.p1)
        _, nb, _, dnb0, dnb1 = _segment_frame(sb.p0, sb.p1)
        sign = 1.0
        if mode is not CorrectionMode.PERPENDICULARITY and na @ nb < 0.0:
            sign = -1.0
        dot = na @ (sign * nb)
        ddot = np.concatenate([
            (sign * nb) @ dna0, (sign * nb) @ dna1,
            sign * (na @ dnb0), sign * (na @ dnb1),
        ])
        dcm = sb.cm - sa.cm
        grad = np.zeros(8)
        if mode is CorrectionMode.COLOCATION:
            q = math.sqrt(dcm @ dcm + _EPS)
            val = k1 * q + k2 * (1.0 - dot)
            if with_jac:
                dq = dcm / q
                grad[:2] = grad[2:4] = -0.5 * k1 * dq
                grad[4:6] = grad[6:8] = 0.5 * k1 * dq
                grad -= k2 * ddot
        elif mode is CorrectionMode.COLLINEARITY:
            v = dcm @ na
            q = math.sqrt(v * v + _EPS)
            val = k1 * q + k2 * (1.0 - dot)
            if with_jac:
                dv = np.concatenate([
                    -0.5 * na + dna0.T @ dcm, -0.5 * na + dna1.T @ dcm,
                    0.5 * na, 0.5 * na,
                ])
                grad = k1 * (v / q) * dv - k2 * ddot
        elif mode is CorrectionMode.PARALLELISM:
            val = k2 * (1.0 - dot)
            if with_jac:
                grad = -k2 * ddot
        else:  # perpendicularity: cost pushes the raw dot product to zero
            raw = na @ nb
            val = k2 * raw
            if with_jac:
                grad = k2 * np.concatenate([
                    nb @ dna0, nb @ dna1, na @ dnb0, na @ dnb1])
        return val, grad


def residual_relative(factor, pose_i, pose_j):
    """Information-weighted SE(2) chain error for one odometry factor."""
    Lu = np.linalg.cholesky(factor.info).T
    Ri = rot2(pose_i.theta)
    d = Ri.T @ (pose_j.xy - pose_i.xy)
    err = np.empty(3)
    err[:2] = factor.z.R.T @ (d - factor.z.t)
    err[2] = wrap_angle(pose_j.theta - pose_i.theta - factor.z.rotation)
    return Lu @ err


def residual_human(h, graph: FactorGraph, weights: ResidualWeights = ResidualWeights()):
    """(R_a, R_b, R_p) for one human factor at the graph's current estimate."""
    prob = Problem(graph_with_only(graph, h), weights)
    r, _ = prob.evaluate(prob.pack(), with_jac=False)
    n_odo = 3 * len(prob.graph.odometry)
    return tuple(r[n_odo:n_odo + 3])


def graph_with_only(graph: FactorGraph, h) -> FactorGraph:
    g = graph.copy()
    g.human_factors = [h]
    return g


def total_cost(graph: FactorGraph, weights: ResidualWeights = ResidualWeights()) -> float:
    prob = Problem(graph, weights)
    r, _ = prob.evaluate(prob.pack(), with_jac=False)
    return float(r @ r)


def optimize(graph: FactorGraph, weights: ResidualWeights = ResidualWeights(),
             solver: SolverParams = SolverParams(), fixed_poses=frozenset({0}),
             optimize_segments=True) -> OptimizeResult:
    """Levenberg-Marquardt over poses and segment endpoints.

    Total cost is non-increasing across accepted steps; the first pose (or
    any caller-specified set) is held fixed as gauge. Always returns the
    best iterate; `converged` is False if the iteration budget ran out.
    """
    prob = Problem(graph, weights, fixed_poses, optimize_segments)
    x = prob.pack()
    r, J = prob.evaluate(x)
    cost = float(r @ r)
    initial_cost = cost
    lam = solver.initial_damping
    converged = False
    message = "converged"
    it = 0
    for it in range(1, solver.max_iterations + 1):
        H = (J.T @ J).tocsc()
        grad = J.T @ r
        # isotropic damping, scaled by the mean curvature: the trace is
        # invariant under rigid gauge motion, so damped steps (and therefore
        # the whole iteration) commute exactly with a rigid transform of the
        # initial estimate; per-element diagonal scaling would not
        scale = max(float(H.diagonal().mean()), 1e-12)
        accepted = False
        for _ in range(40):
            damped = H + (lam * scale) * sp.identity(H.shape[0], format="csc")
            try:
                dx = spla.spsolve(damped, -grad)
            except RuntimeError:
                lam *= 10.0
                continue
            x_new = x + dx
            r_new, _ = prob.evaluate(x_new, with_jac=False)
            cost_new = float(r_new @ r_new)
            if cost_new <= cost:
                accepted = True
                break
            lam *= 4.0
        if not accepted:
            converged = True
            message = "no descent direction (local minimum)"
            break
        step = float(np.max(np.abs(dx))) if len(dx) else 0.0
        decrease = cost - cost_new
        x = x_new
        r, J = prob.evaluate(x)
        cost = cost_new
        lam = max(lam / 4.0, 1e-12)
        if step < solver.param_tol or decrease < solver.function_tol * max(cost, 1e-12):
            converged = True
            break
    if not converged:
        message = f"iteration budget exhausted at cost {cost:.6g}"
    return OptimizeResult(prob.unpack(x), initial_cost, cost, it, converged, message)


def information_matrix(graph: FactorGraph, weights: ResidualWeights = ResidualWeights(),
                       marginalize_segments=True):
    """J^T J at the current estimate, over all pose parameters (3N x 3N).

    Segment-endpoint parameters are eliminated by Schur complement so the
    correlations a human factor induces between its two pose ranges appear
    as off-diagonal pose blocks. With marginalize_segments=False the full
    (3N + 8H)-parameter matrix is returned instead.
    """
    prob = Problem(graph, weights, fixed_poses=frozenset())
    r, J = prob.evaluate(prob.pack())
    H = (J.T @ J).tocsr()
    np_pose = prob.seg_base
    if not marginalize_segments or prob.n_params == np_pose:
        return H if not marginalize_segments else H[:np_pose, :np_pose].tocsr()
    Hpp = H[:np_pose, :np_pose]
    Hpe = H[:np_pose, np_pose:].toarray()
    Hee = H[np_pose:, np_pose:].toarray() + 1e-12 * np.eye(prob.n_params - np_pose)
    schur = Hpp - sp.csr_matrix(Hpe @ np.linalg.solve(Hee, Hpe.T))
    schur.eliminate_zeros()
    return schur.tocsr()


def pose_block_pattern(H, num_poses):
    """Boolean (N, N) matrix: True where the 3x3 pose block is nonzero.

    Structural test: any stored nonzero counts, however small — couplings
    induced through segment marginalization can be orders of magnitude
    weaker than odometry blocks yet are exactly zero where no factor links
    the poses."""
    dense = H.toarray() != 0.0
    out = np.zeros((num_poses, num_poses), dtype=bool)
    for i in range(num_poses):
        for j in range(num_poses):
            out[i, j] = dense[3 * i:3 * i + 3, 3 * j:3 * j + 3].any()
    return out


def save_pattern_pgm(H, path):
    """Portable grayscale dump of |H| (log-scaled) for quick inspection."""
    dense = np.abs(H.toarray())
    with np.errstate(divide="ignore"):
        img = np.where(dense > 0, np.log10(dense / (dense.max() or 1.0) + 1e-12), -12.0)
    img = (255 * (img - img.min()) / (img.max() - img.min() + 1e-30)).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (img.shape[1], img.shape[0]))
        fh.write(img.tobytes())


def save_triplets(H, path):
    coo = H.tocoo()
    with open(path, "w") as fh:
        fh.write(f"# rows cols nnz: {coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
        for i, j, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{i} {j} {v!r}\n")
