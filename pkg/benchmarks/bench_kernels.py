"""Compare the compiled kernel backend against the pure-numpy fallback.

Runs itself once per backend in a subprocess (backend choice is fixed at
import time via HITL_SLAM_PURE_PYTHON) and prints per-kernel timings plus
an end-to-end map-inconsistency evaluation. Usage:

    python3 benchmarks/bench_kernels.py
"""

import os
import pathlib
import subprocess
import sys
import time

import numpy as np

SRC = pathlib.Path(__file__).resolve().parents[1] / "src"
sys.path.insert(0, str(SRC))


def _time(fn, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def run_backend():
    from hitl_slam import dataset, kernels, metrics

    rng = np.random.default_rng(0)
    pts = rng.uniform(-10, 10, (200_000, 2))
    p0, p1 = np.array([-3.0, 1.0]), np.array([4.0, -2.0])
    t_seg = _time(lambda: kernels.segment_sq_dists(pts, p0, p1))

    origin = np.zeros(2)
    ends = rng.uniform(-8, 8, (2_000, 2))
    t_rays = _time(lambda: kernels.cast_rays(origin, ends, 0.05))

    graph, meta, _, _ = dataset.generate_bent_hallway()
    max_range = float(meta["max_range"])
    t_total = _time(lambda: metrics.total_inconsistency(graph, 0.05, max_range),
                    repeat=2)
    value = metrics.total_inconsistency(graph, 0.05, max_range)

    print(f"{kernels.BACKEND:>6}  segment_sq_dists(200k pts) {1e3 * t_seg:8.2f} ms  "
          f"cast_rays(2k rays) {1e3 * t_rays:8.2f} ms  "
          f"total_inconsistency {t_total:6.2f} s  (value {value:.3f} m^2)")


def main():
    print("backend  kernel timings (best of repeats)", flush=True)
    for pure in ("", "1"):
        env = dict(os.environ, HITL_SLAM_PURE_PYTHON=pure)
        subprocess.run([sys.executable, __file__, "--run"], env=env, check=True)


if __name__ == "__main__":
    if "--run" in sys.argv:
        run_backend()
    else:
        main()
