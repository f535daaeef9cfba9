"""Backend half of the interactive/headless equivalence test.

Reads a submit_correction message (as produced by the browser stroke
machine) from stdin, checks it against the last record of the checked-in
lost-poses correction script, and verifies that submitting either one to
an identically prepared session yields the same map update field for
field (timing excluded). Prints a JSON verdict on stdout.
"""

import json
import sys
from pathlib import Path

import numpy as np

from hitl_slam import dataset
from hitl_slam.server import parse_correction
from hitl_slam.session import Session, SessionConfig

ROOT = Path(__file__).resolve().parents[2]


def fresh_session():
    graph, meta = dataset.load_graph(ROOT / "fixtures" / "lost_poses.graph")
    cfg = SessionConfig(max_range=float(meta["max_range"]))
    return Session(graph, cfg)


def endpoints(raw):
    return np.array([raw.seg_a.p0, raw.seg_a.p1, raw.seg_b.p0, raw.seg_b.p1],
                    dtype=float)


def payload_without_timing(update):
    payload = update.to_payload()
    payload.pop("timing_ms")
    return payload


def main():
    corrections = dataset.load_script(ROOT / "fixtures" / "lost_poses.script")
    reference = corrections[-1]
    ui_raw = parse_correction(json.load(sys.stdin))

    record_match = (ui_raw.mode == reference.mode
                    and np.array_equal(endpoints(ui_raw), endpoints(reference)))

    headless = fresh_session()
    interactive = fresh_session()
    for raw in corrections[:-1]:
        for session in (headless, interactive):
            update = session.submit_correction(raw)
            if update.error:
                raise SystemExit(f"prefix correction failed: {update.error}")
    u_headless = headless.submit_correction(reference)
    u_interactive = interactive.submit_correction(ui_raw)
    update_match = (payload_without_timing(u_headless)
                    == payload_without_timing(u_interactive))

    print(json.dumps({
        "record_match": bool(record_match),
        "update_match": bool(update_match),
        "mode": reference.mode.value,
        "iteration": u_interactive.iteration,
    }))


if __name__ == "__main__":
    main()
