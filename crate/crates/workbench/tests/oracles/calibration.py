"""Oracle for the synthetic calibration set used by the acceptance suite.

Run: python3 calibration.py
Prints each pair's similarity under the fixture embedder and the sweep
(predicted related means similarity >= t; lowest threshold wins ties).
"""
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "../../../core/tests/oracles"))
from fixture_embedder import cos, embed  # noqa: E402

PAIRS = [
    ("reduce heating energy when the home is empty",
     "reduce heating energy when nobody is at home", 1),
    ("store camera video only when motion is detected",
     "store camera video only while motion is detected", 1),
    ("dim the hallway lights at night to save energy",
     "dim hallway lights at night", 1),
    ("send alerts to residents by voice and by text",
     "residents receive alerts by voice", 1),
    ("the hub shall pair with new door sensors",
     "the hub shall report low battery on door sensors", 0),
    ("the thermostat shall show the indoor temperature",
     "the thermostat shall keep a weekly schedule", 0),
    ("encrypt stored passwords",
     "minimize lighting energy", 0),
    ("residents can export their energy report",
     "the installer configures the gateway", 0),
]


def sweep(scored):
    out = []
    for i in range(9):
        t = (50 + 5 * i) / 100
        tp = sum(1 for s, l in scored if s >= t and l)
        fp = sum(1 for s, l in scored if s >= t and not l)
        fn = sum(1 for s, l in scored if s < t and l)
        p = tp / (tp + fp) if tp + fp else 0.0
        r = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * tp / (2 * tp + fp + fn) if 2 * tp + fp + fn else 0.0
        out.append((t, p, r, f1))
    return out


def main():
    scored = []
    for a, b, l in PAIRS:
        s = cos(embed(a), embed(b))
        scored.append((s, l))
        print(f"{s:.6f} {l} | {a} | {b}")
    points = sweep(scored)
    best = points[0]
    for pt in points[1:]:
        if pt[3] > best[3]:
            best = pt
    for t, p, r, f1 in points:
        print(f"{t:.2f} p={p:.6f} r={r:.6f} f1={f1:.6f}")
    print("selected", best[0])


if __name__ == "__main__":
    main()
