"""Brute-force join: for each Negative FR/NFR-to-SR verdict <R, SRk>, list the
SRs m with a Negative SR-SR verdict against SRk where R~m is a related pair."""
import json
import sys

data = json.load(open(sys.argv[1]))
related = set(data["related"])
verdicts = data["verdicts"]


def is_sr(x):
    return x.startswith("SR")


for pid in sorted(verdicts):
    left, right = pid.split("~")
    if is_sr(left) or verdicts[pid] != "Negative":
        continue
    out = []
    for other, rel in verdicts.items():
        a, b = other.split("~")
        if not (is_sr(a) and is_sr(b)) or rel != "Negative" or right not in (a, b):
            continue
        m = b if a == right else a
        if f"{left}~{m}" in related:
            out.append(m)
    print(pid, sorted(out))
