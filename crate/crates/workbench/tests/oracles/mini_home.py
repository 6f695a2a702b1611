"""Generator and oracle for the bundled mini_home fixture project.

Run: python3 mini_home.py
Writes crates/workbench/fixtures/mini_home/* and prints the values that the
Rust tests freeze (coherence scores, pair similarities, related pairs,
taxonomy record ids, expected verdict and completeness outcome).
"""
import csv
import hashlib
import io
import itertools
import json
import os
import sys

HERE = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, os.path.join(HERE, "..", "..", "..", "core", "tests", "oracles"))
from fixture_embedder import cos, embed  # noqa: E402

OUT = os.path.join(HERE, "..", "..", "fixtures", "mini_home")
PROJECT = "mini-home"
THRESHOLD = 0.65

SCOPE = [
    ("Product Overview",
     "The mini home hub connects heating, lighting, cameras and sensors in a small home so residents can control the home from a phone."),
    ("Energy Management",
     "The hub schedules heating and lighting in the home, reads room sensors and shows residents the energy used by each device in the home."),
    ("Resident Services",
     "Residents control lighting, heating and cameras in the home by phone or voice, and the hub alerts residents when home sensors detect a problem."),
]
FRS = [
    ("FR1", "The system shall schedule heating to reduce energy consumption when the home is empty."),
    ("FR2", "The system shall store all camera video recordings in full resolution for 90 days."),
    ("FR3", "The system shall send an alert to the resident phone when a door is left open."),
    ("FR4", "The system shall let residents group lights into rooms."),
]
NFRS = [
    ("NFR1", "The hub shall poll each sensor once per second to keep the sensor dashboard live."),
    ("NFR2", "The hub shall answer voice control requests from residents within two seconds so residents can control devices."),
]
# (requirement, dimension, category)
TAXONOMY = [
    ("The system should reduce energy consumption of heating when the home is empty", "Environmental", "Energy efficiency"),
    ("The system should minimize data storage of camera video recordings", "Environmental", "Resource efficiency"),
    ("The hub should poll each sensor less often to extend sensor battery life", "Technical", "Longevity"),
    ("The hub should accept voice control requests so residents with limited mobility can control devices", "Social", "Accessibility"),
    ("The system should be a low-cost solution for home automation", "Economic", "Affordability"),
    ("Smart home systems should support independent living for older residents", "Social", "Autonomy"),
    ("The system should keep operating costs predictable for households", "Economic", "Cost predictability"),
    ("The system should receive software updates without replacing hardware", "Technical", "Maintainability"),
]
STANDARD = """# Housing and Energy Strategy

Goal G1: Reduce greenhouse gas emissions from homes.
Target: Cut residential energy use by 20% by 2030.
Indicator: Household energy consumption in kWh per year.

Goal G2: Support independent living for older residents.
Target: By 2030, give every older resident access to assistive home technology.
Indicator: Share of older residents using assistive technology (percentage).

Reducing household energy use also lowers living costs, which supports independent living.
"""
GRAPH = {
    "entities": [
        {"id": "G1", "type": "Goal", "name": "Reduce greenhouse gas emissions from homes",
         "description": "A goal on residential emissions."},
        {"id": "T1", "type": "Target", "name": "Cut residential energy use by 20% by 2030",
         "description": "A measurable energy target.", "endDate": "2030"},
        {"id": "I1", "type": "Indicator", "name": "Household energy consumption", "unitOfMeasure": "kWh per year"},
        {"id": "G2", "type": "Goal", "name": "Support independent living for older residents",
         "description": "A social inclusion goal."},
        {"id": "T2", "type": "Target", "name": "Give every older resident access to assistive home technology",
         "description": "A target on assistive technology.", "endDate": "2030"},
        {"id": "I2", "type": "Indicator", "name": "Share of older residents using assistive technology",
         "unitOfMeasure": "percentage"},
    ],
    "relationships": [
        {"from": "G1", "to": "T1", "type": "hasTarget"},
        {"from": "T1", "to": "I1", "type": "isMeasuredBy"},
        {"from": "G2", "to": "T2", "type": "hasTarget"},
        {"from": "T2", "to": "I2", "type": "isMeasuredBy"},
        {"from": "G1", "to": "G2", "type": "relatesTo"},
    ],
}
CATALOGS = {
    "fr_dependency.csv": [
        ("Requires: one requirement can only be met after another is implemented", "structural"),
        ("Refines: one requirement details another", "structural"),
        ("Conflicts: meeting one requirement prevents meeting another", "interaction"),
    ],
    "nfr_correlation.csv": [
        ("Performance efficiency versus energy efficiency: frequent processing or polling raises energy use (relative conflict)", "relative"),
        ("Usability supports accessibility (positive)", "positive"),
        ("Security versus performance: encryption adds processing load (relative conflict)", "relative"),
    ],
    "sr_correlation.csv": [
        ("Energy efficiency supports cost reduction and emission reduction (positive)", "positive"),
        ("Data retention conflicts with resource efficiency because storage consumes energy (negative)", "negative"),
        ("Accessibility supports autonomy and inclusion (positive)", "positive"),
    ],
}

SR_FEEDBACK = "Please cover accessibility for residents who rely on speech input."
SR_FEEDBACK_KEY = "rely on speech input"
FR2_FEEDBACK = "Only keep clips when motion is detected."
FR2_FEEDBACK_KEY = "when motion is detected"
FR2_REV1 = "The system shall keep camera video recordings in full resolution for 30 days."
FR2_REV2 = "The system shall keep motion-triggered camera video clips compressed for 90 days."
NFR1_REV1 = "The hub shall poll each sensor once per second only while the sensor dashboard is open."


def tx_id(req, dim, cat):
    return "tx-" + hashlib.sha256(f"{req}\x1f{dim}\x1f{cat}".encode()).hexdigest()[:10]


TX = [tx_id(*row) for row in TAXONOMY]


def final(answer):
    return f"Thought: I now know the final answer\nFinal Answer: {answer}"


def two_turn(key, tool, tool_input, answer, extra_when=(), unless=()):
    """A tool call, then a final answer once the observation is in the prompt."""
    echoed = f"Action Input: {tool_input}\nObservation:"
    return [
        {"when": [key, *extra_when, echoed], "unless": list(unless), "response": final(answer), "times": 0},
        {"when": [key, *extra_when], "unless": list(unless),
         "response": f"Thought: I should look this up.\nAction: {tool}\nAction Input: {tool_input}", "times": 0},
    ]


def verdict(r1, r2, relation, reason):
    return f"Requirement 1: {r1}\nRequirement 2: {r2}\nRelation Type: {relation}\nReason: {reason}"


def proposal(original, kind, sr, recommended, others, justification):
    labels = ["Minimal", "Moderate", "Alternative"]
    texts = [recommended] + others
    cands = []
    for i, (label, text) in enumerate(zip(labels, texts)):
        cands.append({
            "label": label,
            "revised_requirement": text,
            "preservation_score": 90 - 10 * i,
            "estimated_SR_impact_reduction": ["Medium", "High", "60%"][i],
            "confidence": ["High", "Medium", "Low"][i],
            "acceptance_criteria": [f"{label} revision is testable"],
            "residual_risks": [f"{label} revision may need tuning"],
        })
    return json.dumps({
        "original_requirement": original,
        "requirement_type": kind,
        "sustainability_requirement": sr,
        "candidates": cands,
        "recommended": {"revised_requirement": recommended, "justification": justification},
    }, indent=2)


def pair_key(rid, kind, text):
    return f"Requirement 1: {rid} ({kind}): {text}"


def mock_script():
    fr = dict(FRS)
    nfr = dict(NFRS)
    sr = {f"SR{i + 1}": TAXONOMY[i][0] for i in range(4)}
    rules = []
    # standards graph extraction
    rules.append({"when": ["extracts sustainability knowledge"], "response": json.dumps(GRAPH, indent=2), "times": 0})
    # sustainability context per chunk
    ctx_q = "indicators are relevant to product chunk {}?"
    rules += two_turn(ctx_q.format("scope-1"), "kg_retriever", "home heating energy and residents",
                      "Goal G1 with target T1 and indicator I1 applies to home energy; goal G2 applies to residents.")
    rules += two_turn(ctx_q.format("scope-2"), "kg_retriever", "heating schedules and energy use",
                      "Goal G1 applies: target T1 is tracked by indicator I1.")
    rules += two_turn(ctx_q.format("scope-3"), "kg_retriever", "residents control by voice",
                      "Goal G2 applies: target T2 is tracked by indicator I2.")
    rules.append({"when": ["Memory Entries:"], "response": final(
        "Final Sustainability Goal Analysis:\n"
        "Goal : G1\n  Related Targets/Indicators: T1, I1\n  Interdependencies: G2\n"
        "Goal : G2\n  Related Targets/Indicators: T2, I2\n  Interdependencies: G1"), "times": 0})
    # SR listing, round 2 (feedback present) before round 1
    sr_q = "must be considered for product chunk {}?"

    def noms(rows):
        return "\n".join(f"SR: [{TX[i]}] | {why}" for i, why in rows)

    listing = {
        "scope-1": ("home energy and cameras", [(0, "heating runs in an empty home"), (1, "camera footage is stored")]),
        "scope-2": ("sensor polling and heating", [(2, "sensors are read continuously"), (0, "heating schedules")]),
    }
    for rnd in (2, 1):
        extra = (SR_FEEDBACK_KEY,) if rnd == 2 else ()
        unless = () if rnd == 2 else (SR_FEEDBACK_KEY,)
        for chunk, (query, rows) in listing.items():
            rules += two_turn(sr_q.format(chunk), "taxonomy_retriever", query, noms(rows), extra, unless)
        scope3 = [(3, "residents rely on voice control"), (4, "residents need an affordable hub")] if rnd == 2 \
            else [(4, "residents need an affordable hub")]
        rules += two_turn(sr_q.format("scope-3"), "taxonomy_retriever", "resident services by voice",
                          noms(scope3), extra, unless)
    # revalidation of revised requirements (before the original pair rules)
    rules.append({"when": [pair_key("FR2", "FR", FR2_REV1)], "response": final(verdict(
        "FR2", "SR2", "Neutral", "Thirty days of full resolution footage still uses storage, but much less.")), "times": 0})
    rules.append({"when": [pair_key("FR2", "FR", FR2_REV2)], "response": final(verdict(
        "FR2", "SR2", "Positive", "Motion-triggered compressed clips keep storage small.")), "times": 0})
    rules.append({"when": [pair_key("NFR1", "NFR", NFR1_REV1)], "response": final(verdict(
        "NFR1", "SR3", "Positive", "Polling only while the dashboard is open saves sensor battery.")), "times": 0})
    # classification of related pairs
    rules += two_turn(pair_key("FR1", "FR", fr["FR1"]), "sr_correlation_catalog", "energy efficiency heating",
                      verdict("FR1", "SR1", "Positive",
                              "Scheduling heating for an empty home saves energy, see [srcor-1]."))
    rules += two_turn(pair_key("FR2", "FR", fr["FR2"]), "sr_correlation_catalog", "data retention storage",
                      verdict("FR2", "SR2", "Negative",
                              "Ninety days of full resolution video needs large storage, see [srcor-2]."))
    rules += two_turn(pair_key("NFR1", "NFR", nfr["NFR1"]), "nfr_correlation_catalog", "polling performance energy",
                      verdict("NFR1", "SR3", "Negative",
                              "Polling every second drains sensor batteries, see [nfrcor-1]."))
    rules.append({"when": [pair_key("NFR2", "NFR", nfr["NFR2"])], "unless": ["Observation:"], "response": final(verdict(
        "NFR2", "SR4", "Neutral", "Response time neither helps nor hinders voice accessibility.")), "times": 0})
    rules.append({"when": ["Identify the relation between the following requirements."], "response": final(verdict(
        "", "", "Neutral", "No material influence.")), "times": 0})
    # optimizer proposals
    rules.append({"when": [f"Requirement A (FR): FR2: {fr['FR2']}", FR2_FEEDBACK_KEY], "response": proposal(
        fr["FR2"], "FR", sr["SR2"], FR2_REV2,
        ["The system shall keep camera video clips for 90 days and delete duplicates.",
         "The system shall stream camera video live and store only flagged clips."],
        "Keeps ninety days of history while storing only clips with motion."), "times": 0})
    rules.append({"when": [f"Requirement A (FR): FR2: {fr['FR2']}"], "response": proposal(
        fr["FR2"], "FR", sr["SR2"], FR2_REV1,
        ["The system shall keep camera video recordings in reduced resolution for 90 days.",
         "The system shall archive camera video recordings to removable media after 7 days."],
        "Shorter retention is the smallest change that cuts storage."), "times": 0})
    rules.append({"when": [f"Requirement A (NFR): NFR1: {nfr['NFR1']}"], "response": proposal(
        nfr["NFR1"], "NFR", sr["SR3"], NFR1_REV1,
        ["The hub shall poll each sensor once every ten seconds to keep the sensor dashboard live.",
         "The hub shall receive sensor readings pushed on change instead of polling."],
        "Keeps the dashboard live when it is viewed."), "times": 0})
    return {"provider_id": "mock-mini-home", "responses": rules}


def decisions():
    def d(did, stage, ref, action, **kw):
        out = {"decision_id": did, "stage": stage, "subject_refs": [ref], "action": action}
        out.update(kw)
        out.update({"reviewer": "fixture", "timestamp": "2025-01-01T00:00:00Z"})
        return out

    return [
        d("sr-r1", "SRApproval", f"{PROJECT}.sr.r1", "RequestChanges", feedback=SR_FEEDBACK),
        d("sr-r2", "SRApproval", f"{PROJECT}.sr.r2", "Approve", approved_refs=TX[:4]),
        d("fr2-r1", "RevisionReview", f"{PROJECT}.rev.FR2~SR2.r1", "RequestChanges", feedback=FR2_FEEDBACK),
        d("fr2-r2", "RevisionReview", f"{PROJECT}.rev.FR2~SR2.r2", "Approve"),
        d("nfr1-r1", "RevisionReview", f"{PROJECT}.rev.NFR1~SR3.r1", "Reject"),
    ]


def srs_text():
    lines = [f"# {PROJECT}", ""]
    for name, body in SCOPE:
        lines += [f"## {name}", body, ""]
    lines += ["## Functional Requirements"] + [f"{i}: {t}" for i, t in FRS] + [""]
    lines += ["## Non-Functional Requirements"] + [f"{i}: {t}" for i, t in NFRS]
    return "\n".join(lines) + "\n"


def csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


CONFIG = f"""project_id = "{PROJECT}"
artifacts_dir = "artifacts"

[inputs]
srs = "srs.md"
taxonomy = "taxonomy.csv"
standard_doc = "standard.md"

[inputs.catalogs]
fr_dependency = "catalogs/fr_dependency.csv"
nfr_correlation = "catalogs/nfr_correlation.csv"
sr_correlation = "catalogs/sr_correlation.csv"

[providers.chat]
kind = "mock"
script = "mock_script.json"

[providers.embedding]
kind = "hash"

[thresholds]
coherence = 0.5
related = {THRESHOLD}

[agent]
temperature = 0.3
max_steps = 8
runs = 3
retrieval_k = 5

[policy]
strict = true
completeness = "any_positive"
reproposal_limit = 3
review_mode = "batch"
decisions = "decisions.json"
"""


def write(name, text):
    path = os.path.join(OUT, name)
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w") as f:
        f.write(text)


def main():
    write("srs.md", srs_text())
    write("taxonomy.csv", csv_text(["requirement", "dimension", "category"], TAXONOMY))
    write("standard.md", STANDARD)
    for name, rows in CATALOGS.items():
        write(f"catalogs/{name}", csv_text(["text", "kind"], rows))
    write("mock_script.json", json.dumps(mock_script(), indent=2) + "\n")
    write("decisions.json", json.dumps(decisions(), indent=2) + "\n")
    write("greenreq.toml", CONFIG)

    for (a, ta), (b, tb) in itertools.combinations(SCOPE, 2):
        print(f"coherence {a} / {b}: {cos(embed(ta), embed(tb)):.6f}")
    srs = [(f"SR{i + 1}", TAXONOMY[i][0]) for i in range(4)]
    pairs = [(r, s, cos(embed(t), embed(u))) for r, t in FRS + NFRS for s, u in srs]
    pairs += [(a, b, cos(embed(ta), embed(tb))) for (a, ta), (b, tb) in itertools.combinations(srs, 2)]
    print("pairs", len(pairs))
    related = [p for p in pairs if p[2] >= THRESHOLD]
    for r, s, v in related:
        print(f"related {r}~{s}: {v:.6f}")
    print("highest unrelated", max(p[2] for p in pairs if p[2] < THRESHOLD))
    for i, row in enumerate(TAXONOMY):
        print(f"row {i + 1}: {TX[i]} {row[1]}")
    print("revision similarity FR2 r2", f"{cos(embed(dict(FRS)['FR2']), embed(FR2_REV2)):.6f}")
    print("revision similarity NFR1 r1", f"{cos(embed(dict(NFRS)['NFR1']), embed(NFR1_REV1)):.6f}")
    print("expected: trust 3/4 catalog-referred; satisfied SR1 SR2; unsatisfied SR3 SR4")


if __name__ == "__main__":
    main()
