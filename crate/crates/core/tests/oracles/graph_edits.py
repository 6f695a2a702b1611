"""Oracle for graph edit counts over fixtures/standards_graph.json."""
import json
import pathlib

doc = json.loads((pathlib.Path(__file__).parent.parent / "fixtures" / "standards_graph.json").read_text())
incident = [r for r in doc["relationships"] if "G3" in (r["from"], r["to"])]
print("G3 incident", len(incident), incident)
print("after removal", len(doc["entities"]) - 1, len(doc["relationships"]) - len(incident))
