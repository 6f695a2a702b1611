use greenreq_core::agent::{ChatParams, ChatProvider, MockChatProvider};
use greenreq_core::knowledge_graph::*;
use greenreq_core::semantic_index::{EmbeddingProvider, HashEmbedder};

const FIXTURE: &str = include_str!("fixtures/standards_graph.json");

const STANDARD_TEXT: &str =
    "Goal G1: Ensure access to affordable, safe, and sustainable housing for all.
Target: Reduce chronic homelessness by at least 31% by March 2024.
Indicator: Number of chronically homeless individuals.";

fn fixture() -> GraphDoc {
    load_graph_doc(FIXTURE).unwrap()
}

fn count(doc: &GraphDoc, kind: RelationKind) -> usize {
    doc.relationships.iter().filter(|r| r.kind == kind).count()
}

#[test]
fn extraction_from_scripted_output() {
    let mock = MockChatProvider::sequence([format!("```json\n{FIXTURE}\n```")]);
    let ex = extract_graph(STANDARD_TEXT, &mock, &ChatParams::default()).unwrap();
    assert_eq!(ex.doc.entities.len(), 9);
    assert_eq!(ex.doc.relationships.len(), 9);
    assert_eq!(count(&ex.doc, RelationKind::HasTarget), 3);
    assert_eq!(count(&ex.doc, RelationKind::IsMeasuredBy), 3);
    assert_eq!(count(&ex.doc, RelationKind::RelatesTo), 3);
    assert!(ex.report.valid);
    assert!(ex.remap.is_empty());
    assert_eq!(ex.raw_outputs.len(), 1);
    assert_eq!(ex.provider_id, "mock");
    let prompt = &mock.prompts()[0];
    assert!(prompt.contains("Reduce chronic homelessness by at least 31% by March 2024."));
    assert!(!prompt.contains("{document}"));
}

#[test]
fn prose_fails_after_one_repair() {
    let mock = MockChatProvider::sequence(["The document has three goals.", "Still prose, sorry."]);
    match extract_graph(STANDARD_TEXT, &mock, &ChatParams::default()) {
        Err(GraphError::UnparseableModelOutput { raw_outputs, .. }) => {
            assert_eq!(raw_outputs.len(), 2)
        }
        other => panic!("{other:?}"),
    }
    assert_eq!(mock.prompts().len(), 2);
    assert!(mock.prompts()[1].contains("could not be used"));
}

#[test]
fn repair_can_succeed() {
    let mock = MockChatProvider::sequence(["no json here".to_string(), FIXTURE.to_string()]);
    let ex = extract_graph(STANDARD_TEXT, &mock, &ChatParams::default()).unwrap();
    assert_eq!(ex.doc.entities.len(), 9);
    assert_eq!(ex.raw_outputs.len(), 2);
}

#[test]
fn empty_document_never_calls_provider() {
    let mock = MockChatProvider::sequence(["unused"]);
    assert_eq!(
        extract_graph("  \n", &mock, &ChatParams::default()),
        Err(GraphError::EmptyDocument)
    );
    assert!(mock.prompts().is_empty());
}

#[test]
fn provider_outage_surfaces() {
    let mock = MockChatProvider::sequence(Vec::<String>::new());
    assert!(matches!(
        extract_graph(STANDARD_TEXT, &mock, &ChatParams::default()),
        Err(GraphError::Provider(_))
    ));
    assert_eq!(mock.provider_id(), "mock");
}

#[test]
fn fixture_validates_cleanly() {
    let r = validate(&fixture());
    assert!(r.valid);
    assert!(r.errors.is_empty());
    assert!(r.warnings.is_empty());
}

#[test]
fn remove_g3_cascades() {
    // oracle: tests/oracles/graph_edits.py (G3 has 3 incident relationships)
    let doc = fixture();
    let edits = parse_edit_script(r#"[{"op": "remove_entity", "payload": {"id": "G3"}}]"#).unwrap();
    let (out, log) = apply_edits(&doc, &edits).unwrap();
    assert_eq!(out.entities.len(), 8);
    assert_eq!(out.relationships.len(), 6);
    assert!(out
        .relationships
        .iter()
        .all(|r| r.from != "G3" && r.to != "G3"));
    assert_eq!(log[0].op, "remove_entity");
    assert_eq!(doc, fixture());
}

#[test]
fn modify_is_local() {
    let doc = fixture();
    let edits = parse_edit_script(
        r#"[{"op": "modify_entity", "payload": {"id": "T1", "name": "Halve chronic homelessness"}}]"#,
    )
    .unwrap();
    let (out, _) = apply_edits(&doc, &edits).unwrap();
    for (a, b) in doc.entities.iter().zip(&out.entities) {
        if a.id == "T1" {
            assert_eq!(b.name, "Halve chronic homelessness");
            assert_eq!((&a.description, &a.kind), (&b.description, &b.kind));
        } else {
            assert_eq!(a, b);
        }
    }
    assert_eq!(doc.relationships, out.relationships);
}

#[test]
fn edit_errors_are_atomic() {
    let doc = fixture();
    let bad_endpoint = parse_edit_script(
        r#"[{"op": "remove_entity", "payload": {"id": "I3"}},
            {"op": "add_relation", "payload": {"from": "G1", "to": "T9", "type": "hasTarget"}}]"#,
    )
    .unwrap();
    assert!(matches!(
        apply_edits(&doc, &bad_endpoint),
        Err(GraphError::EditTargetMissing { index: 1, .. })
    ));
    let invalid = parse_edit_script(
        r#"[{"op": "add_relation", "payload": {"from": "T1", "to": "I1", "type": "hasTarget"}}]"#,
    )
    .unwrap();
    match apply_edits(&doc, &invalid) {
        Err(GraphError::EditProducesInvalidGraph(r)) => {
            assert!(r.has(IssueCode::RelationDomainViolation))
        }
        other => panic!("{other:?}"),
    }
    let missing =
        parse_edit_script(r#"[{"op": "modify_entity", "payload": {"id": "X1", "name": "n"}}]"#)
            .unwrap();
    assert!(matches!(
        apply_edits(&doc, &missing),
        Err(GraphError::EditTargetMissing { .. })
    ));
    assert_eq!(doc, fixture());
}

#[test]
fn build_counts_records() {
    let g = KnowledgeGraph::build(fixture(), &HashEmbedder, 2).unwrap();
    assert_eq!(g.index().len(), 18);
    let entity_records = g
        .index()
        .records()
        .iter()
        .filter(|r| r.metadata["record"] == "entity")
        .count();
    assert_eq!(entity_records, 9);
    assert_eq!(
        g.index().get("rel:G1:hasTarget:T1").unwrap().text,
        "Ensure access to affordable, safe, and sustainable housing for all hasTarget Reduce chronic homelessness by at least 31% by March 2024"
    );
    let empty = KnowledgeGraph::build(GraphDoc::default(), &HashEmbedder, 1).unwrap();
    assert!(empty.index().is_empty());
    assert_eq!(
        empty.retrieve_subgraph("x", 3, &HashEmbedder),
        Err(GraphError::EmptyGraph)
    );
}

#[test]
fn build_refuses_invalid() {
    let mut doc = fixture();
    doc.entities[0].unit_of_measure = Some("count".into());
    assert!(matches!(
        KnowledgeGraph::build(doc, &HashEmbedder, 1),
        Err(GraphError::InvalidGraph(_))
    ));
}

#[test]
fn self_retrieval_and_saturation() {
    let g = KnowledgeGraph::build(fixture(), &HashEmbedder, 1).unwrap();
    let t2 = g.doc().entity("T2").unwrap().rendered();
    let sub = g.retrieve_subgraph(&t2, 3, &HashEmbedder).unwrap();
    assert_eq!(sub.entities[0].entity.id, "T2");
    assert_eq!(sub.entities[0].score, 1.0);
    let all = g.retrieve_subgraph("housing", 50, &HashEmbedder).unwrap();
    assert_eq!(all.entities.len(), 9);
    assert_eq!(all.relations.len(), 9);
}

#[test]
fn homelessness_ranking_frozen() {
    // oracle: tests/oracles/fixture_embedder.py
    let g = KnowledgeGraph::build(fixture(), &HashEmbedder, 1).unwrap();
    let sub = g
        .retrieve_subgraph("homelessness", 9, &HashEmbedder)
        .unwrap();
    let got: Vec<(String, f64)> = sub
        .entities
        .iter()
        .map(|s| (s.entity.id.clone(), s.score))
        .collect();
    let expected = [
        ("T1", 0.790569),
        ("T3", 0.377964),
        ("T2", 0.359211),
        ("G1", 0.0),
        ("G2", 0.0),
        ("G3", 0.0),
        ("I1", 0.0),
        ("I2", 0.0),
        ("I3", 0.0),
    ];
    for ((id, score), (eid, escore)) in got.iter().zip(expected) {
        assert_eq!(id, eid);
        assert!((score - escore).abs() < 1e-6, "{id}: {score}");
    }
    let top = g
        .retrieve_subgraph("chronic homelessness housing", 4, &HashEmbedder)
        .unwrap();
    assert_eq!(top.entity_ids(), ["T1", "T2", "T3", "G1"]);
    assert!((top.entities[3].score - 0.20739).abs() < 1e-5);
    assert!(top
        .relations
        .iter()
        .all(|r| top.entity_ids().contains(&r.from) && top.entity_ids().contains(&r.to)));
    assert_eq!(
        top.relations,
        vec![KgRelation::new("G1", RelationKind::HasTarget, "T1")]
    );
}

#[test]
fn persisted_graph_reassembles() {
    let g = KnowledgeGraph::build(fixture(), &HashEmbedder, 1).unwrap();
    let bytes = g.index().to_bytes();
    let index = greenreq_core::semantic_index::VectorIndex::from_bytes(&bytes).unwrap();
    let again = KnowledgeGraph::from_parts(g.doc().clone(), index).unwrap();
    assert_eq!(again, g);
    let mut fewer = g.doc().clone();
    fewer.relationships.pop();
    assert!(KnowledgeGraph::from_parts(fewer, g.index().clone()).is_err());
    assert_eq!(HashEmbedder.dimension(), g.index().dimension());
}

#[test]
fn serialization_round_trips() {
    let doc = fixture();
    let text = doc.to_json();
    let back = load_graph_doc(&text).unwrap();
    assert_eq!(back, doc);
    assert_eq!(back.to_json(), text);
}
