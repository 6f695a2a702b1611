use std::sync::Arc;

use greenreq_core::agent::{AgentSettings, MockChatProvider, MockRule};
use greenreq_core::corpus::{
    contextualize, parse_taxonomy, taxonomy_record_id, Chunk, ChunkSource, Dimension,
};
use greenreq_core::knowledge_graph::{load_graph_doc, KnowledgeGraph};
use greenreq_core::review::{ReviewAction, ReviewDecision, ReviewStage};
use greenreq_core::semantic_index::{EmbeddingProvider, HashEmbedder, VectorIndex};
use greenreq_core::sr_elicitor::*;

const TAXONOMY: &str = "requirement,dimension,category
The system should be a low-cost solution for home automation,Economic,Affordability
Smart home systems should support independent living for residents,Social,Autonomy
The system must monitor and control lighting levels to reduce unnecessary energy usage,Environmental,Energy efficiency
";

fn embedder() -> Arc<dyn EmbeddingProvider> {
    Arc::new(HashEmbedder)
}

fn graph() -> Arc<KnowledgeGraph> {
    let doc = load_graph_doc(include_str!("fixtures/standards_graph.json")).unwrap();
    Arc::new(KnowledgeGraph::build(doc, &HashEmbedder, 1).unwrap())
}

fn chunks() -> Vec<Chunk> {
    vec![
        Chunk::new(
            "scope-1",
            ChunkSource::ProductScope,
            "Affordable housing units managed remotely.",
        ),
        Chunk::new(
            "scope-2",
            ChunkSource::ProductScope,
            "Lighting and power control for residents.",
        ),
    ]
}

fn tx_ids() -> Vec<String> {
    parse_taxonomy(TAXONOMY)
        .unwrap()
        .iter()
        .map(taxonomy_record_id)
        .collect()
}

fn taxonomy_index() -> Arc<VectorIndex> {
    let chunks: Vec<Chunk> = parse_taxonomy(TAXONOMY)
        .unwrap()
        .iter()
        .map(contextualize)
        .collect();
    let mut index = VectorIndex::for_provider(&HashEmbedder);
    index.add_chunks(&chunks, &HashEmbedder, 1).unwrap();
    Arc::new(index)
}

fn two_turn(chunk: &str, question: &str, tool: &str, final_answer: &str) -> Vec<MockRule> {
    let key = format!("{question} product chunk {chunk}?");
    let echoed = format!("Action Input: {chunk} needs\nObservation:");
    vec![
        MockRule::keyed(
            &[&key, &echoed],
            &[],
            format!("Thought: I now know the final answer\nFinal Answer: {final_answer}"),
        ),
        MockRule::keyed(
            &[&key],
            &[],
            format!("Thought: I should look this up.\nAction: {tool}\nAction Input: {chunk} needs"),
        ),
    ]
}

const KG_Q: &str = "indicators are relevant to";
const SR_Q: &str = "must be considered for";

fn context_mock() -> MockChatProvider {
    let mut rules = two_turn(
        "scope-1",
        KG_Q,
        "kg_retriever",
        "Goal G1 and target T1 apply; indicator I1 tracks it.",
    );
    rules.extend(two_turn(
        "scope-2",
        KG_Q,
        "kg_retriever",
        "Goal G2 with target T2 is relevant.",
    ));
    rules.push(MockRule::keyed(
        &["Memory Entries:"],
        &[],
        "Final Answer: Final Sustainability Goal Analysis:\nGoal : G1\n  Related Targets/Indicators: T1, I1\n  Interdependencies: G2",
    ));
    MockChatProvider::new("mock-chat", rules)
}

#[test]
fn context_per_chunk_plus_synthesis() {
    let mock = context_mock();
    let result = generate_context(
        &chunks(),
        graph(),
        embedder(),
        &mock,
        &AgentSettings::default(),
    )
    .unwrap();
    assert_eq!(result.memory.len(), 2);
    assert_eq!(result.items.len(), 2);
    assert_eq!(result.items[0].goals, ["G1"]);
    assert_eq!(result.items[0].targets, ["T1"]);
    assert_eq!(result.items[0].indicators, ["I1"]);
    assert_eq!(
        result.items[0].relationships,
        ["rel:G1:hasTarget:T1", "rel:T1:isMeasuredBy:I1"]
    );
    assert!(result
        .synthesis
        .starts_with("Final Sustainability Goal Analysis:"));
    assert!(result.synthesis_check.consistent);
    assert_eq!(result.synthesis_check.cited, ["G1", "T1", "I1", "G2"]);
    assert_eq!(result.transcripts.len(), 3);
    assert_eq!(result.transcripts[2].subject, "synthesis");
    let index = result.context_index(&HashEmbedder).unwrap();
    assert_eq!(index.len(), 3);
    assert!(index.get(SYNTHESIS_RECORD).is_some());
    // chunk answers reach the synthesis prompt in chunk order
    let synth_prompt = mock
        .prompts()
        .into_iter()
        .find(|p| p.contains("Memory Entries:"))
        .unwrap();
    let a = synth_prompt.find("Chunk ID: scope-1").unwrap();
    let b = synth_prompt.find("Chunk ID: scope-2").unwrap();
    assert!(a < b);
}

#[test]
fn synthesis_stray_refs_are_flagged() {
    let mut rules = two_turn("scope-1", KG_Q, "kg_retriever", "Goal G1 applies.");
    rules.extend(two_turn(
        "scope-2",
        KG_Q,
        "kg_retriever",
        "Goal G2 applies.",
    ));
    rules.push(MockRule::keyed(
        &["Memory Entries:"],
        &[],
        "Final Answer: Goals G1, G2 and G3.",
    ));
    let mock = MockChatProvider::new("m", rules);
    let result = generate_context(
        &chunks(),
        graph(),
        embedder(),
        &mock,
        &AgentSettings::default(),
    )
    .unwrap();
    assert!(!result.synthesis_check.consistent);
    assert_eq!(result.synthesis_check.stray, ["G3"]);
}

#[test]
fn strict_and_lenient_failure_policies() {
    let mut rules = two_turn("scope-1", KG_Q, "kg_retriever", "Goal G1 applies.");
    // scope-2 never finishes
    rules.push(MockRule::keyed(
        &["product chunk scope-2?"],
        &[],
        "Thought: again\nAction: kg_retriever\nAction Input: more",
    ));
    rules.push(MockRule::keyed(
        &["Memory Entries:"],
        &[],
        "Final Answer: Goal G1.",
    ));
    let mock = MockChatProvider::new("m", rules.clone());
    match generate_context(
        &chunks(),
        graph(),
        embedder(),
        &mock,
        &AgentSettings::default(),
    ) {
        Err(ElicitError::ChunkFailed { chunk_id, source }) => {
            assert_eq!(chunk_id, "scope-2");
            assert!(source.transcript().is_some());
        }
        other => panic!("{other:?}"),
    }
    let lenient = AgentSettings {
        strict: false,
        ..AgentSettings::default()
    };
    let mock = MockChatProvider::new("m", rules);
    let result = generate_context(&chunks(), graph(), embedder(), &mock, &lenient).unwrap();
    assert!(result.partial);
    assert_eq!(result.failures.len(), 1);
    assert_eq!(result.failures[0].chunk_id, "scope-2");
    assert_eq!(
        result.failures[0].transcript.as_ref().unwrap().step_count,
        8
    );
    assert_eq!(result.memory.len(), 1);
}

fn derive_mock(answer1: &str, answer2: &str) -> MockChatProvider {
    let mut rules = two_turn("scope-1", SR_Q, "taxonomy_retriever", answer1);
    rules.extend(two_turn("scope-2", SR_Q, "taxonomy_retriever", answer2));
    MockChatProvider::new("mock-chat", rules)
}

fn derive(
    mock: &MockChatProvider,
    round: u32,
    feedback: &[String],
) -> Result<CandidateSet, ElicitError> {
    let context = Arc::new(VectorIndex::for_provider(&HashEmbedder));
    derive_srs(DeriveInputs {
        project_id: "mini",
        chunks: &chunks(),
        context_index: context,
        taxonomy_index: taxonomy_index(),
        embedder: embedder(),
        provider: mock,
        settings: &AgentSettings::default(),
        round,
        feedback,
    })
}

#[test]
fn same_row_from_two_chunks_is_one_candidate() {
    let tx = tx_ids();
    let mock = derive_mock(
        &format!(
            "SR: [{}] | keeps housing affordable\nSR: [{}] | residents live independently",
            tx[0], tx[1]
        ),
        &format!(
            "SR: [{}] | low-cost controls\nSR: [{}] | lighting energy",
            tx[0], tx[2]
        ),
    );
    let set = derive(&mock, 1, &[]).unwrap();
    assert_eq!(set.candidates.len(), 3);
    assert_eq!(set.candidates[0].record_id, tx[0]);
    assert_eq!(set.candidates[0].supporting_context, ["scope-1", "scope-2"]);
    assert_eq!(set.candidates[0].dimension, Dimension::Economic);
    assert_eq!(set.candidates[0].category, "Affordability");
    assert!(set
        .candidates
        .iter()
        .all(|c| !c.rationale.is_empty() && !c.supporting_context.is_empty()));
    assert!(set
        .candidates
        .iter()
        .all(|c| c.status == CandidateStatus::Proposed));
    // the taxonomy tool really ran and its ids reached the model
    assert!(mock
        .prompts()
        .iter()
        .any(|p| p.contains(&format!("[{}]", tx[0]))));
}

#[test]
fn unknown_taxonomy_ref_is_rejected() {
    let tx = tx_ids();
    let mock = derive_mock(
        "SR: [tx-ffffffffff] | invented",
        &format!("SR: [{}] | ok", tx[0]),
    );
    assert!(matches!(
        derive(&mock, 1, &[]),
        Err(ElicitError::UnknownTaxonomyRef { ref record_id, .. }) if record_id == "tx-ffffffffff"
    ));
}

#[test]
fn feedback_reaches_the_prompt_verbatim() {
    let tx = tx_ids();
    let mock = derive_mock(
        &format!("SR: [{}] | r", tx[0]),
        &format!("SR: [{}] | r", tx[2]),
    );
    let feedback = vec!["missing water-usage concerns".to_string()];
    let set = derive(&mock, 2, &feedback).unwrap();
    assert_eq!(set.round, 2);
    assert_eq!(set.feedback, feedback);
    assert!(mock
        .prompts()
        .iter()
        .all(|p| p.contains("missing water-usage concerns")));
}

fn proposed() -> CandidateSet {
    let tx = tx_ids();
    let mock = derive_mock(
        &format!("SR: [{}] | a\nSR: [{}] | b", tx[0], tx[1]),
        &format!("SR: [{}] | c", tx[2]),
    );
    derive(&mock, 1, &[]).unwrap()
}

#[test]
fn approve_all() {
    let set = proposed();
    let d = ReviewDecision::new("d1", ReviewStage::SRApproval, ReviewAction::Approve);
    let (outcome, reviewed) = review_round(&set, &d, None).unwrap();
    let ReviewOutcome::Approved(sr) = outcome else {
        panic!()
    };
    assert_eq!(sr.members.len(), set.candidates.len());
    assert_eq!(sr.round, 1);
    assert_eq!(sr.approval_record, "d1");
    assert_eq!(sr.members[0].requirement.id, "SR1");
    assert!(sr.members.iter().all(|m| m.requirement.validate().is_ok()));
    assert!(reviewed
        .candidates
        .iter()
        .all(|c| c.status == CandidateStatus::Approved));
    let counts = dimension_counts(&sr);
    assert_eq!(counts.len(), 4);
    assert_eq!(counts.values().sum::<usize>(), sr.members.len());
    assert_eq!(counts[&Dimension::Technical], 0);
}

#[test]
fn partial_and_empty_approval() {
    let set = proposed();
    let keep = vec![set.candidates[2].record_id.clone()];
    let d = ReviewDecision::new("d2", ReviewStage::SRApproval, ReviewAction::Approve)
        .with_approved(keep.clone());
    let (ReviewOutcome::Approved(sr), reviewed) = review_round(&set, &d, None).unwrap() else {
        panic!()
    };
    assert_eq!(sr.members.len(), 1);
    assert_eq!(sr.members[0].taxonomy_ref, keep[0]);
    assert_eq!(sr.rejected_refs.len(), 2);
    assert_eq!(reviewed.candidates[0].status, CandidateStatus::Rejected);

    let none = ReviewDecision::new("d3", ReviewStage::SRApproval, ReviewAction::Approve)
        .with_approved(vec![]);
    assert_eq!(
        review_round(&set, &none, None).unwrap_err(),
        ElicitError::ApproveWithZeroApprovedCandidates
    );
}

#[test]
fn request_changes_increments_round() {
    let set = proposed();
    let d = ReviewDecision::new("d4", ReviewStage::SRApproval, ReviewAction::RequestChanges)
        .with_feedback("missing water-usage concerns");
    let (outcome, _) = review_round(&set, &d, None).unwrap();
    assert_eq!(
        outcome,
        ReviewOutcome::Rerun {
            next_round: 2,
            feedback: vec!["missing water-usage concerns".into()]
        }
    );
    assert_eq!(
        review_round(&set, &d, Some(1)).unwrap_err(),
        ElicitError::RoundLimit(1)
    );
    let blank = ReviewDecision::new("d5", ReviewStage::SRApproval, ReviewAction::RequestChanges);
    assert!(matches!(
        review_round(&set, &blank, None),
        Err(ElicitError::Review(_))
    ));
}
