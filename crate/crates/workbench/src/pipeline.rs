//! Stage orchestration over the artifact store.
//!
//! Every step hashes what it reads. A step whose record matches that hash
//! and whose outputs are intact is skipped, so reruns with unchanged inputs
//! leave the artifact directory byte-identical. Recomputing a step after
//! later steps ran would silently invalidate their artifacts; that needs
//! `force`, which discards the later steps.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use greenreq_core::agent::{prompts, AgentSettings, ChatParams, ReactConfig, SubjectTranscript};
use greenreq_core::corpus::{
    chunk_scope, coherence_check, contextualize, parse_srs, parse_srs_json, parse_taxonomy,
    taxonomy_record_id, CoherenceReport, CorpusError, ProjectSpec, Requirement, TaxonomyEntry,
};
use greenreq_core::knowledge_graph::{
    apply_edits, extract_graph, parse_edit_script, validate, EditLogEntry, Extraction, GraphDoc,
    KnowledgeGraph, ValidationReport,
};
use greenreq_core::relationship_integrator::{
    classify, classify_all, expected_pair_count, filter_scored, generate_pairs, related_pair_index,
    score_pairs, Catalog, CatalogId, Catalogs, ClassificationRun, RequirementPair,
};
use greenreq_core::review::{ReviewDecision, ReviewStage};
use greenreq_core::semantic_index::VectorIndex;
use greenreq_core::sr_elicitor::{
    derive_srs, generate_context, review_round, CandidateSet, DeriveInputs, ElicitedSrSet,
    ReviewOutcome,
};
use greenreq_core::sustainability_optimizer::{
    analyst_review, changelog, completeness_check, final_requirements, final_verdicts,
    find_negative_pairs, propose_revision, revalidate, CompletenessReport, FinalRequirement,
    FinalVerdict, OptimizationTask, TaskStatus,
};
use greenreq_core::util::{par_map_ordered, sha256_hex};

use crate::config::{ProjectConfig, ReviewMode};
use crate::error::{DecisionError, WorkbenchError};
use crate::providers::{chat_fingerprint, embedding_fingerprint, Providers};
use crate::store::{ArtifactStore, PipelineState, ReviewItem, ReviewStatus, Stage, StepRecord};

pub type Result<T> = std::result::Result<T, WorkbenchError>;

/// Artifact file names.
pub mod names {
    pub const TEMPLATES: &str = "templates.json";
    pub const SPEC: &str = "spec.json";
    pub const TAXONOMY: &str = "taxonomy.json";
    pub const COHERENCE: &str = "coherence.json";
    pub const PRODUCT_INDEX: &str = "product_index.idx";
    pub const TAXONOMY_INDEX: &str = "taxonomy_index.idx";
    pub const KG_EXTRACTION: &str = "kg_extraction.json";
    pub const GRAPH: &str = "graph.json";
    pub const GRAPH_INDEX: &str = "graph_index.idx";
    pub const CONTEXT: &str = "context.json";
    pub const CONTEXT_INDEX: &str = "context_index.idx";
    pub const CANDIDATES: &str = "candidates.json";
    pub const SR_SET: &str = "sr_set.json";
    pub const PAIRS: &str = "pairs.json";
    pub const RELATED: &str = "related_pairs.json";
    pub const RELATED_INDEX: &str = "related_index.idx";
    pub const VERDICTS: &str = "verdicts.json";
    pub const TASKS: &str = "tasks.json";
    pub const PROPOSALS: &str = "proposals.json";
    pub const REVALIDATIONS: &str = "revalidation_transcripts.json";
    pub const COMPLETENESS: &str = "completeness.json";
    pub const FINAL_REQUIREMENTS: &str = "final_requirements.json";
    pub const CHANGELOG: &str = "changelog.md";
    pub const REPORT_MD: &str = "report.md";
    pub const REPORT_JSON: &str = "report.json";
    pub const AUDIT_VERDICTS: &str = "audit_verdicts.json";
    pub const AUDIT_CONSISTENCY: &str = "audit_consistency.json";
    pub const AUDIT_TRUST: &str = "audit_trust.json";
    pub const AUDIT_COMPARE: &str = "audit_compare.json";
    pub const CALIBRATION: &str = "calibration.json";

    pub fn candidates_round(round: u32) -> String {
        format!("candidates.r{round}.json")
    }

    pub fn catalog_index(prefix: &str) -> String {
        format!("catalog.{prefix}.idx")
    }
}

/// What a command did.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Ran,
    UpToDate,
    /// Stopped until these reviews are decided.
    AwaitingReview(Vec<String>),
}

impl Outcome {
    fn from_ran(ran: bool) -> Self {
        if ran {
            Outcome::Ran
        } else {
            Outcome::UpToDate
        }
    }
}

/// How a stage that needs a human decision behaves when none is there.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wait {
    Return,
    Poll {
        interval: Duration,
        timeout: Option<Duration>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Options {
    pub force: bool,
    pub wait: Wait,
    pub allow_incoherent: bool,
}

impl Options {
    pub fn from_config(config: &ProjectConfig) -> Self {
        Self {
            force: false,
            wait: match config.policy.review_mode {
                ReviewMode::Batch => Wait::Return,
                ReviewMode::Interactive => Wait::Poll {
                    interval: Duration::from_millis(500),
                    timeout: config.policy.review_timeout_secs.map(Duration::from_secs),
                },
            },
            allow_incoherent: config.policy.allow_incoherent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaxonomyRow {
    pub record_id: String,
    #[serde(flatten)]
    pub entry: TaxonomyEntry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceArtifact {
    pub embedding_provider: String,
    /// `None` when the SRS has a single scope section.
    pub report: Option<CoherenceReport>,
    pub overridden: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KgArtifact {
    pub prompt_hash: String,
    pub extraction: Extraction,
    pub edits: Vec<EditLogEntry>,
    /// Validation of the graph after edits.
    pub final_report: ValidationReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCounts {
    pub frs: usize,
    pub nfrs: usize,
    pub srs: usize,
    pub possible: usize,
    pub related: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairsArtifact {
    pub embedding_provider: String,
    pub threshold: f64,
    pub counts: PairCounts,
    pub pairs: Vec<RequirementPair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposalRecord {
    pub task_id: String,
    pub round: u32,
    pub review_id: String,
    pub status: TaskStatus,
    pub original: Requirement,
    pub sustainability_requirement: Requirement,
    pub constraint_srs: Vec<String>,
    pub feedback: Vec<String>,
    pub attempt: greenreq_core::sustainability_optimizer::Attempt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletenessArtifact {
    #[serde(flatten)]
    pub report: CompletenessReport,
    pub complete: bool,
    pub final_verdicts: Vec<FinalVerdict>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalRequirementsArtifact {
    pub project_id: String,
    pub requirements: Vec<FinalRequirement>,
}

/// Ordinal of a step family; later families depend on earlier ones.
fn family(step: &str) -> u32 {
    match step.split('.').next().unwrap_or_default() {
        "ingest" => 1,
        "kg" => 2,
        "elicit" => 3,
        "relate" => 4,
        "classify" => 5,
        "optimize" => 6,
        "check" => 7,
        _ => 0,
    }
}

/// Stage reached given the steps completed.
fn derive_stage(steps: &[StepRecord]) -> Stage {
    let has = |n: &str| steps.iter().any(|s| s.name == n);
    [
        ("check", Stage::Complete),
        ("optimize", Stage::Optimized),
        ("classify", Stage::Classified),
        ("relate", Stage::Related),
        ("elicit.approval", Stage::Elicited),
    ]
    .into_iter()
    .find(|(n, _)| has(n))
    .map(|(_, s)| s)
    .unwrap_or(Stage::Init)
}

pub fn review_id_sr(project_id: &str, round: u32) -> String {
    format!("{project_id}.sr.r{round}")
}

pub fn review_id_revision(project_id: &str, task_id: &str, round: u32) -> String {
    format!("{project_id}.rev.{task_id}.r{round}")
}

/// Hash of `key=value` lines.
fn input_hash(parts: &[(&str, String)]) -> String {
    let mut text = String::new();
    for (k, v) in parts {
        text.push_str(k);
        text.push('=');
        text.push_str(v);
        text.push('\n');
    }
    sha256_hex(text)
}

fn file_hash(path: &Path) -> Result<String> {
    fs::read(path)
        .map(sha256_hex)
        .map_err(|e| WorkbenchError::Data(format!("{}: {e}", path.display())))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| WorkbenchError::Data(format!("{}: {e}", path.display())))
}

pub fn template_hashes() -> BTreeMap<String, String> {
    prompts::ALL
        .iter()
        .map(|(id, text)| (id.to_string(), sha256_hex(text)))
        .collect()
}

pub struct Project {
    pub config: ProjectConfig,
    pub store: ArtifactStore,
}

impl Project {
    pub fn new(config: ProjectConfig) -> Self {
        let store = ArtifactStore::new(config.artifacts());
        Self { config, store }
    }

    pub fn load(config_path: &Path) -> Result<Self> {
        Ok(Self::new(ProjectConfig::load(config_path)?))
    }

    pub fn id(&self) -> &str {
        &self.config.project_id
    }

    pub fn state(&self) -> Result<PipelineState> {
        Ok(self.store.load_state(&self.config.project_id)?)
    }

    /// New provider instances, so scripted mocks start from the top.
    pub fn fresh_providers(&self) -> Result<Providers> {
        Ok(Providers::build(&self.config)?)
    }

    pub fn settings(&self) -> Result<AgentSettings> {
        let a = &self.config.agent;
        Ok(AgentSettings {
            react: ReactConfig {
                max_steps: a.max_steps,
                params: ChatParams::new(a.temperature, a.max_output_tokens)
                    .map_err(WorkbenchError::Data)?,
            },
            retrieval_k: a.retrieval_k,
            strict: self.config.policy.strict,
            concurrency: a.concurrency,
        })
    }

    /// Everything about the agent that can change model output.
    fn agent_fingerprint(&self) -> String {
        let a = &self.config.agent;
        let templates = sha256_hex(serde_json::to_vec(&template_hashes()).expect("json"));
        format!(
            "chat={};temperature={};max_steps={};max_output_tokens={:?};k={};strict={};templates={}",
            chat_fingerprint(&self.config),
            a.temperature,
            a.max_steps,
            a.max_output_tokens,
            a.retrieval_k,
            self.config.policy.strict,
            templates
        )
    }

    fn artifact_hash(&self, st: &PipelineState, name: &str) -> String {
        st.artifacts.get(name).cloned().unwrap_or_default()
    }

    fn is_current(&self, st: &PipelineState, name: &str, hash: &str) -> bool {
        st.step(name).is_some_and(|r| {
            r.input_hash == hash && r.outputs.iter().all(|o| self.store.intact(st, o))
        })
    }

    /// Make room to (re)compute `name`: refuse, or with `force` discard,
    /// every step of a later family and the reviews it opened.
    fn guard(&self, st: &mut PipelineState, name: &str, force: bool) -> Result<()> {
        let f = family(name);
        let own_sub_later: Vec<String> = match st.steps.iter().position(|s| s.name == name) {
            Some(i) => st.steps[i + 1..]
                .iter()
                .filter(|s| family(&s.name) == f)
                .map(|s| s.name.clone())
                .collect(),
            None => Vec::new(),
        };
        let later: Vec<String> = st
            .steps
            .iter()
            .filter(|s| family(&s.name) > f || own_sub_later.contains(&s.name))
            .map(|s| s.name.clone())
            .collect();
        if later.is_empty() {
            return Ok(());
        }
        if !force {
            return Err(WorkbenchError::StageOrder(format!(
                "the inputs of {name} changed but later steps already ran ({}); rerun with --force to discard them",
                later.join(", ")
            )));
        }
        let discarded: Vec<StepRecord> = st
            .steps
            .iter()
            .filter(|s| later.contains(&s.name))
            .cloned()
            .collect();
        st.steps.retain(|s| !later.contains(&s.name));
        let keep: BTreeSet<String> = st.steps.iter().flat_map(|s| s.outputs.clone()).collect();
        for s in &discarded {
            for o in &s.outputs {
                if !keep.contains(o) {
                    self.store.remove(st, o)?;
                }
            }
        }
        let dropped_stage = |r: &ReviewItem| match r.stage {
            ReviewStage::SRApproval => f <= family("elicit"),
            ReviewStage::RevisionReview => f <= family("optimize"),
        };
        let mut retired = Vec::new();
        st.reviews.retain(|r| {
            if dropped_stage(r) {
                retired.extend(r.decision_id.clone());
                false
            } else {
                true
            }
        });
        // Reviews still pending may have decisions in the log as well.
        for d in self.store.decisions()? {
            if !st
                .reviews
                .iter()
                .any(|r| d.subject_refs.contains(&r.review_id))
                && !st.retired_decisions.contains(&d.decision_id)
            {
                retired.push(d.decision_id);
            }
        }
        for id in retired {
            if !st.retired_decisions.contains(&id) {
                st.retired_decisions.push(id);
            }
        }
        if f <= family("optimize") {
            for n in [names::TASKS, names::PROPOSALS, names::REVALIDATIONS] {
                if !keep.contains(n) {
                    self.store.remove(st, n)?;
                }
            }
        }
        st.stage = derive_stage(&st.steps);
        Ok(())
    }

    fn record(
        &self,
        st: &mut PipelineState,
        name: &str,
        hash: String,
        outputs: &[&str],
    ) -> Result<()> {
        let rec = StepRecord {
            name: name.to_string(),
            input_hash: hash,
            outputs: outputs.iter().map(|s| s.to_string()).collect(),
        };
        match st.steps.iter_mut().find(|s| s.name == name) {
            Some(r) => *r = rec,
            None => st.steps.push(rec),
        }
        st.stage = st.stage.max(derive_stage(&st.steps));
        self.store.save_state(st)?;
        Ok(())
    }

    fn require_steps(&self, st: &PipelineState, command: &str, steps: &[&str]) -> Result<()> {
        for s in steps {
            if st.step(s).is_none() {
                return Err(WorkbenchError::StageOrder(format!(
                    "{command} needs `{}` to have run first",
                    command_of(s)
                )));
            }
        }
        Ok(())
    }

    fn require_stage(&self, st: &PipelineState, command: &str, stage: Stage) -> Result<()> {
        if st.stage < stage {
            return Err(WorkbenchError::StageOrder(format!(
                "{command} needs stage {stage:?}, project is at {:?}",
                st.stage
            )));
        }
        Ok(())
    }

    fn read_index(&self, st: &PipelineState, name: &str) -> Result<VectorIndex> {
        let bytes = self.store.read_bytes(st, name)?;
        Ok(VectorIndex::from_bytes(&bytes)?)
    }

    fn write_index(&self, st: &mut PipelineState, name: &str, index: &VectorIndex) -> Result<()> {
        Ok(self.store.write_bytes(st, name, &index.to_bytes())?)
    }

    // ---- init / ingest / kg ------------------------------------------------

    pub fn init(&self) -> Result<Outcome> {
        let existed = self.store.is_initialized();
        let mut st = self.store.init(&self.config.project_id)?;
        let templates = template_hashes();
        let current = self
            .store
            .read_json::<BTreeMap<String, String>>(&st, names::TEMPLATES)
            .ok();
        if current.as_ref() != Some(&templates) {
            self.store
                .write_json(&mut st, names::TEMPLATES, &templates)?;
            self.store.save_state(&st)?;
            return Ok(Outcome::Ran);
        }
        Ok(Outcome::from_ran(!existed))
    }

    pub fn ingest(&self, opts: &Options) -> Result<Outcome> {
        let mut st = self.state()?;
        let srs_path = self.config.resolve(&self.config.inputs.srs);
        let tax_path = self.config.resolve(&self.config.inputs.taxonomy);
        let hash = input_hash(&[
            ("srs", file_hash(&srs_path)?),
            ("taxonomy", file_hash(&tax_path)?),
            ("coherence", self.config.thresholds.coherence.to_string()),
            ("allow_incoherent", opts.allow_incoherent.to_string()),
            ("embedding", embedding_fingerprint(&self.config)),
        ]);
        const OUT: [&str; 5] = [
            names::SPEC,
            names::TAXONOMY,
            names::COHERENCE,
            names::PRODUCT_INDEX,
            names::TAXONOMY_INDEX,
        ];
        if self.is_current(&st, "ingest", &hash) {
            return Ok(Outcome::UpToDate);
        }
        self.guard(&mut st, "ingest", opts.force)?;

        let srs_text = read_text(&srs_path)?;
        let spec = if srs_path.extension().is_some_and(|e| e == "json") {
            parse_srs_json(&srs_text)?
        } else {
            parse_srs(&srs_text)?
        };
        let entries = parse_taxonomy(&read_text(&tax_path)?)?;
        let embedder = self.fresh_providers()?.embedder.clone();

        let report = match coherence_check(
            &spec.scope_sections,
            self.config.thresholds.coherence,
            embedder.as_ref(),
        ) {
            Ok(r) => Some(r),
            Err(CorpusError::FewerThanTwoSections) => None,
            Err(e) => return Err(e.into()),
        };
        let failed = report.as_ref().is_some_and(|r| !r.passed);
        let coherence = CoherenceArtifact {
            embedding_provider: embedder.provider_id().to_string(),
            overridden: failed && opts.allow_incoherent,
            report,
        };
        self.store
            .write_json(&mut st, names::COHERENCE, &coherence)?;
        if failed && !opts.allow_incoherent {
            self.store.save_state(&st)?;
            let pairs: Vec<String> = coherence
                .report
                .iter()
                .flat_map(|r| &r.offending_pairs)
                .map(|p| format!("{} / {} ({:.3})", p.first, p.second, p.score))
                .collect();
            return Err(WorkbenchError::Data(format!(
                "scope sections are not coherent at threshold {}: {}; revise the SRS or allow incoherent input",
                self.config.thresholds.coherence,
                pairs.join(", ")
            )));
        }

        let rows: Vec<TaxonomyRow> = entries
            .iter()
            .map(|e| TaxonomyRow {
                record_id: taxonomy_record_id(e),
                entry: e.clone(),
            })
            .collect();
        let conc = self.config.agent.concurrency;
        let mut product = VectorIndex::for_provider(embedder.as_ref());
        product.add_chunks(&chunk_scope(&spec), embedder.as_ref(), conc)?;
        let mut taxonomy = VectorIndex::for_provider(embedder.as_ref());
        let tax_chunks: Vec<_> = entries.iter().map(contextualize).collect();
        if !tax_chunks.is_empty() {
            taxonomy.add_chunks(&tax_chunks, embedder.as_ref(), conc)?;
        }
        self.store.write_json(&mut st, names::SPEC, &spec)?;
        self.store.write_json(&mut st, names::TAXONOMY, &rows)?;
        self.write_index(&mut st, names::PRODUCT_INDEX, &product)?;
        self.write_index(&mut st, names::TAXONOMY_INDEX, &taxonomy)?;
        self.record(&mut st, "ingest", hash, &OUT)?;
        Ok(Outcome::Ran)
    }

    pub fn kg_build(&self, opts: &Options) -> Result<Outcome> {
        let mut st = self.state()?;
        let doc_path = self.config.resolve(&self.config.inputs.standard_doc);
        let edits_path = self
            .config
            .inputs
            .kg_edits
            .as_ref()
            .map(|p| self.config.resolve(p));
        let hash = input_hash(&[
            ("standard_doc", file_hash(&doc_path)?),
            (
                "edits",
                match &edits_path {
                    Some(p) => file_hash(p)?,
                    None => String::new(),
                },
            ),
            ("agent", self.agent_fingerprint()),
            ("embedding", embedding_fingerprint(&self.config)),
        ]);
        const OUT: [&str; 3] = [names::KG_EXTRACTION, names::GRAPH, names::GRAPH_INDEX];
        if self.is_current(&st, "kg", &hash) {
            return Ok(Outcome::UpToDate);
        }
        self.guard(&mut st, "kg", opts.force)?;

        let document = read_text(&doc_path)?;
        let providers = self.fresh_providers()?;
        let settings = self.settings()?;
        let prompt = greenreq_core::agent::render_prompt(
            "kg_extraction",
            &greenreq_core::agent::vars([("document", document.trim())]),
        )?;
        let extraction = extract_graph(&document, providers.chat.as_ref(), &settings.react.params)?;
        let (doc, edits) = match &edits_path {
            Some(p) => {
                let script = parse_edit_script(&read_text(p)?)?;
                apply_edits(&extraction.doc, &script)?
            }
            None => (extraction.doc.clone(), Vec::new()),
        };
        let final_report = validate(&doc);
        let artifact = KgArtifact {
            prompt_hash: sha256_hex(&prompt),
            extraction,
            edits,
            final_report: final_report.clone(),
        };
        self.store
            .write_json(&mut st, names::KG_EXTRACTION, &artifact)?;
        if !final_report.valid {
            self.store.save_state(&st)?;
            return Err(WorkbenchError::Data(format!(
                "extracted graph is invalid ({final_report}); see {}; correct it with an edit script (inputs.kg_edits)",
                names::KG_EXTRACTION
            )));
        }
        let graph = KnowledgeGraph::build(
            doc,
            providers.embedder.as_ref(),
            self.config.agent.concurrency,
        )?;
        self.store.write_bytes(
            &mut st,
            names::GRAPH,
            format!("{}\n", graph.doc().to_json()).as_bytes(),
        )?;
        self.write_index(&mut st, names::GRAPH_INDEX, graph.index())?;
        self.record(&mut st, "kg", hash, &OUT)?;
        Ok(Outcome::Ran)
    }

    fn load_graph(&self, st: &PipelineState) -> Result<KnowledgeGraph> {
        let doc: GraphDoc = self.store.read_json(st, names::GRAPH)?;
        let index = self.read_index(st, names::GRAPH_INDEX)?;
        Ok(KnowledgeGraph::from_parts(doc, index)?)
    }

    pub fn spec(&self, st: &PipelineState) -> Result<ProjectSpec> {
        Ok(self.store.read_json(st, names::SPEC)?)
    }

    // ---- elicitation -------------------------------------------------------

    pub fn elicit(&self, opts: &Options) -> Result<Outcome> {
        let mut st = self.state()?;
        self.require_steps(&st, "elicit", &["ingest", "kg"])?;
        let spec = self.spec(&st)?;
        let chunks = chunk_scope(&spec);
        let mut ran = false;

        let ctx_hash = input_hash(&[
            ("spec", self.artifact_hash(&st, names::SPEC)),
            ("graph", self.artifact_hash(&st, names::GRAPH)),
            ("graph_index", self.artifact_hash(&st, names::GRAPH_INDEX)),
            ("agent", self.agent_fingerprint()),
            ("embedding", embedding_fingerprint(&self.config)),
        ]);
        if !self.is_current(&st, "elicit.context", &ctx_hash) {
            self.guard(&mut st, "elicit.context", opts.force)?;
            let providers = self.fresh_providers()?;
            let graph = Arc::new(self.load_graph(&st)?);
            let context = generate_context(
                &chunks,
                graph,
                providers.embedder.clone(),
                providers.chat.as_ref(),
                &self.settings()?,
            )?;
            let index = context.context_index(providers.embedder.as_ref())?;
            self.store.write_json(&mut st, names::CONTEXT, &context)?;
            self.write_index(&mut st, names::CONTEXT_INDEX, &index)?;
            self.record(
                &mut st,
                "elicit.context",
                ctx_hash,
                &[names::CONTEXT, names::CONTEXT_INDEX],
            )?;
            ran = true;
        }

        let taxonomy_index = Arc::new(self.read_index(&st, names::TAXONOMY_INDEX)?);
        if taxonomy_index.is_empty() {
            return Err(WorkbenchError::Data("the taxonomy has no rows".into()));
        }
        let mut round = 1u32;
        let mut feedback: Vec<String> = Vec::new();
        loop {
            let step = format!("elicit.r{round}");
            let file = names::candidates_round(round);
            let hash = input_hash(&[
                ("context", self.artifact_hash(&st, names::CONTEXT)),
                (
                    "context_index",
                    self.artifact_hash(&st, names::CONTEXT_INDEX),
                ),
                (
                    "taxonomy_index",
                    self.artifact_hash(&st, names::TAXONOMY_INDEX),
                ),
                ("spec", self.artifact_hash(&st, names::SPEC)),
                ("agent", self.agent_fingerprint()),
                ("embedding", embedding_fingerprint(&self.config)),
                ("feedback", serde_json::to_string(&feedback).expect("json")),
            ]);
            if !self.is_current(&st, &step, &hash) {
                self.guard(&mut st, &step, opts.force)?;
                let providers = self.fresh_providers()?;
                let set = derive_srs(DeriveInputs {
                    project_id: &self.config.project_id,
                    chunks: &chunks,
                    context_index: Arc::new(self.read_index(&st, names::CONTEXT_INDEX)?),
                    taxonomy_index: taxonomy_index.clone(),
                    embedder: providers.embedder.clone(),
                    provider: providers.chat.as_ref(),
                    settings: &self.settings()?,
                    round,
                    feedback: &feedback,
                })?;
                self.store.write_json(&mut st, &file, &set)?;
                self.record(&mut st, &step, hash, &[&file])?;
                ran = true;
            }
            let review_id = review_id_sr(&self.config.project_id, round);
            st.open_review(ReviewItem {
                review_id: review_id.clone(),
                stage: ReviewStage::SRApproval,
                subject: format!("round-{round}"),
                round,
                artifact: file.clone(),
                status: ReviewStatus::Pending,
                decision_id: None,
            });
            self.store.save_state(&st)?;

            let decision = match self.recorded_decision(&st, &review_id)? {
                Some(d) => d,
                None => match self
                    .wait_for_decision(&mut st, std::slice::from_ref(&review_id), opts)?
                    .pop()
                {
                    Some(d) => d,
                    None => return Ok(Outcome::AwaitingReview(vec![review_id])),
                },
            };
            let set: CandidateSet = self.store.read_json(&st, &file)?;
            let (outcome, reviewed) =
                review_round(&set, &decision, self.config.policy.max_review_rounds)?;
            st.close_review(&review_id, &decision.decision_id);
            self.store.save_state(&st)?;
            match outcome {
                ReviewOutcome::Approved(sr_set) => {
                    let hash = input_hash(&[
                        ("candidates", self.artifact_hash(&st, &file)),
                        ("decision", serde_json::to_string(&decision).expect("json")),
                    ]);
                    if !self.is_current(&st, "elicit.approval", &hash) {
                        self.guard(&mut st, "elicit.approval", opts.force)?;
                        self.store
                            .write_json(&mut st, names::CANDIDATES, &reviewed)?;
                        self.store.write_json(&mut st, names::SR_SET, &sr_set)?;
                        self.record(
                            &mut st,
                            "elicit.approval",
                            hash,
                            &[names::CANDIDATES, names::SR_SET],
                        )?;
                        ran = true;
                    }
                    return Ok(Outcome::from_ran(ran));
                }
                ReviewOutcome::Rerun {
                    next_round,
                    feedback: fb,
                } => {
                    round = next_round;
                    feedback = fb;
                }
            }
        }
    }

    pub fn sr_set(&self, st: &PipelineState) -> Result<ElicitedSrSet> {
        Ok(self.store.read_json(st, names::SR_SET)?)
    }

    // ---- decisions ---------------------------------------------------------

    /// The decision that already closed `review_id`, if any.
    fn recorded_decision(
        &self,
        st: &PipelineState,
        review_id: &str,
    ) -> Result<Option<ReviewDecision>> {
        let Some(id) = st.review(review_id).and_then(|r| r.decision_id.as_deref()) else {
            return Ok(None);
        };
        Ok(self
            .store
            .decisions()?
            .into_iter()
            .find(|d| d.decision_id == id))
    }

    /// The unused decision for `review_id` in the log, if any.
    fn logged_decision(
        &self,
        st: &PipelineState,
        review_id: &str,
    ) -> Result<Option<ReviewDecision>> {
        let used: BTreeSet<&str> = st
            .reviews
            .iter()
            .filter_map(|r| r.decision_id.as_deref())
            .chain(st.retired_decisions.iter().map(String::as_str))
            .collect();
        Ok(self.store.decisions()?.into_iter().find(|d| {
            d.subject_refs.iter().any(|s| s == review_id) && !used.contains(d.decision_id.as_str())
        }))
    }

    /// Decisions from the configured decisions file for `review_id`.
    fn file_decision(&self, st: &PipelineState, review_id: &str) -> Result<Option<ReviewDecision>> {
        let Some(path) = &self.config.policy.decisions else {
            return Ok(None);
        };
        let path = self.config.resolve(path);
        let text = read_text(&path)?;
        let all: Vec<ReviewDecision> = serde_json::from_str(&text)
            .map_err(|e| WorkbenchError::Data(format!("{}: {e}", path.display())))?;
        let logged: BTreeSet<String> = self
            .store
            .decisions()?
            .into_iter()
            .map(|d| d.decision_id)
            .collect();
        Ok(all.into_iter().find(|d| {
            d.subject_refs.iter().any(|s| s == review_id)
                && !logged.contains(&d.decision_id)
                && !st.retired_decisions.contains(&d.decision_id)
        }))
    }

    /// One decision per review that has one; in batch mode from the log or
    /// the decisions file, in interactive mode polling the log until at
    /// least one arrives.
    fn wait_for_decision(
        &self,
        st: &mut PipelineState,
        review_ids: &[String],
        opts: &Options,
    ) -> Result<Vec<ReviewDecision>> {
        let started = Instant::now();
        loop {
            let mut found = Vec::new();
            for id in review_ids {
                if let Some(d) = self.logged_decision(st, id)? {
                    found.push(d);
                } else if let Some(d) = self.file_decision(st, id)? {
                    let d = self.normalize_decision(st, id, d)?;
                    self.check_decision(st, id, &d)?;
                    self.store.append_decision(&d)?;
                    found.push(d);
                }
            }
            if !found.is_empty() {
                return Ok(found);
            }
            match opts.wait {
                Wait::Return => return Ok(Vec::new()),
                Wait::Poll { interval, timeout } => {
                    if timeout.is_some_and(|t| started.elapsed() >= t) {
                        return Err(WorkbenchError::ReviewTimeout(review_ids.join(", ")));
                    }
                    thread::sleep(interval);
                }
            }
        }
    }

    /// Subject refs name the review and, for revisions, the task.
    pub fn normalize_decision(
        &self,
        st: &PipelineState,
        review_id: &str,
        mut d: ReviewDecision,
    ) -> Result<ReviewDecision> {
        let review = st
            .review(review_id)
            .ok_or_else(|| DecisionError::NotFound(format!("no review {review_id}")))?;
        let mut refs = vec![review_id.to_string()];
        if review.stage == ReviewStage::RevisionReview {
            refs.push(review.subject.clone());
        }
        for r in refs.into_iter().rev() {
            if !d.subject_refs.contains(&r) {
                d.subject_refs.insert(0, r);
            }
        }
        Ok(d)
    }

    /// Would `decision` be accepted for `review_id` right now?
    pub fn check_decision(
        &self,
        st: &PipelineState,
        review_id: &str,
        decision: &ReviewDecision,
    ) -> Result<()> {
        let review = st
            .review(review_id)
            .ok_or_else(|| DecisionError::NotFound(format!("no review {review_id}")))?;
        if review.status != ReviewStatus::Pending {
            return Err(DecisionError::Conflict(format!(
                "review {review_id} was already decided by {}",
                review.decision_id.as_deref().unwrap_or("?")
            ))
            .into());
        }
        if decision.stage != review.stage {
            return Err(DecisionError::Conflict(format!(
                "review {review_id} is a {:?} review, decision is for {:?}",
                review.stage, decision.stage
            ))
            .into());
        }
        if self
            .store
            .decisions()?
            .iter()
            .any(|d| d.decision_id == decision.decision_id)
        {
            return Err(DecisionError::Conflict(format!(
                "decision {} already exists",
                decision.decision_id
            ))
            .into());
        }
        if let Some(queued) = self.logged_decision(st, review_id)? {
            return Err(DecisionError::Conflict(format!(
                "review {review_id} already has queued decision {}",
                queued.decision_id
            ))
            .into());
        }
        match review.stage {
            ReviewStage::SRApproval => {
                let set: CandidateSet = self.store.read_json(st, &review.artifact)?;
                review_round(&set, decision, self.config.policy.max_review_rounds)?;
            }
            ReviewStage::RevisionReview => {
                let tasks: Vec<OptimizationTask> = self.store.read_json(st, names::TASKS)?;
                let mut task = tasks
                    .into_iter()
                    .find(|t| t.task_id == review.subject)
                    .ok_or_else(|| {
                        DecisionError::NotFound(format!("no task {}", review.subject))
                    })?;
                analyst_review(&mut task, decision, self.config.policy.reproposal_limit)?;
            }
        }
        Ok(())
    }

    /// Stages of pending reviews that already have a decision in the log.
    pub fn actionable_stages(&self) -> Result<Vec<ReviewStage>> {
        let st = self.state()?;
        let mut out = Vec::new();
        for r in st.pending_reviews() {
            if !out.contains(&r.stage) && self.logged_decision(&st, &r.review_id)?.is_some() {
                out.push(r.stage);
            }
        }
        Ok(out)
    }

    /// Continue the stage a review belongs to.
    pub fn resume(&self, stage: ReviewStage, opts: &Options) -> Result<Outcome> {
        match stage {
            ReviewStage::SRApproval => self.elicit(opts),
            ReviewStage::RevisionReview => self.optimize(opts),
        }
    }

    // ---- relation integration ----------------------------------------------

    pub fn relate(&self, opts: &Options) -> Result<Outcome> {
        let mut st = self.state()?;
        self.require_stage(&st, "relate", Stage::Elicited)?;
        let hash = input_hash(&[
            ("spec", self.artifact_hash(&st, names::SPEC)),
            ("sr_set", self.artifact_hash(&st, names::SR_SET)),
            ("threshold", self.config.thresholds.related.to_string()),
            ("embedding", embedding_fingerprint(&self.config)),
        ]);
        const OUT: [&str; 3] = [names::PAIRS, names::RELATED, names::RELATED_INDEX];
        if self.is_current(&st, "relate", &hash) {
            return Ok(Outcome::UpToDate);
        }
        self.guard(&mut st, "relate", opts.force)?;
        let spec = self.spec(&st)?;
        let srs = self.sr_set(&st)?.requirements();
        let embedder = self.fresh_providers()?.embedder.clone();
        let conc = self.config.agent.concurrency;
        let pairs = generate_pairs(&spec.functional_reqs, &spec.nonfunctional_reqs, &srs)?;
        let scored = score_pairs(&pairs, embedder.as_ref(), conc)?;
        let threshold = self.config.thresholds.related;
        let related = filter_scored(&scored, threshold);
        let counts = PairCounts {
            frs: spec.functional_reqs.len(),
            nfrs: spec.nonfunctional_reqs.len(),
            srs: srs.len(),
            possible: expected_pair_count(
                spec.functional_reqs.len(),
                spec.nonfunctional_reqs.len(),
                srs.len(),
            ),
            related: related.len(),
        };
        let index = related_pair_index(&related, embedder.as_ref(), conc)?;
        let provider = embedder.provider_id().to_string();
        self.store.write_json(
            &mut st,
            names::PAIRS,
            &PairsArtifact {
                embedding_provider: provider.clone(),
                threshold,
                counts: counts.clone(),
                pairs: scored,
            },
        )?;
        self.store.write_json(
            &mut st,
            names::RELATED,
            &PairsArtifact {
                embedding_provider: provider,
                threshold,
                counts,
                pairs: related,
            },
        )?;
        self.write_index(&mut st, names::RELATED_INDEX, &index)?;
        self.record(&mut st, "relate", hash, &OUT)?;
        Ok(Outcome::Ran)
    }

    pub fn related(&self, st: &PipelineState) -> Result<PairsArtifact> {
        Ok(self.store.read_json(st, names::RELATED)?)
    }

    fn catalog_hashes(&self) -> Result<String> {
        let c = &self.config.inputs.catalogs;
        Ok(format!(
            "{}:{}:{}",
            file_hash(&self.config.resolve(&c.fr_dependency))?,
            file_hash(&self.config.resolve(&c.nfr_correlation))?,
            file_hash(&self.config.resolve(&c.sr_correlation))?
        ))
    }

    fn build_catalogs(&self, st: &mut PipelineState) -> Result<Catalogs> {
        let c = &self.config.inputs.catalogs;
        let embedder = self.fresh_providers()?.embedder.clone();
        let mut indexes = BTreeMap::new();
        for (id, path) in [
            (CatalogId::FRDependency, &c.fr_dependency),
            (CatalogId::NFRCorrelation, &c.nfr_correlation),
            (CatalogId::SRCorrelation, &c.sr_correlation),
        ] {
            let catalog = Catalog::parse(id, &read_text(&self.config.resolve(path))?)?;
            let index = catalog.index(embedder.as_ref())?;
            self.write_index(st, &names::catalog_index(id.prefix()), &index)?;
            indexes.insert(id, Arc::new(index));
        }
        Ok(Catalogs::from_indexes(indexes, embedder)?)
    }

    pub fn catalogs(&self, st: &PipelineState) -> Result<Catalogs> {
        let embedder = self.fresh_providers()?.embedder.clone();
        let mut indexes = BTreeMap::new();
        for id in CatalogId::ALL {
            indexes.insert(
                id,
                Arc::new(self.read_index(st, &names::catalog_index(id.prefix()))?),
            );
        }
        Ok(Catalogs::from_indexes(indexes, embedder)?)
    }

    pub fn classify(&self, opts: &Options) -> Result<Outcome> {
        let mut st = self.state()?;
        self.require_stage(&st, "classify", Stage::Related)?;
        let hash = input_hash(&[
            ("related", self.artifact_hash(&st, names::RELATED)),
            ("catalogs", self.catalog_hashes()?),
            ("agent", self.agent_fingerprint()),
            ("runs", self.config.agent.runs.to_string()),
            ("embedding", embedding_fingerprint(&self.config)),
        ]);
        let catalog_files: Vec<String> = CatalogId::ALL
            .iter()
            .map(|c| names::catalog_index(c.prefix()))
            .collect();
        let mut out: Vec<&str> = vec![names::VERDICTS];
        out.extend(catalog_files.iter().map(String::as_str));
        if self.is_current(&st, "classify", &hash) {
            return Ok(Outcome::UpToDate);
        }
        self.guard(&mut st, "classify", opts.force)?;
        let related = self.related(&st)?;
        let catalogs = self.build_catalogs(&mut st)?;
        let providers = self.fresh_providers()?;
        let run = classify_all(
            &related.pairs,
            &catalogs,
            providers.chat.as_ref(),
            &self.settings()?,
            self.config.agent.runs,
        );
        let run = match run {
            Ok(r) => r,
            Err(e) => {
                self.store.save_state(&st)?;
                return Err(e.into());
            }
        };
        self.store.write_json(&mut st, names::VERDICTS, &run)?;
        self.record(&mut st, "classify", hash, &out)?;
        Ok(Outcome::Ran)
    }

    pub fn verdicts(&self, st: &PipelineState) -> Result<ClassificationRun> {
        Ok(self.store.read_json(st, names::VERDICTS)?)
    }

    // ---- optimization ------------------------------------------------------

    pub fn tasks(&self, st: &PipelineState) -> Result<Vec<OptimizationTask>> {
        Ok(self.store.read_json(st, names::TASKS)?)
    }

    fn write_tasks(&self, st: &mut PipelineState, tasks: &[OptimizationTask]) -> Result<()> {
        let pid = &self.config.project_id;
        let proposals: Vec<ProposalRecord> = tasks
            .iter()
            .flat_map(|t| {
                t.attempts.iter().map(move |a| ProposalRecord {
                    task_id: t.task_id.clone(),
                    round: a.round,
                    review_id: review_id_revision(pid, &t.task_id, a.round),
                    status: t.status,
                    original: t.requirement.clone(),
                    sustainability_requirement: t.sustainability_requirement.clone(),
                    constraint_srs: t.constraint_srs.iter().map(|r| r.id.clone()).collect(),
                    feedback: t.feedback.clone(),
                    attempt: a.clone(),
                })
            })
            .collect();
        self.store.write_json(st, names::TASKS, &tasks)?;
        self.store.write_json(st, names::PROPOSALS, &proposals)?;
        self.store.save_state(st)?;
        Ok(())
    }

    pub fn optimize(&self, opts: &Options) -> Result<Outcome> {
        let mut st = self.state()?;
        self.require_stage(&st, "optimize", Stage::Classified)?;
        let mut ran = false;
        let tasks_hash = input_hash(&[
            ("verdicts", self.artifact_hash(&st, names::VERDICTS)),
            ("related", self.artifact_hash(&st, names::RELATED)),
        ]);
        if !self.is_current(&st, "optimize.tasks", &tasks_hash) {
            self.guard(&mut st, "optimize.tasks", opts.force)?;
            let run = self.verdicts(&st)?;
            let related = self.related(&st)?;
            let tasks = find_negative_pairs(&run.verdicts, &related.pairs)?;
            self.store.write_json(
                &mut st,
                names::REVALIDATIONS,
                &Vec::<SubjectTranscript>::new(),
            )?;
            self.write_tasks(&mut st, &tasks)?;
            self.record(&mut st, "optimize.tasks", tasks_hash, &[names::TASKS])?;
            ran = true;
        }
        let mut tasks = self.tasks(&st)?;
        let limit = self.config.policy.reproposal_limit;
        let pid = self.config.project_id.clone();
        let started = Instant::now();
        loop {
            let open: Vec<usize> = (0..tasks.len())
                .filter(|&i| matches!(tasks[i].status, TaskStatus::Pending | TaskStatus::Proposed))
                .collect();
            if !open.is_empty() {
                if st.step("optimize").is_some() {
                    self.guard(&mut st, "optimize", opts.force)?;
                }
                self.propose_and_revalidate(&mut st, &mut tasks, &open)?;
                ran = true;
            }
            let mut waiting = Vec::new();
            for t in tasks.iter().filter(|t| t.status == TaskStatus::Revalidated) {
                let review_id = review_id_revision(&pid, &t.task_id, t.attempts.len() as u32);
                st.open_review(ReviewItem {
                    review_id: review_id.clone(),
                    stage: ReviewStage::RevisionReview,
                    subject: t.task_id.clone(),
                    round: t.attempts.len() as u32,
                    artifact: names::PROPOSALS.into(),
                    status: ReviewStatus::Pending,
                    decision_id: None,
                });
                waiting.push(review_id);
            }
            self.store.save_state(&st)?;
            if waiting.is_empty() {
                break;
            }
            let once = Options {
                wait: Wait::Return,
                ..*opts
            };
            let decisions = self.wait_for_decision(&mut st, &waiting, &once)?;
            if decisions.is_empty() {
                match opts.wait {
                    Wait::Return => return Ok(Outcome::AwaitingReview(waiting)),
                    Wait::Poll { interval, timeout } => {
                        if timeout.is_some_and(|t| started.elapsed() >= t) {
                            return Err(WorkbenchError::ReviewTimeout(waiting.join(", ")));
                        }
                        thread::sleep(interval);
                        continue;
                    }
                }
            }
            for d in decisions {
                let review_id = waiting
                    .iter()
                    .find(|id| d.subject_refs.contains(id))
                    .expect("decision matched a waiting review")
                    .clone();
                let subject = st.review(&review_id).expect("open review").subject.clone();
                let task = tasks
                    .iter_mut()
                    .find(|t| t.task_id == subject)
                    .expect("review subject is a task");
                analyst_review(task, &d, limit)?;
                st.close_review(&review_id, &d.decision_id);
            }
            self.write_tasks(&mut st, &tasks)?;
            ran = true;
        }
        let hash = input_hash(&[("tasks", self.artifact_hash(&st, names::TASKS))]);
        if !self.is_current(&st, "optimize", &hash) {
            self.record(
                &mut st,
                "optimize",
                hash,
                &[names::TASKS, names::PROPOSALS, names::REVALIDATIONS],
            )?;
            ran = true;
        }
        Ok(Outcome::from_ran(ran))
    }

    fn propose_and_revalidate(
        &self,
        st: &mut PipelineState,
        tasks: &mut [OptimizationTask],
        open: &[usize],
    ) -> Result<()> {
        let providers = self.fresh_providers()?;
        let settings = self.settings()?;
        let catalogs = self.catalogs(st)?;
        let transcripts: Mutex<Vec<SubjectTranscript>> = Mutex::new(Vec::new());
        let work: Vec<OptimizationTask> = open.iter().map(|&i| tasks[i].clone()).collect();
        let results = par_map_ordered(&work, self.config.agent.concurrency, |task| {
            let mut task = task.clone();
            if task.status == TaskStatus::Pending {
                propose_revision(&mut task, providers.chat.as_ref(), &settings.react.params)?;
            }
            let round = task.attempts.len() as u32;
            revalidate(&mut task, providers.embedder.as_ref(), |pair| {
                let c = classify(pair, &catalogs, providers.chat.as_ref(), &settings, 0)?;
                transcripts
                    .lock()
                    .expect("transcripts")
                    .push(SubjectTranscript {
                        subject: format!("{}#revalidation-r{round}", pair.pair_id),
                        transcript: c.transcript,
                    });
                Ok(c.verdict)
            })?;
            Ok::<_, greenreq_core::sustainability_optimizer::OptimizeError>(task)
        });
        let mut first_error = None;
        for (&i, r) in open.iter().zip(results) {
            match r {
                Ok(t) => tasks[i] = t,
                Err(e) => {
                    first_error.get_or_insert(e);
                }
            }
        }
        let mut log: Vec<SubjectTranscript> = self
            .store
            .read_json(st, names::REVALIDATIONS)
            .unwrap_or_default();
        let mut new = transcripts.into_inner().expect("transcripts");
        new.sort_by(|a, b| greenreq_core::util::natural_cmp(&a.subject, &b.subject));
        log.extend(new);
        self.store.write_json(st, names::REVALIDATIONS, &log)?;
        self.write_tasks(st, tasks)?;
        match first_error {
            Some(e) => Err(e.into()),
            None => Ok(()),
        }
    }

    // ---- completeness ------------------------------------------------------

    pub fn check(&self, opts: &Options) -> Result<Outcome> {
        let mut st = self.state()?;
        self.require_stage(&st, "check", Stage::Optimized)?;
        let predicate = self.config.policy.completeness;
        let hash = input_hash(&[
            ("verdicts", self.artifact_hash(&st, names::VERDICTS)),
            ("tasks", self.artifact_hash(&st, names::TASKS)),
            ("sr_set", self.artifact_hash(&st, names::SR_SET)),
            ("spec", self.artifact_hash(&st, names::SPEC)),
            ("predicate", format!("{predicate:?}")),
        ]);
        const OUT: [&str; 3] = [
            names::COMPLETENESS,
            names::FINAL_REQUIREMENTS,
            names::CHANGELOG,
        ];
        if self.is_current(&st, "check", &hash) {
            return Ok(Outcome::UpToDate);
        }
        self.guard(&mut st, "check", opts.force)?;
        let run = self.verdicts(&st)?;
        let tasks = self.tasks(&st)?;
        let srs = self.sr_set(&st)?.requirements();
        let spec = self.spec(&st)?;
        let finals = final_verdicts(&run.verdicts, &tasks);
        let report = completeness_check(&srs, &finals, predicate.into());
        let requirements: Vec<Requirement> = spec.requirements().cloned().chain(srs).collect();
        self.store.write_json(
            &mut st,
            names::COMPLETENESS,
            &CompletenessArtifact {
                complete: report.complete(),
                report,
                final_verdicts: finals,
            },
        )?;
        self.store.write_json(
            &mut st,
            names::FINAL_REQUIREMENTS,
            &FinalRequirementsArtifact {
                project_id: self.config.project_id.clone(),
                requirements: final_requirements(&requirements, &tasks),
            },
        )?;
        self.store
            .write_bytes(&mut st, names::CHANGELOG, changelog(&tasks).as_bytes())?;
        self.record(&mut st, "check", hash, &OUT)?;
        Ok(Outcome::Ran)
    }

    pub fn completeness(&self, st: &PipelineState) -> Result<CompletenessArtifact> {
        Ok(self.store.read_json(st, names::COMPLETENESS)?)
    }

    /// init through check, stopping at the first pending review.
    pub fn run_all(&self, opts: &Options) -> Result<Outcome> {
        let mut ran = self.init()? == Outcome::Ran;
        type Stepper = fn(&Project, &Options) -> Result<Outcome>;
        let steps: [Stepper; 7] = [
            Project::ingest,
            Project::kg_build,
            Project::elicit,
            Project::relate,
            Project::classify,
            Project::optimize,
            Project::check,
        ];
        for step in steps {
            match step(self, opts)? {
                Outcome::Ran => ran = true,
                Outcome::UpToDate => {}
                waiting @ Outcome::AwaitingReview(_) => return Ok(waiting),
            }
        }
        Ok(Outcome::from_ran(ran))
    }
}

fn command_of(step: &str) -> &'static str {
    match family(step) {
        1 => "ingest",
        2 => "kg build",
        3 => "elicit",
        4 => "relate",
        5 => "classify",
        6 => "optimize",
        7 => "check",
        _ => "init",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_follows_completed_steps() {
        let rec = |n: &str| StepRecord {
            name: n.into(),
            input_hash: String::new(),
            outputs: Vec::new(),
        };
        assert_eq!(derive_stage(&[]), Stage::Init);
        assert_eq!(
            derive_stage(&[rec("ingest"), rec("kg"), rec("elicit.r1")]),
            Stage::Init
        );
        assert_eq!(derive_stage(&[rec("elicit.approval")]), Stage::Elicited);
        assert_eq!(
            derive_stage(&[rec("elicit.approval"), rec("relate"), rec("classify")]),
            Stage::Classified
        );
        assert_eq!(derive_stage(&[rec("optimize.tasks")]), Stage::Init);
    }

    #[test]
    fn input_hash_depends_on_every_part() {
        let a = input_hash(&[("x", "1".into()), ("y", "2".into())]);
        assert_ne!(a, input_hash(&[("x", "1".into()), ("y", "3".into())]));
        assert_ne!(a, input_hash(&[("x", "12".into()), ("y", "".into())]));
        assert_eq!(a, input_hash(&[("x", "1".into()), ("y", "2".into())]));
    }

    #[test]
    fn review_ids() {
        assert_eq!(review_id_sr("p", 2), "p.sr.r2");
        assert_eq!(review_id_revision("p", "FR31~SR4", 1), "p.rev.FR31~SR4.r1");
    }
}
