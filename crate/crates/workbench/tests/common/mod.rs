#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use greenreq_workbench::Project;
use tempfile::TempDir;

pub const PROJECT_ID: &str = "mini-home";

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/mini_home")
}

pub fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas/v1")
}

/// A private copy of the mini_home project; artifacts land inside it.
pub struct Fixture {
    pub dir: TempDir,
}

impl Fixture {
    /// Batch review mode with the bundled decisions file.
    pub fn batch() -> Self {
        let dir = TempDir::new().expect("tempdir");
        copy_dir(&fixture_dir(), dir.path());
        Self { dir }
    }

    /// No decisions file: the pipeline stops at every review.
    pub fn undecided() -> Self {
        let f = Self::batch();
        f.edit_config(|c| {
            c.lines()
                .filter(|l| !l.starts_with("decisions = "))
                .map(|l| format!("{l}\n"))
                .collect()
        });
        f
    }

    pub fn config(&self) -> PathBuf {
        self.dir.path().join("greenreq.toml")
    }

    pub fn artifacts(&self) -> PathBuf {
        self.dir.path().join("artifacts")
    }

    pub fn project(&self) -> Project {
        Project::load(&self.config()).expect("fixture config loads")
    }

    pub fn edit_config(&self, f: impl FnOnce(&str) -> String) {
        let text = fs::read_to_string(self.config()).unwrap();
        fs::write(self.config(), f(&text)).unwrap();
    }

    pub fn artifact_json(&self, name: &str) -> serde_json::Value {
        serde_json::from_slice(&fs::read(self.artifacts().join(name)).unwrap()).unwrap()
    }
}

pub fn copy_dir(src: &Path, dst: &Path) {
    fs::create_dir_all(dst).unwrap();
    for entry in fs::read_dir(src).unwrap() {
        let entry = entry.unwrap();
        let to = dst.join(entry.file_name());
        if entry.file_type().unwrap().is_dir() {
            copy_dir(&entry.path(), &to);
        } else {
            fs::copy(entry.path(), to).unwrap();
        }
    }
}

/// File name to bytes for every file in a directory.
pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

pub fn assert_close(actual: f64, expected: f64) {
    assert!((actual - expected).abs() < 1e-6, "{actual} != {expected}");
}

fn schema_doc(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

/// Compile `schema` with every shipped schema file registered by `$id`.
pub fn compile(schema: &serde_json::Value) -> jsonschema::Validator {
    let mut opts = jsonschema::options();
    for entry in fs::read_dir(schema_dir()).unwrap() {
        let doc = schema_doc(&entry.unwrap().path());
        let id = doc["$id"].as_str().unwrap().to_string();
        opts.with_resource(id, jsonschema::Resource::from_contents(doc).unwrap());
    }
    opts.build(schema)
        .unwrap_or_else(|e| panic!("{schema}: {e}"))
}

/// Validation errors of `instance` against a shipped schema file.
pub fn schema_errors(schema: &str, instance: &serde_json::Value) -> Vec<String> {
    compile(&schema_doc(&schema_dir().join(schema)))
        .iter_errors(instance)
        .map(|e| format!("{} at {}", e, e.instance_path))
        .collect()
}

/// Assert `instance` conforms to a shipped schema file.
pub fn validate(schema: &str, instance: &serde_json::Value) {
    let errors = schema_errors(schema, instance);
    assert!(errors.is_empty(), "{schema}: {errors:#?}");
}
