#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use menet::synthetic::{generate, to_jsonl, SyntheticConfig};

/// Small embeddings and short training so a full run takes a moment.
pub const FAST: &str = r#"
seed = 1
deterministic = true

[paths]
input = "tweets.jsonl"
workdir = "work"

[corpus]
train_fraction = 0.6
validation_fraction = 0.2

[features]
min_df = 2

[features.doc2vec]
dim = 8
epochs = 5
infer_epochs = 5

[features.walk]
walk_length = 10
walks_per_node = 2

[features.node2vec]
dim = 8
epochs = 1

[features.graph]
celebrity_threshold = 10

[model]
learning_rate = 0.01
max_epochs = 30
patience = 5

[model.hidden]
tfidf = 8
node2vec = 8
doc2vec = 4
timestamp = 4
"#;

pub struct Fixture {
    pub dir: tempfile::TempDir,
}

impl Fixture {
    /// A synthetic corpus of `n_users` and the fast config plus `extra`
    /// appended (later keys must go in new sections).
    pub fn new(n_users: usize, extra: &str) -> Self {
        Self::with_corpus(&SyntheticConfig { n_users, ..SyntheticConfig::default() }, extra)
    }

    pub fn with_corpus(corpus: &SyntheticConfig, extra: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let c = generate(corpus);
        std::fs::write(dir.path().join("tweets.jsonl"), to_jsonl(&c.records)).unwrap();
        std::fs::write(dir.path().join("config.toml"), format!("{FAST}\n{extra}")).unwrap();
        Fixture { dir }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    pub fn work(&self, name: &str) -> PathBuf {
        self.dir.path().join("work").join(name)
    }

    pub fn write(&self, name: &str, text: &str) -> PathBuf {
        let p = self.path(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    pub fn menet(&self, args: &[&str]) -> Output {
        menet_in(self.dir.path(), &self.path("config.toml"), args)
    }

    /// Runs a command and panics with its stderr if it fails.
    pub fn ok(&self, args: &[&str]) -> String {
        let out = self.menet(args);
        assert!(
            out.status.success(),
            "menet {args:?} failed with {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        );
        String::from_utf8(out.stdout).unwrap()
    }

    pub fn pipeline(&self) {
        for cmd in ["ingest", "featurize", "train", "evaluate"] {
            self.ok(&[cmd]);
        }
    }
}

pub fn menet_in(dir: &Path, config: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_menet"))
        .current_dir(dir)
        .arg("--config")
        .arg(config)
        .args(args)
        .output()
        .unwrap()
}

pub fn code(out: &Output) -> Option<i32> {
    out.status.code()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}
