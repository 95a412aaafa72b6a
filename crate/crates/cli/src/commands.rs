//! The pipeline stages. Each stage reads its inputs from the workdir and
//! writes its outputs there, so any stage can be rerun on its own.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use menet::corpus::{
    assign_labels, build_documents, ingest, load_label_lookup, read_documents, read_split_file, write_documents,
    Split, SplitSpec, UserDocument,
};
use menet::embed::ExecutionMode;
use menet::features::{read_feature_view, write_feature_view, FeatureView};
use menet::geo::{EvalReport, GeoClassTable};
use menet::labels::LabelTask;
use menet::model::{read_checkpoint, write_checkpoint, MenetModel};
use menet::pipeline::{evaluate_split, featurize, fit, ViewKind};
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::error::CliError;

pub const DOCUMENTS: &str = "documents.bin";
pub const MANIFEST: &str = "split_manifest.json";
pub const FEATURES_DIR: &str = "features";
pub const MENTION_GRAPH: &str = "mention_graph.tsv";
pub const CHECKPOINT: &str = "model.ckpt";
pub const HISTORY: &str = "history.csv";
pub const CLASS_TABLE: &str = "class_table.csv";
pub const EVAL_REPORT: &str = "eval_report.json";
pub const PREDICTIONS: &str = "predictions.tsv";

/// Fixed file names under the working directory.
#[derive(Debug, Clone)]
pub struct Workdir(pub PathBuf);

impl Workdir {
    pub fn file(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }

    pub fn feature_file(&self, view: ViewKind) -> PathBuf {
        self.0.join(FEATURES_DIR).join(view.file_name())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

impl SplitCounts {
    pub fn of(docs: &[UserDocument]) -> Self {
        let n = |s| docs.iter().filter(|d| d.split == s).count();
        SplitCounts {
            train: n(Split::Train),
            validation: n(Split::Validation),
            test: n(Split::Test),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedUser {
    pub user_id: String,
    pub reason: String,
}

/// Written by `ingest`: the split of the ingested documents and what was
/// rejected on the way.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub task: LabelTask,
    /// Documents per split, after rejections.
    pub counts: SplitCounts,
    pub rejected_lines: usize,
    pub rejected_users: Vec<RejectedUser>,
    pub train_ids: Vec<String>,
    pub validation_ids: Vec<String>,
    pub test_ids: Vec<String>,
}

impl SplitManifest {
    fn ids(&self, split: Split) -> &[String] {
        match split {
            Split::Train => &self.train_ids,
            Split::Validation => &self.validation_ids,
            Split::Test => &self.test_ids,
        }
    }

    /// The documents must be exactly the manifest's users, in the
    /// manifest's splits.
    pub fn check(&self, docs: &[UserDocument]) -> Result<(), CliError> {
        for split in Split::ALL {
            let want: BTreeSet<&str> = self.ids(split).iter().map(String::as_str).collect();
            let have: BTreeSet<&str> = docs.iter().filter(|d| d.split == split).map(|d| d.user_id.as_str()).collect();
            if want != have {
                let odd = want.symmetric_difference(&have).next().copied().unwrap_or_default();
                return Err(CliError::Inconsistent(format!(
                    "{MANIFEST} and {DOCUMENTS} disagree on the {split} split (user {odd:?})"
                )));
            }
        }
        Ok(())
    }
}

fn mode(cfg: &PipelineConfig) -> ExecutionMode {
    if cfg.deterministic {
        ExecutionMode::Deterministic
    } else {
        ExecutionMode::Parallel
    }
}

fn require(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::missing(path, "file not found"))
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Config(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(menet::Error::from)?;
    Ok(())
}

/// Documents checked against the split manifest.
pub fn load_documents(wd: &Workdir) -> Result<Vec<UserDocument>, CliError> {
    let (docs_path, manifest_path) = (wd.file(DOCUMENTS), wd.file(MANIFEST));
    require(&docs_path)?;
    require(&manifest_path)?;
    let docs = read_documents(&docs_path)?;
    let text = fs::read_to_string(&manifest_path).map_err(|e| CliError::missing(&manifest_path, e))?;
    let manifest: SplitManifest =
        serde_json::from_str(&text).map_err(|e| CliError::missing(&manifest_path, format!("malformed manifest: {e}")))?;
    manifest.check(&docs)?;
    Ok(docs)
}

/// Feature files for `views`, checked to have one row per document.
pub fn load_views(wd: &Workdir, views: &[ViewKind], n_docs: usize) -> Result<Vec<FeatureView<f64>>, CliError> {
    let mut out: Vec<FeatureView<f64>> = Vec::with_capacity(views.len());
    for &v in views {
        let path = wd.feature_file(v);
        require(&path)?;
        let view = read_feature_view(&path)?;
        if let Some(first) = out.first() {
            if first.matrix.n_rows() != view.matrix.n_rows() {
                return Err(CliError::RowMismatch {
                    first: first.name.clone(),
                    first_rows: first.matrix.n_rows(),
                    second: view.name.clone(),
                    second_rows: view.matrix.n_rows(),
                });
            }
        }
        out.push(view);
    }
    if let Some(first) = out.first() {
        if first.matrix.n_rows() != n_docs {
            return Err(CliError::RowMismatch {
                first: DOCUMENTS.into(),
                first_rows: n_docs,
                second: first.name.clone(),
                second_rows: first.matrix.n_rows(),
            });
        }
    }
    Ok(out)
}

pub fn ingest_cmd(cfg: &PipelineConfig, out: &mut dyn Write) -> Result<SplitManifest, CliError> {
    let input = cfg
        .paths
        .input
        .as_ref()
        .ok_or_else(|| CliError::Config("no input file given (paths.input or --input)".into()))?;
    let ingested = ingest(input, cfg.corpus.format)?;
    for r in &ingested.rejected {
        log::warn!("{}:{}: {}", input.display(), r.line, r.reason);
    }
    let mut records = ingested.records;
    if let Some(path) = &cfg.corpus.labels {
        assign_labels(&mut records, &load_label_lookup(path)?);
    }
    cfg.task.apply(&mut records);

    let split = match &cfg.corpus.split_file {
        Some(path) => read_split_file(path)?,
        None => {
            let users: BTreeSet<&str> = records.iter().map(|r| r.user_id.as_str()).collect();
            let users: Vec<&str> = users.into_iter().collect();
            SplitSpec::random(&users, cfg.corpus.train_fraction, cfg.corpus.validation_fraction, cfg.seed)?
        }
    };
    let built = build_documents(&records, &split)?;
    let docs = built.documents;
    let ids = |s: Split| docs.iter().filter(|d| d.split == s).map(|d| d.user_id.clone()).collect();
    let manifest = SplitManifest {
        seed: cfg.seed,
        task: cfg.task,
        counts: SplitCounts::of(&docs),
        rejected_lines: ingested.rejected.len(),
        rejected_users: built
            .rejected_users
            .iter()
            .map(|(u, r)| RejectedUser {
                user_id: u.clone(),
                reason: r.to_string(),
            })
            .collect(),
        train_ids: ids(Split::Train),
        validation_ids: ids(Split::Validation),
        test_ids: ids(Split::Test),
    };

    let wd = Workdir(cfg.paths.workdir.clone());
    fs::create_dir_all(&wd.0).map_err(menet::Error::from)?;
    write_documents(&wd.file(DOCUMENTS), &docs)?;
    write_json(&wd.file(MANIFEST), &manifest)?;

    let c = manifest.counts;
    writeln!(out, "train {}\nvalidation {}\ntest {}", c.train, c.validation, c.test).map_err(menet::Error::from)?;
    writeln!(
        out,
        "rejected: {} lines, {} users",
        manifest.rejected_lines,
        manifest.rejected_users.len()
    )
    .map_err(menet::Error::from)?;
    Ok(manifest)
}

pub fn featurize_cmd(cfg: &PipelineConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let wd = Workdir(cfg.paths.workdir.clone());
    let docs = load_documents(&wd)?;
    let f = featurize::<f64>(&docs, &cfg.features, &cfg.views, cfg.seed, mode(cfg))?;
    fs::create_dir_all(wd.0.join(FEATURES_DIR)).map_err(menet::Error::from)?;
    for (&v, view) in cfg.views.iter().zip(&f.views) {
        let path = wd.feature_file(v);
        write_feature_view(&path, view)?;
        writeln!(out, "{v}: {} x {} -> {}", view.matrix.n_rows(), view.matrix.n_cols(), path.display())
            .map_err(menet::Error::from)?;
    }
    if let Some(g) = &f.graph {
        g.write_edge_list(&wd.file(MENTION_GRAPH))?;
        writeln!(
            out,
            "mention graph: {} edges, {} isolated users",
            g.n_edges(),
            g.isolated_nodes().len()
        )
        .map_err(menet::Error::from)?;
    }
    Ok(())
}

pub fn train_cmd(cfg: &PipelineConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let wd = Workdir(cfg.paths.workdir.clone());
    let docs = load_documents(&wd)?;
    let views = load_views(&wd, &cfg.views, docs.len())?;
    let fitted = fit(&docs, &views, &cfg.model)?;
    write_checkpoint(&wd.file(CHECKPOINT), &fitted.model, &cfg.model)?;
    fitted.history.write_csv(&wd.file(HISTORY))?;
    fitted.table.write_csv(&wd.file(CLASS_TABLE))?;
    let h = &fitted.history;
    writeln!(
        out,
        "trained {} epochs{}; best epoch {} with validation accuracy {:.4}",
        h.records.len(),
        if h.stopped_early { " (early stop)" } else { "" },
        h.best_epoch,
        h.best_score
    )
    .map_err(menet::Error::from)?;
    Ok(())
}

/// Everything needed to apply a trained model.
pub struct Trained {
    pub docs: Vec<UserDocument>,
    pub views: Vec<FeatureView<f64>>,
    pub model: MenetModel<f64>,
    pub table: GeoClassTable,
}

/// Loads the checkpoint and the feature files of the views it was trained
/// on.
pub fn load_trained(wd: &Workdir) -> Result<Trained, CliError> {
    let ckpt = wd.file(CHECKPOINT);
    require(&ckpt)?;
    let table_path = wd.file(CLASS_TABLE);
    require(&table_path)?;
    let docs = load_documents(wd)?;
    let (model, header) = read_checkpoint::<f64>(&ckpt)?;
    let kinds: Vec<ViewKind> = header
        .views
        .iter()
        .map(|b| b.name.parse())
        .collect::<menet::Result<_>>()
        .map_err(|e| CliError::Inconsistent(format!("{CHECKPOINT}: {e}")))?;
    let views = load_views(wd, &kinds, docs.len())?;
    for (b, v) in header.views.iter().zip(&views) {
        if b.input_dim != v.matrix.n_cols() {
            return Err(menet::Error::DimensionMismatch {
                context: format!("{} view against {CHECKPOINT}", b.name),
                expected: b.input_dim,
                found: v.matrix.n_cols(),
            }
            .into());
        }
    }
    let table = GeoClassTable::read_csv(&table_path)?;
    if table.len() != header.n_classes {
        return Err(CliError::Inconsistent(format!(
            "{CLASS_TABLE} has {} classes but {CHECKPOINT} has {}",
            table.len(),
            header.n_classes
        )));
    }
    Ok(Trained { docs, views, model, table })
}

pub fn evaluate_cmd(cfg: &PipelineConfig, out: &mut dyn Write) -> Result<EvalReport, CliError> {
    let wd = Workdir(cfg.paths.workdir.clone());
    let t = load_trained(&wd)?;
    let report = evaluate_split(&t.model, &t.docs, &t.views, &t.table, Split::Test)?;
    write_json(&wd.file(EVAL_REPORT), &report)?;
    write!(out, "{report}").map_err(menet::Error::from)?;
    Ok(report)
}

/// Writes `user_id, split, label, latitude, longitude` for every user.
pub fn predict_cmd(cfg: &PipelineConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let wd = Workdir(cfg.paths.workdir.clone());
    let t = load_trained(&wd)?;
    let refs: Vec<_> = t.views.iter().map(|v| &v.matrix).collect();
    let pred = t.model.predict(&refs)?;
    let mut text = String::from("user_id\tsplit\tlabel\tlatitude\tlongitude\n");
    for (d, &p) in t.docs.iter().zip(&pred) {
        let c = t.table.class(p)?;
        text.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            d.user_id, d.split, c.label, c.latitude, c.longitude
        ));
    }
    let path = wd.file(PREDICTIONS);
    fs::write(&path, text).map_err(menet::Error::from)?;
    writeln!(out, "{} predictions -> {}", pred.len(), path.display()).map_err(menet::Error::from)?;
    Ok(())
}
