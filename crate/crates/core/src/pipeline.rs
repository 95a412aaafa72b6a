//! End-to-end orchestration: documents to feature views, views to a
//! trained model, model to an evaluation report.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{split_indices, Split, UserDocument};
use crate::embed::{mix_seed, ExecutionMode};
use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, FeatureView};
use crate::geo::{evaluate, EvalReport, GeoClassTable};
use crate::graph::{build_mention_graph, embed_graph, GraphConfig, MentionGraph, SkipGramConfig, WalkConfig};
use crate::matrix::{Matrix, SparseVector};
use crate::model::{train, BranchSpec, Dataset, HiddenSizes, History, MenetConfig, MenetModel};
use crate::scalar::{l2_norm, Scalar};
use crate::temporal::timestamp_view;
use crate::text::pvdbow::{train_pvdbow, PvdbowConfig};
use crate::text::tfidf::{tfidf, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ViewKind {
    Tfidf,
    Node2vec,
    Doc2vec,
    Timestamp,
}

impl ViewKind {
    /// Canonical branch order.
    pub const ALL: [ViewKind; 4] = [ViewKind::Tfidf, ViewKind::Node2vec, ViewKind::Doc2vec, ViewKind::Timestamp];

    pub fn name(self) -> &'static str {
        match self {
            ViewKind::Tfidf => "tfidf",
            ViewKind::Node2vec => "node2vec",
            ViewKind::Doc2vec => "doc2vec",
            ViewKind::Timestamp => "timestamp",
        }
    }

    pub fn file_name(self) -> String {
        format!("{}.fs", self.name())
    }

    pub fn hidden(self, sizes: &HiddenSizes) -> usize {
        match self {
            ViewKind::Tfidf => sizes.tfidf,
            ViewKind::Node2vec => sizes.node2vec,
            ViewKind::Doc2vec => sizes.doc2vec,
            ViewKind::Timestamp => sizes.timestamp,
        }
    }

    /// Parses a comma-separated list, returned in canonical order without
    /// duplicates.
    pub fn parse_list(s: &str) -> Result<Vec<ViewKind>> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            out.push(part.parse()?);
        }
        out.sort();
        out.dedup();
        if out.is_empty() {
            return Err(Error::InvalidConfig("no views selected".into()));
        }
        Ok(out)
    }
}

impl FromStr for ViewKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ViewKind::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown view {s:?}; expected tfidf, node2vec, doc2vec or timestamp")))
    }
}

impl fmt::Display for ViewKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    /// Minimum document frequency of TF-IDF terms.
    pub min_df: usize,
    pub doc2vec: PvdbowConfig,
    pub graph: GraphConfig,
    pub walk: WalkConfig,
    pub node2vec: SkipGramConfig,
    /// Scale paragraph and node vectors to unit l2 norm, like the TF-IDF and
    /// timestamp views.
    pub normalize_embeddings: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            min_df: 40,
            doc2vec: PvdbowConfig::default(),
            graph: GraphConfig::default(),
            walk: WalkConfig::default(),
            node2vec: SkipGramConfig::default(),
            normalize_embeddings: true,
        }
    }
}

fn train_tokens(docs: &[UserDocument]) -> Vec<&[String]> {
    docs.iter()
        .filter(|d| d.split == Split::Train)
        .map(|d| d.tokens.as_slice())
        .collect()
}

/// TF-IDF rows for every document over a vocabulary fitted on the training
/// split.
pub fn tfidf_view<T: Scalar>(docs: &[UserDocument], min_df: usize) -> Result<FeatureView<T>> {
    let vocab = Vocabulary::fit(&train_tokens(docs), min_df)?;
    let rows: Vec<SparseVector<T>> = docs.iter().map(|d| tfidf(&d.tokens, &vocab)).collect();
    Ok(FeatureView::new(
        ViewKind::Tfidf.name(),
        FeatureMatrix::Sparse {
            cols: vocab.len(),
            rows,
        },
    ))
}

/// Paragraph vectors: trained vectors for training users, inferred ones for
/// everyone else.
pub fn doc2vec_view<T: Scalar>(
    docs: &[UserDocument],
    cfg: &PvdbowConfig,
    seed: u64,
    mode: ExecutionMode,
) -> Result<FeatureView<T>> {
    let train_idx = split_indices(docs, Split::Train);
    let corpus = train_tokens(docs);
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let model = train_pvdbow::<T, _, _>(&corpus, cfg, mix_seed(seed, 0), mode)?;
    let mut m = Matrix::zeros(docs.len(), cfg.dim);
    let mut next_train = train_idx.iter().enumerate().peekable();
    for (i, d) in docs.iter().enumerate() {
        match next_train.peek() {
            Some(&(k, &ti)) if ti == i => {
                m.row_mut(i).copy_from_slice(model.doc_vector(k));
                next_train.next();
            }
            _ => {
                let v = model.infer_default(&d.tokens, mix_seed(seed, 1 + i as u64));
                m.row_mut(i).copy_from_slice(&v);
            }
        }
    }
    Ok(FeatureView::new(ViewKind::Doc2vec.name(), FeatureMatrix::Dense(m)))
}

/// Node vectors over the mention graph of all documents.
pub fn node2vec_view<T: Scalar>(
    docs: &[UserDocument],
    cfg: &FeatureConfig,
    seed: u64,
    mode: ExecutionMode,
) -> Result<(FeatureView<T>, MentionGraph)> {
    let graph = build_mention_graph(docs, &cfg.graph);
    let emb = embed_graph::<T>(&graph, &cfg.walk, &cfg.node2vec, seed, mode)?;
    Ok((emb.into_view(), graph))
}

#[derive(Debug, Clone)]
pub struct Featurized<T> {
    /// In the order requested.
    pub views: Vec<FeatureView<T>>,
    pub graph: Option<MentionGraph>,
}

pub fn featurize<T: Scalar>(
    docs: &[UserDocument],
    cfg: &FeatureConfig,
    views: &[ViewKind],
    seed: u64,
    mode: ExecutionMode,
) -> Result<Featurized<T>> {
    let mut out = Featurized {
        views: Vec::with_capacity(views.len()),
        graph: None,
    };
    for &v in views {
        let view_seed = mix_seed(seed, v as u64 + 100);
        log::info!("computing the {v} view");
        let fv = match v {
            ViewKind::Tfidf => tfidf_view(docs, cfg.min_df)?,
            ViewKind::Doc2vec => doc2vec_view(docs, &cfg.doc2vec, view_seed, mode)?,
            ViewKind::Node2vec => {
                let (fv, g) = node2vec_view(docs, cfg, view_seed, mode)?;
                out.graph = Some(g);
                fv
            }
            ViewKind::Timestamp => timestamp_view(docs)?,
        };
        let fv = if cfg.normalize_embeddings && matches!(v, ViewKind::Doc2vec | ViewKind::Node2vec) {
            normalize_rows(fv)
        } else {
            fv
        };
        out.views.push(fv);
    }
    Ok(out)
}

/// Scales each dense row to unit l2 norm; zero rows stay zero.
pub fn normalize_rows<T: Scalar>(mut view: FeatureView<T>) -> FeatureView<T> {
    if let FeatureMatrix::Dense(m) = &mut view.matrix {
        for i in 0..m.rows() {
            let row = m.row_mut(i);
            let n = l2_norm(row);
            if n > T::zero() {
                row.iter_mut().for_each(|x| *x /= n);
            }
        }
    }
    view
}

/// One branch per view, sized from the view names.
pub fn branch_specs<T: Scalar>(views: &[FeatureView<T>], hidden: &HiddenSizes) -> Result<Vec<BranchSpec>> {
    views
        .iter()
        .map(|v| {
            let h = hidden
                .get(&v.name)
                .ok_or_else(|| Error::InvalidConfig(format!("no hidden size configured for view {:?}", v.name)))?;
            Ok(BranchSpec {
                name: v.name.clone(),
                input_dim: v.matrix.n_cols().max(1),
                hidden: h,
            })
        })
        .collect()
}

/// Fails unless every view has one row per document.
pub fn check_rows<T: Scalar>(views: &[FeatureView<T>], n_docs: usize) -> Result<()> {
    for v in views {
        if v.matrix.n_rows() != n_docs {
            return Err(Error::DimensionMismatch {
                context: format!("rows of view {} versus documents", v.name),
                expected: n_docs,
                found: v.matrix.n_rows(),
            });
        }
    }
    Ok(())
}

/// Matrices restricted to `rows`; empty-vocabulary views get one zero column
/// so that every branch has an input.
pub fn select_rows<T: Scalar>(views: &[FeatureView<T>], rows: &[usize]) -> Vec<FeatureMatrix<T>> {
    views
        .iter()
        .map(|v| {
            let m = v.matrix.select_rows(rows);
            if m.n_cols() == 0 {
                FeatureMatrix::Dense(Matrix::zeros(rows.len(), 1))
            } else {
                m
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct Fitted<T> {
    pub model: MenetModel<T>,
    pub history: History,
    pub table: GeoClassTable,
}

/// Builds the class table from the training users and trains a network on
/// `views`, early-stopping on validation accuracy.
pub fn fit<T: Scalar>(docs: &[UserDocument], views: &[FeatureView<T>], cfg: &MenetConfig) -> Result<Fitted<T>> {
    check_rows(views, docs.len())?;
    let train_idx = split_indices(docs, Split::Train);
    let val_idx = split_indices(docs, Split::Validation);
    let train_docs: Vec<UserDocument> = train_idx.iter().map(|&i| docs[i].clone()).collect();
    let table = GeoClassTable::build(&train_docs)?;
    let labels = |idx: &[usize]| -> Result<Vec<usize>> { idx.iter().map(|&i| table.class_id(&docs[i].gt_label)).collect() };
    let (y_train, y_val) = (labels(&train_idx)?, labels(&val_idx)?);
    labels(&split_indices(docs, Split::Test))?;

    let specs = branch_specs(views, &cfg.hidden)?;
    let mut model = MenetModel::new(specs, table.len(), mix_seed(cfg.seed, 1))?;
    let x_train = select_rows(views, &train_idx);
    let x_val = select_rows(views, &val_idx);
    let (r_train, r_val): (Vec<_>, Vec<_>) = (x_train.iter().collect(), x_val.iter().collect());
    let history = train(
        &mut model,
        &Dataset { views: &r_train, labels: &y_train },
        &Dataset { views: &r_val, labels: &y_val },
        cfg,
    )?;
    Ok(Fitted { model, history, table })
}

/// Predictions for the users of `split`, in document order, with their
/// indices into `docs`.
pub fn predict_split<T: Scalar>(
    model: &MenetModel<T>,
    docs: &[UserDocument],
    views: &[FeatureView<T>],
    split: Split,
) -> Result<(Vec<usize>, Vec<usize>)> {
    check_rows(views, docs.len())?;
    let idx = split_indices(docs, split);
    let x = select_rows(views, &idx);
    let refs: Vec<_> = x.iter().collect();
    Ok((model.predict(&refs)?, idx))
}

pub fn evaluate_split<T: Scalar>(
    model: &MenetModel<T>,
    docs: &[UserDocument],
    views: &[FeatureView<T>],
    table: &GeoClassTable,
    split: Split,
) -> Result<EvalReport> {
    let (pred, idx) = predict_split(model, docs, views, split)?;
    let truth: Vec<UserDocument> = idx.iter().map(|&i| docs[i].clone()).collect();
    evaluate(&pred, &truth, table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn view_lists() {
        assert_eq!(
            ViewKind::parse_list("timestamp, tfidf,timestamp").unwrap(),
            vec![ViewKind::Tfidf, ViewKind::Timestamp]
        );
        assert!(ViewKind::parse_list("tfidf,words").is_err());
        assert!(ViewKind::parse_list("").is_err());
    }

    #[test]
    fn feature_defaults() {
        let c = FeatureConfig::default();
        assert_eq!((c.min_df, c.doc2vec.dim, c.node2vec.dim), (40, 300, 300));
    }
}
