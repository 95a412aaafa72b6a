//! Train-split vocabulary and smoothed, l2-normalized TF-IDF.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::matrix::SparseVector;
use crate::scalar::Scalar;

/// Term index with document frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    index: HashMap<String, usize>,
    terms: Vec<String>,
    document_frequency: Vec<usize>,
    n_documents: usize,
}

impl Vocabulary {
    /// Builds the vocabulary from training documents. A term is kept when it
    /// occurs in at least `min_df` documents; indices follow lexicographic
    /// term order.
    pub fn fit<D, S>(docs: &[D], min_df: usize) -> Result<Self>
    where
        D: AsRef<[S]>,
        S: AsRef<str>,
    {
        if min_df == 0 {
            return Err(Error::InvalidConfig("min_df must be at least 1".into()));
        }
        if docs.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        for doc in docs {
            let distinct: BTreeSet<&str> = doc.as_ref().iter().map(|t| t.as_ref()).collect();
            for t in distinct {
                *df.entry(t).or_default() += 1;
            }
        }
        let mut vocab = Vocabulary {
            index: HashMap::new(),
            terms: Vec::new(),
            document_frequency: Vec::new(),
            n_documents: docs.len(),
        };
        for (term, count) in df.into_iter().filter(|&(_, c)| c >= min_df) {
            vocab.index.insert(term.to_string(), vocab.terms.len());
            vocab.terms.push(term.to_string());
            vocab.document_frequency.push(count);
        }
        if vocab.is_empty() {
            log::warn!("vocabulary is empty: no term reaches min_df = {min_df}");
        }
        Ok(vocab)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_documents(&self) -> usize {
        self.n_documents
    }

    pub fn get(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, idx: usize) -> &str {
        &self.terms[idx]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn document_frequency(&self, idx: usize) -> usize {
        self.document_frequency[idx]
    }

    /// `ln((1 + n) / (1 + df)) + 1`
    pub fn idf<T: Scalar>(&self, idx: usize) -> T {
        let n = T::lit(self.n_documents as f64);
        let df = T::lit(self.document_frequency[idx] as f64);
        ((T::one() + n) / (T::one() + df)).ln() + T::one()
    }
}

/// Raw-count TF times smoothed IDF, scaled to unit l2 norm. Terms outside
/// the vocabulary are ignored; a document without known terms maps to the
/// empty (zero) vector.
pub fn tfidf<T: Scalar, S: AsRef<str>>(tokens: &[S], vocab: &Vocabulary) -> SparseVector<T> {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for t in tokens {
        if let Some(i) = vocab.get(t.as_ref()) {
            *counts.entry(i).or_default() += 1;
        }
    }
    let mut v = SparseVector {
        indices: Vec::with_capacity(counts.len()),
        values: Vec::with_capacity(counts.len()),
    };
    for (i, c) in counts {
        v.indices.push(i as u32);
        v.values.push(T::lit(c as f64) * vocab.idf::<T>(i));
    }
    let norm = v.norm();
    if norm > T::zero() {
        for x in &mut v.values {
            *x /= norm;
        }
    }
    v
}
