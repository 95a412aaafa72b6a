//! Textual views: TF-IDF and paragraph vectors.

pub mod pvdbow;
pub mod tfidf;

pub use pvdbow::{train_pvdbow, PvdbowConfig, PvdbowModel};
pub use tfidf::{tfidf, Vocabulary};
