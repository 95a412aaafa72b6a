//! Mention-graph construction and node embeddings.

pub mod mention;
pub mod node2vec;
pub mod walk;

pub use mention::{build_mention_graph, count_mentions, GraphConfig, MentionGraph};
pub use node2vec::{embed_graph, train_node_embeddings, NodeEmbedding, SkipGramConfig};
pub use walk::{simulate_walks, transition_probabilities, WalkConfig, WalkSampler};
