//! Seeded synthetic corpus with a known regional structure.
//!
//! Users are spread evenly over `n_regions` regions. Three independent
//! channels carry regional signal, each deliberately weak on its own:
//!
//! * text: a small fraction of words come from regional word pools, and
//!   half of those are drawn from a random region's pool;
//! * mentions: users mention other users (mostly in their own region) and
//!   small local accounts; a national hub account mentioned by everyone is
//!   removed by celebrity pruning;
//! * posting hours: a region-specific peak with a wide spread.

use chrono::{Duration, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::corpus::{build_documents, Coordinates, Split, SplitSpec, TweetRecord, UserDocument};
use crate::embed::ExecutionMode;
use crate::error::Result;
use crate::features::FeatureView;
use crate::graph::{GraphConfig, SkipGramConfig, WalkConfig};
use crate::model::MenetConfig;
use crate::pipeline::{evaluate_split, featurize, fit, FeatureConfig, ViewKind};
use crate::scalar::Scalar;
use crate::text::pvdbow::PvdbowConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub n_users: usize,
    pub n_regions: usize,
    pub min_tweets: usize,
    pub max_tweets: usize,
    pub words_per_tweet: usize,
    pub common_vocabulary: usize,
    pub regional_vocabulary: usize,
    /// Probability that a word comes from the regional pools.
    pub regional_word_rate: f64,
    /// Probability that a regional word comes from the user's own region.
    pub own_region_rate: f64,
    /// Other users of interest mentioned per user, drawn uniformly from
    /// this inclusive range.
    pub min_user_mentions: usize,
    pub max_user_mentions: usize,
    pub intra_region_mention_rate: f64,
    pub local_accounts_per_region: usize,
    pub local_mention_rate: f64,
    /// Standard deviation of posting hours around the regional peak.
    pub hour_spread: f64,
    /// Uniform jitter of user coordinates around the region centre, in
    /// degrees.
    pub location_jitter: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_users: 400,
            n_regions: 4,
            min_tweets: 12,
            max_tweets: 30,
            words_per_tweet: 8,
            common_vocabulary: 400,
            regional_vocabulary: 40,
            regional_word_rate: 0.12,
            own_region_rate: 0.5,
            min_user_mentions: 1,
            max_user_mentions: 2,
            intra_region_mention_rate: 0.9,
            local_accounts_per_region: 20,
            local_mention_rate: 0.25,
            hour_spread: 5.0,
            location_jitter: 2.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub records: Vec<TweetRecord>,
    /// `(user_id, region)` in user order.
    pub users: Vec<(String, usize)>,
}

/// Region centres as (latitude, longitude); regions beyond the list reuse
/// it shifted south.
const CENTRES: [(f64, f64); 4] = [(40.7, -74.0), (41.9, -87.6), (29.8, -95.4), (37.8, -122.4)];

pub fn region_label(r: usize) -> String {
    format!("region{r}")
}

pub fn user_id(i: usize) -> String {
    format!("user{i:04}")
}

fn centre(r: usize) -> (f64, f64) {
    let (lat, lon) = CENTRES[r % CENTRES.len()];
    (lat - 5.0 * (r / CENTRES.len()) as f64, lon)
}

pub fn generate(cfg: &SyntheticConfig) -> SyntheticCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.n_users;
    let regions: Vec<usize> = (0..n).map(|i| i % cfg.n_regions.max(1)).collect();
    let members: Vec<Vec<usize>> = (0..cfg.n_regions)
        .map(|r| (0..n).filter(|&i| regions[i] == r).collect())
        .collect();
    let hour_noise = Normal::new(0.0, cfg.hour_spread.max(1e-9)).expect("finite spread");
    let start = Utc.with_ymd_and_hms(2016, 3, 1, 0, 0, 0).unwrap();

    let mut records = Vec::new();
    for i in 0..n {
        let r = regions[i];
        let (clat, clon) = centre(r);
        let j = cfg.location_jitter;
        let coords = Coordinates {
            latitude: (clat + rng.gen_range(-j..=j)).clamp(-90.0, 90.0),
            longitude: (clon + rng.gen_range(-j..=j)).clamp(-180.0, 180.0),
        };
        let n_tweets = rng.gen_range(cfg.min_tweets..=cfg.max_tweets.max(cfg.min_tweets));

        let mut mentions: Vec<String> = Vec::new();
        for _ in 0..rng.gen_range(cfg.min_user_mentions..=cfg.max_user_mentions.max(cfg.min_user_mentions)) {
            let pool: &[usize] = if rng.gen_bool(cfg.intra_region_mention_rate) {
                &members[r]
            } else {
                &members[rng.gen_range(0..cfg.n_regions)]
            };
            if let Some(&t) = pool.choose(&mut rng) {
                if t != i {
                    mentions.push(format!("@{}", user_id(t)));
                }
            }
        }
        if cfg.local_accounts_per_region > 0 && rng.gen_bool(cfg.local_mention_rate) {
            let k = rng.gen_range(0..cfg.local_accounts_per_region);
            mentions.push(format!("@local{r}_{k}"));
        }
        mentions.push("@nationalnews".into());

        let peak = 24.0 * r as f64 / cfg.n_regions as f64;
        for t in 0..n_tweets {
            let mut words = Vec::with_capacity(cfg.words_per_tweet + 1);
            for _ in 0..cfg.words_per_tweet {
                if rng.gen_bool(cfg.regional_word_rate) && cfg.regional_vocabulary > 0 {
                    let from = if rng.gen_bool(cfg.own_region_rate) {
                        r
                    } else {
                        rng.gen_range(0..cfg.n_regions)
                    };
                    words.push(format!("rg{from}x{}", rng.gen_range(0..cfg.regional_vocabulary)));
                } else {
                    words.push(format!("cm{}", rng.gen_range(0..cfg.common_vocabulary)));
                }
            }
            if t < mentions.len() {
                words.push(mentions[t].clone());
            }
            let hour = (peak + hour_noise.sample(&mut rng)).rem_euclid(24.0).floor() as i64 % 24;
            let day = rng.gen_range(0..60);
            let minute = rng.gen_range(0..60);
            let timestamp = start + Duration::days(day) + Duration::hours(hour) + Duration::minutes(minute);
            records.push(TweetRecord {
                user_id: user_id(i),
                text: words.join(" "),
                timestamp,
                coordinates: Some(coords),
                label: Some(region_label(r)),
            });
        }
    }
    SyntheticCorpus {
        records,
        users: (0..n).map(|i| (user_id(i), regions[i])).collect(),
    }
}

/// Corpus, feature and model settings of the desk-scale benchmark: small
/// embeddings and a larger learning rate than the full-size defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Benchmark {
    pub corpus: SyntheticConfig,
    pub features: FeatureConfig,
    pub model: MenetConfig,
    pub train_fraction: f64,
    pub validation_fraction: f64,
}

impl Default for Benchmark {
    fn default() -> Self {
        Benchmark {
            corpus: SyntheticConfig::default(),
            features: FeatureConfig {
                min_df: 5,
                doc2vec: PvdbowConfig {
                    dim: 32,
                    epochs: 50,
                    ..PvdbowConfig::default()
                },
                walk: WalkConfig {
                    walk_length: 40,
                    walks_per_node: 10,
                    ..WalkConfig::default()
                },
                node2vec: SkipGramConfig {
                    dim: 32,
                    window: 5,
                    epochs: 3,
                    ..SkipGramConfig::default()
                },
                graph: GraphConfig {
                    celebrity_threshold: 10,
                    ..GraphConfig::default()
                },
                ..FeatureConfig::default()
            },
            model: MenetConfig {
                learning_rate: 0.003,
                weight_decay: 0.1,
                max_epochs: 150,
                patience: 25,
                ..MenetConfig::default()
            },
            train_fraction: 0.6,
            validation_fraction: 0.2,
        }
    }
}

/// A generated corpus, its documents and all four views in canonical order.
#[derive(Debug, Clone)]
pub struct BenchmarkData {
    pub corpus: SyntheticCorpus,
    pub docs: Vec<UserDocument>,
    pub views: Vec<FeatureView<f64>>,
}

impl Benchmark {
    /// Generates the corpus for `seed`, splits it randomly and computes
    /// every view.
    pub fn prepare(&self, seed: u64, mode: ExecutionMode) -> Result<BenchmarkData> {
        let corpus = generate(&SyntheticConfig {
            seed,
            ..self.corpus.clone()
        });
        let users: Vec<&str> = corpus.users.iter().map(|u| u.0.as_str()).collect();
        let split = SplitSpec::random(&users, self.train_fraction, self.validation_fraction, seed)?;
        let docs = build_documents(&corpus.records, &split)?.documents;
        let views = featurize(&docs, &self.features, &ViewKind::ALL, seed, mode)?.views;
        Ok(BenchmarkData { corpus, docs, views })
    }

    /// Trains on the given views and returns the test accuracy.
    pub fn test_accuracy(&self, docs: &[UserDocument], views: &[FeatureView<f64>], seed: u64) -> Result<f64> {
        let cfg = MenetConfig {
            seed,
            ..self.model.clone()
        };
        let fitted = fit(docs, views, &cfg)?;
        Ok(evaluate_split(&fitted.model, docs, views, &fitted.table, Split::Test)?.accuracy)
    }
}

/// Shuffles the rows of a view across users, keeping its marginal
/// distribution but destroying its relation to the labels.
pub fn permute_rows<T: Scalar>(view: &FeatureView<T>, seed: u64) -> FeatureView<T> {
    let mut idx: Vec<usize> = (0..view.matrix.n_rows()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    FeatureView::new(view.name.clone(), view.matrix.select_rows(&idx))
}

/// Serializes records in the JSON-lines input format.
pub fn to_jsonl(records: &[TweetRecord]) -> String {
    let mut out = String::new();
    for r in records {
        let v = serde_json::json!({
            "user_id": r.user_id,
            "text": r.text,
            "timestamp_utc": r.timestamp.to_rfc3339(),
            "latitude": r.coordinates.map(|c| c.latitude),
            "longitude": r.coordinates.map(|c| c.longitude),
            "label": r.label,
        });
        out.push_str(&v.to_string());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ingest_reader, InputFormat};

    #[test]
    fn balanced_regions_and_reproducible() {
        let cfg = SyntheticConfig { n_users: 40, ..SyntheticConfig::default() };
        let a = generate(&cfg);
        assert_eq!(a, generate(&cfg));
        for r in 0..4 {
            assert_eq!(a.users.iter().filter(|u| u.1 == r).count(), 10);
        }
        let other = generate(&SyntheticConfig { seed: 1, ..cfg });
        assert_ne!(a.records, other.records);
    }

    #[test]
    fn permutation_keeps_rows() {
        let docs_view = FeatureView::new(
            "x",
            crate::features::FeatureMatrix::Dense(crate::matrix::Matrix::from_rows(1, &[vec![1.0], vec![2.0], vec![3.0], vec![4.0]])),
        );
        let p = permute_rows(&docs_view, 3);
        let mut got: Vec<f64> = (0..4).map(|i| p.matrix.dense_row(i)[0]).collect();
        assert_ne!(got, vec![1.0, 2.0, 3.0, 4.0]);
        got.sort_by(f64::total_cmp);
        assert_eq!(got, vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn jsonl_roundtrips_through_ingest() {
        let c = generate(&SyntheticConfig { n_users: 8, ..SyntheticConfig::default() });
        let text = to_jsonl(&c.records);
        let got = ingest_reader(text.as_bytes(), InputFormat::Jsonl).unwrap();
        assert!(got.rejected.is_empty());
        assert_eq!(got.records.len(), c.records.len());
        for (a, b) in got.records.iter().zip(&c.records) {
            assert_eq!(a.user_id, b.user_id);
            assert_eq!(a.timestamp, b.timestamp);
            assert_eq!(a.label, b.label);
        }
    }
}
