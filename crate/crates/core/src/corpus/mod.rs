//! Tweet ingestion, per-user document assembly and train/validation/test
//! splits.

mod ingest;
mod porter;
mod preprocess;
mod store;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use chrono::{DateTime, Timelike, Utc};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ingest::{ingest, ingest_reader, load_label_lookup, InputFormat, Ingested, Rejection};
pub use porter::stem;
pub use preprocess::{extract_mentions, is_mention, preprocess, stopwords};
pub use store::{read_documents, write_documents};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coordinates {
    pub latitude: f64,
    pub longitude: f64,
}

/// One parsed tweet.
#[derive(Debug, Clone, PartialEq)]
pub struct TweetRecord {
    pub user_id: String,
    pub text: String,
    pub timestamp: DateTime<Utc>,
    pub coordinates: Option<Coordinates>,
    pub label: Option<String>,
}

impl TweetRecord {
    pub fn hour(&self) -> u8 {
        self.timestamp.hour() as u8
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Validation, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" => Some(Split::Train),
            "validation" | "val" | "dev" => Some(Split::Validation),
            "test" => Some(Split::Test),
            _ => None,
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// All tweets of one user, concatenated in posting order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserDocument {
    pub user_id: String,
    pub tokens: Vec<String>,
    pub raw_texts: Vec<String>,
    pub hours: Vec<u8>,
    pub gt_longitude: f64,
    pub gt_latitude: f64,
    pub gt_label: String,
    pub split: Split,
}

/// Disjoint user-id sets for the three splits.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_ids: BTreeSet<String>,
    pub validation_ids: BTreeSet<String>,
    pub test_ids: BTreeSet<String>,
}

impl SplitSpec {
    pub fn ids(&self, split: Split) -> &BTreeSet<String> {
        match split {
            Split::Train => &self.train_ids,
            Split::Validation => &self.validation_ids,
            Split::Test => &self.test_ids,
        }
    }

    fn ids_mut(&mut self, split: Split) -> &mut BTreeSet<String> {
        match split {
            Split::Train => &mut self.train_ids,
            Split::Validation => &mut self.validation_ids,
            Split::Test => &mut self.test_ids,
        }
    }

    /// Builds a spec from `(user_id, split)` assignments, rejecting any user
    /// listed under two different splits.
    pub fn from_assignments<I, S>(assignments: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Split)>,
        S: Into<String>,
    {
        let mut seen: HashMap<String, Split> = HashMap::new();
        let mut spec = SplitSpec::default();
        for (user, split) in assignments {
            let user = user.into();
            match seen.get(&user) {
                Some(&prev) if prev != split => {
                    return Err(Error::DuplicateSplitAssignment {
                        user,
                        first: prev.as_str(),
                        second: split.as_str(),
                    })
                }
                Some(_) => continue,
                None => {
                    seen.insert(user.clone(), split);
                    spec.ids_mut(split).insert(user);
                }
            }
        }
        Ok(spec)
    }

    /// Seeded random partition of `users` by fractions; the test split
    /// receives the remainder.
    pub fn random<S: AsRef<str>>(
        users: &[S],
        train_fraction: f64,
        validation_fraction: f64,
        seed: u64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&train_fraction)
            || !(0.0..=1.0).contains(&validation_fraction)
            || train_fraction + validation_fraction > 1.0 + 1e-12
        {
            return Err(Error::InvalidConfig(format!(
                "split fractions {train_fraction}/{validation_fraction} do not fit in [0, 1]"
            )));
        }
        let mut ids: Vec<String> = users
            .iter()
            .map(|u| u.as_ref().to_string())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let n = ids.len();
        let n_train = (train_fraction * n as f64).round() as usize;
        let n_val = ((validation_fraction * n as f64).round() as usize).min(n - n_train);
        let mut spec = SplitSpec::default();
        for (i, id) in ids.into_iter().enumerate() {
            let split = if i < n_train {
                Split::Train
            } else if i < n_train + n_val {
                Split::Validation
            } else {
                Split::Test
            };
            spec.ids_mut(split).insert(id);
        }
        Ok(spec)
    }

    pub fn validate_disjoint(&self) -> Result<()> {
        let pairs = [
            (Split::Train, Split::Validation),
            (Split::Train, Split::Test),
            (Split::Validation, Split::Test),
        ];
        for (a, b) in pairs {
            if let Some(user) = self.ids(a).intersection(self.ids(b)).next() {
                return Err(Error::DuplicateSplitAssignment {
                    user: user.clone(),
                    first: a.as_str(),
                    second: b.as_str(),
                });
            }
        }
        Ok(())
    }

    pub fn split_of(&self, user: &str) -> Option<Split> {
        Split::ALL.into_iter().find(|&s| self.ids(s).contains(user))
    }

    pub fn len(&self) -> usize {
        self.train_ids.len() + self.validation_ids.len() + self.test_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Reads `user_id<TAB>split` assignments; blank lines and `#` comments are
/// ignored. Split names are `train`, `validation` (or `val`, `dev`) and
/// `test`.
pub fn read_split_file(path: &Path) -> Result<SplitSpec> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let mut assignments = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parsed = line
            .split_once('\t')
            .and_then(|(user, split)| Some((user.trim().to_string(), Split::parse(split)?)));
        let Some(pair) = parsed else {
            return Err(Error::format("split file", format!("line {}: expected user_id<TAB>split", i + 1)));
        };
        assignments.push(pair);
    }
    SplitSpec::from_assignments(assignments)
}

/// Overwrites every record's label from a `user_id -> label` table. Users
/// missing from the table keep whatever label they carried.
pub fn assign_labels(records: &mut [TweetRecord], lookup: &HashMap<String, String>) {
    for r in records {
        if let Some(label) = lookup.get(&r.user_id) {
            r.label = Some(label.clone());
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UserRejection {
    NoCoordinates,
    NoLabel,
}

impl fmt::Display for UserRejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UserRejection::NoCoordinates => f.write_str("no tweet carries coordinates"),
            UserRejection::NoLabel => f.write_str("no class label available"),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct BuiltDocuments {
    /// Sorted by user id.
    pub documents: Vec<UserDocument>,
    pub rejected_users: Vec<(String, UserRejection)>,
}

/// Groups records per user into documents ordered by timestamp (ties keep
/// input order). Ground truth comes from the earliest geotagged tweet.
pub fn build_documents(records: &[TweetRecord], split: &SplitSpec) -> Result<BuiltDocuments> {
    split.validate_disjoint()?;
    let mut by_user: BTreeMap<&str, Vec<&TweetRecord>> = BTreeMap::new();
    for r in records {
        by_user.entry(r.user_id.as_str()).or_default().push(r);
    }
    if let Some(user) = by_user.keys().find(|u| split.split_of(u).is_none()) {
        return Err(Error::UnassignedUser(user.to_string()));
    }
    for which in Split::ALL {
        if let Some(user) = split.ids(which).iter().find(|u| !by_user.contains_key(u.as_str())) {
            return Err(Error::UnknownSplitUser(user.clone()));
        }
    }
    let mut built = BuiltDocuments::default();
    for (user, mut tweets) in by_user {
        let which = split
            .split_of(user)
            .ok_or_else(|| Error::UnassignedUser(user.to_string()))?;
        // stable: equal timestamps keep file order
        tweets.sort_by_key(|t| t.timestamp);
        let Some(anchor) = tweets.iter().find(|t| t.coordinates.is_some()) else {
            built
                .rejected_users
                .push((user.to_string(), UserRejection::NoCoordinates));
            continue;
        };
        let label = anchor
            .label
            .clone()
            .or_else(|| tweets.iter().find_map(|t| t.label.clone()));
        let Some(label) = label else {
            built
                .rejected_users
                .push((user.to_string(), UserRejection::NoLabel));
            continue;
        };
        let coords = anchor.coordinates.expect("anchor has coordinates");
        let tokens = tweets.iter().flat_map(|t| preprocess(&t.text)).collect();
        built.documents.push(UserDocument {
            user_id: user.to_string(),
            tokens,
            raw_texts: tweets.iter().map(|t| t.text.clone()).collect(),
            hours: tweets.iter().map(|t| t.hour()).collect(),
            gt_longitude: coords.longitude,
            gt_latitude: coords.latitude,
            gt_label: label,
            split: which,
        });
    }
    Ok(built)
}

/// Indices of `docs` belonging to `split`, in document order.
pub fn split_indices(docs: &[UserDocument], split: Split) -> Vec<usize> {
    docs.iter()
        .enumerate()
        .filter(|(_, d)| d.split == split)
        .map(|(i, _)| i)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;
    use proptest::prelude::*;

    fn tweet(user: &str, text: &str, h: u32, coords: Option<(f64, f64)>) -> TweetRecord {
        TweetRecord {
            user_id: user.into(),
            text: text.into(),
            timestamp: Utc.with_ymd_and_hms(2010, 3, 1, h, 0, 0).unwrap(),
            coordinates: coords.map(|(lat, lon)| Coordinates {
                latitude: lat,
                longitude: lon,
            }),
            label: Some("A".into()),
        }
    }

    fn all_train(users: &[&str]) -> SplitSpec {
        SplitSpec::from_assignments(users.iter().map(|u| (*u, Split::Train))).unwrap()
    }

    #[test]
    fn hours_follow_timestamp_order() {
        let recs = vec![
            tweet("u1", "late", 20, Some((1.0, 2.0))),
            tweet("u1", "early", 3, Some((5.0, 6.0))),
        ];
        let built = build_documents(&recs, &all_train(&["u1"])).unwrap();
        let d = &built.documents[0];
        assert_eq!(d.hours, vec![3, 20]);
        assert_eq!(d.raw_texts, vec!["early", "late"]);
        assert_eq!((d.gt_latitude, d.gt_longitude), (5.0, 6.0));
    }

    #[test]
    fn ground_truth_skips_untagged_tweets() {
        let recs = vec![
            tweet("u1", "a", 1, None),
            tweet("u1", "b", 2, Some((7.0, 8.0))),
            tweet("u1", "c", 3, Some((9.0, 9.0))),
        ];
        let d = &build_documents(&recs, &all_train(&["u1"])).unwrap().documents[0];
        assert_eq!((d.gt_latitude, d.gt_longitude), (7.0, 8.0));
        assert_eq!(d.hours.len(), 3);
    }

    #[test]
    fn users_without_coordinates_are_rejected() {
        let recs = vec![tweet("u1", "a", 1, None), tweet("u2", "b", 1, Some((0.0, 0.0)))];
        let built = build_documents(&recs, &all_train(&["u1", "u2"])).unwrap();
        assert_eq!(built.documents.len(), 1);
        assert_eq!(
            built.rejected_users,
            vec![("u1".to_string(), UserRejection::NoCoordinates)]
        );
    }

    #[test]
    fn user_in_two_splits_is_fatal() {
        let err = SplitSpec::from_assignments([("u1", Split::Train), ("u1", Split::Test)]);
        assert!(matches!(err, Err(Error::DuplicateSplitAssignment { .. })));

        let mut spec = all_train(&["u1"]);
        spec.test_ids.insert("u1".into());
        let recs = vec![tweet("u1", "a", 1, Some((0.0, 0.0)))];
        assert!(matches!(
            build_documents(&recs, &spec),
            Err(Error::DuplicateSplitAssignment { .. })
        ));
    }

    #[test]
    fn unassigned_user_is_fatal() {
        let recs = vec![tweet("u9", "a", 1, Some((0.0, 0.0)))];
        assert!(matches!(
            build_documents(&recs, &all_train(&["u1"])),
            Err(Error::UnassignedUser(_))
        ));
    }

    #[test]
    fn split_naming_an_absent_user_is_fatal() {
        let recs = vec![tweet("u1", "a", 1, Some((0.0, 0.0)))];
        assert!(matches!(
            build_documents(&recs, &all_train(&["u1", "ghost"])),
            Err(Error::UnknownSplitUser(u)) if u == "ghost"
        ));
    }

    #[test]
    fn split_file_parses_assignments() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("split.tsv");
        std::fs::write(&path, "# user split\nu1\ttrain\nu2\tval\n\nu3\ttest\n").unwrap();
        let spec = read_split_file(&path).unwrap();
        assert_eq!(spec.split_of("u2"), Some(Split::Validation));
        assert_eq!(spec.len(), 3);
        std::fs::write(&path, "u1\ttrain\nu1\ttest\n").unwrap();
        assert!(matches!(read_split_file(&path), Err(Error::DuplicateSplitAssignment { .. })));
        std::fs::write(&path, "u1 train\n").unwrap();
        assert!(matches!(read_split_file(&path), Err(Error::Format { .. })));
    }

    #[test]
    fn random_split_is_seeded_and_covers_everyone() {
        let users: Vec<String> = (0..10).map(|i| format!("u{i}")).collect();
        let a = SplitSpec::random(&users, 0.8, 0.1, 7).unwrap();
        let b = SplitSpec::random(&users, 0.8, 0.1, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            (a.train_ids.len(), a.validation_ids.len(), a.test_ids.len()),
            (8, 1, 1)
        );
        a.validate_disjoint().unwrap();
    }

    proptest! {
        #[test]
        fn document_build_is_order_insensitive(
            n_users in 1usize..6,
            hours in proptest::collection::vec(0u32..24, 1..20),
            seed in any::<u64>(),
        ) {
            // distinct timestamps: tweet i is at hour i, user i % n_users
            let recs: Vec<TweetRecord> = hours
                .iter()
                .enumerate()
                .map(|(i, &h)| {
                    let mut t = tweet(&format!("u{}", i % n_users), &format!("word{h} @u0"), 0, Some((h as f64, i as f64)));
                    t.timestamp += chrono::Duration::minutes(i as i64);
                    t
                })
                .collect();
            let users: Vec<String> = (0..n_users.min(hours.len())).map(|i| format!("u{i}")).collect();
            let spec = SplitSpec::random(&users, 0.5, 0.25, 1).unwrap();
            let base = build_documents(&recs, &spec).unwrap();
            let mut shuffled = recs.clone();
            shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let other = build_documents(&shuffled, &spec).unwrap();
            prop_assert_eq!(&base.documents, &other.documents);
            let distinct: BTreeSet<_> = recs.iter().map(|r| r.user_id.clone()).collect();
            prop_assert_eq!(base.documents.len(), distinct.len() - base.rejected_users.len());
        }
    }
}
