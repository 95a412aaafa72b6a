//! Class centroids, great-circle distances and evaluation metrics.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::UserDocument;
use crate::error::{Error, Result};

/// Mean Earth radius in kilometres (antipodal distance 20015.087 km).
pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Error threshold for the accuracy-within-distance metric.
pub const AT_KM: f64 = 161.0;

pub fn haversine_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = (lat2 - lat1).to_radians();
    let dl = (lon2 - lon1).to_radians();
    let a = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * a.sqrt().clamp(0.0, 1.0).asin()
}

/// Median with the two middle values averaged for even counts; `None` when
/// empty.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[mid] } else { (v[mid - 1] + v[mid]) / 2.0 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoClass {
    pub label: String,
    pub longitude: f64,
    pub latitude: f64,
    pub train_count: usize,
}

/// Class ids are assigned in lexicographic label order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GeoClassTable {
    classes: Vec<GeoClass>,
    index: BTreeMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    class: usize,
    label: String,
    lon: f64,
    lat: f64,
    count: usize,
}

impl GeoClassTable {
    /// Per-label component-wise median coordinates of the given users.
    pub fn build(train: &[UserDocument]) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut groups: BTreeMap<&str, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
        for d in train {
            let g = groups.entry(d.gt_label.as_str()).or_default();
            g.0.push(d.gt_longitude);
            g.1.push(d.gt_latitude);
        }
        let classes = groups
            .into_iter()
            .map(|(label, (lons, lats))| GeoClass {
                label: label.to_string(),
                longitude: median(&lons).unwrap(),
                latitude: median(&lats).unwrap(),
                train_count: lons.len(),
            })
            .collect();
        Self::from_classes(classes)
    }

    pub fn from_classes(classes: Vec<GeoClass>) -> Result<Self> {
        let mut index = BTreeMap::new();
        for (i, c) in classes.iter().enumerate() {
            if index.insert(c.label.clone(), i).is_some() {
                return Err(Error::InvalidConfig(format!("class {} appears twice", c.label)));
            }
        }
        Ok(GeoClassTable { classes, index })
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn classes(&self) -> &[GeoClass] {
        &self.classes
    }

    pub fn class(&self, id: usize) -> Result<&GeoClass> {
        self.classes.get(id).ok_or(Error::UnknownClassId {
            id,
            classes: self.classes.len(),
        })
    }

    pub fn class_id(&self, label: &str) -> Result<usize> {
        self.index
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownClass(label.to_string()))
    }

    /// Class ids of the documents' labels; a label absent from training is
    /// fatal.
    pub fn labels_of(&self, docs: &[UserDocument]) -> Result<Vec<usize>> {
        docs.iter().map(|d| self.class_id(&d.gt_label)).collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
        for (i, c) in self.classes.iter().enumerate() {
            w.serialize(CsvRow {
                class: i,
                label: c.label.clone(),
                lon: c.longitude,
                lat: c.latitude,
                count: c.train_count,
            })
            .map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::Read {
                path: path.to_path_buf(),
                source: std::io::Error::new(std::io::ErrorKind::NotFound, e.to_string()),
            },
            _ => csv_error(e),
        })?;
        let mut classes = Vec::new();
        for (i, row) in r.deserialize::<CsvRow>().enumerate() {
            let row = row.map_err(csv_error)?;
            if row.class != i {
                return Err(Error::format("class table", format!("row {i} has class id {}", row.class)));
            }
            classes.push(GeoClass {
                label: row.label,
                longitude: row.lon,
                latitude: row.lat,
                train_count: row.count,
            });
        }
        Self::from_classes(classes)
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::format("class table", e.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n_users: usize,
    pub accuracy: f64,
    pub mean_km: f64,
    pub median_km: f64,
    /// Fraction of users with error strictly below 161 km.
    pub at161: f64,
    pub labels: Vec<String>,
    /// `confusion[true][predicted]` counts.
    pub confusion: Vec<Vec<u64>>,
}

/// A user's true class and location.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truth {
    pub class: usize,
    pub latitude: f64,
    pub longitude: f64,
}

pub fn evaluate(predicted: &[usize], truth: &[UserDocument], table: &GeoClassTable) -> Result<EvalReport> {
    let truth = truth
        .iter()
        .map(|d| {
            Ok(Truth {
                class: table.class_id(&d.gt_label)?,
                latitude: d.gt_latitude,
                longitude: d.gt_longitude,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    evaluate_truth(predicted, &truth, table)
}

pub fn evaluate_truth(predicted: &[usize], truth: &[Truth], table: &GeoClassTable) -> Result<EvalReport> {
    if predicted.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            context: "predictions versus ground-truth users".into(),
            expected: truth.len(),
            found: predicted.len(),
        });
    }
    let m = table.len();
    let mut confusion = vec![vec![0u64; m]; m];
    let mut errors = Vec::with_capacity(truth.len());
    let mut hits = 0usize;
    for (&p, t) in predicted.iter().zip(truth) {
        let c = table.class(p)?;
        table.class(t.class)?;
        confusion[t.class][p] += 1;
        hits += usize::from(p == t.class);
        errors.push(haversine_km(t.latitude, t.longitude, c.latitude, c.longitude));
    }
    // summing in sorted order makes the report independent of user order
    errors.sort_by(f64::total_cmp);
    let n = truth.len();
    let frac = |k: usize| if n == 0 { 0.0 } else { k as f64 / n as f64 };
    Ok(EvalReport {
        n_users: n,
        accuracy: frac(hits),
        mean_km: if n == 0 { 0.0 } else { errors.iter().sum::<f64>() / n as f64 },
        median_km: median(&errors).unwrap_or(0.0),
        at161: frac(errors.iter().filter(|&&e| e < AT_KM).count()),
        labels: table.classes.iter().map(|c| c.label.clone()).collect(),
        confusion,
    })
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "users        {}", self.n_users)?;
        writeln!(f, "accuracy     {:.4}", self.accuracy)?;
        writeln!(f, "mean km      {:.2}", self.mean_km)?;
        writeln!(f, "median km    {:.2}", self.median_km)?;
        writeln!(f, "acc@161      {:.4}", self.at161)?;
        writeln!(f)?;
        writeln!(f, "confusion (rows: true, columns: predicted)")?;
        let width = self.labels.iter().map(String::len).max().unwrap_or(0).max(5);
        write!(f, "{:width$}", "")?;
        for l in &self.labels {
            write!(f, " {l:>width$}")?;
        }
        writeln!(f)?;
        for (l, row) in self.labels.iter().zip(&self.confusion) {
            write!(f, "{l:width$}")?;
            for c in row {
                write!(f, " {c:>width$}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Split;
    use proptest::prelude::*;

    fn doc(label: &str, lon: f64, lat: f64) -> UserDocument {
        UserDocument {
            user_id: format!("{label}{lon}{lat}"),
            tokens: vec![],
            raw_texts: vec![],
            hours: vec![],
            gt_longitude: lon,
            gt_latitude: lat,
            gt_label: label.into(),
            split: Split::Train,
        }
    }

    #[test]
    fn haversine_reference_values() {
        assert_eq!(haversine_km(12.5, -40.0, 12.5, -40.0), 0.0);
        assert!((haversine_km(0.0, 0.0, 0.0, 180.0) - 20015.09).abs() < 0.01);
        assert!((haversine_km(0.0, 0.0, 0.0, 1.0) - 111.195).abs() < 0.001);
    }

    #[test]
    fn centroid_medians() {
        let t = GeoClassTable::build(&[doc("a", 1.0, 0.0), doc("a", 2.0, 0.0), doc("a", 3.0, 5.0)]).unwrap();
        assert_eq!(t.class(0).unwrap().longitude, 2.0);
        let t = GeoClassTable::build(&[doc("a", 1.0, 0.0), doc("a", 4.0, 0.0), doc("a", 3.0, 0.0), doc("a", 2.0, 0.0)])
            .unwrap();
        assert_eq!(t.class(0).unwrap().longitude, 2.5);
        let t = GeoClassTable::build(&[doc("z", -7.0, 3.0), doc("b", 1.0, 1.0)]).unwrap();
        assert_eq!(t.class_id("b").unwrap(), 0);
        assert_eq!(t.class(1).unwrap(), &GeoClass { label: "z".into(), longitude: -7.0, latitude: 3.0, train_count: 1 });
    }

    #[test]
    fn unseen_class_is_fatal() {
        let t = GeoClassTable::build(&[doc("a", 0.0, 0.0)]).unwrap();
        match t.labels_of(&[doc("b", 0.0, 0.0)]) {
            Err(Error::UnknownClass(c)) => assert_eq!(c, "b"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(evaluate(&[3], &[doc("a", 0.0, 0.0)], &t), Err(Error::UnknownClassId { .. })));
    }

    #[test]
    fn perfect_predictions() {
        let train = [doc("a", 0.0, 0.0), doc("b", 10.0, 10.0)];
        let t = GeoClassTable::build(&train).unwrap();
        let r = evaluate(&[0, 1], &train, &t).unwrap();
        assert_eq!((r.accuracy, r.mean_km, r.at161), (1.0, 0.0, 1.0));
        assert_eq!(r.confusion, vec![vec![1, 0], vec![0, 1]]);
    }

    #[test]
    fn distance_summary() {
        // points due north of the centroid at the requested distances
        let t = GeoClassTable::from_classes(vec![GeoClass { label: "a".into(), longitude: 0.0, latitude: 0.0, train_count: 1 }])
            .unwrap();
        let deg = |km: f64| km / (EARTH_RADIUS_KM * std::f64::consts::PI / 180.0);
        let truth: Vec<Truth> = [10.0, 100.0, 200.0, 1000.0]
            .iter()
            .map(|&km| Truth { class: 0, latitude: deg(km), longitude: 0.0 })
            .collect();
        let r = evaluate_truth(&[0; 4], &truth, &t).unwrap();
        assert!((r.median_km - 150.0).abs() < 1e-9);
        assert!((r.mean_km - 327.5).abs() < 1e-9);
        assert_eq!(r.at161, 0.5);
        let one = evaluate_truth(&[0], &truth[2..3], &t).unwrap();
        assert_eq!(one.at161, 0.0);
    }

    #[test]
    fn class_table_csv_roundtrip() {
        let t = GeoClassTable::build(&[doc("west", -120.5, 37.25), doc("east", -74.0, 40.7)]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("classes.csv");
        t.write_csv(&p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("class,label,lon,lat,count\n0,east,-74.0,40.7,1\n"), "{text}");
        assert_eq!(GeoClassTable::read_csv(&p).unwrap(), t);
    }

    #[test]
    fn report_renders_as_table() {
        let train = [doc("a", 0.0, 0.0), doc("b", 10.0, 10.0)];
        let t = GeoClassTable::build(&train).unwrap();
        let s = evaluate(&[0, 0], &train, &t).unwrap().to_string();
        assert!(s.contains("accuracy     0.5000"), "{s}");
    }

    fn coord() -> impl Strategy<Value = (f64, f64)> {
        (-90.0f64..90.0, -180.0f64..180.0)
    }

    proptest! {
        #[test]
        fn haversine_is_a_metric((a1, o1) in coord(), (a2, o2) in coord(), (a3, o3) in coord()) {
            let d12 = haversine_km(a1, o1, a2, o2);
            prop_assert!((d12 - haversine_km(a2, o2, a1, o1)).abs() < 1e-9);
            prop_assert_eq!(haversine_km(a1, o1, a1, o1), 0.0);
            let d13 = haversine_km(a1, o1, a3, o3);
            let d23 = haversine_km(a2, o2, a3, o3);
            prop_assert!(d13 <= d12 + d23 + 1e-6);
        }

        #[test]
        fn centroids_stay_in_bounding_box(points in proptest::collection::vec(coord(), 1..20)) {
            let docs: Vec<_> = points.iter().map(|&(la, lo)| doc("c", lo, la)).collect();
            let c = GeoClassTable::build(&docs).unwrap().class(0).unwrap().clone();
            let lons: Vec<f64> = points.iter().map(|p| p.1).collect();
            let lats: Vec<f64> = points.iter().map(|p| p.0).collect();
            let within = |v: f64, xs: &[f64]| xs.iter().cloned().fold(f64::INFINITY, f64::min) <= v
                && v <= xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(within(c.longitude, &lons) && within(c.latitude, &lats));
            prop_assert_eq!(c.train_count, points.len());
        }

        #[test]
        fn evaluation_is_permutation_invariant(seed in any::<u64>(), n in 1usize..30) {
            use rand::{Rng, SeedableRng, seq::SliceRandom};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let t = GeoClassTable::from_classes((0..3).map(|i| GeoClass {
                label: format!("c{i}"), longitude: i as f64 * 10.0, latitude: 0.0, train_count: 1,
            }).collect()).unwrap();
            let mut pairs: Vec<(usize, Truth)> = (0..n).map(|_| (rng.gen_range(0..3), Truth {
                class: rng.gen_range(0..3), latitude: rng.gen_range(-5.0..5.0), longitude: rng.gen_range(-5.0..25.0),
            })).collect();
            let split = |p: &[(usize, Truth)]| (p.iter().map(|x| x.0).collect::<Vec<_>>(), p.iter().map(|x| x.1).collect::<Vec<_>>());
            let (a, b) = split(&pairs);
            let r1 = evaluate_truth(&a, &b, &t).unwrap();
            pairs.shuffle(&mut rng);
            let (a, b) = split(&pairs);
            let r2 = evaluate_truth(&a, &b, &t).unwrap();
            prop_assert_eq!(r1, r2);
        }
    }
}
