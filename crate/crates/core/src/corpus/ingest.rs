use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, NaiveDateTime, Utc};
use serde::Deserialize;

use super::{Coordinates, TweetRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputFormat {
    /// One JSON object per line with the `TweetRecord` fields.
    Jsonl,
    /// `user_id<TAB>timestamp<TAB>latitude<TAB>longitude<TAB>text`
    GeotextTsv,
}

impl FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(InputFormat::Jsonl),
            "geotext_tsv" | "tsv" => Ok(InputFormat::GeotextTsv),
            other => Err(Error::InvalidConfig(format!("unknown input format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rejection {
    /// 1-based line number.
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct Ingested {
    pub records: Vec<TweetRecord>,
    pub rejected: Vec<Rejection>,
}

#[derive(Deserialize)]
struct JsonRecord {
    user_id: String,
    text: String,
    timestamp_utc: String,
    latitude: Option<f64>,
    longitude: Option<f64>,
    label: Option<String>,
}

fn parse_timestamp(s: &str) -> std::result::Result<DateTime<Utc>, String> {
    let s = s.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Ok(dt.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S"] {
        if let Ok(naive) = NaiveDateTime::parse_from_str(s, fmt) {
            return Ok(naive.and_utc());
        }
    }
    Err(format!("unparseable timestamp {s:?}"))
}

fn make_coordinates(
    lat: Option<f64>,
    lon: Option<f64>,
) -> std::result::Result<Option<Coordinates>, String> {
    match (lat, lon) {
        (None, None) => Ok(None),
        (Some(lat), Some(lon)) => {
            if !(-90.0..=90.0).contains(&lat) {
                return Err(format!("latitude {lat} out of range"));
            }
            if !(-180.0..=180.0).contains(&lon) {
                return Err(format!("longitude {lon} out of range"));
            }
            Ok(Some(Coordinates {
                latitude: lat,
                longitude: lon,
            }))
        }
        _ => Err("latitude and longitude must be both present or both absent".into()),
    }
}

fn parse_json_line(line: &str) -> std::result::Result<TweetRecord, String> {
    let raw: JsonRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
    if raw.user_id.is_empty() {
        return Err("empty user_id".into());
    }
    Ok(TweetRecord {
        timestamp: parse_timestamp(&raw.timestamp_utc)?,
        coordinates: make_coordinates(raw.latitude, raw.longitude)?,
        user_id: raw.user_id,
        text: raw.text,
        label: raw.label,
    })
}

fn parse_optional_f64(field: &str) -> std::result::Result<Option<f64>, String> {
    let field = field.trim();
    if field.is_empty() {
        return Ok(None);
    }
    field
        .parse::<f64>()
        .map(Some)
        .map_err(|_| format!("not a number: {field:?}"))
}

fn parse_tsv_line(line: &str) -> std::result::Result<TweetRecord, String> {
    let cols: Vec<&str> = line.splitn(5, '\t').collect();
    if cols.len() != 5 {
        return Err(format!("expected 5 tab-separated columns, found {}", cols.len()));
    }
    if cols[0].is_empty() {
        return Err("empty user_id".into());
    }
    Ok(TweetRecord {
        user_id: cols[0].to_string(),
        timestamp: parse_timestamp(cols[1])?,
        coordinates: make_coordinates(parse_optional_f64(cols[2])?, parse_optional_f64(cols[3])?)?,
        text: cols[4].to_string(),
        label: None,
    })
}

/// Parses every line of `reader`; malformed lines are collected as
/// rejections and never abort the read. Blank lines are skipped.
pub fn ingest_reader<R: BufRead>(reader: R, format: InputFormat) -> Result<Ingested> {
    let mut out = Ingested::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let parsed = match format {
            InputFormat::Jsonl => parse_json_line(line),
            InputFormat::GeotextTsv => parse_tsv_line(line),
        };
        match parsed {
            Ok(r) => out.records.push(r),
            Err(reason) => out.rejected.push(Rejection { line: i + 1, reason }),
        }
    }
    Ok(out)
}

pub fn ingest(path: &Path, format: InputFormat) -> Result<Ingested> {
    let file = File::open(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })?;
    ingest_reader(BufReader::new(file), format)
}

/// Reads a `user_id<TAB>label` table; blank lines and `#` comments are
/// ignored.
pub fn load_label_lookup(path: &Path) -> Result<HashMap<String, String>> {
    let file = File::open(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let mut map = HashMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (user, label) = line.split_once('\t').ok_or_else(|| {
            Error::format("label lookup", format!("line {}: expected user_id<TAB>label", i + 1))
        })?;
        map.insert(user.trim().to_string(), label.trim().to_string());
    }
    Ok(map)
}
