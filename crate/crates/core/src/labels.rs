//! Class labels per prediction task: US census regions, US states, or
//! labels taken verbatim from the input.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::TweetRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelTask {
    /// Four census regions derived from state labels.
    Region,
    /// State labels normalized to two-letter codes.
    State,
    /// Labels used as given.
    #[default]
    Custom,
}

impl LabelTask {
    pub fn name(self) -> &'static str {
        match self {
            LabelTask::Region => "region",
            LabelTask::State => "state",
            LabelTask::Custom => "custom",
        }
    }

    /// Maps a raw label to this task's class, or `None` if it has no class.
    pub fn class_of(self, label: &str) -> Option<String> {
        match self {
            LabelTask::Custom => Some(label.to_string()),
            LabelTask::State => state_code(label).map(str::to_string),
            LabelTask::Region => REGIONS
                .iter()
                .find(|r| r.eq_ignore_ascii_case(label.trim()))
                .copied()
                .or_else(|| state_code(label).and_then(census_region))
                .map(str::to_string),
        }
    }

    /// Rewrites record labels in place; labels without a class are dropped,
    /// so their users end up rejected when documents are built.
    pub fn apply(self, records: &mut [TweetRecord]) {
        for r in records {
            r.label = r.label.as_deref().and_then(|l| self.class_of(l));
        }
    }
}

impl FromStr for LabelTask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [LabelTask::Region, LabelTask::State, LabelTask::Custom]
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown task {s:?}; expected region, state or custom")))
    }
}

impl fmt::Display for LabelTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub const REGIONS: [&str; 4] = ["Northeast", "Midwest", "South", "West"];

/// `(code, name, region index)` for the states and the District of Columbia.
const STATES: [(&str, &str, usize); 51] = [
    ("AL", "Alabama", 2),
    ("AK", "Alaska", 3),
    ("AZ", "Arizona", 3),
    ("AR", "Arkansas", 2),
    ("CA", "California", 3),
    ("CO", "Colorado", 3),
    ("CT", "Connecticut", 0),
    ("DE", "Delaware", 2),
    ("DC", "District of Columbia", 2),
    ("FL", "Florida", 2),
    ("GA", "Georgia", 2),
    ("HI", "Hawaii", 3),
    ("ID", "Idaho", 3),
    ("IL", "Illinois", 1),
    ("IN", "Indiana", 1),
    ("IA", "Iowa", 1),
    ("KS", "Kansas", 1),
    ("KY", "Kentucky", 2),
    ("LA", "Louisiana", 2),
    ("ME", "Maine", 0),
    ("MD", "Maryland", 2),
    ("MA", "Massachusetts", 0),
    ("MI", "Michigan", 1),
    ("MN", "Minnesota", 1),
    ("MS", "Mississippi", 2),
    ("MO", "Missouri", 1),
    ("MT", "Montana", 3),
    ("NE", "Nebraska", 1),
    ("NV", "Nevada", 3),
    ("NH", "New Hampshire", 0),
    ("NJ", "New Jersey", 0),
    ("NM", "New Mexico", 3),
    ("NY", "New York", 0),
    ("NC", "North Carolina", 2),
    ("ND", "North Dakota", 1),
    ("OH", "Ohio", 1),
    ("OK", "Oklahoma", 2),
    ("OR", "Oregon", 3),
    ("PA", "Pennsylvania", 0),
    ("RI", "Rhode Island", 0),
    ("SC", "South Carolina", 2),
    ("SD", "South Dakota", 1),
    ("TN", "Tennessee", 2),
    ("TX", "Texas", 2),
    ("UT", "Utah", 3),
    ("VT", "Vermont", 0),
    ("VA", "Virginia", 2),
    ("WA", "Washington", 3),
    ("WV", "West Virginia", 2),
    ("WI", "Wisconsin", 1),
    ("WY", "Wyoming", 3),
];

/// Two-letter code for a state code or name, case-insensitive.
pub fn state_code(label: &str) -> Option<&'static str> {
    let l = label.trim();
    STATES
        .iter()
        .find(|(code, name, _)| code.eq_ignore_ascii_case(l) || name.eq_ignore_ascii_case(l))
        .map(|s| s.0)
}

/// Census region of a two-letter state code.
pub fn census_region(code: &str) -> Option<&'static str> {
    STATES.iter().find(|s| s.0 == code).map(|s| REGIONS[s.2])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regions_cover_every_state() {
        let mut counts = [0; 4];
        for s in STATES {
            counts[s.2] += 1;
        }
        assert_eq!(counts, [9, 12, 17, 13]);
    }

    #[test]
    fn task_mapping() {
        assert_eq!(LabelTask::State.class_of("new york").as_deref(), Some("NY"));
        assert_eq!(LabelTask::State.class_of("tx").as_deref(), Some("TX"));
        assert_eq!(LabelTask::Region.class_of("California").as_deref(), Some("West"));
        assert_eq!(LabelTask::Region.class_of("MA").as_deref(), Some("Northeast"));
        assert_eq!(LabelTask::Region.class_of("midwest").as_deref(), Some("Midwest"));
        assert_eq!(LabelTask::Region.class_of("Ontario"), None);
        assert_eq!(LabelTask::Custom.class_of("Ontario").as_deref(), Some("Ontario"));
        assert_eq!("state".parse::<LabelTask>().unwrap(), LabelTask::State);
        assert!("country".parse::<LabelTask>().is_err());
    }
}
