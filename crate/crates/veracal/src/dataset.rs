//! LIAR-format statement ingestion and truthfulness-scale mappings.
//!
//! Statements carry a 6-way veracity label which is dichotomized into a
//! binary label by splitting the scale in the middle. Continuous 0-100
//! truthfulness scores map onto either scale via [`score_to_binary`] and
//! [`score_to_sixpoint`].

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 6-point veracity label, ordered least-true to most-true.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label6 {
    #[serde(rename = "pants-fire")]
    PantsFire,
    #[serde(rename = "false")]
    False,
    #[serde(rename = "barely-true")]
    BarelyTrue,
    #[serde(rename = "half-true")]
    HalfTrue,
    #[serde(rename = "mostly-true")]
    MostlyTrue,
    #[serde(rename = "true")]
    True,
}

impl Label6 {
    pub const ALL: [Label6; 6] = [
        Label6::PantsFire,
        Label6::False,
        Label6::BarelyTrue,
        Label6::HalfTrue,
        Label6::MostlyTrue,
        Label6::True,
    ];

    /// Position on the scale: 0 = pants-fire .. 5 = true.
    pub fn index(self) -> usize {
        Label6::ALL.iter().position(|l| *l == self).unwrap()
    }

    pub fn from_index(index: usize) -> Option<Label6> {
        Label6::ALL.get(index).copied()
    }

    pub fn as_token(self) -> &'static str {
        match self {
            Label6::PantsFire => "pants-fire",
            Label6::False => "false",
            Label6::BarelyTrue => "barely-true",
            Label6::HalfTrue => "half-true",
            Label6::MostlyTrue => "mostly-true",
            Label6::True => "true",
        }
    }

    pub fn from_token(token: &str) -> Option<Label6> {
        Label6::ALL.into_iter().find(|l| l.as_token() == token)
    }
}

impl fmt::Display for Label6 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_token())
    }
}

/// Binary veracity label derived from [`Label6`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinaryLabel {
    #[serde(rename = "false")]
    False,
    #[serde(rename = "true")]
    True,
}

impl BinaryLabel {
    pub fn as_bool(self) -> bool {
        self == BinaryLabel::True
    }

    pub fn from_bool(value: bool) -> Self {
        if value {
            BinaryLabel::True
        } else {
            BinaryLabel::False
        }
    }
}

impl fmt::Display for BinaryLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if self.as_bool() { "true" } else { "false" })
    }
}

/// Split the 6-point scale in the middle: the upper three labels
/// (half-true, mostly-true, true) count as true, the lower three as false.
pub fn dichotomize(label: Label6) -> BinaryLabel {
    BinaryLabel::from_bool(label >= Label6::HalfTrue)
}

/// One dataset statement with its labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub id: String,
    pub statement: String,
    pub label6: Label6,
    pub label_binary: BinaryLabel,
    pub metadata: BTreeMap<String, String>,
}

impl Record {
    /// Build a record, deriving the binary label from the 6-way one.
    pub fn new(
        id: impl Into<String>,
        statement: impl Into<String>,
        label6: Label6,
        metadata: BTreeMap<String, String>,
    ) -> Result<Record> {
        let statement = statement.into();
        if statement.is_empty() {
            return Err(Error::Invalid {
                what: "record",
                reason: "statement is empty".into(),
            });
        }
        Ok(Record {
            id: id.into(),
            statement,
            label6,
            label_binary: dichotomize(label6),
            metadata,
        })
    }
}

/// Which portion of a LIAR dataset directory to load.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Valid,
    Test,
    All,
}

impl Split {
    fn files(self) -> &'static [&'static str] {
        match self {
            Split::Train => &["train.tsv"],
            Split::Valid => &["valid.tsv"],
            Split::Test => &["test.tsv"],
            Split::All => &["train.tsv", "valid.tsv", "test.tsv"],
        }
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Split> {
        match s {
            "train" => Ok(Split::Train),
            "valid" => Ok(Split::Valid),
            "test" => Ok(Split::Test),
            "all" => Ok(Split::All),
            other => Err(Error::Config(format!(
                "unknown split {other:?} (expected train|valid|test|all)"
            ))),
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
            Split::All => "all",
        };
        f.write_str(s)
    }
}

// Standard LIAR column names for columns 4..=14 (1-indexed). Anything past
// column 14 lands in metadata under a positional key.
const LIAR_EXTRA_COLUMNS: [&str; 11] = [
    "subject",
    "speaker",
    "speaker_job",
    "state",
    "party",
    "barely_true_counts",
    "false_counts",
    "half_true_counts",
    "mostly_true_counts",
    "pants_fire_counts",
    "context",
];

/// Load LIAR-format records.
///
/// `path` may be a single TSV file (loaded as-is; `split` is ignored) or a
/// dataset directory containing `train.tsv` / `valid.tsv` / `test.tsv`, in
/// which case `split` selects the file(s); `all` concatenates the three in
/// train, valid, test order. Rows are tab-separated with no header: column 1
/// is the id, column 2 the label token, column 3 the statement. Extra
/// columns go to metadata under their standard LIAR names.
pub fn load_liar(path: &Path, split: Split) -> Result<Vec<Record>> {
    if path.is_dir() {
        let mut records = Vec::new();
        for file in split.files() {
            records.extend(load_liar_file(&path.join(file))?);
        }
        Ok(records)
    } else {
        load_liar_file(path)
    }
}

fn load_liar_file(path: &Path) -> Result<Vec<Record>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();

    for (idx, line) in reader.lines().enumerate() {
        let row = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 3 {
            return Err(Error::MalformedRow {
                row,
                reason: format!(
                    "expected at least 3 tab-separated columns, got {}",
                    fields.len()
                ),
            });
        }
        let label6 = Label6::from_token(fields[1]).ok_or_else(|| Error::UnknownLabel {
            row,
            token: fields[1].to_string(),
        })?;
        if fields[2].is_empty() {
            return Err(Error::MalformedRow {
                row,
                reason: "empty statement".into(),
            });
        }

        let mut metadata = BTreeMap::new();
        for (i, value) in fields.iter().enumerate().skip(3) {
            if value.is_empty() {
                continue;
            }
            let key = LIAR_EXTRA_COLUMNS
                .get(i - 3)
                .map(|k| (*k).to_string())
                .unwrap_or_else(|| format!("col{}", i + 1));
            metadata.insert(key, (*value).to_string());
        }

        records.push(Record::new(fields[0], fields[2], label6, metadata)?);
    }

    Ok(records)
}

/// Map a 0-100 truthfulness score to a binary label. Scores at or above the
/// halfpoint (including exactly 50) classify as true.
pub fn score_to_binary(score: f64) -> Result<BinaryLabel> {
    check_score_range("truthfulness score", score)?;
    Ok(BinaryLabel::from_bool(score >= 50.0))
}

/// Map a 0-100 truthfulness score uniformly onto the 6-point scale using
/// half-open bins of width 100/6, with the top edge clamped into the last
/// bin: 0 = pants-fire .. 5 = true.
pub fn score_to_sixpoint(score: f64) -> Result<Label6> {
    check_score_range("truthfulness score", score)?;
    let index = ((score / (100.0 / 6.0)).floor() as usize).min(5);
    Ok(Label6::from_index(index).unwrap())
}

/// Convert a 0-5 Politifact-scale score to a [`Label6`]. The Politifact
/// scale runs opposite to the label ordering: 0 is TRUE, 5 is PANTS ON FIRE.
pub fn politifact_to_sixpoint(score: u8) -> Result<Label6> {
    if score > 5 {
        return Err(Error::OutOfRange {
            what: "politifact score",
            value: score as f64,
            low: 0.0,
            high: 5.0,
        });
    }
    Ok(Label6::from_index(5 - score as usize).unwrap())
}

fn check_score_range(what: &'static str, score: f64) -> Result<()> {
    if !(0.0..=100.0).contains(&score) {
        return Err(Error::OutOfRange {
            what,
            value: score,
            low: 0.0,
            high: 100.0,
        });
    }
    Ok(())
}

/// Serialize records as JSON Lines, one object per line.
pub fn to_jsonl(records: &[Record]) -> Result<String> {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record)?);
        out.push('\n');
    }
    Ok(out)
}

/// Parse records from JSON Lines produced by [`to_jsonl`].
pub fn from_jsonl(text: &str) -> Result<Vec<Record>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}
