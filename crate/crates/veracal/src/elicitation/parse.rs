//! Parsers for model replies.
//!
//! All parsers are total: any input text yields a [`ParsedResponse`] and a
//! reply from which no valid score can be extracted gets the
//! [`ResponseKind::NotNumber`] kind. Delimiters are resolved last-wins,
//! since the prompts instruct the score to come after the analysis and the
//! analysis may itself contain stray delimiters. Out-of-range numbers are
//! never clamped; they yield `NotNumber`.

use serde::{Deserialize, Serialize};

/// 3-way categorical verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Category {
    A,
    B,
    C,
}

/// What was extracted from a reply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ResponseKind {
    TruthScore {
        truth_score: f64,
    },
    TruthAndCertainty {
        truth_score: f64,
        certainty_score: f64,
    },
    CertaintyOnly {
        certainty_score: f64,
    },
    Categorical {
        category: Category,
    },
    NotNumber,
}

/// Structured result of parsing one model reply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedResponse {
    #[serde(flatten)]
    pub kind: ResponseKind,
    pub analysis_text: String,
    pub raw_text: String,
}

impl ParsedResponse {
    fn not_number(raw: &str) -> ParsedResponse {
        ParsedResponse {
            kind: ResponseKind::NotNumber,
            analysis_text: String::new(),
            raw_text: raw.to_string(),
        }
    }

    pub fn is_not_number(&self) -> bool {
        matches!(self.kind, ResponseKind::NotNumber)
    }

    /// 0-100 truthfulness score, when the kind carries one.
    pub fn truth_score(&self) -> Option<f64> {
        match self.kind {
            ResponseKind::TruthScore { truth_score }
            | ResponseKind::TruthAndCertainty { truth_score, .. } => Some(truth_score),
            _ => None,
        }
    }

    /// 0-100 verbalized certainty, when the kind carries one.
    pub fn certainty_score(&self) -> Option<f64> {
        match self.kind {
            ResponseKind::TruthAndCertainty {
                certainty_score, ..
            }
            | ResponseKind::CertaintyOnly { certainty_score } => Some(certainty_score),
            _ => None,
        }
    }

    pub fn category(&self) -> Option<Category> {
        match self.kind {
            ResponseKind::Categorical { category } => Some(category),
            _ => None,
        }
    }
}

fn in_range(v: f64) -> bool {
    (0.0..=100.0).contains(&v)
}

/// Scan for the first number token: optional sign, digits, optional
/// fractional part. Decimals are kept at full precision.
fn first_number(text: &str) -> Option<f64> {
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let signed =
            (c == b'-' || c == b'+') && i + 1 < bytes.len() && bytes[i + 1].is_ascii_digit();
        if c.is_ascii_digit() || signed {
            let start = i;
            if signed {
                i += 1;
            }
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i + 1 < bytes.len() && bytes[i] == b'.' && bytes[i + 1].is_ascii_digit() {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            return text[start..i].parse().ok();
        }
        i += 1;
    }
    None
}

/// Parse trimmed `text` as exactly one number, nothing else.
fn whole_number(text: &str) -> Option<f64> {
    let t = text.trim();
    if t.is_empty() {
        return None;
    }
    t.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Spans `[..]` whose content is exactly one number; returns the last one
/// with the byte offset of its opening bracket.
fn last_bracketed_number(text: &str) -> Option<(usize, f64)> {
    let mut found = None;
    let mut search_from = 0;
    while let Some(open_rel) = text[search_from..].find('[') {
        let open = search_from + open_rel;
        match text[open + 1..].find(']') {
            Some(close_rel) => {
                let close = open + 1 + close_rel;
                if let Some(v) = whole_number(&text[open + 1..close]) {
                    found = Some((open, v));
                }
                search_from = open + 1;
            }
            None => break,
        }
    }
    found
}

/// Certainty from vertical bars: the last adjacent `|..|` pair whose content
/// is exactly one number wins; with no such pair, the text after the last
/// single bar is scanned for its first number.
fn bar_delimited_number(text: &str) -> Option<f64> {
    let bars: Vec<usize> = text
        .bytes()
        .enumerate()
        .filter(|(_, b)| *b == b'|')
        .map(|(i, _)| i)
        .collect();
    let mut paired = None;
    for w in bars.windows(2) {
        if let Some(v) = whole_number(&text[w[0] + 1..w[1]]) {
            paired = Some(v);
        }
    }
    paired.or_else(|| {
        bars.last()
            .and_then(|&last| first_number(&text[last + 1..]))
    })
}

/// Parse an Explain-Score style reply: the text is split at the last
/// vertical bar and the trailing segment is scanned for its first number.
pub fn parse_explain_score(reply: &str) -> ParsedResponse {
    let Some(bar) = reply.rfind('|') else {
        return ParsedResponse::not_number(reply);
    };
    match first_number(&reply[bar + 1..]) {
        Some(v) if in_range(v) => ParsedResponse {
            kind: ResponseKind::TruthScore { truth_score: v },
            analysis_text: reply[..bar].to_string(),
            raw_text: reply.to_string(),
        },
        _ => ParsedResponse::not_number(reply),
    }
}

/// Parse a single-step uncertainty reply: truthfulness from the last
/// bracketed number, certainty from the last bar-delimited number; both must
/// parse in range or the reply is `NotNumber`.
pub fn parse_single_step(reply: &str) -> ParsedResponse {
    let truth = last_bracketed_number(reply);
    let certainty = bar_delimited_number(reply);
    match (truth, certainty) {
        (Some((open, t)), Some(c)) if in_range(t) && in_range(c) => ParsedResponse {
            kind: ResponseKind::TruthAndCertainty {
                truth_score: t,
                certainty_score: c,
            },
            analysis_text: reply[..open].to_string(),
            raw_text: reply.to_string(),
        },
        _ => ParsedResponse::not_number(reply),
    }
}

/// Parse a two-step uncertainty reply: the first number anywhere in the
/// reply, in range, is the certainty.
pub fn parse_two_step(reply: &str) -> ParsedResponse {
    match first_number(reply) {
        Some(v) if in_range(v) => ParsedResponse {
            kind: ResponseKind::CertaintyOnly { certainty_score: v },
            analysis_text: String::new(),
            raw_text: reply.to_string(),
        },
        _ => ParsedResponse::not_number(reply),
    }
}

/// Parse a 3-way categorical reply: the last standalone A/B/C token after
/// the final vertical bar (or in the whole reply when there is no bar).
pub fn parse_categorical(reply: &str) -> ParsedResponse {
    let (analysis, segment) = match reply.rfind('|') {
        Some(bar) => (&reply[..bar], &reply[bar + 1..]),
        None => ("", reply),
    };
    let bytes = segment.as_bytes();
    let mut found = None;
    for (i, &b) in bytes.iter().enumerate() {
        let category = match b {
            b'A' => Category::A,
            b'B' => Category::B,
            b'C' => Category::C,
            _ => continue,
        };
        let prev_ok = i == 0 || !bytes[i - 1].is_ascii_alphanumeric();
        let next_ok = i + 1 == bytes.len() || !bytes[i + 1].is_ascii_alphanumeric();
        if prev_ok && next_ok {
            found = Some(category);
        }
    }
    match found {
        Some(category) => ParsedResponse {
            kind: ResponseKind::Categorical { category },
            analysis_text: analysis.to_string(),
            raw_text: reply.to_string(),
        },
        None => ParsedResponse::not_number(reply),
    }
}

/// Parse a CoT Explain-Score reply: the last bracketed number in range.
pub fn parse_cot(reply: &str) -> ParsedResponse {
    match last_bracketed_number(reply) {
        Some((open, v)) if in_range(v) => ParsedResponse {
            kind: ResponseKind::TruthScore { truth_score: v },
            analysis_text: reply[..open].to_string(),
            raw_text: reply.to_string(),
        },
        _ => ParsedResponse::not_number(reply),
    }
}
