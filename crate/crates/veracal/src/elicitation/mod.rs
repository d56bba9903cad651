//! Prompt templates and reply parsing.
//!
//! Six prompt styles are supported, each with a built-in body. A template
//! renders by substituting the statement (and, for the two-step uncertainty
//! prompt, a previously produced answer) into placeholder tokens. Parsers
//! turn raw model replies into structured scores; a reply from which no
//! valid score can be extracted parses to the `NotNumber` kind rather than
//! an error.

mod parse;
mod templates;

pub use parse::{
    parse_categorical, parse_cot, parse_explain_score, parse_single_step, parse_two_step, Category,
    ParsedResponse, ResponseKind,
};

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const STATEMENT_PLACEHOLDER: &str = "STATEMENT";
pub const PROPOSED_ANSWER_PLACEHOLDER: &str = "PROPOSED_ANSWER";

/// The six prompt styles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TemplateName {
    ExplainScore,
    Politifact,
    ThreeWayCategorical,
    SingleStepUncertainty,
    TwoStepUncertainty,
    CoTExplainScore,
}

impl TemplateName {
    pub const ALL: [TemplateName; 6] = [
        TemplateName::ExplainScore,
        TemplateName::Politifact,
        TemplateName::ThreeWayCategorical,
        TemplateName::SingleStepUncertainty,
        TemplateName::TwoStepUncertainty,
        TemplateName::CoTExplainScore,
    ];

    /// File stem used for override files, e.g. `explain_score.txt`.
    pub fn file_stem(self) -> &'static str {
        match self {
            TemplateName::ExplainScore => "explain_score",
            TemplateName::Politifact => "politifact",
            TemplateName::ThreeWayCategorical => "three_way_categorical",
            TemplateName::SingleStepUncertainty => "single_step_uncertainty",
            TemplateName::TwoStepUncertainty => "two_step_uncertainty",
            TemplateName::CoTExplainScore => "cot_explain_score",
        }
    }

    fn builtin_body(self) -> &'static str {
        match self {
            TemplateName::ExplainScore => templates::EXPLAIN_SCORE,
            TemplateName::Politifact => templates::POLITIFACT,
            TemplateName::ThreeWayCategorical => templates::THREE_WAY_CATEGORICAL,
            TemplateName::SingleStepUncertainty => templates::SINGLE_STEP_UNCERTAINTY,
            TemplateName::TwoStepUncertainty => templates::TWO_STEP_UNCERTAINTY,
            TemplateName::CoTExplainScore => templates::COT_EXPLAIN_SCORE,
        }
    }

    fn requires_proposed_answer(self) -> bool {
        self == TemplateName::TwoStepUncertainty
    }
}

impl fmt::Display for TemplateName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.file_stem())
    }
}

/// A named prompt body with validated placeholders.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub name: TemplateName,
    pub body: String,
}

impl PromptTemplate {
    /// The built-in template for `name`.
    pub fn builtin(name: TemplateName) -> PromptTemplate {
        PromptTemplate {
            name,
            body: name.builtin_body().to_string(),
        }
    }

    /// A template with a custom body, validated for placeholder presence:
    /// `STATEMENT` exactly once, and `PROPOSED_ANSWER` exactly once iff the
    /// template is the two-step uncertainty prompt.
    pub fn with_body(name: TemplateName, body: impl Into<String>) -> Result<PromptTemplate> {
        let body = body.into();
        let statement_count = body.matches(STATEMENT_PLACEHOLDER).count();
        if statement_count != 1 {
            return Err(Error::Template {
                name: name.to_string(),
                reason: format!(
                    "placeholder {STATEMENT_PLACEHOLDER} must appear exactly once, found {statement_count}"
                ),
            });
        }
        let answer_count = body.matches(PROPOSED_ANSWER_PLACEHOLDER).count();
        let expected = usize::from(name.requires_proposed_answer());
        if answer_count != expected {
            return Err(Error::Template {
                name: name.to_string(),
                reason: format!(
                    "placeholder {PROPOSED_ANSWER_PLACEHOLDER} must appear exactly {expected} time(s), found {answer_count}"
                ),
            });
        }
        Ok(PromptTemplate { name, body })
    }

    /// Substitute the placeholders. `proposed_answer` must be supplied iff
    /// the template is the two-step uncertainty prompt.
    pub fn render(&self, statement: &str, proposed_answer: Option<&str>) -> Result<String> {
        match (self.name.requires_proposed_answer(), proposed_answer) {
            (true, None) => return Err(Error::MissingArgument("proposed_answer")),
            (false, Some(_)) => return Err(Error::UnexpectedArgument("proposed_answer")),
            _ => {}
        }
        let mut out = self.body.replacen(STATEMENT_PLACEHOLDER, statement, 1);
        if let Some(answer) = proposed_answer {
            out = out.replacen(PROPOSED_ANSWER_PLACEHOLDER, answer, 1);
        }
        Ok(out)
    }
}

/// All six templates, resolvable by name.
#[derive(Debug, Clone)]
pub struct TemplateSet {
    templates: BTreeMap<TemplateName, PromptTemplate>,
}

impl TemplateSet {
    /// The built-in templates.
    pub fn builtin() -> TemplateSet {
        TemplateSet {
            templates: TemplateName::ALL
                .into_iter()
                .map(|n| (n, PromptTemplate::builtin(n)))
                .collect(),
        }
    }

    /// Built-in templates with per-name overrides from a directory of UTF-8
    /// text files (`<file_stem>.txt`). Present files are validated for
    /// placeholder presence; absent ones fall back to the built-in body.
    pub fn with_overrides(dir: &Path) -> Result<TemplateSet> {
        let mut set = TemplateSet::builtin();
        for name in TemplateName::ALL {
            let path = dir.join(format!("{}.txt", name.file_stem()));
            if path.exists() {
                let body = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                set.templates
                    .insert(name, PromptTemplate::with_body(name, body.trim_end())?);
            }
        }
        Ok(set)
    }

    pub fn get(&self, name: TemplateName) -> &PromptTemplate {
        &self.templates[&name]
    }

    /// Render the named template; shorthand for `get(name).render(..)`.
    pub fn render(
        &self,
        name: TemplateName,
        statement: &str,
        proposed_answer: Option<&str>,
    ) -> Result<String> {
        self.get(name).render(statement, proposed_answer)
    }
}

impl Default for TemplateSet {
    fn default() -> Self {
        TemplateSet::builtin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_templates_validate() {
        for name in TemplateName::ALL {
            let t = PromptTemplate::builtin(name);
            PromptTemplate::with_body(name, t.body.clone()).unwrap();
        }
    }

    #[test]
    fn render_substitutes_statement_verbatim() {
        let t = PromptTemplate::builtin(TemplateName::ExplainScore);
        let rendered = t.render("the sky is blue", None).unwrap();
        assert!(rendered.contains("\"the sky is blue\""));
        assert!(!rendered.contains(STATEMENT_PLACEHOLDER));
        // no other mutation of the body
        assert_eq!(
            rendered,
            t.body.replace(STATEMENT_PLACEHOLDER, "the sky is blue")
        );
    }

    #[test]
    fn render_two_step_requires_answer() {
        let t = PromptTemplate::builtin(TemplateName::TwoStepUncertainty);
        assert!(matches!(
            t.render("s", None),
            Err(Error::MissingArgument("proposed_answer"))
        ));
        let rendered = t.render("some claim", Some("analysis | 80")).unwrap();
        assert!(rendered.contains("some claim"));
        assert!(rendered.contains("Proposed answer: \"analysis | 80\""));
    }

    #[test]
    fn render_rejects_answer_for_other_templates() {
        let t = PromptTemplate::builtin(TemplateName::ExplainScore);
        assert!(matches!(
            t.render("s", Some("a")),
            Err(Error::UnexpectedArgument("proposed_answer"))
        ));
    }

    #[test]
    fn with_body_rejects_missing_placeholder() {
        assert!(PromptTemplate::with_body(TemplateName::ExplainScore, "no placeholder").is_err());
        assert!(
            PromptTemplate::with_body(TemplateName::ExplainScore, "STATEMENT twice STATEMENT")
                .is_err()
        );
        assert!(PromptTemplate::with_body(
            TemplateName::TwoStepUncertainty,
            "STATEMENT only, no answer token"
        )
        .is_err());
    }

    #[test]
    fn override_directory_replaces_body() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("explain_score.txt"),
            "Custom prompt for \"STATEMENT\" with a bar \"|\".\n",
        )
        .unwrap();
        let set = TemplateSet::with_overrides(dir.path()).unwrap();
        assert!(set
            .get(TemplateName::ExplainScore)
            .body
            .starts_with("Custom prompt"));
        // untouched templates fall back to the built-ins
        assert_eq!(
            set.get(TemplateName::Politifact).body,
            PromptTemplate::builtin(TemplateName::Politifact).body
        );
    }

    #[test]
    fn override_directory_validates() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("politifact.txt"), "missing token\n").unwrap();
        assert!(TemplateSet::with_overrides(dir.path()).is_err());
    }
}
