//! Render the six prompt templates and parse typical model replies.
//!
//! ```bash
//! cargo run -p veracal --example prompts_and_parsing
//! ```

use veracal::elicitation::{
    parse_categorical, parse_cot, parse_explain_score, parse_single_step, parse_two_step,
    TemplateName, TemplateSet,
};

fn main() -> anyhow::Result<()> {
    let templates = TemplateSet::builtin();
    let statement = "The unemployment rate fell to a ten-year low.";

    let prompt = templates.render(TemplateName::ExplainScore, statement, None)?;
    println!("--- explain-score prompt ---\n{prompt}\n");

    // the two-step prompt additionally embeds a previously produced answer
    let proposed = "The statistic matches agency data for that year. | 78";
    let two_step = templates.render(TemplateName::TwoStepUncertainty, statement, Some(proposed))?;
    println!("--- two-step prompt ---\n{two_step}\n");

    println!("--- parsing ---");
    let cases = [
        ("explain-score", "Sources broadly support it. | 78"),
        ("explain-score refusal", "I cannot judge this claim."),
        ("explain-score out of range", "nonsense | 250"),
    ];
    for (name, reply) in cases {
        println!("{name}: {:?}", parse_explain_score(reply).kind);
    }
    println!(
        "single-step: {:?}",
        parse_single_step("Analysis first. [70] then certainty |90|").kind
    );
    println!("two-step: {:?}", parse_two_step("My certainty is 85.").kind);
    println!(
        "categorical: {:?}",
        parse_categorical("Leaning accurate overall | A").kind
    );
    println!(
        "cot: {:?}",
        parse_cot("Thought 1: check sources. Thought 2: dates align. [64]").kind
    );
    Ok(())
}
