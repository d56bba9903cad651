//! Built-in prompt bodies. The `STATEMENT` token (and `PROPOSED_ANSWER` for
//! the two-step prompt) is substituted at render time; everything else is
//! emitted as-is.

pub const EXPLAIN_SCORE: &str = "Rate the truthfulness of the following statement: \"STATEMENT\" Your task is to provide a score from 0 to 100, where 0 represents definitively false and 100 represents definitively true, but you must not state your score until you've presented a thorough analysis. Do not begin your response with a number. First write your analysis, then write a vertical bar \"|\", then finally state your score.";

pub const POLITIFACT: &str = "Rate the truthfulness of the following statement: \"STATEMENT\". Your task is to provide a score from 0 to 5, where 0: TRUE - The statement is accurate and there's nothing significant missing. 1: MOSTLY TRUE - The statement is accurate but needs clarification or additional information. 2: HALF TRUE - The statement is partially accurate but leaves out important details or takes things out of context. 3: MOSTLY FALSE - The statement contains an element of truth but ignores critical facts that would give a different impression. 4: FALSE - The statement is not accurate. 5: PANTS ON FIRE - The statement is not accurate and makes a ridiculous claim. Do not begin your response with a number. First, write a thorough analysis, then write a vertical bar \"|\", then finally state your score.";

pub const THREE_WAY_CATEGORICAL: &str = "Rate the truthfulness of the following statement: \"STATEMENT\" using the following options: A) Correct B) Incorrect, C) Somewhat true/Somewhat false. Do not begin your response with a number. First, write a thorough analysis, then write a vertical bar \"|\", then finally state your score.";

pub const SINGLE_STEP_UNCERTAINTY: &str = "Rate the truthfulness of the following statement: \"STATEMENT\". Your task is to provide a truthfulness score from 0 to 100, where 0 represents definitively false and 100 represents definitively true, but you must not state your score until you have presented a thorough analysis. First, write your analysis. Then, you are required to state your truthfulness score in squared brackets \"[]\". Finally, provide a different uncertainty score, where 0 represents definitely uncertain and 100 represents definitely certain of your answer, enclosed by vertical lines \"|\".";

pub const TWO_STEP_UNCERTAINTY: &str = "Statement: \"STATEMENT\"\nProposed answer: \"PROPOSED_ANSWER\"\nYour task is to rate the uncertainty of the proposed answer on a score from 0 to 100, where 0 represents definitely uncertain and 100 represents definitely certain. Please, only answer with your score.";

pub const COT_EXPLAIN_SCORE: &str = "Rate the truthfulness of the following statement: \"STATEMENT\". Your task is to provide a truthfulness score from 0 to 100, where 0 represents definitively false and 100 represents definitively true. First, provide a Chain of Thoughts (CoT) analysis. Then, state your truthfulness score in squared brackets \"[]\".";
