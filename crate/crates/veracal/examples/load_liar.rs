//! Load LIAR-format statements, derive binary labels, and round-trip them
//! through JSON Lines.
//!
//! ```bash
//! cargo run -p veracal --example load_liar
//! ```

use veracal::dataset::{
    dichotomize, from_jsonl, load_liar, score_to_binary, score_to_sixpoint, to_jsonl, Label6, Split,
};

fn main() -> anyhow::Result<()> {
    let dir = tempfile::tempdir()?;
    let tsv = dir.path().join("statements.tsv");
    std::fs::write(
        &tsv,
        "s1\tpants-fire\tThe moon is made of cheese.\tscience\talice\n\
         s2\thalf-true\tThe city budget doubled last year.\tbudget\tbob\n\
         s3\ttrue\tWater boils at 100 C at sea level.\tscience\tcarol\n",
    )?;

    let records = load_liar(&tsv, Split::All)?;
    println!("loaded {} records", records.len());
    for r in &records {
        println!("  {}: {:?} -> binary {}", r.id, r.label6, r.label_binary);
    }

    // the middle split: half-true and up count as true
    for label in Label6::ALL {
        println!("dichotomize({label}) = {}", dichotomize(label));
    }

    // continuous 0-100 truthfulness scores map onto either scale
    for score in [0.0, 40.0, 50.0, 85.0, 100.0] {
        println!(
            "score {score}: binary {}, 6-point {}",
            score_to_binary(score)?,
            score_to_sixpoint(score)?
        );
    }

    // Records serialize as JSON Lines, one object per line, bit-exactly
    let jsonl = to_jsonl(&records)?;
    print!("{jsonl}");
    assert_eq!(from_jsonl(&jsonl)?, records);
    Ok(())
}
