//! Statistical power of the two-sample t test and the single-predictor F
//! test over a grid of effect sizes and sample sizes, as CSV.
//!
//! ```text
//! cargo run --example power
//! ```

use abceval::analysis::power_report;

pub fn run_example(alpha: f64) -> Result<String, Box<dyn std::error::Error>> {
    let rows = power_report(&[0.2, 0.5, 0.8], &[0.02, 0.15], &[32, 100, 400], alpha)?;
    let mut out = String::from("test,effect,n,power\n");
    for r in rows {
        out += &format!("{},{},{},{:.3}\n", r.test, r.effect, r.n, r.power);
    }
    Ok(out)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    print!("{}", run_example(0.05)?);
    Ok(())
}
