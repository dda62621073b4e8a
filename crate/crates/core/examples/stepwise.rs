//! Backward beam search over predictor subsets. Two of the five columns
//! carry signal and one duplicates another, so the duplicate goes first at
//! no cost and the noise columns follow.
//!
//! ```text
//! cargo run --example stepwise
//! ```

use abceval::analysis::{stepwise_search, ModelKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statkit::Matrix;

pub fn run_example(n: usize, beam: usize) -> Result<String, Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let signal: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let weak: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let noise: Vec<Vec<f64>> = (0..2).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let y: Vec<f64> = (0..n).map(|i| 2.0 * signal[i] + 0.5 * weak[i] + rng.random_range(-1.0..1.0)).collect();
    let x = Matrix::from_columns(&[&signal, &signal, &weak, &noise[0], &noise[1]]);
    let names: Vec<String> = ["signal", "signal_copy", "weak", "noise_a", "noise_b"].map(String::from).to_vec();

    let trace = stepwise_search(&x, &y, &names, ModelKind::Linear, beam)?;
    let mut out = format!("n = {}, beam width {}\n", trace.n, trace.beam_width);
    for s in &trace.steps {
        out += &format!(
            "{} predictors  R2 {:.4}  adjusted {:.4}  all positive {:<5}  removed {:<12} {:?}\n",
            s.size,
            s.fitness,
            s.adjusted_fitness,
            s.all_positive,
            s.removed.as_deref().unwrap_or("-"),
            s.predictors
        );
    }
    for note in &trace.notes {
        out += &format!("note: {note}\n");
    }
    Ok(out)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    print!("{}", run_example(200, 100)?);
    Ok(())
}
