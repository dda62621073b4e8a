//! Prints the built-in evaluation schema: tasks per method, labels per
//! task, screening thresholds and the size of the final label set.
//!
//! ```text
//! cargo run --example schema_audit
//! ```

use abceval::corpus::{builtin_schema, Method, DEFAULT_SCREENING_THRESHOLD};

pub fn run_example() -> String {
    let schema = builtin_schema();
    let mut out = format!(
        "{} labels, {} tasks, {} labels per conversation, final set of {}\n",
        schema.labels.len(),
        schema.tasks.len(),
        schema.labels_per_conversation(),
        schema.final_set().count()
    );
    for method in Method::ALL {
        let tasks: Vec<_> = schema.tasks_for(method).collect();
        out += &format!("{}: {} task(s)\n", method.as_str(), tasks.len());
        for t in tasks.iter().filter(|t| t.requires_training) {
            let threshold = t.screening_threshold.unwrap_or(DEFAULT_SCREENING_THRESHOLD);
            out += &format!("  {:<16} {:?} screening < {threshold} mistakes, ${:.2}\n", t.key, t.labels, t.payment_usd);
        }
    }
    out
}

fn main() {
    print!("{}", run_example());
}
