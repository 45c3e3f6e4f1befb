//! Runs the synthetic benchmark grid and prints the summary tables.
//!
//! ```text
//! cargo run --release --example synth_benchmark            # full grid, 30 replications
//! cargo run --release --example synth_benchmark -- 5       # 5 replications per cell
//! ```

use aqlrmf::bench::{render_table, run_benchmark, BenchmarkConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = BenchmarkConfig::default();
    if let Some(reps) = std::env::args().nth(1) {
        cfg.replications = reps.parse()?;
    }
    let res = run_benchmark(&cfg)?;
    print!("{}", render_table(&res));
    Ok(())
}
