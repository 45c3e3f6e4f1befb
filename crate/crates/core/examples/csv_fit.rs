//! Reads a CSV matrix (`NaN` = missing), fits it and prints a completed copy.
//!
//! Without an argument a small demo matrix is used.
//!
//! ```text
//! cargo run --release --example csv_fit -- data.csv 3
//! ```

use aqlrmf::cli::{fit_matrix, FitConfig, FitMethod};
use aqlrmf::io::{parse_csv_matrix, read_csv_matrix};

const DEMO: &str = "\
1, 2, 3, 4
2, 4, NaN, 8
3, NaN, 9, 12
4, 8, 12, 160
NaN, 10, 15, 20
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let x = match args.next() {
        Some(path) => read_csv_matrix(path)?,
        None => parse_csv_matrix(DEMO, "demo")?,
    };
    let rank = args.next().map(|r| r.parse()).transpose()?.unwrap_or(1);
    println!(
        "{}x{} matrix, {} observed entries, rank {rank}",
        x.nrows(),
        x.ncols(),
        x.n_observed()
    );

    let config = FitConfig {
        method: FitMethod::Aq,
        rank,
        components: 4,
        max_iterations: 100,
    };
    let (f, summary) = fit_matrix(&x, config, 0)?;
    println!(
        "{} iterations, observed-entry L1 {:.4}",
        summary.iterations, summary.l1_observed
    );
    for row in f.product().rows() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:9.3}")).collect();
        println!("{}", cells.join(" "));
    }
    Ok(())
}
