//! Weighted L1 factorization by cyclic weighted medians.
//!
//! Fits a rank-2 matrix with a handful of gross outliers, first with uniform
//! weights and then with the outliers down-weighted.
//!
//! ```text
//! cargo run --release --example weighted_l1
//! ```

use aqlrmf::em::init_factors;
use aqlrmf::metrics::l1_error;
use aqlrmf::synth::make_instance;
use aqlrmf::wl1::{solve_wl1_with, weighted_median, wl1_objective, WeightMatrix, Wl1Options};
use aqlrmf::{seeded_rng, MaskedMatrix};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let m = weighted_median(&[3.0, -1.0, 10.0, 2.0], &[1.0, 1.0, 0.5, 2.0])?;
    println!("weighted median of [3, -1, 10, 2] with weights [1, 1, 0.5, 2]: {m}");

    let inst = make_instance(30, 20, 2, 0.1, None, 4)?;
    let mut values = inst.observed.values().clone();
    let outliers = [(0, 0), (3, 7), (10, 2), (17, 15), (25, 11), (29, 19)];
    for &(i, j) in &outliers {
        values[[i, j]] += 25.0;
    }
    let x = MaskedMatrix::new(values, inst.observed.mask().clone())?;
    let start = init_factors(&x, 2, &mut seeded_rng(5))?;
    let opts = Wl1Options {
        max_sweeps: 200,
        ..Wl1Options::default()
    };

    let uniform = WeightMatrix::uniform(&x);
    let mut updates = 0;
    let out = solve_wl1_with(&x, &uniform, start.clone(), &opts, |_, _| updates += 1);
    println!("\nuniform weights: {} sweeps, {updates} scalar updates", out.sweeps);
    println!(
        "  objective {:.4}, L1 to clean matrix {:.2e}",
        out.objective,
        l1_error(&inst.ground_truth, &out.factors)?
    );

    let mut w = uniform.as_array().clone();
    for &(i, j) in &outliers {
        if x.is_observed(i, j) {
            w[[i, j]] = 0.01;
        }
    }
    let w = WeightMatrix::new(w, &x)?;
    let out = solve_wl1_with(&x, &w, start, &opts, |_, _| {});
    println!("outliers down-weighted: {} sweeps", out.sweeps);
    println!(
        "  objective {:.4}, L1 to clean matrix {:.2e}",
        wl1_objective(&x, &w, &out.factors),
        l1_error(&inst.ground_truth, &out.factors)?
    );
    Ok(())
}
