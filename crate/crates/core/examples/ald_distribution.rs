//! Asymmetric Laplace densities, quantiles and sampling, plus a two-part
//! mixture and the skewness of its draws.
//!
//! ```text
//! cargo run --release --example ald_distribution
//! ```

use aqlrmf::ald::{
    ald_cdf, ald_pdf, ald_quantile, ald_sample, moal_logpdf, moal_sample, AlParams, Component, MoalModel,
};
use aqlrmf::metrics::sample_skewness;
use aqlrmf::seeded_rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = AlParams::new(0.0, 1.0, 0.7)?;
    println!("ALD(alpha=0, lambda=1, kappa=0.7)");
    println!("{:>6} {:>10} {:>10}", "x", "pdf", "cdf");
    for x in [-4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0] {
        println!("{x:>6.1} {:>10.5} {:>10.5}", ald_pdf(x, &p), ald_cdf(x, &p));
    }
    for u in [0.05, 0.5, 0.7, 0.95] {
        println!("quantile({u}) = {:.5}", ald_quantile(u, &p)?);
    }

    let mut rng = seeded_rng(1);
    let xs = ald_sample(100_000, &p, &mut rng);
    let below = xs.iter().filter(|&&x| x <= 0.0).count() as f64 / xs.len() as f64;
    println!("share of draws at or below the mode: {below:.4}");
    println!("sample skewness: {:.3}", sample_skewness(&xs)?);

    let model = MoalModel::new(vec![
        Component {
            pi: 0.6,
            lambda: 4.0,
            kappa: 0.5,
        },
        Component {
            pi: 0.4,
            lambda: 0.5,
            kappa: 0.8,
        },
    ])?;
    let ys = moal_sample(100_000, &model, &mut rng);
    println!(
        "\nmixture log-density at -1, 0, 1: {:.4} {:.4} {:.4}",
        moal_logpdf(-1.0, &model),
        moal_logpdf(0.0, &model),
        moal_logpdf(1.0, &model)
    );
    println!("mixture sample skewness: {:.3}", sample_skewness(&ys)?);
    println!("far tail stays finite: log p(1e4) = {:.1}", moal_logpdf(1e4, &model));
    Ok(())
}
