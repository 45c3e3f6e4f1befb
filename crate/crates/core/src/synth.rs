//! Synthetic low-rank data: Gaussian factors, random missingness and the
//! benchmark noise families (heavy-tailed, skewed and mixtures).

use std::f64::consts::PI;

use ndarray::Array2;
use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal, SkewNormal, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::ald::{ald_sample, AlParams};
use crate::matrix::{FactorPair, MaskedMatrix};
use crate::{seeded_rng, Error, Result};

/// A noise distribution. Every variant is centred at its location (0 unless
/// stated); mixtures may only nest plain variants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum NoiseSpec {
    Gaussian {
        sigma: f64,
    },
    Laplace {
        location: f64,
        scale: f64,
    },
    StudentT {
        df: f64,
    },
    AsymmetricLaplace {
        lambda: f64,
        kappa: f64,
    },
    /// Skew normal at location 0 with scale `sigma`, shaped so that `P(X ≤ 0) = kappa`.
    SkewNormal {
        sigma: f64,
        kappa: f64,
    },
    Mixture {
        parts: Vec<MixturePart>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixturePart {
    pub probability: f64,
    pub noise: NoiseSpec,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(format!("{name} must be positive, got {v}")))
    }
}

fn unit_open(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::validation(format!("{name} must lie in (0,1), got {v}")))
    }
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            NoiseSpec::Gaussian { sigma } => positive("sigma", *sigma),
            NoiseSpec::Laplace { location, scale } => {
                if !location.is_finite() {
                    return Err(Error::validation("Laplace location must be finite"));
                }
                positive("Laplace scale", *scale)
            }
            NoiseSpec::StudentT { df } => {
                if *df >= 1.0 && df.is_finite() {
                    Ok(())
                } else {
                    Err(Error::validation(format!("degrees of freedom must be >= 1, got {df}")))
                }
            }
            NoiseSpec::AsymmetricLaplace { lambda, kappa } => {
                positive("lambda", *lambda)?;
                unit_open("kappa", *kappa)
            }
            NoiseSpec::SkewNormal { sigma, kappa } => {
                positive("sigma", *sigma)?;
                unit_open("kappa", *kappa)
            }
            NoiseSpec::Mixture { parts } => {
                if parts.is_empty() {
                    return Err(Error::validation("mixture needs at least one part"));
                }
                let mut total = 0.0;
                for p in parts {
                    if matches!(p.noise, NoiseSpec::Mixture { .. }) {
                        return Err(Error::validation("mixtures cannot nest mixtures"));
                    }
                    if !(p.probability >= 0.0 && p.probability <= 1.0) {
                        return Err(Error::validation(format!(
                            "mixture probability {} outside [0,1]",
                            p.probability
                        )));
                    }
                    p.noise.validate()?;
                    total += p.probability;
                }
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::validation(format!("mixture probabilities sum to {total}")));
                }
                Ok(())
            }
        }
    }

    fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            NoiseSpec::Gaussian { sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                sigma * z
            }
            NoiseSpec::Laplace { location, scale } => {
                let p = AlParams::new(*location, 2.0 / scale, 0.5).expect("validated");
                ald_sample(1, &p, rng)[0]
            }
            NoiseSpec::StudentT { df } => StudentT::new(*df).expect("validated").sample(rng),
            NoiseSpec::AsymmetricLaplace { lambda, kappa } => {
                let p = AlParams::new(0.0, *lambda, *kappa).expect("validated");
                ald_sample(1, &p, rng)[0]
            }
            NoiseSpec::SkewNormal { sigma, kappa } => SkewNormal::new(0.0, *sigma, skew_normal_shape(*kappa))
                .expect("validated")
                .sample(rng),
            NoiseSpec::Mixture { parts } => {
                let pick: f64 = rng.random();
                let mut acc = 0.0;
                let mut chosen = &parts[parts.len() - 1].noise;
                for p in parts {
                    acc += p.probability;
                    if pick < acc {
                        chosen = &p.noise;
                        break;
                    }
                }
                chosen.sample_one(rng)
            }
        }
    }
}

/// Skew-normal shape `a` such that a location-0 skew normal has `P(X ≤ 0) = kappa`.
///
/// At the location the skew-normal CDF equals `1/2 − arctan(a)/π`, so the
/// shape has the closed form `tan(π (1/2 − kappa))`.
pub fn skew_normal_shape(kappa: f64) -> f64 {
    (PI * (0.5 - kappa)).tan()
}

/// `n` i.i.d. draws from `spec`.
pub fn sample_noise<R: Rng + ?Sized>(spec: &NoiseSpec, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    spec.validate()?;
    Ok((0..n).map(|_| spec.sample_one(rng)).collect())
}

/// Factors with i.i.d. standard normal entries and their product.
pub fn gen_lowrank<R: Rng + ?Sized>(m: usize, n: usize, r: usize, rng: &mut R) -> Result<(FactorPair, Array2<f64>)> {
    if r == 0 || r > m.min(n) {
        return Err(Error::validation(format!("rank {r} must lie in 1..={}", m.min(n))));
    }
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let u = Array2::from_shape_simple_fn((m, r), || normal.sample(rng));
    let v = Array2::from_shape_simple_fn((n, r), || normal.sample(rng));
    let f = FactorPair::new(u, v)?;
    let prod = f.product();
    Ok((f, prod))
}

/// Mask with exactly `round(fraction · m · n)` missing entries, chosen uniformly.
pub fn gen_mask<R: Rng + ?Sized>(m: usize, n: usize, missing_fraction: f64, rng: &mut R) -> Result<Array2<bool>> {
    if !(0.0..1.0).contains(&missing_fraction) {
        return Err(Error::validation(format!(
            "missing fraction must lie in [0,1), got {missing_fraction}"
        )));
    }
    let total = m * n;
    let missing = (missing_fraction * total as f64).round() as usize;
    let mut mask = Array2::from_elem((m, n), true);
    for k in index::sample(rng, total, missing).iter() {
        mask[[k / n, k % n]] = false;
    }
    Ok(mask)
}

/// One benchmark matrix: clean product, noisy observation and provenance.
#[derive(Debug, Clone)]
pub struct SyntheticInstance {
    pub ground_truth: Array2<f64>,
    pub factors: FactorPair,
    pub observed: MaskedMatrix,
    pub true_rank: usize,
    pub noise: Option<NoiseSpec>,
    pub seed: u64,
}

/// Low-rank product plus noise on the observed entries only.
///
/// Draw order from the seeded source: `U`, `V`, the mask, then one noise value
/// per observed entry in row-major order. `noise = None` gives a clean instance.
pub fn make_instance(
    m: usize,
    n: usize,
    r: usize,
    missing_fraction: f64,
    noise: Option<&NoiseSpec>,
    seed: u64,
) -> Result<SyntheticInstance> {
    if let Some(spec) = noise {
        spec.validate()?;
    }
    let mut rng = seeded_rng(seed);
    let (factors, truth) = gen_lowrank(m, n, r, &mut rng)?;
    let mask = gen_mask(m, n, missing_fraction, &mut rng)?;
    let mut values = truth.clone();
    if let Some(spec) = noise {
        for ((i, j), &seen) in mask.indexed_iter() {
            if seen {
                values[[i, j]] += spec.sample_one(&mut rng);
            }
        }
    }
    let observed = MaskedMatrix::new(values, mask)?;
    Ok(SyntheticInstance {
        ground_truth: truth,
        factors,
        observed,
        true_rank: r,
        noise: noise.cloned(),
        seed,
    })
}

/// SplitMix64 finalizer; a fixed, well-mixed hash of a 64-bit word.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent child seed `master ⊕ hash(k)`.
pub fn derive_seed(master: u64, k: u64) -> u64 {
    master ^ splitmix64(k)
}

fn mixture(parts: &[(f64, NoiseSpec)]) -> NoiseSpec {
    NoiseSpec::Mixture {
        parts: parts
            .iter()
            .map(|(probability, noise)| MixturePart {
                probability: *probability,
                noise: noise.clone(),
            })
            .collect(),
    }
}

/// The eight benchmark noise settings, with display names.
pub fn benchmark_noise_rows() -> Vec<(String, NoiseSpec)> {
    let lap = |scale: f64| NoiseSpec::Laplace { location: 0.0, scale };
    let std_normal = NoiseSpec::Gaussian { sigma: 1.0 };
    vec![
        ("Laplace Noise (b=1.5)".into(), lap(1.5)),
        ("Gaussian Noise (sigma=5)".into(), NoiseSpec::Gaussian { sigma: 5.0 }),
        ("Student's t Noise (df=1)".into(), NoiseSpec::StudentT { df: 1.0 }),
        ("Student's t Noise (df=2)".into(), NoiseSpec::StudentT { df: 2.0 }),
        (
            "AL Noise (lambda=1, kappa=0.7)".into(),
            NoiseSpec::AsymmetricLaplace {
                lambda: 1.0,
                kappa: 0.7,
            },
        ),
        (
            "SN Noise (sigma=3, kappa=0.7)".into(),
            NoiseSpec::SkewNormal { sigma: 3.0, kappa: 0.7 },
        ),
        (
            "Mixture Noise 1".into(),
            mixture(&[(0.5, std_normal.clone()), (0.3, lap(1.0)), (0.2, lap(2.0))]),
        ),
        (
            "Mixture Noise 2".into(),
            mixture(&[
                (0.5, std_normal),
                (0.3, lap(1.0)),
                (
                    0.2,
                    NoiseSpec::AsymmetricLaplace {
                        lambda: 1.0,
                        kappa: 0.8,
                    },
                ),
            ]),
        ),
    ]
}
