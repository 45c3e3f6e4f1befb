//! Asymmetric Laplace distribution (ALD) and mixtures of ALDs located at zero.
//!
//! The ALD with location `alpha`, scale `lambda > 0` and asymmetry
//! `0 < kappa < 1` has density
//!
//! ```text
//! p(x) = λκ(1−κ) · exp(−|x−α| · λ · ρ_κ(x−α)),   ρ_κ(e) = κ if e ≥ 0, 1−κ otherwise
//! ```
//!
//! Its left-tail mass at the mode is exactly `kappa`, so `kappa < 0.5` gives a
//! right-skewed law and `kappa > 0.5` a left-skewed one.

use rand::Rng;
use rand_distr::{Distribution, Open01};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Location, scale and asymmetry of one asymmetric Laplace distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlParams {
    alpha: f64,
    lambda: f64,
    kappa: f64,
}

impl AlParams {
    pub fn new(alpha: f64, lambda: f64, kappa: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::validation(format!("ALD location must be finite, got {alpha}")));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::validation(format!("ALD scale must be positive, got {lambda}")));
        }
        if !(kappa > 0.0 && kappa < 1.0) {
            return Err(Error::validation(format!(
                "ALD asymmetry must lie in (0,1), got {kappa}"
            )));
        }
        Ok(AlParams { alpha, lambda, kappa })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }
}

/// Quantile-loss slope for a residual: `kappa` on the right branch (`e >= 0`),
/// `1 - kappa` on the left.
#[inline]
pub fn rho(residual: f64, kappa: f64) -> f64 {
    if residual >= 0.0 {
        kappa
    } else {
        1.0 - kappa
    }
}

/// Log-density at `x - alpha = e` without constructing an [`AlParams`].
#[inline]
pub(crate) fn logpdf_raw(e: f64, lambda: f64, kappa: f64) -> f64 {
    lambda.ln() + kappa.ln() + (1.0 - kappa).ln() - e.abs() * lambda * rho(e, kappa)
}

pub fn ald_pdf(x: f64, p: &AlParams) -> f64 {
    let e = x - p.alpha;
    p.lambda * p.kappa * (1.0 - p.kappa) * (-e.abs() * p.lambda * rho(e, p.kappa)).exp()
}

pub fn ald_logpdf(x: f64, p: &AlParams) -> f64 {
    logpdf_raw(x - p.alpha, p.lambda, p.kappa)
}

pub fn ald_cdf(x: f64, p: &AlParams) -> f64 {
    let e = x - p.alpha;
    if e < 0.0 {
        p.kappa * (p.lambda * (1.0 - p.kappa) * e).exp()
    } else {
        1.0 - (1.0 - p.kappa) * (-p.lambda * p.kappa * e).exp()
    }
}

/// Inverse CDF. Fails for `u` outside the open unit interval.
pub fn ald_quantile(u: f64, p: &AlParams) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::validation(format!("quantile level must lie in (0,1), got {u}")));
    }
    Ok(quantile_unchecked(u, p.alpha, p.lambda, p.kappa))
}

#[inline]
fn quantile_unchecked(u: f64, alpha: f64, lambda: f64, kappa: f64) -> f64 {
    if u < kappa {
        alpha + (u / kappa).ln() / (lambda * (1.0 - kappa))
    } else {
        alpha - ((1.0 - u) / (1.0 - kappa)).ln() / (lambda * kappa)
    }
}

/// `n` independent draws by inversion of the closed-form quantile.
pub fn ald_sample<R: Rng + ?Sized>(n: usize, p: &AlParams, rng: &mut R) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let u: f64 = Open01.sample(rng);
            quantile_unchecked(u, p.alpha, p.lambda, p.kappa)
        })
        .collect()
}

/// One component of a zero-location ALD mixture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub pi: f64,
    pub lambda: f64,
    pub kappa: f64,
}

impl Component {
    pub fn params(&self) -> AlParams {
        AlParams {
            alpha: 0.0,
            lambda: self.lambda,
            kappa: self.kappa,
        }
    }
}

/// Mixture of asymmetric Laplace distributions, all located at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoalModel {
    components: Vec<Component>,
}

impl MoalModel {
    pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

    pub fn new(components: Vec<Component>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::validation("a mixture needs at least one component"));
        }
        for (s, c) in components.iter().enumerate() {
            if !(0.0..=1.0).contains(&c.pi) {
                return Err(Error::validation(format!(
                    "component {s}: mixing proportion {} outside [0,1]",
                    c.pi
                )));
            }
            AlParams::new(0.0, c.lambda, c.kappa).map_err(|e| Error::validation(format!("component {s}: {e}")))?;
        }
        let total: f64 = components.iter().map(|c| c.pi).sum();
        if (total - 1.0).abs() > Self::WEIGHT_SUM_TOLERANCE {
            return Err(Error::validation(format!(
                "mixing proportions sum to {total}, expected 1"
            )));
        }
        Ok(MoalModel { components })
    }

    /// Builds a model whose invariants the caller already guarantees.
    pub(crate) fn from_components_unchecked(components: Vec<Component>) -> Self {
        debug_assert!(!components.is_empty());
        MoalModel { components }
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Per-component `log π_s + log AL_s(e)`, written into `out`.
    pub(crate) fn joint_logs(&self, e: f64, out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = c.pi.ln() + logpdf_raw(e, c.lambda, c.kappa);
        }
    }
}

/// Stable `log Σ exp(x_i)`. Returns `-inf` for an empty slice or all `-inf`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + xs.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

pub fn moal_logpdf(x: f64, m: &MoalModel) -> f64 {
    let mut buf = vec![0.0; m.len()];
    m.joint_logs(x, &mut buf);
    log_sum_exp(&buf)
}

/// Draws a component index with probability `π_s`, then samples that component.
pub fn moal_sample<R: Rng + ?Sized>(n: usize, m: &MoalModel, rng: &mut R) -> Vec<f64> {
    let last = m.len() - 1;
    (0..n)
        .map(|_| {
            let pick: f64 = rng.random();
            let mut acc = 0.0;
            let mut idx = last;
            for (s, c) in m.components.iter().enumerate() {
                acc += c.pi;
                if pick < acc {
                    idx = s;
                    break;
                }
            }
            let c = &m.components[idx];
            let u: f64 = Open01.sample(rng);
            quantile_unchecked(u, 0.0, c.lambda, c.kappa)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;

    fn p(a: f64, l: f64, k: f64) -> AlParams {
        AlParams::new(a, l, k).unwrap()
    }

    // Plain Laplace density with scale b, coded independently.
    fn laplace_pdf(x: f64, b: f64) -> f64 {
        (-(x.abs()) / b).exp() / (2.0 * b)
    }

    #[test]
    fn rejects_invalid_params() {
        assert!(AlParams::new(0.0, 0.0, 0.5).is_err());
        assert!(AlParams::new(0.0, -1.0, 0.5).is_err());
        assert!(AlParams::new(0.0, 1.0, 0.0).is_err());
        assert!(AlParams::new(0.0, 1.0, 1.0).is_err());
        assert!(AlParams::new(f64::NAN, 1.0, 0.5).is_err());
    }

    #[test]
    fn pdf_at_mode() {
        assert_eq!(ald_pdf(0.0, &p(0.0, 1.0, 0.5)), 0.25);
        let q = p(-1.3, 2.5, 0.2);
        assert!((ald_pdf(-1.3, &q) - 2.5 * 0.2 * 0.8).abs() < 1e-15);
    }

    #[test]
    fn symmetric_case_is_laplace() {
        let q = p(0.0, 1.0, 0.5);
        assert!((ald_pdf(2.0, &q) - 0.25 * (-1.0f64).exp()).abs() < 1e-15);
        for &x in &[-3.0, -0.4, 0.0, 0.7, 2.0, 9.0] {
            assert!((ald_pdf(x, &q) - laplace_pdf(x, 2.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn logpdf_closed_form() {
        assert!((ald_logpdf(0.0, &p(0.0, 1.0, 0.5)) - 0.25f64.ln()).abs() < 1e-15);
        let far = ald_logpdf(1000.0, &p(0.0, 1.0, 0.5));
        assert!(far.is_finite());
        assert!((far - (-500.0 + 0.25f64.ln())).abs() < 1e-12);
        let q = p(0.4, 3.0, 0.8);
        assert!((ald_logpdf(0.4, &q) - (3.0f64 * 0.8 * 0.2).ln()).abs() < 1e-14);
    }

    #[test]
    fn cdf_values() {
        let q = p(0.3, 2.0, 0.7);
        assert_eq!(ald_cdf(0.3, &q), 0.7);
        assert!(ald_cdf(-1e4, &q) < 1e-300);
        assert_eq!(ald_cdf(1e4, &q), 1.0);
        let q = p(0.0, 2.0, 0.3);
        let expected = 1.0 - 0.7 * (-0.6f64).exp();
        assert!((ald_cdf(1.0, &q) - expected).abs() < 1e-15);
        // Simpson quadrature of the density from far left up to 1.
        let (a, b, n) = (-60.0, 1.0, 200_000);
        let h = (b - a) / n as f64;
        let mut acc = ald_pdf(a, &q) + ald_pdf(b, &q);
        for k in 1..n {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * ald_pdf(a + k as f64 * h, &q);
        }
        assert!((acc * h / 3.0 - expected).abs() < 1e-8);
    }

    #[test]
    fn quantile_values() {
        let q = p(1.5, 1.0, 0.7);
        assert_eq!(ald_quantile(0.7, &q).unwrap(), 1.5);
        let q = p(0.0, 1.0, 0.7);
        let x = ald_quantile(0.123, &q).unwrap();
        assert!((ald_cdf(x, &q) - 0.123).abs() < 1e-12);
        assert!(ald_quantile(0.0, &q).is_err());
        assert!(ald_quantile(1.0, &q).is_err());
        assert!(ald_quantile(f64::NAN, &q).is_err());
    }

    #[test]
    fn quantile_matches_bisection() {
        let q = p(0.0, 1.0, 0.5);
        let target = 0.9;
        let (mut lo, mut hi) = (-100.0, 100.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if ald_cdf(mid, &q) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let x = ald_quantile(target, &q).unwrap();
        assert!((x - 0.5 * (lo + hi)).abs() < 1e-10);
        assert!((x - (-2.0 * 0.2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn sampling_moments() {
        let mut rng = seeded_rng(11);
        assert!(ald_sample(0, &p(0.0, 1.0, 0.5), &mut rng).is_empty());

        let xs = ald_sample(100_000, &p(0.0, 1.0, 0.7), &mut rng);
        let below = xs.iter().filter(|&&x| x < 0.0).count() as f64 / xs.len() as f64;
        assert!((below - 0.7).abs() < 0.005, "{below}");

        let xs = ald_sample(100_000, &p(0.0, 1.0, 0.5), &mut rng);
        let mean_abs = xs.iter().map(|x| x.abs()).sum::<f64>() / xs.len() as f64;
        assert!((mean_abs - 2.0).abs() < 0.03, "{mean_abs}");
    }

    #[test]
    fn sampling_is_deterministic() {
        let q = p(0.2, 1.7, 0.35);
        let a = ald_sample(50, &q, &mut seeded_rng(5));
        let b = ald_sample(50, &q, &mut seeded_rng(5));
        assert_eq!(a, b);
    }

    fn model(cs: &[(f64, f64, f64)]) -> MoalModel {
        MoalModel::new(
            cs.iter()
                .map(|&(pi, lambda, kappa)| Component { pi, lambda, kappa })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn model_validation() {
        assert!(MoalModel::new(vec![]).is_err());
        assert!(MoalModel::new(vec![Component {
            pi: 0.6,
            lambda: 1.0,
            kappa: 0.5
        }])
        .is_err());
        assert!(MoalModel::new(vec![Component {
            pi: 1.0,
            lambda: 0.0,
            kappa: 0.5
        }])
        .is_err());
    }

    #[test]
    fn mixture_logpdf() {
        let single = model(&[(1.0, 2.0, 0.3)]);
        for &x in &[-2.0, 0.0, 0.5, 3.0] {
            assert!((moal_logpdf(x, &single) - ald_logpdf(x, &p(0.0, 2.0, 0.3))).abs() < 1e-14);
        }
        let twin = model(&[(0.5, 2.0, 0.3), (0.5, 2.0, 0.3)]);
        assert!((moal_logpdf(0.7, &twin) - moal_logpdf(0.7, &single)).abs() < 1e-14);

        let m = model(&[(0.5, 1.0, 0.5), (0.5, 2.0, 0.7)]);
        let direct = (0.5 * ald_pdf(0.3, &p(0.0, 1.0, 0.5)) + 0.5 * ald_pdf(0.3, &p(0.0, 2.0, 0.7))).ln();
        assert!((moal_logpdf(0.3, &m) - direct).abs() < 1e-14);

        let far = moal_logpdf(-1e6, &m);
        assert!(far.is_finite());
    }

    #[test]
    fn mixture_sampling() {
        let mut rng = seeded_rng(3);
        let m = model(&[(0.3, 1.0, 0.5), (0.7, 5.0, 0.5)]);
        assert!(moal_sample(0, &m, &mut rng).is_empty());
        let xs = moal_sample(100_000, &m, &mut rng);
        let mean_abs = xs.iter().map(|x| x.abs()).sum::<f64>() / xs.len() as f64;
        assert!((mean_abs - 0.88).abs() < 0.02, "{mean_abs}");
    }

    #[test]
    fn log_sum_exp_edges() {
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY, f64::NEG_INFINITY]), f64::NEG_INFINITY);
        assert!((log_sum_exp(&[-1000.0, -1000.0]) - (-1000.0 + 2f64.ln())).abs() < 1e-12);
        assert!((log_sum_exp(&[f64::NEG_INFINITY, 0.5]) - 0.5).abs() < 1e-15);
    }
}
