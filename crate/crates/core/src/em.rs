//! Expectation-maximization for the MoAL low-rank model.
//!
//! One outer iteration of [`fit`] runs, in order:
//!
//! 1. closed-form update of `π`, then `λ` (with the current `κ`), then `κ`
//!    (with the fresh `λ`);
//! 2. an E-step;
//! 3. a weighted-L1 factor update warm-started from the current factors
//!    (see [`FactorUpdate`]);
//! 4. another E-step, after which the observed log-likelihood is recorded;
//! 5. removal of components that are the most responsible one for no entry.
//!
//! Iteration stops when `‖U_new − U_old‖_F` falls below the convergence
//! threshold or the iteration budget is exhausted.

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Open01, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::ald::{log_sum_exp, rho, Component, MoalModel};
use crate::matrix::{FactorPair, MaskedMatrix};
use crate::wl1::{check_objective, solve_check_l1, solve_wl1, CheckWeights, Wl1Options};
use crate::{seeded_rng, Error, Result};

pub use crate::wl1::WeightMatrix;

/// How the factors are refit given the responsibilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorUpdate {
    /// Minimize the expected negative log-likelihood exactly: each residual
    /// pays `Σ_s λ_s γ_s κ_s` per unit when positive and `Σ_s λ_s γ_s (1−κ_s)`
    /// when negative ([`check_weights`]). The log-likelihood never decreases.
    CheckLoss,
    /// Weighted L1 with [`compute_weights`] frozen at the residual signs from
    /// before the update. Cheaper to reason about, but a residual that
    /// changes sign is charged the wrong slope, so the log-likelihood can dip.
    FrozenWeights,
    /// [`FactorUpdate::FrozenWeights`], kept only if it does not raise the
    /// check-loss objective; otherwise [`FactorUpdate::CheckLoss`] from the
    /// same start. The log-likelihood never decreases.
    #[default]
    Guarded,
}

/// Posterior component memberships `γ_ijs`, one row per observed entry
/// (in [`MaskedMatrix::observed`] order) and one column per component.
#[derive(Debug, Clone, PartialEq)]
pub struct Responsibilities {
    gamma: Array2<f64>,
}

impl Responsibilities {
    /// Validates that every row is a probability vector (sum 1 within 1e-12).
    pub fn new(gamma: Array2<f64>) -> Result<Self> {
        if gamma.ncols() == 0 {
            return Err(Error::validation("responsibilities need at least one component"));
        }
        for (k, row) in gamma.rows().into_iter().enumerate() {
            if row.iter().any(|g| !(0.0..=1.0).contains(g)) {
                return Err(Error::validation(format!(
                    "responsibility row {k} has entries outside [0,1]"
                )));
            }
            let sum: f64 = row.sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::validation(format!("responsibility row {k} sums to {sum}")));
            }
        }
        Ok(Responsibilities { gamma })
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.gamma
    }

    pub fn n_entries(&self) -> usize {
        self.gamma.nrows()
    }

    pub fn n_components(&self) -> usize {
        self.gamma.ncols()
    }

    /// `N_s = Σ γ_ijs` for every component.
    pub fn component_mass(&self) -> Vec<f64> {
        self.gamma.columns().into_iter().map(|c| c.sum()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub rank: usize,
    /// Initial number of mixture components.
    pub components: usize,
    pub max_iterations: usize,
    /// Threshold on the Frobenius norm of the change of `U`.
    pub convergence_epsilon: f64,
    pub lambda_max: f64,
    /// `|η_s|` below this gives `κ_s = 0.5`.
    pub eta_epsilon: f64,
    pub inner: Wl1Options,
    #[serde(default)]
    pub factor_update: FactorUpdate,
}

impl FitOptions {
    pub fn new(rank: usize) -> Self {
        FitOptions {
            rank,
            components: 4,
            max_iterations: 100,
            convergence_epsilon: 1e-50,
            lambda_max: 1e6,
            eta_epsilon: 1e-12,
            inner: Wl1Options::default(),
            factor_update: FactorUpdate::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rank == 0 {
            return Err(Error::validation("rank must be at least 1"));
        }
        if self.components == 0 {
            return Err(Error::validation("number of components must be at least 1"));
        }
        if self.max_iterations == 0 || self.inner.max_sweeps == 0 {
            return Err(Error::validation("iteration budgets must be positive"));
        }
        for (name, v) in [
            ("convergence_epsilon", self.convergence_epsilon),
            ("lambda_max", self.lambda_max),
            ("eta_epsilon", self.eta_epsilon),
            ("objective_tolerance", self.inner.objective_tolerance),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::validation(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub iterations: usize,
    /// Observed-data log-likelihood after each outer iteration.
    pub loglik_trace: Vec<f64>,
    pub final_s: usize,
    pub converged: bool,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub factors: FactorPair,
    pub model: MoalModel,
    pub report: FitReport,
}

/// Random factors with entries `2ξc − c`, `ξ ~ N(0,1)`, `c = sqrt(x̄/r)`, where
/// `x̄` is the median absolute observed value (floored at 1e-8).
pub fn init_factors<R: Rng + ?Sized>(x: &MaskedMatrix, rank: usize, rng: &mut R) -> Result<FactorPair> {
    if rank == 0 {
        return Err(Error::validation("rank must be at least 1"));
    }
    let mut mags: Vec<f64> = x.observed().iter().map(|&(i, j)| x.values()[[i, j]].abs()).collect();
    if mags.is_empty() {
        return Err(Error::validation("matrix has no observed entries"));
    }
    mags.sort_by(f64::total_cmp);
    let k = mags.len();
    let median = if k % 2 == 1 {
        mags[k / 2]
    } else {
        0.5 * (mags[k / 2 - 1] + mags[k / 2])
    };
    let c = (median.max(1e-8) / rank as f64).sqrt();
    let mut draw = |shape: (usize, usize)| {
        Array2::from_shape_simple_fn(shape, || {
            let xi: f64 = StandardNormal.sample(rng);
            2.0 * xi * c - c
        })
    };
    let u = draw((x.nrows(), rank));
    let v = draw((x.ncols(), rank));
    FactorPair::new(u, v)
}

/// Random initial mixture: `λ_s, κ_s ~ U(0.05, 0.95)`, `π` uniform then normalized.
pub fn init_model<R: Rng + ?Sized>(components: usize, rng: &mut R) -> Result<MoalModel> {
    if components == 0 {
        return Err(Error::validation("number of components must be at least 1"));
    }
    let range = Uniform::new(0.05, 0.95).expect("valid range");
    let mut comps: Vec<Component> = (0..components)
        .map(|_| {
            let lambda = range.sample(rng);
            let kappa = range.sample(rng);
            let pi: f64 = Open01.sample(rng);
            Component { pi, lambda, kappa }
        })
        .collect();
    let total: f64 = comps.iter().map(|c| c.pi).sum();
    for c in &mut comps {
        c.pi /= total;
    }
    MoalModel::new(comps)
}

fn check_dims(x: &MaskedMatrix, f: &FactorPair) -> Result<()> {
    if f.u.nrows() != x.nrows() || f.v.nrows() != x.ncols() {
        return Err(Error::validation(format!(
            "factors are {}x{} and {}x{} but data is {}x{}",
            f.u.nrows(),
            f.rank(),
            f.v.nrows(),
            f.rank(),
            x.nrows(),
            x.ncols()
        )));
    }
    Ok(())
}

/// Posterior memberships for the given residuals, computed in the log domain.
pub fn responsibilities_for(residuals: &[f64], m: &MoalModel) -> Responsibilities {
    let s = m.len();
    let mut gamma = Array2::zeros((residuals.len(), s));
    let mut buf = vec![0.0; s];
    for (k, &e) in residuals.iter().enumerate() {
        m.joint_logs(e, &mut buf);
        let norm = log_sum_exp(&buf);
        let mut row = gamma.row_mut(k);
        let mut total = 0.0;
        for (g, &lp) in row.iter_mut().zip(&buf) {
            *g = (lp - norm).exp();
            total += *g;
        }
        // One more normalization pass pins the row sum to 1 up to a few ulps.
        row.mapv_inplace(|g| g / total);
    }
    Responsibilities { gamma }
}

pub fn e_step(x: &MaskedMatrix, f: &FactorPair, m: &MoalModel) -> Result<Responsibilities> {
    check_dims(x, f)?;
    Ok(responsibilities_for(&x.residuals(f), m))
}

/// `π_s = N_s / N`.
pub fn update_pi(g: &Responsibilities) -> Vec<f64> {
    let n = g.n_entries() as f64;
    g.component_mass().into_iter().map(|ns| ns / n).collect()
}

/// `ρ_ijs` for every observed residual and component `κ_s`.
pub fn rho_matrix(residuals: &[f64], kappa: &[f64]) -> Array2<f64> {
    Array2::from_shape_fn((residuals.len(), kappa.len()), |(k, s)| rho(residuals[k], kappa[s]))
}

/// `λ_s = N_s / Σ ρ_ijs γ_ijs |e_ij|`, capped at `lambda_max`.
///
/// A zero denominator (all responsible residuals exactly zero) yields
/// `lambda_max`. A component with `N_s = 0` has no data and would get `λ = 0`;
/// it is given `lambda_max` as well so the model stays valid until pruning
/// removes it.
pub fn update_lambda(g: &Responsibilities, residuals: &[f64], rho: &Array2<f64>, lambda_max: f64) -> Vec<f64> {
    let gamma = g.as_array();
    (0..g.n_components())
        .map(|s| {
            let mut ns = 0.0;
            let mut denom = 0.0;
            for (k, &e) in residuals.iter().enumerate() {
                let gk = gamma[[k, s]];
                ns += gk;
                denom += rho[[k, s]] * gk * e.abs();
            }
            if ns <= 0.0 {
                return lambda_max;
            }
            let lambda = ns / denom;
            if lambda.is_finite() {
                lambda.min(lambda_max)
            } else {
                lambda_max
            }
        })
        .collect()
}

/// Root in (0,1) of `η κ² − (2N + η) κ + N = 0`.
///
/// For `η > 0` the closed-form root is rationalized to
/// `2N / (2N + η + sqrt(4N² + η²))`, which avoids cancellation; for `η < 0`
/// the direct form has no cancellation. `|η| < eta_epsilon` gives the limit 0.5.
pub fn kappa_root(n_s: f64, eta: f64, eta_epsilon: f64) -> f64 {
    if !(eta.abs() >= eta_epsilon) || n_s <= 0.0 {
        return 0.5;
    }
    let disc = (4.0 * n_s * n_s + eta * eta).sqrt();
    let kappa = if eta > 0.0 {
        2.0 * n_s / (2.0 * n_s + eta + disc)
    } else {
        (2.0 * n_s + eta - disc) / (2.0 * eta)
    };
    // Extreme |η|/N can round onto the boundary; keep the ALD valid.
    kappa.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// `κ_s` from `η_s = λ_s Σ γ_ijs e_ij` via [`kappa_root`].
pub fn update_kappa(g: &Responsibilities, residuals: &[f64], lambda: &[f64], eta_epsilon: f64) -> Vec<f64> {
    let gamma = g.as_array();
    let mass = g.component_mass();
    (0..g.n_components())
        .map(|s| {
            let weighted: f64 = residuals.iter().enumerate().map(|(k, &e)| gamma[[k, s]] * e).sum();
            kappa_root(mass[s], lambda[s] * weighted, eta_epsilon)
        })
        .collect()
}

/// `w_ij = Σ_s λ_s γ_ijs ρ_ijs` on observed entries, zero elsewhere.
pub fn compute_weights(x: &MaskedMatrix, g: &Responsibilities, m: &MoalModel, residuals: &[f64]) -> WeightMatrix {
    let gamma = g.as_array();
    let mut w = Array2::zeros((x.nrows(), x.ncols()));
    for (k, &(i, j)) in x.observed().iter().enumerate() {
        let e = residuals[k];
        w[[i, j]] = m
            .components()
            .iter()
            .enumerate()
            .map(|(s, c)| c.lambda * gamma[[k, s]] * rho(e, c.kappa))
            .sum();
    }
    WeightMatrix::from_array_unchecked(w)
}

/// Positive- and negative-residual slopes `Σ_s λ_s γ_ijs κ_s` and
/// `Σ_s λ_s γ_ijs (1 − κ_s)`. At the current residual signs they agree with
/// [`compute_weights`].
pub fn check_weights(x: &MaskedMatrix, g: &Responsibilities, m: &MoalModel) -> CheckWeights {
    let gamma = g.as_array();
    let mut pos = Array2::zeros((x.nrows(), x.ncols()));
    let mut neg = Array2::zeros((x.nrows(), x.ncols()));
    for (k, &(i, j)) in x.observed().iter().enumerate() {
        let (mut a, mut b) = (0.0, 0.0);
        for (s, c) in m.components().iter().enumerate() {
            let lg = c.lambda * gamma[[k, s]];
            a += lg * c.kappa;
            b += lg * (1.0 - c.kappa);
        }
        pos[[i, j]] = a;
        neg[[i, j]] = b;
    }
    CheckWeights::from_arrays_unchecked(pos, neg)
}

/// Drops components that are the argmax responsibility (lowest index on ties)
/// of no observed entry, renormalizing `π` and the responsibility rows.
pub fn prune_components(g: &Responsibilities, m: &MoalModel) -> (MoalModel, Responsibilities) {
    let gamma = g.as_array();
    let s = m.len();
    let mut wins = vec![false; s];
    for row in gamma.rows() {
        let mut best = 0;
        for t in 1..s {
            if row[t] > row[best] {
                best = t;
            }
        }
        wins[best] = true;
    }
    if wins.iter().all(|&w| w) {
        return (m.clone(), g.clone());
    }
    let keep: Vec<usize> = (0..s).filter(|&t| wins[t]).collect();
    let total: f64 = keep.iter().map(|&t| m.components()[t].pi).sum();
    let comps = keep
        .iter()
        .map(|&t| {
            let c = m.components()[t];
            Component { pi: c.pi / total, ..c }
        })
        .collect();
    let mut kept = gamma.select(ndarray::Axis(1), &keep);
    for mut row in kept.rows_mut() {
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    (
        MoalModel::from_components_unchecked(comps),
        Responsibilities { gamma: kept },
    )
}

/// `Σ_{(i,j) ∈ Ω} log p(e_ij)` under the mixture.
pub fn observed_loglik(x: &MaskedMatrix, f: &FactorPair, m: &MoalModel) -> Result<f64> {
    check_dims(x, f)?;
    Ok(loglik_of(&x.residuals(f), m))
}

fn loglik_of(residuals: &[f64], m: &MoalModel) -> f64 {
    let mut buf = vec![0.0; m.len()];
    residuals
        .iter()
        .map(|&e| {
            m.joint_logs(e, &mut buf);
            log_sum_exp(&buf)
        })
        .sum()
}

/// Fits `X ≈ U Vᵀ` with MoAL noise. Deterministic in `(x, opts, seed)`.
pub fn fit(x: &MaskedMatrix, opts: &FitOptions, seed: u64) -> Result<FitResult> {
    opts.validate()?;
    let mut rng = seeded_rng(seed);
    let factors = init_factors(x, opts.rank, &mut rng)?;
    let model = init_model(opts.components, &mut rng)?;
    fit_from(x, factors, model, opts, seed)
}

/// Runs the EM loop from explicit starting factors and mixture.
pub fn fit_from(
    x: &MaskedMatrix,
    mut factors: FactorPair,
    mut model: MoalModel,
    opts: &FitOptions,
    seed: u64,
) -> Result<FitResult> {
    opts.validate()?;
    check_dims(x, &factors)?;

    let mut residuals = x.residuals(&factors);
    let mut gamma = responsibilities_for(&residuals, &model);
    let mut trace = Vec::with_capacity(opts.max_iterations);
    let mut converged = false;

    for _ in 0..opts.max_iterations {
        // M-step 1: π, then λ with the current κ, then κ with the new λ.
        let pi = update_pi(&gamma);
        let kappa_old: Vec<f64> = model.components().iter().map(|c| c.kappa).collect();
        let rho = rho_matrix(&residuals, &kappa_old);
        let lambda = update_lambda(&gamma, &residuals, &rho, opts.lambda_max);
        let kappa = update_kappa(&gamma, &residuals, &lambda, opts.eta_epsilon);
        model = MoalModel::from_components_unchecked(
            (0..pi.len())
                .map(|s| Component {
                    pi: pi[s],
                    lambda: lambda[s],
                    kappa: kappa[s],
                })
                .collect(),
        );

        gamma = responsibilities_for(&residuals, &model);

        // M-step 2: factor update.
        let u_old = factors.u.clone();
        factors = match opts.factor_update {
            FactorUpdate::CheckLoss => solve_check_l1(x, &check_weights(x, &gamma, &model), factors, &opts.inner),
            FactorUpdate::FrozenWeights => {
                solve_wl1(x, &compute_weights(x, &gamma, &model, &residuals), factors, &opts.inner)
            }
            FactorUpdate::Guarded => {
                let cw = check_weights(x, &gamma, &model);
                let before = check_objective(x, &cw, &factors);
                let frozen = solve_wl1(
                    x,
                    &compute_weights(x, &gamma, &model, &residuals),
                    factors.clone(),
                    &opts.inner,
                );
                if check_objective(x, &cw, &frozen) <= before {
                    frozen
                } else {
                    solve_check_l1(x, &cw, factors, &opts.inner)
                }
            }
        };
        residuals = x.residuals(&factors);

        gamma = responsibilities_for(&residuals, &model);
        trace.push(loglik_of(&residuals, &model));

        let (pruned, g) = prune_components(&gamma, &model);
        model = pruned;
        gamma = g;

        let change = (&factors.u - &u_old).mapv(|d| d * d).sum().sqrt();
        if change < opts.convergence_epsilon {
            converged = true;
            break;
        }
    }

    let report = FitReport {
        iterations: trace.len(),
        loglik_trace: trace,
        final_s: model.len(),
        converged,
        seed,
    };
    Ok(FitResult { factors, model, report })
}

/// Uniform-weight L1 baseline: plain CWM from the same random start as [`fit`].
///
/// Runs up to `opts.max_iterations` sweeps with the same stopping rules.
pub fn fit_cwm_uniform(x: &MaskedMatrix, opts: &FitOptions, seed: u64) -> Result<(FactorPair, usize)> {
    opts.validate()?;
    let mut rng = seeded_rng(seed);
    let factors = init_factors(x, opts.rank, &mut rng)?;
    let w = WeightMatrix::uniform(x);
    let inner = Wl1Options {
        max_sweeps: opts.max_iterations,
        objective_tolerance: opts.inner.objective_tolerance,
    };
    let out = crate::wl1::solve_wl1_with(x, &w, factors, &inner, |_, _| {});
    Ok((out.factors, out.sweeps))
}
