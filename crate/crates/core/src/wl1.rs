//! Weighted L1 low-rank factorization by cyclic weighted medians (CWM).
//!
//! Minimizes `Σ_ij w_ij |x_ij − u_i·v_j|` by exact coordinate descent: with
//! everything else fixed, the objective in a single entry `v_ji` is
//! `Σ_l w_lj |u_li| · |v_ji − ẽ_l / u_li|` (ẽ being the residual with factor
//! `i` removed), which is minimized by a weighted median of the ratios.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::matrix::{FactorPair, MaskedMatrix};
use crate::{Error, Result};

/// Per-entry nonnegative weights; exactly zero on missing entries.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    w: Array2<f64>,
}

impl WeightMatrix {
    /// Validates `w` against the mask of `x`.
    pub fn new(w: Array2<f64>, x: &MaskedMatrix) -> Result<Self> {
        if w.dim() != x.values().dim() {
            return Err(Error::validation(format!(
                "weights are {:?} but data is {:?}",
                w.dim(),
                x.values().dim()
            )));
        }
        for ((i, j), &wij) in w.indexed_iter() {
            if !(wij.is_finite() && wij >= 0.0) {
                return Err(Error::validation(format!(
                    "weight ({i}, {j}) = {wij} is not a finite nonnegative value"
                )));
            }
            if !x.is_observed(i, j) && wij != 0.0 {
                return Err(Error::validation(format!(
                    "weight ({i}, {j}) on a missing entry must be zero"
                )));
            }
        }
        Ok(WeightMatrix { w })
    }

    /// Weight 1 on every observed entry: plain L1 factorization.
    pub fn uniform(x: &MaskedMatrix) -> Self {
        WeightMatrix {
            w: x.mask().mapv(|seen| if seen { 1.0 } else { 0.0 }),
        }
    }

    pub(crate) fn from_array_unchecked(w: Array2<f64>) -> Self {
        WeightMatrix { w }
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.w
    }
}

/// Separate weights for positive (`pos`) and negative (`neg`) residuals;
/// both exactly zero on missing entries.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckWeights {
    pos: Array2<f64>,
    neg: Array2<f64>,
}

impl CheckWeights {
    pub fn new(pos: Array2<f64>, neg: Array2<f64>, x: &MaskedMatrix) -> Result<Self> {
        let pos = WeightMatrix::new(pos, x)?.w;
        let neg = WeightMatrix::new(neg, x)?.w;
        Ok(CheckWeights { pos, neg })
    }

    pub(crate) fn from_arrays_unchecked(pos: Array2<f64>, neg: Array2<f64>) -> Self {
        CheckWeights { pos, neg }
    }

    pub fn pos(&self) -> &Array2<f64> {
        &self.pos
    }

    pub fn neg(&self) -> &Array2<f64> {
        &self.neg
    }

    /// Symmetric weights evaluated at the residual signs of `f`:
    /// `pos` where the residual is `>= 0`, `neg` elsewhere.
    pub fn at_signs(&self, x: &MaskedMatrix, f: &FactorPair) -> WeightMatrix {
        let mut w = Array2::zeros(self.pos.dim());
        for &(i, j) in x.observed() {
            let e = x.values()[[i, j]] - f.entry(i, j);
            w[[i, j]] = if e >= 0.0 { self.pos[[i, j]] } else { self.neg[[i, j]] };
        }
        WeightMatrix { w }
    }
}

/// Stopping rule for [`solve_wl1`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wl1Options {
    pub max_sweeps: usize,
    /// Stop once a sweep lowers the objective by less than this fraction.
    pub objective_tolerance: f64,
}

impl Default for Wl1Options {
    fn default() -> Self {
        Wl1Options {
            max_sweeps: 10,
            objective_tolerance: 1e-6,
        }
    }
}

/// A minimizer of `f(v) = Σ w_l |v − a_l|`.
///
/// Values are sorted ascending (stable on ties) and the first value at which
/// the cumulative weight reaches half of the total is returned, so the result
/// is always one of the inputs and is the smallest minimizer among them.
pub fn weighted_median(values: &[f64], weights: &[f64]) -> Result<f64> {
    if values.len() != weights.len() {
        return Err(Error::DegenerateInput(format!(
            "{} values but {} weights",
            values.len(),
            weights.len()
        )));
    }
    if values.is_empty() {
        return Err(Error::DegenerateInput("empty input".into()));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::DegenerateInput("weights must be finite and nonnegative".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateInput("values must be finite".into()));
    }
    let mut kinks: Vec<Kink> = values
        .iter()
        .zip(weights)
        .map(|(&at, &w)| Kink { at, left: w, right: w })
        .collect();
    check_point(&mut kinks).ok_or_else(|| Error::DegenerateInput("no strictly positive weight".into()))
}

/// One term `left·max(t − v, 0) + right·max(v − t, 0)` of a scalar
/// piecewise-linear convex objective in `v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kink {
    pub at: f64,
    /// Slope magnitude to the left of `at`.
    pub left: f64,
    /// Slope magnitude to the right of `at`.
    pub right: f64,
}

impl Kink {
    #[inline]
    fn cost(&self, v: f64) -> f64 {
        if v < self.at {
            self.left * (self.at - v)
        } else {
            self.right * (v - self.at)
        }
    }
}

/// Smallest minimizer among the kink locations of `Σ_l kink_l(v)`.
///
/// The derivative just right of the k-th sorted kink is
/// `Σ_{l≤k} (left_l + right_l) − Σ_l left_l`; the first kink where it turns
/// nonnegative is returned. With `left = right = w` this is exactly the
/// weighted median. Returns `None` if every slope is zero.
pub fn check_point(kinks: &mut [Kink]) -> Option<f64> {
    let total_left: f64 = kinks.iter().map(|k| k.left).sum();
    if !(kinks.iter().any(|k| k.left + k.right > 0.0)) {
        return None;
    }
    kinks.sort_by(|a, b| a.at.total_cmp(&b.at));
    let mut acc = 0.0;
    for k in kinks.iter() {
        let both = k.left + k.right;
        acc += both;
        if both > 0.0 && acc >= total_left {
            return Some(k.at);
        }
    }
    kinks.iter().rev().find(|k| k.left + k.right > 0.0).map(|k| k.at)
}

/// Exact minimizer over one coordinate; the current value is kept when it
/// is already at least as good.
fn best_coordinate(kinks: &mut [Kink], current: f64, min_gain: f64) -> f64 {
    match check_point(kinks) {
        None => current,
        Some(candidate) => {
            let cost = |v: f64| kinks.iter().map(|k| k.cost(v)).sum::<f64>();
            if candidate == current || cost(current) - cost(candidate) <= min_gain {
                current
            } else {
                candidate
            }
        }
    }
}

/// Kink of `pos·max(e − c·v, 0) + neg·max(c·v − e, 0)` as a function of `v`.
#[inline]
fn kink(e: f64, coef: f64, pos: f64, neg: f64) -> Kink {
    let a = coef.abs();
    // For coef > 0 the residual is positive left of the kink.
    let (left, right) = if coef > 0.0 {
        (pos * a, neg * a)
    } else {
        (neg * a, pos * a)
    };
    Kink {
        at: e / coef,
        left,
        right,
    }
}

/// Optimal `v_ji` with every other entry of `f` fixed, computed from scratch.
///
/// Rows whose weight or `u_li` is zero do not depend on `v_ji` and are left
/// out; if none remain, the current value is returned unchanged.
pub fn update_v_entry(j: usize, i: usize, x: &MaskedMatrix, w: &WeightMatrix, f: &FactorPair) -> f64 {
    let r = f.rank();
    let mut kinks = Vec::with_capacity(x.nrows());
    for l in 0..x.nrows() {
        let wl = w.w[[l, j]];
        let ul = f.u[[l, i]];
        if wl * ul.abs() > 0.0 {
            let mut e = x.values()[[l, j]];
            for k in (0..r).filter(|&k| k != i) {
                e -= f.u[[l, k]] * f.v[[j, k]];
            }
            kinks.push(kink(e, ul, wl, wl));
        }
    }
    best_coordinate(&mut kinks, f.v[[j, i]], 0.0)
}

/// Optimal `u_ji` with every other entry of `f` fixed; mirror of [`update_v_entry`].
pub fn update_u_entry(j: usize, i: usize, x: &MaskedMatrix, w: &WeightMatrix, f: &FactorPair) -> f64 {
    let r = f.rank();
    let mut kinks = Vec::with_capacity(x.ncols());
    for l in 0..x.ncols() {
        let wl = w.w[[j, l]];
        let vl = f.v[[l, i]];
        if wl * vl.abs() > 0.0 {
            let mut e = x.values()[[j, l]];
            for k in (0..r).filter(|&k| k != i) {
                e -= f.u[[j, k]] * f.v[[l, k]];
            }
            kinks.push(kink(e, vl, wl, wl));
        }
    }
    best_coordinate(&mut kinks, f.u[[j, i]], 0.0)
}

/// `Σ_ij w_ij |x_ij − u_i·v_j|`; missing entries carry zero weight.
pub fn wl1_objective(x: &MaskedMatrix, w: &WeightMatrix, f: &FactorPair) -> f64 {
    let mut total = 0.0;
    for ((i, j), &wij) in w.w.indexed_iter() {
        if wij > 0.0 {
            total += wij * (x.values()[[i, j]] - f.entry(i, j)).abs();
        }
    }
    total
}

/// `Σ_ij [pos_ij · max(e_ij, 0) + neg_ij · max(−e_ij, 0)]`.
pub fn check_objective(x: &MaskedMatrix, cw: &CheckWeights, f: &FactorPair) -> f64 {
    let mut total = 0.0;
    for &(i, j) in x.observed() {
        let e = x.values()[[i, j]] - f.entry(i, j);
        total += if e >= 0.0 {
            cw.pos[[i, j]] * e
        } else {
            cw.neg[[i, j]] * (-e)
        };
    }
    total
}

/// Which scalar was just updated, reported to the observer of [`solve_wl1_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coordinate {
    /// `v_ji`: (column j, factor i)
    V(usize, usize),
    /// `u_ji`: (row j, factor i)
    U(usize, usize),
}

#[derive(Debug, Clone)]
pub struct Wl1Outcome {
    pub factors: FactorPair,
    pub sweeps: usize,
    pub objective: f64,
}

pub fn solve_wl1(x: &MaskedMatrix, w: &WeightMatrix, init: FactorPair, opts: &Wl1Options) -> FactorPair {
    solve_wl1_with(x, w, init, opts, |_, _| {}).factors
}

/// [`solve_wl1`] with a callback invoked after every scalar update.
pub fn solve_wl1_with<F>(
    x: &MaskedMatrix,
    w: &WeightMatrix,
    init: FactorPair,
    opts: &Wl1Options,
    observer: F,
) -> Wl1Outcome
where
    F: FnMut(&FactorPair, Coordinate),
{
    cyclic_descent(x, &w.w, &w.w, init, opts, |f| wl1_objective(x, w, f), observer)
}

/// Cyclic coordinate descent on the check-loss objective [`check_objective`].
pub fn solve_check_l1(x: &MaskedMatrix, cw: &CheckWeights, init: FactorPair, opts: &Wl1Options) -> FactorPair {
    solve_check_l1_with(x, cw, init, opts, |_, _| {}).factors
}

pub fn solve_check_l1_with<F>(
    x: &MaskedMatrix,
    cw: &CheckWeights,
    init: FactorPair,
    opts: &Wl1Options,
    observer: F,
) -> Wl1Outcome
where
    F: FnMut(&FactorPair, Coordinate),
{
    cyclic_descent(x, &cw.pos, &cw.neg, init, opts, |f| check_objective(x, cw, f), observer)
}

/// Sweeps all of `V` (factor by factor, column by column), then all of `U`,
/// until a sweep's relative objective decrease drops below tolerance.
/// Moves whose gain is below this fraction of the objective are rounding noise.
const GAIN_RESOLUTION: f64 = 1e-12;

fn cyclic_descent<O, F>(
    x: &MaskedMatrix,
    pos: &Array2<f64>,
    neg: &Array2<f64>,
    init: FactorPair,
    opts: &Wl1Options,
    objective_of: O,
    mut observer: F,
) -> Wl1Outcome
where
    O: Fn(&FactorPair) -> f64,
    F: FnMut(&FactorPair, Coordinate),
{
    let (m, n) = x.values().dim();
    let r = init.rank();
    let mut f = init;
    let xv = x.values();

    let mut resid = Array2::zeros((m, n));
    let mut objective = objective_of(&f);
    let mut kinks: Vec<Kink> = Vec::with_capacity(m.max(n));
    let mut sweeps = 0;

    while sweeps < opts.max_sweeps {
        // Fresh residual each sweep; within the sweep it is updated incrementally.
        resid.assign(xv);
        resid -= &f.u.dot(&f.v.t());
        let min_gain = GAIN_RESOLUTION * objective;

        for i in 0..r {
            for j in 0..n {
                let old = f.v[[j, i]];
                kinks.clear();
                for l in 0..m {
                    let ul = f.u[[l, i]];
                    let (p, q) = (pos[[l, j]], neg[[l, j]]);
                    if (p + q) * ul.abs() > 0.0 {
                        kinks.push(kink(resid[[l, j]] + ul * old, ul, p, q));
                    }
                }
                let new = best_coordinate(&mut kinks, old, min_gain);
                if new != old {
                    let delta = new - old;
                    for l in 0..m {
                        resid[[l, j]] -= f.u[[l, i]] * delta;
                    }
                    f.v[[j, i]] = new;
                }
                observer(&f, Coordinate::V(j, i));
            }
        }
        for i in 0..r {
            for j in 0..m {
                let old = f.u[[j, i]];
                kinks.clear();
                for l in 0..n {
                    let vl = f.v[[l, i]];
                    let (p, q) = (pos[[j, l]], neg[[j, l]]);
                    if (p + q) * vl.abs() > 0.0 {
                        kinks.push(kink(resid[[j, l]] + vl * old, vl, p, q));
                    }
                }
                let new = best_coordinate(&mut kinks, old, min_gain);
                if new != old {
                    let delta = new - old;
                    for l in 0..n {
                        resid[[j, l]] -= f.v[[l, i]] * delta;
                    }
                    f.u[[j, i]] = new;
                }
                observer(&f, Coordinate::U(j, i));
            }
        }
        sweeps += 1;

        let next = objective_of(&f);
        let decrease = objective - next;
        let converged = next == 0.0 || decrease < opts.objective_tolerance * objective;
        objective = next;
        if converged {
            break;
        }
    }

    Wl1Outcome {
        factors: f,
        sweeps,
        objective,
    }
}
