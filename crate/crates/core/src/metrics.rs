//! Reconstruction errors and sample skewness.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::matrix::FactorPair;
use crate::{Error, Result};

/// Average absolute and root-mean-square errors of one reconstruction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorPair {
    pub l1: f64,
    pub l2: f64,
}

fn check(reference: &Array2<f64>, f: &FactorPair) -> Result<()> {
    if reference.nrows() != f.u.nrows() || reference.ncols() != f.v.nrows() {
        return Err(Error::validation(format!(
            "reference is {:?} but factors give {}x{}",
            reference.dim(),
            f.u.nrows(),
            f.v.nrows()
        )));
    }
    Ok(())
}

/// `(1/mn) Σ |x_ij − u_i·v_j|` over every entry.
pub fn l1_error(reference: &Array2<f64>, f: &FactorPair) -> Result<f64> {
    check(reference, f)?;
    let p = f.product();
    let total: f64 = reference.iter().zip(p.iter()).map(|(x, y)| (x - y).abs()).sum();
    Ok(total / reference.len() as f64)
}

/// `sqrt((1/mn) Σ (x_ij − u_i·v_j)²)` over every entry.
pub fn l2_error(reference: &Array2<f64>, f: &FactorPair) -> Result<f64> {
    check(reference, f)?;
    let p = f.product();
    let total: f64 = reference.iter().zip(p.iter()).map(|(x, y)| (x - y).powi(2)).sum();
    Ok((total / reference.len() as f64).sqrt())
}

pub fn errors(reference: &Array2<f64>, f: &FactorPair) -> Result<ErrorPair> {
    Ok(ErrorPair {
        l1: l1_error(reference, f)?,
        l2: l2_error(reference, f)?,
    })
}

/// Population skewness `m₃ / m₂^{3/2}` with moments about the sample mean.
pub fn sample_skewness(xs: &[f64]) -> Result<f64> {
    if xs.len() < 3 {
        return Err(Error::UndefinedStatistic(format!(
            "skewness needs at least 3 values, got {}",
            xs.len()
        )));
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let (mut m2, mut m3) = (0.0, 0.0);
    for &x in xs {
        let d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= n;
    m3 /= n;
    if !(m2 > 0.0) {
        return Err(Error::UndefinedStatistic("sample has zero variance".into()));
    }
    Ok(m3 / m2.powf(1.5))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;
    use ndarray::array;
    use rand::Rng;

    #[test]
    fn exact_and_constant_offsets() {
        let f = FactorPair::new(array![[1.0], [2.0]], array![[3.0], [-1.0]]).unwrap();
        let x = f.product();
        assert_eq!(l1_error(&x, &f).unwrap(), 0.0);
        assert_eq!(l2_error(&x, &f).unwrap(), 0.0);
        let shifted = &x - 0.75;
        assert!((l1_error(&shifted, &f).unwrap() - 0.75).abs() < 1e-15);
        assert!((l2_error(&shifted, &f).unwrap() - 0.75).abs() < 1e-15);
        assert!(l1_error(&array![[1.0]], &f).is_err());
    }

    #[test]
    fn l2_dominates_l1_and_matches_direct_sum() {
        let mut rng = seeded_rng(12);
        for _ in 0..100 {
            let x = Array2::from_shape_simple_fn((5, 4), || rng.random_range(-4.0..4.0));
            let f = FactorPair::new(
                Array2::from_shape_simple_fn((5, 2), || rng.random_range(-1.0..1.0)),
                Array2::from_shape_simple_fn((4, 2), || rng.random_range(-1.0..1.0)),
            )
            .unwrap();
            let e = errors(&x, &f).unwrap();
            assert!(e.l2 >= e.l1 - 1e-15);
            let mut direct = 0.0;
            for i in 0..5 {
                for j in 0..4 {
                    let p = f.u[[i, 0]] * f.v[[j, 0]] + f.u[[i, 1]] * f.v[[j, 1]];
                    direct += (x[[i, j]] - p).abs();
                }
            }
            assert!((e.l1 - direct / 20.0).abs() < 1e-12);
        }
    }

    #[test]
    fn skewness_cases() {
        assert_eq!(sample_skewness(&[-1.0, 0.0, 1.0]).unwrap(), 0.0);
        assert!(sample_skewness(&[2.0, 2.0, 2.0, 2.0]).is_err());
        assert!(sample_skewness(&[1.0, 2.0]).is_err());
        let xs = [0.0, 0.0, 0.0, 1.0, 5.0];
        let s = sample_skewness(&xs).unwrap();
        assert!(s > 0.0);
        let shifted: Vec<f64> = xs.iter().map(|x| x + 100.0).collect();
        assert!((sample_skewness(&shifted).unwrap() - s).abs() < 1e-9);
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        assert!((sample_skewness(&neg).unwrap() + s).abs() < 1e-12);
    }
}
