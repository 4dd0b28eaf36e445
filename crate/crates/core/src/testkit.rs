//! Slow, independent reference computations used to validate the fast paths.
//! Everything here is dense and O(n^3); keep n small.

use num_complex::Complex64;

use crate::discretize::{DiscreteOperator, TriFactor};
use crate::error::Result;
use crate::probe::CutoffSpec;

/// Dense `M = chi (op - z)^{-1} chi`, column by column.
pub fn dense_cutoff_resolvent(
    op: &DiscreteOperator,
    z: f64,
    chi: &CutoffSpec,
) -> Result<Vec<Vec<Complex64>>> {
    let n = op.grid.n;
    let chi_vec = chi.sample(&op.grid);
    let factor = TriFactor::new(op, Complex64::new(z, 0.0))?;
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = vec![Complex64::ZERO; n];
        e[j] = Complex64::new(chi_vec[j], 0.0);
        let mut col = factor.solve(&e);
        for (c, &w) in col.iter_mut().zip(chi_vec.iter()) {
            *c *= w;
        }
        cols.push(col);
    }
    Ok(cols)
}

/// Largest singular value of `M` (given by columns) via the largest
/// eigenvalue of the Hermitian `M^H M`, computed with cyclic Jacobi on its
/// real symmetric embedding.  Entirely independent of the power iteration.
pub fn dense_sigma_max(cols: &[Vec<Complex64>]) -> f64 {
    let n = cols.len();
    // H = M^H M, Hermitian
    let mut hre = vec![vec![0.0f64; n]; n];
    let mut him = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = Complex64::ZERO;
            for k in 0..n {
                acc += cols[i][k].conj() * cols[j][k];
            }
            hre[i][j] = acc.re;
            him[i][j] = acc.im;
        }
    }
    // real symmetric embedding [[Re, -Im], [Im, Re]]; eigenvalues of H doubled
    let m = 2 * n;
    let mut a = vec![vec![0.0f64; m]; m];
    for i in 0..n {
        for j in 0..n {
            a[i][j] = hre[i][j];
            a[i][j + n] = -him[i][j];
            a[i + n][j] = him[i][j];
            a[i + n][j + n] = hre[i][j];
        }
    }
    jacobi_max_eigenvalue(&mut a).max(0.0).sqrt()
}

/// Largest eigenvalue of a real symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_max_eigenvalue(a: &mut [Vec<f64>]) -> f64 {
    let n = a.len();
    let off = |a: &[Vec<f64>]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[i][j] * a[i][j];
                }
            }
        }
        s.sqrt()
    };
    let scale = (0..n).map(|i| a[i][i].abs()).fold(1e-300, f64::max);
    for _sweep in 0..60 {
        if off(a) <= 1e-13 * scale * n as f64 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).fold(f64::NEG_INFINITY, f64::max)
}
