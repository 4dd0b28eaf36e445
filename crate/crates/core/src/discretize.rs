//! Truncated, absorbing-layer discretization of `P(h) = -h^2 d^2/dx^2 + V`.
//!
//! The operator is represented as a complex-symmetric tridiagonal matrix on a
//! uniform grid with homogeneous Dirichlet conditions outside, plus a
//! polynomial-ramp complex absorbing potential (CAP) on both ends.  The CAP is
//! the numerical surrogate for the outgoing `(z - i0)` limit.

use num_complex::Complex64;

use crate::error::{CoreError, Result};

/// Uniform 1D grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if !(x_min < x_max) {
            return Err(CoreError::Domain(format!(
                "grid bounds out of order: [{x_min}, {x_max}]"
            )));
        }
        if n < 16 {
            return Err(CoreError::Domain(format!("grid too small: n = {n} < 16")));
        }
        Ok(Grid { x_min, x_max, n })
    }

    /// Grid spacing.
    pub fn delta(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.delta()
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.x(i))
    }

    /// Nearest grid index to `x`, clamped.
    pub fn index_of(&self, x: f64) -> usize {
        let i = ((x - self.x_min) / self.delta()).round();
        (i.max(0.0) as usize).min(self.n - 1)
    }
}

/// Resolution rule: at least `points_per_wavelength` grid points per local
/// de Broglie wavelength at energy `z` over a potential with minimum `v_min`.
pub fn resolution_delta(h: f64, z: f64, v_min: f64) -> f64 {
    h / (20.0 * (z - v_min).max(1.0).sqrt())
}

/// Build a grid over `[-l, l]` obeying the resolution rule for `(h, z)`.
pub fn auto_grid(l: f64, h: f64, z: f64, v_min: f64) -> Result<Grid> {
    let delta = resolution_delta(h, z, v_min);
    let n = ((2.0 * l / delta).ceil() as usize + 1).max(16);
    if n > 8_000_000 {
        return Err(CoreError::Domain(format!(
            "auto grid would need n = {n} points; h too small or domain too wide"
        )));
    }
    Grid::new(-l, l, n)
}

/// Absorbing-layer profile.  `W(x) = strength * ramp^ramp_power` where the
/// ramp grows linearly from 0 at the layer edge to 1 at the domain boundary.
#[derive(Debug, Clone, Copy)]
pub struct CapProfile {
    pub strength: f64,
    pub width_fraction: f64,
    pub ramp_power: u32,
}

impl Default for CapProfile {
    fn default() -> Self {
        CapProfile {
            strength: 1.0,
            width_fraction: 0.15,
            ramp_power: 3,
        }
    }
}

impl CapProfile {
    pub fn validate(&self) -> Result<()> {
        if self.strength < 0.0 {
            return Err(CoreError::Config("CAP strength must be >= 0".into()));
        }
        if !(self.width_fraction > 0.0 && self.width_fraction < 0.4) {
            return Err(CoreError::Config(format!(
                "CAP width_fraction {} outside (0, 0.4)",
                self.width_fraction
            )));
        }
        if self.ramp_power < 2 {
            return Err(CoreError::Config("CAP ramp_power must be >= 2".into()));
        }
        Ok(())
    }

    /// Sampled absorbing potential `W >= 0`, identically 0 on the interior window.
    pub fn values(&self, grid: &Grid) -> Vec<f64> {
        let width = self.width_fraction * (grid.x_max - grid.x_min);
        let left_edge = grid.x_min + width;
        let right_edge = grid.x_max - width;
        grid.points()
            .map(|x| {
                let t = if x < left_edge {
                    (left_edge - x) / width
                } else if x > right_edge {
                    (x - right_edge) / width
                } else {
                    0.0
                };
                self.strength * t.powi(self.ramp_power as i32)
            })
            .collect()
    }

    /// `x`-extent of the CAP-free interior window.
    pub fn interior_window(&self, grid: &Grid) -> (f64, f64) {
        let width = self.width_fraction * (grid.x_max - grid.x_min);
        (grid.x_min + width, grid.x_max - width)
    }
}

/// Complex-symmetric tridiagonal representation of `P(h) - iW`.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub h: f64,
    pub diag: Vec<Complex64>,
    pub offdiag: Vec<Complex64>,
    pub grid: Grid,
}

/// Second-order central-difference discretization with a CAP on both ends.
pub fn build_operator(
    v: &[f64],
    h: f64,
    grid: &Grid,
    cap: &CapProfile,
) -> Result<DiscreteOperator> {
    if v.len() != grid.n {
        return Err(CoreError::SizeMismatch {
            expected: grid.n,
            got: v.len(),
        });
    }
    if h <= 0.0 {
        return Err(CoreError::Domain(format!("h must be positive, got {h}")));
    }
    cap.validate()?;
    let delta = grid.delta();
    let k = h * h / (delta * delta);
    let w = cap.values(grid);
    let diag = v
        .iter()
        .zip(w.iter())
        .map(|(&vi, &wi)| Complex64::new(2.0 * k + vi, -wi))
        .collect();
    let offdiag = vec![Complex64::new(-k, 0.0); grid.n - 1];
    Ok(DiscreteOperator {
        h,
        diag,
        offdiag,
        grid: *grid,
    })
}

impl DiscreteOperator {
    /// `(self - z) u` for a symmetric tridiagonal matrix.
    pub fn apply_shifted(&self, z: Complex64, u: &[Complex64]) -> Vec<Complex64> {
        let n = self.diag.len();
        let mut out = vec![Complex64::ZERO; n];
        for i in 0..n {
            let mut acc = (self.diag[i] - z) * u[i];
            if i > 0 {
                acc += self.offdiag[i - 1] * u[i - 1];
            }
            if i + 1 < n {
                acc += self.offdiag[i] * u[i + 1];
            }
            out[i] = acc;
        }
        out
    }
}

/// LU factorization (with partial pivoting) of a shifted tridiagonal matrix.
/// Row swaps introduce a second superdiagonal.
pub struct TriFactor {
    n: usize,
    low: Vec<Complex64>,
    diag: Vec<Complex64>,
    up1: Vec<Complex64>,
    up2: Vec<Complex64>,
    swapped: Vec<bool>,
}

impl TriFactor {
    pub fn new(op: &DiscreteOperator, z: Complex64) -> Result<Self> {
        Self::factor(&op.diag, &op.offdiag, z)
    }

    pub fn factor(diag: &[Complex64], offdiag: &[Complex64], z: Complex64) -> Result<Self> {
        let n = diag.len();
        assert_eq!(offdiag.len(), n - 1);
        let mut d: Vec<Complex64> = diag.iter().map(|&a| a - z).collect();
        let mut u1: Vec<Complex64> = offdiag.to_vec();
        let mut l: Vec<Complex64> = offdiag.to_vec();
        let mut u2 = vec![Complex64::ZERO; n.saturating_sub(2)];
        let mut low = vec![Complex64::ZERO; n - 1];
        let mut swapped = vec![false; n - 1];

        let scale = diag
            .iter()
            .map(|c| c.norm())
            .fold(0.0f64, f64::max)
            .max(offdiag.iter().map(|c| c.norm()).fold(0.0f64, f64::max))
            .max(z.norm());
        let pivot_floor = 1e-30 * scale.max(1.0);

        for i in 0..n - 1 {
            if l[i].norm() > d[i].norm() {
                // swap rows i and i+1
                swapped[i] = true;
                std::mem::swap(&mut d[i], &mut l[i]);
                let next_d = d[i + 1];
                d[i + 1] = u1[i];
                u1[i] = next_d;
                if i + 2 < n {
                    u2[i] = u1[i + 1];
                    u1[i + 1] = Complex64::ZERO;
                }
            }
            if d[i].norm() < pivot_floor {
                return Err(CoreError::NearSingular {
                    pivot: d[i].norm(),
                    row: i,
                });
            }
            let m = l[i] / d[i];
            low[i] = m;
            d[i + 1] -= m * u1[i];
            if i + 2 < n {
                u1[i + 1] -= m * u2[i];
            }
        }
        if d[n - 1].norm() < pivot_floor {
            return Err(CoreError::NearSingular {
                pivot: d[n - 1].norm(),
                row: n - 1,
            });
        }
        Ok(TriFactor {
            n,
            low,
            diag: d,
            up1: u1,
            up2: u2,
            swapped,
        })
    }

    pub fn solve(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(rhs.len(), self.n);
        let n = self.n;
        let mut b = rhs.to_vec();
        for i in 0..n - 1 {
            if self.swapped[i] {
                b.swap(i, i + 1);
            }
            let bi = b[i];
            b[i + 1] -= self.low[i] * bi;
        }
        b[n - 1] /= self.diag[n - 1];
        if n >= 2 {
            b[n - 2] = (b[n - 2] - self.up1[n - 2] * b[n - 1]) / self.diag[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            let mut acc = b[i] - self.up1[i] * b[i + 1];
            acc -= self.up2[i] * b[i + 2];
            b[i] = acc / self.diag[i];
        }
        b
    }
}

/// Solve `(op - z I) u = rhs` to relative residual `<= 1e-10`, with one
/// refinement pass if the first solution misses the target.
pub fn solve(op: &DiscreteOperator, z: Complex64, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
    if rhs.len() != op.diag.len() {
        return Err(CoreError::SizeMismatch {
            expected: op.diag.len(),
            got: rhs.len(),
        });
    }
    let factor = TriFactor::new(op, z)?;
    let mut u = factor.solve(rhs);
    let rhs_norm = l2(rhs);
    if rhs_norm == 0.0 {
        return Ok(u);
    }
    let mut residual = sub(rhs, &op.apply_shifted(z, &u));
    if l2(&residual) / rhs_norm > 1e-10 {
        let correction = factor.solve(&residual);
        for (ui, ci) in u.iter_mut().zip(correction.iter()) {
            *ui += ci;
        }
        residual = sub(rhs, &op.apply_shifted(z, &u));
        let _ = residual;
    }
    Ok(u)
}

fn l2(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

fn sub(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().zip(b.iter()).map(|(&x, &y)| x - y).collect()
}

// ---------------------------------------------------------------------------
// Self-adjoint eigensolver (Sturm bisection + inverse iteration)
// ---------------------------------------------------------------------------

/// Count eigenvalues of the real symmetric tridiagonal matrix strictly below
/// `lambda`, via the number of negative Sturm-sequence pivots.
pub fn sturm_count(diag: &[f64], offdiag: &[f64], lambda: f64) -> usize {
    let n = diag.len();
    let mut count = 0;
    let mut q = diag[0] - lambda;
    if q < 0.0 {
        count += 1;
    }
    let guard = 1e-300;
    for i in 1..n {
        let q_safe = if q.abs() < guard {
            if q >= 0.0 {
                guard
            } else {
                -guard
            }
        } else {
            q
        };
        q = (diag[i] - lambda) - offdiag[i - 1] * offdiag[i - 1] / q_safe;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn bisect_kth(diag: &[f64], offdiag: &[f64], k: usize, mut lo: f64, mut hi: f64) -> f64 {
    // eigenvalue with index k (0-based, ascending), known to lie in (lo, hi]
    while hi - lo > 1e-14 * hi.abs().max(lo.abs()).max(1.0) {
        let mid = 0.5 * (lo + hi);
        if sturm_count(diag, offdiag, mid) <= k {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Solve the real tridiagonal system `(T - shift) u = rhs` with partial
/// pivoting, substituting tiny pivots (inverse-iteration use).
fn real_shifted_solve(diag: &[f64], offdiag: &[f64], shift: f64, rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut d: Vec<f64> = diag.iter().map(|&a| a - shift).collect();
    let mut u1: Vec<f64> = offdiag.to_vec();
    let mut l: Vec<f64> = offdiag.to_vec();
    let mut u2 = vec![0.0; n.saturating_sub(2)];
    let mut b = rhs.to_vec();
    let scale = diag.iter().fold(0.0f64, |m, &a| m.max(a.abs())).max(1.0);
    let floor = 1e-280 * scale;
    for i in 0..n - 1 {
        if l[i].abs() > d[i].abs() {
            std::mem::swap(&mut d[i], &mut l[i]);
            let next_d = d[i + 1];
            d[i + 1] = u1[i];
            u1[i] = next_d;
            if i + 2 < n {
                u2[i] = u1[i + 1];
                u1[i + 1] = 0.0;
            }
            b.swap(i, i + 1);
        }
        if d[i].abs() < floor {
            d[i] = if d[i] >= 0.0 { floor } else { -floor };
        }
        let m = l[i] / d[i];
        d[i + 1] -= m * u1[i];
        if i + 2 < n {
            u1[i + 1] -= m * u2[i];
        }
        b[i + 1] -= m * b[i];
    }
    if d[n - 1].abs() < floor {
        d[n - 1] = if d[n - 1] >= 0.0 { floor } else { -floor };
    }
    b[n - 1] /= d[n - 1];
    if n >= 2 {
        b[n - 2] = (b[n - 2] - u1[n - 2] * b[n - 1]) / d[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        b[i] = (b[i] - u1[i] * b[i + 1] - u2[i] * b[i + 2]) / d[i];
    }
    b
}

/// All eigenpairs of `-h^2 d^2/dx^2 + V` (Dirichlet, no CAP) with eigenvalue
/// in `[e_lo, e_hi]`.  Eigenvectors are L2-normalized on the grid and each
/// satisfies a relative residual `<= 1e-10`.
pub fn eigen_window(
    v: &[f64],
    h: f64,
    grid: &Grid,
    e_lo: f64,
    e_hi: f64,
) -> Result<Vec<(f64, Vec<f64>)>> {
    if v.len() != grid.n {
        return Err(CoreError::SizeMismatch {
            expected: grid.n,
            got: v.len(),
        });
    }
    let delta = grid.delta();
    let k = h * h / (delta * delta);
    let diag: Vec<f64> = v.iter().map(|&vi| 2.0 * k + vi).collect();
    let offdiag = vec![-k; grid.n - 1];

    let n_lo = sturm_count(&diag, &offdiag, e_lo);
    let n_hi = sturm_count(&diag, &offdiag, e_hi + 1e-14 * e_hi.abs().max(1.0));
    let mut out = Vec::with_capacity(n_hi.saturating_sub(n_lo));
    let t_scale = diag.iter().fold(0.0f64, |m, &a| m.max(a.abs())) + 2.0 * k;
    for idx in n_lo..n_hi {
        let e = bisect_kth(&diag, &offdiag, idx, e_lo, e_hi);
        // inverse iteration at a slightly perturbed shift
        let shift = e + 1e-11 * t_scale;
        let mut vec: Vec<f64> = (0..grid.n)
            .map(|i| ((i * 2654435761 + idx * 40503) % 1000) as f64 / 1000.0 - 0.5)
            .collect();
        normalize(&mut vec);
        for _ in 0..6 {
            vec = real_shifted_solve(&diag, &offdiag, shift, &vec);
            normalize(&mut vec);
            let res = residual_norm(&diag, &offdiag, e, &vec);
            if res / t_scale <= 1e-11 {
                break;
            }
        }
        // Rayleigh quotient touch-up of the eigenvalue
        let e_rq = rayleigh(&diag, &offdiag, &vec);
        if e_rq >= e_lo && e_rq <= e_hi {
            out.push((e_rq, vec));
        } else {
            out.push((e, vec));
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(out)
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
}

fn residual_norm(diag: &[f64], offdiag: &[f64], e: f64, v: &[f64]) -> f64 {
    let n = diag.len();
    let mut acc = 0.0;
    for i in 0..n {
        let mut r = (diag[i] - e) * v[i];
        if i > 0 {
            r += offdiag[i - 1] * v[i - 1];
        }
        if i + 1 < n {
            r += offdiag[i] * v[i + 1];
        }
        acc += r * r;
    }
    acc.sqrt()
}

fn rayleigh(diag: &[f64], offdiag: &[f64], v: &[f64]) -> f64 {
    let n = diag.len();
    let mut acc = 0.0;
    for i in 0..n {
        let mut tv = diag[i] * v[i];
        if i > 0 {
            tv += offdiag[i - 1] * v[i - 1];
        }
        if i + 1 < n {
            tv += offdiag[i] * v[i + 1];
        }
        acc += v[i] * tv;
    }
    acc
}

/// Apply the Dirichlet operator `-h^2 d^2/dx^2 + V - e` to a real vector.
pub fn apply_real(v: &[f64], h: f64, grid: &Grid, e: f64, u: &[f64]) -> Vec<f64> {
    let delta = grid.delta();
    let k = h * h / (delta * delta);
    let n = grid.n;
    let mut out = vec![0.0; n];
    for i in 0..n {
        let mut acc = (2.0 * k + v[i] - e) * u[i];
        if i > 0 {
            acc -= k * u[i - 1];
        }
        if i + 1 < n {
            acc -= k * u[i + 1];
        }
        out[i] = acc;
    }
    out
}
