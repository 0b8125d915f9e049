//! Dirichlet heat semigroup on the unit interval in its sine eigenbasis.
//!
//! The grid is x_j = j/(n+1), j = 1..n, and the number of retained modes
//! equals the number of interior nodes, so the discrete sine transform is a
//! bijection: with quadrature weight h = 1/(n+1) the sampled eigenfunctions
//! e_k(x) = sqrt(2) sin(k pi x) are exactly orthonormal in the h-weighted
//! inner product. Fields therefore carry grid values and spectral
//! coefficients simultaneously and all norms can be read from either side.

use crate::error::{Error, Result};

/// Relative slack when deciding whether a time lies on the step grid.
const GRID_TIME_REL_TOL: f64 = 1e-9;

/// The negative Dirichlet Laplacian (plus an optional nonnegative shift)
/// diagonalized over the interior grid of (0, 1).
#[derive(Debug, Clone)]
pub struct SpectralOperator {
    n: usize,
    shift: f64,
    /// mu_k = (k pi)^2 + shift, index 0 holds k = 1
    eigenvalues: Vec<f64>,
    /// basis[k][j] = sqrt(2) sin((k+1) pi x_j); symmetric in k, j
    basis: Vec<f64>,
    h: f64,
}

impl SpectralOperator {
    pub fn new(n: usize) -> Result<Self> {
        Self::with_shift(n, 0.0)
    }

    /// `shift >= 0` is added to every eigenvalue, keeping the semigroup a
    /// contraction.
    pub fn with_shift(n: usize, shift: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::config("operator needs at least one grid node"));
        }
        if !shift.is_finite() || shift < 0.0 {
            return Err(Error::config(format!(
                "eigenvalue shift must be >= 0, got {shift}"
            )));
        }
        let h = 1.0 / (n as f64 + 1.0);
        let pi = std::f64::consts::PI;
        let eigenvalues = (1..=n).map(|k| (k as f64 * pi).powi(2) + shift).collect();
        let mut basis = vec![0.0; n * n];
        let sqrt2 = std::f64::consts::SQRT_2;
        for k in 0..n {
            for j in 0..n {
                basis[k * n + j] = sqrt2 * ((k as f64 + 1.0) * pi * (j as f64 + 1.0) * h).sin();
            }
        }
        Ok(SpectralOperator {
            n,
            shift,
            eigenvalues,
            basis,
            h,
        })
    }

    /// Number of interior grid nodes (= number of retained modes).
    pub fn grid_size(&self) -> usize {
        self.n
    }

    pub fn modes(&self) -> usize {
        self.n
    }

    /// Grid spacing h = 1/(n+1), also the quadrature weight.
    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// mu_k for k = 1..=modes().
    pub fn eigenvalue(&self, k: usize) -> f64 {
        self.eigenvalues[k - 1]
    }

    /// Interior nodes x_j = j/(n+1).
    pub fn nodes(&self) -> Vec<f64> {
        (1..=self.n).map(|j| j as f64 * self.h).collect()
    }

    /// Sampled eigenfunction e_k as a field (unit h-weighted L2 norm).
    pub fn eigenfunction(&self, k: usize) -> Result<Field> {
        if k == 0 || k > self.n {
            return Err(Error::config(format!(
                "eigenfunction index {k} outside 1..={}",
                self.n
            )));
        }
        let values = self.basis[(k - 1) * self.n..k * self.n].to_vec();
        Ok(self.field_from_values(values))
    }

    /// Forward transform: u_hat_k = h * sum_j u_j e_k(x_j).
    fn analyze(&self, values: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut coeffs = vec![0.0; n];
        for (k, c) in coeffs.iter_mut().enumerate() {
            let row = &self.basis[k * n..(k + 1) * n];
            let acc: f64 = row.iter().zip(values).map(|(b, v)| b * v).sum();
            *c = self.h * acc;
        }
        coeffs
    }

    /// Inverse transform: u_j = sum_k u_hat_k e_k(x_j).
    fn synthesize(&self, coeffs: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut values = vec![0.0; n];
        for (k, &c) in coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let row = &self.basis[k * n..(k + 1) * n];
            for (value, b) in values.iter_mut().zip(row) {
                *value += c * b;
            }
        }
        values
    }

    pub fn field_from_values(&self, values: Vec<f64>) -> Field {
        assert_eq!(values.len(), self.n, "value vector does not match the grid");
        let coeffs = self.analyze(&values);
        Field {
            values,
            coeffs,
            h: self.h,
        }
    }

    pub fn field_from_coeffs(&self, coeffs: Vec<f64>) -> Field {
        assert_eq!(
            coeffs.len(),
            self.n,
            "coefficient vector does not match the grid"
        );
        let values = self.synthesize(&coeffs);
        Field {
            values,
            coeffs,
            h: self.h,
        }
    }

    pub fn zero_field(&self) -> Field {
        Field {
            values: vec![0.0; self.n],
            coeffs: vec![0.0; self.n],
            h: self.h,
        }
    }

    /// Constant-one grid function.
    pub fn one_field(&self) -> Field {
        self.field_from_values(vec![1.0; self.n])
    }

    /// e^{-tA} u by multiplying each coefficient with e^{-mu_k t}.
    pub fn apply_semigroup(&self, t: f64, u: &Field) -> Result<Field> {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::config(format!(
                "semigroup time must be >= 0, got {t}"
            )));
        }
        self.check_compatible(u)?;
        let coeffs = u
            .coeffs
            .iter()
            .zip(&self.eigenvalues)
            .map(|(c, mu)| c * (-mu * t).exp())
            .collect();
        Ok(self.field_from_coeffs(coeffs))
    }

    /// Deterministic convolution (S * phi)(t) for a forcing given at the
    /// grid times t_m = m dt and frozen on each step [t_m, t_{m+1}).
    ///
    /// Per mode the step integral of e^{-mu (t - s)} is exact:
    /// w_{k,m} = e^{-mu_k (t - t_{m+1})} (1 - e^{-mu_k dt}) / mu_k,
    /// degenerating to dt when mu_k = 0.
    ///
    /// `t` must lie on the step grid and `phi` must cover [0, t).
    pub fn convolve(&self, phi: &[Field], dt: f64, t: f64) -> Result<Field> {
        if !dt.is_finite() || dt <= 0.0 {
            return Err(Error::config(format!("step size must be > 0, got {dt}")));
        }
        let steps = grid_index(t, dt)?;
        if phi.len() < steps {
            return Err(Error::config(format!(
                "forcing covers {} steps, convolution needs {steps}",
                phi.len()
            )));
        }
        for f in &phi[..steps] {
            self.check_compatible(f)?;
        }
        let mut coeffs = vec![0.0; self.n];
        for (k, c) in coeffs.iter_mut().enumerate() {
            let mu = self.eigenvalues[k];
            let decay = (-mu * dt).exp();
            let weight = if mu == 0.0 { dt } else { (1.0 - decay) / mu };
            // accumulate from the most recent step backwards so the decay
            // factor is a running product, no exp in the inner loop
            let mut damp = 1.0;
            let mut acc = 0.0;
            for m in (0..steps).rev() {
                acc += phi[m].coeffs[k] * damp;
                damp *= decay;
            }
            *c = acc * weight;
        }
        Ok(self.field_from_coeffs(coeffs))
    }

    /// Largest L1 oscillation of a grid trajectory over time gaps <= delta.
    ///
    /// `delta` must be at least one step.
    pub fn equicontinuity_modulus(traj: &[Field], dt: f64, delta: f64) -> Result<f64> {
        if !dt.is_finite() || dt <= 0.0 {
            return Err(Error::config(format!("step size must be > 0, got {dt}")));
        }
        // NaN windows must fail too, hence the explicit check
        if delta.is_nan() || delta < dt {
            return Err(Error::config(format!(
                "window {delta} is below the step size {dt}"
            )));
        }
        let max_gap = (delta / dt * (1.0 + GRID_TIME_REL_TOL)).floor() as usize;
        let mut worst = 0.0f64;
        for i in 0..traj.len() {
            let top = (i + max_gap).min(traj.len() - 1);
            for j in (i + 1)..=top {
                let d = traj[i].sub(&traj[j]).norm_l1();
                worst = worst.max(d);
            }
        }
        Ok(worst)
    }

    fn check_compatible(&self, f: &Field) -> Result<()> {
        if f.values.len() != self.n {
            return Err(Error::config(format!(
                "field has {} nodes, operator grid has {}",
                f.values.len(),
                self.n
            )));
        }
        Ok(())
    }
}

/// Index of t on the grid {m dt}, rejecting off-grid times.
pub fn grid_index(t: f64, dt: f64) -> Result<usize> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::config(format!("time must be >= 0, got {t}")));
    }
    let m = (t / dt).round();
    if (t - m * dt).abs() > GRID_TIME_REL_TOL * dt.max(t) {
        return Err(Error::config(format!(
            "time {t} does not lie on the grid with step {dt}"
        )));
    }
    Ok(m as usize)
}

/// A grid function together with its sine coefficients.
///
/// Immutable by design: arithmetic returns fresh fields, keeping the two
/// representations consistent (the transform pair is exactly unitary up to
/// rounding, so both are maintained directly).
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    values: Vec<f64>,
    coeffs: Vec<f64>,
    h: f64,
}

impl Field {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// h-weighted L2 norm; by Parseval equal to the coefficient norm.
    pub fn norm_l2(&self) -> f64 {
        (self.h * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    /// h-weighted L1 norm.
    pub fn norm_l1(&self) -> f64 {
        self.h * self.values.iter().map(|v| v.abs()).sum::<f64>()
    }

    pub fn norm_max(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// h-weighted L2 inner product.
    pub fn inner(&self, other: &Field) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        self.h
            * self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .sum::<f64>()
    }

    pub fn add(&self, other: &Field) -> Field {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Field {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Field {
        Field {
            values: self.values.iter().map(|v| v * s).collect(),
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
            h: self.h,
        }
    }

    fn zip_with(&self, other: &Field, op: impl Fn(f64, f64) -> f64) -> Field {
        assert_eq!(self.len(), other.len(), "field sizes differ");
        Field {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| op(*a, *b))
                .collect(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| op(*a, *b))
                .collect(),
            h: self.h,
        }
    }
}
