//! The doubly periodic square `[0, L)^2` and its spectral operators.
//!
//! Fields are stored as [`Field`] values of shape `(n, n)` with index
//! `i * n + j` for node `(x_i, z_j) = (i h, j h)`. Spectra use the same
//! layout, `a * n + b` for x wavenumber index `a` and z index `b`.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{Field, FieldKind, L2Space};

#[derive(Clone)]
pub struct PeriodicGrid {
    n: usize,
    l: f64,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for PeriodicGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PeriodicGrid").field("n", &self.n).field("l", &self.l).finish()
    }
}

impl PartialEq for PeriodicGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.l == other.l
    }
}

impl PeriodicGrid {
    pub fn new(n: usize, l: f64) -> Result<Self> {
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::Domain(format!("n must be even and >= 8, got {n}")));
        }
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::Domain(format!("side length must be positive, got {l}")));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            n,
            l,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        })
    }

    /// Square of side `2 pi`.
    pub fn standard(n: usize) -> Result<Self> {
        Self::new(n, 2.0 * std::f64::consts::PI)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn side(&self) -> f64 {
        self.l
    }

    pub fn h(&self) -> f64 {
        self.l / self.n as f64
    }

    pub fn area(&self) -> f64 {
        self.l * self.l
    }

    pub fn zeros(&self) -> Field {
        Field::zeros_with_shape(self.n, self.n, FieldKind::None)
    }

    pub fn field_from_fn(&self, mut f: impl FnMut(f64, f64) -> f64) -> Field {
        let h = self.h();
        let mut values = Vec::with_capacity(self.n * self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                values.push(f(i as f64 * h, j as f64 * h));
            }
        }
        Field::zeros_with_shape(self.n, self.n, FieldKind::None).with_values_unchecked(values)
    }

    pub fn check(&self, f: &Field) -> Result<()> {
        if f.shape() != (self.n, self.n) {
            return Err(Error::Shape {
                expected: (self.n, self.n),
                found: f.shape(),
            });
        }
        Ok(())
    }

    /// Signed integer wavenumber of index `a`; the Nyquist index maps to `+n/2`.
    pub fn signed_mode(&self, a: usize) -> i64 {
        if a <= self.n / 2 {
            a as i64
        } else {
            a as i64 - self.n as i64
        }
    }

    pub fn wavenumber(&self, a: usize) -> f64 {
        2.0 * std::f64::consts::PI * self.signed_mode(a) as f64 / self.l
    }

    /// Wavenumber used for first derivatives: zero on the Nyquist index.
    pub fn derivative_wavenumber(&self, a: usize) -> f64 {
        if a == self.n / 2 {
            0.0
        } else {
            self.wavenumber(a)
        }
    }

    pub fn k_squared(&self, a: usize, b: usize) -> f64 {
        let kx = self.wavenumber(a);
        let kz = self.wavenumber(b);
        kx * kx + kz * kz
    }

    pub fn forward(&self, f: &Field) -> Result<Vec<Complex64>> {
        self.check(f)?;
        let n = self.n;
        let mut buf: Vec<Complex64> = f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.fwd.get_inplace_scratch_len()];
        // rows (z direction, contiguous)
        self.fwd.process_with_scratch(&mut buf, &mut scratch);
        // columns (x direction)
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for b in 0..n {
            for a in 0..n {
                col[a] = buf[a * n + b];
            }
            self.fwd.process_with_scratch(&mut col, &mut scratch);
            for a in 0..n {
                buf[a * n + b] = col[a];
            }
        }
        Ok(buf)
    }

    /// Inverse transform, keeping the real part.
    pub fn inverse(&self, mut spec: Vec<Complex64>) -> Field {
        let n = self.n;
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.inv.get_inplace_scratch_len()];
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for b in 0..n {
            for a in 0..n {
                col[a] = spec[a * n + b];
            }
            self.inv.process_with_scratch(&mut col, &mut scratch);
            for a in 0..n {
                spec[a * n + b] = col[a];
            }
        }
        self.inv.process_with_scratch(&mut spec, &mut scratch);
        let scale = 1.0 / (n * n) as f64;
        let values = spec.iter().map(|c| c.re * scale).collect();
        self.zeros().with_values_unchecked(values)
    }

    pub fn quadrature(&self, f: &Field) -> Result<f64> {
        self.check(f)?;
        let h = self.h();
        Ok(f.values.iter().sum::<f64>() * h * h)
    }

    pub fn mean(&self, f: &Field) -> Result<f64> {
        Ok(self.quadrature(f)? / self.area())
    }

    pub fn subtract_mean(&self, f: &Field) -> Result<Field> {
        let m = self.mean(f)?;
        Ok(f.map(|v| v - m))
    }

    pub fn l2_inner(&self, f: &Field, g: &Field) -> Result<f64> {
        self.check(f)?;
        self.check(g)?;
        let h = self.h();
        Ok(f.values.iter().zip(&g.values).map(|(a, b)| a * b).sum::<f64>() * h * h)
    }

    pub fn l2_norm_sq(&self, f: &Field) -> Result<f64> {
        self.l2_inner(f, f)
    }

    pub fn l2_norm(&self, f: &Field) -> Result<f64> {
        Ok(self.l2_norm_sq(f)?.sqrt())
    }

    /// `(grad f, grad g)` through Parseval with the symbol `|k|^2`; consistent
    /// with [`PeriodicGrid::laplacian`] so that `-(lap f, g) = (grad f, grad g)`.
    pub fn h1_inner(&self, f: &Field, g: &Field) -> Result<f64> {
        let fs = self.forward(f)?;
        let gs = self.forward(g)?;
        let n = self.n;
        let mut s = 0.0;
        for a in 0..n {
            for b in 0..n {
                let idx = a * n + b;
                s += self.k_squared(a, b) * (fs[idx] * gs[idx].conj()).re;
            }
        }
        let nn = (n * n) as f64;
        Ok(s * self.area() / (nn * nn))
    }

    pub fn h1_seminorm_sq(&self, f: &Field) -> Result<f64> {
        self.h1_inner(f, f)
    }

    pub fn h1_seminorm(&self, f: &Field) -> Result<f64> {
        Ok(self.h1_seminorm_sq(f)?.sqrt())
    }

    pub fn laplacian(&self, f: &Field) -> Result<Field> {
        let mut s = self.forward(f)?;
        let n = self.n;
        for a in 0..n {
            for b in 0..n {
                s[a * n + b] *= -self.k_squared(a, b);
            }
        }
        Ok(self.inverse(s))
    }

    fn derivative_spec(&self, s: &[Complex64], along_x: bool) -> Vec<Complex64> {
        let n = self.n;
        let mut out = s.to_vec();
        for a in 0..n {
            for b in 0..n {
                let kk = if along_x {
                    self.derivative_wavenumber(a)
                } else {
                    self.derivative_wavenumber(b)
                };
                out[a * n + b] *= Complex64::new(0.0, kk);
            }
        }
        out
    }

    pub fn ddx(&self, f: &Field) -> Result<Field> {
        let s = self.forward(f)?;
        Ok(self.inverse(self.derivative_spec(&s, true)))
    }

    pub fn ddz(&self, f: &Field) -> Result<Field> {
        let s = self.forward(f)?;
        Ok(self.inverse(self.derivative_spec(&s, false)))
    }

    /// Whether index `a` survives the two-thirds truncation.
    pub fn kept(&self, a: usize) -> bool {
        3 * self.signed_mode(a).unsigned_abs() < self.n as u64
    }

    fn truncate(&self, s: &mut [Complex64]) {
        let n = self.n;
        for a in 0..n {
            for b in 0..n {
                if !(self.kept(a) && self.kept(b)) {
                    s[a * n + b] = Complex64::new(0.0, 0.0);
                }
            }
        }
    }

    /// Two-thirds truncation of `f`.
    pub fn dealias(&self, f: &Field) -> Result<Field> {
        let mut s = self.forward(f)?;
        self.truncate(&mut s);
        Ok(self.inverse(s))
    }

    /// Dealiased spectral Jacobian `P[(P a)_x (P b)_z - (P a)_z (P b)_x]`.
    pub fn jacobian(&self, a: &Field, b: &Field) -> Result<Field> {
        let mut sa = self.forward(a)?;
        let mut sb = self.forward(b)?;
        self.truncate(&mut sa);
        self.truncate(&mut sb);
        let ax = self.inverse(self.derivative_spec(&sa, true));
        let az = self.inverse(self.derivative_spec(&sa, false));
        let bx = self.inverse(self.derivative_spec(&sb, true));
        let bz = self.inverse(self.derivative_spec(&sb, false));
        let values: Vec<f64> = (0..self.n * self.n)
            .map(|i| ax.values[i] * bz.values[i] - az.values[i] * bx.values[i])
            .collect();
        let prod = self.zeros().with_values_unchecked(values);
        self.dealias(&prod)
    }
}

impl L2Space for PeriodicGrid {
    fn inner(&self, f: &Field, g: &Field) -> Result<f64> {
        self.l2_inner(f, g)
    }
}

impl Field {
    pub(crate) fn with_values_unchecked(mut self, values: Vec<f64>) -> Field {
        debug_assert_eq!(values.len(), self.values.len());
        self.values = values;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn transforms_round_trip() {
        let g = PeriodicGrid::standard(16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = g.field_from_fn(|_, _| rng.gen_range(-1.0..1.0));
        let back = g.inverse(g.forward(&f).unwrap());
        assert!((&back - &f).max_abs() < 1e-14);
    }

    #[test]
    fn spectral_derivatives_of_trig_polynomials() {
        let g = PeriodicGrid::standard(32).unwrap();
        let f = g.field_from_fn(|x, z| (2.0 * x).sin() * (3.0 * z).cos());
        let fx = g.ddx(&f).unwrap();
        let ex = g.field_from_fn(|x, z| 2.0 * (2.0 * x).cos() * (3.0 * z).cos());
        assert!((&fx - &ex).max_abs() < 1e-12);
        let lap = g.laplacian(&f).unwrap();
        assert!((&lap - &(&f * -13.0)).max_abs() < 1e-12);
        assert!((g.h1_seminorm_sq(&f).unwrap() - 13.0 * g.l2_norm_sq(&f).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn jacobian_of_simple_fields() {
        let g = PeriodicGrid::standard(32).unwrap();
        let a = g.field_from_fn(|x, _| x.sin());
        let b = g.field_from_fn(|_, z| z.sin());
        // J = cos x cos z
        let j = g.jacobian(&a, &b).unwrap();
        let e = g.field_from_fn(|x, z| x.cos() * z.cos());
        assert!((&j - &e).max_abs() < 1e-12);
        let ab = g.jacobian(&a, &a).unwrap();
        assert!(ab.max_abs() < 1e-13);
    }

    #[test]
    fn dealias_keeps_one_third() {
        let g = PeriodicGrid::standard(64).unwrap();
        assert!(g.kept(21));
        assert!(!g.kept(22));
        assert!(g.kept(64 - 21));
        assert!(!g.kept(32));
    }
}
