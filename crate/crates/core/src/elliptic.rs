//! Elliptic solves on the channel and on the periodic square.
//!
//! Channel operators are diagonalised in x by the FFT. Each x mode `m` then
//! leaves a tridiagonal system in z whose x part is the discrete eigenvalue
//! `kappa_m = (4 / dx^2) sin^2(pi m / nx)` of the periodic three-point
//! second difference, so the solves invert exactly the five-point stencils
//! of [`Grid::laplacian_dirichlet`] and [`Grid::laplacian_neumann`].

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{Field, FieldKind, Grid};
use crate::periodic::PeriodicGrid;

/// Wall data for a channel solve. Vectors hold one value per x node.
#[derive(Debug, Clone, PartialEq)]
pub enum WallCondition {
    /// Prescribed values on the walls.
    Dirichlet { top: Vec<f64>, bottom: Vec<f64> },
    /// Prescribed `d/dz u` on the walls.
    Neumann { top: Vec<f64>, bottom: Vec<f64> },
}

impl WallCondition {
    pub fn homogeneous_dirichlet(nx: usize) -> Self {
        Self::Dirichlet {
            top: vec![0.0; nx],
            bottom: vec![0.0; nx],
        }
    }

    pub fn homogeneous_neumann(nx: usize) -> Self {
        Self::Neumann {
            top: vec![0.0; nx],
            bottom: vec![0.0; nx],
        }
    }

    fn is_dirichlet(&self) -> bool {
        matches!(self, Self::Dirichlet { .. })
    }

    fn data(&self) -> (&[f64], &[f64]) {
        match self {
            Self::Dirichlet { top, bottom } | Self::Neumann { top, bottom } => (top, bottom),
        }
    }
}

/// FFTs along x for every z level of a channel field.
#[derive(Clone)]
pub struct ChannelFft {
    nx: usize,
    nzl: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for ChannelFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ChannelFft").field("nx", &self.nx).field("nzl", &self.nzl).finish()
    }
}

impl ChannelFft {
    pub fn new(grid: &Grid) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            nx: grid.nx(),
            nzl: grid.nz_layers(),
            fwd: planner.plan_fft_forward(grid.nx()),
            inv: planner.plan_fft_inverse(grid.nx()),
        }
    }

    /// Returns spectra level by level: `out[j * nx + m]`.
    pub fn forward(&self, f: &Field) -> Vec<Complex64> {
        let (nx, nzl) = (self.nx, self.nzl);
        let mut out = vec![Complex64::new(0.0, 0.0); nx * nzl];
        for i in 0..nx {
            for j in 0..nzl {
                out[j * nx + i].re = f.values[i * nzl + j];
            }
        }
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.fwd.get_inplace_scratch_len()];
        self.fwd.process_with_scratch(&mut out, &mut scratch);
        out
    }

    /// Inverse of [`ChannelFft::forward`], keeping the real part.
    pub fn inverse(&self, mut spec: Vec<Complex64>, kind: FieldKind) -> Field {
        let (nx, nzl) = (self.nx, self.nzl);
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.inv.get_inplace_scratch_len()];
        self.inv.process_with_scratch(&mut spec, &mut scratch);
        let scale = 1.0 / nx as f64;
        let mut out = Field::zeros_with_shape(nx, nzl, kind);
        for i in 0..nx {
            for j in 0..nzl {
                out.values[i * nzl + j] = spec[j * nx + i].re * scale;
            }
        }
        out
    }

    pub fn forward_row(&self, row: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = row.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fwd.process(&mut buf);
        buf
    }
}

/// Eigenvalue of the negative periodic second difference for mode `m`.
pub fn x_eigenvalue(grid: &Grid, m: usize) -> f64 {
    let s = (std::f64::consts::PI * m as f64 / grid.nx() as f64).sin();
    4.0 * s * s / (grid.dx() * grid.dx())
}

#[derive(Debug, Clone)]
struct ModeFactor {
    lower: Vec<f64>,
    cprime: Vec<f64>,
    inv_denom: Vec<f64>,
}

impl ModeFactor {
    fn new(lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64>) -> Self {
        let n = diag.len();
        let mut cprime = vec![0.0; n];
        let mut inv_denom = vec![0.0; n];
        let mut prev_c = 0.0;
        for j in 0..n {
            let denom = diag[j] - if j > 0 { lower[j] * prev_c } else { 0.0 };
            inv_denom[j] = 1.0 / denom;
            cprime[j] = if j + 1 < n { upper[j] * inv_denom[j] } else { 0.0 };
            prev_c = cprime[j];
        }
        Self {
            lower,
            cprime,
            inv_denom,
        }
    }

    fn solve(&self, d: &mut [Complex64]) {
        let n = d.len();
        d[0] *= self.inv_denom[0];
        for j in 1..n {
            let prev = d[j - 1];
            d[j] = (d[j] - prev * self.lower[j]) * self.inv_denom[j];
        }
        for j in (0..n - 1).rev() {
            let next = d[j + 1];
            d[j] -= next * self.cprime[j];
        }
    }
}

/// Factored solver for `(alpha - gamma * lap) u = f` on the channel with
/// fixed wall data. Reusable; results depend only on the right-hand side.
#[derive(Debug, Clone)]
pub struct HelmholtzPlan {
    grid: Grid,
    alpha: f64,
    gamma: f64,
    bc: WallCondition,
    fft: ChannelFft,
    factors: Vec<ModeFactor>,
    kind: FieldKind,
}

impl HelmholtzPlan {
    pub fn new(grid: &Grid, alpha: f64, gamma: f64, bc: WallCondition) -> Result<Self> {
        let nx = grid.nx();
        let (top, bottom) = bc.data();
        if top.len() != nx || bottom.len() != nx {
            return Err(Error::Shape {
                expected: (nx, 1),
                found: (top.len().min(bottom.len()), 1),
            });
        }
        if !(alpha.is_finite() && gamma.is_finite()) {
            return Err(Error::Domain("non-finite operator coefficient".into()));
        }
        if !bc.is_dirichlet() && !(alpha > 0.0 && gamma >= 0.0) {
            return Err(Error::Domain(
                "Neumann problems need a positive zeroth-order term and nonnegative diffusion".into(),
            ));
        }
        let n = grid.nz();
        let dz2 = grid.dz() * grid.dz();
        let off = -gamma / dz2;
        let mut factors = Vec::with_capacity(nx / 2 + 1);
        for m in 0..=nx / 2 {
            let d0 = alpha + gamma * x_eigenvalue(grid, m) + 2.0 * gamma / dz2;
            let f = if bc.is_dirichlet() {
                let len = n - 1;
                ModeFactor::new(vec![off; len], vec![d0; len], vec![off; len])
            } else {
                let len = n + 1;
                let mut lower = vec![off; len];
                let mut upper = vec![off; len];
                upper[0] = 2.0 * off;
                lower[n] = 2.0 * off;
                ModeFactor::new(lower, vec![d0; len], upper)
            };
            factors.push(f);
        }
        let kind = if bc.is_dirichlet() {
            FieldKind::DirichletZ
        } else {
            FieldKind::NeumannZ
        };
        Ok(Self {
            grid: grid.clone(),
            alpha,
            gamma,
            bc,
            fft: ChannelFft::new(grid),
            factors,
            kind,
        })
    }

    /// `(3 - 2 k c lap)`, the implicit operator of the two-step scheme.
    pub fn bdf2(grid: &Grid, k: f64, c: f64, bc: WallCondition) -> Result<Self> {
        Self::new(grid, 3.0, 2.0 * k * c, bc)
    }

    /// `(1 - k c lap)`, the implicit operator of the starting Euler step.
    pub fn euler(grid: &Grid, k: f64, c: f64, bc: WallCondition) -> Result<Self> {
        Self::new(grid, 1.0, k * c, bc)
    }

    /// `lap u = f` with zero wall values.
    pub fn poisson(grid: &Grid) -> Result<Self> {
        Self::new(grid, 0.0, -1.0, WallCondition::homogeneous_dirichlet(grid.nx()))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn wall_condition(&self) -> &WallCondition {
        &self.bc
    }

    pub fn solve(&self, rhs: &Field) -> Result<Field> {
        self.grid.check(rhs)?;
        let nx = self.grid.nx();
        let n = self.grid.nz();
        let nzl = n + 1;
        let dz = self.grid.dz();
        let (top, bottom) = self.bc.data();
        let top_hat = self.fft.forward_row(top);
        let bot_hat = self.fft.forward_row(bottom);
        let mut spec = self.fft.forward(rhs);
        let mut col = vec![Complex64::new(0.0, 0.0); nzl];
        for m in 0..nx {
            let fac = &self.factors[m.min(nx - m)];
            for j in 0..nzl {
                col[j] = spec[j * nx + m];
            }
            if self.bc.is_dirichlet() {
                let c = self.gamma / (dz * dz);
                col[1] += bot_hat[m] * c;
                col[n - 1] += top_hat[m] * c;
                fac.solve(&mut col[1..n]);
                col[0] = bot_hat[m];
                col[n] = top_hat[m];
            } else {
                let c = 2.0 * self.gamma / dz;
                col[0] -= bot_hat[m] * c;
                col[n] += top_hat[m] * c;
                fac.solve(&mut col[..]);
            }
            for j in 0..nzl {
                spec[j * nx + m] = col[j];
            }
        }
        Ok(self.fft.inverse(spec, self.kind))
    }

    /// Applies the discrete operator, with the plan's wall data, to `u`.
    /// Rows where the operator is not defined (Dirichlet walls) are zero.
    pub fn apply(&self, u: &Field) -> Result<Field> {
        let lap = match &self.bc {
            WallCondition::Dirichlet { .. } => self.grid.laplacian_dirichlet(u)?,
            WallCondition::Neumann { top, bottom } => self.grid.laplacian_neumann(u, top, bottom)?,
        };
        let mut out = u.lin_comb(self.alpha, &lap, -self.gamma);
        if self.bc.is_dirichlet() {
            let n = self.grid.nz();
            for i in 0..self.grid.nx() {
                out.set(i, 0, 0.0);
                out.set(i, n, 0.0);
            }
        }
        Ok(out)
    }
}

/// `lap psi = omega` with `psi = 0` on both walls.
pub fn poisson_channel(grid: &Grid, omega: &Field) -> Result<Field> {
    HelmholtzPlan::poisson(grid)?.solve(omega)
}

/// `lap psi = omega` on the periodic square, with `mean(psi) = 0`.
pub fn poisson_periodic(grid: &PeriodicGrid, omega: &Field) -> Result<Field> {
    let mean = grid.mean(omega)?;
    if mean.abs() > 1e-10 {
        return Err(Error::Constraint(format!(
            "periodic Poisson needs zero-mean data, mean = {mean:e}"
        )));
    }
    let mut spec = grid.forward(omega)?;
    let n = grid.n();
    for a in 0..n {
        for b in 0..n {
            let idx = a * n + b;
            let k2 = grid.k_squared(a, b);
            spec[idx] = if k2 == 0.0 { Complex64::new(0.0, 0.0) } else { -spec[idx] / k2 };
        }
    }
    Ok(grid.inverse(spec))
}
