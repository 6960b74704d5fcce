//! Channel grid, sampled fields and the discrete integrals built on them.
//!
//! The domain is `[0, xi) x [0, 1]`, periodic in `x` and bounded by walls at
//! `z = 0` and `z = 1`. All fields live on the same node layout:
//! `x_i = i * xi / nx` (no duplicated periodic endpoint) and `z_j = j / nz`
//! for `j = 0..=nz`, so the wall rows are part of every field.
//!
//! Integrals use the trapezoid rule in `z` (half weight on the wall rows) and
//! the rectangle rule in `x`, which is exact for trigonometric polynomials
//! below the Nyquist mode. The discrete gradient is made of forward
//! differences on grid edges; with these weights it satisfies the
//! summation-by-parts identity `-(lap f, f) = |grad f|^2` for fields with zero
//! wall values or zero wall flux.

use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

/// Which wall condition the equation for a field carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    /// Values prescribed on the walls (vorticity, streamfunction).
    DirichletZ,
    /// Normal derivative prescribed on the walls (temperature, salinity).
    NeumannZ,
    /// No wall condition attached (work arrays, periodic fields).
    None,
}

/// Uniform channel grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    nx: usize,
    nz: usize,
    xi: f64,
    dx: f64,
    dz: f64,
}

impl Grid {
    /// `nx` must be even and at least 8, `nz` (number of cells across the
    /// channel) at least 8, and the aspect ratio positive.
    pub fn new(nx: usize, nz: usize, xi: f64) -> Result<Self> {
        if nx < 8 || !nx.is_multiple_of(2) {
            return Err(Error::Domain(format!("nx must be even and >= 8, got {nx}")));
        }
        if nz < 8 {
            return Err(Error::Domain(format!("nz must be >= 8, got {nz}")));
        }
        if !(xi.is_finite() && xi > 0.0) {
            return Err(Error::Domain(format!("aspect ratio must be positive, got {xi}")));
        }
        Ok(Self {
            nx,
            nz,
            xi,
            dx: xi / nx as f64,
            dz: 1.0 / nz as f64,
        })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    /// Number of cells across the channel.
    pub fn nz(&self) -> usize {
        self.nz
    }

    /// Number of sampled z levels, walls included.
    pub fn nz_layers(&self) -> usize {
        self.nz + 1
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dz(&self) -> f64 {
        self.dz
    }

    pub fn area(&self) -> f64 {
        self.xi
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.nz + 1)
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.nz + 1) + j
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|i| i as f64 * self.dx).collect()
    }

    pub fn zs(&self) -> Vec<f64> {
        (0..=self.nz).map(|j| j as f64 * self.dz).collect()
    }

    /// Trapezoid weight of level `j` in z (times `dz`).
    #[inline]
    pub fn z_weight(&self, j: usize) -> f64 {
        if j == 0 || j == self.nz {
            0.5 * self.dz
        } else {
            self.dz
        }
    }

    /// Quadrature weight of node `(i, j)`.
    #[inline]
    pub fn weight(&self, j: usize) -> f64 {
        self.dx * self.z_weight(j)
    }

    pub fn check(&self, f: &Field) -> Result<()> {
        if f.shape() != self.shape() {
            return Err(Error::Shape {
                expected: self.shape(),
                found: f.shape(),
            });
        }
        Ok(())
    }

    /// Integral of `f` over the channel.
    pub fn quadrature(&self, f: &Field) -> Result<f64> {
        self.check(f)?;
        let nzl = self.nz_layers();
        let mut total = 0.0;
        for j in 0..nzl {
            let row: f64 = (0..self.nx).map(|i| f.values[i * nzl + j]).sum();
            total += self.z_weight(j) * row;
        }
        Ok(total * self.dx)
    }

    pub fn mean(&self, f: &Field) -> Result<f64> {
        Ok(self.quadrature(f)? / self.area())
    }

    pub fn l2_inner(&self, f: &Field, g: &Field) -> Result<f64> {
        self.check(f)?;
        self.check(g)?;
        let nzl = self.nz_layers();
        let mut total = 0.0;
        for j in 0..nzl {
            let row: f64 = (0..self.nx)
                .map(|i| f.values[i * nzl + j] * g.values[i * nzl + j])
                .sum();
            total += self.z_weight(j) * row;
        }
        Ok(total * self.dx)
    }

    pub fn l2_norm_sq(&self, f: &Field) -> Result<f64> {
        self.l2_inner(f, f)
    }

    pub fn l2_norm(&self, f: &Field) -> Result<f64> {
        Ok(self.l2_norm_sq(f)?.sqrt())
    }

    /// Squared discrete H1 seminorm `|grad f|^2` built from forward
    /// differences (x differences weighted by the z trapezoid rule).
    pub fn h1_seminorm_sq(&self, f: &Field) -> Result<f64> {
        self.check(f)?;
        let nzl = self.nz_layers();
        let v = &f.values;
        let mut gx = 0.0;
        for j in 0..nzl {
            let mut row = 0.0;
            for i in 0..self.nx {
                let ip = (i + 1) % self.nx;
                let d = v[ip * nzl + j] - v[i * nzl + j];
                row += d * d;
            }
            gx += self.z_weight(j) * row;
        }
        gx /= self.dx;
        let mut gz = 0.0;
        for i in 0..self.nx {
            for j in 0..self.nz {
                let d = v[i * nzl + j + 1] - v[i * nzl + j];
                gz += d * d;
            }
        }
        gz *= self.dx / self.dz;
        Ok(gx + gz)
    }

    pub fn h1_seminorm(&self, f: &Field) -> Result<f64> {
        Ok(self.h1_seminorm_sq(f)?.sqrt())
    }

    /// `f` minus its mean; a projection onto zero-mean fields.
    pub fn subtract_mean(&self, f: &Field) -> Result<Field> {
        let m = self.mean(f)?;
        let mut out = f.clone();
        out.values.iter_mut().for_each(|v| *v -= m);
        Ok(out)
    }

    /// Centred periodic x derivative.
    pub fn ddx(&self, f: &Field) -> Result<Field> {
        self.check(f)?;
        let nzl = self.nz_layers();
        let inv = 0.5 / self.dx;
        let mut out = Field::zeros(self, FieldKind::None);
        for i in 0..self.nx {
            let ip = (i + 1) % self.nx;
            let im = (i + self.nx - 1) % self.nx;
            for j in 0..nzl {
                out.values[i * nzl + j] = (f.values[ip * nzl + j] - f.values[im * nzl + j]) * inv;
            }
        }
        Ok(out)
    }

    /// z derivative: centred in the interior, second-order one-sided on the walls.
    pub fn ddz(&self, f: &Field) -> Result<Field> {
        self.check(f)?;
        let nzl = self.nz_layers();
        let n = self.nz;
        let inv = 0.5 / self.dz;
        let mut out = Field::zeros(self, FieldKind::None);
        for i in 0..self.nx {
            let c = &f.values[i * nzl..(i + 1) * nzl];
            let o = &mut out.values[i * nzl..(i + 1) * nzl];
            o[0] = (-3.0 * c[0] + 4.0 * c[1] - c[2]) * inv;
            for j in 1..n {
                o[j] = (c[j + 1] - c[j - 1]) * inv;
            }
            o[n] = (3.0 * c[n] - 4.0 * c[n - 1] + c[n - 2]) * inv;
        }
        Ok(out)
    }

    /// `max |grad f|` over the nodes.
    pub fn grad_max(&self, f: &Field) -> Result<f64> {
        let fx = self.ddx(f)?;
        let fz = self.ddz(f)?;
        Ok(fx
            .values
            .iter()
            .zip(&fz.values)
            .map(|(a, b)| (a * a + b * b).sqrt())
            .fold(0.0, f64::max))
    }

    fn laplacian_x_into(&self, f: &Field, out: &mut Field) {
        let nzl = self.nz_layers();
        let inv = 1.0 / (self.dx * self.dx);
        for i in 0..self.nx {
            let ip = (i + 1) % self.nx;
            let im = (i + self.nx - 1) % self.nx;
            for j in 0..nzl {
                out.values[i * nzl + j] = (f.values[ip * nzl + j] - 2.0 * f.values[i * nzl + j]
                    + f.values[im * nzl + j])
                    * inv;
            }
        }
    }

    /// Five-point Laplacian of a field with prescribed wall values. Only the
    /// interior rows are defined by the stencil; the wall rows of the result
    /// are filled by linear extrapolation from the two nearest interior rows.
    pub fn laplacian_dirichlet(&self, f: &Field) -> Result<Field> {
        self.check(f)?;
        let nzl = self.nz_layers();
        let n = self.nz;
        let inv = 1.0 / (self.dz * self.dz);
        let mut out = Field::zeros(self, FieldKind::None);
        self.laplacian_x_into(f, &mut out);
        for i in 0..self.nx {
            let c = &f.values[i * nzl..(i + 1) * nzl];
            let o = &mut out.values[i * nzl..(i + 1) * nzl];
            for j in 1..n {
                o[j] += (c[j + 1] - 2.0 * c[j] + c[j - 1]) * inv;
            }
            o[0] = 2.0 * o[1] - o[2];
            o[n] = 2.0 * o[n - 1] - o[n - 2];
        }
        Ok(out)
    }

    /// Five-point Laplacian of a field with prescribed wall flux `d/dz f`,
    /// closed with ghost levels `f[-1] = f[1] - 2 dz q_bottom` and
    /// `f[nz+1] = f[nz-1] + 2 dz q_top`.
    pub fn laplacian_neumann(&self, f: &Field, top_flux: &[f64], bottom_flux: &[f64]) -> Result<Field> {
        self.check(f)?;
        if top_flux.len() != self.nx || bottom_flux.len() != self.nx {
            return Err(Error::Shape {
                expected: (self.nx, 1),
                found: (top_flux.len().min(bottom_flux.len()), 1),
            });
        }
        let nzl = self.nz_layers();
        let n = self.nz;
        let dz = self.dz;
        let inv = 1.0 / (dz * dz);
        let mut out = Field::zeros(self, FieldKind::None);
        self.laplacian_x_into(f, &mut out);
        for i in 0..self.nx {
            let c = &f.values[i * nzl..(i + 1) * nzl];
            let o = &mut out.values[i * nzl..(i + 1) * nzl];
            o[0] += (2.0 * c[1] - 2.0 * c[0] - 2.0 * dz * bottom_flux[i]) * inv;
            for j in 1..n {
                o[j] += (c[j + 1] - 2.0 * c[j] + c[j - 1]) * inv;
            }
            o[n] += (2.0 * c[n - 1] - 2.0 * c[n] + 2.0 * dz * top_flux[i]) * inv;
        }
        Ok(out)
    }

    /// Smallest nonzero eigenvalue of `-lap` for the given wall condition;
    /// its inverse is the discrete Poincare constant on zero-mean fields.
    pub fn smallest_eigenvalue(&self, kind: FieldKind) -> f64 {
        let sx = (std::f64::consts::PI / self.nx as f64).sin();
        let kappa1 = 4.0 * sx * sx / (self.dx * self.dx);
        let sz = (0.5 * std::f64::consts::PI * self.dz).sin();
        let lz1 = 4.0 * sz * sz / (self.dz * self.dz);
        match kind {
            FieldKind::DirichletZ => lz1,
            _ => kappa1.min(lz1),
        }
    }
}

/// A discrete L2 space: anything with an inner product on fields.
pub trait L2Space {
    fn inner(&self, f: &Field, g: &Field) -> Result<f64>;

    fn norm_sq(&self, f: &Field) -> Result<f64> {
        self.inner(f, f)
    }
}

impl L2Space for Grid {
    fn inner(&self, f: &Field, g: &Field) -> Result<f64> {
        self.l2_inner(f, g)
    }
}

/// A real field sampled on a [`Grid`], stored row-major with shape
/// `(nx, nz_layers)` (z fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    nx: usize,
    nz_layers: usize,
    pub(crate) values: Vec<f64>,
    kind: FieldKind,
}

impl Field {
    pub fn zeros(grid: &Grid, kind: FieldKind) -> Self {
        Self::zeros_with_shape(grid.nx(), grid.nz_layers(), kind)
    }

    pub fn zeros_with_shape(nx: usize, nz_layers: usize, kind: FieldKind) -> Self {
        Self {
            nx,
            nz_layers,
            values: vec![0.0; nx * nz_layers],
            kind,
        }
    }

    pub fn from_fn(grid: &Grid, kind: FieldKind, f: impl Fn(f64, f64) -> f64) -> Self {
        let xs = grid.xs();
        let zs = grid.zs();
        let mut values = Vec::with_capacity(xs.len() * zs.len());
        for &x in &xs {
            for &z in &zs {
                values.push(f(x, z));
            }
        }
        Self {
            nx: grid.nx(),
            nz_layers: grid.nz_layers(),
            values,
            kind,
        }
    }

    /// Wraps raw values; rejects wrong lengths and non-finite entries.
    pub fn from_values(nx: usize, nz_layers: usize, kind: FieldKind, values: Vec<f64>) -> Result<Self> {
        if values.len() != nx * nz_layers {
            return Err(Error::Shape {
                expected: (nx, nz_layers),
                found: (values.len(), 1),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite value at flat index {pos}")));
        }
        Ok(Self {
            nx,
            nz_layers,
            values,
            kind,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.nz_layers)
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn with_kind(mut self, kind: FieldKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.nz_layers + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.nz_layers + j] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `a * self + b * other`, keeping the kind of `self`.
    pub fn lin_comb(&self, a: f64, other: &Field, b: f64) -> Field {
        assert_eq!(self.shape(), other.shape(), "field shapes differ");
        Field {
            nx: self.nx,
            nz_layers: self.nz_layers,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
            kind: self.kind,
        }
    }

    /// The one-leg extrapolation `2 * self - older`.
    pub fn extrapolate(&self, older: &Field) -> Field {
        self.lin_comb(2.0, older, -1.0)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            nx: self.nx,
            nz_layers: self.nz_layers,
            values: self.values.iter().map(|&v| f(v)).collect(),
            kind: self.kind,
        }
    }

    /// Values on z level `j` for all x.
    pub fn row(&self, j: usize) -> Vec<f64> {
        (0..self.nx).map(|i| self.get(i, j)).collect()
    }

    pub fn set_row(&mut self, j: usize, row: &[f64]) {
        for (i, &v) in row.iter().enumerate() {
            self.set(i, j, v);
        }
    }
}

impl Add for &Field {
    type Output = Field;

    fn add(self, rhs: &Field) -> Field {
        self.lin_comb(1.0, rhs, 1.0)
    }
}

impl Sub for &Field {
    type Output = Field;

    fn sub(self, rhs: &Field) -> Field {
        self.lin_comb(1.0, rhs, -1.0)
    }
}

impl Mul<f64> for &Field {
    type Output = Field;

    fn mul(self, rhs: f64) -> Field {
        self.map(|v| v * rhs)
    }
}
