//! Parameters, boundary forcing and solution states.

use crate::error::{Error, Result};
use crate::grid::{Field, FieldKind, Grid};

/// The unvalued constants that enter the smallness and timestep conditions.
/// All default to one; they parameterise monitors, not certified bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantsConfig {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
}

impl Default for ConstantsConfig {
    fn default() -> Self {
        Self {
            c0: 1.0,
            c1: 1.0,
            c2: 1.0,
            c3: 1.0,
            c4: 1.0,
            c5: 1.0,
        }
    }
}

impl ConstantsConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("c0", self.c0),
            ("c1", self.c1),
            ("c2", self.c2),
            ("c3", self.c3),
            ("c4", self.c4),
            ("c5", self.c5),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Domain(format!("constant {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Shift of the G-norm: `min(prandtl, lewis, 1) / (8 c0)`.
    pub fn nu(&self, prandtl: f64, lewis: f64) -> f64 {
        prandtl.min(lewis).min(1.0) / (8.0 * self.c0)
    }
}

/// Physical and numerical parameters of a channel run.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub prandtl: f64,
    pub lewis: f64,
    pub aspect: f64,
    pub nx: usize,
    pub nz: usize,
    pub k: f64,
    pub nu: f64,
}

impl Params {
    /// Builds parameters with the G-norm shift fixed from the constants.
    pub fn new(
        prandtl: f64,
        lewis: f64,
        aspect: f64,
        nx: usize,
        nz: usize,
        k: f64,
        constants: &ConstantsConfig,
    ) -> Result<Self> {
        constants.validate()?;
        let p = Self {
            prandtl,
            lewis,
            aspect,
            nx,
            nz,
            k,
            nu: constants.nu(prandtl, lewis),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("prandtl", self.prandtl),
            ("lewis", self.lewis),
            ("aspect", self.aspect),
            ("k", self.k),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.nu.is_finite() && self.nu >= 0.0) {
            return Err(Error::Domain(format!("nu must be nonnegative, got {}", self.nu)));
        }
        if self.nu * self.k > 1.0 {
            return Err(Error::Domain(format!(
                "nu * k = {} exceeds 1; G-norm equivalence needs k <= 1/nu",
                self.nu * self.k
            )));
        }
        Grid::new(self.nx, self.nz, self.aspect)?;
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.nx, self.nz, self.aspect)
    }

    pub fn nu_k(&self) -> f64 {
        self.nu * self.k
    }
}

/// One term `a cos(2 pi m x / xi) + b sin(2 pi m x / xi)` of a wall flux.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierMode {
    pub m: u32,
    pub a: f64,
    pub b: f64,
}

/// Top-wall data for the three equations; the bottom wall carries none.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoundaryFlux {
    /// Vorticity on the top wall.
    pub qu: Vec<FourierMode>,
    /// Temperature flux through the top wall.
    pub qt: Vec<FourierMode>,
    /// Salinity flux through the top wall.
    pub qs: Vec<FourierMode>,
}

impl BoundaryFlux {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn is_zero(&self) -> bool {
        self.qu
            .iter()
            .chain(&self.qt)
            .chain(&self.qs)
            .all(|fm| fm.a == 0.0 && fm.b == 0.0)
    }

    /// Modes must satisfy `1 <= m < nx/2` so the net flux vanishes and the
    /// data is resolved.
    pub fn validate(&self, grid: &Grid) -> Result<()> {
        for (name, list) in [("qu", &self.qu), ("qt", &self.qt), ("qs", &self.qs)] {
            for fm in list {
                if fm.m == 0 {
                    return Err(Error::Domain(format!("{name}: mode 0 would carry net flux")));
                }
                if 2 * fm.m as usize >= grid.nx() {
                    return Err(Error::Domain(format!(
                        "{name}: mode {} not resolved by nx = {}",
                        fm.m,
                        grid.nx()
                    )));
                }
                if !(fm.a.is_finite() && fm.b.is_finite()) {
                    return Err(Error::Domain(format!("{name}: non-finite coefficient")));
                }
            }
        }
        Ok(())
    }

    pub fn sample_modes(modes: &[FourierMode], grid: &Grid) -> Vec<f64> {
        let w = 2.0 * std::f64::consts::PI / grid.xi();
        grid.xs()
            .iter()
            .map(|&x| {
                modes
                    .iter()
                    .map(|fm| {
                        let arg = w * fm.m as f64 * x;
                        fm.a * arg.cos() + fm.b * arg.sin()
                    })
                    .sum()
            })
            .collect()
    }

    pub fn sample_qu(&self, grid: &Grid) -> Vec<f64> {
        Self::sample_modes(&self.qu, grid)
    }

    pub fn sample_qt(&self, grid: &Grid) -> Vec<f64> {
        Self::sample_modes(&self.qt, grid)
    }

    pub fn sample_qs(&self, grid: &Grid) -> Vec<f64> {
        Self::sample_modes(&self.qs, grid)
    }

    /// Every coefficient multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let sc = |v: &Vec<FourierMode>| {
            v.iter()
                .map(|fm| FourierMode {
                    m: fm.m,
                    a: s * fm.a,
                    b: s * fm.b,
                })
                .collect()
        };
        Self {
            qu: sc(&self.qu),
            qt: sc(&self.qt),
            qs: sc(&self.qs),
        }
    }
}

/// Which scalar of the solution triple an operation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variable {
    Omega,
    Temp,
    Salt,
}

/// Solution at one time level. The time is `step * k`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub omega: Field,
    pub temp: Field,
    pub salt: Field,
    pub psi: Field,
    pub step: u64,
    pub time: f64,
}

impl State {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            omega: Field::zeros(grid, FieldKind::DirichletZ),
            temp: Field::zeros(grid, FieldKind::NeumannZ),
            salt: Field::zeros(grid, FieldKind::NeumannZ),
            psi: Field::zeros(grid, FieldKind::DirichletZ),
            step: 0,
            time: 0.0,
        }
    }

    pub fn field(&self, which: Variable) -> &Field {
        match which {
            Variable::Omega => &self.omega,
            Variable::Temp => &self.temp,
            Variable::Salt => &self.salt,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.omega.is_finite() && self.temp.is_finite() && self.salt.is_finite() && self.psi.is_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nu_from_constants() {
        let c = ConstantsConfig::default();
        assert_eq!(c.nu(1.0, 1.0), 0.125);
        assert_eq!(c.nu(0.5, 2.0), 0.0625);
    }

    #[test]
    fn params_reject_large_nu_k() {
        let c = ConstantsConfig::default();
        assert!(Params::new(1.0, 1.0, 2.0, 16, 8, 8.0, &c).is_ok());
        assert!(Params::new(1.0, 1.0, 2.0, 16, 8, 8.5, &c).is_err());
        assert!(Params::new(-1.0, 1.0, 2.0, 16, 8, 0.1, &c).is_err());
    }

    #[test]
    fn flux_modes_have_zero_net_flux() {
        let g = Grid::new(32, 8, 3.0).unwrap();
        let f = BoundaryFlux {
            qu: vec![FourierMode { m: 1, a: 0.3, b: -0.7 }, FourierMode { m: 3, a: 1.1, b: 0.0 }],
            ..Default::default()
        };
        f.validate(&g).unwrap();
        let s: f64 = f.sample_qu(&g).iter().sum();
        assert!(s.abs() < 1e-13);
        let bad = BoundaryFlux {
            qt: vec![FourierMode { m: 0, a: 1.0, b: 0.0 }],
            ..Default::default()
        };
        assert!(bad.validate(&g).is_err());
        let bad = BoundaryFlux {
            qt: vec![FourierMode { m: 16, a: 1.0, b: 0.0 }],
            ..Default::default()
        };
        assert!(bad.validate(&g).is_err());
    }
}
