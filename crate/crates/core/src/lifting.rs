//! Extensions of the top-wall data into the channel.
//!
//! With `s = (1 - z) / eps` and the bump `eta(s) = (1 - s^2)^2` on `[0, 1]`
//! (zero beyond), the vorticity lifting is `Omega = Q_u(x) eta(s)` and the
//! scalar liftings are `T_Q = eps Q_T(x) rho(s)` with
//! `rho(s) = int_s^1 eta`, so that `d/dz T_Q = Q_T(x) eta(s)` equals `Q_T`
//! on the top wall and vanishes below the layer `1 - eps < z <= 1`.

use crate::elliptic::poisson_channel;
use crate::error::{Error, Result};
use crate::grid::{Field, FieldKind, Grid};
use crate::model::{BoundaryFlux, ConstantsConfig, State};

/// `int_0^1 eta(s) ds`.
pub const ETA_INTEGRAL: f64 = 8.0 / 15.0;

/// `int_0^1 eta(s)^2 ds`.
pub const ETA_SQ_INTEGRAL: f64 = 128.0 / 315.0;

pub fn eta(s: f64) -> f64 {
    if (0.0..1.0).contains(&s) {
        let t = 1.0 - s * s;
        t * t
    } else if s < 0.0 {
        1.0
    } else {
        0.0
    }
}

/// `int_s^1 eta(t) dt`.
pub fn rho(s: f64) -> f64 {
    if s >= 1.0 {
        0.0
    } else {
        let s = s.max(0.0);
        ETA_INTEGRAL - (s - 2.0 * s * s * s / 3.0 + s.powi(5) / 5.0)
    }
}

/// Measured norms of the lifting fields (all by quadrature).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LiftingNorms {
    pub omega_l2: f64,
    pub omega_h1: f64,
    pub omega_lap: f64,
    pub omega_inf: f64,
    pub grad_psi_inf: f64,
    pub tq_l2: f64,
    pub tq_h1: f64,
    pub tq_lap: f64,
    pub sq_l2: f64,
    pub sq_h1: f64,
    pub sq_lap: f64,
    /// L2 norms of the wall data along the top wall.
    pub qu_wall: f64,
    pub qt_wall: f64,
    pub qs_wall: f64,
}

/// Ratios left/right of the three smallness conditions; each must be <= 1.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Margins {
    pub omega: f64,
    pub temp: f64,
    pub salt: f64,
}

impl Margins {
    pub fn max(&self) -> f64 {
        self.omega.max(self.temp).max(self.salt)
    }

    /// Name and ratio of the first violated condition, if any.
    pub fn first_violation(&self) -> Option<(&'static str, f64)> {
        [
            ("|Omega|^2 <= prandtl^2/(32 c4)", self.omega),
            ("|T_Q|^2 <= 1/(32 c4)", self.temp),
            ("|S_Q|^2 <= lewis^2/(32 c4)", self.salt),
        ]
        .into_iter()
        .find(|(_, m)| *m > 1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lifting {
    pub omega: Field,
    pub psi: Field,
    pub tq: Field,
    pub sq: Field,
    pub epsilon: f64,
    pub norms: LiftingNorms,
    pub margins: Margins,
    /// Sampled top-wall data.
    pub qu_top: Vec<f64>,
    pub qt_top: Vec<f64>,
    pub qs_top: Vec<f64>,
}

impl Lifting {
    /// All-zero lifting (no forcing).
    pub fn zero(grid: &Grid) -> Self {
        let nx = grid.nx();
        Self {
            omega: Field::zeros(grid, FieldKind::DirichletZ),
            psi: Field::zeros(grid, FieldKind::DirichletZ),
            tq: Field::zeros(grid, FieldKind::NeumannZ),
            sq: Field::zeros(grid, FieldKind::NeumannZ),
            epsilon: 0.5,
            norms: LiftingNorms::default(),
            margins: Margins::default(),
            qu_top: vec![0.0; nx],
            qt_top: vec![0.0; nx],
            qs_top: vec![0.0; nx],
        }
    }
}

impl Lifting {
    /// The shifted variables `(omega - Omega, T - T_Q, S - S_Q)`.
    pub fn hat(&self, state: &State) -> [Field; 3] {
        [
            &state.omega - &self.omega,
            &state.temp - &self.tq,
            &state.salt - &self.sq,
        ]
    }
}

/// Builds the liftings for a given layer width and measures them, without
/// enforcing the smallness conditions.
pub fn construct_lifting(
    grid: &Grid,
    flux: &BoundaryFlux,
    epsilon: f64,
    prandtl: f64,
    lewis: f64,
    constants: &ConstantsConfig,
) -> Result<Lifting> {
    if !(epsilon > 0.0 && epsilon <= 0.5) {
        return Err(Error::Domain(format!("layer width must lie in (0, 1/2], got {epsilon}")));
    }
    flux.validate(grid)?;
    constants.validate()?;
    let qu = flux.sample_qu(grid);
    let qt = flux.sample_qt(grid);
    let qs = flux.sample_qs(grid);
    let zs = grid.zs();
    let nzl = grid.nz_layers();
    let build = |q: &[f64], kind: FieldKind, prof: &dyn Fn(f64) -> f64, scale: f64| {
        let mut f = Field::zeros(grid, kind);
        for (i, &qi) in q.iter().enumerate() {
            for (j, &z) in zs.iter().enumerate() {
                f.values[i * nzl + j] = scale * qi * prof((1.0 - z) / epsilon);
            }
        }
        f
    };
    let mut omega = build(&qu, FieldKind::DirichletZ, &eta, 1.0);
    // exact wall values
    for (i, &q) in qu.iter().enumerate() {
        omega.set(i, grid.nz(), q);
        omega.set(i, 0, 0.0);
    }
    let tq = grid
        .subtract_mean(&build(&qt, FieldKind::NeumannZ, &rho, epsilon))?
        .with_kind(FieldKind::NeumannZ);
    let sq = grid
        .subtract_mean(&build(&qs, FieldKind::NeumannZ, &rho, epsilon))?
        .with_kind(FieldKind::NeumannZ);
    let psi = poisson_channel(grid, &omega)?;
    let zero = vec![0.0; grid.nx()];
    let wall = |q: &[f64]| (grid.dx() * q.iter().map(|v| v * v).sum::<f64>()).sqrt();
    let norms = LiftingNorms {
        omega_l2: grid.l2_norm(&omega)?,
        omega_h1: grid.h1_seminorm(&omega)?,
        omega_lap: grid.l2_norm(&grid.laplacian_dirichlet(&omega)?)?,
        omega_inf: omega.max_abs(),
        grad_psi_inf: grid.grad_max(&psi)?,
        tq_l2: grid.l2_norm(&tq)?,
        tq_h1: grid.h1_seminorm(&tq)?,
        tq_lap: grid.l2_norm(&grid.laplacian_neumann(&tq, &qt, &zero)?)?,
        sq_l2: grid.l2_norm(&sq)?,
        sq_h1: grid.h1_seminorm(&sq)?,
        sq_lap: grid.l2_norm(&grid.laplacian_neumann(&sq, &qs, &zero)?)?,
        qu_wall: wall(&qu),
        qt_wall: wall(&qt),
        qs_wall: wall(&qs),
    };
    let margins = compute_margins(&norms, prandtl, lewis, constants);
    Ok(Lifting {
        omega,
        psi,
        tq,
        sq,
        epsilon,
        norms,
        margins,
        qu_top: qu,
        qt_top: qt,
        qs_top: qs,
    })
}

pub fn compute_margins(norms: &LiftingNorms, prandtl: f64, lewis: f64, c: &ConstantsConfig) -> Margins {
    let d = 32.0 * c.c4;
    Margins {
        omega: norms.omega_l2.powi(2) / (prandtl * prandtl / d),
        temp: norms.tq_l2.powi(2) / (1.0 / d),
        salt: norms.sq_l2.powi(2) / (lewis * lewis / d),
    }
}

/// Like [`construct_lifting`] but fails when a smallness condition does not
/// hold, naming the condition.
pub fn build_lifting(
    grid: &Grid,
    flux: &BoundaryFlux,
    epsilon: f64,
    prandtl: f64,
    lewis: f64,
    constants: &ConstantsConfig,
) -> Result<Lifting> {
    let lift = construct_lifting(grid, flux, epsilon, prandtl, lewis, constants)?;
    if let Some((name, m)) = lift.margins.first_violation() {
        return Err(Error::Constraint(format!(
            "lifting at eps = {epsilon}: {name} fails with ratio {m:.6}"
        )));
    }
    Ok(lift)
}

/// Halves the layer width from 1/2 until every smallness condition holds.
pub fn auto_epsilon(
    grid: &Grid,
    flux: &BoundaryFlux,
    prandtl: f64,
    lewis: f64,
    constants: &ConstantsConfig,
) -> Result<Lifting> {
    let mut eps = 0.5;
    let mut last = None;
    while eps >= 1e-6 {
        let lift = construct_lifting(grid, flux, eps, prandtl, lewis, constants)?;
        match lift.margins.first_violation() {
            None => return Ok(lift),
            Some((name, m)) => last = Some((name, m)),
        }
        eps *= 0.5;
    }
    let (name, m) = last.unwrap_or(("none", 0.0));
    Err(Error::Constraint(format!(
        "no layer width >= 1e-6 satisfies the smallness conditions; last failure {name} with ratio {m:.6}"
    )))
}
