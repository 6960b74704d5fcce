//! The two-step scheme for the channel problem.
//!
//! One step from levels `n-1, n` solves, in this order,
//!
//! ```text
//! (3 - 2k lap)        T^{n+1} = 4T^n - T^{n-1} - 2k J(2psi^n - psi^{n-1}, 2T^n - T^{n-1})
//! (3 - 2k lewis lap)  S^{n+1} = 4S^n - S^{n-1} - 2k J(.., 2S^n - S^{n-1})
//! (3 - 2k p lap)      w^{n+1} = 4w^n - w^{n-1} - 2k J(.., 2w^n - w^{n-1}) + 2k p (dx T^{n+1} - dx S^{n+1})
//! lap psi^{n+1} = w^{n+1}
//! ```
//!
//! with the top-wall flux data on `T`, `S`, the top-wall value on `w` and
//! `psi = 0` on both walls. The first level is produced by one
//! semi-implicit Euler step.

use crate::diagnostics::{self, DiagnosticsRecord};
use crate::elliptic::{HelmholtzPlan, WallCondition};
use crate::error::{Error, Result};
use crate::grid::{Field, FieldKind, Grid};
use crate::lifting::Lifting;
use crate::model::{ConstantsConfig, Params, State, Variable};
use crate::nonlinear::{jacobian, one_leg_advection};

/// Norms above this multiple of the initial scale count as blow-up.
pub const BLOWUP_FACTOR: f64 = 1e8;

#[derive(Debug, Clone)]
struct Plans {
    temp: HelmholtzPlan,
    salt: HelmholtzPlan,
    omega: HelmholtzPlan,
}

impl Plans {
    fn new(grid: &Grid, params: &Params, lift: &Lifting, euler: bool) -> Result<Self> {
        let nx = grid.nx();
        let zero = vec![0.0; nx];
        let make = |c: f64, bc: WallCondition| {
            if euler {
                HelmholtzPlan::euler(grid, params.k, c, bc)
            } else {
                HelmholtzPlan::bdf2(grid, params.k, c, bc)
            }
        };
        Ok(Self {
            temp: make(
                1.0,
                WallCondition::Neumann {
                    top: lift.qt_top.clone(),
                    bottom: zero.clone(),
                },
            )?,
            salt: make(
                params.lewis,
                WallCondition::Neumann {
                    top: lift.qs_top.clone(),
                    bottom: zero.clone(),
                },
            )?,
            omega: make(
                params.prandtl,
                WallCondition::Dirichlet {
                    top: lift.qu_top.clone(),
                    bottom: zero,
                },
            )?,
        })
    }
}

/// Holds two consecutive levels and advances them.
#[derive(Debug, Clone)]
pub struct Stepper {
    params: Params,
    grid: Grid,
    lift: Lifting,
    plans: Plans,
    poisson: HelmholtzPlan,
    prev: State,
    curr: State,
    advection: bool,
    blowup_limit: f64,
    mode: Field,
    mode_mean: f64,
}

impl Stepper {
    fn assemble(params: &Params, lift: &Lifting, scale_from: &State) -> Result<Self> {
        params.validate()?;
        let grid = params.grid()?;
        grid.check(&lift.omega)?;
        let plans = Plans::new(&grid, params, lift, false)?;
        let poisson = HelmholtzPlan::poisson(&grid)?;
        let mode = Field::from_fn(&grid, FieldKind::DirichletZ, |_, z| (std::f64::consts::PI * z).sin());
        let mode_mean = grid.mean(&mode)?;
        let n = &lift.norms;
        let scale = [
            grid.l2_norm(&scale_from.omega)?,
            grid.l2_norm(&scale_from.temp)?,
            grid.l2_norm(&scale_from.salt)?,
            n.omega_l2,
            n.tq_l2,
            n.sq_l2,
            1.0,
        ]
        .into_iter()
        .fold(0.0, f64::max);
        let zero = State::zeros(&grid);
        Ok(Self {
            params: params.clone(),
            grid,
            lift: lift.clone(),
            plans,
            poisson,
            prev: zero.clone(),
            curr: zero,
            advection: true,
            blowup_limit: BLOWUP_FACTOR * scale,
            mode,
            mode_mean,
        })
    }

    /// Starts from `u0` and takes the Euler step to reach level 1.
    pub fn start(params: &Params, lift: &Lifting, u0: State) -> Result<Self> {
        Self::start_with(params, lift, u0, true)
    }

    /// As [`Stepper::start`], optionally with the Jacobian switched off.
    pub fn start_with(params: &Params, lift: &Lifting, u0: State, advection: bool) -> Result<Self> {
        let mut s = Self::assemble(params, lift, &u0)?;
        s.advection = advection;
        s.grid.check(&u0.omega)?;
        let mut u0 = u0;
        u0.step = 0;
        u0.time = 0.0;
        let u1 = s.bootstrap(&u0)?;
        s.prev = u0;
        s.curr = u1;
        Ok(s)
    }

    /// Resumes from two stored consecutive levels.
    pub fn from_levels(params: &Params, lift: &Lifting, prev: State, curr: State) -> Result<Self> {
        if prev.step + 1 != curr.step {
            return Err(Error::Sequencing(format!(
                "levels {} and {} are not consecutive",
                prev.step, curr.step
            )));
        }
        let mut s = Self::assemble(params, lift, &prev)?;
        for f in [&prev.omega, &prev.temp, &prev.salt, &prev.psi, &curr.omega, &curr.temp, &curr.salt, &curr.psi] {
            s.grid.check(f)?;
        }
        s.prev = prev;
        s.curr = curr;
        Ok(s)
    }

    pub fn set_advection(&mut self, on: bool) {
        self.advection = on;
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn lifting(&self) -> &Lifting {
        &self.lift
    }

    pub fn prev(&self) -> &State {
        &self.prev
    }

    pub fn curr(&self) -> &State {
        &self.curr
    }

    pub fn step_index(&self) -> u64 {
        self.curr.step
    }

    fn project_scalar(&self, f: Field) -> Result<Field> {
        Ok(self.grid.subtract_mean(&f)?.with_kind(FieldKind::NeumannZ))
    }

    /// Removes the mean of `w` along `sin(pi z)`, which keeps the wall values.
    fn project_vorticity(&self, w: Field) -> Result<Field> {
        let m = self.grid.mean(&w)?;
        Ok(w.lin_comb(1.0, &self.mode, -m / self.mode_mean))
    }

    fn buoyancy(&self, t: &Field, s: &Field) -> Result<Field> {
        self.grid.ddx(&(t - s))
    }

    fn advect(&self, psi: &Field, phi: &Field) -> Result<Field> {
        if self.advection {
            jacobian(&self.grid, psi, phi)
        } else {
            Ok(Field::zeros(&self.grid, FieldKind::None))
        }
    }

    fn bootstrap(&self, u0: &State) -> Result<State> {
        let plans = Plans::new(&self.grid, &self.params, &self.lift, true)?;
        let k = self.params.k;
        let temp_rhs = u0.temp.lin_comb(1.0, &self.advect(&u0.psi, &u0.temp)?, -k);
        let temp = self.project_scalar(plans.temp.solve(&temp_rhs)?)?;
        let salt_rhs = u0.salt.lin_comb(1.0, &self.advect(&u0.psi, &u0.salt)?, -k);
        let salt = self.project_scalar(plans.salt.solve(&salt_rhs)?)?;
        let mut w_rhs = u0.omega.lin_comb(1.0, &self.advect(&u0.psi, &u0.omega)?, -k);
        w_rhs = w_rhs.lin_comb(1.0, &self.buoyancy(&temp, &salt)?, k * self.params.prandtl);
        let omega = self.project_vorticity(plans.omega.solve(&w_rhs)?)?;
        let psi = self.poisson.solve(&omega)?;
        let next = State {
            omega,
            temp,
            salt,
            psi,
            step: u0.step + 1,
            time: (u0.step + 1) as f64 * k,
        };
        self.check_blowup(&next)?;
        Ok(next)
    }

    fn one_leg(&self, which: Variable) -> Result<Field> {
        if self.advection {
            one_leg_advection(&self.grid, &self.prev, &self.curr, which)
        } else {
            Ok(Field::zeros(&self.grid, FieldKind::None))
        }
    }

    fn bdf_rhs(&self, which: Variable) -> Result<Field> {
        let k = self.params.k;
        let base = self.curr.field(which).lin_comb(4.0, self.prev.field(which), -1.0);
        Ok(base.lin_comb(1.0, &self.one_leg(which)?, -2.0 * k))
    }

    /// Advances one level and returns the new current state.
    pub fn step(&mut self) -> Result<&State> {
        let k = self.params.k;
        let temp = self.project_scalar(self.plans.temp.solve(&self.bdf_rhs(Variable::Temp)?)?)?;
        let salt = self.project_scalar(self.plans.salt.solve(&self.bdf_rhs(Variable::Salt)?)?)?;
        let w_rhs = self
            .bdf_rhs(Variable::Omega)?
            .lin_comb(1.0, &self.buoyancy(&temp, &salt)?, 2.0 * k * self.params.prandtl);
        let omega = self.project_vorticity(self.plans.omega.solve(&w_rhs)?)?;
        let psi = self.poisson.solve(&omega)?;
        let step = self.curr.step + 1;
        let next = State {
            omega,
            temp,
            salt,
            psi,
            step,
            time: step as f64 * k,
        };
        self.check_blowup(&next)?;
        self.prev = std::mem::replace(&mut self.curr, next);
        Ok(&self.curr)
    }

    fn check_blowup(&self, s: &State) -> Result<()> {
        for (name, f) in [("omega", &s.omega), ("T", &s.temp), ("S", &s.salt), ("psi", &s.psi)] {
            if !f.is_finite() {
                return Err(Error::BlowUp {
                    step: s.step,
                    reason: format!("non-finite values in {name}"),
                });
            }
            let n = self.grid.l2_norm(f)?;
            if n > self.blowup_limit {
                return Err(Error::BlowUp {
                    step: s.step,
                    reason: format!("|{name}| = {n:e} exceeds {:e}", self.blowup_limit),
                });
            }
        }
        Ok(())
    }
}

/// How often a run records diagnostics and snapshots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub diag_every: u64,
    /// `None` disables snapshots.
    pub snapshot_every: Option<u64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            diag_every: 1,
            snapshot_every: None,
        }
    }
}

/// Receives run output.
pub trait RunHooks {
    fn record(&mut self, rec: &DiagnosticsRecord) -> Result<()>;

    fn snapshot(&mut self, _prev: &State, _curr: &State) -> Result<()> {
        Ok(())
    }
}

/// Keeps every record in memory.
#[derive(Debug, Default, Clone)]
pub struct Collector {
    pub records: Vec<DiagnosticsRecord>,
}

impl RunHooks for Collector {
    fn record(&mut self, rec: &DiagnosticsRecord) -> Result<()> {
        self.records.push(*rec);
        Ok(())
    }
}

/// Records the current level, then takes `n_steps` steps, recording levels
/// whose index is a multiple of `diag_every` and the last one. Snapshots
/// follow the same rule, so a restarted run keeps the original schedule.
pub fn run(
    stepper: &mut Stepper,
    constants: &ConstantsConfig,
    n_steps: u64,
    opts: RunOptions,
    hooks: &mut dyn RunHooks,
) -> Result<()> {
    if opts.diag_every == 0 {
        return Err(Error::Config("diag_every must be at least 1".into()));
    }
    let emit = |s: &Stepper, hooks: &mut dyn RunHooks| -> Result<()> {
        let rec = diagnostics::record(s.grid(), s.prev(), s.curr(), s.lifting(), s.params(), constants)?;
        hooks.record(&rec)
    };
    emit(stepper, hooks)?;
    for i in 1..=n_steps {
        stepper.step()?;
        let level = stepper.step_index();
        if level.is_multiple_of(opts.diag_every) || i == n_steps {
            emit(stepper, hooks)?;
        }
        if let Some(every) = opts.snapshot_every {
            if every > 0 && level.is_multiple_of(every) {
                hooks.snapshot(stepper.prev(), stepper.curr())?;
            }
        }
    }
    Ok(())
}
