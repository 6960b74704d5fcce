//! The two-step scheme for 2D Navier-Stokes on the periodic square:
//!
//! ```text
//! (3 - 2k mu lap) w^{n+1} = 4 w^n - w^{n-1} - 2k J(2psi^n - psi^{n-1}, 2w^n - w^{n-1}) + 2k f
//! ```
//!
//! solved mode by mode, with `lap psi = w` and zero means throughout.

use rustfft::num_complex::Complex64;

use crate::elliptic::poisson_periodic;
use crate::error::{Error, Result};
use crate::grid::{Field, L2Space};
use crate::periodic::PeriodicGrid;
use crate::stepper::BLOWUP_FACTOR;

#[derive(Debug, Clone)]
pub struct NseSolver {
    grid: PeriodicGrid,
    mu: f64,
    k: f64,
    forcing: Field,
}

impl NseSolver {
    pub fn new(grid: PeriodicGrid, mu: f64, k: f64, forcing: Field) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::Domain(format!("viscosity must be positive, got {mu}")));
        }
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::Domain(format!("timestep must be positive, got {k}")));
        }
        grid.check(&forcing)?;
        let forcing = grid.subtract_mean(&forcing)?;
        Ok(Self { grid, mu, k, forcing })
    }

    pub fn unforced(grid: PeriodicGrid, mu: f64, k: f64) -> Result<Self> {
        let f = grid.zeros();
        Self::new(grid, mu, k, f)
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    fn solve(&self, rhs: &Field, alpha: f64, gamma: f64) -> Result<Field> {
        let mut s = self.grid.forward(rhs)?;
        let n = self.grid.n();
        for a in 0..n {
            for b in 0..n {
                let idx = a * n + b;
                s[idx] = if a == 0 && b == 0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    s[idx] / (alpha + gamma * self.grid.k_squared(a, b))
                };
            }
        }
        Ok(self.grid.inverse(s))
    }

    fn streamfunction(&self, w: &Field) -> Result<Field> {
        poisson_periodic(&self.grid, &self.grid.subtract_mean(w)?)
    }

    /// Semi-implicit Euler step producing the second starting level.
    pub fn bootstrap(&self, w0: &Field) -> Result<Field> {
        let psi = self.streamfunction(w0)?;
        let j = self.grid.jacobian(&psi, w0)?;
        let rhs = &w0.lin_comb(1.0, &j, -self.k) + &(&self.forcing * self.k);
        let next = self.solve(&rhs, 1.0, self.k * self.mu)?;
        self.check(&next, w0, 1)?;
        Ok(next)
    }

    /// One two-step update from `(prev, curr)`.
    pub fn step(&self, prev: &Field, curr: &Field) -> Result<Field> {
        let psi = self.streamfunction(curr)?.extrapolate(&self.streamfunction(prev)?);
        let w = curr.extrapolate(prev);
        let j = self.grid.jacobian(&psi, &w)?;
        let mut rhs = curr.lin_comb(4.0, prev, -1.0);
        rhs = rhs.lin_comb(1.0, &j, -2.0 * self.k);
        rhs = rhs.lin_comb(1.0, &self.forcing, 2.0 * self.k);
        let next = self.solve(&rhs, 3.0, 2.0 * self.k * self.mu)?;
        self.check(&next, curr, 0)?;
        self.grid.subtract_mean(&next)
    }

    fn check(&self, next: &Field, reference: &Field, step: u64) -> Result<()> {
        if !next.is_finite() {
            return Err(Error::BlowUp {
                step,
                reason: "non-finite vorticity".into(),
            });
        }
        let scale = self.grid.l2_norm(reference)?.max(self.grid.l2_norm(&self.forcing)?).max(1.0);
        let n = self.grid.l2_norm(next)?;
        if n > BLOWUP_FACTOR * scale {
            return Err(Error::BlowUp {
                step,
                reason: format!("|w| = {n:e}"),
            });
        }
        Ok(())
    }

    /// Runs `n_steps` two-step updates from `(w0, w1)`, calling `visit` with
    /// each new pair `(level index, previous, current)`. Returns the last two levels.
    pub fn run(
        &self,
        w0: Field,
        w1: Field,
        n_steps: usize,
        mut visit: impl FnMut(usize, &Field, &Field),
    ) -> Result<(Field, Field)> {
        let mut prev = w0;
        let mut curr = w1;
        visit(1, &prev, &curr);
        for i in 0..n_steps {
            let next = self.step(&prev, &curr).map_err(|e| match e {
                Error::BlowUp { reason, .. } => Error::BlowUp {
                    step: (i + 2) as u64,
                    reason,
                },
                other => other,
            })?;
            prev = std::mem::replace(&mut curr, next);
            visit(i + 2, &prev, &curr);
        }
        Ok((prev, curr))
    }
}

/// Taylor-Green vorticity `-2 e^{-2 mu t} cos x cos z` on `[0, 2 pi)^2`.
pub fn taylor_green(grid: &PeriodicGrid, mu: f64, t: f64) -> Field {
    let a = -2.0 * (-2.0 * mu * t).exp();
    grid.field_from_fn(|x, z| a * x.cos() * z.cos())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub ks: Vec<f64>,
    pub errors: Vec<f64>,
    /// Least-squares slope of `log(error)` against `log(k)`.
    pub order: f64,
}

/// Runs to `t_end` for every `k`, starting from the exact levels at `t = 0`
/// and `t = k`, and measures the L2 error against `oracle(t)`.
pub fn convergence_study(
    grid: &PeriodicGrid,
    mu: f64,
    forcing: &Field,
    ks: &[f64],
    t_end: f64,
    oracle: &dyn Fn(f64) -> Field,
) -> Result<ConvergenceStudy> {
    if ks.len() < 2 {
        return Err(Error::InsufficientData("need at least two timesteps".into()));
    }
    if ks.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Config("timesteps must be strictly decreasing".into()));
    }
    let mut errors = Vec::with_capacity(ks.len());
    for &k in ks {
        let steps_f = t_end / k;
        let steps = steps_f.round();
        if steps < 1.0 || (steps_f - steps).abs() > 1e-9 * steps.max(1.0) {
            return Err(Error::Config(format!("t_end = {t_end} is not a multiple of k = {k}")));
        }
        let solver = NseSolver::new(grid.clone(), mu, k, forcing.clone())?;
        let n = steps as usize;
        let (_, last) = solver.run(oracle(0.0), oracle(k), n - 1, |_, _, _| {})?;
        let exact = oracle(n as f64 * k);
        errors.push(grid.l2_norm(&(&last - &exact))?);
    }
    let order = log_log_slope(ks, &errors)?;
    Ok(ConvergenceStudy {
        ks: ks.to_vec(),
        errors,
        order,
    })
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InsufficientData("slope needs two or more points".into()));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(Error::Domain("logarithmic slope needs positive data".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaMonitor {
    /// `|w^n - w^{n-1}|` for `n = 1, 2, ...`.
    pub deltas: Vec<f64>,
    /// Supremum over the last `tail_fraction` of the entries.
    pub late_sup: f64,
}

/// Difference norms along a stored trajectory.
pub fn nse_delta_monitor(grid: &PeriodicGrid, trajectory: &[Field], tail_fraction: f64) -> Result<DeltaMonitor> {
    if trajectory.len() < 2 {
        return Err(Error::InsufficientData("need at least two levels".into()));
    }
    let deltas = trajectory
        .windows(2)
        .map(|w| grid.l2_norm(&(&w[1] - &w[0])))
        .collect::<Result<Vec<f64>>>()?;
    let start = ((1.0 - tail_fraction.clamp(0.0, 1.0)) * deltas.len() as f64).floor() as usize;
    let late_sup = deltas[start.min(deltas.len() - 1)..].iter().copied().fold(0.0, f64::max);
    Ok(DeltaMonitor { deltas, late_sup })
}

/// Residual of `2(3a - b, a) = 3|a|^2 - |b|^2/3 + |3a - b|^2/3`.
pub fn idd1_residual<S: L2Space>(space: &S, a: &Field, b: &Field) -> Result<f64> {
    let c = a.lin_comb(3.0, b, -1.0);
    let lhs = 2.0 * space.inner(&c, a)?;
    let rhs = 3.0 * space.norm_sq(a)? - space.norm_sq(b)? / 3.0 + space.norm_sq(&c)? / 3.0;
    Ok((lhs - rhs).abs())
}

/// Residual of `-2(lap a, a - b) = |grad a|^2 - |grad b|^2 + |grad(a - b)|^2`.
pub fn idd2_residual(grid: &PeriodicGrid, a: &Field, b: &Field) -> Result<f64> {
    let d = a - b;
    let lhs = -2.0 * grid.l2_inner(&grid.laplacian(a)?, &d)?;
    let rhs = grid.h1_seminorm_sq(a)? - grid.h1_seminorm_sq(b)? + grid.h1_seminorm_sq(&d)?;
    Ok((lhs - rhs).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_stays_zero() {
        let g = PeriodicGrid::standard(16).unwrap();
        let s = NseSolver::unforced(g.clone(), 1.0, 0.01).unwrap();
        let w1 = s.bootstrap(&g.zeros()).unwrap();
        assert_eq!(w1.max_abs(), 0.0);
        let w2 = s.step(&g.zeros(), &w1).unwrap();
        assert_eq!(w2.max_abs(), 0.0);
    }

    #[test]
    fn forced_steady_state_is_fixed() {
        let g = PeriodicGrid::standard(32).unwrap();
        let mu = 0.7;
        let ws = g.field_from_fn(|x, z| -2.0 * x.cos() * z.cos());
        let s = NseSolver::new(g.clone(), mu, 0.01, &ws * (2.0 * mu)).unwrap();
        let (a, b) = s.run(ws.clone(), ws.clone(), 50, |_, _, _| {}).unwrap();
        assert!((&a - &ws).max_abs() < 1e-12);
        assert!((&b - &ws).max_abs() < 1e-12);
    }

    #[test]
    fn rejects_non_divisible_end_time() {
        let g = PeriodicGrid::standard(16).unwrap();
        let z = g.zeros();
        let r = convergence_study(&g, 1.0, &z, &[0.3, 0.15], 1.0, &|t| taylor_green(&g, 1.0, t));
        assert!(matches!(r, Err(Error::Config(_))));
        let r = convergence_study(&g, 1.0, &z, &[0.1, 0.2], 1.0, &|t| taylor_green(&g, 1.0, t));
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn taylor_green_delta_matches_decay() {
        let g = PeriodicGrid::standard(16).unwrap();
        let mu = 1.0;
        let mut sups = Vec::new();
        for &k in &[0.01, 0.005] {
            let s = NseSolver::unforced(g.clone(), mu, k).unwrap();
            let mut traj = Vec::new();
            let n = (1.0 / k) as usize;
            s.run(taylor_green(&g, mu, 0.0), taylor_green(&g, mu, k), n, |i, p, c| {
                if i == 1 {
                    traj.push(p.clone());
                }
                traj.push(c.clone());
            })
            .unwrap();
            let mon = nse_delta_monitor(&g, &traj, 0.25).unwrap();
            // late differences track 2 mu k |w(t)|
            let last = *mon.deltas.last().unwrap();
            let t = n as f64 * k + k;
            let expect = 2.0 * mu * k * g.l2_norm(&taylor_green(&g, mu, t)).unwrap();
            assert!((last / expect - 1.0).abs() < 0.05, "{last} vs {expect}");
            sups.push(mon.late_sup);
        }
        let r = sups[0] / sups[1];
        assert!((r - 2.0).abs() < 0.3, "ratio {r}");
    }
}
