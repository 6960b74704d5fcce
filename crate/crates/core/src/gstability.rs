//! The shifted two-level G-norm, its identity and equivalence constants,
//! the discrete Gronwall-type lemmas, and the timestep restriction.

use crate::error::{Error, Result};
use crate::grid::{Field, FieldKind, Grid, L2Space};
use crate::lifting::Lifting;
use crate::model::{ConstantsConfig, Params, State};

fn check_nu_k(nu_k: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&nu_k) {
        return Err(Error::Domain(format!("nu*k must lie in [0, 1], got {nu_k}")));
    }
    Ok(())
}

/// G-norm from the three inner products `|f|^2`, `|g|^2` and `(f, g)`.
pub fn gnorm_sq_from_products(f2: f64, g2: f64, fg: f64, nu_k: f64) -> Result<f64> {
    check_nu_k(nu_k)?;
    Ok(0.5 * f2 + 0.5 * (5.0 + nu_k) * g2 - 2.0 * fg)
}

/// `|f|^2/2 + (5 + nu k)/2 |g|^2 - 2 (f, g)`.
pub fn gnorm_sq<S: L2Space>(space: &S, f: &Field, g: &Field, nu_k: f64) -> Result<f64> {
    gnorm_sq_from_products(space.norm_sq(f)?, space.norm_sq(g)?, space.inner(f, g)?, nu_k)
}

/// Eigenvalues `(small, large)` of the form `[[1/2, -1], [-1, (5 + nu k)/2]]`.
pub fn gform_eigenvalues(nu_k: f64) -> (f64, f64) {
    let tr = 3.0 + 0.5 * nu_k;
    let det = 0.25 * (1.0 + nu_k);
    let root = (tr * tr - 4.0 * det).sqrt();
    let large = 0.5 * (tr + root);
    // product form avoids cancellation
    let small = 2.0 * det / (tr + root);
    (small, large)
}

/// Extreme eigenvalues of the G-norm form over a set of shifts in `[0, 1]`.
pub fn equivalence_constants(nu_k_grid: &[f64]) -> Result<(f64, f64)> {
    if nu_k_grid.is_empty() {
        return Err(Error::InsufficientData("empty nu*k grid".into()));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in nu_k_grid {
        check_nu_k(v)?;
        let (s, l) = gform_eigenvalues(v);
        lo = lo.min(s);
        hi = hi.max(l);
    }
    Ok((lo, hi))
}

/// `|LHS - RHS|` of the identity
/// `(3h - 4g + f, h) + nu k |h|^2 = G(g, h) - G(f, g)/(1 + nu k) + |f - 2g + (1 + nu k) h|^2 / (2 (1 + nu k))`.
pub fn hs_identity_residual<S: L2Space>(space: &S, f: &Field, g: &Field, h: &Field, nu_k: f64) -> Result<f64> {
    check_nu_k(nu_k)?;
    let a = 1.0 + nu_k;
    let lhs_field = &(&(h * 3.0) - &(g * 4.0)) + f;
    let lhs = space.inner(&lhs_field, h)? + nu_k * space.norm_sq(h)?;
    let tail = &(f - &(g * 2.0)) + &(h * a);
    let rhs = gnorm_sq(space, g, h, nu_k)? - gnorm_sq(space, f, g, nu_k)? / a + space.norm_sq(&tail)? / (2.0 * a);
    Ok((lhs - rhs).abs())
}

/// Bound on `x_{n+1} + mu y_{n+1}` for a sequence obeying
/// `x_{n+1} + mu y_{n+1} <= x_n/(1+delta) + eps y_n + eps y_{n-1} + r_n`
/// with `y >= 0`: `(x_1 + mu y_1)/(1+delta)^n + eps y_0/(1+delta)^{n-1} + sum_{j=1}^n r_j/(1+delta)^{n-j}`.
/// `r[j - 1]` holds `r_j`.
#[allow(clippy::too_many_arguments)]
pub fn recursion_bound(x1: f64, y1: f64, y0: f64, mu: f64, delta: f64, eps: f64, r: &[f64], n: usize) -> Result<f64> {
    if !(mu > 0.0) {
        return Err(Error::Domain(format!("mu must be positive, got {mu}")));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Domain(format!("delta must lie in (0, 1], got {delta}")));
    }
    if !(eps > 0.0 && eps <= mu / 8.0) {
        return Err(Error::Domain(format!("eps must lie in (0, mu/8], got {eps}")));
    }
    if !(y0 >= 0.0 && y1 >= 0.0) {
        return Err(Error::Domain("y values must be nonnegative".into()));
    }
    if n < 1 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    if r.len() < n {
        return Err(Error::InsufficientData(format!("need {n} forcing terms, got {}", r.len())));
    }
    let q = 1.0 / (1.0 + delta);
    let mut sum = 0.0;
    // sum_{j=1}^n r_j q^{n-j}, accumulated Horner style
    for &rj in &r[..n] {
        sum = sum * q + rj;
    }
    Ok((x1 + mu * y1) * q.powi(n as i32) + eps * y0 * q.powi(n as i32 - 1) + sum)
}

/// `(1 + b)^m (x_n + sum_{j=0}^{m-1} r_j)`, a bound on `x_{n+m}` when
/// `x_{j+1} <= (1 + b) x_j + r_j` with nonnegative data.
pub fn geometric_growth_bound(x_n: f64, b: f64, r: &[f64], m: usize) -> Result<f64> {
    if !(x_n >= 0.0) {
        return Err(Error::Domain(format!("x_n must be nonnegative, got {x_n}")));
    }
    if !(b > 0.0) {
        return Err(Error::Domain(format!("b must be positive, got {b}")));
    }
    if r.len() < m {
        return Err(Error::InsufficientData(format!("need {m} forcing terms, got {}", r.len())));
    }
    if r[..m].iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::Domain("forcing terms must be nonnegative".into()));
    }
    Ok((1.0 + b).powi(m as i32) * (x_n + r[..m].iter().sum::<f64>()))
}

/// Discrete Poincare constant: the smallest `c` with `|f|^2 <= c |grad f|^2`
/// for zero-wall vorticities and zero-mean scalars alike. Since
/// `|grad psi|^2 <= |w|^2 / lambda` for `lap psi = w`, it also covers the
/// streamfunction bound. The analysis leaves this constant open; this is
/// the value the grid actually has.
pub fn measured_c0(grid: &Grid) -> f64 {
    let lam = grid
        .smallest_eigenvalue(FieldKind::DirichletZ)
        .min(grid.smallest_eigenvalue(FieldKind::NeumannZ));
    1.0 / lam
}

/// `min{ min(p^2, lewis^2, 1) / (c3 M + c3 |grad Psi|_inf^2)^2, 1/nu }` with
/// `nu = min(p, lewis, 1)/(8 c0)`.
pub fn timestep_restriction(m_omega: f64, grad_psi_inf: f64, prandtl: f64, lewis: f64, c: &ConstantsConfig) -> f64 {
    let nu = c.nu(prandtl, lewis);
    let small = prandtl.min(lewis).min(1.0);
    let denom = c.c3 * m_omega + c.c3 * grad_psi_inf * grad_psi_inf;
    let first = if denom > 0.0 {
        small * small / (denom * denom)
    } else {
        f64::INFINITY
    };
    first.min(1.0 / nu)
}

/// The forcing norms `(||F1||^2, ||F2||^2)` built from the lifting; the
/// generic constant in `||F2||^2` is one.
pub fn forcing_norms(lift: &Lifting, prandtl: f64, lewis: f64, c: &ConstantsConfig) -> (f64, f64) {
    let n = &lift.norms;
    let f1 = c.c4 * prandtl * (n.omega_l2.powi(2) / (prandtl * prandtl) + n.tq_l2.powi(2) + n.sq_l2.powi(2) / (lewis * lewis));
    let f2 = n.grad_psi_inf.powi(2) * f1 + prandtl * (n.tq_h1.powi(2) + n.sq_h1.powi(2) + n.omega_h1.powi(2));
    (f1, f2)
}

/// Weighted sum of the three G-norms of the shifted variables:
/// `G(w, w') + 16 p c0 G(T, T') + 16 p c0 G(S, S') / lewis`.
pub fn combined_gnorm_sq(
    grid: &Grid,
    a: &[Field; 3],
    b: &[Field; 3],
    nu_k: f64,
    prandtl: f64,
    lewis: f64,
    c: &ConstantsConfig,
) -> Result<f64> {
    let w = 16.0 * prandtl * c.c0;
    Ok(gnorm_sq(grid, &a[0], &b[0], nu_k)?
        + w * gnorm_sq(grid, &a[1], &b[1], nu_k)?
        + w * gnorm_sq(grid, &a[2], &b[2], nu_k)? / lewis)
}

/// Output of [`m_omega_monitor`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MOmegaMonitor {
    /// `(p k)^{-1/2} { sup_{nu k} G(U^{n-1}, U^n) + p (|grad w^{n-1}|^2 + |grad w^n|^2) + 2 ||F2||^2 / nu }`
    /// over the latest pair of shifted levels.
    pub bound: f64,
    /// `|w^n| |grad w^n|`, the interpolation surrogate of the squared half-norm.
    pub interpolated: f64,
    /// `sqrt(k) |w^n| |grad w^n|`, the smallest value consistent with the
    /// half-norm hypothesis at this level.
    pub measured: f64,
}

/// Evaluates the vorticity half-norm monitor on the last two levels of
/// `history`.
pub fn m_omega_monitor(
    grid: &Grid,
    history: &[State],
    lift: &Lifting,
    params: &Params,
    c: &ConstantsConfig,
) -> Result<MOmegaMonitor> {
    if history.len() < 2 {
        return Err(Error::Sequencing("the monitor needs two time levels".into()));
    }
    let prev = &history[history.len() - 2];
    let curr = &history[history.len() - 1];
    let hp = lift.hat(prev);
    let hc = lift.hat(curr);
    let (p, beta, k) = (params.prandtl, params.lewis, params.k);
    // the G-norm grows with nu*k, so the sup over (0, 1] sits at 1
    let g = combined_gnorm_sq(grid, &hp, &hc, 1.0, p, beta, c)?;
    let gw_prev = grid.h1_seminorm_sq(&hp[0])?;
    let gw_curr = grid.h1_seminorm_sq(&hc[0])?;
    let (_, f2) = forcing_norms(lift, p, beta, c);
    let nu = c.nu(p, beta);
    let bound = (p * k).powf(-0.5) * (g + p * (gw_prev + gw_curr) + 2.0 * f2 / nu);
    let interpolated = grid.l2_norm(&hc[0])? * gw_curr.sqrt();
    Ok(MOmegaMonitor {
        bound,
        interpolated,
        measured: k.sqrt() * interpolated,
    })
}
