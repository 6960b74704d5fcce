//! Per-level measurements and the analyses run over recorded trajectories.
//!
//! Long-time averages are windowed Cesaro means. The generalised limit
//! behind invariant-measure averages cannot be computed; the plain mean and
//! a tail-weighted mean over a finite window stand in for it, and results
//! may depend on that choice.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::gstability::{combined_gnorm_sq, forcing_norms, m_omega_monitor, timestep_restriction};
use crate::lifting::Lifting;
use crate::model::{ConstantsConfig, Params, State};

macro_rules! record_struct {
    ($($(#[$doc:meta])* $name:ident),* $(,)?) => {
        /// Measurements taken at one level `n` from the pair `(n-1, n)`.
        #[derive(Debug, Clone, Copy, PartialEq, Default)]
        pub struct DiagnosticsRecord {
            $($(#[$doc])* pub $name: f64,)*
        }

        impl DiagnosticsRecord {
            pub const COLUMNS: &'static [&'static str] = &[$(stringify!($name)),*];

            pub fn values(&self) -> Vec<f64> {
                vec![$(self.$name),*]
            }

            pub fn from_values(v: &[f64]) -> Result<Self> {
                if v.len() != Self::COLUMNS.len() {
                    return Err(Error::Shape {
                        expected: (Self::COLUMNS.len(), 1),
                        found: (v.len(), 1),
                    });
                }
                let mut it = v.iter().copied();
                Ok(Self { $($name: it.next().unwrap_or(0.0),)* })
            }

            pub fn get(&self, column: &str) -> Option<f64> {
                match column {
                    $(stringify!($name) => Some(self.$name),)*
                    _ => None,
                }
            }
        }
    };
}

record_struct! {
    /// Step index.
    n,
    t,
    omega_l2,
    temp_l2,
    salt_l2,
    /// Gradient norms of the shifted variables.
    omega_hat_h1,
    temp_hat_h1,
    salt_hat_h1,
    omega_lap,
    temp_lap,
    salt_lap,
    /// Weighted G-norm of the shifted pair `(n-1, n)` at the run's shift.
    gnorm_sq,
    delta_omega,
    delta_temp,
    delta_salt,
    /// `sqrt(|dw|^2 + |dT|^2 + |dS|^2)`.
    delta_u,
    mean_omega,
    mean_temp,
    mean_salt,
    m_omega_bound,
    /// `|w| |grad w|` of the shifted vorticity.
    h_half_sq,
    m_omega_measured,
    k_max,
    k_ratio,
    f1_sq,
    f2_sq,
    /// `|grad psi|^2 / 2`.
    energy,
    grad_temp_sq,
    /// `int Q_T T` along the top wall.
    wall_heat_flux,
}

/// Measures the pair `(prev, curr)`; hatted quantities subtract the lifting.
pub fn record(
    grid: &Grid,
    prev: &State,
    curr: &State,
    lift: &Lifting,
    params: &Params,
    c: &ConstantsConfig,
) -> Result<DiagnosticsRecord> {
    let (p, beta) = (params.prandtl, params.lewis);
    let hp = lift.hat(prev);
    let hc = lift.hat(curr);
    let zero = vec![0.0; grid.nx()];
    let dw = grid.l2_norm(&(&curr.omega - &prev.omega))?;
    let dt = grid.l2_norm(&(&curr.temp - &prev.temp))?;
    let ds = grid.l2_norm(&(&curr.salt - &prev.salt))?;
    let mon = m_omega_monitor(grid, &[prev.clone(), curr.clone()], lift, params, c)?;
    let k_max = timestep_restriction(mon.measured, lift.norms.grad_psi_inf, p, beta, c);
    let (f1, f2) = forcing_norms(lift, p, beta, c);
    let top = grid.nz();
    let wall_heat_flux = grid.dx() * (0..grid.nx()).map(|i| lift.qt_top[i] * curr.temp.get(i, top)).sum::<f64>();
    Ok(DiagnosticsRecord {
        n: curr.step as f64,
        t: curr.time,
        omega_l2: grid.l2_norm(&curr.omega)?,
        temp_l2: grid.l2_norm(&curr.temp)?,
        salt_l2: grid.l2_norm(&curr.salt)?,
        omega_hat_h1: grid.h1_seminorm(&hc[0])?,
        temp_hat_h1: grid.h1_seminorm(&hc[1])?,
        salt_hat_h1: grid.h1_seminorm(&hc[2])?,
        omega_lap: grid.l2_norm(&grid.laplacian_dirichlet(&curr.omega)?)?,
        temp_lap: grid.l2_norm(&grid.laplacian_neumann(&curr.temp, &lift.qt_top, &zero)?)?,
        salt_lap: grid.l2_norm(&grid.laplacian_neumann(&curr.salt, &lift.qs_top, &zero)?)?,
        gnorm_sq: combined_gnorm_sq(grid, &hp, &hc, params.nu_k(), p, beta, c)?,
        delta_omega: dw,
        delta_temp: dt,
        delta_salt: ds,
        delta_u: (dw * dw + dt * dt + ds * ds).sqrt(),
        mean_omega: grid.mean(&curr.omega)?,
        mean_temp: grid.mean(&curr.temp)?,
        mean_salt: grid.mean(&curr.salt)?,
        m_omega_bound: mon.bound,
        h_half_sq: mon.interpolated,
        m_omega_measured: mon.measured,
        k_max,
        k_ratio: params.k / k_max,
        f1_sq: f1,
        f2_sq: f2,
        energy: 0.5 * grid.h1_seminorm_sq(&curr.psi)?,
        grad_temp_sq: grid.h1_seminorm_sq(&curr.temp)?,
        wall_heat_flux,
    })
}

/// A scalar read off each record.
#[derive(Debug, Clone, PartialEq)]
pub enum Functional {
    Energy,
    GradTempSq,
    WallHeatFlux,
    /// Weighted sum of named columns.
    Combination(Vec<(String, f64)>),
}

impl Functional {
    /// `energy`, `grad_temp_sq`, `wall_heat_flux`, any other column name, or
    /// `a*col+b*col2` style combinations.
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "energy" => return Ok(Self::Energy),
            "grad_temp_sq" => return Ok(Self::GradTempSq),
            "wall_heat_flux" => return Ok(Self::WallHeatFlux),
            _ => {}
        }
        let mut terms = Vec::new();
        for part in s.split('+') {
            let part = part.trim();
            let (w, name) = match part.split_once('*') {
                Some((w, name)) => (
                    w.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Config(format!("bad weight in functional term '{part}'")))?,
                    name.trim(),
                ),
                None => (1.0, part),
            };
            if !DiagnosticsRecord::COLUMNS.contains(&name) {
                return Err(Error::Config(format!("unknown column '{name}' in functional")));
            }
            terms.push((name.to_string(), w));
        }
        Ok(Self::Combination(terms))
    }

    pub fn eval(&self, r: &DiagnosticsRecord) -> f64 {
        match self {
            Self::Energy => r.energy,
            Self::GradTempSq => r.grad_temp_sq,
            Self::WallHeatFlux => r.wall_heat_flux,
            Self::Combination(terms) => terms.iter().map(|(c, w)| w * r.get(c).unwrap_or(f64::NAN)).sum(),
        }
    }
}

/// Running mean and variance (Welford) of a functional over `[t_a, t_b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalAverage {
    pub functional: Functional,
    pub t_a: f64,
    pub t_b: f64,
    count: u64,
    mean: f64,
    m2: f64,
}

impl FunctionalAverage {
    pub fn new(functional: Functional, t_a: f64, t_b: f64) -> Self {
        Self {
            functional,
            t_a,
            t_b,
            count: 0,
            mean: 0.0,
            m2: 0.0,
        }
    }

    /// Adds a record if its time falls inside the window.
    pub fn push(&mut self, r: &DiagnosticsRecord) {
        if r.t < self.t_a || r.t > self.t_b {
            return;
        }
        let v = self.functional.eval(r);
        self.count += 1;
        let d = v - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (v - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> Option<f64> {
        (self.count > 0).then_some(self.mean)
    }

    /// Sample variance.
    pub fn variance(&self) -> Option<f64> {
        (self.count > 1).then(|| self.m2 / (self.count - 1) as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitStyle {
    Plain,
    /// Weights growing linearly from the window start, favouring late times.
    TailWeighted,
}

/// Windowed average of a functional over `[t_a, t_b]`.
pub fn time_average(
    records: &[DiagnosticsRecord],
    functional: &Functional,
    window: (f64, f64),
    style: LimitStyle,
) -> Result<f64> {
    let (ta, tb) = window;
    let inside: Vec<&DiagnosticsRecord> = records.iter().filter(|r| r.t >= ta && r.t <= tb).collect();
    if inside.is_empty() {
        return Err(Error::InsufficientData(format!("no records in window [{ta}, {tb}]")));
    }
    match style {
        LimitStyle::Plain => Ok(inside.iter().map(|r| functional.eval(r)).sum::<f64>() / inside.len() as f64),
        LimitStyle::TailWeighted => {
            let span = (tb - ta).max(f64::MIN_POSITIVE);
            let mut num = 0.0;
            let mut den = 0.0;
            for r in &inside {
                let w = ((r.t - ta) / span).max(0.0) + 1.0 / inside.len() as f64;
                num += w * functional.eval(r);
                den += w;
            }
            Ok(num / den)
        }
    }
}

fn late_window(records: &[DiagnosticsRecord], tail_fraction: f64) -> Result<&[DiagnosticsRecord]> {
    if records.len() < 4 {
        return Err(Error::InsufficientData(format!("{} records are too few", records.len())));
    }
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::Domain(format!("tail fraction must lie in (0, 1], got {tail_fraction}")));
    }
    let t0 = records[0].t;
    let t1 = records[records.len() - 1].t;
    let start = t1 - tail_fraction * (t1 - t0);
    let idx = records.iter().position(|r| r.t >= start).unwrap_or(records.len());
    let w = &records[idx..];
    if w.len() < 2 {
        return Err(Error::InsufficientData("late window holds fewer than two records".into()));
    }
    Ok(w)
}

/// Settings of [`absorbing_ball_report`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallCriteria {
    /// Fraction of the time span forming the late window.
    pub tail_fraction: f64,
    /// Allowed relative difference of the late suprema.
    pub rel_tol: f64,
    /// Suprema below this are treated as zero.
    pub abs_floor: f64,
    /// Excursions are checked for `t >= check_from`.
    pub check_from: f64,
    /// Allowed ratio of any value after `check_from` to the late supremum.
    pub excursion_factor: f64,
}

impl Default for BallCriteria {
    fn default() -> Self {
        Self {
            tail_fraction: 0.25,
            rel_tol: 0.1,
            abs_floor: 1e-12,
            check_from: 10.0,
            excursion_factor: 1e3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbsorbingBallReport {
    pub sup_a: f64,
    pub sup_b: f64,
    pub rel_diff: f64,
    /// First time after which the G-norm stays below twice the late supremum.
    pub entry_a: f64,
    pub entry_b: f64,
    pub max_excursion_a: f64,
    pub max_excursion_b: f64,
    pub agree: bool,
    pub bounded: bool,
}

fn entry_time(records: &[DiagnosticsRecord], level: f64) -> f64 {
    let mut entry = records[0].t;
    for r in records {
        if r.gnorm_sq > level {
            entry = r.t;
        }
    }
    entry
}

fn excursion(records: &[DiagnosticsRecord], from: f64, sup: f64, floor: f64) -> f64 {
    let m = records
        .iter()
        .filter(|r| r.t >= from)
        .map(|r| r.gnorm_sq)
        .fold(0.0, f64::max);
    if sup > floor {
        m / sup
    } else if m > floor {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Compares the late-window suprema of the combined G-norm of two runs
/// that differ only in their initial data.
pub fn absorbing_ball_report(
    a: &[DiagnosticsRecord],
    b: &[DiagnosticsRecord],
    crit: &BallCriteria,
) -> Result<AbsorbingBallReport> {
    let wa = late_window(a, crit.tail_fraction)?;
    let wb = late_window(b, crit.tail_fraction)?;
    let sup = |w: &[DiagnosticsRecord]| w.iter().map(|r| r.gnorm_sq).fold(0.0, f64::max);
    let (sa, sb) = (sup(wa), sup(wb));
    let big = sa.max(sb);
    let rel_diff = if big > crit.abs_floor { (sa - sb).abs() / big } else { 0.0 };
    let max_excursion_a = excursion(a, crit.check_from, sa, crit.abs_floor);
    let max_excursion_b = excursion(b, crit.check_from, sb, crit.abs_floor);
    Ok(AbsorbingBallReport {
        sup_a: sa,
        sup_b: sb,
        rel_diff,
        entry_a: entry_time(a, 2.0 * sa),
        entry_b: entry_time(b, 2.0 * sb),
        max_excursion_a,
        max_excursion_b,
        agree: rel_diff <= crit.rel_tol,
        bounded: max_excursion_a <= crit.excursion_factor && max_excursion_b <= crit.excursion_factor,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaScaling {
    pub sup_k: f64,
    pub sup_half: f64,
    /// `log2(sup_k / sup_half)`; `None` when either supremum vanishes.
    pub exponent: Option<f64>,
}

/// Exponent `p` with `sup |dU|(k) / sup |dU|(k/2) = 2^p` over the late windows.
pub fn delta_scaling_report(
    run_k: &[DiagnosticsRecord],
    run_half: &[DiagnosticsRecord],
    tail_fraction: f64,
) -> Result<DeltaScaling> {
    let sup = |w: &[DiagnosticsRecord]| w.iter().map(|r| r.delta_u).fold(0.0, f64::max);
    let a = sup(late_window(run_k, tail_fraction)?);
    let b = sup(late_window(run_half, tail_fraction)?);
    let exponent = (a > 0.0 && b > 0.0).then(|| (a / b).log2());
    Ok(DeltaScaling {
        sup_k: a,
        sup_half: b,
        exponent,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlateauReport {
    pub mean: f64,
    /// `(max - min) / mean` over the window.
    pub rel_variation: f64,
    /// Least-squares slope of block means against time.
    pub slope: f64,
    /// Slope over its standard error (0 for a flat signal).
    pub slope_t: f64,
    pub passes: bool,
}

/// Checks that `values` (sampled at `times`) neither varies by more than
/// `max_rel_variation` nor trends upward. The trend test regresses
/// `blocks` block means on time and calls the slope positive only when it
/// exceeds two standard errors.
pub fn plateau_report(times: &[f64], values: &[f64], blocks: usize, max_rel_variation: f64) -> Result<PlateauReport> {
    if times.len() != values.len() || values.len() < 2 * blocks || blocks < 3 {
        return Err(Error::InsufficientData(format!(
            "need at least {} samples for {blocks} blocks",
            2 * blocks.max(3)
        )));
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let rel_variation = if mean.abs() > 0.0 { (hi - lo) / mean.abs() } else { 0.0 };
    let size = n / blocks;
    let mut bx = Vec::with_capacity(blocks);
    let mut by = Vec::with_capacity(blocks);
    for b in 0..blocks {
        let s = b * size;
        let e = if b + 1 == blocks { n } else { s + size };
        let len = (e - s) as f64;
        bx.push(times[s..e].iter().sum::<f64>() / len);
        by.push(values[s..e].iter().sum::<f64>() / len);
    }
    let mx = bx.iter().sum::<f64>() / blocks as f64;
    let my = by.iter().sum::<f64>() / blocks as f64;
    let sxx: f64 = bx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = bx.iter().zip(&by).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let resid: f64 = bx
        .iter()
        .zip(&by)
        .map(|(x, y)| (y - my - slope * (x - mx)).powi(2))
        .sum();
    let se = (resid / (blocks as f64 - 2.0) / sxx).sqrt();
    let flat = (hi - lo) <= 1e-9 * mean.abs().max(1e-300);
    let slope_t = if flat || se == 0.0 {
        if slope > 0.0 && !flat {
            f64::INFINITY
        } else {
            0.0
        }
    } else {
        slope / se
    };
    Ok(PlateauReport {
        mean,
        rel_variation,
        slope,
        slope_t,
        passes: rel_variation < max_rel_variation && slope_t <= 2.0,
    })
}

/// Selects records with `t` in the last `tail_fraction` of the time span.
pub fn tail(records: &[DiagnosticsRecord], tail_fraction: f64) -> Result<&[DiagnosticsRecord]> {
    late_window(records, tail_fraction)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(t: f64, g: f64) -> DiagnosticsRecord {
        DiagnosticsRecord {
            t,
            gnorm_sq: g,
            energy: g,
            delta_u: g,
            ..Default::default()
        }
    }

    #[test]
    fn columns_round_trip() {
        let mut r = rec(1.5, 2.0);
        r.k_max = 3.0;
        let back = DiagnosticsRecord::from_values(&r.values()).unwrap();
        assert_eq!(back, r);
        assert_eq!(DiagnosticsRecord::COLUMNS.len(), r.values().len());
        assert_eq!(r.get("k_max"), Some(3.0));
    }

    #[test]
    fn functional_parsing() {
        assert_eq!(Functional::parse("energy").unwrap(), Functional::Energy);
        let f = Functional::parse("2*energy + 0.5*grad_temp_sq").unwrap();
        let r = DiagnosticsRecord {
            energy: 1.0,
            grad_temp_sq: 4.0,
            ..Default::default()
        };
        assert_eq!(f.eval(&r), 4.0);
        assert!(Functional::parse("nonsense").is_err());
    }

    #[test]
    fn running_mean_matches_batch() {
        let recs: Vec<_> = (0..100).map(|i| rec(i as f64, (i as f64 * 0.37).sin())).collect();
        let mut avg = FunctionalAverage::new(Functional::Energy, 10.0, 80.0);
        for r in &recs {
            avg.push(r);
        }
        let batch = time_average(&recs, &Functional::Energy, (10.0, 80.0), LimitStyle::Plain).unwrap();
        assert!((avg.mean().unwrap() - batch).abs() < 1e-12);
        assert_eq!(avg.count(), 71);
    }

    #[test]
    fn averages_of_constants() {
        let recs: Vec<_> = (0..20).map(|i| rec(i as f64, 2.5)).collect();
        for style in [LimitStyle::Plain, LimitStyle::TailWeighted] {
            let a = time_average(&recs, &Functional::Energy, (0.0, 19.0), style).unwrap();
            assert!((a - 2.5).abs() < 1e-14);
        }
        assert!(time_average(&recs, &Functional::Energy, (30.0, 40.0), LimitStyle::Plain).is_err());
    }

    #[test]
    fn identical_runs_agree() {
        let recs: Vec<_> = (0..40).map(|i| rec(i as f64, 1.0 + (i as f64).cos() * 0.1)).collect();
        let r = absorbing_ball_report(&recs, &recs, &BallCriteria::default()).unwrap();
        assert!(r.agree && r.bounded);
        assert_eq!(r.rel_diff, 0.0);
        assert!(absorbing_ball_report(&recs[..2], &recs, &BallCriteria::default()).is_err());
    }

    #[test]
    fn delta_scaling_degenerate_and_linear() {
        let zero: Vec<_> = (0..10).map(|i| rec(i as f64, 0.0)).collect();
        assert_eq!(delta_scaling_report(&zero, &zero, 0.5).unwrap().exponent, None);
        let a: Vec<_> = (0..10).map(|i| rec(i as f64, 0.2)).collect();
        let b: Vec<_> = (0..10).map(|i| rec(i as f64, 0.1)).collect();
        let e = delta_scaling_report(&a, &b, 0.5).unwrap().exponent.unwrap();
        assert!((e - 1.0).abs() < 1e-14);
    }

    #[test]
    fn plateau_flags_trends() {
        let t: Vec<f64> = (0..200).map(|i| i as f64).collect();
        let flat: Vec<f64> = t.iter().map(|x| 5.0 + 0.1 * (x * 0.7).sin()).collect();
        assert!(plateau_report(&t, &flat, 10, 0.2).unwrap().passes);
        let up: Vec<f64> = t.iter().map(|x| 5.0 + 0.004 * x).collect();
        assert!(!plateau_report(&t, &up, 10, 0.2).unwrap().passes);
        let c = vec![3.0; 200];
        assert!(plateau_report(&t, &c, 10, 0.2).unwrap().passes);
    }
}
