//! Self-check suites behind `gstab-check` and `validate-nse`.

use std::fmt::Write as _;

use ddc_core::gstability::{equivalence_constants, geometric_growth_bound, hs_identity_residual, recursion_bound};
use ddc_core::nse2d::{convergence_study, idd1_residual, idd2_residual, taylor_green};
use ddc_core::{Field, FieldKind, Grid, L2Space, PeriodicGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::CliResult;

/// Outcome of one named check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub name: String,
    pub value: f64,
    pub limit: String,
    pub pass: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CheckReport {
    pub lines: Vec<CheckLine>,
}

impl CheckReport {
    fn push(&mut self, name: &str, value: f64, limit: String, pass: bool) {
        self.lines.push(CheckLine {
            name: name.to_string(),
            value,
            limit,
            pass,
        });
    }

    pub fn passed(&self) -> bool {
        self.lines.iter().all(|l| l.pass)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for l in &self.lines {
            let _ = writeln!(
                s,
                "{} {:<32} {:>24.16e}  ({})",
                if l.pass { "PASS" } else { "FAIL" },
                l.name,
                l.value,
                l.limit
            );
        }
        s
    }
}

fn random_channel_field(grid: &Grid, rng: &mut ChaCha8Rng) -> Field {
    let v = (0..grid.nx() * grid.nz_layers()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Field::from_values(grid.nx(), grid.nz_layers(), FieldKind::None, v).expect("sizes agree")
}

fn random_periodic_field(grid: &PeriodicGrid, rng: &mut ChaCha8Rng) -> Field {
    grid.field_from_fn(|_, _| rng.gen_range(-1.0..1.0))
}

#[derive(Debug, Clone, Copy)]
pub struct GstabOptions {
    pub samples: usize,
    pub grid_n: usize,
    pub trajectories: usize,
    pub seed: u64,
}

impl Default for GstabOptions {
    fn default() -> Self {
        Self {
            samples: 1000,
            grid_n: 64,
            trajectories: 1000,
            seed: 0,
        }
    }
}

/// Trajectory satisfying the recursion hypothesis, with random slack.
/// Returns `(x, y, r, mu, delta, eps)`; `x[0]` is unused.
pub fn synth_recursion(
    rng: &mut ChaCha8Rng,
    len: usize,
) -> (Vec<f64>, Vec<f64>, Vec<f64>, f64, f64, f64) {
    let mu = rng.gen_range(0.1..10.0);
    let delta = rng.gen_range(1e-3..1.0);
    let eps = mu / 8.0 * rng.gen_range(0.0..1.0f64).max(1e-3);
    let q = 1.0 / (1.0 + delta);
    let mut y: Vec<f64> = (0..=len).map(|_| rng.gen_range(0.0..5.0)).collect();
    let r: Vec<f64> = (0..len).map(|_| rng.gen_range(0.0..1.0)).collect();
    let mut x = vec![0.0; len + 1];
    x[1] = rng.gen_range(0.0..10.0);
    for n in 1..len {
        // x_{n+1} + mu y_{n+1} <= q x_n + eps (y_n + y_{n-1}) + r_n
        let cap = q * x[n] + eps * (y[n] + y[n - 1]) + r[n - 1];
        y[n + 1] = y[n + 1].min(cap / mu);
        x[n + 1] = (cap - mu * y[n + 1]) * (1.0 - 0.1 * rng.gen_range(0.0..1.0));
    }
    (x, y, r, mu, delta, eps)
}

pub fn gstab_suite(opts: &GstabOptions) -> CliResult<CheckReport> {
    let mut rep = CheckReport::default();
    let grid_nk: Vec<f64> = (0..=100).map(|i| i as f64 * 0.01).collect();
    let (lo, hi) = equivalence_constants(&grid_nk)?;
    let lo_ref = (6.0 - 32f64.sqrt()) / 4.0;
    let hi_ref = (7.0 + 41f64.sqrt()) / 4.0;
    rep.push("equivalence lower constant", lo, format!("{lo_ref:.16e} within 1e-12"), (lo - lo_ref).abs() < 1e-12);
    rep.push("equivalence upper constant", hi, format!("{hi_ref:.16e} within 1e-12"), (hi - hi_ref).abs() < 1e-12);

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let n = opts.grid_n.max(8);
    let grid = Grid::new(n + n % 2, n, 1.0)?;
    let mut worst: f64 = 0.0;
    for _ in 0..opts.samples {
        let f = random_channel_field(&grid, &mut rng);
        let g = random_channel_field(&grid, &mut rng);
        let h = random_channel_field(&grid, &mut rng);
        let nk = rng.gen_range(0.0..=1.0);
        let scale = grid.norm_sq(&f)? + grid.norm_sq(&g)? + grid.norm_sq(&h)?;
        worst = worst.max(hs_identity_residual(&grid, &f, &g, &h, nk)? / scale);
    }
    rep.push("two-step identity relative residual", worst, "< 1e-12".into(), worst < 1e-12);

    let mut violations = 0usize;
    let mut growth_violations = 0usize;
    for _ in 0..opts.trajectories {
        let len = rng.gen_range(2..200);
        let (x, y, r, mu, delta, eps) = synth_recursion(&mut rng, len);
        for m in 1..len {
            let bound = recursion_bound(x[1], y[1], y[0], mu, delta, eps, &r, m)?;
            if x[m + 1] + mu * y[m + 1] > bound * (1.0 + 1e-12) + 1e-12 {
                violations += 1;
            }
        }
        let b = rng.gen_range(1e-4..0.5);
        let rg: Vec<f64> = (0..len).map(|_| rng.gen_range(0.0..1.0)).collect();
        let mut xs = vec![rng.gen_range(0.0..10.0)];
        for j in 0..len {
            let next = (1.0 + b) * xs[j] + rg[j];
            xs.push(next * rng.gen_range(0.0..=1.0));
        }
        for m in 0..=len {
            let bound = geometric_growth_bound(xs[0], b, &rg, m)?;
            if xs[m] > bound * (1.0 + 1e-12) {
                growth_violations += 1;
            }
        }
    }
    rep.push("recursion bound violations", violations as f64, "= 0".into(), violations == 0);
    rep.push("growth bound violations", growth_violations as f64, "= 0".into(), growth_violations == 0);
    Ok(rep)
}

#[derive(Debug, Clone)]
pub struct NseOptions {
    pub n: usize,
    pub mu: f64,
    pub t_end: f64,
    pub ks: Vec<f64>,
    pub order_range: (f64, f64),
    pub samples: usize,
    pub seed: u64,
}

impl Default for NseOptions {
    fn default() -> Self {
        Self {
            n: 64,
            mu: 1.0,
            t_end: 0.5,
            ks: vec![1e-2, 5e-3, 2.5e-3],
            order_range: (1.9, 2.1),
            samples: 100,
            seed: 0,
        }
    }
}

pub fn nse_suite(opts: &NseOptions) -> CliResult<CheckReport> {
    let mut rep = CheckReport::default();
    let grid = PeriodicGrid::standard(opts.n)?;
    let mu = opts.mu;
    let study = convergence_study(&grid, mu, &grid.zeros(), &opts.ks, opts.t_end, &|t| taylor_green(&grid, mu, t))?;
    for (k, e) in study.ks.iter().zip(&study.errors) {
        rep.push(&format!("error at k = {k:e}"), *e, "reported".into(), e.is_finite());
    }
    let (lo, hi) = opts.order_range;
    rep.push(
        "temporal order",
        study.order,
        format!("in [{lo}, {hi}]"),
        study.order >= lo && study.order <= hi,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let (mut w1, mut w2): (f64, f64) = (0.0, 0.0);
    for _ in 0..opts.samples {
        let a = random_periodic_field(&grid, &mut rng);
        let b = random_periodic_field(&grid, &mut rng);
        let s1 = grid.l2_norm(&a)?.powi(2) + grid.l2_norm(&b)?.powi(2);
        let s2 = grid.h1_seminorm_sq(&a)? + grid.h1_seminorm_sq(&b)?;
        w1 = w1.max(idd1_residual(&grid, &a, &b)? / s1);
        w2 = w2.max(idd2_residual(&grid, &a, &b)? / s2);
    }
    rep.push("BDF2 inner-product identity", w1, "< 1e-12 relative".into(), w1 < 1e-12);
    rep.push("Laplacian difference identity", w2, "< 1e-12 relative".into(), w2 < 1e-12);
    Ok(rep)
}
