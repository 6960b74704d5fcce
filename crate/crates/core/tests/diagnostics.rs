use ddc_core::diagnostics::{
    absorbing_ball_report, delta_scaling_report, plateau_report, record, tail, time_average, BallCriteria,
    DiagnosticsRecord, Functional, FunctionalAverage, LimitStyle,
};
use ddc_core::initial::random_state;
use ddc_core::lifting::{auto_epsilon, construct_lifting};
use ddc_core::stepper::{run, Collector, RunOptions};
use ddc_core::{BoundaryFlux, ConstantsConfig, Field, FourierMode, Grid, Lifting, Params, State, Stepper};

fn flux() -> BoundaryFlux {
    BoundaryFlux {
        qu: vec![FourierMode { m: 1, a: 0.3, b: 0.0 }],
        qt: vec![FourierMode { m: 1, a: 2.0, b: 0.5 }],
        qs: vec![FourierMode { m: 2, a: -1.0, b: 0.0 }],
    }
}

/// Trapezoid-in-z, rectangle-in-x inner product written out directly.
fn inner(grid: &Grid, f: &Field, g: &Field) -> f64 {
    let mut s = 0.0;
    for i in 0..grid.nx() {
        for j in 0..=grid.nz() {
            let w = if j == 0 || j == grid.nz() { 0.5 } else { 1.0 };
            s += w * f.get(i, j) * g.get(i, j);
        }
    }
    s * grid.dx() * grid.dz()
}

fn gform(grid: &Grid, f: &Field, g: &Field, nk: f64) -> f64 {
    0.5 * inner(grid, f, f) + 0.5 * (5.0 + nk) * inner(grid, g, g) - 2.0 * inner(grid, f, g)
}

fn rec(t: f64, g: f64, du: f64) -> DiagnosticsRecord {
    DiagnosticsRecord {
        t,
        gnorm_sq: g,
        delta_u: du,
        energy: g,
        ..Default::default()
    }
}

#[test]
fn zero_state_without_forcing_reads_zero() {
    let grid = Grid::new(16, 8, 2.0).unwrap();
    let c = ConstantsConfig::default();
    let params = Params::new(1.0, 0.5, 2.0, 16, 8, 1e-3, &c).unwrap();
    let lift = Lifting::zero(&grid);
    let s = State::zeros(&grid);
    let r = record(&grid, &s, &s, &lift, &params, &c).unwrap();
    for (name, v) in DiagnosticsRecord::COLUMNS.iter().zip(r.values()) {
        match *name {
            "k_max" => assert_eq!(v, 1.0 / c.nu(1.0, 0.5)),
            "k_ratio" => assert_eq!(v, 1e-3 * c.nu(1.0, 0.5)),
            _ => assert_eq!(v, 0.0, "{name}"),
        }
    }
}

#[test]
fn state_equal_to_lifting_has_zero_shifted_measures() {
    let grid = Grid::new(32, 16, 2.0).unwrap();
    let c = ConstantsConfig::default();
    let params = Params::new(2.0, 0.5, 2.0, 32, 16, 1e-3, &c).unwrap();
    let lift = construct_lifting(&grid, &flux(), 0.25, 2.0, 0.5, &c).unwrap();
    let s = State {
        omega: lift.omega.clone(),
        temp: lift.tq.clone(),
        salt: lift.sq.clone(),
        psi: lift.psi.clone(),
        step: 1,
        time: 1e-3,
    };
    let r = record(&grid, &s, &s, &lift, &params, &c).unwrap();
    assert_eq!(r.gnorm_sq, 0.0);
    assert_eq!(r.omega_hat_h1, 0.0);
    assert_eq!(r.temp_hat_h1, 0.0);
    assert_eq!(r.delta_u, 0.0);
    assert_eq!(r.h_half_sq, 0.0);
    assert!((r.omega_l2 - lift.norms.omega_l2).abs() < 1e-14);
    assert!((r.temp_l2 - lift.norms.tq_l2).abs() < 1e-14);
    assert!((r.temp_lap - lift.norms.tq_lap).abs() < 1e-12 * (1.0 + lift.norms.tq_lap));
    assert!((r.energy - 0.5 * grid.h1_seminorm_sq(&lift.psi).unwrap()).abs() < 1e-14);
    // the monitor bound is then pure forcing
    assert!(r.m_omega_bound > 0.0);
    assert!(r.k_max > 0.0 && (r.k_ratio - 1e-3 / r.k_max).abs() < 1e-15);
}

#[test]
fn gnorm_column_reassembles_from_inner_products() {
    let grid = Grid::new(32, 16, 2.0).unwrap();
    let c = ConstantsConfig { c0: 0.7, ..Default::default() };
    let (p, beta) = (2.0, 0.5);
    let params = Params::new(p, beta, 2.0, 32, 16, 1e-2, &c).unwrap();
    let lift = construct_lifting(&grid, &flux(), 0.25, p, beta, &c).unwrap();
    let a = random_state(&grid, &lift, 1.0, 3).unwrap();
    let mut b = random_state(&grid, &lift, 0.5, 4).unwrap();
    b.step = 1;
    b.time = 1e-2;
    let r = record(&grid, &a, &b, &lift, &params, &c).unwrap();
    let nk = c.nu(p, beta) * 1e-2;
    let w = 16.0 * p * c.c0;
    let d = |x: &Field, y: &Field| x - y;
    let want = gform(&grid, &d(&a.omega, &lift.omega), &d(&b.omega, &lift.omega), nk)
        + w * gform(&grid, &d(&a.temp, &lift.tq), &d(&b.temp, &lift.tq), nk)
        + w / beta * gform(&grid, &d(&a.salt, &lift.sq), &d(&b.salt, &lift.sq), nk);
    assert!((r.gnorm_sq - want).abs() < 1e-12 * want, "{} vs {want}", r.gnorm_sq);
    let du = (inner(&grid, &d(&b.omega, &a.omega), &d(&b.omega, &a.omega))
        + inner(&grid, &d(&b.temp, &a.temp), &d(&b.temp, &a.temp))
        + inner(&grid, &d(&b.salt, &a.salt), &d(&b.salt, &a.salt)))
    .sqrt();
    assert!((r.delta_u - du).abs() < 1e-12 * du);
    let wall: f64 = (0..32).map(|i| lift.qt_top[i] * b.temp.get(i, 16)).sum::<f64>() * grid.dx();
    assert!((r.wall_heat_flux - wall).abs() < 1e-12 * (1.0 + wall.abs()));
}

#[test]
fn unforced_run_decays() {
    let grid = Grid::new(32, 16, 2.0).unwrap();
    let c = ConstantsConfig::default();
    let params = Params::new(1.0, 1.0, 2.0, 32, 16, 1e-2, &c).unwrap();
    let lift = Lifting::zero(&grid);
    let u0 = random_state(&grid, &lift, 0.1, 5).unwrap();
    let mut st = Stepper::start(&params, &lift, u0).unwrap();
    let mut col = Collector::default();
    run(&mut st, &c, 300, RunOptions { diag_every: 10, snapshot_every: None }, &mut col).unwrap();
    let recs = &col.records;
    let first = recs[1].gnorm_sq;
    let last = recs[recs.len() - 1].gnorm_sq;
    assert!(last < 1e-4 * first, "{first} -> {last}");
    for w in recs[1..].windows(2) {
        assert!(w[1].gnorm_sq <= w[0].gnorm_sq * (1.0 + 1e-9));
    }
}

#[test]
fn auto_epsilon_run_enters_a_ball() {
    let grid = Grid::new(32, 16, 2.0).unwrap();
    let c = ConstantsConfig::default();
    let params = Params::new(1.0, 1.0, 2.0, 32, 16, 1e-2, &c).unwrap();
    let lift = auto_epsilon(&grid, &flux(), 1.0, 1.0, &c).unwrap();
    let mut out = Vec::new();
    for amp in [1.0, 10.0] {
        let u0 = random_state(&grid, &lift, amp, 1).unwrap();
        let mut st = Stepper::start(&params, &lift, u0).unwrap();
        let mut col = Collector::default();
        run(&mut st, &c, 2000, RunOptions { diag_every: 20, snapshot_every: None }, &mut col).unwrap();
        out.push(col.records);
    }
    let rep = absorbing_ball_report(&out[0], &out[1], &BallCriteria::default()).unwrap();
    assert!(rep.agree && rep.bounded, "{rep:?}");
    let same = absorbing_ball_report(&out[0], &out[0], &BallCriteria::default()).unwrap();
    assert_eq!(same.sup_a, same.sup_b);
    // stationarity: averages over [t0, 2 t0] and [t0, 4 t0] agree
    let f = Functional::Energy;
    let a = time_average(&out[0], &f, (5.0, 10.0), LimitStyle::Plain).unwrap();
    let b = time_average(&out[0], &f, (5.0, 20.0), LimitStyle::Plain).unwrap();
    assert!((a - b).abs() < 1e-3 * a.abs(), "{a} vs {b}");
}

#[test]
fn unforced_ball_shrinks_to_zero() {
    let grid = Grid::new(32, 16, 2.0).unwrap();
    let c = ConstantsConfig::default();
    let params = Params::new(1.0, 1.0, 2.0, 32, 16, 1e-2, &c).unwrap();
    let lift = Lifting::zero(&grid);
    let mut out = Vec::new();
    for amp in [1.0, 10.0] {
        let mut st = Stepper::start(&params, &lift, random_state(&grid, &lift, amp, 2).unwrap()).unwrap();
        let mut col = Collector::default();
        run(&mut st, &c, 2000, RunOptions { diag_every: 20, snapshot_every: None }, &mut col).unwrap();
        out.push(col.records);
    }
    let rep = absorbing_ball_report(&out[0], &out[1], &BallCriteria::default()).unwrap();
    assert!(rep.sup_a < 1e-10 * out[0][1].gnorm_sq && rep.sup_b < 1e-10 * out[1][1].gnorm_sq, "{rep:?}");
    let e = time_average(&out[0], &Functional::Energy, (15.0, 20.0), LimitStyle::Plain).unwrap();
    assert!(e < 1e-12 * out[0][1].energy);
}

#[test]
fn functional_averages_agree() {
    let recs: Vec<_> = (0..200).map(|i| rec(i as f64 * 0.1, (i as f64 * 0.3).sin() + 2.0, 0.0)).collect();
    let f = Functional::parse("energy").unwrap();
    let mut acc = FunctionalAverage::new(f.clone(), 5.0, 15.0);
    recs.iter().for_each(|r| acc.push(r));
    let batch = time_average(&recs, &f, (5.0, 15.0), LimitStyle::Plain).unwrap();
    assert!((acc.mean().unwrap() - batch).abs() < 1e-14);
    assert_eq!(acc.count(), recs.iter().filter(|r| r.t >= 5.0 && r.t <= 15.0).count() as u64);
    let inside: Vec<f64> = recs.iter().filter(|r| r.t >= 5.0 && r.t <= 15.0).map(|r| r.energy).collect();
    let m = inside.iter().sum::<f64>() / inside.len() as f64;
    let var = inside.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (inside.len() - 1) as f64;
    assert!((acc.variance().unwrap() - var).abs() < 1e-12);

    let combo = Functional::parse("2*energy + -1*gnorm_sq").unwrap();
    assert!((combo.eval(&recs[7]) - recs[7].energy).abs() < 1e-15);
    assert!(Functional::parse("nonsense").is_err());
}

#[test]
fn constant_functional_has_constant_limits() {
    let recs: Vec<_> = (0..50).map(|i| rec(i as f64, 3.25, 0.0)).collect();
    let f = Functional::Energy;
    for style in [LimitStyle::Plain, LimitStyle::TailWeighted] {
        assert!((time_average(&recs, &f, (10.0, 40.0), style).unwrap() - 3.25).abs() < 1e-15);
    }
    assert!(time_average(&recs, &f, (100.0, 200.0), LimitStyle::Plain).is_err());
    let t: Vec<f64> = recs.iter().map(|r| r.t).collect();
    let v: Vec<f64> = recs.iter().map(|r| r.energy).collect();
    let p = plateau_report(&t, &v, 5, 0.2).unwrap();
    assert!(p.passes && p.slope_t == 0.0 && p.rel_variation == 0.0);
}

#[test]
fn trending_series_fails_the_plateau_check() {
    let t: Vec<f64> = (0..100).map(|i| i as f64).collect();
    let v: Vec<f64> = t.iter().map(|x| 10.0 + 0.01 * x).collect();
    let p = plateau_report(&t, &v, 5, 0.2).unwrap();
    assert!(p.rel_variation < 0.2);
    assert!(!p.passes, "{p:?}");
    let noisy: Vec<f64> = t.iter().map(|x| 10.0 + (x * 1.7).sin()).collect();
    assert!(plateau_report(&t, &noisy, 5, 0.3).unwrap().passes);
}

#[test]
fn delta_scaling_reads_exponent() {
    let mk = |k: f64| -> Vec<DiagnosticsRecord> { (0..40).map(|i| rec(i as f64, 1.0, 3.0 * k * k)).collect() };
    let s = delta_scaling_report(&mk(0.1), &mk(0.05), 0.25).unwrap();
    assert!((s.exponent.unwrap() - 2.0).abs() < 1e-12);
    let z = delta_scaling_report(&mk(0.0), &mk(0.0), 0.25).unwrap();
    assert_eq!(z.exponent, None);
}

#[test]
fn ball_report_flags_disagreement_and_excursions() {
    let a: Vec<_> = (0..100).map(|i| rec(i as f64, 1.0 + 50.0 * (-(i as f64)).exp(), 0.0)).collect();
    let b: Vec<_> = (0..100).map(|i| rec(i as f64, 1.05, 0.0)).collect();
    let ok = absorbing_ball_report(&a, &b, &BallCriteria::default()).unwrap();
    assert!(ok.agree && ok.bounded);
    let far: Vec<_> = (0..100).map(|i| rec(i as f64, 2.0, 0.0)).collect();
    assert!(!absorbing_ball_report(&a, &far, &BallCriteria::default()).unwrap().agree);
    let mut spike = b.clone();
    spike[50].gnorm_sq = 1e4;
    assert!(!absorbing_ball_report(&a, &spike, &BallCriteria::default()).unwrap().bounded);
    assert_eq!(tail(&b, 0.25).unwrap().first().unwrap().t, 75.0);
}
