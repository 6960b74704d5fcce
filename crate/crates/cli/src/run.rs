//! Run orchestration: startup checks, the stepping loop with its outputs,
//! timestep sweeps, and post-processing.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ddc_core::diagnostics::{
    delta_scaling_report, record, tail, time_average, DiagnosticsRecord, Functional, LimitStyle,
};
use ddc_core::gstability::measured_c0;
use ddc_core::initial::{lifted_zero_state, random_state};
use ddc_core::lifting::{auto_epsilon, build_lifting};
use ddc_core::stepper::{run as step_loop, RunHooks, RunOptions};
use ddc_core::{Grid, Lifting, Params, State, Stepper};

use crate::config::{EpsilonChoice, InitialKind, RunConfig};
use crate::csv::CsvWriter;
use crate::error::{CliError, CliResult};
use crate::snapshot::Snapshot;

pub fn build_lift(cfg: &RunConfig, grid: &Grid) -> CliResult<Lifting> {
    let lift = match cfg.epsilon {
        EpsilonChoice::Auto => auto_epsilon(grid, &cfg.flux, cfg.prandtl, cfg.lewis_beta, &cfg.constants)?,
        EpsilonChoice::Fixed(e) => build_lifting(grid, &cfg.flux, e, cfg.prandtl, cfg.lewis_beta, &cfg.constants)?,
    };
    Ok(lift)
}

/// Everything needed to step, checked at startup.
pub struct Prepared {
    pub params: Params,
    pub grid: Grid,
    pub lift: Lifting,
    pub stepper: Stepper,
    /// Steps still to take to reach `t_end`.
    pub remaining: u64,
    /// Restriction evaluated on the starting levels.
    pub k_max: f64,
    pub warnings: Vec<String>,
}

pub fn prepare(cfg: &RunConfig) -> CliResult<Prepared> {
    cfg.validate()?;
    let params = cfg.params()?;
    let grid = params.grid()?;
    let lift = build_lift(cfg, &grid)?;
    let total = cfg.n_steps()?;
    let (stepper, done) = match &cfg.ic {
        InitialKind::Zero => (Stepper::start(&params, &lift, lifted_zero_state(&grid, &lift)?)?, 1),
        InitialKind::Random(a) => (Stepper::start(&params, &lift, random_state(&grid, &lift, *a, cfg.seed)?)?, 1),
        InitialKind::File(path) => {
            let mut levels = Snapshot::read(path)?.into_levels(&grid, cfg.dt)?;
            if levels.len() == 2 {
                let curr = levels.pop().unwrap_or_else(|| State::zeros(&grid));
                let prev = levels.pop().unwrap_or_else(|| State::zeros(&grid));
                let done = curr.step;
                (Stepper::from_levels(&params, &lift, prev, curr)?, done)
            } else {
                let u0 = levels.pop().unwrap_or_else(|| State::zeros(&grid));
                (Stepper::start(&params, &lift, u0)?, 1)
            }
        }
    };
    if done > total {
        return Err(CliError::config(
            None,
            format!("start level {done} already lies beyond t_end ({total} steps)"),
        ));
    }
    let rec = record(&grid, stepper.prev(), stepper.curr(), &lift, &params, &cfg.constants)?;
    let mut warnings = Vec::new();
    if cfg.dt > rec.k_max {
        let msg = format!("dt = {} exceeds the monitored restriction k_max = {:e}", cfg.dt, rec.k_max);
        if cfg.strict {
            return Err(CliError::Constraint(msg));
        }
        warnings.push(msg);
    }
    Ok(Prepared {
        params,
        grid,
        lift,
        stepper,
        remaining: total - done,
        k_max: rec.k_max,
        warnings,
    })
}

struct FileHooks {
    csv: CsvWriter,
    dir: PathBuf,
    failure: Option<CliError>,
}

impl FileHooks {
    fn keep<T>(&mut self, r: CliResult<T>) -> ddc_core::Result<()> {
        match r {
            Ok(_) => Ok(()),
            Err(e) => {
                self.failure = Some(e);
                Err(ddc_core::Error::Config("output failure".into()))
            }
        }
    }
}

impl RunHooks for FileHooks {
    fn record(&mut self, rec: &DiagnosticsRecord) -> ddc_core::Result<()> {
        let r = self.csv.push(rec);
        self.keep(r)
    }

    fn snapshot(&mut self, prev: &State, curr: &State) -> ddc_core::Result<()> {
        let path = self.dir.join(format!("snap_{:09}.ddc", curr.step));
        let r = Snapshot::from_levels(&[prev, curr]).write(&path);
        self.keep(r)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub steps: u64,
    pub epsilon: f64,
    pub k_max: f64,
    pub warnings: Vec<String>,
}

/// Runs the configured simulation, writing `config.txt`, `diagnostics.csv`,
/// periodic two-level snapshots and `final.ddc` into the output directory.
/// On blow-up the rows recorded so far are kept.
pub fn execute(cfg: &RunConfig) -> CliResult<RunSummary> {
    let mut prep = prepare(cfg)?;
    let dir = cfg.output_dir.clone();
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let cfg_path = dir.join("config.txt");
    std::fs::write(&cfg_path, cfg.to_text()).map_err(|e| CliError::io(&cfg_path, e))?;
    let csv = CsvWriter::create(&dir.join("diagnostics.csv"), &prep.lift, measured_c0(&prep.grid))?;
    let mut hooks = FileHooks {
        csv,
        dir: dir.clone(),
        failure: None,
    };
    let opts = RunOptions {
        diag_every: cfg.diag_every,
        snapshot_every: (cfg.snapshot_every > 0).then_some(cfg.snapshot_every),
    };
    let outcome = step_loop(&mut prep.stepper, &cfg.constants, prep.remaining, opts, &mut hooks);
    let FileHooks { csv, failure, .. } = hooks;
    csv.finish()?;
    if let Some(e) = failure {
        return Err(e);
    }
    outcome?;
    let s = &prep.stepper;
    Snapshot::from_levels(&[s.prev(), s.curr()]).write(&dir.join("final.ddc"))?;
    Ok(RunSummary {
        out_dir: dir,
        steps: prep.remaining,
        epsilon: prep.lift.epsilon,
        k_max: prep.k_max,
        warnings: prep.warnings,
    })
}

/// One member of a timestep sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepMember {
    pub dt: f64,
    pub dir: PathBuf,
    pub records: Vec<DiagnosticsRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub members: Vec<SweepMember>,
    /// Exponent `p` of `sup|dU|(k) / sup|dU|(k/2) = 2^p` for each
    /// consecutive pair, `None` when degenerate.
    pub exponents: Vec<Option<f64>>,
    /// Windowed averages per member, one entry per functional.
    pub averages: Vec<Vec<f64>>,
    pub functionals: Vec<String>,
    /// Whether successive differences of every average shrink.
    pub monotone: bool,
}

pub fn read_member(dir: &Path) -> CliResult<Vec<DiagnosticsRecord>> {
    crate::csv::read_records(&dir.join("diagnostics.csv"))
}

/// Runs the base config at each `dt`, in parallel, each into its own
/// directory under the output directory, and compares the results.
pub fn sweep_dt(
    base: &RunConfig,
    dts: &[f64],
    tail_fraction: f64,
    window: Option<(f64, f64)>,
    functionals: &[String],
) -> CliResult<SweepReport> {
    if dts.len() < 2 {
        return Err(CliError::config(None, "sweep-dt needs at least two timesteps"));
    }
    let configs: Vec<RunConfig> = dts
        .iter()
        .enumerate()
        .map(|(i, &dt)| {
            let mut c = base.clone();
            c.dt = dt;
            c.output_dir = base.output_dir.join(format!("dt_{i}"));
            // keep recording at the same physical times
            let ratio = base.dt / dt;
            c.diag_every = ((base.diag_every as f64) * ratio).round().max(1.0) as u64;
            c.snapshot_every = 0;
            c
        })
        .collect();
    for c in &configs {
        c.validate()?;
    }
    let results: Vec<CliResult<RunSummary>> = std::thread::scope(|s| {
        let handles: Vec<_> = configs.iter().map(|c| s.spawn(move || execute(c))).collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(CliError::CheckFailed("member thread panicked".into()))))
            .collect()
    });
    let mut members = Vec::new();
    for (c, r) in configs.iter().zip(results) {
        r?;
        members.push(SweepMember {
            dt: c.dt,
            dir: c.output_dir.clone(),
            records: read_member(&c.output_dir)?,
        });
    }
    sweep_analysis(members, tail_fraction, window, functionals)
}

pub fn sweep_analysis(
    members: Vec<SweepMember>,
    tail_fraction: f64,
    window: Option<(f64, f64)>,
    functionals: &[String],
) -> CliResult<SweepReport> {
    let mut exponents = Vec::new();
    for w in members.windows(2) {
        exponents.push(delta_scaling_report(&w[0].records, &w[1].records, tail_fraction)?.exponent);
    }
    let parsed = functionals
        .iter()
        .map(|f| Functional::parse(f))
        .collect::<ddc_core::Result<Vec<_>>>()?;
    let mut averages = Vec::new();
    for m in &members {
        let win = match window {
            Some(w) => w,
            None => {
                let t = tail(&m.records, tail_fraction)?;
                (t[0].t, t[t.len() - 1].t)
            }
        };
        averages.push(
            parsed
                .iter()
                .map(|f| time_average(&m.records, f, win, LimitStyle::Plain))
                .collect::<ddc_core::Result<Vec<f64>>>()?,
        );
    }
    let monotone = (0..parsed.len()).all(|j| {
        let diffs: Vec<f64> = averages.windows(2).map(|w| (w[1][j] - w[0][j]).abs()).collect();
        diffs.windows(2).all(|d| d[1] < d[0])
    });
    Ok(SweepReport {
        members,
        exponents,
        averages,
        functionals: functionals.to_vec(),
        monotone,
    })
}

impl SweepReport {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = write!(s, "{:>14}", "dt");
        for f in &self.functionals {
            let _ = write!(s, " {f:>24}");
        }
        s.push('\n');
        for (m, a) in self.members.iter().zip(&self.averages) {
            let _ = write!(s, "{:>14e}", m.dt);
            for v in a {
                let _ = write!(s, " {v:>24.16e}");
            }
            let _ = writeln!(s, "   {}", m.dir.display());
        }
        for (i, e) in self.exponents.iter().enumerate() {
            match e {
                Some(p) => {
                    let _ = writeln!(s, "delta exponent {i}->{}: {p:.4}", i + 1);
                }
                None => {
                    let _ = writeln!(s, "delta exponent {i}->{}: degenerate", i + 1);
                }
            }
        }
        let _ = writeln!(s, "successive differences shrink: {}", self.monotone);
        s
    }
}

/// Windowed statistics of one functional over a diagnostics CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct StatsReport {
    pub functional: String,
    pub window: (f64, f64),
    pub count: u64,
    pub mean: f64,
    pub variance: f64,
    pub tail_weighted: f64,
}

pub fn stats(path: &Path, functional: &str, window: Option<(f64, f64)>) -> CliResult<StatsReport> {
    let records = crate::csv::read_records(path)?;
    if records.is_empty() {
        return Err(CliError::config(None, format!("{} holds no rows", path.display())));
    }
    let f = Functional::parse(functional)?;
    let win = window.unwrap_or((records[0].t, records[records.len() - 1].t));
    let mut acc = ddc_core::diagnostics::FunctionalAverage::new(f.clone(), win.0, win.1);
    for r in &records {
        acc.push(r);
    }
    let mean = acc
        .mean()
        .ok_or_else(|| CliError::config(None, format!("no rows in window [{}, {}]", win.0, win.1)))?;
    Ok(StatsReport {
        functional: functional.to_string(),
        window: win,
        count: acc.count(),
        mean,
        variance: acc.variance().unwrap_or(0.0),
        tail_weighted: time_average(&records, &f, win, LimitStyle::TailWeighted)?,
    })
}

pub fn lifting_report(cfg: &RunConfig) -> CliResult<String> {
    cfg.validate()?;
    let grid = cfg.params()?.grid()?;
    let lift = build_lift(cfg, &grid)?;
    let n = &lift.norms;
    let m = &lift.margins;
    let mut s = String::new();
    let _ = writeln!(s, "epsilon        {:.16e}", lift.epsilon);
    for (name, v) in [
        ("omega_l2", n.omega_l2),
        ("omega_h1", n.omega_h1),
        ("omega_lap", n.omega_lap),
        ("omega_inf", n.omega_inf),
        ("grad_psi_inf", n.grad_psi_inf),
        ("tq_l2", n.tq_l2),
        ("tq_h1", n.tq_h1),
        ("tq_lap", n.tq_lap),
        ("sq_l2", n.sq_l2),
        ("sq_h1", n.sq_h1),
        ("sq_lap", n.sq_lap),
        ("qu_wall", n.qu_wall),
        ("qt_wall", n.qt_wall),
        ("qs_wall", n.qs_wall),
    ] {
        let _ = writeln!(s, "{name:<14} {v:.16e}");
    }
    for (name, v) in [("margin_omega", m.omega), ("margin_temp", m.temp), ("margin_salt", m.salt)] {
        let _ = writeln!(s, "{name:<14} {v:.16e}  {}", if v <= 1.0 { "ok" } else { "VIOLATED" });
    }
    let _ = writeln!(s, "c0_measured    {:.16e}  (configured c0 = {})", measured_c0(&grid), cfg.constants.c0);
    Ok(s)
}
