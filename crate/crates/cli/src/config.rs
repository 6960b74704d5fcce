//! Flat `key = value` run configuration.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ddc_core::{BoundaryFlux, ConstantsConfig, FourierMode, Params};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub enum InitialKind {
    Zero,
    Random(f64),
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsilonChoice {
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub prandtl: f64,
    pub lewis_beta: f64,
    pub aspect_xi: f64,
    pub nx: usize,
    pub nz: usize,
    pub dt: f64,
    pub t_end: f64,
    pub seed: u64,
    pub ic: InitialKind,
    pub flux: BoundaryFlux,
    pub epsilon: EpsilonChoice,
    pub constants: ConstantsConfig,
    pub output_dir: PathBuf,
    /// Zero disables snapshots.
    pub snapshot_every: u64,
    pub diag_every: u64,
    /// Refuse to run when `dt` exceeds the monitored restriction.
    pub strict: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            prandtl: 1.0,
            lewis_beta: 1.0,
            aspect_xi: 2.0,
            nx: 64,
            nz: 32,
            dt: 1e-3,
            t_end: 1.0,
            seed: 0,
            ic: InitialKind::Zero,
            flux: BoundaryFlux::zero(),
            epsilon: EpsilonChoice::Auto,
            constants: ConstantsConfig::default(),
            output_dir: PathBuf::from("out"),
            snapshot_every: 0,
            diag_every: 1,
            strict: false,
        }
    }
}

fn parse_f64(line: usize, key: &str, v: &str) -> CliResult<f64> {
    let x: f64 = v
        .parse()
        .map_err(|_| CliError::config(Some(line), format!("{key}: cannot parse '{v}' as a number")))?;
    if !x.is_finite() {
        return Err(CliError::config(Some(line), format!("{key}: value must be finite")));
    }
    Ok(x)
}

fn parse_u64(line: usize, key: &str, v: &str) -> CliResult<u64> {
    v.parse()
        .map_err(|_| CliError::config(Some(line), format!("{key}: cannot parse '{v}' as a nonnegative integer")))
}

fn parse_bool(line: usize, key: &str, v: &str) -> CliResult<bool> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(CliError::config(Some(line), format!("{key}: expected true or false, got '{v}'"))),
    }
}

fn parse_ic(line: usize, v: &str) -> CliResult<InitialKind> {
    let inner = |prefix: &str| v.strip_prefix(prefix).and_then(|r| r.strip_suffix(')')).map(str::trim);
    if v == "zero" {
        Ok(InitialKind::Zero)
    } else if let Some(a) = inner("random(") {
        let amp = parse_f64(line, "ic.kind", a)?;
        if amp < 0.0 {
            return Err(CliError::config(Some(line), "ic.kind: random amplitude must be nonnegative"));
        }
        Ok(InitialKind::Random(amp))
    } else if let Some(p) = inner("file(") {
        if p.is_empty() {
            return Err(CliError::config(Some(line), "ic.kind: empty file path"));
        }
        Ok(InitialKind::File(PathBuf::from(p)))
    } else {
        Err(CliError::config(
            Some(line),
            format!("ic.kind: expected zero, random(amplitude) or file(path), got '{v}'"),
        ))
    }
}

fn flux_modes<'a>(flux: &'a mut BoundaryFlux, which: &str) -> Option<&'a mut Vec<FourierMode>> {
    match which {
        "qu" => Some(&mut flux.qu),
        "qt" => Some(&mut flux.qt),
        "qs" => Some(&mut flux.qs),
        _ => None,
    }
}

impl RunConfig {
    /// Parses and validates configuration text. Errors carry the line of
    /// the offending key.
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut cfg = RunConfig::default();
        let mut lines: HashMap<&'static str, usize> = HashMap::new();
        let mut seen: HashMap<String, usize> = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| CliError::config(Some(line), format!("expected 'key = value', got '{content}'")))?;
            let repeatable = key.starts_with("flux.");
            if !repeatable {
                if let Some(prev) = seen.insert(key.to_string(), line) {
                    return Err(CliError::config(Some(line), format!("{key} already set at line {prev}")));
                }
            }
            macro_rules! num {
                ($field:expr, $name:literal) => {{
                    $field = parse_f64(line, key, value)?;
                    lines.insert($name, line);
                }};
            }
            match key {
                "prandtl" => num!(cfg.prandtl, "prandtl"),
                "lewis_beta" => num!(cfg.lewis_beta, "lewis_beta"),
                "aspect_xi" => num!(cfg.aspect_xi, "aspect_xi"),
                "dt" => num!(cfg.dt, "dt"),
                "t_end" => num!(cfg.t_end, "t_end"),
                "nx" => {
                    cfg.nx = parse_u64(line, key, value)? as usize;
                    lines.insert("nx", line);
                }
                "nz" => {
                    cfg.nz = parse_u64(line, key, value)? as usize;
                    lines.insert("nz", line);
                }
                "seed" => cfg.seed = parse_u64(line, key, value)?,
                "ic.kind" => {
                    cfg.ic = parse_ic(line, value)?;
                    lines.insert("ic.kind", line);
                }
                "lifting.epsilon" => {
                    cfg.epsilon = if value == "auto" {
                        EpsilonChoice::Auto
                    } else {
                        let e = parse_f64(line, key, value)?;
                        if e <= 0.0 || e > 1.0 {
                            return Err(CliError::config(Some(line), "lifting.epsilon must lie in (0, 1]"));
                        }
                        EpsilonChoice::Fixed(e)
                    };
                }
                "constants.c0" => num!(cfg.constants.c0, "constants"),
                "constants.c1" => num!(cfg.constants.c1, "constants"),
                "constants.c2" => num!(cfg.constants.c2, "constants"),
                "constants.c3" => num!(cfg.constants.c3, "constants"),
                "constants.c4" => num!(cfg.constants.c4, "constants"),
                "constants.c5" => num!(cfg.constants.c5, "constants"),
                "output.dir" => {
                    if value.is_empty() {
                        return Err(CliError::config(Some(line), "output.dir must not be empty"));
                    }
                    cfg.output_dir = PathBuf::from(value);
                }
                "snapshot.every_steps" => cfg.snapshot_every = parse_u64(line, key, value)?,
                "diag.every_steps" => {
                    cfg.diag_every = parse_u64(line, key, value)?;
                    if cfg.diag_every == 0 {
                        return Err(CliError::config(Some(line), "diag.every_steps must be at least 1"));
                    }
                }
                "strict" => cfg.strict = parse_bool(line, key, value)?,
                _ if repeatable => {
                    let mut parts = key.split('.').skip(1);
                    let (which, part) = (parts.next().unwrap_or(""), parts.next().unwrap_or(""));
                    let modes = match (flux_modes(&mut cfg.flux, which), parts.next()) {
                        (Some(m), None) => m,
                        _ => return Err(CliError::config(Some(line), format!("unknown key '{key}'"))),
                    };
                    match part {
                        "m" => {
                            let m = parse_u64(line, key, value)?;
                            let m = u32::try_from(m)
                                .map_err(|_| CliError::config(Some(line), format!("{key}: mode too large")))?;
                            modes.push(FourierMode { m, a: 0.0, b: 0.0 });
                        }
                        "a" | "b" => {
                            let x = parse_f64(line, key, value)?;
                            let last = modes.last_mut().ok_or_else(|| {
                                CliError::config(Some(line), format!("{key} given before flux.{which}.m"))
                            })?;
                            if part == "a" {
                                last.a = x;
                            } else {
                                last.b = x;
                            }
                        }
                        _ => return Err(CliError::config(Some(line), format!("unknown key '{key}'"))),
                    }
                    lines.insert("flux", line);
                }
                _ => return Err(CliError::config(Some(line), format!("unknown key '{key}'"))),
            }
        }
        cfg.validate_with(&lines)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    /// Cross-key checks, attributing failures to the line that set the key
    /// when there is one.
    fn validate_with(&self, lines: &HashMap<&'static str, usize>) -> CliResult<()> {
        let at = |k: &str| lines.get(k).copied();
        let wrap = |k: &str, e: ddc_core::Error| CliError::config(at(k), e.to_string());
        self.constants.validate().map_err(|e| wrap("constants", e))?;
        for (k, v) in [
            ("prandtl", self.prandtl),
            ("lewis_beta", self.lewis_beta),
            ("aspect_xi", self.aspect_xi),
            ("dt", self.dt),
            ("t_end", self.t_end),
        ] {
            if v <= 0.0 {
                return Err(CliError::config(at(k), format!("{k} must be positive")));
            }
        }
        let params = self.params().map_err(|e| {
            let key = if e.to_string().contains("nu * k") { "dt" } else if lines.contains_key("nz") { "nz" } else { "nx" };
            wrap(key, e)
        })?;
        let grid = params.grid().map_err(|e| wrap("nx", e))?;
        self.flux.validate(&grid).map_err(|e| wrap("flux", e))?;
        self.n_steps().map_err(|e| match e {
            CliError::Config { msg, .. } => CliError::config(at("t_end"), msg),
            other => other,
        })?;
        Ok(())
    }

    pub fn validate(&self) -> CliResult<()> {
        self.validate_with(&HashMap::new())
    }

    pub fn params(&self) -> ddc_core::Result<Params> {
        Params::new(
            self.prandtl,
            self.lewis_beta,
            self.aspect_xi,
            self.nx,
            self.nz,
            self.dt,
            &self.constants,
        )
    }

    /// `t_end / dt`, which must be a whole number.
    pub fn n_steps(&self) -> CliResult<u64> {
        let r = self.t_end / self.dt;
        let n = r.round();
        if n < 1.0 || (r - n).abs() > 1e-9 * n.max(1.0) {
            return Err(CliError::config(
                None,
                format!("t_end = {} is not a whole number of steps dt = {}", self.t_end, self.dt),
            ));
        }
        Ok(n as u64)
    }

    /// Canonical text form; parsing it gives back an identical config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let c = &self.constants;
        let _ = writeln!(s, "prandtl = {:?}", self.prandtl);
        let _ = writeln!(s, "lewis_beta = {:?}", self.lewis_beta);
        let _ = writeln!(s, "aspect_xi = {:?}", self.aspect_xi);
        let _ = writeln!(s, "nx = {}", self.nx);
        let _ = writeln!(s, "nz = {}", self.nz);
        let _ = writeln!(s, "dt = {:?}", self.dt);
        let _ = writeln!(s, "t_end = {:?}", self.t_end);
        let _ = writeln!(s, "seed = {}", self.seed);
        let ic = match &self.ic {
            InitialKind::Zero => "zero".to_string(),
            InitialKind::Random(a) => format!("random({a:?})"),
            InitialKind::File(p) => format!("file({})", p.display()),
        };
        let _ = writeln!(s, "ic.kind = {ic}");
        for (name, modes) in [("qu", &self.flux.qu), ("qt", &self.flux.qt), ("qs", &self.flux.qs)] {
            for m in modes {
                let _ = writeln!(s, "flux.{name}.m = {}", m.m);
                let _ = writeln!(s, "flux.{name}.a = {:?}", m.a);
                let _ = writeln!(s, "flux.{name}.b = {:?}", m.b);
            }
        }
        match self.epsilon {
            EpsilonChoice::Auto => s.push_str("lifting.epsilon = auto\n"),
            EpsilonChoice::Fixed(e) => {
                let _ = writeln!(s, "lifting.epsilon = {e:?}");
            }
        }
        for (i, v) in [c.c0, c.c1, c.c2, c.c3, c.c4, c.c5].iter().enumerate() {
            let _ = writeln!(s, "constants.c{i} = {v:?}");
        }
        let _ = writeln!(s, "output.dir = {}", self.output_dir.display());
        let _ = writeln!(s, "snapshot.every_steps = {}", self.snapshot_every);
        let _ = writeln!(s, "diag.every_steps = {}", self.diag_every);
        let _ = writeln!(s, "strict = {}", self.strict);
        s
    }
}
