//! Initial data: zero or seeded random states compatible with the wall data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::elliptic::poisson_channel;
use crate::error::Result;
use crate::grid::{Field, FieldKind, Grid};
use crate::lifting::Lifting;
use crate::model::State;

/// Highest x and z mode numbers used for random data.
pub const MAX_MODE: usize = 6;

/// The lifting itself: zero shifted variables.
pub fn lifted_zero_state(grid: &Grid, lift: &Lifting) -> Result<State> {
    let psi = poisson_channel(grid, &lift.omega)?;
    Ok(State {
        omega: lift.omega.clone(),
        temp: lift.tq.clone(),
        salt: lift.sq.clone(),
        psi,
        step: 0,
        time: 0.0,
    })
}

fn random_series(grid: &Grid, rng: &mut ChaCha8Rng, kind: FieldKind) -> Field {
    let xi = grid.xi();
    let mmax = MAX_MODE.min(grid.nx() / 2 - 1);
    let lmax = MAX_MODE.min(grid.nz() - 1);
    let mut terms = Vec::new();
    for m in 0..=mmax {
        for l in 0..=lmax {
            let (lo, hi) = match kind {
                FieldKind::DirichletZ => (1, lmax),
                _ => (0, lmax),
            };
            if l < lo || l > hi || (m == 0 && l == 0) {
                continue;
            }
            let decay = (-((m + l) as f64) / 2.0).exp();
            let a = rng.gen_range(-1.0..1.0) * decay;
            let b = if m > 0 { rng.gen_range(-1.0..1.0) * decay } else { 0.0 };
            terms.push((m as f64, l as f64, a, b));
        }
    }
    let pi = std::f64::consts::PI;
    Field::from_fn(grid, kind, |x, z| {
        terms
            .iter()
            .map(|&(m, l, a, b)| {
                let arg = 2.0 * pi * m * x / xi;
                let zf = match kind {
                    FieldKind::DirichletZ => (l * pi * z).sin(),
                    _ => (l * pi * z).cos(),
                };
                (a * arg.cos() + b * arg.sin()) * zf
            })
            .sum()
    })
}

/// Random state with each shifted field of root-mean-square size
/// `amplitude`, plus the lifting. Vorticity perturbations are sine series in
/// z (zero on the walls), temperature and salinity cosine series (zero wall
/// flux), all with zero mean. The same seed always gives the same state.
pub fn random_state(grid: &Grid, lift: &Lifting, amplitude: f64, seed: u64) -> Result<State> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let area = grid.area().sqrt();
    let mut fields = Vec::with_capacity(3);
    for kind in [FieldKind::DirichletZ, FieldKind::NeumannZ, FieldKind::NeumannZ] {
        let raw = random_series(grid, &mut rng, kind);
        let centred = if kind == FieldKind::NeumannZ {
            grid.subtract_mean(&raw)?.with_kind(kind)
        } else {
            raw
        };
        let rms = grid.l2_norm(&centred)? / area;
        let s = if rms > 0.0 { amplitude / rms } else { 0.0 };
        fields.push(&centred * s);
    }
    let salt = fields.pop().unwrap_or_else(|| Field::zeros(grid, FieldKind::NeumannZ));
    let temp = fields.pop().unwrap_or_else(|| Field::zeros(grid, FieldKind::NeumannZ));
    let mut omega = fields.pop().unwrap_or_else(|| Field::zeros(grid, FieldKind::DirichletZ));
    // sine series in z carries a mean; remove it along sin(pi z)
    let mode = Field::from_fn(grid, FieldKind::DirichletZ, |_, z| (std::f64::consts::PI * z).sin());
    let m = grid.mean(&omega)? / grid.mean(&mode)?;
    omega = omega.lin_comb(1.0, &mode, -m);
    let omega = (&omega + &lift.omega).with_kind(FieldKind::DirichletZ);
    let temp = (&temp + &lift.tq).with_kind(FieldKind::NeumannZ);
    let salt = (&salt + &lift.sq).with_kind(FieldKind::NeumannZ);
    let psi = poisson_channel(grid, &omega)?;
    Ok(State {
        omega,
        temp,
        salt,
        psi,
        step: 0,
        time: 0.0,
    })
}
