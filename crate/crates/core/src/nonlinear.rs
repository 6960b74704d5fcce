//! Arakawa Jacobian on the channel and the extrapolated advection terms.
//!
//! The stencil needs one level beyond each wall. The first argument (a
//! streamfunction) is continued by odd reflection about its wall value,
//! `a[-1] = 2 a[0] - a[1]`; the second by even reflection, `b[-1] = b[1]`.
//! When the first argument vanishes on the walls this is the Arakawa
//! Jacobian on the doubled periodic domain `z in [-1, 1]` restricted to the
//! channel, so the trapezoid sums of `J`, `b J` and `a J` vanish to roundoff.

use crate::error::{Error, Result};
use crate::grid::{Field, FieldKind, Grid};
use crate::model::{State, Variable};

fn pad(grid: &Grid, f: &Field, odd: bool) -> Vec<f64> {
    let nzl = grid.nz_layers();
    let n = grid.nz();
    let w = nzl + 2;
    let mut out = vec![0.0; grid.nx() * w];
    for i in 0..grid.nx() {
        let c = &f.values()[i * nzl..(i + 1) * nzl];
        let o = &mut out[i * w..(i + 1) * w];
        o[1..=nzl].copy_from_slice(c);
        if odd {
            o[0] = 2.0 * c[0] - c[1];
            o[nzl + 1] = 2.0 * c[n] - c[n - 1];
        } else {
            o[0] = c[1];
            o[nzl + 1] = c[n - 1];
        }
    }
    out
}

/// Discrete `d_x a d_z b - d_x b d_z a`, energy and enstrophy conserving.
pub fn jacobian(grid: &Grid, a: &Field, b: &Field) -> Result<Field> {
    grid.check(a)?;
    grid.check(b)?;
    let nx = grid.nx();
    let nzl = grid.nz_layers();
    let w = nzl + 2;
    let pa = pad(grid, a, true);
    let pb = pad(grid, b, false);
    let scale = 1.0 / (12.0 * grid.dx() * grid.dz());
    let mut out = Field::zeros(grid, FieldKind::None);
    for i in 0..nx {
        let ip = (i + 1) % nx;
        let im = (i + nx - 1) % nx;
        let (r0, rp, rm) = (i * w, ip * w, im * w);
        for jj in 1..=nzl {
            let (j, jp, jm) = (jj, jj + 1, jj - 1);
            let a_e = pa[rp + j];
            let a_w = pa[rm + j];
            let a_n = pa[r0 + jp];
            let a_s = pa[r0 + jm];
            let a_ne = pa[rp + jp];
            let a_sw = pa[rm + jm];
            let a_nw = pa[rm + jp];
            let a_se = pa[rp + jm];
            let b_e = pb[rp + j];
            let b_w = pb[rm + j];
            let b_n = pb[r0 + jp];
            let b_s = pb[r0 + jm];
            let b_ne = pb[rp + jp];
            let b_sw = pb[rm + jm];
            let b_nw = pb[rm + jp];
            let b_se = pb[rp + jm];
            let j1 = (a_e - a_w) * (b_n - b_s) - (a_n - a_s) * (b_e - b_w);
            let j2 = a_e * (b_ne - b_se) - a_w * (b_nw - b_sw) - a_n * (b_ne - b_nw) + a_s * (b_se - b_sw);
            let j3 = a_ne * (b_n - b_e) - a_sw * (b_w - b_s) - a_nw * (b_n - b_w) + a_se * (b_e - b_s);
            out.values[i * nzl + jj - 1] = (j1 + j2 + j3) * scale;
        }
    }
    Ok(out)
}

/// `J(2 psi^n - psi^{n-1}, 2 phi^n - phi^{n-1})` for the chosen variable.
pub fn one_leg_advection(grid: &Grid, prev: &State, curr: &State, which: Variable) -> Result<Field> {
    if prev.step + 1 != curr.step {
        return Err(Error::Sequencing(format!(
            "levels {} and {} are not consecutive",
            prev.step, curr.step
        )));
    }
    let psi = curr.psi.extrapolate(&prev.psi);
    let phi = curr.field(which).extrapolate(prev.field(which));
    jacobian(grid, &psi, &phi)
}
