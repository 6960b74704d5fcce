use ddc_core::elliptic::{poisson_channel, poisson_periodic};
use ddc_core::gstability::{
    equivalence_constants, geometric_growth_bound, gform_eigenvalues, gnorm_sq, hs_identity_residual, recursion_bound,
};
use ddc_core::lifting::construct_lifting;
use ddc_core::nonlinear::jacobian;
use ddc_core::{BoundaryFlux, ConstantsConfig, Field, FieldKind, FourierMode, Grid, L2Space, PeriodicGrid};
use nalgebra::{Matrix2, SymmetricEigen};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn noise(grid: &Grid, kind: FieldKind, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = (0..grid.nx() * grid.nz_layers()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Field::from_values(grid.nx(), grid.nz_layers(), kind, v).unwrap()
}

fn noise_walls_zero(grid: &Grid, seed: u64) -> Field {
    let mut f = noise(grid, FieldKind::DirichletZ, seed);
    for i in 0..grid.nx() {
        f.set(i, 0, 0.0);
        f.set(i, grid.nz(), 0.0);
    }
    f
}

fn small_grid() -> impl Strategy<Value = Grid> {
    (4usize..12, 8usize..24, 0.5f64..4.0).prop_map(|(hx, nz, xi)| Grid::new(2 * hx, nz, xi).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gform_eigenvalues_match_dense_eigensolver(nk in 0.0f64..=1.0) {
        let m = Matrix2::new(0.5, -1.0, -1.0, 0.5 * (5.0 + nk));
        let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        let (s, l) = gform_eigenvalues(nk);
        prop_assert!((s - ev[0]).abs() < 1e-13);
        prop_assert!((l - ev[1]).abs() < 1e-13);
    }

    #[test]
    fn gnorm_is_sandwiched_by_equivalence_constants(grid in small_grid(), seed in any::<u64>(), nk in 0.0f64..=1.0) {
        let f = noise(&grid, FieldKind::None, seed);
        let g = noise(&grid, FieldKind::None, seed ^ 0x9e37);
        let sum = grid.norm_sq(&f).unwrap() + grid.norm_sq(&g).unwrap();
        let gn = gnorm_sq(&grid, &f, &g, nk).unwrap();
        let (s, l) = gform_eigenvalues(nk);
        prop_assert!(gn >= s * sum * (1.0 - 1e-12));
        prop_assert!(gn <= l * sum * (1.0 + 1e-12));
        let (lo, hi) = equivalence_constants(&[0.0, nk, 1.0]).unwrap();
        prop_assert!(lo <= s && hi >= l);
    }

    #[test]
    fn two_step_identity_holds(grid in small_grid(), seed in any::<u64>(), nk in 0.0f64..=1.0) {
        let f = noise(&grid, FieldKind::None, seed);
        let g = noise(&grid, FieldKind::None, seed.wrapping_add(1));
        let h = noise(&grid, FieldKind::None, seed.wrapping_add(2));
        let scale = grid.norm_sq(&f).unwrap() + grid.norm_sq(&g).unwrap() + grid.norm_sq(&h).unwrap();
        prop_assert!(hs_identity_residual(&grid, &f, &g, &h, nk).unwrap() <= 1e-12 * scale);
    }

    #[test]
    fn channel_jacobian_conserves_integral_and_quadratic(grid in small_grid(), seed in any::<u64>()) {
        let psi = noise_walls_zero(&grid, seed);
        let f = noise(&grid, FieldKind::NeumannZ, seed ^ 0xabcd);
        let j = jacobian(&grid, &psi, &f).unwrap();
        let scale = grid.l2_norm(&j).unwrap() * grid.l2_norm(&f).unwrap() + grid.l2_norm(&j).unwrap() * grid.area().sqrt();
        prop_assert!(grid.quadrature(&j).unwrap().abs() <= 1e-12 * scale);
        prop_assert!(grid.l2_inner(&j, &f).unwrap().abs() <= 1e-12 * scale);
        let pscale = grid.l2_norm(&j).unwrap() * grid.l2_norm(&psi).unwrap();
        prop_assert!(grid.l2_inner(&j, &psi).unwrap().abs() <= 1e-12 * pscale);
    }

    #[test]
    fn channel_jacobian_with_streamfunction_from_poisson(grid in small_grid(), seed in any::<u64>()) {
        let w = noise_walls_zero(&grid, seed);
        let psi = poisson_channel(&grid, &w).unwrap();
        let j = jacobian(&grid, &psi, &w).unwrap();
        let scale = grid.l2_norm(&j).unwrap() * (grid.l2_norm(&w).unwrap() + grid.area().sqrt());
        prop_assert!(grid.quadrature(&j).unwrap().abs() <= 1e-12 * scale);
        prop_assert!(grid.l2_inner(&j, &w).unwrap().abs() <= 1e-12 * scale);
    }

    #[test]
    fn periodic_jacobian_conserves(half in 4usize..16, seed in any::<u64>()) {
        let grid = PeriodicGrid::standard(2 * half).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = grid.field_from_fn(|_, _| rng.gen_range(-1.0..1.0));
        let b = grid.field_from_fn(|_, _| rng.gen_range(-1.0..1.0));
        let b = grid.dealias(&b).unwrap();
        let j = grid.jacobian(&a, &b).unwrap();
        let scale = grid.l2_norm(&j).unwrap() * (grid.l2_norm(&b).unwrap() + 1.0);
        prop_assert!(grid.mean(&j).unwrap().abs() <= 1e-12 * scale);
        prop_assert!(grid.inner(&j, &b).unwrap().abs() <= 1e-12 * scale);
    }

    #[test]
    fn poisson_solution_has_small_residual(grid in small_grid(), seed in any::<u64>()) {
        let w = noise_walls_zero(&grid, seed);
        let psi = poisson_channel(&grid, &w).unwrap();
        let lap = grid.laplacian_dirichlet(&psi).unwrap();
        for i in 0..grid.nx() {
            prop_assert_eq!(psi.get(i, 0), 0.0);
            prop_assert_eq!(psi.get(i, grid.nz()), 0.0);
            for j in 1..grid.nz() {
                let scale = 1.0 / (grid.dz() * grid.dz()) + 1.0 / (grid.dx() * grid.dx());
                prop_assert!((lap.get(i, j) - w.get(i, j)).abs() <= 1e-11 * scale * (1.0 + psi.max_abs()));
            }
        }
    }

    #[test]
    fn periodic_poisson_inverts_laplacian(half in 4usize..16, seed in any::<u64>()) {
        let grid = PeriodicGrid::standard(2 * half).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = grid.field_from_fn(|_, _| rng.gen_range(-1.0..1.0));
        let m = grid.mean(&w).unwrap();
        let w = w.map(|v| v - m);
        let psi = poisson_periodic(&grid, &w).unwrap();
        let back = grid.laplacian(&psi).unwrap();
        prop_assert!((&back - &w).max_abs() < 1e-10);
    }

    #[test]
    fn mean_subtraction_is_a_projection(grid in small_grid(), seed in any::<u64>()) {
        let f = noise(&grid, FieldKind::NeumannZ, seed);
        let once = grid.subtract_mean(&f).unwrap();
        let twice = grid.subtract_mean(&once).unwrap();
        prop_assert!(grid.mean(&once).unwrap().abs() < 1e-14);
        prop_assert!((&twice - &once).max_abs() < 1e-14);
        // orthogonal to constants, so the norm does not grow
        prop_assert!(grid.norm_sq(&once).unwrap() <= grid.norm_sq(&f).unwrap() * (1.0 + 1e-14));
    }

    #[test]
    fn recursion_bound_dominates_admissible_sequences(
        seed in any::<u64>(),
        len in 2usize..120,
        mu in 0.1f64..10.0,
        delta in 1e-3f64..1.0,
        eps_frac in 0.0f64..1.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eps = mu / 8.0 * eps_frac;
        let q = 1.0 / (1.0 + delta);
        let r: Vec<f64> = (0..len).map(|_| rng.gen_range(0.0..1.0)).collect();
        let mut y: Vec<f64> = (0..=len).map(|_| rng.gen_range(0.0..3.0)).collect();
        let mut x = vec![0.0; len + 1];
        x[1] = rng.gen_range(0.0..5.0);
        for n in 1..len {
            // equality in the hypothesis is the extreme case
            let cap = q * x[n] + eps * (y[n] + y[n - 1]) + r[n - 1];
            y[n + 1] = y[n + 1].min(cap / mu);
            x[n + 1] = cap - mu * y[n + 1];
        }
        for n in 1..len {
            let b = recursion_bound(x[1], y[1], y[0], mu, delta, eps, &r, n).unwrap();
            prop_assert!(x[n + 1] + mu * y[n + 1] <= b * (1.0 + 1e-12) + 1e-12);
        }
    }

    #[test]
    fn growth_bound_dominates_the_extreme_sequence(x0 in 0.0f64..10.0, b in 1e-4f64..0.5, seed in any::<u64>(), m in 0usize..60) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..1.0)).collect();
        let (mut x, mut free) = (x0, x0);
        for rj in &r {
            x = (1.0 + b) * x + rj;
            free *= 1.0 + b;
        }
        let bound = geometric_growth_bound(x0, b, &r, m).unwrap();
        prop_assert!(x <= bound * (1.0 + 1e-12));
        // without forcing the bound is attained
        let exact = geometric_growth_bound(x0, b, &vec![0.0; m], m).unwrap();
        prop_assert!((free - exact).abs() <= 1e-12 * exact.max(1.0));
    }

    #[test]
    fn lifting_matches_wall_data_and_is_mean_free(
        hx in 8usize..24,
        nz in 16usize..48,
        m in 1u32..4,
        a in -2.0f64..2.0,
        eps_pow in 1u32..4,
    ) {
        let grid = Grid::new(2 * hx, nz, 2.0).unwrap();
        let mode = FourierMode { m, a, b: 0.5 * a };
        let flux = BoundaryFlux { qu: vec![mode], qt: vec![mode], qs: vec![mode] };
        let eps = 0.5f64.powi(eps_pow as i32);
        let l = construct_lifting(&grid, &flux, eps, 1.0, 1.0, &ConstantsConfig::default()).unwrap();
        prop_assert!(grid.mean(&l.tq).unwrap().abs() < 1e-13);
        prop_assert!(grid.mean(&l.sq).unwrap().abs() < 1e-13);
        for i in 0..grid.nx() {
            prop_assert!((l.omega.get(i, nz) - l.qu_top[i]).abs() < 1e-14);
            prop_assert_eq!(l.omega.get(i, 0), 0.0);
            prop_assert_eq!(l.psi.get(i, 0), 0.0);
            prop_assert_eq!(l.psi.get(i, nz), 0.0);
        }
    }
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    s * h / 3.0
}

#[test]
fn lifting_margins_match_analytic_integrals() {
    // single cosine mode: x integral of the square is a^2 xi / 2
    let eta = |s: f64| if s < 1.0 { (1.0 - s * s).powi(2) } else { 0.0 };
    let rho = |s: f64| simpson(eta, s, 1.0, 200);
    let eta2 = simpson(|s| eta(s).powi(2), 0.0, 1.0, 2000);
    let rho2 = simpson(|s| rho(s).powi(2), 0.0, 1.0, 2000);
    let c = ConstantsConfig::default();
    let (xi, a, prandtl, lewis) = (2.0, 0.7, 1.5, 0.6);
    let grid = Grid::new(64, 1024, xi).unwrap();
    let mode = FourierMode { m: 1, a, b: 0.0 };
    let flux = BoundaryFlux { qu: vec![mode], qt: vec![mode], qs: vec![mode] };
    let mut last = None;
    for eps in [0.5, 0.25, 0.125] {
        let l = construct_lifting(&grid, &flux, eps, prandtl, lewis, &c).unwrap();
        let x_int = a * a * xi / 2.0;
        let omega2 = x_int * eps * eta2;
        let tq2 = x_int * eps.powi(3) * rho2;
        let d = 32.0 * c.c4;
        let rel = |got: f64, want: f64| ((got - want) / want).abs();
        assert!(rel(l.margins.omega, omega2 * d / (prandtl * prandtl)) < 1e-3, "{eps}");
        assert!(rel(l.margins.temp, tq2 * d) < 1e-3, "{eps}");
        assert!(rel(l.margins.salt, tq2 * d / (lewis * lewis)) < 1e-3, "{eps}");
        if let Some((mo, mt)) = last {
            // |Omega|^2 ~ eps and |T_Q|^2 ~ eps^3
            assert!(rel(l.margins.omega / mo, 0.5) < 1e-3);
            assert!(rel(l.margins.temp / mt, 0.125) < 1e-3);
        }
        last = Some((l.margins.omega, l.margins.temp));
    }
}

fn dense_min_eigenvalue(grid: &Grid, neumann: bool) -> f64 {
    use nalgebra::DMatrix;
    let (nx, nz) = (grid.nx(), grid.nz());
    let (dx, dz) = (grid.dx(), grid.dz());
    let mut ax = DMatrix::<f64>::zeros(nx, nx);
    for i in 0..nx {
        ax[(i, i)] = 2.0 / (dx * dx);
        ax[(i, (i + 1) % nx)] -= 1.0 / (dx * dx);
        ax[(i, (i + nx - 1) % nx)] -= 1.0 / (dx * dx);
    }
    let ex: Vec<f64> = SymmetricEigen::new(ax).eigenvalues.iter().copied().collect();
    let ez: Vec<f64> = if neumann {
        // ghost closure on wall nodes, symmetrised by the trapezoid weights
        let n = nz + 1;
        let mut a = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            a[(j, j)] = 2.0 / (dz * dz);
            if j > 0 {
                a[(j, j - 1)] = -1.0 / (dz * dz);
            }
            if j + 1 < n {
                a[(j, j + 1)] = -1.0 / (dz * dz);
            }
        }
        a[(0, 1)] = -2.0 / (dz * dz);
        a[(nz, nz - 1)] = -2.0 / (dz * dz);
        let w: Vec<f64> = (0..n).map(|j| if j == 0 || j == nz { 0.5 } else { 1.0 }).collect();
        let s = DMatrix::from_fn(n, n, |i, j| a[(i, j)] * w[i].sqrt() / w[j].sqrt());
        SymmetricEigen::new(s).eigenvalues.iter().copied().collect()
    } else {
        let n = nz - 1;
        let a = DMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
            0 => 2.0 / (dz * dz),
            1 => -1.0 / (dz * dz),
            _ => 0.0,
        });
        SymmetricEigen::new(a).eigenvalues.iter().copied().collect()
    };
    let mut best = f64::INFINITY;
    for &a in &ex {
        for &b in &ez {
            let l = a + b;
            // the constant mode is excluded by the zero-mean condition
            if l > 1e-9 {
                best = best.min(l);
            }
        }
    }
    best
}

#[test]
fn measured_c0_matches_dense_spectrum() {
    for (nx, nz, xi) in [(8, 8, 1.0), (16, 8, 4.0), (12, 16, 0.5)] {
        let grid = Grid::new(nx, nz, xi).unwrap();
        let want = 1.0 / dense_min_eigenvalue(&grid, false).min(dense_min_eigenvalue(&grid, true));
        let got = ddc_core::gstability::measured_c0(&grid);
        assert!((got - want).abs() < 1e-10 * want, "{nx}x{nz}: {got} vs {want}");
    }
}

proptest! {
    #[test]
    fn poincare_inequality_holds_with_measured_c0(grid in small_grid(), seed in any::<u64>()) {
        let c0 = ddc_core::gstability::measured_c0(&grid);
        let w = noise_walls_zero(&grid, seed);
        prop_assert!(grid.norm_sq(&w).unwrap() <= c0 * grid.h1_seminorm_sq(&w).unwrap() * (1.0 + 1e-12));
        let t = grid.subtract_mean(&noise(&grid, FieldKind::NeumannZ, seed ^ 1)).unwrap();
        prop_assert!(grid.norm_sq(&t).unwrap() <= c0 * grid.h1_seminorm_sq(&t).unwrap() * (1.0 + 1e-12));
        let psi = poisson_channel(&grid, &w).unwrap();
        prop_assert!(grid.h1_seminorm_sq(&psi).unwrap() <= c0 * grid.norm_sq(&w).unwrap() * (1.0 + 1e-10));
    }
}
