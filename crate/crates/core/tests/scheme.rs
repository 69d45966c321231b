use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rkdv::mesh::{fd_gradient_norm, fd_laplacian_norm, inner, norm_h, norm_inf};
use rkdv::problems::{by_name, Problem};
use rkdv::spectral::dense::{dense_d, dense_oracle, DenseOperator};
use rkdv::stepper::{momentum, run, run_with};
use rkdv::{Dim, Grid, MeshFunction, SchemeConfig, Stepper};

/// Finite-difference weights for the `order`-th derivative at 0 on the
/// nodes `xs` (Fornberg's recursion).
fn fd_weights(xs: &[f64], order: usize) -> Vec<f64> {
    let n = xs.len();
    let mut c = vec![vec![0.0; order + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0];
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i];
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] *= c4 / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

struct Stencil {
    offsets: Vec<f64>,
    weights: [Vec<f64>; 5],
}

impl Stencil {
    fn new(h: f64, half_width: i32) -> Self {
        let offsets: Vec<f64> = (-half_width..=half_width).map(|k| k as f64 * h).collect();
        let weights = std::array::from_fn(|order| fd_weights(&offsets, order));
        Self { offsets, weights }
    }

    fn apply(&self, order: usize, f: impl Fn(f64) -> f64) -> f64 {
        self.offsets
            .iter()
            .zip(&self.weights[order])
            .map(|(&s, &w)| w * f(s))
            .sum()
    }
}

/// Pointwise residual of `u_t + Delta^2 u_t + Delta u_x + (1 + u^p) L u - g`
/// for the exact solution, all derivatives by wide finite-difference stencils.
fn pde_residual(problem: &Problem, h: f64, x: f64, y: f64, t: f64) -> f64 {
    let u = problem.exact.as_ref().unwrap();
    let sx = Stencil::new(h, 10);
    let st = Stencil::new(1e-2, 8);
    let two_d = problem.dim == Dim::Two;
    let dxy = |ox: usize, oy: usize, tt: f64| -> f64 {
        if oy == 0 {
            sx.apply(ox, |a| u(x + a, y, tt))
        } else {
            sx.apply(ox, |a| sx.apply(oy, |b| u(x + a, y + b, tt)))
        }
    };
    let ut = st.apply(1, |s| u(x, y, t + s));
    let bilap_t = st.apply(1, |s| {
        let tt = t + s;
        if two_d {
            dxy(4, 0, tt) + 2.0 * dxy(2, 2, tt) + dxy(0, 4, tt)
        } else {
            dxy(4, 0, tt)
        }
    });
    let lap_x = if two_d { dxy(3, 0, t) + dxy(1, 2, t) } else { dxy(3, 0, t) };
    let transport = if two_d { dxy(1, 0, t) + dxy(0, 1, t) } else { dxy(1, 0, t) };
    let g = problem.source.as_ref().map_or(0.0, |g| g(x, y, t));
    ut + bilap_t + lap_x + (1.0 + u(x, y, t).powi(problem.p as i32)) * transport - g
}

#[test]
fn fd_weights_reproduce_polynomial_derivatives() {
    let s = Stencil::new(0.1, 3);
    assert!((s.apply(0, |x| x.powi(3) + 2.0) - 2.0).abs() < 1e-13);
    assert!((s.apply(1, |x| x.powi(3) + 5.0 * x) - 5.0).abs() < 1e-10);
    assert!((s.apply(2, |x| x * x) - 2.0).abs() < 1e-9);
    assert!((s.apply(4, |x| x.powi(4)) - 24.0).abs() < 1e-6);
}

#[test]
fn exact_solutions_satisfy_their_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (name, h) in [("soliton1d", 0.25), ("manufactured2d", 1.0 / 64.0)] {
        let pr = by_name(name).unwrap();
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let x = rng.gen_range(pr.x_range.0..pr.x_range.1);
            let y = if pr.dim == Dim::Two {
                rng.gen_range(pr.y_range.0..pr.y_range.1)
            } else {
                0.0
            };
            let t = rng.gen_range(0.0..1.0);
            worst = worst.max(pde_residual(&pr, h, x, y, t).abs());
        }
        assert!(worst <= 1e-5, "{name}: residual {worst:e}");
    }
}

#[test]
fn residual_oracle_detects_a_wrong_source() {
    let mut pr = by_name("manufactured2d").unwrap();
    let g = pr.source.clone().unwrap();
    pr.source = Some(std::sync::Arc::new(move |x, y, t| g(x, y, t) * (1.0 + 1e-6)));
    assert!(pde_residual(&pr, 1.0 / 64.0, 0.3, 0.1, 0.5).abs() > 1e-4);
}

#[test]
fn initial_data_equal_exact_at_zero() {
    for name in ["soliton1d", "manufactured2d"] {
        let pr = by_name(name).unwrap();
        let ex = pr.exact.as_ref().unwrap();
        for (x, y) in [(0.13, 0.71), (0.5, 0.25), (-3.0, 0.9)] {
            assert_eq!((pr.initial)(x, y), ex(x, y, 0.0));
        }
    }
}

#[test]
fn halfstep_satisfies_dense_equation() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let grid = Grid::new_2d((0.0, 2.0 * PI), (0.0, 2.0 * PI), 8, 8).unwrap();
    let n = grid.len();
    for _ in 0..5 {
        let rnd = |rng: &mut ChaCha8Rng, a: f64| {
            MeshFunction::new(grid, (0..n).map(|_| rng.gen_range(-a..a)).collect()).unwrap()
        };
        let u_n = rnd(&mut rng, 0.1);
        let u_hat = rnd(&mut rng, 0.1);
        let tau = rng.gen_range(0.01..0.2);
        let stepper = Stepper::new(&grid, SchemeConfig::new(tau, 2).unwrap()).unwrap();
        let (half, report) = stepper.solve_halfstep(&u_n, &u_hat, 0.0).unwrap();
        assert!(report.residual < 1e-14);

        let mass = DMatrix::<f64>::identity(n, n) + dense_oracle(&grid, DenseOperator::A2).unwrap();
        let lhs = &mass + dense_d(&u_hat, 2).unwrap() * (0.5 * tau);
        let r = &lhs * DVector::from_column_slice(half.values()) - &mass * DVector::from_column_slice(u_n.values());
        let scale = (&mass * DVector::from_column_slice(u_n.values())).amax();
        let r = MeshFunction::new(grid, r.iter().copied().collect()).unwrap();
        assert!(norm_h(&r) <= 1e-12 * scale * grid.cell_area().sqrt() * (n as f64).sqrt());
    }
}

#[test]
fn momentum_matches_dense_definition() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let grid = Grid::new_2d((0.0, 1.0), (0.0, 3.0), 4, 4).unwrap();
    let a = dense_oracle(&grid, DenseOperator::A).unwrap();
    let sp = rkdv::Spectral::new(&grid);
    for _ in 0..20 {
        let u = MeshFunction::new(grid, (0..16).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap();
        let au = a.clone() * DVector::from_column_slice(u.values());
        let au = MeshFunction::new(grid, au.iter().copied().collect()).unwrap();
        let expected = inner(&u, &u).unwrap() + inner(&au, &au).unwrap();
        let got = momentum(&sp, &u).unwrap();
        assert!((got - expected).abs() <= 1e-12 * expected);
    }
}

#[test]
fn homogeneous_runs_stay_bounded() {
    for (name, n, t_final) in [("soliton1d", 256, 50.0), ("periodic2d", 32, 50.0)] {
        let pr = by_name(name).unwrap();
        let grid = pr.grid(n).unwrap();
        let u0 = pr.sample_initial(&grid);
        let measure = |u: &MeshFunction| [norm_h(u), fd_gradient_norm(u), fd_laplacian_norm(u), norm_inf(u)];
        let init = measure(&u0);
        let mut worst = [0.0f64; 4];
        let stepper = Stepper::new(&grid, SchemeConfig::for_problem(&pr, 0.1).unwrap()).unwrap();
        run_with(&stepper, u0, t_final, &mut |s, _| {
            for (w, v) in worst.iter_mut().zip(measure(&s.curr)) {
                *w = w.max(v);
            }
        })
        .unwrap();
        for (w, i) in worst.iter().zip(init) {
            assert!(*w <= 10.0 * i, "{name}: {w} vs initial {i}");
        }
    }
}

#[test]
fn runs_are_bitwise_deterministic() {
    let pr = by_name("periodic2d").unwrap();
    let go = || {
        let cfg = SchemeConfig::for_problem(&pr, 0.1).unwrap();
        run(&pr, 24, cfg, 2.0, &mut |_, _| {}).unwrap()
    };
    let (a, b) = (go(), go());
    assert_eq!(a.final_state.curr.values(), b.final_state.curr.values());
    assert_eq!(a.momentum, b.momentum);
}

#[test]
fn iteration_counts_stay_small_on_reference_configurations() {
    for (name, n, tau, t_final) in [
        ("soliton1d", 1024, 0.1, 1.0),
        ("soliton1d", 1000, 0.1, 20.0),
        ("manufactured2d", 100, 0.1, 1.0),
        ("manufactured2d", 100, 0.0125, 0.25),
        ("periodic2d", 50, 0.1, 20.0),
    ] {
        let pr = by_name(name).unwrap();
        let cfg = SchemeConfig::for_problem(&pr, tau).unwrap();
        let summary = run(&pr, n, cfg, t_final, &mut |_, _| {}).unwrap();
        let worst = summary.diagnostics.iter().map(|d| d.iterations_used).max().unwrap();
        assert!(worst <= 30, "{name} N={n} tau={tau}: {worst} sweeps");
        assert!(summary.diagnostics.iter().all(|d| d.final_residual < 1e-14));
    }
}
