//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rkdv::experiments::{momentum_drift, sci, spatial_convergence, temporal_convergence, Settings};
use rkdv::mesh::{fd_gradient_norm, fd_laplacian_norm, inner, norm_h, norm_inf};
use rkdv::problems::by_name;
use rkdv::spectral::dense::{apply_dense, dense_d, dense_oracle, DenseOperator};
use rkdv::spectral::{symbol_a, symbol_a2, symbol_b, symbol_lh};
use rkdv::stepper::momentum;
use rkdv::{Grid, MeshFunction, SchemeConfig, Spectral, Stepper};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(value: f64, reference: f64, tol: f64) -> bool {
    (value - reference).abs() <= tol * reference.abs()
}

fn list(v: &[f64]) -> String {
    v.iter().map(|&x| sci(x)).collect::<Vec<_>>().join(", ")
}

fn rate_list(v: &[f64]) -> String {
    v.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>().join(", ")
}

fn settings() -> Settings {
    Settings::default()
}

fn table1() -> Outcome {
    let reference = [2.8001e-05, 6.9585e-06, 1.7341e-06, 4.3281e-07];
    let rep = temporal_convergence(
        &by_name("soliton1d").unwrap(),
        1024,
        &[0.1, 0.05, 0.025, 0.0125],
        1.0,
        &settings(),
    )
    .unwrap();
    let (e, r) = (rep.errors(), rep.rates());
    let pass = e.len() == 4
        && e.iter().zip(&reference).all(|(&v, &x)| within(v, x, 0.05))
        && r.len() == 3
        && r.iter().all(|&q| (1.95..=2.05).contains(&q));
    outcome(pass, format!("errors [{}] rates [{}]", list(&e), rate_list(&r)))
}

fn table2() -> Outcome {
    let reference = [1.7538e-02, 4.2655e-04, 2.3645e-08];
    let rep = spatial_convergence(
        &by_name("soliton1d").unwrap(),
        1e-5,
        &[16, 32, 64, 128, 256],
        1.0,
        &settings(),
    )
    .unwrap();
    let e = rep.errors();
    let pass = e.len() == 5
        && e[..3].iter().zip(&reference).all(|(&v, &x)| within(v, x, 0.05))
        && e[3..].iter().all(|&v| v <= 1e-9);
    outcome(pass, format!("errors [{}]", list(&e)))
}

fn table4() -> Outcome {
    let reference = [4.6227e-03, 1.1709e-03, 2.9464e-04, 7.3903e-05];
    let rep = temporal_convergence(
        &by_name("manufactured2d").unwrap(),
        100,
        &[0.1, 0.05, 0.025, 0.0125],
        1.0,
        &settings(),
    )
    .unwrap();
    let (e, r) = (rep.errors(), rep.rates());
    let values_ok = e.len() == 4 && e.iter().zip(&reference).all(|(&v, &x)| within(v, x, 0.05));
    let rates_ok = r.len() == 3 && r.iter().all(|&q| (1.93..=2.05).contains(&q));
    outcome(
        values_ok && rates_ok,
        format!(
            "errors [{}] vs [{}] (values {}), rates [{}] ({})",
            list(&e),
            list(&reference),
            if values_ok { "ok" } else { "off" },
            rate_list(&r),
            if rates_ok { "ok" } else { "off" }
        ),
    )
}

fn table5() -> Outcome {
    let rep = spatial_convergence(&by_name("manufactured2d").unwrap(), 1e-5, &[4, 8], 1.0, &settings()).unwrap();
    let e = rep.errors();
    let pass = within(e[0], 7.9657e-05, 0.05) && e[1] < 1e-9;
    outcome(pass, format!("errors [{}]", list(&e)))
}

fn momentum_conservation() -> Outcome {
    let serial = Settings {
        parallel: false,
        ..settings()
    };
    let soliton = momentum_drift(&by_name("soliton1d").unwrap(), 1000, 0.1, 200.0, 10, &serial).unwrap();
    let periodic = momentum_drift(&by_name("periodic2d").unwrap(), 50, 0.1, 200.0, 10, &serial).unwrap();
    let (d1, d2) = (soliton.max_relative_drift(), periodic.max_relative_drift());
    let pass = d1 <= 1e-10 && d2 <= 1e-10 && (periodic.p0 - 114.59).abs() <= 0.01;
    outcome(
        pass,
        format!("soliton drift {}, periodic drift {}, P0 {:.4}", sci(d1), sci(d2), periodic.p0),
    )
}

fn random_mesh(grid: &Grid, rng: &mut ChaCha8Rng) -> MeshFunction {
    let scale = rng.gen_range(0.1..10.0);
    let values = (0..grid.len()).map(|_| scale * rng.gen_range(-1.0..1.0)).collect();
    MeshFunction::new(*grid, values).unwrap()
}

fn lemma_grids() -> Vec<Grid> {
    let mut grids = Vec::new();
    for n in [4, 8, 16] {
        grids.push(Grid::new_1d((0.0, 2.0 * PI), n).unwrap());
        grids.push(Grid::new_1d((-1.0, 1.0), n).unwrap());
        grids.push(Grid::new_2d((0.0, 2.0 * PI), (0.0, 2.0 * PI), n, n).unwrap());
        grids.push(Grid::new_2d((0.0, 1.0), (0.0, 2.0), n, n).unwrap());
    }
    grids
}

fn lemma_suite() -> Outcome {
    const SLACK: f64 = 1e-12;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = [f64::NEG_INFINITY; 5];
    let mut c_ratio = 0.0f64;
    let mut tables_ok = true;
    for grid in lemma_grids() {
        let sp = Spectral::new(&grid);
        tables_ok &= sp.table().check_inequalities(1e-12).is_ok();
        for _ in 0..1000 {
            let u = random_mesh(&grid, &mut rng);
            let (semi1, semi2) = (sp.seminorm_1h(&u).unwrap(), sp.seminorm_2h(&u).unwrap());
            let (grad, lap, l2) = (fd_gradient_norm(&u), fd_laplacian_norm(&u), norm_h(&u));
            let gaps = [
                sp.norm_lh(&u).unwrap() - 2f64.sqrt() * semi1,
                lap - semi2,
                semi2 - PI * PI / 4.0 * lap,
                semi1 - PI / 2.0 * grad,
                grad * grad - l2 * lap,
            ];
            for (w, g) in worst.iter_mut().zip(gaps) {
                *w = w.max(g);
            }
            let inf = norm_inf(&u);
            c_ratio = c_ratio.max(inf * inf / (l2 * (lap + l2)));
        }
    }
    let pass = tables_ok && worst.iter().all(|&g| g <= SLACK);
    outcome(
        pass,
        format!(
            "max violations [{}], eigen tables {}, sup-norm ratio {:.3}",
            worst.iter().map(|g| format!("{g:.1e}")).collect::<Vec<_>>().join(", "),
            if tables_ok { "ok" } else { "broken" },
            c_ratio
        ),
    )
}

fn rel_diff(a: &MeshFunction, b: &MeshFunction) -> f64 {
    let scale = norm_inf(b).max(f64::MIN_POSITIVE);
    a.values()
        .iter()
        .zip(b.values())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
        / scale
}

fn dense_halfstep(stepper: &Stepper, u_n: &MeshFunction, u_hat: &MeshFunction, g: &MeshFunction) -> MeshFunction {
    let grid = *u_n.grid();
    let cfg = stepper.config();
    let n = grid.len();
    let a2 = dense_oracle(&grid, DenseOperator::A2).unwrap();
    let mass = DMatrix::<f64>::identity(n, n) + &a2;
    let d = dense_d(u_hat, cfg.p).unwrap();
    let lhs = &mass + d * (0.5 * cfg.tau);
    let rhs = &mass * DVector::from_column_slice(u_n.values()) + DVector::from_column_slice(g.values()) * (0.5 * cfg.tau);
    let sol = lhs.lu().solve(&rhs).unwrap();
    MeshFunction::new(grid, sol.iter().copied().collect()).unwrap()
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut op_err, mut solve_err) = (0.0f64, 0.0f64);
    for n in [4, 8] {
        for grid in [
            Grid::new_2d((0.0, 2.0 * PI), (0.0, 2.0 * PI), n, n).unwrap(),
            Grid::new_2d((0.0, 1.0), (-1.0, 2.0), n, n).unwrap(),
        ] {
            let sp = Spectral::new(&grid);
            let t = sp.table();
            let pairs = [
                (symbol_a(t), DenseOperator::A),
                (symbol_a2(t), DenseOperator::A2),
                (symbol_b(t), DenseOperator::B),
                (symbol_lh(t), DenseOperator::Lh),
            ];
            for _ in 0..20 {
                let u = random_mesh(&grid, &mut rng);
                for (sym, op) in &pairs {
                    let fast = sp.apply_symbol(sym, &u).unwrap();
                    let slow = apply_dense(&dense_oracle(&grid, *op).unwrap(), &u);
                    op_err = op_err.max(rel_diff(&fast, &slow));
                }
                let w = random_mesh(&grid, &mut rng).scale(0.1);
                for p in 1..=3 {
                    let fast = sp.apply_d(&w, &u, p).unwrap();
                    let slow = apply_dense(&dense_d(&w, p).unwrap(), &u);
                    op_err = op_err.max(rel_diff(&fast, &slow));
                }
            }
            for (tau, p) in [(0.01, 1), (0.1, 2), (0.05, 3)] {
                let mut cfg = SchemeConfig::new(tau, p).unwrap();
                let g = random_mesh(&grid, &mut rng);
                let gv = g.clone();
                let g_grid = grid;
                cfg = cfg.with_source(Some(std::sync::Arc::new(move |x, y, _t| {
                    let j1 = ((x - g_grid.x_range().0) / g_grid.h1()).round() as isize;
                    let j2 = ((y - g_grid.y_range().0) / g_grid.h2()).round() as isize;
                    gv.at(j1, j2)
                })));
                let stepper = Stepper::new(&grid, cfg).unwrap();
                let u_n = MeshFunction::from_fn(&grid, |x, y| 0.3 * (x.sin() + (2.0 * y).cos()));
                let u_hat = u_n.map(|v| 1.1 * v);
                let (fast, _) = stepper.solve_halfstep(&u_n, &u_hat, 0.5 * tau).unwrap();
                solve_err = solve_err.max(rel_diff(&fast, &dense_halfstep(&stepper, &u_n, &u_hat, &g)));
            }
        }
    }
    outcome(
        op_err <= 1e-12 && solve_err <= 1e-10,
        format!("operators {:.1e}, half-step solve {:.1e}", op_err, solve_err),
    )
}

fn smooth_data(grid: &Grid, rng: &mut ChaCha8Rng) -> MeshFunction {
    let (lx, ly) = (grid.x_range().1 - grid.x_range().0, grid.y_range().1 - grid.y_range().0);
    let modes: Vec<(f64, f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                rng.gen_range(-0.5..0.5),
                rng.gen_range(0..4) as f64,
                rng.gen_range(0..4) as f64,
                rng.gen_range(0.0..2.0 * PI),
            )
        })
        .collect();
    let two_d = grid.n2() > 1;
    MeshFunction::from_fn(grid, |x, y| {
        0.2 + modes
            .iter()
            .map(|&(a, kx, ky, ph)| {
                let ky = if two_d { ky } else { 0.0 };
                a * (2.0 * PI * (kx * x / lx + ky * y / ly) + ph).sin()
            })
            .sum::<f64>()
    })
}

fn skew_mechanism() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let grids = [
        Grid::new_1d((0.0, 2.0 * PI), 32).unwrap(),
        Grid::new_1d((-50.0, 50.0), 64).unwrap(),
        Grid::new_2d((0.0, 1.0), (0.0, 1.0), 16, 16).unwrap(),
        Grid::new_2d((0.0, 2.0 * PI), (0.0, 2.0 * PI), 8, 12).unwrap(),
    ];
    let spectra: Vec<Spectral> = grids.iter().map(Spectral::new).collect();
    let mut skew = 0.0f64;
    for i in 0..500 {
        let sp = &spectra[i % spectra.len()];
        let grid = sp.grid();
        let u_hat = random_mesh(grid, &mut rng);
        let v = random_mesh(grid, &mut rng);
        let p = rng.gen_range(1..=3);
        let dv = sp.apply_d(&u_hat, &v, p).unwrap();
        let bound = 1e-10 * (1.0 + norm_inf(&u_hat).powi(p as i32)) * norm_h(&v).powi(2);
        skew = skew.max(inner(&dv, &v).unwrap().abs() / bound);
    }
    let mut step = 0.0f64;
    for i in 0..40 {
        let grid = grids[i % grids.len()];
        let cfg = SchemeConfig::new(rng.gen_range(0.001..0.5), rng.gen_range(1..=3)).unwrap();
        let tol = cfg.iter_tol;
        let stepper = Stepper::new(&grid, cfg).unwrap();
        let u0 = smooth_data(&grid, &mut rng);
        let p0 = momentum(stepper.spectral(), &u0).unwrap();
        let (state, diag) = stepper.first_step(&u0).unwrap();
        let (_, diag2) = stepper.step(&state).unwrap();
        let worst = (diag.momentum - p0).abs().max((diag2.momentum - p0).abs()) / p0;
        step = step.max(worst / (10.0 * tol));
    }
    outcome(
        skew <= 1.0 && step <= 1.0,
        format!("skew residue {:.2e} of bound, momentum jump {:.2e} of bound", skew, step),
    )
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 8] = [
        ("1 temporal convergence, 1D soliton", table1),
        ("2 spatial convergence, 1D soliton", table2),
        ("3 temporal convergence, forced 2D problem", table4),
        ("4 spatial convergence, forced 2D problem", table5),
        ("5 momentum conservation over t in [0, 200]", momentum_conservation),
        ("6 discrete norm inequalities", lemma_suite),
        ("7 fast operators vs dense matrices", oracle_equivalence),
        ("8 skew symmetry and one-step momentum identity", skew_mechanism),
    ];
    let start = Instant::now();
    let results: Vec<(Outcome, f64)> = std::thread::scope(|s| {
        let handles: Vec<_> = criteria
            .iter()
            .map(|(_, f)| {
                s.spawn(move || {
                    let t = Instant::now();
                    let o = f();
                    (o, t.elapsed().as_secs_f64())
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| (outcome(false, "panicked"), 0.0)))
            .collect()
    });
    let mut failed = 0;
    for ((name, _), (o, secs)) in criteria.iter().zip(&results) {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!o.pass);
        println!("{tag} criterion {name} ({secs:.1}s): {}", o.detail);
    }
    println!(
        "acceptance: {} passed, {} failed in {:.1}s",
        criteria.len() - failed,
        failed,
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
