//! Acceptance run: one PASS/FAIL line per criterion, with details indented
//! underneath. Exits non-zero when a criterion fails that is not listed in
//! `KNOWN_DEVIATIONS` (those are reported as FAIL but explained in README).

use std::collections::HashMap;
use std::time::{Duration, Instant};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spai_mg::lfa::{
    optimal_smoothing, smoothing_factor, verify_theorem_2d, verify_theorem_3d, CoarseOperator,
    SearchBox2d, TwoGridAnalysis, DEFAULT_SAMPLES_2D, DEFAULT_SAMPLES_3D,
};
use spai_mg::multigrid::{prolong, restrict};
use spai_mg::{
    assemble_rhs, error_inf, example, laplacian, named, solve, CycleType, Grid, MgConfig,
    SmootherChoice, SmootherId, SolveReport, Stencil,
};

/// Criteria that fail for reasons analysed in the README.
const KNOWN_DEVIATIONS: &[u32] = &[3];

struct Outcome {
    passed: bool,
    details: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self {
            passed: true,
            details: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, line: String) {
        self.passed &= ok;
        self.details
            .push(format!("{} {line}", if ok { "ok  " } else { "MISS" }));
    }

    fn note(&mut self, line: String) {
        self.details.push(format!("     {line}"));
    }

    fn budget(&mut self, elapsed: Duration, limit: Duration) {
        self.check(
            elapsed < limit,
            format!(
                "runtime {:.2} s (limit {} s)",
                elapsed.as_secs_f64(),
                limit.as_secs()
            ),
        );
    }
}

fn samples(dim: usize) -> usize {
    if dim == 2 {
        DEFAULT_SAMPLES_2D
    } else {
        DEFAULT_SAMPLES_3D
    }
}

fn closed_forms() -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    let expected = [
        (SmootherId::Jacobi2d, 0.6, 0.8),
        (SmootherId::M5, 9.0 / 41.0, 0.25),
        (SmootherId::Vanka9, 7.0 / 25.0, 24.0 / 25.0),
        (
            SmootherId::M9,
            (9.0 + 8.0 * 10f64.sqrt()) / 215.0,
            (309.0 - 12.0 * 10f64.sqrt()) / 1720.0,
        ),
        (SmootherId::Jacobi3d, 5.0 / 7.0, 6.0 / 7.0),
        (SmootherId::M7, 25.0 / 73.0, 20.0 / 73.0),
    ];
    for (id, mu, omega) in expected {
        let a = laplacian(id.dim()).unwrap();
        let r = optimal_smoothing(&a, &named(id).stencil, samples(id.dim())).unwrap();
        let ok = (r.mu_opt - mu).abs() <= 2e-3 && (r.omega_opt - omega).abs() <= 2e-3;
        out.check(
            ok,
            format!(
                "{id}: mu {:.6} (want {mu:.6}), omega {:.6} (want {omega:.6})",
                r.mu_opt, r.omega_opt
            ),
        );
    }
    out.budget(start.elapsed(), Duration::from_secs(10));
    out
}

fn fixed_omega() -> Outcome {
    let mut out = Outcome::new();
    let a = laplacian(2).unwrap();
    let mu = smoothing_factor(
        &a,
        &named(SmootherId::M5tw).stencil,
        1.0,
        DEFAULT_SAMPLES_2D,
    )
    .unwrap();
    out.check(
        (mu - 21.0 / 61.0).abs() <= 2e-3,
        format!("m5tw at omega = 1: {mu:.6} (want {:.6})", 21.0 / 61.0),
    );
    out
}

struct TableRow {
    id: SmootherId,
    h: f64,
    reference: [f64; 6],
}

fn table1() -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    let rows = [
        TableRow {
            id: SmootherId::Jacobi2d,
            h: 1.0 / 256.0,
            reference: [0.800, 0.600, 0.600, 0.360, 0.216, 0.137],
        },
        TableRow {
            id: SmootherId::M5,
            h: 1.0 / 256.0,
            reference: [0.250, 0.220, 0.220, 0.087, 0.056, 0.044],
        },
        TableRow {
            id: SmootherId::M9,
            h: 1.0 / 256.0,
            reference: [0.158, 0.160, 0.160, 0.070, 0.046, 0.035],
        },
        TableRow {
            id: SmootherId::Jacobi3d,
            h: 1.0 / 64.0,
            reference: [0.857, 0.714, 0.714, 0.510, 0.364, 0.260],
        },
        TableRow {
            id: SmootherId::M7,
            h: 1.0 / 64.0,
            reference: [0.274, 0.343, 0.343, 0.152, 0.107, 0.085],
        },
    ];
    let columns = ["omega_tg", "mu", "rho1", "rho2", "rho3", "rho4"];
    let mut missed = Vec::new();
    for row in &rows {
        let a = laplacian(row.id.dim()).unwrap();
        let m = named(row.id).stencil;
        let tg = TwoGridAnalysis::new(&a, &m, row.h).unwrap();
        let best = tg.optimize_omega(1, 0, (0.0, 1.0)).unwrap();
        let mu = optimal_smoothing(&a, &m, samples(row.id.dim()))
            .unwrap()
            .mu(best.omega);
        let mut values = vec![best.omega, mu];
        values.extend((1..=4).map(|nu| tg.factor(best.omega, nu, 0).rho));
        let cells: Vec<String> = values
            .iter()
            .zip(row.reference)
            .zip(columns)
            .map(|((v, p), c)| {
                if (v - p).abs() > 0.005 {
                    missed.push(format!("{} {c}", row.id));
                    format!("{c} {v:.4}*({p:.3})")
                } else {
                    format!("{c} {v:.4}({p:.3})")
                }
            })
            .collect();
        let row_ok = values
            .iter()
            .zip(row.reference)
            .all(|(v, p)| (v - p).abs() <= 0.005);
        out.check(row_ok, format!("{}: {}", row.id, cells.join(" ")));

        let split = (tg.factor(best.omega, 1, 1).rho - tg.factor(best.omega, 2, 0).rho).abs();
        out.check(
            split <= 1e-10,
            format!("{}: split (1,1) vs (2,0) differs by {split:.2e}", row.id),
        );

        if !row_ok {
            let galerkin =
                TwoGridAnalysis::with_coarse_operator(&a, &m, row.h, CoarseOperator::Galerkin)
                    .unwrap();
            let g: Vec<String> = (1..=4)
                .map(|nu| format!("{:.4}", galerkin.factor(best.omega, nu, 0).rho))
                .collect();
            out.note(format!(
                "{}: Galerkin coarse operator (diagnostic only) gives rho1..4 = {}",
                row.id,
                g.join(", ")
            ));
        }
    }
    if !missed.is_empty() {
        out.note(format!(
            "cells outside +-0.005 (marked *): {}",
            missed.join(", ")
        ));
    }
    out.budget(start.elapsed(), Duration::from_secs(120));
    out
}

fn theorems() -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    let v = verify_theorem_2d(SearchBox2d::default(), 61, 201).unwrap();
    let t2 = start.elapsed();
    for c in &v.checks {
        out.check(
            c.passed,
            format!(
                "2D {}: {:.6} (want {:.6} +- {})",
                c.name, c.value, c.expected, c.tolerance
            ),
        );
    }
    out.budget(t2, Duration::from_secs(60));

    let five = verify_theorem_2d(SearchBox2d::five_point(), 61, 201).unwrap();
    out.note(format!(
        "5-point family: best J {:.6}, a/b {:.4} (informational)",
        five.result.best_j.unwrap_or(f64::NAN),
        five.result.best_params[0] / five.result.best_params[1]
    ));

    let start = Instant::now();
    let v = verify_theorem_3d((3.0, 20.0), 171).unwrap();
    let t3 = start.elapsed();
    for c in &v.checks {
        out.check(
            c.passed,
            format!(
                "3D {}: {:.6} (want {:.6} +- {})",
                c.name, c.value, c.expected, c.tolerance
            ),
        );
    }
    out.budget(t3, Duration::from_secs(60));
    out
}

/// (example, N, smoother, cycle, seed)
type RunKey = (usize, usize, SmootherId, CycleType, u64);
type Criterion<'a> = (u32, &'a str, Box<dyn FnOnce(&mut RunCache) -> Outcome>);

/// Runs are shared between the ordering, mesh-independence and rate checks.
#[derive(Default)]
struct RunCache {
    runs: HashMap<RunKey, (SolveReport, f64)>,
}

impl RunCache {
    fn get(
        &mut self,
        ex: usize,
        n: usize,
        id: SmootherId,
        cycle: CycleType,
        seed: u64,
    ) -> &(SolveReport, f64) {
        self.runs
            .entry((ex, n, id, cycle, seed))
            .or_insert_with(|| {
                let p = example(ex).unwrap();
                let b = assemble_rhs(&p, n).unwrap();
                let (nu1, nu2) = match cycle {
                    CycleType::W => (1, 0),
                    CycleType::V => (1, 1),
                };
                let cfg = MgConfig::new(cycle, nu1, nu2, SmootherChoice::named(id)).with_seed(seed);
                let (u, report) = solve(&b, cfg).unwrap();
                let err = error_inf(&u, &p).unwrap();
                (report, err)
            })
    }
}

const SMOOTHERS_2D: [SmootherId; 3] = [SmootherId::M9, SmootherId::M5, SmootherId::Jacobi2d];
const SMOOTHERS_3D: [SmootherId; 2] = [SmootherId::M7, SmootherId::Jacobi3d];

fn solver_vs_lfa(cache: &mut RunCache) -> Outcome {
    let mut out = Outcome::new();
    for (ex, n, ids) in [(1, 256, &SMOOTHERS_2D[..]), (3, 64, &SMOOTHERS_3D[..])] {
        for &id in ids {
            let s = named(id);
            let a = laplacian(id.dim()).unwrap();
            let rho_h = TwoGridAnalysis::new(&a, &s.stencil, 1.0 / n as f64)
                .unwrap()
                .factor(s.omega_opt_analytic, 1, 0)
                .rho;
            let rates: Vec<f64> = (0..3)
                .map(|seed| cache.get(ex, n, id, CycleType::W, seed).0.rho_hat)
                .collect();
            let ok = rates.iter().all(|r| (r - rho_h).abs() < 0.05);
            out.check(
                ok,
                format!(
                    "{id} N={n} W(1+0): rho_hat {} vs rho_h(1) {rho_h:.4}",
                    rates
                        .iter()
                        .map(|r| format!("{r:.4}"))
                        .collect::<Vec<_>>()
                        .join("/")
                ),
            );
        }
    }
    out
}

fn sizes(dim: usize) -> &'static [usize] {
    if dim == 2 {
        &[64, 128, 256]
    } else {
        &[16, 32, 64]
    }
}

fn ordering(cache: &mut RunCache) -> Outcome {
    let mut out = Outcome::new();
    for ex in 1..=3 {
        let ids: &[SmootherId] = if ex == 3 {
            &SMOOTHERS_3D
        } else {
            &SMOOTHERS_2D
        };
        let dim = ids[0].dim();
        for cycle in [CycleType::W, CycleType::V] {
            for &n in sizes(dim) {
                let iters: Vec<usize> = ids
                    .iter()
                    .map(|&id| cache.get(ex, n, id, cycle, 0).0.iterations)
                    .collect();
                let ok = iters.windows(2).all(|w| w[0] <= w[1]);
                let label: Vec<String> = ids
                    .iter()
                    .zip(&iters)
                    .map(|(id, k)| format!("{id} {k}"))
                    .collect();
                out.check(
                    ok,
                    format!("example {ex} {cycle} N={n}: {}", label.join(" <= ")),
                );
            }
        }
    }
    out
}

fn accuracy(cache: &mut RunCache) -> Outcome {
    let mut out = Outcome::new();
    for (ex, id, coarse) in [(1, SmootherId::M9, 64), (3, SmootherId::M7, 32)] {
        let e1 = cache.get(ex, coarse, id, CycleType::V, 0).1;
        let e2 = cache.get(ex, 2 * coarse, id, CycleType::V, 0).1;
        let ratio = e1 / e2;
        out.check(
            (3.7..=4.3).contains(&ratio),
            format!(
                "example {ex} N={coarse}->{}: {e1:.3e} / {e2:.3e} = {ratio:.3}",
                2 * coarse
            ),
        );
    }
    let e2a = cache.get(2, 128, SmootherId::M9, CycleType::V, 0).1;
    let e2b = cache.get(2, 256, SmootherId::M9, CycleType::V, 0).1;
    out.note(format!(
        "example 2 N=128->256 ratio {:.3} (reported only)",
        e2a / e2b
    ));
    out
}

fn mesh_independence(cache: &mut RunCache) -> Outcome {
    let mut out = Outcome::new();
    for (ex, ids, ns) in [
        (1, &SMOOTHERS_2D[..], &[64, 128, 256][..]),
        (3, &SMOOTHERS_3D[..], &[32, 64][..]),
    ] {
        for &id in ids {
            for cycle in [CycleType::W, CycleType::V] {
                let rates: Vec<f64> = ns
                    .iter()
                    .map(|&n| cache.get(ex, n, id, cycle, 0).0.rho_hat)
                    .collect();
                let spread = rates.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                    - rates.iter().cloned().fold(f64::INFINITY, f64::min);
                out.check(
                    spread < 0.05,
                    format!(
                        "{id} {cycle} N={ns:?}: rho_hat {} spread {spread:.4}",
                        rates
                            .iter()
                            .map(|r| format!("{r:.4}"))
                            .collect::<Vec<_>>()
                            .join("/")
                    ),
                );
            }
        }
    }
    out
}

fn random_symmetric_stencil(dim: usize, rng: &mut ChaCha8Rng) -> Stencil {
    let mut entries = Vec::new();
    let zs: &[i32] = if dim == 3 { &[-1, 0, 1] } else { &[0] };
    let mut weights = HashMap::new();
    for &z in zs {
        for y in -1..=1 {
            for x in -1..=1 {
                let key = [x.min(-x), y.min(-y), z.min(-z)];
                let c = *weights
                    .entry(key)
                    .or_insert_with(|| rng.random::<f64>() * 2.0 - 1.0);
                entries.push(([x, y, z], c));
            }
        }
    }
    Stencil::new(dim, entries, 2).unwrap()
}

fn random_grid(dim: usize, n: usize, rng: &mut ChaCha8Rng) -> Grid {
    Grid::from_fn(dim, n, |_| rng.random::<f64>() - 0.5).unwrap()
}

fn properties() -> Outcome {
    let mut out = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    let mut worst: f64 = 0.0;
    for dim in [2, 3] {
        for n in 2..=8 {
            if dim == 3 && n > 6 {
                continue;
            }
            for _ in 0..4 {
                let s = random_symmetric_stencil(dim, &mut rng);
                let u = random_grid(dim, n, &mut rng);
                let direct = s.apply(&u).unwrap();
                let dense = s.assemble_dense(n).unwrap() * DVector::from_column_slice(u.values());
                for (x, y) in direct.values().iter().zip(dense.iter()) {
                    worst = worst.max((x - y).abs() / (1.0 + y.abs()));
                }
            }
        }
    }
    out.check(
        worst <= 1e-13,
        format!("apply vs assembled matrix, N <= 8: max rel diff {worst:.2e}"),
    );

    let mut worst: f64 = 0.0;
    for dim in [2, 3] {
        for n in [4, 8, 16] {
            let c = random_grid(dim, n / 2, &mut rng);
            let f = random_grid(dim, n, &mut rng);
            let lhs = prolong(&c, n).unwrap().dot(&f);
            let rhs = 2f64.powi(dim as i32) * c.dot(&restrict(&f).unwrap());
            worst = worst.max((lhs - rhs).abs() / (1.0 + lhs.abs()));
        }
    }
    out.check(
        worst <= 1e-12,
        format!("<P c, f> = 2^d <c, R f>: max rel diff {worst:.2e}"),
    );

    let mut worst: f64 = 0.0;
    for id in [SmootherId::M5, SmootherId::M9, SmootherId::M7] {
        let a = laplacian(id.dim()).unwrap();
        let m = named(id).stencil;
        let n = if id.dim() == 2 { 129 } else { 33 };
        let base = optimal_smoothing(&a, &m, n).unwrap();
        for c in [0.1, 3.0, 17.0] {
            let r = optimal_smoothing(&a, &m.scaled(c), n).unwrap();
            worst = worst
                .max((r.mu_opt - base.mu_opt).abs())
                .max((r.omega_opt * c - base.omega_opt).abs());
        }
    }
    out.check(
        worst <= 1e-12,
        format!("M -> cM keeps mu_opt and scales omega_opt by 1/c: max diff {worst:.2e}"),
    );

    let b = assemble_rhs(&example(1).unwrap(), 64).unwrap();
    let cfg =
        MgConfig::new(CycleType::V, 1, 1, SmootherChoice::named(SmootherId::M9)).with_seed(11);
    let (_, r1) = solve(&b, cfg.clone()).unwrap();
    let (_, r2) = solve(&b, cfg).unwrap();
    out.check(
        r1.residual_norms == r2.residual_norms,
        "fixed seed gives bitwise-identical residual history".to_string(),
    );
    out
}

fn main() {
    let mut cache = RunCache::default();
    let criteria: Vec<Criterion> = vec![
        (
            1,
            "smoothing-factor closed forms",
            Box::new(|_| closed_forms()),
        ),
        (
            2,
            "fixed-omega smoothing factor",
            Box::new(|_| fixed_omega()),
        ),
        (3, "two-grid factor table", Box::new(|_| table1())),
        (4, "optimal-smoother search", Box::new(|_| theorems())),
        (5, "solver rate vs two-grid factor", Box::new(solver_vs_lfa)),
        (6, "smoother iteration ordering", Box::new(ordering)),
        (7, "second-order accuracy", Box::new(accuracy)),
        (8, "mesh independence", Box::new(mesh_independence)),
        (9, "property suites", Box::new(|_| properties())),
    ];
    let mut unexpected = Vec::new();
    let mut passed = 0;
    let total = criteria.len();
    for (id, name, run) in criteria {
        let start = Instant::now();
        let outcome = run(&mut cache);
        let status = if outcome.passed { "PASS" } else { "FAIL" };
        let known = !outcome.passed && KNOWN_DEVIATIONS.contains(&id);
        println!(
            "[{status}] criterion {id}: {name} ({:.1} s){}",
            start.elapsed().as_secs_f64(),
            if known {
                " [known deviation, see README]"
            } else {
                ""
            }
        );
        for line in &outcome.details {
            println!("        {line}");
        }
        if outcome.passed {
            passed += 1;
        } else if !known {
            unexpected.push(id);
        }
    }
    println!("acceptance: {passed}/{total} criteria passed");
    if !unexpected.is_empty() {
        println!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
