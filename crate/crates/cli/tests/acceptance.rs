//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Failing criteria are reported but do not fail the process unless
//! `ACCEPTANCE_STRICT` is set. The Gaussian grids use every third exponent
//! of the full ranges unless `ACCEPTANCE_FULL_GRID` is set.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use mfpc::baselines::flats::{kfc_objective, kfc_update, lkfc_objective, lkfc_update};
use mfpc::baselines::planes::{kpc_update, kppc_update, lkppc_update, proximal_objective};
use mfpc::baselines::Method;
use mfpc::cccp::{concave_subgradient, solve_column, solve_convex_subproblem, surrogate_objective, SubproblemInstance};
use mfpc::datasets::generate;
use mfpc::grid::{best_row, power_grid, run_grid, run_method, GridRow, GridSpec, InitStrategy, RunSpec};
use mfpc::io::{load_benchmark, load_csv};
use mfpc::linalg::{column_mean, ScatterMatrix};
use mfpc::metrics::{ari, nmi};
use mfpc::mfpc::solve_flat_padded;
use mfpc::{Dataset, SolverConfig};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Report {
    lines: Vec<(String, bool, String)>,
}

impl Report {
    fn record(&mut self, id: &str, pass: bool, detail: String) {
        println!("{} {id}: {detail}", if pass { "PASS" } else { "FAIL" });
        self.lines.push((id.to_owned(), pass, detail));
    }
}

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn full_grid() -> bool {
    std::env::var_os("ACCEPTANCE_FULL_GRID").is_some()
}

fn exponent_grid(lo: i32, hi: i32) -> Vec<f64> {
    if full_grid() {
        power_grid(lo, hi)
    } else {
        (lo..=hi).step_by(3).map(|e| 2f64.powi(e)).collect()
    }
}

fn grid_spec(data: &Dataset, gaussian: bool, methods: &[Method]) -> GridSpec {
    let mut spec = if gaussian {
        let mut spec = GridSpec::gaussian();
        spec.c1_grid = exponent_grid(-8, 7);
        spec.c2_grid = exponent_grid(-8, 7);
        spec.mu_grid = exponent_grid(-10, 5);
        spec
    } else {
        GridSpec::linear(data.n_features())
    };
    spec.methods = methods.to_vec();
    spec
}

struct Scores {
    ari: f64,
    nmi: f64,
}

struct SyntheticRun {
    mfpc: Option<GridRow>,
    baselines: Vec<(Method, Scores)>,
    ball_defect: Option<f64>,
    seconds: f64,
}

fn kmeans_mean(data: &Dataset, gaussian_mu: Option<f64>, seeds: u64) -> Scores {
    let truth = data.labels().unwrap();
    let (mut a, mut n) = (0.0, 0.0);
    for seed in 0..seeds {
        let spec = RunSpec {
            method: Method::Kmeans,
            k: data.n_classes(),
            c1: 1.0,
            c2: 1.0,
            p: 1,
            sigma: 100.0,
            kernel: gaussian_mu.map_or(mfpc::KernelSpec::linear(), mfpc::KernelSpec::gaussian),
            seed,
        };
        let out = run_method(data, &spec, &InitStrategy::Nng).unwrap();
        a += ari(truth, &out.labels).unwrap();
        n += nmi(truth, &out.labels).unwrap();
    }
    Scores {
        ari: a / seeds as f64,
        nmi: n / seeds as f64,
    }
}

fn run_synthetic(name: &str, gaussian: bool, with_baselines: bool) -> SyntheticRun {
    let data = generate(name, 0).unwrap();
    let k = data.n_classes();
    let start = Instant::now();
    let spec = grid_spec(&data, gaussian, &[Method::Mfpc]);
    let rows = run_grid(&data, name, k, &spec, &InitStrategy::Nng, 1).unwrap();
    let seconds = start.elapsed().as_secs_f64();
    let mfpc = best_row(&rows).cloned();
    let ball_defect = mfpc.as_ref().map(|best| {
        let run = best.point.run_spec(k, spec.sigma, spec.reduced_size);
        let fit = run_method(&data, &run, &InitStrategy::Nng).unwrap().mfpc.unwrap();
        fit.diagnostics
            .iter()
            .flat_map(|d| d.column_ball_defects.iter().copied())
            .fold(0.0, f64::max)
    });
    let mut baselines = Vec::new();
    if with_baselines {
        let methods = [Method::Kpc, Method::Kppc, Method::Lkppc, Method::Kfc, Method::Lkfc];
        let spec = grid_spec(&data, gaussian, &methods);
        let rows = run_grid(&data, name, k, &spec, &InitStrategy::Nng, 1).unwrap();
        for m in methods {
            let own: Vec<GridRow> = rows.iter().filter(|r| r.point.method == m).cloned().collect();
            if let Some(best) = best_row(&own) {
                baselines.push((
                    m,
                    Scores {
                        ari: best.ari.unwrap(),
                        nmi: best.nmi.unwrap(),
                    },
                ));
            }
        }
        let best_mu = mfpc.as_ref().and_then(|r| r.point.mu);
        baselines.push((Method::Kmeans, kmeans_mean(&data, best_mu, 20)));
    }
    SyntheticRun {
        mfpc,
        baselines,
        ball_defect,
        seconds,
    }
}

fn describe(row: &GridRow) -> String {
    let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("2^{}", v.log2().round() as i32));
    format!(
        "c1={} c2={} mu={} p={}",
        fmt(row.point.c1),
        fmt(row.point.c2),
        fmt(row.point.mu),
        row.point.p.map_or("-".to_string(), |p| p.to_string())
    )
}

fn criterion_synthetic(report: &mut Report) -> Vec<(&'static str, f64)> {
    let cases = [("haws", false, 0.95, true), ("lpe", false, 0.95, true), ("sine2", true, 0.80, false), ("spiral", true, 0.95, true)];
    let mut defects = Vec::new();
    let mut dominance = Vec::new();
    for (name, gaussian, threshold, needs_nmi) in cases {
        let run = run_synthetic(name, gaussian, name != "sine2");
        let Some(best) = &run.mfpc else {
            report.record(&format!("1 {name}"), false, "no successful grid point".into());
            continue;
        };
        let (a, n) = (best.ari.unwrap(), best.nmi.unwrap());
        let pass = a >= threshold && (!needs_nmi || n >= threshold) && run.seconds < 600.0;
        let target = if needs_nmi {
            format!("ARI and NMI >= {threshold}")
        } else {
            format!("ARI >= {threshold}")
        };
        report.record(
            &format!("1 {name}"),
            pass,
            format!(
                "MFPC grid-best ARI {a:.4} NMI {n:.4} at {} ({target}; grid took {:.0}s)",
                describe(best),
                run.seconds
            ),
        );
        if let Some(d) = run.ball_defect {
            defects.push((name, d));
        }
        if name != "sine2" {
            dominance.push((name, a, n, run.baselines));
        }
    }

    let haws = generate("haws", 0).unwrap();
    let km = kmeans_mean(&haws, None, 20);
    report.record(
        "2 kmeans haws",
        (0.35..=0.65).contains(&km.ari),
        format!("mean ARI over 20 seeds {:.4} (target [0.35, 0.65])", km.ari),
    );
    let kpc = run_method(
        &haws,
        &RunSpec {
            method: Method::Kpc,
            k: 3,
            c1: 1.0,
            c2: 1.0,
            p: 1,
            sigma: 100.0,
            kernel: mfpc::KernelSpec::linear(),
            seed: 0,
        },
        &InitStrategy::Nng,
    )
    .unwrap();
    let kpc_ari = ari(haws.labels().unwrap(), &kpc.labels).unwrap();
    report.record("2 kpc haws", kpc_ari <= 0.5, format!("ARI {kpc_ari:.4} (target <= 0.5)"));
    for (name, a, n, baselines) in dominance {
        let beaten: Vec<String> = baselines
            .iter()
            .filter(|(_, s)| !(a > s.ari && n > s.nmi))
            .map(|(m, s)| format!("{m} (ARI {:.4} NMI {:.4})", s.ari, s.nmi))
            .collect();
        report.record(
            &format!("2 dominance {name}"),
            beaten.is_empty(),
            if beaten.is_empty() {
                format!("MFPC (ARI {a:.4} NMI {n:.4}) beats all {} baselines", baselines.len())
            } else {
                format!("MFPC (ARI {a:.4} NMI {n:.4}) does not beat {}", beaten.join(", "))
            },
        );
    }
    defects
}

fn criterion_benchmarks(report: &mut Report) {
    let iris = load_benchmark("iris", data_dir()).unwrap();
    let spec = grid_spec(&iris, false, &[Method::Mfpc]);
    let rows = run_grid(&iris, "iris", 3, &spec, &InitStrategy::Nng, 1).unwrap();
    let best = best_row(&rows).unwrap();
    let n = best.nmi.unwrap();
    report.record("3 iris", n >= 0.80, format!("MFPC grid-best NMI {n:.4} at {} (target >= 0.80)", describe(best)));

    let soybean = data_dir().join("soybean.csv");
    if !soybean.exists() {
        report.record("3 soybean", false, format!("{} is not available", soybean.display()));
        return;
    }
    let data = load_benchmark("soybean", data_dir()).unwrap();
    let spec = grid_spec(&data, false, &[Method::Mfpc]);
    let rows = run_grid(&data, "soybean", data.n_classes(), &spec, &InitStrategy::Nng, 1).unwrap();
    let best = best_row(&rows).unwrap();
    let a = best.ari.unwrap();
    report.record("3 soybean", a >= 1.0 - 1e-12, format!("MFPC grid-best ARI {a:.4} (target 1.0)"));
}

fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-scale..scale))
}

fn random_subproblem(seed: u64, sigma: f64) -> SubproblemInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = rng.random_range(2..=6);
    let r = rng.random_range(3..=15);
    let a = uniform(&mut rng, d, r, 1.0);
    let x = uniform(&mut rng, d, r + 5, 0.6);
    let b = uniform(&mut rng, d, 6, 0.5);
    let config = SolverConfig {
        c1: 2f64.powi(rng.random_range(-3..=3)),
        c2: 2f64.powi(rng.random_range(-3..=3)),
        sigma,
        ..SolverConfig::default()
    };
    SubproblemInstance::new(a, &x * x.transpose(), ScatterMatrix::from_matrix(&b * b.transpose()), &config).unwrap()
}

/// Best value of a plain subgradient method with step `1 / (t + 1)`.
fn subgradient_oracle(g: &DVector<f64>, inst: &SubproblemInstance, steps: usize) -> f64 {
    let s = inst.scatter.matrix();
    let mut w = DVector::zeros(g.len());
    let mut best = surrogate_objective(&w, g, inst);
    for t in 0..steps {
        let mut sub = &w + s * &w * inst.c1 + g;
        for col in inst.others.column_iter() {
            let m = col.dot(&w);
            if m.abs() > 1.0 {
                sub += col * (inst.c2 * m.signum());
            }
        }
        let gw = &inst.gram * &w;
        if w.dot(&gw) > 1.0 {
            sub += gw * (2.0 * inst.sigma);
        }
        w -= sub / (t as f64 + 1.0);
        best = best.min(surrogate_objective(&w, g, inst));
    }
    best
}

fn criterion_solver(report: &mut Report, synthetic_defects: &[(&str, f64)]) {
    let mut worst_rise = f64::NEG_INFINITY;
    for seed in 0..200 {
        let sigma = [1.0, 10.0, 100.0][seed as usize % 3];
        let inst = random_subproblem(seed, sigma);
        let (_, trace) = solve_column(&inst).unwrap();
        for pair in trace.objectives().windows(2) {
            worst_rise = worst_rise.max(pair[1] - pair[0]);
        }
    }
    report.record(
        "4a monotone",
        worst_rise <= 1e-10,
        format!("largest step-to-step objective change {worst_rise:.3e} over 200 instances (target <= 1e-10)"),
    );

    let mut worst_gap: f64 = 0.0;
    for seed in 0..200 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 10_000);
        let sigma = 2f64.powi(rng.random_range(-1..=3));
        let inst = random_subproblem(seed + 10_000, sigma);
        let w0 = DVector::from_fn(inst.dim(), |_, _| rng.random_range(-1.0..1.0));
        let g = concave_subgradient(&w0, &inst);
        let w = solve_convex_subproblem(&g, &w0, &inst).unwrap();
        let ours = surrogate_objective(&w, &g, &inst);
        let oracle = subgradient_oracle(&g, &inst, 100_000);
        worst_gap = worst_gap.max((ours - oracle).abs());
    }
    report.record(
        "4b inner solver",
        worst_gap <= 1e-4,
        format!("largest |solver - subgradient oracle| {worst_gap:.3e} over 200 instances (target <= 1e-4)"),
    );

    let mut worst_cos: f64 = 0.0;
    for seed in 0..200 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 20_000);
        let d = rng.random_range(3..=7);
        let m = rng.random_range(12..=40);
        let x = uniform(&mut rng, d, m, 1.0);
        let members: Vec<usize> = (0..m).filter(|j| j % 2 == 0).collect();
        let center = column_mean(&x, &members).unwrap();
        let config = SolverConfig {
            c1: 2f64.powi(rng.random_range(-4..=4)),
            c2: 2f64.powi(rng.random_range(-4..=4)),
            p: rng.random_range(1..d),
            ..SolverConfig::default()
        };
        let sol = solve_flat_padded(&x, &members, &center, &config).unwrap();
        let w = &sol.projection;
        for a in 0..w.ncols() {
            for b in a + 1..w.ncols() {
                let (na, nb) = (w.column(a).norm(), w.column(b).norm());
                if na > 0.0 && nb > 0.0 {
                    worst_cos = worst_cos.max(w.column(a).dot(&w.column(b)).abs() / (na * nb));
                }
            }
        }
    }
    report.record(
        "4c orthogonality",
        worst_cos <= 1e-6,
        format!("largest column cosine {worst_cos:.3e} over 200 instances (target <= 1e-6)"),
    );

    let worst_defect = synthetic_defects.iter().map(|d| d.1).fold(0.0, f64::max);
    let per_suite: Vec<String> = synthetic_defects.iter().map(|(name, d)| format!("{name} {d:.3e}")).collect();
    report.record(
        "4d unit ball",
        !synthetic_defects.is_empty() && worst_defect <= 0.05,
        format!(
            "largest per-column ball defect of the grid-best fits: {} (target <= 0.05)",
            per_suite.join(", ")
        ),
    );
}

fn unit(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    let v = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    let norm = v.norm();
    v / norm
}

fn orthonormal(rng: &mut ChaCha8Rng, n: usize, p: usize) -> DMatrix<f64> {
    uniform(rng, n, p, 1.0).qr().q()
}

fn beats(ours: f64, probe: f64) -> bool {
    ours <= probe + 1e-9 * probe.abs().max(1.0)
}

fn criterion_eigen_updates(report: &mut Report) {
    let mut wins = [0usize; 5];
    let names = ["kpc", "kppc", "lkppc", "kfc", "lkfc"];
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 30_000);
        let n = rng.random_range(2..=6);
        let mm = rng.random_range(8..=30);
        let mo = rng.random_range(4..=mm);
        let x = uniform(&mut rng, n, mm + mo, 2.0);
        let members: Vec<usize> = (0..mm).collect();
        let others: Vec<usize> = (mm..mm + mo).collect();
        let mean = column_mean(&x, &members).unwrap();
        let c = rng.random_range(0.0..0.9);
        let c2 = rng.random_range(0.0..2.0);
        let p = rng.random_range(1..n);
        let center_term = |nu: &DVector<f64>| -> f64 { members.iter().map(|&j| (x.column(j) - nu).norm_squared()).sum() };

        let kpc = kpc_update(&x, &members).unwrap();
        let kppc = kppc_update(&x, &members, &others, c).unwrap();
        let lkppc = lkppc_update(&x, &members, &others, c).unwrap();
        let kfc = kfc_update(&x, &members, p).unwrap();
        let lkfc = lkfc_update(&x, &members, p).unwrap();
        let ours = [
            proximal_objective(&x, &members, &[], 0.0, &kpc.w, kpc.b),
            proximal_objective(&x, &members, &others, c, &kppc.w, kppc.b),
            proximal_objective(&x, &members, &others, c, &lkppc.w, lkppc.b) + c2 * center_term(lkppc.center.as_ref().unwrap()),
            kfc_objective(&x, &members, &kfc.w, &kfc.gamma),
            lkfc_objective(&x, &members, &lkfc.w, &lkfc.gamma, c),
        ];
        let mut ok = [true; 5];
        for _ in 0..1000 {
            let w = unit(&mut rng, n);
            let b = -w.dot(&mean) + rng.random_range(-1.0..1.0);
            let nu = &mean + DVector::from_fn(n, |_, _| rng.random_range(-0.5..0.5));
            let wm = orthonormal(&mut rng, n, p);
            let shift = DVector::from_fn(p, |_, _| rng.random_range(-0.5..0.5));
            let probes = [
                proximal_objective(&x, &members, &[], 0.0, &w, -w.dot(&mean)),
                proximal_objective(&x, &members, &others, c, &w, b),
                proximal_objective(&x, &members, &others, c, &w, b) + c2 * center_term(&nu),
                kfc_objective(&x, &members, &wm, &(wm.tr_mul(&mean) + &shift)),
                lkfc_objective(&x, &members, &wm, &nu, c),
            ];
            for i in 0..5 {
                ok[i] &= beats(ours[i], probes[i]);
            }
        }
        for i in 0..5 {
            wins[i] += usize::from(ok[i]);
        }
    }
    for (name, w) in names.iter().zip(wins) {
        report.record(
            &format!("5 {name}"),
            w == 100,
            format!("update beats 1000 random feasible probes on {w}/100 instances"),
        );
    }
}

fn pair_counting_ari(t: &[usize], p: &[usize]) -> f64 {
    let m = t.len();
    let (mut both, mut same_t, mut same_p) = (0.0, 0.0, 0.0);
    for a in 0..m {
        for b in a + 1..m {
            let st = t[a] == t[b];
            let sp = p[a] == p[b];
            same_t += f64::from(u8::from(st));
            same_p += f64::from(u8::from(sp));
            both += f64::from(u8::from(st && sp));
        }
    }
    let total = (m * (m - 1) / 2) as f64;
    let expected = same_t * same_p / total;
    let max = 0.5 * (same_t + same_p);
    if max == expected {
        return 1.0;
    }
    (both - expected) / (max - expected)
}

fn entropy_nmi(t: &[usize], p: &[usize]) -> f64 {
    let m = t.len() as f64;
    let kt = t.iter().max().unwrap() + 1;
    let kp = p.iter().max().unwrap() + 1;
    let mut joint = vec![vec![0.0; kp]; kt];
    for (&a, &b) in t.iter().zip(p) {
        joint[a][b] += 1.0 / m;
    }
    let rows: Vec<f64> = joint.iter().map(|r| r.iter().sum()).collect();
    let cols: Vec<f64> = (0..kp).map(|b| joint.iter().map(|r| r[b]).sum()).collect();
    let h = |ps: &[f64]| -> f64 { ps.iter().filter(|&&q| q > 0.0).map(|q| -q * q.ln()).sum() };
    let (ht, hp) = (h(&rows), h(&cols));
    let nonzero = |ps: &[f64]| ps.iter().filter(|&&q| q > 0.0).count();
    if nonzero(&rows) == 1 && nonzero(&cols) == 1 {
        return 1.0;
    }
    if nonzero(&rows) == 1 || nonzero(&cols) == 1 {
        return 0.0;
    }
    let mut mi = 0.0;
    for a in 0..kt {
        for b in 0..kp {
            if joint[a][b] > 0.0 {
                mi += joint[a][b] * (joint[a][b] / (rows[a] * cols[b])).ln();
            }
        }
    }
    mi / (0.5 * (ht + hp))
}

fn criterion_metrics(report: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(40_000);
    let (mut worst_ari, mut worst_nmi) = (0.0f64, 0.0f64);
    let mut invariant = true;
    for _ in 0..1000 {
        let m = rng.random_range(2..=50);
        let kt = rng.random_range(1..=6);
        let kp = rng.random_range(1..=6);
        let t: Vec<usize> = (0..m).map(|_| rng.random_range(0..kt)).collect();
        let p: Vec<usize> = (0..m).map(|_| rng.random_range(0..kp)).collect();
        let (a, n) = (ari(&t, &p).unwrap(), nmi(&t, &p).unwrap());
        worst_ari = worst_ari.max((a - pair_counting_ari(&t, &p)).abs());
        worst_nmi = worst_nmi.max((n - entropy_nmi(&t, &p)).abs());
        let mut perm: Vec<usize> = (0..kp.max(kt)).collect();
        for i in (1..perm.len()).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let pp: Vec<usize> = p.iter().map(|&l| perm[l]).collect();
        let tp: Vec<usize> = t.iter().map(|&l| perm[l]).collect();
        invariant &= ari(&t, &pp).unwrap() == a && nmi(&t, &pp).unwrap() == n;
        invariant &= ari(&tp, &p).unwrap() == a && nmi(&tp, &p).unwrap() == n;
    }
    report.record(
        "6 metric oracles",
        worst_ari <= 1e-12 && worst_nmi <= 1e-12,
        format!("largest deviation ARI {worst_ari:.3e}, NMI {worst_nmi:.3e} over 1000 label pairs (target <= 1e-12)"),
    );
    report.record("6 permutation invariance", invariant, format!("exact equality under relabeling: {invariant}"));
}

fn mfpc_cli(args: &[&str]) -> (bool, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_mfpc")).args(args).output().unwrap();
    (out.status.success(), out.stdout)
}

fn criterion_determinism(report: &mut Report) {
    let iris = data_dir().join("iris.csv");
    let iris = iris.to_str().unwrap();
    let mut runs: Vec<Vec<(String, Vec<u8>)>> = Vec::new();
    let mut all_ok = true;
    for _ in 0..2 {
        let dir = tempfile::tempdir().unwrap();
        let p = |name: &str| dir.path().join(name).to_str().unwrap().to_owned();
        let (haws, fit_dir, km_dir, grid_dir, kgrid_dir) = (p("haws.csv"), p("fit"), p("km"), p("grid"), p("kgrid"));
        let mut outputs = Vec::new();
        let commands: Vec<Vec<&str>> = vec![
            vec!["datagen", "haws", "--seed", "3", "--out", &haws],
            vec!["fit", "--data", &haws, "--method", "mfpc", "--c1", "0.5", "--c2", "2", "--out", &fit_dir],
            vec!["fit", "--data", &haws, "--method", "kmeans", "--seed", "4", "--out", &km_dir],
            vec!["grid", "--data", iris, "--normalize", "--method", "mfpc,kpc,lkppc,kmeans", "--c1", "0.25,4", "--c2", "0.5,8", "--workers", "2", "--out", &grid_dir],
            vec!["grid", "--data", &haws, "--kernel", "gaussian", "--method", "mfpc,kfc", "--c1", "1", "--c2", "1", "--mu", "0.5,2", "--p", "1", "--seed", "0,1", "--reduced-size", "40", "--out", &kgrid_dir],
        ];
        for cmd in &commands {
            let (ok, stdout) = mfpc_cli(cmd);
            all_ok &= ok;
            if cmd[0] == "datagen" {
                outputs.push(("datagen".to_string(), fs::read(&haws).unwrap_or_default()));
            }
            if cmd[0] == "grid" {
                outputs.push((format!("grid {}", cmd[2]), stdout));
            }
        }
        let pred = format!("{fit_dir}/labels.csv");
        let (ok, stdout) = mfpc_cli(&["eval", "--pred", &pred, "--truth", &haws]);
        all_ok &= ok;
        outputs.push(("eval".into(), stdout));
        for file in [
            format!("{fit_dir}/labels.csv"),
            format!("{fit_dir}/model.txt"),
            format!("{km_dir}/labels.csv"),
            format!("{grid_dir}/results.csv"),
            format!("{grid_dir}/best.json"),
            format!("{kgrid_dir}/results.csv"),
        ] {
            let rel = file.trim_start_matches(dir.path().to_str().unwrap()).to_owned();
            outputs.push((rel, fs::read(&file).unwrap_or_default()));
        }
        runs.push(outputs);
    }
    let differing: Vec<&str> = runs[0]
        .iter()
        .zip(&runs[1])
        .filter(|(a, b)| a.1 != b.1 || a.1.is_empty())
        .map(|(a, _)| a.0.as_str())
        .collect();
    report.record(
        "7 determinism",
        all_ok && differing.is_empty(),
        if differing.is_empty() {
            format!("{} outputs of datagen, fit, grid and eval byte-identical across two runs", runs[0].len())
        } else {
            format!("outputs differ or are missing: {}", differing.join(", "))
        },
    );
    let _ = load_csv(data_dir().join("iris.csv")).unwrap();
}

fn main() {
    let start = Instant::now();
    let mut report = Report { lines: Vec::new() };
    println!(
        "acceptance: {} Gaussian grids",
        if full_grid() { "full" } else { "every-third-exponent" }
    );
    let defects = criterion_synthetic(&mut report);
    criterion_benchmarks(&mut report);
    criterion_solver(&mut report, &defects);
    criterion_eigen_updates(&mut report);
    criterion_metrics(&mut report);
    criterion_determinism(&mut report);
    let failed: Vec<&str> = report.lines.iter().filter(|l| !l.1).map(|l| l.0.as_str()).collect();
    println!(
        "acceptance: {} passed, {} failed in {:.0}s{}",
        report.lines.len() - failed.len(),
        failed.len(),
        start.elapsed().as_secs_f64(),
        if failed.is_empty() {
            String::new()
        } else {
            format!(" (failed: {})", failed.join("; "))
        }
    );
    if !failed.is_empty() && std::env::var_os("ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
