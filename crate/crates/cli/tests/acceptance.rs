//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
//!
//! Solver criteria run on a 3×3×12 beam of 0.01 × 0.01 × 0.08 (stretch axis z)
//! through the same bench harness as `trn bench`.

use nalgebra::{DMatrix, DVector, Matrix3, SMatrix, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::Path;
use std::process::Command;
use std::time::Instant;
use trn_cli::bench::{execute_bench, CellResult};
use trn_cli::config::{BenchConfig, MeshSource, ModelName, ScenarioConfig, ScenarioName, SolverSettings, StrategyConfig};
use trn_cli::output::{read_trace_csv, TraceRow};
use trn_core::assembly::{assemble, assemble_with_hessians, build_pattern, quadratic_form, DofMap};
use trn_core::energy::fd::{default_step, fd_gradient, fd_hessian};
use trn_core::energy::{element_quadratics, ElementQuadratics, EnergyModel, MaterialParams, Matrix12};
use trn_core::mesh::{generate_beam, precompute_rest, ScenarioKind, ScenarioSpec, TetMesh};
use trn_core::newton::{newton_solve, Problem, SolverConfig};
use trn_core::projection::{project_element, resolve_adaptive, ProjectionStrategy, SpectralMode};

const BEAM: MeshSource = MeshSource::Beam { divisions: [3, 3, 12], extent: [0.01, 0.01, 0.08] };
const TOL: f64 = 1e-5;

type Verdict = Result<String, String>;

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------- 1: projection inequalities

fn random_symmetric(rng: &mut impl Rng) -> Matrix12<f64> {
    let a = SMatrix::<f64, 12, 12>::from_fn(|_, _| rng.gen_range(-1.0..1.0));
    (a + a.transpose()) * 0.5
}

fn projection_inequalities() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut worst_bound, mut worst_identity) = (f64::NEG_INFINITY, 0.0f64);
    let mut trials = 0;
    while trials < 1000 {
        let div = [rng.gen_range(1..=2), rng.gen_range(1..=2), rng.gen_range(1..=2)];
        let mesh = generate_beam::<f64>(div, [1.0, 1.0, 1.0]).unwrap();
        let fixed: Vec<usize> = (0..mesh.vertex_count()).filter(|_| rng.gen_bool(0.25)).collect();
        if fixed.len() == mesh.vertex_count() {
            continue;
        }
        let layout = build_pattern(&mesh, DofMap::new(&mesh, &fixed));
        let raw: Vec<Matrix12<f64>> = (0..mesh.tet_count()).map(|_| random_symmetric(&mut rng)).collect();
        let zeros = vec![ElementQuadratics::zero(); raw.len()];
        let dense = |hs: &[Matrix12<f64>]| layout.to_dense(&assemble_with_hessians(&layout, &zeros, hs).unwrap().hessian_values);
        let filtered = |mode| raw.iter().map(|h| project_element(h, mode, 0.0).unwrap()).collect::<Vec<_>>();
        let (a, abs, clamp) = (dense(&raw), dense(&filtered(SpectralMode::Abs)), dense(&filtered(SpectralMode::Clamp)));
        let norm_sum: f64 = raw.iter().map(|h| h.norm()).sum();

        let x = DVector::from_fn(a.nrows(), |_, _| rng.gen_range(-1.0..1.0));
        let (xa, xabs, xclamp) = (x.dot(&(&a * &x)), x.dot(&(&abs * &x)), x.dot(&(&clamp * &x)));
        // |xᵀAx| ≤ xᵀ|A|x up to roundoff; ratio to the allowance must stay ≤ 1
        worst_bound = worst_bound.max((xa.abs() - xabs) / (1e-10 * x.norm_squared() * norm_sum));
        worst_identity = worst_identity.max((xa + xabs - 2.0 * xclamp).abs() / (2.0 * xclamp).abs().max(f64::MIN_POSITIVE));
        trials += 1;
    }
    check(
        worst_bound <= 1.0 && worst_identity <= 1e-9,
        format!("{trials} trials; worst (|xᵀAx| − xᵀ|A|x) / allowance = {worst_bound:.2e}, worst identity rel err {worst_identity:.2e}"),
    )
}

// ---------------------------------------------------------------- 2: derivatives

fn derivative_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut lines = Vec::new();
    let mut ok = true;
    for model in EnergyModel::all() {
        let (mut worst_g, mut worst_h, mut n) = (0.0f64, 0.0f64, 0);
        while n < 100 {
            let rest = [Vector3::zeros(), Vector3::x(), Vector3::y(), Vector3::z()]
                .map(|p| p + Vector3::from_fn(|_, _| rng.gen_range(-0.15..0.15)));
            let dm = Matrix3::from_columns(&[rest[1] - rest[0], rest[2] - rest[0], rest[3] - rest[0]]);
            let volume = dm.determinant() / 6.0;
            let dm_inv = dm.try_inverse().unwrap();
            let f = Matrix3::identity() + Matrix3::from_fn(|_, _| rng.gen_range(-0.5..0.5));
            let x = rest.map(|p| f * p + Vector3::from_fn(|_, _| rng.gen_range(-0.05..0.05)));
            let j = Matrix3::from_columns(&[x[1] - x[0], x[2] - x[0], x[3] - x[0]]).determinant() / (6.0 * volume);
            if model == EnergyModel::SymmetricDirichletVol && j < 0.05 {
                continue;
            }
            let params = MaterialParams::new(1.0, rng.gen_range(0.0..0.49)).unwrap();
            let q = element_quadratics(model, &params, &x, &dm_inv, volume).unwrap();
            let h = default_step(&x);
            let g_fd = fd_gradient(model, &params, &x, &dm_inv, volume, h).unwrap();
            let h_fd = fd_hessian(model, &params, &x, &dm_inv, volume, 100.0 * h).unwrap();
            worst_g = worst_g.max((q.gradient - g_fd).norm() / q.gradient.norm());
            worst_h = worst_h.max((q.hessian - h_fd).norm() / q.hessian.norm());
            n += 1;
        }
        ok &= worst_g < 1e-4 && worst_h < 1e-3;
        lines.push(format!("{}: grad {worst_g:.1e}, hess {worst_h:.1e}", model.name()));
    }
    check(ok, format!("100 states/model; {}", lines.join("; ")))
}

// ---------------------------------------------------------------- 3: assembly

fn assembly_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut worst, mut meshes, mut cases) = (0.0f64, 0, 0);
    for a in 1..=9usize {
        for b in 1..=9usize {
            for c in 1..=9usize {
                if (a + 1) * (b + 1) * (c + 1) > 20 {
                    continue;
                }
                meshes += 1;
                let mesh = generate_beam::<f64>([a, b, c], [1.0, 1.2, 0.9]).unwrap();
                let rest = precompute_rest(&mesh).unwrap();
                for model in EnergyModel::all() {
                    let params = MaterialParams::new(1e5, 0.45).unwrap();
                    let x: Vec<_> =
                        mesh.rest_positions().iter().map(|p| p + Vector3::from_fn(|_, _| rng.gen_range(-0.05..0.05))).collect();
                    let elems: Vec<_> = (0..mesh.tet_count())
                        .map(|e| element_quadratics(model, &params, &mesh.element_positions(e, &x), &rest.dm_inv[e], rest.volume[e]).unwrap())
                        .collect();
                    for fixed in [vec![], vec![0], (0..mesh.vertex_count()).filter(|v| v % 3 == 0).collect()] {
                        worst = worst.max(assembly_case(&mesh, &fixed, &elems, &mut rng));
                        cases += 1;
                    }
                }
            }
        }
    }
    check(worst < 1e-10, format!("{meshes} meshes ≤ 20 vertices, {cases} cases; worst rel err {worst:.1e}"))
}

fn assembly_case(mesh: &TetMesh<f64>, fixed: &[usize], elems: &[ElementQuadratics<f64>], rng: &mut impl Rng) -> f64 {
    let n = 3 * mesh.vertex_count();
    let mut h_full = DMatrix::zeros(n, n);
    let mut g_full = DVector::zeros(n);
    for (tet, q) in mesh.tets().iter().zip(elems) {
        for a in 0..12 {
            let ga = 3 * tet[a / 3] + a % 3;
            g_full[ga] += q.gradient[a];
            for b in 0..12 {
                h_full[(ga, 3 * tet[b / 3] + b % 3)] += q.hessian[(a, b)];
            }
        }
    }
    let free: Vec<usize> = (0..n).filter(|i| !fixed.contains(&(i / 3))).collect();
    let h_ref = DMatrix::from_fn(free.len(), free.len(), |i, j| h_full[(free[i], free[j])]);
    let g_ref = DVector::from_fn(free.len(), |i, _| g_full[free[i]]);

    let dofmap = DofMap::new(mesh, fixed);
    let layout = build_pattern(mesh, dofmap.clone());
    let sys = assemble(&layout, elems).unwrap();
    let perm: Vec<usize> = free.iter().map(|&i| dofmap.free_index(i / 3).unwrap() + i % 3).collect();
    let h_sparse = layout.to_dense(&sys.hessian_values);
    let h = DMatrix::from_fn(free.len(), free.len(), |i, j| h_sparse[(perm[i], perm[j])]);
    let g = DVector::from_fn(free.len(), |i, _| sys.gradient[perm[i]]);

    let u_ref = DVector::from_fn(free.len(), |_, _| rng.gen_range(-1.0..1.0));
    let mut u = DVector::zeros(free.len());
    for (i, &p) in perm.iter().enumerate() {
        u[p] = u_ref[i];
    }
    let q_ref = u_ref.dot(&(&h_ref * &u_ref));
    let q = quadratic_form(&layout, elems, &u);
    [
        (&h - &h_ref).norm() / h_ref.norm(),
        (&g - &g_ref).norm() / g_ref.norm().max(f64::MIN_POSITIVE),
        (q - q_ref).abs() / q_ref.abs().max(h_ref.norm() * u_ref.norm_squared() * 1e-3),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

// ---------------------------------------------------------------- benches

struct Bench {
    cells: Vec<CellResult>,
    seconds: f64,
}

impl Bench {
    fn run(dir: &Path, name: &str, model: ModelName, scenarios: Vec<ScenarioConfig>, poisson: Vec<f64>, strategies: Vec<StrategyConfig>) -> Self {
        let cfg = BenchConfig {
            version: 1,
            meshes: vec![BEAM],
            scenarios,
            poisson,
            strategies,
            young: 1e8,
            model,
            solver: SolverSettings::default(),
            output_dir: dir.join(name),
            emit_vtk: false,
            seed: 0,
            jobs: 0,
        };
        let start = Instant::now();
        let out = execute_bench(&cfg, &dir.join("bench.json"), 0).expect("bench harness runs");
        Self { cells: out.cells, seconds: start.elapsed().as_secs_f64() }
    }

    fn cell(&self, scenario: &str, poisson: f64, strategy: &str) -> &CellResult {
        self.cells
            .iter()
            .find(|c| c.cell.scenario == scenario && c.cell.poisson == poisson && c.cell.strategy == strategy)
            .unwrap_or_else(|| panic!("no cell {scenario} {poisson} {strategy}"))
    }

    fn trace(&self, c: &CellResult) -> Vec<TraceRow> {
        read_trace_csv(&c.cell.run.output_dir.join("trace.csv")).unwrap()
    }
}

fn stretch(m: f64) -> ScenarioConfig {
    ScenarioConfig { kind: ScenarioName::Stretch, magnitude: m, axis: [0.0, 0.0, 1.0], fixed_region: Some([0.0, 0.0]) }
}

fn compress(m: f64) -> ScenarioConfig {
    ScenarioConfig { kind: ScenarioName::Compress, ..stretch(m) }
}

fn three() -> Vec<StrategyConfig> {
    vec![StrategyConfig::Clamp { floor: 0.0 }, StrategyConfig::Abs, StrategyConfig::Adaptive { rho_eps: 0.01 }]
}

fn iters(c: &CellResult) -> usize {
    c.iters().unwrap_or(usize::MAX)
}

fn mean_ls(c: &CellResult) -> f64 {
    c.outcome.as_ref().map_or(f64::NAN, |s| s.mean_ls_iters)
}

fn converged(c: &CellResult) -> bool {
    c.status() == "converged"
}

fn brief(c: &CellResult) -> String {
    format!("{} {}it/{:.2}ls{}", c.cell.strategy, c.iters().map_or("-".into(), |i| i.to_string()), mean_ls(c), if converged(c) { "" } else { "(nc)" })
}

// ---------------------------------------------------------------- 4, 6–10, 12

fn psd_guarantee(benches: &[&Bench]) -> Verdict {
    let mut iterations = 0;
    let mut bad = Vec::new();
    for b in benches {
        for c in &b.cells {
            if !["clamp", "abs", "adaptive"].contains(&c.cell.strategy.as_str()) {
                continue;
            }
            let rows = b.trace(c);
            iterations += rows.len();
            if c.status() == "not_positive_definite" || rows.iter().any(|r| r.decrement < 0.0) {
                bad.push(format!("{} {} {}", c.cell.scenario, c.cell.poisson, c.cell.strategy));
            }
        }
    }
    check(bad.is_empty(), format!("{iterations} clamp/abs/adaptive iterations, {} not-positive-definite events {bad:?}", bad.len()))
}

fn hard_regime(b: &Bench) -> Verdict {
    let (clamp, adaptive) = (b.cell("stretch4", 0.495, "clamp"), b.cell("stretch4", 0.495, "adaptive"));
    let fewer = iters(adaptive) < iters(clamp) || clamp.status() == "max_iters";
    let ok = converged(adaptive) && fewer && mean_ls(adaptive) <= 2.0 && mean_ls(clamp) >= 2.0 * mean_ls(adaptive) && b.seconds < 120.0;
    check(ok, format!("{}, {}, {}; sweep wall time {:.1} s", brief(adaptive), brief(clamp), brief(b.cell("stretch4", 0.495, "abs")), b.seconds))
}

fn easy_regime(b: &Bench) -> Verdict {
    let cells: Vec<_> = ["clamp", "abs", "adaptive"].iter().map(|s| b.cell("stretch1.1", 0.3, s)).collect();
    let ok = cells.iter().all(|c| converged(c)) && iters(cells[2]) <= iters(cells[0]) + 1;
    check(ok, cells.iter().map(|c| brief(c)).collect::<Vec<_>>().join(", "))
}

fn poisson_sweep(b: &Bench, nus: &[f64]) -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for &nu in nus {
        let (clamp, abs, adaptive) = (b.cell("stretch4", nu, "clamp"), b.cell("stretch4", nu, "abs"), b.cell("stretch4", nu, "adaptive"));
        ok &= iters(adaptive) <= iters(abs).saturating_add(1);
        if nu >= 0.49 {
            ok &= iters(adaptive) < iters(clamp);
        }
        parts.push(format!("ν={nu}: {}/{}/{}", iters(clamp), iters(abs), iters(adaptive)));
    }
    check(ok, format!("iters clamp/abs/adaptive — {}", parts.join(", ")))
}

fn compression(b: &Bench) -> Verdict {
    let c = b.cell("compress0.25", 0.495, "adaptive");
    check(converged(c) && iters(c) <= 200, format!("ε=0.1: {}", brief(c)))
}

fn adaptive_structure(benches: &[&Bench]) -> Verdict {
    let mut runs = 0;
    let mut problems = Vec::new();
    for b in benches {
        for c in b.cells.iter().filter(|c| c.cell.strategy == "adaptive") {
            let StrategyConfig::Adaptive { rho_eps } = c.cell.run.solver.strategy else { unreachable!() };
            let rows = b.trace(c);
            runs += 1;
            let name = format!("{}/{}/ν={}", EnergyModel::from(c.cell.run.material.model).name(), c.cell.scenario, c.cell.poisson);
            if rows[0].mode != "abs" || rows[0].rho.is_some() {
                problems.push(format!("{name}: first iteration {} rho {:?}", rows[0].mode, rows[0].rho));
            }
            for r in &rows[1..] {
                let Some(rho) = r.rho else {
                    problems.push(format!("{name}: iteration {} has no ρ", r.iter));
                    continue;
                };
                if r.mode != resolve_adaptive(rho, rho_eps).to_string() {
                    problems.push(format!("{name}: iteration {} mode {} for ρ={rho}", r.iter, r.mode));
                }
            }
            if converged(c) {
                let last = rows.last().unwrap();
                let settled = match last.rho {
                    Some(rho) => (rho - 1.0).abs() <= 10.0 * rho_eps,
                    None => last.decrement < TOL,
                };
                if !settled {
                    problems.push(format!("{name}: final ρ {:?}", last.rho));
                }
            }
        }
    }
    check(problems.is_empty(), format!("{runs} adaptive runs checked{}", if problems.is_empty() { String::new() } else { format!("; {problems:?}") }))
}

fn energy_variants(arap: &Bench, sd: &Bench) -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, b) in [("arap_vol", arap), ("symmetric_dirichlet_vol", sd)] {
        for (scenario, nu) in [("stretch2", 0.495), ("stretch1.1", 0.3)] {
            let (clamp, abs, adaptive) = (b.cell(scenario, nu, "clamp"), b.cell(scenario, nu, "abs"), b.cell(scenario, nu, "adaptive"));
            ok &= converged(adaptive) && iters(adaptive) <= iters(clamp).min(iters(abs)).saturating_add(2);
            parts.push(format!("{name} {scenario} ν={nu}: {}/{}/{}", iters(clamp), iters(abs), iters(adaptive)));
        }
    }
    check(ok, format!("iters clamp/abs/adaptive — {}", parts.join(", ")))
}

// ---------------------------------------------------------------- 5, 11

fn strategy_equivalence() -> Verdict {
    let mesh = generate_beam([2, 2, 8], [0.01, 0.01, 0.08]).unwrap();
    let params = MaterialParams::new(1e8, 0.45).unwrap();
    let p = Problem::new(mesh, EnergyModel::StableNeoHookean, params, &ScenarioSpec::new(ScenarioKind::Stretch, 2.0)).unwrap();
    let run = |s| newton_solve(&p, &SolverConfig::with_strategy(s)).unwrap();
    let same = |a: &trn_core::SolveTrace64, b: &trn_core::SolveTrace64| {
        a.status == b.status
            && a.final_positions == b.final_positions
            && a.records.len() == b.records.len()
            && a.records.iter().zip(&b.records).all(|(r, s)| {
                r.energy == s.energy && r.decrement == s.decrement && r.rho == s.rho && r.ls_iters == s.ls_iters && r.step == s.step
            })
    };
    let (clamp, abs) = (run(ProjectionStrategy::clamp()), run(ProjectionStrategy::Abs));
    let half = same(&clamp, &run(ProjectionStrategy::FixedBlend { w: 0.5 }));
    let full = same(&abs, &run(ProjectionStrategy::FixedBlend { w: 1.0 }));
    check(
        half && full && clamp.converged(),
        format!("blend(0.5)≡clamp: {half} ({} records), blend(1)≡abs: {full} ({} records)", clamp.records.len(), abs.records.len()),
    )
}

fn determinism(dir: &Path) -> Verdict {
    let text = r#"{"version": 1,
        "mesh": {"beam": {"divisions": [3, 3, 12], "extent": [0.01, 0.01, 0.08]}},
        "scenario": {"kind": "stretch", "magnitude": 4},
        "material": {"poisson": 0.495},
        "output_dir": "OUT"}"#;
    let mut traces = Vec::new();
    for k in 0..2 {
        let cfg = dir.join(format!("det{k}.json"));
        std::fs::write(&cfg, text.replace("OUT", &format!("det{k}"))).unwrap();
        let status = Command::new(env!("CARGO_BIN_EXE_trn")).args(["run", "--config", cfg.to_str().unwrap()]).output().unwrap().status;
        if !status.success() {
            return Err(format!("run {k} exited with {status}"));
        }
        let csv = std::fs::read_to_string(dir.join(format!("det{k}/trace.csv"))).unwrap();
        // drop the wall_time column
        traces.push(csv.lines().map(|l| l.rsplit_once(',').unwrap().0.to_string()).collect::<Vec<_>>());
    }
    check(traces[0] == traces[1], format!("{} trace rows, identical apart from wall_time: {}", traces[0].len() - 1, traces[0] == traces[1]))
}

// ---------------------------------------------------------------- main

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let mut results: Vec<(usize, &str, Verdict, f64)> = Vec::new();
    let mut timed = |n: usize, name: &'static str, f: &mut dyn FnMut() -> Verdict| {
        let start = Instant::now();
        let v = f();
        results.push((n, name, v, start.elapsed().as_secs_f64()));
    };

    timed(1, "projection inequalities", &mut || {
        let start = Instant::now();
        let v = projection_inequalities();
        let t = start.elapsed().as_secs_f64();
        if t >= 10.0 { Err(format!("too slow: {t:.1} s")) } else { v }
    });
    timed(2, "derivative oracle", &mut || {
        let start = Instant::now();
        let v = derivative_oracle();
        let t = start.elapsed().as_secs_f64();
        if t >= 30.0 { Err(format!("too slow: {t:.1} s")) } else { v }
    });
    timed(3, "assembly oracle", &mut assembly_oracle);

    let nus = [0.3, 0.4, 0.45, 0.49, 0.495];
    let sweep = Bench::run(dir.path(), "sweep", ModelName::StableNeoHookean, vec![stretch(4.0)], nus.to_vec(), three());
    let easy = Bench::run(dir.path(), "easy", ModelName::StableNeoHookean, vec![stretch(1.1)], vec![0.3], three());
    let comp = Bench::run(dir.path(), "compress", ModelName::StableNeoHookean, vec![compress(0.25)], vec![0.495], vec![StrategyConfig::Adaptive { rho_eps: 0.1 }]);
    let variant = |name, model| {
        let mut b = Bench::run(dir.path(), name, model, vec![stretch(2.0)], vec![0.495], three());
        b.cells.extend(Bench::run(dir.path(), &format!("{name}_easy"), model, vec![stretch(1.1)], vec![0.3], three()).cells);
        b
    };
    let arap = variant("arap", ModelName::ArapVol);
    let sd = variant("sd", ModelName::SymmetricDirichletVol);
    let all = [&sweep, &easy, &comp, &arap, &sd];

    timed(4, "PSD guarantee", &mut || psd_guarantee(&all));
    timed(5, "strategy equivalence", &mut strategy_equivalence);
    timed(6, "hard regime", &mut || hard_regime(&sweep));
    timed(7, "easy regime", &mut || easy_regime(&easy));
    timed(8, "Poisson sweep", &mut || poisson_sweep(&sweep, &nus));
    timed(9, "compression threshold", &mut || compression(&comp));
    timed(10, "adaptive trace structure", &mut || adaptive_structure(&all));
    timed(11, "determinism", &mut || determinism(dir.path()));
    timed(12, "energy variants", &mut || energy_variants(&arap, &sd));

    let mut failed = 0;
    for (n, name, v, t) in &results {
        let (tag, detail) = match v {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {n:>2} [{tag}] {name}: {detail} ({t:.2} s)");
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", results.len());
        std::process::exit(1);
    }
    println!("all {} criteria passed", results.len());
}
