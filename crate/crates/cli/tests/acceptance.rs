//! End-to-end acceptance checks, one test per criterion. Each prints a single
//! PASS/FAIL line straight to stdout so the summary is visible without
//! `--nocapture`.

use std::io::Write;
use std::process::Command;
use std::time::Instant;

use losstree_core::simulator::{
    indirect_removal_profile, probability_from_profile, success_profile,
};
use losstree_core::stabilizer::{Basis, Graph, Sign, StabilizerTableau};
use losstree_core::{
    build_tree, estimate_success, logical_success, optimize_tree, qubit_count, run_suite,
    threshold_probe, BranchingVector, LossRate, SearchBounds, SuiteConfig,
};

fn report(n: u32, ok: bool, started: Instant, detail: &str) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    let line = format!(
        "criterion {n}: {verdict} ({:.1}s) {detail}\n",
        started.elapsed().as_secs_f64()
    );
    std::io::stdout().write_all(line.as_bytes()).unwrap();
    assert!(ok, "criterion {n}: {detail}");
}

fn rate(e: f64) -> LossRate {
    LossRate::new(e).unwrap()
}

/// 0.05, 0.10, …, 0.95
fn eps_grid() -> Vec<f64> {
    (1..=19).map(|k| k as f64 * 0.05).collect()
}

/// Every branching vector with at most `max_q` qubits.
fn vectors_up_to(max_q: u64) -> Vec<BranchingVector> {
    fn grow(prefix: &mut Vec<u32>, width: u64, q: u64, max_q: u64, out: &mut Vec<BranchingVector>) {
        out.push(BranchingVector::new(prefix.clone()).unwrap());
        for b in 1.. {
            let next = width * b;
            if q + next > max_q {
                break;
            }
            prefix.push(b as u32);
            grow(prefix, next, q + next, max_q, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for b0 in 1..=max_q {
        grow(&mut vec![b0 as u32], b0, b0, max_q, &mut out);
    }
    out
}

#[test]
fn criterion_1_oracle_equivalence() {
    let t = Instant::now();
    let vectors = vectors_up_to(20);
    let mut worst = 0.0f64;
    for b in &vectors {
        let profile = success_profile(&build_tree(b).unwrap()).unwrap();
        for e in eps_grid() {
            let diff =
                (probability_from_profile(&profile, rate(e)) - logical_success(b, rate(e)).p).abs();
            worst = worst.max(diff);
        }
    }
    report(
        1,
        worst <= 1e-12 && vectors.len() == 819,
        t,
        &format!(
            "{} trees with Q <= 20 x 19 loss rates, max |diff| = {worst:.2e}",
            vectors.len()
        ),
    );
}

#[test]
fn criterion_2_recursion_marginals() {
    let t = Instant::now();
    let mut checked = 0usize;
    let mut worst = 0.0f64;
    for b in vectors_up_to(24) {
        let tree = build_tree(&b).unwrap();
        let levels = tree.level_sizes();
        let mut first = 0usize;
        for (k, &size) in levels.iter().enumerate() {
            let v = first;
            first += size;
            let below = tree.subtree(v).len() - 1;
            if below > 18 {
                continue;
            }
            let profile = indirect_removal_profile(&tree, v).unwrap();
            for e in eps_grid() {
                let r = logical_success(&b, rate(e)).r[k];
                worst = worst.max((probability_from_profile(&profile, rate(e)) - r).abs());
            }
            checked += 1;
        }
    }
    report(
        2,
        worst <= 1e-12,
        t,
        &format!("{checked} (tree, level) subtrees of <= 18 qubits, max |diff| = {worst:.2e}"),
    );
}

#[test]
fn criterion_3_threshold() {
    let t = Instant::now();
    let bounds = SearchBounds::default();
    let improvable: Vec<(f64, bool)> = [0.30, 0.40, 0.45, 0.49, 0.50, 0.55, 0.60]
        .into_iter()
        .map(|e| (e, threshold_probe(rate(e), &bounds).unwrap()))
        .collect();
    let ok = improvable.iter().all(|&(e, got)| got == (e < 0.5));
    report(
        3,
        ok,
        t,
        &format!("probe results under default bounds: {improvable:?}"),
    );
}

#[test]
fn criterion_4_first_level_width() {
    let t = Instant::now();
    let r = optimize_tree(rate(0.2), 1e-10, &SearchBounds::default()).unwrap();
    let b0 = r.best.as_ref().map(|b| b.as_slice()[0]);
    let ok = r.feasible && b0.is_some_and(|w| w <= 15) && r.achieved_eps_eff.unwrap() <= 1e-10;
    let shape = r.best.map(|b| b.to_string()).unwrap_or_default();
    report(
        4,
        ok,
        t,
        &format!(
            "eps0 = 0.2, target 1e-10: b = ({shape}), Q = {:?}",
            r.qubits
        ),
    );
}

#[test]
fn criterion_5_polylog_scaling() {
    let t = Instant::now();
    let bounds = SearchBounds::default();
    let mut points = Vec::new();
    let mut qs = Vec::new();
    for k in 2..=10 {
        let r = optimize_tree(rate(0.2), 10f64.powi(-k), &bounds).unwrap();
        let q = r.qubits.unwrap() as f64;
        let eps = r.achieved_eps_eff.unwrap();
        points.push(((1.0 / eps).ln().ln(), q.ln()));
        qs.push(r.qubits.unwrap());
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let r2 = sxy * sxy / (sxx * syy);
    // qs runs from loosest to tightest target
    let monotone = qs.windows(2).all(|w| w[0] <= w[1]);
    report(
        5,
        r2 >= 0.95 && monotone,
        t,
        &format!("R^2 = {r2:.4}, slope = {:.3}, Q = {qs:?}", sxy / sxx),
    );
}

#[test]
fn criterion_6_monte_carlo() {
    let t = Instant::now();
    let mut inside = 0;
    let mut cells = Vec::new();
    for shape in ["2,2,2", "4,7,3", "5,5,5,5"] {
        let b: BranchingVector = shape.parse().unwrap();
        let tree = build_tree(&b).unwrap();
        for e in [0.2, 0.3, 0.4] {
            let p = logical_success(&b, rate(e)).p;
            let z = |seed| {
                let est = estimate_success(&tree, rate(e), 1_000_000, seed).unwrap();
                (est.estimate - p) / est.std_error
            };
            let mut score = z(1);
            if score.abs() > 4.0 {
                score = z(2);
            }
            inside += usize::from(score.abs() <= 4.0);
            cells.push(format!("({shape}; {e}) z={score:.2}"));
        }
    }
    report(
        6,
        inside >= 8,
        t,
        &format!("{inside}/9 cells within 4 sigma: {}", cells.join(", ")),
    );
}

#[test]
fn criterion_7_stabilizer_rules() {
    let t = Instant::now();
    let reports = run_suite(&SuiteConfig::default()).unwrap();
    let suite_ok = reports.iter().all(|r| r.ok() && r.instances >= 500);

    // X on one end of a bonded pair fixes Z on the other end
    let pair = Graph::from_edges(2, &[(0, 1)]).unwrap();
    let pair_ok = [Sign::Plus, Sign::Minus].into_iter().all(|x| {
        let mut s = StabilizerTableau::graph_state(&pair);
        let first = s.measure_forced(0, Basis::X, x).unwrap();
        let second = s.measure_forced(1, Basis::Z, x).unwrap();
        !first.deterministic && second.deterministic
    });

    let corrupted = run_suite(&SuiteConfig {
        instances: 50,
        corrupt_sign: true,
        ..SuiteConfig::default()
    })
    .unwrap();
    let self_test_ok = corrupted.iter().all(|r| r.passed == 0);

    let summary: Vec<String> = reports
        .iter()
        .map(|r| format!("{} {}/{}", r.rule, r.passed, r.instances))
        .collect();
    report(
        7,
        suite_ok && pair_ok && self_test_ok,
        t,
        &format!(
            "{}; two-qubit certainty {pair_ok}; corrupted run fails everywhere {self_test_ok}",
            summary.join(", ")
        ),
    );
}

#[test]
fn criterion_8_trivial_limits() {
    let t = Instant::now();
    let mut ok = true;
    for b in vectors_up_to(12) {
        let lossless = logical_success(&b, rate(0.0));
        let m = b.len();
        ok &= lossless.p == 1.0 && lossless.eps_eff == 0.0;
        ok &= lossless.r[..m - 1].iter().all(|&r| r == 1.0);
        ok &= logical_success(&b, rate(1.0)).p == 0.0;
    }
    for b0 in 1..=12u32 {
        let b = BranchingVector::new(vec![b0]).unwrap();
        let profile = success_profile(&build_tree(&b).unwrap()).unwrap();
        for e in eps_grid() {
            let closed = (1.0 - e).powi(b0 as i32);
            ok &= (logical_success(&b, rate(e)).p - closed).abs() <= 1e-12;
            ok &= (probability_from_profile(&profile, rate(e)) - closed).abs() <= 1e-12;
        }
    }
    ok &= qubit_count(&"2,2,2".parse().unwrap()).unwrap() == 14;
    report(
        8,
        ok,
        t,
        "eps0 = 0 and 1 limits, depth-0 closed form vs enumeration",
    );
}

fn run_cli(args: &[&str], threads: &str) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_losstree"))
        .args(args)
        .args(["--threads", threads])
        .env_remove("LOSSTREE_THREADS")
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

#[test]
fn criterion_9_cli_determinism() {
    let t = Instant::now();
    let commands: [&[&str]; 7] = [
        &["prob", "--b", "4,7,3", "--eps0", "0.25"],
        &["optimize", "--eps0", "0.2", "--target", "1e-6"],
        &[
            "optimize", "--eps0", "0.3", "--target", "1e-3", "--greedy", "--format", "csv",
        ],
        &[
            "sweep",
            "--eps0",
            "0.2,0.3",
            "--targets",
            "1e-2,1e-4",
            "--format",
            "csv",
        ],
        &[
            "simulate", "--b", "4,7,3", "--eps0", "0.3", "--trials", "200000", "--seed", "5",
        ],
        &[
            "simulate", "--b", "2,2,2", "--eps0", "0.2", "--trials", "100001", "--seed", "9",
            "--format", "csv",
        ],
        &["verify", "--seed", "3", "--instances", "200"],
    ];
    let mut stable = 0;
    for args in commands {
        let runs = [
            run_cli(args, "1"),
            run_cli(args, "1"),
            run_cli(args, "4"),
            run_cli(args, "4"),
        ];
        if runs.iter().all(|r| r == &runs[0]) && !runs[0].is_empty() {
            stable += 1;
        }
    }
    report(
        9,
        stable == commands.len(),
        t,
        &format!(
            "{stable}/{} commands byte-identical across two runs and threads 1, 4",
            commands.len()
        ),
    );
}
