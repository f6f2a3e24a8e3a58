//! Acceptance suite. Prints one PASS/FAIL line per criterion and fails if any criterion fails.

mod common;

use std::time::{Duration, Instant};

use hiersum::decomposition::ceil_log2;
use hiersum::generators::{
    gen_mis_reduction, gen_power_conflict, gen_simple_conflict, gen_two_tree_example, max_independent_set_size,
    random_digraph, random_tree, GeneratedInstance,
};
use hiersum::oracle::{brute_force_conflict_free, brute_force_optimal};
use hiersum::weights::weights_from_aggregates;
use hiersum::{
    aggregate, approximation_bound, decompose_by_height, decompose_paths, is_conflict_free, is_overlap_free, solve,
    weight_absdiff, weight_boxcox, DimensionTree, Solution, SolverConfig, WeightFunction,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn run(k: usize, inst: &GeneratedInstance) -> Result<Solution, String> {
    let cfg = SolverConfig::new(k).map_err(|e| e.to_string())?;
    solve(&inst.space, &inst.weights, &cfg).map_err(|e| e.to_string())
}

fn within(elapsed: Duration, limit: Duration, what: &str) -> Result<(), String> {
    ensure(elapsed < limit, || format!("{what} took {elapsed:?}, limit {limit:?}"))
}

fn motivating_example() -> Outcome {
    let inst = gen_two_tree_example(1.0).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let sol = run(2, &inst)?;
    let elapsed = start.elapsed();
    let keys: Vec<Vec<&str>> = sol.segments.iter().map(|s| inst.space.keys_of(s)).collect();
    ensure(keys == [vec!["r1", "a2"], vec!["r1", "b2"]], || format!("segments {keys:?}"))?;
    ensure(sol.total_weight == 4.0, || format!("weight {}", sol.total_weight))?;
    within(elapsed, Duration::from_millis(1), "solve")?;
    Ok(format!("{{(r1,a2),(r1,b2)}} weight 4 in {elapsed:?}"))
}

fn conflict_gap() -> Outcome {
    let inst = gen_simple_conflict().map_err(|e| e.to_string())?;
    let start = Instant::now();
    let sol = run(3, &inst)?;
    let opt = brute_force_optimal(&inst.space, &inst.weights, 3).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let ratio = opt.total_weight / sol.total_weight;
    ensure(sol.total_weight == 2.0, || format!("solver weight {}", sol.total_weight))?;
    ensure(opt.total_weight == 3.0, || format!("optimal weight {}", opt.total_weight))?;
    ensure(ratio == 1.5, || format!("ratio {ratio}"))?;
    within(elapsed, Duration::from_millis(1), "solve + oracle")?;
    Ok(format!("solver 2, optimum 3, ratio 1.5 in {elapsed:?}"))
}

fn lower_bound_family() -> Outcome {
    let start = Instant::now();
    for m in 1..=2u32 {
        let inst = gen_power_conflict(m as usize).map_err(|e| e.to_string())?;
        let k = 3usize.pow(m);
        let sol = run(k, &inst)?;
        let opt = brute_force_optimal(&inst.space, &inst.weights, k).map_err(|e| e.to_string())?;
        ensure(sol.total_weight == 2f64.powi(m as i32), || format!("m={m}: solver {}", sol.total_weight))?;
        ensure(opt.total_weight == 3f64.powi(m as i32), || format!("m={m}: optimum {}", opt.total_weight))?;
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(10), "both runs")?;
    Ok(format!("m=1: 2 vs 3, m=2: 4 vs 9 in {elapsed:?}"))
}

/// Shared per-instance record of suites 4 and 5.
struct SuiteRun {
    inst: GeneratedInstance,
    k: usize,
    sol: Solution,
}

fn two_dim_suite() -> Result<Vec<SuiteRun>, String> {
    (0..500u64)
        .map(|seed| {
            let inst = common::small_instance(seed, 2, 8, 4);
            let k = 1 + (seed % 4) as usize;
            let sol = run(k, &inst)?;
            Ok(SuiteRun { inst, k, sol })
        })
        .collect()
}

fn conflict_free_suite() -> Result<Vec<SuiteRun>, String> {
    (0..300u64)
        .map(|seed| {
            let d = 3 + (seed % 2) as usize;
            let inst = common::small_instance(10_000 + seed, d, 4, 3);
            let k = 1 + (seed / 2 % 4) as usize;
            let sol = run(k, &inst)?;
            Ok(SuiteRun { inst, k, sol })
        })
        .collect()
}

fn two_dim_optimality(suite: &[SuiteRun]) -> Outcome {
    let start = Instant::now();
    for (i, r) in suite.iter().enumerate() {
        let opt = brute_force_optimal(&r.inst.space, &r.inst.weights, r.k).map_err(|e| format!("instance {i}: {e}"))?;
        ensure(opt.total_weight == r.sol.total_weight, || {
            format!("instance {i}: solver {} vs optimum {}", r.sol.total_weight, opt.total_weight)
        })?;
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(60), "suite")?;
    Ok(format!("{} instances exact in {elapsed:?}", suite.len()))
}

fn conflict_free_exactness(suite: &[SuiteRun]) -> Outcome {
    let start = Instant::now();
    for (i, r) in suite.iter().enumerate() {
        let cf = brute_force_conflict_free(&r.inst.space, &r.inst.weights, r.k)
            .map_err(|e| format!("instance {i}: {e}"))?;
        ensure(cf.total_weight == r.sol.total_weight, || {
            format!("instance {i}: solver {} vs conflict-free optimum {}", r.sol.total_weight, cf.total_weight)
        })?;
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(120), "suite")?;
    Ok(format!("{} instances exact in {elapsed:?}", suite.len()))
}

fn output_invariants(suites: &[&[SuiteRun]]) -> Outcome {
    let mut count = 0;
    for r in suites.iter().flat_map(|s| s.iter()) {
        let ok = is_overlap_free(&r.inst.space, &r.sol.segments).map_err(|e| e.to_string())?
            && is_conflict_free(&r.inst.space, &r.sol.segments).map_err(|e| e.to_string())?;
        ensure(ok, || format!("infeasible output {:?}", r.sol.indices))?;
        count += 1;
    }
    Ok(format!("{count} outputs overlap-free and conflict-free"))
}

fn approximation(suite: &[SuiteRun]) -> Outcome {
    let mut worst: f64 = 1.0;
    for (i, r) in suite.iter().enumerate() {
        let opt = brute_force_optimal(&r.inst.space, &r.inst.weights, r.k).map_err(|e| e.to_string())?;
        let bound = approximation_bound(&r.inst.space);
        ensure(r.sol.total_weight >= opt.total_weight / bound, || {
            format!("instance {i}: solver {} < {} / {bound}", r.sol.total_weight, opt.total_weight)
        })?;
        if r.sol.total_weight > 0.0 {
            worst = worst.max(opt.total_weight / r.sol.total_weight);
        }
    }
    Ok(format!("{} instances within bound, worst ratio {worst:.4}", suite.len()))
}

fn mis_round_trip() -> Outcome {
    let start = Instant::now();
    for seed in 0..100u64 {
        let g = random_digraph(seed, 7, 9).map_err(|e| e.to_string())?;
        let inst = gen_mis_reduction(&g, 0.5).map_err(|e| e.to_string())?;
        let opt = brute_force_optimal(&inst.space, &inst.weights, inst.k).map_err(|e| e.to_string())?;
        let m = max_independent_set_size(&g).map_err(|e| e.to_string())? as f64;
        let expected = m + 1.5 * g.edges().len() as f64;
        ensure(opt.total_weight == expected, || {
            format!("seed {seed}: optimum {} vs {expected}", opt.total_weight)
        })?;
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(120), "suite")?;
    Ok(format!("100 digraphs match in {elapsed:?}"))
}

/// Random forest of 1..=4 trees with at most 64 leaves in total.
fn random_forest(seed: u64) -> Vec<DimensionTree> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let trees = rng.gen_range(1..=4);
        let forest: Vec<DimensionTree> = (0..trees)
            .map(|i| {
                let size = rng.gen_range(1..=60);
                let height = rng.gen_range(2..=8);
                random_tree(&mut rng, size, height, &format!("f{i}_")).unwrap()
            })
            .collect();
        if common::forest_leaves(&forest) <= 64 {
            return forest;
        }
    }
}

fn path_decomposition() -> Outcome {
    let mut max_groups = 0;
    for seed in 0..200u64 {
        let forest = random_forest(seed);
        let leaves = common::forest_leaves(&forest);
        let d = decompose_paths(&forest).map_err(|e| e.to_string())?;
        common::check_decomposition(&forest, &d).map_err(|e| format!("seed {seed}: {e}"))?;
        ensure(d.group_count() <= ceil_log2(leaves + 1), || {
            format!("seed {seed}: {} groups for {leaves} leaves", d.group_count())
        })?;
        let h = decompose_by_height(&forest).map_err(|e| e.to_string())?;
        common::check_decomposition(&forest, &h).map_err(|e| format!("seed {seed} (height): {e}"))?;
        let height = forest.iter().map(DimensionTree::height).max().unwrap();
        ensure(h.group_count() == height, || format!("seed {seed}: {} groups, height {height}", h.group_count()))?;
        max_groups = max_groups.max(d.group_count());
    }
    Ok(format!("200 forests valid, at most {max_groups} median groups"))
}

fn runtime_scaling() -> Outcome {
    let sizes: [[usize; 3]; 3] = [[25, 20, 20], [50, 50, 40], [100, 100, 100]];
    let cfg = SolverConfig::new(10).unwrap();
    let mut times = Vec::new();
    for s in sizes {
        let inst = common::sized_instance(&s, 42);
        ensure(inst.weights.is_dense(), || "weights are not dense".into())?;
        // Best of three runs damps scheduler noise.
        let mut best = Duration::MAX;
        for _ in 0..3 {
            let start = Instant::now();
            let sol = solve(&inst.space, &inst.weights, &cfg).map_err(|e| e.to_string())?;
            best = best.min(start.elapsed());
            ensure(sol.len() <= 10, || "too many segments".into())?;
        }
        times.push((inst.space.len(), best));
    }
    for w in times.windows(2) {
        let growth = w[1].1.as_secs_f64() / w[0].1.as_secs_f64();
        let linear = w[1].0 as f64 / w[0].0 as f64;
        ensure(growth <= 1.5 * linear, || {
            format!("n {} -> {}: time grew {growth:.2}x, allowed {:.2}x", w[0].0, w[1].0, 1.5 * linear)
        })?;
    }
    within(times[2].1, Duration::from_secs(60), "n = 10^6 solve")?;
    let parts: Vec<String> = times.iter().map(|(n, t)| format!("n={n}: {t:?}")).collect();
    Ok(parts.join(", "))
}

fn weight_functions() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..100_000 {
        let a: f64 = rng.gen_range(1e-3..1e6);
        let b: f64 = rng.gen_range(1e-3..1e6);
        let bc = weight_boxcox(a, b, 0.0).map_err(|e| e.to_string())?;
        ensure(bc.to_bits() == weight_absdiff(a, b).to_bits(), || format!("boxcox({a},{b},0) = {bc}"))?;
    }
    let mut checked = 0;
    for seed in 0..50u64 {
        let inst = common::small_instance(seed, 3, 5, 3);
        let cells = inst.cells.unwrap();
        let agg = aggregate(&cells, &inst.space).map_err(|e| e.to_string())?;
        if agg.totals().pre == 0.0 || agg.totals().cur == 0.0 {
            continue;
        }
        let base = weights_from_aggregates(&agg, &inst.space, WeightFunction::Composition).map_err(|e| e.to_string())?;
        let c = [2.0, 3.0, 5.0, 7.0, 10.0][seed as usize % 5];
        for (pf, cf) in [(c, 1.0), (1.0, c)] {
            let scaled = aggregate(&cells.scaled(pf, cf), &inst.space).map_err(|e| e.to_string())?;
            let w = weights_from_aggregates(&scaled, &inst.space, WeightFunction::Composition)
                .map_err(|e| e.to_string())?;
            for v in 0..inst.space.len() {
                ensure(w.get(v).to_bits() == base.get(v).to_bits(), || {
                    format!("seed {seed}, node {v}: {} vs {}", w.get(v), base.get(v))
                })?;
            }
        }
        checked += 1;
    }
    Ok(format!("boxcox(m=0) == absdiff on 1e5 pairs; composition scale-invariant on {checked} instances"))
}

fn main() {
    let two_dim = two_dim_suite();
    let conflict_free = conflict_free_suite();
    let suites = |f: &dyn Fn(&[SuiteRun], &[SuiteRun]) -> Outcome| match (&two_dim, &conflict_free) {
        (Ok(a), Ok(b)) => f(a, b),
        (Err(e), _) | (_, Err(e)) => Err(format!("suite construction failed: {e}")),
    };

    let results: Vec<(&str, Outcome)> = vec![
        ("motivating example", motivating_example()),
        ("conflict gap", conflict_gap()),
        ("lower-bound family", lower_bound_family()),
        ("two-dimensional optimality", suites(&|a, _| two_dim_optimality(a))),
        ("conflict-free exactness", suites(&|_, b| conflict_free_exactness(b))),
        ("output invariants", suites(&|a, b| output_invariants(&[a, b]))),
        ("approximation bound", suites(&|_, b| approximation(b))),
        ("independent-set round trip", mis_round_trip()),
        ("path decomposition", path_decomposition()),
        ("runtime scaling", runtime_scaling()),
        ("weight functions", weight_functions()),
    ];

    let mut failed = 0;
    for (i, (name, outcome)) in results.iter().enumerate() {
        match outcome {
            Ok(detail) => println!("criterion {:>2} {name}: PASS ({detail})", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({detail})", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
