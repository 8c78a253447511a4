//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::fs;
use std::process::ExitCode;
use std::time::Instant;

use kleene_consensus::consensus::conflict_count;
use kleene_consensus::payoff::sample_profile;
use kleene_consensus::sim::{init_three_valued, run_rng};
use kleene_consensus::{
    boolean_stochastic_consensus, consensus, emit_results, figure_config, inconsistency,
    max_payoff, run_sweep, selection_weight, valuation_payoff, Init, Operator, PayoffProfile,
    Population, RunConfig, Selection, Simulation, SweepConfig, SweepResult, TruthValue, Valuation,
    Variant,
};
use kleene_consensus_tests::{all_valuations, spearman};

const SEED: u64 = 0;

use TruthValue::{Borderline as B, False as F, True as T};

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

fn v1(t: TruthValue) -> Valuation {
    Valuation::from_truth_values(&[t]).unwrap()
}

fn fmt_series(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.3}")).collect();
    format!("[{}]", parts.join(", "))
}

fn truth_tables() -> Outcome {
    let mut bad = Vec::new();
    // rows and columns ordered 1, 1/2, 0
    let order = [T, B, F];
    let neg = [F, B, T];
    let conj = [[T, B, F], [B, B, F], [F, F, F]];
    let disj = [[T, T, T], [T, B, B], [T, B, F]];
    let cons = [[T, T, B], [T, B, F], [B, F, F]];
    let inc = [[0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]];
    let mut cells = 0;
    for (r, &a) in order.iter().enumerate() {
        cells += 1;
        if a.neg() != neg[r] || kleene_consensus::kleene::neg(a) != neg[r] {
            bad.push(format!("neg({a})"));
        }
        for (c, &b) in order.iter().enumerate() {
            cells += 4;
            if a.conj(b) != conj[r][c] {
                bad.push(format!("conj({a},{b})"));
            }
            if a.disj(b) != disj[r][c] {
                bad.push(format!("disj({a},{b})"));
            }
            if consensus(&v1(a), &v1(b)).unwrap().truth_of(0) != cons[r][c] {
                bad.push(format!("consensus({a},{b})"));
            }
            if inconsistency(&v1(a), &v1(b)).unwrap() != inc[r][c] {
                bad.push(format!("inconsistency({a},{b})"));
            }
        }
    }
    // Boolean operator: agreement is deterministic, conflict is a coin flip
    let mut rng = run_rng(SEED, 1);
    for a in [T, F] {
        for b in [T, F] {
            cells += 1;
            let mut seen = [false; 3];
            for _ in 0..200 {
                let out = boolean_stochastic_consensus(&v1(a), &v1(b), &mut rng)
                    .unwrap()
                    .truth_of(0);
                seen[out as usize] = true;
            }
            let ok = if a == b {
                seen == [a == F, false, a == T]
            } else {
                seen == [true, false, true]
            };
            if !ok {
                bad.push(format!("boolean({a},{b})"));
            }
        }
    }
    if boolean_stochastic_consensus(&v1(B), &v1(T), &mut rng).is_ok() {
        bad.push("boolean operator accepted a borderline value".into());
    }
    outcome(
        bad.is_empty(),
        format!("{cells} cells checked, mismatches: {bad:?}"),
    )
}

fn conflict_probability() -> Outcome {
    let mut rng = run_rng(SEED, 2);
    let samples = 100_000;
    let pop = init_three_valued(2, samples, &mut rng).unwrap();
    let conflicts = conflict_count(&pop.agents()[0], &pop.agents()[1]).unwrap();
    let freq = conflicts as f64 / samples as f64;
    let pass = (freq - 2.0 / 9.0).abs() <= 0.01;
    outcome(
        pass,
        format!("frequency {freq:.4} vs 2/9 = {:.4} (±0.01)", 2.0 / 9.0),
    )
}

fn initial_vagueness() -> Outcome {
    let means: Vec<f64> = (0..100)
        .map(|k| {
            let mut rng = run_rng(SEED, 1000 + k);
            init_three_valued(100, 10, &mut rng)
                .unwrap()
                .mean_vagueness()
        })
        .collect();
    let mean = means.iter().sum::<f64>() / means.len() as f64;
    let pass = (mean - 1.0 / 3.0).abs() <= 0.01;
    outcome(pass, format!("mean {mean:.4} vs 1/3 (±0.01)"))
}

fn gammas(result: &SweepResult) -> Vec<f64> {
    result.config.gamma_values.clone()
}

fn series(
    result: &SweepResult,
    variant: Variant,
    n: usize,
    f: fn(&kleene_consensus::AggregateRecord) -> f64,
) -> Vec<f64> {
    gammas(result)
        .iter()
        .map(|&g| f(result.record(variant, n, g).expect("cell present")))
        .collect()
}

const TV_UNIFORM: Variant = Variant::new(Operator::ThreeValued, Selection::Uniform);
const TV_PAYOFF: Variant = Variant::new(Operator::ThreeValued, Selection::Payoff);

fn figure_one(result: &SweepResult) -> Outcome {
    let g = gammas(result);
    let v = series(result, TV_UNIFORM, 5, |r| r.vagueness_mean);
    let crisp = g
        .iter()
        .zip(&v)
        .filter(|(g, _)| **g >= 0.3)
        .all(|(_, v)| *v <= 0.05);
    let ends = v[0] > v[v.len() - 1];
    outcome(
        crisp && ends,
        format!(
            "vagueness by gamma {}; <= 0.05 for gamma >= 0.3: {crisp}; V(0) > V(1): {ends}",
            fmt_series(&v)
        ),
    )
}

fn figure_two(result: &SweepResult) -> Outcome {
    let g = gammas(result);
    let d = series(result, TV_UNIFORM, 5, |r| r.distinct_mean);
    let single = g
        .iter()
        .zip(&d)
        .filter(|(g, _)| **g >= 0.5)
        .all(|(_, d)| *d <= 1.5);
    let rho = spearman(&g, &d);
    outcome(
        single && rho <= -0.8,
        format!(
            "distinct by gamma {}; <= 1.5 for gamma >= 0.5: {single}; spearman {rho:.3} (<= -0.8)",
            fmt_series(&d)
        ),
    )
}

fn figure_three(result: &SweepResult) -> Vec<(&'static str, Outcome)> {
    let g = gammas(result);
    let others: Vec<Variant> = Variant::all()
        .into_iter()
        .filter(|v| *v != TV_PAYOFF)
        .collect();
    let best = series(result, TV_PAYOFF, 5, |r| r.payoff_pct_mean);
    let rest: Vec<(Variant, Vec<f64>)> = others
        .iter()
        .map(|&v| (v, series(result, v, 5, |r| r.payoff_pct_mean)))
        .collect();

    let mut losers = Vec::new();
    for (k, &gamma) in g.iter().enumerate() {
        if gamma < 0.3 {
            continue;
        }
        for (v, s) in &rest {
            if best[k] <= s[k] {
                losers.push(format!("{v} at {gamma}"));
            }
        }
    }
    let a = outcome(
        losers.is_empty(),
        format!(
            "three-valued/payoff payoff% {}; not ahead: {losers:?}",
            fmt_series(&best)
        ),
    );

    let rho = spearman(&g, &best);
    let b = outcome(
        rho >= 0.8,
        format!("spearman(gamma, payoff%) = {rho:.3} (>= 0.8)"),
    );

    let at_one: Vec<(String, f64)> = rest
        .iter()
        .map(|(v, s)| (v.to_string(), s[s.len() - 1]))
        .collect();
    let c = outcome(
        at_one.iter().all(|(_, p)| p.abs() <= 10.0),
        format!("payoff% at gamma = 1: {at_one:.2?} (|x| <= 10)"),
    );
    vec![
        (
            "Figure-3 trend (a): three-valued/payoff leads for gamma >= 0.3",
            a,
        ),
        (
            "Figure-3 trend (b): three-valued/payoff rises with gamma",
            b,
        ),
        ("Figure-3 trend (c): other variants near 0 at gamma = 1", c),
    ]
}

fn figure_four(result: &SweepResult) -> Outcome {
    let g = gammas(result);
    let mut bad = Vec::new();
    let mut summary = Vec::new();
    for v in Variant::all() {
        let d = series(result, v, 5, |r| r.distinct_mean);
        for (gamma, d) in g.iter().zip(&d) {
            if *gamma >= 0.4 && *d >= 5.0 {
                bad.push(format!("{v} at {gamma}: {d}"));
            }
            if *gamma >= 0.8 && (d - 1.0).abs() > 0.2 {
                bad.push(format!("{v} at {gamma}: {d}"));
            }
        }
        summary.push(format!("{v} {}", fmt_series(&d)));
    }
    outcome(
        bad.is_empty(),
        format!(
            "distinct by gamma: {}; violations: {bad:?}",
            summary.join("; ")
        ),
    )
}

fn figure_five(result: &SweepResult) -> Outcome {
    let budget = result.config.iterations;
    let mut means = Vec::new();
    for (c, cell) in result.cells.iter().enumerate() {
        let firsts: Vec<f64> = result
            .runs_of(c)
            .map(|r| {
                let t = r.trajectory.as_ref().expect("trajectory kept");
                t.iter()
                    .find(|p| p.distinct <= 5)
                    .map_or(budget, |p| p.iteration) as f64
            })
            .collect();
        means.push((
            cell.variant,
            firsts.iter().sum::<f64>() / firsts.len() as f64,
        ));
    }
    let pass = means.iter().all(|(v, m)| match v.operator {
        Operator::ThreeValued => *m < 5_000.0,
        Operator::BooleanStochastic => *m > 10_000.0,
    });
    let parts: Vec<String> = means.iter().map(|(v, m)| format!("{v} {m:.0}")).collect();
    outcome(
        pass,
        format!(
            "mean first iteration with <= 5 distinct: {} (three-valued < 5000, boolean > 10000)",
            parts.join(", ")
        ),
    )
}

fn property_suites() -> Outcome {
    let mut failed: Vec<&str> = Vec::new();
    let mut check = |name: &'static str, ok: bool| {
        if !ok {
            failed.push(name);
        }
    };
    let vals = all_valuations(3);
    let pairs = || vals.iter().flat_map(|a| vals.iter().map(move |b| (a, b)));

    check(
        "commutativity",
        pairs().all(|(a, b)| consensus(a, b).unwrap() == consensus(b, a).unwrap()),
    );
    check(
        "idempotence",
        vals.iter().all(|a| consensus(a, a).unwrap() == *a),
    );

    let one = v1(T);
    let zero = v1(F);
    let left = consensus(&consensus(&one, &one).unwrap(), &zero).unwrap();
    let right = consensus(&one, &consensus(&one, &zero).unwrap()).unwrap();
    check("non-associativity counterexample", left != right);

    check(
        "agreement preservation and conflict resolution",
        pairs().all(|(a, b)| {
            let c = consensus(a, b).unwrap();
            (0..3).all(|i| {
                let (x, y) = (a.truth_of(i), b.truth_of(i));
                let agreed = x != y || c.truth_of(i) == x;
                let conflict = !(x != B && y == x.neg()) || c.truth_of(i) == B;
                agreed && conflict
            })
        }),
    );

    check(
        "consistent merge is union",
        pairs()
            .filter(|(a, b)| inconsistency(a, b).unwrap() == 0.0)
            .all(|(a, b)| {
                let union = Valuation::new(
                    3,
                    a.positives().chain(b.positives()),
                    a.negatives().chain(b.negatives()),
                )
                .unwrap();
                consensus(a, b).unwrap() == union
            }),
    );

    let mut absorbing = true;
    for op in [Operator::ThreeValued, Operator::BooleanStochastic] {
        for sel in [Selection::Uniform, Selection::Payoff] {
            let v: Valuation = "10110".parse().unwrap();
            let pop = Population::new(vec![v.clone(); 30]).unwrap();
            let cfg = RunConfig {
                operator: op,
                selection: sel,
                init: if op == Operator::ThreeValued {
                    Init::ThreeValued
                } else {
                    Init::Boolean
                },
                gamma: 1.0,
                iterations: 2_000,
                ..RunConfig::default()
            };
            let profile = PayoffProfile::new(vec![0.3, -0.2, 0.9, -1.0, 0.5]).unwrap();
            let mut sim = Simulation::with_population(cfg, pop, profile).unwrap();
            for _ in 0..2_000 {
                sim.step().unwrap();
            }
            absorbing &= sim.population().agents().iter().all(|a| *a == v);
        }
    }
    check("absorbing consensus", absorbing);

    let mut rng = run_rng(SEED, 3);
    let small = all_valuations(4);
    let mut bounds = true;
    let mut weights = true;
    for _ in 0..50 {
        let f = sample_profile(4, &mut rng).unwrap();
        let max = max_payoff(&f);
        for v in &small {
            let p = valuation_payoff(v, &f).unwrap();
            bounds &= p.abs() <= max + 1e-12;
            weights &= selection_weight(v, &f).unwrap() >= 0.0;
        }
    }
    let extreme = PayoffProfile::new(vec![1.0, -1.0, 1.0, -1.0]).unwrap();
    for v in &small {
        weights &= selection_weight(v, &extreme).unwrap() >= 0.0;
    }
    check("payoff bounds", bounds);
    check("selection weight nonnegative", weights);

    let config = SweepConfig {
        population_size: 30,
        iterations: 2_000,
        init: Init::Boolean,
        gamma_values: vec![0.2, 0.6],
        variants: Variant::all(),
        runs_per_cell: 3,
        master_seed: SEED,
        trajectory_gammas: vec![0.6],
        ..SweepConfig::default()
    };
    let bytes = || {
        let dir = tempfile::tempdir().unwrap();
        let out = emit_results(&run_sweep(&config).unwrap(), dir.path()).unwrap();
        [Some(out.aggregate), out.trajectories, Some(out.metadata)]
            .into_iter()
            .flatten()
            .map(|p| fs::read(p).unwrap())
            .collect::<Vec<_>>()
    };
    check("end-to-end determinism", bytes() == bytes());

    outcome(
        failed.is_empty(),
        if failed.is_empty() {
            "commutativity, idempotence, non-associativity, agreement, conflict, union, absorbing, payoff bounds, weights, determinism".to_string()
        } else {
            format!("failed: {failed:?}")
        },
    )
}

fn sweep(config: SweepConfig) -> SweepResult {
    let start = Instant::now();
    let result = run_sweep(&config).expect("sweep runs");
    eprintln!(
        "  swept {} cells x {} runs in {:.1}s",
        result.cells.len(),
        config.runs_per_cell,
        start.elapsed().as_secs_f64()
    );
    result
}

fn main() -> ExitCode {
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    let mut results: Vec<(String, Outcome)> = Vec::new();
    let mut report = |name: &str, o: Outcome| {
        println!(
            "{} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        results.push((name.to_string(), o));
    };

    report("Truth-table exactness", truth_tables());
    report("Conflict probability", conflict_probability());
    report("Initial vagueness", initial_vagueness());

    let random_selection = sweep(SweepConfig {
        n_values: vec![5],
        master_seed: SEED,
        early_stop: true,
        ..figure_config(1).unwrap()
    });
    report("Figure-1 trend", figure_one(&random_selection));
    report("Figure-2 trend", figure_two(&random_selection));

    let payoff = sweep(SweepConfig {
        master_seed: SEED,
        early_stop: true,
        ..figure_config(3).unwrap()
    });
    for (name, o) in figure_three(&payoff) {
        report(name, o);
    }
    report("Figure-4 trend", figure_four(&payoff));

    let trajectories = sweep(SweepConfig {
        master_seed: SEED,
        record_every: 10,
        early_stop: true,
        ..figure_config(5).unwrap()
    });
    report("Figure-5 speed separation", figure_five(&trajectories));
    report("Property suites", property_suites());

    let failed = results.iter().filter(|(_, o)| !o.pass).count();
    println!(
        "acceptance: {} passed, {failed} failed of {}",
        results.len() - failed,
        results.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
