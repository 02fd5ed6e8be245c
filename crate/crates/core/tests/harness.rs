mod common;

use std::process::Command;

use approx::assert_relative_eq;
use common::{bi_isotonic_strategy, mat, rng};
use isorank::harness::stats::{mean, paired_z, ratio_of_means, std_error, summarize, variance, Z95, Z95_ONE_SIDED};
use isorank::harness::{
    block_count, energy_capture, group_variance, lerr_loss, linf_loss, loss_general, matrix_loss, perm_loss,
    random_guess_loss, run_experiment, sandwich, verify_lemmas, EstimatorKind, ExperimentConfig, Flag,
    ObservationSpec, REPORT_COLUMNS,
};
use isorank::model::{gen_random_instance, gen_separated_instance, sample_full_observations};
use isorank::tree::{tree_sort, SampleBudget};
use isorank::trisection::{TrisectionParams, Variant};
use isorank::{Matrix, NoiseSpec, Permutation};
use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in all_permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn sq_dist(m: &Matrix, a: usize, b: usize) -> f64 {
    m.row(a).iter().zip(m.row(b).iter()).map(|(x, y)| (x - y).powi(2)).sum()
}

#[test]
fn perm_loss_examples() {
    let m = mat(&[&[0.0, 0.1], &[0.2, 0.4], &[0.5, 0.9]]);
    let id = Permutation::identity(3);
    assert_eq!(perm_loss(&m, &id, &id).unwrap(), 0.0);
    let swap = Permutation::from_ranks(vec![1, 0, 2]).unwrap();
    assert_relative_eq!(perm_loss(&m, &swap, &id).unwrap(), 2.0 * sq_dist(&m, 0, 1), epsilon = 1e-12);
    assert!(perm_loss(&m, &Permutation::identity(2), &id).is_err());
    assert!(linf_loss(&m, &id, &Permutation::identity(4)).is_err());
    assert!(lerr_loss(&m, &Permutation::identity(2), &id).is_err());
}

#[test]
fn oracle_permutations_of_tied_rows_agree() {
    let m = mat(&[&[0.3, 0.5], &[0.1, 0.2], &[0.3, 0.5], &[0.9, 1.0]]);
    let a = Permutation::from_ranks(vec![1, 0, 2, 3]).unwrap();
    let b = Permutation::from_ranks(vec![2, 0, 1, 3]).unwrap();
    assert_eq!(perm_loss(&m, &a, &b).unwrap(), 0.0);
    let guess = Permutation::from_ranks(vec![0, 3, 1, 2]).unwrap();
    assert_eq!(perm_loss(&m, &guess, &a).unwrap(), perm_loss(&m, &guess, &b).unwrap());
    assert_eq!(linf_loss(&m, &guess, &a).unwrap(), linf_loss(&m, &guess, &b).unwrap());
}

#[test]
fn two_experts_inversion() {
    let m = mat(&[&[0.1, 0.3, 0.3], &[0.4, 0.5, 0.9]]);
    let id = Permutation::identity(2);
    let flip = Permutation::from_ranks(vec![1, 0]).unwrap();
    let s = sq_dist(&m, 0, 1);
    assert_relative_eq!(linf_loss(&m, &flip, &id).unwrap(), s, epsilon = 1e-12);
    assert_relative_eq!(lerr_loss(&m, &flip, &id).unwrap(), s, epsilon = 1e-12);
    assert_eq!(lerr_loss(&m, &id, &id).unwrap(), 0.0);
    assert_eq!(linf_loss(&m, &id, &id).unwrap(), 0.0);
}

#[test]
fn random_guess_loss_is_the_average_over_all_permutations() {
    let inst = gen_random_instance(5, 4, 6, 0.0, &mut rng(1)).unwrap();
    let perms = all_permutations(5);
    let total: f64 = perms
        .iter()
        .map(|p| perm_loss(&inst.m, &Permutation::from_ranks(p.clone()).unwrap(), &inst.pi_star).unwrap())
        .sum();
    assert_relative_eq!(random_guess_loss(&inst.m), total / perms.len() as f64, max_relative = 1e-12);
    assert_eq!(random_guess_loss(&Matrix::zeros((0, 3))), 0.0);
}

#[test]
fn matrix_loss_examples() {
    let a = mat(&[&[0.0, 1.0]]);
    assert_eq!(matrix_loss(&a, &mat(&[&[0.5, 0.5]])).unwrap(), 0.5);
    assert!(matrix_loss(&a, &mat(&[&[0.5]])).is_err());
}

#[test]
fn stats_examples() {
    let x = [1.0, 2.0, 3.0, 4.0];
    assert_eq!(mean(&x), 2.5);
    assert_relative_eq!(variance(&x), 5.0 / 3.0, epsilon = 1e-12);
    assert_relative_eq!(std_error(&x), (5.0f64 / 12.0).sqrt(), epsilon = 1e-12);
    let s = summarize(&x);
    assert_eq!(s.count, 4);
    assert_relative_eq!(s.hi - s.mean, Z95 * s.se, epsilon = 1e-12);
    assert_eq!(variance(&[7.0]), 0.0);
    let normal = Normal::standard();
    assert_relative_eq!(Z95, normal.inverse_cdf(0.975), epsilon = 1e-9);
    assert_relative_eq!(Z95_ONE_SIDED, normal.inverse_cdf(0.95), epsilon = 1e-9);
}

#[test]
fn ratio_and_paired_statistics() {
    let a = [2.0, 4.0, 6.0];
    let b = [1.0, 2.0, 3.0];
    let r = ratio_of_means(&a, &b);
    assert_relative_eq!(r.mean, 2.0, epsilon = 1e-12);
    assert!(r.se < 1e-9);
    assert_eq!(paired_z(&b, &b), 0.0);
    assert_eq!(paired_z(&[2.0, 3.0, 4.0], &b), f64::INFINITY);
    let z = paired_z(&[1.0, 2.0, 4.0], &[1.5, 1.5, 1.5]);
    let diff = [-0.5, 0.5, 2.5];
    assert_relative_eq!(z, mean(&diff) / std_error(&diff), epsilon = 1e-12);
}

#[test]
fn group_variance_example() {
    let m = mat(&[&[0.0, 0.0], &[1.0, 1.0], &[5.0, 5.0]]);
    assert_relative_eq!(group_variance(&m, &[0, 1]), 1.0, epsilon = 1e-12);
    assert_eq!(group_variance(&m, &[]), 0.0);
    assert_eq!(group_variance(&m, &[2]), 0.0);
}

#[test]
fn population_lemmas_on_random_instances() {
    for seed in 0..10 {
        let inst = gen_random_instance(8, 32, 10, 0.05, &mut rng(100 + seed)).unwrap();
        let params = TrisectionParams::new(0.05, 0.05, Variant::Ht).unwrap();
        let root: Vec<usize> = (0..8).collect();
        let e = energy_capture(&inst.m, &root, &params).unwrap();
        assert!(e.holds, "seed {seed}: {e:?}");
        assert!(e.variance >= 0.0 && e.best_bound >= 16.0 * 0.05 * 0.05);
        let b = block_count(&inst.m, &root, &params).unwrap();
        assert_eq!(b.violations, 0, "seed {seed}: {b:?}");
        assert!(b.pairs > 0);
    }
}

#[test]
fn sandwich_on_clean_samples() {
    let inst = gen_random_instance(8, 64, 12, 0.05, &mut rng(7)).unwrap();
    let params = TrisectionParams::paper(0.05, 0.05, Variant::Ht).unwrap();
    let root: Vec<usize> = (0..8).collect();
    let report = sandwich(&inst.m, &inst.m, &root, &params).unwrap();
    assert!(report.pairs > 0);
    assert!(report.all(), "{report:?}");
}

#[test]
fn loss_bound_on_noiseless_runs() {
    for seed in 0..5 {
        let inst = gen_separated_instance(8, 16, 0.0, &mut rng(200 + seed)).unwrap();
        let params = TrisectionParams::new(0.0, 0.05, Variant::Ht).unwrap();
        let budget = SampleBudget::practical(8, 16);
        let pool = sample_full_observations(&inst, 6, &NoiseSpec::None, &mut rng(300 + seed)).unwrap();
        let trace = tree_sort(&pool, &params, &budget, &mut rng(400 + seed)).unwrap();
        let lg = loss_general(&inst, &trace, budget.t_inf).unwrap();
        assert!(lg.property1);
        assert_eq!(lg.holds(), Some(true));
        assert_eq!(lg.loss, 0.0);
        let flags = verify_lemmas(&inst, &trace, &params, budget.t_inf).unwrap();
        assert!(flags.energy && flags.block_count);
        assert_eq!(flags.loss_general, Some(true));
        assert_eq!(flags.property1_rate, 1.0);
    }
}

fn config(json: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(json).unwrap()
}

const FULL_CONFIG: &str = r#"{
    "instance": {"generator": "separated", "n": 8, "d": 16},
    "estimators": ["ht", "wm", "borda"],
    "noise": {"kind": "none"},
    "observations": {"kind": "full"},
    "seeds": [1, 2, 3],
    "checks": true,
    "timing": false
}"#;

#[test]
fn config_defaults_and_validation() {
    let cfg = config(FULL_CONFIG);
    assert_eq!(cfg.delta, 0.05);
    assert!(cfg.baseline.is_none() && cfg.output.is_none());
    assert_eq!(cfg.observations, ObservationSpec::Full { upsilon: None });
    assert!(ExperimentConfig::from_json(&FULL_CONFIG.replace("[1, 2, 3]", "[]")).is_err());
    let poisson = FULL_CONFIG.replace(r#"{"kind": "full"}"#, r#"{"kind": "poisson", "lambdas": [1.0, -2.0]}"#);
    assert!(ExperimentConfig::from_json(&poisson).is_err());
    assert!(ExperimentConfig::from_json("{}").is_err());
}

#[test]
fn noiseless_full_campaign() {
    let report = run_experiment(&config(FULL_CONFIG)).unwrap();
    assert_eq!(report.rows.len(), 3 * 3);
    assert!(report.errors().is_empty());
    for row in &report.rows {
        assert_eq!(row.perm_loss, 0.0, "{row:?}");
        assert_eq!(row.runtime_ms, 0.0);
        if row.estimator == EstimatorKind::Borda {
            assert_eq!(row.prop1_ok, Flag::NotApplicable);
        } else {
            assert_eq!(row.prop1_ok, Flag::Pass);
            assert_eq!(row.lossgen_ok, Flag::Pass);
        }
    }
    assert_eq!(report.rows.iter().filter(|r| r.sandwich_ok != Flag::NotApplicable).count(), 3);
    assert_eq!(report.losses(EstimatorKind::Wm, None), vec![0.0; 3]);
}

#[test]
fn poisson_campaign_shape_and_errors() {
    let json = r#"{
        "instance": {"generator": "random", "n": 4, "d": 8, "components": 5},
        "estimators": ["wmp", "borda", "pc", "ht"],
        "noise": {"kind": "gaussian", "sigma": 0.2},
        "observations": {"kind": "poisson", "lambdas": [0.5, 40.0]},
        "seeds": [5, 6],
        "matrix_loss": true,
        "timing": false
    }"#;
    let report = run_experiment(&config(json)).unwrap();
    assert_eq!(report.rows.len(), 4 * 2 * 2);
    let errors = report.errors();
    assert_eq!(errors.len(), 4);
    assert!(errors.iter().all(|r| r.estimator == EstimatorKind::Ht));
    for row in report.rows.iter().filter(|r| r.error.is_none()) {
        assert!(row.perm_loss >= 0.0 && row.linf_loss <= row.lerr_loss + 1e-12);
        assert!(row.matrix_loss.is_some_and(|v| v >= 0.0));
    }
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let json = FULL_CONFIG.replace(r#"{"kind": "none"}"#, r#"{"kind": "gaussian", "sigma": 0.3}"#);
    let cfg = config(&json);
    let mut a = Vec::new();
    let mut b = Vec::new();
    run_experiment(&cfg).unwrap().write_csv(&mut a).unwrap();
    run_experiment(&cfg).unwrap().write_csv(&mut b).unwrap();
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().next().unwrap(), REPORT_COLUMNS.join(","));
    assert_eq!(text.lines().count(), 1 + 9);
}

#[test]
fn summary_ratio_column() {
    let json = FULL_CONFIG
        .replace(r#"{"kind": "none"}"#, r#"{"kind": "gaussian", "sigma": 0.3}"#)
        .replace(r#""timing": false"#, r#""timing": false, "baseline": "borda""#);
    let cfg = config(&json);
    let report = run_experiment(&cfg).unwrap();
    let mut out = Vec::new();
    report.write_summary_csv(cfg.baseline, &mut out).unwrap();
    let mut reader = csv::Reader::from_reader(out.as_slice());
    let header = reader.headers().unwrap().clone();
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 3);
    let borda = rows.iter().find(|r| &r[col("estimator")] == "borda").unwrap();
    if report.losses(EstimatorKind::Borda, None).iter().any(|&v| v > 0.0) {
        assert_eq!(borda[col("ratio")].parse::<f64>().unwrap(), 1.0);
    }
    let wm = rows.iter().find(|r| &r[col("estimator")] == "wm").unwrap();
    assert_eq!(wm[col("count")].parse::<usize>().unwrap(), 3);
}

fn isorank(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_isorank")).args(args).output().unwrap()
}

#[test]
fn cli_generates_and_ranks() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.json");
    let obs = dir.path().join("obs.csv");
    let out = isorank(&[
        "gen", "--n", "4", "--d", "16", "--zeta", "0.1", "--seed", "3",
        "--out", inst.to_str().unwrap(), "--lambda", "50", "--obs", obs.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let instance = isorank::ProblemInstance::from_json(&std::fs::read_to_string(&inst).unwrap()).unwrap();
    for estimator in ["wmp", "pc", "borda"] {
        let out = isorank(&[
            "rank", "--obs", obs.to_str().unwrap(), "--n", "4", "--d", "16", "--lambda", "50",
            "--estimator", estimator, "--zeta", "0.1",
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        let mut ranks: Vec<u64> = v["ranks"].as_array().unwrap().iter().map(|r| r.as_u64().unwrap()).collect();
        ranks.sort_unstable();
        assert_eq!(ranks, vec![0, 1, 2, 3]);
    }
    let out = isorank(&["verify", "--instance", inst.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let flags: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(flags["energy"].is_boolean());
    assert_eq!(instance.n(), 4);
}

#[test]
fn cli_runs_a_campaign() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, FULL_CONFIG).unwrap();
    let report = dir.path().join("report.csv");
    let summary = dir.path().join("summary.csv");
    let out = isorank(&[
        "run", "--config", cfg.to_str().unwrap(), "--out", report.to_str().unwrap(),
        "--seed-base", "42", "--summary", summary.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&report).unwrap();
    assert_eq!(text.lines().count(), 10);
    assert!(text.lines().skip(1).all(|l| ["43", "44", "45"].contains(&l.split(',').nth(2).unwrap())));
    assert_eq!(std::fs::read_to_string(&summary).unwrap().lines().count(), 4);
    let bad = isorank(&["run", "--config", dir.path().join("missing.json").to_str().unwrap()]);
    assert!(!bad.status.success());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn linf_and_lerr_sandwich(m in bi_isotonic_strategy(2..9, 1..6), seed in any::<u64>()) {
        let n = m.nrows();
        let pi_star = Permutation::random(n, &mut rng(seed));
        let pi_hat = Permutation::random(n, &mut rng(seed ^ 0x9e37));
        let mut x = Matrix::zeros(m.raw_dim());
        for e in 0..n {
            x.row_mut(e).assign(&m.row(pi_star.rank(e)));
        }
        let linf = linf_loss(&x, &pi_hat, &pi_star).unwrap();
        let lerr = lerr_loss(&x, &pi_hat, &pi_star).unwrap();
        prop_assert!(linf <= lerr + 1e-12);
        prop_assert!(lerr <= 4.0 * linf + 1e-12);
        let p = perm_loss(&x, &pi_hat, &pi_star).unwrap();
        prop_assert!(p <= (m.nrows() * m.ncols()) as f64 + 1e-12);
    }

    #[test]
    fn perm_loss_ignores_the_tie_representative(seed in any::<u64>(), guess in any::<u64>()) {
        let base = mat(&[&[0.1, 0.2], &[0.1, 0.2], &[0.4, 0.6], &[0.4, 0.6], &[0.4, 0.6], &[1.0, 1.0]]);
        let pi_a = Permutation::random(6, &mut rng(seed));
        let mut m = Matrix::zeros((6, 2));
        for e in 0..6 {
            m.row_mut(e).assign(&base.row(pi_a.rank(e)));
        }
        // Another oracle permutation: reshuffle within each tied class.
        let mut order = pi_a.order();
        order[..2].reverse();
        order[2..5].rotate_left(1);
        let pi_b = Permutation::from_order(&order).unwrap();
        let pi_hat = Permutation::random(6, &mut rng(guess));
        prop_assert_eq!(perm_loss(&m, &pi_hat, &pi_a).unwrap(), perm_loss(&m, &pi_hat, &pi_b).unwrap());
        prop_assert_eq!(perm_loss(&m, &pi_a, &pi_b).unwrap(), 0.0);
    }
}
