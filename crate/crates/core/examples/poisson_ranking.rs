//! Partial observations: samples Poisson logs at several efforts, ranks the
//! experts and reconstructs the matrix.

use isorank::estimation::{reconstruct, ProjectionSettings};
use isorank::harness::{matrix_loss, perm_loss, random_guess_loss};
use isorank::model::gen_separated_instance;
use isorank::partial::{sample_poisson_observations, WmpOutcome};
use isorank::rng::{stream, streams};
use isorank::tree::BudgetMode;
use isorank::{NoiseSpec, Result, TrisectionParams, Variant};

fn main() -> Result<()> {
    let (n, d, zeta) = (8, 64, 0.02);
    let inst = gen_separated_instance(n, d, zeta, &mut stream(2, streams::INSTANCE))?;
    let params = TrisectionParams::new(zeta, 0.05, Variant::Wm)?;
    println!("random guess loss {:.4}", random_guess_loss(&inst.m));
    for lambda in [10.0, 400.0, 2000.0] {
        let log = sample_poisson_observations(
            &inst,
            lambda,
            &NoiseSpec::Gaussian { sigma: zeta },
            &mut stream(2, streams::OBSERVATIONS),
        )?;
        let rec = reconstruct(
            &log,
            &params,
            BudgetMode::Practical,
            &ProjectionSettings::default(),
            &mut stream(2, streams::ESTIMATOR),
        )?;
        let path = match &rec.ranking.outcome {
            WmpOutcome::RandomGuess => "random guess".to_string(),
            WmpOutcome::ReductionFailed(why) => format!("reduction failed ({why})"),
            WmpOutcome::Tree(t) => format!("tree sort, {} block sorts", t.records.len()),
        };
        println!(
            "λ = {lambda:>6}: {} records, regime {:?}, {path}; perm loss {:.4}, matrix loss {:.4}",
            log.records.len(),
            rec.ranking.plan.regime,
            perm_loss(&inst.m, &rec.ranking.pi_hat, &inst.pi_star)?,
            matrix_loss(&rec.m_hat, &inst.m)?
        );
    }
    Ok(())
}
