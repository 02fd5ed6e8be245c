//! Pairwise comparisons from a Poisson log: every detected pair is checked
//! against the true order.

use isorank::estimation::pairwise_estimator;
use isorank::harness::perm_loss;
use isorank::model::gen_separated_instance;
use isorank::partial::sample_poisson_observations;
use isorank::rng::{stream, streams};
use isorank::tree::BudgetMode;
use isorank::{NoiseSpec, Result, TrisectionParams, Variant};

fn main() -> Result<()> {
    let (n, d, zeta, lambda) = (6, 64, 0.05, 500.0);
    let inst = gen_separated_instance(n, d, zeta, &mut stream(3, streams::INSTANCE))?;
    let log = sample_poisson_observations(
        &inst,
        lambda,
        &NoiseSpec::Gaussian { sigma: zeta },
        &mut stream(3, streams::OBSERVATIONS),
    )?;
    let params = TrisectionParams::new(zeta, 0.05, Variant::Wm)?;
    let pc = pairwise_estimator(&log, &params, BudgetMode::Practical, &mut stream(3, streams::ESTIMATOR))?;
    println!("{} of {} pairs detected", pc.pc.len(), n * (n - 1) / 2);
    println!("consistent with the truth: {}", pc.is_consistent(inst.pi_star.ranks()));
    println!("φ = {:?}", pc.phi);
    println!("loss {:.4}", perm_loss(&inst.m, &pc.pi_hat, &inst.pi_star)?);
    Ok(())
}
