//! Runs tree sort on a noisy instance and evaluates the structural
//! inequalities on every group it produced.

use isorank::harness::{loss_general, verify_lemmas};
use isorank::model::{gen_random_instance, sample_full_observations};
use isorank::rng::{stream, streams};
use isorank::tree::{tree_sort, SampleBudget};
use isorank::{NoiseSpec, Result, TrisectionParams, Variant};

fn main() -> Result<()> {
    let (n, d, zeta) = (12, 64, 0.05);
    let inst = gen_random_instance(n, d, 16, zeta, &mut stream(4, streams::INSTANCE))?;
    let params = TrisectionParams::new(zeta, 0.05, Variant::Wm)?;
    let budget = SampleBudget::practical(n, d);
    let pool = sample_full_observations(
        &inst,
        budget.upsilon_star as usize,
        &NoiseSpec::Gaussian { sigma: zeta },
        &mut stream(4, streams::OBSERVATIONS),
    )?;
    let trace = tree_sort(&pool, &params, &budget, &mut stream(4, streams::ESTIMATOR))?;
    let flags = verify_lemmas(&inst, &trace, &params, budget.t_inf)?;
    println!("{flags:#?}");
    let report = loss_general(&inst, &trace, budget.t_inf)?;
    println!("loss {:.4} against bound {:.4}", report.loss, report.bound);
    Ok(())
}
