//! Ranks a random bi-isotonic instance from repeated noisy samples with the
//! three tree-sort variants and the Borda count.

use isorank::estimation::borda_rank_pool;
use isorank::harness::{perm_loss, random_guess_loss};
use isorank::model::{gen_random_instance, sample_full_observations};
use isorank::rng::{stream, streams};
use isorank::tree::{tree_sort, SampleBudget};
use isorank::{NoiseSpec, Result, TrisectionParams, Variant};

fn main() -> Result<()> {
    let (n, d, zeta) = (16, 128, 0.05);
    let inst = gen_random_instance(n, d, 24, zeta, &mut stream(1, streams::INSTANCE))?;
    let budget = SampleBudget::practical(n, d);
    let pool = sample_full_observations(
        &inst,
        budget.upsilon_star as usize,
        &NoiseSpec::Gaussian { sigma: zeta },
        &mut stream(1, streams::OBSERVATIONS),
    )?;
    println!("{n}×{d} instance, ζ = {zeta}, pool of {} samples", pool.len());
    println!("random guess loss {:.4}", random_guess_loss(&inst.m));
    for variant in [Variant::Ht, Variant::Wm, Variant::WmSr] {
        let params = TrisectionParams::new(zeta, 0.05, variant)?;
        let out = tree_sort(&pool, &params, &budget, &mut stream(1, streams::ESTIMATOR))?;
        let loss = perm_loss(&inst.m, &out.pi_hat, &inst.pi_star)?;
        println!(
            "{:>6}: loss {loss:.4}, {} block sorts, depth {}",
            variant.name(),
            out.records.len(),
            out.depth_reached
        );
    }
    let borda = borda_rank_pool(&pool)?;
    println!("{:>6}: loss {:.4}", "borda", perm_loss(&inst.m, &borda, &inst.pi_star)?);
    Ok(())
}
