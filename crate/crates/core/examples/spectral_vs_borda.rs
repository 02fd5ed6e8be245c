//! Two expert types that differ on a few sparse blocks of a rising staircase.
//! Row sums barely separate them; the spectral reduction does.

use isorank::estimation::borda_rank;
use isorank::harness::perm_loss;
use isorank::harness::stats::mean;
use isorank::model::{gen_two_block_instance, sample_full_observations, TwoBlockLayout};
use isorank::rng::{stream, streams};
use isorank::tree::{tree_sort, SampleBudget};
use isorank::{NoiseSpec, Result, TrisectionParams, Variant};

fn main() -> Result<()> {
    let (n, d, r) = (32, 256, 1);
    let h = 1.0 / d as f64;
    let zeta = 0.06 * h;
    let layout = TwoBlockLayout::spectral(d / r, 2);
    let params = TrisectionParams::new(zeta, 0.05, Variant::Wm)?;
    let budget = SampleBudget::practical(n, d);
    let (mut wm, mut borda) = (Vec::new(), Vec::new());
    for seed in 0..20 {
        let inst = gen_two_block_instance(n, d, r, h, &layout, zeta)?.shuffled(&mut stream(seed, streams::SHUFFLE));
        let pool = sample_full_observations(
            &inst,
            1,
            &NoiseSpec::Gaussian { sigma: zeta },
            &mut stream(seed, streams::OBSERVATIONS),
        )?;
        let out = tree_sort(&pool, &params, &budget, &mut stream(seed, streams::ESTIMATOR))?;
        wm.push(perm_loss(&inst.m, &out.pi_hat, &inst.pi_star)?);
        borda.push(perm_loss(&inst.m, &borda_rank(&pool[0]), &inst.pi_star)?);
    }
    println!("mean loss over 20 seeds: wm {:.3e}, borda {:.3e}", mean(&wm), mean(&borda));
    Ok(())
}
