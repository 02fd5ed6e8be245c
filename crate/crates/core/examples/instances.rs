//! Generates each instance family, checks bi-isotonicity and writes one to
//! JSON.

use isorank::model::{
    gen_random_instance, gen_separated_instance, gen_staircase_instance, gen_two_block_instance,
    validate_bi_isotonic, StaircaseConfig, TwoBlockLayout,
};
use isorank::rng::{stream, streams};
use isorank::{ProblemInstance, Result};

fn show(name: &str, inst: &ProblemInstance) -> Result<()> {
    println!(
        "{name:>10}: {}×{}, ζ = {}, bi-isotonic under π*: {}",
        inst.n(),
        inst.d(),
        inst.zeta,
        validate_bi_isotonic(&inst.m, &inst.pi_star)?
    );
    Ok(())
}

fn main() -> Result<()> {
    let mut rng = stream(5, streams::INSTANCE);
    let separated = gen_separated_instance(6, 8, 0.1, &mut rng)?;
    show("separated", &separated)?;
    show("random", &gen_random_instance(10, 32, 8, 0.1, &mut rng)?)?;
    show(
        "two-block",
        &gen_two_block_instance(8, 16, 2, 0.1, &TwoBlockLayout::spectral(8, 2), 0.01)?,
    )?;
    let cfg = StaircaseConfig {
        n: 16,
        d: 64,
        n_tilde: 4,
        d_tilde: 8,
        q: 4,
        upsilon: 0.3,
        lambda0: 1.0,
        zeta: 0.05,
    };
    show("staircase", &gen_staircase_instance(&cfg, &mut rng)?)?;
    let json = separated.to_json()?;
    let back = ProblemInstance::from_json(&json)?;
    println!("JSON round trip: {} bytes, identical: {}", json.len(), back == separated);
    Ok(())
}
