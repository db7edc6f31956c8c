//! The identifiability constant ρ_min: the worked block examples and a
//! sampled instance.
//!
//! cargo run --release --example rho_min -- [seed]

use nalgebra::DMatrix;
use popbias::analysis::{estimate_rho_min, estimate_rho_min_for_instance, CorrelationBlock};
use popbias::environment::{make_synthetic_instance, GeneratorConfig};
use popbias::rankers::ObservableView;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> popbias::Result<()> {
    let seed: u64 = std::env::args().nth(1).map_or(0, |s| s.parse().expect("seed"));
    let tol = 1e-6;

    let ones = CorrelationBlock::from_full(&DMatrix::from_element(4, 4, 1.0), 2)?;
    println!("all-ones block: {:?}", estimate_rho_min(&ones, tol)?);
    let no_pop = CorrelationBlock::new(DMatrix::identity(2, 2), DMatrix::zeros(2, 2), DMatrix::zeros(2, 2))?;
    println!("no popularity: {:?}", estimate_rho_min(&no_pop, tol)?);
    let mut mixed = DMatrix::identity(4, 4);
    mixed[(0, 2)] = 0.5;
    mixed[(2, 0)] = 0.5;
    let mixed = CorrelationBlock::from_full(&mixed, 2)?;
    println!("correlation 0.5: {:?}", estimate_rho_min(&mixed, tol)?);

    let env = make_synthetic_instance(&GeneratorConfig::default(), &mut ChaCha8Rng::seed_from_u64(seed))?;
    let view = ObservableView::new(&env);
    println!(
        "default instance (seed {seed}): {:?}",
        estimate_rho_min_for_instance(&view, true, 16, tol)?
    );
    Ok(())
}
