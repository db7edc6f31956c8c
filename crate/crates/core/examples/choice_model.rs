//! The softmax choice model with an outside option, exact and sampled.
//!
//! cargo run --example choice_model

use popbias::choice::{disposition, sample_choice, softmax_choice, BiasTriple};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> popbias::Result<()> {
    let bias = BiasTriple {
        quality: vec![0.4, 0.1, -0.2],
        popularity: vec![0.2, 0.0, 0.1],
        rank: vec![0.5, 0.25, 0.0],
    };
    let delta = disposition(&bias)?;
    let dist = softmax_choice(&delta)?;
    println!("dispositions {:?}", delta.values());

    let draws = 100_000;
    let mut counts = [0usize; 4];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..draws {
        counts[sample_choice(&dist, &mut rng)] += 1;
    }
    println!("{:<10} {:>10} {:>10}", "choice", "exact", "sampled");
    for (c, n) in counts.iter().enumerate() {
        let label = if c == 0 { "no click".to_string() } else { format!("pos {c}") };
        println!("{:<10} {:>10.5} {:>10.5}", label, dist.prob(c), *n as f64 / draws as f64);
    }

    // A single position at disposition 1 is chosen with probability e/(1+e).
    let one = softmax_choice(&vec![1.0].into())?;
    println!("δ = 1: {:.6} (e/(1+e) = {:.6})", one.prob(1), std::f64::consts::E / (1.0 + std::f64::consts::E));
    Ok(())
}
