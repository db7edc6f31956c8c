//! The two-item popularity-driven ranker as a reflected random walk: selection
//! shares and how often the order flips before it freezes.
//!
//! cargo run --release --example rank_walk -- [steps] [seeds]

use popbias::analysis::{rank_size_empirical, TwoItemWalkConfig};

fn main() -> popbias::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let steps: usize = args.get(1).map_or(50_000, |s| s.parse().expect("steps"));
    let seeds: u64 = args.get(2).map_or(50, |s| s.parse().expect("seeds"));

    let walk = TwoItemWalkConfig { kappa: [1.0, 0.0] };
    let seeds: Vec<u64> = (0..seeds).collect();
    let s = rank_size_empirical(&walk, steps, &seeds)?;
    println!("p = {:.4}, q = {:.4}", s.p, s.q);
    println!("position shares: {:.4} / {:.4}", s.pi1, s.pi2);
    println!(
        "reranks: mean {:.3} ± {:.3}, bound p/(p - q²) = {:.4}",
        s.mean_reranks, s.rerank_se, s.rerank_bound
    );
    println!("no rerank in the second half: {:.0}% of seeds", 100.0 * s.frozen_fraction);
    Ok(())
}
