//! Popularity-driven ranking under pure rank bias freezes on whichever item
//! got lucky early, regardless of its quality.
//!
//! cargo run --release --example lock_in -- [seeds]

use popbias::analysis::{lock_in_experiment, LockInConfig};

fn main() -> popbias::Result<()> {
    let n: u64 = std::env::args().nth(1).map_or(100, |s| s.parse().expect("seeds"));
    let seeds: Vec<u64> = (0..n).collect();
    let s = lock_in_experiment(&LockInConfig::default(), &seeds)?;
    println!("top item above median quality: {:.0}% of seeds", 100.0 * s.lucky_fraction);
    println!("top item below median quality: {:.0}% of seeds", 100.0 * s.unlucky_fraction);
    println!("distinct quality ranks at the top: {}", s.distinct_top_ranks);
    let mut hist = vec![0; 10];
    for r in &s.runs {
        if r.top_rank < hist.len() {
            hist[r.top_rank] += 1;
        }
    }
    println!("quality rank of the frozen top item (0 = best): {hist:?}");
    Ok(())
}
