//! QP against greedy and oblivious on the same worlds.
//!
//! cargo run --release --example qp_vs_baselines -- [config.json] [seeds] [bonus_scale]

use std::path::Path;

use popbias::harness::{run_experiment, ExperimentConfig, RunRecord};
use popbias::rankers::RankerKind;

fn increments(records: &[RunRecord], horizon: usize) -> (f64, f64) {
    let w = (horizon / 10).max(1);
    let k = records.len() as f64;
    let first = records.iter().map(|r| r.mean_increment(0, w)).sum::<f64>() / k;
    let last = records.iter().map(|r| r.mean_increment(horizon - w, horizon)).sum::<f64>() / k;
    (first, last)
}

fn main() -> popbias::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let mut cfg = match args.get(1) {
        Some(p) => ExperimentConfig::load(Path::new(p))?,
        None => ExperimentConfig::default(),
    };
    if let Some(n) = args.get(2) {
        cfg.seeds = (0..n.parse().expect("seed count")).collect();
    }
    if let Some(b) = args.get(3) {
        cfg.qp.bonus_scale = b.parse().expect("bonus scale");
    }
    println!("profile {:?}, {} seeds, T = {}", cfg.profile, cfg.seeds.len(), cfg.horizon);
    println!("{:<12} {:>12} {:>12} {:>12} {:>8}", "ranker", "final", "first-10%", "last-10%", "ratio");
    for kind in [RankerKind::Qp, RankerKind::Greedy, RankerKind::Oblivious] {
        let start = std::time::Instant::now();
        let mut c = cfg.clone();
        c.ranker = kind;
        let records = run_experiment(&c)?;
        let final_mean = records.iter().map(RunRecord::final_regret).sum::<f64>() / records.len() as f64;
        let (first, last) = increments(&records, c.horizon);
        println!(
            "{:<12} {:>12.3} {:>12.5} {:>12.5} {:>8.3}   ({:.1?})",
            kind.as_str(),
            final_mean,
            first,
            last,
            last / first,
            start.elapsed()
        );
    }
    Ok(())
}
