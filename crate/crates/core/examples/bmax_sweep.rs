//! QP regret as the popularity cap b_max varies.
//!
//! cargo run --release --example bmax_sweep -- [config.json] [seeds]

use std::path::Path;

use popbias::harness::{sweep, ExperimentConfig, SweepParam};

fn main() -> popbias::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let mut cfg = match args.get(1) {
        Some(p) => ExperimentConfig::load(Path::new(p))?,
        None => ExperimentConfig::default(),
    };
    if let Some(n) = args.get(2) {
        cfg.seeds = (0..n.parse().expect("seed count")).collect();
    }
    let rows = sweep(&cfg, SweepParam::BMax, &[0.05, 0.1, 0.2])?;
    println!("{:>8} {:>14} {:>10} {:>12}", "b_max", "final-window", "se", "final");
    for r in rows {
        println!(
            "{:>8} {:>14.3} {:>10.3} {:>12.3}",
            r.value, r.final_window_regret, r.final_window_se, r.final_regret
        );
    }
    Ok(())
}
