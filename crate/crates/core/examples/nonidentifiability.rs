//! Two worlds with opposite item qualities that users cannot tell apart once
//! popularity has saturated.
//!
//! cargo run --release --example nonidentifiability -- [epsilon] [steps]

use popbias::analysis::{build_nonidentifiable_pair, nonidentifiability_demo};
use popbias::slate::UserId;

fn main() -> popbias::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let epsilon: f64 = args.get(1).map_or(0.1, |s| s.parse().expect("epsilon"));
    let steps: usize = args.get(2).map_or(100_000, |s| s.parse().expect("steps"));

    let pair = build_nonidentifiable_pair(epsilon, 0.02)?;
    for (name, env) in [("problem 1", &pair.first), ("problem 2", &pair.second)] {
        let q: Vec<f64> = (0..2).map(|i| env.quality(UserId(0), &slate(i))[0]).collect();
        let b: Vec<f64> = (0..2).map(|i| env.caps(UserId(0), &slate(i))[0]).collect();
        println!("{name}: qualities {q:?}, caps {b:?}");
    }

    let report = nonidentifiability_demo(&pair, steps, 0)?;
    println!("saturated click rate e/(1+e) = {:.6}", report.model_rate);
    for k in 0..2 {
        println!(
            "problem {}: warm-up {} steps, exact {:?}, empirical {:?}",
            k + 1,
            report.warmup_steps[k],
            report.exact[k],
            report.empirical[k]
        );
    }
    Ok(())
}

fn slate(item: usize) -> popbias::slate::Slate {
    popbias::slate::Slate::new(vec![popbias::slate::ItemId(item)], 1, 2).expect("valid slate")
}
