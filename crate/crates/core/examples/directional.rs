//! Runs the directional toy experiment and prints per-seed results.
//!
//! `cargo run --release -p dgkd-core --example directional -- [num_seeds] [config.json]`

use dgkd_core::experiment::{prepare, run_seed, DirectionalConfig};

fn main() {
    env_logger::init();
    let mut args = std::env::args().skip(1);
    let n: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(2);
    let cfg: DirectionalConfig = match args.next() {
        Some(p) => serde_json::from_str(&std::fs::read_to_string(p).expect("read config")).expect("parse config"),
        None => DirectionalConfig::default(),
    };
    let prep = prepare(&cfg).expect("prepare");
    println!("teacher dev {:.4} ood {:.4}", prep.teacher_dev, prep.teacher_ood);
    for seed in 0..n {
        let r = run_seed(&cfg, &prep, seed).expect("seed run");
        println!("seed {seed} ({:.1}s): ood {:?} dev {:?}", r.seconds, r.ood, r.dev);
    }
}
