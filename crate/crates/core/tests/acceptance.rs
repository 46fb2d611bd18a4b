//! Runs every acceptance criterion and prints one line per criterion.
//! Set `UIPT_ACCEPT_WORKERS` to pin the worker count.

use std::time::Instant;

use uipt_core::sampler::Sampler;
use uipt_core::verify::acceptance::{self, AcceptanceConfig, CriterionReport};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let mut cfg = AcceptanceConfig::default();
    if let Some(k) = std::env::var("UIPT_ACCEPT_WORKERS").ok().and_then(|v| v.parse().ok()) {
        cfg.workers = k;
    }
    println!(
        "acceptance: seed {} trials {} workers {}",
        cfg.seed, cfg.trials, cfg.workers
    );

    let sampler = Sampler::new();
    let runs: Vec<Box<dyn Fn() -> CriterionReport + '_>> = vec![
        Box::new(acceptance::criterion_1),
        Box::new(acceptance::criterion_2),
        Box::new(acceptance::criterion_3),
        Box::new(acceptance::criterion_4),
        Box::new(acceptance::criterion_5),
        Box::new(acceptance::criterion_6),
        Box::new(|| acceptance::criterion_7(&cfg, &sampler)),
        Box::new(acceptance::criterion_8),
        Box::new(|| acceptance::criterion_9(&cfg, &sampler)),
        Box::new(acceptance::criterion_10),
        Box::new(acceptance::criterion_11),
        Box::new(acceptance::criterion_12),
        Box::new(|| acceptance::criterion_13(&cfg)),
    ];
    let mut failed = 0;
    for run in &runs {
        let t0 = Instant::now();
        let report = run();
        println!("{}  [{:.1}s]", report.line(), t0.elapsed().as_secs_f64());
        if !report.pass {
            failed += 1;
            for v in report.verdicts.iter().filter(|v| !v.pass) {
                println!("    {}", v.to_json());
            }
        }
    }
    println!("acceptance: {} passed, {} failed", runs.len() - failed, failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
