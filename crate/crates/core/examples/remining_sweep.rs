//! Sweep the refresh interval k; `0` is plain GPL.
//!
//!     cargo run --release --example remining_sweep [K...]

use rgpl::benchmark::{Benchmark, BenchmarkConfig, Mode};
use rgpl::eval::{compare_reports, Metric};

fn main() -> rgpl::Result<()> {
    let mut ks: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    if ks.is_empty() {
        ks = vec![100, 300, 500, 1000];
    }
    let bench = Benchmark::build(&BenchmarkConfig::small().with_seed(1))?;
    let total = bench.config.train.total_steps;
    let metric = Metric::Ndcg(10);
    let (gpl, _) = bench.train(Mode::Gpl, 0)?;
    let gpl = bench.evaluate(&gpl, metric)?;
    println!("{total} steps");
    println!("{:>6} {:>9} {:>8} {:>10}", "k", "refreshes", "ndcg@10", "p vs GPL");
    println!("{:>6} {:>9} {:>8.4} {:>10}", "GPL", 0, gpl.aggregate, "-");
    for k in ks {
        let mode = if k == 0 || k >= total { Mode::Gpl } else { Mode::Rgpl };
        let (p, log) = bench.train(mode, k)?;
        let r = bench.evaluate(&p, metric)?;
        let p_value = compare_reports(&r, &gpl)?.p_value;
        println!(
            "{k:>6} {:>9} {:>8.4} {p_value:>10.2e}",
            log.refreshes.len(),
            r.aggregate
        );
    }
    Ok(())
}
