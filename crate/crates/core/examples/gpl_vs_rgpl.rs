//! Adapt the Base model with fixed negatives (GPL) and with remined negatives (R-GPL).
//!
//!     cargo run --release --example gpl_vs_rgpl [SEED] [--full]
//!
//! `--full` uses the 10k-document benchmark (about a minute per seed).

use rgpl::benchmark::{Benchmark, BenchmarkConfig, Mode};
use rgpl::eval::{compare_reports, Metric};

fn main() -> rgpl::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let seed = args.iter().find_map(|a| a.parse().ok()).unwrap_or(0);
    let preset = if args.iter().any(|a| a == "--full") {
        BenchmarkConfig::default()
    } else {
        BenchmarkConfig::small()
    };
    let k = preset.train.refresh_interval_k;
    let bench = Benchmark::build(&preset.with_seed(seed))?;

    let metric = Metric::Ndcg(10);
    let base = bench.evaluate(&bench.base, metric)?;
    let (gpl, _) = bench.train(Mode::Gpl, 0)?;
    let gpl = bench.evaluate(&gpl, metric)?;
    let (rgpl, log) = bench.train(Mode::Rgpl, k)?;
    let rgpl = bench.evaluate(&rgpl, metric)?;

    println!("{:<12} {}", "model", metric);
    println!("{:<12} {:.4}", "Base", base.aggregate);
    println!("{:<12} {:.4}", "GPL", gpl.aggregate);
    println!("{:<12} {:.4}", format!("R-GPL k={k}"), rgpl.aggregate);
    let test = compare_reports(&rgpl, &gpl)?;
    println!(
        "R-GPL > GPL: p = {:.3e} over {} queries ({})",
        test.p_value, test.n, test.method
    );
    println!("\nrefresh  mean teacher score of pools");
    println!("{:>7}  {:.3}", 0, log.pool_dumps[0].mean_teacher_score);
    for r in &log.refreshes {
        println!("{:>7}  {:.3}", r.step, r.mean_teacher_score);
    }
    Ok(())
}
