//! End-to-end reconstruction of a random three-mode covariance matrix, first
//! from exact phases and then from simulated readouts, with the report written
//! as JSON and CSV.
//!
//! ```text
//! cargo run --release --example full_reconstruction
//! ```

use std::fs::File;

use gaussphase::gaussian::{random_state, StateKind};
use gaussphase::reconstruction::{reconstruct, PhaseSource, PipelinePlan, StrategyTag};

fn main() -> gaussphase::Result<()> {
    let state = random_state(3, StateKind::Pure, 2024);
    println!("true covariance\n{}", state.cov().matrix());

    for k in 1..=3 {
        let plan = PipelinePlan::new(StrategyTag::from_number(k)?);
        let report = reconstruct(&mut PhaseSource::exact(&state), &plan)?;
        println!(
            "strategy {k}, exact phases: max |error| = {:.2e}, {} phases used",
            report.max_abs_error.unwrap_or(f64::NAN),
            report.samples.len()
        );
    }

    let plan = PipelinePlan::new(StrategyTag::Three);
    let mut source = PhaseSource::sampled(&state, 1_000_000, 7);
    let report = reconstruct(&mut source, &plan)?;
    println!("\nstrategy 3, 10⁶ shots per phase\nestimate\n{}", report.estimate());
    for (block, r) in &report.block_residuals {
        println!("  {block}: max |error| {r:.2e}");
    }
    for w in &report.warnings {
        println!("  warning: {w}");
    }

    let dir = std::env::temp_dir().join("gaussphase-example");
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("report.json"), report.to_json()?)?;
    report.write_csv(File::create(dir.join("report.csv"))?)?;
    println!("\nreport written to {}", dir.display());
    Ok(())
}
