//! A reduced wind-strength sweep: for each beta, learn from North and East
//! experts and evaluate transfer to the South and action-shifted laws.
//! Pass a directory to also write the sweep and panel CSVs.

use transfer_irl::experiment::{panel_tables, run_sweep, SweepPlan};
use transfer_irl::solver::SolveOptions;

fn main() -> transfer_irl::Result<()> {
    let mut plan = SweepPlan::desk(0);
    plan.expert_counts = vec![10_000];
    plan.seeds = vec![0, 1];
    plan.irl.iterations = 1000;
    let sweep = run_sweep(&plan, None, &SolveOptions::default())?;
    print!("{}", sweep.to_string_with(None)?);

    if let Some(dir) = std::env::args().nth(1) {
        let dir = std::path::PathBuf::from(dir);
        std::fs::create_dir_all(&dir)?;
        sweep.write(std::fs::File::create(dir.join("sweep.csv"))?, None)?;
        for (name, table) in panel_tables(&sweep) {
            table.write(std::fs::File::create(dir.join(&name))?, None)?;
        }
        println!("wrote {}", dir.display());
    }
    Ok(())
}
