//! The two-state counterexample: a reward that is optimal for the experts'
//! law transfers badly, and a second expert law fixes identifiability once
//! beta > 0.

use transfer_irl::experiment::example1_table;
use transfer_irl::solver::SolveOptions;
use transfer_irl::Regularizer;

fn main() -> transfer_irl::Result<()> {
    let table = example1_table(&[0.0, 0.05, 0.1, 0.25, 0.5, 0.75], &Regularizer::shannon(1.0)?, &SolveOptions::default())?;
    print!("{}", table.to_string_with(None)?);
    Ok(())
}
