//! Prints the five-column Monte Carlo table at desk scale, or at the
//! published scale with `--paper-scale`.

use realized_laplace::mc::{run_study, table_one_columns, MCConfig};
use realized_laplace::Execution;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let paper = std::env::args().any(|a| a == "--paper-scale");
    let inference = std::env::args().any(|a| a == "--inference");
    let cols: Vec<MCConfig> = table_one_columns()
        .into_iter()
        .map(|c| MCConfig {
            inference,
            ..if paper { c.paper_scale() } else { c }
        })
        .collect();
    let start = std::time::Instant::now();
    let summary = run_study(&cols, Execution::Parallel)?;
    summary.write_table_csv(std::io::stdout())?;
    for c in &summary.columns {
        if let Some(inf) = &c.inference {
            eprintln!(
                "{}: hac var {:?} mc var {:?} coverage {:?}",
                c.label, inf.mean_hac_var, inf.mc_var, inf.coverage
            );
        }
        if let Some(b) = c.beta_used {
            eprintln!("{}: beta used {:.4} ± {:.4}", c.label, b.0, b.1);
        }
    }
    eprintln!("elapsed {:.1?}", start.elapsed());
    Ok(())
}
