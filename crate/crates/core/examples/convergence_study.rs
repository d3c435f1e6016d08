//! Runs a state convergence study on a manufactured case with τ ∝ h² and
//! prints the rate table and the slope verdicts.

use nsvoigt::verification::{run_convergence, Coupling, StudyConfig, StudyKind};

fn main() {
    let kind = match std::env::args().nth(1).as_deref() {
        Some("adjoint") => StudyKind::Adjoint,
        _ => StudyKind::State,
    };
    let mut cfg = StudyConfig::new("taylor-green-2d", kind, Coupling::TauH2, 3).expect("known case");
    cfg.base_steps = 1;
    match run_convergence(&cfg) {
        Ok(table) => {
            print!("{}", table.to_csv());
            for line in table.summary(&cfg.thresholds()) {
                println!("{line}");
            }
        }
        Err(f) => {
            eprintln!("{f}");
            print!("{}", f.table.to_csv());
            std::process::exit(3);
        }
    }
}
