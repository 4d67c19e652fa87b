use std::process::ExitCode;
use std::time::Instant;

use sublaplace::suite::CRITERIA;

fn main() -> ExitCode {
    let start = Instant::now();
    let mut failed = 0;
    for criterion in CRITERIA {
        match criterion() {
            Ok(outcome) => {
                println!("{outcome}");
                for c in outcome.failures() {
                    println!("    failed: {} ({})", c.label, c.detail);
                }
                if !outcome.pass {
                    failed += 1;
                }
            }
            Err(e) => {
                println!("criterion error: {e}");
                failed += 1;
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria passed in {:.1} s",
        CRITERIA.len() - failed,
        CRITERIA.len(),
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
