//! Acceptance criteria at full scale. Prints one PASS/FAIL line per
//! criterion; criteria can be selected by number on the command line.

use irrmc_cli::acceptance::{run_one, Scale, CRITERIA};

fn main() {
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for &(id, ..) in CRITERIA {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let outcome = run_one(id, Scale::Full).expect("listed criterion");
        println!("{}", outcome.line());
        failed += usize::from(!outcome.passed);
    }
    println!("acceptance: {failed} criteria failed");
}
