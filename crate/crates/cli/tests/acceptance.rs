//! Runs A1 to A10 and prints one line per criterion. Exits nonzero when any
//! criterion fails. An optional argument restricts the run to one id.

use std::process::ExitCode;

use elastoray::acceptance::{run_by_id, run_all};

fn main() -> ExitCode {
    let seed = std::env::var("ELASTORAY_SEED").ok().and_then(|s| s.parse().ok()).unwrap_or(7);
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let results = if only.is_empty() {
        run_all(seed)
    } else {
        only.iter().filter_map(|id| run_by_id(id, seed)).collect()
    };
    for r in &results {
        println!("{}", r.line());
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("acceptance: {} passed, {failed} failed (seed {seed})", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
