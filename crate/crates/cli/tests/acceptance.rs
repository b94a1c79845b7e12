use std::process::ExitCode;

use isac_ee_cli::verify::{run_with, VerifyOptions};

fn main() -> ExitCode {
    let opts = VerifyOptions::default();
    println!("acceptance: AC1-AC8, {} trials per trend point", opts.trend_trials);
    let results = run_with(&opts, |c| println!("{}", c.line()));
    let failed = results.iter().filter(|c| !c.pass).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
