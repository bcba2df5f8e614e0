//! Runs the full acceptance suite and prints one line per criterion.
//!
//! Criterion 12 asks for `u' <= u` pointwise for the potentials of a
//! Stieltjes polynomial and its derivative. At finite degree this fails
//! wherever `Re(Var / (2 z^2)) > 0` in the far field (already for
//! `z^2 - 1` at `z = 3`), so it is expected to fail. Any other failure, or
//! criterion 12 passing, makes this test exit nonzero.

use std::process::ExitCode;

use heun_spectra::verify::{run, VerifyOptions};

const KNOWN_FAILING: [usize; 1] = [12];

fn main() -> ExitCode {
    let report = match run(VerifyOptions::default()) {
        Ok(r) => r,
        Err(e) => {
            println!("acceptance: setup failed: {e}");
            return ExitCode::FAILURE;
        }
    };
    for c in &report.criteria {
        println!("{}", c.line());
    }
    let failed = report.failed();
    println!("acceptance: {} of {} passed in {:.1}s", report.criteria.len() - failed.len(), report.criteria.len(), report.seconds);
    if failed == KNOWN_FAILING {
        println!("acceptance: failing set matches the known failures {KNOWN_FAILING:?}");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failing set {failed:?} differs from the known failures {KNOWN_FAILING:?}");
        ExitCode::FAILURE
    }
}
