use std::io::Write;
use std::panic::{catch_unwind, resume_unwind, UnwindSafe};
use std::time::Instant;

/// Runs one acceptance criterion and writes a single PASS/FAIL line straight
/// to stderr, so the line shows up even when output capture is on.
pub fn criterion(number: u32, title: &str, check: impl FnOnce() + UnwindSafe) {
    let started = Instant::now();
    let outcome = catch_unwind(check);
    let verdict = if outcome.is_ok() { "PASS" } else { "FAIL" };
    let _ = writeln!(
        std::io::stderr(),
        "criterion {number}: {verdict} - {title} ({:.2} s)",
        started.elapsed().as_secs_f64()
    );
    if let Err(panic) = outcome {
        resume_unwind(panic);
    }
}
