//! Acceptance suite: one line per criterion, nonzero exit if any criterion fails.

use flatcauchy::verify::{run_criterion, Bound, Check, VerifyConfig};

/// Fraction of the allowed range used; larger is closer to failing.
fn margin(c: &Check) -> f64 {
    match c.bound {
        Bound::AtMost => c.residual / c.tolerance,
        Bound::AtLeast => c.tolerance / c.residual,
    }
}

fn main() {
    // `cargo test -- --list` and filters are not meaningful here.
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let cfg = VerifyConfig::default();
    let mut failed = 0;
    for id in 1..=9 {
        let r = run_criterion(id, &cfg);
        let status = if r.pass { "PASS" } else { "FAIL" };
        let detail = match r.worst() {
            Some(c) => format!(
                "failing check `{}`: {:.3e} vs {:.1e}{}",
                c.name,
                c.residual,
                c.tolerance,
                c.note.as_deref().map(|n| format!(" ({n})")).unwrap_or_default()
            ),
            None => {
                let tightest = r
                    .checks
                    .iter()
                    .filter(|c| c.name != "runtime seconds" && c.tolerance > 0.0)
                    .max_by(|a, b| margin(a).partial_cmp(&margin(b)).unwrap());
                match tightest {
                    Some(c) => format!("closest margin `{}`: {:.3e} vs {:.1e}", c.name, c.residual, c.tolerance),
                    None => String::new(),
                }
            }
        };
        println!("criterion {id} [{}] {status} in {:.2}s; {detail}", r.title, r.seconds);
        if !r.pass {
            failed += 1;
            for c in r.checks.iter().filter(|c| !c.pass) {
                println!("    {} residual {:.3e} tolerance {:.1e}", c.name, c.residual, c.tolerance);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
