//! Runs the full regression corpus with a chosen seed (first argument, default 42).

use lecam::verify::{verify_paper, VerifyOptions};

fn main() {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(42);
    let r = verify_paper(&VerifyOptions { seed, ..Default::default() });
    for a in &r.anchors {
        println!("{}", a.line());
    }
    println!("{} passed, {} failed", r.passed, r.failed);
}
