//! End-to-end verification suite. Prints one line per criterion; criteria
//! marked expected-fail in the library document reference claims the model
//! does not reproduce (see `loqc::acceptance` for the analysis) and are
//! asserted to stay at their measured values rather than silently drift.

use loqc::acceptance::{report, run_all};

#[test]
fn acceptance() {
    let outcomes = run_all();
    print!("{}", report(&outcomes));
    for o in &outcomes {
        assert_eq!(
            o.passed, o.expected,
            "criterion {} ({}) deviated: {}",
            o.id, o.name, o.detail
        );
    }
}
