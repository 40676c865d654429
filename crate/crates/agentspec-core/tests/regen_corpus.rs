//! Regenerates the checked-in corpus from the programmatic builders:
//!
//! ```text
//! cargo test -p agentspec-core --test regen_corpus -- --ignored
//! ```
//!
//! Runnable cases are executed and must reproduce their hand-computed
//! expected outcomes before anything is written. Run this only when the
//! corpus is intentionally changing, and review the diff.

use std::path::PathBuf;

use agentspec_core::harness::corpus::{write_corpus, write_defects, write_toy_dataset};

fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .canonicalize()
        .expect("workspace root exists")
}

#[test]
#[ignore = "rewrites the checked-in corpus"]
fn regenerate_checked_in_corpus() {
    let root = workspace_root();
    write_corpus(&root.join("conformance")).expect("write conformance corpus");
    write_defects(&root.join("defects")).expect("write defect corpus");
    write_toy_dataset(&root.join("data")).expect("write toy dataset");
}
