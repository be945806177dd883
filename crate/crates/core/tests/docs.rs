use std::path::PathBuf;

use fpwb_core::rewriter::rule_table;

const HEADER: &str = "# Rewrite rules

Generated by `fpwb rules`; `FPWB_BLESS=1 cargo test -p fpwb-core --test docs` refreshes it.

Identities hold over the reals wherever both sides are defined. Approximations are guarded and replace the expression only when the guard holds.

";

#[test]
fn rules_doc_matches_the_catalog() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../docs/rules.md");
    let want = format!("{HEADER}{}", rule_table());
    if std::env::var_os("FPWB_BLESS").is_some() {
        std::fs::write(&path, &want).unwrap();
    }
    assert_eq!(std::fs::read_to_string(&path).unwrap(), want, "run with FPWB_BLESS=1 to refresh docs/rules.md");
}
