#![no_main]

use libfuzzer_sys::fuzz_target;
use prp_core::io::{parse_study_table, StudyTable};

fuzz_target!(|data: &[u8]| {
    // accepted rows must satisfy the study invariants
    if let Ok(table) = parse_study_table(data) {
        let studies = match &table {
            StudyTable::TwoGroup(pair) => vec![pair.original.clone(), pair.replication.clone()],
            StudyTable::Exchangeable(s) => s.clone(),
        };
        for s in studies {
            assert!(s.beta_hat.is_finite());
            assert!(s.se.is_finite() && s.se > 0.0);
        }
    }
});
