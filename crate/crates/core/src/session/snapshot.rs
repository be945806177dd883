use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Spec;
use crate::rewriter::{Candidate, CandidateId};

pub const SNAPSHOT_VERSION: u32 = 1;

/// Saved form of a session. Samples are not stored; they are redrawn from
/// the spec, which is deterministic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub version: u32,
    pub id: String,
    pub spec: Spec,
    pub next_candidate_id: CandidateId,
    pub candidates: Vec<Candidate>,
}

impl Snapshot {
    pub fn check(&self) -> Result<()> {
        if self.version != SNAPSHOT_VERSION {
            return Err(Error::Snapshot(format!(
                "version {} is not supported (expected {SNAPSHOT_VERSION})",
                self.version
            )));
        }
        self.spec.check()?;
        let mut seen = HashSet::new();
        for c in &self.candidates {
            if c.id >= self.next_candidate_id || !seen.insert(c.id) {
                return Err(Error::Snapshot(format!("bad candidate id {}", c.id)));
            }
        }
        Ok(())
    }

    /// Write as pretty JSON, replacing the file atomically.
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Snapshot(e.to_string()))?;
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, text)
            .and_then(|_| fs::rename(&tmp, path))
            .map_err(|e| Error::Snapshot(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Snapshot> {
        let text = fs::read_to_string(path).map_err(|e| Error::Snapshot(format!("{}: {e}", path.display())))?;
        let snap: Snapshot = serde_json::from_str(&text).map_err(|e| Error::Snapshot(e.to_string()))?;
        snap.check()?;
        Ok(snap)
    }
}
