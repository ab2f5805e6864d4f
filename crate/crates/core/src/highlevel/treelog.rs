//! Newline-delimited JSON record of every node a search generated.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::lowlevel::Constraint;
use crate::roadmap::VertexId;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeRecord {
    pub id: u64,
    pub parent: Option<u64>,
    pub depth: usize,
    pub cost: usize,
    /// The constraint that distinguishes this node from its parent.
    pub constraint: Option<Constraint>,
    pub paths: Vec<Vec<VertexId>>,
}

#[derive(Debug, thiserror::Error)]
pub enum TreeLogError {
    #[error("tree log line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn write_tree_log<W: Write>(mut w: W, records: &[TreeRecord]) -> io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

/// Parses a log and checks its structure: unique ids, parents seen before
/// children, depth = parent depth + 1, and a root only at depth 0.
pub fn read_tree_log<R: BufRead>(r: R) -> Result<Vec<TreeRecord>, TreeLogError> {
    let mut out: Vec<TreeRecord> = Vec::new();
    let mut depth_of = std::collections::HashMap::new();
    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| TreeLogError::Malformed { line: lineno, message };
        let rec: TreeRecord = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        match rec.parent {
            None if rec.depth != 0 => return Err(bad(format!("root {} at depth {}", rec.id, rec.depth))),
            None if rec.constraint.is_some() => return Err(bad(format!("root {} has a constraint", rec.id))),
            None => {}
            Some(p) => match depth_of.get(&p) {
                None => return Err(bad(format!("node {} refers to unknown parent {p}", rec.id))),
                Some(&d) if d + 1 != rec.depth => {
                    return Err(bad(format!("node {} has depth {} under a depth-{d} parent", rec.id, rec.depth)))
                }
                Some(_) => {}
            },
        }
        if rec.paths.iter().any(Vec::is_empty) {
            return Err(bad(format!("node {} has an empty path", rec.id)));
        }
        if depth_of.insert(rec.id, rec.depth).is_some() {
            return Err(bad(format!("duplicate node id {}", rec.id)));
        }
        out.push(rec);
    }
    Ok(out)
}
