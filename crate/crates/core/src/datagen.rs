//! Contrastive training samples from recorded search trees, and the dataset
//! directory format.
//!
//! Layout of a dataset directory:
//!
//! ```text
//! manifest                 "geo-mapf-ds v1", then one "instance <id> <samples>" per line
//! instances/<id>.inst      instance text file
//! samples/<id>.ndjson      one {"label","depth","paths"} object per line
//! ```

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::highlevel::TreeRecord;
use crate::instance::{Instance, InstanceError};
use crate::roadmap::VertexId;

pub const DATASET_HEADER: &str = "geo-mapf-ds v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Positive,
    Negative,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sample {
    pub instance_id: String,
    pub solution: Vec<Vec<VertexId>>,
    pub depth: usize,
    pub label: Label,
}

#[derive(Debug, Serialize, Deserialize)]
struct SampleLine {
    label: Label,
    depth: usize,
    paths: Vec<Vec<VertexId>>,
}

#[derive(Debug, thiserror::Error)]
pub enum DatagenError {
    #[error("malformed tree log: {0}")]
    MalformedLog(String),
    #[error("{file}:{line}: {message}")]
    Parse {
        file: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{file}: {source}")]
    Instance {
        file: PathBuf,
        #[source]
        source: InstanceError,
    },
    #[error("sample references instance `{0}` which is not in the dataset")]
    MissingInstance(String),
    #[error("invalid instance id `{0}`")]
    BadId(String),
    #[error("instance `{id}`: {message}")]
    InvalidPath { id: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Labels the nodes of one search tree. Positives are the nodes on the
/// chain from the root to `leaf`; negatives are their siblings that are not
/// on the chain. `leaf = None` (a failed run) yields no samples.
pub fn label_tree(
    instance_id: &str,
    records: &[TreeRecord],
    leaf: Option<u64>,
) -> Result<Vec<Sample>, DatagenError> {
    let Some(leaf) = leaf else {
        return Ok(Vec::new());
    };
    let by_id: HashMap<u64, &TreeRecord> = records.iter().map(|r| (r.id, r)).collect();
    if by_id.len() != records.len() {
        return Err(DatagenError::MalformedLog("duplicate node ids".into()));
    }
    let mut chain = Vec::new();
    let mut cur = Some(leaf);
    while let Some(id) = cur {
        let rec = by_id
            .get(&id)
            .ok_or_else(|| DatagenError::MalformedLog(format!("node {id} is not in the log")))?;
        if chain.len() > records.len() {
            return Err(DatagenError::MalformedLog("parent links form a cycle".into()));
        }
        chain.push(*rec);
        cur = rec.parent;
    }
    chain.reverse();
    for (d, rec) in chain.iter().enumerate() {
        if rec.depth != d {
            return Err(DatagenError::MalformedLog(format!(
                "node {} has depth {} but sits at depth {d} on the chain",
                rec.id, rec.depth
            )));
        }
    }
    let on_chain: HashSet<u64> = chain.iter().map(|r| r.id).collect();
    let mut children: HashMap<u64, Vec<&TreeRecord>> = HashMap::new();
    for r in records {
        if let Some(p) = r.parent {
            children.entry(p).or_default().push(r);
        }
    }

    let sample = |r: &TreeRecord, label| Sample {
        instance_id: instance_id.to_string(),
        solution: r.paths.clone(),
        depth: r.depth,
        label,
    };
    let mut out = vec![sample(chain[0], Label::Positive)];
    for pair in chain.windows(2) {
        let (parent, pos) = (pair[0], pair[1]);
        out.push(sample(pos, Label::Positive));
        let mut sibs = children.get(&parent.id).cloned().unwrap_or_default();
        sibs.sort_by_key(|r| r.id);
        out.extend(
            sibs.into_iter()
                .filter(|r| !on_chain.contains(&r.id))
                .map(|r| sample(r, Label::Negative)),
        );
    }
    Ok(out)
}

/// `(p₊, p₋)` is a valid pair iff both come from the same instance and the
/// positive is at least as deep as the negative.
pub fn valid_pair(pos: &Sample, neg: &Sample) -> bool {
    pos.instance_id == neg.instance_id && pos.depth >= neg.depth
}

/// Index pairs `(positive, negative)` of all valid pairs in `samples`.
pub fn valid_pairs(samples: &[Sample]) -> Vec<(usize, usize)> {
    let pos = samples.iter().enumerate().filter(|(_, s)| s.label == Label::Positive);
    pos.flat_map(|(i, p)| {
        samples
            .iter()
            .enumerate()
            .filter(move |(_, s)| s.label == Label::Negative && valid_pair(p, s))
            .map(move |(j, _)| (i, j))
    })
    .collect()
}

fn check_id(id: &str) -> Result<(), DatagenError> {
    let ok = !id.is_empty()
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c));
    if ok {
        Ok(())
    } else {
        Err(DatagenError::BadId(id.to_string()))
    }
}

fn check_paths(id: &str, inst: &Instance, paths: &[Vec<VertexId>]) -> Result<(), DatagenError> {
    let bad = |message: String| DatagenError::InvalidPath {
        id: id.to_string(),
        message,
    };
    if paths.len() != inst.num_agents() {
        return Err(bad(format!("{} paths for {} agents", paths.len(), inst.num_agents())));
    }
    let n = inst.roadmap.num_vertices();
    for (a, p) in paths.iter().enumerate() {
        if p.is_empty() {
            return Err(bad(format!("agent {a} has an empty path")));
        }
        if let Some(v) = p.iter().find(|&&v| v >= n) {
            return Err(bad(format!("agent {a} visits unknown vertex {v}")));
        }
        if let Some(w) = p.windows(2).find(|w| !inst.roadmap.has_edge(w[0], w[1])) {
            return Err(bad(format!("agent {a} uses missing edge {}->{}", w[0], w[1])));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub instances: BTreeMap<String, Instance>,
    pub samples: Vec<Sample>,
}

/// Writes `instances` and `samples` into `dir`, which is created if needed.
/// Every sample must name one of `instances` and have connected paths.
pub fn export_dataset(
    dir: impl AsRef<Path>,
    instances: &BTreeMap<String, Instance>,
    samples: &[Sample],
) -> Result<(), DatagenError> {
    let dir = dir.as_ref();
    let mut grouped: BTreeMap<&str, Vec<&Sample>> = instances.keys().map(|k| (k.as_str(), Vec::new())).collect();
    for s in samples {
        let inst = instances
            .get(&s.instance_id)
            .ok_or_else(|| DatagenError::MissingInstance(s.instance_id.clone()))?;
        check_paths(&s.instance_id, inst, &s.solution)?;
        grouped.get_mut(s.instance_id.as_str()).unwrap().push(s);
    }
    for id in instances.keys() {
        check_id(id)?;
    }
    fs::create_dir_all(dir.join("instances"))?;
    fs::create_dir_all(dir.join("samples"))?;
    let mut manifest = BufWriter::new(fs::File::create(dir.join("manifest"))?);
    writeln!(manifest, "{DATASET_HEADER}")?;
    for (id, group) in &grouped {
        writeln!(manifest, "instance {id} {}", group.len())?;
        fs::write(dir.join("instances").join(format!("{id}.inst")), instances[*id].to_text())?;
        let mut w = BufWriter::new(fs::File::create(dir.join("samples").join(format!("{id}.ndjson")))?);
        for s in group {
            let line = SampleLine {
                label: s.label,
                depth: s.depth,
                paths: s.solution.clone(),
            };
            serde_json::to_writer(&mut w, &line).map_err(std::io::Error::from)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
    }
    manifest.flush()?;
    Ok(())
}

pub fn import_dataset(dir: impl AsRef<Path>) -> Result<Dataset, DatagenError> {
    let dir = dir.as_ref();
    let manifest_path = dir.join("manifest");
    let text = fs::read_to_string(&manifest_path)?;
    let perr = |file: &Path, line: usize, message: String| DatagenError::Parse {
        file: file.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == DATASET_HEADER => {}
        other => {
            return Err(perr(
                &manifest_path,
                1,
                format!("expected header `{DATASET_HEADER}`, found {:?}", other.map(|(_, l)| l)),
            ))
        }
    }

    let mut ds = Dataset::default();
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let (id, count) = match fields.as_slice() {
            ["instance", id, count] => (
                *id,
                count
                    .parse::<usize>()
                    .map_err(|e| perr(&manifest_path, lineno, format!("bad sample count: {e}")))?,
            ),
            _ => return Err(perr(&manifest_path, lineno, "expected `instance <id> <count>`".into())),
        };
        check_id(id)?;
        if ds.instances.contains_key(id) {
            return Err(perr(&manifest_path, lineno, format!("duplicate instance `{id}`")));
        }
        let inst_path = dir.join("instances").join(format!("{id}.inst"));
        if !inst_path.exists() {
            return Err(DatagenError::MissingInstance(id.to_string()));
        }
        let inst = crate::instance::read_instance(&inst_path).map_err(|source| DatagenError::Instance {
            file: inst_path.clone(),
            source,
        })?;

        let sample_path = dir.join("samples").join(format!("{id}.ndjson"));
        let mut n = 0;
        if count > 0 || sample_path.exists() {
            let reader = BufReader::new(fs::File::open(&sample_path)?);
            for (sidx, sline) in reader.lines().enumerate() {
                let sline = sline?;
                if sline.trim().is_empty() {
                    continue;
                }
                let rec: SampleLine =
                    serde_json::from_str(&sline).map_err(|e| perr(&sample_path, sidx + 1, e.to_string()))?;
                check_paths(id, &inst, &rec.paths)?;
                ds.samples.push(Sample {
                    instance_id: id.to_string(),
                    solution: rec.paths,
                    depth: rec.depth,
                    label: rec.label,
                });
                n += 1;
            }
        }
        if n != count {
            return Err(perr(
                &manifest_path,
                lineno,
                format!("manifest lists {count} samples for `{id}`, found {n}"),
            ));
        }
        ds.instances.insert(id.to_string(), inst);
    }

    // sample files without a manifest entry point at instances we do not have
    if let Ok(entries) = fs::read_dir(dir.join("samples")) {
        for e in entries {
            let name = e?.file_name();
            let name = name.to_string_lossy();
            if let Some(id) = name.strip_suffix(".ndjson") {
                if !ds.instances.contains_key(id) {
                    return Err(DatagenError::MissingInstance(id.to_string()));
                }
            }
        }
    }
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::tests::line_instance;
    use crate::lowlevel::Constraint;

    fn rec(id: u64, parent: Option<u64>, depth: usize) -> TreeRecord {
        TreeRecord {
            id,
            parent,
            depth,
            cost: 2 + depth,
            constraint: parent.map(|_| Constraint { agent: 0, vertex: 1, time: depth }),
            paths: vec![vec![0; depth + 1]],
        }
    }

    #[test]
    fn chain_and_sibling() {
        // root(0) -> A(1), B(2); A -> leaf(3), C(4)
        let log = vec![rec(0, None, 0), rec(1, Some(0), 1), rec(2, Some(0), 1), rec(3, Some(1), 2), rec(4, Some(1), 2)];
        let s = label_tree("x", &log, Some(3)).unwrap();
        let pos: Vec<usize> = s.iter().filter(|s| s.label == Label::Positive).map(|s| s.depth).collect();
        let neg: Vec<usize> = s.iter().filter(|s| s.label == Label::Negative).map(|s| s.depth).collect();
        assert_eq!(pos, vec![0, 1, 2]);
        assert_eq!(neg, vec![1, 2]);
    }

    #[test]
    fn root_only_and_failed_runs() {
        let log = vec![rec(0, None, 0)];
        let s = label_tree("x", &log, Some(0)).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].label, Label::Positive);
        assert!(label_tree("x", &log, None).unwrap().is_empty());
        assert!(label_tree("x", &log, Some(9)).is_err());
    }

    #[test]
    fn pair_validity() {
        let mk = |id: &str, d, label| Sample {
            instance_id: id.into(),
            solution: vec![],
            depth: d,
            label,
        };
        assert!(valid_pair(&mk("a", 3, Label::Positive), &mk("a", 2, Label::Negative)));
        assert!(!valid_pair(&mk("a", 1, Label::Positive), &mk("a", 2, Label::Negative)));
        assert!(!valid_pair(&mk("a", 3, Label::Positive), &mk("b", 2, Label::Negative)));
        let all = vec![mk("a", 1, Label::Positive), mk("a", 1, Label::Negative), mk("a", 2, Label::Negative)];
        assert_eq!(valid_pairs(&all), vec![(0, 1)]);
    }

    fn samples() -> Vec<Sample> {
        vec![
            Sample {
                instance_id: "line".into(),
                solution: vec![vec![0, 1, 2]],
                depth: 0,
                label: Label::Positive,
            },
            Sample {
                instance_id: "line".into(),
                solution: vec![vec![0, 0, 1, 2]],
                depth: 1,
                label: Label::Negative,
            },
        ]
    }

    #[test]
    fn export_import_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let insts = BTreeMap::from([("line".to_string(), line_instance()), ("other".to_string(), line_instance())]);
        export_dataset(dir.path(), &insts, &samples()).unwrap();
        let ds = import_dataset(dir.path()).unwrap();
        assert_eq!(ds.instances, insts);
        let mut got = ds.samples.clone();
        let mut want = samples();
        got.sort();
        want.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn empty_dataset() {
        let dir = tempfile::tempdir().unwrap();
        export_dataset(dir.path(), &BTreeMap::new(), &[]).unwrap();
        assert_eq!(import_dataset(dir.path()).unwrap(), Dataset::default());
    }

    #[test]
    fn missing_instance_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            export_dataset(dir.path(), &BTreeMap::new(), &samples()),
            Err(DatagenError::MissingInstance(_))
        ));
        let insts = BTreeMap::from([("line".to_string(), line_instance())]);
        export_dataset(dir.path(), &insts, &samples()).unwrap();
        fs::remove_file(dir.path().join("instances/line.inst")).unwrap();
        assert!(matches!(import_dataset(dir.path()), Err(DatagenError::MissingInstance(id)) if id == "line"));
    }

    #[test]
    fn disconnected_paths_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let insts = BTreeMap::from([("line".to_string(), line_instance())]);
        let mut bad = samples();
        bad[0].solution = vec![vec![0, 2]];
        assert!(matches!(
            export_dataset(dir.path(), &insts, &bad),
            Err(DatagenError::InvalidPath { .. })
        ));
        export_dataset(dir.path(), &insts, &samples()).unwrap();
        fs::write(
            dir.path().join("samples/line.ndjson"),
            "{\"label\":\"positive\",\"depth\":0,\"paths\":[[0,1,2]]}\n{\"label\":\"negative\",\"depth\":1,\"paths\":[[0,2]]}\n",
        )
        .unwrap();
        assert!(matches!(import_dataset(dir.path()), Err(DatagenError::InvalidPath { .. })));
    }

    #[test]
    fn parse_errors_carry_location() {
        let dir = tempfile::tempdir().unwrap();
        let insts = BTreeMap::from([("line".to_string(), line_instance())]);
        export_dataset(dir.path(), &insts, &samples()).unwrap();
        fs::write(dir.path().join("samples/line.ndjson"), "{\"label\":\"positive\",\"depth\":0,\"paths\":[[0,1,2]]}\nnope\n").unwrap();
        match import_dataset(dir.path()) {
            Err(DatagenError::Parse { line, file, .. }) => {
                assert_eq!(line, 2);
                assert!(file.ends_with("line.ndjson"));
            }
            other => panic!("{other:?}"),
        }
        fs::write(dir.path().join("manifest"), "geo-mapf-ds v2\n").unwrap();
        assert!(matches!(import_dataset(dir.path()), Err(DatagenError::Parse { line: 1, .. })));
    }
}
