//! Solver runs with timeouts, per-run records, and the summary report.
//!
//! Runs CSV columns: `instance,agents,solver,w,outcome,wall_time_s,flowtime,expansions,generated`.
//! `w` is empty for CBS and `inf` for an unbounded focal factor; `flowtime`
//! is empty unless the outcome is `solved`.
//!
//! Report CSV columns: `solver,w,agents,runs,solved,success_rate,mean_time_s,co_solved,flowtime_ratio`.
//! `flowtime_ratio` is the mean of per-instance flowtime / baseline flowtime
//! over instances both solved, or `n/a` when there are none.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::bridge::{PhiClient, DEFAULT_REQUEST_TIMEOUT};
use crate::highlevel::{
    cbs_solve, focal_solve, validate_solution, ConflictCountPsi, DepthPhiPsi, SolveError, SolveOptions, Solved,
};
use crate::instance::Instance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Solved,
    Timeout,
    Infeasible,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance: String,
    pub agents: usize,
    pub solver: String,
    pub w: Option<f64>,
    pub outcome: Outcome,
    pub wall_time_s: f64,
    pub flowtime: Option<usize>,
    pub expansions: u64,
    pub generated: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolverSpec {
    Cbs,
    FocalConflicts { w: f64 },
    FocalPhi { w: f64, endpoint: String },
}

impl SolverSpec {
    pub fn name(&self) -> &'static str {
        match self {
            SolverSpec::Cbs => "cbs",
            SolverSpec::FocalConflicts { .. } => "focal",
            SolverSpec::FocalPhi { .. } => "focal-phi",
        }
    }

    pub fn w(&self) -> Option<f64> {
        match self {
            SolverSpec::Cbs => None,
            SolverSpec::FocalConflicts { w } | SolverSpec::FocalPhi { w, .. } => Some(*w),
        }
    }
}

/// Runs one solver on one instance. A solution that fails validation is
/// recorded as an error, never as solved.
pub fn run_one(
    instance_id: &str,
    inst: &Instance,
    solver: &SolverSpec,
    timeout: Duration,
) -> (RunRecord, Result<Solved, String>) {
    let opts = SolveOptions::with_timeout(timeout);
    let started = Instant::now();
    let result: Result<Solved, SolveError> = match solver {
        SolverSpec::Cbs => cbs_solve(inst, &opts),
        SolverSpec::FocalConflicts { w } => focal_solve(inst, *w, &mut ConflictCountPsi, &opts),
        SolverSpec::FocalPhi { w, endpoint } => match PhiClient::connect(endpoint, DEFAULT_REQUEST_TIMEOUT) {
            Ok(client) => {
                let mut psi = DepthPhiPsi::new(client).with_graph_id(instance_id);
                focal_solve(inst, *w, &mut psi, &opts)
            }
            Err(e) => Err(SolveError::Heuristic(e.into())),
        },
    };
    let wall = started.elapsed().as_secs_f64();
    let mut rec = RunRecord {
        instance: instance_id.to_string(),
        agents: inst.num_agents(),
        solver: solver.name().to_string(),
        w: solver.w(),
        outcome: Outcome::Error,
        wall_time_s: wall,
        flowtime: None,
        expansions: 0,
        generated: 0,
    };
    let detail = match result {
        Ok(s) => {
            rec.expansions = s.stats.expansions;
            rec.generated = s.stats.generated;
            let violations = validate_solution(inst, &s.solution);
            if violations.is_empty() {
                rec.outcome = Outcome::Solved;
                rec.flowtime = Some(s.flowtime);
                Ok(s)
            } else {
                Err(format!("solution failed validation: {}", violations[0]))
            }
        }
        Err(e) => {
            if let Some(st) = e.stats() {
                rec.expansions = st.expansions;
                rec.generated = st.generated;
            }
            rec.outcome = match e {
                SolveError::Timeout(_) => Outcome::Timeout,
                SolveError::NoSolution(_) | SolveError::RootInfeasible { .. } => Outcome::Infeasible,
                _ => Outcome::Error,
            };
            Err(e.to_string())
        }
    };
    (rec, detail)
}

pub fn write_runs<W: io::Write>(w: W, runs: &[RunRecord]) -> Result<(), csv::Error> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in runs {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_runs<R: io::Read>(r: R) -> Result<Vec<RunRecord>, csv::Error> {
    csv::Reader::from_reader(r).deserialize().collect()
}

/// Ratio column value: a number or `n/a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ratio(pub Option<f64>);

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(v) => write!(f, "{v:?}"),
            None => f.write_str("n/a"),
        }
    }
}

impl FromStr for Ratio {
    type Err = std::num::ParseFloatError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "n/a" {
            Ok(Ratio(None))
        } else {
            s.parse().map(|v| Ratio(Some(v)))
        }
    }
}

impl Serialize for Ratio {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Ratio {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub solver: String,
    pub w: Option<f64>,
    pub agents: usize,
    pub runs: usize,
    pub solved: usize,
    pub success_rate: f64,
    /// Failed runs count as the full timeout.
    pub mean_time_s: f64,
    pub co_solved: usize,
    pub flowtime_ratio: Ratio,
}

fn w_key(w: Option<f64>) -> String {
    w.map(|w| w.to_string()).unwrap_or_default()
}

/// Groups runs by (solver, w, agents). Flowtime ratios compare against
/// runs of `baseline` on the same instance.
pub fn report(runs: &[RunRecord], timeout: Duration, baseline: &str) -> Vec<ReportRow> {
    let base: HashMap<&str, usize> = runs
        .iter()
        .filter(|r| r.solver == baseline && r.outcome == Outcome::Solved)
        .filter_map(|r| r.flowtime.map(|f| (r.instance.as_str(), f)))
        .collect();
    let mut groups: BTreeMap<(String, String, usize), Vec<&RunRecord>> = BTreeMap::new();
    for r in runs {
        groups
            .entry((r.solver.clone(), w_key(r.w), r.agents))
            .or_default()
            .push(r);
    }
    let limit = timeout.as_secs_f64();
    groups
        .into_iter()
        .map(|((solver, _, agents), rs)| {
            let solved: Vec<&&RunRecord> = rs.iter().filter(|r| r.outcome == Outcome::Solved).collect();
            let total_time: f64 = rs
                .iter()
                .map(|r| if r.outcome == Outcome::Solved { r.wall_time_s } else { r.wall_time_s.max(limit) })
                .sum();
            let ratios: Vec<f64> = solved
                .iter()
                .filter_map(|r| {
                    let b = *base.get(r.instance.as_str())?;
                    Some(r.flowtime? as f64 / b as f64)
                })
                .collect();
            ReportRow {
                w: rs[0].w,
                solver,
                agents,
                runs: rs.len(),
                solved: solved.len(),
                success_rate: solved.len() as f64 / rs.len() as f64,
                mean_time_s: total_time / rs.len() as f64,
                co_solved: ratios.len(),
                flowtime_ratio: Ratio((!ratios.is_empty()).then(|| ratios.iter().sum::<f64>() / ratios.len() as f64)),
            }
        })
        .collect()
}

pub fn write_report<W: io::Write>(w: W, rows: &[ReportRow]) -> Result<(), csv::Error> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_report<R: io::Read>(r: R) -> Result<Vec<ReportRow>, csv::Error> {
    csv::Reader::from_reader(r).deserialize().collect()
}
