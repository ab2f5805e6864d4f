//! Conflict-based search over the constraint tree: best-first CBS and the
//! focal variant with a pluggable ψ.

use std::collections::BTreeSet;
use std::rc::Rc;
use std::time::{Duration, Instant};

use super::conflict::{count_conflicts, detect_first_conflict, flowtime, split_conflict, Conflict};
use super::psi::{FocalHeuristic, HeuristicError, HeuristicKey, NodeView};
use super::treelog::TreeRecord;
use crate::instance::Instance;
use crate::lowlevel::{plan, reverse_bfs_dists, Constraint, ConstraintTable, Path, PlanError};

#[derive(Debug, Clone, Default)]
pub struct SolveOptions {
    /// Cooperative deadline, checked before every expansion.
    pub timeout: Option<Duration>,
    /// Keep a record of every generated node.
    pub record_tree: bool,
    /// Check focal bookkeeping invariants at every step. Failures are
    /// counted in [`SolveStats::audit_failures`], never panicked on.
    pub audit: bool,
}

impl SolveOptions {
    pub fn with_timeout(timeout: Duration) -> Self {
        Self {
            timeout: Some(timeout),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveStats {
    pub expansions: u64,
    pub generated: u64,
    /// Children dropped because the replan failed.
    pub pruned_children: u64,
    pub lb_updates: u64,
    /// Expansions where both children still had the parent's first conflict
    /// at the same (t, i, j).
    pub repeated_conflicts: u64,
    pub audit_checks: u64,
    pub audit_failures: u64,
    pub wall_time: Duration,
}

#[derive(Debug, Clone)]
pub struct Solved {
    pub solution: Vec<Path>,
    pub flowtime: usize,
    /// Id of the conflict-free node.
    pub node: u64,
    pub depth: usize,
    pub stats: SolveStats,
    pub tree: Option<Vec<TreeRecord>>,
}

#[derive(Debug, thiserror::Error)]
pub enum SolveError {
    #[error("timed out after {} expansions", .0.expansions)]
    Timeout(SolveStats),
    #[error("no solution: open list exhausted after {} expansions", .0.expansions)]
    NoSolution(SolveStats),
    #[error("agent {agent} has no path at the root: {cause}")]
    RootInfeasible { agent: usize, cause: PlanError },
    #[error("heuristic failed: {0}")]
    Heuristic(#[from] HeuristicError),
    #[error("suboptimality factor must be ≥ 1, got {0}")]
    BadFactor(f64),
}

impl SolveError {
    pub fn stats(&self) -> Option<&SolveStats> {
        match self {
            SolveError::Timeout(s) | SolveError::NoSolution(s) => Some(s),
            _ => None,
        }
    }
}

struct Node {
    parent: Option<u64>,
    depth: usize,
    constraint: Option<Constraint>,
    solution: Vec<Rc<Path>>,
    cost: usize,
    conflicts: usize,
    first: Option<Conflict>,
}

/// Shared tree bookkeeping for both solvers. Node ids are arena indices.
struct Tree<'a> {
    inst: &'a Instance,
    dists: Vec<Vec<usize>>,
    nodes: Vec<Node>,
    log: Option<Vec<TreeRecord>>,
    stats: SolveStats,
    started: Instant,
    deadline: Option<Instant>,
}

impl<'a> Tree<'a> {
    fn new(inst: &'a Instance, opts: &SolveOptions) -> Self {
        let started = Instant::now();
        Self {
            inst,
            dists: inst.goals.iter().map(|&g| reverse_bfs_dists(&inst.roadmap, g)).collect(),
            nodes: Vec::new(),
            log: opts.record_tree.then(Vec::new),
            stats: SolveStats::default(),
            started,
            deadline: opts.timeout.map(|t| started + t),
        }
    }

    fn expired(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    fn push(&mut self, node: Node) -> u64 {
        let id = self.nodes.len() as u64;
        if let Some(log) = &mut self.log {
            log.push(TreeRecord {
                id,
                parent: node.parent,
                depth: node.depth,
                cost: node.cost,
                constraint: node.constraint,
                paths: node.solution.iter().map(|p| p.vertices().to_vec()).collect(),
            });
        }
        self.nodes.push(node);
        self.stats.generated += 1;
        id
    }

    fn make_node(&self, parent: Option<u64>, depth: usize, constraint: Option<Constraint>, solution: Vec<Rc<Path>>) -> Node {
        let r = self.inst.radius;
        let rm = &self.inst.roadmap;
        Node {
            parent,
            depth,
            constraint,
            cost: flowtime(&solution),
            conflicts: count_conflicts(&solution, rm, r),
            first: detect_first_conflict(&solution, rm, r),
            solution,
        }
    }

    fn root(&mut self) -> Result<u64, SolveError> {
        let empty = ConstraintTable::default();
        let mut solution = Vec::with_capacity(self.inst.num_agents());
        for agent in 0..self.inst.num_agents() {
            let p = plan(
                &self.inst.roadmap,
                self.inst.starts[agent],
                self.inst.goals[agent],
                &empty,
                &self.dists[agent],
            )
            .map_err(|cause| SolveError::RootInfeasible { agent, cause })?;
            solution.push(Rc::new(p));
        }
        let node = self.make_node(None, 0, None, solution);
        Ok(self.push(node))
    }

    fn table_for(&self, mut id: u64, agent: usize) -> ConstraintTable {
        let mut table = ConstraintTable::default();
        loop {
            let n = &self.nodes[id as usize];
            if let Some(c) = n.constraint.filter(|c| c.agent == agent) {
                table.insert(c.vertex, c.time);
            }
            match n.parent {
                Some(p) => id = p,
                None => return table,
            }
        }
    }

    /// Splits the first conflict of `id` and replans the affected agent in
    /// each child, in order (C₁, C₂). Returns the ids of children that
    /// have a path.
    fn expand(&mut self, id: u64) -> Vec<u64> {
        self.stats.expansions += 1;
        let conflict = self.nodes[id as usize].first.expect("expanded node has a conflict");
        let (c1, c2) = split_conflict(&conflict);
        let mut children = Vec::with_capacity(2);
        let mut repeats = 0;
        for c in [c1, c2] {
            let mut table = self.table_for(id, c.agent);
            table.insert(c.vertex, c.time);
            let inst = self.inst;
            let planned = plan(
                &inst.roadmap,
                inst.starts[c.agent],
                inst.goals[c.agent],
                &table,
                &self.dists[c.agent],
            );
            let Ok(path) = planned else {
                self.stats.pruned_children += 1;
                continue;
            };
            let parent = &self.nodes[id as usize];
            let mut solution = parent.solution.clone();
            solution[c.agent] = Rc::new(path);
            let child = self.make_node(Some(id), parent.depth + 1, Some(c), solution);
            if child.first.is_some_and(|f| (f.t, f.i, f.j) == (conflict.t, conflict.i, conflict.j)) {
                repeats += 1;
            }
            children.push(self.push(child));
        }
        if repeats == 2 {
            self.stats.repeated_conflicts += 1;
        }
        children
    }

    fn finish(mut self, id: u64) -> Solved {
        self.stats.wall_time = self.started.elapsed();
        let n = &self.nodes[id as usize];
        Solved {
            solution: n.solution.iter().map(|p| Path::clone(p)).collect(),
            flowtime: n.cost,
            node: id,
            depth: n.depth,
            stats: self.stats,
            tree: self.log,
        }
    }

    fn fail(mut self, timeout: bool) -> SolveError {
        self.stats.wall_time = self.started.elapsed();
        if timeout {
            SolveError::Timeout(self.stats)
        } else {
            SolveError::NoSolution(self.stats)
        }
    }
}

/// Best-first CBS on cost, ties by fewer conflicts then creation order.
pub fn cbs_solve(inst: &Instance, opts: &SolveOptions) -> Result<Solved, SolveError> {
    let mut tree = Tree::new(inst, opts);
    let root = tree.root()?;
    let key = |t: &Tree, id: u64| {
        let n = &t.nodes[id as usize];
        (n.cost, n.conflicts, id)
    };
    let mut open = BTreeSet::from([key(&tree, root)]);
    while let Some((_, _, id)) = open.pop_first() {
        if tree.expired() {
            return Err(tree.fail(true));
        }
        if tree.nodes[id as usize].first.is_none() {
            return Ok(tree.finish(id));
        }
        for child in tree.expand(id) {
            open.insert(key(&tree, child));
        }
    }
    Err(tree.fail(false))
}

fn admits(cost: usize, w: f64, lb: usize) -> bool {
    w.is_infinite() || cost as f64 <= w * lb as f64
}

/// Focal-search CBS: expands the ψ-minimal node among those with cost
/// within `w` of the lower bound LB. `w` may be `f64::INFINITY`.
pub fn focal_solve(
    inst: &Instance,
    w: f64,
    psi: &mut dyn FocalHeuristic,
    opts: &SolveOptions,
) -> Result<Solved, SolveError> {
    if w.is_nan() || w < 1.0 {
        return Err(SolveError::BadFactor(w));
    }
    let mut tree = Tree::new(inst, opts);
    let root = tree.root()?;

    let mut keys: Vec<Option<HeuristicKey>> = Vec::new();
    let score = |tree: &Tree, psi: &mut dyn FocalHeuristic, ids: &[u64], keys: &mut Vec<Option<HeuristicKey>>| -> Result<(), HeuristicError> {
        if ids.is_empty() {
            return Ok(());
        }
        let views: Vec<NodeView> = ids
            .iter()
            .map(|&id| {
                let n = &tree.nodes[id as usize];
                NodeView {
                    id,
                    depth: n.depth,
                    cost: n.cost,
                    conflicts: n.conflicts,
                    solution: &n.solution,
                }
            })
            .collect();
        let out = psi.keys(tree.inst, &views)?;
        if out.len() != ids.len() {
            return Err(HeuristicError::Arity {
                want: ids.len(),
                got: out.len(),
            });
        }
        keys.resize(tree.nodes.len(), None);
        for (&id, k) in ids.iter().zip(out) {
            keys[id as usize] = Some(k);
        }
        Ok(())
    };
    score(&tree, psi, &[root], &mut keys)?;

    let cost = |tree: &Tree, id: u64| tree.nodes[id as usize].cost;
    let mut open: BTreeSet<(usize, u64)> = BTreeSet::from([(cost(&tree, root), root)]);
    let mut focal: BTreeSet<(HeuristicKey, u64)> = BTreeSet::new();
    focal.insert((keys[root as usize].clone().unwrap(), root));
    let mut lb = cost(&tree, root);

    let rebuild = |open: &BTreeSet<(usize, u64)>, keys: &[Option<HeuristicKey>], lb: usize| {
        open.iter()
            .take_while(|(c, _)| admits(*c, w, lb))
            .map(|&(_, id)| (keys[id as usize].clone().unwrap(), id))
            .collect::<BTreeSet<_>>()
    };

    while !open.is_empty() {
        if tree.expired() {
            return Err(tree.fail(true));
        }
        if focal.is_empty() {
            // every Open node lies above w·LB; raise LB to the Open minimum
            lb = open.first().unwrap().0;
            tree.stats.lb_updates += 1;
            focal = rebuild(&open, &keys, lb);
        }
        let (_, id) = focal.pop_first().unwrap();
        let c_sel = cost(&tree, id);
        open.remove(&(c_sel, id));
        if opts.audit {
            tree.stats.audit_checks += 1;
            if !admits(c_sel, w, lb) {
                tree.stats.audit_failures += 1;
            }
        }
        if tree.nodes[id as usize].first.is_none() {
            return Ok(tree.finish(id));
        }
        if let Some(&(min_open, _)) = open.first() {
            if min_open > lb {
                lb = min_open;
                tree.stats.lb_updates += 1;
                focal = rebuild(&open, &keys, lb);
                if opts.audit {
                    tree.stats.audit_checks += 1;
                    let fresh_min = open.first().map(|e| e.0);
                    let focal_ok = focal.iter().all(|(_, n)| admits(cost(&tree, *n), w, lb))
                        && focal.len() == open.iter().filter(|(c, _)| admits(*c, w, lb)).count();
                    if fresh_min != Some(lb) || !focal_ok {
                        tree.stats.audit_failures += 1;
                    }
                }
            }
        }
        let children = tree.expand(id);
        score(&tree, psi, &children, &mut keys)?;
        for child in children {
            let c = cost(&tree, child);
            if opts.audit {
                tree.stats.audit_checks += 1;
                if c < c_sel {
                    tree.stats.audit_failures += 1;
                }
            }
            open.insert((c, child));
            if admits(c, w, lb) {
                focal.insert((keys[child as usize].clone().unwrap(), child));
            }
        }
    }
    Err(tree.fail(false))
}
