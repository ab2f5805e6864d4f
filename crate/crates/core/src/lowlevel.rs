//! Optimal single-agent search in space-time under vertex-time constraints.
//! Every move and every wait costs one step.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::roadmap::{Roadmap, VertexId};

/// Agent `agent` must not be at `vertex` at step `time`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Constraint {
    pub agent: usize,
    pub vertex: VertexId,
    pub time: usize,
}

/// A sequence of vertices, one per step. After the last step the agent
/// stays at its final vertex forever.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Path(Vec<VertexId>);

impl Path {
    /// `vertices` must be non-empty.
    pub fn new(vertices: Vec<VertexId>) -> Self {
        assert!(!vertices.is_empty(), "a path has at least one vertex");
        Self(vertices)
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.0
    }

    /// Arrival step.
    pub fn arrival(&self) -> usize {
        self.0.len() - 1
    }

    /// Position at step `t`, extended by staying at the last vertex.
    pub fn at(&self, t: usize) -> VertexId {
        self.0[t.min(self.0.len() - 1)]
    }
}

impl AsRef<[VertexId]> for Path {
    fn as_ref(&self) -> &[VertexId] {
        &self.0
    }
}

pub const UNREACHABLE: usize = usize::MAX;

/// Hop distance from every vertex to `goal` (BFS over reversed edges).
/// Unreachable vertices get [`UNREACHABLE`].
pub fn reverse_bfs_dists(roadmap: &Roadmap, goal: VertexId) -> Vec<usize> {
    let mut dist = vec![UNREACHABLE; roadmap.num_vertices()];
    dist[goal] = 0;
    let mut queue = VecDeque::from([goal]);
    while let Some(v) = queue.pop_front() {
        for &u in roadmap.predecessors(v) {
            if dist[u] == UNREACHABLE {
                dist[u] = dist[v] + 1;
                queue.push_back(u);
            }
        }
    }
    dist
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum PlanError {
    #[error("goal not reachable from start in the roadmap")]
    Unreachable,
    #[error("no constraint-respecting path within {0} steps")]
    CapExhausted(usize),
}

/// Constraints of a single agent, indexed for lookup.
#[derive(Debug, Clone, Default)]
pub struct ConstraintTable {
    blocked: HashSet<(VertexId, usize)>,
    // latest constrained step per vertex
    latest: HashMap<VertexId, usize>,
}

impl ConstraintTable {
    pub fn for_agent<'a>(agent: usize, constraints: impl IntoIterator<Item = &'a Constraint>) -> Self {
        let mut table = Self::default();
        for c in constraints.into_iter().filter(|c| c.agent == agent) {
            table.insert(c.vertex, c.time);
        }
        table
    }

    pub fn insert(&mut self, vertex: VertexId, time: usize) {
        self.blocked.insert((vertex, time));
        let e = self.latest.entry(vertex).or_insert(time);
        *e = (*e).max(time);
    }

    pub fn is_blocked(&self, vertex: VertexId, time: usize) -> bool {
        self.blocked.contains(&(vertex, time))
    }

    pub fn len(&self) -> usize {
        self.blocked.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocked.is_empty()
    }

    pub fn latest_time(&self) -> Option<usize> {
        self.latest.values().copied().max()
    }

    /// True if an agent that arrives at `goal` at `t` may stay there forever.
    fn can_finish(&self, goal: VertexId, t: usize) -> bool {
        self.latest.get(&goal).is_none_or(|&last| last < t)
    }
}

/// Step cap large enough that no optimal path is cut off: any feasible path
/// sits at some vertex with a route to the goal after the last constrained
/// step, so arrival never exceeds `last constraint + max hop distance`.
pub fn default_time_cap(roadmap: &Roadmap, table: &ConstraintTable, dists: &[usize]) -> usize {
    let max_hop = dists.iter().copied().filter(|&d| d != UNREACHABLE).max().unwrap_or(0);
    let base = roadmap.num_vertices() + table.len();
    base.max(table.latest_time().unwrap_or(0)) + max_hop
}

/// Minimum-arrival path from `start` to `goal` that never occupies a blocked
/// (vertex, step) and, once at the goal, is never required to leave it.
/// Arrival is bounded by `t_cap`.
pub fn plan_spacetime(
    roadmap: &Roadmap,
    start: VertexId,
    goal: VertexId,
    table: &ConstraintTable,
    dists: &[usize],
    t_cap: usize,
) -> Result<Path, PlanError> {
    if dists[start] == UNREACHABLE {
        return Err(PlanError::Unreachable);
    }
    if table.is_blocked(start, 0) {
        return Err(PlanError::CapExhausted(t_cap));
    }

    // min-heap on (f, -g, vertex): lower f, then later time, then smaller id
    let mut open = BinaryHeap::new();
    let mut parent: HashMap<(VertexId, usize), VertexId> = HashMap::new();
    let mut closed: HashSet<(VertexId, usize)> = HashSet::new();
    open.push(Reverse((dists[start], Reverse(0usize), start)));

    while let Some(Reverse((_, Reverse(t), v))) = open.pop() {
        if !closed.insert((v, t)) {
            continue;
        }
        if v == goal && table.can_finish(goal, t) {
            let mut verts = vec![v];
            let (mut cur, mut ct) = (v, t);
            while ct > 0 {
                cur = parent[&(cur, ct)];
                ct -= 1;
                verts.push(cur);
            }
            verts.reverse();
            return Ok(Path::new(verts));
        }
        if t >= t_cap {
            continue;
        }
        let nt = t + 1;
        for &w in roadmap.successors(v) {
            let h = dists[w];
            if h == UNREACHABLE || nt + h > t_cap || table.is_blocked(w, nt) {
                continue;
            }
            if closed.contains(&(w, nt)) {
                continue;
            }
            parent.entry((w, nt)).or_insert(v);
            open.push(Reverse((nt + h, Reverse(nt), w)));
        }
    }
    Err(PlanError::CapExhausted(t_cap))
}

/// Convenience wrapper using [`default_time_cap`].
pub fn plan(
    roadmap: &Roadmap,
    start: VertexId,
    goal: VertexId,
    table: &ConstraintTable,
    dists: &[usize],
) -> Result<Path, PlanError> {
    let cap = default_time_cap(roadmap, table, dists);
    plan_spacetime(roadmap, start, goal, table, dists, cap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point2;
    use proptest::prelude::*;

    fn line() -> Roadmap {
        // a=0 -> b=1 -> g=2
        let pos = (0..3).map(|i| Point2::new(i as f64, 0.0)).collect();
        Roadmap::with_waits(pos, [(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn bfs_examples() {
        let rm = line();
        let d = reverse_bfs_dists(&rm, 2);
        assert_eq!(d, vec![2, 1, 0]);
        let pos = (0..4).map(|i| Point2::new(i as f64, 0.0)).collect();
        let rm = Roadmap::with_waits(pos, [(0, 1), (1, 2)]).unwrap();
        assert_eq!(reverse_bfs_dists(&rm, 2)[3], UNREACHABLE);
    }

    #[test]
    fn trivial_path() {
        let rm = line();
        let d = reverse_bfs_dists(&rm, 2);
        let p = plan(&rm, 2, 2, &ConstraintTable::default(), &d).unwrap();
        assert_eq!(p.vertices(), &[2]);
        assert_eq!(p.arrival(), 0);
    }

    #[test]
    fn forced_wait() {
        let rm = line();
        let d = reverse_bfs_dists(&rm, 2);
        let cons = [Constraint { agent: 0, vertex: 1, time: 1 }];
        let table = ConstraintTable::for_agent(0, &cons);
        let p = plan(&rm, 0, 2, &table, &d).unwrap();
        assert_eq!(p.vertices(), &[0, 0, 1, 2]);
        assert_eq!(p.arrival(), 3);
        // constraint for another agent is ignored
        let other = ConstraintTable::for_agent(1, &cons);
        assert_eq!(plan(&rm, 0, 2, &other, &d).unwrap().arrival(), 2);
    }

    #[test]
    fn goal_blocked_until_cap() {
        let rm = line();
        let d = reverse_bfs_dists(&rm, 2);
        let cons: Vec<_> = (0..=6).map(|t| Constraint { agent: 0, vertex: 2, time: t }).collect();
        let table = ConstraintTable::for_agent(0, &cons);
        assert_eq!(
            plan_spacetime(&rm, 0, 2, &table, &d, 6),
            Err(PlanError::CapExhausted(6))
        );
        // with a default cap the agent arrives right after the last block
        assert_eq!(plan(&rm, 0, 2, &table, &d).unwrap().arrival(), 7);
    }

    #[test]
    fn later_goal_constraint_forces_leaving() {
        // agent starts on its goal but must vacate it at step 2
        let rm = line();
        let pos = (0..3).map(|i| Point2::new(i as f64, 0.0)).collect();
        let rm2 = Roadmap::with_waits(pos, [(0, 1), (1, 2), (2, 1)]).unwrap();
        let d = reverse_bfs_dists(&rm2, 2);
        let table = ConstraintTable::for_agent(0, &[Constraint { agent: 0, vertex: 2, time: 2 }]);
        let p = plan(&rm2, 2, 2, &table, &d).unwrap();
        assert_eq!(p.arrival(), 3);
        assert_ne!(p.at(2), 2);
        let _ = rm;
    }

    #[test]
    fn unreachable_is_distinct_from_cap() {
        let rm = line();
        let d = reverse_bfs_dists(&rm, 0);
        assert_eq!(
            plan(&rm, 2, 0, &ConstraintTable::default(), &d),
            Err(PlanError::Unreachable)
        );
    }

    /// Breadth-first enumeration of the space-time graph, one layer per step.
    /// Reads the raw constraint list only.
    fn brute_force_arrival(
        rm: &Roadmap,
        s: usize,
        g: usize,
        cons: &[Constraint],
        horizon: usize,
    ) -> Option<usize> {
        let blocked = |v: usize, t: usize| cons.iter().any(|c| c.vertex == v && c.time == t);
        if blocked(s, 0) {
            return None;
        }
        let mut layer = vec![false; rm.num_vertices()];
        layer[s] = true;
        for t in 0..=horizon {
            let may_stay = cons.iter().all(|c| c.vertex != g || c.time < t);
            if layer[g] && may_stay {
                return Some(t);
            }
            let mut next = vec![false; rm.num_vertices()];
            for (v, &on) in layer.iter().enumerate() {
                if on {
                    for &(a, b) in rm.edges() {
                        if a == v && !blocked(b, t + 1) {
                            next[b] = true;
                        }
                    }
                }
            }
            layer = next;
        }
        None
    }

    fn random_case() -> impl Strategy<Value = (Roadmap, usize, usize, Vec<Constraint>)> {
        (3usize..=12)
            .prop_flat_map(|n| {
                (
                    Just(n),
                    prop::collection::vec((0..n, 0..n), 0..=3 * n),
                    0..n,
                    0..n,
                    prop::collection::vec((0..n, 1usize..8), 0..=5),
                )
            })
            .prop_map(|(n, edges, s, g, cons)| {
                let pos = (0..n).map(|i| Point2::new(i as f64, 0.0)).collect();
                let mut e: Vec<_> = edges;
                e.sort();
                e.dedup();
                let rm = Roadmap::with_waits(pos, e).unwrap();
                let cons = cons
                    .into_iter()
                    .map(|(v, t)| Constraint { agent: 0, vertex: v, time: t })
                    .collect();
                (rm, s, g, cons)
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn matches_exhaustive_enumeration((rm, s, g, cons) in random_case()) {
            let table = ConstraintTable::for_agent(0, &cons);
            let d = reverse_bfs_dists(&rm, g);
            let got = plan(&rm, s, g, &table, &d);
            let horizon = default_time_cap(&rm, &table, &d);
            let want = if d[s] == UNREACHABLE { None } else { brute_force_arrival(&rm, s, g, &cons, horizon) };
            match (&got, want) {
                (Ok(p), Some(t)) => {
                    prop_assert_eq!(p.arrival(), t);
                    // replay: valid edges, constraints obeyed, endpoints right
                    prop_assert_eq!(p.at(0), s);
                    prop_assert_eq!(*p.vertices().last().unwrap(), g);
                    for (t, w) in p.vertices().windows(2).enumerate() {
                        prop_assert!(rm.has_edge(w[0], w[1]));
                        prop_assert!(!table.is_blocked(w[1], t + 1));
                    }
                    for c in &cons {
                        prop_assert!(p.at(c.time) != c.vertex);
                    }
                    // heuristic never overestimates
                    prop_assert!(d[s] <= p.arrival());
                }
                (Err(PlanError::Unreachable), None) => prop_assert_eq!(d[s], UNREACHABLE),
                (Err(PlanError::CapExhausted(_)), None) => {}
                (got, want) => prop_assert!(false, "planner {:?} vs oracle {:?}", got, want),
            }
        }

        #[test]
        fn adding_constraints_never_helps((rm, s, g, cons) in random_case(), extra in (0usize..12, 1usize..8)) {
            let d = reverse_bfs_dists(&rm, g);
            let base = plan(&rm, s, g, &ConstraintTable::for_agent(0, &cons), &d);
            let mut more = cons.clone();
            more.push(Constraint { agent: 0, vertex: extra.0 % rm.num_vertices(), time: extra.1 });
            let tighter = plan(&rm, s, g, &ConstraintTable::for_agent(0, &more), &d);
            if let (Ok(a), Ok(b)) = (&base, &tighter) {
                prop_assert!(b.arrival() >= a.arrival());
            }
            if base.is_err() {
                prop_assert!(tighter.is_err());
            }
        }
    }
}
