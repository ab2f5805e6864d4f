use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::geometry::{swept_discs_disjoint, AgentRadius, Segment2};
use crate::lowlevel::{Constraint, Path};
use crate::roadmap::{Roadmap, VertexId};

/// Agents `i < j` whose edges into step `t` bring their discs into contact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Conflict {
    pub i: usize,
    pub j: usize,
    pub t: usize,
    pub from_i: VertexId,
    pub from_j: VertexId,
    pub to_i: VertexId,
    pub to_j: VertexId,
}

/// Sum of arrival steps.
pub fn flowtime<P: Deref<Target = Path>>(solution: &[P]) -> usize {
    solution.iter().map(|p| p.arrival()).sum()
}

fn horizon<P: Deref<Target = Path>>(solution: &[P]) -> usize {
    solution.iter().map(|p| p.arrival()).max().unwrap_or(0)
}

/// Iterates over every conflicting (t, i, j) in lexicographic order.
fn conflicts<'a, P: Deref<Target = Path>>(
    solution: &'a [P],
    roadmap: &'a Roadmap,
    r: AgentRadius,
) -> impl Iterator<Item = Conflict> + 'a {
    let m = solution.len();
    (1..=horizon(solution)).flat_map(move |t| {
        let edges: Vec<(VertexId, VertexId, Segment2)> = solution
            .iter()
            .map(|p| {
                let (a, b) = (p.at(t - 1), p.at(t));
                (a, b, roadmap.segment(a, b))
            })
            .collect();
        (0..m)
            .flat_map(move |i| (i + 1..m).map(move |j| (i, j)))
            .filter_map(move |(i, j)| {
                let (fi, ti, si) = edges[i];
                let (fj, tj, sj) = edges[j];
                (!swept_discs_disjoint(&si, &sj, r)).then_some(Conflict {
                    i,
                    j,
                    t,
                    from_i: fi,
                    from_j: fj,
                    to_i: ti,
                    to_j: tj,
                })
            })
            .collect::<Vec<_>>()
    })
}

/// First conflict ordered by (t, i, j), with paths extended at their goals.
pub fn detect_first_conflict<P: Deref<Target = Path>>(
    solution: &[P],
    roadmap: &Roadmap,
    r: AgentRadius,
) -> Option<Conflict> {
    conflicts(solution, roadmap, r).next()
}

/// Number of conflicting (t, i, j) triples over the whole horizon.
pub fn count_conflicts<P: Deref<Target = Path>>(
    solution: &[P],
    roadmap: &Roadmap,
    r: AgentRadius,
) -> usize {
    conflicts(solution, roadmap, r).count()
}

/// The two destination-vertex constraints of a conflict, `(C1, C2)`.
pub fn split_conflict(c: &Conflict) -> (Constraint, Constraint) {
    (
        Constraint {
            agent: c.i,
            vertex: c.to_i,
            time: c.t,
        },
        Constraint {
            agent: c.j,
            vertex: c.to_j,
            time: c.t,
        },
    )
}
