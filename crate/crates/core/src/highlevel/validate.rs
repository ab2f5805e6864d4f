//! Independent solution checker. Shares only the geometry primitives with
//! the planner.

use std::fmt;

use crate::geometry::{point_rect_distance, segment_rect_distance, segment_segment_distance, Segment2};
use crate::instance::Instance;
use crate::roadmap::VertexId;

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    AgentCount { expected: usize, got: usize },
    EmptyPath { agent: usize },
    UnknownVertex { agent: usize, t: usize, vertex: VertexId },
    WrongStart { agent: usize, expected: VertexId, got: VertexId },
    WrongGoal { agent: usize, expected: VertexId, got: VertexId },
    MissingEdge { agent: usize, t: usize, from: VertexId, to: VertexId },
    Obstacle { agent: usize, t: usize, from: VertexId, to: VertexId },
    OutOfBounds { agent: usize, t: usize, vertex: VertexId },
    InterAgent { t: usize, i: usize, j: usize, distance: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            AgentCount { expected, got } => write!(f, "expected {expected} paths, got {got}"),
            EmptyPath { agent } => write!(f, "agent {agent}: empty path"),
            UnknownVertex { agent, t, vertex } => write!(f, "agent {agent} t={t}: unknown vertex {vertex}"),
            WrongStart { agent, expected, got } => write!(f, "agent {agent}: starts at {got}, expected {expected}"),
            WrongGoal { agent, expected, got } => write!(f, "agent {agent}: ends at {got}, expected {expected}"),
            MissingEdge { agent, t, from, to } => write!(f, "agent {agent} t={t}: no edge {from}->{to}"),
            Obstacle { agent, t, from, to } => write!(f, "agent {agent} t={t}: edge {from}->{to} hits an obstacle"),
            OutOfBounds { agent, t, vertex } => write!(f, "agent {agent} t={t}: vertex {vertex} outside the world"),
            InterAgent { t, i, j, distance } => write!(f, "agents {i},{j} t={t}: discs meet (distance {distance:.6})"),
        }
    }
}

/// Checks endpoints, edge existence, obstacle clearance and inter-agent
/// separation. An empty result means the solution is valid.
pub fn validate_solution<P: AsRef<[VertexId]>>(inst: &Instance, solution: &[P]) -> Vec<Violation> {
    let mut out = Vec::new();
    let rm = &inst.roadmap;
    let n = rm.num_vertices();
    let r = inst.radius.get();
    if solution.len() != inst.num_agents() {
        out.push(Violation::AgentCount {
            expected: inst.num_agents(),
            got: solution.len(),
        });
        return out;
    }

    let mut usable = vec![true; solution.len()];
    for (agent, path) in solution.iter().map(AsRef::as_ref).enumerate() {
        let (Some(&first), Some(&last)) = (path.first(), path.last()) else {
            out.push(Violation::EmptyPath { agent });
            usable[agent] = false;
            continue;
        };
        let bad: Vec<_> = path.iter().enumerate().filter(|(_, &v)| v >= n).collect();
        if !bad.is_empty() {
            for (t, &vertex) in bad {
                out.push(Violation::UnknownVertex { agent, t, vertex });
            }
            usable[agent] = false;
            continue;
        }
        if first != inst.starts[agent] {
            out.push(Violation::WrongStart { agent, expected: inst.starts[agent], got: first });
        }
        if last != inst.goals[agent] {
            out.push(Violation::WrongGoal { agent, expected: inst.goals[agent], got: last });
        }
        for (t, &v) in path.iter().enumerate() {
            if !inst.world.bounds.contains(&rm.position(v)) {
                out.push(Violation::OutOfBounds { agent, t, vertex: v });
            }
        }
        if path.len() == 1 {
            let p = rm.position(first);
            if inst.world.obstacles.rects.iter().any(|o| point_rect_distance(&p, o) < r) {
                out.push(Violation::Obstacle { agent, t: 0, from: first, to: first });
            }
        }
        for t in 1..path.len() {
            let (a, b) = (path[t - 1], path[t]);
            if !rm.successors(a).contains(&b) {
                out.push(Violation::MissingEdge { agent, t, from: a, to: b });
            }
            let seg = Segment2::new(rm.position(a), rm.position(b));
            if inst.world.obstacles.rects.iter().any(|o| segment_rect_distance(&seg, o) < r) {
                out.push(Violation::Obstacle { agent, t, from: a, to: b });
            }
        }
    }

    // inter-agent: compare the motion of every pair over every step, with
    // finished agents held at their last vertex
    let paths: Vec<&[VertexId]> = solution.iter().map(AsRef::as_ref).collect();
    let horizon = paths.iter().zip(&usable).filter(|(_, &u)| u).map(|(p, _)| p.len()).max().unwrap_or(0);
    let pos = |p: &[VertexId], t: usize| rm.position(p[t.min(p.len() - 1)]);
    for t in 0..horizon {
        for i in 0..paths.len() {
            for j in i + 1..paths.len() {
                if !usable[i] || !usable[j] {
                    continue;
                }
                let prev = t.saturating_sub(1);
                let si = Segment2::new(pos(paths[i], prev), pos(paths[i], t));
                let sj = Segment2::new(pos(paths[j], prev), pos(paths[j], t));
                let d = segment_segment_distance(&si, &sj);
                if d < 2.0 * r {
                    out.push(Violation::InterAgent { t, i, j, distance: d });
                }
            }
        }
    }
    out
}
