use std::collections::{BTreeSet, VecDeque};

use crate::geometry::{Point2, Segment2};

pub type VertexId = usize;

/// Directed geometric graph. Every vertex carries exactly one self-loop,
/// which models the wait action.
#[derive(Debug, Clone, PartialEq)]
pub struct Roadmap {
    positions: Vec<Point2>,
    edges: Vec<(VertexId, VertexId)>,
    out: Vec<Vec<VertexId>>,
    inc: Vec<Vec<VertexId>>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RoadmapError {
    #[error("vertex {0} has a non-finite position")]
    NonFinite(VertexId),
    #[error("edge {src}->{dst} references a vertex outside 0..{n}")]
    DanglingEdge {
        src: VertexId,
        dst: VertexId,
        n: usize,
    },
    #[error("duplicate edge {0}->{1}")]
    DuplicateEdge(VertexId, VertexId),
    #[error("vertex {0} has no wait self-loop")]
    MissingWait(VertexId),
}

impl Roadmap {
    /// Builds a roadmap from a full edge list, which must already contain
    /// one self-loop per vertex.
    pub fn new(
        positions: Vec<Point2>,
        edges: Vec<(VertexId, VertexId)>,
    ) -> Result<Self, RoadmapError> {
        let n = positions.len();
        if let Some(v) = positions.iter().position(|p| !p.is_finite()) {
            return Err(RoadmapError::NonFinite(v));
        }
        let mut seen = BTreeSet::new();
        for &(src, dst) in &edges {
            if src >= n || dst >= n {
                return Err(RoadmapError::DanglingEdge { src, dst, n });
            }
            if !seen.insert((src, dst)) {
                return Err(RoadmapError::DuplicateEdge(src, dst));
            }
        }
        if let Some(v) = (0..n).find(|&v| !seen.contains(&(v, v))) {
            return Err(RoadmapError::MissingWait(v));
        }

        let mut out = vec![Vec::new(); n];
        let mut inc = vec![Vec::new(); n];
        for &(src, dst) in &edges {
            out[src].push(dst);
            inc[dst].push(src);
        }
        for list in out.iter_mut().chain(inc.iter_mut()) {
            list.sort_unstable();
        }
        Ok(Self {
            positions,
            edges,
            out,
            inc,
        })
    }

    /// Builds a roadmap from movement edges only; wait loops are appended.
    /// Self-loops already present in `moves` are ignored.
    pub fn with_waits(
        positions: Vec<Point2>,
        moves: impl IntoIterator<Item = (VertexId, VertexId)>,
    ) -> Result<Self, RoadmapError> {
        let mut edges: Vec<_> = moves.into_iter().filter(|(a, b)| a != b).collect();
        edges.extend((0..positions.len()).map(|v| (v, v)));
        Self::new(positions, edges)
    }

    pub fn num_vertices(&self) -> usize {
        self.positions.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn position(&self, v: VertexId) -> Point2 {
        self.positions[v]
    }

    pub fn positions(&self) -> &[Point2] {
        &self.positions
    }

    /// All edges in insertion order, wait loops included.
    pub fn edges(&self) -> &[(VertexId, VertexId)] {
        &self.edges
    }

    /// Successors of `v` in ascending id order (including `v` itself).
    pub fn successors(&self, v: VertexId) -> &[VertexId] {
        &self.out[v]
    }

    pub fn predecessors(&self, v: VertexId) -> &[VertexId] {
        &self.inc[v]
    }

    pub fn has_edge(&self, src: VertexId, dst: VertexId) -> bool {
        src < self.out.len() && self.out[src].binary_search(&dst).is_ok()
    }

    pub fn segment(&self, src: VertexId, dst: VertexId) -> Segment2 {
        Segment2::new(self.positions[src], self.positions[dst])
    }

    /// Vertices reachable from `s` by forward edges.
    pub fn reachable_from(&self, s: VertexId) -> Vec<bool> {
        let mut seen = vec![false; self.num_vertices()];
        let mut queue = VecDeque::from([s]);
        seen[s] = true;
        while let Some(v) = queue.pop_front() {
            for &w in &self.out[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen
    }
}
