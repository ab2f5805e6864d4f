//! Focal-list orderings ψ over search nodes.

use std::cmp::Ordering;
use std::rc::Rc;
use std::sync::Arc;

use crate::bridge::{PhiError, PhiEvaluator, PhiGraph, PhiRequest};
use crate::instance::Instance;
use crate::lowlevel::Path;

/// Lexicographic tuple compared component-wise, ascending.
#[derive(Debug, Clone)]
pub struct HeuristicKey(Vec<f64>);

impl HeuristicKey {
    /// Fails on NaN or infinite components.
    pub fn new(parts: Vec<f64>) -> Result<Self, HeuristicError> {
        if parts.iter().all(|v| v.is_finite()) {
            Ok(Self(parts))
        } else {
            Err(HeuristicError::NonFinite(parts))
        }
    }

    pub fn parts(&self) -> &[f64] {
        &self.0
    }
}

impl PartialEq for HeuristicKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HeuristicKey {}

impl PartialOrd for HeuristicKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeuristicKey {
    fn cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.0.iter().zip(&other.0) {
            match a.total_cmp(b) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        self.0.len().cmp(&other.0.len())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum HeuristicError {
    #[error("φ evaluation failed: {0}")]
    Phi(#[from] PhiError),
    #[error("heuristic produced a non-finite key {0:?}")]
    NonFinite(Vec<f64>),
    #[error("heuristic returned {got} keys for {want} nodes")]
    Arity { want: usize, got: usize },
}

/// What a heuristic may look at.
#[derive(Debug, Clone, Copy)]
pub struct NodeView<'a> {
    pub id: u64,
    pub depth: usize,
    pub cost: usize,
    pub conflicts: usize,
    pub solution: &'a [Rc<Path>],
}

pub trait FocalHeuristic {
    fn name(&self) -> String;

    /// One key per node, in order.
    fn keys(
        &mut self,
        inst: &Instance,
        nodes: &[NodeView<'_>],
    ) -> Result<Vec<HeuristicKey>, HeuristicError>;
}

pub fn psi_cost(node: &NodeView<'_>) -> HeuristicKey {
    HeuristicKey(vec![node.cost as f64])
}

pub fn psi_conflict_count(node: &NodeView<'_>) -> HeuristicKey {
    HeuristicKey(vec![node.conflicts as f64])
}

/// ⟨−d, φ⟩: deeper nodes first, then lower φ.
pub fn psi_depth_phi(node: &NodeView<'_>, phi: f64) -> Result<HeuristicKey, HeuristicError> {
    HeuristicKey::new(vec![-(node.depth as f64), phi])
}

/// ψ = solution cost. With w = 1 focal search reduces to best-first on cost.
#[derive(Debug, Clone, Copy, Default)]
pub struct CostPsi;

impl FocalHeuristic for CostPsi {
    fn name(&self) -> String {
        "cost".into()
    }

    fn keys(&mut self, _: &Instance, nodes: &[NodeView<'_>]) -> Result<Vec<HeuristicKey>, HeuristicError> {
        Ok(nodes.iter().map(psi_cost).collect())
    }
}

/// ψ = number of conflicting (t, i, j) triples.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConflictCountPsi;

impl FocalHeuristic for ConflictCountPsi {
    fn name(&self) -> String {
        "conflicts".into()
    }

    fn keys(&mut self, _: &Instance, nodes: &[NodeView<'_>]) -> Result<Vec<HeuristicKey>, HeuristicError> {
        Ok(nodes.iter().map(psi_conflict_count).collect())
    }
}

/// ψ = ⟨−d, φ(G, σ)⟩ with φ from an evaluator. Evaluator failures abort the
/// search; there is no fallback.
pub struct DepthPhiPsi<E> {
    evaluator: E,
    graph_id: Option<String>,
    // graph of the instance currently being solved
    graph: Option<(usize, Arc<PhiGraph>)>,
}

impl<E: PhiEvaluator> DepthPhiPsi<E> {
    pub fn new(evaluator: E) -> Self {
        Self {
            evaluator,
            graph_id: None,
            graph: None,
        }
    }

    /// Tag requests with an instance id.
    pub fn with_graph_id(mut self, id: impl Into<String>) -> Self {
        self.graph_id = Some(id.into());
        self
    }

    pub fn into_inner(self) -> E {
        self.evaluator
    }

    fn graph_for(&mut self, inst: &Instance) -> Arc<PhiGraph> {
        let key = inst as *const Instance as usize;
        match &self.graph {
            Some((k, g)) if *k == key => Arc::clone(g),
            _ => {
                let g = Arc::new(PhiGraph::from_roadmap(&inst.roadmap));
                self.graph = Some((key, Arc::clone(&g)));
                g
            }
        }
    }
}

impl<E: PhiEvaluator> FocalHeuristic for DepthPhiPsi<E> {
    fn name(&self) -> String {
        "depth-phi".into()
    }

    fn keys(&mut self, inst: &Instance, nodes: &[NodeView<'_>]) -> Result<Vec<HeuristicKey>, HeuristicError> {
        let graph = self.graph_for(inst);
        let reqs: Vec<PhiRequest> = nodes
            .iter()
            .map(|n| PhiRequest {
                graph_id: self.graph_id.clone(),
                graph: Arc::clone(&graph),
                paths: n.solution.iter().map(|p| p.vertices().to_vec()).collect(),
            })
            .collect();
        let values = self.evaluator.eval_phi_batch(&reqs)?;
        if values.len() != nodes.len() {
            return Err(HeuristicError::Arity {
                want: nodes.len(),
                got: values.len(),
            });
        }
        nodes
            .iter()
            .zip(values)
            .map(|(n, phi)| psi_depth_phi(n, phi))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bridge::FnPhi;

    fn view(depth: usize, conflicts: usize, sol: &[Rc<Path>]) -> NodeView<'_> {
        NodeView {
            id: 0,
            depth,
            cost: 4,
            conflicts,
            solution: sol,
        }
    }

    #[test]
    fn conflict_free_is_zero() {
        let sol = [Rc::new(Path::new(vec![0]))];
        assert_eq!(psi_conflict_count(&view(0, 0, &sol)).parts(), &[0.0]);
    }

    #[test]
    fn depth_dominates_phi() {
        let sol = [Rc::new(Path::new(vec![0]))];
        let shallow = psi_depth_phi(&view(3, 0, &sol), -100.0).unwrap();
        let deep = psi_depth_phi(&view(5, 0, &sol), 100.0).unwrap();
        assert!(deep < shallow);
        let a = psi_depth_phi(&view(5, 0, &sol), 0.1).unwrap();
        let b = psi_depth_phi(&view(5, 0, &sol), 0.2).unwrap();
        assert!(a < b);
    }

    #[test]
    fn non_finite_rejected() {
        assert!(HeuristicKey::new(vec![0.0, f64::NAN]).is_err());
        assert!(HeuristicKey::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn evaluator_errors_propagate() {
        let inst = crate::instance::tests::line_instance();
        let sol = [Rc::new(Path::new(vec![0, 1, 2]))];
        let mut psi = DepthPhiPsi::new(FnPhi(|_: &PhiRequest| {
            Err(PhiError::Transport("down".into()))
        }));
        assert!(matches!(
            psi.keys(&inst, &[view(1, 0, &sol)]),
            Err(HeuristicError::Phi(PhiError::Transport(_)))
        ));
    }

    #[test]
    fn requests_carry_graph_and_paths() {
        let inst = crate::instance::tests::line_instance();
        let sol = [Rc::new(Path::new(vec![0, 1, 2]))];
        let mut psi = DepthPhiPsi::new(FnPhi(|r: &PhiRequest| {
            assert_eq!(r.graph.v.len(), 4);
            assert_eq!(r.paths, vec![vec![0, 1, 2]]);
            Ok(0.5)
        }))
        .with_graph_id("line");
        let keys = psi.keys(&inst, &[view(2, 0, &sol), view(1, 0, &sol)]).unwrap();
        assert_eq!(keys[0].parts(), &[-2.0, 0.5]);
        assert!(keys[0] < keys[1]);
    }
}
