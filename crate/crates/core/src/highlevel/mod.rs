//! Constraint-tree search and solution checking.

pub mod conflict;
pub mod psi;
pub mod search;
pub mod treelog;
pub mod validate;

pub use conflict::{count_conflicts, detect_first_conflict, flowtime, split_conflict, Conflict};
pub use psi::{
    psi_conflict_count, psi_cost, psi_depth_phi, ConflictCountPsi, CostPsi, DepthPhiPsi, FocalHeuristic,
    HeuristicError, HeuristicKey, NodeView,
};
pub use search::{cbs_solve, focal_solve, SolveError, SolveOptions, SolveStats, Solved};
pub use treelog::{read_tree_log, write_tree_log, TreeLogError, TreeRecord};
pub use validate::{validate_solution, Violation};
