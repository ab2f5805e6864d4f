//! Multi-agent path finding for disc agents on geometric roadmaps, with
//! conflict-based search and a focal variant driven by pluggable heuristics.

pub mod bench;
pub mod bridge;
pub mod datagen;
pub mod envgen;
pub mod geometry;
pub mod highlevel;
pub mod instance;
pub mod lowlevel;
pub mod roadmap;
