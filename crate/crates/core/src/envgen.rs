//! Maze and Box worlds, random geometric roadmaps, and endpoint assignment.
//!
//! Every generator is a pure function of its parameters and seed.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{
    edge_free, swept_discs_disjoint, vertex_free, AgentRadius, ObstacleSet, Point2, Rect,
    Segment2,
};
use crate::instance::{Instance, World, WorldKind};
use crate::roadmap::{Roadmap, VertexId};

#[derive(Debug, Clone, PartialEq)]
pub enum WorldParams {
    Maze {
        /// Cells per side.
        cells: usize,
        wall_thickness: f64,
        /// Probability of removing each wall left standing by the spanning tree.
        removal_prob: f64,
    },
    Box {
        count: usize,
        size_min: f64,
        size_max: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldSpec {
    pub params: WorldParams,
    pub bounds: Rect,
    pub seed: u64,
}

impl WorldSpec {
    pub fn maze(cells: usize, seed: u64) -> Self {
        Self {
            params: WorldParams::Maze {
                cells,
                wall_thickness: 0.02,
                removal_prob: 0.15,
            },
            bounds: Rect::new(0.0, 0.0, 1.0, 1.0),
            seed,
        }
    }

    pub fn boxes(count: usize, seed: u64) -> Self {
        Self {
            params: WorldParams::Box {
                count,
                size_min: 0.05,
                size_max: 0.2,
            },
            bounds: Rect::new(0.0, 0.0, 1.0, 1.0),
            seed,
        }
    }

    pub fn kind(&self) -> WorldKind {
        match self.params {
            WorldParams::Maze { .. } => WorldKind::Maze,
            WorldParams::Box { .. } => WorldKind::Box,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GenError {
    #[error("invalid world parameters: {0}")]
    InvalidSpec(String),
    #[error("world has no free space")]
    EmptyFreeSpace,
    #[error("free space too small: accepted {accepted} of {wanted} vertices after {attempts} attempts")]
    SamplingExhausted {
        accepted: usize,
        wanted: usize,
        attempts: usize,
    },
    #[error("roadmap has {vertices} vertices, need at least {needed}")]
    RoadmapTooSmall { vertices: usize, needed: usize },
    #[error("no valid endpoint assignment after {0} attempts")]
    NoAssignment(usize),
}

const FREE_PROBE: usize = 64;
const SAMPLES_PER_VERTEX: usize = 1000;
const ASSIGN_ATTEMPTS: usize = 1000;

pub fn gen_world(spec: &WorldSpec) -> Result<ObstacleSet, GenError> {
    let b = spec.bounds;
    if !b.is_valid() || b.width() <= 0.0 || b.height() <= 0.0 {
        return Err(GenError::InvalidSpec("bounds must be non-empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let obs = match spec.params {
        WorldParams::Maze {
            cells,
            wall_thickness,
            removal_prob,
        } => {
            if cells == 0 {
                return Err(GenError::InvalidSpec("maze needs at least one cell".into()));
            }
            if !(0.0..=1.0).contains(&removal_prob) {
                return Err(GenError::InvalidSpec("removal probability outside [0,1]".into()));
            }
            let cell = (b.width() / cells as f64).min(b.height() / cells as f64);
            if !(wall_thickness >= 0.0) || wall_thickness >= cell {
                return Err(GenError::EmptyFreeSpace);
            }
            maze_walls(&b, cells, wall_thickness, removal_prob, &mut rng)
        }
        WorldParams::Box {
            count,
            size_min,
            size_max,
        } => {
            if !(size_min > 0.0 && size_min <= size_max && size_max.is_finite()) {
                return Err(GenError::InvalidSpec(
                    "box sizes need 0 < size_min <= size_max".into(),
                ));
            }
            (0..count)
                .map(|_| {
                    let w = rng.gen_range(size_min..=size_max);
                    let h = rng.gen_range(size_min..=size_max);
                    let cx = rng.gen_range(b.xmin..=b.xmax);
                    let cy = rng.gen_range(b.ymin..=b.ymax);
                    Rect::new(cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0)
                })
                .collect()
        }
    };
    let obs = ObstacleSet::new(obs);
    if !has_free_point(&b, &obs) {
        return Err(GenError::EmptyFreeSpace);
    }
    Ok(obs)
}

fn has_free_point(b: &Rect, obs: &ObstacleSet) -> bool {
    (0..FREE_PROBE).any(|i| {
        (0..FREE_PROBE).any(|j| {
            let p = Point2::new(
                b.xmin + (i as f64 + 0.5) / FREE_PROBE as f64 * b.width(),
                b.ymin + (j as f64 + 0.5) / FREE_PROBE as f64 * b.height(),
            );
            obs.rects.iter().all(|r| !r.contains(&p))
        })
    })
}

/// Random spanning tree over a `cells` x `cells` grid (randomised DFS), then
/// each remaining interior wall is dropped with probability `removal_prob`.
/// Walls, including the outer boundary, are rendered as thin rectangles
/// centred on cell borders.
fn maze_walls(
    b: &Rect,
    cells: usize,
    thickness: f64,
    removal_prob: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<Rect> {
    let cw = b.width() / cells as f64;
    let ch = b.height() / cells as f64;
    let idx = |x: usize, y: usize| y * cells + x;
    // east[c]: wall between (x,y) and (x+1,y); north[c]: between (x,y) and (x,y+1)
    let mut east = vec![true; cells * cells];
    let mut north = vec![true; cells * cells];
    let mut visited = vec![false; cells * cells];
    let mut stack = vec![(0usize, 0usize)];
    visited[0] = true;
    while let Some(&(x, y)) = stack.last() {
        let mut nbrs = Vec::with_capacity(4);
        if x + 1 < cells && !visited[idx(x + 1, y)] {
            nbrs.push((x + 1, y));
        }
        if x > 0 && !visited[idx(x - 1, y)] {
            nbrs.push((x - 1, y));
        }
        if y + 1 < cells && !visited[idx(x, y + 1)] {
            nbrs.push((x, y + 1));
        }
        if y > 0 && !visited[idx(x, y - 1)] {
            nbrs.push((x, y - 1));
        }
        match nbrs.choose(rng) {
            None => {
                stack.pop();
            }
            Some(&(nx, ny)) => {
                if nx > x {
                    east[idx(x, y)] = false;
                } else if nx < x {
                    east[idx(nx, y)] = false;
                } else if ny > y {
                    north[idx(x, y)] = false;
                } else {
                    north[idx(x, ny)] = false;
                }
                visited[idx(nx, ny)] = true;
                stack.push((nx, ny));
            }
        }
    }

    let half = thickness / 2.0;
    let mut rects = Vec::new();
    for y in 0..cells {
        for x in 0..cells {
            if x + 1 < cells && east[idx(x, y)] && !rng.gen_bool(removal_prob) {
                let wx = b.xmin + (x + 1) as f64 * cw;
                rects.push(Rect::new(
                    wx - half,
                    b.ymin + y as f64 * ch - half,
                    wx + half,
                    b.ymin + (y + 1) as f64 * ch + half,
                ));
            }
            if y + 1 < cells && north[idx(x, y)] && !rng.gen_bool(removal_prob) {
                let wy = b.ymin + (y + 1) as f64 * ch;
                rects.push(Rect::new(
                    b.xmin + x as f64 * cw - half,
                    wy - half,
                    b.xmin + (x + 1) as f64 * cw + half,
                    wy + half,
                ));
            }
        }
    }
    rects.push(Rect::new(b.xmin - half, b.ymin - half, b.xmax + half, b.ymin + half));
    rects.push(Rect::new(b.xmin - half, b.ymax - half, b.xmax + half, b.ymax + half));
    rects.push(Rect::new(b.xmin - half, b.ymin - half, b.xmin + half, b.ymax + half));
    rects.push(Rect::new(b.xmax - half, b.ymin - half, b.xmax + half, b.ymax + half));
    rects
}

/// Rejection-samples `n` collision-free vertices in `bounds` and connects each
/// vertex to its `k` nearest neighbours (ties by id) where the edge is
/// collision-free. A wait loop is added at every vertex.
pub fn sample_roadmap(
    bounds: &Rect,
    obs: &ObstacleSet,
    n: usize,
    k: usize,
    r: AgentRadius,
    seed: u64,
) -> Result<Roadmap, GenError> {
    if n < 2 || k < 1 {
        return Err(GenError::InvalidSpec("roadmap needs n >= 2 and k >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions = Vec::with_capacity(n);
    let budget = n * SAMPLES_PER_VERTEX;
    let mut attempts = 0;
    while positions.len() < n {
        if attempts == budget {
            return Err(GenError::SamplingExhausted {
                accepted: positions.len(),
                wanted: n,
                attempts,
            });
        }
        attempts += 1;
        let p = Point2::new(
            rng.gen_range(bounds.xmin..=bounds.xmax),
            rng.gen_range(bounds.ymin..=bounds.ymax),
        );
        if vertex_free(&p, obs, r) {
            positions.push(p);
        }
    }

    let mut moves = Vec::new();
    for i in 0..n {
        let mut others: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (positions[i].distance(&positions[j]), j))
            .collect();
        others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, j) in others.iter().take(k) {
            if edge_free(&Segment2::new(positions[i], positions[j]), obs, r) {
                moves.push((i, j));
            }
        }
    }
    Roadmap::with_waits(positions, moves)
        .map_err(|e| GenError::InvalidSpec(format!("internal roadmap error: {e}")))
}

/// Picks `m` start/goal pairs with distinct, disc-disjoint starts and goals
/// and each goal reachable from its start.
pub fn assign_endpoints(
    roadmap: &Roadmap,
    m: usize,
    r: AgentRadius,
    seed: u64,
) -> Result<(Vec<VertexId>, Vec<VertexId>), GenError> {
    let n = roadmap.num_vertices();
    // starts and goals are separate sets, so M agents fit on M vertices
    // (each goal must differ from its own start, hence at least 2)
    let needed = m.max(2);
    if n < needed {
        return Err(GenError::RoadmapTooSmall { vertices: n, needed });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let separated = |chosen: &[VertexId], v: VertexId| {
        let pv = Segment2::point(roadmap.position(v));
        chosen.iter().all(|&u| {
            u != v && swept_discs_disjoint(&Segment2::point(roadmap.position(u)), &pv, r)
        })
    };

    let mut attempts = 0;
    let mut starts: Vec<VertexId> = Vec::with_capacity(m);
    let mut goals: Vec<VertexId> = Vec::with_capacity(m);
    let mut order: Vec<VertexId> = (0..n).collect();
    let mut stuck = 0;
    while starts.len() < m {
        if attempts == ASSIGN_ATTEMPTS {
            return Err(GenError::NoAssignment(attempts));
        }
        attempts += 1;
        let s = rng.gen_range(0..n);
        let goal = if separated(&starts, s) {
            let reach = roadmap.reachable_from(s);
            order.shuffle(&mut rng);
            order
                .iter()
                .copied()
                .find(|&g| g != s && reach[g] && separated(&goals, g))
        } else {
            None
        };
        if let Some(g) = goal {
            starts.push(s);
            goals.push(g);
            stuck = 0;
        } else {
            stuck += 1;
            if stuck == 4 * n {
                // earlier picks may leave no room; start over
                starts.clear();
                goals.clear();
                stuck = 0;
            }
        }
    }
    Ok((starts, goals))
}

/// Parameters for one generated instance.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceSpec {
    pub world: WorldSpec,
    pub vertices: usize,
    pub k: usize,
    pub agents: usize,
    pub radius: AgentRadius,
}

/// World, roadmap and endpoints from a single seed (sub-seeds are derived).
pub fn generate_instance(spec: &InstanceSpec) -> Result<Instance, GenError> {
    let obstacles = gen_world(&spec.world)?;
    let seed = spec.world.seed;
    let roadmap = sample_roadmap(
        &spec.world.bounds,
        &obstacles,
        spec.vertices,
        spec.k,
        spec.radius,
        seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(1),
    )?;
    let (starts, goals) = assign_endpoints(
        &roadmap,
        spec.agents,
        spec.radius,
        seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(2),
    )?;
    Instance::new(
        roadmap,
        starts,
        goals,
        spec.radius,
        World {
            kind: spec.world.kind(),
            bounds: spec.world.bounds,
            obstacles,
        },
    )
    .map_err(|e| GenError::InvalidSpec(format!("internal instance error: {e}")))
}
