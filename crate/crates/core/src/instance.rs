//! Problem instances and their versioned text format.
//!
//! ```text
//! geo-mapf v1
//! world box
//! bounds <xmin> <ymin> <xmax> <ymax>
//! O <k>
//! <xmin> <ymin> <xmax> <ymax>        (k lines)
//! V <n>
//! <id> <x> <y>                       (n lines, ids 0..n-1 in order)
//! E <m>
//! <src> <dst>                        (m lines, wait loops included)
//! A <M>
//! <start> <goal>                     (M lines)
//! R <radius>
//! ```
//!
//! Floats are written with 17 significant digits so a write/read cycle is
//! bit-exact.

use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use crate::geometry::{
    edge_free, swept_discs_disjoint, vertex_free, AgentRadius, ObstacleSet, Rect, Segment2,
};
use crate::roadmap::{Roadmap, RoadmapError, VertexId};

pub const INSTANCE_HEADER: &str = "geo-mapf v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WorldKind {
    Maze,
    Box,
}

impl fmt::Display for WorldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WorldKind::Maze => "maze",
            WorldKind::Box => "box",
        })
    }
}

impl FromStr for WorldKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "maze" => Ok(WorldKind::Maze),
            "box" => Ok(WorldKind::Box),
            other => Err(format!("unknown world kind `{other}`")),
        }
    }
}

/// The obstacle layout an instance was generated in.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub kind: WorldKind,
    pub bounds: Rect,
    pub obstacles: ObstacleSet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub roadmap: Roadmap,
    pub starts: Vec<VertexId>,
    pub goals: Vec<VertexId>,
    pub radius: AgentRadius,
    pub world: World,
}

#[derive(Debug, thiserror::Error)]
pub enum InstanceError {
    #[error("line {line}: bad `{field}`: {message}")]
    Parse {
        line: usize,
        field: String,
        message: String,
    },
    #[error("invalid roadmap: {0}")]
    Roadmap(#[from] RoadmapError),
    #[error("invalid instance: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Instance {
    /// Validates endpoint structure: matching lengths, valid ids, distinct
    /// and disc-disjoint starts and goals, and goal reachability.
    pub fn new(
        roadmap: Roadmap,
        starts: Vec<VertexId>,
        goals: Vec<VertexId>,
        radius: AgentRadius,
        world: World,
    ) -> Result<Self, InstanceError> {
        let inst = Self {
            roadmap,
            starts,
            goals,
            radius,
            world,
        };
        inst.check_endpoints()?;
        Ok(inst)
    }

    pub fn num_agents(&self) -> usize {
        self.starts.len()
    }

    fn check_endpoints(&self) -> Result<(), InstanceError> {
        let n = self.roadmap.num_vertices();
        if self.starts.len() != self.goals.len() {
            return Err(InstanceError::Invalid(format!(
                "{} starts but {} goals",
                self.starts.len(),
                self.goals.len()
            )));
        }
        for (i, (&s, &g)) in self.starts.iter().zip(&self.goals).enumerate() {
            if s >= n || g >= n {
                return Err(InstanceError::Invalid(format!(
                    "agent {i} endpoint outside 0..{n}"
                )));
            }
        }
        for (name, list) in [("starts", &self.starts), ("goals", &self.goals)] {
            for i in 0..list.len() {
                for j in i + 1..list.len() {
                    if list[i] == list[j] {
                        return Err(InstanceError::Invalid(format!(
                            "{name} of agents {i} and {j} coincide"
                        )));
                    }
                    let a = Segment2::point(self.roadmap.position(list[i]));
                    let b = Segment2::point(self.roadmap.position(list[j]));
                    if !swept_discs_disjoint(&a, &b, self.radius) {
                        return Err(InstanceError::Invalid(format!(
                            "{name} of agents {i} and {j} overlap"
                        )));
                    }
                }
            }
        }
        for (i, (&s, &g)) in self.starts.iter().zip(&self.goals).enumerate() {
            if !self.roadmap.reachable_from(s)[g] {
                return Err(InstanceError::Invalid(format!(
                    "agent {i}: goal {g} unreachable from start {s}"
                )));
            }
        }
        Ok(())
    }

    /// Geometric audit of the roadmap against the world obstacles.
    /// Returns a description of every offending vertex and edge.
    pub fn roadmap_violations(&self) -> Vec<String> {
        let obs = &self.world.obstacles;
        let mut out = Vec::new();
        for (v, p) in self.roadmap.positions().iter().enumerate() {
            if !vertex_free(p, obs, self.radius) {
                out.push(format!("vertex {v} collides"));
            }
        }
        for &(a, b) in self.roadmap.edges() {
            if a != b && !edge_free(&self.roadmap.segment(a, b), obs, self.radius) {
                out.push(format!("edge {a}->{b} collides"));
            }
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let w = &self.world;
        // writes into a String cannot fail
        let _ = writeln!(s, "{INSTANCE_HEADER}");
        let _ = writeln!(s, "world {}", w.kind);
        let b = w.bounds;
        let _ = writeln!(
            s,
            "bounds {} {} {} {}",
            fp(b.xmin),
            fp(b.ymin),
            fp(b.xmax),
            fp(b.ymax)
        );
        let _ = writeln!(s, "O {}", w.obstacles.len());
        for r in &w.obstacles.rects {
            let _ = writeln!(
                s,
                "{} {} {} {}",
                fp(r.xmin),
                fp(r.ymin),
                fp(r.xmax),
                fp(r.ymax)
            );
        }
        let rm = &self.roadmap;
        let _ = writeln!(s, "V {}", rm.num_vertices());
        for (i, p) in rm.positions().iter().enumerate() {
            let _ = writeln!(s, "{i} {} {}", fp(p.x), fp(p.y));
        }
        let _ = writeln!(s, "E {}", rm.num_edges());
        for (a, b) in rm.edges() {
            let _ = writeln!(s, "{a} {b}");
        }
        let _ = writeln!(s, "A {}", self.num_agents());
        for (a, b) in self.starts.iter().zip(&self.goals) {
            let _ = writeln!(s, "{a} {b}");
        }
        let _ = writeln!(s, "R {}", fp(self.radius.get()));
        s
    }

    pub fn parse(text: &str) -> Result<Self, InstanceError> {
        Parser::new(text).instance()
    }
}

/// 17 significant digits.
fn fp(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_instance(inst: &Instance, path: impl AsRef<Path>) -> Result<(), InstanceError> {
    std::fs::write(path, inst.to_text())?;
    Ok(())
}

pub fn read_instance(path: impl AsRef<Path>) -> Result<Instance, InstanceError> {
    Instance::parse(&std::fs::read_to_string(path)?)
}

struct Parser<'a> {
    lines: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    last_line: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            lines: text.lines().enumerate().peekable(),
            last_line: 0,
        }
    }

    fn err(&self, field: &str, message: impl Into<String>) -> InstanceError {
        InstanceError::Parse {
            line: self.last_line,
            field: field.to_string(),
            message: message.into(),
        }
    }

    fn next_line(&mut self, field: &str) -> Result<Vec<&'a str>, InstanceError> {
        match self.lines.next() {
            Some((i, line)) => {
                self.last_line = i + 1;
                Ok(line.split_whitespace().collect())
            }
            None => {
                self.last_line += 1;
                Err(self.err(field, "unexpected end of file"))
            }
        }
    }

    fn number<T: FromStr>(&self, field: &str, tok: &str) -> Result<T, InstanceError> {
        tok.parse()
            .map_err(|_| self.err(field, format!("cannot parse `{tok}`")))
    }

    fn floats<const N: usize>(&self, field: &str, toks: &[&str]) -> Result<[f64; N], InstanceError> {
        if toks.len() != N {
            return Err(self.err(field, format!("expected {N} values, got {}", toks.len())));
        }
        let mut out = [0.0; N];
        for (o, t) in out.iter_mut().zip(toks) {
            *o = self.number(field, t)?;
        }
        Ok(out)
    }

    fn tagged(&mut self, field: &str, tag: &str) -> Result<Vec<&'a str>, InstanceError> {
        let toks = self.next_line(field)?;
        if toks.first() != Some(&tag) {
            return Err(self.err(field, format!("expected `{tag}`")));
        }
        Ok(toks[1..].to_vec())
    }

    fn count(&mut self, field: &str, tag: &str) -> Result<usize, InstanceError> {
        let toks = self.tagged(field, tag)?;
        match toks.as_slice() {
            [n] => self.number(field, n),
            _ => Err(self.err(field, "expected a single count")),
        }
    }

    fn instance(mut self) -> Result<Instance, InstanceError> {
        let header = self.next_line("header")?;
        if header.join(" ") != INSTANCE_HEADER {
            return Err(self.err("header", format!("expected `{INSTANCE_HEADER}`")));
        }

        let kind_toks = self.tagged("world", "world")?;
        let kind = match kind_toks.as_slice() {
            [k] => k.parse::<WorldKind>().map_err(|m| self.err("world", m))?,
            _ => return Err(self.err("world", "expected a world kind")),
        };
        let b = self.tagged("bounds", "bounds")?;
        let [xmin, ymin, xmax, ymax] = self.floats::<4>("bounds", &b)?;
        let bounds = Rect::new(xmin, ymin, xmax, ymax);
        if !bounds.is_valid() || bounds.width() <= 0.0 || bounds.height() <= 0.0 {
            return Err(self.err("bounds", "bounds must be a non-empty rectangle"));
        }

        let k = self.count("obstacles", "O")?;
        let mut rects = Vec::with_capacity(k);
        for _ in 0..k {
            let toks = self.next_line("obstacle")?;
            let [a, b, c, d] = self.floats::<4>("obstacle", &toks)?;
            let r = Rect::new(a, b, c, d);
            if !r.is_valid() {
                return Err(self.err("obstacle", "min exceeds max"));
            }
            rects.push(r);
        }

        let n = self.count("vertices", "V")?;
        let mut positions = Vec::with_capacity(n);
        for i in 0..n {
            let toks = self.next_line("vertex")?;
            if toks.len() != 3 {
                return Err(self.err("vertex", "expected `id x y`"));
            }
            let id: usize = self.number("vertex", toks[0])?;
            if id != i {
                return Err(self.err("vertex", format!("expected id {i}, got {id}")));
            }
            let [x, y] = self.floats::<2>("vertex", &toks[1..])?;
            positions.push(crate::geometry::Point2::new(x, y));
        }

        let m = self.count("edges", "E")?;
        let mut edges = Vec::with_capacity(m);
        for _ in 0..m {
            let toks = self.next_line("edge")?;
            if toks.len() != 2 {
                return Err(self.err("edge", "expected `src dst`"));
            }
            edges.push((self.number("edge", toks[0])?, self.number("edge", toks[1])?));
        }

        let agents = self.count("agents", "A")?;
        let mut starts = Vec::with_capacity(agents);
        let mut goals = Vec::with_capacity(agents);
        for _ in 0..agents {
            let toks = self.next_line("agent")?;
            if toks.len() != 2 {
                return Err(self.err("agent", "expected `start goal`"));
            }
            starts.push(self.number("agent", toks[0])?);
            goals.push(self.number("agent", toks[1])?);
        }

        let rt = self.tagged("radius", "R")?;
        let [r] = self.floats::<1>("radius", &rt)?;
        let radius = AgentRadius::new(r).ok_or_else(|| self.err("radius", "must be > 0"))?;

        while let Some((i, line)) = self.lines.next() {
            if !line.trim().is_empty() {
                self.last_line = i + 1;
                return Err(self.err("trailer", "unexpected content after radius"));
            }
        }

        let roadmap = Roadmap::new(positions, edges)?;
        Instance::new(
            roadmap,
            starts,
            goals,
            radius,
            World {
                kind,
                bounds,
                obstacles: ObstacleSet::new(rects),
            },
        )
    }
}
