//! Exact 2D collision primitives for disc agents moving along straight
//! roadmap edges among axis-aligned rectangular obstacles.
//!
//! A degenerate segment (`a == b`) is a wait edge and is accepted everywhere.
//! All comparisons are strict `>=` in double precision with no inflation.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn sub(&self, other: &Point2) -> (f64, f64) {
        (self.x - other.x, self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment2 {
    pub a: Point2,
    pub b: Point2,
}

impl Segment2 {
    pub const fn new(a: Point2, b: Point2) -> Self {
        Self { a, b }
    }

    /// Stationary "segment" at a single point.
    pub const fn point(p: Point2) -> Self {
        Self { a: p, b: p }
    }

    pub fn is_degenerate(&self) -> bool {
        self.a == self.b
    }
}

/// Closed axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
}

impl Rect {
    pub const fn new(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Self {
        Self {
            xmin,
            ymin,
            xmax,
            ymax,
        }
    }

    pub fn is_valid(&self) -> bool {
        [self.xmin, self.ymin, self.xmax, self.ymax]
            .iter()
            .all(|v| v.is_finite())
            && self.xmin <= self.xmax
            && self.ymin <= self.ymax
    }

    pub fn contains(&self, p: &Point2) -> bool {
        p.x >= self.xmin && p.x <= self.xmax && p.y >= self.ymin && p.y <= self.ymax
    }

    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }

    fn corners(&self) -> [Point2; 4] {
        [
            Point2::new(self.xmin, self.ymin),
            Point2::new(self.xmax, self.ymin),
            Point2::new(self.xmax, self.ymax),
            Point2::new(self.xmin, self.ymax),
        ]
    }

    fn sides(&self) -> [Segment2; 4] {
        let c = self.corners();
        [
            Segment2::new(c[0], c[1]),
            Segment2::new(c[1], c[2]),
            Segment2::new(c[2], c[3]),
            Segment2::new(c[3], c[0]),
        ]
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ObstacleSet {
    pub rects: Vec<Rect>,
}

impl ObstacleSet {
    pub fn new(rects: Vec<Rect>) -> Self {
        Self { rects }
    }

    pub fn is_empty(&self) -> bool {
        self.rects.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rects.len()
    }
}

/// Radius of the closed disc occupied by every agent.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct AgentRadius(f64);

impl AgentRadius {
    /// Returns `None` unless `r` is finite and strictly positive.
    pub fn new(r: f64) -> Option<Self> {
        (r.is_finite() && r > 0.0).then_some(Self(r))
    }

    pub fn get(&self) -> f64 {
        self.0
    }
}

fn cross(o: &Point2, a: &Point2, b: &Point2) -> f64 {
    let (ax, ay) = a.sub(o);
    let (bx, by) = b.sub(o);
    ax * by - ay * bx
}

fn orientation(o: &Point2, a: &Point2, b: &Point2) -> i8 {
    let c = cross(o, a, b);
    if c > 0.0 {
        1
    } else if c < 0.0 {
        -1
    } else {
        0
    }
}

// assumes p is collinear with s
fn within_bbox(s: &Segment2, p: &Point2) -> bool {
    p.x >= s.a.x.min(s.b.x)
        && p.x <= s.a.x.max(s.b.x)
        && p.y >= s.a.y.min(s.b.y)
        && p.y <= s.a.y.max(s.b.y)
}

/// Closed-segment intersection test, including touching and collinear
/// overlap. Degenerate segments behave as points.
pub fn segments_intersect(s1: &Segment2, s2: &Segment2) -> bool {
    let o1 = orientation(&s1.a, &s1.b, &s2.a);
    let o2 = orientation(&s1.a, &s1.b, &s2.b);
    let o3 = orientation(&s2.a, &s2.b, &s1.a);
    let o4 = orientation(&s2.a, &s2.b, &s1.b);

    if o1 * o2 < 0 && o3 * o4 < 0 {
        return true;
    }
    (o1 == 0 && within_bbox(s1, &s2.a))
        || (o2 == 0 && within_bbox(s1, &s2.b))
        || (o3 == 0 && within_bbox(s2, &s1.a))
        || (o4 == 0 && within_bbox(s2, &s1.b))
}

pub fn point_segment_distance(p: &Point2, s: &Segment2) -> f64 {
    let (dx, dy) = s.b.sub(&s.a);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return p.distance(&s.a);
    }
    let (px, py) = p.sub(&s.a);
    let t = ((px * dx + py * dy) / len2).clamp(0.0, 1.0);
    let q = Point2::new(s.a.x + t * dx, s.a.y + t * dy);
    p.distance(&q)
}

/// Euclidean distance from `p` to the closed rectangle; zero inside.
pub fn point_rect_distance(p: &Point2, rect: &Rect) -> f64 {
    let dx = (rect.xmin - p.x).max(0.0).max(p.x - rect.xmax);
    let dy = (rect.ymin - p.y).max(0.0).max(p.y - rect.ymax);
    dx.hypot(dy)
}

/// Minimum distance between any pair of points on the two closed segments.
pub fn segment_segment_distance(s1: &Segment2, s2: &Segment2) -> f64 {
    if segments_intersect(s1, s2) {
        return 0.0;
    }
    // Disjoint segments attain their minimum at an endpoint of one of them.
    point_segment_distance(&s1.a, s2)
        .min(point_segment_distance(&s1.b, s2))
        .min(point_segment_distance(&s2.a, s1))
        .min(point_segment_distance(&s2.b, s1))
}

pub fn segment_rect_distance(s: &Segment2, rect: &Rect) -> f64 {
    if rect.contains(&s.a) || rect.contains(&s.b) {
        return 0.0;
    }
    rect.sides()
        .iter()
        .map(|side| segment_segment_distance(s, side))
        .fold(f64::INFINITY, f64::min)
}

/// True iff the disc of radius `r` centred at `p` stays clear of every obstacle.
pub fn vertex_free(p: &Point2, obs: &ObstacleSet, r: AgentRadius) -> bool {
    obs.rects
        .iter()
        .all(|rect| point_rect_distance(p, rect) >= r.get())
}

/// True iff the disc swept along `seg` stays clear of every obstacle.
pub fn edge_free(seg: &Segment2, obs: &ObstacleSet, r: AgentRadius) -> bool {
    obs.rects
        .iter()
        .all(|rect| segment_rect_distance(seg, rect) >= r.get())
}

/// Exact test that no point of `e1` and no point of `e2` bring two discs of
/// radius `r` into contact.
pub fn swept_discs_disjoint(e1: &Segment2, e2: &Segment2, r: AgentRadius) -> bool {
    segment_segment_distance(e1, e2) >= 2.0 * r.get()
}
