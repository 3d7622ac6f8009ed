//! Bounded convex domains in one and two dimensions.
//!
//! Every primitive answers three geometric queries exactly: strict
//! membership, the parameter at which a ray from an interior point leaves
//! the domain, and the Euclidean distance to the boundary. The grid builder
//! relies on the first two; the distance is concave on every convex domain,
//! which the tests check on random point pairs.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

/// A point of the plane. One-dimensional domains use the first coordinate
/// and keep the second at zero.
pub type Point = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConvexDomain {
    Interval { a: f64, b: f64 },
    Disc { center: Point, radius: f64 },
    Rect { lo: Point, hi: Point },
    /// Strictly convex polygon, vertices stored counterclockwise.
    Polygon { vertices: Vec<Point> },
}

impl ConvexDomain {
    pub fn interval(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || a >= b {
            return Err(Error::InvalidDomain(format!("interval needs a < b, got ({a}, {b})")));
        }
        Ok(ConvexDomain::Interval { a, b })
    }

    pub fn disc(center: Point, radius: f64) -> Result<Self> {
        if !(center[0].is_finite() && center[1].is_finite()) || !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidDomain(format!("disc needs a positive finite radius, got {radius}")));
        }
        Ok(ConvexDomain::Disc { center, radius })
    }

    pub fn rect(lo: Point, hi: Point) -> Result<Self> {
        let finite = lo.iter().chain(hi.iter()).all(|v| v.is_finite());
        if !finite || lo[0] >= hi[0] || lo[1] >= hi[1] {
            return Err(Error::InvalidDomain(format!(
                "box needs lo < hi componentwise, got lo = {lo:?}, hi = {hi:?}"
            )));
        }
        Ok(ConvexDomain::Rect { lo, hi })
    }

    /// Builds a polygon from a vertex list. Counterclockwise order is the
    /// convention; a clockwise list is accepted and reversed. Reflex or
    /// collinear vertices are rejected, naming the first offending vertex in
    /// the caller's numbering.
    pub fn polygon(vertices: Vec<Point>) -> Result<Self> {
        let m = vertices.len();
        if m < 3 {
            return Err(Error::InvalidDomain(format!("polygon needs at least 3 vertices, got {m}")));
        }
        if vertices.iter().any(|v| !(v[0].is_finite() && v[1].is_finite())) {
            return Err(Error::InvalidDomain("polygon vertices must be finite".into()));
        }
        let area2: f64 = (0..m)
            .map(|i| {
                let p = vertices[i];
                let q = vertices[(i + 1) % m];
                p[0] * q[1] - q[0] * p[1]
            })
            .sum();
        if area2 == 0.0 {
            return Err(Error::InvalidDomain("polygon has zero area".into()));
        }
        let orientation = area2.signum();
        let mut turning = 0.0;
        for i in 0..m {
            let prev = vertices[(i + m - 1) % m];
            let cur = vertices[i];
            let next = vertices[(i + 1) % m];
            let e_in = sub(cur, prev);
            let e_out = sub(next, cur);
            let cross = e_in[0] * e_out[1] - e_in[1] * e_out[0];
            if cross * orientation <= 0.0 {
                return Err(Error::NonConvexPolygon { index: i, x: cur[0], y: cur[1] });
            }
            turning += cross.atan2(dot(e_in, e_out)).abs();
        }
        // A star polygon turns consistently but winds more than once.
        if (turning - 2.0 * PI).abs() > 1e-9 {
            return Err(Error::InvalidDomain("polygon boundary winds more than once".into()));
        }
        let mut vertices = vertices;
        if orientation < 0.0 {
            vertices.reverse();
        }
        Ok(ConvexDomain::Polygon { vertices })
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexDomain::Interval { .. } => 1,
            _ => 2,
        }
    }

    /// Signed depth: distance to the boundary for interior points, negative
    /// outside (exact for discs and intervals, a lower bound on the exterior
    /// distance for boxes and polygons).
    fn depth(&self, p: Point) -> f64 {
        match self {
            ConvexDomain::Interval { a, b } => (p[0] - a).min(b - p[0]),
            ConvexDomain::Disc { center, radius } => radius - norm(sub(p, *center)),
            ConvexDomain::Rect { lo, hi } => (p[0] - lo[0]).min(hi[0] - p[0]).min(p[1] - lo[1]).min(hi[1] - p[1]),
            ConvexDomain::Polygon { vertices } => edges(vertices)
                .map(|(v, w)| {
                    let n = outward_normal(v, w);
                    (dot(n, v) - dot(n, p)) / norm(n)
                })
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Strict membership.
    pub fn contains(&self, p: Point) -> bool {
        self.depth(p) > 0.0
    }

    /// Euclidean distance from an interior point to the boundary.
    pub fn distance_to_boundary(&self, p: Point) -> Result<f64> {
        let d = self.depth(p);
        if d > 0.0 {
            Ok(d)
        } else {
            Err(Error::PointOutside { x: p[0], y: p[1] })
        }
    }

    /// Smallest `t > 0` with `p + t * dir` on the boundary, for `p` inside.
    pub fn ray_exit(&self, p: Point, dir: Point) -> f64 {
        match self {
            ConvexDomain::Interval { a, b } => {
                if dir[0] > 0.0 {
                    (b - p[0]) / dir[0]
                } else {
                    (a - p[0]) / dir[0]
                }
            }
            ConvexDomain::Disc { center, radius } => {
                let q = sub(p, *center);
                let aa = dot(dir, dir);
                let bb = dot(q, dir);
                let cc = dot(q, q) - radius * radius;
                let root = (bb * bb - aa * cc).max(0.0).sqrt();
                if bb >= 0.0 {
                    -cc / (bb + root)
                } else {
                    (root - bb) / aa
                }
            }
            ConvexDomain::Rect { lo, hi } => (0..2)
                .filter(|&k| dir[k] != 0.0)
                .map(|k| {
                    let wall = if dir[k] > 0.0 { hi[k] } else { lo[k] };
                    (wall - p[k]) / dir[k]
                })
                .fold(f64::INFINITY, f64::min),
            ConvexDomain::Polygon { vertices } => edges(vertices)
                .filter_map(|(v, w)| {
                    let n = outward_normal(v, w);
                    let speed = dot(n, dir);
                    (speed > 0.0).then(|| (dot(n, v) - dot(n, p)) / speed)
                })
                .fold(f64::INFINITY, f64::min),
        }
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        match self {
            ConvexDomain::Interval { a, b } => ([*a, 0.0], [*b, 0.0]),
            ConvexDomain::Disc { center, radius } => (
                [center[0] - radius, center[1] - radius],
                [center[0] + radius, center[1] + radius],
            ),
            ConvexDomain::Rect { lo, hi } => (*lo, *hi),
            ConvexDomain::Polygon { vertices } => {
                let mut lo = [f64::INFINITY; 2];
                let mut hi = [f64::NEG_INFINITY; 2];
                for v in vertices {
                    for k in 0..2 {
                        lo[k] = lo[k].min(v[k]);
                        hi[k] = hi[k].max(v[k]);
                    }
                }
                (lo, hi)
            }
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            ConvexDomain::Interval { a, b } => b - a,
            ConvexDomain::Disc { radius, .. } => 2.0 * radius,
            ConvexDomain::Rect { lo, hi } => norm(sub(*hi, *lo)),
            ConvexDomain::Polygon { vertices } => {
                let mut d: f64 = 0.0;
                for (i, v) in vertices.iter().enumerate() {
                    for w in &vertices[i + 1..] {
                        d = d.max(norm(sub(*v, *w)));
                    }
                }
                d
            }
        }
    }

    /// Length (1D) or area (2D).
    pub fn measure(&self) -> f64 {
        match self {
            ConvexDomain::Interval { a, b } => b - a,
            ConvexDomain::Disc { radius, .. } => PI * radius * radius,
            ConvexDomain::Rect { lo, hi } => (hi[0] - lo[0]) * (hi[1] - lo[1]),
            ConvexDomain::Polygon { vertices } => 0.5 * edges(vertices).map(|(v, w)| v[0] * w[1] - w[0] * v[1]).sum::<f64>(),
        }
    }

    pub fn centroid(&self) -> Point {
        match self {
            ConvexDomain::Interval { a, b } => [0.5 * (a + b), 0.0],
            ConvexDomain::Disc { center, .. } => *center,
            ConvexDomain::Rect { lo, hi } => [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])],
            ConvexDomain::Polygon { vertices } => {
                let area = self.measure();
                let mut c = [0.0; 2];
                for (v, w) in edges(vertices) {
                    let cross = v[0] * w[1] - w[0] * v[1];
                    c[0] += (v[0] + w[0]) * cross;
                    c[1] += (v[1] + w[1]) * cross;
                }
                [c[0] / (6.0 * area), c[1] / (6.0 * area)]
            }
        }
    }

    /// Points that must lie on the boundary: interval endpoints, polygon and
    /// box corners, four compass points of a disc.
    pub fn boundary_landmarks(&self) -> Vec<Point> {
        match self {
            ConvexDomain::Interval { a, b } => vec![[*a, 0.0], [*b, 0.0]],
            ConvexDomain::Disc { center, radius } => vec![
                [center[0] + radius, center[1]],
                [center[0], center[1] + radius],
                [center[0] - radius, center[1]],
                [center[0], center[1] - radius],
            ],
            ConvexDomain::Rect { lo, hi } => vec![*lo, [hi[0], lo[1]], *hi, [lo[0], hi[1]]],
            ConvexDomain::Polygon { vertices } => vertices.clone(),
        }
    }
}

impl FromStr for ConvexDomain {
    type Err = Error;

    /// Parses `disc cx cy r`, `box lx ly ux uy`, `interval a b` or
    /// `polygon x1 y1 x2 y2 ...`.
    fn from_str(spec: &str) -> Result<Self> {
        let mut words = spec.split_whitespace();
        let kind = words
            .next()
            .ok_or_else(|| Error::InvalidDomain("empty domain description".into()))?;
        let nums = words
            .map(|w| {
                w.parse::<f64>()
                    .map_err(|_| Error::InvalidDomain(format!("'{w}' is not a number")))
            })
            .collect::<Result<Vec<f64>>>()?;
        let want = |n: usize| {
            if nums.len() == n {
                Ok(())
            } else {
                Err(Error::InvalidDomain(format!("'{kind}' takes {n} numbers, got {}", nums.len())))
            }
        };
        match kind {
            "interval" => {
                want(2)?;
                ConvexDomain::interval(nums[0], nums[1])
            }
            "disc" => {
                want(3)?;
                ConvexDomain::disc([nums[0], nums[1]], nums[2])
            }
            "box" => {
                want(4)?;
                ConvexDomain::rect([nums[0], nums[1]], [nums[2], nums[3]])
            }
            "polygon" => {
                if nums.len() % 2 != 0 {
                    return Err(Error::InvalidDomain("polygon needs an even number of coordinates".into()));
                }
                ConvexDomain::polygon(nums.chunks(2).map(|c| [c[0], c[1]]).collect())
            }
            other => Err(Error::InvalidDomain(format!(
                "unknown domain kind '{other}' (expected disc, box, interval or polygon)"
            ))),
        }
    }
}

impl fmt::Display for ConvexDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConvexDomain::Interval { a, b } => write!(f, "interval {a} {b}"),
            ConvexDomain::Disc { center, radius } => write!(f, "disc {} {} {radius}", center[0], center[1]),
            ConvexDomain::Rect { lo, hi } => write!(f, "box {} {} {} {}", lo[0], lo[1], hi[0], hi[1]),
            ConvexDomain::Polygon { vertices } => {
                write!(f, "polygon")?;
                for v in vertices {
                    write!(f, " {} {}", v[0], v[1])?;
                }
                Ok(())
            }
        }
    }
}

fn edges(vertices: &[Point]) -> impl Iterator<Item = (Point, Point)> + '_ {
    let m = vertices.len();
    (0..m).map(move |i| (vertices[i], vertices[(i + 1) % m]))
}

fn outward_normal(v: Point, w: Point) -> Point {
    [w[1] - v[1], v[0] - w[0]]
}

pub(crate) fn sub(p: Point, q: Point) -> Point {
    [p[0] - q[0], p[1] - q[1]]
}

pub(crate) fn dot(p: Point, q: Point) -> f64 {
    p[0] * q[0] + p[1] * q[1]
}

pub(crate) fn norm(p: Point) -> f64 {
    p[0].hypot(p[1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn disc_membership() {
        let d: ConvexDomain = "disc 0 0 1".parse().unwrap();
        assert!(d.contains([0.5, 0.0]));
        assert!(!d.contains([1.5, 0.0]));
        assert_eq!(d.dim(), 2);
    }

    #[test]
    fn interval_is_one_dimensional() {
        let d: ConvexDomain = "interval 0 1".parse().unwrap();
        assert_eq!(d.dim(), 1);
        assert_eq!(d.boundary_landmarks(), vec![[0.0, 0.0], [1.0, 0.0]]);
        assert!(d.contains([0.5, 0.0]));
        assert!(!d.contains([0.0, 0.0]));
        assert!(!d.contains([1.0, 0.0]));
    }

    #[test]
    fn polygon_convexity_check() {
        assert!("polygon 0 0 2 0 2 1 0 1".parse::<ConvexDomain>().is_ok());
        let err = "polygon 0 0 2 0 1 0.5 2 1 0 1".parse::<ConvexDomain>().unwrap_err();
        assert_eq!(err, Error::NonConvexPolygon { index: 2, x: 1.0, y: 0.5 });
        // collinear vertex
        assert!(matches!(
            "polygon 0 0 1 0 2 0 2 1".parse::<ConvexDomain>(),
            Err(Error::NonConvexPolygon { index: 1, .. })
        ));
        // pentagram: every turn has the same sign but it winds twice
        let star: Vec<Point> = (0..5)
            .map(|k| {
                let a = 4.0 * PI * k as f64 / 5.0;
                [a.cos(), a.sin()]
            })
            .collect();
        assert!(matches!(ConvexDomain::polygon(star), Err(Error::InvalidDomain(_))));
    }

    #[test]
    fn clockwise_polygon_is_reoriented() {
        let d = ConvexDomain::polygon(vec![[0.0, 0.0], [0.0, 1.0], [2.0, 1.0], [2.0, 0.0]]).unwrap();
        assert!((d.measure() - 2.0).abs() < 1e-15);
        assert!(d.contains([1.0, 0.5]));
    }

    #[test]
    fn degenerate_parameters_rejected() {
        for spec in ["interval 1 1", "disc 0 0 0", "disc 0 0 -1", "box 0 0 1 0", "polygon 0 0 1 1", "disc 0 0", "ellipse 0 0 1", "box a 0 1 1"] {
            assert!(spec.parse::<ConvexDomain>().is_err(), "{spec} should be rejected");
        }
    }

    #[test]
    fn display_round_trips() {
        for spec in ["interval 0 1", "disc 0.5 -1 2", "box 0 0 1 2", "polygon 0 0 2 0 1 1"] {
            let d: ConvexDomain = spec.parse().unwrap();
            assert_eq!(d.to_string().parse::<ConvexDomain>().unwrap(), d);
        }
    }

    #[test]
    fn landmarks_on_boundary_and_centroid_inside() {
        for spec in ["interval -1 3", "disc 1 2 0.5", "box 0 0 1 2", "polygon 0 0 3 0 4 2 1 3 -1 1"] {
            let d: ConvexDomain = spec.parse().unwrap();
            for p in d.boundary_landmarks() {
                assert!(!d.contains(p));
                assert!(d.depth(p).abs() < 1e-12 * d.diameter());
            }
            assert!(d.contains(d.centroid()));
        }
    }

    #[test]
    fn distance_examples() {
        let disc: ConvexDomain = "disc 0 0 1".parse().unwrap();
        assert_eq!(disc.distance_to_boundary([0.0, 0.0]).unwrap(), 1.0);
        let square: ConvexDomain = "box 0 0 1 1".parse().unwrap();
        assert_eq!(square.distance_to_boundary([0.5, 0.25]).unwrap(), 0.25);
        assert!(matches!(square.distance_to_boundary([1.5, 0.5]), Err(Error::PointOutside { .. })));
    }

    fn sample_inside(d: &ConvexDomain, rng: &mut ChaCha8Rng) -> Point {
        let (lo, hi) = d.bounding_box();
        loop {
            let p = [rng.gen_range(lo[0]..=hi[0]), if d.dim() == 1 { 0.0 } else { rng.gen_range(lo[1]..=hi[1]) }];
            if d.contains(p) {
                return p;
            }
        }
    }

    #[test]
    fn distance_is_midpoint_concave() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for spec in ["disc 0 0 1", "box 0 0 2 1", "polygon 0 0 3 0 4 2 1 3 -1 1", "interval 0 1"] {
            let d: ConvexDomain = spec.parse().unwrap();
            for _ in 0..1000 {
                let x = sample_inside(&d, &mut rng);
                let y = sample_inside(&d, &mut rng);
                let m = [0.5 * (x[0] + y[0]), 0.5 * (x[1] + y[1])];
                let lhs = d.distance_to_boundary(m).unwrap();
                let rhs = 0.5 * (d.distance_to_boundary(x).unwrap() + d.distance_to_boundary(y).unwrap());
                assert!(lhs >= rhs - 1e-12, "{spec}: d(mid) = {lhs} < {rhs}");
            }
        }
    }

    #[test]
    fn ray_exit_lands_on_boundary() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for spec in ["disc 0.3 -0.2 1.5", "box 0 0 2 1", "polygon 0 0 3 0 4 2 1 3 -1 1"] {
            let d: ConvexDomain = spec.parse().unwrap();
            for _ in 0..500 {
                let p = sample_inside(&d, &mut rng);
                let a = rng.gen_range(0.0..2.0 * PI);
                let dir = [a.cos() * 0.3, a.sin() * 0.3];
                let t = d.ray_exit(p, dir);
                assert!(t > 0.0);
                let q = [p[0] + t * dir[0], p[1] + t * dir[1]];
                assert!(d.depth(q).abs() < 1e-12 * d.diameter(), "{spec}: depth {}", d.depth(q));
            }
        }
    }
}
