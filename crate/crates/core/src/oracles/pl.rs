//! Alexandrov Monge-Ampere measure of a piecewise-linear convex function
//! `u = max_i (g_i . x + b_i)` in 2D. The measure is atomic: each vertex of
//! the graph carries the area of the convex hull of the gradients of the
//! pieces active there.

use serde::Serialize;

use crate::domain::{ConvexDomain, Point};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AffinePiece {
    pub gradient: Point,
    pub offset: f64,
}

impl AffinePiece {
    pub fn eval(&self, x: Point) -> f64 {
        self.gradient[0] * x[0] + self.gradient[1] * x[1] + self.offset
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PLConvexFunction {
    pieces: Vec<AffinePiece>,
}

impl PLConvexFunction {
    pub fn new(pieces: Vec<AffinePiece>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidInput("a piecewise-linear function needs at least one piece".into()));
        }
        if pieces.iter().any(|p| !(p.gradient[0].is_finite() && p.gradient[1].is_finite() && p.offset.is_finite())) {
            return Err(Error::InvalidInput("affine pieces must be finite".into()));
        }
        Ok(Self { pieces })
    }

    /// `m` tangent planes of the cone `|x| - 1`, gradients equally spaced on
    /// the unit circle.
    pub fn cone(m: usize) -> Result<Self> {
        let pieces = (0..m)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / m as f64;
                AffinePiece { gradient: [t.cos(), t.sin()], offset: -1.0 }
            })
            .collect();
        Self::new(pieces)
    }

    pub fn pieces(&self) -> &[AffinePiece] {
        &self.pieces
    }

    pub fn eval(&self, x: Point) -> f64 {
        self.pieces.iter().map(|p| p.eval(x)).fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Atom {
    pub point: Point,
    pub mass: f64,
}

/// Atoms of the Monge-Ampere measure of `u` inside `domain`.
///
/// Rejects (with `DegeneratePosition`) vertices whose active gradients are
/// repeated or all collinear, pieces with equal gradients, and pieces that
/// never attain the maximum in the domain.
pub fn oracle_pl_ma(u: &PLConvexFunction, domain: &ConvexDomain) -> Result<Vec<Atom>> {
    if domain.dim() != 2 {
        return Err(Error::InvalidInput("the piecewise-linear oracle is two-dimensional".into()));
    }
    let pieces = u.pieces();
    let n = pieces.len();
    let gscale = pieces.iter().map(|p| p.gradient[0].abs().max(p.gradient[1].abs())).fold(0.0, f64::max);
    let bscale = pieces.iter().map(|p| p.offset.abs()).fold(0.0, f64::max);
    let tol = 1e-9 * (1.0 + bscale + gscale * domain.diameter());
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (pieces[i].gradient, pieces[j].gradient);
            if (a[0] - b[0]).abs() <= 1e-12 * (1.0 + gscale) && (a[1] - b[1]).abs() <= 1e-12 * (1.0 + gscale) {
                return Err(Error::DegeneratePosition(format!("pieces {i} and {j} have the same gradient")));
            }
        }
    }
    check_non_redundant(u, domain, tol)?;
    check_common_lines(u, domain, tol)?;

    let mut vertices: Vec<Point> = Vec::new();
    let merge = 1e-9 * (1.0 + domain.diameter());
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let Some(x) = intersect(&pieces[i], &pieces[j], &pieces[k]) else { continue };
                if !domain.contains(x) {
                    continue;
                }
                let top = u.eval(x);
                if pieces[i].eval(x) < top - tol {
                    continue;
                }
                if !vertices.iter().any(|v| (v[0] - x[0]).abs() <= merge && (v[1] - x[1]).abs() <= merge) {
                    vertices.push(x);
                }
            }
        }
    }
    let mut atoms = Vec::with_capacity(vertices.len());
    for x in vertices {
        let top = u.eval(x);
        let grads: Vec<Point> = pieces.iter().filter(|p| p.eval(x) >= top - tol).map(|p| p.gradient).collect();
        let hull = convex_hull(&grads);
        if hull.len() < 3 {
            return Err(Error::DegeneratePosition(format!(
                "the gradients active at ({}, {}) are collinear",
                x[0], x[1]
            )));
        }
        if hull.len() < grads.len() && grads.len() == 3 {
            return Err(Error::DegeneratePosition(format!("degenerate vertex at ({}, {})", x[0], x[1])));
        }
        atoms.push(Atom { point: x, mass: polygon_area(&hull) });
    }
    atoms.sort_by(|a, b| a.point[0].total_cmp(&b.point[0]).then(a.point[1].total_cmp(&b.point[1])));
    Ok(atoms)
}

/// Point where three planes meet, if their gradients are affinely independent.
fn intersect(p: &AffinePiece, q: &AffinePiece, r: &AffinePiece) -> Option<Point> {
    let a = [p.gradient[0] - q.gradient[0], p.gradient[1] - q.gradient[1]];
    let b = [p.gradient[0] - r.gradient[0], p.gradient[1] - r.gradient[1]];
    let det = a[0] * b[1] - a[1] * b[0];
    let scale = (a[0].abs() + a[1].abs()) * (b[0].abs() + b[1].abs());
    if det.abs() <= 1e-12 * scale {
        return None;
    }
    let (c1, c2) = (q.offset - p.offset, r.offset - p.offset);
    Some([(c1 * b[1] - c2 * a[1]) / det, (a[0] * c2 - b[0] * c1) / det])
}

/// Rejects three planes through a common line when that line carries the
/// maximum somewhere in the domain.
fn check_common_lines(u: &PLConvexFunction, domain: &ConvexDomain, tol: f64) -> Result<()> {
    let pieces = u.pieces();
    let n = pieces.len();
    let c = domain.centroid();
    let diam = domain.diameter();
    for i in 0..n {
        for j in i + 1..n {
            let d = [pieces[j].gradient[0] - pieces[i].gradient[0], pieces[j].gradient[1] - pieces[i].gradient[1]];
            let db = pieces[j].offset - pieces[i].offset;
            let dd = d[0] * d[0] + d[1] * d[1];
            for k in j + 1..n {
                let e = [pieces[k].gradient[0] - pieces[i].gradient[0], pieces[k].gradient[1] - pieces[i].gradient[1]];
                let cross = d[0] * e[1] - d[1] * e[0];
                if cross.abs() > 1e-12 * dd.sqrt() * (e[0].abs() + e[1].abs()) {
                    continue;
                }
                let t = (d[0] * e[0] + d[1] * e[1]) / dd;
                let eb = pieces[k].offset - pieces[i].offset;
                if (eb - t * db).abs() > tol {
                    continue;
                }
                // common line d . x = -db; walk it through the domain
                let foot = {
                    let s = (-db - (d[0] * c[0] + d[1] * c[1])) / dd;
                    [c[0] + s * d[0], c[1] + s * d[1]]
                };
                let dir = [-d[1] / dd.sqrt(), d[0] / dd.sqrt()];
                let m = 2000;
                for q in 0..=m {
                    let s = diam * (2.0 * q as f64 / m as f64 - 1.0);
                    let x = [foot[0] + s * dir[0], foot[1] + s * dir[1]];
                    if domain.contains(x) && pieces[i].eval(x) >= u.eval(x) - tol {
                        return Err(Error::DegeneratePosition(format!(
                            "pieces {i}, {j} and {k} meet along a common line"
                        )));
                    }
                }
            }
        }
    }
    Ok(())
}

/// Every piece must attain the maximum somewhere in the domain; sampled on a
/// lattice of the bounding box plus the landmarks.
fn check_non_redundant(u: &PLConvexFunction, domain: &ConvexDomain, tol: f64) -> Result<()> {
    let pieces = u.pieces();
    let mut hit = vec![false; pieces.len()];
    let (lo, hi) = domain.bounding_box();
    let m = 400;
    let mut points = domain.boundary_landmarks();
    points.push(domain.centroid());
    for a in 0..=m {
        for b in 0..=m {
            let x = [lo[0] + (hi[0] - lo[0]) * a as f64 / m as f64, lo[1] + (hi[1] - lo[1]) * b as f64 / m as f64];
            if domain.contains(x) {
                points.push(x);
            }
        }
    }
    for x in points {
        let top = u.eval(x);
        for (i, p) in pieces.iter().enumerate() {
            if p.eval(x) >= top - tol {
                hit[i] = true;
            }
        }
    }
    match hit.iter().position(|h| !h) {
        Some(i) => Err(Error::DegeneratePosition(format!("piece {i} never attains the maximum in the domain"))),
        None => Ok(()),
    }
}

/// Andrew's monotone chain; counter-clockwise, collinear points dropped.
pub(crate) fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: Point, a: Point, b: Point| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point>> = if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Shoelace area of a simple polygon.
pub(crate) fn polygon_area(vertices: &[Point]) -> f64 {
    let n = vertices.len();
    let twice: f64 = (0..n)
        .map(|i| {
            let (a, b) = (vertices[i], vertices[(i + 1) % n]);
            a[0] * b[1] - a[1] * b[0]
        })
        .sum();
    0.5 * twice.abs()
}
