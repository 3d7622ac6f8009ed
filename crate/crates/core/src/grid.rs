//! Uniform Cartesian discretization of a convex domain.
//!
//! Nodes are the lattice points `lo + h * (i, j)` of the domain's bounding
//! box that lie strictly inside the domain. For every node and every stencil
//! direction `v` the grid stores two arms, forward and backward. An arm ends
//! either at the lattice neighbor `x ± h v` (intercept 1) or, when that
//! neighbor is not a node, at the exact point where the segment leaves the
//! domain (intercept in `(0, 1]`, in units of the full step `h v`).

use std::sync::OnceLock;

use crate::domain::{ConvexDomain, Point};
use crate::error::{Error, Result};

/// Default stencil width.
pub const DEFAULT_WIDTH: usize = 2;

const NO_NODE: u32 = u32::MAX;
const MAX_LATTICE_POINTS: usize = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ArmEnd {
    Node(u32),
    /// Index into [`Grid::boundary_points`].
    Boundary(u32),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arm {
    pub end: ArmEnd,
    /// Fraction of the full step at which the arm ends.
    pub t: f64,
}

#[derive(Debug)]
pub struct Grid {
    domain: ConvexDomain,
    h: f64,
    width: usize,
    origin: Point,
    extent: [usize; 2],
    lattice_to_node: Vec<u32>,
    nodes: Vec<Point>,
    lattice: Vec<[i64; 2]>,
    dirs: Vec<[i64; 2]>,
    pairs: Vec<[usize; 2]>,
    arms: Vec<Arm>,
    weights: Vec<f64>,
    boundary_points: Vec<Point>,
    pub(crate) newton_cache: OnceLock<crate::dirichlet::JacobianLayout>,
}

/// Stencil directions for a given width. In 1D this is just `[1]`. In 2D it
/// lists every primitive integer vector `v = (a, b)` with `a >= 1`,
/// `0 <= b`, `max(a, b) <= width`, each immediately followed by its
/// rotation `(-b, a)`; consecutive entries form the orthogonal pairs.
/// Sorted by length so that pair 0 is the coordinate frame.
pub fn stencil_directions(dim: usize, width: usize) -> Vec<[i64; 2]> {
    if dim == 1 {
        return vec![[1, 0]];
    }
    let w = width as i64;
    let mut base: Vec<[i64; 2]> = Vec::new();
    for a in 1..=w {
        for b in 0..=w {
            if gcd(a, b) == 1 {
                base.push([a, b]);
            }
        }
    }
    base.sort_by(|p, q| {
        let lp = p[0] * p[0] + p[1] * p[1];
        let lq = q[0] * q[0] + q[1] * q[1];
        lp.cmp(&lq).then((p[1] as f64).atan2(p[0] as f64).total_cmp(&(q[1] as f64).atan2(q[0] as f64)))
    });
    base.into_iter().flat_map(|[a, b]| [[a, b], [-b, a]]).collect()
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.abs()
}

/// Builds the grid of `domain` with spacing `h` and stencil width `width`.
pub fn discretize(domain: &ConvexDomain, h: f64, width: usize) -> Result<Grid> {
    let diameter = domain.diameter();
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidGrid(format!("spacing h must be positive and finite, got {h}")));
    }
    if h > diameter / 4.0 {
        return Err(Error::InvalidGrid(format!(
            "spacing h = {h} exceeds a quarter of the domain diameter {diameter}"
        )));
    }
    if width == 0 {
        return Err(Error::InvalidGrid("stencil width must be at least 1".into()));
    }
    let dim = domain.dim();
    let (lo, hi) = domain.bounding_box();
    let extent = [
        ((hi[0] - lo[0]) / h).floor() as usize + 1,
        if dim == 1 { 1 } else { ((hi[1] - lo[1]) / h).floor() as usize + 1 },
    ];
    if extent[0].saturating_mul(extent[1]) > MAX_LATTICE_POINTS {
        return Err(Error::InvalidGrid(format!("spacing h = {h} gives more than {MAX_LATTICE_POINTS} lattice points")));
    }

    // Nodes closer to the boundary than this would produce vanishing arms.
    let margin = 1e-10 * h;
    let mut lattice_to_node = vec![NO_NODE; extent[0] * extent[1]];
    let mut nodes = Vec::new();
    let mut lattice = Vec::new();
    for j in 0..extent[1] {
        for i in 0..extent[0] {
            let p = [lo[0] + i as f64 * h, if dim == 1 { 0.0 } else { lo[1] + j as f64 * h }];
            if domain.distance_to_boundary(p).map_or(false, |d| d > margin) {
                lattice_to_node[j * extent[0] + i] = nodes.len() as u32;
                nodes.push(p);
                lattice.push([i as i64, j as i64]);
            }
        }
    }
    if nodes.is_empty() {
        return Err(Error::EmptyGrid { h });
    }

    let dirs = stencil_directions(dim, width);
    let pairs = if dim == 1 { Vec::new() } else { (0..dirs.len() / 2).map(|k| [2 * k, 2 * k + 1]).collect() };

    let mut grid = Grid {
        domain: domain.clone(),
        h,
        width,
        origin: lo,
        extent,
        lattice_to_node,
        nodes,
        lattice,
        dirs,
        pairs,
        arms: Vec::new(),
        weights: Vec::new(),
        boundary_points: Vec::new(),
        newton_cache: OnceLock::new(),
    };
    grid.build_arms();
    Ok(grid)
}

impl Grid {
    fn build_arms(&mut self) {
        let nd = self.dirs.len();
        let mut arms = Vec::with_capacity(self.nodes.len() * nd * 2);
        let mut boundary_points = Vec::new();
        for (idx, &x) in self.nodes.iter().enumerate() {
            let [i, j] = self.lattice[idx];
            for v in &self.dirs {
                for sign in [1i64, -1] {
                    let step = [(sign * v[0]) as f64 * self.h, (sign * v[1]) as f64 * self.h];
                    let arm = match self.node_at(i + sign * v[0], j + sign * v[1]) {
                        Some(n) => Arm { end: ArmEnd::Node(n as u32), t: 1.0 },
                        None => {
                            let t = self.domain.ray_exit(x, step).min(1.0);
                            boundary_points.push([x[0] + t * step[0], x[1] + t * step[1]]);
                            Arm { end: ArmEnd::Boundary(boundary_points.len() as u32 - 1), t }
                        }
                    };
                    arms.push(arm);
                }
            }
        }
        let mut weights = Vec::with_capacity(arms.len());
        for (slot, pair) in arms.chunks_exact(2).enumerate() {
            let v = self.dirs[slot % nd];
            let len2 = ((v[0] * v[0] + v[1] * v[1]) as f64) * self.h * self.h;
            let (tf, tb) = (pair[0].t, pair[1].t);
            weights.push(2.0 / ((tf + tb) * tf * len2));
            weights.push(2.0 / ((tf + tb) * tb * len2));
        }
        self.arms = arms;
        self.weights = weights;
        self.boundary_points = boundary_points;
    }

    pub fn domain(&self) -> &ConvexDomain {
        &self.domain
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Number of interior nodes.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn node(&self, idx: usize) -> Point {
        self.nodes[idx]
    }

    pub fn lattice_coords(&self, idx: usize) -> [i64; 2] {
        self.lattice[idx]
    }

    /// Node index at lattice coordinates, if that lattice point is a node.
    pub fn node_at(&self, i: i64, j: i64) -> Option<usize> {
        if i < 0 || j < 0 || i as usize >= self.extent[0] || j as usize >= self.extent[1] {
            return None;
        }
        match self.lattice_to_node[j as usize * self.extent[0] + i as usize] {
            NO_NODE => None,
            n => Some(n as usize),
        }
    }

    pub fn lattice_origin(&self) -> Point {
        self.origin
    }

    pub fn lattice_extent(&self) -> [usize; 2] {
        self.extent
    }

    pub fn directions(&self) -> &[[i64; 2]] {
        &self.dirs
    }

    /// Orthogonal direction pairs (indices into [`Grid::directions`]); empty in 1D.
    pub fn pairs(&self) -> &[[usize; 2]] {
        &self.pairs
    }

    /// Arm of `node` along direction `dir`; `side` 0 is forward, 1 backward.
    pub fn arm(&self, node: usize, dir: usize, side: usize) -> Arm {
        self.arms[self.slot(node, dir) + side]
    }

    pub fn intercept(&self, node: usize, dir: usize, side: usize) -> f64 {
        self.arm(node, dir, side).t
    }

    /// Coefficients `(w_f, w_b)` of the second difference along `dir` at
    /// `node`: `D u = w_f (u_f - u_0) + w_b (u_b - u_0)`.
    pub fn weights(&self, node: usize, dir: usize) -> (f64, f64) {
        let s = self.slot(node, dir);
        (self.weights[s], self.weights[s + 1])
    }

    #[inline]
    pub(crate) fn slot(&self, node: usize, dir: usize) -> usize {
        (node * self.dirs.len() + dir) * 2
    }

    pub(crate) fn arms_raw(&self) -> &[Arm] {
        &self.arms
    }

    pub(crate) fn weights_raw(&self) -> &[f64] {
        &self.weights
    }

    /// Boundary points reached by shortened arms. Boundary data is sampled here.
    pub fn boundary_points(&self) -> &[Point] {
        &self.boundary_points
    }

    /// Quadrature weight `h^n` of every node.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim() as i32)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{dot, norm};

    fn grid(spec: &str, h: f64, w: usize) -> Grid {
        discretize(&spec.parse().unwrap(), h, w).unwrap()
    }

    #[test]
    fn interval_nodes() {
        let g = grid("interval 0 1", 0.25, 1);
        let xs: Vec<f64> = g.nodes().iter().map(|p| p[0]).collect();
        assert_eq!(xs, vec![0.25, 0.5, 0.75]);
        assert_eq!(g.cell_volume(), 0.25);
    }

    #[test]
    fn coarse_disc_enumeration() {
        // lattice points of spacing 0.5 strictly inside the unit circle
        let g = grid("disc 0 0 1", 0.5, 1);
        let mut brute = 0;
        for i in -2..=2 {
            for j in -2..=2 {
                if (i * i + j * j) < 4 {
                    brute += 1;
                }
            }
        }
        assert_eq!(brute, 9);
        assert_eq!(g.len(), brute);
    }

    #[test]
    fn unit_box_third() {
        let g = grid("box 0 0 1 1", 1.0 / 3.0, 2);
        assert_eq!(g.len(), 4);
    }

    #[test]
    fn spacing_validation() {
        let d: ConvexDomain = "disc 0 0 1".parse().unwrap();
        assert!(matches!(discretize(&d, 0.6, 2), Err(Error::InvalidGrid(_))));
        assert!(matches!(discretize(&d, -0.1, 2), Err(Error::InvalidGrid(_))));
        assert!(matches!(discretize(&d, 0.1, 0), Err(Error::InvalidGrid(_))));
        // both lattice rows of this strip sit on its boundary
        let thin = ConvexDomain::rect([0.0, 0.0], [4.0, 0.5]).unwrap();
        assert!(matches!(discretize(&thin, 0.5, 1), Err(Error::EmptyGrid { .. })));
    }

    #[test]
    fn stencil_pairs_are_orthogonal_coprime() {
        let dirs = stencil_directions(2, 2);
        assert_eq!(dirs.len(), 8);
        assert_eq!(&dirs[..2], &[[1, 0], [0, 1]]);
        for pair in dirs.chunks(2) {
            let (v, w) = (pair[0], pair[1]);
            assert_eq!(w, [-v[1], v[0]]);
            assert_eq!(gcd(v[0], v[1]), 1);
            assert!(v[0].abs().max(v[1].abs()) <= 2);
        }
        assert_eq!(stencil_directions(2, 1).len(), 4);
        assert_eq!(stencil_directions(2, 3).len(), 16);
        assert_eq!(stencil_directions(1, 5), vec![[1, 0]]);
    }

    #[test]
    fn arms_land_on_boundary_or_neighbor() {
        for (spec, h) in [("disc 0 0 1", 1.0 / 16.0), ("polygon 0 0 3 0 4 2 1 3 -1 1", 0.2), ("box 0 0 2 1", 0.15), ("interval -1 2", 0.1)] {
            let g = grid(spec, h, 2);
            let d = g.domain().clone();
            let tol = 1e-12 * d.diameter();
            for n in 0..g.len() {
                let x = g.node(n);
                for (k, v) in g.directions().iter().enumerate() {
                    for side in 0..2 {
                        let sign = if side == 0 { 1.0 } else { -1.0 };
                        let arm = g.arm(n, k, side);
                        assert!(arm.t > 0.0 && arm.t <= 1.0);
                        let p = [x[0] + sign * arm.t * g.h() * v[0] as f64, x[1] + sign * arm.t * g.h() * v[1] as f64];
                        match arm.end {
                            ArmEnd::Node(m) => {
                                assert_eq!(arm.t, 1.0);
                                let y = g.node(m as usize);
                                assert!(norm([p[0] - y[0], p[1] - y[1]]) < tol);
                            }
                            ArmEnd::Boundary(b) => {
                                assert!(d.distance_to_boundary(p).map_or(true, |dist| dist < tol));
                                let q = g.boundary_points()[b as usize];
                                assert!(norm([p[0] - q[0], p[1] - q[1]]) < tol);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn node_count_tracks_area() {
        for spec in ["disc 0 0 1", "box 0 0 2 1", "polygon 0 0 3 0 4 2 1 3 -1 1"] {
            let d: ConvexDomain = spec.parse().unwrap();
            let mut prev = 0;
            for level in 4..8 {
                let h = d.diameter() / (1 << level) as f64;
                let g = discretize(&d, h, 2).unwrap();
                let expected = d.measure() / (h * h);
                let ratio = g.len() as f64 / expected;
                assert!((0.5..=2.0).contains(&ratio), "{spec} at h = {h}: ratio {ratio}");
                if prev > 0 {
                    assert!(g.len() >= 3 * prev, "{spec}: {} vs {prev}", g.len());
                }
                prev = g.len();
            }
        }
    }

    #[test]
    fn weights_are_exact_for_quadratics() {
        let g = grid("disc 0.1 0 0.9", 0.07, 2);
        let q = |p: Point| 0.5 * dot(p, p);
        for n in 0..g.len() {
            for (k, v) in g.directions().iter().enumerate() {
                let (wf, wb) = g.weights(n, k);
                let x = g.node(n);
                let ends: Vec<f64> = (0..2)
                    .map(|side| {
                        let s = if side == 0 { 1.0 } else { -1.0 };
                        let t = g.intercept(n, k, side);
                        q([x[0] + s * t * g.h() * v[0] as f64, x[1] + s * t * g.h() * v[1] as f64])
                    })
                    .collect();
                let d2 = wf * (ends[0] - q(x)) + wb * (ends[1] - q(x));
                assert!((d2 - 1.0).abs() < 1e-9, "second difference {d2}");
            }
        }
    }
}
