//! Polytopes in dimensions 1 to 3: hulls, facet decomposition, volume,
//! projection, reflection and Hausdorff distance.
//!
//! Bodies supplied by users live in dimension 2 or 3. Dimension 1 only
//! appears as the image of a planar body under projection and as the
//! parameter body `Q` when `m = 1`.

mod hull;
pub mod io;
pub mod linalg;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tolerance::HULL_REL_TOL;
use linalg::{axpy, complement_basis, cross3, dot, lex_cmp, norm, sub};


/// A facet of a polytope: unit outward normal, `(dim-1)`-measure, and the
/// support value in the normal direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Facet {
    pub normal: Vec<f64>,
    pub area: f64,
    pub offset: f64,
    /// Indices into the vertex list. Counter-clockwise (seen from outside)
    /// for 3-D facets, the two endpoints for edges, the point for `dim = 1`.
    pub vertices: Vec<usize>,
}

/// A unit vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction(Vec<f64>);

impl Direction {
    /// Normalizes `v`. Fails on zero or non-finite input.
    pub fn new(v: &[f64]) -> Result<Self> {
        linalg::normalized(v)
            .map(Direction)
            .ok_or_else(|| Error::DegenerateInput("zero direction".into()))
    }

    pub fn axis(dim: usize, i: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        Direction(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl std::ops::Deref for Direction {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// A full-dimensional convex polytope in V-representation with its facet
/// decomposition.
#[derive(Debug, Clone)]
pub struct Polytope {
    dim: usize,
    vertices: Vec<Vec<f64>>,
    facets: Vec<Facet>,
    volume: f64,
}

/// Hull of `points` in `R^dim`.
pub fn convex_hull(points: &[Vec<f64>], dim: usize) -> Result<Polytope> {
    Polytope::from_points(points, dim)
}

impl Polytope {
    pub fn from_points(points: &[Vec<f64>], dim: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        let out = hull::hull(points, dim)?;
        let mut p = Polytope { dim, vertices: out.vertices, facets: out.facets, volume: 0.0 };
        p.volume = p.cone_volume();
        if !(p.volume > 0.0) {
            return Err(Error::DegenerateInput("zero volume".into()));
        }
        Ok(p)
    }

    /// Axis-aligned box `[lo, hi]`.
    pub fn cuboid(lo: &[f64], hi: &[f64]) -> Result<Self> {
        let d = lo.len();
        let pts: Vec<Vec<f64>> = (0..1usize << d)
            .map(|mask| (0..d).map(|k| if mask >> k & 1 == 1 { hi[k] } else { lo[k] }).collect())
            .collect();
        Self::from_points(&pts, d)
    }

    /// Interval `[a, b]` as a one-dimensional polytope.
    pub fn interval(a: f64, b: f64) -> Result<Self> {
        Self::from_points(&[vec![a], vec![b]], 1)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Extreme points; counter-clockwise from the lexicographic minimum in
    /// the plane.
    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// Total `(dim-1)`-measure of the boundary.
    pub fn surface_area(&self) -> f64 {
        self.facets.iter().map(|f| f.area).sum()
    }

    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (i, a) in self.vertices.iter().enumerate() {
            for b in &self.vertices[i + 1..] {
                d = d.max(linalg::dist(a, b));
            }
        }
        d
    }

    /// Mean of the vertices (an interior point, not the centroid of mass).
    pub fn vertex_mean(&self) -> Vec<f64> {
        let k = self.vertices.len() as f64;
        (0..self.dim).map(|i| self.vertices.iter().map(|v| v[i]).sum::<f64>() / k).collect()
    }

    /// Absolute tolerance used for membership tests on this body.
    pub fn tolerance(&self) -> f64 {
        HULL_REL_TOL * hull::extent(&self.vertices)
    }

    /// `max <x, v>` over the vertices.
    pub fn support(&self, x: &[f64]) -> f64 {
        self.vertices.iter().map(|v| dot(v, x)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Facet-inequality membership with absolute slack `tol`.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.facets.iter().all(|f| dot(&f.normal, x) - f.offset <= tol)
    }

    /// `Σ_F area_F · normal_F`; vanishes for a closed boundary.
    pub fn closedness_residual(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.dim];
        for f in &self.facets {
            for k in 0..self.dim {
                s[k] += f.area * f.normal[k];
            }
        }
        s
    }

    /// Polar `{x : <x, v> ≤ 1 for v ∈ P}` of a 3-D polytope with the origin
    /// inside, read off the facet–vertex incidences instead of a second hull:
    /// facet `F` gives the vertex `n_F / h_F`, vertex `v` gives the facet with
    /// normal `v / |v|` whose corners are the facets around `v`. Fails when
    /// the incidences do not close up around some vertex.
    pub(crate) fn polar_by_duality(&self) -> Result<Polytope> {
        if self.dim != 3 {
            return Err(Error::UnsupportedDimension(self.dim));
        }
        let min_off = self.facets.iter().map(|f| f.offset).fold(f64::INFINITY, f64::min);
        if !(min_off > 0.0) {
            return Err(Error::OriginNotInterior(min_off));
        }
        let pts: Vec<Vec<f64>> =
            self.facets.iter().map(|f| f.normal.iter().map(|x| x / f.offset).collect()).collect();
        let mut order: Vec<usize> = (0..pts.len()).collect();
        order.sort_by(|&a, &b| lex_cmp(&pts[a], &pts[b]));
        let mut rank = vec![0; pts.len()];
        for (k, &i) in order.iter().enumerate() {
            rank[i] = k;
        }
        // (facet, predecessor, successor) of each vertex in each facet ring
        let mut around: Vec<Vec<(usize, usize, usize)>> = vec![Vec::new(); self.vertices.len()];
        for (fi, f) in self.facets.iter().enumerate() {
            let (r, m) = (&f.vertices, f.vertices.len());
            for j in 0..m {
                around[r[j]].push((fi, r[(j + m - 1) % m], r[(j + 1) % m]));
            }
        }
        let broken = || Error::DegenerateInput("facet rings do not close around a vertex".into());
        let mut facets = Vec::with_capacity(self.vertices.len());
        for (v, inc) in self.vertices.iter().zip(&around) {
            if inc.len() < 3 {
                return Err(broken());
            }
            let mut ring = vec![inc[0].0];
            let mut cur = 0;
            for _ in 1..inc.len() {
                let succ = inc[cur].2;
                cur = inc.iter().position(|x| x.1 == succ).ok_or_else(broken)?;
                ring.push(inc[cur].0);
            }
            if inc[cur].2 != inc[0].1 {
                return Err(broken());
            }
            let len = norm(v);
            let normal: Vec<f64> = v.iter().map(|x| x / len).collect();
            let o = &pts[ring[0]];
            let mut nw = [0.0; 3];
            for w in 1..ring.len() - 1 {
                let c = cross3(&sub(&pts[ring[w]], o), &sub(&pts[ring[w + 1]], o));
                for k in 0..3 {
                    nw[k] += c[k];
                }
            }
            let mut area = 0.5 * dot(&nw, &normal);
            if area < 0.0 {
                ring.reverse();
                area = -area;
            }
            facets.push(Facet { normal, area, offset: 1.0 / len, vertices: ring.iter().map(|&i| rank[i]).collect() });
        }
        let vertices = order.iter().map(|&i| pts[i].clone()).collect();
        let mut p = Polytope { dim: 3, vertices, facets, volume: 0.0 };
        p.volume = p.cone_volume();
        if !(p.volume > 0.0) {
            return Err(Error::DegenerateInput("zero volume".into()));
        }
        Ok(p)
    }

    fn cone_volume(&self) -> f64 {
        let c = self.vertex_mean();
        self.facets.iter().map(|f| (f.offset - dot(&f.normal, &c)) * f.area).sum::<f64>() / self.dim as f64
    }

    pub fn map_vertices(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<Polytope> {
        let pts: Vec<Vec<f64>> = self.vertices.iter().map(|v| f(v)).collect();
        Polytope::from_points(&pts, self.dim)
    }

    pub fn translate(&self, t: &[f64]) -> Polytope {
        self.map_vertices(|v| linalg::add(v, t)).expect("translation preserves full dimension")
    }

    /// `s · P` about the origin; `s` must be nonzero.
    pub fn scaled(&self, s: f64) -> Result<Polytope> {
        self.map_vertices(|v| linalg::scale(v, s))
    }

    /// Orthogonal projection onto `u^⊥`, in the basis returned by
    /// [`linalg::complement_basis`].
    pub fn project(&self, u: &Direction) -> Result<Polytope> {
        self.check_dim(u.dim())?;
        if self.dim == 1 {
            return Err(Error::DegenerateInput("cannot project a segment".into()));
        }
        let basis = complement_basis(u);
        let pts: Vec<Vec<f64>> =
            self.vertices.iter().map(|v| basis.iter().map(|b| dot(b, v)).collect()).collect();
        Polytope::from_points(&pts, self.dim - 1)
    }

    /// Householder reflection `x ↦ x - 2<x,u>u`.
    pub fn reflect(&self, u: &Direction) -> Polytope {
        assert_eq!(u.dim(), self.dim);
        self.map_vertices(|v| axpy(v, -2.0 * dot(v, u), u)).expect("reflection is an isometry")
    }

    /// Euclidean distance from `x` to the body (zero inside).
    pub fn distance_to(&self, x: &[f64]) -> f64 {
        let outside = self
            .facets
            .iter()
            .map(|f| dot(&f.normal, x) - f.offset)
            .fold(f64::NEG_INFINITY, f64::max);
        if outside <= 0.0 {
            return 0.0;
        }
        match self.dim {
            1 => outside,
            2 => self
                .facets
                .iter()
                .map(|f| segment_distance(x, &self.vertices[f.vertices[0]], &self.vertices[f.vertices[1]]))
                .fold(f64::INFINITY, f64::min),
            _ => self
                .facets
                .iter()
                .map(|f| self.facet_distance(f, x))
                .fold(f64::INFINITY, f64::min),
        }
    }

    fn facet_distance(&self, f: &Facet, x: &[f64]) -> f64 {
        let h = dot(&f.normal, x) - f.offset;
        let proj = axpy(x, -h, &f.normal);
        let k = f.vertices.len();
        let inside = (0..k).all(|i| {
            let a = &self.vertices[f.vertices[i]];
            let b = &self.vertices[f.vertices[(i + 1) % k]];
            dot(&cross3(&sub(b, a), &sub(&proj, a)), &f.normal) >= 0.0
        });
        if inside {
            return h.abs();
        }
        (0..k)
            .map(|i| {
                segment_distance(x, &self.vertices[f.vertices[i]], &self.vertices[f.vertices[(i + 1) % k]])
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Hausdorff distance; exact for polytopes since the distance to a convex
    /// body is a convex function maximized at vertices.
    pub fn hausdorff_distance(&self, other: &Polytope) -> f64 {
        assert_eq!(self.dim, other.dim, "Hausdorff distance needs equal dimensions");
        let a = self.vertices.iter().map(|v| other.distance_to(v)).fold(0.0, f64::max);
        let b = other.vertices.iter().map(|v| self.distance_to(v)).fold(0.0, f64::max);
        a.max(b)
    }

    /// Vertex sets agree up to `tol` after lexicographic sorting.
    pub fn same_vertices(&self, other: &Polytope, tol: f64) -> bool {
        if self.dim != other.dim || self.vertices.len() != other.vertices.len() {
            return false;
        }
        let mut a = self.vertices.clone();
        let mut b = other.vertices.clone();
        a.sort_by(|x, y| lex_cmp(x, y));
        b.sort_by(|x, y| lex_cmp(x, y));
        a.iter().zip(&b).all(|(x, y)| linalg::dist(x, y) <= tol)
    }

    /// Edges as vertex index pairs `(i, j)` with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<(usize, usize)> = Vec::new();
        match self.dim {
            1 => e.push((0, 1)),
            _ => {
                for f in &self.facets {
                    let k = f.vertices.len();
                    if self.dim == 2 {
                        let (a, b) = (f.vertices[0], f.vertices[1]);
                        e.push((a.min(b), a.max(b)));
                    } else {
                        for i in 0..k {
                            let (a, b) = (f.vertices[i], f.vertices[(i + 1) % k]);
                            e.push((a.min(b), a.max(b)));
                        }
                    }
                }
            }
        }
        e.sort_unstable();
        e.dedup();
        e
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        if d == self.dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: self.dim, found: d })
        }
    }
}

fn segment_distance(x: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let ab = sub(b, a);
    let l2 = dot(&ab, &ab);
    let t = if l2 > 0.0 { (dot(&sub(x, a), &ab) / l2).clamp(0.0, 1.0) } else { 0.0 };
    norm(&sub(x, &axpy(a, t, &ab)))
}

/// Signed area of a polygon by the shoelace formula.
pub fn shoelace(poly: &[Vec<f64>]) -> f64 {
    let k = poly.len();
    0.5 * (0..k)
        .map(|i| {
            let (a, b) = (&poly[i], &poly[(i + 1) % k]);
            a[0] * b[1] - a[1] * b[0]
        })
        .sum::<f64>()
}
