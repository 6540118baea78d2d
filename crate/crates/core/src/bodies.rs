//! Support functions, gauges, polar bodies, p-sums and the catalog of
//! standard test bodies.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::linalg::{dot, scale};
use crate::geom::Polytope;
use crate::rng::substream;

/// Anything with a support function `h(x) = max_{y in body} <x, y>`.
pub trait Support {
    fn dim(&self) -> usize;
    fn support(&self, x: &[f64]) -> f64;
}

impl Support for Polytope {
    fn dim(&self) -> usize {
        Polytope::dim(self)
    }
    fn support(&self, x: &[f64]) -> f64 {
        Polytope::support(self, x)
    }
}

/// A closed segment `[a, b]`, possibly degenerate (a point).
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl Segment {
    /// `[0, u]`.
    pub fn from_origin(u: &[f64]) -> Self {
        Segment { a: vec![0.0; u.len()], b: u.to_vec() }
    }
}

impl Support for Segment {
    fn dim(&self) -> usize {
        self.a.len()
    }
    fn support(&self, x: &[f64]) -> f64 {
        dot(&self.a, x).max(dot(&self.b, x))
    }
}

/// A polytope with the origin in its interior.
#[derive(Debug, Clone)]
pub struct OriginBody(Polytope);

impl OriginBody {
    /// Accepts `p` when every facet offset is at least `1e-9 · diam(p)`.
    pub fn new(p: Polytope) -> Result<Self> {
        let min_off = p.facets().iter().map(|f| f.offset).fold(f64::INFINITY, f64::min);
        if min_off < crate::tolerance::HULL_REL_TOL * p.diameter() {
            return Err(Error::OriginNotInterior(min_off));
        }
        Ok(OriginBody(p))
    }

    pub fn polytope(&self) -> &Polytope {
        &self.0
    }

    pub fn into_polytope(self) -> Polytope {
        self.0
    }

    /// `‖x‖_K = inf{λ > 0 : x ∈ λK}`.
    pub fn minkowski_functional(&self, x: &[f64]) -> f64 {
        self.0
            .facets()
            .iter()
            .map(|f| dot(&f.normal, x) / f.offset)
            .fold(0.0, f64::max)
    }

    /// Polar body by facet/vertex duality: the vertices of `K°` are the
    /// points `normal_F / offset_F`.
    pub fn polar(&self) -> OriginBody {
        if let Ok(p) = self.0.polar_by_duality() {
            return OriginBody(p);
        }
        let pts: Vec<Vec<f64>> = self.0.facets().iter().map(|f| scale(&f.normal, 1.0 / f.offset)).collect();
        let p = Polytope::from_points(&pts, self.0.dim()).expect("polar of an origin body is a body");
        OriginBody(p)
    }
}

impl std::ops::Deref for OriginBody {
    type Target = Polytope;
    fn deref(&self) -> &Polytope {
        &self.0
    }
}

impl Support for OriginBody {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn support(&self, x: &[f64]) -> f64 {
        self.0.support(x)
    }
}

pub fn support(k: &impl Support, x: &[f64]) -> f64 {
    k.support(x)
}

/// Deterministic unit directions: a uniform angular grid in the plane, a
/// Fibonacci lattice on the 2-sphere.
pub fn direction_grid(dim: usize, n: usize) -> Vec<Vec<f64>> {
    match dim {
        1 => vec![vec![-1.0], vec![1.0]],
        2 => (0..n)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / n as f64;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        _ => fibonacci_sphere(n),
    }
}

pub fn fibonacci_sphere(n: usize) -> Vec<Vec<f64>> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2 * i + 1) as f64 / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            vec![r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

/// Outer polytopal approximation of a body given by support values on a
/// direction grid: `∩_i {<x, u_i> ≤ h_i}`, computed as the polar of
/// `conv{u_i / h_i}`.
pub fn halfspace_body(dirs: &[Vec<f64>], h: &[f64]) -> Result<Polytope> {
    let dim = dirs[0].len();
    if let Some(bad) = h.iter().copied().find(|&v| !(v > 0.0)) {
        return Err(Error::OriginNotInterior(bad));
    }
    let dual: Vec<Vec<f64>> = dirs.iter().zip(h).map(|(u, &hv)| scale(u, 1.0 / hv)).collect();
    let dual = OriginBody::new(Polytope::from_points(&dual, dim)?)?;
    Ok(dual.polar().into_polytope())
}

/// Outer approximation of the p-sum `K +_p L` on `n_dirs` grid directions.
/// Its support function dominates the true one and matches it on the grid.
pub fn p_sum_approx(k: &OriginBody, l: &impl Support, p: f64, n_dirs: usize) -> Result<Polytope> {
    weighted_p_sum(k, l, p, 1.0, n_dirs)
}

/// Body with support `(h_K^p + w · h_L^p)^{1/p}` on the grid, i.e. `K +_p w·L`.
pub fn weighted_p_sum(k: &OriginBody, l: &impl Support, p: f64, w: f64, n_dirs: usize) -> Result<Polytope> {
    p_sum_on_directions(k, l, p, w, &direction_grid(k.dim(), n_dirs))
}

/// Outer approximation of `K +_p w·L` cut out by the given unit directions.
pub fn p_sum_on_directions(
    k: &OriginBody,
    l: &impl Support,
    p: f64,
    w: f64,
    dirs: &[Vec<f64>],
) -> Result<Polytope> {
    if !(p >= 1.0) {
        return Err(Error::InvalidP(p));
    }
    let mut h = Vec::with_capacity(dirs.len());
    for u in dirs {
        let hl = l.support(u);
        if hl < -k.tolerance() {
            return Err(Error::OriginNotContained(hl));
        }
        h.push((k.support(u).powf(p) + w * hl.max(0.0).powf(p)).powf(1.0 / p));
    }
    halfspace_body(dirs, &h)
}

/// Regular `k`-gon with the given circumradius, first vertex on the x-axis.
pub fn regular_polygon(k: usize, circumradius: f64) -> Result<Polytope> {
    let pts: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            let a = 2.0 * PI * i as f64 / k as f64;
            vec![circumradius * a.cos(), circumradius * a.sin()]
        })
        .collect();
    Polytope::from_points(&pts, 2)
}

/// Origin-centred polytopal ball of prescribed volume: a regular polygon in
/// the plane, a hulled Fibonacci lattice in space.
pub fn ball_approx(dim: usize, volume: f64, resolution: usize) -> Result<Polytope> {
    let unit = match dim {
        2 => regular_polygon(resolution, 1.0)?,
        3 => Polytope::from_points(&fibonacci_sphere(resolution), 3)?,
        d => return Err(Error::UnsupportedDimension(d)),
    };
    unit.scaled((volume / unit.volume()).powf(1.0 / dim as f64))
}

/// The `B_K` stand-in used throughout: same volume as `k`, default resolution.
pub fn equal_volume_ball(k: &Polytope) -> Result<Polytope> {
    let res = if k.dim() == 2 {
        crate::tolerance::BALL_POLYGON_VERTICES
    } else {
        crate::tolerance::BALL_SPHERE_POINTS
    };
    ball_approx(k.dim(), k.volume(), res)
}

/// Seeded random polytope with the origin in its interior: vertex
/// directions uniform on the sphere, radii uniform in `[0.4, 1]`. Draws are
/// repeated until every facet is at distance at least `0.1` from the origin,
/// so the origin sits well inside and polar bodies stay bounded.
pub fn random_polytope(dim: usize, n_points: usize, seed: u64) -> Result<Polytope> {
    if !(2..=3).contains(&dim) {
        return Err(Error::UnsupportedDimension(dim));
    }
    let mut rng = substream(seed, 0x5eed);
    loop {
        let pts: Vec<Vec<f64>> = (0..n_points.max(dim + 1))
            .map(|_| {
                let r = rng.random_range(0.4..1.0);
                scale(&crate::rng::unit_vector(&mut rng, dim), r)
            })
            .collect();
        if let Ok(p) = Polytope::from_points(&pts, dim) {
            if p.facets().iter().all(|f| f.offset >= 0.1) {
                return Ok(p);
            }
        }
    }
}

/// Catalog of named bodies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum StandardBody {
    /// `[-h, h]^dim`.
    Cube { dim: usize, half_width: f64 },
    /// Axis-aligned box.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// `conv{0, e_1, ..., e_dim}`.
    Simplex { dim: usize },
    /// `-Δ_m = conv{0, -e_1, ..., -e_m}`.
    NegSimplex { dim: usize },
    /// Regular simplex inscribed in the unit sphere, centred at the origin.
    CenteredSimplex { dim: usize },
    RegularPolygon { k: usize, circumradius: f64 },
    RandomPolytope { dim: usize, points: usize, seed: u64 },
    /// Polytopal ball of the given volume.
    Ball { dim: usize, volume: f64, resolution: usize },
    /// One-dimensional segment `[a, b]`, for the `Q` slot with `m = 1`.
    Segment { a: f64, b: f64 },
    /// Explicit vertex list.
    Vertices { dim: usize, vertices: Vec<Vec<f64>> },
}

pub const CATALOG_NAMES: &[&str] = &[
    "cube",
    "box",
    "simplex",
    "neg_simplex",
    "centered_simplex",
    "regular_polygon",
    "random_polytope",
    "ball",
    "segment",
    "vertices",
];

/// Builds a catalog body.
pub fn make_standard(b: &StandardBody) -> Result<Polytope> {
    match b {
        StandardBody::Cube { dim, half_width } => {
            Polytope::cuboid(&vec![-half_width; *dim], &vec![*half_width; *dim])
        }
        StandardBody::Box { lo, hi } => Polytope::cuboid(lo, hi),
        StandardBody::Simplex { dim } | StandardBody::NegSimplex { dim } => {
            let s = if matches!(b, StandardBody::Simplex { .. }) { 1.0 } else { -1.0 };
            let mut pts = vec![vec![0.0; *dim]];
            for i in 0..*dim {
                let mut e = vec![0.0; *dim];
                e[i] = s;
                pts.push(e);
            }
            Polytope::from_points(&pts, *dim)
        }
        StandardBody::CenteredSimplex { dim } => match dim {
            2 => regular_polygon(3, 1.0),
            3 => {
                let c = 1.0 / 3f64.sqrt();
                Polytope::from_points(
                    &[vec![c, c, c], vec![c, -c, -c], vec![-c, c, -c], vec![-c, -c, c]],
                    3,
                )
            }
            d => Err(Error::UnsupportedDimension(*d)),
        },
        StandardBody::RegularPolygon { k, circumradius } => regular_polygon(*k, *circumradius),
        StandardBody::RandomPolytope { dim, points, seed } => random_polytope(*dim, *points, *seed),
        StandardBody::Ball { dim, volume, resolution } => ball_approx(*dim, *volume, *resolution),
        StandardBody::Segment { a, b } => Polytope::interval(*a, *b),
        StandardBody::Vertices { dim, vertices } => Polytope::from_points(vertices, *dim),
    }
}

/// Parses a catalog entry from a name and a JSON parameter object.
pub fn make_named(name: &str, params: serde_json::Value) -> Result<Polytope> {
    if !CATALOG_NAMES.contains(&name) {
        return Err(Error::UnknownName(name.to_string()));
    }
    let mut obj = match params {
        serde_json::Value::Object(m) => m,
        serde_json::Value::Null => serde_json::Map::new(),
        _ => return Err(Error::Config("catalog parameters must be an object".into())),
    };
    obj.insert("name".into(), serde_json::Value::String(name.into()));
    let b: StandardBody = serde_json::from_value(serde_json::Value::Object(obj))?;
    make_standard(&b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::unit_vector;
    use approx::assert_relative_eq;

    fn square() -> OriginBody {
        OriginBody::new(Polytope::cuboid(&[-1.0, -1.0], &[1.0, 1.0]).unwrap()).unwrap()
    }

    #[test]
    fn support_values() {
        assert_relative_eq!(square().support(&[0.6, 0.8]), 1.4, epsilon = 1e-15);
        let diamond = make_standard(&StandardBody::RegularPolygon { k: 4, circumradius: 1.0 }).unwrap();
        assert_relative_eq!(diamond.support(&[1.0, 1.0]), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn gauge_values() {
        assert_relative_eq!(square().minkowski_functional(&[2.0, 0.0]), 2.0);
        assert_eq!(square().minkowski_functional(&[0.0, 0.0]), 0.0);
    }

    #[test]
    fn polar_of_square_is_diamond() {
        let p = square().polar();
        let d = Polytope::from_points(
            &[vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]],
            2,
        )
        .unwrap();
        assert!(p.same_vertices(&d, 1e-15));
    }

    #[test]
    fn polar_gauge_is_support() {
        let mut rng = substream(11, 0);
        for s in 0..20 {
            let k = OriginBody::new(random_polytope(2 + s % 2, 9, s as u64).unwrap()).unwrap();
            let kp = k.polar();
            let x = unit_vector(&mut rng, k.dim());
            assert_relative_eq!(kp.minkowski_functional(&x), k.support(&x), max_relative = 1e-12);
            let back = kp.polar();
            assert!(back.same_vertices(&k, 1e-9));
        }
    }

    #[test]
    fn polar_of_polygonal_disk() {
        let r = 2.5;
        let k = OriginBody::new(regular_polygon(64, r).unwrap()).unwrap();
        let kp = k.polar();
        for v in kp.vertices() {
            let rad = crate::geom::linalg::norm(v);
            assert!((rad * r - 1.0).abs() < 2e-3, "{rad}");
        }
    }

    #[test]
    fn p_sum_of_squares() {
        let s = p_sum_approx(&square(), &square(), 1.0, 64).unwrap();
        assert!(s.same_vertices(&Polytope::cuboid(&[-2.0, -2.0], &[2.0, 2.0]).unwrap(), 1e-12));
        for p in [1.0, 2.0, 3.0] {
            let s = p_sum_approx(&square(), &square(), p, 4096).unwrap();
            let ratio = s.volume() / 4.0;
            assert!((ratio - 2f64.powf(2.0 / p)).abs() / ratio < 2e-3, "p={p} ratio={ratio}");
        }
        assert!(p_sum_approx(&square(), &square(), 0.5, 16).is_err());
    }

    #[test]
    fn p_sum_of_disks() {
        let d = OriginBody::new(regular_polygon(2048, 1.0).unwrap()).unwrap();
        let s = p_sum_approx(&d, &d, 2.0, 2048).unwrap();
        for v in s.vertices() {
            let rad = crate::geom::linalg::norm(v);
            assert!((rad / 2f64.sqrt() - 1.0).abs() < 5e-3);
        }
    }

    #[test]
    fn p_sum_outer_approximations_are_nested() {
        let k = OriginBody::new(random_polytope(2, 7, 3).unwrap()).unwrap();
        let l = OriginBody::new(random_polytope(2, 6, 4).unwrap()).unwrap();
        let mut prev = f64::INFINITY;
        for n in [16, 32, 64, 128, 256, 512] {
            let v = p_sum_approx(&k, l.polytope(), 1.5, n).unwrap().volume();
            assert!(v <= prev * (1.0 + 1e-12));
            prev = v;
        }
    }

    #[test]
    fn p_sum_matches_on_grid() {
        let k = OriginBody::new(random_polytope(2, 7, 5).unwrap()).unwrap();
        let l = OriginBody::new(random_polytope(2, 7, 6).unwrap()).unwrap();
        let grid = direction_grid(2, 128);
        let s = p_sum_approx(&k, l.polytope(), 1.0, 128).unwrap();
        for u in &grid {
            assert_relative_eq!(s.support(u), k.support(u) + l.support(u), max_relative = 1e-9);
        }
    }

    #[test]
    fn catalog() {
        let sq = make_standard(&StandardBody::RegularPolygon { k: 4, circumradius: 1.0 }).unwrap();
        assert_relative_eq!(sq.volume(), 2.0, epsilon = 1e-15);
        let q = make_named("segment", serde_json::json!({"a": 0.0, "b": 1.0})).unwrap();
        assert_eq!(q.dim(), 1);
        assert!(matches!(make_named("dodecahedron", serde_json::Value::Null), Err(Error::UnknownName(_))));
        let a = random_polytope(2, 8, 42).unwrap();
        let b = random_polytope(2, 8, 42).unwrap();
        assert_eq!(a.vertices(), b.vertices());
        let ball = ball_approx(3, 2.0, 300).unwrap();
        assert_relative_eq!(ball.volume(), 2.0, max_relative = 1e-12);
    }

    #[test]
    fn membership_matches_gauge() {
        let mut rng = substream(5, 1);
        let k = OriginBody::new(random_polytope(3, 12, 9).unwrap()).unwrap();
        for _ in 0..500 {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.2..1.2)).collect();
            let g = k.minkowski_functional(&x);
            if (g - 1.0).abs() > 1e-9 {
                assert_eq!(g <= 1.0, k.contains(&x, 0.0));
            }
        }
    }

    /// Dense 3-D outer approximations put many polar vertices within a few
    /// hull tolerances of a neighbouring face's plane.
    #[test]
    fn dense_p_sum_hull_is_closed() {
        for s in 29..34u64 {
            let k = OriginBody::new(random_polytope(3, 10, s).unwrap()).unwrap();
            let l = random_polytope(3, 10, s + 1000).unwrap();
            for p in [1.0, 1.5, 2.0] {
                let b = p_sum_approx(&k, &l, p, 600).unwrap();
                let (v, f) = (b.vertices().len() as i64, b.facets().len() as i64);
                let e = b.facets().iter().map(|f| f.vertices.len() as i64).sum::<i64>() / 2;
                assert_eq!(v - e + f, 2, "seed {s}, p {p}");
                assert!(b.volume() > k.volume());
            }
        }
    }
}
