//! Steiner symmetrization, shadow systems and symmetrization flows.
//!
//! Along a direction `u` every line `y + R u` (with `y ∈ u^⊥`) meets `K` in a
//! fiber `[a(y), b(y)]`. The shadow system is
//!
//! ```text
//! [K_u(t)]_y = [ (1+t)/2 a - (1-t)/2 b , (1+t)/2 b - (1-t)/2 a ]
//! ```
//!
//! so `K_u(1) = K`, `K_u(0)` is the Steiner symmetral and `K_u(-1)` the
//! reflection of `K` in `u^⊥`. Both endpoint functions are piecewise linear
//! over the projection, and the vertices of every `K_u(t)` lie over the
//! candidate points collected by [`ShadowSystem::new`].

use crate::bodies::{direction_grid, equal_volume_ball};
use crate::error::{Error, Result};
use crate::geom::linalg::{axpy, complement_basis, dot, scale, sub};
use crate::geom::{Direction, Polytope};
use crate::rng::{substream, unit_vector};

/// Facets whose normal makes `|<n, u>|` at most this are treated as
/// parallel to `u` when bounding a fiber.
const VERTICAL: f64 = 1e-9;

/// Vertex budget of a flow iterate before it is thinned.
const FLOW_VERTEX_CAP_2D: usize = 256;
const FLOW_VERTEX_CAP_3D: usize = 200;

/// A finite set of points moving along `u` with constant speeds:
/// `K(t) = conv{x_i + t α_i u}`.
#[derive(Debug, Clone)]
pub struct LinearParameterSystem {
    u: Direction,
    points: Vec<Vec<f64>>,
    speeds: Vec<f64>,
}

impl LinearParameterSystem {
    pub fn new(u: Direction, points: Vec<Vec<f64>>, speeds: Vec<f64>) -> Result<Self> {
        if points.len() != speeds.len() {
            return Err(Error::DimensionMismatch { expected: points.len(), found: speeds.len() });
        }
        if let Some(p) = points.iter().find(|p| p.len() != u.dim()) {
            return Err(Error::DimensionMismatch { expected: u.dim(), found: p.len() });
        }
        Ok(LinearParameterSystem { u, points, speeds })
    }

    pub fn direction(&self) -> &Direction {
        &self.u
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn speeds(&self) -> &[f64] {
        &self.speeds
    }

    pub fn at(&self, t: f64) -> Result<Polytope> {
        let pts: Vec<Vec<f64>> =
            self.points.iter().zip(&self.speeds).map(|(x, &a)| axpy(x, t * a, &self.u)).collect();
        Polytope::from_points(&pts, self.u.dim())
    }
}

/// Fiber of `K` over the point `y ∈ u^⊥`: `K ∩ (y + R u) = y + [a, b] u`.
#[derive(Debug, Clone, PartialEq)]
pub struct Fiber {
    pub y: Vec<f64>,
    pub a: f64,
    pub b: f64,
}

impl Fiber {
    pub fn length(&self) -> f64 {
        self.b - self.a
    }
}

/// Shadow system of a polytope along a direction, with the fibers over all
/// breakpoints of the endpoint functions cached.
#[derive(Debug, Clone)]
pub struct ShadowSystem {
    base: Polytope,
    u: Direction,
    fibers: Vec<Fiber>,
}

impl ShadowSystem {
    /// Collects the candidate points `y`: projections of vertices and, in
    /// space, crossings of projected edges (where a lower and an upper
    /// envelope piece can meet), then solves the fiber program over each.
    pub fn new(k: &Polytope, u: &Direction) -> Result<Self> {
        if k.dim() != u.dim() {
            return Err(Error::DimensionMismatch { expected: k.dim(), found: u.dim() });
        }
        if k.dim() < 2 {
            return Err(Error::UnsupportedDimension(k.dim()));
        }
        let mut cands: Vec<(Vec<f64>, f64, f64)> = k
            .vertices()
            .iter()
            .map(|v| {
                let s = dot(v, u);
                (axpy(v, -s, u), s, s)
            })
            .collect();
        if k.dim() == 3 {
            cands.extend(edge_crossings(k, u));
        }
        let fibers = cands.into_iter().map(|(y, lo, hi)| fiber(k, u, y, lo, hi)).collect();
        Ok(ShadowSystem { base: k.clone(), u: u.clone(), fibers })
    }

    pub fn base(&self) -> &Polytope {
        &self.base
    }

    pub fn direction(&self) -> &Direction {
        &self.u
    }

    pub fn fibers(&self) -> &[Fiber] {
        &self.fibers
    }

    /// `K_u(t)`, defined for `t ∈ [-1, 1]`.
    pub fn at(&self, t: f64) -> Result<Polytope> {
        if !(-1.0..=1.0).contains(&t) {
            return Err(Error::OutOfRange(t));
        }
        self.parameter_system().at(t)
    }

    /// The same family as a linear parameter system: each fiber contributes
    /// its two symmetric endpoints `y ± ℓ/2 u`, both moving with speed
    /// `(a + b)/2`.
    pub fn parameter_system(&self) -> LinearParameterSystem {
        let mut points = Vec::with_capacity(2 * self.fibers.len());
        let mut speeds = Vec::with_capacity(2 * self.fibers.len());
        for f in &self.fibers {
            let half = 0.5 * f.length();
            let mid = 0.5 * (f.a + f.b);
            points.push(axpy(&f.y, -half, &self.u));
            points.push(axpy(&f.y, half, &self.u));
            speeds.push(mid);
            speeds.push(mid);
        }
        LinearParameterSystem { u: self.u.clone(), points, speeds }
    }
}

fn fiber(k: &Polytope, u: &[f64], y: Vec<f64>, lo: f64, hi: f64) -> Fiber {
    let mut a = f64::NEG_INFINITY;
    let mut b = f64::INFINITY;
    for f in k.facets() {
        let c = dot(&f.normal, u);
        if c.abs() <= VERTICAL {
            continue;
        }
        let r = (f.offset - dot(&f.normal, &y)) / c;
        if c > 0.0 {
            b = b.min(r);
        } else {
            a = a.max(r);
        }
    }
    // `lo..hi` is known to lie in the fiber; rounding must not cut it off.
    Fiber { y, a: a.min(lo), b: b.max(hi) }
}

/// Crossings of edge projections on `u^⊥`, with the heights of the two edge
/// points above each crossing.
fn edge_crossings(k: &Polytope, u: &[f64]) -> Vec<(Vec<f64>, f64, f64)> {
    let basis = complement_basis(u);
    let v = k.vertices();
    let tol = k.tolerance();
    let flat: Vec<[f64; 2]> = v.iter().map(|x| [dot(&basis[0], x), dot(&basis[1], x)]).collect();
    let edges: Vec<(usize, usize)> = k
        .edges()
        .into_iter()
        .filter(|&(i, j)| (flat[i][0] - flat[j][0]).hypot(flat[i][1] - flat[j][1]) > tol)
        .collect();
    let mut out = Vec::new();
    for (ei, &(i, j)) in edges.iter().enumerate() {
        let (p, dp) = (flat[i], [flat[j][0] - flat[i][0], flat[j][1] - flat[i][1]]);
        for &(k2, l2) in &edges[ei + 1..] {
            if k2 == i || k2 == j || l2 == i || l2 == j {
                continue;
            }
            let (q, dq) = (flat[k2], [flat[l2][0] - flat[k2][0], flat[l2][1] - flat[k2][1]]);
            let den = dp[0] * dq[1] - dp[1] * dq[0];
            let scale_ = (dp[0].hypot(dp[1])) * (dq[0].hypot(dq[1]));
            if den.abs() <= 1e-12 * scale_ {
                continue;
            }
            let w = [q[0] - p[0], q[1] - p[1]];
            let alpha = (w[0] * dq[1] - w[1] * dq[0]) / den;
            let beta = (w[0] * dp[1] - w[1] * dp[0]) / den;
            if !(alpha > 0.0 && alpha < 1.0 && beta > 0.0 && beta < 1.0) {
                continue;
            }
            let x1 = axpy(&v[i], alpha, &sub(&v[j], &v[i]));
            let x2 = axpy(&v[k2], beta, &sub(&v[l2], &v[k2]));
            let (s1, s2) = (dot(&x1, u), dot(&x2, u));
            out.push((axpy(&x1, -s1, u), s1.min(s2), s1.max(s2)));
        }
    }
    out
}

/// Steiner symmetral `S^u K`.
pub fn steiner(k: &Polytope, u: &Direction) -> Result<Polytope> {
    ShadowSystem::new(k, u)?.at(0.0)
}

/// `K_u(t)` for a prepared shadow system.
pub fn shadow_system_at(s: &ShadowSystem, t: f64) -> Result<Polytope> {
    s.at(t)
}

/// One iterate of a symmetrization flow.
#[derive(Debug, Clone)]
pub struct FlowStep {
    pub body: Polytope,
    pub direction: Vec<f64>,
    /// Hausdorff distance to the origin-centred ball of equal volume.
    pub hausdorff: f64,
}

/// Iterated Steiner symmetrization in seeded uniform random directions.
///
/// Symmetrals of polytopes roughly double their vertex count, so once an
/// iterate exceeds a fixed budget it is replaced by the hull of the vertices
/// exposed by a deterministic direction grid and rescaled about the origin
/// to its volume before thinning. The thinning error is far below the
/// distances being tracked.
pub fn symmetrization_flow(k: &Polytope, n_steps: usize, seed: u64) -> Result<Vec<FlowStep>> {
    if n_steps == 0 {
        return Err(Error::OutOfRange(0.0));
    }
    let dim = k.dim();
    let ball = equal_volume_ball(k)?;
    let (cap, grid) = if dim == 2 {
        (FLOW_VERTEX_CAP_2D, direction_grid(2, FLOW_VERTEX_CAP_2D))
    } else {
        (FLOW_VERTEX_CAP_3D, direction_grid(3, FLOW_VERTEX_CAP_3D))
    };
    let mut rng = substream(seed, 0xf10);
    let mut cur = k.clone();
    let mut out = Vec::with_capacity(n_steps);
    for _ in 0..n_steps {
        let u = unit_vector(&mut rng, dim);
        let mut next = steiner(&cur, &Direction::new(&u)?)?;
        if next.vertices().len() > cap {
            next = thin(&next, &grid)?;
        }
        let hausdorff = next.hausdorff_distance(&ball);
        out.push(FlowStep { body: next.clone(), direction: u, hausdorff });
        cur = next;
    }
    Ok(out)
}

fn thin(p: &Polytope, grid: &[Vec<f64>]) -> Result<Polytope> {
    let mut keep: Vec<usize> = grid
        .iter()
        .map(|d| {
            (0..p.vertices().len())
                .max_by(|&i, &j| dot(&p.vertices()[i], d).total_cmp(&dot(&p.vertices()[j], d)))
                .expect("nonempty")
        })
        .collect();
    keep.sort_unstable();
    keep.dedup();
    let pts: Vec<Vec<f64>> = keep.iter().map(|&i| p.vertices()[i].clone()).collect();
    let q = Polytope::from_points(&pts, p.dim())?;
    let r = (p.volume() / q.volume()).powf(1.0 / p.dim() as f64);
    q.map_vertices(|v| scale(v, r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bodies::{random_polytope, regular_polygon};
    use crate::geom::linalg::norm;

    fn dir(v: &[f64]) -> Direction {
        Direction::new(v).unwrap()
    }

    #[test]
    fn unit_square_symmetral() {
        let k = Polytope::cuboid(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let s = steiner(&k, &dir(&[0.0, 1.0])).unwrap();
        let want = Polytope::cuboid(&[0.0, -0.5], &[1.0, 0.5]).unwrap();
        assert!(s.same_vertices(&want, 1e-12));
    }

    #[test]
    fn triangle_symmetral_fiber_lengths() {
        let k = Polytope::from_points(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]], 2).unwrap();
        let s = steiner(&k, &dir(&[0.0, 1.0])).unwrap();
        let want = Polytope::from_points(&[vec![0.0, 0.5], vec![0.0, -0.5], vec![1.0, 0.0]], 2).unwrap();
        assert!(s.same_vertices(&want, 1e-12));
        for i in 1..20 {
            let x = i as f64 / 20.0;
            // chord of the triangle over x is 1 - x; the symmetral's must match
            let top = (0..=4000)
                .map(|j| j as f64 / 4000.0)
                .take_while(|&y| s.contains(&[x, y], 1e-12))
                .last()
                .unwrap();
            assert!((2.0 * top - (1.0 - x)).abs() <= 5e-4);
        }
    }

    #[test]
    fn volume_is_preserved() {
        for s in 0..100u64 {
            let dim = 2 + (s % 2) as usize;
            let k = random_polytope(dim, 6 + (s % 5) as usize, s).unwrap();
            let mut rng = substream(s, 3);
            let u = dir(&unit_vector(&mut rng, dim));
            let sym = steiner(&k, &u).unwrap();
            let rel = (sym.volume() - k.volume()).abs() / k.volume();
            assert!(rel <= 1e-12, "seed {s}: {rel:e}");
        }
    }

    #[test]
    fn tetrahedron_needs_edge_crossings() {
        let k = Polytope::from_points(
            &[vec![1.0, 1.0, 1.0], vec![1.0, -1.0, -1.0], vec![-1.0, 1.0, -1.0], vec![-1.0, -1.0, 1.0]],
            3,
        )
        .unwrap();
        let s = steiner(&k, &dir(&[0.0, 0.0, 1.0])).unwrap();
        assert!((s.volume() - k.volume()).abs() <= 1e-12 * k.volume());
        let sys = ShadowSystem::new(&k, &dir(&[0.0, 0.0, 1.0])).unwrap();
        let only_vertices: Vec<Vec<f64>> = k
            .vertices()
            .iter()
            .flat_map(|v| {
                let f = sys.fibers().iter().find(|f| norm(&sub(&f.y, &[v[0], v[1], 0.0])) < 1e-12).unwrap();
                [vec![v[0], v[1], -f.length() / 2.0], vec![v[0], v[1], f.length() / 2.0]]
            })
            .collect();
        // the projected-vertex construction alone collapses to a flat body
        assert!(Polytope::from_points(&only_vertices, 3).is_err());
    }

    #[test]
    fn endpoints_of_the_shadow_system() {
        for s in 0..10u64 {
            let dim = 2 + (s % 2) as usize;
            let k = random_polytope(dim, 8, s).unwrap();
            let mut rng = substream(s, 9);
            let u = dir(&unit_vector(&mut rng, dim));
            let sys = ShadowSystem::new(&k, &u).unwrap();
            assert!(sys.at(1.0).unwrap().same_vertices(&k, 1e-12));
            assert!(sys.at(-1.0).unwrap().same_vertices(&k.reflect(&u), 1e-12));
            assert!(sys.at(0.0).unwrap().same_vertices(&steiner(&k, &u).unwrap(), 1e-12));
            let plus = sys.at(0.3).unwrap();
            let minus = sys.at(-0.3).unwrap();
            assert!(minus.hausdorff_distance(&plus.reflect(&u)) <= 1e-12);
            for t in crate::scan::t_grid(41) {
                let v = sys.at(t).unwrap().volume();
                assert!((v - k.volume()).abs() <= 1e-12 * k.volume());
            }
            assert!(matches!(sys.at(1.5), Err(Error::OutOfRange(_))));
        }
    }

    #[test]
    fn steiner_is_idempotent() {
        for s in 0..10u64 {
            let dim = 2 + (s % 2) as usize;
            let k = random_polytope(dim, 9, 40 + s).unwrap();
            let mut rng = substream(s, 11);
            let u = dir(&unit_vector(&mut rng, dim));
            let once = steiner(&k, &u).unwrap();
            let twice = steiner(&once, &u).unwrap();
            assert!(once.hausdorff_distance(&twice) <= 1e-9 * k.diameter());
        }
    }

    #[test]
    fn ball_is_nearly_fixed_by_the_flow() {
        let b = regular_polygon(64, 1.0).unwrap();
        let start = b.hausdorff_distance(&equal_volume_ball(&b).unwrap());
        let steps = symmetrization_flow(&b, 10, 5).unwrap();
        for st in &steps {
            assert!(st.hausdorff <= 0.02 + start, "{}", st.hausdorff);
            assert!((st.body.volume() - b.volume()).abs() <= 1e-9 * b.volume());
        }
    }

    #[test]
    fn parameter_system_rejects_mismatch() {
        assert!(LinearParameterSystem::new(dir(&[1.0, 0.0]), vec![vec![0.0, 0.0]], vec![]).is_err());
    }
}
