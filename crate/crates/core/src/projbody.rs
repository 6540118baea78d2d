//! Projection bodies.
//!
//! The `(L_p, Q)` polar projection body of `K ⊂ R^n` lives in the space of
//! `n × m` matrices `x = (x_1, ..., x_m)` and is given by its gauge
//!
//! ```text
//! ‖x‖^p = n V_p(K, x.Q^t),   h_{x.Q^t}(u) = h_Q(x^t u) = h_Q(<x_1,u>, ..., <x_m,u>)
//! ```
//!
//! Matrices are stored flat, column after column: `x[i*n + j] = (x_i)_j`.
//! With `p = 1` and `Q = [0, 1]` the body is the classical `Π°K`, whose
//! polar `ΠK` is the zonotope `Σ_F (area_F / 2) [-n_F, n_F]`.

use std::f64::consts::PI;

use crate::bodies::{OriginBody, Support};
use crate::error::{Error, Result};
use crate::geom::linalg::{add, dot, lex_cmp, norm, rank, scale, sub};
use crate::geom::Polytope;

/// A star body about the origin described by its radial function.
pub trait StarBody: Sync {
    fn dim(&self) -> usize;
    /// `ρ(θ) = max{r ≥ 0 : rθ ∈ body}` for a unit vector `θ`.
    fn radial(&self, theta: &[f64]) -> Result<f64>;
}

impl StarBody for OriginBody {
    fn dim(&self) -> usize {
        Polytope::dim(self)
    }
    fn radial(&self, theta: &[f64]) -> Result<f64> {
        Ok(1.0 / self.minkowski_functional(theta))
    }
}

/// Star body given directly by a radial function.
pub struct RadialFn<F> {
    pub dim: usize,
    pub rho: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> StarBody for RadialFn<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn radial(&self, theta: &[f64]) -> Result<f64> {
        Ok((self.rho)(theta))
    }
}

/// `h_{x.Q^t}(u) = h_Q(x^t u)` for a flat column-major `n × m` matrix `x`.
pub fn matrix_image_support(x: &[f64], q: &impl Support, u: &[f64]) -> f64 {
    let n = u.len();
    debug_assert_eq!(x.len(), n * q.dim());
    let xtu: Vec<f64> = x.chunks_exact(n).map(|col| dot(col, u)).collect();
    q.support(&xtu)
}

/// `Π°_{Q,p} K` in `R^{nm}`, evaluated through its radial function.
#[derive(Debug, Clone)]
pub struct StarBodySpec {
    k: OriginBody,
    q: Polytope,
    p: f64,
    /// `(n_F, h_K(n_F)^{1-p} area_F)` per facet of `K`.
    atoms: Vec<(Vec<f64>, f64)>,
}

impl StarBodySpec {
    /// `K` in the plane or space, `Q ⊂ R^m` containing the origin (possibly
    /// on its boundary), `p ≥ 1`, and `nm ≤ 6`.
    pub fn new(k: OriginBody, q: Polytope, p: f64) -> Result<Self> {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::InvalidP(p));
        }
        let (n, m) = (Polytope::dim(&k), q.dim());
        if !(2..=3).contains(&n) {
            return Err(Error::UnsupportedDimension(n));
        }
        if n * m > 6 {
            return Err(Error::UnsupportedDimension(n * m));
        }
        let depth = q.facets().iter().map(|f| f.offset).fold(f64::INFINITY, f64::min);
        if depth < -q.tolerance() {
            return Err(Error::OriginNotContained(depth));
        }
        let atoms = k.facets().iter().map(|f| (f.normal.clone(), f.offset.powf(1.0 - p) * f.area)).collect();
        Ok(StarBodySpec { k, q, p, atoms })
    }

    /// The classical polar projection body: `p = 1`, `Q = [0, 1]`.
    pub fn classical(k: OriginBody) -> Result<Self> {
        Self::new(k, Polytope::interval(0.0, 1.0)?, 1.0)
    }

    pub fn k(&self) -> &OriginBody {
        &self.k
    }

    pub fn q(&self) -> &Polytope {
        &self.q
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn n(&self) -> usize {
        Polytope::dim(&self.k)
    }

    pub fn m(&self) -> usize {
        self.q.dim()
    }

    /// Ambient dimension `nm`.
    pub fn ambient_dim(&self) -> usize {
        self.n() * self.m()
    }

    /// `n V_p(K, x.Q^t)` by the facet formula.
    pub fn n_vp(&self, x: &[f64]) -> f64 {
        self.atoms
            .iter()
            .map(|(nf, w)| matrix_image_support(x, &self.q, nf).max(0.0).powf(self.p) * w)
            .sum()
    }

    /// `‖x‖ = (n V_p(K, x.Q^t))^{1/p}`.
    pub fn minkowski_functional(&self, x: &[f64]) -> f64 {
        self.n_vp(x).powf(1.0 / self.p)
    }

    /// `ρ(θ) = (n V_p(K, θ.Q^t))^{-1/p}`.
    pub fn radial(&self, theta: &[f64]) -> Result<f64> {
        if theta.len() != self.ambient_dim() {
            return Err(Error::DimensionMismatch { expected: self.ambient_dim(), found: theta.len() });
        }
        let s = self.n_vp(theta);
        if !(s >= 1e-14) {
            return Err(Error::DegenerateDirection(s));
        }
        Ok(s.powf(-1.0 / self.p))
    }
}

impl StarBody for StarBodySpec {
    fn dim(&self) -> usize {
        self.ambient_dim()
    }
    fn radial(&self, theta: &[f64]) -> Result<f64> {
        StarBodySpec::radial(self, theta)
    }
}

/// `ρ_{Π°_{Q,p}K}(θ)`.
pub fn polar_proj_radial(spec: &StarBodySpec, theta: &[f64]) -> Result<f64> {
    spec.radial(theta)
}

/// Projection body `ΠK` as the zonotope `Σ_F (area_F/2)[-n_F, n_F]`, built
/// exactly by successive Minkowski sums after merging parallel generators.
pub fn classical_proj_body(k: &Polytope) -> Result<Polytope> {
    let dim = k.dim();
    let gens = zonotope_generators(k);
    let order = independent_first(&gens, dim)?;
    let mut pts = vec![vec![0.0; dim]];
    for (step, &i) in order.iter().enumerate() {
        let g = &gens[i];
        pts = pts.iter().flat_map(|v| [sub(v, g), add(v, g)]).collect();
        if step + 1 >= dim {
            pts = Polytope::from_points(&pts, dim)?.vertices().to_vec();
        }
    }
    Polytope::from_points(&pts, dim)
}

/// Support of `ΠK` by Cauchy's formula `h(u) = (1/2) Σ_F |<u, n_F>| area_F`.
pub fn cauchy_support(k: &Polytope, u: &[f64]) -> f64 {
    0.5 * k.facets().iter().map(|f| dot(u, &f.normal).abs() * f.area).sum::<f64>()
}

/// `Π°K`.
pub fn polar_proj_body(k: &Polytope) -> Result<Polytope> {
    Ok(OriginBody::new(classical_proj_body(k)?)?.polar().into_polytope())
}

/// `|K|^{n-1} · |Π°K|`, the affine invariant bounded by its value on balls.
pub fn petty_product(k: &Polytope) -> Result<f64> {
    Ok(k.volume().powi(k.dim() as i32 - 1) * polar_proj_body(k)?.volume())
}

/// Volume of the unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / n as f64 * unit_ball_volume(n - 2),
    }
}

/// `|Π°B|` for the Euclidean ball `B ⊂ R^n` of the given volume:
/// `ΠB_r = ω_{n-1} r^{n-1} B`, so `|Π°B_r| = ω_n / (ω_{n-1} r^{n-1})^n`.
pub fn polar_proj_ball_volume(n: usize, volume: f64) -> f64 {
    let wn = unit_ball_volume(n);
    let r = (volume / wn).powf(1.0 / n as f64);
    wn / (unit_ball_volume(n - 1) * r.powi(n as i32 - 1)).powi(n as i32)
}

/// The ball's Petty product `|B|^{n-1} · |Π°B|` (scale invariant).
pub fn ball_petty_product(n: usize) -> f64 {
    polar_proj_ball_volume(n, 1.0)
}

fn zonotope_generators(k: &Polytope) -> Vec<Vec<f64>> {
    let mut gens: Vec<Vec<f64>> = k
        .facets()
        .iter()
        .map(|f| {
            let g = scale(&f.normal, 0.5 * f.area);
            // orient each generator into a fixed half-space so parallel ones merge
            let first = g.iter().copied().find(|c| c.abs() > 1e-12 * norm(&g)).unwrap_or(1.0);
            if first < 0.0 {
                scale(&g, -1.0)
            } else {
                g
            }
        })
        .collect();
    gens.sort_by(|a, b| lex_cmp(a, b));
    let mut merged: Vec<Vec<f64>> = Vec::new();
    'outer: for g in gens {
        let gn = norm(&g);
        for m in merged.iter_mut() {
            let c = dot(m, &g) / (norm(m) * gn);
            if c > 1.0 - 1e-12 {
                *m = add(m, &g);
                continue 'outer;
            }
        }
        merged.push(g);
    }
    merged
}

fn independent_first(gens: &[Vec<f64>], dim: usize) -> Result<Vec<usize>> {
    let mut chosen: Vec<usize> = Vec::with_capacity(gens.len());
    for i in 0..gens.len() {
        if chosen.len() == dim {
            break;
        }
        let mut rows: Vec<Vec<f64>> = chosen.iter().map(|&j| scale(&gens[j], 1.0 / norm(&gens[j]))).collect();
        rows.push(scale(&gens[i], 1.0 / norm(&gens[i])));
        if rank(&rows, 1e-9) == rows.len() {
            chosen.push(i);
        }
    }
    if chosen.len() < dim {
        return Err(Error::DegenerateInput("facet normals do not span".into()));
    }
    let rest = (0..gens.len()).filter(|i| !chosen.contains(i)).collect::<Vec<_>>();
    chosen.extend(rest);
    Ok(chosen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bodies::{random_polytope, regular_polygon};
    use crate::geom::Direction;
    use crate::rng::{substream, unit_vector};
    use approx::assert_relative_eq;

    fn square() -> OriginBody {
        OriginBody::new(Polytope::cuboid(&[-1.0, -1.0], &[1.0, 1.0]).unwrap()).unwrap()
    }

    #[test]
    fn image_support_for_intervals() {
        let x = [0.3, -0.8];
        for u in [[1.0, 0.0], [0.6, 0.8], [-0.6, 0.8]] {
            let h01 = matrix_image_support(&x, &Polytope::interval(0.0, 1.0).unwrap(), &u);
            assert_eq!(h01, dot(&x, &u).max(0.0));
            let hsym = matrix_image_support(&x, &Polytope::interval(-1.0, 1.0).unwrap(), &u);
            assert_relative_eq!(hsym, dot(&x, &u).abs(), epsilon = 1e-15);
        }
    }

    #[test]
    fn image_support_matches_mapped_vertices() {
        let q = Polytope::cuboid(&[-1.0, -0.5], &[1.0, 2.0]).unwrap();
        let mut rng = substream(1, 1);
        for _ in 0..50 {
            let x = crate::rng::gaussian_vector(&mut rng, 6);
            let u = unit_vector(&mut rng, 3);
            // vertex images x q^t = q_1 x_1 + q_2 x_2
            let brute = q
                .vertices()
                .iter()
                .map(|qv| dot(&add(&scale(&x[0..3], qv[0]), &scale(&x[3..6], qv[1])), &u))
                .fold(f64::NEG_INFINITY, f64::max);
            assert_relative_eq!(matrix_image_support(&x, &q, &u), brute, epsilon = 1e-12);
        }
    }

    #[test]
    fn classical_radial_of_square_and_disk() {
        let spec = StarBodySpec::classical(square()).unwrap();
        assert_relative_eq!(spec.radial(&[1.0, 0.0]).unwrap(), 0.5, epsilon = 1e-15);
        let disk = OriginBody::new(regular_polygon(64, 1.0).unwrap()).unwrap();
        let spec = StarBodySpec::classical(disk).unwrap();
        for i in 0..32 {
            let a = 0.2 * i as f64;
            assert_relative_eq!(spec.radial(&[a.cos(), a.sin()]).unwrap(), 0.5, max_relative = 2e-3);
        }
    }

    #[test]
    fn radial_agrees_with_projection_lengths() {
        for s in 0..5u64 {
            let k = random_polytope(2, 8, s).unwrap();
            let spec = StarBodySpec::classical(OriginBody::new(k.clone()).unwrap()).unwrap();
            let polar = polar_proj_body(&k).unwrap();
            let polar = OriginBody::new(polar).unwrap();
            let mut rng = substream(s, 2);
            for _ in 0..20 {
                let th = unit_vector(&mut rng, 2);
                let proj = k.project(&Direction::new(&th).unwrap()).unwrap().volume();
                let rho = spec.radial(&th).unwrap();
                assert_relative_eq!(rho, 1.0 / proj, max_relative = 1e-9);
                assert_relative_eq!(rho, polar.radial(&th).unwrap(), max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn symmetric_q_gives_even_radial() {
        let k = OriginBody::new(random_polytope(2, 7, 3).unwrap()).unwrap();
        let spec = StarBodySpec::new(k, Polytope::cuboid(&[-1.0, -1.0], &[1.0, 1.0]).unwrap(), 1.5).unwrap();
        let mut rng = substream(4, 4);
        for _ in 0..20 {
            let th = unit_vector(&mut rng, 4);
            let neg: Vec<f64> = th.iter().map(|v| -v).collect();
            assert_eq!(spec.radial(&th).unwrap(), spec.radial(&neg).unwrap());
            let x = scale(&th, 2.5);
            assert_relative_eq!(spec.minkowski_functional(&x), 2.5 * spec.minkowski_functional(&th), max_relative = 1e-12);
        }
    }

    #[test]
    fn spec_validation() {
        let cube = OriginBody::new(Polytope::cuboid(&[-1.0; 3], &[1.0; 3]).unwrap()).unwrap();
        let q3 = Polytope::cuboid(&[-1.0; 3], &[1.0; 3]).unwrap();
        assert!(matches!(StarBodySpec::new(cube.clone(), q3, 1.0), Err(Error::UnsupportedDimension(9))));
        let off = Polytope::interval(0.5, 1.0).unwrap();
        assert!(matches!(StarBodySpec::new(cube.clone(), off, 1.0), Err(Error::OriginNotContained(_))));
        assert!(matches!(StarBodySpec::classical(cube.clone()).unwrap().radial(&[1.0, 0.0]), Err(Error::DimensionMismatch { .. })));
        let neg = Polytope::from_points(&[vec![0.0, 0.0], vec![-1.0, 0.0], vec![0.0, -1.0]], 2).unwrap();
        assert!(StarBodySpec::new(cube, neg, 2.0).is_ok());
    }

    #[test]
    fn square_projection_body() {
        let pk = classical_proj_body(square().polytope()).unwrap();
        assert!(pk.same_vertices(&Polytope::cuboid(&[-2.0, -2.0], &[2.0, 2.0]).unwrap(), 1e-12));
        let polar = polar_proj_body(square().polytope()).unwrap();
        assert_relative_eq!(polar.volume(), 0.5, epsilon = 1e-12);
        assert_relative_eq!(petty_product(square().polytope()).unwrap(), 2.0, epsilon = 1e-12);
        // [-1,1]³: ΠK = [-4,4]³, Π°K the cross-polytope of radius 1/4
        let cube = Polytope::cuboid(&[-1.0; 3], &[1.0; 3]).unwrap();
        assert_relative_eq!(polar_proj_body(&cube).unwrap().volume(), 1.0 / 48.0, epsilon = 1e-14);
        assert_relative_eq!(petty_product(&cube).unwrap(), 64.0 / 48.0, epsilon = 1e-12);
        assert_relative_eq!(petty_product(&cube.scaled(0.3).unwrap()).unwrap(), 64.0 / 48.0, epsilon = 1e-12);
    }

    #[test]
    fn zonotope_matches_cauchy_formula() {
        for s in 0..6u64 {
            let dim = 2 + (s % 2) as usize;
            let k = random_polytope(dim, 9, 70 + s).unwrap();
            let z = classical_proj_body(&k).unwrap();
            let mut rng = substream(s, 5);
            for _ in 0..1000 {
                let u = unit_vector(&mut rng, dim);
                assert_relative_eq!(z.support(&u), cauchy_support(&k, &u), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn ball_values() {
        assert_relative_eq!(unit_ball_volume(2), PI, epsilon = 1e-14);
        assert_relative_eq!(unit_ball_volume(3), 4.0 * PI / 3.0, epsilon = 1e-14);
        assert_relative_eq!(polar_proj_ball_volume(2, 4.0), PI * PI / 16.0, epsilon = 1e-14);
        assert_relative_eq!(ball_petty_product(2), PI * PI / 4.0, epsilon = 1e-14);
        // unit 3-ball: ΠB = πB, |Π°B| = (4π/3) / π³
        assert_relative_eq!(polar_proj_ball_volume(3, 4.0 * PI / 3.0), 4.0 / (3.0 * PI * PI), epsilon = 1e-14);
        assert_relative_eq!(ball_petty_product(3), 64.0 / 27.0, epsilon = 1e-13);
    }
}
