//! Mixed volumes from surface area measures, `L_p` mixed volumes and `L_p`
//! surface area, with a finite-difference oracle for `V_p`.
//!
//! For a polytope `K` with facets `F`, the surface area measure is the
//! atomic measure `Σ_F area_F δ_{n_F}` and
//!
//! ```text
//! V(K[n-1], L) = (1/n) Σ_F h_L(n_F) area_F
//! V_p(K, L)    = (1/n) Σ_F h_L(n_F)^p h_K(n_F)^{1-p} area_F
//! ```

use crate::bodies::{direction_grid, p_sum_on_directions, OriginBody, Support};
use crate::error::{Error, Result};
use crate::geom::linalg::add;
use crate::geom::Polytope;

/// Atoms `(normal, facet measure)` of the surface area measure of a polytope.
#[derive(Debug, Clone)]
pub struct SurfaceAreaMeasure {
    pub atoms: Vec<(Vec<f64>, f64)>,
}

impl SurfaceAreaMeasure {
    pub fn of(k: &Polytope) -> Self {
        SurfaceAreaMeasure { atoms: k.facets().iter().map(|f| (f.normal.clone(), f.area)).collect() }
    }

    pub fn total(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    /// `∫ g dS`.
    pub fn integrate(&self, g: impl Fn(&[f64]) -> f64) -> f64 {
        self.atoms.iter().map(|(n, w)| g(n) * w).sum()
    }
}

/// `V(K[n-1], L)` for a full-dimensional `K` and any compact convex `L`.
pub fn mixed_volume_first(k: &Polytope, l: &impl Support) -> f64 {
    assert_eq!(k.dim(), l.dim());
    k.facets().iter().map(|f| l.support(&f.normal) * f.area).sum::<f64>() / k.dim() as f64
}

fn check_p(p: f64) -> Result<()> {
    if p >= 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidP(p))
    }
}

/// `V_p(K, L)` by the facet formula. `L` must contain the origin.
pub fn lp_mixed_volume(k: &OriginBody, l: &impl Support, p: f64) -> Result<f64> {
    check_p(p)?;
    let tol = k.tolerance();
    let mut s = 0.0;
    for f in k.facets() {
        if f.offset <= tol {
            return Err(Error::OriginNotInterior(f.offset));
        }
        let hl = l.support(&f.normal);
        if hl < -tol {
            return Err(Error::OriginNotContained(hl));
        }
        s += hl.max(0.0).powf(p) * f.offset.powf(1.0 - p) * f.area;
    }
    Ok(s / k.dim() as f64)
}

/// `S_p(K) = V_p(K, B)`; uses `h_B ≡ 1` on unit normals.
pub fn lp_surface_area(k: &OriginBody, p: f64) -> Result<f64> {
    check_p(p)?;
    let tol = k.tolerance();
    let mut s = 0.0;
    for f in k.facets() {
        if f.offset <= tol {
            return Err(Error::OriginNotInterior(f.offset));
        }
        s += f.offset.powf(1.0 - p) * f.area;
    }
    Ok(s / k.dim() as f64)
}

/// Finite-difference estimate of `V_p(K, L)` from p-sum volumes.
///
/// With `D(ε) = (p/n) (|K +_p ε·L|_N - |K|_N) / ε` this returns the
/// extrapolated quotient `2 D(ε/2) - D(ε)`. Here `|·|_N` is the volume of the
/// outer approximation cut out by the `n_dirs` grid directions together with
/// the facet normals of `K`. Including those normals makes `|K|_N = |K|`, so
/// the kinks of `h_K^{1-p}` do not turn into a first-order grid error. The
/// leading `ε` term of `D` scales like `(h_L / h_K)^p` and the extrapolation
/// cancels it, leaving `O(ε²)`.
pub fn lp_mixed_volume_fd_oracle(
    k: &OriginBody,
    l: &impl Support,
    p: f64,
    eps: f64,
    n_dirs: usize,
) -> Result<f64> {
    check_p(p)?;
    if !(1e-6..=1e-2).contains(&eps) {
        return Err(Error::InvalidEps(eps));
    }
    let n = k.dim() as f64;
    let mut dirs = direction_grid(k.dim(), n_dirs);
    dirs.extend(k.facets().iter().map(|f| f.normal.clone()));
    let base = p_sum_on_directions(k, l, p, 0.0, &dirs)?.volume();
    let quotient = |e: f64| -> Result<f64> {
        let grown = p_sum_on_directions(k, l, p, e, &dirs)?.volume();
        Ok(p / n * (grown - base) / e)
    };
    Ok(2.0 * quotient(0.5 * eps)? - quotient(eps)?)
}

/// Minkowski sum of two polytopes (hull of pairwise vertex sums).
pub fn minkowski_sum(a: &Polytope, b: &Polytope) -> Result<Polytope> {
    let pts: Vec<Vec<f64>> =
        a.vertices().iter().flat_map(|x| b.vertices().iter().map(move |y| add(x, y))).collect();
    Polytope::from_points(&pts, a.dim())
}

/// `V(A, B)` in the plane by polarization: `(|A+B| - |A| - |B|) / 2`.
pub fn mixed_volume_2(a: &Polytope, b: &Polytope) -> Result<f64> {
    Ok(0.5 * (minkowski_sum(a, b)?.volume() - a.volume() - b.volume()))
}

/// `V(A, B, C)` in space by polarization of the trilinear form:
/// `V((A+B)[2], C) = V(A[2], C) + 2 V(A, B, C) + V(B[2], C)`, so only `A+B`
/// is hulled and the rest is the facet formula.
pub fn mixed_volume_3(a: &Polytope, b: &Polytope, c: &Polytope) -> Result<f64> {
    let ab = minkowski_sum(a, b)?;
    Ok(0.5 * (mixed_volume_first(&ab, c) - mixed_volume_first(a, c) - mixed_volume_first(b, c)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bodies::{random_polytope, regular_polygon, Segment};
    use approx::assert_relative_eq;

    fn ob(p: Polytope) -> OriginBody {
        OriginBody::new(p).unwrap()
    }

    fn square() -> OriginBody {
        ob(Polytope::cuboid(&[-1.0, -1.0], &[1.0, 1.0]).unwrap())
    }

    #[test]
    fn first_mixed_volume_with_segment() {
        let k = Polytope::cuboid(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let v = mixed_volume_first(&k, &Segment::from_origin(&[1.0, 0.0]));
        assert_relative_eq!(v, 0.5, epsilon = 1e-15);
        for i in 0..12 {
            let th = 0.37 * i as f64;
            let u = [th.cos(), th.sin()];
            let v = mixed_volume_first(square().polytope(), &Segment::from_origin(&u));
            let proj = square().project(&crate::geom::Direction::new(&u).unwrap()).unwrap().volume();
            assert_relative_eq!(v, proj / 2.0, max_relative = 1e-12);
            assert_relative_eq!(v, u[0].abs() + u[1].abs(), max_relative = 1e-12);
        }
    }

    #[test]
    fn first_mixed_volume_of_self_is_volume() {
        for s in 0..10 {
            let k = random_polytope(2 + s % 2, 10, s as u64).unwrap();
            assert_relative_eq!(mixed_volume_first(&k, &k), k.volume(), max_relative = 1e-12);
        }
    }

    #[test]
    fn vp_of_self_and_of_inscribed_disk() {
        let disk = regular_polygon(64, 1.0).unwrap();
        for p in [1.0, 1.5, 2.0] {
            assert_relative_eq!(lp_mixed_volume(&square(), square().polytope(), p).unwrap(), 4.0, epsilon = 1e-12);
            // h_disk(±e_i) = 1 because the 64-gon has vertices on the axes.
            assert_relative_eq!(lp_mixed_volume(&square(), &disk, p).unwrap(), 4.0, epsilon = 1e-12);
            assert_relative_eq!(lp_surface_area(&square(), p).unwrap(), 4.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn v1_agrees_with_first_mixed_volume() {
        for s in 0..10u64 {
            let k = ob(random_polytope(2, 8, s).unwrap());
            let l = random_polytope(2, 8, 100 + s).unwrap();
            assert_relative_eq!(
                lp_mixed_volume(&k, &l, 1.0).unwrap(),
                mixed_volume_first(&k, &l),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn surface_area_identities() {
        for s in 0..10u64 {
            let k = ob(random_polytope(2, 9, s).unwrap());
            assert_relative_eq!(lp_surface_area(&k, 1.0).unwrap(), k.surface_area() / 2.0, max_relative = 1e-12);
            let k2 = ob(k.scaled(2.0).unwrap());
            for p in [1.0, 1.5, 2.0] {
                assert_relative_eq!(
                    lp_surface_area(&k2, p).unwrap(),
                    2f64.powf(2.0 - p) * lp_surface_area(&k, p).unwrap(),
                    max_relative = 1e-12
                );
            }
        }
    }

    #[test]
    fn linearity_in_second_argument() {
        for s in 0..5u64 {
            let k = random_polytope(2, 8, s).unwrap();
            let a = random_polytope(2, 6, 10 + s).unwrap();
            let b = random_polytope(2, 7, 20 + s).unwrap();
            let ab = minkowski_sum(&a, &b).unwrap();
            assert_relative_eq!(
                mixed_volume_first(&k, &ab),
                mixed_volume_first(&k, &a) + mixed_volume_first(&k, &b),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn polarization_matches_facet_formula() {
        for s in 0..5u64 {
            let a = random_polytope(2, 8, s).unwrap();
            let b = random_polytope(2, 8, 50 + s).unwrap();
            assert_relative_eq!(mixed_volume_2(&a, &b).unwrap(), mixed_volume_first(&a, &b), max_relative = 1e-10);
            let a3 = random_polytope(3, 10, s).unwrap();
            let b3 = random_polytope(3, 10, 50 + s).unwrap();
            // V(A, A, B) = V(A[2], B)
            assert_relative_eq!(
                mixed_volume_3(&a3, &a3, &b3).unwrap(),
                mixed_volume_first(&a3, &b3),
                max_relative = 1e-9
            );
            assert_relative_eq!(mixed_volume_3(&a3, &a3, &a3).unwrap(), a3.volume(), max_relative = 1e-9);
        }
    }

    #[test]
    fn trilinear_polarization_matches_volume_polarization() {
        for s in 0..5u64 {
            let (a, b, c) = (
                random_polytope(3, 9, s).unwrap(),
                random_polytope(3, 9, 20 + s).unwrap(),
                random_polytope(3, 9, 40 + s).unwrap(),
            );
            let ab = minkowski_sum(&a, &b).unwrap();
            let ac = minkowski_sum(&a, &c).unwrap();
            let bc = minkowski_sum(&b, &c).unwrap();
            let abc = minkowski_sum(&ab, &c).unwrap();
            let seven = (abc.volume() - ab.volume() - ac.volume() - bc.volume() + a.volume() + b.volume() + c.volume()) / 6.0;
            assert_relative_eq!(mixed_volume_3(&a, &b, &c).unwrap(), seven, max_relative = 1e-10);
            assert_relative_eq!(mixed_volume_3(&a, &b, &c).unwrap(), mixed_volume_3(&c, &a, &b).unwrap(), max_relative = 1e-10);
        }
    }

    #[test]
    fn oracle_on_square() {
        let v = lp_mixed_volume_fd_oracle(&square(), square().polytope(), 1.0, 1e-4, 64).unwrap();
        assert_relative_eq!(v, 4.0, max_relative = 1e-3);
        assert!(matches!(
            lp_mixed_volume_fd_oracle(&square(), square().polytope(), 1.0, 0.5, 64),
            Err(Error::InvalidEps(_))
        ));
    }

    #[test]
    fn oracle_matches_facet_formula() {
        for s in 0..20u64 {
            let k = ob(random_polytope(2, 7, s).unwrap());
            let l = random_polytope(2, 7, 1000 + s).unwrap();
            for p in [1.0, 1.5, 2.0] {
                let exact = lp_mixed_volume(&k, &l, p).unwrap();
                let fd = lp_mixed_volume_fd_oracle(&k, &l, p, 1e-4, 2048).unwrap();
                assert!((fd - exact).abs() <= 1e-3 * exact, "seed {s} p {p}: {fd} vs {exact}");
            }
        }
    }

    #[test]
    fn origin_checks() {
        let off = ob(random_polytope(2, 8, 1).unwrap());
        let far = Polytope::cuboid(&[2.0, 2.0], &[3.0, 3.0]).unwrap();
        assert!(matches!(lp_mixed_volume(&off, &far, 1.5), Err(Error::OriginNotContained(_))));
        assert!(matches!(lp_surface_area(&off, 0.5), Err(Error::InvalidP(_))));
    }
}
