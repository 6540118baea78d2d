//! Rotationally invariant measures `dν = φ(|x|) dx` and their values on star
//! bodies.
//!
//! By rotational invariance `ν(RB) = σ_{d-1} ∫_0^R φ(r) r^{d-1} dr`, and for a
//! star body with radial function `ρ`
//!
//! ```text
//! ν(L) = E_θ[ ν(ρ(θ) B) ]
//! ```
//!
//! with `θ` uniform on the sphere. The expectation is estimated by Monte
//! Carlo over antithetic direction pairs `(θ, -θ)`.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ConcavityWitness, Error, Result};
use crate::projbody::{unit_ball_volume, StarBody};
use crate::rng::{substream, unit_vector};

/// Direction pairs per Monte-Carlo batch; each batch owns one substream.
pub const BATCH_PAIRS: usize = 512;

const QUAD_ABS_TOL: f64 = 1e-10;
const SPOT_CHECKS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureKind {
    Lebesgue,
    /// Standard Gaussian probability measure.
    Gaussian,
    /// Density `(1 + r²)^{-β}` (unnormalized).
    GeneralizedCauchy { beta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialMeasure {
    pub kind: MeasureKind,
    pub dim: usize,
}

impl RadialMeasure {
    pub fn new(kind: MeasureKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::UnsupportedDimension(0));
        }
        if let MeasureKind::GeneralizedCauchy { beta } = kind {
            if !(beta > 0.0 && beta.is_finite()) {
                return Err(Error::InvalidDensity(format!("beta = {beta} must be positive")));
            }
        }
        Ok(RadialMeasure { kind, dim })
    }

    pub fn lebesgue(dim: usize) -> Self {
        RadialMeasure { kind: MeasureKind::Lebesgue, dim }
    }

    pub fn gaussian(dim: usize) -> Self {
        RadialMeasure { kind: MeasureKind::Gaussian, dim }
    }

    /// Profile `φ(r)`.
    pub fn density(&self, r: f64) -> f64 {
        match self.kind {
            MeasureKind::Lebesgue => 1.0,
            MeasureKind::Gaussian => {
                (2.0 * std::f64::consts::PI).powf(-(self.dim as f64) / 2.0) * (-0.5 * r * r).exp()
            }
            MeasureKind::GeneralizedCauchy { beta } => (1.0 + r * r).powf(-beta),
        }
    }

    pub fn density_at(&self, x: &[f64]) -> f64 {
        self.density(x.iter().map(|v| v * v).sum::<f64>().sqrt())
    }

    /// Declared concavity exponent of the density; `+∞` for Lebesgue.
    pub fn gamma(&self) -> f64 {
        match self.kind {
            MeasureKind::Lebesgue => f64::INFINITY,
            MeasureKind::Gaussian => 0.0,
            MeasureKind::GeneralizedCauchy { beta } => -1.0 / beta,
        }
    }

    /// `σ_{d-1} = d ω_d`.
    pub fn sphere_area(&self) -> f64 {
        self.dim as f64 * unit_ball_volume(self.dim)
    }

    /// `ν(RB)`.
    pub fn radial_mass(&self, r: f64) -> f64 {
        if !(r > 0.0) {
            return 0.0;
        }
        let d = self.dim as f64;
        match self.kind {
            MeasureKind::Lebesgue => unit_ball_volume(self.dim) * r.powf(d),
            MeasureKind::Gaussian => statrs::function::gamma::gamma_lr(d / 2.0, 0.5 * r * r),
            MeasureKind::GeneralizedCauchy { beta } => {
                let sigma = self.sphere_area();
                let f = |s: f64| (1.0 + s * s).powf(-beta) * s.powi(self.dim as i32 - 1);
                sigma * adaptive_legendre(&f, 0.0, r, QUAD_ABS_TOL / sigma)
            }
        }
    }
}

fn rules() -> &'static (GaussLegendre, GaussLegendre) {
    static R: OnceLock<(GaussLegendre, GaussLegendre)> = OnceLock::new();
    R.get_or_init(|| {
        (
            GaussLegendre::new(NonZeroUsize::new(10).unwrap()),
            GaussLegendre::new(NonZeroUsize::new(20).unwrap()),
        )
    })
}

/// `∫_a^b f` by bisection until the 10- and 20-point Gauss–Legendre rules
/// agree to within the panel's share of `tol`.
pub fn adaptive_legendre(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (lo, hi) = rules();
        let coarse = lo.integrate(a, b, f);
        let fine = hi.integrate(a, b, f);
        if (fine - coarse).abs() <= tol || depth == 0 {
            return fine;
        }
        let m = 0.5 * (a + b);
        rec(f, a, m, 0.5 * tol, depth - 1) + rec(f, m, b, 0.5 * tol, depth - 1)
    }
    rec(f, a, b, tol, 40)
}

/// Result of checking a measure's declared concavity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcavityReport {
    /// Declared exponent; `None` stands for `+∞`.
    pub gamma: Option<f64>,
    pub spot_checks: usize,
    /// Largest relative shortfall `(M_γ - φ(mid)) / M_γ` seen in the spot check.
    pub max_rel_violation: f64,
}

/// Power mean `M_γ(a, b; λ)`.
pub fn power_mean(a: f64, b: f64, lambda: f64, gamma: f64) -> f64 {
    if gamma == f64::INFINITY {
        a.max(b)
    } else if gamma == 0.0 {
        a.powf(1.0 - lambda) * b.powf(lambda)
    } else {
        ((1.0 - lambda) * a.powf(gamma) + lambda * b.powf(gamma)).powf(1.0 / gamma)
    }
}

fn worst_triple(m: &RadialMeasure, gamma: f64, half_width: f64, n: usize, stream: u64) -> (f64, ConcavityWitness) {
    let mut rng = substream(0xc0c4, stream);
    let mut worst = (f64::NEG_INFINITY, ConcavityWitness { x: vec![], y: vec![], lambda: 0.0 });
    for _ in 0..n {
        let x: Vec<f64> = (0..m.dim).map(|_| rng.random_range(-half_width..half_width)).collect();
        let y: Vec<f64> = (0..m.dim).map(|_| rng.random_range(-half_width..half_width)).collect();
        let lambda: f64 = rng.random_range(0.0..1.0);
        let mid: Vec<f64> = x.iter().zip(&y).map(|(a, b)| (1.0 - lambda) * a + lambda * b).collect();
        let want = power_mean(m.density_at(&x), m.density_at(&y), lambda, gamma);
        let rel = (want - m.density_at(&mid)) / want;
        if rel > worst.0 {
            worst = (rel, ConcavityWitness { x, y, lambda });
        }
    }
    worst
}

/// Checks the convex-measure condition `γ ≥ -1/d` analytically and spot
/// checks the declared `γ`-concavity on random triples in `[-3, 3]^d`.
///
/// The analytic failure carries a witness only when one exists: a triple
/// violating `(-1/d)`-concavity, searched for in a wide box.
pub fn validate_concavity(m: &RadialMeasure) -> Result<ConcavityReport> {
    let gamma = m.gamma();
    let (viol, witness) = worst_triple(m, gamma, 3.0, SPOT_CHECKS, 0);
    if viol > 1e-9 {
        return Err(Error::ConcavityViolation {
            reason: format!("density is not {gamma}-concave (relative shortfall {viol:e})"),
            witness: Some(Box::new(witness)),
        });
    }
    let d = m.dim as f64;
    if gamma < -1.0 / d {
        let (v, w) = worst_triple(m, -1.0 / d, 100.0, 4000, 1);
        return Err(Error::ConcavityViolation {
            reason: format!("declared gamma {gamma} is below -1/d = {}", -1.0 / d),
            witness: (v > 1e-9).then(|| Box::new(w)),
        });
    }
    Ok(ConcavityReport {
        gamma: gamma.is_finite().then_some(gamma),
        spot_checks: SPOT_CHECKS,
        max_rel_violation: viol.max(0.0),
    })
}

/// Monte-Carlo value with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl Estimate {
    /// `sqrt(se_1² + se_2²)` for a comparison of independent estimates.
    pub fn combined_stderr(&self, other: &Estimate) -> f64 {
        self.stderr.hypot(other.stderr)
    }
}

/// Running mean and sum of squared deviations, merged by Chan's update.
#[derive(Debug, Clone, Copy, Default)]
pub struct Moments {
    pub n: usize,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(self, o: Moments) -> Moments {
        if self.n == 0 {
            return o;
        }
        if o.n == 0 {
            return self;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        Moments {
            n,
            mean: self.mean + d * o.n as f64 / n as f64,
            m2: self.m2 + o.m2 + d * d * (self.n * o.n) as f64 / n as f64,
        }
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> f64 {
        if self.n < 2 {
            return f64::INFINITY;
        }
        (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt()
    }
}

/// `E_θ[f(θ)]` over uniform `θ ∈ S^{d-1}` using `n_samples` directions in
/// antithetic pairs. The standard error is computed from the pair means.
/// Batches run in parallel and are merged in index order, so the result
/// does not depend on the thread count.
pub fn sphere_average<F>(dim: usize, n_samples: usize, seed: u64, f: F) -> Result<Estimate>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let pairs = n_samples.div_ceil(2).max(2);
    let batches = pairs.div_ceil(BATCH_PAIRS);
    let parts: Vec<Moments> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(seed, b as u64);
            let mut mo = Moments::default();
            let count = BATCH_PAIRS.min(pairs - b * BATCH_PAIRS);
            for _ in 0..count {
                let th = unit_vector(&mut rng, dim);
                let neg: Vec<f64> = th.iter().map(|v| -v).collect();
                mo.push(0.5 * (f(&th)? + f(&neg)?));
            }
            Ok(mo)
        })
        .collect::<Result<Vec<_>>>()?;
    let total = parts.into_iter().fold(Moments::default(), Moments::merge);
    Ok(Estimate { value: total.mean, stderr: total.stderr(), n_samples: 2 * pairs, seed })
}

/// `ν(L)` for a star body `L` by polar Monte Carlo.
pub fn star_body_measure(body: &impl StarBody, m: &RadialMeasure, n_samples: usize, seed: u64) -> Result<Estimate> {
    if body.dim() != m.dim {
        return Err(Error::DimensionMismatch { expected: m.dim, found: body.dim() });
    }
    sphere_average(m.dim, n_samples, seed, |th| Ok(m.radial_mass(body.radial(th)?)))
}
