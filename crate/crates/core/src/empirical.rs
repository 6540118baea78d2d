//! Random matrix bodies `[X_1 … X_N]C` and Monte-Carlo expectations of
//! `ν(Π°_Q([X_1 … X_N]C))`, plus the one-dimensional fiber profile
//! `F_w(t)` along a shadow system.
//!
//! Expectations use `p = 1`. Since `V_1(K, L)` is translation invariant in
//! `K`, every sampled body is recentred at its vertex mean before its polar
//! projection body is built; this puts the origin in the interior without
//! changing the body being measured.

use rand::Rng;
use rand_distr::{ChiSquared, Distribution};
use rayon::prelude::*;
use serde::Serialize;

use crate::bodies::{OriginBody, Support};
use crate::error::{Error, Result};
use crate::geom::linalg::{dot, rank};
use crate::geom::{Direction, Polytope};
use crate::measures::{star_body_measure, Estimate, MeasureKind, Moments, RadialMeasure};
use crate::mixed::mixed_volume_first;
use crate::projbody::StarBodySpec;
use crate::rearrange::{symmetric_decreasing_rearrangement, GridDensity, GridSampler};
use crate::rng::{derive_seed, substream, unit_vector, StreamRng};
use crate::symmetrize::ShadowSystem;

pub const MAX_COLUMNS: usize = 8;
pub const MAX_RETRIES: usize = 100;

/// Law of one random column `X_i`.
#[derive(Debug, Clone)]
pub enum ColumnDensity {
    /// Uniform on a convex body.
    Uniform(Polytope),
    Grid(GridDensity),
}

impl ColumnDensity {
    pub fn dim(&self) -> usize {
        match self {
            ColumnDensity::Uniform(p) => p.dim(),
            ColumnDensity::Grid(g) => g.dim(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Arm {
    Raw,
    /// Every density replaced by its symmetric decreasing rearrangement.
    Rearranged,
}

#[derive(Debug, Clone)]
pub struct EmpiricalConfig {
    /// Vertices of `C ⊂ R^N`; no hull is needed.
    pub c_vertices: Vec<Vec<f64>>,
    pub q: Polytope,
    pub densities: Vec<ColumnDensity>,
    pub measure: RadialMeasure,
    pub outer: usize,
    pub inner: usize,
    pub seed: u64,
}

impl EmpiricalConfig {
    pub fn n(&self) -> usize {
        self.densities.first().map_or(0, ColumnDensity::dim)
    }

    pub fn columns(&self) -> usize {
        self.densities.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        let big_n = self.columns();
        let m = self.q.dim();
        if !(2..=3).contains(&n) {
            return Err(Error::UnsupportedDimension(n));
        }
        if self.densities.iter().any(|d| d.dim() != n) {
            return Err(Error::Config("all densities must share one dimension".into()));
        }
        if big_n > MAX_COLUMNS {
            return Err(Error::Config(format!("N = {big_n} exceeds {MAX_COLUMNS}")));
        }
        if big_n < n {
            return Err(Error::Config(format!("[X_1 … X_{big_n}]C is never {n}-dimensional")));
        }
        if n * m > 6 {
            return Err(Error::UnsupportedDimension(n * m));
        }
        if self.measure.dim != n * m {
            return Err(Error::DimensionMismatch { expected: n * m, found: self.measure.dim });
        }
        if self.c_vertices.is_empty() || self.c_vertices.iter().any(|v| v.len() != big_n) {
            return Err(Error::Config(format!("C must have vertices in R^{big_n}")));
        }
        let diffs: Vec<Vec<f64>> = self.c_vertices[1..]
            .iter()
            .map(|v| v.iter().zip(&self.c_vertices[0]).map(|(a, b)| a - b).collect())
            .collect();
        if rank(&diffs, 1e-12) < big_n {
            return Err(Error::Config("C is not full-dimensional".into()));
        }
        if self.outer < 2 || self.inner < 2 {
            return Err(Error::Config("need at least two outer and two inner samples".into()));
        }
        Ok(())
    }
}

/// `conv{[x_1 … x_N] v : v ∈ vert C}`.
pub fn matrix_body(x: &[Vec<f64>], c_vertices: &[Vec<f64>]) -> Result<Polytope> {
    let n = x.first().map_or(0, Vec::len);
    let pts: Vec<Vec<f64>> = c_vertices
        .iter()
        .map(|v| (0..n).map(|a| v.iter().zip(x).map(|(c, col)| c * col[a]).sum()).collect())
        .collect();
    Polytope::from_points(&pts, n).map_err(|e| match e {
        Error::DegenerateInput(_) => Error::DegenerateSample { attempts: 1 },
        other => other,
    })
}

enum Drawer {
    Body { k: Polytope, lo: Vec<f64>, hi: Vec<f64> },
    Ball { radius: f64, dim: usize },
    Grid { sampler: GridSampler, shift: Vec<f64> },
}

impl Drawer {
    fn new(d: &ColumnDensity, arm: Arm) -> Result<Self> {
        Ok(match (d, arm) {
            (ColumnDensity::Uniform(k), Arm::Raw) => {
                let n = k.dim();
                let lo = (0..n).map(|a| k.vertices().iter().map(|v| v[a]).fold(f64::INFINITY, f64::min)).collect();
                let hi = (0..n).map(|a| k.vertices().iter().map(|v| v[a]).fold(f64::NEG_INFINITY, f64::max)).collect();
                Drawer::Body { k: k.clone(), lo, hi }
            }
            (ColumnDensity::Uniform(k), Arm::Rearranged) => {
                let n = k.dim();
                let radius = (k.volume() / crate::projbody::unit_ball_volume(n)).powf(1.0 / n as f64);
                Drawer::Ball { radius, dim: n }
            }
            (ColumnDensity::Grid(g), Arm::Raw) => Drawer::Grid { sampler: GridSampler::new(g)?, shift: vec![0.0; g.dim()] },
            (ColumnDensity::Grid(g), Arm::Rearranged) => {
                // the grid rearrangement is centred at the box centre; move it to the origin
                let star = symmetric_decreasing_rearrangement(g);
                let shift = star.box_center().iter().map(|c| -c).collect();
                Drawer::Grid { sampler: GridSampler::new(&star)?, shift }
            }
        })
    }

    fn draw(&self, rng: &mut StreamRng) -> Vec<f64> {
        match self {
            Drawer::Body { k, lo, hi } => loop {
                let x: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| a + rng.random::<f64>() * (b - a)).collect();
                if k.contains(&x, 0.0) {
                    return x;
                }
            },
            Drawer::Ball { radius, dim } => {
                let r = radius * rng.random::<f64>().powf(1.0 / *dim as f64);
                unit_vector(rng, *dim).into_iter().map(|v| v * r).collect()
            }
            Drawer::Grid { sampler, shift } => sampler.draw(rng).iter().zip(shift).map(|(x, s)| x + s).collect(),
        }
    }
}

/// One outer draw: a nondegenerate matrix body, with retries.
fn sample_body(drawers: &[Drawer], c_vertices: &[Vec<f64>], rng: &mut StreamRng) -> Result<Polytope> {
    for _ in 0..MAX_RETRIES {
        let x: Vec<Vec<f64>> = drawers.iter().map(|d| d.draw(rng)).collect();
        match matrix_body(&x, c_vertices) {
            Ok(b) => return Ok(b),
            Err(Error::DegenerateSample { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::DegenerateSample { attempts: MAX_RETRIES })
}

/// `ν(Π°_Q K)` with `p = 1`, after recentring `K`.
fn inner_measure(k: &Polytope, q: &Polytope, m: &RadialMeasure, inner: usize, seed: u64) -> Result<Estimate> {
    let c = k.vertex_mean();
    let centred = OriginBody::new(k.translate(&c.iter().map(|v| -v).collect::<Vec<_>>()))?;
    let spec = StarBodySpec::new(centred, q.clone(), 1.0)?;
    star_body_measure(&spec, m, inner, seed)
}

/// Per-outer-sample values of both arms under common random numbers.
fn outer_values(cfg: &EmpiricalConfig, arms: &[Arm]) -> Result<Vec<Vec<(f64, f64)>>> {
    cfg.validate()?;
    let drawers: Vec<Vec<Drawer>> = arms
        .iter()
        .map(|&a| cfg.densities.iter().map(|d| Drawer::new(d, a)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    (0..cfg.outer)
        .into_par_iter()
        .map(|i| {
            let inner_seed = derive_seed(cfg.seed, i as u64);
            drawers
                .iter()
                .map(|ds| {
                    let mut rng = substream(cfg.seed, i as u64);
                    let body = sample_body(ds, &cfg.c_vertices, &mut rng)?;
                    let e = inner_measure(&body, &cfg.q, &cfg.measure, cfg.inner, inner_seed)?;
                    Ok((e.value, e.stderr * e.stderr))
                })
                .collect()
        })
        .collect()
}

/// An expectation over random bodies. `estimate.stderr` is the standard
/// error of the outer mean, which by the law of total variance already
/// includes the inner Monte-Carlo noise; `inner_variance` is the part of
/// `stderr²` contributed by that noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArmEstimate {
    pub estimate: Estimate,
    pub inner_variance: f64,
}

fn summarize(vals: impl Iterator<Item = (f64, f64)>, cfg: &EmpiricalConfig) -> ArmEstimate {
    let mut mo = Moments::default();
    let mut inner = 0.0;
    for (v, var) in vals {
        mo.push(v);
        inner += var;
    }
    let n = mo.n as f64;
    ArmEstimate {
        estimate: Estimate { value: mo.mean, stderr: mo.stderr(), n_samples: mo.n, seed: cfg.seed },
        inner_variance: inner / (n * n),
    }
}

/// `E[ν(Π°_Q([X_1 … X_N]C))]` for one arm.
pub fn expected_measure(cfg: &EmpiricalConfig, arm: Arm) -> Result<ArmEstimate> {
    let vals = outer_values(cfg, &[arm])?;
    Ok(summarize(vals.into_iter().map(|v| v[0]), cfg))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairedReport {
    pub raw: ArmEstimate,
    pub rearranged: ArmEstimate,
    /// Mean of `rearranged - raw` over paired outer samples.
    pub difference: f64,
    pub paired_stderr: f64,
    /// `difference ≥ -3 · paired_stderr`.
    pub pass: bool,
}

/// Both arms with common random numbers: outer sample `i` uses the same
/// stream for the columns and the same sphere directions in both arms.
pub fn paired_comparison(cfg: &EmpiricalConfig) -> Result<PairedReport> {
    let vals = outer_values(cfg, &[Arm::Raw, Arm::Rearranged])?;
    let mut diff = Moments::default();
    for v in &vals {
        diff.push(v[1].0 - v[0].0);
    }
    let raw = summarize(vals.iter().map(|v| v[0]), cfg);
    let rearranged = summarize(vals.iter().map(|v| v[1]), cfg);
    let paired_stderr = diff.stderr();
    Ok(PairedReport {
        raw,
        rearranged,
        difference: diff.mean,
        paired_stderr,
        pass: diff.mean >= -3.0 * paired_stderr,
    })
}

/// `F_w(t)` on a grid of `t`, with one standard error per point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiberProfile {
    pub t: Vec<f64>,
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
}

impl FiberProfile {
    /// Largest `F(t) - F(0) - sigma·se(t)`; nonpositive when the profile
    /// peaks at `t = 0` within noise. The grid must contain `0`.
    pub fn max_excess_over_center(&self, sigma: f64) -> Option<f64> {
        let c = self.t.iter().position(|t| *t == 0.0)?;
        Some(
            self.values
                .iter()
                .zip(&self.stderr)
                .map(|(v, s)| v - self.values[c] - sigma * s)
                .fold(f64::NEG_INFINITY, f64::max),
        )
    }
}

/// Draws `s̄ ∈ R^m` from the law proportional to `φ(w + s̄ ⊗ u)` and returns
/// the normalizing mass of that fiber.
struct FiberLaw {
    mass: f64,
    kind: MeasureKind,
    scale: f64,
    dof: f64,
    m: usize,
}

impl FiberLaw {
    fn new(measure: &RadialMeasure, w_norm: f64, m: usize) -> Result<Self> {
        let md = m as f64;
        let pi = std::f64::consts::PI;
        // w ⊥ s̄⊗u, so φ(w + s̄⊗u) = φ(sqrt(|w|² + |s̄|²)) is radial in s̄
        let base = measure.density(w_norm);
        match measure.kind {
            MeasureKind::Gaussian => Ok(FiberLaw {
                mass: base * (2.0 * pi).powf(0.5 * md),
                kind: measure.kind,
                scale: 1.0,
                dof: 0.0,
                m,
            }),
            MeasureKind::GeneralizedCauchy { beta } => {
                // (1 + |w|² + |s|²)^{-β} ∝ (1 + |s|²/a²)^{-β}: Student t with 2β - m degrees of freedom
                let a2 = 1.0 + w_norm * w_norm;
                let dof = 2.0 * beta - md;
                let g = statrs::function::gamma::ln_gamma;
                let integral = (0.5 * md * (a2 * pi).ln() + g(beta - 0.5 * md) - g(beta)).exp();
                Ok(FiberLaw { mass: base * integral, kind: measure.kind, scale: (a2 / dof).sqrt(), dof, m })
            }
            MeasureKind::Lebesgue => {
                Err(Error::Config("fiber profile needs a finite measure (gaussian or generalized_cauchy)".into()))
            }
        }
    }

    fn draw(&self, rng: &mut StreamRng) -> Vec<f64> {
        let z = crate::rng::gaussian_vector(rng, self.m);
        match self.kind {
            MeasureKind::GeneralizedCauchy { .. } => {
                let chi = ChiSquared::new(self.dof).expect("positive degrees of freedom").sample(rng);
                let f = self.scale * (self.dof / chi).sqrt();
                z.into_iter().map(|v| v * f).collect()
            }
            _ => z,
        }
    }
}

/// `F_w(t) = ∫ 1{nV_p(K_u(t), (w + s̄⊗u).Qᵗ) ≤ 1} φ(w + s̄⊗u) ds̄` along the
/// shadow system of `k` in direction `u`, with `w ∈ (u^⊥)^m` stored as
/// `m` consecutive `n`-vectors. All grid points share the same `s̄` draws,
/// which are i.i.d. (not antithetic, so the `t ↔ -t` symmetry stays a
/// genuine check).
#[allow(clippy::too_many_arguments)]
pub fn fiber_profile(
    k: &OriginBody,
    q: &Polytope,
    p: f64,
    u: &Direction,
    w: &[f64],
    measure: &RadialMeasure,
    t_grid: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<FiberProfile> {
    let n = k.dim();
    let m = q.dim();
    if u.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: u.dim() });
    }
    if w.len() != n * m {
        return Err(Error::DimensionMismatch { expected: n * m, found: w.len() });
    }
    if measure.dim != n * m {
        return Err(Error::DimensionMismatch { expected: n * m, found: measure.dim });
    }
    let scale = 1.0 + w.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if w.chunks(n).any(|wi| dot(wi, u.as_slice()).abs() > 1e-9 * scale) {
        return Err(Error::Config("w must lie in (u^⊥)^m".into()));
    }
    let law = FiberLaw::new(measure, w.iter().map(|v| v * v).sum::<f64>().sqrt(), m)?;
    let mut rng = substream(seed, 0xf1b);
    let draws: Vec<Vec<f64>> = (0..n_samples).map(|_| law.draw(&mut rng)).collect();
    let shadow = ShadowSystem::new(k, u)?;
    let mut values = Vec::with_capacity(t_grid.len());
    let mut stderr = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let kt = OriginBody::new(shadow.at(t)?)?;
        let spec = StarBodySpec::new(kt, q.clone(), p)?;
        let hits = draws
            .par_iter()
            .filter(|s| {
                let x: Vec<f64> = (0..n * m).map(|idx| w[idx] + s[idx / n] * u.as_slice()[idx % n]).collect();
                spec.n_vp(&x) <= 1.0
            })
            .count();
        let frac = hits as f64 / n_samples as f64;
        values.push(law.mass * frac);
        stderr.push(law.mass * (frac * (1.0 - frac) / n_samples as f64).sqrt());
    }
    Ok(FiberProfile { t: t_grid.to_vec(), values, stderr })
}

/// Largest midpoint-convexity defect of `t̄ ↦ nV(C_y(t̄)[n-1], L)` along
/// random segments in `[-1, 1]^N`, where `C_y(t̄) = [y_1 + t_1 u, …]C`,
/// relative to the largest value seen.
pub fn matrix_body_convexity_defect(
    y: &[Vec<f64>],
    u: &Direction,
    c_vertices: &[Vec<f64>],
    l: &impl Support,
    segments: usize,
    seed: u64,
) -> Result<f64> {
    let big_n = y.len();
    let f = |t: &[f64]| -> Result<f64> {
        let cols: Vec<Vec<f64>> =
            y.iter().zip(t).map(|(yi, ti)| yi.iter().zip(u.as_slice()).map(|(a, b)| a + ti * b).collect()).collect();
        let body = matrix_body(&cols, c_vertices)?;
        Ok(body.dim() as f64 * mixed_volume_first(&body, l))
    };
    let mut rng = substream(seed, 0xc0e);
    let (mut worst, mut top) = (0.0f64, 0.0f64);
    for _ in 0..segments {
        let a: Vec<f64> = (0..big_n).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let b: Vec<f64> = (0..big_n).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
        let (fa, fb, fm) = (f(&a)?, f(&b)?, f(&mid)?);
        worst = worst.max(fm - 0.5 * (fa + fb));
        top = top.max(fa.abs()).max(fb.abs());
    }
    Ok(worst / top.max(f64::MIN_POSITIVE))
}

/// Vertices of `[0, 1]^N`.
pub fn cube_vertices(big_n: usize) -> Vec<Vec<f64>> {
    (0..1usize << big_n).map(|b| (0..big_n).map(|i| ((b >> i) & 1) as f64).collect()).collect()
}

/// Vertices of `conv{0, e_1, …, e_N}`.
pub fn simplex_vertices(big_n: usize) -> Vec<Vec<f64>> {
    let mut v = vec![vec![0.0; big_n]];
    v.extend((0..big_n).map(|i| (0..big_n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()));
    v
}
