//! Cell-wise constant densities on box grids and their rearrangements.
//!
//! Cells are stored row-major (last axis fastest). A rearrangement permutes
//! cell values, so value multisets and total mass are preserved exactly.

use std::io::Write;

use rand::distr::Distribution;
use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::linalg::dot;
use crate::geom::{shoelace, Polytope};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

/// On-disk form of a grid density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityFile {
    pub dim: usize,
    #[serde(rename = "box")]
    pub bounds: GridBox,
    pub resolution: Vec<usize>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    lo: Vec<f64>,
    hi: Vec<f64>,
    res: Vec<usize>,
    values: Vec<f64>,
}

impl GridDensity {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, res: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let dim = lo.len();
        if !(2..=3).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if hi.len() != dim || res.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: hi.len().min(res.len()) });
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(b > a)) || res.contains(&0) {
            return Err(Error::InvalidDensity("empty box or zero resolution".into()));
        }
        let cells: usize = res.iter().product();
        if values.len() != cells {
            return Err(Error::DimensionMismatch { expected: cells, found: values.len() });
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidDensity("values must be finite and nonnegative".into()));
        }
        let g = GridDensity { lo, hi, res, values };
        if !(g.mass() > 0.0) {
            return Err(Error::InvalidDensity("zero mass".into()));
        }
        Ok(g)
    }

    /// Samples `f` at cell centres.
    pub fn from_fn(lo: Vec<f64>, hi: Vec<f64>, res: Vec<usize>, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let mut g = GridDensity { lo, hi, res, values: vec![] };
        let cells: usize = g.res.iter().product();
        g.values = (0..cells).map(|i| f(&g.cell_center(i))).collect();
        Self::new(g.lo, g.hi, g.res, g.values)
    }

    /// Indicator of `k` with each cell holding its covered fraction: exact
    /// polygon clipping in the plane, `4³` supersampling of boundary cells
    /// in space.
    pub fn indicator(k: &Polytope, lo: Vec<f64>, hi: Vec<f64>, res: Vec<usize>) -> Result<Self> {
        if k.dim() != lo.len() {
            return Err(Error::DimensionMismatch { expected: lo.len(), found: k.dim() });
        }
        let mut g = GridDensity { lo, hi, res, values: vec![] };
        let cells: usize = g.res.iter().product();
        g.values = (0..cells).map(|i| g.coverage(k, i)).collect();
        Self::new(g.lo, g.hi, g.res, g.values)
    }

    pub fn from_file(f: DensityFile) -> Result<Self> {
        if f.bounds.lo.len() != f.dim {
            return Err(Error::DimensionMismatch { expected: f.dim, found: f.bounds.lo.len() });
        }
        Self::new(f.bounds.lo, f.bounds.hi, f.resolution, f.values)
    }

    pub fn to_file(&self) -> DensityFile {
        DensityFile {
            dim: self.dim(),
            bounds: GridBox { lo: self.lo.clone(), hi: self.hi.clone() },
            resolution: self.res.clone(),
            values: self.values.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn resolution(&self) -> &[usize] {
        &self.res
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cell_width(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / self.res[axis] as f64
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.cell_width(a)).product()
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_volume()
    }

    pub fn box_center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for a in (0..self.dim()).rev() {
            idx[a] = flat % self.res[a];
            flat /= self.res[a];
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.res).fold(0, |acc, (i, r)| acc * r + i)
    }

    pub fn cell_lo(&self, flat: usize) -> Vec<f64> {
        let idx = self.multi_index(flat);
        (0..self.dim()).map(|a| self.lo[a] + idx[a] as f64 * self.cell_width(a)).collect()
    }

    pub fn cell_center(&self, flat: usize) -> Vec<f64> {
        let idx = self.multi_index(flat);
        (0..self.dim()).map(|a| self.lo[a] + (idx[a] as f64 + 0.5) * self.cell_width(a)).collect()
    }

    /// Value at a point (zero outside the box).
    pub fn value_at(&self, x: &[f64]) -> f64 {
        let mut idx = Vec::with_capacity(self.dim());
        for a in 0..self.dim() {
            let s = ((x[a] - self.lo[a]) / self.cell_width(a)).floor();
            if s < 0.0 || s >= self.res[a] as f64 {
                return 0.0;
            }
            idx.push(s as usize);
        }
        self.values[self.flat_index(&idx)]
    }

    /// `∫ |f - g|` for densities on the same grid.
    pub fn l1_distance(&self, other: &GridDensity) -> Result<f64> {
        self.same_grid(other)?;
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).sum::<f64>() * self.cell_volume())
    }

    /// `|{f > t}|`.
    pub fn superlevel_volume(&self, t: f64) -> f64 {
        self.values.iter().filter(|&&v| v > t).count() as f64 * self.cell_volume()
    }

    fn same_grid(&self, other: &GridDensity) -> Result<()> {
        if self.lo != other.lo || self.hi != other.hi || self.res != other.res {
            return Err(Error::InvalidDensity("densities live on different grids".into()));
        }
        Ok(())
    }

    fn coverage(&self, k: &Polytope, flat: usize) -> f64 {
        let lo = self.cell_lo(flat);
        let w: Vec<f64> = (0..self.dim()).map(|a| self.cell_width(a)).collect();
        let hi: Vec<f64> = lo.iter().zip(&w).map(|(a, b)| a + b).collect();
        // quick rejection and acceptance via the cell's support against each facet
        let mut inside = true;
        for f in k.facets() {
            let (mut near, mut far) = (0.0, 0.0);
            for a in 0..self.dim() {
                let (x, y) = (f.normal[a] * lo[a], f.normal[a] * hi[a]);
                near += x.min(y);
                far += x.max(y);
            }
            if near >= f.offset {
                return 0.0;
            }
            if far > f.offset {
                inside = false;
            }
        }
        if inside {
            return 1.0;
        }
        if self.dim() == 2 {
            let clipped = clip_to_box(k.vertices(), &lo, &hi);
            return shoelace(&clipped).abs() / (w[0] * w[1]);
        }
        const S: usize = 4;
        let mut hit = 0;
        for i in 0..S * S * S {
            let p = [
                lo[0] + (((i / (S * S)) as f64) + 0.5) * w[0] / S as f64,
                lo[1] + ((((i / S) % S) as f64) + 0.5) * w[1] / S as f64,
                lo[2] + (((i % S) as f64) + 0.5) * w[2] / S as f64,
            ];
            if k.facets().iter().all(|f| dot(&f.normal, &p) <= f.offset) {
                hit += 1;
            }
        }
        hit as f64 / (S * S * S) as f64
    }
}

/// Sutherland–Hodgman clip of a counter-clockwise polygon to a rectangle.
fn clip_to_box(poly: &[Vec<f64>], lo: &[f64], hi: &[f64]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = poly.to_vec();
    // each edge as (axis, bound, keep-below)
    for (axis, bound, below) in [(0, lo[0], false), (0, hi[0], true), (1, lo[1], false), (1, hi[1], true)] {
        if out.is_empty() {
            break;
        }
        let keep = |p: &[f64]| if below { p[axis] <= bound } else { p[axis] >= bound };
        let input = std::mem::take(&mut out);
        for i in 0..input.len() {
            let cur = &input[i];
            let prev = &input[(i + input.len() - 1) % input.len()];
            let cross = |a: &[f64], b: &[f64]| {
                let t = (bound - a[axis]) / (b[axis] - a[axis]);
                vec![a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
            };
            match (keep(prev), keep(cur)) {
                (true, true) => out.push(cur.clone()),
                (true, false) => out.push(cross(prev, cur)),
                (false, true) => {
                    out.push(cross(prev, cur));
                    out.push(cur.clone());
                }
                (false, false) => {}
            }
        }
    }
    out
}

/// Assigns the values of `cells` (sorted decreasingly) to the positions of
/// `cells` ordered by increasing `key`, ties by position.
fn rearrange_onto(values: &mut [f64], cells: &[usize], key: impl Fn(usize) -> f64) {
    let mut vals: Vec<f64> = cells.iter().map(|&c| values[c]).collect();
    vals.sort_by(|a, b| b.total_cmp(a));
    let mut order: Vec<usize> = cells.to_vec();
    order.sort_by(|&a, &b| key(a).total_cmp(&key(b)).then(a.cmp(&b)));
    for (c, v) in order.into_iter().zip(vals) {
        values[c] = v;
    }
}

/// `f*`: the largest values go to the cells closest to the box centre.
pub fn symmetric_decreasing_rearrangement(f: &GridDensity) -> GridDensity {
    let c = f.box_center();
    let dist: Vec<f64> = (0..f.values.len())
        .map(|i| f.cell_center(i).iter().zip(&c).map(|(x, y)| (x - y) * (x - y)).sum())
        .collect();
    let mut g = f.clone();
    let all: Vec<usize> = (0..f.values.len()).collect();
    rearrange_onto(&mut g.values, &all, |i| dist[i]);
    g
}

/// Rearranges every line of cells parallel to `axis` symmetrically and
/// decreasingly about the box's mid-plane.
pub fn steiner_rearrangement(f: &GridDensity, axis: usize) -> Result<GridDensity> {
    if axis >= f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), found: axis });
    }
    let mut g = f.clone();
    let r = f.res[axis];
    let mid = 0.5 * (r as f64 - 1.0);
    let cells: usize = f.values.len();
    for start in 0..cells {
        let mut idx = f.multi_index(start);
        if idx[axis] != 0 {
            continue;
        }
        let line: Vec<usize> = (0..r)
            .map(|k| {
                idx[axis] = k;
                f.flat_index(&idx)
            })
            .collect();
        rearrange_onto(&mut g.values, &line, |c| (f.multi_index(c)[axis] as f64 - mid).abs());
    }
    Ok(g)
}

/// Steiner rearrangement along the diagonal `e_a + sign·e_b` of a grid whose
/// cells are square in the `(a, b)` plane and which has equal resolution on
/// both axes. Every diagonal line of cells is symmetric about the box's
/// mid-plane, so the reordering is exact.
pub fn diagonal_steiner_rearrangement(f: &GridDensity, a: usize, b: usize, sign: i32) -> Result<GridDensity> {
    if a >= f.dim() || b >= f.dim() || a == b {
        return Err(Error::DimensionMismatch { expected: f.dim(), found: a.max(b) });
    }
    if f.res[a] != f.res[b] || (f.cell_width(a) - f.cell_width(b)).abs() > 1e-12 * f.cell_width(a) {
        return Err(Error::InvalidDensity("diagonal rearrangement needs square cells".into()));
    }
    let r = f.res[a] as i64;
    let mut g = f.clone();
    // group cells by the other coordinates and by the invariant of the line
    let mut lines: std::collections::BTreeMap<(Vec<usize>, i64), Vec<usize>> = Default::default();
    for c in 0..f.values.len() {
        let idx = f.multi_index(c);
        let (i, j) = (idx[a] as i64, idx[b] as i64);
        let inv = if sign > 0 { i - j } else { i + j };
        let rest: Vec<usize> = (0..f.dim()).filter(|&k| k != a && k != b).map(|k| idx[k]).collect();
        lines.entry((rest, inv)).or_default().push(c);
    }
    for line in lines.values() {
        rearrange_onto(&mut g.values, line, |c| {
            let idx = f.multi_index(c);
            let (i, j) = (idx[a] as i64, idx[b] as i64);
            let pos = if sign > 0 { i + j - (r - 1) } else { i - j };
            pos.abs() as f64
        });
    }
    Ok(g)
}

/// Slice integrals `F(y) = ∫ f(x, y) dx` over every axis except `axis`,
/// one value per cell along `axis`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginalProfile {
    pub lo: f64,
    pub hi: f64,
    pub values: Vec<f64>,
}

impl MarginalProfile {
    pub fn centers(&self) -> Vec<f64> {
        let n = self.values.len();
        let w = (self.hi - self.lo) / n as f64;
        (0..n).map(|i| self.lo + (i as f64 + 0.5) * w).collect()
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * (self.hi - self.lo) / self.values.len() as f64
    }
}

pub fn marginal_profile(f: &GridDensity, axis: usize) -> Result<MarginalProfile> {
    if axis >= f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), found: axis });
    }
    let mut values = vec![0.0; f.res[axis]];
    for (c, v) in f.values.iter().enumerate() {
        values[f.multi_index(c)[axis]] += v;
    }
    let slice = f.cell_volume() / f.cell_width(axis);
    Ok(MarginalProfile { lo: f.lo[axis], hi: f.hi[axis], values: values.into_iter().map(|v| v * slice).collect() })
}

/// Alias-table sampler for a grid density.
#[derive(Debug, Clone)]
pub struct GridSampler {
    grid: GridDensity,
    alias: WeightedAliasIndex<f64>,
}

impl GridSampler {
    pub fn new(f: &GridDensity) -> Result<Self> {
        let alias = WeightedAliasIndex::new(f.values.clone()).map_err(|e| Error::InvalidDensity(e.to_string()))?;
        Ok(GridSampler { grid: f.clone(), alias })
    }

    pub fn grid(&self) -> &GridDensity {
        &self.grid
    }

    /// A cell by mass, then a uniform point inside it.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let cell = self.alias.sample(rng);
        let lo = self.grid.cell_lo(cell);
        lo.iter().enumerate().map(|(a, l)| l + rng.random::<f64>() * self.grid.cell_width(a)).collect()
    }
}

/// `n` i.i.d. draws from `f`.
pub fn sample(f: &GridDensity, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let s = GridSampler::new(f)?;
    let mut rng = crate::rng::substream(seed, 0x5a);
    Ok((0..n).map(|_| s.draw(&mut rng)).collect())
}

/// Writes points as CSV with a header `x0,x1,...`.
pub fn write_points_csv(mut w: impl Write, points: &[Vec<f64>]) -> Result<()> {
    if let Some(p) = points.first() {
        let header: Vec<String> = (0..p.len()).map(|i| format!("x{i}")).collect();
        writeln!(w, "{}", header.join(","))?;
    }
    for p in points {
        let row: Vec<String> = p.iter().map(|v| crate::geom::io::fmt_f64(*v)).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symmetrize::steiner;
    use crate::geom::Direction;
    use approx::assert_relative_eq;

    fn unit_square_indicator(res: usize) -> GridDensity {
        let k = Polytope::cuboid(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        GridDensity::indicator(&k, vec![-1.0, -1.0], vec![1.0, 1.0], vec![res, res]).unwrap()
    }

    #[test]
    fn coverage_is_exact_in_the_plane() {
        let k = Polytope::from_points(&[vec![0.1, -0.3], vec![0.7, 0.2], vec![-0.4, 0.6]], 2).unwrap();
        let g = GridDensity::indicator(&k, vec![-1.0, -1.0], vec![1.0, 1.0], vec![37, 23]).unwrap();
        assert_relative_eq!(g.mass(), k.volume(), max_relative = 1e-12);
    }

    #[test]
    fn coverage_in_space() {
        let k = Polytope::cuboid(&[-0.5; 3], &[0.5; 3]).unwrap();
        let g = GridDensity::indicator(&k, vec![-1.0; 3], vec![1.0; 3], vec![8, 8, 8]).unwrap();
        assert_relative_eq!(g.mass(), 1.0, max_relative = 1e-12);
        let t = Polytope::from_points(&[vec![0.0; 3], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]], 3)
            .unwrap();
        let g = GridDensity::indicator(&t, vec![-0.1; 3], vec![1.1; 3], vec![24; 3]).unwrap();
        assert!((g.mass() - 1.0 / 6.0).abs() <= 0.02 / 6.0);
    }

    #[test]
    fn square_rearranges_to_disk() {
        let f = unit_square_indicator(256);
        let s = symmetric_decreasing_rearrangement(&f);
        assert_relative_eq!(s.mass(), f.mass(), max_relative = 1e-12);
        let r = 1.0 / std::f64::consts::PI.sqrt();
        let disk = GridDensity::from_fn(vec![-1.0, -1.0], vec![1.0, 1.0], vec![256, 256], |x| {
            if x[0].hypot(x[1]) <= r { 1.0 } else { 0.0 }
        })
        .unwrap();
        assert!(s.l1_distance(&disk).unwrap() <= 0.02 * f.mass());
    }

    #[test]
    fn superlevel_sets_and_value_multiset() {
        let f = GridDensity::from_fn(vec![-1.0, -2.0], vec![3.0, 2.0], vec![17, 12], |x| {
            ((x[0] * 3.1).sin() + (x[1] * 1.7).cos()).abs()
        })
        .unwrap();
        let s = symmetric_decreasing_rearrangement(&f);
        let mut a = f.values().to_vec();
        let mut b = s.values().to_vec();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        assert_eq!(a, b);
        for w in a.windows(2) {
            if w[0] < w[1] {
                let t = 0.5 * (w[0] + w[1]);
                assert_eq!(f.superlevel_volume(t), s.superlevel_volume(t));
            }
        }
        // radially nonincreasing
        let c = s.box_center();
        let mut cells: Vec<usize> = (0..s.values().len()).collect();
        let d = |i: usize| s.cell_center(i).iter().zip(&c).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
        cells.sort_by(|&i, &j| d(i).total_cmp(&d(j)).then(i.cmp(&j)));
        for w in cells.windows(2) {
            assert!(s.values()[w[0]] >= s.values()[w[1]]);
        }
    }

    #[test]
    fn radial_density_is_a_fixed_point() {
        let f = GridDensity::from_fn(vec![-1.0, -1.0], vec![1.0, 1.0], vec![31, 31], |x| (-(x[0] * x[0] + x[1] * x[1])).exp())
            .unwrap();
        let s = symmetric_decreasing_rearrangement(&f);
        assert!(s.l1_distance(&f).unwrap() <= 1e-12);
    }

    #[test]
    fn steiner_rearrangement_of_triangle() {
        let tri = Polytope::from_points(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]], 2).unwrap();
        let (lo, hi, res) = (vec![-1.0, -1.0], vec![1.0, 1.0], vec![200, 200]);
        let f = GridDensity::indicator(&tri, lo.clone(), hi.clone(), res.clone()).unwrap();
        let g = steiner_rearrangement(&f, 1).unwrap();
        let exact = steiner(&tri, &Direction::axis(2, 1)).unwrap();
        let want = GridDensity::indicator(&exact, lo, hi, res).unwrap();
        assert!(g.l1_distance(&want).unwrap() <= 0.02 * f.mass());
        assert_relative_eq!(g.mass(), f.mass(), max_relative = 1e-12);
        let (mg, mf) = (marginal_profile(&g, 0).unwrap(), marginal_profile(&f, 0).unwrap());
        for (a, b) in mg.values.iter().zip(&mf.values) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn symmetric_density_is_fixed_by_steiner() {
        let f = GridDensity::from_fn(vec![-1.0, -1.0], vec![1.0, 1.0], vec![20, 21], |x| 1.0 / (1.0 + x[0] * x[0] + 3.0 * x[1].abs()))
            .unwrap();
        for axis in 0..2 {
            assert!(steiner_rearrangement(&f, axis).unwrap().l1_distance(&f).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn iterated_steiner_approaches_f_star() {
        let k = Polytope::from_points(&[vec![-0.2, -0.7], vec![0.8, -0.1], vec![0.1, 0.6], vec![-0.6, 0.3]], 2).unwrap();
        let k = k.translate(&[0.1, -0.05]);
        let f = GridDensity::indicator(&k, vec![-1.0, -1.0], vec![1.0, 1.0], vec![64, 64]).unwrap();
        let star = symmetric_decreasing_rearrangement(&f);
        let mut g = f.clone();
        let d0 = g.l1_distance(&star).unwrap();
        let mut d = d0;
        for _ in 0..6 {
            g = steiner_rearrangement(&g, 0).unwrap();
            g = diagonal_steiner_rearrangement(&g, 0, 1, 1).unwrap();
            g = steiner_rearrangement(&g, 1).unwrap();
            g = diagonal_steiner_rearrangement(&g, 0, 1, -1).unwrap();
            d = g.l1_distance(&star).unwrap();
        }
        assert!(d <= 0.3 * d0, "{d} vs {d0}");
        assert_relative_eq!(g.mass(), f.mass(), max_relative = 1e-12);
    }

    #[test]
    fn marginals() {
        let disk = GridDensity::from_fn(vec![-1.0, -1.0], vec![1.0, 1.0], vec![400, 400], |x| {
            if x[0].hypot(x[1]) <= 1.0 { 1.0 } else { 0.0 }
        })
        .unwrap();
        let m = marginal_profile(&disk, 0).unwrap();
        for (y, v) in m.centers().iter().zip(&m.values) {
            assert!((v - 2.0 * (1.0 - y * y).max(0.0).sqrt()).abs() <= 0.02);
        }
        let prod = GridDensity::from_fn(vec![0.0, 0.0], vec![1.0, 2.0], vec![10, 16], |x| (1.0 + x[0]) * x[1] * x[1]).unwrap();
        let m = marginal_profile(&prod, 1).unwrap();
        let xint: f64 = (0..10).map(|i| 1.0 + (i as f64 + 0.5) / 10.0).sum::<f64>() * 0.1;
        for (y, v) in m.centers().iter().zip(&m.values) {
            assert_relative_eq!(*v, xint * y * y, max_relative = 1e-12);
        }
        assert_relative_eq!(m.mass(), prod.mass(), max_relative = 1e-12);
    }

    #[test]
    fn sampling() {
        let f = GridDensity::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![4, 4], vec![1.0; 16]).unwrap();
        let pts = sample(&f, 20000, 1).unwrap();
        let n = pts.len() as f64;
        for a in 0..2 {
            let mean = pts.iter().map(|p| p[a]).sum::<f64>() / n;
            assert!((mean - 0.5).abs() <= 3.0 * (1.0 / 12.0f64).sqrt() / n.sqrt());
        }
        assert_eq!(pts, sample(&f, 20000, 1).unwrap());
        let ind = unit_square_indicator(16);
        for p in sample(&ind, 2000, 2).unwrap() {
            assert!(ind.value_at(&p) > 0.0);
        }
    }

    #[test]
    fn chi_squared_goodness_of_fit() {
        let f = GridDensity::from_fn(vec![0.0, 0.0], vec![1.0, 1.0], vec![32, 32], |x| 0.2 + x[0] + x[1] * x[1]).unwrap();
        let n = 100_000;
        let pts = sample(&f, n, 3).unwrap();
        // 16 coarse cells: 4 × 4 blocks of 8 × 8 fine cells
        let mut expect = [0.0; 16];
        for (c, v) in f.values().iter().enumerate() {
            let idx = f.multi_index(c);
            expect[(idx[0] / 8) * 4 + idx[1] / 8] += v;
        }
        let total: f64 = expect.iter().sum();
        let mut seen = [0.0; 16];
        for p in &pts {
            let i = ((p[0] * 4.0) as usize).min(3);
            let j = ((p[1] * 4.0) as usize).min(3);
            seen[i * 4 + j] += 1.0;
        }
        let chi2: f64 = (0..16)
            .map(|k| {
                let e = expect[k] / total * n as f64;
                (seen[k] - e) * (seen[k] - e) / e
            })
            .sum();
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        let crit = ChiSquared::new(15.0).unwrap().inverse_cdf(0.99);
        assert!(chi2 <= crit, "{chi2} > {crit}");
    }

    #[test]
    fn file_round_trip_and_csv() {
        let f = unit_square_indicator(8);
        let text = serde_json::to_string(&f.to_file()).unwrap();
        let back = GridDensity::from_file(serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, f);
        let mut buf = Vec::new();
        write_points_csv(&mut buf, &[vec![0.5, 0.25]]).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("x0,x1\n"));
        assert!(GridDensity::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![1, 1], vec![0.0]).is_err());
    }
}
