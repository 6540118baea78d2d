//! Small dense-vector helpers for ambient dimensions 1 to 3 (and flattened
//! matrices up to 6 entries).

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// `a + s * b`
pub fn axpy(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn cross3(a: &[f64], b: &[f64]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// z-component of the 2-D cross product `(a - o) x (b - o)`.
pub fn cross2(o: &[f64], a: &[f64], b: &[f64]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

pub fn normalized(a: &[f64]) -> Option<Vec<f64>> {
    let n = norm(a);
    if n > 0.0 && n.is_finite() {
        Some(scale(a, 1.0 / n))
    } else {
        None
    }
}

/// Lexicographic comparison of coordinate vectors (total order on finite floats).
pub fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

/// Orthonormal basis of the hyperplane `u^⊥`, built by Gram–Schmidt from the
/// standard basis vectors in index order.
///
/// A candidate axis is accepted when its residual norm is at least 0.5; a
/// second pass with a looser cutoff only runs when the first pass came up
/// short, which keeps the basis well conditioned and deterministic.
pub fn complement_basis(u: &[f64]) -> Vec<Vec<f64>> {
    let n = u.len();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n.saturating_sub(1));
    for cutoff in [0.5, 1e-3] {
        for i in 0..n {
            if basis.len() == n - 1 {
                return basis;
            }
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            let mut r = axpy(&e, -dot(&e, u), u);
            for b in &basis {
                r = axpy(&r, -dot(&r, b), b);
            }
            let rn = norm(&r);
            if rn >= cutoff && basis.iter().all(|b| dot(b, &r).abs() < 1e-12 * rn.max(1.0)) {
                basis.push(scale(&r, 1.0 / rn));
            }
        }
    }
    basis
}

/// Determinant of a square matrix given as rows (Gaussian elimination with
/// partial pivoting).
pub fn det(rows: &[Vec<f64>]) -> f64 {
    let n = rows.len();
    let mut a: Vec<Vec<f64>> = rows.to_vec();
    let mut d = 1.0;
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))
            .unwrap();
        if a[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            a.swap(p, c);
            d = -d;
        }
        d *= a[c][c];
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
        }
    }
    d
}

/// Numerical rank of a set of row vectors, with an absolute pivot cutoff.
pub fn rank(rows: &[Vec<f64>], tol: f64) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let cols = rows[0].len();
    let mut a: Vec<Vec<f64>> = rows.to_vec();
    let mut r = 0;
    for c in 0..cols {
        if r == a.len() {
            break;
        }
        let p = (r..a.len())
            .max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))
            .unwrap();
        if a[p][c].abs() <= tol {
            continue;
        }
        a.swap(p, r);
        for i in r + 1..a.len() {
            let f = a[i][c] / a[r][c];
            for k in c..cols {
                a[i][k] -= f * a[r][k];
            }
        }
        r += 1;
    }
    r
}
