//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

pub(crate) fn to_matrix(a: &[Vec<f64>]) -> DMatrix<f64> {
    let p = a.len();
    DMatrix::from_fn(p, p, |i, j| a[i][j])
}

/// Solves `a x = b`; `None` when `a` is singular.
pub fn solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let lu = to_matrix(a).lu();
    lu.solve(&DVector::from_column_slice(b)).map(|x| x.iter().copied().collect()).filter(|x: &Vec<f64>| x.iter().all(|v| v.is_finite()))
}

pub fn inverse(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let p = a.len();
    let inv = to_matrix(a).try_inverse()?;
    let out: Vec<Vec<f64>> = (0..p).map(|i| (0..p).map(|j| inv[(i, j)]).collect()).collect();
    out.iter().flatten().all(|v| v.is_finite()).then_some(out)
}

/// Newton direction for maximising a concave function with gradient `g` and
/// Hessian `h`: solves `-h d = g`, adding a growing ridge when `-h` is not
/// positive definite.
pub fn ascent_direction(h: &[Vec<f64>], g: &[f64]) -> Vec<f64> {
    let p = g.len();
    let neg = DMatrix::from_fn(p, p, |i, j| -h[i][j]);
    let scale = (0..p).map(|i| neg[(i, i)].abs()).fold(0.0, f64::max).max(1e-12);
    let mut ridge = 0.0;
    for _ in 0..40 {
        let m = &neg + DMatrix::identity(p, p) * ridge;
        if let Some(ch) = m.cholesky() {
            let d = ch.solve(&DVector::from_column_slice(g));
            if d.iter().all(|v| v.is_finite()) {
                return d.iter().copied().collect();
            }
        }
        ridge = if ridge == 0.0 { scale * 1e-10 } else { ridge * 10.0 };
    }
    g.iter().map(|v| v / scale).collect()
}

/// Eigenpairs of a symmetric matrix with the `k` largest eigenvalues, in
/// decreasing order. Eigenvector signs are fixed so the largest-magnitude
/// entry is positive.
pub fn top_eigen(m: DMatrix<f64>, k: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let k = k.min(n);
    let values = order.iter().take(k).map(|&c| eig.eigenvalues[c]).collect();
    let vectors = order
        .iter()
        .take(k)
        .map(|&c| {
            let col: Vec<f64> = eig.eigenvectors.column(c).iter().copied().collect();
            let pivot = col.iter().copied().fold(0.0f64, |a, v| if v.abs() > a.abs() { v } else { a });
            if pivot < 0.0 {
                col.iter().map(|v| -v).collect()
            } else {
                col
            }
        })
        .collect();
    (values, vectors)
}

/// Full spectrum, decreasing.
pub fn eigenvalues_desc(m: DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}
