//! Dense helpers for the small systems that show up around the sparse
//! solver: Gram matrices of Killing bases and Rayleigh-Ritz blocks.

use crate::error::{Error, Result};

/// Row-major dense matrix, only used at sizes of a few dozen.
pub type DMat = Vec<Vec<f64>>;

pub fn zeros(n: usize, m: usize) -> DMat {
    vec![vec![0.0; m]; n]
}

/// Solve A x = b by Gaussian elimination with partial pivoting.
pub fn solve(a: &DMat, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.len();
    assert_eq!(b.len(), n);
    let mut m: Vec<Vec<f64>> = a.iter().cloned().collect();
    let mut x = b.to_vec();
    for k in 0..n {
        let piv = (k..n)
            .max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs()))
            .unwrap();
        if m[piv][k].abs() < 1e-300 {
            return Err(Error::SingularSystem("dense pivot vanished".into()));
        }
        m.swap(k, piv);
        x.swap(k, piv);
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            if f == 0.0 {
                continue;
            }
            for j in k..n {
                m[i][j] -= f * m[k][j];
            }
            x[i] -= f * x[k];
        }
    }
    for k in (0..n).rev() {
        let mut s = x[k];
        for j in k + 1..n {
            s -= m[k][j] * x[j];
        }
        x[k] = s / m[k][k];
    }
    Ok(x)
}

/// In-place lower Cholesky A = L L^T; errors on non-positive pivots.
pub fn cholesky(a: &DMat) -> Result<DMat> {
    let n = a.len();
    let mut l = zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(Error::SingularSystem(format!(
                        "cholesky pivot {s:.3e} at index {i}"
                    )));
                }
                l[i][j] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Ok(l)
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
/// Returns eigenvalues ascending and eigenvectors as columns.
pub fn sym_eig(a: &DMat) -> (Vec<f64>, DMat) {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.iter().cloned().collect();
    let mut v = zeros(n, n);
    for i in 0..n {
        v[i][i] = 1.0;
    }
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += m[i][j] * m[i][j];
            }
        }
        if off.sqrt() < 1e-14 * (1.0 + frob(&m)) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k][p], v[k][q]);
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i][i].total_cmp(&m[j][j]));
    let vals = order.iter().map(|&i| m[i][i]).collect();
    let mut vecs = zeros(n, n);
    for (new, &old) in order.iter().enumerate() {
        for k in 0..n {
            vecs[k][new] = v[k][old];
        }
    }
    (vals, vecs)
}

/// Generalized symmetric eigenproblem A x = lambda M x with M positive
/// definite. Returns eigenvalues ascending and M-orthonormal eigenvectors
/// as columns.
pub fn sym_generalized_eig(a: &DMat, m: &DMat) -> Result<(Vec<f64>, DMat)> {
    let n = a.len();
    let l = cholesky(m)?;
    // C = L^{-1} A L^{-T}
    let mut c = zeros(n, n);
    // first W = L^{-1} A (forward substitution on columns of A)
    let mut w = zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            let mut s = a[i][j];
            for k in 0..i {
                s -= l[i][k] * w[k][j];
            }
            w[i][j] = s / l[i][i];
        }
    }
    // C = W L^{-T}: C^T = L^{-1} W^T, i.e. forward substitution on rows
    for i in 0..n {
        for j in 0..n {
            let mut s = w[i][j];
            for k in 0..j {
                s -= l[j][k] * c[i][k];
            }
            c[i][j] = s / l[j][j];
        }
    }
    // symmetrize against rounding
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (c[i][j] + c[j][i]);
            c[i][j] = v;
            c[j][i] = v;
        }
    }
    let (vals, q) = sym_eig(&c);
    // x = L^{-T} q, back substitution per column
    let mut x = zeros(n, n);
    for j in 0..n {
        for i in (0..n).rev() {
            let mut s = q[i][j];
            for k in i + 1..n {
                s -= l[k][i] * x[k][j];
            }
            x[i][j] = s / l[i][i];
        }
    }
    Ok((vals, x))
}

fn frob(a: &DMat) -> f64 {
    a.iter()
        .flat_map(|r| r.iter())
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
}
