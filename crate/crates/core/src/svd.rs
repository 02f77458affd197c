//! Dependency-free singular value decomposition for the small dense
//! matrices that show up here (alphabets of a handful of symbols).
//!
//! One-sided Jacobi orthogonalizes the columns of `A` by plane rotations;
//! the column norms are the singular values and the accumulated rotations
//! are the right singular vectors. Working on `A` directly (instead of
//! `A^T A`) keeps small singular values at full precision.

/// Relative orthogonality target for the Jacobi sweeps.
pub const JACOBI_TOL: f64 = 1e-13;

const MAX_SWEEPS: usize = 64;

/// Singular value decomposition `A = U diag(s) V^T` with `s` descending.
#[derive(Clone, Debug)]
pub struct Svd {
    pub singular_values: Vec<f64>,
    /// Left singular vectors, one per singular value, each of length `m`.
    pub u: Vec<Vec<f64>>,
    /// Right singular vectors, one per singular value, each of length `n`.
    pub v: Vec<Vec<f64>>,
}

/// One-sided Jacobi SVD of a dense row-major `m x n` matrix.
pub fn jacobi_svd(a: &[f64], m: usize, n: usize) -> Svd {
    assert_eq!(a.len(), m * n, "matrix shape mismatch");
    if m < n {
        // Work on the transpose and swap the vector roles.
        let mut t = vec![0.0; m * n];
        for x in 0..m {
            for y in 0..n {
                t[y * m + x] = a[x * n + y];
            }
        }
        let svd = jacobi_svd(&t, n, m);
        return Svd {
            singular_values: svd.singular_values,
            u: svd.v,
            v: svd.u,
        };
    }

    // Columns of b; v accumulates the right rotations.
    let mut b: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..m).map(|i| a[i * n + j]).collect())
        .collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n {
            for j in (i + 1)..n {
                let alpha: f64 = b[i].iter().map(|x| x * x).sum();
                let beta: f64 = b[j].iter().map(|x| x * x).sum();
                let gamma: f64 = b[i].iter().zip(&b[j]).map(|(x, y)| x * y).sum();
                if gamma == 0.0 || gamma.abs() <= JACOBI_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut b, i, j, c, s);
                rotate_pair(&mut v, i, j, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = b
        .iter()
        .map(|col| col.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap());

    let mut singular_values = Vec::with_capacity(n);
    let mut u: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut vs: Vec<Vec<f64>> = Vec::with_capacity(n);
    for &k in &order {
        let sigma = norms[k];
        singular_values.push(sigma);
        if sigma > 0.0 {
            u.push(b[k].iter().map(|x| x / sigma).collect());
        } else {
            u.push(vec![0.0; m]);
        }
        vs.push(v[k].clone());
    }
    // Null columns get left vectors from the orthogonal complement so the
    // caller always sees an orthonormal pair.
    for k in 0..n {
        if singular_values[k] == 0.0 {
            if let Some(w) = complement_vector(&u[..k], m) {
                u[k] = w;
            }
        }
    }
    Svd {
        singular_values,
        u,
        v: vs,
    }
}

/// Plane rotation of columns `i < j` in place.
fn rotate_pair(cols: &mut [Vec<f64>], i: usize, j: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(j);
    for (x, y) in lo[i].iter_mut().zip(hi[0].iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

/// A unit vector orthogonal to all of `basis` (Gram-Schmidt over the
/// standard basis); `None` only if the basis already spans.
fn complement_vector(basis: &[Vec<f64>], m: usize) -> Option<Vec<f64>> {
    for seed in 0..m {
        let mut w: Vec<f64> = (0..m).map(|i| if i == seed { 1.0 } else { 0.0 }).collect();
        for b in basis {
            let dot: f64 = w.iter().zip(b).map(|(x, y)| x * y).sum();
            for (wi, bi) in w.iter_mut().zip(b) {
                *wi -= dot * bi;
            }
        }
        let norm: f64 = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            for wi in w.iter_mut() {
                *wi /= norm;
            }
            return Some(w);
        }
    }
    None
}

/// Exact singular values of a 2x2 matrix `[a b; c d]`, descending.
pub fn singular_values_2x2(a: f64, b: f64, c: f64, d: f64) -> [f64; 2] {
    let e = (a + d) / 2.0;
    let f = (a - d) / 2.0;
    let g = (c + b) / 2.0;
    let h = (c - b) / 2.0;
    let q = e.hypot(h);
    let r = f.hypot(g);
    [q + r, (q - r).abs()]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reconstruct(svd: &Svd, m: usize, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; m * n];
        for (k, sigma) in svd.singular_values.iter().enumerate() {
            for i in 0..m {
                for j in 0..n {
                    out[i * n + j] += sigma * svd.u[k][i] * svd.v[k][j];
                }
            }
        }
        out
    }

    #[test]
    fn jacobi_reconstructs_small_matrices() {
        // deterministic pseudo-random entries
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for &(m, n) in &[(2usize, 2usize), (3, 3), (4, 3), (2, 4)] {
            for _ in 0..20 {
                let a: Vec<f64> = (0..m * n).map(|_| next() - 0.3).collect();
                let svd = jacobi_svd(&a, m, n);
                let back = reconstruct(&svd, m, n);
                for (x, y) in a.iter().zip(&back) {
                    assert!((x - y).abs() < 1e-12, "{m}x{n}: {x} vs {y}");
                }
                // descending, nonnegative
                for w in svd.singular_values.windows(2) {
                    assert!(w[0] >= w[1] && w[1] >= 0.0);
                }
                // orthonormal right vectors
                for k in 0..n.min(m) {
                    for l in 0..k {
                        let dot: f64 = svd.v[k].iter().zip(&svd.v[l]).map(|(x, y)| x * y).sum();
                        assert!(dot.abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn closed_form_matches_jacobi_on_2x2() {
        for &(a, b, c, d) in &[
            (0.89, 0.11, 0.11, 0.89),
            (1.0, 0.0, 0.0, 1.0),
            (0.5, 0.5, 0.5, 0.5),
            (0.3, -0.7, 0.2, 0.9),
        ] {
            let closed = singular_values_2x2(a, b, c, d);
            let svd = jacobi_svd(&[a, b, c, d], 2, 2);
            assert!((closed[0] - svd.singular_values[0]).abs() < 1e-13);
            assert!((closed[1] - svd.singular_values[1]).abs() < 1e-13);
        }
    }

    #[test]
    fn rank_deficient_gets_complement_vector() {
        let svd = jacobi_svd(&[1.0, 1.0, 1.0, 1.0], 2, 2);
        assert!((svd.singular_values[0] - 2.0).abs() < 1e-14);
        assert_eq!(svd.singular_values[1], 0.0);
        let dot: f64 = svd.u[0].iter().zip(&svd.u[1]).map(|(x, y)| x * y).sum();
        assert!(dot.abs() < 1e-12);
        let norm: f64 = svd.u[1].iter().map(|x| x * x).sum::<f64>();
        assert!((norm - 1.0).abs() < 1e-12);
    }
}
