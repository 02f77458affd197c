//! Maximal correlation and the stationarity conditions for suprema of the
//! squared maximal correlation over a lower set.

use rayon::prelude::*;

use crate::dist::{JointDist, ParamFamily};
use crate::error::{Error, Result};
use crate::svd::{jacobi_svd, singular_values_2x2, Svd};

/// Gap below which neighboring singular values count as degenerate.
pub const MULTIPLICITY_TOL: f64 = 1e-9;

/// The correlation matrix `A(x,y) = P(x,y) / sqrt(P_X(x) P_Y(y))`, restricted
/// to the support of the marginals. Returns the dense matrix together with
/// the surviving row/column indices of the original alphabet.
pub fn correlation_matrix(joint: &JointDist) -> Result<(Vec<f64>, Vec<usize>, Vec<usize>)> {
    let xs: Vec<usize> = (0..joint.alphabet_x())
        .filter(|&x| joint.marginal_x()[x] > 0.0)
        .collect();
    let ys: Vec<usize> = (0..joint.alphabet_y())
        .filter(|&y| joint.marginal_y()[y] > 0.0)
        .collect();
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::DegenerateSupport(
            "all marginal mass vanished".into(),
        ));
    }
    let mut a = vec![0.0; xs.len() * ys.len()];
    for (i, &x) in xs.iter().enumerate() {
        let px = joint.marginal_x()[x];
        for (j, &y) in ys.iter().enumerate() {
            let py = joint.marginal_y()[y];
            a[i * ys.len() + j] = joint.get(x, y) / (px * py).sqrt();
        }
    }
    Ok((a, xs, ys))
}

/// Maximal correlation coefficient: the second largest singular value of the
/// correlation matrix. Degenerate one-row or one-column support gives 0.
pub fn maximal_correlation(joint: &JointDist) -> Result<f64> {
    let (a, xs, ys) = correlation_matrix(joint)?;
    if xs.len() == 1 || ys.len() == 1 {
        return Ok(0.0);
    }
    let sigma2 = if xs.len() == 2 && ys.len() == 2 {
        singular_values_2x2(a[0], a[1], a[2], a[3])[1]
    } else {
        jacobi_svd(&a, xs.len(), ys.len()).singular_values[1]
    };
    debug_assert!(sigma2 <= 1.0 + 1e-9, "sigma2 = {sigma2} above 1");
    Ok(sigma2.clamp(0.0, 1.0))
}

/// Singular data of the correlation matrix around the second singular value.
#[derive(Clone, Debug)]
pub struct SingularData {
    /// All singular values, descending. The first is 1 for any valid joint.
    pub singular_values: Vec<f64>,
    /// Left singular vector for the second singular value (support indices).
    pub u: Vec<f64>,
    /// Right singular vector for the second singular value.
    pub v: Vec<f64>,
    /// False when the second singular value is within `1e-9` of a neighbor.
    pub sigma2_simple: bool,
}

pub fn singular_data(joint: &JointDist) -> Result<SingularData> {
    let (a, xs, ys) = correlation_matrix(joint)?;
    if xs.len() == 1 || ys.len() == 1 {
        return Err(Error::DegenerateSupport(
            "no second singular value on a single-row or single-column support".into(),
        ));
    }
    let Svd {
        singular_values,
        u,
        v,
    } = jacobi_svd(&a, xs.len(), ys.len());
    let s2 = singular_values[1];
    let gap_above = singular_values[0] - s2;
    let gap_below = singular_values
        .get(2)
        .map(|&s3| s2 - s3)
        .unwrap_or(f64::INFINITY);
    Ok(SingularData {
        sigma2_simple: gap_above > MULTIPLICITY_TOL && gap_below > MULTIPLICITY_TOL,
        singular_values,
        u: u[1].clone(),
        v: v[1].clone(),
    })
}

/// Residual norms of the four first-order conditions satisfied when the base
/// distribution itself maximizes the squared maximal correlation over its
/// lower set: `u^2 = P_{X|Y} v^2`, `v^2 = P_{Y|X} u^2`, `u^2 = P_X`,
/// `v^2 = P_Y` (entrywise squares, sup-norm residuals).
#[derive(Clone, Debug)]
pub struct StationarityReport {
    pub residual_u_kernel: f64,
    pub residual_v_kernel: f64,
    pub residual_u_marginal: f64,
    pub residual_v_marginal: f64,
    pub sigma2: f64,
    /// Set when the second singular value is degenerate; the residuals are
    /// then reported for an arbitrary basis vector.
    pub multiplicity_warning: bool,
}

impl StationarityReport {
    pub fn max_residual(&self) -> f64 {
        self.residual_u_kernel
            .max(self.residual_v_kernel)
            .max(self.residual_u_marginal)
            .max(self.residual_v_marginal)
    }
}

pub fn stationarity_residuals(joint: &JointDist) -> Result<StationarityReport> {
    let data = singular_data(joint)?;
    let (_, xs, ys) = correlation_matrix(joint)?;
    let px: Vec<f64> = xs.iter().map(|&x| joint.marginal_x()[x]).collect();
    let py: Vec<f64> = ys.iter().map(|&y| joint.marginal_y()[y]).collect();
    let u2: Vec<f64> = data.u.iter().map(|x| x * x).collect();
    let v2: Vec<f64> = data.v.iter().map(|x| x * x).collect();

    // P_{X|Y} v^2 and P_{Y|X} u^2 on the restricted support.
    let mut u_pred = vec![0.0; xs.len()];
    let mut v_pred = vec![0.0; ys.len()];
    for (i, &x) in xs.iter().enumerate() {
        for (j, &y) in ys.iter().enumerate() {
            let p = joint.get(x, y);
            u_pred[i] += p / py[j] * v2[j];
            v_pred[j] += p / px[i] * u2[i];
        }
    }
    let sup = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0f64, f64::max)
    };
    Ok(StationarityReport {
        residual_u_kernel: sup(&u2, &u_pred),
        residual_v_kernel: sup(&v2, &v_pred),
        residual_u_marginal: sup(&u2, &px),
        residual_v_marginal: sup(&v2, &py),
        sigma2: data.singular_values[1],
        multiplicity_warning: !data.sigma2_simple,
    })
}

/// Squared maximal correlation of a lower-set member of a binary symmetric
/// base, in terms of the sum `s` and product `p` of the off-diagonal factor
/// entries: `(1-2e)^2 p / ((1-2e)^2 p + e(1-2e) s + e^2)`.
pub fn rho_m_bss_closed_form(epsilon: f64, s: f64, p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::Domain(format!("epsilon={epsilon} not in [0,1]")));
    }
    let slack = 1e-12;
    if s < -slack || (epsilon > 0.0 && s > 1.0 / epsilon + slack) {
        return Err(Error::Domain(format!(
            "s={s} outside [0, 1/epsilon] for epsilon={epsilon}"
        )));
    }
    let eb = 1.0 - epsilon;
    let cap = 0.25 * ((1.0 - epsilon * s) / eb).powi(2).min(s * s);
    if p < -slack || p > cap + slack {
        return Err(Error::Domain(format!(
            "p={p} outside the admissible range [0, {cap}] for s={s}"
        )));
    }
    let rho1 = (1.0 - 2.0 * epsilon).powi(2);
    let denom = rho1 * p + epsilon * (1.0 - 2.0 * epsilon) * s + epsilon * epsilon;
    if denom <= 0.0 {
        return Ok(0.0);
    }
    Ok(rho1 * p / denom)
}

/// The `(s, p)` coordinates of the chart point `(f, g)` of a binary symmetric
/// base: `s = (f*g)/Z`, `p = f f' g g' / Z^2`.
pub fn bss_factor_sum_product(epsilon: f64, f: f64, g: f64) -> Result<(f64, f64)> {
    let conv = |a: f64, b: f64| (1.0 - a) * b + a * (1.0 - b);
    let z = conv(conv(f, g), 1.0 - epsilon);
    if z <= 0.0 {
        return Err(Error::SingularParameter {
            f,
            g,
            reason: format!("normalizer Z = {z}"),
        });
    }
    Ok((conv(f, g) / z, f * (1.0 - f) * g * (1.0 - g) / (z * z)))
}

/// Maximum of the squared maximal correlation over a uniform chart grid,
/// skipping singular or degenerate cells. Returns the value and argmax.
pub fn sup_rho_m_over_lower_set(family: ParamFamily, grid_n: usize) -> Result<(f64, (f64, f64))> {
    if grid_n < 3 {
        return Err(Error::Domain(format!("grid_n={grid_n} below 3")));
    }
    let step = 1.0 / (grid_n - 1) as f64;
    let best = (0..grid_n)
        .into_par_iter()
        .map(|i| {
            let f = i as f64 * step;
            let mut row_best = (f64::NEG_INFINITY, (0.0, 0.0), usize::MAX);
            for j in 0..grid_n {
                let g = j as f64 * step;
                let Ok(joint) = family.joint(f, g) else {
                    continue;
                };
                let Ok(rho) = maximal_correlation(&joint) else {
                    continue;
                };
                let val = rho * rho;
                if val > row_best.0 {
                    row_best = (val, (f, g), i * grid_n + j);
                }
            }
            row_best
        })
        .reduce(
            || (f64::NEG_INFINITY, (0.0, 0.0), usize::MAX),
            // ties broken by cell index so the reduction is order-independent
            |a, b| {
                if b.0 > a.0 || (b.0 == a.0 && b.2 < a.2) {
                    b
                } else {
                    a
                }
            },
        );
    if best.0.is_infinite() {
        return Err(Error::DegenerateSupport("no evaluable grid cell".into()));
    }
    Ok((best.0, best.1))
}
