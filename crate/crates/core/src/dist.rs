//! Finite-alphabet joint distributions, the two-parameter lower-set charts,
//! and XY-absolute-continuity factorization.
//!
//! A distribution `nu` is XY-absolutely continuous with respect to `mu`
//! when the density `d nu / d mu` factorizes as `f(x) g(y)` on the support
//! of `mu`. The lower set of a base distribution collects everything
//! reachable that way; for the binary charts used here it is a
//! two-parameter surface.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::info::{entropy_unchecked, kahan_sum, PROB_SUM_TOL};

/// Relative tolerance for the rank-one factorization test.
pub const FACTOR_TOL: f64 = 1e-9;

/// A joint probability mass matrix over finite alphabets.
///
/// Entries are nonnegative and sum to one; construction validates to
/// absolute tolerance `1e-9` and renormalizes so the sum is exactly one.
#[derive(Clone, Debug, PartialEq)]
pub struct JointDist {
    matrix: Vec<f64>, // row-major, m x n
    m: usize,
    n: usize,
    px: Vec<f64>,
    py: Vec<f64>,
}

impl JointDist {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = rows.len();
        if m == 0 {
            return Err(Error::InvalidDistribution("empty matrix".into()));
        }
        let n = rows[0].len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidDistribution(
                "rows must be nonempty and of equal length".into(),
            ));
        }
        let mut matrix = Vec::with_capacity(m * n);
        for row in &rows {
            matrix.extend_from_slice(row);
        }
        Self::from_flat(matrix, m, n)
    }

    pub fn from_flat(mut matrix: Vec<f64>, m: usize, n: usize) -> Result<Self> {
        if matrix.len() != m * n {
            return Err(Error::InvalidDistribution(format!(
                "expected {} entries, got {}",
                m * n,
                matrix.len()
            )));
        }
        for (k, e) in matrix.iter_mut().enumerate() {
            if !e.is_finite() || *e < -PROB_SUM_TOL {
                return Err(Error::InvalidDistribution(format!(
                    "entry ({}, {}) is {}",
                    k / n,
                    k % n,
                    e
                )));
            }
            if *e < 0.0 {
                *e = 0.0;
            }
        }
        let sum = kahan_sum(matrix.iter().copied());
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidDistribution(format!(
                "entries sum to {sum}, expected 1 within {PROB_SUM_TOL}"
            )));
        }
        for e in matrix.iter_mut() {
            *e /= sum;
        }
        let mut px = vec![0.0; m];
        let mut py = vec![0.0; n];
        for x in 0..m {
            for y in 0..n {
                let p = matrix[x * n + y];
                px[x] += p;
                py[y] += p;
            }
        }
        Ok(Self {
            matrix,
            m,
            n,
            px,
            py,
        })
    }

    #[inline]
    pub fn alphabet_x(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn alphabet_y(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.matrix[x * self.n + y]
    }

    pub fn entries(&self) -> &[f64] {
        &self.matrix
    }

    pub fn marginal_x(&self) -> &[f64] {
        &self.px
    }

    pub fn marginal_y(&self) -> &[f64] {
        &self.py
    }

    /// `H(X,Y)` in nats.
    pub fn joint_entropy(&self) -> f64 {
        entropy_unchecked(&self.matrix)
    }

    /// `H(X|Y) = H(X,Y) - H(Y)` in nats.
    pub fn cond_entropy_x_given_y(&self) -> f64 {
        (self.joint_entropy() - entropy_unchecked(&self.py)).max(0.0)
    }

    /// `H(Y|X) = H(X,Y) - H(X)` in nats.
    pub fn cond_entropy_y_given_x(&self) -> f64 {
        (self.joint_entropy() - entropy_unchecked(&self.px)).max(0.0)
    }

    pub fn transpose(&self) -> JointDist {
        let mut t = vec![0.0; self.m * self.n];
        for x in 0..self.m {
            for y in 0..self.n {
                t[y * self.m + x] = self.get(x, y);
            }
        }
        JointDist {
            matrix: t,
            m: self.n,
            n: self.m,
            px: self.py.clone(),
            py: self.px.clone(),
        }
    }

    /// Parse from the JSON schema `{"matrix": [[..]], "labels_x": [..], "labels_y": [..]}`.
    pub fn from_json(text: &str) -> Result<(JointDist, Vec<String>, Vec<String>)> {
        let raw: JointDistJson = serde_json::from_str(text)?;
        let dist = JointDist::from_rows(raw.matrix)?;
        let labels_x = match raw.labels_x {
            Some(l) if l.len() == dist.m => l,
            Some(l) => {
                return Err(Error::InvalidDistribution(format!(
                    "labels_x has {} entries for {} rows",
                    l.len(),
                    dist.m
                )))
            }
            None => (0..dist.m).map(|i| i.to_string()).collect(),
        };
        let labels_y = match raw.labels_y {
            Some(l) if l.len() == dist.n => l,
            Some(l) => {
                return Err(Error::InvalidDistribution(format!(
                    "labels_y has {} entries for {} columns",
                    l.len(),
                    dist.n
                )))
            }
            None => (0..dist.n).map(|i| i.to_string()).collect(),
        };
        Ok((dist, labels_x, labels_y))
    }

    pub fn to_json(&self, labels_x: &[String], labels_y: &[String]) -> String {
        let rows: Vec<Vec<f64>> = (0..self.m)
            .map(|x| (0..self.n).map(|y| self.get(x, y)).collect())
            .collect();
        let raw = JointDistJson {
            matrix: rows,
            labels_x: Some(labels_x.to_vec()),
            labels_y: Some(labels_y.to_vec()),
        };
        serde_json::to_string_pretty(&raw).expect("serializing a plain struct cannot fail")
    }
}

#[derive(Serialize, Deserialize)]
struct JointDistJson {
    matrix: Vec<Vec<f64>>,
    #[serde(default)]
    labels_x: Option<Vec<String>>,
    #[serde(default)]
    labels_y: Option<Vec<String>>,
}

/// Two-parameter charts `(f, g) -> P_XY` onto the lower set of a binary base
/// distribution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ParamFamily {
    /// Fully supported 2x2 base whose column-conditional is a binary
    /// symmetric channel with crossover `epsilon`; the chart is
    /// `(1/Z) [e'f'g', ef'g; efg', e'fg]` with `Z = f*g*(1-e)`
    /// (primes denote complements, `*` binary convolution).
    BscKernel { epsilon: f64 },
    /// Support-three base with the (0,0) cell identically zero;
    /// the chart is `1/(f+f'g) [0, f'g; fg', fg]`.
    SupportThree,
}

impl ParamFamily {
    /// Chart map: the joint distribution at parameters `(f, g)`.
    pub fn joint(&self, f: f64, g: f64) -> Result<JointDist> {
        if !(0.0..=1.0).contains(&f) || !(0.0..=1.0).contains(&g) {
            return Err(Error::Domain(format!("(f, g) = ({f}, {g}) not in [0,1]^2")));
        }
        let (fb, gb) = (1.0 - f, 1.0 - g);
        match *self {
            ParamFamily::BscKernel { epsilon: e } => {
                if !(0.0..=1.0).contains(&e) {
                    return Err(Error::Domain(format!("epsilon={e} not in [0,1]")));
                }
                let eb = 1.0 - e;
                let raw = [eb * fb * gb, e * fb * g, e * f * gb, eb * f * g];
                let z: f64 = raw.iter().sum();
                if z <= 0.0 {
                    return Err(Error::SingularParameter {
                        f,
                        g,
                        reason: format!("normalizer Z = {z}"),
                    });
                }
                JointDist::from_flat(raw.iter().map(|r| r / z).collect(), 2, 2)
            }
            ParamFamily::SupportThree => {
                let z = f + fb * g;
                if z <= 0.0 {
                    return Err(Error::SingularParameter {
                        f,
                        g,
                        reason: "(f, g) = (0, 0) is outside the chart".into(),
                    });
                }
                JointDist::from_flat(vec![0.0, fb * g / z, f * gb / z, f * g / z], 2, 2)
            }
        }
    }

    /// Inverse chart: recover `(f, g)` from a distribution in the family's
    /// image. Round-trips with [`ParamFamily::joint`] to `1e-9` entrywise.
    pub fn params_of(&self, p: &JointDist) -> Result<(f64, f64)> {
        if p.alphabet_x() != 2 || p.alphabet_y() != 2 {
            return Err(Error::NotInLowerSet("expected a 2x2 distribution".into()));
        }
        let (f, g) = match *self {
            ParamFamily::BscKernel { epsilon: e } => {
                if !(e > 0.0 && e < 1.0) {
                    return Err(Error::Domain(
                        "inverse chart needs epsilon in (0,1); the base is decomposable otherwise"
                            .into(),
                    ));
                }
                let eb = 1.0 - e;
                // Unnormalized factor masses: p00/e' + p01/e = f'/Z and so on.
                let fb_scaled = p.get(0, 0) / eb + p.get(0, 1) / e;
                let f_scaled = p.get(1, 0) / e + p.get(1, 1) / eb;
                let gb_scaled = p.get(0, 0) / eb + p.get(1, 0) / e;
                let g_scaled = p.get(0, 1) / e + p.get(1, 1) / eb;
                (
                    f_scaled / (f_scaled + fb_scaled),
                    g_scaled / (g_scaled + gb_scaled),
                )
            }
            ParamFamily::SupportThree => {
                if p.get(0, 0) > FACTOR_TOL {
                    return Err(Error::NotInLowerSet(format!(
                        "entry (0,0) = {} must be zero",
                        p.get(0, 0)
                    )));
                }
                let px1 = p.marginal_x()[1];
                let py1 = p.marginal_y()[1];
                // Degenerate edges collapse to single points of the chart.
                if py1 <= FACTOR_TOL {
                    (1.0, 0.0)
                } else if px1 <= FACTOR_TOL {
                    (0.0, 1.0)
                } else {
                    let z = (px1 + py1 - 1.0) / (px1 * py1);
                    (z * px1, z * py1)
                }
            }
        };
        if !(0.0..=1.0 + 1e-12).contains(&f) || !(0.0..=1.0 + 1e-12).contains(&g) {
            return Err(Error::NotInLowerSet(format!(
                "recovered parameters ({f}, {g}) fall outside the chart"
            )));
        }
        let (f, g) = (f.clamp(0.0, 1.0), g.clamp(0.0, 1.0));
        let back = self.joint(f, g)?;
        for x in 0..2 {
            for y in 0..2 {
                if (back.get(x, y) - p.get(x, y)).abs() > FACTOR_TOL {
                    return Err(Error::NotInLowerSet(format!(
                        "entry ({x},{y}) reconstructs to {} instead of {}",
                        back.get(x, y),
                        p.get(x, y)
                    )));
                }
            }
        }
        Ok((f, g))
    }
}

/// The factor pair of an XY-absolute-continuity witness:
/// `d nu / d mu = fvec(x) gvec(y)` on the support of `mu`.
#[derive(Clone, Debug)]
pub struct FactorPair {
    pub fvec: Vec<f64>,
    pub gvec: Vec<f64>,
}

/// Bipartite connectivity of the positive-entry graph of a joint
/// distribution.
#[derive(Clone, Debug)]
pub struct Components {
    /// Component id of each x-vertex.
    pub x_component: Vec<usize>,
    /// Component id of each y-vertex.
    pub y_component: Vec<usize>,
    pub count: usize,
    /// True when the graph is connected (a single component).
    pub is_indecomposable: bool,
}

/// Connected components of the bipartite graph whose edges are the strictly
/// positive entries. Zero-mass vertices count as isolated components.
pub fn connected_components(joint: &JointDist) -> Components {
    let (m, n) = (joint.alphabet_x(), joint.alphabet_y());
    const UNSET: usize = usize::MAX;
    let mut x_component = vec![UNSET; m];
    let mut y_component = vec![UNSET; n];
    let mut count = 0;
    let mut queue = Vec::new();
    for start in 0..m {
        if x_component[start] != UNSET {
            continue;
        }
        x_component[start] = count;
        queue.push((true, start));
        while let Some((is_x, v)) = queue.pop() {
            if is_x {
                for (y, yc) in y_component.iter_mut().enumerate() {
                    if joint.get(v, y) > 0.0 && *yc == UNSET {
                        *yc = count;
                        queue.push((false, y));
                    }
                }
            } else {
                for (x, xc) in x_component.iter_mut().enumerate() {
                    if joint.get(x, v) > 0.0 && *xc == UNSET {
                        *xc = count;
                        queue.push((true, x));
                    }
                }
            }
        }
        count += 1;
    }
    for yc in y_component.iter_mut() {
        if *yc == UNSET {
            *yc = count;
            count += 1;
        }
    }
    Components {
        x_component,
        y_component,
        count,
        is_indecomposable: count == 1,
    }
}

/// Test whether `nu` is XY-absolutely continuous with respect to `mu` and
/// return the factor pair when it is.
///
/// The density ratio is factorized per connected component of its positive
/// part; the first x-coordinate of each component is normalized to one.
/// Entries are verified to relative tolerance `1e-9`.
pub fn check_xy_abs_continuity(nu: &JointDist, mu: &JointDist) -> Result<FactorPair> {
    let (m, n) = (mu.alphabet_x(), mu.alphabet_y());
    if nu.alphabet_x() != m || nu.alphabet_y() != n {
        return Err(Error::NotAbsolutelyContinuous(
            "alphabet sizes differ".into(),
        ));
    }
    // Support containment, then the ratio matrix on supp(mu).
    let mut ratio = vec![0.0f64; m * n];
    for x in 0..m {
        for y in 0..n {
            let (nv, mv) = (nu.get(x, y), mu.get(x, y));
            if mv <= 0.0 {
                if nv > FACTOR_TOL {
                    return Err(Error::NotAbsolutelyContinuous(format!(
                        "nu({x},{y}) = {nv} but mu({x},{y}) = 0"
                    )));
                }
            } else {
                ratio[x * n + y] = nv / mv;
            }
        }
    }

    const UNSET: f64 = f64::NAN;
    let mut fvec = vec![UNSET; m];
    let mut gvec = vec![UNSET; n];
    let positive = |x: usize, y: usize| mu.get(x, y) > 0.0 && ratio[x * n + y] > 0.0;

    // BFS over the positive part; each component is pinned by f = 1 at its
    // first x-vertex and propagated along edges.
    let mut queue = Vec::new();
    for root in 0..m {
        if !fvec[root].is_nan() || (0..n).all(|y| !positive(root, y)) {
            continue;
        }
        fvec[root] = 1.0;
        queue.push((true, root));
        while let Some((is_x, v)) = queue.pop() {
            if is_x {
                for y in 0..n {
                    if positive(v, y) && gvec[y].is_nan() {
                        gvec[y] = ratio[v * n + y] / fvec[v];
                        queue.push((false, y));
                    }
                }
            } else {
                for x in 0..m {
                    if positive(x, v) && fvec[x].is_nan() {
                        fvec[x] = ratio[x * n + v] / gvec[v];
                        queue.push((true, x));
                    }
                }
            }
        }
    }
    // Vertices with no positive edge carry zero factor mass.
    for fx in fvec.iter_mut() {
        if fx.is_nan() {
            *fx = 0.0;
        }
    }
    for gy in gvec.iter_mut() {
        if gy.is_nan() {
            *gy = 0.0;
        }
    }

    // Verify every mu-support entry, including the zero cells: a zero ratio
    // between two positive-factor vertices cannot factorize.
    for x in 0..m {
        for y in 0..n {
            if mu.get(x, y) <= 0.0 {
                continue;
            }
            let r = ratio[x * n + y];
            if (fvec[x] * gvec[y] - r).abs() > FACTOR_TOL * r.abs().max(1.0) {
                return Err(Error::NotAbsolutelyContinuous(format!(
                    "ratio at ({x},{y}) is {r} but factors give {}",
                    fvec[x] * gvec[y]
                )));
            }
        }
    }
    Ok(FactorPair { fvec, gvec })
}
