//! Marginal concave envelopes over the two-parameter lower-set charts.
//!
//! A pass concavifies the grid along one chart axis at a time, working in
//! the marginal coordinate of the moving axis (the chart is nonlinear in the
//! marginal, the mixtures are not). Alternating the two passes to a fixed
//! point yields the joint envelope; the envelope of `s H - I` encodes the
//! achievable key-rate region, the envelope of the independence-restricted
//! joint entropy yields the minimum interaction for maximum key rate.

use rayon::prelude::*;

use crate::dist::{JointDist, ParamFamily};
use crate::error::{Error, Result};
use crate::info::mutual_information;

/// Mutual-information threshold under which a chart point counts as
/// independent for the sigma functional.
pub const DEFAULT_INDEP_TOL: f64 = 1e-10;

/// Axis of a marginal concavification pass.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Number of alternating passes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rounds {
    Finite(u32),
    Infinite,
}

impl std::str::FromStr for Rounds {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "inf" | "INF" | "infinity" => Ok(Rounds::Infinite),
            other => other
                .parse::<u32>()
                .map(Rounds::Finite)
                .map_err(|e| format!("rounds must be an integer or 'inf': {e}")),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct EnvelopeConfig {
    /// Points per axis; odd so the chart center (1/2, 1/2) is a node.
    pub grid_n: usize,
    /// Sup-norm change over finite cells below which a full X+Y cycle counts
    /// as converged.
    pub sup_norm_tol: f64,
    pub max_passes: usize,
}

impl Default for EnvelopeConfig {
    fn default() -> Self {
        Self {
            grid_n: 201,
            sup_norm_tol: 1e-8,
            max_passes: 500,
        }
    }
}

impl EnvelopeConfig {
    pub fn with_grid(grid_n: usize) -> Self {
        Self {
            grid_n,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_n < 33 || self.grid_n.is_multiple_of(2) {
            return Err(Error::Domain(format!(
                "grid_n={} must be odd and at least 33",
                self.grid_n
            )));
        }
        if self.sup_norm_tol <= 0.0 || self.max_passes == 0 {
            return Err(Error::Domain("nonpositive tolerance or pass budget".into()));
        }
        Ok(())
    }
}

/// Extended-real samples of a functional on the uniform `(f, g)` grid.
/// `None` is the minus-infinity sentinel.
#[derive(Clone, Debug)]
pub struct GridFunctional {
    pub grid_n: usize,
    pub family: ParamFamily,
    values: Vec<Option<f64>>,
    /// Chart-singular cells, excluded from every pass.
    pub singular_cells: Vec<(usize, usize)>,
}

impl GridFunctional {
    /// Sample `func` over the grid. Singular chart cells become undefined
    /// and are recorded in the metadata.
    pub fn sample<F>(family: ParamFamily, grid_n: usize, func: F) -> GridFunctional
    where
        F: Fn(&JointDist) -> Option<f64> + Sync,
    {
        let step = 1.0 / (grid_n - 1) as f64;
        let values: Vec<Option<f64>> = (0..grid_n * grid_n)
            .into_par_iter()
            .map(|cell| {
                let (i, j) = (cell / grid_n, cell % grid_n);
                match family.joint(i as f64 * step, j as f64 * step) {
                    Ok(joint) => func(&joint),
                    Err(_) => None,
                }
            })
            .collect();
        let singular_cells = (0..grid_n * grid_n)
            .filter_map(|cell| {
                let (i, j) = (cell / grid_n, cell % grid_n);
                family
                    .joint(i as f64 * step, j as f64 * step)
                    .is_err()
                    .then_some((i, j))
            })
            .collect();
        GridFunctional {
            grid_n,
            family,
            values,
            singular_cells,
        }
    }

    #[inline]
    pub fn param(&self, index: usize) -> f64 {
        index as f64 / (self.grid_n - 1) as f64
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.values[i * self.grid_n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Option<f64>) {
        self.values[i * self.grid_n + j] = v;
    }

    /// Grid index of a parameter value, requiring it to be a node.
    pub fn node_index(&self, value: f64) -> Result<usize> {
        let scaled = value * (self.grid_n - 1) as f64;
        let idx = scaled.round();
        if (scaled - idx).abs() > 1e-9 * (self.grid_n - 1) as f64 || idx < 0.0 {
            return Err(Error::OffGridPoint {
                f: value,
                g: value,
                grid_n: self.grid_n,
            });
        }
        Ok(idx as usize)
    }

    /// Value at a chart point that must be a grid node.
    pub fn value_at(&self, f: f64, g: f64) -> Result<Option<f64>> {
        Ok(self.get(self.node_index(f)?, self.node_index(g)?))
    }

    /// Largest change over cells finite in both grids; a cell switching from
    /// undefined to finite counts as an infinite change.
    pub fn sup_norm_delta(&self, other: &GridFunctional) -> f64 {
        let mut delta = 0.0f64;
        for (a, b) in self.values.iter().zip(&other.values) {
            match (a, b) {
                (Some(x), Some(y)) => delta = delta.max((x - y).abs()),
                (None, None) => {}
                _ => return f64::INFINITY,
            }
        }
        delta
    }

    /// CSV rows `f,g,value` with `-inf` for undefined cells.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("f,g,value\n");
        for i in 0..self.grid_n {
            for j in 0..self.grid_n {
                let cell = match self.get(i, j) {
                    Some(v) => format!("{v:.17e}"),
                    None => "-inf".to_string(),
                };
                out.push_str(&format!("{},{},{}\n", self.param(i), self.param(j), cell));
            }
        }
        out
    }

    /// Whitespace-delimited matrix, one row per f node, for gnuplot's
    /// nonuniform matrix splot.
    pub fn to_gnuplot_matrix(&self) -> String {
        let mut out = String::new();
        for i in 0..self.grid_n {
            let row: Vec<String> = (0..self.grid_n)
                .map(|j| match self.get(i, j) {
                    Some(v) => format!("{v:.17e}"),
                    None => "-inf".to_string(),
                })
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

/// Marginal coordinate of a chart point along the given axis: the mass the
/// moving-axis marginal puts on symbol 1. Strictly monotone in the moving
/// parameter wherever the fiber is nondegenerate.
pub fn fiber_coordinate(family: ParamFamily, f: f64, g: f64, axis: Axis) -> Result<f64> {
    let conv = |a: f64, b: f64| (1.0 - a) * b + a * (1.0 - b);
    match family {
        ParamFamily::BscKernel { epsilon } => {
            let (moving, fixed) = match axis {
                Axis::X => (f, g),
                Axis::Y => (g, f),
            };
            let k = conv(epsilon, fixed);
            let z = (1.0 - moving) * (1.0 - k) + moving * k;
            if z <= 0.0 {
                return Err(Error::SingularParameter {
                    f,
                    g,
                    reason: "degenerate fiber".into(),
                });
            }
            Ok(moving * k / z)
        }
        ParamFamily::SupportThree => {
            let z = f + (1.0 - f) * g;
            if z <= 0.0 {
                return Err(Error::SingularParameter {
                    f,
                    g,
                    reason: "(0, 0) is outside the chart".into(),
                });
            }
            Ok(match axis {
                Axis::X => f / z,
                Axis::Y => g / z,
            })
        }
    }
}

/// `omega_0^s = s H(X,Y) - I(X;Y)` in nats.
pub fn eval_omega0(s: f64, joint: &JointDist) -> Result<f64> {
    if s <= 0.0 {
        return Err(Error::Domain(format!("s={s} must be positive")));
    }
    Ok(s * joint.joint_entropy() - mutual_information(joint))
}

/// `sigma_0`: the joint entropy on the independence locus, undefined
/// (minus infinity) elsewhere.
pub fn eval_sigma0(joint: &JointDist, indep_tol: f64) -> Option<f64> {
    if mutual_information(joint) <= indep_tol {
        Some(joint.joint_entropy())
    } else {
        None
    }
}

/// Least concave majorant of a finite point set, evaluated back at the input
/// abscissas.
///
/// Input abscissas must be strictly increasing. Undefined inputs act as
/// constraint-free points: they never lift the hull, and abscissas outside
/// the finite range stay undefined. The output dominates the input and is
/// concave along the finite range.
pub fn upper_concave_hull_1d(points: &[(f64, Option<f64>)]) -> Vec<Option<f64>> {
    for w in points.windows(2) {
        debug_assert!(w[0].0 < w[1].0, "abscissas must be strictly increasing");
    }
    let finite: Vec<(f64, f64)> = points
        .iter()
        .filter_map(|&(x, v)| v.map(|v| (x, v)))
        .collect();
    if finite.is_empty() {
        return vec![None; points.len()];
    }

    // Monotone-chain upper hull: keep strictly concave turns.
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(finite.len());
    for &(x, v) in &finite {
        while hull.len() >= 2 {
            let (ax, av) = hull[hull.len() - 2];
            let (bx, bv) = hull[hull.len() - 1];
            let cross = (bx - ax) * (v - av) - (x - ax) * (bv - av);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push((x, v));
    }

    let (lo, hi) = (hull[0].0, hull[hull.len() - 1].0);
    let mut seg = 0usize;
    points
        .iter()
        .map(|&(x, v)| {
            if x < lo || x > hi {
                debug_assert!(v.is_none());
                return None;
            }
            while seg + 1 < hull.len() && hull[seg + 1].0 < x {
                seg += 1;
            }
            let (ax, av) = hull[seg];
            let env = if x == ax {
                av
            } else {
                let (bx, bv) = hull[seg + 1];
                if x == bx {
                    bv
                } else {
                    av + (bv - av) * (x - ax) / (bx - ax)
                }
            };
            // domination is exact even under interpolation rounding
            Some(match v {
                Some(orig) => env.max(orig),
                None => env,
            })
        })
        .collect()
}

/// One marginal concavification pass along `axis`, fiber by fiber in the
/// marginal coordinate. Boundary fibers of the moving parameter are hull
/// endpoints and therefore unchanged.
pub fn marginal_envelope_pass(fnl: &GridFunctional, axis: Axis) -> GridFunctional {
    let n = fnl.grid_n;
    let family = fnl.family;
    let fibers: Vec<Vec<Option<f64>>> = (0..n)
        .into_par_iter()
        .map(|fixed| {
            // collect (abscissa, value, moving index), skipping singular cells
            let mut pts: Vec<(f64, Option<f64>, usize)> = Vec::with_capacity(n);
            for moving in 0..n {
                let (i, j) = match axis {
                    Axis::X => (moving, fixed),
                    Axis::Y => (fixed, moving),
                };
                let (f, g) = (fnl.param(i), fnl.param(j));
                if let Ok(t) = fiber_coordinate(family, f, g, axis) {
                    pts.push((t, fnl.get(i, j), moving));
                }
            }
            let mut out = vec![None; n];
            if pts.is_empty() {
                return out;
            }
            pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.2.cmp(&b.2)));
            // collapse duplicate abscissas (constant fibers) onto their max
            let mut uniq: Vec<(f64, Option<f64>)> = Vec::with_capacity(pts.len());
            let mut owners: Vec<Vec<usize>> = Vec::with_capacity(pts.len());
            for &(t, v, moving) in &pts {
                match uniq.last_mut() {
                    Some(last) if t == last.0 => {
                        last.1 = match (last.1, v) {
                            (Some(a), Some(b)) => Some(a.max(b)),
                            (a, None) => a,
                            (None, b) => b,
                        };
                        owners.last_mut().unwrap().push(moving);
                    }
                    _ => {
                        uniq.push((t, v));
                        owners.push(vec![moving]);
                    }
                }
            }
            let env = upper_concave_hull_1d(&uniq);
            for (slot, value) in owners.iter().zip(env) {
                for &moving in slot {
                    out[moving] = value;
                }
            }
            out
        })
        .collect();

    let mut next = fnl.clone();
    for (fixed, fiber) in fibers.iter().enumerate() {
        for (moving, &value) in fiber.iter().enumerate() {
            let (i, j) = match axis {
                Axis::X => (moving, fixed),
                Axis::Y => (fixed, moving),
            };
            if fnl.singular_cells.contains(&(i, j)) {
                continue;
            }
            next.set(i, j, value);
        }
    }
    next
}

/// Outcome of an envelope computation: the grid, the pass count, and the
/// convergence record for the infinite-round case.
#[derive(Clone, Debug)]
pub struct EnvelopeRun {
    pub grid: GridFunctional,
    pub passes_used: usize,
    pub converged: bool,
    pub last_delta: f64,
}

impl EnvelopeRun {
    /// A warning message when the pass budget ran out before the fixed point.
    pub fn warning(&self) -> Option<String> {
        (!self.converged).then(|| {
            format!(
                "envelope did not converge after {} passes (last sup-norm delta {:.3e})",
                self.passes_used, self.last_delta
            )
        })
    }
}

fn run_passes(
    grid0: GridFunctional,
    rounds: Rounds,
    cfg: &EnvelopeConfig,
    start: Axis,
) -> EnvelopeRun {
    let flip = |a: Axis| match a {
        Axis::X => Axis::Y,
        Axis::Y => Axis::X,
    };
    match rounds {
        Rounds::Finite(r) => {
            let mut grid = grid0;
            let mut axis = start;
            let mut last_delta = 0.0;
            for _ in 0..r {
                let next = marginal_envelope_pass(&grid, axis);
                last_delta = next.sup_norm_delta(&grid);
                grid = next;
                axis = flip(axis);
            }
            EnvelopeRun {
                grid,
                passes_used: r as usize,
                converged: true,
                last_delta,
            }
        }
        Rounds::Infinite => {
            let mut grid = grid0;
            let mut passes = 0usize;
            let mut delta = f64::INFINITY;
            // alternate in full cycles so the fixed point holds for both axes
            while passes < cfg.max_passes {
                let after_first = marginal_envelope_pass(&grid, start);
                let d1 = after_first.sup_norm_delta(&grid);
                let after_second = marginal_envelope_pass(&after_first, flip(start));
                let d2 = after_second.sup_norm_delta(&after_first);
                grid = after_second;
                passes += 2;
                delta = d1.max(d2);
                if delta < cfg.sup_norm_tol {
                    return EnvelopeRun {
                        grid,
                        passes_used: passes,
                        converged: true,
                        last_delta: delta,
                    };
                }
            }
            EnvelopeRun {
                grid,
                passes_used: passes,
                converged: false,
                last_delta: delta,
            }
        }
    }
}

/// `omega_r^s`: `r` alternating passes (odd passes along X) applied to the
/// sampled `omega_0^s` grid; `Rounds::Infinite` runs to the fixed point.
pub fn omega_r(
    s: f64,
    family: ParamFamily,
    rounds: Rounds,
    cfg: &EnvelopeConfig,
) -> Result<EnvelopeRun> {
    cfg.validate()?;
    if s <= 0.0 {
        return Err(Error::Domain(format!("s={s} must be positive")));
    }
    let grid0 = GridFunctional::sample(family, cfg.grid_n, |joint| {
        Some(s * joint.joint_entropy() - mutual_information(joint))
    });
    Ok(run_passes(grid0, rounds, cfg, Axis::X))
}

/// `sigma_r`: the same alternation applied to the sampled `sigma_0` grid.
pub fn sigma_r(family: ParamFamily, rounds: Rounds, cfg: &EnvelopeConfig) -> Result<EnvelopeRun> {
    sigma_r_from(family, rounds, cfg, Axis::X)
}

/// `sigma_r` with a chosen starting axis; starting along Y computes the
/// transposed orientation of the recursion.
pub fn sigma_r_from(
    family: ParamFamily,
    rounds: Rounds,
    cfg: &EnvelopeConfig,
    start: Axis,
) -> Result<EnvelopeRun> {
    cfg.validate()?;
    let grid0 = GridFunctional::sample(family, cfg.grid_n, |joint| {
        eval_sigma0(joint, DEFAULT_INDEP_TOL)
    });
    Ok(run_passes(grid0, rounds, cfg, start))
}

/// The joint envelope of an arbitrary starting grid: alternating passes to a
/// fixed point of both axes.
pub fn xy_concave_envelope(fn0: &GridFunctional, cfg: &EnvelopeConfig) -> Result<EnvelopeRun> {
    cfg.validate()?;
    Ok(run_passes(fn0.clone(), Rounds::Infinite, cfg, Axis::X))
}

/// One-pass sigma along the X fiber, computed analytically (no grid): the
/// chord of the fiber-endpoint values in the marginal coordinate. Points
/// where `sigma_0` is already finite are hull fixed points and return it.
pub fn sigma_one_analytic(family: ParamFamily, f: f64, g: f64) -> Result<f64> {
    let joint = family.joint(f, g)?;
    if let Some(v) = eval_sigma0(&joint, DEFAULT_INDEP_TOL) {
        return Ok(v);
    }
    let v0 = eval_sigma0(&family.joint(0.0, g)?, DEFAULT_INDEP_TOL)
        .ok_or_else(|| Error::Inconsistency("fiber endpoint f=0 is not independent".into()))?;
    let v1 = eval_sigma0(&family.joint(1.0, g)?, DEFAULT_INDEP_TOL)
        .ok_or_else(|| Error::Inconsistency("fiber endpoint f=1 is not independent".into()))?;
    let t = fiber_coordinate(family, f, g, Axis::X)?;
    Ok((1.0 - t) * v0 + t * v1)
}

/// One-sided support value on the X fiber of an arbitrary binary-X joint:
/// the gap `env_X(omega_0^s)(q) - omega_0^s(q)` computed on a 1-D grid of
/// X-marginals at the fixed conditional kernel.
pub fn x_fiber_support_value(q: &JointDist, s: f64, fiber_n: usize) -> Result<f64> {
    if q.alphabet_x() != 2 {
        return Err(Error::Domain(
            "the X-fiber envelope needs a binary X alphabet".into(),
        ));
    }
    if fiber_n < 3 {
        return Err(Error::Domain(format!("fiber_n={fiber_n} below 3")));
    }
    let px = q.marginal_x();
    if px[0] <= 0.0 || px[1] <= 0.0 {
        return Err(Error::DegenerateSupport(
            "both X symbols need positive mass to fix the kernel".into(),
        ));
    }
    let n = q.alphabet_y();
    let kernel: Vec<Vec<f64>> = (0..2)
        .map(|x| (0..n).map(|y| q.get(x, y) / px[x]).collect())
        .collect();
    let t_q = px[1];
    let mut ts: Vec<f64> = (0..fiber_n)
        .map(|i| i as f64 / (fiber_n - 1) as f64)
        .collect();
    ts.push(t_q);
    ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ts.dedup();

    let omega_at = |t: f64| -> Result<f64> {
        let mut flat = Vec::with_capacity(2 * n);
        flat.extend(kernel[0].iter().map(|k| (1.0 - t) * k));
        flat.extend(kernel[1].iter().map(|k| t * k));
        let joint = JointDist::from_flat(flat, 2, n)?;
        eval_omega0(s, &joint)
    };
    let pts: Vec<(f64, Option<f64>)> = ts
        .iter()
        .map(|&t| Ok((t, Some(omega_at(t)?))))
        .collect::<Result<_>>()?;
    let env = upper_concave_hull_1d(&pts);
    let idx = ts
        .iter()
        .position(|&t| t == t_q)
        .expect("the base abscissa was inserted");
    Ok(env[idx].expect("all fiber values are finite") - omega_at(t_q)?)
}
