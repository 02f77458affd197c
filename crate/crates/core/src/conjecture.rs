//! Machine verification of the four-parameter dominance inequality behind
//! the one-way-optimality conjecture for binary symmetric sources, its
//! reduced three-parameter form for near-uniform noise, and the surface
//! data for plotting.
//!
//! The inequality compares `omega_0^s = s H - I` on the chart against the
//! two-parameter linear majorant `chi(f,g) = A + c (f-1/2)(g-1/2) / Z`,
//! whose constants are pinned by value and first-order tangency at the four
//! interior points `(alpha, 1/2)`, `(alpha', 1/2)`, `(1/2, alpha)`,
//! `(1/2, alpha')`.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::info::{binary_convolution, binary_entropy};

const LN2: f64 = std::f64::consts::LN_2;

/// Conservative absolute roundoff budget of one gap evaluation
/// (about 40 floating operations and 8 logarithms on unit-scale values).
pub const GAP_ROUNDOFF_BUDGET: f64 = 1e-13;

#[inline]
fn x_ln_x(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

#[inline]
fn h2(p: f64) -> f64 {
    -x_ln_x(p) - x_ln_x(1.0 - p)
}

fn check_open_unit(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v < 1.0) {
        return Err(Error::Domain(format!("{name}={v} must lie in (0,1)")));
    }
    Ok(())
}

/// Tangency slope `s` of the dominance inequality:
/// `(e'-e) [ln(a*e) - ln(a'*e)] / [ln a - ln a']`, extended by continuity to
/// `(1-2e)^2` at `a = 1/2`.
pub fn conj2_s(alpha: f64, epsilon: f64) -> Result<f64> {
    check_open_unit("alpha", alpha)?;
    check_open_unit("epsilon", epsilon)?;
    let de = 1.0 - 2.0 * epsilon;
    if (alpha - 0.5).abs() < 1e-7 {
        return Ok(de * de);
    }
    let num =
        binary_convolution(alpha, epsilon)?.ln() - binary_convolution(1.0 - alpha, epsilon)?.ln();
    let den = alpha.ln() - (1.0 - alpha).ln();
    Ok(de * num / den)
}

/// Continuity limit of the tangency coefficient `c` at `alpha = 1/2`.
fn c_limit(epsilon: f64) -> f64 {
    let (e, eb) = (epsilon, 1.0 - epsilon);
    let de = eb - e;
    8.0 * e * eb * de - 4.0 * e * eb * (1.0 + de * de) * (eb / e).ln()
}

/// Tangency coefficient `c`, evaluated through both printed closed forms and
/// cross-checked to relative `1e-9`; the second (stabler) form is returned.
/// Disagreement is a transcription failure and errors out loudly.
pub fn conj2_c(alpha: f64, epsilon: f64) -> Result<f64> {
    check_open_unit("alpha", alpha)?;
    check_open_unit("epsilon", epsilon)?;
    if (alpha - 0.5).abs() < 1e-7 {
        return Ok(c_limit(epsilon));
    }
    let (a, ab) = (alpha, 1.0 - alpha);
    let (e, eb) = (epsilon, 1.0 - epsilon);
    let de = eb - e;
    let d = ab - a;
    let conv_a = binary_convolution(a, e)?; // a*e
    let conv_ab = binary_convolution(ab, e)?; // a'*e
    let k = conj2_s(alpha, epsilon)?;

    let form1 = 4.0 * k * a * ab * de / d * (a / ab).ln()
        + 4.0 * (k + 1.0) * e * eb * (e / eb).ln()
        - 4.0 * conv_a * conv_ab / d * (conv_a / conv_ab).ln();

    let ratio = (conv_ab / conv_a).ln();
    let form2 = 4.0 * e * eb / d * ratio
        - 4.0 * e * eb * de * (eb / e).ln() * ratio / (ab / a).ln()
        - 4.0 * eb * e * (eb / e).ln();

    if (form1 - form2).abs() > 1e-9 * form1.abs().max(form2.abs()).max(1.0) {
        return Err(Error::FormulaMismatch {
            form1,
            form2,
            alpha,
            epsilon,
        });
    }
    Ok(form2)
}

/// Fused evaluator for one `(alpha, epsilon)` slice: the constants are
/// hoisted so the 4-D sweep only pays for the `(f, g)` terms per cell.
#[derive(Clone, Copy, Debug)]
pub struct GapEvaluator {
    pub alpha: f64,
    pub epsilon: f64,
    pub s: f64,
    pub c: f64,
    /// Common value of both sides at the four tangency points.
    pub offset: f64,
}

impl GapEvaluator {
    pub fn new(alpha: f64, epsilon: f64) -> Result<Self> {
        let s = conj2_s(alpha, epsilon)?;
        let c = conj2_c(alpha, epsilon)?;
        let he = binary_entropy(epsilon)?;
        let offset = s * (he + binary_entropy(alpha)?)
            - (binary_entropy(binary_convolution(alpha, epsilon)?)? - he);
        Ok(Self {
            alpha,
            epsilon,
            s,
            c,
            offset,
        })
    }

    /// Chart normalizer `Z = f*g*(1-e)` and the unnormalized chart entries,
    /// grouped symmetrically in `(f, g)`.
    #[inline]
    fn raw(&self, f: f64, g: f64) -> ([f64; 4], f64) {
        let (e, eb) = (self.epsilon, 1.0 - self.epsilon);
        let (fb, gb) = (1.0 - f, 1.0 - g);
        let r = [eb * fb * gb, e * fb * g, e * f * gb, eb * f * g];
        let z = (r[0] + r[3]) + (r[1] + r[2]);
        (r, z)
    }

    /// `omega_0^s(f, g) = s H(X,Y) - I(X;Y)` on the chart.
    #[inline]
    pub fn omega0(&self, f: f64, g: f64) -> f64 {
        let (r, z) = self.raw(f, g);
        let h_joint = z.ln() - ((x_ln_x(r[0]) + x_ln_x(r[3])) + (x_ln_x(r[1]) + x_ln_x(r[2]))) / z;
        let hx = h2((r[2] + r[3]) / z);
        let hy = h2((r[1] + r[3]) / z);
        let info = (hx + hy - h_joint).max(0.0);
        self.s * h_joint - info
    }

    /// The XY-linear majorant `chi(f, g) = A + c (f-1/2)(g-1/2) / Z`.
    #[inline]
    pub fn chi(&self, f: f64, g: f64) -> f64 {
        let (_, z) = self.raw(f, g);
        self.offset + self.c * (f - 0.5) * (g - 0.5) / z
    }

    /// `chi - omega_0^s`; nonnegative everywhere if the conjecture holds.
    #[inline]
    pub fn gap(&self, f: f64, g: f64) -> f64 {
        self.chi(f, g) - self.omega0(f, g)
    }
}

/// The dominance gap at a single cell.
pub fn conj2_gap(f: f64, g: f64, alpha: f64, epsilon: f64) -> Result<f64> {
    check_open_unit("f", f)?;
    check_open_unit("g", g)?;
    Ok(GapEvaluator::new(alpha, epsilon)?.gap(f, g))
}

/// Offset-grid axis: `lo + step/3, lo + step/3 + step, ...` up to
/// `hi - step/3`, so no cell sits on a symmetry axis.
pub fn offset_axis(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let start = lo + step / 3.0;
    let count = ((hi - lo - 2.0 * step / 3.0) / step + 1e-9).floor() as i64 + 1;
    (0..count.max(0)).map(|k| start + k as f64 * step).collect()
}

#[derive(Clone, Copy, Debug)]
pub struct SweepParams {
    pub step: f64,
    pub f_range: (f64, f64),
    pub g_range: (f64, f64),
    pub e_range: (f64, f64),
    pub a_range: (f64, f64),
}

impl SweepParams {
    /// The full ranges: `f`, `epsilon`, `alpha` over `(0, 1/2)` by
    /// symmetry, `g` over `(0, 1)`.
    pub fn full(step: f64) -> Self {
        Self {
            step,
            f_range: (0.0, 0.5),
            g_range: (0.0, 1.0),
            e_range: (0.0, 0.5),
            a_range: (0.0, 0.5),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step <= 0.1) {
            return Err(Error::Domain(format!(
                "step={} must lie in (0, 0.1]",
                self.step
            )));
        }
        Ok(())
    }
}

/// Statistics of a 4-D dominance sweep.
#[derive(Clone, Debug)]
pub struct ConjectureReport {
    pub step: f64,
    pub min_gap: f64,
    pub argmin: (f64, f64, f64, f64), // (f, g, alpha, epsilon)
    pub negative_count: u64,
    pub cells_scanned: u64,
    pub wall_time_secs: f64,
    pub roundoff_budget: f64,
}

pub fn sweep(params: &SweepParams) -> Result<ConjectureReport> {
    sweep_with_progress(params, None)
}

/// Sweep the four axes; the `(epsilon, alpha)` plane is partitioned across
/// workers and each worker scans its `(f, g)` block. The reduction is a
/// minimum with lexicographic tie-breaking, so the result does not depend
/// on scheduling.
pub fn sweep_with_progress(
    params: &SweepParams,
    progress: Option<&(dyn Fn(u64, u64) + Sync)>,
) -> Result<ConjectureReport> {
    params.validate()?;
    let started = Instant::now();
    let fs = offset_axis(params.f_range.0, params.f_range.1, params.step);
    let gs = offset_axis(params.g_range.0, params.g_range.1, params.step);
    let es = offset_axis(params.e_range.0, params.e_range.1, params.step);
    let als = offset_axis(params.a_range.0, params.a_range.1, params.step);
    let cells_scanned = (fs.len() * gs.len() * es.len() * als.len()) as u64;
    if cells_scanned == 0 {
        return Err(Error::Domain("empty sweep ranges".into()));
    }

    struct Block {
        min_gap: f64,
        arg: (usize, usize, usize, usize), // (e, a, f, g) indices
        negatives: u64,
    }
    let empty = || Block {
        min_gap: f64::INFINITY,
        arg: (usize::MAX, usize::MAX, usize::MAX, usize::MAX),
        negatives: 0,
    };
    let merge = |x: Block, y: Block| {
        let negatives = x.negatives + y.negatives;
        let pick_y = y.min_gap < x.min_gap || (y.min_gap == x.min_gap && y.arg < x.arg);
        let mut out = if pick_y { y } else { x };
        out.negatives = negatives;
        out
    };

    let done_pairs = AtomicU64::new(0);
    let total_pairs = (es.len() * als.len()) as u64;
    let block_cells = (fs.len() * gs.len()) as u64;

    let best = (0..es.len() * als.len())
        .into_par_iter()
        .map(|pair| -> Result<Block> {
            let (ei, ai) = (pair / als.len(), pair % als.len());
            let eval = GapEvaluator::new(als[ai], es[ei])?;
            let mut block = empty();
            for (fi, &f) in fs.iter().enumerate() {
                for (gi, &g) in gs.iter().enumerate() {
                    let gap = eval.gap(f, g);
                    if gap < 0.0 {
                        block.negatives += 1;
                    }
                    let arg = (ei, ai, fi, gi);
                    if gap < block.min_gap || (gap == block.min_gap && arg < block.arg) {
                        block.min_gap = gap;
                        block.arg = arg;
                    }
                }
            }
            if let Some(report) = progress {
                let done = done_pairs.fetch_add(1, Ordering::Relaxed) + 1;
                report(done * block_cells, total_pairs * block_cells);
            }
            Ok(block)
        })
        .try_reduce(empty, |a, b| Ok(merge(a, b)))?;

    let (ei, ai, fi, gi) = best.arg;
    Ok(ConjectureReport {
        step: params.step,
        min_gap: best.min_gap,
        argmin: (fs[fi], gs[gi], als[ai], es[ei]),
        negative_count: best.negatives,
        cells_scanned,
        wall_time_secs: started.elapsed().as_secs_f64(),
        roundoff_budget: GAP_ROUNDOFF_BUDGET,
    })
}

/// Value and first-order tangency audit at the four equality points.
#[derive(Clone, Copy, Debug)]
pub struct EqualityAudit {
    pub max_abs_gap: f64,
    pub max_abs_gradient: f64,
    pub points_checked: usize,
}

pub fn equality_point_audit(alpha: f64, epsilon: f64) -> Result<EqualityAudit> {
    check_open_unit("alpha", alpha)?;
    check_open_unit("epsilon", epsilon)?;
    let eval = GapEvaluator::new(alpha, epsilon)?;
    let mut points = vec![
        (alpha, 0.5),
        (1.0 - alpha, 0.5),
        (0.5, alpha),
        (0.5, 1.0 - alpha),
    ];
    points.dedup();
    let step = 1e-5;
    let mut max_gap = 0.0f64;
    let mut max_grad = 0.0f64;
    for &(f, g) in &points {
        max_gap = max_gap.max(eval.gap(f, g).abs());
        let df = (eval.gap(f + step, g) - eval.gap(f - step, g)) / (2.0 * step);
        let dg = (eval.gap(f, g + step) - eval.gap(f, g - step)) / (2.0 * step);
        max_grad = max_grad.max(df.abs()).max(dg.abs());
    }
    Ok(EqualityAudit {
        max_abs_gap: max_gap,
        max_abs_gradient: max_grad,
        points_checked: points.len(),
    })
}

/// Slack of the reduced three-parameter inequality governing the
/// near-uniform noise limit:
/// `[2(a'-a)/ln(a'/a)] (ln 2 + h(a) - h(f) - h(g)) - 2 a a' + 8 f f' g g'`,
/// in the base-free normalization (one bit written as `ln 2` nats).
pub fn e85_slack(alpha: f64, f: f64, g: f64) -> Result<f64> {
    for (name, v) in [("alpha", alpha), ("f", f)] {
        if !(v > 0.0 && v <= 0.5) {
            return Err(Error::Domain(format!("{name}={v} must lie in (0, 1/2]")));
        }
    }
    check_open_unit("g", g)?;
    let d = 1.0 - 2.0 * alpha; // a' - a
    let t = if d == 0.0 { 1.0 } else { d / d.atanh() }; // 2(a'-a)/ln(a'/a)
    Ok(
        t * (LN2 + h2(alpha) - h2(f) - h2(g)) - 2.0 * alpha * (1.0 - alpha)
            + 8.0 * f * (1.0 - f) * g * (1.0 - g),
    )
}

/// Grid statistics of the reduced inequality.
#[derive(Clone, Debug)]
pub struct ReducedReport {
    pub step: f64,
    pub min_slack: f64,
    pub argmin: (f64, f64, f64), // (alpha, f, g)
    pub negative_count: u64,
    pub cells_scanned: u64,
    pub wall_time_secs: f64,
}

pub fn e85_sweep(step: f64) -> Result<ReducedReport> {
    if !(step > 0.0 && step <= 0.1) {
        return Err(Error::Domain(format!("step={step} must lie in (0, 0.1]")));
    }
    let started = Instant::now();
    let als = offset_axis(0.0, 0.5, step);
    let fs = offset_axis(0.0, 0.5, step);
    let gs = offset_axis(0.0, 1.0, step);
    let cells = (als.len() * fs.len() * gs.len()) as u64;
    type ReducedBlock = (f64, (usize, usize, usize), u64);
    let best = als
        .par_iter()
        .enumerate()
        .map(|(ai, &alpha)| -> Result<ReducedBlock> {
            let mut min_slack = f64::INFINITY;
            let mut arg = (usize::MAX, usize::MAX, usize::MAX);
            let mut negatives = 0u64;
            for (fi, &f) in fs.iter().enumerate() {
                for (gi, &g) in gs.iter().enumerate() {
                    let slack = e85_slack(alpha, f, g)?;
                    if slack < 0.0 {
                        negatives += 1;
                    }
                    let key = (ai, fi, gi);
                    if slack < min_slack || (slack == min_slack && key < arg) {
                        min_slack = slack;
                        arg = key;
                    }
                }
            }
            Ok((min_slack, arg, negatives))
        })
        .try_reduce(
            || (f64::INFINITY, (usize::MAX, usize::MAX, usize::MAX), 0u64),
            |a, b| {
                let negatives = a.2 + b.2;
                let mut out = if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) {
                    b
                } else {
                    a
                };
                out.2 = negatives;
                Ok(out)
            },
        )?;
    let (ai, fi, gi) = best.1;
    Ok(ReducedReport {
        step,
        min_slack: best.0,
        argmin: (als[ai], fs[fi], gs[gi]),
        negative_count: best.2,
        cells_scanned: cells,
        wall_time_secs: started.elapsed().as_secs_f64(),
    })
}

/// Which field to emit as a surface over the chart square.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SurfaceField {
    Omega0,
    Chi,
    Gap,
}

/// Dense surface of the requested field on a uniform `(f, g)` grid over
/// `[0, 1]^2`, one row per `f` node.
pub fn surface(
    field: SurfaceField,
    alpha: f64,
    epsilon: f64,
    grid_n: usize,
) -> Result<Vec<Vec<f64>>> {
    if grid_n < 33 {
        return Err(Error::Domain(format!("grid_n={grid_n} below 33")));
    }
    let eval = GapEvaluator::new(alpha, epsilon)?;
    let step = 1.0 / (grid_n - 1) as f64;
    Ok((0..grid_n)
        .into_par_iter()
        .map(|i| {
            let f = i as f64 * step;
            (0..grid_n)
                .map(|j| {
                    let g = j as f64 * step;
                    match field {
                        SurfaceField::Omega0 => eval.omega0(f, g),
                        SurfaceField::Chi => eval.chi(f, g),
                        SurfaceField::Gap => eval.chi(f, g) - eval.omega0(f, g),
                    }
                })
                .collect()
        })
        .collect())
}

/// Whitespace-delimited matrix text for gnuplot.
pub fn surface_to_matrix(surface: &[Vec<f64>]) -> String {
    let mut out = String::new();
    for row in surface {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    out
}
