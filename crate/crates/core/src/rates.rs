//! Rate-region boundaries from Legendre data, data-processing thresholds,
//! key bits per interaction bit, and minimum interaction for maximum key
//! rate by two independent routes.
//!
//! The envelope value at the base point encodes the support function of the
//! achievable `(total rate, key rate)` region: `phi_r(s) = omega_r^s(Q) -
//! s H(X,Y) + I(X;Y)` equals `sup {R - sS}` over the r-round region, so the
//! boundary is recovered by concave conjugation over a slope grid and the
//! thresholds by bisection on `s`.

use rayon::prelude::*;

use crate::dist::{JointDist, ParamFamily};
use crate::envelope::{omega_r, sigma_r_from, x_fiber_support_value, Axis, EnvelopeConfig, Rounds};
use crate::error::{Error, Result};
use crate::info::mutual_information;

#[derive(Clone, Copy, Debug)]
pub struct RateConfig {
    pub envelope: EnvelopeConfig,
    /// Chart coordinates of the base distribution; must be grid nodes.
    pub base: (f64, f64),
    pub bisect_tol: f64,
    /// Value resolution attributed to the grid; the one-way-optimality
    /// verdict uses twice this.
    pub grid_value_tol: f64,
    /// Output points of a boundary computation.
    pub boundary_points: usize,
}

impl Default for RateConfig {
    fn default() -> Self {
        Self {
            envelope: EnvelopeConfig::default(),
            base: (0.5, 0.5),
            bisect_tol: 1e-4,
            grid_value_tol: 1e-3,
            boundary_points: 101,
        }
    }
}

impl RateConfig {
    pub fn with_grid(grid_n: usize) -> Self {
        Self {
            envelope: EnvelopeConfig::with_grid(grid_n),
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        self.envelope.validate()?;
        if self.bisect_tol < 1e-6 {
            return Err(Error::Domain(format!(
                "bisect_tol={} below the supported 1e-6",
                self.bisect_tol
            )));
        }
        Ok(())
    }

    fn base_joint(&self, family: ParamFamily) -> Result<JointDist> {
        family.joint(self.base.0, self.base.1)
    }

    /// `phi(s)` detection threshold: the envelope noise floor.
    fn zero_tol(&self) -> f64 {
        3.0 * self.envelope.sup_norm_tol
    }
}

/// Support value `phi_r(s) = omega_r^s(Q) - s H(X,Y) + I(X;Y)`, the largest
/// `R - sS` over the r-round achievable region.
pub struct SupportValue {
    pub phi: f64,
    pub warning: Option<String>,
}

pub fn support_value(
    family: ParamFamily,
    rounds: Rounds,
    s: f64,
    cfg: &RateConfig,
) -> Result<SupportValue> {
    cfg.validate()?;
    let run = omega_r(s, family, rounds, &cfg.envelope)?;
    let base = cfg.base_joint(family)?;
    let omega = run
        .grid
        .value_at(cfg.base.0, cfg.base.1)?
        .ok_or_else(|| Error::Inconsistency("omega grid undefined at the base point".into()))?;
    Ok(SupportValue {
        phi: omega - s * base.joint_entropy() + mutual_information(&base),
        warning: run.warning(),
    })
}

/// Result of a threshold bisection on `s` in `[0, 1]`.
///
/// The lower bracket end starts at the virtual value 0 and is only moved to
/// evaluated points, so `phi(bracket.1) <= tol` always holds and
/// `phi(bracket.0) > tol` holds whenever the lower end was visited.
#[derive(Clone, Debug)]
pub struct ThresholdResult {
    pub s_star: f64,
    pub bracket: (f64, f64),
    pub iterations: usize,
    pub warning: Option<String>,
}

fn bisect_threshold<F>(mut phi: F, bisect_tol: f64, zero_tol: f64) -> Result<ThresholdResult>
where
    F: FnMut(f64) -> Result<(f64, Option<String>)>,
{
    let mut warning = None;
    let (phi_one, w) = phi(1.0)?;
    warning = warning.or(w);
    if phi_one > zero_tol {
        return Err(Error::Inconsistency(format!(
            "phi(1) = {phi_one} exceeds the zero threshold {zero_tol}; \
             the threshold must lie in [0, 1]"
        )));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut iterations = 0;
    while hi - lo > bisect_tol {
        let mid = 0.5 * (lo + hi);
        let (p, w) = phi(mid)?;
        warning = warning.or(w);
        if p <= zero_tol {
            hi = mid;
        } else {
            lo = mid;
        }
        iterations += 1;
    }
    Ok(ThresholdResult {
        s_star: 0.5 * (lo + hi),
        bracket: (lo, hi),
        iterations,
        warning,
    })
}

/// Data-processing threshold: the infimum slope at which the r-round
/// envelope touches the base functional at the base point. `r = 1` is the
/// one-way constant, `r = inf` its symmetric interactive counterpart.
pub fn s_star(family: ParamFamily, rounds: Rounds, cfg: &RateConfig) -> Result<ThresholdResult> {
    cfg.validate()?;
    bisect_threshold(
        |s| {
            let sv = support_value(family, rounds, s, cfg)?;
            Ok((sv.phi, sv.warning))
        },
        cfg.bisect_tol,
        cfg.zero_tol(),
    )
}

/// One-way threshold of an arbitrary binary-X joint via the 1-D X-fiber
/// envelope (no chart required).
pub fn s_star_x_fiber(q: &JointDist, fiber_n: usize, bisect_tol: f64) -> Result<ThresholdResult> {
    bisect_threshold(
        |s| Ok((x_fiber_support_value(q, s, fiber_n)?, None)),
        bisect_tol,
        1e-11,
    )
}

/// Key bits per interaction bit: `s*/(1 - s*)`, infinite when the threshold
/// reaches one.
#[derive(Clone, Debug)]
pub struct KbibResult {
    pub gamma: f64,
    pub threshold: ThresholdResult,
}

pub fn kbib(family: ParamFamily, rounds: Rounds, cfg: &RateConfig) -> Result<KbibResult> {
    let threshold = s_star(family, rounds, cfg)?;
    let s = threshold.s_star;
    let gamma = if s >= 1.0 - cfg.bisect_tol {
        f64::INFINITY
    } else {
        s / (1.0 - s)
    };
    Ok(KbibResult { gamma, threshold })
}

/// Closed form for jointly Gaussian sources with correlation `rho`:
/// the threshold is `rho^2` for every number of rounds.
pub fn gaussian_s_star(rho: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&rho) {
        return Err(Error::Domain(format!("rho={rho} not in [-1,1]")));
    }
    Ok(rho * rho)
}

/// Gaussian key bits per interaction bit `rho^2 / (1 - rho^2)`.
pub fn gaussian_kbib(rho: f64) -> Result<f64> {
    let s = gaussian_s_star(rho)?;
    if s >= 1.0 {
        return Ok(f64::INFINITY);
    }
    Ok(s / (1.0 - s))
}

/// Minimum interaction for maximum key rate via the sigma envelope:
/// `I_r(Q) = H(X|Y) + H(Y|X) - sigma_r(Q)`.
#[derive(Clone, Debug)]
pub struct MimkResult {
    pub value: f64,
    pub sigma_at_base: f64,
    pub warning: Option<String>,
}

pub fn mimk_sigma_route(
    family: ParamFamily,
    rounds: Rounds,
    cfg: &RateConfig,
) -> Result<MimkResult> {
    mimk_sigma_oriented(family, rounds, cfg, Axis::X)
}

fn mimk_sigma_oriented(
    family: ParamFamily,
    rounds: Rounds,
    cfg: &RateConfig,
    start: Axis,
) -> Result<MimkResult> {
    cfg.validate()?;
    if matches!(rounds, Rounds::Finite(0)) {
        return Err(Error::Domain("MIMK needs at least one round".into()));
    }
    let run = sigma_r_from(family, rounds, &cfg.envelope, start)?;
    let sigma = run
        .grid
        .value_at(cfg.base.0, cfg.base.1)?
        .ok_or_else(|| Error::Inconsistency("sigma undefined at the base point".into()))?;
    let base = cfg.base_joint(family)?;
    let value = base.cond_entropy_x_given_y() + base.cond_entropy_y_given_x() - sigma;
    Ok(MimkResult {
        value,
        sigma_at_base: sigma,
        warning: run.warning(),
    })
}

/// Minimum interaction via the vanishing-slope limit:
/// `I_r(Q) = H(X|Y) + H(Y|X) - lim_{s -> 0} omega_r^s(Q) / s`, extrapolated
/// from a decreasing slope sequence.
#[derive(Clone, Debug)]
pub struct MimkLimitResult {
    pub value: f64,
    /// `(s, H(X|Y)+H(Y|X) - omega_r^s(Q)/s)` along the sequence.
    pub sequence: Vec<(f64, f64)>,
    pub extrapolation_warning: Option<String>,
    pub warning: Option<String>,
}

pub const DEFAULT_LIMIT_SLOPES: [f64; 5] = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];

pub fn mimk_limit_route(
    family: ParamFamily,
    rounds: Rounds,
    s_seq: &[f64],
    cfg: &RateConfig,
) -> Result<MimkLimitResult> {
    cfg.validate()?;
    if matches!(rounds, Rounds::Finite(0)) {
        return Err(Error::Domain("MIMK needs at least one round".into()));
    }
    if s_seq.len() < 3 || s_seq.windows(2).any(|w| w[1] >= w[0]) || s_seq.iter().any(|&s| s <= 0.0)
    {
        return Err(Error::Domain(
            "the slope sequence must be at least three strictly decreasing positives".into(),
        ));
    }
    let base = cfg.base_joint(family)?;
    let cond_sum = base.cond_entropy_x_given_y() + base.cond_entropy_y_given_x();
    let mut warning = None;
    let mut sequence = Vec::with_capacity(s_seq.len());
    for &s in s_seq {
        let run = omega_r(s, family, rounds, &cfg.envelope)?;
        warning = warning.or(run.warning());
        let omega = run
            .grid
            .value_at(cfg.base.0, cfg.base.1)?
            .ok_or_else(|| Error::Inconsistency("omega undefined at the base point".into()))?;
        sequence.push((s, cond_sum - omega / s));
    }
    // omega^s/s grows with s, so the estimates should be nondecreasing along
    // the shrinking slopes; a decreasing tail means envelope noise dominates.
    let tail = &sequence[sequence.len() - 3..];
    let extrapolation_warning = tail
        .windows(2)
        .any(|w| w[1].1 < w[0].1 - 1e-9)
        .then(|| "non-monotone tail in the slope-limit sequence".to_string());
    // Richardson: polynomial extrapolation to s = 0 through the last three.
    let value = neville_at_zero(tail);
    Ok(MimkLimitResult {
        value,
        sequence,
        extrapolation_warning,
        warning,
    })
}

fn neville_at_zero(pts: &[(f64, f64)]) -> f64 {
    let mut acc = 0.0;
    for (i, &(si, yi)) in pts.iter().enumerate() {
        let mut weight = 1.0;
        for (j, &(sj, _)) in pts.iter().enumerate() {
            if i != j {
                weight *= sj / (sj - si);
            }
        }
        acc += weight * yi;
    }
    acc
}

/// Check of the binary one-way-optimality condition: interaction adds
/// nothing at the base distribution exactly when the best one-way
/// orientation already attains the interactive minimum.
#[derive(Clone, Debug)]
pub struct TyagiReport {
    pub sigma1: f64,
    pub sigma3: f64,
    pub sigma_inf: f64,
    pub sigma1_transposed: f64,
    pub i1: f64,
    pub i1_transposed: f64,
    pub i_inf: f64,
    /// `min(I_1, I_1^T) - I_inf`, nonnegative up to grid noise.
    pub gap: f64,
    pub one_way_optimal: bool,
    pub tol: f64,
    pub warning: Option<String>,
}

pub fn tyagi_check(family: ParamFamily, cfg: &RateConfig) -> Result<TyagiReport> {
    cfg.validate()?;
    let sigma_at = |rounds: Rounds, start: Axis| -> Result<(f64, Option<String>)> {
        let r = mimk_sigma_oriented(family, rounds, cfg, start)?;
        Ok((r.sigma_at_base, r.warning))
    };
    let (sigma1, w1) = sigma_at(Rounds::Finite(1), Axis::X)?;
    let (sigma3, w3) = sigma_at(Rounds::Finite(3), Axis::X)?;
    let (sigma1_transposed, wt) = sigma_at(Rounds::Finite(1), Axis::Y)?;
    let (sigma_inf, winf) = sigma_at(Rounds::Infinite, Axis::X)?;
    let base = cfg.base_joint(family)?;
    let cond_sum = base.cond_entropy_x_given_y() + base.cond_entropy_y_given_x();
    let i1 = cond_sum - sigma1;
    let i1_transposed = cond_sum - sigma1_transposed;
    let i_inf = cond_sum - sigma_inf;
    let gap = i1.min(i1_transposed) - i_inf;
    let tol = 2.0 * cfg.grid_value_tol;
    Ok(TyagiReport {
        sigma1,
        sigma3,
        sigma_inf,
        sigma1_transposed,
        i1,
        i1_transposed,
        i_inf,
        gap,
        one_way_optimal: gap <= tol,
        tol,
        warning: w1.or(w3).or(wt).or(winf),
    })
}

/// Blocklength-free upper bound on the ratio of key bits to communication
/// bits for an r-round scheme with error `delta` and region slope `s`.
#[derive(Clone, Debug)]
pub struct ConverseBound {
    /// Bound on `log|K| / log|W|`; infinite when the correction factor
    /// is nonpositive.
    pub ratio_bound: f64,
    /// `ratio_bound * log|W|`, the implied key budget in nats.
    pub max_log_k: f64,
}

pub fn converse_bound(log_k: f64, log_w: f64, delta: f64, s: f64) -> Result<ConverseBound> {
    if log_k <= 0.0 || log_w <= 0.0 {
        return Err(Error::Domain(format!(
            "log_k={log_k} and log_w={log_w} must be positive"
        )));
    }
    if !(0.0 < delta && delta < 1.0) || !(0.0 < s && s < 1.0) {
        return Err(Error::Domain(format!(
            "delta={delta} and s={s} must lie in (0,1)"
        )));
    }
    let factor = 1.0
        - (7.0 - 5.0 * s) / (1.0 - s) * delta
        - (2.0 * delta * (1.0 / (2.0 * delta)).ln()
            + (1.0 + s) / (1.0 - s) * std::f64::consts::LN_2)
            / log_k;
    let ratio_bound = if factor <= 0.0 {
        f64::INFINITY
    } else {
        s / (1.0 - s) / factor
    };
    Ok(ConverseBound {
        ratio_bound,
        max_log_k: ratio_bound * log_w,
    })
}

/// One supporting point of a rate-region boundary.
#[derive(Clone, Copy, Debug)]
pub struct BoundaryPoint {
    pub slope: f64,
    pub total_rate: f64,
    pub key_rate: f64,
}

/// Boundary of the achievable `(total rate, key rate)` region at the base
/// point, recovered as the lower envelope of the supporting lines
/// `S -> phi(s) + s S` over a slope grid.
#[derive(Clone, Debug)]
pub struct RateRegionBoundary {
    pub rounds: Rounds,
    pub points: Vec<BoundaryPoint>,
    /// Largest sandwich uncertainty between consecutive supporting lines;
    /// set when it exceeds `1e-3` (the slope grid is too coarse there).
    pub coarse_warning: Option<f64>,
    pub warning: Option<String>,
}

impl RateRegionBoundary {
    /// Key rate at a total rate, interpolated on the output grid.
    pub fn key_rate_at(&self, total_rate: f64) -> Option<f64> {
        let pts = &self.points;
        if pts.is_empty()
            || total_rate < pts[0].total_rate
            || total_rate > pts[pts.len() - 1].total_rate
        {
            return None;
        }
        let k = pts.partition_point(|p| p.total_rate < total_rate);
        if k == 0 {
            return Some(pts[0].key_rate);
        }
        let (a, b) = (&pts[k - 1], &pts[k.min(pts.len() - 1)]);
        if b.total_rate == a.total_rate {
            return Some(a.key_rate.max(b.key_rate));
        }
        let lam = (total_rate - a.total_rate) / (b.total_rate - a.total_rate);
        Some((1.0 - lam) * a.key_rate + lam * b.key_rate)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,S,R\n");
        for p in &self.points {
            out.push_str(&format!(
                "{:.17e},{:.17e},{:.17e}\n",
                p.slope, p.total_rate, p.key_rate
            ));
        }
        out
    }
}

/// Sixty geometric slopes in `[1e-3, 1]`, densified around a known
/// threshold where the boundary knee concentrates.
pub fn default_slope_grid(s_star_hint: Option<f64>) -> Vec<f64> {
    let mut grid: Vec<f64> = (0..60)
        .map(|i| 1e-3 * 1000f64.powf(i as f64 / 59.0))
        .collect();
    if let Some(s) = s_star_hint {
        let lo = (s - 0.1).max(1e-3);
        let hi = (s + 0.1).min(1.0);
        grid.extend((0..20).map(|i| lo + (hi - lo) * i as f64 / 19.0));
    }
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    grid
}

pub fn rate_region_boundary(
    family: ParamFamily,
    rounds: Rounds,
    s_grid: &[f64],
    cfg: &RateConfig,
) -> Result<RateRegionBoundary> {
    cfg.validate()?;
    if s_grid.is_empty() || s_grid.windows(2).any(|w| w[1] <= w[0]) || s_grid[0] <= 0.0 {
        return Err(Error::Domain(
            "the slope grid must be positive and strictly increasing".into(),
        ));
    }
    let phis: Vec<SupportValue> = s_grid
        .par_iter()
        .map(|&s| support_value(family, rounds, s, cfg))
        .collect::<Result<_>>()?;
    let warning = phis.iter().find_map(|p| p.warning.clone());

    let base = cfg.base_joint(family)?;
    let i_xy = mutual_information(&base);
    let s_max = i_xy + base.cond_entropy_x_given_y() + base.cond_entropy_y_given_x();
    let n = cfg.boundary_points.max(2);
    let points: Vec<BoundaryPoint> = (0..n)
        .map(|k| {
            let total = s_max * k as f64 / (n - 1) as f64;
            let (slope, key) = s_grid
                .iter()
                .zip(&phis)
                .map(|(&s, p)| (s, p.phi + s * total))
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .expect("slope grid is nonempty");
            // the vanishing-slope limit line is the constant I(X;Y); taking
            // it into the minimum closes the conjugation below the grid
            let (slope, key) = if i_xy < key {
                (0.0, i_xy)
            } else {
                (slope, key)
            };
            BoundaryPoint {
                slope,
                total_rate: total,
                key_rate: key,
            }
        })
        .collect();

    // Sandwich bound between the piecewise-line boundary and the chord of
    // finite-difference touch points.
    let mut coarse_gap = 0.0f64;
    for i in 1..s_grid.len().saturating_sub(2) {
        let touch =
            |k: usize| (phis[k - 1].phi - phis[k + 1].phi) / (s_grid[k + 1] - s_grid[k - 1]);
        let (t_lo, t_hi) = (touch(i + 1), touch(i));
        if t_hi > t_lo {
            coarse_gap = coarse_gap.max((s_grid[i + 1] - s_grid[i]) * (t_hi - t_lo) / 4.0);
        }
    }
    Ok(RateRegionBoundary {
        rounds,
        points,
        coarse_warning: (coarse_gap > 1e-3).then_some(coarse_gap),
        warning,
    })
}
