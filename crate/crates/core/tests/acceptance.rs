//! Acceptance suite: one test per release criterion, each printing a
//! `[PASS]` line with the measured numbers (run with `--nocapture` to see
//! them). Tolerances are fixed here, not tuned at runtime.

use std::time::Instant;

use keyrate_core::conjecture::{
    e85_slack, e85_sweep, equality_point_audit, sweep, GapEvaluator, SweepParams,
};
use keyrate_core::correlation::{
    bss_factor_sum_product, maximal_correlation, rho_m_bss_closed_form, stationarity_residuals,
    sup_rho_m_over_lower_set,
};
use keyrate_core::dist::{JointDist, ParamFamily};
use keyrate_core::envelope::{omega_r, sigma_one_analytic, sigma_r, EnvelopeConfig, Rounds};
use keyrate_core::info::{binary_convolution, binary_entropy, mutual_information};
use keyrate_core::rates::{
    default_slope_grid, kbib, mimk_limit_route, mimk_sigma_route, rate_region_boundary, s_star,
    s_star_x_fiber, support_value, tyagi_check, RateConfig, DEFAULT_LIMIT_SLOPES,
};

const LN2: f64 = std::f64::consts::LN_2;

fn bsc(e: f64) -> ParamFamily {
    ParamFamily::BscKernel { epsilon: e }
}

fn erasure(e: f64) -> JointDist {
    JointDist::from_rows(vec![
        vec![(1.0 - e) / 2.0, e / 2.0, 0.0],
        vec![0.0, e / 2.0, (1.0 - e) / 2.0],
    ])
    .unwrap()
}

#[test]
fn criterion_01_symmetric_sdpc_for_bss() {
    let started = Instant::now();
    let cfg = RateConfig::with_grid(201);
    let t = s_star(bsc(0.11), Rounds::Infinite, &cfg).unwrap();
    let want = (1.0 - 2.0 * 0.11f64).powi(2);
    let err = (t.s_star - want).abs();
    let elapsed = started.elapsed().as_secs_f64();
    assert!(err < 5e-3, "s_inf* = {} vs {want}", t.s_star);
    assert!(elapsed < 60.0, "took {elapsed:.1} s");
    println!(
        "[PASS] 01 symmetric data-processing threshold, binary symmetric source eps=0.11: \
         s* = {:.6} (target {want:.4}, err {err:.2e}), {elapsed:.2} s",
        t.s_star
    );
}

#[test]
fn criterion_02_one_way_sdpc() {
    let cfg = RateConfig::with_grid(201);
    for &e in &[0.05f64, 0.11, 0.2] {
        let t = s_star(bsc(e), Rounds::Finite(1), &cfg).unwrap();
        let want = (1.0 - 2.0 * e).powi(2);
        assert!(
            (t.s_star - want).abs() < 5e-3,
            "eps={e}: {} vs {want}",
            t.s_star
        );
    }
    for &e in &[0.2f64, 0.5] {
        let t = s_star_x_fiber(&erasure(e), 2001, 1e-5).unwrap();
        assert!(
            (t.s_star - (1.0 - e)).abs() < 5e-3,
            "erasure eps={e}: {} vs {}",
            t.s_star,
            1.0 - e
        );
    }
    println!(
        "[PASS] 02 one-way thresholds: (1-2e)^2 for eps in {{0.05, 0.11, 0.2}}; \
         erasure channel threshold 1-eps via the 1-D X-fiber envelope"
    );
}

#[test]
fn criterion_03_maximal_correlation_and_stationarity() {
    for &e in &[0.0f64, 0.11, 0.3, 0.5] {
        let q = bsc(e).joint(0.5, 0.5).unwrap();
        let rho = maximal_correlation(&q).unwrap();
        assert!((rho - (1.0 - 2.0 * e)).abs() < 1e-12, "eps={e}: rho={rho}");
    }
    for &e in &[0.11f64, 0.3] {
        let report = stationarity_residuals(&bsc(e).joint(0.5, 0.5).unwrap()).unwrap();
        assert!(!report.multiplicity_warning);
        assert!(
            report.max_residual() < 1e-9,
            "eps={e}: residuals {report:?}"
        );
    }
    println!(
        "[PASS] 03 maximal correlation 1-2e exact to 1e-12 for eps in {{0, 0.11, 0.3, 0.5}}; \
         all four stationarity residuals < 1e-9 at the symmetric base"
    );
}

#[test]
fn criterion_04_closed_form_cross_validation() {
    let e = 0.11;
    let fam = bsc(e);
    let mut worst = 0.0f64;
    for i in 0..=20 {
        for j in 0..=20 {
            let (f, g) = (i as f64 / 20.0, j as f64 / 20.0);
            let (s, p) = bss_factor_sum_product(e, f, g).unwrap();
            let closed = rho_m_bss_closed_form(e, s, p).unwrap();
            let rho = maximal_correlation(&fam.joint(f, g).unwrap()).unwrap();
            worst = worst.max((closed - rho * rho).abs());
        }
    }
    assert!(worst < 1e-9, "worst closed-form vs SVD gap {worst:.2e}");

    let (max_rho2, (f, g)) = sup_rho_m_over_lower_set(fam, 21).unwrap();
    let want = (1.0 - 2.0 * e).powi(2);
    assert!((max_rho2 - want).abs() < 1e-6, "{max_rho2} vs {want}");
    let (s, p) = bss_factor_sum_product(e, f, g).unwrap();
    assert!(
        (s - 1.0).abs() < 1e-9 && (p - 0.25).abs() < 1e-9,
        "argmax (s, p) = ({s}, {p})"
    );
    println!(
        "[PASS] 04 factor-sum closed form vs SVD to {worst:.1e} on the 21x21 chart grid; \
         grid max rho^2 = {max_rho2:.6} at (s, p) = (1, 1/4)"
    );
}

#[test]
fn criterion_05_sigma_closed_forms() {
    let e = 0.11;
    // analytic one-pass value on the central fiber, no grid error
    let mut worst = 0.0f64;
    for k in 1..=50 {
        let g = k as f64 / 51.0;
        let got = sigma_one_analytic(bsc(e), 0.5, g).unwrap();
        let want = -binary_entropy(binary_convolution(e, g).unwrap()).unwrap()
            + binary_entropy(e).unwrap()
            + binary_entropy(g).unwrap();
        worst = worst.max((got - want).abs());
    }
    assert!(worst < 1e-9, "sigma_1(1/2, g) worst error {worst:.2e}");

    let run = sigma_r(bsc(e), Rounds::Infinite, &EnvelopeConfig::with_grid(201)).unwrap();
    assert!(run.converged);
    let sigma_inf = run.grid.value_at(0.5, 0.5).unwrap().unwrap();
    let h = binary_entropy(e).unwrap();
    assert!((sigma_inf - h).abs() < 2e-3, "{sigma_inf} vs {h}");

    let mut worst3 = 0.0f64;
    for i in 1..=7 {
        for j in 1..=7 {
            let (f, g) = (i as f64 / 8.0, j as f64 / 8.0);
            let got = sigma_one_analytic(ParamFamily::SupportThree, f, g).unwrap();
            let want = f / (f + (1.0 - f) * g) * binary_entropy(g).unwrap();
            worst3 = worst3.max((got - want).abs());
        }
    }
    assert!(worst3 < 1e-9, "support-3 sigma_1 worst error {worst3:.2e}");
    println!(
        "[PASS] 05 sigma closed forms: central fiber to {worst:.1e}; \
         sigma_inf(Q) = {sigma_inf:.6} vs h(eps) = {h:.6} at grid 201; \
         support-3 one-pass form to {worst3:.1e}"
    );
}

#[test]
fn criterion_06_mimk_dual_route() {
    let cfg = RateConfig::with_grid(201);
    for &e in &[0.11f64, 0.3] {
        let h = binary_entropy(e).unwrap();
        for rounds in [Rounds::Finite(1), Rounds::Infinite] {
            let a = mimk_sigma_route(bsc(e), rounds, &cfg).unwrap();
            let b = mimk_limit_route(bsc(e), rounds, &DEFAULT_LIMIT_SLOPES, &cfg).unwrap();
            assert!(
                (a.value - b.value).abs() <= 1e-2,
                "eps={e} {rounds:?}: sigma route {} vs limit route {}",
                a.value,
                b.value
            );
            assert!(
                (a.value - h).abs() < 2e-3,
                "eps={e} {rounds:?}: {}",
                a.value
            );
            assert!(
                (b.value - h).abs() < 2e-3,
                "eps={e} {rounds:?}: {}",
                b.value
            );
        }
    }
    println!(
        "[PASS] 06 minimum-interaction dual route: sigma route and slope-limit route agree \
         within 1e-2 and match h(eps) within 2e-3 for eps in {{0.11, 0.3}}, r in {{1, inf}}"
    );
}

#[test]
fn criterion_07_binary_one_way_optimality() {
    let cfg = RateConfig::with_grid(201);
    let report = tyagi_check(bsc(0.11), &cfg).unwrap();
    assert!(report.one_way_optimal, "symmetric base: {report:?}");

    let off_cfg = RateConfig {
        base: (0.3, 0.3),
        ..RateConfig::with_grid(201)
    };
    let off = tyagi_check(bsc(0.11), &off_cfg).unwrap();
    assert!(
        off.sigma3 - off.sigma1 > 1e-3,
        "expected a strict sigma_3 - sigma_1 gap at (0.3, 0.3): {off:?}"
    );

    let s3_cfg = RateConfig {
        base: (0.6, 0.5),
        ..RateConfig::with_grid(201)
    };
    let s3 = tyagi_check(ParamFamily::SupportThree, &s3_cfg).unwrap();
    assert!(
        s3.sigma3 - s3.sigma1 > 1e-3,
        "expected a strict sigma_3 - sigma_1 gap on the support-3 chart: {s3:?}"
    );
    println!(
        "[PASS] 07 one-way optimality verdicts: symmetric-kernel base one-way-optimal \
         (gap {:.2e}); strict gaps sigma_3 - sigma_1 = {:.4e} at (0.3, 0.3) and {:.4e} \
         on the support-3 chart",
        report.gap,
        off.sigma3 - off.sigma1,
        s3.sigma3 - s3.sigma1
    );
}

#[test]
fn criterion_08_dominance_sweep_desk_scale() {
    let started = Instant::now();
    let report = sweep(&SweepParams::full(0.01)).unwrap();
    assert!(
        report.min_gap >= -1e-12,
        "min gap {:.3e} at {:?}",
        report.min_gap,
        report.argmin
    );
    let audit = equality_point_audit(0.11, 0.11).unwrap();
    assert!(audit.max_abs_gap < 1e-10, "{audit:?}");
    assert!(audit.max_abs_gradient < 1e-5, "{audit:?}");
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 120.0, "took {elapsed:.1} s");
    println!(
        "[PASS] 08 dominance sweep at step 0.01 ({} cells): min gap {:.3e} >= -1e-12, \
         {} negatives; tangency audit gap {:.1e}, gradient {:.1e}; {elapsed:.1} s",
        report.cells_scanned,
        report.min_gap,
        report.negative_count,
        audit.max_abs_gap,
        audit.max_abs_gradient
    );
}

/// Opt-in long run (about half an hour on a couple of cores): the full-resolution
/// step-0.001 sweep over the full offset ranges. The minimum lands at the
/// double-precision roundoff floor, and any negative cells sit in the
/// near-uniform corner where both sides of the inequality vanish.
#[test]
#[ignore = "paper-scale sweep; run with --ignored"]
fn criterion_08_dominance_sweep_paper_scale() {
    let report = sweep(&SweepParams::full(0.001)).unwrap();
    assert!(
        report.min_gap >= -1e-12,
        "min gap {:.3e} at {:?}",
        report.min_gap,
        report.argmin
    );
    if report.negative_count > 0 {
        let (_, _, alpha, eps) = report.argmin;
        assert!(
            eps >= 0.49 && alpha >= 0.49,
            "negative cells must sit near the uniform corner: {:?}",
            report.argmin
        );
    }
    println!(
        "[PASS] 08b paper-scale sweep ({} cells): min gap {:.3e} (roundoff floor), \
         {} negatives, {:.0} s",
        report.cells_scanned, report.min_gap, report.negative_count, report.wall_time_secs
    );
}

#[test]
fn criterion_09_reduced_inequality() {
    let report = e85_sweep(0.01).unwrap();
    assert!(
        report.min_slack >= -1e-12,
        "min slack {:.3e} at {:?}",
        report.min_slack,
        report.argmin
    );
    let mut worst_zero = 0.0f64;
    for k in 1..=49 {
        let alpha = k as f64 / 100.0;
        worst_zero = worst_zero.max(e85_slack(alpha, alpha, 0.5).unwrap().abs());
    }
    assert!(worst_zero < 1e-10, "zero line deviates by {worst_zero:.2e}");
    println!(
        "[PASS] 09 reduced inequality at step 0.01 ({} cells): min slack {:.3e} >= -1e-12; \
         exact zeros along f = alpha, g = 1/2 to {worst_zero:.1e}",
        report.cells_scanned, report.min_slack
    );
}

#[test]
fn criterion_10_rate_region_boundary_oracle() {
    let e = 0.11;
    let cfg = RateConfig {
        boundary_points: 401,
        ..RateConfig::with_grid(201)
    };
    let slopes = default_slope_grid(Some((1.0 - 2.0 * e) * (1.0 - 2.0 * e)));
    let b1 = rate_region_boundary(bsc(e), Rounds::Finite(1), &slopes, &cfg).unwrap();
    let binf = rate_region_boundary(bsc(e), Rounds::Infinite, &slopes, &cfg).unwrap();

    // the one-way boundary is the symmetric-auxiliary curve
    // (S, R) = (ln2 - h(alpha), ln2 - h(alpha * eps))
    let mut worst = 0.0f64;
    for k in 1..=20 {
        let alpha = 0.5 * k as f64 / 20.0;
        let s_total = LN2 - binary_entropy(alpha).unwrap();
        let r_curve = LN2 - binary_entropy(binary_convolution(alpha, e).unwrap()).unwrap();
        let r_grid = b1.key_rate_at(s_total).unwrap();
        worst = worst.max((r_grid - r_curve).abs());
    }
    assert!(
        worst < 2e-3,
        "one-way boundary vs curve worst gap {worst:.2e}"
    );

    // interaction can only enlarge the region, and the interactive boundary
    // saturates at I(X;Y) once the interaction budget h(eps) is spent
    for (p1, pi) in b1.points.iter().zip(&binf.points) {
        assert!(pi.key_rate >= p1.key_rate - 1e-9);
    }
    let base = bsc(e).joint(0.5, 0.5).unwrap();
    let i_xy = mutual_information(&base);
    let h = binary_entropy(e).unwrap();
    for margin in [0.0, 0.1, 0.3] {
        let sat = binf.key_rate_at(i_xy + h + margin).unwrap();
        assert!(
            (sat - i_xy).abs() < 2e-3,
            "margin {margin}: {sat} vs {i_xy}"
        );
    }
    println!(
        "[PASS] 10 rate-region boundary: one-way curve reproduced within {worst:.1e} at 20 \
         points; interactive region dominates and saturates at I(X;Y) past S = I + h(eps)"
    );
}

#[test]
fn criterion_11_property_battery() {
    // envelope idempotence, monotone passes, boundary preservation are
    // exercised per-module; here the slope-side properties and the
    // threshold chain run at acceptance scale.
    let e_list = [0.05f64, 0.11, 0.2, 0.3];
    let cfg = RateConfig::with_grid(101);

    // phi convexity and monotonicity in s for the interactive envelope
    let slopes: Vec<f64> = (1..=9).map(|k| k as f64 / 9.0).collect();
    let phis: Vec<f64> = slopes
        .iter()
        .map(|&s| {
            support_value(bsc(0.11), Rounds::Infinite, s, &cfg)
                .unwrap()
                .phi
        })
        .collect();
    for w in phis.windows(2) {
        assert!(w[1] <= w[0] + 1e-10, "phi must not increase in s");
    }
    for w in phis.windows(3) {
        assert!(w[2] - 2.0 * w[1] + w[0] >= -1e-9, "phi convexity violated");
    }

    // threshold chain: one-way <= interactive <= sup of squared maximal
    // correlation over the lower set, all within the combined tolerance
    let cfg = RateConfig::with_grid(201);
    for &e in &e_list {
        let s1 = s_star(bsc(e), Rounds::Finite(1), &cfg).unwrap().s_star;
        let sinf = s_star(bsc(e), Rounds::Infinite, &cfg).unwrap().s_star;
        let (sup_rho2, _) = sup_rho_m_over_lower_set(bsc(e), 201).unwrap();
        assert!(s1 <= sinf + 1e-2, "eps={e}: {s1} vs {sinf}");
        assert!(sinf <= sup_rho2 + 1e-2, "eps={e}: {sinf} vs {sup_rho2}");
    }

    // the key-per-interaction ratio is monotone in rounds
    let g1 = kbib(bsc(0.11), Rounds::Finite(1), &cfg).unwrap().gamma;
    let ginf = kbib(bsc(0.11), Rounds::Infinite, &cfg).unwrap().gamma;
    assert!(g1 <= ginf + 1e-2);

    // dominance sweep consistency: where the sweep is clean, the joint
    // envelope touches the base functional at the four tangency points
    let eval = GapEvaluator::new(0.11, 0.11).unwrap();
    let mini = SweepParams {
        step: 0.01,
        f_range: (0.0, 0.5),
        g_range: (0.0, 1.0),
        e_range: (0.11 - 0.004, 0.11 + 0.007),
        a_range: (0.11 - 0.004, 0.11 + 0.007),
    };
    let rep = sweep(&mini).unwrap();
    assert!(rep.min_gap >= -1e-12);
    let run = omega_r(
        eval.s,
        bsc(0.11),
        Rounds::Infinite,
        &EnvelopeConfig::with_grid(201),
    )
    .unwrap();
    for (f, g) in [(0.11, 0.5), (0.89, 0.5), (0.5, 0.11), (0.5, 0.89)] {
        let env = run.grid.value_at(f, g).unwrap().unwrap();
        let base = eval.omega0(f, g);
        assert!(
            (env - base).abs() < 1e-7,
            "envelope should touch omega_0 at ({f}, {g}): {env} vs {base}"
        );
    }
    println!(
        "[PASS] 11 property battery: phi monotone convex; threshold chain \
         s_1* <= s_inf* <= sup rho_m^2 for four noise levels; KBIB monotone in rounds; \
         envelope touches the base functional at the tangency points"
    );
}
