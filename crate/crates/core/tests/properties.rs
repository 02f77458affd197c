//! Property suites for the algebraic invariants: information measures,
//! chart round trips, hull laws, gap symmetries, and the maximal-correlation
//! oracle cross-checks on random matrices.

use proptest::prelude::*;

use keyrate_core::conjecture::{conj2_c, GapEvaluator};
use keyrate_core::correlation::maximal_correlation;
use keyrate_core::dist::{check_xy_abs_continuity, JointDist, ParamFamily};
use keyrate_core::envelope::upper_concave_hull_1d;
use keyrate_core::info::{binary_convolution, entropy, mutual_information};

fn pmf(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1e-3..1.0f64, n).prop_map(|raw| {
        let s: f64 = raw.iter().sum();
        raw.into_iter().map(|x| x / s).collect()
    })
}

fn joint(m: usize, n: usize) -> impl Strategy<Value = JointDist> {
    pmf(m * n).prop_map(move |flat| JointDist::from_flat(flat, m, n).unwrap())
}

/// Deterministic generator for the seeded oracle loops.
struct SplitMix(u64);

impl SplitMix {
    fn next_f64(&mut self) -> f64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        ((z ^ (z >> 31)) >> 11) as f64 / (1u64 << 53) as f64
    }
}

proptest! {
    #[test]
    fn entropy_permutation_invariant(p in pmf(6)) {
        let h = entropy(&p).unwrap();
        let mut q = p.clone();
        q.reverse();
        q.swap(0, 3);
        prop_assert!((entropy(&q).unwrap() - h).abs() < 1e-12);
    }

    #[test]
    fn mutual_information_bounds(j in joint(3, 4)) {
        let i = mutual_information(&j);
        let hx = entropy(j.marginal_x()).unwrap();
        let hy = entropy(j.marginal_y()).unwrap();
        prop_assert!(i >= 0.0);
        prop_assert!(i <= hx.min(hy) + 1e-12);
    }

    #[test]
    fn convolution_laws(a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let ab = binary_convolution(a, b).unwrap();
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert!((ab - binary_convolution(b, a).unwrap()).abs() < 1e-15);
        prop_assert!((binary_convolution(a, 0.5).unwrap() - 0.5).abs() < 1e-15);
        prop_assert!((binary_convolution(a, 0.0).unwrap() - a).abs() == 0.0);
    }

    #[test]
    fn chart_round_trip(
        f in 0.01..0.99f64,
        g in 0.01..0.99f64,
        e in 0.01..0.49f64,
    ) {
        let fam = ParamFamily::BscKernel { epsilon: e };
        let p = fam.joint(f, g).unwrap();
        let (fr, gr) = fam.params_of(&p).unwrap();
        prop_assert!((fr - f).abs() < 1e-9 && (gr - g).abs() < 1e-9);
        // every chart point factorizes against the chart center
        let base = fam.joint(0.5, 0.5).unwrap();
        prop_assert!(check_xy_abs_continuity(&p, &base).is_ok());
    }

    #[test]
    fn support3_round_trip(f in 0.01..0.99f64, g in 0.01..0.99f64) {
        let fam = ParamFamily::SupportThree;
        let (fr, gr) = fam.params_of(&fam.joint(f, g).unwrap()).unwrap();
        prop_assert!((fr - f).abs() < 1e-9 && (gr - g).abs() < 1e-9);
    }

    #[test]
    fn hull_laws(values in prop::collection::vec(
        prop::option::weighted(0.8, -1.0..1.0f64), 2..40)
    ) {
        let pts: Vec<(f64, Option<f64>)> = values
            .iter()
            .enumerate()
            .map(|(i, &v)| (i as f64, v))
            .collect();
        let env = upper_concave_hull_1d(&pts);
        // domination
        for (p, e) in pts.iter().zip(&env) {
            if let Some(v) = p.1 {
                prop_assert!(e.unwrap() >= v);
            }
        }
        // idempotence
        let again: Vec<(f64, Option<f64>)> =
            pts.iter().zip(&env).map(|(&(x, _), &e)| (x, e)).collect();
        for (a, b) in upper_concave_hull_1d(&again).iter().zip(&env) {
            match (a, b) {
                (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-12),
                (None, None) => {}
                _ => prop_assert!(false, "definedness changed under idempotence"),
            }
        }
        // concavity of the finite part
        let fin: Vec<(f64, f64)> = again.iter().filter_map(|&(x, v)| v.map(|v| (x, v))).collect();
        for w in fin.windows(3) {
            let s1 = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
            let s2 = (w[2].1 - w[1].1) / (w[2].0 - w[1].0);
            prop_assert!(s2 <= s1 + 1e-12);
        }
    }

    #[test]
    fn gap_symmetries(
        f in 0.02..0.98f64,
        g in 0.02..0.98f64,
        alpha in 0.02..0.48f64,
        e in 0.02..0.48f64,
    ) {
        let eval = GapEvaluator::new(alpha, e).unwrap();
        let base = eval.gap(f, g);
        prop_assert!((base - eval.gap(1.0 - f, 1.0 - g)).abs() < 1e-12);
        prop_assert!((base - eval.gap(g, f)).abs() < 1e-12);
    }
}

#[test]
fn dual_c_forms_agree_on_thousand_pairs() {
    // conj2_c cross-checks the two printed closed forms internally and
    // errors out on disagreement beyond 1e-9 relative
    let mut rng = SplitMix(7);
    for _ in 0..1000 {
        let alpha = 1e-3 + 0.998 * rng.next_f64();
        let epsilon = 1e-3 + 0.998 * rng.next_f64();
        conj2_c(alpha, epsilon).unwrap();
    }
}

/// Variational oracle for the maximal correlation of a joint with binary or
/// ternary X: scan the circle of zero-mean unit-variance functions f and
/// take the best-response correlation `sqrt(E[E[f|Y]^2])`.
fn rho_by_function_search(j: &JointDist) -> f64 {
    let m = j.alphabet_x();
    let px = j.marginal_x();
    let py = j.marginal_y();
    // orthonormal basis of the zero-mean subspace in L2(P_X)
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for seed in 0..m {
        let mut v: Vec<f64> = (0..m).map(|i| if i == seed { 1.0 } else { 0.0 }).collect();
        let mean: f64 = v.iter().zip(px).map(|(a, b)| a * b).sum();
        for x in v.iter_mut() {
            *x -= mean;
        }
        for b in &basis {
            let dot: f64 = v.iter().zip(b).zip(px).map(|((a, c), w)| a * c * w).sum();
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= dot * bi;
            }
        }
        let norm: f64 = v.iter().zip(px).map(|(a, w)| a * a * w).sum::<f64>().sqrt();
        if norm > 1e-9 {
            for x in v.iter_mut() {
                *x /= norm;
            }
            basis.push(v);
        }
    }
    let correlation = |f: &[f64]| -> f64 {
        let mut acc = 0.0;
        for (y, &mass) in py.iter().enumerate() {
            let mut cond = 0.0;
            for (x, &fv) in f.iter().enumerate() {
                cond += j.get(x, y) * fv;
            }
            acc += cond * cond / mass;
        }
        acc.sqrt()
    };
    match basis.len() {
        0 => 0.0,
        1 => correlation(&basis[0]),
        _ => {
            let steps = 4000;
            (0..steps)
                .map(|k| {
                    let theta = std::f64::consts::PI * k as f64 / steps as f64;
                    let f: Vec<f64> = (0..m)
                        .map(|x| theta.cos() * basis[0][x] + theta.sin() * basis[1][x])
                        .collect();
                    correlation(&f)
                })
                .fold(0.0, f64::max)
        }
    }
}

fn random_joint(rng: &mut SplitMix, m: usize, n: usize) -> JointDist {
    let raw: Vec<f64> = (0..m * n).map(|_| 0.02 + rng.next_f64()).collect();
    let s: f64 = raw.iter().sum();
    JointDist::from_flat(raw.into_iter().map(|x| x / s).collect(), m, n).unwrap()
}

#[test]
fn rho_matches_function_search_on_random_3x3() {
    let mut rng = SplitMix(2024);
    for _ in 0..20 {
        let j = random_joint(&mut rng, 3, 3);
        let svd = maximal_correlation(&j).unwrap();
        let search = rho_by_function_search(&j);
        assert!((svd - search).abs() < 1e-4, "svd {svd} vs search {search}");
        assert!((0.0..=1.0).contains(&svd));
    }
    // zero exactly on product distributions with indecomposable support
    let mut rng = SplitMix(99);
    for _ in 0..5 {
        let px = random_joint(&mut rng, 1, 3);
        let py = random_joint(&mut rng, 1, 3);
        let flat: Vec<f64> = (0..3)
            .flat_map(|x| (0..3).map(move |y| (x, y)))
            .map(|(x, y)| px.get(0, x) * py.get(0, y))
            .collect();
        let prod = JointDist::from_flat(flat, 3, 3).unwrap();
        assert!(maximal_correlation(&prod).unwrap() < 1e-10);
    }
}

#[test]
fn rho_data_processing_on_random_3x3() {
    let mut rng = SplitMix(77);
    for _ in 0..20 {
        let j = random_joint(&mut rng, 3, 3);
        let rho = maximal_correlation(&j).unwrap();
        // push the Y margin through a random stochastic matrix
        let mut w = [[0.0f64; 3]; 3];
        for row in w.iter_mut() {
            let raw: Vec<f64> = (0..3).map(|_| 0.05 + rng.next_f64()).collect();
            let s: f64 = raw.iter().sum();
            for (cell, r) in row.iter_mut().zip(raw) {
                *cell = r / s;
            }
        }
        let mut flat = vec![0.0; 9];
        for x in 0..3 {
            for y2 in 0..3 {
                for (y, wrow) in w.iter().enumerate() {
                    flat[x * 3 + y2] += j.get(x, y) * wrow[y2];
                }
            }
        }
        let degraded = JointDist::from_flat(flat, 3, 3).unwrap();
        let rho2 = maximal_correlation(&degraded).unwrap();
        assert!(rho2 <= rho + 1e-9, "{rho2} > {rho}");
    }
}
