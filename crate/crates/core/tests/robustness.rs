mod common;

use blockpole::error::Error;
use blockpole::linalg::{self, c64, CMat, Mat};
use blockpole::missile::{self, CaseStudyOptions, GainSource};
use blockpole::robustness::{self, FrequencySearch};
use common::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn scaled_to(m: Mat, two_norm: f64) -> Mat {
    let s = linalg::norm2(&m);
    m * (two_norm / s)
}

fn replay_diagonal() -> missile::CaseStudyReport {
    let mut opts = CaseStudyOptions::new(blockpole::matpoly::SolventForm::Diagonal);
    opts.gains = GainSource::Replay;
    missile::case_study(&opts).unwrap()
}

/// `1 / |cos θ|` between left and right null vectors of `A - λI`, both taken
/// from right singular vectors (of the matrix and of its adjoint).
fn sensitivity_oracle(a: &Mat, lambda: blockpole::linalg::C64) -> f64 {
    let n = a.nrows();
    let shifted = linalg::to_complex(a) - CMat::identity(n, n) * lambda;
    let null_vector = |m: CMat| {
        let svd = m.svd(false, true);
        let k = (0..n).min_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j])).unwrap();
        svd.v_t.unwrap().row(k).adjoint()
    };
    let v = null_vector(shifted.clone());
    let u = null_vector(shifted.adjoint());
    1.0 / u.dotc(&v).norm()
}

#[test]
fn zero_perturbation_changes_nothing() {
    let r = replay_diagonal();
    let shift = robustness::perturbed_spectrum(&r.closed_loop, &Mat::zeros(6, 6)).unwrap();
    assert!(shift.relative_changes.iter().all(|&c| c < 1e-12));
}

#[test]
fn unstable_matrix_has_no_stability_measures() {
    let a = diag(&[-1.0, 0.5]);
    let err = robustness::stability_measures(&a, &FrequencySearch::default()).unwrap_err();
    assert!(matches!(err, Error::Unstable(_)), "{err}");
}

#[test]
fn m1_is_the_minimum_of_a_dense_scan() {
    let r = replay_diagonal();
    let a = &r.closed_loop;
    let (m1, _) = robustness::distance_to_instability(a, &FrequencySearch::default());
    let omega_max = 10.0 * linalg::eigenvalues(a).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let scan = (0..=20000)
        .map(|k| sigma_min_at(a, c64(0.0, omega_max * k as f64 / 20000.0)))
        .fold(f64::INFINITY, f64::min);
    assert!(m1 <= scan * (1.0 + 1e-9), "{m1} vs scan {scan}");
    assert!(m1 >= scan * (1.0 - 1e-3), "{m1} vs scan {scan}");
}

#[test]
fn perturbations_below_m1_keep_stability() {
    let r = replay_diagonal();
    let m1 = r.measures.m1;
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    for _ in 0..50 {
        let delta = scaled_to(random_matrix(&mut rng, 6, 6, 1.0), 0.99 * m1);
        let worst = linalg::eigenvalues(&(&r.closed_loop + delta)).iter().map(|z| z.re).fold(f64::MIN, f64::max);
        assert!(worst < 0.0, "unstable at {worst}");
    }
}

#[test]
fn tracking_bound_dominates_small_perturbations() {
    let r = replay_diagonal();
    let reference = [1.0, -0.5, 2.0];
    let rn = reference.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    for k in 0..20 {
        let size = 1e-3 / (1 + k) as f64;
        let delta = scaled_to(random_matrix(&mut rng, 6, 6, 1.0), size);
        let t = robustness::tracking_error(&r.system, &r.gains, &delta, &reference).unwrap();
        let e = t.exact.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(e / rn <= t.bound, "{} > {}", e / rn, t.bound);
    }
}

#[test]
fn first_order_tracking_term_is_second_order_accurate() {
    let r = replay_diagonal();
    let reference = [1.0, 1.0, 1.0];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let direction = scaled_to(random_matrix(&mut rng, 6, 6, 1.0), 1.0);
    let gap = |h: f64| {
        let t = robustness::tracking_error(&r.system, &r.gains, &(&direction * h), &reference).unwrap();
        t.exact.iter().zip(&t.first_order).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    };
    let (g1, g2) = (gap(1e-3), gap(5e-4));
    let ratio = g1 / g2;
    assert!((3.5..4.5).contains(&ratio), "gap ratio {ratio}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn norms_are_consistent(seed in any::<u64>(), n in 1usize..6, k in 1usize..6, p in 1usize..6) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let a = random_matrix(&mut r, n, k, 5.0);
        let b = random_matrix(&mut r, k, p, 5.0);
        let (na, nb, nab) = (robustness::matrix_norms(&a), robustness::matrix_norms(&b), robustness::matrix_norms(&(&a * &b)));
        let (x, y, z) = (na.as_array(), nb.as_array(), nab.as_array());
        for j in 0..4 {
            prop_assert!(z[j] <= x[j] * y[j] * (1.0 + 1e-12));
        }
        let rank = linalg::numerical_rank(&a) as f64;
        prop_assert!(na.two_norm <= na.frobenius * (1.0 + 1e-12));
        prop_assert!(na.frobenius <= rank.sqrt() * na.two_norm * (1.0 + 1e-12));
        // oracle: ||A||_1 = ||A^T||_inf
        prop_assert!((robustness::matrix_norms(&a.transpose()).inf_norm - na.one_norm).abs() <= 1e-12 * na.one_norm);
    }

    #[test]
    fn eigenvalue_perturbation_bounds(seed in any::<u64>(), n in 2usize..7) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let spectrum = random_spectrum(&mut r, n, 0.5);
        let a = realize(&mut r, &spectrum);
        let delta = scaled_to(random_matrix(&mut r, n, n, 1.0), 1e-6);
        let sens = robustness::eigen_sensitivities(&a).unwrap();
        prop_assert!(sens.global >= 1.0 - 1e-12);
        let shift = robustness::perturbed_spectrum(&a, &delta).unwrap();
        let mut smallest = f64::INFINITY;
        for (i, l) in shift.nominal.iter().enumerate() {
            let s = sens.sensitivity_of(*l);
            prop_assert!(s >= 1.0 - 1e-9);
            let oracle = sensitivity_oracle(&a, *l);
            prop_assert!((s - oracle).abs() <= 1e-6 * s, "{l}: library {s}, oracle {oracle}");
            let moved = (shift.perturbed[i] - l).norm();
            prop_assert!(moved <= 1.05 * s * 1e-6, "{moved:e} > 1.05 * {s} * 1e-6");
            smallest = smallest.min(moved);
        }
        prop_assert!(smallest <= sens.global * 1e-6);
    }
}
