//! Acceptance suite: one PASS/FAIL line per criterion.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use blockpole::linalg::{self, c64, Mat, C64};
use blockpole::matpoly::{self, Side, SolventForm, Tolerances};
use blockpole::missile::{self, CaseStudyOptions, Deflections, GainSource};
use blockpole::robustness;
use blockpole::synthesis;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

const FORMS: [SolventForm; 3] = [SolventForm::Diagonal, SolventForm::Controller, SolventForm::Observer];

fn replay(form: SolventForm) -> missile::CaseStudyReport {
    let opts = CaseStudyOptions { gains: GainSource::Replay, ..CaseStudyOptions::new(form) };
    missile::case_study(&opts).expect("replay case study")
}

fn synthesized(form: SolventForm) -> missile::CaseStudyReport {
    missile::case_study(&CaseStudyOptions::new(form)).expect("synthesized case study")
}

/// Gain norm table: rows K_FB diagonal, controller, observer, then K_FF in the same order;
/// columns 1-, 2-, ∞-, Frobenius norm.
const NORM_TABLE: [[f64; 4]; 6] = [
    [37.5808, 31.9807, 55.8008, 38.9680],
    [3593.1, 4032.7, 6746.3, 4037.6],
    [3900.8, 4038.9, 6433.0, 4044.9],
    [36.8406, 31.6246, 47.5305, 38.2114],
    [3209.6, 2855.9, 4004.8, 2860.6],
    [3373.9, 2664.1, 3045.0, 2673.1],
];

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut worst_printed: f64 = 0.0;
    for (k, form) in FORMS.iter().enumerate() {
        let g = missile::reference_gains(*form).unwrap();
        for (row, m, printed) in [(k, &g.feedback_restored, &g.feedback), (k + 3, &g.feedforward, &g.feedforward)] {
            let norms = robustness::matrix_norms(m).as_array();
            let norms_printed = robustness::matrix_norms(printed).as_array();
            for j in 0..4 {
                worst = worst.max(rel(norms[j], NORM_TABLE[row][j]));
                worst_printed = worst_printed.max(rel(norms_printed[j], NORM_TABLE[row][j]));
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    outcome(
        worst <= 0.005 && elapsed < 1.0,
        format!(
            "24 gain norms, worst relative error {worst:.2e} (tol 5e-3) with sign-restored fixtures; as printed {worst_printed:.2e}; {elapsed:.3} s"
        ),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let sys = missile::builtin_linear_model();
    let g = missile::reference_gains(SolventForm::Diagonal).unwrap();
    let target = missile::desired_spectrum();
    let placed = linalg::eigenvalues(&(sys.a() - sys.b() * &g.feedback_restored));
    let err = linalg::spectral_distance(&placed, &target);
    let verbatim = linalg::eigenvalues(&(sys.a() - sys.b() * &g.feedback));
    let err_verbatim = linalg::spectral_distance(&verbatim, &target);
    let elapsed = start.elapsed().as_secs_f64();
    outcome(
        err <= 0.2 && elapsed < 1.0,
        format!(
            "max eigenvalue error {err:.4} (tol 0.2) with sign-restored fixture; as printed {err_verbatim:.2}; {elapsed:.3} s"
        ),
    )
}

/// Partitions of the desired spectrum into two conjugate-closed cells of three.
fn valid_partitions() -> Vec<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    for with_pair in 2..6 {
        let first = vec![0, 1, with_pair];
        let second: Vec<usize> = (2..6).filter(|&i| i != with_pair).collect();
        out.push(vec![first.clone(), second.clone()]);
        out.push(vec![second, first]);
    }
    out
}

fn criterion_3() -> Outcome {
    let sys = missile::builtin_linear_model();
    let spectrum = missile::desired_spectrum();
    let tol = Tolerances::default();
    let (mut runs, mut worst_place, mut worst_dc) = (0, 0.0f64, 0.0f64);
    let mut failures = Vec::new();
    for form in FORMS {
        for side in [Side::Right, Side::Left] {
            for partition in valid_partitions() {
                runs += 1;
                match synthesis::design_2dof(&sys, &spectrum, &partition, form, side, &tol) {
                    Ok(g) => {
                        let placed = linalg::eigenvalues(&(sys.a() - sys.b() * &g.feedback));
                        worst_place = worst_place.max(linalg::spectral_distance(&placed, &spectrum));
                        let dc = synthesis::closed_loop_dc_gain(&sys, &g.feedback).unwrap() * &g.feedforward;
                        worst_dc = worst_dc.max((dc - Mat::identity(3, 3)).amax());
                    }
                    Err(e) => failures.push((format!("{form}/{side}"), format!("{form}/{side}/{partition:?}: {e}"))),
                }
            }
        }
    }
    let passed = failures.is_empty() && worst_place <= 1e-6 && worst_dc <= 1e-8;
    let mut detail = format!(
        "{runs} designs (3 forms x 2 sides x 8 partitions), placement error {worst_place:.2e} (tol 1e-6), DC gain error {worst_dc:.2e} (tol 1e-8)"
    );
    if !failures.is_empty() {
        let mut groups: Vec<(String, usize)> = Vec::new();
        for (g, _) in &failures {
            match groups.iter_mut().find(|(name, _)| name == g) {
                Some(entry) => entry.1 += 1,
                None => groups.push((g.clone(), 1)),
            }
        }
        let summary: Vec<String> = groups.iter().map(|(g, c)| format!("{g} {c}/8")).collect();
        detail.push_str(&format!("; {} failed ({}), first: {}", failures.len(), summary.join(", "), failures[0].1));
    }
    outcome(passed, detail)
}

fn criterion_4() -> Outcome {
    let report = replay(SolventForm::Diagonal);
    let table = [
        (c64(-4.9, 7.35), 8.2812),
        (c64(-4.9, -7.35), 8.2812),
        (c64(-17.1, 0.0), 30.2423),
        (c64(-5.25, 0.0), 7.5088),
        (c64(-7.5, 0.0), 8.6750),
        (c64(-10.9, 0.0), 30.2446),
    ];
    let s = &report.sensitivities;
    let worst = table.iter().map(|&(l, v)| rel(s.sensitivity_of(l), v)).fold(0.0, f64::max);
    let mut ranked: Vec<(C64, f64)> = s.per_eigenvalue.clone();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    let top: Vec<f64> = ranked[..2].iter().map(|p| p.0.re).collect();
    let ordering = top.iter().any(|&r| (r + 17.1).abs() < 0.2) && top.iter().any(|&r| (r + 10.9).abs() < 0.2);
    outcome(
        worst <= 0.2 && ordering,
        format!(
            "worst relative error {worst:.4} (tol 0.2); most sensitive {:.2}, {:.2} (expect -17.1, -10.9); kappa(V) {:.2}",
            top[0], top[1], s.global
        ),
    )
}

fn criterion_5() -> Outcome {
    let diag = replay(SolventForm::Diagonal).measures;
    let expect = [0.7226, 0.0784, 0.2480];
    let got = [diag.m1, diag.m2, diag.m3];
    let errs: Vec<f64> = got.iter().zip(&expect).map(|(g, e)| rel(*g, *e)).collect();
    let reproduce = errs.iter().all(|&e| e <= 0.2);
    let mut ratios = Vec::new();
    for form in [SolventForm::Controller, SolventForm::Observer] {
        let m = synthesized(form).measures;
        ratios.push(diag.m2 / m.m2);
        ratios.push(diag.m3 / m.m3);
    }
    let separated = ratios.iter().all(|&r| r >= 100.0);
    outcome(
        reproduce && separated,
        format!(
            "M1 {:.4} ({:+.1}%), M2 {:.4} ({:+.1}%), M3 {:.4} ({:+.1}%) (tol 20%); diagonal/companion ratios M2,M3: ctrl {:.0}, {:.0}, obs {:.0}, {:.0} (need >= 100)",
            got[0],
            100.0 * (got[0] / expect[0] - 1.0),
            got[1],
            100.0 * (got[1] / expect[1] - 1.0),
            got[2],
            100.0 * (got[2] / expect[2] - 1.0),
            ratios[0],
            ratios[1],
            ratios[2],
            ratios[3]
        ),
    )
}

fn criterion_6() -> Outcome {
    let report = replay(SolventForm::Diagonal);
    let study = report.perturbation.expect("perturbation study");
    let norm_ok = (study.delta_norm - 0.1021).abs() <= 0.001;
    let table = [
        (c64(-4.9, 7.35), 0.0285),
        (c64(-4.9, -7.35), 0.0285),
        (c64(-17.1, 0.0), 0.0563),
        (c64(-5.25, 0.0), 0.0072),
        (c64(-7.5, 0.0), 0.0356),
        (c64(-10.9, 0.0), 0.0836),
    ];
    let shift = &study.shift;
    let worst_r = table
        .iter()
        .map(|&(l, v)| {
            let i = (0..shift.nominal.len())
                .min_by(|&a, &b| (shift.nominal[a] - l).norm().total_cmp(&(shift.nominal[b] - l).norm()))
                .unwrap();
            rel(shift.relative_changes[i], v)
        })
        .fold(0.0, f64::max);
    let expect_e = [0.0024, 0.0089, 0.0082];
    let Some(tracking) = &study.tracking else {
        return outcome(false, format!("perturbed loop unstable at {:?}", study.destabilized));
    };
    let e = &tracking.exact;
    let worst_e = (0..3).map(|i| rel(e[i], expect_e[i])).fold(0.0, f64::max);
    outcome(
        norm_ok && worst_r <= 0.05 && worst_e <= 0.15,
        format!(
            "||dA||2 {:.5} (0.1021 +- 0.001); relative changes worst error {worst_r:.4} (tol 0.05); tracking error ({:.5}, {:.5}, {:.5}) worst error {worst_e:.4} (tol 0.15)",
            study.delta_norm, e[0], e[1], e[2]
        ),
    )
}

fn criterion_7() -> Outcome {
    let diag = replay(SolventForm::Diagonal);
    let pos = diag.time_specs[0].percent_overshoot.unwrap_or(0.0);
    let settle: Vec<f64> = diag.time_specs.iter().map(|s| s.settling_time).collect();
    let expect = [0.6731, 0.7696, 0.4529];
    let settle_ok = settle.iter().zip(&expect).all(|(s, e)| (s - e).abs() <= 0.15);
    let pos_ok = (pos - 17.2).abs() <= 2.0;
    let diag_peak = synthesized(SolventForm::Diagonal).peak_outputs.iter().fold(0.0, |a: f64, &b| a.max(b));
    let mut ratios = Vec::new();
    for form in [SolventForm::Controller, SolventForm::Observer] {
        let peak = synthesized(form).peak_outputs.iter().fold(0.0, |a: f64, &b| a.max(b));
        ratios.push(peak / diag_peak);
    }
    let transient_ok = ratios.iter().all(|&r| r >= 10.0);
    outcome(
        pos_ok && settle_ok && transient_ok,
        format!(
            "alpha POS {pos:.2}% (17.2 +- 2); settling {:.4}/{:.4}/{:.4} s (+- 0.15 of 0.6731/0.7696/0.4529); companion/diagonal peak ratio ctrl {:.0}, obs {:.0} (need >= 10)",
            settle[0], settle[1], settle[2], ratios[0], ratios[1]
        ),
    )
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let tol = Tolerances::default();
    const INSTANCES: usize = 200;
    let mut failures: Vec<String> = Vec::new();

    // Annihilation and spectral round trip over certified random sets.
    let (mut certified, mut rejected) = (0, 0);
    while certified < INSTANCES {
        let m = 2 + certified % 2;
        let l = 2 + (certified / 2) % 2;
        let side = if certified % 4 < 2 { Side::Right } else { Side::Left };
        let (solvents, spectrum) = common::random_solvents(&mut rng, m, l, side);
        let set = match matpoly::certify_complete_set(solvents, &spectrum, &tol) {
            Ok(s) => s,
            Err(_) => {
                rejected += 1;
                continue;
            }
        };
        certified += 1;
        let p = matpoly::poly_from_solvents(&set).unwrap();
        let bound = 1e-8 * (1.0 + p.max_coeff());
        for s in set.solvents() {
            let residual = match side {
                Side::Right => p.eval_right(&s.matrix).unwrap(),
                Side::Left => p.eval_left(&s.matrix).unwrap(),
            }
            .amax();
            if residual > bound {
                failures.push(format!("annihilation residual {residual:.2e} > {bound:.2e}"));
            }
        }
        let roots = p.latent_roots().unwrap();
        let d = linalg::spectral_distance(&roots, &spectrum);
        if d > 1e-6 {
            failures.push(format!("round trip error {d:.2e}"));
        }
    }

    // Vandermonde determinant for commuting diagonal pairs.
    for _ in 0..INSTANCES {
        let m = 2 + rand::Rng::gen_range(&mut rng, 0..3);
        let r1 = common::diag(&(0..m).map(|_| rand::Rng::gen_range(&mut rng, -10.0..10.0)).collect::<Vec<_>>());
        let r2 = common::diag(&(0..m).map(|_| rand::Rng::gen_range(&mut rng, -10.0..10.0)).collect::<Vec<_>>());
        let v = matpoly::block_vandermonde(&[r1.clone(), r2.clone()]).unwrap();
        let (lhs, rhs) = (v.determinant(), (r2 - r1).determinant());
        if (lhs - rhs).abs() > 1e-10 * (1.0 + rhs.abs()) {
            failures.push(format!("Vandermonde determinant {lhs} vs {rhs}"));
        }
    }

    // Wilkinson first-order bound.
    for _ in 0..INSTANCES {
        let n = 3 + rand::Rng::gen_range(&mut rng, 0..4);
        let spectrum = common::random_spectrum(&mut rng, n, 0.5);
        let a = common::realize(&mut rng, &spectrum);
        let mut da = common::random_matrix(&mut rng, n, n, 1.0);
        da *= 1e-6 / linalg::norm2(&da);
        let sens = robustness::eigen_sensitivities(&a).unwrap();
        let shift = robustness::perturbed_spectrum(&a, &da).unwrap();
        for (i, (l, s)) in sens.per_eigenvalue.iter().enumerate() {
            debug_assert!((shift.nominal[i] - l).norm() < 1e-9);
            let moved = (shift.perturbed[i] - shift.nominal[i]).norm();
            if moved > 1.05 * s * 1e-6 {
                failures.push(format!("Wilkinson bound: |dl| {moved:.3e} > 1.05 s {:.3e}", 1.05 * s * 1e-6));
            }
        }
    }

    let elapsed = start.elapsed().as_secs_f64();
    let passed = failures.is_empty() && elapsed < 30.0;
    let mut detail = format!(
        "{INSTANCES} instances per property ({rejected} uncertifiable draws redrawn), {} violations, {elapsed:.2} s (limit 30 s)",
        failures.len()
    );
    if let Some(f) = failures.first() {
        detail.push_str(&format!("; first: {f}"));
    }
    outcome(passed, detail)
}

fn criterion_9() -> Outcome {
    let norms: Vec<f64> = FORMS.iter().map(|&f| synthesized(f).feedback_norms.two_norm).collect();
    let passed = norms[1] >= 10.0 * norms[0] && norms[2] >= 10.0 * norms[0];
    outcome(
        passed,
        format!(
            "||K_FB||2 diagonal {:.4}, controller {:.1}, observer {:.1} (companion must be >= 10x diagonal)",
            norms[0], norms[1], norms[2]
        ),
    )
}

fn criterion_10() -> Outcome {
    let sys = missile::builtin_linear_model();
    let params = missile::MissileParams::have_dash_ii();
    let aero = missile::AeroTables::have_dash_ii();
    let names = ["alpha", "beta", "phi"];
    let mut worst = (0.0f64, String::new());
    for axis in 0..3 {
        for sign in [1.0, -1.0] {
            let mut u = [0.0; 3];
            u[axis] = 0.01 * sign;
            let step = Deflections::from_array(u);
            let run = missile::consistency_run(&sys, &params, &aero, step, 0.2, 1e-4).unwrap();
            for (ch, e) in run.relative_error().iter().enumerate() {
                if let Some(e) = e {
                    if *e > worst.0 {
                        worst = (*e, format!("{:+.2} rad on input {} -> {}", u[axis], axis + 1, names[ch]));
                    }
                }
            }
        }
    }
    outcome(
        worst.0 <= 0.05,
        format!("worst channel peak error {:.1}% (tol 5%) at {}", 100.0 * worst.0, worst.1),
    )
}

type Criterion = fn() -> Outcome;

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 10] = [
        ("gain norms", criterion_1),
        ("closed-loop placement, replay", criterion_2),
        ("closed-loop placement, synthesized", criterion_3),
        ("eigenvalue sensitivities", criterion_4),
        ("stability measures", criterion_5),
        ("perturbation study", criterion_6),
        ("time specifications", criterion_7),
        ("matrix-polynomial suite", criterion_8),
        ("gain-magnitude ordering", criterion_9),
        ("linear/nonlinear consistency", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.passed {
            failed += 1;
        }
        println!("criterion {:>2} {:<36} {}  {}", i + 1, name, if o.passed { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
