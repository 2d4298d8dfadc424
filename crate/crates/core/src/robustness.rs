//! Gain magnitudes, eigenvalue sensitivities, robust-stability measures and
//! steady-state tracking error under an additive perturbation of `A`.

use crate::error::{Error, Result};
use crate::linalg::{self, c64, CMat, Mat, C64};
use crate::statespace::{self, StateSpace};
use crate::synthesis::TwoDofGains;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormReport {
    pub one_norm: f64,
    pub two_norm: f64,
    pub inf_norm: f64,
    pub frobenius: f64,
}

impl NormReport {
    pub fn as_array(&self) -> [f64; 4] {
        [self.one_norm, self.two_norm, self.inf_norm, self.frobenius]
    }
}

pub fn matrix_norms(m: &Mat) -> NormReport {
    let col_sum = m.column_iter().map(|c| c.abs().sum()).fold(0.0, f64::max);
    let row_sum = m.row_iter().map(|r| r.abs().sum()).fold(0.0, f64::max);
    NormReport {
        one_norm: col_sum,
        two_norm: linalg::norm2(m),
        inf_norm: row_sum,
        frobenius: m.norm(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityReport {
    /// `(λ_i, s(λ_i))` with `s(λ_i) = ‖v_i‖₂ ‖t_i‖₂`.
    pub per_eigenvalue: Vec<(C64, f64)>,
    /// `κ(V) = ‖V‖₂ ‖V⁻¹‖₂`.
    pub global: f64,
    /// `‖V‖₂` and `‖T‖₂` separately.
    pub right_norm: f64,
    pub left_norm: f64,
}

impl SensitivityReport {
    /// Sensitivity of the eigenvalue closest to `lambda`.
    pub fn sensitivity_of(&self, lambda: C64) -> f64 {
        self.per_eigenvalue
            .iter()
            .min_by(|a, b| (a.0 - lambda).norm().total_cmp(&(b.0 - lambda).norm()))
            .map(|p| p.1)
            .unwrap_or(f64::NAN)
    }
}

pub fn eigen_sensitivities(a: &Mat) -> Result<SensitivityReport> {
    let es = statespace::eigenstructure(a)?;
    let per_eigenvalue = es
        .values
        .iter()
        .enumerate()
        .map(|(i, &l)| (l, es.right.column(i).norm() * es.left.row(i).norm()))
        .collect();
    let sv_r = linalg::singular_values_c(&es.right);
    let sv_l = linalg::singular_values_c(&es.left);
    Ok(SensitivityReport {
        per_eigenvalue,
        global: es.condition(),
        right_norm: sv_r[0],
        left_norm: sv_l[0],
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencySearch {
    /// Number of grid points (half linear, half logarithmic).
    pub grid_points: usize,
    /// Width of the final golden-section bracket.
    pub tolerance: f64,
}

impl Default for FrequencySearch {
    fn default() -> Self {
        Self { grid_points: 2000, tolerance: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityMeasures {
    /// `min_ω σ_min(A - jωI)`.
    pub m1: f64,
    pub m1_argmin_omega: f64,
    /// `|Re λ|_min / κ(V)`.
    pub m2: f64,
    /// `min_i |Re λ_i| / s(λ_i)`.
    pub m3: f64,
}

fn sigma_min_shifted(a: &CMat, omega: f64) -> f64 {
    let n = a.nrows();
    let shifted = a - CMat::identity(n, n) * c64(0.0, omega);
    *linalg::singular_values_c(&shifted).last().expect("non-empty")
}

/// `min_ω σ_min(A - jωI)` over `ω ∈ [0, 10 max|λ|]` on a fixed grid, then
/// golden-section refinement around the best grid point.
pub fn distance_to_instability(a: &Mat, search: &FrequencySearch) -> (f64, f64) {
    let ac = linalg::to_complex(a);
    let w_max = 10.0 * linalg::eigenvalues(a).iter().map(|z| z.norm()).fold(1e-3, f64::max);
    let half = (search.grid_points / 2).max(2);
    let w_min = 1e-4 * w_max;
    let mut grid = vec![0.0];
    grid.extend((0..half).map(|k| w_max * k as f64 / (half - 1) as f64));
    grid.extend((0..half).map(|k| w_min * (w_max / w_min).powf(k as f64 / (half - 1) as f64)));
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let values: Vec<f64> = grid.iter().map(|&w| sigma_min_shifted(&ac, w)).collect();
    let best = (0..grid.len()).min_by(|&i, &j| values[i].total_cmp(&values[j])).expect("non-empty grid");
    let (mut lo, mut hi) = (grid[best.saturating_sub(1)], grid[(best + 1).min(grid.len() - 1)]);

    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let f = |w: f64| sigma_min_shifted(&ac, w);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > search.tolerance {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        }
    }
    let mid = 0.5 * (lo + hi);
    [(values[best], grid[best]), (f(mid), mid)]
        .into_iter()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("two candidates")
}

pub fn stability_measures(a_cl: &Mat, search: &FrequencySearch) -> Result<StabilityMeasures> {
    let values = linalg::eigenvalues(a_cl);
    if let Some(&bad) = values.iter().find(|z| z.re >= 0.0) {
        return Err(Error::Unstable(bad));
    }
    let sens = eigen_sensitivities(a_cl)?;
    let (m1, m1_argmin_omega) = distance_to_instability(a_cl, search);
    let min_re = values.iter().map(|z| z.re.abs()).fold(f64::INFINITY, f64::min);
    let m2 = min_re / sens.global;
    let m3 = sens
        .per_eigenvalue
        .iter()
        .map(|(l, s)| l.re.abs() / s)
        .fold(f64::INFINITY, f64::min);
    Ok(StabilityMeasures { m1, m1_argmin_omega, m2, m3 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumShift {
    pub nominal: Vec<C64>,
    /// `new[i]` is the perturbed eigenvalue matched to `nominal[i]`.
    pub perturbed: Vec<C64>,
    /// `r_i = |λ_i - λ_i'| / |λ_i|`.
    pub relative_changes: Vec<f64>,
}

/// Eigenvalues of `A_cl + ΔA`, each nominal eigenvalue greedily matched to
/// the nearest unclaimed perturbed one.
pub fn perturbed_spectrum(a_cl: &Mat, delta_a: &Mat) -> Result<SpectrumShift> {
    if a_cl.shape() != delta_a.shape() || !a_cl.is_square() {
        return Err(Error::Dimension("A_cl and ΔA must be square of the same size".into()));
    }
    let nominal = linalg::eigenvalues(a_cl);
    let moved = linalg::eigenvalues(&(a_cl + delta_a));
    let pairs = linalg::greedy_match(&nominal, &moved);
    let perturbed: Vec<C64> = pairs.iter().map(|&(_, j, _)| moved[j]).collect();
    let relative_changes = pairs.iter().map(|&(i, _, d)| d / nominal[i].norm()).collect();
    Ok(SpectrumShift { nominal, perturbed, relative_changes })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackingError {
    /// `y(∞) - r` of the perturbed closed loop.
    pub exact: Vec<f64>,
    /// First-order term `(C - DK)(A - BK)⁻¹ ΔA (A - BK)⁻¹ B K_FF r`.
    pub first_order: Vec<f64>,
    /// `B⁺ ΔA (A - BK)⁻¹ B r`.
    pub pseudo_inverse: Vec<f64>,
    /// `‖B⁺‖₂ ‖B‖₂ ‖(A - BK)⁻¹‖₂ ‖ΔA‖₂`, a bound on `‖e‖₂ / ‖r‖₂`.
    pub bound: f64,
}

pub fn tracking_error(sys: &StateSpace, gains: &TwoDofGains, delta_a: &Mat, r: &[f64]) -> Result<TrackingError> {
    let (n, m) = (sys.n(), sys.m());
    if delta_a.shape() != (n, n) || r.len() != m || sys.p() != m {
        return Err(Error::Dimension(format!(
            "need square system, {n}x{n} ΔA and {m} references"
        )));
    }
    let k = &gains.feedback;
    let rv = Mat::from_column_slice(m, 1, r);
    let acl = sys.a() - sys.b() * k;
    let pert = &acl + delta_a;
    if let Some(&bad) = linalg::eigenvalues(&pert).iter().find(|z| z.re >= 0.0) {
        return Err(Error::Destabilized(bad));
    }
    let c_cl = sys.c() - sys.d() * k;
    let v = &gains.feedforward * &rv;
    let bv = sys.b() * &v;

    let x_ss = linalg::solve(&pert, &bv, "perturbed closed-loop matrix")?;
    let y_ss = -(&c_cl * x_ss) + sys.d() * &v;
    let exact = y_ss - &rv;

    let z = linalg::solve(&acl, &bv, "closed-loop matrix")?;
    let first_order = &c_cl * linalg::solve(&acl, &(delta_a * z), "closed-loop matrix")?;

    let (b_pinv, _) = linalg::pinv(sys.b());
    let w = linalg::solve(&acl, &(sys.b() * &rv), "closed-loop matrix")?;
    let pseudo_inverse = &b_pinv * delta_a * w;

    let acl_inv = linalg::solve(&acl, &Mat::identity(n, n), "closed-loop matrix")?;
    let bound = linalg::norm2(&b_pinv) * linalg::norm2(sys.b()) * linalg::norm2(&acl_inv) * linalg::norm2(delta_a);

    Ok(TrackingError {
        exact: exact.iter().copied().collect(),
        first_order: first_order.iter().copied().collect(),
        pseudo_inverse: pseudo_inverse.iter().copied().collect(),
        bound,
    })
}
