//! Two-degree-of-freedom gain synthesis: block pole placement for the state
//! feedback and a DC-gain inverse for the reference feedforward.

use std::fmt;

use crate::error::{Error, Result, Stage};
use crate::linalg::{self, c64, Mat, C64};
use crate::matpoly::{self, MatrixPolynomial, Side, SolventForm, Tolerances};
use crate::statespace::{self, BlockControllerForm, StateSpace};

/// Absolute eigenvalue error accepted when verifying a placement.
pub const PLACEMENT_TOL: f64 = 1e-6;

/// The control law `u = K_FF r - K_FB x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ControlLaw;

impl fmt::Display for ControlLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("u = K_FF r - K_FB x")
    }
}

/// How a pair of gains was obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub form: SolventForm,
    pub side: Side,
    pub spectrum: Vec<C64>,
    pub partition: Vec<Vec<usize>>,
    /// Condition number of the block Vandermonde matrix of the solvent set.
    pub vandermonde_condition: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoDofGains {
    pub feedback: Mat,
    pub feedforward: Mat,
    pub convention: ControlLaw,
    pub provenance: Provenance,
    /// Eigenvalues of `A - B K_FB` as computed after placement.
    pub achieved: Vec<C64>,
    /// `false` when the DC gain is rank deficient and only a least-squares
    /// feedforward could be formed.
    pub exact_tracking: bool,
}

impl TwoDofGains {
    /// Gains supplied from outside the synthesis pipeline. A missing
    /// feedforward is computed from the feedback gain.
    pub fn from_matrices(sys: &StateSpace, feedback: Mat, feedforward: Option<Mat>) -> Result<Self> {
        let dc_gain = closed_loop_dc_gain(sys, &feedback)?;
        let (feedforward, exact_tracking) = match feedforward {
            Some(kff) => {
                if kff.shape() != (sys.m(), sys.p()) {
                    return Err(Error::Dimension(format!(
                        "K_FF is {}x{}, expected {}x{}",
                        kff.nrows(),
                        kff.ncols(),
                        sys.m(),
                        sys.p()
                    )));
                }
                let residual = (&dc_gain * &kff - Mat::identity(sys.p(), sys.p())).amax();
                (kff, residual <= 1e-8)
            }
            None => {
                let ff = feedforward_gain(sys, &feedback)?;
                (ff.gain, ff.exact_tracking)
            }
        };
        let achieved = linalg::eigenvalues(&(sys.a() - sys.b() * &feedback));
        Ok(Self {
            feedback,
            feedforward,
            convention: ControlLaw,
            provenance: Provenance {
                form: SolventForm::General,
                side: Side::Right,
                spectrum: achieved.clone(),
                partition: Vec::new(),
                vandermonde_condition: f64::NAN,
            },
            achieved,
            exact_tracking,
        })
    }
}

/// `K_FB` such that `det(λI - (A - B K_FB))` has the latent roots of `desired`.
pub fn feedback_gain(bcf: &BlockControllerForm, desired: &MatrixPolynomial) -> Result<Mat> {
    let (m, l) = (bcf.order(), bcf.index);
    if desired.order() != m || desired.degree() != l {
        return Err(Error::Dimension(format!(
            "desired polynomial has order {} and degree {}, system needs order {m} and degree {l}",
            desired.order(),
            desired.degree()
        )));
    }
    if !desired.is_monic() {
        return Err(Error::NotMonic);
    }
    // K_c = [K_cl, ..., K_c1] with K_ci = D_di - A_i
    let n = m * l;
    let mut kc = Mat::zeros(m, n);
    for i in 1..=l {
        let block = desired.coeff(i) - &bcf.coeff_blocks[i - 1];
        kc.view_mut((0, (l - i) * m), (m, m)).copy_from(&block);
    }
    let k = kc * &bcf.tc;

    let a = linalg::solve(&bcf.tc, &(&bcf.ac * &bcf.tc), "controller-form transformation")?;
    let b = linalg::solve(&bcf.tc, &bcf.bc, "controller-form transformation")?;
    verify_placement(&a, &b, &k, &desired.latent_roots()?)?;
    Ok(k)
}

/// Fails closed unless `eig(A - B K)` matches `target` within [`PLACEMENT_TOL`].
pub fn verify_placement(a: &Mat, b: &Mat, k: &Mat, target: &[C64]) -> Result<Vec<C64>> {
    let achieved = linalg::eigenvalues(&(a - b * k));
    let max_error = linalg::spectral_distance(&achieved, target);
    if !(max_error <= PLACEMENT_TOL) {
        return Err(Error::Placement { max_error, tolerance: PLACEMENT_TOL, achieved });
    }
    Ok(achieved)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeedforwardReport {
    pub exists: bool,
    pub rank: usize,
    /// `n + m`.
    pub required: usize,
}

/// Steady-state decoupling and tracking are possible iff
/// `rank [[A, B], [C, D]] = n + m`.
pub fn feedforward_exists(sys: &StateSpace) -> FeedforwardReport {
    let (n, m, p) = (sys.n(), sys.m(), sys.p());
    let mut big = Mat::zeros(n + p, n + m);
    big.view_mut((0, 0), (n, n)).copy_from(sys.a());
    big.view_mut((0, n), (n, m)).copy_from(sys.b());
    big.view_mut((n, 0), (p, n)).copy_from(sys.c());
    big.view_mut((n, n), (p, m)).copy_from(sys.d());
    let rank = linalg::numerical_rank(&big);
    FeedforwardReport { exists: rank == n + m, rank, required: n + m }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Feedforward {
    pub gain: Mat,
    /// Closed-loop DC gain from `v` to `y` under `u = v - K_FB x`.
    pub dc_gain: Mat,
    pub exact_tracking: bool,
}

/// Closed-loop DC gain `-(C - D K) (A - B K)⁻¹ B + D`.
pub fn closed_loop_dc_gain(sys: &StateSpace, k_fb: &Mat) -> Result<Mat> {
    if k_fb.shape() != (sys.m(), sys.n()) {
        return Err(Error::Dimension(format!(
            "K_FB is {}x{}, expected {}x{}",
            k_fb.nrows(),
            k_fb.ncols(),
            sys.m(),
            sys.n()
        )));
    }
    let acl = sys.a() - sys.b() * k_fb;
    let x = linalg::solve(&acl, sys.b(), "closed-loop matrix A - B K_FB")?;
    Ok(-(sys.c() - sys.d() * k_fb) * x + sys.d())
}

/// `K_FF = G_dc⁺`, the pseudo-inverse of the closed-loop DC gain.
pub fn feedforward_gain(sys: &StateSpace, k_fb: &Mat) -> Result<Feedforward> {
    let dc_gain = closed_loop_dc_gain(sys, k_fb)?;
    let (gain, rank) = linalg::pinv(&dc_gain);
    let exact_tracking = rank == sys.p();
    if exact_tracking {
        let residual = (&dc_gain * &gain - Mat::identity(sys.p(), sys.p())).amax();
        if residual > 1e-8 {
            return Err(Error::IllConditioned {
                what: "closed-loop DC gain",
                condition: linalg::cond2(&dc_gain),
                cap: 1e8,
            });
        }
    }
    Ok(Feedforward { gain, dc_gain, exact_tracking })
}

/// Splits `spectrum` into cells by index, checking that the cells cover every
/// index once, each has `m` entries and each is closed under conjugation.
pub fn partition_spectrum(spectrum: &[C64], partition: &[Vec<usize>], m: usize) -> Result<Vec<Vec<C64>>> {
    let mut seen = vec![false; spectrum.len()];
    let mut cells = Vec::with_capacity(partition.len());
    for (c, cell) in partition.iter().enumerate() {
        if cell.len() != m {
            return Err(Error::Partition(format!("cell {c} has {} entries, order is {m}", cell.len())));
        }
        let mut values = Vec::with_capacity(m);
        for &i in cell {
            if i >= spectrum.len() {
                return Err(Error::Partition(format!("index {i} out of range for {} eigenvalues", spectrum.len())));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::Partition(format!("index {i} used twice")));
            }
            values.push(spectrum[i]);
        }
        if let Err(e) = linalg::check_conjugate_closed(&values, Tolerances::default().spectral_match) {
            return Err(Error::Partition(format!("cell {c}: {e}")));
        }
        cells.push(values);
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        return Err(Error::Partition(format!("eigenvalue {i} not assigned to any cell")));
    }
    Ok(cells)
}

/// Consecutive cells of size `m`: `[[0..m), [m..2m), ...]`.
pub fn default_partition(n: usize, m: usize) -> Vec<Vec<usize>> {
    (0..n / m).map(|c| (c * m..(c + 1) * m).collect()).collect()
}

/// Full pipeline: canonical solvents, certification, reconstruction of the
/// desired polynomial, feedback gain, feedforward gain.
pub fn design_2dof(
    sys: &StateSpace,
    spectrum: &[C64],
    partition: &[Vec<usize>],
    form: SolventForm,
    side: Side,
    tol: &Tolerances,
) -> Result<TwoDofGains> {
    let (n, m) = (sys.n(), sys.m());
    if spectrum.len() != n {
        return Err(Error::Partition(format!("{} eigenvalues requested for {n} states", spectrum.len())))
            .map_err(Error::at(Stage::Partition));
    }
    linalg::check_conjugate_closed(spectrum, tol.spectral_match).map_err(Error::at(Stage::Partition))?;
    let cells = partition_spectrum(spectrum, partition, m).map_err(Error::at(Stage::Partition))?;

    let bcf = statespace::to_block_controller_form(sys).map_err(Error::at(Stage::ControllerForm))?;
    if cells.len() != bcf.index {
        return Err(Error::Partition(format!(
            "{} cells for block index {}",
            cells.len(),
            bcf.index
        )))
        .map_err(Error::at(Stage::Partition));
    }

    let solvents = matpoly::design_solvents(&cells, form, side).map_err(Error::at(Stage::Solvents))?;
    let set = matpoly::certify_complete_set(solvents, spectrum, tol).map_err(Error::at(Stage::Certification))?;
    let desired = matpoly::poly_from_solvents(&set).map_err(Error::at(Stage::Polynomial))?;

    let feedback = feedback_gain(&bcf, &desired).map_err(Error::at(Stage::Feedback))?;
    let achieved = verify_placement(sys.a(), sys.b(), &feedback, spectrum).map_err(Error::at(Stage::Feedback))?;
    let ff = feedforward_gain(sys, &feedback).map_err(Error::at(Stage::Feedforward))?;

    Ok(TwoDofGains {
        feedback,
        feedforward: ff.gain,
        convention: ControlLaw,
        provenance: Provenance {
            form,
            side,
            spectrum: spectrum.to_vec(),
            partition: partition.to_vec(),
            vandermonde_condition: set.vandermonde_condition(),
        },
        achieved,
        exact_tracking: ff.exact_tracking,
    })
}

/// Algebraic steady-state output for a constant reference `r`.
pub fn steady_state_output(sys: &StateSpace, gains: &TwoDofGains, r: &Mat) -> Result<Mat> {
    Ok(closed_loop_dc_gain(sys, &gains.feedback)? * &gains.feedforward * r)
}

/// Real spectrum helper for callers with real poles only.
pub fn real_spectrum(values: &[f64]) -> Vec<C64> {
    values.iter().map(|&v| c64(v, 0.0)).collect()
}
