//! HAVE DASH II bank-to-turn missile: nonlinear 6-state dynamics, linearization,
//! the reference linear model and the complete autopilot design study.
//!
//! States are ordered `(α, q, β, r, p, φ)` with α and β in degrees and rates
//! and φ in radians; inputs are `(δ_e, δ_r, δ_a)`.

use serde::Deserialize;

use crate::document::SystemDocument;
use crate::error::{Error, Result, Stage};
use crate::linalg::{self, c64, Mat, C64};
use crate::matpoly::{Side, SolventForm, Tolerances};
use crate::robustness::{self, FrequencySearch, NormReport, SensitivityReport, SpectrumShift, StabilityMeasures, TrackingError};
use crate::simulate::{self, SpecOptions, TimeSpecs, Trajectory};
use crate::statespace::StateSpace;
use crate::synthesis::{self, Provenance, TwoDofGains};

const MISSILE_JSON: &str = include_str!("../fixtures/missile.json");
const GAINS_JSON: &str = include_str!("../fixtures/gains.json");
const DELTA_A_JSON: &str = include_str!("../fixtures/delta_a.json");

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MissileParams {
    /// ft/s²
    pub g: f64,
    /// slug
    pub mass: f64,
    /// ft²
    pub k_f: f64,
    /// ft³
    pub k_m: f64,
    /// Speed of sound, ft/s.
    pub c: f64,
    /// slug/ft³
    pub rho: f64,
    /// Axial thrust, lb. Not used by the dynamics.
    pub t_x: f64,
    pub i_xx: f64,
    pub i_yy: f64,
    pub i_zz: f64,
    /// ft/s
    pub v_m: f64,
    /// Trim angle of attack, degrees.
    pub alpha0: f64,
    pub mach: f64,
}

impl MissileParams {
    pub fn have_dash_ii() -> Self {
        Self {
            g: 32.174,
            mass: 9.89,
            k_f: 0.1534,
            k_m: 0.0959,
            c: 968.0,
            rho: 5.124e-4,
            t_x: 389.0,
            i_xx: 1.1913,
            i_yy: 100.5139,
            i_zz: 100.5749,
            v_m: 2662.0,
            alpha0: 10.0,
            mach: 2662.0 / 968.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("g", self.g),
            ("mass", self.mass),
            ("k_f", self.k_f),
            ("k_m", self.k_m),
            ("c", self.c),
            ("rho", self.rho),
            ("t_x", self.t_x),
            ("i_xx", self.i_xx),
            ("i_yy", self.i_yy),
            ("i_zz", self.i_zz),
            ("v_m", self.v_m),
            ("mach", self.mach),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(*v > 0.0)) {
            return Err(Error::InvalidInput(format!("parameter {name} = {v} must be positive")));
        }
        if (self.mach - self.v_m / self.c).abs() > 1e-3 {
            return Err(Error::InvalidInput(format!("mach {} inconsistent with V_m / c = {}", self.mach, self.v_m / self.c)));
        }
        if !(0.0..=25.0).contains(&self.alpha0) || !(2.0..=3.0).contains(&self.mach) {
            return Err(Error::InvalidInput(format!(
                "alpha0 = {} deg, mach = {} outside the aerodynamic fit (0..25 deg, 2..3)",
                self.alpha0, self.mach
            )));
        }
        Ok(())
    }

    /// Force scaling `k_f ρ V_m / m`.
    pub fn k_force(&self) -> f64 {
        self.k_f * self.rho * self.v_m / self.mass
    }

    /// Moment scalings `k_m ρ V_m² / I` for the roll, pitch and yaw axes.
    pub fn k_moment(&self) -> [f64; 3] {
        let q = self.k_m * self.rho * self.v_m * self.v_m;
        [q / self.i_xx, q / self.i_yy, q / self.i_zz]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MissileState {
    /// deg
    pub alpha: f64,
    /// rad/s
    pub q: f64,
    /// deg
    pub beta: f64,
    /// rad/s
    pub r: f64,
    /// rad/s
    pub p: f64,
    /// rad
    pub phi: f64,
}

impl MissileState {
    pub fn to_array(self) -> [f64; 6] {
        [self.alpha, self.q, self.beta, self.r, self.p, self.phi]
    }

    pub fn from_array(x: [f64; 6]) -> Self {
        Self { alpha: x[0], q: x[1], beta: x[2], r: x[3], p: x[4], phi: x[5] }
    }

    /// `(α_0, 0, 0, 0, 0, 0)`.
    pub fn nominal(params: &MissileParams) -> Self {
        Self { alpha: params.alpha0, ..Self::default() }
    }
}

/// Control surface deflections `(δ_e, δ_r, δ_a)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Deflections {
    pub elevator: f64,
    pub rudder: f64,
    pub aileron: f64,
}

impl Deflections {
    pub fn to_array(self) -> [f64; 3] {
        [self.elevator, self.rudder, self.aileron]
    }

    pub fn from_array(u: [f64; 3]) -> Self {
        Self { elevator: u[0], rudder: u[1], aileron: u[2] }
    }
}

/// Cubic `c[0] α³ + c[1] α² + c[2] α + c[3]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cubic(pub [f64; 4]);

impl Cubic {
    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().fold(0.0, |acc, c| acc * x + c)
    }
}

/// Aerodynamic coefficients. Control matrices have rows (x, y, z) for forces,
/// (l, m, n) for moments, and columns (e, a, r).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AeroTables {
    pub c_fu: [[f64; 3]; 3],
    pub c_mu: [[f64; 3]; 3],
    pub c_z1: Cubic,
    pub c_z2: Cubic,
    pub c_m1: Cubic,
    pub c_m2: Cubic,
    /// `C_x0 = x[0] + x[1] α`.
    pub c_x0: [f64; 2],
    /// `C_y0 = c_y_beta β`.
    pub c_y_beta: f64,
    /// `C_l0 = c_l_beta β`.
    pub c_l_beta: f64,
    /// `C_n0 = c_n_beta β`.
    pub c_n_beta: f64,
}

impl AeroTables {
    pub fn have_dash_ii() -> Self {
        Self {
            c_fu: [[0.04, 0.0, 0.0], [0.0, 0.0, 0.08], [-0.09, 0.0, 0.0]],
            c_mu: [[0.0, -0.127, 0.0], [-0.675, 0.0, 0.0], [0.0, 0.0, -0.594]],
            c_z1: Cubic([-0.0015, 0.0125, -0.5052, 0.0429]),
            c_z2: Cubic([0.0006, -0.0138, 0.1230, -0.0191]),
            c_m1: Cubic([-0.0055, 0.2131, -2.7419, -0.0381]),
            c_m2: Cubic([0.0014, -0.0623, 0.8715, -0.4041]),
            c_x0: [-0.57, 0.083],
            c_y_beta: -0.21,
            c_l_beta: -0.116,
            c_n_beta: 0.08,
        }
    }

    /// `(C_z0, C_m0)` at `alpha` degrees.
    pub fn aero_coeffs(&self, alpha: f64, mach: f64) -> (f64, f64) {
        (
            self.c_z1.eval(alpha) + self.c_z2.eval(alpha) * mach,
            self.c_m1.eval(alpha) + self.c_m2.eval(alpha) * mach,
        )
    }

    /// Force and moment coefficient sums `(C_y, C_z, C_l, C_m, C_n)`.
    fn totals(&self, s: &MissileState, u: &Deflections, mach: f64) -> [f64; 5] {
        let (cz0, cm0) = self.aero_coeffs(s.alpha, mach);
        // columns of the control matrices are (e, a, r)
        let v = [u.elevator, u.aileron, u.rudder];
        let dot = |row: &[f64; 3]| row[0] * v[0] + row[1] * v[1] + row[2] * v[2];
        [
            self.c_y_beta * s.beta + dot(&self.c_fu[1]),
            cz0 + dot(&self.c_fu[2]),
            self.c_l_beta * s.beta + dot(&self.c_mu[0]),
            cm0 + dot(&self.c_mu[1]),
            self.c_n_beta * s.beta + dot(&self.c_mu[2]),
        ]
    }
}

/// `(C_z0, C_m0)` of the HAVE DASH II tables.
pub fn aero_coeffs(alpha: f64, mach: f64) -> (f64, f64) {
    AeroTables::have_dash_ii().aero_coeffs(alpha, mach)
}

/// Time derivative of the state.
pub fn nonlinear_dynamics(s: &MissileState, u: &Deflections, params: &MissileParams, aero: &AeroTables) -> MissileState {
    let [cy, cz, cl, cm, cn] = aero.totals(s, u, params.mach);
    let kf = params.k_force();
    let [kmx, kmy, kmz] = params.k_moment();
    let gv = params.g / params.v_m;
    let (alpha_rad, beta_rad) = (s.alpha.to_radians(), s.beta.to_radians());
    let (ixx, iyy, izz) = (params.i_xx, params.i_yy, params.i_zz);
    MissileState {
        alpha: s.q - s.p * beta_rad + kf * cz + gv * s.phi.cos(),
        q: (izz - ixx) / iyy * s.p * s.r + kmy * cm,
        beta: -s.r + s.p * alpha_rad + kf * cy + gv * s.phi.sin(),
        r: (ixx - iyy) / izz * s.p * s.q + kmz * cn,
        p: (iyy - izz) / ixx * s.q * s.r + kmx * cl,
        phi: s.p,
    }
}

/// Central finite-difference step for linearization.
pub const LINEARIZATION_STEP: f64 = 1e-5;

/// One linear-model entry that differs from the reference model.
#[derive(Debug, Clone, PartialEq)]
pub struct Discrepancy {
    pub matrix: char,
    pub row: usize,
    pub col: usize,
    pub computed: f64,
    pub reference: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Linearization {
    pub system: StateSpace,
    /// Entries differing from [`builtin_linear_model`] by more than 1% and 1e-3.
    pub discrepancies: Vec<Discrepancy>,
}

/// Jacobians of [`nonlinear_dynamics`] at `(trim, deflections)`.
pub fn jacobians(params: &MissileParams, aero: &AeroTables, trim: &MissileState, deflections: &Deflections) -> (Mat, Mat) {
    let h = LINEARIZATION_STEP;
    let f = |x: [f64; 6], u: [f64; 3]| {
        nonlinear_dynamics(&MissileState::from_array(x), &Deflections::from_array(u), params, aero).to_array()
    };
    let (x0, u0) = (trim.to_array(), deflections.to_array());
    let mut a = Mat::zeros(6, 6);
    for j in 0..6 {
        let (mut xp, mut xm) = (x0, x0);
        xp[j] += h;
        xm[j] -= h;
        let (fp, fm) = (f(xp, u0), f(xm, u0));
        for i in 0..6 {
            a[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    let mut b = Mat::zeros(6, 3);
    for j in 0..3 {
        let (mut up, mut um) = (u0, u0);
        up[j] += h;
        um[j] -= h;
        let (fp, fm) = (f(x0, up), f(x0, um));
        for i in 0..6 {
            b[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    (a, b)
}

fn output_selection() -> Mat {
    let mut c = Mat::zeros(3, 6);
    c[(0, 0)] = 1.0;
    c[(1, 2)] = 1.0;
    c[(2, 5)] = 1.0;
    c
}

fn labels(names: &[&str]) -> Option<Vec<String>> {
    Some(names.iter().map(|s| s.to_string()).collect())
}

/// Linear model about `trim` with zero deflections, outputs `(α, β, φ)`.
pub fn linearize(params: &MissileParams, aero: &AeroTables, trim: &MissileState) -> Result<Linearization> {
    params.validate()?;
    if !(0.0..=25.0).contains(&trim.alpha) {
        return Err(Error::InvalidInput(format!("trim alpha {} deg outside the aerodynamic fit", trim.alpha)));
    }
    let (a, b) = jacobians(params, aero, trim, &Deflections::default());
    let system = StateSpace::strictly_proper(a, b, output_selection())?.with_labels(
        labels(&["alpha", "q", "beta", "r", "p", "phi"]),
        labels(&["delta_e", "delta_r", "delta_a"]),
        labels(&["alpha", "beta", "phi"]),
    )?;
    let reference = builtin_linear_model();
    let mut discrepancies = Vec::new();
    for (name, ours, theirs) in [('A', system.a(), reference.a()), ('B', system.b(), reference.b())] {
        for i in 0..ours.nrows() {
            for j in 0..ours.ncols() {
                let (x, y) = (ours[(i, j)], theirs[(i, j)]);
                if (x - y).abs() > 1e-3 && (x - y).abs() > 0.01 * y.abs() {
                    discrepancies.push(Discrepancy { matrix: name, row: i, col: j, computed: x, reference: y });
                }
            }
        }
    }
    Ok(Linearization { system, discrepancies })
}

#[derive(Deserialize)]
struct GainPair {
    feedback: Vec<Vec<f64>>,
    #[serde(default)]
    feedback_sign_restored: Option<Vec<Vec<f64>>>,
    feedforward: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct GainFile {
    diagonal: GainPair,
    controller: GainPair,
    observer: GainPair,
}

#[derive(Deserialize)]
struct DeltaFile {
    delta_a: Vec<Vec<f64>>,
}

/// The reference linear model with outputs `(α, β, φ)` and `D = 0`.
pub fn builtin_linear_model() -> StateSpace {
    builtin_document().system().expect("bundled missile model is valid")
}

/// The bundled system document of the missile, including the design spectrum and partition.
pub fn builtin_document() -> SystemDocument {
    SystemDocument::from_json(MISSILE_JSON).expect("bundled missile document parses")
}

/// `{-4.9 ± 7.35i, -17.1, -5.25, -7.5, -10.9}`.
pub fn desired_spectrum() -> Vec<C64> {
    vec![c64(-4.9, 7.35), c64(-4.9, -7.35), c64(-17.1, 0.0), c64(-5.25, 0.0), c64(-7.5, 0.0), c64(-10.9, 0.0)]
}

pub fn default_partition() -> Vec<Vec<usize>> {
    vec![vec![0, 1, 2], vec![3, 4, 5]]
}

/// Published gain matrices of one solvent form.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceGains {
    pub form: SolventForm,
    /// As printed.
    pub feedback: Mat,
    /// As printed with sign errors corrected; equals `feedback` where the
    /// printed matrix has none.
    pub feedback_restored: Mat,
    /// As printed, for the law `u = -K_FF r - K_FB x`.
    pub feedforward: Mat,
}

pub fn reference_gains(form: SolventForm) -> Result<ReferenceGains> {
    let file: GainFile = serde_json::from_str(GAINS_JSON).expect("bundled gains parse");
    let pair = match form {
        SolventForm::Diagonal => file.diagonal,
        SolventForm::Controller => file.controller,
        SolventForm::Observer => file.observer,
        SolventForm::General => return Err(Error::InvalidInput("no reference gains for the general form".into())),
    };
    let feedback = linalg::try_from_rows(&pair.feedback)?;
    let feedback_restored = match &pair.feedback_sign_restored {
        Some(rows) => linalg::try_from_rows(rows)?,
        None => feedback.clone(),
    };
    Ok(ReferenceGains {
        form,
        feedback,
        feedback_restored,
        feedforward: linalg::try_from_rows(&pair.feedforward)?,
    })
}

/// The perturbation of the closed-loop matrix used in the robustness study.
pub fn reference_perturbation() -> Mat {
    let file: DeltaFile = serde_json::from_str(DELTA_A_JSON).expect("bundled perturbation parses");
    linalg::try_from_rows(&file.delta_a).expect("bundled perturbation is rectangular")
}

/// Wings-level equilibrium with `α = α_0`, `p = φ = β = r = 0` and no
/// lateral deflections: the elevator cancels the pitching moment and `q`
/// balances the normal force and gravity.
pub fn trim(params: &MissileParams, aero: &AeroTables) -> Result<(MissileState, Deflections)> {
    params.validate()?;
    let (cz0, cm0) = aero.aero_coeffs(params.alpha0, params.mach);
    let (c_me, c_ze) = (aero.c_mu[1][0], aero.c_fu[2][0]);
    if c_me == 0.0 {
        return Err(Error::Singular("elevator pitch effectiveness"));
    }
    let elevator = -cm0 / c_me;
    let q = -(params.k_force() * (cz0 + c_ze * elevator) + params.g / params.v_m);
    let state = MissileState { alpha: params.alpha0, q, ..MissileState::default() };
    let u = Deflections { elevator, ..Deflections::default() };
    let residual = nonlinear_dynamics(&state, &u, params, aero).to_array();
    let worst = residual.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if worst > 1e-9 {
        return Err(Error::InvalidInput(format!("no wings-level trim: residual {worst:.3e}")));
    }
    Ok((state, u))
}

/// Classical fourth-order Runge-Kutta with fixed step.
pub fn rk4<F>(f: F, x0: &[f64], dt: f64, steps: usize) -> Vec<Vec<f64>>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let axpy = |x: &[f64], k: &[f64], h: f64| -> Vec<f64> { x.iter().zip(k).map(|(a, b)| a + h * b).collect() };
    let mut out = Vec::with_capacity(steps + 1);
    let mut x = x0.to_vec();
    out.push(x.clone());
    for _ in 0..steps {
        let k1 = f(&x);
        let k2 = f(&axpy(&x, &k1, dt / 2.0));
        let k3 = f(&axpy(&x, &k2, dt / 2.0));
        let k4 = f(&axpy(&x, &k3, dt));
        for i in 0..x.len() {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        out.push(x.clone());
    }
    out
}

/// Peak channel errors between a linear model and the nonlinear dynamics
/// for one deflection step applied at trim.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyRun {
    pub step: Deflections,
    /// Largest |y_linear| per output channel.
    pub linear_peak: [f64; 3],
    /// Largest |y_linear - (y_nonlinear - y_trim)| per output channel.
    pub max_error: [f64; 3],
}

impl ConsistencyRun {
    /// `max_error / linear_peak` for channels the step excites; `None` where
    /// the linear response is identically zero.
    pub fn relative_error(&self) -> [Option<f64>; 3] {
        std::array::from_fn(|i| (self.linear_peak[i] > 0.0).then(|| self.max_error[i] / self.linear_peak[i]))
    }
}

/// Integrates the nonlinear model from trim with `trim deflections + step`
/// and `linear` from zero with `step`, both with RK4.
pub fn consistency_run(
    linear: &StateSpace,
    params: &MissileParams,
    aero: &AeroTables,
    step: Deflections,
    horizon: f64,
    dt: f64,
) -> Result<ConsistencyRun> {
    let (x_trim, u_trim) = trim(params, aero)?;
    let steps = (horizon / dt).round() as usize;
    let u_total = Deflections::from_array(std::array::from_fn(|i| u_trim.to_array()[i] + step.to_array()[i]));
    let nonlinear = rk4(
        |x| {
            let s = MissileState::from_array(x.try_into().expect("six states"));
            nonlinear_dynamics(&s, &u_total, params, aero).to_array().to_vec()
        },
        &x_trim.to_array(),
        dt,
        steps,
    );
    let bu = linear.b() * Mat::from_column_slice(3, 1, &step.to_array());
    let a = linear.a().clone();
    let lin = rk4(
        |x| {
            let dx = &a * Mat::from_column_slice(6, 1, x) + &bu;
            dx.iter().copied().collect()
        },
        &[0.0; 6],
        dt,
        steps,
    );
    let x_trim = x_trim.to_array();
    let c = linear.c();
    let mut linear_peak = [0.0f64; 3];
    let mut max_error = [0.0f64; 3];
    for (xn, xl) in nonlinear.iter().zip(&lin) {
        let dn = Mat::from_fn(6, 1, |i, _| xn[i] - x_trim[i]);
        let yn = c * dn;
        let yl = c * Mat::from_column_slice(6, 1, xl);
        for ch in 0..3 {
            linear_peak[ch] = linear_peak[ch].max(yl[ch].abs());
            max_error[ch] = max_error[ch].max((yl[ch] - yn[ch]).abs());
        }
    }
    Ok(ConsistencyRun { step, linear_peak, max_error })
}

/// Which linear model the design study runs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelSource {
    Builtin,
    Linearized,
}

/// Where the gains of a design study come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GainSource {
    Synthesized,
    /// Published feedback gain with sign errors corrected; feedforward
    /// recomputed from it so the reference is tracked.
    Replay,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseStudyOptions {
    pub form: SolventForm,
    pub side: Side,
    pub partition: Vec<Vec<usize>>,
    pub perturbation: Option<Mat>,
    pub model: ModelSource,
    pub gains: GainSource,
    pub horizon: f64,
    pub dt: f64,
    pub reference: Vec<f64>,
}

impl CaseStudyOptions {
    pub fn new(form: SolventForm) -> Self {
        Self {
            form,
            side: Side::Right,
            partition: default_partition(),
            perturbation: Some(reference_perturbation()),
            model: ModelSource::Builtin,
            gains: GainSource::Synthesized,
            horizon: simulate::DEFAULT_HORIZON,
            dt: simulate::DEFAULT_DT,
            reference: vec![1.0; 3],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationStudy {
    pub delta_a: Mat,
    pub delta_norm: f64,
    pub shift: SpectrumShift,
    /// `None` when the perturbed loop is unstable.
    pub tracking: Option<TrackingError>,
    /// Perturbed eigenvalue with the largest real part, when that part is non-negative.
    pub destabilized: Option<C64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseStudyReport {
    pub form: SolventForm,
    pub gain_source: GainSource,
    pub system: StateSpace,
    pub gains: TwoDofGains,
    pub feedback_norms: NormReport,
    pub feedforward_norms: NormReport,
    pub closed_loop: Mat,
    pub closed_loop_eigenvalues: Vec<C64>,
    pub trajectory: Trajectory,
    /// One entry per output channel.
    pub time_specs: Vec<TimeSpecs>,
    /// Largest |y| over the simulation, per output channel.
    pub peak_outputs: Vec<f64>,
    pub sensitivities: SensitivityReport,
    pub measures: StabilityMeasures,
    pub perturbation: Option<PerturbationStudy>,
}

/// Design, simulation and robustness analysis of the autopilot for one solvent form.
pub fn case_study(opts: &CaseStudyOptions) -> Result<CaseStudyReport> {
    let system = match opts.model {
        ModelSource::Builtin => builtin_linear_model(),
        ModelSource::Linearized => {
            let params = MissileParams::have_dash_ii();
            linearize(&params, &AeroTables::have_dash_ii(), &MissileState::nominal(&params))?.system
        }
    };
    let spectrum = desired_spectrum();
    let gains = match opts.gains {
        GainSource::Synthesized => synthesis::design_2dof(
            &system,
            &spectrum,
            &opts.partition,
            opts.form,
            opts.side,
            &Tolerances::default(),
        )?,
        GainSource::Replay => {
            let reference = reference_gains(opts.form).map_err(Error::at(Stage::Feedback))?;
            let mut gains = TwoDofGains::from_matrices(&system, reference.feedback_restored, None)
                .map_err(Error::at(Stage::Feedforward))?;
            gains.provenance = Provenance {
                form: opts.form,
                side: opts.side,
                spectrum: spectrum.clone(),
                partition: opts.partition.clone(),
                vandermonde_condition: f64::NAN,
            };
            gains
        }
    };

    let closed_loop = system.a() - system.b() * &gains.feedback;
    let trajectory = simulate::step_response(&system, &gains, &opts.reference, opts.horizon, opts.dt)
        .map_err(Error::at(Stage::Simulation))?;
    let time_specs = (0..system.p())
        .map(|ch| simulate::time_specs(&trajectory, ch, &SpecOptions::default()))
        .collect::<Result<Vec<_>>>()
        .map_err(Error::at(Stage::Simulation))?;
    let peak_outputs = (0..system.p())
        .map(|ch| trajectory.outputs.iter().fold(0.0f64, |m, y| m.max(y[ch].abs())))
        .collect();

    let sensitivities = robustness::eigen_sensitivities(&closed_loop).map_err(Error::at(Stage::Robustness))?;
    let measures = robustness::stability_measures(&closed_loop, &FrequencySearch::default())
        .map_err(Error::at(Stage::Robustness))?;

    let perturbation = match &opts.perturbation {
        None => None,
        Some(delta_a) => {
            let shift = robustness::perturbed_spectrum(&closed_loop, delta_a).map_err(Error::at(Stage::Perturbation))?;
            let (tracking, destabilized) = match robustness::tracking_error(&system, &gains, delta_a, &opts.reference) {
                Ok(t) => (Some(t), None),
                Err(Error::Destabilized(z)) => (None, Some(z)),
                Err(e) => return Err(Error::at(Stage::Perturbation)(e)),
            };
            Some(PerturbationStudy {
                delta_a: delta_a.clone(),
                delta_norm: linalg::norm2(delta_a),
                shift,
                tracking,
                destabilized,
            })
        }
    };

    Ok(CaseStudyReport {
        form: opts.form,
        gain_source: opts.gains,
        feedback_norms: robustness::matrix_norms(&gains.feedback),
        feedforward_norms: robustness::matrix_norms(&gains.feedforward),
        closed_loop_eigenvalues: linalg::eigenvalues(&closed_loop),
        closed_loop,
        system,
        gains,
        trajectory,
        time_specs,
        peak_outputs,
        sensitivities,
        measures,
        perturbation,
    })
}
