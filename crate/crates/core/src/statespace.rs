//! Linear time-invariant systems and their block controller form.

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, Mat, C64};
use crate::matpoly::MatrixPolynomial;

/// Largest accepted condition number of the block controllability matrix.
pub const CONTROLLABILITY_COND_CAP: f64 = 1e12;
/// Largest accepted eigenvector condition number in [`eigenstructure`].
pub const EIGENVECTOR_COND_CAP: f64 = 1e10;

/// `ẋ = A x + B u`, `y = C x + D u`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    a: Mat,
    b: Mat,
    c: Mat,
    d: Mat,
    pub state_labels: Option<Vec<String>>,
    pub input_labels: Option<Vec<String>>,
    pub output_labels: Option<Vec<String>>,
}

impl StateSpace {
    pub fn new(a: Mat, b: Mat, c: Mat, d: Mat) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || !a.is_square() {
            return Err(Error::Dimension(format!("A is {}x{}, must be square", a.nrows(), a.ncols())));
        }
        if b.nrows() != n || b.ncols() == 0 {
            return Err(Error::Dimension(format!("B is {}x{}, expected {n} rows", b.nrows(), b.ncols())));
        }
        if c.ncols() != n || c.nrows() == 0 {
            return Err(Error::Dimension(format!("C is {}x{}, expected {n} columns", c.nrows(), c.ncols())));
        }
        if d.shape() != (c.nrows(), b.ncols()) {
            return Err(Error::Dimension(format!(
                "D is {}x{}, expected {}x{}",
                d.nrows(),
                d.ncols(),
                c.nrows(),
                b.ncols()
            )));
        }
        if [&a, &b, &c, &d].iter().any(|m| m.iter().any(|x| !x.is_finite())) {
            return Err(Error::InvalidInput("system matrices contain non-finite entries".into()));
        }
        Ok(Self { a, b, c, d, state_labels: None, input_labels: None, output_labels: None })
    }

    /// System with `D = 0`.
    pub fn strictly_proper(a: Mat, b: Mat, c: Mat) -> Result<Self> {
        let d = Mat::zeros(c.nrows(), b.ncols());
        Self::new(a, b, c, d)
    }

    pub fn with_labels(
        mut self,
        states: Option<Vec<String>>,
        inputs: Option<Vec<String>>,
        outputs: Option<Vec<String>>,
    ) -> Result<Self> {
        let check = |labels: &Option<Vec<String>>, len: usize, what: &str| match labels {
            Some(l) if l.len() != len => Err(Error::Dimension(format!(
                "{} {what} labels for {len} {what}s",
                l.len()
            ))),
            _ => Ok(()),
        };
        check(&states, self.n(), "state")?;
        check(&inputs, self.m(), "input")?;
        check(&outputs, self.p(), "output")?;
        self.state_labels = states;
        self.input_labels = inputs;
        self.output_labels = outputs;
        Ok(self)
    }

    pub fn a(&self) -> &Mat {
        &self.a
    }
    pub fn b(&self) -> &Mat {
        &self.b
    }
    pub fn c(&self) -> &Mat {
        &self.c
    }
    pub fn d(&self) -> &Mat {
        &self.d
    }

    /// Number of states.
    pub fn n(&self) -> usize {
        self.a.nrows()
    }
    /// Number of inputs.
    pub fn m(&self) -> usize {
        self.b.ncols()
    }
    /// Number of outputs.
    pub fn p(&self) -> usize {
        self.c.nrows()
    }

    /// Same system with `A` replaced, e.g. by a perturbed or closed-loop matrix.
    pub fn with_a(&self, a: Mat) -> Result<Self> {
        let mut out = Self::new(a, self.b.clone(), self.c.clone(), self.d.clone())?;
        out.state_labels = self.state_labels.clone();
        out.input_labels = self.input_labels.clone();
        out.output_labels = self.output_labels.clone();
        Ok(out)
    }
}

/// `[B, AB, ..., A^(l-1) B]`.
pub fn controllability_matrix(sys: &StateSpace, l: usize) -> Mat {
    let (n, m) = (sys.n(), sys.m());
    let mut w = Mat::zeros(n, l * m);
    let mut block = sys.b.clone();
    for i in 0..l {
        w.view_mut((0, i * m), (n, m)).copy_from(&block);
        block = &sys.a * block;
    }
    w
}

/// Block controllability index `l = n / m`, after checking that
/// `[B, AB, ..., A^(l-1) B]` has full rank.
pub fn block_controllability_index(sys: &StateSpace) -> Result<usize> {
    let (n, m) = (sys.n(), sys.m());
    if n % m != 0 {
        return Err(Error::IndexNotIntegral { n, m });
    }
    let l = n / m;
    let rank = linalg::numerical_rank(&controllability_matrix(sys, l));
    if rank < n {
        return Err(Error::NotBlockControllable { rank, n });
    }
    Ok(l)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockControllerForm {
    pub tc: Mat,
    pub ac: Mat,
    pub bc: Mat,
    pub cc: Mat,
    pub index: usize,
    /// `A_1, ..., A_l`; the bottom block row of `A_c` is `[-A_l, ..., -A_1]`.
    pub coeff_blocks: Vec<Mat>,
    /// `C_1, ..., C_l` with `C_c = [C_l, ..., C_1]`.
    pub output_blocks: Vec<Mat>,
}

impl BlockControllerForm {
    pub fn order(&self) -> usize {
        self.bc.ncols()
    }

    /// Open-loop characteristic matrix polynomial `D_R(s)`.
    pub fn denominator(&self) -> MatrixPolynomial {
        MatrixPolynomial::monic(self.coeff_blocks.clone()).expect("blocks are square")
    }
}

pub fn to_block_controller_form(sys: &StateSpace) -> Result<BlockControllerForm> {
    let l = block_controllability_index(sys)?;
    let (n, m) = (sys.n(), sys.m());
    let wc = controllability_matrix(sys, l);
    let condition = linalg::cond2(&wc);
    if !(condition <= CONTROLLABILITY_COND_CAP) {
        return Err(Error::IllConditioned {
            what: "block controllability matrix",
            condition,
            cap: CONTROLLABILITY_COND_CAP,
        });
    }
    // T_cl W_c = [0 ... 0 I]
    let mut selector = Mat::zeros(m, n);
    selector.view_mut((0, n - m), (m, m)).copy_from(&Mat::identity(m, m));
    let tcl = linalg::solve_right(&wc, &selector, "block controllability matrix")?;

    let mut tc = Mat::zeros(n, n);
    let mut row = tcl;
    for i in 0..l {
        tc.view_mut((i * m, 0), (m, n)).copy_from(&row);
        row = &row * &sys.a;
    }
    let ac = linalg::solve_right(&tc, &(&tc * &sys.a), "controller-form transformation")?;
    let bc = &tc * &sys.b;
    let cc = linalg::solve_right(&tc, &sys.c, "controller-form transformation")?;

    let coeff_blocks: Vec<Mat> = (1..=l)
        .map(|i| -ac.view(((l - 1) * m, (l - i) * m), (m, m)).into_owned())
        .collect();
    let output_blocks: Vec<Mat> =
        (1..=l).map(|i| cc.view((0, (l - i) * m), (cc.nrows(), m)).into_owned()).collect();

    let bcf = BlockControllerForm { tc, ac, bc, cc, index: l, coeff_blocks, output_blocks };
    verify_structure(&bcf, sys)?;
    Ok(bcf)
}

fn verify_structure(bcf: &BlockControllerForm, sys: &StateSpace) -> Result<()> {
    let (m, l) = (bcf.order(), bcf.index);
    let n = m * l;
    let scale = bcf.ac.amax().max(1.0);
    let tol = 1e-8 * scale;
    for i in 0..l - 1 {
        for j in 0..l {
            let expect = if j == i + 1 { Mat::identity(m, m) } else { Mat::zeros(m, m) };
            let block = bcf.ac.view((i * m, j * m), (m, m));
            if (block - expect).amax() > tol {
                return Err(Error::IllConditioned {
                    what: "controller-form transformation",
                    condition: linalg::cond2(&bcf.tc),
                    cap: CONTROLLABILITY_COND_CAP,
                });
            }
        }
    }
    let mut bc_expect = Mat::zeros(n, m);
    bc_expect.view_mut((n - m, 0), (m, m)).copy_from(&Mat::identity(m, m));
    if (&bcf.bc - bc_expect).amax() > 1e-8 * sys.b.amax().max(1.0) * linalg::norm2(&bcf.tc) {
        return Err(Error::IllConditioned {
            what: "controller-form transformation",
            condition: linalg::cond2(&bcf.tc),
            cap: CONTROLLABILITY_COND_CAP,
        });
    }
    Ok(())
}

/// Right matrix fraction `N_R(s) D_R(s)⁻¹` of a system in block controller
/// form: `D_R(s) = I s^l + A_1 s^(l-1) + ... + A_l` and
/// `N_R(s) = C_1 s^(l-1) + ... + C_l`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rmfd {
    /// `[C_1, ..., C_l]`, highest power first.
    pub numerator: Vec<Mat>,
    pub denominator: MatrixPolynomial,
}

impl Rmfd {
    pub fn eval_numerator(&self, s: C64) -> CMat {
        let (p, m) = self.numerator[0].shape();
        let mut acc = CMat::zeros(p, m);
        for c in &self.numerator {
            acc = acc * s + linalg::to_complex(c);
        }
        acc
    }

    /// `N_R(s) D_R(s)⁻¹`.
    pub fn eval(&self, s: C64) -> Result<CMat> {
        let n = self.eval_numerator(s);
        let d = self.denominator.eval_scalar(s);
        Ok(linalg::solve_c(&d.transpose(), &n.transpose(), "denominator D_R(s)")?.transpose())
    }
}

pub fn rmfd(bcf: &BlockControllerForm) -> Rmfd {
    Rmfd { numerator: bcf.output_blocks.clone(), denominator: bcf.denominator() }
}

/// `C (sI - A)⁻¹ B + D`.
pub fn transfer_at(sys: &StateSpace, s: C64) -> Result<CMat> {
    let n = sys.n();
    let near = linalg::eigenvalues(&sys.a).into_iter().map(|z| (z - s).norm()).fold(f64::INFINITY, f64::min);
    if near <= 1e-10 {
        return Err(Error::Singular("sI - A (s is an eigenvalue of A)"));
    }
    let resolvent = CMat::identity(n, n) * s - linalg::to_complex(&sys.a);
    let x = linalg::solve_c(&resolvent, &linalg::to_complex(&sys.b), "sI - A")?;
    Ok(linalg::to_complex(&sys.c) * x + linalg::to_complex(&sys.d))
}

/// Eigenvalues with unit right eigenvectors `V` and biorthogonal left rows `T = V⁻¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenstructure {
    pub values: Vec<C64>,
    pub right: CMat,
    pub left: CMat,
}

impl Eigenstructure {
    /// 2-norm condition number of the right eigenvector matrix.
    pub fn condition(&self) -> f64 {
        linalg::cond2_c(&self.right)
    }
}

pub fn eigenstructure(a: &Mat) -> Result<Eigenstructure> {
    if !a.is_square() || a.is_empty() {
        return Err(Error::Dimension("eigenstructure needs a non-empty square matrix".into()));
    }
    let values = linalg::eigenvalues(a);
    let cluster = 1e-8 * a.amax().max(1.0);
    let right = linalg::eigenvectors(a, &values, cluster);
    // A repeated eigenvalue with too few eigenvectors shows up as a residual.
    let ac = linalg::to_complex(a);
    let residual = (0..values.len())
        .map(|i| (&ac * right.column(i) - right.column(i) * values[i]).norm())
        .fold(0.0, f64::max);
    if residual > 1e-6 * a.amax().max(1.0) {
        return Err(Error::Defective { condition: f64::INFINITY, cap: EIGENVECTOR_COND_CAP });
    }
    let condition = linalg::cond2_c(&right);
    if !(condition <= EIGENVECTOR_COND_CAP) {
        return Err(Error::Defective { condition, cap: EIGENVECTOR_COND_CAP });
    }
    let n = a.nrows();
    let left = linalg::solve_c(&right, &CMat::identity(n, n), "eigenvector matrix")?;
    Ok(Eigenstructure { values, right, left })
}
