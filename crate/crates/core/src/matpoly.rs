//! Matrix polynomials (λ-matrices) and their block roots.
//!
//! A [`MatrixPolynomial`] of order `m` and degree `l` is
//! `D(λ) = A_0 λ^l + A_1 λ^(l-1) + ... + A_l` with `m × m` real coefficients.
//! A right solvent `R` satisfies `Σ A_i R^(l-i) = 0`, a left solvent `L`
//! satisfies `Σ L^(l-i) A_i = 0`. A complete set of `l` solvents with
//! disjoint spectra and a nonsingular block Vandermonde matrix determines a
//! monic polynomial uniquely; [`poly_from_right_solvents`] and
//! [`poly_from_left_solvents`] rebuild it.

use std::fmt;

use crate::error::{Error, Result, SetDefect};
use crate::linalg::{
    self, c64, check_conjugate_closed, cond2, greedy_match, mat_pow, CMat, Mat, C64,
};

/// Numerical thresholds used when certifying and inverting solvent sets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Absolute tolerance for matching eigenvalues between spectra.
    pub spectral_match: f64,
    /// Largest accepted 2-norm condition number of a block Vandermonde matrix.
    pub vandermonde_cond_cap: f64,
    /// Largest accepted condition number of an eigenvector matrix.
    pub eigenvector_cond_cap: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { spectral_match: 1e-6, vandermonde_cond_cap: 1e12, eigenvector_cond_cap: 1e10 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPolynomial {
    coeffs: Vec<Mat>,
}

impl MatrixPolynomial {
    /// Builds `A_0 λ^l + ... + A_l` from `[A_0, ..., A_l]`.
    pub fn new(coeffs: Vec<Mat>) -> Result<Self> {
        if coeffs.len() < 2 {
            return Err(Error::InvalidInput(
                "a matrix polynomial needs at least two coefficients (degree >= 1)".into(),
            ));
        }
        let m = coeffs[0].nrows();
        if m == 0 {
            return Err(Error::Dimension("order must be positive".into()));
        }
        if let Some((i, c)) = coeffs.iter().enumerate().find(|(_, c)| c.shape() != (m, m)) {
            return Err(Error::Dimension(format!(
                "coefficient {i} is {}x{}, expected {m}x{m}",
                c.nrows(),
                c.ncols()
            )));
        }
        Ok(Self { coeffs })
    }

    /// Monic polynomial `I λ^l + D_1 λ^(l-1) + ... + D_l` from `[D_1, ..., D_l]`.
    pub fn monic(tail: Vec<Mat>) -> Result<Self> {
        let m = tail.first().map(Mat::nrows).unwrap_or(0);
        let mut coeffs = Vec::with_capacity(tail.len() + 1);
        coeffs.push(Mat::identity(m, m));
        coeffs.extend(tail);
        Self::new(coeffs)
    }

    pub fn order(&self) -> usize {
        self.coeffs[0].nrows()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Coefficients `[A_0, ..., A_l]`.
    pub fn coeffs(&self) -> &[Mat] {
        &self.coeffs
    }

    /// Coefficient `A_i` (`A_0` is the leading one).
    pub fn coeff(&self, i: usize) -> &Mat {
        &self.coeffs[i]
    }

    pub fn is_monic(&self) -> bool {
        let m = self.order();
        let scale = self.coeffs.iter().map(|c| c.amax()).fold(1.0, f64::max);
        (&self.coeffs[0] - Mat::identity(m, m)).amax() <= 64.0 * f64::EPSILON * scale
    }

    /// Horner evaluation at a complex scalar.
    pub fn eval_scalar(&self, lambda: C64) -> CMat {
        let m = self.order();
        let mut acc = CMat::zeros(m, m);
        for c in &self.coeffs {
            acc = acc * lambda + linalg::to_complex(c);
        }
        acc
    }

    /// `A_0 X^l + A_1 X^(l-1) + ... + A_l`; zero exactly when `X` is a right solvent.
    pub fn eval_right(&self, x: &Mat) -> Result<Mat> {
        self.check_square_arg(x)?;
        // Horner from the right: ((A_0 X + A_1) X + A_2) X + ...
        let mut acc = self.coeffs[0].clone();
        for c in &self.coeffs[1..] {
            acc = &acc * x + c;
        }
        Ok(acc)
    }

    /// `X^l A_0 + X^(l-1) A_1 + ... + A_l`; zero exactly when `X` is a left solvent.
    pub fn eval_left(&self, x: &Mat) -> Result<Mat> {
        self.check_square_arg(x)?;
        let mut acc = self.coeffs[0].clone();
        for c in &self.coeffs[1..] {
            acc = x * &acc + c;
        }
        Ok(acc)
    }

    fn check_square_arg(&self, x: &Mat) -> Result<()> {
        let m = self.order();
        if x.shape() != (m, m) {
            return Err(Error::Dimension(format!(
                "argument is {}x{}, polynomial order is {m}",
                x.nrows(),
                x.ncols()
            )));
        }
        Ok(())
    }

    /// Block companion matrix: identity blocks on the superdiagonal and
    /// `[-A_l, ..., -A_1]` on the bottom block row.
    pub fn block_companion(&self) -> Result<Mat> {
        if !self.is_monic() {
            return Err(Error::NotMonic);
        }
        let (m, l) = (self.order(), self.degree());
        let mut c = Mat::zeros(l * m, l * m);
        for k in 0..l - 1 {
            c.view_mut((k * m, (k + 1) * m), (m, m)).copy_from(&Mat::identity(m, m));
        }
        for j in 0..l {
            // Column block j holds -A_{l-j}.
            c.view_mut(((l - 1) * m, j * m), (m, m)).copy_from(&(-&self.coeffs[l - j]));
        }
        Ok(c)
    }

    /// The `l·m` latent roots, i.e. the zeros of `det D(λ)`, conjugate pairs adjacent.
    pub fn latent_roots(&self) -> Result<Vec<C64>> {
        Ok(linalg::eigenvalues(&self.block_companion()?))
    }

    /// Largest entry magnitude over all coefficients.
    pub fn max_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.amax()).fold(0.0, f64::max)
    }
}

impl fmt::Display for MatrixPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "MatrixPolynomial(order {}, degree {})", self.order(), self.degree())?;
        for (i, c) in self.coeffs.iter().enumerate() {
            write!(f, "A_{i} ={c}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Right,
    Left,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolventForm {
    Diagonal,
    Controller,
    Observer,
    General,
}

impl fmt::Display for SolventForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolventForm::Diagonal => "diagonal",
            SolventForm::Controller => "controller",
            SolventForm::Observer => "observer",
            SolventForm::General => "general",
        })
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Right => "right",
            Side::Left => "left",
        })
    }
}

/// A block root of a matrix polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct Solvent {
    pub matrix: Mat,
    pub side: Side,
    pub form: SolventForm,
}

impl Solvent {
    pub fn new(matrix: Mat, side: Side, form: SolventForm) -> Result<Self> {
        if !matrix.is_square() || matrix.is_empty() {
            return Err(Error::Dimension("solvent must be a non-empty square matrix".into()));
        }
        Ok(Self { matrix, side, form })
    }

    pub fn order(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn eigenvalues(&self) -> Vec<C64> {
        linalg::eigenvalues(&self.matrix)
    }
}

/// Builds the real solvent with the given latent roots and latent vectors.
///
/// For [`Side::Right`] the columns of `vectors` are right latent vectors and
/// the result is `P Λ P⁻¹`. For [`Side::Left`] the rows of `vectors` are left
/// latent vectors (`q_iᵀ L = λ_i q_iᵀ`) and the result is `Q⁻¹ Λ Q`.
pub fn solvent_from_eigenpairs(
    eigenvalues: &[C64],
    vectors: &CMat,
    side: Side,
    tol: &Tolerances,
) -> Result<Solvent> {
    let m = eigenvalues.len();
    if vectors.shape() != (m, m) || m == 0 {
        return Err(Error::Dimension(format!(
            "{} eigenvalues need a {m}x{m} vector matrix, got {}x{}",
            m,
            vectors.nrows(),
            vectors.ncols()
        )));
    }
    check_conjugate_closed(eigenvalues, tol.spectral_match)?;
    let cond = linalg::cond2_c(vectors);
    if !(cond <= tol.eigenvector_cond_cap) {
        return Err(Error::IllConditioned {
            what: "latent vector matrix",
            condition: cond,
            cap: tol.eigenvector_cond_cap,
        });
    }
    let lambda = CMat::from_diagonal(&nalgebra::DVector::from_column_slice(eigenvalues));
    let product = match side {
        Side::Right => {
            // P Λ P⁻¹ = (P⁻ᵀ (P Λ)ᵀ)ᵀ
            let pl = vectors * &lambda;
            linalg::solve_c(&vectors.transpose(), &pl.transpose(), "latent vector matrix")?
                .transpose()
        }
        Side::Left => {
            let lq = &lambda * vectors;
            linalg::solve_c(vectors, &lq, "latent vector matrix")?
        }
    };
    let scale = product.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let imag = product.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if imag > 1e-8 * scale {
        return Err(Error::NotConjugateClosed(format!(
            "product has imaginary residue {imag:.3e}; conjugate eigenvalues need conjugate vectors"
        )));
    }
    Solvent::new(product.map(|z| z.re), side, SolventForm::General)
}

/// Groups a conjugate-closed list into real values and conjugate pairs,
/// keeping input order. Each pair is returned as its member with positive
/// imaginary part.
enum Mode {
    Real(f64),
    Pair(f64, f64),
}

fn modes(eigenvalues: &[C64], tol: f64) -> Result<Vec<Mode>> {
    check_conjugate_closed(eigenvalues, tol)?;
    let mut used = vec![false; eigenvalues.len()];
    let mut out = Vec::new();
    for i in 0..eigenvalues.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let z = eigenvalues[i];
        if z.im.abs() <= tol {
            out.push(Mode::Real(z.re));
            continue;
        }
        let j = (0..eigenvalues.len())
            .filter(|&j| !used[j])
            .min_by(|&p, &q| {
                (eigenvalues[p] - z.conj())
                    .norm()
                    .total_cmp(&(eigenvalues[q] - z.conj()).norm())
            })
            .expect("closure checked");
        used[j] = true;
        out.push(Mode::Pair(z.re, z.im.abs()));
    }
    Ok(out)
}

/// Real modal matrix: real eigenvalues on the diagonal, each conjugate pair
/// `σ ± jω` as the block `[[σ, ω], [-ω, σ]]`, in input order.
fn modal_matrix(eigenvalues: &[C64], tol: f64) -> Result<Mat> {
    let m = eigenvalues.len();
    let mut out = Mat::zeros(m, m);
    let mut k = 0;
    for mode in modes(eigenvalues, tol)? {
        match mode {
            Mode::Real(v) => {
                out[(k, k)] = v;
                k += 1;
            }
            Mode::Pair(s, w) => {
                out[(k, k)] = s;
                out[(k, k + 1)] = w;
                out[(k + 1, k)] = -w;
                out[(k + 1, k + 1)] = s;
                k += 2;
            }
        }
    }
    Ok(out)
}

/// Companion matrix of the monic polynomial with the given roots. With
/// `flipped = false`: identities on the superdiagonal and the negated
/// coefficients `[-c_m, ..., -c_1]` on the bottom row. With `flipped = true`
/// the reversal `J C J`: identities on the subdiagonal and `[-c_1, ..., -c_m]`
/// on the top row.
pub fn companion_matrix(eigenvalues: &[C64], flipped: bool) -> Mat {
    let m = eigenvalues.len();
    let c = linalg::poly_from_roots(eigenvalues);
    let mut out = Mat::zeros(m, m);
    if flipped {
        for j in 0..m {
            out[(0, j)] = -c[j + 1];
        }
        for i in 1..m {
            out[(i, i - 1)] = 1.0;
        }
    } else {
        for i in 0..m - 1 {
            out[(i, i + 1)] = 1.0;
        }
        for j in 0..m {
            out[(m - 1, j)] = -c[m - j];
        }
    }
    out
}

/// A canonical real realization of the given spectrum.
///
/// * diagonal: real modal form
/// * controller: bottom-row companion matrix
/// * observer: transpose of the controller form
pub fn canonical_solvent(eigenvalues: &[C64], form: SolventForm, side: Side) -> Result<Solvent> {
    canonical_variant(eigenvalues, form, side, false)
}

fn canonical_variant(
    eigenvalues: &[C64],
    form: SolventForm,
    side: Side,
    flipped: bool,
) -> Result<Solvent> {
    let tol = Tolerances::default().spectral_match;
    if eigenvalues.is_empty() {
        return Err(Error::InvalidInput("empty eigenvalue list".into()));
    }
    check_conjugate_closed(eigenvalues, tol)?;
    let matrix = match form {
        SolventForm::Diagonal => modal_matrix(eigenvalues, tol)?,
        SolventForm::Controller => companion_matrix(eigenvalues, flipped),
        SolventForm::Observer => companion_matrix(eigenvalues, flipped).transpose(),
        SolventForm::General => {
            return Err(Error::InvalidInput(
                "no canonical construction for the general form".into(),
            ))
        }
    };
    Solvent::new(matrix, side, form)
}

/// Canonical solvents for a partitioned spectrum, one per cell.
///
/// Two companion matrices of the same layout differ only in one row, which
/// makes the block Vandermonde matrix of a degree-2 set singular. Companion
/// forms therefore alternate layouts: cells 1, 3, 5, ... use the standard
/// companion matrix and cells 2, 4, ... its reversal `J C J` (transposed for
/// the observer form). The diagonal form is unaffected.
pub fn design_solvents(cells: &[Vec<C64>], form: SolventForm, side: Side) -> Result<Vec<Solvent>> {
    cells
        .iter()
        .enumerate()
        .map(|(i, cell)| canonical_variant(cell, form, side, i % 2 == 1))
        .collect()
}

/// Block Vandermonde matrix: block row `i` holds `R_1^i ... R_l^i`, `i = 0..l-1`.
pub fn block_vandermonde(solvents: &[Mat]) -> Result<Mat> {
    let l = solvents.len();
    let m = solvents.first().map(Mat::nrows).unwrap_or(0);
    if l == 0 || m == 0 {
        return Err(Error::InvalidInput("no solvents".into()));
    }
    if solvents.iter().any(|r| r.shape() != (m, m)) {
        return Err(Error::Dimension("solvents must all be square of the same order".into()));
    }
    let mut v = Mat::zeros(l * m, l * m);
    for (j, r) in solvents.iter().enumerate() {
        let mut power = Mat::identity(m, m);
        for i in 0..l {
            v.view_mut((i * m, j * m), (m, m)).copy_from(&power);
            power = &power * r;
        }
    }
    Ok(v)
}

/// Left counterpart used by the left reconstruction: block row `i` holds
/// `I, L_i, ..., L_i^(l-1)`. It is the block transpose of the right one.
fn left_block_vandermonde(solvents: &[Mat]) -> Result<Mat> {
    let l = solvents.len();
    let m = solvents.first().map(Mat::nrows).unwrap_or(0);
    if l == 0 || m == 0 {
        return Err(Error::InvalidInput("no solvents".into()));
    }
    if solvents.iter().any(|r| r.shape() != (m, m)) {
        return Err(Error::Dimension("solvents must all be square of the same order".into()));
    }
    let mut v = Mat::zeros(l * m, l * m);
    for (i, x) in solvents.iter().enumerate() {
        let mut power = Mat::identity(m, m);
        for j in 0..l {
            v.view_mut((i * m, j * m), (m, m)).copy_from(&power);
            power = &power * x;
        }
    }
    Ok(v)
}

/// A complete set of solvents: disjoint spectra whose union is the target
/// spectrum, and a usable block Vandermonde matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SolventSet {
    solvents: Vec<Solvent>,
    vandermonde_condition: f64,
}

impl SolventSet {
    pub fn solvents(&self) -> &[Solvent] {
        &self.solvents
    }

    pub fn side(&self) -> Side {
        self.solvents[0].side
    }

    pub fn order(&self) -> usize {
        self.solvents[0].order()
    }

    pub fn len(&self) -> usize {
        self.solvents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solvents.is_empty()
    }

    /// 2-norm condition number of the block Vandermonde matrix.
    pub fn vandermonde_condition(&self) -> f64 {
        self.vandermonde_condition
    }

    pub fn matrices(&self) -> Vec<Mat> {
        self.solvents.iter().map(|s| s.matrix.clone()).collect()
    }

    pub fn vandermonde(&self) -> Mat {
        block_vandermonde(&self.matrices()).expect("certified set is well formed")
    }
}

/// Certifies that `solvents` form a complete set for `target`.
///
/// Every violated condition is collected into
/// [`Error::IncompleteSolventSet`] so the caller sees all of them at once.
pub fn certify_complete_set(
    solvents: Vec<Solvent>,
    target: &[C64],
    tol: &Tolerances,
) -> Result<SolventSet> {
    let mut defects = Vec::new();
    let Some(first) = solvents.first() else {
        return Err(Error::IncompleteSolventSet(vec![SetDefect::Malformed(
            "empty solvent list".into(),
        )]));
    };
    let (m, side) = (first.order(), first.side);
    if solvents.iter().any(|s| s.order() != m) {
        defects.push(SetDefect::Malformed("solvents have differing orders".into()));
    }
    if solvents.iter().any(|s| s.side != side) {
        defects.push(SetDefect::Malformed("solvents mix right and left sides".into()));
    }
    if !defects.is_empty() {
        return Err(Error::IncompleteSolventSet(defects));
    }

    let spectra: Vec<Vec<C64>> = solvents.iter().map(Solvent::eigenvalues).collect();

    // (i) union of spectra equals the target spectrum.
    let union: Vec<C64> = spectra.iter().flatten().copied().collect();
    let matches = greedy_match(target, &union);
    let mut target_hit = vec![false; target.len()];
    let mut union_hit = vec![false; union.len()];
    for &(i, j, d) in &matches {
        if d <= tol.spectral_match {
            target_hit[i] = true;
            union_hit[j] = true;
        }
    }
    let missing: Vec<C64> =
        target.iter().zip(&target_hit).filter(|(_, &h)| !h).map(|(z, _)| *z).collect();
    let unexpected: Vec<C64> =
        union.iter().zip(&union_hit).filter(|(_, &h)| !h).map(|(z, _)| *z).collect();
    if !missing.is_empty() || !unexpected.is_empty() {
        defects.push(SetDefect::SpectrumMismatch { missing, unexpected });
    }

    // (ii) pairwise disjoint spectra.
    for i in 0..spectra.len() {
        for j in i + 1..spectra.len() {
            let shared: Vec<C64> = spectra[i]
                .iter()
                .filter(|a| spectra[j].iter().any(|b| (*a - b).norm() <= tol.spectral_match))
                .copied()
                .collect();
            if !shared.is_empty() {
                defects.push(SetDefect::SpectraNotDisjoint {
                    first: i,
                    second: j,
                    eigenvalues: shared,
                });
            }
        }
    }

    // (iii) block Vandermonde nonsingular and usable.
    let matrices: Vec<Mat> = solvents.iter().map(|s| s.matrix.clone()).collect();
    let v = match side {
        Side::Right => block_vandermonde(&matrices)?,
        Side::Left => left_block_vandermonde(&matrices)?,
    };
    let condition = cond2(&v);
    if !(condition <= tol.vandermonde_cond_cap) {
        defects.push(SetDefect::VandermondeSingular {
            condition,
            cap: tol.vandermonde_cond_cap,
        });
    }

    if defects.is_empty() {
        Ok(SolventSet { solvents, vandermonde_condition: condition })
    } else {
        Err(Error::IncompleteSolventSet(defects))
    }
}

/// Monic polynomial having every member of a right solvent set as a right
/// solvent: `[D_l, ..., D_1] V_R = -[R_1^l, ..., R_l^l]`, solved by LU.
pub fn poly_from_right_solvents(set: &SolventSet) -> Result<MatrixPolynomial> {
    if set.side() != Side::Right {
        return Err(Error::InvalidInput("expected a right solvent set".into()));
    }
    let (m, l) = (set.order(), set.len());
    let mats = set.matrices();
    let v = block_vandermonde(&mats)?;
    let mut rhs = Mat::zeros(m, l * m);
    for (j, r) in mats.iter().enumerate() {
        rhs.view_mut((0, j * m), (m, m)).copy_from(&(-mat_pow(r, l)));
    }
    let d = linalg::solve_right(&v, &rhs, "block Vandermonde matrix")?;
    // d = [D_l, D_(l-1), ..., D_1]
    let tail = (1..=l).map(|i| d.view((0, (l - i) * m), (m, m)).into_owned()).collect();
    MatrixPolynomial::monic(tail)
}

/// Monic polynomial having every member of a left solvent set as a left
/// solvent, from the stacked system `Σ_k L_i^k D_(l-k) = -L_i^l`.
pub fn poly_from_left_solvents(set: &SolventSet) -> Result<MatrixPolynomial> {
    if set.side() != Side::Left {
        return Err(Error::InvalidInput("expected a left solvent set".into()));
    }
    let (m, l) = (set.order(), set.len());
    let mats = set.matrices();
    let v = left_block_vandermonde(&mats)?;
    let mut rhs = Mat::zeros(l * m, m);
    for (i, x) in mats.iter().enumerate() {
        rhs.view_mut((i * m, 0), (m, m)).copy_from(&(-mat_pow(x, l)));
    }
    let d = linalg::solve(&v, &rhs, "left block Vandermonde matrix")?;
    // d = [D_l; D_(l-1); ...; D_1]
    let tail = (1..=l).map(|i| d.view(((l - i) * m, 0), (m, m)).into_owned()).collect();
    MatrixPolynomial::monic(tail)
}

/// Reconstructs from a set of either side.
pub fn poly_from_solvents(set: &SolventSet) -> Result<MatrixPolynomial> {
    match set.side() {
        Side::Right => poly_from_right_solvents(set),
        Side::Left => poly_from_left_solvents(set),
    }
}

/// `λ` treated as a real scalar for callers that only need real evaluations.
pub fn eval_real(p: &MatrixPolynomial, lambda: f64) -> Mat {
    p.eval_scalar(c64(lambda, 0.0)).map(|z| z.re)
}
