//! Dense linear-algebra helpers shared by the design and analysis modules.
//!
//! Everything here is a thin layer over `nalgebra`: factorization-based solves,
//! singular-value based rank/conditioning, spectra with conjugate pairs kept
//! adjacent, and eigenvectors recovered from the null space of `A - λI`.

use nalgebra::{DMatrix, SVD};

use crate::error::{Error, Result};

pub use nalgebra::Complex;

pub type C64 = Complex<f64>;
pub type Mat = DMatrix<f64>;
pub type CMat = DMatrix<C64>;

pub fn c64(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

pub fn to_complex(m: &Mat) -> CMat {
    m.map(|v| c64(v, 0.0))
}

/// Builds a matrix from row slices. Panics on ragged input; use
/// [`try_from_rows`] for untrusted data.
pub fn from_rows(rows: &[&[f64]]) -> Mat {
    try_from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
        .expect("ragged matrix literal")
}

pub fn try_from_rows(rows: &[Vec<f64>]) -> Result<Mat> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Dimension("rows have differing lengths".into()));
    }
    Ok(Mat::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

pub fn to_rows(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// Singular values in descending order.
pub fn singular_values(m: &Mat) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    SVD::new(m.clone(), false, false).singular_values.iter().copied().collect()
}

pub fn singular_values_c(m: &CMat) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    SVD::new(m.clone(), false, false).singular_values.iter().copied().collect()
}

pub fn norm2(m: &Mat) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

fn cond_from(sv: &[f64]) -> f64 {
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        (Some(_), Some(_)) => f64::INFINITY,
        _ => 1.0,
    }
}

/// 2-norm condition number; infinite for singular input.
pub fn cond2(m: &Mat) -> f64 {
    cond_from(&singular_values(m))
}

pub fn cond2_c(m: &CMat) -> f64 {
    cond_from(&singular_values_c(m))
}

/// Numerical rank with tolerance `max(rows, cols) · ε · σ_max`.
pub fn numerical_rank(m: &Mat) -> usize {
    let sv = singular_values(m);
    let Some(&smax) = sv.first() else { return 0 };
    let tol = m.nrows().max(m.ncols()) as f64 * f64::EPSILON * smax;
    sv.iter().filter(|&&s| s > tol).count()
}

/// Solves `a · x = b` by LU with partial pivoting.
pub fn solve(a: &Mat, b: &Mat, what: &'static str) -> Result<Mat> {
    if !a.is_square() || a.nrows() != b.nrows() {
        return Err(Error::Dimension(format!(
            "cannot solve {}x{} system with {}x{} right-hand side",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let x = a.clone().lu().solve(b).ok_or(Error::Singular(what))?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular(what));
    }
    Ok(x)
}

/// Solves `x · a = b`.
pub fn solve_right(a: &Mat, b: &Mat, what: &'static str) -> Result<Mat> {
    Ok(solve(&a.transpose(), &b.transpose(), what)?.transpose())
}

pub fn solve_c(a: &CMat, b: &CMat, what: &'static str) -> Result<CMat> {
    if !a.is_square() || a.nrows() != b.nrows() {
        return Err(Error::Dimension(format!(
            "cannot solve {}x{} system with {}x{} right-hand side",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let x = a.clone().lu().solve(b).ok_or(Error::Singular(what))?;
    if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Singular(what));
    }
    Ok(x)
}

/// Moore–Penrose pseudo-inverse, truncating singular values below
/// `ε · σ_max · max(rows, cols)`. Returns the inverse and the retained rank.
pub fn pinv(m: &Mat) -> (Mat, usize) {
    let (r, c) = m.shape();
    if m.is_empty() {
        return (Mat::zeros(c, r), 0);
    }
    let svd = SVD::new(m.clone(), true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let tol = f64::EPSILON * smax * r.max(c) as f64;
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let mut out = Mat::zeros(c, r);
    let mut rank = 0;
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > tol && s > 0.0 {
            rank += 1;
            out += vt.row(k).transpose() * u.column(k).transpose() / s;
        }
    }
    (out, rank)
}

pub fn mat_pow(x: &Mat, k: usize) -> Mat {
    let mut out = Mat::identity(x.nrows(), x.ncols());
    for _ in 0..k {
        out = &out * x;
    }
    out
}

/// Orders a spectrum deterministically: ascending real part, then ascending
/// |imag|, with each conjugate pair adjacent (positive imaginary part first).
pub fn order_spectrum(values: &mut [C64]) {
    values.sort_by(|a, b| {
        a.re.total_cmp(&b.re)
            .then(a.im.abs().total_cmp(&b.im.abs()))
            .then(b.im.total_cmp(&a.im))
    });
}

/// Eigenvalues of a real square matrix, conjugate pairs adjacent.
pub fn eigenvalues(a: &Mat) -> Vec<C64> {
    if a.is_empty() {
        return Vec::new();
    }
    let mut values: Vec<C64> = a.complex_eigenvalues().iter().copied().collect();
    order_spectrum(&mut values);
    values
}

/// Greedy nearest matching between two spectra: all pairs are visited by
/// ascending distance and each index is claimed at most once. Returns
/// `(index in a, index in b, distance)` triples ordered by index in `a`.
pub fn greedy_match(a: &[C64], b: &[C64]) -> Vec<(usize, usize, f64)> {
    let mut pairs: Vec<(f64, usize, usize)> = a
        .iter()
        .enumerate()
        .flat_map(|(i, x)| b.iter().enumerate().map(move |(j, y)| ((x - y).norm(), i, j)))
        .collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.cmp(&q.1)).then(p.2.cmp(&q.2)));
    let mut used_a = vec![false; a.len()];
    let mut used_b = vec![false; b.len()];
    let mut out = Vec::with_capacity(a.len().min(b.len()));
    for (d, i, j) in pairs {
        if used_a[i] || used_b[j] {
            continue;
        }
        used_a[i] = true;
        used_b[j] = true;
        out.push((i, j, d));
    }
    out.sort_by_key(|t| t.0);
    out
}

/// Largest matched distance between two equally sized spectra, or infinity
/// when the sizes differ.
pub fn spectral_distance(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    greedy_match(a, b).iter().map(|t| t.2).fold(0.0, f64::max)
}

/// Checks that a list of eigenvalues is closed under conjugation within `tol`
/// (each non-real value must have a partner).
pub fn check_conjugate_closed(values: &[C64], tol: f64) -> Result<()> {
    let mut used = vec![false; values.len()];
    for i in 0..values.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let z = values[i];
        if z.im.abs() <= tol {
            continue;
        }
        let partner = (0..values.len())
            .filter(|&j| !used[j])
            .min_by(|&p, &q| {
                (values[p] - z.conj()).norm().total_cmp(&(values[q] - z.conj()).norm())
            })
            .filter(|&j| (values[j] - z.conj()).norm() <= tol);
        match partner {
            Some(j) => used[j] = true,
            None => {
                return Err(Error::NotConjugateClosed(format!(
                    "{:.6}{:+.6}i has no conjugate partner",
                    z.re, z.im
                )))
            }
        }
    }
    Ok(())
}

/// Coefficients `[1, c_1, ..., c_k]` of the monic polynomial `Π (λ - z_i)`.
/// The input must be conjugate-closed; the imaginary residue is discarded.
pub fn poly_from_roots(roots: &[C64]) -> Vec<f64> {
    let mut coeffs = vec![c64(1.0, 0.0)];
    for &z in roots {
        let mut next = vec![c64(0.0, 0.0); coeffs.len() + 1];
        for (k, &c) in coeffs.iter().enumerate() {
            next[k] += c;
            next[k + 1] -= c * z;
        }
        coeffs = next;
    }
    coeffs.into_iter().map(|c| c.re).collect()
}

/// Unit-norm eigenvectors for the supplied eigenvalues of `a`, as columns.
///
/// Each vector spans the numerical null space of `a - λI`; eigenvalues that
/// coincide within `cluster_tol` share one SVD and take its trailing singular
/// vectors, so semisimple repeated eigenvalues get independent vectors.
/// Vectors of a conjugate pair are exact conjugates of each other.
pub fn eigenvectors(a: &Mat, values: &[C64], cluster_tol: f64) -> CMat {
    let n = a.nrows();
    let ac = to_complex(a);
    let mut v = CMat::zeros(n, values.len());
    let mut done = vec![false; values.len()];
    for i in 0..values.len() {
        if done[i] {
            continue;
        }
        let lead = values[i];
        let take_conj = lead.im < 0.0;
        let target = if take_conj { lead.conj() } else { lead };
        // Cluster: every pending value within tolerance of the lead value.
        let members: Vec<usize> = (i..values.len())
            .filter(|&j| !done[j] && (values[j] - lead).norm() <= cluster_tol)
            .collect();
        let mean = members.iter().map(|&j| values[j]).sum::<C64>() / members.len() as f64;
        let shift = if take_conj { mean.conj() } else { mean };
        let shifted = &ac - CMat::identity(n, n) * shift;
        let svd = SVD::new(shifted, false, true);
        let vt = svd.v_t.expect("v_t requested");
        for (k, &j) in members.iter().enumerate() {
            let row = n - 1 - k;
            let mut col: Vec<C64> = vt.row(row).iter().map(|z| z.conj()).collect();
            normalize_phase(&mut col);
            if take_conj {
                col.iter_mut().for_each(|z| *z = z.conj());
            }
            v.set_column(j, &nalgebra::DVector::from_vec(col));
            done[j] = true;
        }
        // Conjugate partner cluster of a non-real cluster.
        if target.im.abs() > cluster_tol {
            let partners: Vec<usize> = (0..values.len())
                .filter(|&j| !done[j] && (values[j] - lead.conj()).norm() <= cluster_tol)
                .collect();
            for (k, &j) in partners.iter().enumerate().take(members.len()) {
                let src = v.column(members[k]).map(|z| z.conj());
                v.set_column(j, &src);
                done[j] = true;
            }
        }
    }
    v
}

/// Scales a vector to unit norm with its largest component real and positive.
fn normalize_phase(col: &mut [C64]) {
    let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let pivot = col
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap_or(c64(1.0, 0.0));
    let phase = if pivot.norm() > 0.0 { pivot.conj() / pivot.norm() } else { c64(1.0, 0.0) };
    let scale = if norm > 0.0 { 1.0 / norm } else { 1.0 };
    for z in col.iter_mut() {
        *z = *z * phase * scale;
    }
}
