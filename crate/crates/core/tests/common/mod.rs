#![allow(dead_code)]

use blockpole::linalg::{self, c64, Mat, C64};
use blockpole::matpoly::{Side, Solvent, SolventForm};
use rand::Rng;

pub fn diag(v: &[f64]) -> Mat {
    Mat::from_diagonal(&nalgebra::DVector::from_column_slice(v))
}

pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, scale: f64) -> Mat {
    Mat::from_fn(rows, cols, |_, _| rng.gen_range(-scale..scale))
}

/// Well-conditioned random similarity transform.
pub fn random_basis<R: Rng>(rng: &mut R, m: usize) -> Mat {
    loop {
        let w = Mat::identity(m, m) + random_matrix(rng, m, m, 0.6);
        if linalg::cond2(&w) < 20.0 {
            return w;
        }
    }
}

/// `count` eigenvalues in [-10, -0.5] x [-6, 6]i, conjugate-closed, pairwise at
/// least `sep` apart. About a third of the draws are complex pairs.
pub fn random_spectrum<R: Rng>(rng: &mut R, count: usize, sep: f64) -> Vec<C64> {
    'retry: loop {
        let mut out: Vec<C64> = Vec::with_capacity(count);
        while out.len() < count {
            let re = rng.gen_range(-10.0..-0.5);
            if count - out.len() >= 2 && rng.gen_bool(0.33) {
                let im = rng.gen_range(0.5..6.0);
                out.push(c64(re, im));
                out.push(c64(re, -im));
            } else {
                out.push(c64(re, 0.0));
            }
        }
        for i in 0..out.len() {
            for j in i + 1..out.len() {
                if (out[i] - out[j]).norm() < sep {
                    continue 'retry;
                }
            }
        }
        return out;
    }
}

/// Splits a conjugate-closed spectrum into `l` conjugate-closed cells of size `m`.
pub fn split_cells(spectrum: &[C64], m: usize) -> Option<Vec<Vec<C64>>> {
    let mut modes: Vec<Vec<C64>> = Vec::new();
    let mut i = 0;
    while i < spectrum.len() {
        if spectrum[i].im != 0.0 {
            modes.push(vec![spectrum[i], spectrum[i + 1]]);
            i += 2;
        } else {
            modes.push(vec![spectrum[i]]);
            i += 1;
        }
    }
    let mut cells: Vec<Vec<C64>> = Vec::new();
    let mut current = Vec::new();
    for mode in modes {
        if current.len() + mode.len() > m {
            return None;
        }
        current.extend(mode);
        if current.len() == m {
            cells.push(std::mem::take(&mut current));
        }
    }
    current.is_empty().then_some(cells)
}

/// Real matrix with the given conjugate-closed spectrum, in a random basis.
pub fn realize<R: Rng>(rng: &mut R, cell: &[C64]) -> Mat {
    let modal = blockpole::matpoly::canonical_solvent(cell, SolventForm::Diagonal, Side::Right)
        .expect("conjugate-closed cell")
        .matrix;
    let w = random_basis(rng, cell.len());
    linalg::solve_right(&w, &(&w * modal), "basis").expect("well-conditioned basis")
}

/// Random solvent candidates with disjoint spectra for an order-`m`, degree-`l` polynomial.
pub fn random_solvents<R: Rng>(rng: &mut R, m: usize, l: usize, side: Side) -> (Vec<Solvent>, Vec<C64>) {
    loop {
        let spectrum = random_spectrum(rng, m * l, 0.5);
        let Some(cells) = split_cells(&spectrum, m) else { continue };
        let solvents = cells
            .iter()
            .map(|c| Solvent::new(realize(rng, c), side, SolventForm::General).unwrap())
            .collect();
        return (solvents, spectrum);
    }
}

/// Random block-controllable `(A, B)` with `n = m l`, built in block controller
/// form and moved to a random basis.
pub fn random_controllable<R: Rng>(rng: &mut R, m: usize, l: usize) -> (Mat, Mat) {
    let n = m * l;
    let mut ac = Mat::zeros(n, n);
    for k in 0..l - 1 {
        ac.view_mut((k * m, (k + 1) * m), (m, m)).copy_from(&Mat::identity(m, m));
    }
    let bottom = random_matrix(rng, m, n, 2.0);
    ac.view_mut(((l - 1) * m, 0), (m, n)).copy_from(&bottom);
    let mut bc = Mat::zeros(n, m);
    bc.view_mut((n - m, 0), (m, m)).copy_from(&Mat::identity(m, m));
    let w = random_basis(rng, n);
    let a = linalg::solve_right(&w, &(&w * ac), "basis").unwrap();
    (a, &w * bc)
}

/// Smallest singular value of `A - λI`, zero exactly at eigenvalues.
pub fn sigma_min_at(a: &Mat, lambda: C64) -> f64 {
    let n = a.nrows();
    let shifted = linalg::to_complex(a) - blockpole::linalg::CMat::identity(n, n) * lambda;
    shifted.svd(false, false).singular_values.min()
}

/// Characteristic polynomial coefficients `[1, c_1, ..., c_n]` by Faddeev-LeVerrier.
pub fn char_poly(a: &Mat) -> Vec<f64> {
    let n = a.nrows();
    let mut coeffs = vec![1.0];
    let mut m = Mat::zeros(n, n);
    for k in 1..=n {
        m = a * &m + Mat::identity(n, n) * coeffs[k - 1];
        let c = -(a * &m).trace() / k as f64;
        coeffs.push(c);
    }
    coeffs
}

/// Every target eigenvalue is an eigenvalue of `a` in the singular-value sense.
pub fn worst_residual(a: &Mat, targets: &[C64]) -> f64 {
    targets.iter().map(|&l| sigma_min_at(a, l)).fold(0.0, f64::max)
}
