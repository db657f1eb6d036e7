//! Floating-point helpers: intertwiner search between unitary representations
//! and subspace comparisons.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type CMat = DMatrix<Complex64>;

pub const DEFAULT_TOL: f64 = 1e-9;

pub fn frob(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// A found intertwiner `W` with `A_j W = W B_j`, made unitary.
#[derive(Clone, Debug)]
pub struct Intertwiner {
    pub matrix: CMat,
    pub residual: f64,
}

/// Searches a unitary `W` with `A_j·W = W·B_j` for all j.
///
/// Solves the stacked Sylvester system for the commutant, picks a seeded
/// generic element of its null space and takes the unitary polar factor.
pub fn find_intertwiner(a: &[CMat], b: &[CMat], tol: f64) -> Option<Intertwiner> {
    assert_eq!(a.len(), b.len());
    let n = a.first().map_or(1, |m| m.nrows());
    if a.iter().chain(b).any(|m| m.nrows() != n || m.ncols() != n) {
        return None;
    }
    let id = CMat::identity(n, n);
    let nn = n * n;
    // Gram matrix Σ K_jᴴ K_j of the vectorized equations.
    let mut gram = CMat::zeros(nn, nn);
    for (aj, bj) in a.iter().zip(b) {
        let k = kron(&id, aj) - kron(&bj.transpose(), &id);
        gram += k.adjoint() * &k;
    }
    let eig = gram.symmetric_eigen();
    let scale = eig.eigenvalues.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let null: Vec<usize> =
        (0..nn).filter(|&i| eig.eigenvalues[i].abs() <= 1e-10 * scale).collect();
    if null.is_empty() {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x7d0a1);
    let mut best: Option<Intertwiner> = None;
    for _ in 0..4 {
        let mut vec = DVector::<Complex64>::zeros(nn);
        for &i in &null {
            let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            vec += eig.eigenvectors.column(i) * c;
        }
        let w = CMat::from_column_slice(n, n, vec.as_slice());
        let svd = w.clone().svd(true, true);
        let smin = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
        if smin < 1e-6 * svd.singular_values.max() {
            continue;
        }
        let u = svd.u.unwrap() * svd.v_t.unwrap();
        let residual = a
            .iter()
            .zip(b)
            .map(|(aj, bj)| frob(&(aj * &u - &u * bj)))
            .fold(0.0, f64::max);
        if best.as_ref().map_or(true, |x| residual < x.residual) {
            best = Some(Intertwiner { matrix: u, residual });
        }
        if residual < tol {
            break;
        }
    }
    best.filter(|x| x.residual < tol)
}

/// Orthonormal basis (columns) of the column space, by Gram–Schmidt with
/// column pivoting and one re-orthogonalisation pass.
pub fn orthonormal_basis(m: &CMat, tol: f64) -> CMat {
    let mut rest: Vec<DVector<Complex64>> = (0..m.ncols()).map(|j| m.column(j).into_owned()).collect();
    let scale = rest.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1e-300);
    let mut basis: Vec<DVector<Complex64>> = Vec::new();
    while !rest.is_empty() {
        let (k, norm) = rest
            .iter()
            .enumerate()
            .map(|(k, c)| (k, c.norm()))
            .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if norm <= tol * scale {
            break;
        }
        let q = rest.swap_remove(k).unscale(norm);
        for c in rest.iter_mut() {
            for _ in 0..2 {
                let coeff = q.dotc(c);
                c.axpy(-coeff, &q, Complex64::new(1.0, 0.0));
            }
        }
        basis.push(q);
    }
    CMat::from_fn(m.nrows(), basis.len(), |i, j| basis[j][i])
}

/// Orthogonal projector onto the column space.
pub fn projector(m: &CMat) -> CMat {
    let q = orthonormal_basis(m, 1e-10);
    &q * q.adjoint()
}

pub fn projector_distance(a: &CMat, b: &CMat) -> f64 {
    frob(&(projector(a) - projector(b)))
}

pub fn real_to_complex(m: &DMatrix<f64>) -> CMat {
    m.map(|x| Complex64::new(x, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn clock_and_shift_are_conjugate() {
        // the shift is diagonalised by the discrete Fourier matrix
        let shift = CMat::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]);
        let clock = CMat::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]);
        let w = find_intertwiner(&[shift.clone()], &[clock.clone()], DEFAULT_TOL).unwrap();
        assert!(w.residual < 1e-12);
        assert!(find_intertwiner(&[shift], &[CMat::identity(2, 2)], DEFAULT_TOL).is_none());
    }
}
