//! Holomorphic shadow of the unitary constructions: Néron–Severi
//! compatibility, the dual complex structure and the agreement of holomorphic
//! and unitary pushforward semi-representations.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use thiserror::Error;

use crate::bundles::{BundleError, HoloFactor, MonomialMatrix, Phase};
use crate::forms::AlternatingForm;
use crate::lattice::CosetReps;
use crate::mat::{rat_to_f64, Int, Mat, Rat, RatMatrix};
use crate::numeric::CMat;
use crate::pushforward::{pushforward_isogeny_with, Isogeny, PushforwardError};
use crate::semiflat::{residual, Field};

pub const COMPLEX_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum HoloError {
    #[error("I² ≠ −Id (residual {0:e})")]
    NotComplex(f64),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("form is not compatible with the complex structure")]
    NotCompatible,
    #[error("isogeny source differs from the line bundle lattice")]
    LatticeMismatch,
    #[error(transparent)]
    Bundle(#[from] BundleError),
    #[error(transparent)]
    Pushforward(#[from] PushforwardError),
}

/// A complex structure on `V`, in lattice coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexStructure<T: Field>(Mat<T>);

impl<T: Field> ComplexStructure<T> {
    pub fn new(m: Mat<T>) -> Result<Self, HoloError> {
        if !m.is_square() || m.rows() % 2 != 0 {
            return Err(HoloError::Shape("complex structure must be square of even size".into()));
        }
        let r = residual(&m.mul(&m), &Mat::identity(m.rows()).neg());
        if r > COMPLEX_TOL {
            return Err(HoloError::NotComplex(r));
        }
        Ok(ComplexStructure(m))
    }

    pub fn matrix(&self) -> &Mat<T> {
        &self.0
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        crate::semiflat::dmatrix(&self.0)
    }
}

/// `E(Iv, Iw) = E(v, w)`, exact for rational structures.
pub fn ns_check<T: Field>(e: &AlternatingForm, i: &ComplexStructure<T>) -> bool {
    let m = &i.0;
    if m.rows() != e.rank() {
        return false;
    }
    let ef: Mat<T> = e.matrix.map(|q| T::from_rat(q));
    let tol = if T::EXACT { 0.0 } else { COMPLEX_TOL * (1.0 + sup(&ef)) };
    residual(&m.transpose().mul(&ef).mul(m), &ef) <= tol
}

fn sup<T: Field>(m: &Mat<T>) -> f64 {
    m.entries().iter().map(|x| x.to_f64().abs()).fold(0.0, f64::max)
}

/// Complex structure `−Iᵀ` of the dual torus.
pub fn dual_complex_structure<T: Field>(i: &ComplexStructure<T>) -> ComplexStructure<T> {
    ComplexStructure(i.0.transpose().neg())
}

/// `(E + IᵀEI)/2`, compatible with `I` whenever `I² = −Id`.
pub fn symmetrize(e: &RatMatrix, i: &ComplexStructure<Rat>) -> RatMatrix {
    let half = Rat::new(1.into(), 2.into());
    e.add(&i.0.transpose().mul(e).mul(&i.0)).scale(&half)
}

#[derive(Clone, Debug)]
pub struct HoloAgreement {
    pub degree: usize,
    /// Points of `Γ_Y` (coordinates of its basis) on which the two were compared.
    pub tested: Vec<Vec<Int>>,
    /// Closed-form holomorphic semi-representation on the basis of `Γ_Y`.
    pub holomorphic: Vec<MonomialMatrix>,
    /// Unitary pushforward semi-representation on the basis of `Γ_Y`.
    pub unitary: Vec<MonomialMatrix>,
    /// Exact entrywise equality on every tested point.
    pub exact_equal: bool,
    /// Gauge-stripped holomorphic factor at sample base points against the closed form.
    pub evaluation_residual: f64,
}

impl HoloAgreement {
    pub fn holds(&self, tol: f64) -> bool {
        self.exact_equal && self.evaluation_residual < tol
    }
}

fn add(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn sub(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `χ(Λ)·exp(iπ Im H(λ+λᵢ, λ−λ_σ))` in block `(i, σ(i))`, `λᵢ + λ = λ_σ + Λ`.
pub fn holomorphic_semirep(h: &HoloFactor, reps: &CosetReps, lambda: &[Rat]) -> Result<MonomialMatrix, HoloError> {
    let lat = &h.e.lattice;
    let n = reps.len();
    let mut perm = vec![0; n];
    let mut phases = vec![Phase::one(); n];
    for (i, rep) in reps.reps.iter().enumerate() {
        let (s, big_l) = reps.reduce(&add(rep, lambda)).map_err(|_| HoloError::LatticeMismatch)?;
        let m = lat.coords(&big_l).ok_or(HoloError::LatticeMismatch)?;
        let x = lat.rat_coords(&add(lambda, rep)).ok_or(HoloError::LatticeMismatch)?;
        let y = lat.rat_coords(&sub(lambda, &reps.reps[s])).ok_or(HoloError::LatticeMismatch)?;
        perm[i] = s;
        phases[i] = h.chi.eval(&m).mul(&Phase::new(h.e.eval(&x, &y)));
    }
    Ok(MonomialMatrix { perm, phases })
}

/// `exp(πH(v,w) + (π/2)H(w,w))` for lattice coordinates.
fn gauge_exponent(h: &HoloFactor, v: &[f64], w: &[f64]) -> Complex64 {
    let pi = std::f64::consts::PI;
    h.hermitian(v, w) * pi + h.hermitian(w, w) * (pi / 2.0)
}

fn coords_f64(h: &HoloFactor, v: &[Rat]) -> Result<Vec<f64>, HoloError> {
    Ok(h.e.lattice.rat_coords(v).ok_or(HoloError::LatticeMismatch)?.iter().map(rat_to_f64).collect())
}

/// `φ(v+λ)⁻¹·(a_L(v+λ_σ, Λ))·φ(v)·exp(−πH(v,λ) − (π/2)H(λ,λ))` with
/// `φ(v) = diag(exp(πH(v,λᵢ) + (π/2)H(λᵢ,λᵢ)))`.
pub fn stripped_holomorphic_value(
    h: &HoloFactor,
    reps: &CosetReps,
    v: &[Rat],
    lambda: &[Rat],
) -> Result<CMat, HoloError> {
    let lat = &h.e.lattice;
    let n = reps.len();
    let vf = coords_f64(h, v)?;
    let lf = coords_f64(h, lambda)?;
    let vl: Vec<f64> = vf.iter().zip(&lf).map(|(a, b)| a + b).collect();
    let rep_coords: Vec<Vec<f64>> = reps.reps.iter().map(|r| coords_f64(h, r)).collect::<Result<_, _>>()?;
    let scalar = (-gauge_exponent(h, &vf, &lf)).exp();
    let mut out = CMat::zeros(n, n);
    for (i, rep) in reps.reps.iter().enumerate() {
        let (s, big_l) = reps.reduce(&add(rep, lambda)).map_err(|_| HoloError::LatticeMismatch)?;
        let m = lat.coords(&big_l).ok_or(HoloError::LatticeMismatch)?;
        let at: Vec<f64> = vf.iter().zip(&rep_coords[s]).map(|(a, b)| a + b).collect();
        let raw = h.evaluate(&at, &m);
        let left = (-gauge_exponent(h, &vl, &rep_coords[i])).exp();
        let right = gauge_exponent(h, &vf, &rep_coords[s]).exp();
        out[(i, s)] = left * raw * right * scalar;
    }
    Ok(out)
}

fn box_points(k: usize, r: i64) -> Vec<Vec<Int>> {
    let side = (2 * r + 1) as usize;
    (0..side.pow(k as u32))
        .map(|mut idx| {
            (0..k)
                .map(|_| {
                    let d = (idx % side) as i64 - r;
                    idx /= side;
                    BigInt::from(d)
                })
                .collect()
        })
        .collect()
}

/// Builds both semi-representations of `f_*L` with the same representatives
/// and compares them on the box `{−1,0,1}^k` of `Γ_Y`.
pub fn holo_pushforward_agreement(
    h: &HoloFactor,
    reps: &CosetReps,
    samples: &[Vec<Rat>],
) -> Result<HoloAgreement, HoloError> {
    if !crate::bundles::ns_compatible(&h.e.matrix, &h.complex_structure, COMPLEX_TOL) {
        return Err(HoloError::NotCompatible);
    }
    if reps.quotient.small() != &h.e.lattice {
        return Err(HoloError::LatticeMismatch);
    }
    let unitary = pushforward_isogeny_with(&crate::bundles::holo_unitary_bridge(h)?, reps)?;
    let target = reps.quotient.big();
    let basis = target.basis_vectors();
    let tested = box_points(target.rank(), 1);
    let mut exact_equal = true;
    let mut evaluation_residual: f64 = 0.0;
    for m in &tested {
        let lambda = target.point(m);
        let holo = holomorphic_semirep(h, reps, &lambda)?;
        exact_equal &= holo == unitary.semirep(m);
        for v in samples {
            let value = stripped_holomorphic_value(h, reps, v, &lambda)?;
            let diff = (value - holo.to_dense()).iter().map(|z| z.norm()).fold(0.0, f64::max);
            evaluation_residual = evaluation_residual.max(diff);
        }
    }
    let holomorphic = basis.iter().map(|b| holomorphic_semirep(h, reps, b)).collect::<Result<_, _>>()?;
    Ok(HoloAgreement {
        degree: reps.len(),
        tested,
        holomorphic,
        unitary: unitary.generators.clone(),
        exact_equal,
        evaluation_residual,
    })
}

/// Convenience: box representatives of the isogeny.
pub fn holo_pushforward_along(h: &HoloFactor, f: &Isogeny, samples: &[Vec<Rat>]) -> Result<HoloAgreement, HoloError> {
    holo_pushforward_agreement(h, &f.box_reps(), samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundles::{canonical_factor_holo, Semicharacter};
    use crate::lattice::Lattice;
    use crate::mat::{rat, IntMatrix};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn std_i(g: usize) -> ComplexStructure<Rat> {
        ComplexStructure::new(crate::semiflat::standard_complex(g)).unwrap()
    }

    fn samples() -> Vec<Vec<Rat>> {
        vec![vec![rat(0, 1), rat(0, 1)], vec![rat(1, 5), rat(-1, 7)], vec![rat(3, 10), rat(1, 4)]]
    }

    #[test]
    fn standard_pair_and_shear() {
        let e = AlternatingForm::standard(RatMatrix::from_i64(&[&[0, 1], &[-1, 0]])).unwrap();
        assert!(ns_check(&e, &std_i(1)));
        // every complex structure on a plane preserves E, so shear in dimension four
        let e4 = AlternatingForm::standard(RatMatrix::from_i64(&[
            &[0, 0, 1, 0],
            &[0, 0, 0, 1],
            &[-1, 0, 0, 0],
            &[0, -1, 0, 0],
        ]))
        .unwrap();
        let p = RatMatrix::from_i64(&[&[1, 1, 0, 0], &[0, 1, 0, 0], &[0, 0, 1, 0], &[0, 0, 0, 1]]);
        let sheared = p.mul(std_i(2).matrix()).mul(&p.inverse().unwrap());
        let sheared = ComplexStructure::new(sheared).unwrap();
        assert!(ns_check(&e4, &std_i(2)));
        assert!(!ns_check(&e4, &sheared));
        let fixed = symmetrize(&e4.matrix, &sheared);
        let fixed = AlternatingForm::standard(fixed).unwrap();
        assert!(ns_check(&fixed, &sheared));
    }

    #[test]
    fn dual_structure() {
        let i = ComplexStructure::new(RatMatrix::from_i64(&[&[1, -2], &[1, -1]])).unwrap();
        let d = dual_complex_structure(&i);
        assert_eq!(d.matrix(), &RatMatrix::from_i64(&[&[-1, -1], &[2, 1]]));
        assert!(ComplexStructure::new(d.matrix().clone()).is_ok());
        assert_eq!(dual_complex_structure(&d), i);
        assert!(matches!(ComplexStructure::new(RatMatrix::identity(2)), Err(HoloError::NotComplex(_))));
    }

    #[test]
    fn random_conjugates_are_complex_and_dualize() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let p = loop {
                let p = RatMatrix::from_fn(4, 4, |i, j| rat(rng.gen_range(-2..=2) + if i == j { 3 } else { 0 }, 1));
                if p.det() != rat(0, 1) {
                    break p;
                }
            };
            let i = ComplexStructure::new(p.mul(std_i(2).matrix()).mul(&p.inverse().unwrap())).unwrap();
            let d = dual_complex_structure(&i);
            assert!(ComplexStructure::new(d.matrix().clone()).is_ok());
            // the compatible metric g = P⁻ᵀP⁻¹ intertwines I and −Iᵀ
            let q = p.transpose().inverse().unwrap().mul(&p.inverse().unwrap());
            assert_eq!(q.mul(i.matrix()), d.matrix().mul(&q));
        }
    }

    fn holo(e: &[&[i64]], lattice: Lattice, twist: Vec<Rat>) -> HoloFactor {
        let f = AlternatingForm::new(lattice, RatMatrix::from_i64(e)).unwrap();
        let chi = Semicharacter::canonical(&f, twist).unwrap();
        canonical_factor_holo(&f, &std_i(1).to_dmatrix(), &chi).unwrap()
    }

    #[test]
    fn trivial_bundle_degree_two_gives_shift_matrices() {
        let h = holo(&[&[0, 0], &[0, 0]], Lattice::from_int_matrix(&IntMatrix::from_i64(&[&[2, 0], &[0, 1]])), vec![rat(0, 1); 2]);
        let f = Isogeny::new(h.e.lattice.clone(), Lattice::standard(2)).unwrap();
        let rep = holo_pushforward_along(&h, &f, &samples()).unwrap();
        assert!(rep.holds(1e-9), "{rep:?}");
        let shift = MonomialMatrix { perm: vec![1, 0], phases: vec![Phase::one(), Phase::one()] };
        assert_eq!(rep.holomorphic[0], shift);
        assert_eq!(rep.unitary[0], shift);
        assert_eq!(rep.holomorphic[1], MonomialMatrix::identity(2));
    }

    #[test]
    fn identity_isogeny_returns_the_semicharacter() {
        let h = holo(&[&[0, 1], &[-1, 0]], Lattice::standard(2), vec![rat(1, 3), rat(1, 4)]);
        let f = Isogeny::new(Lattice::standard(2), Lattice::standard(2)).unwrap();
        let rep = holo_pushforward_along(&h, &f, &samples()).unwrap();
        assert!(rep.holds(1e-9));
        for (j, u) in rep.holomorphic.iter().enumerate() {
            let mut e = vec![Int::from(0); 2];
            e[j] = Int::from(1);
            assert_eq!(u, &MonomialMatrix::scalar(1, h.chi.eval(&e)));
        }
    }

    #[test]
    fn type_two_elliptic_curve() {
        let lat = Lattice::from_int_matrix(&IntMatrix::from_i64(&[&[2, 0], &[0, 1]]));
        let h = holo(&[&[0, 2], &[-2, 0]], lat.clone(), vec![rat(1, 2), rat(0, 1)]);
        let f = Isogeny::new(lat, Lattice::standard(2)).unwrap();
        let rep = holo_pushforward_along(&h, &f, &samples()).unwrap();
        assert!(rep.holds(1e-9), "{rep:?}");
        let h3 = holo(&[&[0, 3], &[-3, 0]], Lattice::from_int_matrix(&IntMatrix::from_i64(&[&[3, 0], &[0, 1]])), vec![rat(0, 1); 2]);
        let f3 = Isogeny::new(h3.e.lattice.clone(), Lattice::standard(2)).unwrap();
        assert!(holo_pushforward_along(&h3, &f3, &samples()).unwrap().holds(1e-9));
    }
}
