//! Pointwise special Kähler and semi-flat hyperkähler linear algebra: the
//! Legendre transform, generalized complex structures, B-field transforms,
//! the eigenbundle swap of T-duality and characteristic subspaces.
//!
//! Convention: a Kähler triple satisfies `ω = g I`, so `h = g − iω`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use thiserror::Error;

use crate::mat::{rat_to_f64, Mat, Rat, RatMatrix, Scalar};
use crate::numeric::{orthonormal_basis, projector_distance, CMat};

pub const TRIPLE_TOL: f64 = 1e-12;
pub const GCS_TOL: f64 = 1e-10;
pub const SUBSPACE_TOL: f64 = 1e-9;
pub const DEFAULT_STEP: f64 = 1e-5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SemiflatError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("matrix is singular")]
    Singular,
    #[error("I² ≠ −Id (residual {0:e})")]
    NotComplex(f64),
    #[error("g is not symmetric positive definite")]
    NotPositive,
    #[error("I is not g-orthogonal (residual {0:e})")]
    NotCompatible(f64),
    #[error("ω ≠ gI (residual {0:e})")]
    FormMismatch(f64),
    #[error("not a generalized complex structure: {0}")]
    NotGcs(String),
    #[error("B-field is not skew")]
    NotSkew,
    #[error("subspace is not coisotropic")]
    NotCoisotropic,
}

/// Entry type for the structure matrices: exact rationals or floats.
pub trait Field: Scalar + std::fmt::Debug + std::fmt::Display {
    fn inverse(m: &Mat<Self>) -> Option<Mat<Self>>;
    fn is_positive_definite(m: &Mat<Self>) -> bool;
    /// Whether comparisons are exact.
    const EXACT: bool;
    fn to_f64(&self) -> f64;
    fn from_i64(n: i64) -> Self;
    fn from_rat(q: &Rat) -> Self;
}

impl Field for Rat {
    fn inverse(m: &RatMatrix) -> Option<RatMatrix> {
        m.inverse()
    }

    fn is_positive_definite(m: &RatMatrix) -> bool {
        // Sylvester: all leading principal minors positive
        (1..=m.rows()).all(|k| m.sub_block(0, 0, k, k).det().is_positive())
    }

    fn to_f64(&self) -> f64 {
        rat_to_f64(self)
    }

    const EXACT: bool = true;

    fn from_i64(n: i64) -> Self {
        Rat::from_integer(n.into())
    }

    fn from_rat(q: &Rat) -> Self {
        q.clone()
    }
}

impl Field for f64 {
    fn inverse(m: &Mat<f64>) -> Option<Mat<f64>> {
        let inv = dmatrix(m).try_inverse()?;
        Some(from_dmatrix(&inv))
    }

    fn is_positive_definite(m: &Mat<f64>) -> bool {
        dmatrix(m).cholesky().is_some()
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    const EXACT: bool = false;

    fn from_i64(n: i64) -> Self {
        n as f64
    }

    fn from_rat(q: &Rat) -> Self {
        rat_to_f64(q)
    }
}

pub fn dmatrix<T: Field>(m: &Mat<T>) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)].to_f64())
}

pub fn from_dmatrix(m: &DMatrix<f64>) -> Mat<f64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

pub fn to_float<T: Field>(m: &Mat<T>) -> Mat<f64> {
    m.map(|x| x.to_f64())
}

/// Sup-norm of `a − b`.
pub fn residual<T: Field>(a: &Mat<T>, b: &Mat<T>) -> f64 {
    a.sub(b).entries().iter().map(|x| x.to_f64().abs()).fold(0.0, f64::max)
}

fn sup<T: Field>(a: &Mat<T>) -> f64 {
    a.entries().iter().map(|x| x.to_f64().abs()).fold(0.0, f64::max)
}

/// `(a b; c d)`.
pub fn blocks<T: Scalar>(a: &Mat<T>, b: &Mat<T>, c: &Mat<T>, d: &Mat<T>) -> Mat<T> {
    a.hcat(b).vcat(&c.hcat(d))
}

/// `(0 −Id; Id 0)` on `ℝ^{2n}`.
pub fn standard_complex<T: Scalar>(n: usize) -> Mat<T> {
    let z = Mat::zeros(n, n);
    let id = Mat::identity(n);
    blocks(&z, &id.neg(), &id, &z)
}

fn ensure_square<T: Scalar>(m: &Mat<T>, dim: usize, what: &str) -> Result<(), SemiflatError> {
    if m.rows() != dim || m.cols() != dim {
        return Err(SemiflatError::Shape(format!("{what} must be {dim}×{dim}")));
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct KahlerTriple<T: Field> {
    n: usize,
    g: Mat<T>,
    complex: Mat<T>,
    form: Mat<T>,
    g_inv: Mat<T>,
    form_inv: Mat<T>,
}

impl<T: Field> KahlerTriple<T> {
    /// Triple with `ω = gI`.
    pub fn new(g: Mat<T>, complex: Mat<T>) -> Result<Self, SemiflatError> {
        let form = g.mul(&complex);
        Self::with_form(g, complex, form)
    }

    pub fn with_form(g: Mat<T>, complex: Mat<T>, form: Mat<T>) -> Result<Self, SemiflatError> {
        let dim = g.rows();
        if dim % 2 != 0 {
            return Err(SemiflatError::Shape("dimension must be even".into()));
        }
        ensure_square(&g, dim, "g")?;
        ensure_square(&complex, dim, "I")?;
        ensure_square(&form, dim, "ω")?;
        let scale = 1.0 + sup(&g).max(sup(&complex));
        let g_inv = T::inverse(&g).ok_or(SemiflatError::Singular)?;
        if residual(&g, &g.transpose()) > TRIPLE_TOL * scale || !T::is_positive_definite(&g) {
            return Err(SemiflatError::NotPositive);
        }
        let id = Mat::<T>::identity(dim);
        let sq = residual(&complex.mul(&complex), &id.neg());
        if sq > TRIPLE_TOL * scale * scale {
            return Err(SemiflatError::NotComplex(sq));
        }
        let compat = residual(&complex.transpose().mul(&g).mul(&complex), &g);
        if compat > TRIPLE_TOL * scale * scale * scale {
            return Err(SemiflatError::NotCompatible(compat));
        }
        let mismatch = residual(&form, &g.mul(&complex));
        if mismatch > TRIPLE_TOL * scale * scale {
            return Err(SemiflatError::FormMismatch(mismatch));
        }
        let form_inv = T::inverse(&form).ok_or(SemiflatError::Singular)?;
        Ok(KahlerTriple { n: dim / 2, g, complex, form, g_inv, form_inv })
    }

    /// `g = Id`, `I = (0 −Id; Id 0)`.
    pub fn standard(n: usize) -> Self {
        Self::new(Mat::identity(2 * n), standard_complex(n)).expect("standard triple")
    }

    /// Triple in which the columns of `A` form a unitary frame: `g = A⁻ᵀA⁻¹`, `I = A I₀ A⁻¹`.
    pub fn from_frame(frame: &Mat<T>) -> Result<Self, SemiflatError> {
        let dim = frame.rows();
        ensure_square(frame, dim, "frame")?;
        if dim % 2 != 0 {
            return Err(SemiflatError::Shape("dimension must be even".into()));
        }
        let inv = T::inverse(frame).ok_or(SemiflatError::Singular)?;
        let g = inv.transpose().mul(&inv);
        let complex = frame.mul(&standard_complex(dim / 2)).mul(&inv);
        Self::new(g, complex)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn metric(&self) -> &Mat<T> {
        &self.g
    }

    pub fn complex(&self) -> &Mat<T> {
        &self.complex
    }

    pub fn form(&self) -> &Mat<T> {
        &self.form
    }

    pub fn metric_inverse(&self) -> &Mat<T> {
        &self.g_inv
    }

    pub fn form_inverse(&self) -> &Mat<T> {
        &self.form_inv
    }

    pub fn to_float(&self) -> KahlerTriple<f64> {
        KahlerTriple {
            n: self.n,
            g: to_float(&self.g),
            complex: to_float(&self.complex),
            form: to_float(&self.form),
            g_inv: to_float(&self.g_inv),
            form_inv: to_float(&self.form_inv),
        }
    }

    /// Largest discrepancy between the components of two triples.
    pub fn distance(&self, o: &Self) -> f64 {
        residual(&self.g, &o.g).max(residual(&self.complex, &o.complex)).max(residual(&self.form, &o.form))
    }
}

/// `(ĝ, Î, ω̂) = (g⁻¹, −Iᵀ, −ω⁻¹)`.
pub fn legendre_point<T: Field>(t: &KahlerTriple<T>) -> Result<KahlerTriple<T>, SemiflatError> {
    KahlerTriple::with_form(t.g_inv.clone(), t.complex.transpose().neg(), t.form_inv.neg())
}

/// Complex structures, Kähler forms and metric of a semi-flat hyperkähler
/// structure in the split `base ⊕ fiber`.
#[derive(Clone, Debug)]
pub struct HyperkahlerStructures<T: Field> {
    pub i: Mat<T>,
    pub j: Mat<T>,
    pub k: Mat<T>,
    pub omega_i: Mat<T>,
    pub omega_j: Mat<T>,
    pub omega_k: Mat<T>,
    pub metric: Mat<T>,
}

#[derive(Clone, Debug, Default)]
pub struct QuaternionResiduals {
    pub squares: f64,
    pub ij_k: f64,
    pub jk_i: f64,
    pub ki_j: f64,
    pub forms: f64,
    pub orthogonality: f64,
}

impl QuaternionResiduals {
    pub fn max(&self) -> f64 {
        [self.squares, self.ij_k, self.jk_i, self.ki_j, self.forms, self.orthogonality]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

impl<T: Field> HyperkahlerStructures<T> {
    pub fn as_array(&self) -> [(&'static str, &Mat<T>); 6] {
        [
            ("I", &self.i),
            ("J", &self.j),
            ("K", &self.k),
            ("omega_I", &self.omega_i),
            ("omega_J", &self.omega_j),
            ("omega_K", &self.omega_k),
        ]
    }

    pub fn residuals(&self) -> QuaternionResiduals {
        let id = Mat::<T>::identity(self.i.rows()).neg();
        let squares = [&self.i, &self.j, &self.k]
            .iter()
            .map(|m| residual(&m.mul(m), &id))
            .fold(0.0, f64::max);
        let forms = [(&self.omega_i, &self.i), (&self.omega_j, &self.j), (&self.omega_k, &self.k)]
            .iter()
            .map(|(w, c)| residual(w, &self.metric.mul(c)))
            .fold(0.0, f64::max);
        let orthogonality = [&self.i, &self.j, &self.k]
            .iter()
            .map(|c| residual(&c.transpose().mul(&self.metric).mul(c), &self.metric))
            .fold(0.0, f64::max);
        QuaternionResiduals {
            squares,
            ij_k: residual(&self.i.mul(&self.j), &self.k),
            jk_i: residual(&self.j.mul(&self.k), &self.i),
            ki_j: residual(&self.k.mul(&self.i), &self.j),
            forms,
            orthogonality,
        }
    }
}

/// Structures on the cotangent model, coordinates `(base, p)`.
pub fn semiflat_structures<T: Field>(t: &KahlerTriple<T>) -> HyperkahlerStructures<T> {
    let d = 2 * t.n;
    let z = Mat::<T>::zeros(d, d);
    let id = Mat::<T>::identity(d);
    let it = t.complex.transpose();
    HyperkahlerStructures {
        i: t.complex.block_diag(&it),
        j: blocks(&z, &t.g_inv, &t.g.neg(), &z),
        k: blocks(&z, &t.form_inv.neg(), &t.form, &z),
        omega_i: t.form.block_diag(&t.form_inv),
        omega_j: blocks(&z, &id, &id.neg(), &z),
        omega_k: blocks(&z, &it.neg(), &t.complex, &z),
        metric: t.g.block_diag(&t.g_inv),
    }
}

/// Structures on the tangent model, coordinates `(base, q)`.
pub fn semiflat_tangent_structures<T: Field>(t: &KahlerTriple<T>) -> HyperkahlerStructures<T> {
    let d = 2 * t.n;
    let z = Mat::<T>::zeros(d, d);
    let id = Mat::<T>::identity(d);
    let c = &t.complex;
    HyperkahlerStructures {
        i: c.block_diag(&c.neg()),
        j: blocks(&z, &id, &id.neg(), &z),
        k: blocks(&z, c, c, &z),
        omega_i: t.form.block_diag(&t.form.neg()),
        omega_j: blocks(&z, &t.g, &t.g.neg(), &z),
        omega_k: blocks(&z, &t.form, &t.form, &z),
        metric: t.g.block_diag(&t.g),
    }
}

/// Pull back structures along a linear map `φ_*`: complex structures by
/// conjugation, forms and metric by `φ_*ᵀ · φ_*`.
pub fn pull_back<T: Field>(s: &HyperkahlerStructures<T>, push: &Mat<T>) -> Result<HyperkahlerStructures<T>, SemiflatError> {
    let inv = T::inverse(push).ok_or(SemiflatError::Singular)?;
    let conj = |m: &Mat<T>| inv.mul(m).mul(push);
    let form = |m: &Mat<T>| push.transpose().mul(m).mul(push);
    Ok(HyperkahlerStructures {
        i: conj(&s.i),
        j: conj(&s.j),
        k: conj(&s.k),
        omega_i: form(&s.omega_i),
        omega_j: form(&s.omega_j),
        omega_k: form(&s.omega_k),
        metric: form(&s.metric),
    })
}

/// Cotangent structures of the Legendre dual, rewritten in the original base
/// coordinates, against the tangent model.
pub fn tangent_legendre_residual<T: Field>(t: &KahlerTriple<T>) -> Result<f64, SemiflatError> {
    let dual = semiflat_structures(&legendre_point(t)?);
    let change = t.g.block_diag(&Mat::identity(2 * t.n));
    let pulled = pull_back(&dual, &change)?;
    let tangent = semiflat_tangent_structures(t);
    Ok(pulled
        .as_array()
        .iter()
        .zip(tangent.as_array().iter())
        .map(|((_, a), (_, b))| residual(a, b))
        .fold(0.0, f64::max))
}

/// Pullback of the tangent model along `φ_* = diag(1, −ω⁻¹)` against the
/// rotation `I ↦ I, J ↦ K, K ↦ −J` of the cotangent model.
pub fn rotation_residuals<T: Field>(t: &KahlerTriple<T>) -> Result<Vec<(&'static str, f64)>, SemiflatError> {
    let push = Mat::identity(2 * t.n).block_diag(&t.form_inv.neg());
    let pulled = pull_back(&semiflat_tangent_structures(t), &push)?;
    let s = semiflat_structures(t);
    Ok(vec![
        ("I", residual(&pulled.i, &s.i)),
        ("J", residual(&pulled.j, &s.k)),
        ("K", residual(&pulled.k, &s.j.neg())),
        ("omega_I", residual(&pulled.omega_i, &s.omega_i)),
        ("omega_J", residual(&pulled.omega_j, &s.omega_k)),
        ("omega_K", residual(&pulled.omega_k, &s.omega_j.neg())),
    ])
}

/// Cotangent structures deformed by the differential `(1; F)` of a
/// Lagrangian section: `(𝕀^F, ω_𝕁^F, ω_𝕂^F)`.
pub fn deformed_structures<T: Field>(t: &KahlerTriple<T>, f: &Mat<T>) -> Result<[Mat<T>; 3], SemiflatError> {
    let d = 2 * t.n;
    ensure_square(f, d, "F")?;
    let z = Mat::<T>::zeros(d, d);
    let id = Mat::<T>::identity(d);
    let c = &t.complex;
    let ct = c.transpose();
    let i_f = blocks(c, &z, &ct.mul(f).sub(&f.mul(c)), &ct);
    let wj = blocks(&f.sub(&f.transpose()), &id, &id.neg(), &z);
    let wk = blocks(&f.transpose().mul(c).sub(&ct.mul(f)), &ct.neg(), c, &z);
    Ok([i_f, wj, wk])
}

/// A real generalized complex structure on `T ⊕ T*`.
#[derive(Clone, Debug, PartialEq)]
pub struct GcsMatrix<T: Field>(Mat<T>);

/// Split pairing `(0 1; 1 0)` up to the factor ½.
pub fn split_pairing<T: Scalar>(m: usize) -> Mat<T> {
    let z = Mat::zeros(m, m);
    let id = Mat::identity(m);
    blocks(&z, &id, &id, &z)
}

impl<T: Field> GcsMatrix<T> {
    pub fn new(m: Mat<T>) -> Result<Self, SemiflatError> {
        if m.rows() % 2 != 0 || !m.is_square() {
            return Err(SemiflatError::Shape("GCS must be square of even size".into()));
        }
        let g = GcsMatrix(m);
        let (sq, orth) = g.residuals();
        let scale = 1.0 + sup(&g.0);
        if sq > GCS_TOL * scale * scale || orth > GCS_TOL * scale * scale {
            return Err(SemiflatError::NotGcs(format!("𝒥²+1 = {sq:e}, orthogonality = {orth:e}")));
        }
        Ok(g)
    }

    pub fn matrix(&self) -> &Mat<T> {
        &self.0
    }

    /// Real dimension of the underlying manifold.
    pub fn dim(&self) -> usize {
        self.0.rows() / 2
    }

    /// `(‖𝒥² + 1‖, ‖𝒥ᵀQ𝒥 − Q‖)`.
    pub fn residuals(&self) -> (f64, f64) {
        let m = self.0.rows();
        let q = split_pairing::<T>(m / 2);
        let sq = residual(&self.0.mul(&self.0), &Mat::identity(m).neg());
        let orth = residual(&self.0.transpose().mul(&q).mul(&self.0), &q);
        (sq, orth)
    }

    pub fn to_float(&self) -> GcsMatrix<f64> {
        GcsMatrix(to_float(&self.0))
    }
}

#[derive(Clone, Debug)]
pub enum GcsKind<T: Field> {
    Complex(Mat<T>),
    Symplectic(Mat<T>),
    BField(GcsMatrix<T>, Mat<T>),
}

/// `e^B = (1 0; B 1)`.
pub fn b_exp<T: Field>(b: &Mat<T>) -> Mat<T> {
    let m = b.rows();
    blocks(&Mat::identity(m), &Mat::zeros(m, m), b, &Mat::identity(m))
}

pub fn gcs_transform<T: Field>(kind: &GcsKind<T>) -> Result<GcsMatrix<T>, SemiflatError> {
    match kind {
        GcsKind::Complex(c) => {
            ensure_square(c, c.rows(), "I")?;
            GcsMatrix::new(c.block_diag(&c.transpose().neg()))
        }
        GcsKind::Symplectic(w) => {
            ensure_square(w, w.rows(), "ω")?;
            let inv = T::inverse(w).ok_or(SemiflatError::Singular)?;
            let z = Mat::zeros(w.rows(), w.rows());
            GcsMatrix::new(blocks(&z, &inv.neg(), w, &z))
        }
        GcsKind::BField(j, b) => {
            ensure_square(b, j.dim(), "B")?;
            if residual(b, &b.transpose().neg()) > GCS_TOL * (1.0 + sup(b)) {
                return Err(SemiflatError::NotSkew);
            }
            GcsMatrix::new(b_exp(b).mul(&j.0).mul(&b_exp(&b.neg())))
        }
    }
}

/// Orthonormal basis of the `+i` eigenbundle `L = im(1 − i𝒥)`.
pub fn plus_i_bundle(j: &GcsMatrix<f64>) -> CMat {
    let m = j.0.rows();
    let p = CMat::from_fn(m, m, |r, c| {
        let id = if r == c { 1.0 } else { 0.0 };
        Complex64::new(id, -j.0[(r, c)]) * 0.5
    });
    orthonormal_basis(&p, 1e-8)
}

/// Exchange of the fiber tangent and fiber cotangent blocks of
/// `T_base ⊕ T_fiber ⊕ T*_base ⊕ T*_fiber`, each of size `d`.
pub fn fiber_swap(d: usize) -> Mat<f64> {
    let order = [0, 3, 2, 1];
    Mat::from_fn(4 * d, 4 * d, |r, c| if c == order[r / d] * d + r % d { 1.0 } else { 0.0 })
}

#[derive(Clone, Debug)]
pub struct SubspaceMatch {
    pub source: String,
    pub target: String,
    pub distance: f64,
}

#[derive(Clone, Debug)]
pub struct SwapReport {
    pub n: usize,
    pub expected_dim: usize,
    pub eigen_dims: Vec<usize>,
    pub gcs_residual: f64,
    pub swap_preserves_pairing: bool,
    pub swap_involution: bool,
    pub quaternion: QuaternionResiduals,
    pub tangent_quaternion: QuaternionResiduals,
    pub generalized_quaternion: f64,
    pub matches: Vec<SubspaceMatch>,
    pub deformation: Vec<SubspaceMatch>,
    pub deformation_product: f64,
    pub tangent_legendre: f64,
    pub rotation: Vec<(&'static str, f64)>,
}

impl SwapReport {
    pub fn max_distance(&self) -> f64 {
        self.matches.iter().chain(&self.deformation).map(|m| m.distance).fold(0.0, f64::max)
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.eigen_dims.iter().all(|&d| d == self.expected_dim)
            && self.gcs_residual < GCS_TOL
            && self.swap_preserves_pairing
            && self.swap_involution
            && self.quaternion.max() < GCS_TOL
            && self.tangent_quaternion.max() < GCS_TOL
            && self.generalized_quaternion < GCS_TOL
            && self.max_distance() < tol
            && self.deformation_product < GCS_TOL
            && self.tangent_legendre < GCS_TOL
            && self.rotation.iter().all(|(_, r)| *r < GCS_TOL)
    }
}

fn complex_gcs<T: Field>(c: &Mat<T>) -> Result<GcsMatrix<f64>, SemiflatError> {
    Ok(gcs_transform(&GcsKind::Complex(to_float(c)))?)
}

fn symplectic_gcs<T: Field>(w: &Mat<T>) -> Result<GcsMatrix<f64>, SemiflatError> {
    Ok(gcs_transform(&GcsKind::Symplectic(to_float(w)))?)
}

/// The six generalized complex structures `(𝒥_𝕀, 𝒥_𝕁, 𝒥_𝕂, 𝒥_{ω_𝕀}, 𝒥_{ω_𝕁}, 𝒥_{ω_𝕂})`.
pub fn generalized_structures<T: Field>(s: &HyperkahlerStructures<T>) -> Result<Vec<GcsMatrix<f64>>, SemiflatError> {
    Ok(vec![
        complex_gcs(&s.i)?,
        complex_gcs(&s.j)?,
        complex_gcs(&s.k)?,
        symplectic_gcs(&s.omega_i)?,
        symplectic_gcs(&s.omega_j)?,
        symplectic_gcs(&s.omega_k)?,
    ])
}

const NAMES: [&str; 6] = ["I", "J", "K", "omega_I", "omega_J", "omega_K"];

/// `𝒥_𝕀𝒥_𝕁𝒥_𝕂 = −1` and `𝒥_{ω_𝕀}𝒥_{ω_𝕁} = 𝒥_𝕂` with its cyclic images.
fn generalized_quaternion_residual(g: &[GcsMatrix<f64>]) -> f64 {
    let m = &|k: usize| &g[k].0;
    let id = Mat::<f64>::identity(m(0).rows());
    [
        residual(&m(0).mul(m(1)).mul(m(2)), &id.neg()),
        residual(&m(3).mul(m(4)), m(2)),
        residual(&m(4).mul(m(5)), m(0)),
        residual(&m(5).mul(m(3)), m(1)),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

fn swapped(basis: &CMat, swap: &Mat<f64>) -> CMat {
    let s = CMat::from_fn(swap.rows(), swap.cols(), |i, j| Complex64::new(swap[(i, j)], 0.0));
    s * basis
}

/// Applies the fiber swap to the `+i` eigenbundles of the six structures on
/// the cotangent model and compares with those of the tangent model; then
/// repeats for the structures deformed by `F` against the B-field transforms
/// with `B = (0 Fᵀ; −F 0)`.
pub fn tdual_swap_check<T: Field>(t: &KahlerTriple<T>, f: &Mat<T>) -> Result<SwapReport, SemiflatError> {
    let d = 2 * t.n;
    let cot = semiflat_structures(t);
    let tan = semiflat_tangent_structures(t);
    let source = generalized_structures(&cot)?;
    let target = generalized_structures(&tan)?;
    let swap = fiber_swap(d);
    let q = split_pairing::<f64>(2 * d);
    let swap_preserves_pairing = residual(&swap.transpose().mul(&q).mul(&swap), &q) == 0.0;
    let swap_involution = residual(&swap.mul(&swap), &Mat::identity(4 * d)) == 0.0;

    let mut eigen_dims = Vec::new();
    let mut bundle = |g: &GcsMatrix<f64>| {
        let b = plus_i_bundle(g);
        eigen_dims.push(b.ncols());
        b
    };
    let source_bundles: Vec<CMat> = source.iter().map(&mut bundle).collect();
    let target_bundles: Vec<CMat> = target.iter().map(&mut bundle).collect();
    // I ↔ I, ω_I ↔ ω_I, J ↔ ω_J, K ↔ ω_K
    let pairing = [0usize, 4, 5, 3, 1, 2];
    let matches = (0..6)
        .map(|a| SubspaceMatch {
            source: NAMES[a].to_string(),
            target: format!("hat_{}", NAMES[pairing[a]]),
            distance: projector_distance(&swapped(&source_bundles[a], &swap), &target_bundles[pairing[a]]),
        })
        .collect();

    let [i_f, wj_f, wk_f] = deformed_structures(t, f)?;
    let deformed = [complex_gcs(&i_f)?, symplectic_gcs(&wj_f)?, symplectic_gcs(&wk_f)?];
    let ff = to_float(f);
    let b = blocks(&Mat::zeros(d, d), &ff.transpose(), &ff.neg(), &Mat::zeros(d, d));
    let mut deformation = Vec::new();
    for (k, (name, tgt)) in [("I^F", 0usize), ("omega_J^F", 1), ("omega_K^F", 2)].into_iter().enumerate() {
        let transformed = gcs_transform(&GcsKind::BField(target[tgt].clone(), b.clone()))?;
        let lhs = swapped(&bundle(&deformed[k]), &swap);
        let rhs = bundle(&transformed);
        deformation.push(SubspaceMatch {
            source: name.to_string(),
            target: format!("e^B hat_{}", NAMES[tgt]),
            distance: projector_distance(&lhs, &rhs),
        });
    }
    let deformation_product = residual(&deformed[1].0.mul(&deformed[2].0), &deformed[0].0);

    let gcs_residual = source
        .iter()
        .chain(&target)
        .chain(&deformed)
        .map(|g| {
            let (a, b) = g.residuals();
            a.max(b)
        })
        .fold(0.0, f64::max);
    Ok(SwapReport {
        n: t.n,
        expected_dim: 2 * d,
        eigen_dims,
        gcs_residual,
        swap_preserves_pairing,
        swap_involution,
        quaternion: cot.residuals(),
        tangent_quaternion: tan.residuals(),
        generalized_quaternion: generalized_quaternion_residual(&source).max(generalized_quaternion_residual(&target)),
        matches,
        deformation,
        deformation_product,
        tangent_legendre: tangent_legendre_residual(t)?,
        rotation: rotation_residuals(t)?,
    })
}

/// Random triple from a frame with small integer entries.
pub fn random_rational_triple<R: Rng>(n: usize, rng: &mut R) -> KahlerTriple<Rat> {
    loop {
        let a = Mat::from_fn(2 * n, 2 * n, |i, j| {
            Rat::from_integer((rng.gen_range(-2..=2) + if i == j { 3 } else { 0 }).into())
        });
        if let Ok(t) = KahlerTriple::from_frame(&a) {
            return t;
        }
    }
}

pub fn random_rational_matrix<R: Rng>(d: usize, rng: &mut R) -> RatMatrix {
    Mat::from_fn(d, d, |_, _| Rat::new(rng.gen_range(-4..=4).into(), rng.gen_range(1..=3).into()))
}

#[derive(Clone, Debug)]
pub struct HessianReport {
    pub step: f64,
    pub samples: usize,
    pub max_residual: f64,
    pub symmetry_residual: Option<f64>,
}

impl HessianReport {
    pub fn matches(&self, tol: f64) -> bool {
        self.max_residual < tol
    }

    pub fn symmetric(&self, tol: f64) -> Option<bool> {
        self.symmetry_residual.map(|r| r < tol)
    }
}

/// Central finite-difference Hessian with step `h`.
pub fn finite_difference_hessian(phi: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> DMatrix<f64> {
    let n = x.len();
    let at = |shifts: &[(usize, f64)]| {
        let mut y = x.to_vec();
        for &(i, s) in shifts {
            y[i] += s;
        }
        phi(&y)
    };
    let centre = phi(x);
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            (at(&[(i, h)]) - 2.0 * centre + at(&[(i, -h)])) / (h * h)
        } else {
            (at(&[(i, h), (j, h)]) - at(&[(i, h), (j, -h)]) - at(&[(i, -h), (j, h)]) + at(&[(i, -h), (j, -h)]))
                / (4.0 * h * h)
        }
    })
}

/// Compares the Hessian of `phi` with `metric` at each sample; with a complex
/// structure field, also measures `∂_k I^i_j − ∂_j I^i_k`.
pub fn potential_hessian_check(
    phi: &dyn Fn(&[f64]) -> f64,
    metric: &dyn Fn(&[f64]) -> DMatrix<f64>,
    complex: Option<&dyn Fn(&[f64]) -> DMatrix<f64>>,
    points: &[Vec<f64>],
    step: f64,
) -> HessianReport {
    let mut max_residual: f64 = 0.0;
    let mut symmetry: Option<f64> = complex.map(|_| 0.0);
    for x in points {
        let hess = finite_difference_hessian(phi, x, step);
        max_residual = max_residual.max((hess - metric(x)).amax());
        if let Some(field) = complex {
            let n = x.len();
            let partial: Vec<DMatrix<f64>> = (0..n)
                .map(|k| {
                    let mut plus = x.clone();
                    let mut minus = x.clone();
                    plus[k] += step;
                    minus[k] -= step;
                    (field(&plus) - field(&minus)) / (2.0 * step)
                })
                .collect();
            let mut worst: f64 = 0.0;
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        worst = worst.max((partial[k][(i, j)] - partial[j][(i, k)]).abs());
                    }
                }
            }
            symmetry = symmetry.map(|s| s.max(worst));
        }
    }
    HessianReport { step, samples: points.len(), max_residual, symmetry_residual: symmetry }
}

/// Characteristic subspace of a coisotropic `W ⊂ V ⊕ V*` and the two
/// annihilator identities.
#[derive(Clone, Debug)]
pub struct CoisotropicReport {
    pub dim_v: usize,
    pub w: RatMatrix,
    pub delta: RatMatrix,
    pub w_cap_fiber: RatMatrix,
    pub ann_p_delta: RatMatrix,
    pub delta_cap_fiber: RatMatrix,
    pub ann_p_w: RatMatrix,
    pub first_identity: bool,
    pub second_identity: bool,
}

impl CoisotropicReport {
    pub fn holds(&self) -> bool {
        self.first_identity && self.second_identity
    }
}

fn span(cols: &[Vec<Rat>], len: usize) -> RatMatrix {
    if cols.is_empty() {
        return RatMatrix::zeros(len, 0);
    }
    let (r, pivots) = RatMatrix::from_cols(len, cols).transpose().rref();
    RatMatrix::from_cols(len, &(0..pivots.len()).map(|i| r.row(i)).collect::<Vec<_>>())
}

fn column_span(m: &RatMatrix) -> RatMatrix {
    span(&m.col_vecs(), m.rows())
}

fn same_span(a: &RatMatrix, b: &RatMatrix) -> bool {
    let ra = a.rank();
    ra == b.rank() && a.hcat(b).rank() == ra
}

fn intersect(a: &RatMatrix, b: &RatMatrix) -> RatMatrix {
    let len = a.rows();
    if a.cols() == 0 || b.cols() == 0 {
        return RatMatrix::zeros(len, 0);
    }
    let joint = a.hcat(&b.neg());
    let vecs: Vec<Vec<Rat>> = joint.kernel().iter().map(|k| a.mul_vec(&k[..a.cols()])).collect();
    span(&vecs, len)
}

/// Canonical form `ω(X+ξ, Y+η) = ξ(Y) − η(X)`.
pub fn canonical_form(g: usize) -> RatMatrix {
    standard_complex::<Rat>(g).neg()
}

/// Annihilator of `p(S)`, embedded in `0 ⊕ V*`.
fn ann_of_projection(s: &RatMatrix, g: usize) -> RatMatrix {
    let proj = s.sub_block(0, 0, g, s.cols());
    let ann: Vec<Vec<Rat>> = if proj.cols() == 0 {
        (0..g).map(|i| (0..g).map(|j| if i == j { Rat::one() } else { Rat::zero() }).collect()).collect()
    } else {
        proj.transpose().kernel()
    };
    let embedded: Vec<Vec<Rat>> =
        ann.into_iter().map(|a| std::iter::repeat(Rat::zero()).take(g).chain(a).collect()).collect();
    span(&embedded, 2 * g)
}

pub fn coisotropic_characteristic(w: &RatMatrix) -> Result<CoisotropicReport, SemiflatError> {
    let len = w.rows();
    if len % 2 != 0 {
        return Err(SemiflatError::Shape("ambient dimension must be even".into()));
    }
    let g = len / 2;
    let w = column_span(w);
    let omega = canonical_form(g);
    let delta = if w.cols() == 0 {
        RatMatrix::identity(len)
    } else {
        span(&w.transpose().mul(&omega.transpose()).kernel(), len)
    };
    if w.hcat(&delta).rank() != w.cols() {
        return Err(SemiflatError::NotCoisotropic);
    }
    let fiber = RatMatrix::identity(len).select_cols(&(g..len).collect::<Vec<_>>());
    let w_cap_fiber = intersect(&w, &fiber);
    let delta_cap_fiber = intersect(&delta, &fiber);
    let ann_p_delta = ann_of_projection(&delta, g);
    let ann_p_w = ann_of_projection(&w, g);
    Ok(CoisotropicReport {
        dim_v: g,
        first_identity: same_span(&w_cap_fiber, &ann_p_delta),
        second_identity: same_span(&delta_cap_fiber, &ann_p_w),
        w,
        delta,
        w_cap_fiber,
        ann_p_delta,
        delta_cap_fiber,
        ann_p_w,
    })
}

/// Random linear symplectomorphism of `(V ⊕ V*, ω)` with integer entries.
pub fn random_symplectic<R: Rng>(g: usize, rounds: usize, rng: &mut R) -> RatMatrix {
    let mut s = RatMatrix::identity(2 * g);
    let z = RatMatrix::zeros(g, g);
    let id = RatMatrix::identity(g);
    for r in 0..rounds {
        let mut a = RatMatrix::zeros(g, g);
        for i in 0..g {
            for j in i..g {
                let v = Rat::from_integer(rng.gen_range(-2..=2).into());
                a[(i, j)] = v.clone();
                a[(j, i)] = v;
            }
        }
        let step = if r % 2 == 0 { blocks(&id, &a, &z, &id) } else { blocks(&id, &z, &a, &id) };
        s = step.mul(&s);
    }
    s
}

/// Coisotropic subspace of dimension `2g − k` in `V ⊕ V*`: the image of
/// `V ⊕ span(e*_{k+1..g})` under a random symplectomorphism, with a shuffled basis.
pub fn random_coisotropic<R: Rng>(g: usize, k: usize, rng: &mut R) -> RatMatrix {
    let len = 2 * g;
    let cols: Vec<usize> = (0..g).chain(g + k..len).collect();
    let w0 = RatMatrix::identity(len).select_cols(&cols);
    let s = random_symplectic(g, 4, rng);
    let m = cols.len();
    let mut mix = RatMatrix::identity(m);
    for i in 0..m {
        for j in 0..i {
            mix[(i, j)] = Rat::from_integer(rng.gen_range(-1..=1).into());
        }
    }
    s.mul(&w0).mul(&mix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::rat;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn r(rows: &[&[i64]]) -> RatMatrix {
        RatMatrix::from_i64(rows)
    }

    #[test]
    fn standard_triple_is_self_dual() {
        let t = KahlerTriple::<Rat>::standard(1);
        let dual = legendre_point(&t).unwrap();
        assert_eq!(t.distance(&dual), 0.0);
        let s = semiflat_structures(&t);
        assert_eq!(s.residuals().max(), 0.0);
        assert_eq!(semiflat_tangent_structures(&t).residuals().max(), 0.0);
    }

    #[test]
    fn legendre_inverts_the_metric_and_is_involutive() {
        let g = RatMatrix::diag(&[rat(2, 1), rat(2, 1)]);
        let t = KahlerTriple::new(g, standard_complex(1)).unwrap();
        let dual = legendre_point(&t).unwrap();
        assert_eq!(dual.metric(), &RatMatrix::diag(&[rat(1, 2), rat(1, 2)]));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let t = random_rational_triple(2, &mut rng);
            let back = legendre_point(&legendre_point(&t).unwrap()).unwrap();
            assert_eq!(t.distance(&back), 0.0);
            let tf = t.to_float();
            let back = legendre_point(&legendre_point(&tf).unwrap()).unwrap();
            assert!(tf.distance(&back) < 1e-12);
        }
    }

    #[test]
    fn invalid_triples_are_rejected() {
        let j = standard_complex::<Rat>(1);
        assert_eq!(KahlerTriple::new(RatMatrix::zeros(2, 2), j.clone()).unwrap_err(), SemiflatError::Singular);
        assert_eq!(KahlerTriple::new(r(&[&[-1, 0], &[0, -1]]), j.clone()).unwrap_err(), SemiflatError::NotPositive);
        assert!(matches!(
            KahlerTriple::new(RatMatrix::identity(2), r(&[&[1, 0], &[0, 1]])),
            Err(SemiflatError::NotComplex(_))
        ));
        assert!(matches!(
            KahlerTriple::new(RatMatrix::diag(&[rat(1, 1), rat(2, 1)]), j.clone()),
            Err(SemiflatError::NotCompatible(_))
        ));
        assert!(matches!(
            KahlerTriple::with_form(RatMatrix::identity(2), j.clone(), j.neg()),
            Err(SemiflatError::FormMismatch(_))
        ));
    }

    #[test]
    fn random_metric_quaternion_relations() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let t = random_rational_triple(2, &mut rng);
            assert_eq!(semiflat_structures(&t).residuals().max(), 0.0);
            let tf = t.to_float();
            let s = semiflat_structures(&tf);
            assert!(s.residuals().ij_k < 1e-10);
            assert!(s.residuals().max() < 1e-10);
            assert_eq!(tangent_legendre_residual(&t).unwrap(), 0.0);
        }
    }

    #[test]
    fn printed_bfield_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = random_rational_triple(1, &mut rng);
        let c = t.complex().clone();
        let b = r(&[&[0, 2], &[-2, 0]]);
        let j = gcs_transform(&GcsKind::Complex(c.clone())).unwrap();
        let moved = gcs_transform(&GcsKind::BField(j.clone(), b.clone())).unwrap();
        let printed = blocks(&c, &RatMatrix::zeros(2, 2), &b.mul(&c).add(&c.transpose().mul(&b)), &c.transpose().neg());
        assert_eq!(moved.matrix(), &printed);
        let w = t.form().clone();
        let wi = w.inverse().unwrap();
        let js = gcs_transform(&GcsKind::Symplectic(w.clone())).unwrap();
        let moved = gcs_transform(&GcsKind::BField(js, b.clone())).unwrap();
        let printed = blocks(&wi.mul(&b), &wi.neg(), &w.add(&b.mul(&wi).mul(&b)), &b.mul(&wi).neg());
        assert_eq!(moved.matrix(), &printed);
        let zero = gcs_transform(&GcsKind::BField(j.clone(), RatMatrix::zeros(2, 2))).unwrap();
        assert_eq!(zero, j);
        assert_eq!(b_exp(&b).mul(&b_exp(&b.neg())), RatMatrix::identity(4));
        assert_eq!(gcs_transform(&GcsKind::BField(j, r(&[&[1, 0], &[0, 0]]))).unwrap_err(), SemiflatError::NotSkew);
    }

    #[test]
    fn flat_swap_matches_all_six() {
        let t = KahlerTriple::<Rat>::standard(1);
        let rep = tdual_swap_check(&t, &RatMatrix::zeros(2, 2)).unwrap();
        assert!(rep.holds(SUBSPACE_TOL), "{rep:?}");
        assert!(rep.eigen_dims.iter().all(|&d| d == 4));
        for (a, b) in rep.matches.iter().zip(&rep.deformation) {
            assert!(a.distance < 1e-9 && b.distance < 1e-9);
        }
    }

    #[test]
    fn deformed_swap_is_a_bfield_transform() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for n in 1..=2 {
            let t = random_rational_triple(n, &mut rng);
            let f = random_rational_matrix(2 * n, &mut rng);
            let rep = tdual_swap_check(&t, &f).unwrap();
            assert!(rep.holds(SUBSPACE_TOL), "{rep:?}");
            assert!(rep.rotation.iter().all(|(_, r)| *r == 0.0));
        }
    }

    #[test]
    fn swap_without_the_bfield_fails_for_nonzero_deformation() {
        let t = KahlerTriple::<Rat>::standard(1);
        let f = r(&[&[0, 1], &[0, 0]]);
        let [_, wj, _] = deformed_structures(&t, &f).unwrap();
        let lhs = swapped(&plus_i_bundle(&symplectic_gcs(&wj).unwrap()), &fiber_swap(2));
        let tan = generalized_structures(&semiflat_tangent_structures(&t)).unwrap();
        assert!(projector_distance(&lhs, &plus_i_bundle(&tan[1])) > 1e-3);
    }

    #[test]
    fn quadratic_and_quartic_potentials() {
        let points: Vec<Vec<f64>> = vec![vec![0.0, 0.0], vec![0.05, -0.02], vec![-0.04, 0.03]];
        let quad = |x: &[f64]| 0.5 * x.iter().map(|v| v * v).sum::<f64>();
        let id = |_: &[f64]| DMatrix::identity(2, 2);
        let rep = potential_hessian_check(&quad, &id, None, &points, DEFAULT_STEP);
        assert!(rep.matches(1e-8), "{rep:?}");

        let eps = 0.1;
        let quartic = move |x: &[f64]| 0.5 * (x[0] * x[0] + x[1] * x[1]) + eps * (x[0].powi(4) + x[0] * x[0] * x[1] * x[1]);
        let hess = move |x: &[f64]| {
            DMatrix::from_row_slice(
                2,
                2,
                &[
                    1.0 + eps * (12.0 * x[0] * x[0] + 2.0 * x[1] * x[1]),
                    eps * 4.0 * x[0] * x[1],
                    eps * 4.0 * x[0] * x[1],
                    1.0 + eps * 2.0 * x[0] * x[0],
                ],
            )
        };
        // I = −ω⁻¹ g with ω constant has symmetric derivatives
        let w_inv = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let field = move |x: &[f64]| -&w_inv * hess(x);
        let pts: Vec<Vec<f64>> = vec![vec![0.1, 0.2], vec![-0.3, 0.1], vec![0.2, -0.2]];
        let rep = potential_hessian_check(&quartic, &hess, Some(&field), &pts, DEFAULT_STEP);
        assert!(rep.matches(1e-6), "{rep:?}");
        assert_eq!(rep.symmetric(1e-6), Some(true));

        let bad = |x: &[f64]| DMatrix::from_row_slice(2, 2, &[x[1], 0.0, 0.0, 0.0]);
        let rep = potential_hessian_check(&quartic, &hess, Some(&bad), &pts, DEFAULT_STEP);
        assert_eq!(rep.symmetric(1e-6), Some(false));
    }

    #[test]
    fn coisotropic_extremes() {
        let g = 2;
        let v = RatMatrix::identity(4).select_cols(&[0, 1]);
        let rep = coisotropic_characteristic(&v).unwrap();
        assert!(same_span(&rep.delta, &v));
        assert_eq!(rep.w_cap_fiber.cols(), 0);
        assert!(rep.holds());
        let all = RatMatrix::identity(2 * g);
        let rep = coisotropic_characteristic(&all).unwrap();
        assert_eq!(rep.delta.cols(), 0);
        assert_eq!(rep.w_cap_fiber.cols(), g);
        assert!(rep.holds());
        let isotropic = RatMatrix::identity(4).select_cols(&[0]);
        assert_eq!(coisotropic_characteristic(&isotropic).unwrap_err(), SemiflatError::NotCoisotropic);
    }

    #[test]
    fn random_coisotropic_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for k in 0..=4 {
            let w = random_coisotropic(4, k, &mut rng);
            let rep = coisotropic_characteristic(&w).unwrap();
            assert_eq!(rep.delta.cols(), k);
            assert!(rep.holds());
        }
        let s = random_symplectic(3, 5, &mut rng);
        let om = canonical_form(3);
        assert_eq!(s.transpose().mul(&om).mul(&s), om);
    }
}
