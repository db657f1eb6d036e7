//! Exact phases, semicharacters and canonical factors of automorphy for
//! unitary bundles with invariant curvature.
//!
//! Conventions used throughout the crate:
//! * a factor is `a(v,λ) = exp(iπF(v,λ))·U(λ)` with the cocycle law
//!   `a(v,λ+μ) = a(v+λ,μ)·a(v,λ)`;
//! * matrices act on column vectors and row `i` of `U(λ)` is supported on
//!   column `λ(i)`, so the semi-representation obeys
//!   `U(λ+μ) = exp(iπF(λ,μ))·U(μ)·U(λ)`; hence
//!   `U(Σnᵢeᵢ) = exp(iπΣ_{i<j}nᵢnⱼF(eᵢ,eⱼ))·U(e_k)^{n_k}⋯U(e₁)^{n₁}`,
//!   the factor for `e₁` acting first;
//! * the connection is `A(v) = iπ(F(v,dv) + ω·dv)·Id` with a constant one-form ω.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::forms::{symplectic_normal_form, AlternatingForm, FormError};
use crate::lattice::{Lattice, LatticeError};
use crate::mat::{
    dot, frac, int_vec_to_rat, rat_int, rat_to_f64, Int, IntMatrix, Rat, RatMatrix,
};
use crate::numeric::{find_intertwiner, CMat, Intertwiner, DEFAULT_TOL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BundleError {
    #[error("semicharacter form does not match the curvature")]
    SemicharMismatch,
    #[error("factors live on different lattices or curvatures")]
    LatticeMismatch,
    #[error("vector is not in the lattice")]
    NotInLattice,
    #[error("decomposition is not an isotropic splitting of the lattice")]
    BadDecomposition,
    #[error("complex structure incompatible with the form: E(I·,I·) ≠ E")]
    NotCompatible,
    #[error("curvature is not integral on the lattice")]
    NotIntegral,
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// `exp(iπq)` with `q` kept in `[0,2)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Phase(Rat);

impl Phase {
    pub fn new(q: Rat) -> Self {
        let period = q.denom() * Int::from(2);
        if !q.is_negative() && q.numer() < &period {
            return Phase(q);
        }
        // numer − k·2·denom stays coprime to denom, so no renormalisation
        let k = q.numer().div_floor(&period);
        let numer = q.numer() - k * &period;
        Phase(Rat::new_raw(numer, q.denom().clone()))
    }

    pub fn one() -> Self {
        Phase(Rat::zero())
    }

    /// `exp(2πi t)`.
    pub fn turns(t: &Rat) -> Self {
        Phase::new(t * Rat::from_integer(Int::from(2)))
    }

    pub fn exponent(&self) -> &Rat {
        &self.0
    }

    pub fn mul(&self, o: &Phase) -> Phase {
        Phase::new(&self.0 + &o.0)
    }

    pub fn inv(&self) -> Phase {
        Phase::new(-self.0.clone())
    }

    pub fn pow(&self, n: &Int) -> Phase {
        Phase::new(&self.0 * rat_int(n))
    }

    pub fn is_one(&self) -> bool {
        self.0.is_zero()
    }

    pub fn to_complex(&self) -> Complex64 {
        let x = std::f64::consts::PI * rat_to_f64(&self.0);
        Complex64::new(x.cos(), x.sin())
    }
}

impl fmt::Debug for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e^(iπ·{})", self.0)
    }
}

/// Unitary matrix with one phase per row: row `i` is supported on column `perm[i]`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MonomialMatrix {
    pub perm: Vec<usize>,
    pub phases: Vec<Phase>,
}

impl fmt::Debug for MonomialMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries(self.perm.iter().zip(&self.phases).map(|(c, p)| (c, p)))
            .finish()
    }
}

impl MonomialMatrix {
    pub fn identity(n: usize) -> Self {
        Self::scalar(n, Phase::one())
    }

    pub fn scalar(n: usize, p: Phase) -> Self {
        MonomialMatrix { perm: (0..n).collect(), phases: vec![p; n] }
    }

    pub fn size(&self) -> usize {
        self.perm.len()
    }

    pub fn mul(&self, o: &MonomialMatrix) -> MonomialMatrix {
        assert_eq!(self.size(), o.size());
        let perm = self.perm.iter().map(|&j| o.perm[j]).collect();
        let phases = self.phases.iter().zip(&self.perm).map(|(p, &j)| p.mul(&o.phases[j])).collect();
        MonomialMatrix { perm, phases }
    }

    pub fn inverse(&self) -> MonomialMatrix {
        let n = self.size();
        let mut perm = vec![0; n];
        let mut phases = vec![Phase::one(); n];
        for i in 0..n {
            perm[self.perm[i]] = i;
            phases[self.perm[i]] = self.phases[i].inv();
        }
        MonomialMatrix { perm, phases }
    }

    pub fn pow(&self, n: &Int) -> MonomialMatrix {
        let base = if n.is_negative() { self.inverse() } else { self.clone() };
        let mut e = n.abs();
        let mut acc = MonomialMatrix::identity(self.size());
        let mut sq = base;
        let two = Int::from(2);
        while !e.is_zero() {
            if e.is_odd() {
                acc = acc.mul(&sq);
            }
            sq = sq.mul(&sq);
            e /= &two;
        }
        acc
    }

    pub fn scaled(&self, p: &Phase) -> MonomialMatrix {
        MonomialMatrix { perm: self.perm.clone(), phases: self.phases.iter().map(|q| q.mul(p)).collect() }
    }

    pub fn conj(&self) -> MonomialMatrix {
        MonomialMatrix { perm: self.perm.clone(), phases: self.phases.iter().map(Phase::inv).collect() }
    }

    /// `self ⊗ o` with index `(i,a) ↦ i·size(o)+a`.
    pub fn kron(&self, o: &MonomialMatrix) -> MonomialMatrix {
        let m = o.size();
        let mut perm = Vec::with_capacity(self.size() * m);
        let mut phases = Vec::with_capacity(self.size() * m);
        for i in 0..self.size() {
            for a in 0..m {
                perm.push(self.perm[i] * m + o.perm[a]);
                phases.push(self.phases[i].mul(&o.phases[a]));
            }
        }
        MonomialMatrix { perm, phases }
    }

    /// Conjugation by a diagonal phase matrix: `D·self·D⁻¹`.
    pub fn diag_conjugate(&self, d: &[Phase]) -> MonomialMatrix {
        let phases = (0..self.size())
            .map(|i| d[i].mul(&self.phases[i]).mul(&d[self.perm[i]].inv()))
            .collect();
        MonomialMatrix { perm: self.perm.clone(), phases }
    }

    pub fn to_dense(&self) -> CMat {
        let n = self.size();
        let mut m = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
        for i in 0..n {
            m[(i, self.perm[i])] = self.phases[i].to_complex();
        }
        m
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.size())
            .filter(|&i| self.perm[i] == i)
            .map(|i| self.phases[i].to_complex())
            .sum()
    }
}

/// Semicharacter in the canonical form `χ(λ) = exp(iπF(λ₁,λ₂) + 2πi ĉ(λ))`
/// relative to a splitting `Γ = Γ₁ ⊕ Γ₂ ⊕ radical`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Semicharacter {
    pub form: AlternatingForm,
    /// Unimodular; columns `[Γ₁ | Γ₂ | radical]` in lattice coordinates.
    pub decomposition: IntMatrix,
    pub half: usize,
    /// `ĉ` on the canonical lattice basis, reduced to `[0,1)`.
    pub twist: Vec<Rat>,
}

impl Semicharacter {
    pub fn new(
        form: AlternatingForm,
        decomposition: IntMatrix,
        half: usize,
        twist: Vec<Rat>,
    ) -> Result<Self, BundleError> {
        if !form.is_integral() {
            return Err(BundleError::NotIntegral);
        }
        let k = form.rank();
        if decomposition.rows() != k || !decomposition.is_unimodular() || 2 * half > k || twist.len() != k {
            return Err(BundleError::BadDecomposition);
        }
        let g = form.transported(&decomposition.to_rat());
        for i in 0..k {
            for j in 0..k {
                let same_half = (i < half && j < half) || (i >= half && i < 2 * half && j >= half && j < 2 * half);
                let radical = i >= 2 * half || j >= 2 * half;
                if (same_half || radical) && !g[(i, j)].is_zero() {
                    return Err(BundleError::BadDecomposition);
                }
            }
        }
        let twist = twist.iter().map(frac).collect();
        Ok(Semicharacter { form, decomposition, half, twist })
    }

    /// χ₀ for the symplectic frame of the form, with twist ĉ.
    pub fn canonical(form: &AlternatingForm, twist: Vec<Rat>) -> Result<Self, BundleError> {
        let sd = symplectic_normal_form(form)?;
        let half = sd.half_rank();
        Self::new(form.clone(), sd.basis_change, half, twist)
    }

    /// Normalises an arbitrary assignment of values on the lattice basis.
    pub fn from_values(form: &AlternatingForm, values: &[Phase]) -> Result<Self, BundleError> {
        let base = Self::canonical(form, vec![Rat::zero(); form.rank()])?;
        let k = form.rank();
        let mut twist = Vec::with_capacity(k);
        for (j, v) in values.iter().enumerate() {
            let mut e = vec![Int::zero(); k];
            e[j] = Int::one();
            let chi0 = base.eval(&e);
            twist.push(frac(&((v.exponent() - chi0.exponent()) / Rat::from_integer(Int::from(2)))));
        }
        Self::new(form.clone(), base.decomposition, base.half, twist)
    }

    pub fn rank(&self) -> usize {
        self.form.rank()
    }

    pub fn eval(&self, m: &[Int]) -> Phase {
        let inv = self.decomposition.to_rat().inverse().expect("unimodular");
        let y = inv.mul_vec(&int_vec_to_rat(m));
        let k = self.rank();
        let p = self.decomposition.to_rat();
        let mut r1 = vec![Rat::zero(); k];
        let mut r2 = vec![Rat::zero(); k];
        for j in 0..self.half {
            for i in 0..k {
                r1[i] += &p[(i, j)] * &y[j];
                r2[i] += &p[(i, j + self.half)] * &y[j + self.half];
            }
        }
        let two = Rat::from_integer(Int::from(2));
        Phase::new(self.form.eval(&r1, &r2) + two * dot(&self.twist, &int_vec_to_rat(m)))
    }

    pub fn with_twist(&self, twist: Vec<Rat>) -> Self {
        Semicharacter { twist: twist.iter().map(frac).collect(), ..self.clone() }
    }

    /// Values on the canonical basis.
    pub fn basis_values(&self) -> Vec<Phase> {
        let k = self.rank();
        (0..k)
            .map(|j| {
                let mut e = vec![Int::zero(); k];
                e[j] = Int::one();
                self.eval(&e)
            })
            .collect()
    }
}

/// Normal-form factor of automorphy `a(x,m) = exp(iπF(x,m))·U(m)` together with
/// the connection `A = iπ(F(x,dx) + ω·dx)·Id`. Vectors are handled in the
/// coordinates of the canonical lattice basis unless stated otherwise.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryFactor {
    pub rank: usize,
    pub lattice: Lattice,
    /// Gram matrix of the curvature form (divided by 2πi) in lattice coordinates.
    pub curvature: RatMatrix,
    /// `U(b_j)` for the canonical basis vectors `b_j`.
    pub generators: Vec<MonomialMatrix>,
    /// Constant part ω of the connection, in lattice coordinates.
    pub connection: Vec<Rat>,
}

impl UnitaryFactor {
    pub fn new(
        lattice: Lattice,
        curvature: RatMatrix,
        generators: Vec<MonomialMatrix>,
        connection: Vec<Rat>,
        rank: usize,
    ) -> Self {
        debug_assert!(curvature.is_skew());
        debug_assert_eq!(generators.len(), lattice.rank());
        UnitaryFactor { rank, lattice, curvature, generators, connection }
    }

    pub fn trivial(lattice: Lattice) -> Self {
        let k = lattice.rank();
        Self::new(lattice, RatMatrix::zeros(k, k), vec![MonomialMatrix::identity(1); k], vec![Rat::zero(); k], 1)
    }

    pub fn dim(&self) -> usize {
        self.lattice.rank()
    }

    pub fn curvature_form(&self) -> AlternatingForm {
        AlternatingForm { lattice: self.lattice.clone(), matrix: self.curvature.clone() }
    }

    pub fn is_flat(&self) -> bool {
        self.curvature.is_zero()
    }

    /// `U(m)` by the product rule.
    pub fn semirep(&self, m: &[Int]) -> MonomialMatrix {
        let k = self.dim();
        let mut acc = MonomialMatrix::identity(self.rank);
        let mut q = Rat::zero();
        for i in 0..k {
            for j in i + 1..k {
                q += rat_int(&(&m[i] * &m[j])) * &self.curvature[(i, j)];
            }
        }
        for i in 0..k {
            if !m[i].is_zero() {
                acc = self.generators[i].pow(&m[i]).mul(&acc);
            }
        }
        acc.scaled(&Phase::new(q))
    }

    /// `exp(iπω(m))·U(m)`: invariant of the bundle with connection.
    pub fn holonomy(&self, m: &[Int]) -> MonomialMatrix {
        self.semirep(m).scaled(&Phase::new(dot(&self.connection, &int_vec_to_rat(m))))
    }

    pub fn evaluate_coords(&self, x: &[Rat], m: &[Int]) -> MonomialMatrix {
        let q = self.curvature.bilinear(x, &int_vec_to_rat(m));
        self.semirep(m).scaled(&Phase::new(q))
    }

    /// Value at ambient vectors `v ∈ V`, `λ ∈ Γ`.
    pub fn evaluate(&self, v: &[Rat], lambda: &[Rat]) -> Result<MonomialMatrix, BundleError> {
        let m = self.lattice.coords(lambda).ok_or(BundleError::NotInLattice)?;
        let x = self.lattice.rat_coords(v).ok_or(BundleError::NotInLattice)?;
        Ok(self.evaluate_coords(&x, &m))
    }

    /// Coordinates of an ambient vector.
    pub fn to_coords(&self, v: &[Rat]) -> Vec<Rat> {
        self.lattice.rat_coords(v).expect("vector in the span")
    }

    /// Checks `A(x+m) = a·A(x)·a⁻¹ − da·a⁻¹` on the one-form coefficients.
    /// The connection is scalar, so conjugation by `a` drops out.
    pub fn connection_compatible(&self, x: &[Rat], m: &[Int]) -> bool {
        let mr = int_vec_to_rat(m);
        let coeff = |y: &[Rat]| -> Vec<Rat> {
            let yf = self.curvature.transpose().mul_vec(y);
            yf.iter().zip(&self.connection).map(|(a, b)| a + b).collect()
        };
        let shifted: Vec<Rat> = x.iter().zip(&mr).map(|(a, b)| a + b).collect();
        // every row of a carries the phase F(x,m) + const
        let dpsi = self.curvature.mul_vec(&mr);
        let rhs: Vec<Rat> = coeff(x).iter().zip(&dpsi).map(|(b, d)| b - d).collect();
        coeff(&shifted) == rhs
    }

    /// `F(x,y)` for ambient vectors of the rational span.
    pub fn form_value(&self, x: &[Rat], y: &[Rat]) -> Rat {
        if self.curvature.is_zero() {
            return Rat::zero();
        }
        self.curvature.bilinear(&self.to_coords(x), &self.to_coords(y))
    }

    /// Equivalent factor with ω = 0: the flat part moves into the generators.
    pub fn absorb_connection(&self) -> UnitaryFactor {
        let gens = self
            .generators
            .iter()
            .zip(&self.connection)
            .map(|(g, w)| g.scaled(&Phase::new(w.clone())))
            .collect();
        UnitaryFactor::new(
            self.lattice.clone(),
            self.curvature.clone(),
            gens,
            vec![Rat::zero(); self.dim()],
            self.rank,
        )
    }

    /// Holonomy traces over the coordinate box `{−r..r}^k`.
    pub fn trace_box(&self, r: i64) -> Vec<Complex64> {
        let k = self.dim();
        let side = (2 * r + 1) as usize;
        let total = side.pow(k as u32);
        (0..total)
            .map(|mut idx| {
                let mut m = vec![Int::zero(); k];
                for slot in m.iter_mut().rev() {
                    *slot = Int::from((idx % side) as i64 - r);
                    idx /= side;
                }
                self.holonomy(&m).trace()
            })
            .collect()
    }

    /// `ρ(U) = Id_d ⊗ U`, block diagonal.
    pub fn block_repeat(&self, d: usize) -> UnitaryFactor {
        let gens = self.generators.iter().map(|g| MonomialMatrix::identity(d).kron(g)).collect();
        UnitaryFactor::new(self.lattice.clone(), self.curvature.clone(), gens, self.connection.clone(), self.rank * d)
    }

    pub fn tensor(&self, o: &UnitaryFactor) -> Result<UnitaryFactor, BundleError> {
        if self.lattice != o.lattice {
            return Err(BundleError::LatticeMismatch);
        }
        Ok(UnitaryFactor::new(
            self.lattice.clone(),
            self.curvature.add(&o.curvature),
            self.generators.iter().zip(&o.generators).map(|(a, b)| a.kron(b)).collect(),
            self.connection.iter().zip(&o.connection).map(|(a, b)| a + b).collect(),
            self.rank * o.rank,
        ))
    }

    pub fn dual(&self) -> UnitaryFactor {
        UnitaryFactor::new(
            self.lattice.clone(),
            self.curvature.neg(),
            self.generators.iter().map(MonomialMatrix::conj).collect(),
            self.connection.iter().map(|x| -x).collect(),
            self.rank,
        )
    }

    /// `t_x^*`: `a(v+x, λ)` brought back to normal form.
    pub fn translate(&self, x_ambient: &[Rat]) -> UnitaryFactor {
        let x = self.to_coords(x_ambient);
        let fx: Vec<Rat> = self.curvature.transpose().mul_vec(&x);
        let gens = self
            .generators
            .iter()
            .enumerate()
            .map(|(j, g)| g.scaled(&Phase::new(fx[j].clone())))
            .collect();
        let conn = self.connection.iter().zip(&fx).map(|(a, b)| a + b).collect();
        UnitaryFactor::new(self.lattice.clone(), self.curvature.clone(), gens, conn, self.rank)
    }

    /// Tensor with the flat line bundle of character `exp(2πi c(λ))`, `c` in lattice coordinates.
    pub fn twist_by_character(&self, c: &[Rat]) -> UnitaryFactor {
        let gens = self.generators.iter().zip(c).map(|(g, cj)| g.scaled(&Phase::turns(cj))).collect();
        UnitaryFactor::new(self.lattice.clone(), self.curvature.clone(), gens, self.connection.clone(), self.rank)
    }

    /// Pullback along the linear map `lin: V' → V` restricted to `new_lattice → Γ`.
    pub fn pullback(&self, new_lattice: &Lattice, lin: &RatMatrix) -> Result<UnitaryFactor, BundleError> {
        let images = lin.mul(&new_lattice.basis());
        let cols: Vec<Vec<Rat>> = (0..images.cols())
            .map(|j| self.lattice.rat_coords(&images.col(j)).ok_or(BundleError::LatticeMismatch))
            .collect::<Result<_, _>>()?;
        let m = RatMatrix::from_cols(self.dim(), &cols);
        let mi = m.to_int().ok_or(BundleError::LatticeMismatch)?;
        let curv = m.transpose().mul(&self.curvature).mul(&m);
        let gens = (0..mi.cols()).map(|j| self.semirep(&mi.col(j))).collect();
        let conn = m.transpose().mul_vec(&self.connection);
        Ok(UnitaryFactor::new(new_lattice.clone(), curv, gens, conn, self.rank))
    }

    /// Re-expresses the same factor in another basis of the same lattice
    /// (`change` columns = new basis in old lattice coordinates).
    pub fn generators_in_basis(&self, change: &IntMatrix) -> Vec<MonomialMatrix> {
        (0..change.cols()).map(|j| self.semirep(&change.col(j))).collect()
    }

    /// The same factor on the lattice spanned by `images`, where column `j` is the
    /// image of the `j`-th canonical basis vector.
    pub fn reembed(&self, images: &RatMatrix) -> UnitaryFactor {
        let target = Lattice::from_rat_matrix(images);
        let cols: Vec<Vec<Int>> = target
            .basis_vectors()
            .iter()
            .map(|b| {
                let x = images.solve(b).expect("basis vector in the span");
                x.iter().map(|q| q.to_integer()).collect()
            })
            .collect();
        let u = IntMatrix::from_cols(self.dim(), &cols);
        let ur = u.to_rat();
        UnitaryFactor::new(
            target,
            ur.transpose().mul(&self.curvature).mul(&ur),
            self.generators_in_basis(&u),
            ur.transpose().mul_vec(&self.connection),
            self.rank,
        )
    }

    /// The same data viewed on `ℤ^k` (lattice coordinates as ambient coordinates).
    pub fn in_lattice_coords(&self) -> UnitaryFactor {
        UnitaryFactor { lattice: Lattice::standard(self.dim()), ..self.clone() }
    }

    pub fn dense_generators(&self) -> Vec<CMat> {
        self.generators.iter().map(MonomialMatrix::to_dense).collect()
    }
}

/// Witness `φ(x) = exp(iπ α·x)·W` with `b = φ(x+m)·a·φ(x)⁻¹`.
#[derive(Clone, Debug)]
pub struct Equivalence {
    pub alpha: Vec<Rat>,
    pub conjugator: Intertwiner,
}

/// Constructive equivalence test between normal-form factors on the same
/// lattice with the same curvature.
pub fn equivalence(a: &UnitaryFactor, b: &UnitaryFactor) -> Option<Equivalence> {
    if a.lattice != b.lattice || a.curvature != b.curvature || a.rank != b.rank {
        return None;
    }
    let alpha: Vec<Rat> = a.connection.iter().zip(&b.connection).map(|(x, y)| x - y).collect();
    let twisted: Vec<MonomialMatrix> = a
        .generators
        .iter()
        .zip(&alpha)
        .map(|(g, al)| g.scaled(&Phase::new(al.clone())))
        .collect();
    if a.rank == 1 {
        let ok = twisted.iter().zip(&b.generators).all(|(x, y)| x == y);
        return ok.then(|| Equivalence {
            alpha,
            conjugator: Intertwiner { matrix: CMat::identity(1, 1), residual: 0.0 },
        });
    }
    if twisted == b.generators {
        return Some(Equivalence {
            alpha,
            conjugator: Intertwiner { matrix: CMat::identity(a.rank, a.rank), residual: 0.0 },
        });
    }
    let bs: Vec<CMat> = b.generators.iter().map(MonomialMatrix::to_dense).collect();
    let ts: Vec<CMat> = twisted.iter().map(MonomialMatrix::to_dense).collect();
    let w = find_intertwiner(&bs, &ts, DEFAULT_TOL)?;
    Some(Equivalence { alpha, conjugator: w })
}

/// `a(v,λ) = χ(λ)·exp(iπF(v,λ))`, `A(v) = iπF(v,dv)`.
pub fn canonical_factor_u1(f: &AlternatingForm, chi: &Semicharacter) -> Result<UnitaryFactor, BundleError> {
    if chi.form != *f {
        return Err(BundleError::SemicharMismatch);
    }
    let gens = chi.basis_values().into_iter().map(|p| MonomialMatrix::scalar(1, p)).collect();
    Ok(UnitaryFactor::new(f.lattice.clone(), f.matrix.clone(), gens, vec![Rat::zero(); f.rank()], 1))
}

/// The map `v ↦ F(v,·)` with its kernel and image data.
#[derive(Clone, Debug)]
pub struct PhiMap {
    /// Matrix from ambient vectors to ambient covectors.
    pub matrix: RatMatrix,
    /// `ker F ∩ Γ` (saturated in Γ), ambient coordinates.
    pub kernel_lattice: Lattice,
    /// `F(Γ) ⊆ Γ^∨`, ambient covector coordinates.
    pub image_lattice: Lattice,
    pub finite_kernel_order: Option<Int>,
}

/// Curvature as an ambient Gram matrix.
pub fn ambient_gram(f: &AlternatingForm) -> RatMatrix {
    let binv = f.lattice.basis().inverse().expect("full rank lattice");
    binv.transpose().mul(&f.matrix).mul(&binv)
}

pub fn phi_map(f: &AlternatingForm) -> Result<PhiMap, BundleError> {
    if !f.is_integral() {
        return Err(BundleError::NotIntegral);
    }
    let g = ambient_gram(f);
    let map = g.transpose();
    let n = f.lattice.ambient_rank();
    let kernel_coords = f.as_map().kernel();
    let b = f.lattice.basis();
    let kernel = if kernel_coords.is_empty() {
        Lattice::zero(n)
    } else {
        let cols: Vec<Vec<Rat>> = kernel_coords.iter().map(|c| b.mul_vec(c)).collect();
        let span = Lattice::from_rat_cols(n, &cols);
        // saturate inside Γ: intersect the rational span with Γ
        span.saturate_in(&f.lattice)
    };
    let image = f.lattice.image(&map);
    let order = if kernel_coords.is_empty() {
        let sd = symplectic_normal_form(f)?;
        let p = sd.reduced_pfaffian();
        Some(&p * &p)
    } else {
        None
    };
    Ok(PhiMap { matrix: map, kernel_lattice: kernel, image_lattice: image, finite_kernel_order: order })
}

/// Holomorphic factor record `(H = E(I·,·) + iE, χ)`.
#[derive(Clone, Debug)]
pub struct HoloFactor {
    pub e: AlternatingForm,
    /// Complex structure on V in lattice coordinates.
    pub complex_structure: DMatrix<f64>,
    pub chi: Semicharacter,
}

pub fn ns_compatible(e: &RatMatrix, i: &DMatrix<f64>, tol: f64) -> bool {
    let ef = e.to_f64();
    let lhs = i.transpose() * &ef * i;
    (lhs - ef).abs().max() <= tol
}

pub fn canonical_factor_holo(
    e: &AlternatingForm,
    complex_structure: &DMatrix<f64>,
    chi: &Semicharacter,
) -> Result<HoloFactor, BundleError> {
    if !e.is_integral() {
        return Err(BundleError::NotIntegral);
    }
    if !ns_compatible(&e.matrix, complex_structure, 1e-12) {
        return Err(BundleError::NotCompatible);
    }
    if chi.form != *e {
        return Err(BundleError::SemicharMismatch);
    }
    Ok(HoloFactor { e: e.clone(), complex_structure: complex_structure.clone(), chi: chi.clone() })
}

impl HoloFactor {
    /// `H(v,w) = E(Iv,w) + iE(v,w)`.
    pub fn hermitian(&self, v: &[f64], w: &[f64]) -> Complex64 {
        let e = self.e.matrix.to_f64();
        let v = nalgebra::DVector::from_column_slice(v);
        let w = nalgebra::DVector::from_column_slice(w);
        let iv = &self.complex_structure * &v;
        let re = (iv.transpose() * &e * &w)[(0, 0)];
        let im = (v.transpose() * &e * &w)[(0, 0)];
        Complex64::new(re, im)
    }

    /// `χ(λ)·exp(πH(v,λ) + (π/2)H(λ,λ))`.
    pub fn evaluate(&self, v: &[f64], m: &[Int]) -> Complex64 {
        let lam: Vec<f64> = m.iter().map(|x| x.to_f64().unwrap()).collect();
        let pi = std::f64::consts::PI;
        let expo = self.hermitian(v, &lam) * pi + self.hermitian(&lam, &lam) * (pi / 2.0);
        self.chi.eval(m).to_complex() * expo.exp()
    }
}

/// The unitary factor with curvature `Im H = E` and the same semicharacter.
pub fn holo_unitary_bridge(h: &HoloFactor) -> Result<UnitaryFactor, BundleError> {
    canonical_factor_u1(&h.e, &h.chi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::{int, rat};

    fn std_form() -> AlternatingForm {
        AlternatingForm::standard(RatMatrix::from_i64(&[&[0, 1], &[-1, 0]])).unwrap()
    }

    #[test]
    fn phase_arithmetic() {
        assert_eq!(Phase::new(rat(5, 2)), Phase::new(rat(1, 2)));
        assert_eq!(Phase::new(rat(-1, 2)).exponent(), &rat(3, 2));
        assert!(Phase::new(rat(2, 1)).is_one());
        assert_eq!(Phase::turns(&rat(1, 3)), Phase::new(rat(2, 3)));
    }

    #[test]
    fn canonical_factor_hand_values() {
        let f = std_form();
        let chi = Semicharacter::canonical(&f, vec![Rat::zero(); 2]).unwrap();
        let l = canonical_factor_u1(&f, &chi).unwrap();
        let a = l.evaluate(&[rat(1, 2), rat(1, 2)], &[rat(0, 1), rat(1, 1)]).unwrap();
        assert_eq!(a.phases[0], Phase::new(rat(1, 2)));
        let e1 = [int(1), int(0)];
        let e2 = [int(0), int(1)];
        let zero = [Rat::zero(), Rat::zero()];
        let lhs = l.evaluate_coords(&zero, &[int(1), int(1)]);
        let rhs = l.evaluate_coords(&[rat(1, 1), rat(0, 1)], &e2).mul(&l.evaluate_coords(&zero, &e1));
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn trivial_factor() {
        let f = AlternatingForm::zero(Lattice::standard(2));
        let chi = Semicharacter::canonical(&f, vec![Rat::zero(); 2]).unwrap();
        let l = canonical_factor_u1(&f, &chi).unwrap();
        assert_eq!(l, UnitaryFactor::trivial(Lattice::standard(2)));
    }

    #[test]
    fn from_values_normalises() {
        let f = std_form();
        let vals = vec![Phase::new(rat(1, 3)), Phase::new(rat(1, 1))];
        let chi = Semicharacter::from_values(&f, &vals).unwrap();
        assert_eq!(chi.basis_values(), vals);
        let bad = Semicharacter::canonical(&f, vec![Rat::zero(); 2]).unwrap();
        let g = AlternatingForm::standard(RatMatrix::from_i64(&[&[0, 2], &[-2, 0]])).unwrap();
        assert_eq!(canonical_factor_u1(&g, &bad), Err(BundleError::SemicharMismatch));
    }

    #[test]
    fn semirep_product_rule_matches_bracketings() {
        let f = std_form();
        let chi = Semicharacter::from_values(&f, &[Phase::new(rat(1, 4)), Phase::new(rat(2, 3))]).unwrap();
        let l = canonical_factor_u1(&f, &chi).unwrap();
        assert_eq!(l.semirep(&[int(0), int(0)]), MonomialMatrix::identity(1));
        let u1 = l.semirep(&[int(1), int(0)]);
        assert_eq!(l.semirep(&[int(2), int(0)]), u1.mul(&u1));
        let u2 = l.semirep(&[int(0), int(1)]);
        let direct = l.semirep(&[int(1), int(1)]);
        let via = u2.mul(&u1).scaled(&Phase::new(rat(1, 1)));
        assert_eq!(direct, via);
    }

    #[test]
    fn tensor_dual_translate() {
        let f = std_form();
        let chi = Semicharacter::from_values(&f, &[Phase::new(rat(1, 4)), Phase::new(rat(2, 3))]).unwrap();
        let l = canonical_factor_u1(&f, &chi).unwrap();
        let t = l.tensor(&l.dual()).unwrap();
        assert_eq!(t, UnitaryFactor::trivial(Lattice::standard(2)));
        let moved = l.translate(&[rat(1, 1), rat(0, 1)]);
        assert!(equivalence(&l, &moved).is_some());
        let off = l.translate(&[rat(1, 2), rat(0, 1)]);
        // a non-lattice shift changes the flat class
        assert!(equivalence(&l, &off).is_none());
        assert!(l.connection_compatible(&[rat(1, 3), rat(2, 5)], &[int(1), int(-2)]));
    }

    #[test]
    fn pullback_squares_character() {
        let flat = AlternatingForm::zero(Lattice::standard(1));
        let chi = Semicharacter::from_values(&flat, &[Phase::turns(&rat(1, 3))]).unwrap();
        let l = canonical_factor_u1(&flat, &chi).unwrap();
        let two = Lattice::from_int_cols(1, &[vec![int(2)]]);
        let p = l.pullback(&two, &RatMatrix::identity(1)).unwrap();
        assert_eq!(p.generators[0].phases[0], Phase::turns(&rat(2, 3)));
    }

    #[test]
    fn phi_map_orders() {
        assert_eq!(phi_map(&std_form()).unwrap().finite_kernel_order, Some(int(1)));
        let two = AlternatingForm::standard(RatMatrix::from_i64(&[&[0, 2], &[-2, 0]])).unwrap();
        assert_eq!(phi_map(&two).unwrap().finite_kernel_order, Some(int(4)));
        let deg = AlternatingForm::standard(RatMatrix::from_i64(&[
            &[0, 1, 0, 0],
            &[-1, 0, 0, 0],
            &[0, 0, 0, 0],
            &[0, 0, 0, 0],
        ]))
        .unwrap();
        let p = phi_map(&deg).unwrap();
        assert_eq!(p.kernel_lattice.rank(), 2);
        assert_eq!(p.kernel_lattice.saturate(), p.kernel_lattice);
        assert_eq!(p.finite_kernel_order, None);
    }
}
