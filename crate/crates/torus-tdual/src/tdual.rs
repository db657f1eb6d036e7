//! T-dualization of branes on a torus `V/Γ` and on trivial families over a
//! rational box base: the correspondence lattice Γ_Z, the dual subtorus, the dual
//! two-form, the dual bundle and higher-rank pairs.
//!
//! Conventions: `V = ℚⁿ`, `Γ = ℤⁿ`, `V* = ℚⁿ`, `P = dv̂∧dv`. Vectors of `V_S` are
//! written in Γ_S coordinates, covectors of `V_S*` on the Γ_S basis. Γ_Z lives in
//! `ℚ^{l+n}`: Γ_S coordinates followed by the dual coordinates.

use num_traits::{One, Zero};
use thiserror::Error;

use crate::bundles::{canonical_factor_u1, equivalence, BundleError, MonomialMatrix, Phase, Semicharacter, UnitaryFactor};
use crate::forms::{gamma_h, graph_lattice, AlternatingForm, FormError, RationalTypeData, SubFrame};
use crate::lattice::{integer_kernel, reduce_mod_one, Lattice, LatticeError};
use crate::mat::{dot, frac, Int, Rat, RatMatrix};
use crate::numeric::Intertwiner;
use crate::pushforward::{
    pushforward_isogeny, pushforward_projection, split_projectively_flat, ud_tensor_decompose, Isogeny,
    ProjectionPushforward, PushforwardError, TorusProjection,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TDualError {
    #[error("invalid brane: {0}")]
    InvalidBrane(String),
    #[error("fiber form of a bundle payload must be integral on Γ_S")]
    FiberFormNotIntegral,
    #[error("the dual bundle has rank {0}; the double dual needs rank 1")]
    NotLineBundle(Int),
    #[error("leaf-dependent dual bundle at leaf shift {0}")]
    LeafDependent(String),
    #[error(transparent)]
    Pushforward(#[from] PushforwardError),
    #[error(transparent)]
    Bundle(#[from] BundleError),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Affine family data over a base `ℚᵏ`: `F⁰` on the base, `G(y) = G₀ + G₁y ∈ V_S*`
/// and `b(y) = b + b₁y`, with `b₁` valued in the complement of `V_S`.
#[derive(Clone, Debug, PartialEq)]
pub struct FamilyData {
    pub base_form: RatMatrix,
    pub g0: Vec<Rat>,
    pub g1: RatMatrix,
    pub b1: RatMatrix,
}

impl FamilyData {
    pub fn point(l: usize, n: usize) -> Self {
        FamilyData {
            base_form: RatMatrix::zeros(0, 0),
            g0: vec![Rat::zero(); l],
            g1: RatMatrix::zeros(l, 0),
            b1: RatMatrix::zeros(n, 0),
        }
    }

    pub fn base_dim(&self) -> usize {
        self.base_form.rows()
    }

    pub fn g_at(&self, y: &[Rat]) -> Vec<Rat> {
        let lin = self.g1.mul_vec(y);
        self.g0.iter().zip(&lin).map(|(a, b)| a + b).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Payload {
    /// Rational fiber form `H` on Γ_S.
    Form(RatMatrix),
    /// Line bundle with integral fiber form and character twist `ĉ ∈ V_S*`.
    Bundle { fiber_form: RatMatrix, twist: Vec<Rat> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Brane {
    pub sub: Lattice,
    pub translation: Vec<Rat>,
    pub payload: Payload,
    pub family: FamilyData,
}

impl Brane {
    pub fn new(sub: Lattice, translation: Vec<Rat>, payload: Payload, family: FamilyData) -> Result<Self, TDualError> {
        let n = sub.ambient_rank();
        let l = sub.rank();
        if !sub.is_integral() || !sub.is_primitive() {
            return Err(TDualError::InvalidBrane("Γ_S must be a primitive sublattice of ℤⁿ".into()));
        }
        if translation.len() != n {
            return Err(TDualError::InvalidBrane("translation length".into()));
        }
        let form = match &payload {
            Payload::Form(h) => h,
            Payload::Bundle { fiber_form, twist } => {
                if twist.len() != l {
                    return Err(TDualError::InvalidBrane("twist length".into()));
                }
                if !fiber_form.is_integral() {
                    return Err(TDualError::FiberFormNotIntegral);
                }
                fiber_form
            }
        };
        if form.rows() != l || form.cols() != l || !form.is_skew() {
            return Err(TDualError::InvalidBrane("fiber form must be skew l×l".into()));
        }
        let k = family.base_dim();
        let fam_ok = family.base_form.is_skew()
            && family.g0.len() == l
            && family.g1.rows() == l
            && family.g1.cols() == k
            && family.b1.rows() == n
            && family.b1.cols() == k;
        if !fam_ok {
            return Err(TDualError::InvalidBrane("family data shapes".into()));
        }
        let frame = SubFrame::new(&sub)?;
        for j in 0..k {
            let (s, _) = frame.split_vector(&family.b1.col(j));
            if s.iter().any(|x| !x.is_zero()) {
                return Err(TDualError::InvalidBrane("b₁ must have zero V_S-component".into()));
            }
        }
        let brane = Brane { sub, translation, payload, family };
        Ok(brane.normalized(&frame))
    }

    pub fn point(sub: Lattice, translation: Vec<Rat>, payload: Payload) -> Result<Self, TDualError> {
        let fam = FamilyData::point(sub.rank(), sub.ambient_rank());
        Self::new(sub, translation, payload, fam)
    }

    pub fn n(&self) -> usize {
        self.sub.ambient_rank()
    }

    pub fn l(&self) -> usize {
        self.sub.rank()
    }

    pub fn fiber_form(&self) -> &RatMatrix {
        match &self.payload {
            Payload::Form(h) => h,
            Payload::Bundle { fiber_form, .. } => fiber_form,
        }
    }

    pub fn fiber_alternating(&self) -> AlternatingForm {
        AlternatingForm { lattice: self.sub.clone(), matrix: self.fiber_form().clone() }
    }

    /// Moves the translation into the complement of `V_S` (mod 1) and adjusts the twist.
    fn normalized(mut self, frame: &SubFrame) -> Self {
        let (s, rest) = frame.split_vector(&self.translation);
        let comp = frame.complement_basis();
        let mut b = vec![Rat::zero(); self.n()];
        for (c, v) in rest.iter().zip(&comp) {
            let c = frac(c);
            for (bi, vi) in b.iter_mut().zip(v) {
                *bi += &c * vi;
            }
        }
        self.translation = b;
        if let Payload::Bundle { fiber_form, twist } = &mut self.payload {
            // b' − b = −s on V_S shifts ĉ by F(b' − b)
            let neg: Vec<Rat> = s.iter().map(|x| -x).collect();
            let shift = fiber_form.transpose().mul_vec(&neg);
            *twist = twist.iter().zip(&shift).map(|(a, b)| frac(&(a + b))).collect();
        }
        self
    }

    /// Character twist `ĉ(y) = ĉ + G(y)` and translation `b(y)` at a base point.
    pub fn at(&self, y: &[Rat]) -> (Vec<Rat>, Vec<Rat>) {
        let g = self.family.g_at(y);
        let twist = match &self.payload {
            Payload::Bundle { twist, .. } => twist.iter().zip(&g).map(|(a, b)| a + b).collect(),
            Payload::Form(_) => g,
        };
        let by = self.family.b1.mul_vec(y);
        let b = self.translation.iter().zip(&by).map(|(a, b)| a + b).collect();
        (twist, b)
    }
}

/// The finite part of the leaves over one dual: `(H(Γ_S) + L)/L`, `L = H(V_S) ∩ Γ_S^∨`.
#[derive(Clone, Debug)]
pub struct LeavesPerDual {
    pub torus_dim: usize,
    pub image_lattice: Lattice,
    pub integral_image: Lattice,
    pub order: Int,
    /// `[H(Γ_S) + L : H(Γ_S)]`.
    pub component_count: Int,
}

#[derive(Clone, Debug)]
pub struct SesChecks {
    pub gamma_z_rank: bool,
    pub p0_onto_gamma_h: bool,
    pub p0_hat_into_gamma_s_hat: bool,
    pub commuting_square: bool,
    pub counts_match: bool,
}

impl SesChecks {
    pub fn all(&self) -> bool {
        self.gamma_z_rank && self.p0_onto_gamma_h && self.p0_hat_into_gamma_s_hat && self.commuting_square && self.counts_match
    }
}

/// Lattice part of the T-dual.
#[derive(Clone, Debug)]
pub struct DualData {
    pub frame: SubFrame,
    pub rational_type: RationalTypeData,
    pub gamma_z: Lattice,
    pub v_z_rank: usize,
    pub gamma_s_hat: Lattice,
    /// `[Γ_Ŝ : p̂₀(Γ_Z)]`.
    pub image_index: Int,
    /// Γ_H^∨ on the Γ_S^∨ coordinates.
    pub leaf_lattice: Lattice,
    /// `[Γ_H^∨ : Γ_S^∨]`.
    pub leaf_index: Int,
    pub dual_moduli_dim: usize,
    pub leaves_per_dual: LeavesPerDual,
    pub fiber_counts: (Int, Int),
    pub dual_rank: Int,
    pub checks: SesChecks,
}

impl DualData {
    pub fn l(&self) -> usize {
        self.frame.l()
    }

    pub fn n(&self) -> usize {
        self.frame.n()
    }

    pub fn p0(&self, z: &[Rat]) -> Vec<Rat> {
        z[..self.l()].to_vec()
    }

    pub fn p0_hat(&self, z: &[Rat]) -> Vec<Rat> {
        z[self.l()..].to_vec()
    }

    pub fn dual_dim(&self) -> usize {
        self.gamma_s_hat.rank()
    }

    /// Γ_Z basis images under `p₀` (columns, Γ_S coordinates).
    pub fn p0_matrix(&self) -> RatMatrix {
        let cols: Vec<Vec<Rat>> = self.gamma_z.basis_vectors().iter().map(|z| self.p0(z)).collect();
        RatMatrix::from_cols(self.l(), &cols)
    }

    /// Γ_Z basis images under `p̂₀` (columns, ambient dual coordinates).
    pub fn p0_hat_matrix(&self) -> RatMatrix {
        let cols: Vec<Vec<Rat>> = self.gamma_z.basis_vectors().iter().map(|z| self.p0_hat(z)).collect();
        RatMatrix::from_cols(self.n(), &cols)
    }
}

pub fn dual_data(brane: &Brane) -> Result<DualData, TDualError> {
    let h = brane.fiber_alternating();
    let frame = SubFrame::new(&brane.sub)?;
    let (n, l) = (frame.n(), frame.l());
    let td = gamma_h(&h);
    let gamma_z = graph_lattice(&h, &Lattice::standard(n))?;
    let r = td.half_rank();
    let mut data = DualData {
        frame,
        rational_type: td.clone(),
        gamma_z: gamma_z.clone(),
        v_z_rank: gamma_z.rank(),
        gamma_s_hat: Lattice::zero(n),
        image_index: Int::one(),
        leaf_lattice: Lattice::zero(l),
        leaf_index: Int::one(),
        dual_moduli_dim: l - 2 * r,
        leaves_per_dual: LeavesPerDual {
            torus_dim: 2 * r,
            image_lattice: Lattice::zero(l),
            integral_image: Lattice::zero(l),
            order: Int::one(),
            component_count: Int::one(),
        },
        fiber_counts: (td.prod_n() * td.prod_n(), td.prod_m() * td.prod_m()),
        dual_rank: td.prod_n(),
        checks: SesChecks {
            gamma_z_rank: false,
            p0_onto_gamma_h: false,
            p0_hat_into_gamma_s_hat: false,
            commuting_square: false,
            counts_match: false,
        },
    };
    let p0_img = Lattice::from_rat_matrix(&data.p0_matrix());
    let p0h = data.p0_hat_matrix();
    let p0h_img = Lattice::from_rat_matrix(&p0h);
    let gamma_s_hat = p0h_img.saturate();
    data.image_index = gamma_s_hat.index_of(&p0h_img)?;
    data.gamma_s_hat = gamma_s_hat;

    let gamma_h_coords = Lattice::from_int_matrix(&td.gamma_h_frame());
    data.leaf_lattice = gamma_h_coords.dual()?;
    data.leaf_index = data.leaf_lattice.index_of(&Lattice::standard(l))?;

    let hmap = h.as_map();
    let image_lattice = Lattice::standard(l).image(&hmap);
    let integral_image = image_lattice.saturate();
    let sum = image_lattice.sum(&integral_image)?;
    data.leaves_per_dual.order = sum.index_of(&integral_image)?;
    data.leaves_per_dual.component_count = sum.index_of(&image_lattice)?;
    data.leaves_per_dual.image_lattice = image_lattice;
    data.leaves_per_dual.integral_image = integral_image;

    let square = data.gamma_z.basis_vectors().iter().all(|z| {
        let lhs = data.frame.restrict_covector(&data.p0_hat(z));
        let rhs: Vec<Rat> = hmap.mul_vec(&data.p0(z)).iter().map(|x| -x).collect();
        lhs == rhs
    });
    data.checks = SesChecks {
        gamma_z_rank: data.gamma_z.rank() == (n - l) + l,
        p0_onto_gamma_h: p0_img == gamma_h_coords,
        p0_hat_into_gamma_s_hat: data.gamma_s_hat.contains_lattice(&p0h_img)
            && data.gamma_s_hat.rank() == n - l + 2 * r,
        commuting_square: square,
        counts_match: data.image_index == data.fiber_counts.0
            && data.leaf_index == data.fiber_counts.1
            && data.leaves_per_dual.order == data.fiber_counts.1
            && data.leaves_per_dual.component_count == data.fiber_counts.0,
    };
    Ok(data)
}

/// The dual two-form: base part `F⁰`, mixed part `−b₁` and fiber part
/// `−Σ (mᵢ/nᵢ) dsᵢ∧ds_{r+i}` with `sⱼ` the frame coordinates of `q(ŝ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DualForm {
    pub base: RatMatrix,
    /// Columns are ambient vectors of `V` paired with `ŝ`.
    pub mixed: RatMatrix,
    /// Gram matrix on the ambient dual coordinates.
    pub fiber_ambient: RatMatrix,
    /// Gram matrix on the Γ_Ŝ basis.
    pub fiber: RatMatrix,
    /// `−mᵢ/nᵢ`.
    pub coefficients: Vec<Rat>,
}

#[derive(Clone, Debug)]
pub struct TwoFormCheck {
    pub dual: DualForm,
    /// `p_Z*F + P|_Z − p̂_Z*F̂` on the basis `(base directions, Γ_Z basis)`.
    pub residual: RatMatrix,
}

impl TwoFormCheck {
    pub fn holds(&self) -> bool {
        self.residual.is_zero()
    }
}

pub fn dual_form(brane: &Brane, data: &DualData) -> DualForm {
    let td = &data.rational_type;
    let (n, r) = (data.n(), td.half_rank());
    // s = Pᵀ·Bsᵀ·ξ
    let t = td.frame.to_rat().transpose().mul(&brane.sub.basis().transpose());
    let mut d = RatMatrix::zeros(t.rows(), t.rows());
    let mut coefficients = Vec::with_capacity(r);
    for (i, (ni, mi)) in td.pairs.iter().enumerate() {
        let c = -Rat::new(mi.clone(), ni.clone());
        d[(i, i + r)] = c.clone();
        d[(i + r, i)] = -c.clone();
        coefficients.push(c);
    }
    let fiber_ambient = t.transpose().mul(&d).mul(&t);
    let bh = data.gamma_s_hat.basis();
    let fiber = bh.transpose().mul(&fiber_ambient).mul(&bh);
    debug_assert_eq!(fiber_ambient.rows(), n);
    DualForm { base: brane.family.base_form.clone(), mixed: brane.family.b1.neg(), fiber_ambient, fiber, coefficients }
}

/// Evaluates `p_Z*F + P|_Z − p̂_Z*F̂` exactly on a frame of the tangent space of Z.
pub fn dual_two_form(brane: &Brane, data: &DualData) -> TwoFormCheck {
    let dual = dual_form(brane, data);
    let fam = &brane.family;
    let k = fam.base_dim();
    let h = brane.fiber_form();
    let zs = data.gamma_z.basis_vectors();
    let dim = k + zs.len();
    let tangent = |a: usize| -> (Vec<Rat>, Vec<Rat>) {
        let mut y = vec![Rat::zero(); k];
        let mut z = vec![Rat::zero(); data.l() + data.n()];
        if a < k {
            y[a] = Rat::one();
        } else {
            z = zs[a - k].clone();
        }
        (y, z)
    };
    struct Pieces {
        y: Vec<Rat>,
        s: Vec<Rat>,
        s_hat: Vec<Rat>,
        v: Vec<Rat>,
        xi: Vec<Rat>,
        gy: Vec<Rat>,
        by: Vec<Rat>,
    }
    let pieces: Vec<Pieces> = (0..dim)
        .map(|a| {
            let (y, z) = tangent(a);
            let s = data.p0(&z);
            let s_hat = data.p0_hat(&z);
            let gy = fam.g1.mul_vec(&y);
            let by = fam.b1.mul_vec(&y);
            let v: Vec<Rat> = data.frame.embed_vector(&s).iter().zip(&by).map(|(a, b)| a + b).collect();
            let lg = data.frame.lift_covector(&gy);
            let xi: Vec<Rat> = s_hat.iter().zip(&lg).map(|(a, b)| a - b).collect();
            Pieces { y, s, s_hat, v, xi, gy, by }
        })
        .collect();
    let residual = RatMatrix::from_fn(dim, dim, |a, b| {
        let (p, q) = (&pieces[a], &pieces[b]);
        let base = fam.base_form.bilinear(&p.y, &q.y);
        let pull_f = &base + dot(&p.gy, &q.s) - dot(&q.gy, &p.s) + h.bilinear(&p.s, &q.s);
        let poincare = dot(&p.xi, &q.v) - dot(&q.xi, &p.v);
        let mixed_hat = dot(&p.by, &q.s_hat) - dot(&q.by, &p.s_hat);
        let pull_fhat = &base - mixed_hat + dual.fiber_ambient.bilinear(&p.s_hat, &q.s_hat);
        pull_f + poincare - pull_fhat
    });
    TwoFormCheck { dual, residual }
}

/// `c = −ĉ` reduced mod 1: the leaf whose bundle is trivial on the fibers of `p̂_Z`.
pub fn select_unique_dual(twist: &[Rat]) -> Vec<Rat> {
    twist.iter().map(|x| frac(&-x)).collect()
}

/// Checks `ĉ + c ∈ H(V_S) + Γ_S^∨`, i.e. the character `ĉ + c` is trivial on `ker H ∩ Γ_S`.
pub fn is_fiber_trivial(h: &RatMatrix, twist: &[Rat], c: &[Rat]) -> bool {
    let sum: Vec<Rat> = twist.iter().zip(c).map(|(a, b)| a + b).collect();
    let den = Rat::from_integer(h.common_denominator());
    let hi = h.scale(&den).to_int().expect("scaled to integers");
    let ker = integer_kernel(&hi);
    (0..ker.cols()).all(|j| {
        let g: Vec<Rat> = ker.col(j).into_iter().map(Rat::from_integer).collect();
        dot(&sum, &g).is_integer()
    })
}

/// Dual brane data at one base point.
#[derive(Clone, Debug)]
pub struct FiberDual {
    pub base_point: Vec<Rat>,
    pub selected_c: Vec<Rat>,
    /// Lift `c̄ ∈ V*` with zero Ann(V_S)-component: the translation of Ŝ.
    pub dual_translation: Vec<Rat>,
    /// `Ê = (p̂₀)_*L_c` on the Γ_Ŝ coordinates, rank d².
    pub e_hat: UnitaryFactor,
    /// `L̂` with `Ê ≅ L̂ ⊗ U(d)`.
    pub l_hat: UnitaryFactor,
    pub conjugator: Intertwiner,
    pub curvature_matches: bool,
    pub leaf_checks: Vec<LeafCheck>,
}

#[derive(Clone, Debug)]
pub struct LeafCheck {
    pub shift: Vec<Rat>,
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct TDualReport {
    pub data: DualData,
    pub two_form: TwoFormCheck,
    pub fibers: Vec<FiberDual>,
}

impl TDualReport {
    pub fn dual_bundle(&self) -> Option<&UnitaryFactor> {
        self.fibers.first().map(|f| &f.l_hat)
    }
}

/// `L_c` on Z₀ in Γ_Z coordinates: curvature `−p₀*F`, values
/// `χ_{L₀}(p₀λ)·exp(−2πi p̂₀(λ)(b) + 2πi c(p₀λ))`.
pub fn l_c_factor(
    data: &DualData,
    fiber_form: &RatMatrix,
    twist: &[Rat],
    b: &[Rat],
    c: &[Rat],
) -> Result<UnitaryFactor, TDualError> {
    let l = data.l();
    let f = AlternatingForm::standard(fiber_form.clone())?;
    let chi = Semicharacter::canonical(&f, twist.to_vec())?;
    let l0 = canonical_factor_u1(&f, &chi)?;
    let p0 = data.p0_matrix();
    let p0h = data.p0_hat_matrix();
    let kz = p0.cols();
    let curvature = p0.transpose().mul(fiber_form).mul(&p0).neg();
    let mut gens = Vec::with_capacity(kz);
    for j in 0..kz {
        let s = p0.col(j);
        let m: Vec<Int> = s.iter().map(|x| x.to_integer()).collect();
        debug_assert!(s.iter().all(|x| x.is_integer()) && m.len() == l);
        let turns = dot(c, &s) - dot(&p0h.col(j), b);
        gens.push(l0.holonomy(&m).scaled(&Phase::turns(&turns)));
    }
    Ok(UnitaryFactor::new(Lattice::standard(kz), curvature, gens, vec![Rat::zero(); kz], 1))
}

/// Pushes a factor on Γ_Z coordinates forward along `p̂₀`: projection with kernel
/// `Γ_Z ∩ (ker H ⊕ 0)`, then the isogeny `p̂₀(Γ_Z) ⊆ Γ_Ŝ`.
pub fn push_to_dual(data: &DualData, lz: &UnitaryFactor) -> Result<UnitaryFactor, TDualError> {
    let p0h = data.p0_hat_matrix();
    let ker = integer_kernel(&p0h.to_int().ok_or(TDualError::InvalidBrane("Γ_Z not integral".into()))?);
    let kernel = Lattice::from_int_matrix(&ker);
    let images = |proj: &TorusProjection| -> Result<RatMatrix, TDualError> {
        let kr = proj.fiber_rank();
        let cols: Vec<Vec<Rat>> = (kr..proj.source.rank())
            .map(|j| {
                let zc = proj.completion.col(j);
                let amb = p0h.mul_vec(&zc.iter().map(|x| Rat::from_integer(x.clone())).collect::<Vec<_>>());
                data.gamma_s_hat
                    .rat_coords(&amb)
                    .ok_or(TDualError::InvalidBrane("p̂₀ image outside Γ_Ŝ".into()))
            })
            .collect::<Result<_, _>>()?;
        Ok(RatMatrix::from_cols(data.dual_dim(), &cols))
    };
    push_along(lz, kernel, data.dual_dim(), images)
}

/// Pushes a factor on Γ_Z coordinates forward along `p₀` onto Γ_S coordinates.
pub fn push_to_source(data: &DualData, lz: &UnitaryFactor) -> Result<UnitaryFactor, TDualError> {
    let p0 = data.p0_matrix();
    let ker = integer_kernel(&p0.to_int().ok_or(TDualError::InvalidBrane("Γ_Z not integral".into()))?);
    let kernel = Lattice::from_int_matrix(&ker);
    let images = |proj: &TorusProjection| -> Result<RatMatrix, TDualError> {
        let kr = proj.fiber_rank();
        let cols: Vec<Vec<Rat>> = (kr..proj.source.rank())
            .map(|j| p0.mul_vec(&proj.completion.col(j).iter().map(|x| Rat::from_integer(x.clone())).collect::<Vec<_>>()))
            .collect();
        Ok(RatMatrix::from_cols(data.l(), &cols))
    };
    push_along(lz, kernel, data.l(), images)
}

fn push_along(
    lz: &UnitaryFactor,
    kernel: Lattice,
    target_dim: usize,
    images: impl Fn(&TorusProjection) -> Result<RatMatrix, TDualError>,
) -> Result<UnitaryFactor, TDualError> {
    let proj = TorusProjection::new(lz.lattice.clone(), kernel)?;
    let descended = match pushforward_projection(lz, &proj)? {
        ProjectionPushforward::Descended(f) => f,
        ProjectionPushforward::Zero => {
            return Err(PushforwardError::NotTrivialOnKernel("fiber holonomy of the leaf bundle".into()).into())
        }
    };
    let mq = images(&proj)?;
    let moved = descended.reembed(&mq);
    let iso = Isogeny::new(moved.lattice.clone(), Lattice::standard(target_dim))?;
    Ok(pushforward_isogeny(&moved, &iso)?)
}

/// Options for [`brane_tdual`].
#[derive(Clone, Debug)]
pub struct TDualOptions {
    pub seed: u64,
    /// Base points for family branes; ignored over a point.
    pub base_points: Vec<Vec<Rat>>,
    /// Denominator of the rational grid of continuous leaf shifts.
    pub leaf_grid: i64,
    pub tol: f64,
}

impl Default for TDualOptions {
    fn default() -> Self {
        TDualOptions { seed: 0, base_points: Vec::new(), leaf_grid: 3, tol: crate::numeric::DEFAULT_TOL }
    }
}

pub fn brane_tdual(brane: &Brane, opts: &TDualOptions) -> Result<TDualReport, TDualError> {
    let data = dual_data(brane)?;
    let two_form = dual_two_form(brane, &data);
    let mut fibers = Vec::new();
    if let Payload::Bundle { fiber_form, .. } = &brane.payload {
        let k = brane.family.base_dim();
        let points = if k == 0 || opts.base_points.is_empty() { vec![vec![Rat::zero(); k]] } else { opts.base_points.clone() };
        for y in points {
            fibers.push(fiber_dual(brane, &data, fiber_form, &two_form.dual, &y, opts)?);
        }
    }
    Ok(TDualReport { data, two_form, fibers })
}

fn fiber_dual(
    brane: &Brane,
    data: &DualData,
    fiber_form: &RatMatrix,
    fhat: &DualForm,
    y: &[Rat],
    opts: &TDualOptions,
) -> Result<FiberDual, TDualError> {
    let (twist, b) = brane.at(y);
    let c = select_unique_dual(&twist);
    assert!(is_fiber_trivial(fiber_form, &twist, &c));
    let lc = l_c_factor(data, fiber_form, &twist, &b, &c)?;
    let e_hat = push_to_dual(data, &lc)?;
    let curvature_matches = e_hat.curvature == fhat.fiber;
    let d = data.dual_rank.clone();
    let (l_hat, conjugator) = if d.is_one() {
        let id = ud_tensor_decompose(&e_hat, &e_hat)?;
        (e_hat.clone(), id)
    } else {
        let sp = split_projectively_flat(&e_hat, opts.seed)?;
        (sp.factor, sp.conjugator)
    };
    let leaf_checks = leaf_independence(data, fiber_form, &twist, &b, &c, &e_hat, opts)?;
    Ok(FiberDual {
        base_point: y.to_vec(),
        selected_c: c.clone(),
        dual_translation: data.frame.lift_covector(&c),
        e_hat,
        l_hat,
        conjugator,
        curvature_matches,
        leaf_checks,
    })
}

/// Compares `Ê_{c+h}` with `t_h^*Ê_c` for `h` running over the finite leaf
/// representatives and over a rational grid in `H(V_S)`.
fn leaf_independence(
    data: &DualData,
    fiber_form: &RatMatrix,
    twist: &[Rat],
    b: &[Rat],
    c: &[Rat],
    e_hat: &UnitaryFactor,
    opts: &TDualOptions,
) -> Result<Vec<LeafCheck>, TDualError> {
    let l = data.l();
    let hmap = fiber_form.transpose();
    let mut shifts: Vec<Vec<Rat>> = Vec::new();
    let lpd = &data.leaves_per_dual;
    if let Ok(q) = lpd.image_lattice.sum(&lpd.integral_image).and_then(|s| s.quotient(&lpd.integral_image)) {
        shifts.extend(q.coset_reps.iter().cloned());
    }
    let g = opts.leaf_grid.max(1);
    for j in 0..l {
        for num in 1..g {
            let mut u = vec![Rat::zero(); l];
            u[j] = Rat::new(Int::from(num), Int::from(g));
            shifts.push(hmap.mul_vec(&u));
        }
    }
    shifts.retain(|h| h.iter().any(|x| !x.is_zero()));
    let checks: Vec<LeafCheck> = shifts
        .into_iter()
        .map(|h| {
            let c2: Vec<Rat> = c.iter().zip(&h).map(|(a, b)| a + b).collect();
            let lc2 = l_c_factor(data, fiber_form, twist, b, &c2)?;
            let e2 = push_to_dual(data, &lc2)?;
            let shift = data
                .gamma_s_hat
                .rat_coords(&data.frame.lift_covector(&h))
                .ok_or(TDualError::InvalidBrane("leaf shift outside V_Ŝ".into()))?;
            let moved = e_hat.translate(&shift);
            let residual = equivalence(&moved, &e2).map_or(f64::INFINITY, |eq| eq.conjugator.residual);
            if residual > opts.tol {
                return Err(TDualError::LeafDependent(format!("{h:?}")));
            }
            Ok(LeafCheck { shift: h, residual })
        })
        .collect::<Result<_, TDualError>>()?;
    Ok(checks)
}

/// The dual brane when `d = 1`, normalised to the lift conventions.
pub fn dual_brane(report: &TDualReport) -> Result<Brane, TDualError> {
    let data = &report.data;
    if !data.dual_rank.is_one() {
        return Err(TDualError::NotLineBundle(data.dual_rank.clone()));
    }
    let fiber = report.fibers.first().ok_or(TDualError::InvalidBrane("no bundle payload".into()))?;
    // Brane::new moves c̄ into the complement of V_Ŝ and shifts the twist accordingly
    let moved = &fiber.l_hat;
    let form = AlternatingForm::standard(moved.curvature.clone())?;
    let dim = moved.dim();
    let values: Vec<Phase> = (0..dim)
        .map(|j| {
            let mut e = vec![Int::zero(); dim];
            e[j] = Int::one();
            Phase::new(moved.holonomy(&e).phases[0].exponent().clone())
        })
        .collect();
    let chi = Semicharacter::from_values(&form, &values)?;
    let translation = reduce_mod_one(&fiber.dual_translation);
    Brane::point(
        data.gamma_s_hat.clone(),
        translation,
        Payload::Bundle { fiber_form: moved.curvature.clone(), twist: chi.twist },
    )
}

/// Result of running the pipeline twice on a `d = 1` brane.
#[derive(Clone, Debug)]
pub struct DoubleDual {
    pub dual: Brane,
    pub double: Brane,
    pub same_lattice: bool,
    pub same_form: bool,
    /// `b'' ≡ σ b` and `ĉ'' ≡ σ ĉ` mod 1 for the recorded sign `σ`.
    pub translation_sign: Option<i8>,
    pub twist_sign: Option<i8>,
}

pub fn double_dual(brane: &Brane, opts: &TDualOptions) -> Result<DoubleDual, TDualError> {
    let first = brane_tdual(brane, opts)?;
    let dual = dual_brane(&first)?;
    let second = brane_tdual(&dual, opts)?;
    let double = dual_brane(&second)?;
    let same_lattice = double.sub == brane.sub;
    let same_form = double.fiber_form() == brane.fiber_form();
    let sign_of = |a: &[Rat], b: &[Rat]| -> Option<i8> {
        let plus = reduce_mod_one(a) == reduce_mod_one(b);
        let neg: Vec<Rat> = b.iter().map(|x| -x).collect();
        let minus = reduce_mod_one(a) == reduce_mod_one(&neg);
        if plus {
            Some(1)
        } else if minus {
            Some(-1)
        } else {
            None
        }
    };
    let translation_sign = sign_of(&double.translation, &brane.translation);
    let twist_sign = match (&double.payload, &brane.payload) {
        (Payload::Bundle { twist: t2, .. }, Payload::Bundle { twist: t1, .. }) => sign_of(t2, t1),
        _ => None,
    };
    Ok(DoubleDual { dual, double, same_lattice, same_form, translation_sign, twist_sign })
}

/// `(E, Ê)` with `E ⊗ U(m) ≅ (p_Z)_*L_Z` and `(p̂_Z)_*L̂_Z ≅ Ê ⊗ U(n)`.
#[derive(Clone, Debug)]
pub struct HigherRankPair {
    pub data: DualData,
    pub l_z: UnitaryFactor,
    pub l_hat_z: UnitaryFactor,
    pub poincare_z: UnitaryFactor,
    pub poincare_identity: bool,
    pub pushed: UnitaryFactor,
    pub pushed_hat: UnitaryFactor,
    pub e: UnitaryFactor,
    pub e_hat: UnitaryFactor,
    pub e_conjugator: Intertwiner,
    pub e_hat_conjugator: Intertwiner,
    pub ranks: (usize, usize),
    pub curvature_matches: (bool, bool),
}

pub fn higher_rank_pair(brane: &Brane, seed: u64) -> Result<HigherRankPair, TDualError> {
    let data = dual_data(brane)?;
    let fhat = dual_form(brane, &data);
    let h = brane.fiber_form();
    let (g, b) = brane.at(&vec![Rat::zero(); brane.family.base_dim()]);
    let p0 = data.p0_matrix();
    let p0h = data.p0_hat_matrix();
    let kz = p0.cols();
    let pulled = p0.transpose().mul(h).mul(&p0);
    let form_z = AlternatingForm::standard(pulled.clone())?;
    let chi0 = Semicharacter::canonical(&form_z, vec![Rat::zero(); kz])?;
    let base = canonical_factor_u1(&form_z, &chi0)?;
    let two = Rat::from_integer(Int::from(2));
    let g_conn: Vec<Rat> = (0..kz).map(|j| &two * dot(&g, &p0.col(j))).collect();
    let b_conn: Vec<Rat> = (0..kz).map(|j| -&two * dot(&b, &p0h.col(j))).collect();
    let l_z = UnitaryFactor { connection: g_conn.clone(), ..base.clone() };
    let l_hat_z = UnitaryFactor { curvature: pulled.neg(), connection: b_conn.clone(), ..base.clone() };
    let poincare_z = UnitaryFactor::new(
        Lattice::standard(kz),
        pulled.scale(&two).neg(),
        vec![MonomialMatrix::identity(1); kz],
        g_conn.iter().zip(&b_conn).map(|(x, y)| y - x).collect(),
        1,
    );
    let poincare_identity = equivalence(&l_z.tensor(&poincare_z)?, &l_hat_z).is_some();
    let pushed = push_to_source(&data, &l_z)?;
    let pushed_hat = push_to_dual(&data, &l_hat_z)?;
    let split = |w: &UnitaryFactor| -> Result<(UnitaryFactor, Intertwiner), TDualError> {
        if w.rank == 1 {
            let id = ud_tensor_decompose(w, w)?;
            return Ok((w.clone(), id));
        }
        let sp = split_projectively_flat(w, seed)?;
        Ok((sp.factor, sp.conjugator))
    };
    let (e, e_conjugator) = split(&pushed)?;
    let (e_hat, e_hat_conjugator) = split(&pushed_hat)?;
    let ranks = (e.rank, e_hat.rank);
    let curvature_matches = (e.curvature == *h, e_hat.curvature == fhat.fiber);
    Ok(HigherRankPair {
        data,
        l_z,
        l_hat_z,
        poincare_z,
        poincare_identity,
        pushed,
        pushed_hat,
        e,
        e_hat,
        e_conjugator,
        e_hat_conjugator,
        ranks,
        curvature_matches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::{int, rat};

    fn skew(a: Rat) -> RatMatrix {
        RatMatrix::from_rows(vec![vec![Rat::zero(), a.clone()], vec![-a, Rat::zero()]])
    }

    fn full(n: usize) -> Lattice {
        Lattice::standard(n)
    }

    fn zeros(n: usize) -> Vec<Rat> {
        vec![Rat::zero(); n]
    }

    fn bundle(sub: Lattice, b: Vec<Rat>, f: RatMatrix, twist: Vec<Rat>) -> Brane {
        Brane::point(sub, b, Payload::Bundle { fiber_form: f, twist }).unwrap()
    }

    #[test]
    fn half_form_on_the_two_torus() {
        let brane = Brane::point(full(2), zeros(2), Payload::Form(skew(rat(1, 2)))).unwrap();
        let data = dual_data(&brane).unwrap();
        let expect = Lattice::from_int_cols(4, &[vec![int(2), int(0), int(0), int(-1)], vec![int(0), int(2), int(1), int(0)]]);
        assert_eq!(data.gamma_z, expect);
        assert_eq!(data.gamma_s_hat, full(2));
        assert_eq!(data.fiber_counts, (int(1), int(4)));
        assert_eq!(data.leaves_per_dual.order, int(4));
        assert_eq!(data.dual_moduli_dim, 0);
        assert!(data.checks.all());
        let tf = dual_two_form(&brane, &data);
        assert!(tf.holds());
        assert_eq!(tf.dual.coefficients, vec![rat(-2, 1)]);
        assert_eq!(tf.dual.fiber, skew(rat(-2, 1)));
    }

    #[test]
    fn section_and_principal_cases() {
        let point = Brane::point(Lattice::zero(2), vec![rat(1, 3), rat(0, 1)], Payload::Form(RatMatrix::zeros(0, 0))).unwrap();
        let data = dual_data(&point).unwrap();
        assert_eq!(data.gamma_z, full(2));
        assert_eq!(data.gamma_s_hat, full(2));
        assert!(data.checks.all());
        let principal = Brane::point(full(2), zeros(2), Payload::Form(skew(rat(1, 1)))).unwrap();
        let data = dual_data(&principal).unwrap();
        assert_eq!(data.gamma_s_hat, full(2));
        assert_eq!(data.dual_rank, int(1));
        assert!(data.checks.all());
        assert!(dual_two_form(&principal, &data).holds());
    }

    #[test]
    fn three_halves_counts() {
        let brane = Brane::point(full(2), zeros(2), Payload::Form(skew(rat(3, 2)))).unwrap();
        let data = dual_data(&brane).unwrap();
        assert_eq!(data.fiber_counts, (int(9), int(4)));
        assert_eq!(data.dual_rank, int(3));
        assert!(data.checks.all());
    }

    #[test]
    fn space_filling_polarization_form() {
        // base (x, y) carries (1/d) dy∧dx, the fiber torus (q, p) carries d dp∧dq
        let d = 3;
        let mut base = RatMatrix::zeros(2, 2);
        base[(1, 0)] = rat(1, d);
        base[(0, 1)] = rat(-1, d);
        let fam = FamilyData {
            base_form: base.clone(),
            g0: zeros(2),
            g1: RatMatrix::zeros(2, 2),
            b1: RatMatrix::zeros(2, 2),
        };
        let brane = Brane::new(full(2), zeros(2), Payload::Form(skew(rat(-d, 1))), fam).unwrap();
        let data = dual_data(&brane).unwrap();
        let tf = dual_two_form(&brane, &data);
        assert!(tf.holds());
        assert_eq!(tf.dual.base, base);
        // −(1/d) dp̂∧dq̂
        assert_eq!(tf.dual.fiber, skew(rat(1, d)));
    }

    #[test]
    fn flat_character_dualizes_to_a_point() {
        let brane = bundle(full(2), zeros(2), RatMatrix::zeros(2, 2), vec![rat(1, 3), rat(0, 1)]);
        let rep = brane_tdual(&brane, &TDualOptions::default()).unwrap();
        assert_eq!(rep.data.gamma_s_hat, Lattice::zero(2));
        let fib = &rep.fibers[0];
        assert_eq!(fib.selected_c, vec![rat(2, 3), rat(0, 1)]);
        assert_eq!(reduce_mod_one(&fib.dual_translation), vec![rat(2, 3), rat(0, 1)]);
        assert_eq!(fib.l_hat.rank, 1);
        assert!(fib.curvature_matches);
        assert_eq!(select_unique_dual(&zeros(2)), zeros(2));
    }

    #[test]
    fn nondegenerate_form_absorbs_the_twist() {
        let twist = vec![rat(1, 5), rat(2, 7)];
        let h = skew(rat(1, 1));
        assert!(is_fiber_trivial(&h, &twist, &zeros(2)));
        assert!(!is_fiber_trivial(&RatMatrix::zeros(2, 2), &twist, &zeros(2)));
        assert!(is_fiber_trivial(&RatMatrix::zeros(2, 2), &twist, &select_unique_dual(&twist)));
    }

    #[test]
    fn principal_bundle_dual_and_double_dual() {
        let brane = bundle(full(2), zeros(2), skew(rat(1, 1)), vec![rat(1, 4), rat(1, 3)]);
        let rep = brane_tdual(&brane, &TDualOptions::default()).unwrap();
        let fib = &rep.fibers[0];
        assert_eq!(fib.l_hat.rank, 1);
        assert!(fib.curvature_matches);
        assert_eq!(fib.l_hat.curvature, skew(rat(-1, 1)));
        assert!(!fib.leaf_checks.is_empty());
        let dd = double_dual(&brane, &TDualOptions::default()).unwrap();
        assert!(dd.same_lattice && dd.same_form);
        assert_eq!((dd.translation_sign, dd.twist_sign), (Some(1), Some(1)));
        assert_eq!(dd.double, brane);
    }

    #[test]
    fn degree_two_space_filling_dual_is_clock_and_shift() {
        let brane = bundle(full(2), zeros(2), skew(rat(2, 1)), zeros(2));
        let rep = brane_tdual(&brane, &TDualOptions::default()).unwrap();
        let fib = &rep.fibers[0];
        assert_eq!(fib.e_hat.rank, 4);
        assert_eq!(fib.l_hat.rank, 2);
        assert_eq!(fib.l_hat.curvature, skew(rat(-1, 2)));
        let moves = fib.l_hat.generators.iter().filter(|g| g.perm != vec![0, 1]).count();
        assert_eq!(moves, 1);
        // the same bundle through φ-duality
        let f = AlternatingForm::standard(skew(rat(2, 1))).unwrap();
        let chi = Semicharacter::canonical(&f, zeros(2)).unwrap();
        let l0 = canonical_factor_u1(&f, &chi).unwrap();
        let phi = crate::pushforward::phi_dual_bundle(&l0, &Default::default()).unwrap();
        assert!(equivalence(&phi.full, &fib.e_hat).is_some());
    }

    #[test]
    fn sub_torus_with_degenerate_form() {
        // Γ_S = span{e1, e2} in ℤ³ with a flat twist on the first direction
        let sub = Lattice::from_int_cols(3, &[vec![int(1), int(0), int(0)], vec![int(0), int(1), int(0)]]);
        let brane = bundle(sub, vec![rat(0, 1), rat(0, 1), rat(1, 3)], RatMatrix::zeros(2, 2), vec![rat(1, 3), rat(1, 5)]);
        let rep = brane_tdual(&brane, &TDualOptions::default()).unwrap();
        assert!(rep.data.checks.all());
        assert!(rep.two_form.holds());
        assert_eq!(rep.data.gamma_s_hat.rank(), 1);
        let fib = &rep.fibers[0];
        assert!(fib.curvature_matches);
        let dd = double_dual(&brane, &TDualOptions::default()).unwrap();
        assert!(dd.same_lattice && dd.same_form, "{:?}", dd);
        assert_eq!(dd.double, brane);
        assert_eq!(dd.dual.translation, vec![rat(2, 3), rat(4, 5), rat(0, 1)]);
    }

    #[test]
    fn affine_family_brane() {
        let sub = Lattice::from_int_cols(3, &[vec![int(1), int(0), int(0)], vec![int(0), int(1), int(0)]]);
        let fam = FamilyData {
            base_form: skew(rat(1, 2)),
            g0: vec![rat(1, 5), rat(0, 1)],
            g1: RatMatrix::from_rows(vec![vec![rat(1, 1), rat(0, 1)], vec![rat(0, 1), rat(-1, 3)]]),
            b1: RatMatrix::from_rows(vec![vec![rat(0, 1), rat(0, 1)], vec![rat(0, 1), rat(0, 1)], vec![rat(1, 2), rat(1, 1)]]),
        };
        let brane = Brane::new(sub, zeros(3), Payload::Bundle { fiber_form: skew(rat(1, 1)), twist: zeros(2) }, fam).unwrap();
        let opts = TDualOptions {
            base_points: vec![vec![rat(0, 1), rat(0, 1)], vec![rat(1, 3), rat(-1, 2)]],
            ..Default::default()
        };
        let rep = brane_tdual(&brane, &opts).unwrap();
        assert!(rep.two_form.holds());
        assert_eq!(rep.two_form.dual.base, skew(rat(1, 2)));
        assert_eq!(rep.fibers.len(), 2);
        assert!(rep.fibers.iter().all(|f| f.curvature_matches && f.l_hat.rank == 1));
    }

    #[test]
    fn higher_rank_pairs() {
        let cases = [(rat(1, 2), (2, 1)), (rat(3, 2), (2, 3)), (rat(1, 1), (1, 1))];
        for (h, ranks) in cases {
            let brane = Brane::point(full(2), vec![rat(0, 1), rat(0, 1)], Payload::Form(skew(h.clone()))).unwrap();
            let pair = higher_rank_pair(&brane, 5).unwrap();
            assert_eq!(pair.ranks, ranks, "H = {h}");
            assert!(pair.poincare_identity);
            assert_eq!(pair.curvature_matches, (true, true), "H = {h}");
        }
    }
}
