//! Pushforwards of unitary factors along isogenies and projections, the
//! decomposition of pushed-forward flat bundles into characters, and the
//! splitting `(φ_L)_*L⁻¹ ≅ L̂ ⊗ U(d)`.

use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::bundles::{
    canonical_factor_u1, equivalence, phi_map, BundleError, MonomialMatrix, Phase, Semicharacter,
    UnitaryFactor,
};
use crate::forms::{gamma_h, symplectic_normal_form, AlternatingForm, FormError};
use crate::lattice::{complete_basis, CosetReps, FiniteAbelianQuotient, Lattice, LatticeError};
use crate::mat::{frac, lcm_denoms, rat_int, Int, IntMatrix, Rat, RatMatrix};
use crate::numeric::{CMat, Intertwiner};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use num_integer::Integer;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PushforwardError {
    #[error("factor does not live on the source lattice of the map")]
    LatticeMismatch,
    #[error("bundle is not flat")]
    NotFlat,
    #[error("curvature does not vanish on the fibers of the projection")]
    NotFiberFlat,
    #[error(
        "bundle is not trivial on K(L)_0 (holonomy {0}); translate it so that the restriction \
         becomes trivial and retry"
    )]
    NotTrivialOnKernel(String),
    #[error("no unitary conjugator within tolerance (best residual {0:e})")]
    Inequivalent(f64),
    #[error("frame is not symplectic for the curvature")]
    BadFrame,
    #[error("curvature is not integral")]
    NotIntegral,
    #[error(transparent)]
    Bundle(#[from] BundleError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Form(#[from] FormError),
}

/// Isogeny `V/Γ_X → V/Γ_Y` induced by the identity of `V`, `Γ_X ⊆ Γ_Y`.
#[derive(Clone, Debug)]
pub struct Isogeny {
    pub source: Lattice,
    pub target: Lattice,
    pub quotient: FiniteAbelianQuotient,
}

impl Isogeny {
    pub fn new(source: Lattice, target: Lattice) -> Result<Self, PushforwardError> {
        let quotient = target.quotient(&source)?;
        Ok(Isogeny { source, target, quotient })
    }

    pub fn degree(&self) -> Int {
        self.quotient.order()
    }

    pub fn box_reps(&self) -> CosetReps {
        CosetReps::boxed(self.quotient.clone())
    }
}

fn check_source(l: &UnitaryFactor, reps: &CosetReps) -> Result<(), PushforwardError> {
    if &l.lattice != reps.quotient.small() {
        return Err(PushforwardError::LatticeMismatch);
    }
    Ok(())
}

/// `f_*L` in normal form, with box representatives.
pub fn pushforward_isogeny(l: &UnitaryFactor, f: &Isogeny) -> Result<UnitaryFactor, PushforwardError> {
    pushforward_isogeny_with(l, &f.box_reps())
}

/// `f_*L` in normal form for a chosen set of representatives `λᵢ`.
///
/// Block `(i, σ(i))` of `U(λ)` is `exp(iπ(F(λ_σ,Λ) − F(λ,λᵢ)))·U_L(Λ)` where
/// `λᵢ + λ = λ_σ + Λ`; the connection keeps its constant part.
pub fn pushforward_isogeny_with(l: &UnitaryFactor, reps: &CosetReps) -> Result<UnitaryFactor, PushforwardError> {
    check_source(l, reps)?;
    let target = reps.quotient.big().clone();
    let deg = reps.len();
    let k = target.rank();
    let dl = l.rank;
    let mut gens = Vec::with_capacity(k);
    for b in target.basis_vectors() {
        let mut perm = vec![0; deg * dl];
        let mut phases = vec![Phase::one(); deg * dl];
        for (i, rep) in reps.reps.iter().enumerate() {
            let shifted: Vec<Rat> = rep.iter().zip(&b).map(|(x, y)| x + y).collect();
            let (s, big_l) = reps.reduce(&shifted)?;
            let q = l.form_value(&reps.reps[s], &big_l) - l.form_value(&b, rep);
            let u = l.semirep(&l.lattice.coords(&big_l).ok_or(PushforwardError::LatticeMismatch)?);
            for a in 0..dl {
                perm[i * dl + a] = s * dl + u.perm[a];
                phases[i * dl + a] = u.phases[a].mul(&Phase::new(q.clone()));
            }
        }
        gens.push(MonomialMatrix { perm, phases });
    }
    let c = coords_matrix(&l.lattice, &target);
    let curvature = c.transpose().mul(&l.curvature).mul(&c);
    let connection = c.transpose().mul_vec(&l.connection);
    Ok(UnitaryFactor::new(target, curvature, gens, connection, deg * dl))
}

/// Coordinates of `target`'s basis in the basis of `source` (rational).
fn coords_matrix(source: &Lattice, target: &Lattice) -> RatMatrix {
    let cols: Vec<Vec<Rat>> = target
        .basis_vectors()
        .iter()
        .map(|b| source.rat_coords(b).expect("same span"))
        .collect();
    RatMatrix::from_cols(source.rank(), &cols)
}

/// Value of the pushforward factor before the gauge change,
/// `(a_L(v+λ_σ, Λ))` in block `(i, σ(i))`.
pub fn pushforward_raw_value(
    l: &UnitaryFactor,
    reps: &CosetReps,
    v: &[Rat],
    lambda: &[Rat],
) -> Result<MonomialMatrix, PushforwardError> {
    check_source(l, reps)?;
    let deg = reps.len();
    let dl = l.rank;
    let mut perm = vec![0; deg * dl];
    let mut phases = vec![Phase::one(); deg * dl];
    for (i, rep) in reps.reps.iter().enumerate() {
        let shifted: Vec<Rat> = rep.iter().zip(lambda).map(|(x, y)| x + y).collect();
        let (s, big_l) = reps.reduce(&shifted)?;
        let at: Vec<Rat> = v.iter().zip(&reps.reps[s]).map(|(x, y)| x + y).collect();
        let a = l.evaluate(&at, &big_l)?;
        for b in 0..dl {
            perm[i * dl + b] = s * dl + a.perm[b];
            phases[i * dl + b] = a.phases[b].clone();
        }
    }
    Ok(MonomialMatrix { perm, phases })
}

/// Gauge `φ(v) = diag(exp(−iπF(v,λᵢ)))` relating raw and normal-form values:
/// `normal(v,λ) = φ(v+λ)·raw(v,λ)·φ(v)⁻¹`.
pub fn pushforward_gauge(l: &UnitaryFactor, reps: &CosetReps, v: &[Rat]) -> Vec<Phase> {
    reps.reps
        .iter()
        .flat_map(|rep| {
            let p = Phase::new(-l.form_value(v, rep));
            std::iter::repeat(p).take(l.rank)
        })
        .collect()
}

/// Characters of `f_*L` for flat `L`, with exact simultaneous eigenvectors.
#[derive(Clone, Debug)]
pub struct KernelDecomposition {
    /// Characters of `Γ_Y` as covectors on its basis, entries in `[0,1)`.
    pub characters: Vec<Vec<Rat>>,
    /// Eigenvector of each character (unnormalised phases, one per coset).
    pub eigenvectors: Vec<Vec<Phase>>,
}

/// Holonomy character of a flat line bundle, as turns on the lattice basis.
pub fn holonomy_character(l: &UnitaryFactor) -> Result<Vec<Rat>, PushforwardError> {
    if !l.is_flat() || l.rank != 1 {
        return Err(PushforwardError::NotFlat);
    }
    let k = l.dim();
    Ok((0..k)
        .map(|j| {
            let mut e = vec![Int::zero(); k];
            e[j] = Int::one();
            frac(&(l.holonomy(&e).phases[0].exponent() / Rat::from_integer(Int::from(2))))
        })
        .collect())
}

/// Decomposes `f_*L` for flat `L` along the characters of `Γ_Y/Γ_X`
/// (product of Vandermonde matrices in the box basis) and verifies each
/// eigen-relation exactly on the generators.
pub fn kernel_decomposition(l: &UnitaryFactor, f: &Isogeny) -> Result<KernelDecomposition, PushforwardError> {
    let t = holonomy_character(l)?;
    let push = pushforward_isogeny(l, f)?;
    let c = f.target.inclusion_matrix(&f.source)?.to_rat();
    let base = c.transpose().inverse().expect("finite index").mul_vec(&t);
    let reps: Vec<Vec<Int>> = f
        .quotient
        .coset_reps
        .iter()
        .map(|r| f.target.coords(r).expect("representative in Γ_Y"))
        .collect();
    let holonomies: Vec<MonomialMatrix> = (0..f.target.rank())
        .map(|j| {
            let mut e = vec![Int::zero(); f.target.rank()];
            e[j] = Int::one();
            push.holonomy(&e)
        })
        .collect();
    let characters: Vec<Vec<Rat>> = f
        .quotient
        .dual_characters()
        .iter()
        .map(|psi| base.iter().zip(psi).map(|(a, b)| frac(&(a + b))).collect())
        .collect();
    // exponents of exp(iπ·) as integers over a common denominator, so the
    // eigen-relations are checked without rational normalisation
    let hol_exponents = holonomies.iter().flat_map(|h| h.phases.iter().map(Phase::exponent));
    let denom = lcm_denoms(characters.iter().flatten().chain(push.connection.iter()).chain(hol_exponents));
    let period = &denom * Int::from(2);
    let scaled = |q: &Rat| -> Int { (q * rat_int(&denom)).to_integer() };
    let holo_res: Vec<Vec<Int>> = holonomies.iter().map(|h| h.phases.iter().map(|p| scaled(p.exponent())).collect()).collect();
    let conn: Vec<Int> = push.connection.iter().map(scaled).collect();
    let int_dot = |a: &[Int], b: &[Int]| a.iter().zip(b).fold(Int::zero(), |s, (x, y)| s + x * y);
    let mut eigenvectors = Vec::with_capacity(characters.len());
    for chi in &characters {
        let chi_l: Vec<Int> = chi.iter().map(scaled).collect();
        // entry r is exp(2πi χ(x_r) − iπ ω(x_r))
        let vec: Vec<Int> = reps
            .iter()
            .map(|x| (int_dot(&chi_l, x) * Int::from(2) - int_dot(&conn, x)).mod_floor(&period))
            .collect();
        for (j, h) in holonomies.iter().enumerate() {
            let eig = &chi_l[j] * Int::from(2);
            for i in 0..vec.len() {
                let diff = &holo_res[j][i] + &vec[h.perm[i]] - &eig - &vec[i];
                if !diff.mod_floor(&period).is_zero() {
                    return Err(PushforwardError::Inequivalent(f64::NAN));
                }
            }
        }
        eigenvectors.push(vec.into_iter().map(|r| Phase::new(Rat::new(r, denom.clone()))).collect());
    }
    Ok(KernelDecomposition { characters, eigenvectors })
}

/// The fiber `f̂⁻¹(L)` by brute force: all covectors `c` on `Γ_Y` with
/// `c|_{Γ_X} ≡ hol(L)`, enumerated as `C^{-T}(t + n)` with `n` running over
/// the triangular box of `ℤᵏ / Cᵀℤᵏ`.
pub fn enumerate_dual_fiber(l: &UnitaryFactor, f: &Isogeny) -> Result<Vec<Vec<Rat>>, PushforwardError> {
    let t = holonomy_character(l)?;
    let c = f.target.inclusion_matrix(&f.source)?;
    let ct_inv = c.to_rat().transpose().inverse().expect("finite index");
    let k = t.len();
    // Hermite basis of Cᵀℤᵏ is lower triangular; its diagonal bounds a fundamental box
    let image = Lattice::from_int_matrix(&c.transpose());
    let sides: Vec<usize> = (0..k).map(|j| image.numerators()[(j, j)].abs().to_usize().expect("small degree")).collect();
    let total: usize = sides.iter().product();
    let mut out: Vec<Vec<Rat>> = Vec::with_capacity(total);
    for mut idx in 0..total {
        let mut n = vec![Rat::zero(); k];
        for (slot, side) in n.iter_mut().zip(&sides) {
            *slot = Rat::from_integer(Int::from(idx % side));
            idx /= side;
        }
        let rhs: Vec<Rat> = t.iter().zip(&n).map(|(a, b)| a + b).collect();
        out.push(ct_inv.mul_vec(&rhs).iter().map(frac).collect());
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// Projection `V/Γ → (V/K_ℝ)/(Γ/K)` for a saturated sublattice `K ⊆ Γ`.
#[derive(Clone, Debug)]
pub struct TorusProjection {
    pub source: Lattice,
    pub kernel: Lattice,
    /// Unimodular `[K | C]` in source lattice coordinates.
    pub completion: IntMatrix,
}

impl TorusProjection {
    pub fn new(source: Lattice, kernel: Lattice) -> Result<Self, PushforwardError> {
        let kc = coords_in(&source, &kernel)?;
        let completion = complete_basis(&kc)?;
        Ok(TorusProjection { source, kernel, completion })
    }

    pub fn fiber_rank(&self) -> usize {
        self.kernel.rank()
    }

    pub fn quotient_rank(&self) -> usize {
        self.source.rank() - self.kernel.rank()
    }

    /// Matrix of the projection from source lattice coordinates to `ℤ^{n−k}`.
    pub fn lattice_map(&self) -> RatMatrix {
        let inv = self.completion.to_rat().inverse().expect("unimodular");
        let rows: Vec<usize> = (self.fiber_rank()..self.source.rank()).collect();
        inv.select_rows(&rows)
    }

    /// Matrix of the projection on ambient vectors.
    pub fn ambient_map(&self) -> RatMatrix {
        let b = self.source.basis();
        let left = b.transpose().mul(&b).inverse().expect("independent").mul(&b.transpose());
        self.lattice_map().mul(&left)
    }
}

/// The sublattice `k` written in the coordinates of `big` (must be saturated there).
fn coords_in(big: &Lattice, k: &Lattice) -> Result<Lattice, PushforwardError> {
    let cols: Vec<Vec<Int>> = k
        .basis_vectors()
        .iter()
        .map(|v| big.coords(v).ok_or(PushforwardError::LatticeMismatch))
        .collect::<Result<_, _>>()?;
    Ok(Lattice::from_int_cols(big.rank(), &cols))
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProjectionPushforward {
    Descended(UnitaryFactor),
    Zero,
}

/// Pushforward along a projection through the sheaf of fiberwise flat sections.
pub fn pushforward_projection(l: &UnitaryFactor, q: &TorusProjection) -> Result<ProjectionPushforward, PushforwardError> {
    if l.lattice != q.source {
        return Err(PushforwardError::LatticeMismatch);
    }
    let p = q.completion.to_rat();
    let g = p.transpose().mul(&l.curvature).mul(&p);
    let kr = q.fiber_rank();
    let n = l.dim();
    for i in 0..kr {
        for j in 0..kr {
            if !g[(i, j)].is_zero() {
                return Err(PushforwardError::NotFiberFlat);
            }
        }
    }
    // the fiber character moves with the base point unless F(K,·) = 0
    if (0..kr).any(|i| (kr..n).any(|j| !g[(i, j)].is_zero())) {
        return Ok(ProjectionPushforward::Zero);
    }
    for i in 0..kr {
        if !l.holonomy(&q.completion.col(i)).phases.iter().all(Phase::is_one)
            || !l.holonomy(&q.completion.col(i)).perm.iter().enumerate().all(|(a, &b)| a == b)
        {
            return Ok(ProjectionPushforward::Zero);
        }
    }
    let rest: Vec<usize> = (kr..n).collect();
    let c = q.completion.select_cols(&rest);
    let curvature = g.sub_block(kr, kr, n - kr, n - kr);
    let gens = l.generators_in_basis(&c);
    let conn = c.to_rat().transpose().mul_vec(&l.connection);
    Ok(ProjectionPushforward::Descended(UnitaryFactor::new(
        Lattice::standard(n - kr),
        curvature,
        gens,
        conn,
        l.rank,
    )))
}

/// Choices entering `φ_L`-duality; all defaults are deterministic.
#[derive(Clone, Debug, Default)]
pub struct PhiDualOptions {
    /// Symplectic frame (columns, lattice coordinates of the nondegenerate part).
    pub frame: Option<IntMatrix>,
    /// Extra covector on the lattice basis, integral on the lattice, twisting `N` by a kernel character.
    pub n_twist: Option<Vec<Rat>>,
    /// Permutation applied to the box representatives of `Γ^∨/F(Γ)`.
    pub rep_permutation: Option<Vec<usize>>,
    /// Shifts of the representatives by elements of `F(Γ)` (coordinates there).
    pub rep_shifts: Option<Vec<Vec<Int>>>,
}

/// Output of the `(φ_L)_*L⁻¹ ≅ L̂ ⊗ U(d)` construction.
#[derive(Clone, Debug)]
pub struct PhiDual {
    pub polarization_type: Vec<Int>,
    pub degree: Int,
    /// `K(L)₀` lattice (lattice coordinates of the input).
    pub kernel: Lattice,
    /// `Γ_Y = Γ₁ ⊕ F⁻¹(Γ₁^∨)` (coordinates of the nondegenerate quotient).
    pub gamma_y: Lattice,
    pub dual_gamma_y: Lattice,
    /// Type-(1,…,1) bundle on `Γ_Y` with `f^*N = L`.
    pub n_bundle: UnitaryFactor,
    /// Projectively flat rank-d bundle on the image of `φ_L`.
    pub l_hat: UnitaryFactor,
    /// `(φ_L)_*L⁻¹`, rank d².
    pub full: UnitaryFactor,
    pub conjugator: Intertwiner,
}

/// Checks that `Pᵀ F P = [[0,D],[−D,0]]` with positive `D`; returns `D`.
pub fn frame_divisors(curvature: &RatMatrix, frame: &IntMatrix) -> Option<Vec<Int>> {
    let n = frame.rows();
    if n % 2 != 0 || frame.cols() != n || !frame.is_unimodular() {
        return None;
    }
    let r = n / 2;
    let p = frame.to_rat();
    let g = p.transpose().mul(curvature).mul(&p);
    let mut d = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let expected_nonzero = (i < r && j == i + r) || (j < r && i == j + r);
            if !expected_nonzero && !g[(i, j)].is_zero() {
                return None;
            }
        }
    }
    for i in 0..r {
        let v = &g[(i, i + r)];
        if !v.is_integer() || !v.is_positive() {
            return None;
        }
        d.push(v.to_integer());
    }
    Some(d)
}

/// `(φ_L)_*L⁻¹`, `L̂ = f̂_*(φ_N)_*N⁻¹` and the conjugator realising `full ≅ ρ∘L̂`.
/// Degenerate curvatures are first descended along `X → X/K(L)₀`.
pub fn phi_dual_bundle(l: &UnitaryFactor, opts: &PhiDualOptions) -> Result<PhiDual, PushforwardError> {
    if l.rank != 1 {
        return Err(PushforwardError::LatticeMismatch);
    }
    if !l.curvature.is_integral() {
        return Err(PushforwardError::NotIntegral);
    }
    let base = l.in_lattice_coords().absorb_connection();
    let n = base.dim();
    let form = base.curvature_form();
    let phi = phi_map(&form)?;
    if phi.kernel_lattice.rank() == 0 {
        let core = nondegenerate_core(&base, opts)?;
        return Ok(PhiDual { kernel: Lattice::zero(n), ..core });
    }
    let kernel = phi.kernel_lattice.clone();
    for v in kernel.basis_vectors() {
        let m = kernel_coords(&v);
        let h = base.holonomy(&m);
        if !h.phases[0].is_one() {
            return Err(PushforwardError::NotTrivialOnKernel(format!("{:?} on {:?}", h.phases[0], m)));
        }
    }
    let q = TorusProjection::new(Lattice::standard(n), kernel.clone())?;
    let ProjectionPushforward::Descended(n0) = pushforward_projection(&base, &q)? else {
        return Err(PushforwardError::NotTrivialOnKernel("fiber character".into()));
    };
    let core = nondegenerate_core(&n0, opts)?;
    // the dual of the quotient map embeds (Γ/K)^∨ into Γ^∨ as Ann(K)
    let embed = q.lattice_map().transpose();
    Ok(PhiDual {
        kernel,
        l_hat: core.l_hat.reembed(&embed),
        full: core.full.reembed(&embed),
        ..core
    })
}

fn kernel_coords(v: &[Rat]) -> Vec<Int> {
    v.iter().map(|q| q.to_integer()).collect()
}

fn nondegenerate_core(l: &UnitaryFactor, opts: &PhiDualOptions) -> Result<PhiDual, PushforwardError> {
    let n = l.dim();
    let g = l.curvature.clone();
    let form = AlternatingForm::standard(g.clone())?;
    let frame = match &opts.frame {
        Some(p) => p.clone(),
        None => symplectic_normal_form(&form)?.basis_change,
    };
    let divisors = frame_divisors(&g, &frame).ok_or(PushforwardError::BadFrame)?;
    let r = n / 2;
    let degree = divisors.iter().fold(Int::one(), |a, d| a * d);
    let p = frame.to_rat();
    let frame_y = RatMatrix::from_fn(n, n, |i, j| {
        if j >= r { &p[(i, j)] / Rat::from_integer(divisors[j - r].clone()) } else { p[(i, j)].clone() }
    });
    let gamma_y = Lattice::from_rat_matrix(&frame_y);
    // twist of χ relative to Γ₁ ⊕ Γ₂: χ(μⱼ) = exp(2πi ĉ(μⱼ)) on frame vectors
    let t: Vec<Rat> = (0..n)
        .map(|j| l.semirep(&frame.col(j)).phases[0].exponent() / Rat::from_integer(Int::from(2)))
        .collect();
    let mut c_amb = p.transpose().inverse().expect("unimodular").mul_vec(&t);
    if let Some(extra) = &opts.n_twist {
        c_amb = c_amb.iter().zip(extra).map(|(a, b)| a + b).collect();
    }
    let by = gamma_y.basis();
    let decomposition = by
        .inverse()
        .expect("full rank")
        .mul(&frame_y)
        .to_int()
        .expect("frame is a basis of Γ_Y");
    let form_y = AlternatingForm::new(gamma_y.clone(), by.transpose().mul(&g).mul(&by))?;
    let twist_y = by.transpose().mul_vec(&c_amb);
    let chi_n = Semicharacter::new(form_y.clone(), decomposition, r, twist_y)?;
    let n_bundle = canonical_factor_u1(&form_y, &chi_n)?;
    debug_assert!(equivalence(l, &n_bundle.pullback(&l.lattice, &RatMatrix::identity(n))?).is_some());

    let map = g.transpose();
    let minv = map.inverse().ok_or(PushforwardError::NotIntegral)?;
    let dual = Lattice::standard(n);
    let img_l = l.lattice.image(&map);
    let img_n = gamma_y.image(&map);
    let dual_gamma_y = gamma_y.dual()?;
    debug_assert_eq!(img_n, dual_gamma_y);
    let l_inv = l.dual().pullback(&img_l, &minv)?;
    let n_inv = n_bundle.dual().pullback(&img_n, &minv)?;
    let iso_full = Isogeny::new(img_l.clone(), dual.clone())?;
    let reps = custom_reps(&iso_full, opts)?;
    let full = pushforward_isogeny_with(&l_inv, &reps)?;
    let l_hat = pushforward_isogeny(&n_inv, &Isogeny::new(img_n, dual)?)?;
    let conjugator = ud_tensor_decompose(&full, &l_hat)?;
    Ok(PhiDual {
        polarization_type: divisors,
        degree,
        kernel: Lattice::zero(n),
        gamma_y,
        dual_gamma_y,
        n_bundle,
        l_hat,
        full,
        conjugator,
    })
}

fn custom_reps(f: &Isogeny, opts: &PhiDualOptions) -> Result<CosetReps, PushforwardError> {
    let mut reps = f.quotient.coset_reps.clone();
    if let Some(shifts) = &opts.rep_shifts {
        for (rep, s) in reps.iter_mut().zip(shifts) {
            let add = f.source.point(s);
            *rep = rep.iter().zip(&add).map(|(a, b)| a + b).collect();
        }
    }
    if let Some(perm) = &opts.rep_permutation {
        reps = perm.iter().map(|&i| reps[i].clone()).collect();
    }
    Ok(CosetReps::custom(f.quotient.clone(), reps)?)
}

/// Finds `W` with `full = W·ρ(candidate)·W⁻¹` (after matching the flat parts).
pub fn ud_tensor_decompose(full: &UnitaryFactor, candidate: &UnitaryFactor) -> Result<Intertwiner, PushforwardError> {
    if candidate.rank == 0 || full.rank % candidate.rank != 0 {
        return Err(PushforwardError::Inequivalent(f64::INFINITY));
    }
    let d = full.rank / candidate.rank;
    let rho = candidate.block_repeat(d);
    if rho.lattice != full.lattice || rho.curvature != full.curvature {
        return Err(PushforwardError::LatticeMismatch);
    }
    match equivalence(&rho, full) {
        Some(e) => Ok(e.conjugator),
        None => Err(PushforwardError::Inequivalent(f64::INFINITY)),
    }
}

/// Output of [`split_projectively_flat`].
#[derive(Clone, Debug)]
pub struct Splitting {
    /// Index-d sublattice (lattice coordinates) on which the curvature is integral.
    pub sublattice: Lattice,
    /// Holonomy character of the chosen joint eigenline, exponents in units of π.
    pub eigen_exponents: Vec<Rat>,
    pub factor: UnitaryFactor,
    pub conjugator: Intertwiner,
}

/// Finds a rank-d factor `E` with `w ≅ E ⊗ U(d)`, where `d` is the product of
/// the denominators of the curvature type. `E` is the pushforward of a joint
/// eigenline of the holonomy restricted to an index-d sublattice.
pub fn split_projectively_flat(w: &UnitaryFactor, seed: u64) -> Result<Splitting, PushforwardError> {
    let base = w.in_lattice_coords();
    let k = base.dim();
    let td = gamma_h(&base.curvature_form());
    let r = td.half_rank();
    let d = td.prod_m();
    let d_us = d.to_usize().ok_or(PushforwardError::LatticeMismatch)?;
    if d_us == 0 || w.rank != d_us * d_us {
        return Err(PushforwardError::Inequivalent(f64::INFINITY));
    }
    let mut sub = td.frame.clone();
    for i in 0..r {
        let mi = td.pairs[i].1.clone();
        for row in 0..k {
            sub[(row, i)] = &sub[(row, i)] * &mi;
        }
    }
    let sublattice = Lattice::from_int_matrix(&sub);
    let restricted = base.pullback(&sublattice, &RatMatrix::identity(k))?;
    let hol: Vec<CMat> = (0..k)
        .map(|j| {
            let mut e = vec![Int::zero(); k];
            e[j] = Int::one();
            restricted.holonomy(&e).to_dense()
        })
        .collect();
    let v = joint_eigenvector(&hol, seed);
    let den = phase_denominator(&restricted) * Int::from(lcm_upto(w.rank));
    let mut eigen_exponents = Vec::with_capacity(k);
    for h in &hol {
        let z = (v.adjoint() * h * &v)[(0, 0)];
        let q = round_exponent(z.arg() / std::f64::consts::PI, &den);
        if (Phase::new(q.clone()).to_complex() - z).norm() > 1e-7 {
            return Err(PushforwardError::Inequivalent((Phase::new(q).to_complex() - z).norm()));
        }
        eigen_exponents.push(q);
    }
    let gens = eigen_exponents.iter().map(|q| MonomialMatrix::scalar(1, Phase::new(q.clone()))).collect();
    let line = UnitaryFactor::new(sublattice.clone(), restricted.curvature.clone(), gens, vec![Rat::zero(); k], 1);
    let e = pushforward_isogeny(&line, &Isogeny::new(sublattice.clone(), Lattice::standard(k))?)?;
    let conjugator = ud_tensor_decompose(&base, &e)?;
    let factor = UnitaryFactor { lattice: w.lattice.clone(), ..e };
    Ok(Splitting { sublattice, eigen_exponents, factor, conjugator })
}

/// A common eigenvector of commuting unitaries, from a seeded generic Hermitian combination.
fn joint_eigenvector(mats: &[CMat], seed: u64) -> CMat {
    let n = mats[0].nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut herm = CMat::zeros(n, n);
    for m in mats {
        let a: f64 = rng.gen_range(-1.0..1.0);
        let b: f64 = rng.gen_range(-1.0..1.0);
        let sym = m + m.adjoint();
        let anti = (m - m.adjoint()) * Complex64::new(0.0, 1.0);
        herm += sym * Complex64::new(a, 0.0) + anti * Complex64::new(b, 0.0);
    }
    let eig = herm.symmetric_eigen();
    eig.eigenvectors.columns(0, 1).into_owned()
}

fn phase_denominator(l: &UnitaryFactor) -> Int {
    let mut den = Int::from(2);
    let mut take = |q: &Rat| den = den.lcm(q.denom());
    for g in &l.generators {
        g.phases.iter().for_each(|p| take(p.exponent()));
    }
    l.connection.iter().for_each(&mut take);
    l.curvature.entries().iter().for_each(&mut take);
    den
}

fn lcm_upto(n: usize) -> u64 {
    (1..=n as u64).fold(1, |a, b| a / gcd_u64(a, b) * b)
}

fn gcd_u64(a: u64, b: u64) -> u64 {
    if b == 0 { a } else { gcd_u64(b, a % b) }
}

fn round_exponent(x: f64, den: &Int) -> Rat {
    let d = den.to_f64().unwrap_or(1.0);
    let num = (x * d).round() as i64;
    frac_two(Rat::new(Int::from(num), den.clone()))
}

/// Reduces an exponent (units of π) to `[0,2)`.
fn frac_two(q: Rat) -> Rat {
    let two = Rat::from_integer(Int::from(2));
    let t = frac(&(q / &two));
    t * two
}

/// `max |tr full(λ̂) − d·tr L̂(λ̂)|` over the coordinate box `{−r..r}^k`.
pub fn trace_identity_defect(full: &UnitaryFactor, l_hat: &UnitaryFactor, r: i64) -> f64 {
    let d = (full.rank / l_hat.rank.max(1)) as f64;
    full.trace_box(r)
        .iter()
        .zip(l_hat.trace_box(r))
        .map(|(a, b)| (a - b * d).norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::{int, rat};

    fn flat(turns: &[Rat]) -> UnitaryFactor {
        let k = turns.len();
        let f = AlternatingForm::zero(Lattice::standard(k));
        let vals: Vec<Phase> = turns.iter().map(Phase::turns).collect();
        let chi = Semicharacter::from_values(&f, &vals).unwrap();
        canonical_factor_u1(&f, &chi).unwrap()
    }

    fn two_z() -> Isogeny {
        Isogeny::new(Lattice::from_int_cols(1, &[vec![int(2)]]), Lattice::standard(1)).unwrap()
    }

    #[test]
    fn trivial_along_degree_two() {
        let triv = UnitaryFactor::trivial(Lattice::from_int_cols(1, &[vec![int(2)]]));
        let p = pushforward_isogeny(&triv, &two_z()).unwrap();
        assert_eq!(p.generators[0].to_dense(), MonomialMatrix { perm: vec![1, 0], phases: vec![Phase::one(); 2] }.to_dense());
        let dec = kernel_decomposition(&triv, &two_z()).unwrap();
        let mut chars = dec.characters.clone();
        chars.sort();
        assert_eq!(chars, vec![vec![rat(0, 1)], vec![rat(1, 2)]]);
    }

    #[test]
    fn identity_isogeny_is_identity() {
        let f = AlternatingForm::standard(RatMatrix::from_i64(&[&[0, 1], &[-1, 0]])).unwrap();
        let chi = Semicharacter::from_values(&f, &[Phase::new(rat(1, 3)), Phase::one()]).unwrap();
        let l = canonical_factor_u1(&f, &chi).unwrap();
        let id = Isogeny::new(Lattice::standard(2), Lattice::standard(2)).unwrap();
        assert_eq!(pushforward_isogeny(&l, &id).unwrap(), l);
    }

    #[test]
    fn raw_and_normal_forms_agree() {
        let src = Lattice::from_int_cols(2, &[vec![int(1), int(0)], vec![int(0), int(2)]]);
        let f = AlternatingForm::new(src.clone(), RatMatrix::from_i64(&[&[0, 2], &[-2, 0]])).unwrap();
        let chi = Semicharacter::from_values(&f, &[Phase::new(rat(1, 2)), Phase::new(rat(1, 3))]).unwrap();
        let l = canonical_factor_u1(&f, &chi).unwrap();
        let iso = Isogeny::new(src, Lattice::standard(2)).unwrap();
        let reps = iso.box_reps();
        let push = pushforward_isogeny(&l, &iso).unwrap();
        let v = vec![rat(1, 3), rat(-2, 5)];
        for lam in [vec![rat(1, 1), rat(0, 1)], vec![rat(0, 1), rat(1, 1)], vec![rat(2, 1), rat(-3, 1)]] {
            let raw = pushforward_raw_value(&l, &reps, &v, &lam).unwrap();
            let vl: Vec<Rat> = v.iter().zip(&lam).map(|(a, b)| a + b).collect();
            let lhs = MonomialMatrix { perm: raw.perm.clone(), phases: raw.phases.clone() };
            let gauge_after = pushforward_gauge(&l, &reps, &vl);
            let gauge_before = pushforward_gauge(&l, &reps, &v);
            let conj = MonomialMatrix {
                perm: lhs.perm.clone(),
                phases: (0..lhs.size())
                    .map(|i| gauge_after[i].mul(&lhs.phases[i]).mul(&gauge_before[lhs.perm[i]].inv()))
                    .collect(),
            };
            let normal = push.evaluate(&v, &lam).unwrap();
            assert_eq!(conj, normal);
        }
    }

    #[test]
    fn degree_three_fiber() {
        let src = Lattice::from_int_cols(1, &[vec![int(3)]]);
        let f = AlternatingForm::zero(src.clone());
        let chi = Semicharacter::from_values(&f, &[Phase::turns(&rat(1, 2))]).unwrap();
        let l = canonical_factor_u1(&f, &chi).unwrap();
        let iso = Isogeny::new(src, Lattice::standard(1)).unwrap();
        let mut got = kernel_decomposition(&l, &iso).unwrap().characters;
        got.sort();
        assert_eq!(got, vec![vec![rat(1, 6)], vec![rat(1, 2)], vec![rat(5, 6)]]);
        assert_eq!(got, enumerate_dual_fiber(&l, &iso).unwrap());
    }

    #[test]
    fn projection_descends_pullbacks() {
        let n = flat(&[rat(1, 5)]);
        let q = TorusProjection::new(Lattice::standard(2), Lattice::from_int_cols(2, &[vec![int(1), int(0)]]))
            .unwrap();
        let pulled = n.pullback(&Lattice::standard(2), &q.lattice_map()).unwrap();
        assert_eq!(pushforward_projection(&pulled, &q).unwrap(), ProjectionPushforward::Descended(n));
        let twisted = flat(&[rat(1, 3), rat(0, 1)]);
        assert_eq!(pushforward_projection(&twisted, &q).unwrap(), ProjectionPushforward::Zero);
        let curved = UnitaryFactor::new(
            Lattice::standard(2),
            RatMatrix::from_i64(&[&[0, 1], &[-1, 0]]),
            vec![MonomialMatrix::identity(1); 2],
            vec![Rat::zero(); 2],
            1,
        );
        let q2 = TorusProjection::new(Lattice::standard(2), Lattice::standard(2)).unwrap();
        assert_eq!(pushforward_projection(&curved, &q2), Err(PushforwardError::NotFiberFlat));
    }

    #[test]
    fn principal_phi_dual() {
        let f = AlternatingForm::standard(RatMatrix::from_i64(&[&[0, 1], &[-1, 0]])).unwrap();
        let chi = Semicharacter::canonical(&f, vec![rat(1, 3), rat(1, 4)]).unwrap();
        let l = canonical_factor_u1(&f, &chi).unwrap();
        let out = phi_dual_bundle(&l, &PhiDualOptions::default()).unwrap();
        assert_eq!(out.degree, int(1));
        assert_eq!(out.full.rank, 1);
        assert_eq!(out.l_hat.curvature, f.matrix.inverse().unwrap());
        assert!(equivalence(&out.full, &out.l_hat).is_some());
    }

    #[test]
    fn type_two_clock_and_shift() {
        let f = AlternatingForm::standard(RatMatrix::from_i64(&[&[0, 2], &[-2, 0]])).unwrap();
        let chi = Semicharacter::canonical(&f, vec![Rat::zero(); 2]).unwrap();
        let l = canonical_factor_u1(&f, &chi).unwrap();
        let out = phi_dual_bundle(&l, &PhiDualOptions::default()).unwrap();
        assert_eq!(out.l_hat.rank, 2);
        assert_eq!(out.full.rank, 4);
        assert!(out.conjugator.residual < 1e-9);
        assert!(trace_identity_defect(&out.full, &out.l_hat, 2) < 1e-9);
        let g = &out.l_hat.generators;
        let perms: Vec<bool> = g.iter().map(|m| m.perm == vec![0, 1]).collect();
        assert_eq!(perms.iter().filter(|&&b| b).count(), 1, "one clock and one shift");
    }

    #[test]
    fn degenerate_needs_trivial_kernel() {
        let g = RatMatrix::from_i64(&[&[0, 3, 0, 0], &[-3, 0, 0, 0], &[0, 0, 0, 0], &[0, 0, 0, 0]]);
        let f = AlternatingForm::standard(g).unwrap();
        let chi = Semicharacter::canonical(&f, vec![rat(1, 2), Rat::zero(), Rat::zero(), Rat::zero()]).unwrap();
        let l = canonical_factor_u1(&f, &chi).unwrap();
        let out = phi_dual_bundle(&l, &PhiDualOptions::default()).unwrap();
        assert_eq!(out.l_hat.rank, 3);
        assert_eq!(out.full.rank, 9);
        assert_eq!(out.full.lattice.rank(), 2);
        assert!(trace_identity_defect(&out.full, &out.l_hat, 2) < 1e-9);
        let bad = canonical_factor_u1(&f, &chi.with_twist(vec![Rat::zero(), Rat::zero(), rat(1, 2), Rat::zero()])).unwrap();
        assert!(matches!(
            phi_dual_bundle(&bad, &PhiDualOptions::default()),
            Err(PushforwardError::NotTrivialOnKernel(_))
        ));
    }
}
