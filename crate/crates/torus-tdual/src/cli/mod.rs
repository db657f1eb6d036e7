//! Batch front end: problem files in, deterministic JSON reports out.

pub mod report;
pub mod schema;
pub mod verify;

use num_traits::One;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use thiserror::Error;

use crate::bundles::{canonical_factor_u1, BundleError, Semicharacter};
use crate::forms::{gamma_h, symplectic_normal_form, AlternatingForm, FormError};
use crate::holo_shadow::HoloError;
use crate::lattice::{Lattice, LatticeError};
use crate::mat::{IntMatrix, Rat, RatMatrix};
use crate::numeric::DEFAULT_TOL;
use crate::pushforward::{
    enumerate_dual_fiber, kernel_decomposition, phi_dual_bundle, pushforward_isogeny, trace_identity_defect, Isogeny,
    PhiDualOptions, PushforwardError,
};
use crate::semiflat::{
    coisotropic_characteristic, legendre_point, random_rational_triple, semiflat_structures, tdual_swap_check,
    KahlerTriple, QuaternionResiduals, SemiflatError, SubspaceMatch,
};
use crate::spgen::{compose, decompose_sp, SpError, SpForm, SpGenerator};
use crate::tdual::{
    brane_tdual, double_dual, higher_rank_pair, Brane, DualData, FamilyData, Payload, TDualError, TDualOptions,
};
use schema::{
    int_matrix, integers, rat_cols, rat_matrix, square_matrix, vector, BraneInput, FormInput, HigherRankInput,
    PhiDualInput, Problem, ProblemFile, PushforwardInput, SchemaError, SemiflatInput, SpInput, TDualizeInput,
    FORMAT_VERSION,
};

/// Exit status classes of the binary.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CliError {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("mathematical precondition failed: {0}")]
    Precondition(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Precondition(_) => 3,
        }
    }
}

impl From<SchemaError> for CliError {
    fn from(e: SchemaError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<FormError> for CliError {
    fn from(e: FormError) -> Self {
        match e {
            FormError::NotSkew => CliError::Validation(e.to_string()),
            FormError::Lattice(l) => l.into(),
            _ => CliError::Precondition(e.to_string()),
        }
    }
}

impl From<LatticeError> for CliError {
    fn from(e: LatticeError) -> Self {
        match e {
            LatticeError::AmbientMismatch(..) | LatticeError::RankMismatch { .. } => CliError::Validation(e.to_string()),
            _ => CliError::Precondition(e.to_string()),
        }
    }
}

impl From<BundleError> for CliError {
    fn from(e: BundleError) -> Self {
        match e {
            BundleError::Form(f) => f.into(),
            BundleError::Lattice(l) => l.into(),
            _ => CliError::Precondition(e.to_string()),
        }
    }
}

impl From<PushforwardError> for CliError {
    fn from(e: PushforwardError) -> Self {
        match e {
            PushforwardError::Bundle(b) => b.into(),
            PushforwardError::Lattice(l) => l.into(),
            PushforwardError::Form(f) => f.into(),
            _ => CliError::Precondition(e.to_string()),
        }
    }
}

impl From<SpError> for CliError {
    fn from(e: SpError) -> Self {
        match e {
            SpError::NotSymplectic => CliError::Precondition(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<TDualError> for CliError {
    fn from(e: TDualError) -> Self {
        match e {
            TDualError::InvalidBrane(_) => CliError::Validation(e.to_string()),
            TDualError::Pushforward(p) => p.into(),
            TDualError::Bundle(b) => b.into(),
            TDualError::Form(f) => f.into(),
            TDualError::Lattice(l) => l.into(),
            _ => CliError::Precondition(e.to_string()),
        }
    }
}

impl From<SemiflatError> for CliError {
    fn from(e: SemiflatError) -> Self {
        match e {
            SemiflatError::Shape(_) => CliError::Validation(e.to_string()),
            _ => CliError::Precondition(e.to_string()),
        }
    }
}

impl From<HoloError> for CliError {
    fn from(e: HoloError) -> Self {
        match e {
            HoloError::Shape(_) => CliError::Validation(e.to_string()),
            _ => CliError::Precondition(e.to_string()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunFlags {
    pub seed: u64,
    pub tol: f64,
}

impl Default for RunFlags {
    fn default() -> Self {
        RunFlags { seed: 0, tol: DEFAULT_TOL }
    }
}

/// A finished report; `success` is false when a verification suite failed.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub document: Value,
    pub success: bool,
}

impl Report {
    pub fn to_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.document).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn exit_code(&self) -> i32 {
        if self.success {
            0
        } else {
            3
        }
    }
}

struct Outcome {
    result: Value,
    provenance: Vec<&'static str>,
    success: bool,
}

impl Outcome {
    fn ok(result: Value, provenance: Vec<&'static str>) -> Self {
        Outcome { result, provenance, success: true }
    }
}

/// Runs a problem file given as text; `command` must match the file.
pub fn run_text(command: &str, text: &str, flags: &RunFlags) -> Result<Report, CliError> {
    let file = ProblemFile::parse(text)?;
    if file.problem.command() != command {
        return Err(SchemaError::CommandMismatch { found: file.problem.command().into(), expected: command.into() }.into());
    }
    execute(&file, flags)
}

/// `verify <suite>` without an input file.
pub fn run_verify(suite: &str, flags: &RunFlags) -> Result<Report, CliError> {
    execute(&ProblemFile::new(Problem::Verify(schema::VerifyInput { suite: suite.into() })), flags)
}

pub fn execute(file: &ProblemFile, flags: &RunFlags) -> Result<Report, CliError> {
    if !(flags.tol.is_finite() && flags.tol > 0.0) {
        return Err(CliError::Validation("--tol must be a positive number".into()));
    }
    let out = match &file.problem {
        Problem::NormalForm(x) => normal_form(x)?,
        Problem::GammaH(x) => rational_type(x)?,
        Problem::Pushforward(x) => pushforward(x)?,
        Problem::PhiDual(x) => phi_dual(x)?,
        Problem::SpDecompose(x) => sp_decompose(x)?,
        Problem::Tdualize(x) => tdualize(x, flags)?,
        Problem::HigherRank(x) => higher_rank(x, flags)?,
        Problem::Semiflat(x) => semiflat(x, flags)?,
        Problem::Verify(x) => verify_suites(&x.suite, flags)?,
    };
    let document = json!({
        "version": FORMAT_VERSION,
        "command": file.problem.command(),
        "convention": report::convention(),
        "flags": { "seed": flags.seed, "tol": flags.tol },
        "input": file.to_value(),
        "result": out.result,
        "provenance": report::provenance(&out.provenance),
    });
    Ok(Report { document, success: out.success })
}

fn skew_form(rows: &schema::QRows, what: &str) -> Result<RatMatrix, CliError> {
    let m = rat_matrix(rows, what)?;
    if m.rows() != m.cols() || !m.is_skew() {
        return Err(CliError::Validation(format!("{what} must be a square skew-symmetric matrix")));
    }
    Ok(m)
}

fn normal_form(x: &FormInput) -> Result<Outcome, CliError> {
    let m = skew_form(&x.form, "form")?;
    let e = AlternatingForm::standard(m.clone())?;
    let sd = symplectic_normal_form(&e)?;
    let p = sd.basis_change.to_rat();
    let check = p.transpose().mul(&m).mul(&p) == sd.normal_matrix();
    Ok(Outcome::ok(
        json!({
            "elementary_divisors": report::ints(&sd.elementary_divisors),
            "radical_rank": sd.radical_rank,
            "reduced_pfaffian": report::int(&sd.reduced_pfaffian()),
            "basis_change": report::int_matrix(&sd.basis_change),
            "normal_matrix": report::matrix(&sd.normal_matrix()),
            "congruence_holds": check,
        }),
        vec!["integral symplectic normal form of an alternating form"],
    ))
}

fn rational_type(x: &FormInput) -> Result<Outcome, CliError> {
    let m = skew_form(&x.form, "form")?;
    let h = AlternatingForm::standard(m)?;
    let td = gamma_h(&h);
    Ok(Outcome::ok(
        json!({
            "pairs": td.pairs.iter().map(|(n, m)| json!([report::int(n), report::int(m)])).collect::<Vec<_>>(),
            "denominator": report::int(&td.m),
            "radical_rank": td.radical_rank,
            "frame": report::int_matrix(&td.frame),
            "gamma_h": report::lattice(&td.gamma_h),
            "prod_n": report::int(&td.prod_n()),
            "prod_m": report::int(&td.prod_m()),
        }),
        vec!["rational type (n_i, m_i) of a rational alternating form and the lattice on which it becomes integral"],
    ))
}

fn full_rank_lattice(cols: &schema::QCols, n: usize, what: &str) -> Result<Lattice, CliError> {
    let c = rat_cols(cols, n, what)?;
    let l = if c.is_empty() { Lattice::zero(n) } else { Lattice::from_rat_cols(n, &c) };
    if l.rank() != n {
        return Err(CliError::Validation(format!("{what} must span Q^{n}")));
    }
    Ok(l)
}

fn pushforward(x: &PushforwardInput) -> Result<Outcome, CliError> {
    let n = x.ambient;
    let source = full_rank_lattice(&x.source, n, "source")?;
    let target = match &x.target {
        Some(t) => full_rank_lattice(t, n, "target")?,
        None => Lattice::standard(n),
    };
    let curvature = match &x.curvature {
        Some(c) => square_matrix(c, n, "curvature")?,
        None => RatMatrix::zeros(n, n),
    };
    if !curvature.is_skew() {
        return Err(CliError::Validation("curvature must be skew-symmetric".into()));
    }
    let twist = match &x.twist {
        Some(t) => vector(t, n, "twist")?,
        None => vec![Rat::from_integer(0.into()); n],
    };
    let iso = Isogeny::new(source.clone(), target.clone())?;
    let b = source.basis();
    let form = AlternatingForm::new(source.clone(), b.transpose().mul(&curvature).mul(&b))?;
    let chi = Semicharacter::canonical(&form, b.transpose().mul_vec(&twist))?;
    let l = canonical_factor_u1(&form, &chi)?;
    let pushed = pushforward_isogeny(&l, &iso)?;
    let mut result = json!({
        "degree": report::int(&iso.degree()),
        "invariant_factors": report::ints(&iso.quotient.invariant_factors),
        "source_factor": report::factor(&l),
        "pushforward": report::factor(&pushed),
    });
    let mut provenance = vec!["pushforward of a factor of automorphy along an isogeny"];
    if l.is_flat() {
        let mut chars = kernel_decomposition(&l, &iso)?.characters;
        chars.sort();
        let fiber = enumerate_dual_fiber(&l, &iso)?;
        result["flat_decomposition"] = json!({
            "characters_on_target_basis": report::columns(&chars),
            "dual_fiber": report::columns(&fiber),
            "equal_as_multisets": chars == fiber,
        });
        provenance.push("pushforward of a flat line bundle along an isogeny is the sum of the characters in the dual fiber");
    }
    Ok(Outcome::ok(result, provenance))
}

fn phi_dual(x: &PhiDualInput) -> Result<Outcome, CliError> {
    let g = skew_form(&x.curvature, "curvature")?;
    let k = g.rows();
    let twist = match &x.twist {
        Some(t) => vector(t, k, "twist")?,
        None => vec![Rat::from_integer(0.into()); k],
    };
    let form = AlternatingForm::standard(g)?;
    let chi = Semicharacter::canonical(&form, twist)?;
    let l = canonical_factor_u1(&form, &chi)?;
    let frame = match &x.frame {
        Some(cols) => {
            let c = rat_cols(cols, k, "frame")?;
            if c.len() != k {
                return Err(CliError::Validation(format!("frame needs {k} columns")));
            }
            let m = RatMatrix::from_cols(k, &c).to_int().ok_or(CliError::Validation("frame must be integral".into()))?;
            Some(m)
        }
        None => None,
    };
    let n_twist = match &x.n_twist {
        Some(t) => Some(integers(t, "n_twist").map(|_| vector(t, k, "n_twist"))??),
        None => None,
    };
    if let Some(p) = &x.rep_permutation {
        let mut sorted = p.clone();
        sorted.sort_unstable();
        if sorted != (0..p.len()).collect::<Vec<_>>() {
            return Err(CliError::Validation("rep_permutation must be a permutation of 0..degree".into()));
        }
    }
    let opts = PhiDualOptions { frame, n_twist, rep_permutation: x.rep_permutation.clone(), rep_shifts: None };
    let out = phi_dual_bundle(&l, &opts)?;
    if let Some(p) = &x.rep_permutation {
        if p.len() != out.full.rank {
            return Err(CliError::Validation(format!("rep_permutation must have {} entries", out.full.rank)));
        }
    }
    let d = out.l_hat.rank;
    let mut provenance = vec!["pushforward of the inverse bundle along phi_L splits as L^ tensor U(d)"];
    if out.kernel.rank() > 0 {
        provenance.push("descent along the connected kernel of phi_L for degenerate curvature");
    }
    Ok(Outcome::ok(
        json!({
            "polarization_type": report::ints(&out.polarization_type),
            "degree": report::int(&out.degree),
            "kernel": report::lattice(&out.kernel),
            "gamma_y": report::lattice(&out.gamma_y),
            "dual_gamma_y": report::lattice(&out.dual_gamma_y),
            "l_hat": report::factor(&out.l_hat),
            "full": {
                "rank": out.full.rank,
                "lattice": report::lattice(&out.full.lattice),
                "curvature": report::matrix(&out.full.curvature),
            },
            "ranks_are_d_squared_and_d": out.full.rank == d * d,
            "trace_identity_defect": trace_identity_defect(&out.full, &out.l_hat, 2),
            "conjugator_residual": out.conjugator.residual,
        }),
        provenance,
    ))
}

fn generator_json(g: &SpGenerator, r: usize) -> Value {
    let data = match g {
        SpGenerator::Translation(s) => json!({ "s": report::int_matrix(s) }),
        SpGenerator::Rotation { a, d } => json!({ "a": report::int_matrix(a), "d": report::int_matrix(d) }),
        SpGenerator::SemiInvolution(j) => json!({ "j": j }),
    };
    json!({ "kind": g.kind(), "data": data, "matrix": report::int_matrix(&g.matrix(r)) })
}

fn sp_decompose(x: &SpInput) -> Result<Outcome, CliError> {
    let form = SpForm::new(integers(&x.divisors, "divisors")?)?;
    let s: IntMatrix = int_matrix(&x.matrix, "matrix")?;
    let r = form.r();
    if s.rows() != 2 * r || s.cols() != 2 * r {
        return Err(SpError::Shape.into());
    }
    let gens = decompose_sp(&form, &s)?;
    Ok(Outcome::ok(
        json!({
            "length": gens.len(),
            "generators": gens.iter().map(|g| generator_json(g, r)).collect::<Vec<_>>(),
            "recomposes": compose(&gens, r) == s,
            "kind_invariants_hold": gens.iter().all(|g| g.is_valid(&form)),
        }),
        vec!["translations, rotations and semi-involutions generate the integral symplectic group of a polarization"],
    ))
}

/// Moves data given on the user's generators to the Hermite basis.
pub fn build_brane(brane_in: &BraneInput) -> Result<Brane, CliError> {
    let n = brane_in.ambient;
    let cols = rat_cols(&brane_in.sublattice, n, "sublattice")?;
    let sub = if cols.is_empty() { Lattice::zero(n) } else { Lattice::from_rat_cols(n, &cols) };
    let l = cols.len();
    if sub.rank() != l {
        return Err(CliError::Validation("sublattice generators must be linearly independent".into()));
    }
    if !sub.is_integral() {
        return Err(CliError::Validation("sublattice generators must be integral".into()));
    }
    // columns C = B·T with B the Hermite basis
    let t_cols: Vec<Vec<Rat>> = cols
        .iter()
        .map(|c| sub.rat_coords(c).expect("generator lies in its span"))
        .collect();
    let t = RatMatrix::from_cols(l, &t_cols);
    let t_inv = if l == 0 { RatMatrix::zeros(0, 0) } else { t.inverse().expect("independent generators") };
    let to_hermite_form = |m: &RatMatrix| t_inv.transpose().mul(m).mul(&t_inv);
    let to_hermite_covector = |v: &[Rat]| if l == 0 { Vec::new() } else { t_inv.transpose().mul_vec(v) };
    let fiber = if l == 0 { RatMatrix::zeros(0, 0) } else { square_matrix(&brane_in.fiber_form, l, "fiber_form")? };
    if l == 0 && !brane_in.fiber_form.is_empty() {
        return Err(CliError::Validation("fiber_form must be empty for a point brane".into()));
    }
    if !fiber.is_skew() {
        return Err(CliError::Validation("fiber_form must be skew-symmetric".into()));
    }
    let fiber = if l == 0 { fiber } else { to_hermite_form(&fiber) };
    let translation = vector(&brane_in.translation, n, "translation")?;
    let payload = match &brane_in.twist {
        Some(tw) => Payload::Bundle { fiber_form: fiber, twist: to_hermite_covector(&vector(tw, l, "twist")?) },
        None => Payload::Form(fiber),
    };
    let family = match &brane_in.family {
        None => FamilyData::point(l, n),
        Some(f) => {
            let base_form = skew_form(&f.base_form, "family.base_form").or_else(|e| {
                if f.base_form.is_empty() { Ok(RatMatrix::zeros(0, 0)) } else { Err(e) }
            })?;
            let k = base_form.rows();
            let g1 = if k == 0 { RatMatrix::zeros(l, 0) } else { rat_matrix(&f.g1, "family.g1")? };
            let b1 = if k == 0 { RatMatrix::zeros(n, 0) } else { rat_matrix(&f.b1, "family.b1")? };
            if g1.rows() != l || g1.cols() != k || b1.rows() != n || b1.cols() != k {
                return Err(CliError::Validation(format!("family: g1 must be {l}×{k} and b1 {n}×{k}")));
            }
            let g1 = if l == 0 { g1 } else { t_inv.transpose().mul(&g1) };
            FamilyData { base_form, g0: to_hermite_covector(&vector(&f.g0, l, "family.g0")?), g1, b1 }
        }
    };
    Ok(Brane::new(sub, translation, payload, family)?)
}

fn brane_json(b: &Brane) -> Value {
    let mut v = json!({
        "sublattice": report::lattice(&b.sub),
        "translation": report::rats(&b.translation),
        "fiber_form": report::matrix(b.fiber_form()),
    });
    if let Payload::Bundle { twist, .. } = &b.payload {
        v["twist"] = report::rats(twist);
    }
    if b.family.base_dim() > 0 {
        v["family"] = json!({
            "base_form": report::matrix(&b.family.base_form),
            "g0": report::rats(&b.family.g0),
            "g1": report::matrix(&b.family.g1),
            "b1": report::matrix(&b.family.b1),
        });
    }
    v
}

fn dual_data_json(d: &DualData) -> Value {
    let lpd = &d.leaves_per_dual;
    json!({
        "rational_type": d.rational_type.pairs.iter().map(|(n, m)| json!([report::int(n), report::int(m)])).collect::<Vec<_>>(),
        "gamma_z": report::lattice(&d.gamma_z),
        "v_z_rank": d.v_z_rank,
        "gamma_s_hat": report::lattice(&d.gamma_s_hat),
        "image_index": report::int(&d.image_index),
        "leaf_lattice": report::lattice(&d.leaf_lattice),
        "leaf_index": report::int(&d.leaf_index),
        "dual_moduli_dim": d.dual_moduli_dim,
        "leaves_per_dual": {
            "torus_dim": lpd.torus_dim,
            "order": report::int(&lpd.order),
            "component_count": report::int(&lpd.component_count),
        },
        "fiber_counts": [report::int(&d.fiber_counts.0), report::int(&d.fiber_counts.1)],
        "dual_rank": report::int(&d.dual_rank),
        "checks": {
            "gamma_z_rank": d.checks.gamma_z_rank,
            "p0_onto_gamma_h": d.checks.p0_onto_gamma_h,
            "p0_hat_into_gamma_s_hat": d.checks.p0_hat_into_gamma_s_hat,
            "commuting_square": d.checks.commuting_square,
            "counts_match": d.checks.counts_match,
        },
    })
}

fn tdualize(x: &TDualizeInput, flags: &RunFlags) -> Result<Outcome, CliError> {
    let brane = build_brane(&x.brane)?;
    let k = brane.family.base_dim();
    let base_points = match &x.base_points {
        Some(ps) => ps.iter().map(|p| vector(p, k, "base point")).collect::<Result<Vec<_>, _>>()?,
        None => Vec::new(),
    };
    let leaf_grid = x.leaf_grid.unwrap_or(3);
    if leaf_grid < 1 {
        return Err(CliError::Validation("leaf_grid must be positive".into()));
    }
    let opts = TDualOptions { seed: flags.seed, base_points, leaf_grid, tol: flags.tol };
    let rep = brane_tdual(&brane, &opts)?;
    let tf = &rep.two_form;
    let fibers: Vec<Value> = rep
        .fibers
        .iter()
        .map(|f| {
            let worst = f.leaf_checks.iter().map(|c| c.residual).fold(0.0, f64::max);
            json!({
                "base_point": report::rats(&f.base_point),
                "selected_character": report::rats(&f.selected_c),
                "dual_translation": report::rats(&f.dual_translation),
                "e_hat_rank": f.e_hat.rank,
                "l_hat": report::factor(&f.l_hat),
                "conjugator_residual": f.conjugator.residual,
                "curvature_matches": f.curvature_matches,
                "leaf_checks": { "count": f.leaf_checks.len(), "max_residual": worst },
            })
        })
        .collect();
    let mut result = json!({
        "brane": brane_json(&brane),
        "lattice_data": dual_data_json(&rep.data),
        "two_form": {
            "base": report::matrix(&tf.dual.base),
            "mixed": report::matrix(&tf.dual.mixed),
            "fiber_ambient": report::matrix(&tf.dual.fiber_ambient),
            "fiber": report::matrix(&tf.dual.fiber),
            "coefficients": report::rats(&tf.dual.coefficients),
            "residual_vanishes": tf.holds(),
        },
        "fibers": fibers,
    });
    let mut provenance = vec![
        "exact sequences of the correspondence lattice of a locally T-dualizable brane",
        "local T-duality identity for the two-forms on the correspondence space",
    ];
    if !rep.fibers.is_empty() {
        provenance.push("independence of the dual bundle from the chosen leaf");
    }
    let point_line_bundle = rep.data.dual_rank.is_one() && k == 0 && matches!(brane.payload, Payload::Bundle { .. });
    if point_line_bundle {
        let dd = double_dual(&brane, &opts)?;
        result["dual_brane"] = brane_json(&dd.dual);
        result["double_dual"] = json!({
            "same_lattice": dd.same_lattice,
            "same_form": dd.same_form,
            "translation_sign": dd.translation_sign,
            "twist_sign": dd.twist_sign,
            "returns_input": dd.double == brane,
        });
        provenance.push("T-duality of U(1) bundles on a torus is an involution");
    }
    Ok(Outcome::ok(result, provenance))
}

fn higher_rank(x: &HigherRankInput, flags: &RunFlags) -> Result<Outcome, CliError> {
    let brane = build_brane(&x.brane)?;
    let p = higher_rank_pair(&brane, flags.seed)?;
    Ok(Outcome::ok(
        json!({
            "brane": brane_json(&brane),
            "ranks": [p.ranks.0, p.ranks.1],
            "curvature_matches": [p.curvature_matches.0, p.curvature_matches.1],
            "poincare_identity": p.poincare_identity,
            "e": report::factor(&p.e),
            "e_hat": report::factor(&p.e_hat),
            "conjugator_residuals": [p.e_conjugator.residual, p.e_hat_conjugator.residual],
        }),
        vec!["higher-rank T-dual pairs for rational fiber forms"],
    ))
}

fn quaternion_json(q: &QuaternionResiduals) -> Value {
    json!({
        "squares": q.squares, "ij_k": q.ij_k, "jk_i": q.jk_i, "ki_j": q.ki_j,
        "forms": q.forms, "orthogonality": q.orthogonality,
    })
}

fn matches_json(ms: &[SubspaceMatch]) -> Value {
    Value::Array(ms.iter().map(|m| json!({ "source": m.source, "target": m.target, "distance": m.distance })).collect())
}

fn semiflat(x: &SemiflatInput, flags: &RunFlags) -> Result<Outcome, CliError> {
    let sources = [x.metric.is_some() || x.complex.is_some(), x.frame.is_some(), x.random_dim.is_some()];
    if sources.iter().filter(|&&b| b).count() != 1 {
        return Err(CliError::Validation("give exactly one of (metric, complex), frame or random_dim".into()));
    }
    let triple: KahlerTriple<Rat> = if let (Some(g), Some(i)) = (&x.metric, &x.complex) {
        KahlerTriple::new(rat_matrix(g, "metric")?, rat_matrix(i, "complex")?)?
    } else if x.metric.is_some() || x.complex.is_some() {
        return Err(CliError::Validation("metric and complex must be given together".into()));
    } else if let Some(a) = &x.frame {
        KahlerTriple::from_frame(&rat_matrix(a, "frame")?)?
    } else {
        let n = x.random_dim.unwrap_or(1);
        if n == 0 {
            return Err(CliError::Validation("random_dim must be positive".into()));
        }
        random_rational_triple(n, &mut ChaCha8Rng::seed_from_u64(flags.seed))
    };
    let d = 2 * triple.n();
    let f = match &x.deformation {
        Some(m) => square_matrix(m, d, "deformation")?,
        None => RatMatrix::zeros(d, d),
    };
    let legendre = legendre_point(&triple)?;
    let involution = legendre_point(&legendre)?.distance(&triple);
    let quaternion = semiflat_structures(&triple).residuals();
    let swap = tdual_swap_check(&triple, &f)?;
    let mut result = json!({
        "triple": {
            "metric": report::field_matrix(triple.metric()),
            "complex": report::field_matrix(triple.complex()),
            "form": report::field_matrix(triple.form()),
        },
        "legendre": {
            "metric": report::field_matrix(legendre.metric()),
            "complex": report::field_matrix(legendre.complex()),
            "form": report::field_matrix(legendre.form()),
            "involution_distance": involution,
        },
        "quaternion_residuals": quaternion_json(&quaternion),
        "swap": {
            "eigenbundle_dims": swap.eigen_dims,
            "expected_dim": swap.expected_dim,
            "gcs_residual": swap.gcs_residual,
            "matches": matches_json(&swap.matches),
            "deformation": matches_json(&swap.deformation),
            "deformation_product": swap.deformation_product,
            "tangent_legendre": swap.tangent_legendre,
            "rotation": swap.rotation.iter().map(|(n, r)| json!({ "structure": n, "residual": r })).collect::<Vec<_>>(),
            "holds": swap.holds(flags.tol),
        },
    });
    let mut provenance = vec![
        "semi-flat hyperkaehler structure induced by a special Kaehler base",
        "Legendre duality of special Kaehler structures",
        "fiberwise T-duality exchanges the generalized complex structures of the semi-flat triple",
        "B-field deformation of the semi-flat triple under T-duality",
    ];
    if let Some(cols) = &x.coisotropic {
        let len = cols.first().map_or(0, Vec::len);
        let c = rat_cols(cols, len, "coisotropic")?;
        if len == 0 || len % 2 != 0 {
            return Err(CliError::Validation("coisotropic columns need an even positive length".into()));
        }
        let rep = coisotropic_characteristic(&RatMatrix::from_cols(len, &c))?;
        result["coisotropic"] = json!({
            "dim_v": rep.dim_v,
            "w": report::matrix(&rep.w),
            "characteristic": report::matrix(&rep.delta),
            "w_cap_fiber_equals_ann_p_delta": rep.first_identity,
            "delta_cap_fiber_equals_ann_p_w": rep.second_identity,
        });
        provenance.push("characteristic distribution of a coisotropic subspace");
    }
    let success = swap.holds(flags.tol);
    Ok(Outcome { result, provenance, success })
}

fn verify_suites(selection: &str, flags: &RunFlags) -> Result<Outcome, CliError> {
    let suites = verify::run_suites(selection, flags.seed).map_err(CliError::Validation)?;
    let success = suites.iter().all(|s| s.passed());
    let provenance: Vec<&'static str> = suites.iter().map(|s| s.statement).collect();
    let passed: usize = suites.iter().filter(|s| s.passed()).count();
    Ok(Outcome {
        result: json!({
            "suites": suites.iter().map(|s| s.to_json()).collect::<Vec<_>>(),
            "suites_passed": passed,
            "suites_total": suites.len(),
        }),
        provenance,
        success,
    })
}
