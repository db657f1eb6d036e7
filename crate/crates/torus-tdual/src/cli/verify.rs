//! Seeded property suites behind `tdual verify` and the acceptance harness.

use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::bundles::{canonical_factor_holo, canonical_factor_u1, equivalence, Phase, Semicharacter, UnitaryFactor};
use crate::forms::{symplectic_normal_form, AlternatingForm};
use crate::holo_shadow::holo_pushforward_along;
use crate::lattice::Lattice;
use crate::mat::{int, rat, Int, IntMatrix, Rat, RatMatrix};
use crate::pushforward::{
    enumerate_dual_fiber, kernel_decomposition, phi_dual_bundle, pushforward_isogeny, trace_identity_defect, Isogeny,
    PhiDualOptions,
};
use crate::semiflat::{
    coisotropic_characteristic, legendre_point, random_coisotropic, random_rational_matrix, random_rational_triple,
    semiflat_structures, standard_complex, tdual_swap_check, GCS_TOL,
};
use crate::spgen::{compose, decompose_sp, random_element, random_generator, SpForm, SpGenerator};
use crate::tdual::{brane_tdual, double_dual, higher_rank_pair, Brane, FamilyData, Payload, TDualOptions};

pub const SUITES: [&str; 9] = [
    "cocycle",
    "kernel-characters",
    "tensor-splitting",
    "choice-independence",
    "sp-roundtrip",
    "tdual-pipeline",
    "higher-rank",
    "semiflat",
    "holomorphic-shadow",
];

const NUMERIC_TOL: f64 = 1e-9;

/// Pass count of one invariant.
#[derive(Clone, Debug, PartialEq)]
pub struct Tally {
    pub invariant: &'static str,
    pub passed: usize,
    pub total: usize,
    /// Largest numeric residual met, when the invariant is numeric.
    pub worst: Option<f64>,
}

impl Tally {
    pub fn holds(&self) -> bool {
        self.total > 0 && self.passed == self.total
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteOutcome {
    pub name: &'static str,
    pub statement: &'static str,
    pub tallies: Vec<Tally>,
}

impl SuiteOutcome {
    pub fn passed(&self) -> bool {
        !self.tallies.is_empty() && self.tallies.iter().all(Tally::holds)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "suite": self.name,
            "statement": self.statement,
            "passed": self.passed(),
            "invariants": self.tallies.iter().map(|t| json!({
                "invariant": t.invariant,
                "passed": t.passed,
                "total": t.total,
                "worst_residual": t.worst,
            })).collect::<Vec<_>>(),
        })
    }
}

/// Accumulates observations in first-seen order.
#[derive(Default)]
struct Ledger(Vec<Tally>);

impl Ledger {
    fn record(&mut self, invariant: &'static str, ok: bool, residual: Option<f64>) {
        let idx = match self.0.iter().position(|t| t.invariant == invariant) {
            Some(i) => i,
            None => {
                self.0.push(Tally { invariant, passed: 0, total: 0, worst: None });
                self.0.len() - 1
            }
        };
        let t = &mut self.0[idx];
        t.total += 1;
        t.passed += ok as usize;
        if let Some(r) = residual {
            t.worst = Some(t.worst.map_or(r, |w| w.max(r)));
        }
    }

    fn absorb(&mut self, obs: Vec<Observation>) {
        for (inv, ok, r) in obs {
            self.record(inv, ok, r);
        }
    }
}

type Observation = (&'static str, bool, Option<f64>);

/// Thread cap from `TDUAL_THREADS`; unset or invalid means rayon's default.
pub fn thread_cap() -> Option<usize> {
    std::env::var("TDUAL_THREADS").ok()?.trim().parse().ok().filter(|&n: &usize| n > 0)
}

/// Order-preserving parallel map under the thread cap.
fn fan_out<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap() {
        builder = builder.num_threads(n);
    }
    match builder.build() {
        Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
        Err(_) => items.iter().map(f).collect(),
    }
}

fn sub_seed(seed: u64, salt: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(salt)
}

pub fn run_suite(name: &str, seed: u64) -> Option<SuiteOutcome> {
    let (statement, tallies) = match name {
        "cocycle" => ("cocycle law of canonical factors of automorphy", cocycle(seed)),
        "kernel-characters" => (
            "pushforward of a flat line bundle along an isogeny is the sum of the characters in the dual fiber",
            kernel_characters(seed),
        ),
        "tensor-splitting" => (
            "pushforward of the inverse bundle along phi_L splits as L^ tensor U(d), nondegenerate and degenerate",
            tensor_splitting(seed),
        ),
        "choice-independence" => (
            "the dual bundle L^ is independent of coset representatives, kernel twists and isotropic decompositions",
            choice_independence(seed),
        ),
        "sp-roundtrip" => (
            "translations, rotations and semi-involutions generate the integral symplectic group of a polarization",
            sp_roundtrip(seed),
        ),
        "tdual-pipeline" => (
            "T-duality of locally T-dualizable branes: lattice sequences, local two-form identity, leaf independence, involutivity for line bundles",
            tdual_pipeline(seed),
        ),
        "higher-rank" => ("higher-rank T-dual pairs for rational fiber forms", higher_rank(seed)),
        "semiflat" => (
            "T-duality of semi-flat hyperkaehler structures, its B-field deformation and the coisotropic characteristic identities",
            semiflat(seed),
        ),
        "holomorphic-shadow" => (
            "holomorphic and unitary pushforward semi-representations coincide for the same coset representatives",
            holomorphic_shadow(seed),
        ),
        _ => return None,
    };
    Some(SuiteOutcome { name: SUITES.iter().find(|s| **s == name).copied()?, statement, tallies })
}

/// `all` or a single suite name.
pub fn run_suites(selection: &str, seed: u64) -> Result<Vec<SuiteOutcome>, String> {
    if selection == "all" {
        return Ok(SUITES.iter().map(|s| run_suite(s, seed).expect("known suite")).collect());
    }
    run_suite(selection, seed)
        .map(|s| vec![s])
        .ok_or_else(|| format!("unknown suite {selection:?}; expected all or one of {SUITES:?}"))
}

fn skew_blocks(d: &[i64]) -> RatMatrix {
    let r = d.len();
    RatMatrix::from_fn(2 * r, 2 * r, |i, j| {
        if i < r && j == i + r {
            rat(d[i], 1)
        } else if j < r && i == j + r {
            rat(-d[j], 1)
        } else {
            Rat::zero()
        }
    })
}

fn line(lattice: Lattice, gram: RatMatrix, twist: Vec<Rat>) -> UnitaryFactor {
    let f = AlternatingForm::new(lattice, gram).expect("skew corpus form");
    let chi = Semicharacter::canonical(&f, twist).expect("integral corpus form");
    canonical_factor_u1(&f, &chi).expect("canonical factor")
}

fn diag_lattice(d: &[i64]) -> Lattice {
    let n = d.len();
    let cols: Vec<Vec<Int>> = (0..n).map(|j| (0..n).map(|i| if i == j { int(d[j]) } else { Int::zero() }).collect()).collect();
    Lattice::from_int_cols(n, &cols)
}

fn random_turns<R: Rng>(k: usize, rng: &mut R) -> Vec<Rat> {
    (0..k)
        .map(|_| {
            let q = rng.gen_range(1..=6);
            rat(rng.gen_range(0..q), q)
        })
        .collect()
}

/// Canonical factors of the example corpus, including pushforwards and φ-duals.
pub fn factor_corpus() -> Vec<(String, UnitaryFactor)> {
    let mut out = Vec::new();
    let z = |k: usize| vec![Rat::zero(); k];
    for d in [vec![1], vec![2], vec![3], vec![1, 2], vec![2, 4]] {
        let k = 2 * d.len();
        let tw: Vec<Rat> = (0..k).map(|i| rat(i as i64 + 1, 7)).collect();
        out.push((format!("type {d:?}"), line(Lattice::standard(k), skew_blocks(&d), tw)));
    }
    let degenerate = RatMatrix::from_i64(&[&[0, 3, 0, 0], &[-3, 0, 0, 0], &[0, 0, 0, 0], &[0, 0, 0, 0]]);
    out.push(("degenerate type (3) in rank 4".into(), line(Lattice::standard(4), degenerate, vec![rat(1, 2), rat(0, 1), rat(0, 1), rat(0, 1)])));
    out.push(("flat on Z^3".into(), line(Lattice::standard(3), RatMatrix::zeros(3, 3), vec![rat(1, 3), rat(1, 5), rat(0, 1)])));
    let sub = diag_lattice(&[2, 1]);
    let on_sub = line(sub.clone(), skew_blocks(&[2]), vec![rat(1, 2), rat(0, 1)]);
    out.push(("type (2) on 2Z+Z".into(), on_sub.clone()));
    let push = pushforward_isogeny(&on_sub, &Isogeny::new(sub, Lattice::standard(2)).expect("isogeny")).expect("pushforward");
    out.push(("pushforward of type (2) along 2Z+Z in Z^2".into(), push));
    for d in [vec![2], vec![3], vec![1, 2]] {
        let k = 2 * d.len();
        let l = line(Lattice::standard(k), skew_blocks(&d), z(k));
        let phi = phi_dual_bundle(&l, &PhiDualOptions::default()).expect("phi dual");
        out.push((format!("L^ of type {d:?}"), phi.l_hat));
        out.push((format!("(phi_L)_* L^-1 of type {d:?}"), phi.full));
    }
    out
}

fn cocycle(seed: u64) -> Vec<Tally> {
    let corpus = factor_corpus();
    let obs = fan_out(&corpus, |(name, f)| {
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, name.len() as u64 * 31 + f.dim() as u64));
        let k = f.dim();
        let mut out: Vec<Observation> = Vec::new();
        for _ in 0..200 {
            let x: Vec<Rat> = (0..k).map(|_| rat(rng.gen_range(-20..=20), rng.gen_range(1..=7))).collect();
            let lam: Vec<Int> = (0..k).map(|_| int(rng.gen_range(-3..=3))).collect();
            let mu: Vec<Int> = (0..k).map(|_| int(rng.gen_range(-3..=3))).collect();
            let sum: Vec<Int> = lam.iter().zip(&mu).map(|(a, b)| a + b).collect();
            let xl: Vec<Rat> = x.iter().zip(&lam).map(|(a, b)| a + Rat::from_integer(b.clone())).collect();
            let lhs = f.evaluate_coords(&x, &sum);
            let rhs = f.evaluate_coords(&xl, &mu).mul(&f.evaluate_coords(&x, &lam));
            out.push(("a(v,l+m) = a(v+l,m) a(v,l) exactly", lhs == rhs, None));
            let lr: Vec<Rat> = lam.iter().map(|a| Rat::from_integer(a.clone())).collect();
            let mr: Vec<Rat> = mu.iter().map(|a| Rat::from_integer(a.clone())).collect();
            let semi = f.semirep(&mu).mul(&f.semirep(&lam)).scaled(&Phase::new(f.curvature.bilinear(&lr, &mr)));
            out.push(("U(l+m) = exp(i pi F(l,m)) U(m) U(l) exactly", f.semirep(&sum) == semi, None));
        }
        out
    });
    let mut ledger = Ledger::default();
    obs.into_iter().for_each(|o| ledger.absorb(o));
    ledger.0
}

/// Sublattices of ℤⁿ of index at most `max` in Hermite form.
pub fn sublattices_up_to(n: usize, max: i64) -> Vec<Lattice> {
    fn diags(n: usize, max: i64) -> Vec<Vec<i64>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for d in 1..=max {
            for rest in diags(n - 1, max / d) {
                let mut v = vec![d];
                v.extend(rest);
                out.push(v);
            }
        }
        out
    }
    let mut out = Vec::new();
    for d in diags(n, max) {
        // upper triangular, entry (i,j) for j > i ranging over [0, d_i)
        let slots: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let count: i64 = slots.iter().map(|&(i, _)| d[i]).product();
        for mut idx in 0..count {
            let mut m = vec![vec![0i64; n]; n];
            for (i, row) in m.iter_mut().enumerate() {
                row[i] = d[i];
            }
            for &(i, j) in &slots {
                m[i][j] = idx % d[i];
                idx /= d[i];
            }
            let cols: Vec<Vec<Int>> = (0..n).map(|j| (0..n).map(|i| int(m[i][j])).collect()).collect();
            out.push(Lattice::from_int_cols(n, &cols));
        }
    }
    out
}

fn kernel_characters(seed: u64) -> Vec<Tally> {
    let mut cases = Vec::new();
    for n in 1..=3 {
        for l in sublattices_up_to(n, 8) {
            cases.push(l);
        }
    }
    let obs = fan_out(&cases, |src| {
        let n = src.ambient_rank();
        let salt = src.basis_vectors().iter().flatten().map(|q| q.to_integer().to_string().len() as u64).sum::<u64>();
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, salt * 131 + n as u64));
        let iso = Isogeny::new(src.clone(), Lattice::standard(n)).expect("finite index");
        let f = AlternatingForm::zero(src.clone());
        let mut out: Vec<Observation> = Vec::new();
        for _ in 0..20 {
            let vals: Vec<Phase> = random_turns(n, &mut rng).iter().map(Phase::turns).collect();
            let chi = Semicharacter::from_values(&f, &vals).expect("flat semicharacter");
            let l = canonical_factor_u1(&f, &chi).expect("flat factor");
            let ok = match (kernel_decomposition(&l, &iso), enumerate_dual_fiber(&l, &iso)) {
                (Ok(dec), Ok(fiber)) => {
                    let mut got = dec.characters;
                    got.sort();
                    got == fiber
                }
                _ => false,
            };
            out.push(("characters of f_*L = dual fiber as multisets", ok, None));
        }
        out
    });
    let mut ledger = Ledger::default();
    obs.into_iter().for_each(|o| ledger.absorb(o));
    ledger.0
}

fn tensor_splitting(seed: u64) -> Vec<Tally> {
    let mut cases = Vec::new();
    for (t, d) in [vec![1], vec![2], vec![3], vec![1, 2]].into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, 1000 + t as u64));
        for _ in 0..5 {
            let k = 2 * d.len();
            cases.push((d.clone(), random_turns(k, &mut rng)));
        }
    }
    // a degenerate curvature with trivial holonomy on the kernel
    cases.push((vec![3, 0], vec![rat(1, 2), rat(0, 1), rat(0, 1), rat(0, 1)]));
    let obs = fan_out(&cases, |(d, twist)| {
        let k = twist.len();
        let degree: i64 = d.iter().filter(|&&x| x != 0).product();
        let l = line(Lattice::standard(k), skew_blocks(d), twist.clone());
        let mut out: Vec<Observation> = Vec::new();
        match phi_dual_bundle(&l, &PhiDualOptions::default()) {
            Ok(p) => {
                let dd = degree as usize;
                out.push(("rank of full is d^2 and rank of L^ is d", p.full.rank == dd * dd && p.l_hat.rank == dd, None));
                let defect = trace_identity_defect(&p.full, &p.l_hat, 2);
                out.push(("tr full = d tr L^ on the box {-2..2}", defect < NUMERIC_TOL, Some(defect)));
                let r = p.conjugator.residual;
                out.push(("conjugator realizes full = rho(L^)", r < NUMERIC_TOL, Some(r)));
            }
            Err(_) => {
                out.push(("rank of full is d^2 and rank of L^ is d", false, None));
            }
        }
        out
    });
    let mut ledger = Ledger::default();
    obs.into_iter().for_each(|o| ledger.absorb(o));
    ledger.0
}

fn generator_of_kind<R: Rng>(form: &SpForm, kind: &str, rng: &mut R) -> SpGenerator {
    loop {
        let g = random_generator(form, rng);
        let nontrivial = match &g {
            SpGenerator::Translation(s) => !s.is_zero(),
            SpGenerator::Rotation { a, .. } => *a != IntMatrix::identity(form.r()),
            SpGenerator::SemiInvolution(_) => true,
        };
        if g.kind() == kind && nontrivial {
            return g;
        }
    }
}

fn choice_independence(seed: u64) -> Vec<Tally> {
    let mut cases = Vec::new();
    for (t, d) in [vec![2], vec![1, 2]].into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, 2000 + t as u64));
        for _ in 0..2 {
            let k = 2 * d.len();
            cases.push((d.clone(), random_turns(k, &mut rng), rng.gen::<u64>()));
        }
    }
    let obs = fan_out(&cases, |(d, twist, case_seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(*case_seed);
        let k = twist.len();
        let l = line(Lattice::standard(k), skew_blocks(d), twist.clone());
        let mut out: Vec<Observation> = Vec::new();
        let Ok(base) = phi_dual_bundle(&l, &PhiDualOptions::default()) else {
            out.push(("default choices succeed", false, None));
            return out;
        };
        let compare = |inv: &'static str, opts: PhiDualOptions, out: &mut Vec<Observation>| match phi_dual_bundle(&l, &opts) {
            Ok(v) => {
                let eq = equivalence(&v.l_hat, &base.l_hat);
                let full_eq = equivalence(&v.full, &base.full);
                let r = eq.as_ref().map_or(f64::INFINITY, |e| e.conjugator.residual);
                out.push((inv, eq.is_some() && full_eq.is_some() && r < NUMERIC_TOL, Some(r)));
            }
            Err(_) => out.push((inv, false, None)),
        };
        let deg = base.full.rank;
        let mut perm: Vec<usize> = (0..deg).collect();
        perm.reverse();
        compare("permuted coset representatives", PhiDualOptions { rep_permutation: Some(perm), ..Default::default() }, &mut out);
        let mut perm: Vec<usize> = (0..deg).collect();
        perm.shuffle(&mut rng);
        let shifts: Vec<Vec<Int>> = (0..deg).map(|_| (0..k).map(|_| int(rng.gen_range(-2..=2))).collect()).collect();
        compare(
            "permuted coset representatives",
            PhiDualOptions { rep_permutation: Some(perm), rep_shifts: Some(shifts), ..Default::default() },
            &mut out,
        );
        for j in 0..k {
            let mut e = vec![Rat::zero(); k];
            e[j] = Rat::one();
            compare("kernel-character twist of N", PhiDualOptions { n_twist: Some(e), ..Default::default() }, &mut out);
        }
        let form = AlternatingForm::standard(skew_blocks(d)).expect("skew");
        let p = symplectic_normal_form(&form).expect("integral").basis_change;
        let sp = SpForm::from_i64(d);
        for (kind, inv) in [
            ("translation", "isotropic decomposition moved by a translation"),
            ("rotation", "isotropic decomposition moved by a rotation"),
            ("semi-involution", "isotropic decomposition moved by a semi-involution"),
        ] {
            let g = generator_of_kind(&sp, kind, &mut rng);
            let frame = p.mul(&g.matrix(sp.r()).transpose());
            compare(inv, PhiDualOptions { frame: Some(frame), ..Default::default() }, &mut out);
        }
        out
    });
    let mut ledger = Ledger::default();
    obs.into_iter().for_each(|o| ledger.absorb(o));
    ledger.0
}

fn sp_roundtrip(seed: u64) -> Vec<Tally> {
    let forms: Vec<Vec<i64>> = vec![vec![1], vec![2], vec![1, 2], vec![2, 4]];
    let obs = fan_out(&forms, |d| {
        let form = SpForm::from_i64(d);
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, 3000 + d.iter().sum::<i64>() as u64 * 7 + d.len() as u64));
        let mut out: Vec<Observation> = Vec::new();
        for _ in 0..100 {
            let s = random_element(&form, 8, &mut rng);
            out.push(("random products lie in Sp(F,Z)", form.is_member(&s), None));
            match decompose_sp(&form, &s) {
                Ok(gens) => {
                    out.push(("decomposition recomposes exactly", compose(&gens, form.r()) == s, None));
                    out.push(("every generator satisfies its kind invariant", gens.iter().all(|g| g.is_valid(&form)), None));
                }
                Err(_) => out.push(("decomposition recomposes exactly", false, None)),
            }
        }
        out
    });
    let mut ledger = Ledger::default();
    obs.into_iter().for_each(|o| ledger.absorb(o));
    ledger.0
}

fn skew2(a: Rat) -> RatMatrix {
    RatMatrix::from_rows(vec![vec![Rat::zero(), a.clone()], vec![-a, Rat::zero()]])
}

/// Named branes of the T-duality corpus with their T-duality options.
pub fn brane_corpus() -> Vec<(&'static str, Brane, TDualOptions)> {
    let z = |n: usize| vec![Rat::zero(); n];
    let plane = || Lattice::from_int_cols(3, &[vec![int(1), int(0), int(0)], vec![int(0), int(1), int(0)]]);
    let bundle = |sub: Lattice, b: Vec<Rat>, f: RatMatrix, twist: Vec<Rat>| {
        Brane::point(sub, b, Payload::Bundle { fiber_form: f, twist }).expect("corpus brane")
    };
    let family = FamilyData {
        base_form: skew2(rat(1, 2)),
        g0: vec![rat(1, 5), rat(0, 1)],
        g1: RatMatrix::from_rows(vec![vec![rat(1, 1), rat(0, 1)], vec![rat(0, 1), rat(-1, 3)]]),
        b1: RatMatrix::from_rows(vec![vec![rat(0, 1), rat(0, 1)], vec![rat(0, 1), rat(0, 1)], vec![rat(1, 2), rat(1, 1)]]),
    };
    let affine = Brane::new(plane(), z(3), Payload::Bundle { fiber_form: skew2(rat(1, 1)), twist: z(2) }, family)
        .expect("affine family brane");
    let family_opts = TDualOptions {
        base_points: vec![vec![rat(0, 1), rat(0, 1)], vec![rat(1, 3), rat(-1, 2)]],
        ..Default::default()
    };
    vec![
        ("flat character brane", bundle(Lattice::standard(2), z(2), RatMatrix::zeros(2, 2), vec![rat(1, 3), rat(0, 1)]), TDualOptions::default()),
        ("section brane", bundle(Lattice::zero(2), vec![rat(1, 3), rat(0, 1)], RatMatrix::zeros(0, 0), vec![]), TDualOptions::default()),
        ("space-filling principal brane", bundle(Lattice::standard(2), z(2), skew2(rat(1, 1)), vec![rat(1, 4), rat(1, 3)]), TDualOptions::default()),
        ("H = 1/2 brane", Brane::point(Lattice::standard(2), z(2), Payload::Form(skew2(rat(1, 2)))).expect("form brane"), TDualOptions::default()),
        ("H = 3/2 brane", Brane::point(Lattice::standard(2), z(2), Payload::Form(skew2(rat(3, 2)))).expect("form brane"), TDualOptions::default()),
        ("affine-family brane", affine, family_opts),
        ("degree-two space-filling brane", bundle(Lattice::standard(2), z(2), skew2(rat(2, 1)), z(2)), TDualOptions::default()),
        ("flat subtorus brane in rank 3", bundle(plane(), vec![rat(0, 1), rat(0, 1), rat(1, 3)], RatMatrix::zeros(2, 2), vec![rat(1, 3), rat(1, 5)]), TDualOptions::default()),
    ]
}

fn tdual_pipeline(seed: u64) -> Vec<Tally> {
    let corpus = brane_corpus();
    let obs = fan_out(&corpus, |(_, brane, opts)| {
        let opts = TDualOptions { seed, ..opts.clone() };
        let mut out: Vec<Observation> = Vec::new();
        let rep = match brane_tdual(brane, &opts) {
            Ok(r) => r,
            Err(_) => {
                out.push(("pipeline runs", false, None));
                return out;
            }
        };
        let td = &rep.data.rational_type;
        let sq = |f: fn(&(Int, Int)) -> &Int| td.pairs.iter().fold(Int::one(), |a, p| a * f(p) * f(p));
        let counts = rep.data.fiber_counts == (sq(|p| &p.0), sq(|p| &p.1));
        out.push(("exact sequences, ranks, indices and fiber counts", rep.data.checks.all() && counts, None));
        out.push(("p_Z*F + P|_Z - p^_Z*F^ vanishes exactly", rep.two_form.holds(), None));
        if matches!(brane.payload, Payload::Bundle { .. }) {
            let worst = rep.fibers.iter().flat_map(|f| f.leaf_checks.iter().map(|c| c.residual)).fold(0.0, f64::max);
            let ok = !rep.fibers.is_empty() && rep.fibers.iter().all(|f| f.curvature_matches);
            out.push(("dual bundle curvature equals the dual fiber form", ok, None));
            // leaves can only move when F is nonzero or several components meet a dual point
            let leaves_move = rep.data.leaves_per_dual.order > Int::one()
                || matches!(&brane.payload, Payload::Bundle { fiber_form, .. } if !fiber_form.is_zero());
            let all_leaves = rep.fibers.iter().all(|f| !f.leaf_checks.is_empty() || !leaves_move);
            out.push(("E^ is independent of the leaf over each dual", all_leaves && worst < NUMERIC_TOL, Some(worst)));
            if rep.data.dual_rank.is_one() && brane.family.base_dim() == 0 {
                let ok = double_dual(brane, &opts).map_or(false, |dd| {
                    dd.same_lattice && dd.same_form && dd.translation_sign == Some(1) && &dd.double == brane
                });
                out.push(("double dual returns the brane for d = 1", ok, None));
            }
        }
        out
    });
    let mut ledger = Ledger::default();
    obs.into_iter().for_each(|o| ledger.absorb(o));
    ledger.0
}

fn higher_rank(seed: u64) -> Vec<Tally> {
    let cases = vec![(rat(1, 2), (2usize, 1usize)), (rat(3, 2), (2, 3))];
    let obs = fan_out(&cases, |(h, ranks)| {
        let brane = Brane::point(Lattice::standard(2), vec![Rat::zero(); 2], Payload::Form(skew2(h.clone()))).expect("form brane");
        let mut out: Vec<Observation> = Vec::new();
        match higher_rank_pair(&brane, seed) {
            Ok(p) => {
                out.push(("ranks (m, n) of (E, E^)", p.ranks == *ranks, None));
                out.push(("curvatures are F Id and F^ Id exactly", p.curvature_matches == (true, true), None));
                out.push(("Poincare restriction identity", p.poincare_identity, None));
                let r = p.e_conjugator.residual.max(p.e_hat_conjugator.residual);
                out.push(("tensor splittings of the pushforwards", r < NUMERIC_TOL, Some(r)));
            }
            Err(_) => out.push(("ranks (m, n) of (E, E^)", false, None)),
        }
        out
    });
    let mut ledger = Ledger::default();
    obs.into_iter().for_each(|o| ledger.absorb(o));
    ledger.0
}

fn semiflat(seed: u64) -> Vec<Tally> {
    let mut jobs: Vec<(usize, u64)> = Vec::new();
    for n in 1..=3 {
        for i in 0..20 {
            jobs.push((n, sub_seed(seed, 4000 + 100 * n as u64 + i)));
        }
    }
    let obs = fan_out(&jobs, |&(n, s)| {
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let t = random_rational_triple(n, &mut rng);
        let f = random_rational_matrix(2 * n, &mut rng);
        let mut out: Vec<Observation> = Vec::new();
        let q = semiflat_structures(&t).residuals().max();
        out.push(("quaternionic relations of the semi-flat triple", q < 1e-10, Some(q)));
        let leg = legendre_point(&t).and_then(|l| legendre_point(&l)).map(|ll| ll.distance(&t));
        let lr = leg.unwrap_or(f64::INFINITY);
        out.push(("Legendre transform is an involution", lr < 1e-12, Some(lr)));
        match tdual_swap_check(&t, &f) {
            Ok(rep) => {
                let dims = rep.eigen_dims.iter().all(|&d| d == rep.expected_dim);
                let quat = rep.quaternion.max().max(rep.tangent_quaternion.max()).max(rep.generalized_quaternion).max(rep.gcs_residual);
                out.push(("generalized complex structures and their quaternion relations", dims && quat < 1e-10, Some(quat)));
                let swap = rep.matches.iter().map(|m| m.distance).fold(0.0, f64::max);
                let swap_ok = rep.swap_preserves_pairing && rep.swap_involution && rep.matches.len() == 6;
                out.push(("fiber swap exchanges the six +i eigenbundles", swap_ok && swap < NUMERIC_TOL, Some(swap)));
                let def = rep.deformation.iter().map(|m| m.distance).fold(rep.deformation_product, f64::max);
                out.push(("deformed structures swap to B-field transforms", def < NUMERIC_TOL, Some(def)));
                let rot = rep.rotation.iter().map(|r| r.1).fold(rep.tangent_legendre, f64::max);
                out.push(("tangent Legendre model and principal rotation", rot < GCS_TOL, Some(rot)));
            }
            Err(_) => out.push(("fiber swap exchanges the six +i eigenbundles", false, None)),
        }
        out
    });
    let mut ledger = Ledger::default();
    obs.into_iter().for_each(|o| ledger.absorb(o));
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, 5000));
    let subspaces: Vec<(usize, usize, u64)> = (0..100)
        .map(|_| {
            let g = rng.gen_range(1..=4);
            (g, rng.gen_range(0..=g), rng.gen())
        })
        .collect();
    let coiso = fan_out(&subspaces, |&(g, k, s)| {
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let w = random_coisotropic(g, k, &mut rng);
        let ok = coisotropic_characteristic(&w).map_or(false, |r| r.holds() && r.delta.cols() == k);
        vec![("coisotropic characteristic identities hold exactly", ok, None)]
    });
    coiso.into_iter().for_each(|o| ledger.absorb(o));
    ledger.0
}

fn holomorphic_shadow(_seed: u64) -> Vec<Tally> {
    let cases: Vec<(Vec<i64>, Vec<i64>, Vec<Rat>)> = vec![
        (vec![2, 1], vec![0], vec![rat(0, 1); 2]),
        (vec![1, 1], vec![1], vec![rat(1, 3), rat(1, 4)]),
        (vec![2, 1], vec![2], vec![rat(1, 2), rat(0, 1)]),
        (vec![3, 1], vec![3], vec![rat(0, 1); 2]),
        (vec![2, 1, 1, 1], vec![1, 2], vec![rat(1, 2), rat(0, 1), rat(1, 3), rat(0, 1)]),
    ];
    let obs = fan_out(&cases, |(diag, d, twist)| {
        let lat = diag_lattice(diag);
        let k = diag.len();
        let f = AlternatingForm::new(lat.clone(), skew_blocks(d)).expect("skew");
        let chi = Semicharacter::canonical(&f, twist.clone()).expect("semicharacter");
        let i0 = standard_complex::<Rat>(k / 2).to_f64();
        let mut out: Vec<Observation> = Vec::new();
        let Ok(h) = canonical_factor_holo(&f, &i0, &chi) else {
            out.push(("holomorphic and unitary semi-representations agree entrywise", false, None));
            return out;
        };
        let iso = Isogeny::new(lat, Lattice::standard(k)).expect("isogeny");
        let samples: Vec<Vec<Rat>> = (0..3).map(|s| (0..k).map(|i| rat((s * 3 + i as i64) % 5 - 2, 7)).collect()).collect();
        match holo_pushforward_along(&h, &iso, &samples) {
            Ok(rep) => {
                out.push(("holomorphic and unitary semi-representations agree entrywise", rep.exact_equal && rep.holomorphic == rep.unitary, None));
                out.push((
                    "gauge-stripped holomorphic factor matches its closed form",
                    rep.evaluation_residual < NUMERIC_TOL,
                    Some(rep.evaluation_residual),
                ));
            }
            Err(_) => out.push(("holomorphic and unitary semi-representations agree entrywise", false, None)),
        }
        out
    });
    let mut ledger = Ledger::default();
    obs.into_iter().for_each(|o| ledger.absorb(o));
    ledger.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sublattice_counts_match_divisor_sums() {
        // sublattices of index N in ℤ² number σ₁(N)
        let by_index = |n: usize, max: i64| {
            let mut c = vec![0usize; max as usize + 1];
            for l in sublattices_up_to(n, max) {
                let idx = Lattice::standard(n).index_of(&l).unwrap();
                c[idx.to_string().parse::<usize>().unwrap()] += 1;
            }
            c
        };
        assert_eq!(by_index(2, 6), vec![0, 1, 3, 4, 7, 6, 12]);
        assert_eq!(by_index(1, 4), vec![0, 1, 1, 1, 1]);
    }

    #[test]
    fn unknown_suite_is_rejected() {
        assert!(run_suites("nope", 1).is_err());
    }
}
