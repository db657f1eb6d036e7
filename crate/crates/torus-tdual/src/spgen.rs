//! Membership and generator decomposition for `Sp(𝓕,ℤ)`, `𝓕 = [[0,F],[−F,0]]`
//! with `F = diag(d₁,…,d_r)`: translations, rotations and semi-involutions.

use num_traits::{One, Signed, Zero};
use rand::Rng;
use thiserror::Error;

use crate::mat::{rat_int, Int, IntMatrix, Rat, RatMatrix};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpError {
    #[error("matrix is not in Sp(F, Z): S·𝓕·Sᵀ ≠ 𝓕 or det ≠ 1")]
    NotSymplectic,
    #[error("matrix size does not match the form")]
    Shape,
    #[error("divisors must be positive with dᵢ | dᵢ₊₁")]
    BadDivisors,
}

/// The form data `F = diag(d₁,…,d_r)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpForm {
    pub divisors: Vec<Int>,
}

impl SpForm {
    pub fn new(divisors: Vec<Int>) -> Result<Self, SpError> {
        if divisors.iter().any(|d| !d.is_positive())
            || divisors.windows(2).any(|w| !(&w[1] % &w[0]).is_zero())
        {
            return Err(SpError::BadDivisors);
        }
        Ok(SpForm { divisors })
    }

    pub fn from_i64(d: &[i64]) -> Self {
        Self::new(d.iter().map(|&x| Int::from(x)).collect()).expect("valid divisors")
    }

    pub fn r(&self) -> usize {
        self.divisors.len()
    }

    pub fn f(&self) -> IntMatrix {
        IntMatrix::diag(&self.divisors)
    }

    /// `𝓕 = [[0,F],[−F,0]]`.
    pub fn big(&self) -> IntMatrix {
        let r = self.r();
        IntMatrix::from_fn(2 * r, 2 * r, |i, j| {
            if i < r && j == i + r {
                self.divisors[i].clone()
            } else if j < r && i == j + r {
                -self.divisors[j].clone()
            } else {
                Int::zero()
            }
        })
    }

    pub fn is_member(&self, s: &IntMatrix) -> bool {
        let r = self.r();
        s.rows() == 2 * r
            && s.cols() == 2 * r
            && s.mul(&self.big()).mul(&s.transpose()) == self.big()
            && s.det().is_one()
    }

    /// `SF = FSᵀ`.
    pub fn is_f_symmetric(&self, s: &RatMatrix) -> bool {
        let f = self.f().to_rat();
        s.mul(&f) == f.mul(&s.transpose())
    }

    /// `D = F·A^{-T}·F⁻¹` when integral.
    pub fn rotation_partner(&self, a: &IntMatrix) -> Option<IntMatrix> {
        let f = self.f().to_rat();
        let ainv = a.to_rat().inverse()?;
        f.mul(&ainv.transpose()).mul(&f.inverse()?).to_int()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SpGenerator {
    /// `[[I,S],[0,I]]`, `S` F-symmetric.
    Translation(IntMatrix),
    /// `diag(A, D)` with `D = F·A^{-T}·F⁻¹`.
    Rotation { a: IntMatrix, d: IntMatrix },
    /// `[[J, I−J],[J−I, J]]` for a 0/1 diagonal `J`.
    SemiInvolution(Vec<bool>),
}

impl SpGenerator {
    pub fn kind(&self) -> &'static str {
        match self {
            SpGenerator::Translation(_) => "translation",
            SpGenerator::Rotation { .. } => "rotation",
            SpGenerator::SemiInvolution(_) => "semi-involution",
        }
    }

    pub fn rotation(form: &SpForm, a: IntMatrix) -> Option<Self> {
        let d = form.rotation_partner(&a)?;
        Some(SpGenerator::Rotation { a, d })
    }

    pub fn matrix(&self, r: usize) -> IntMatrix {
        let id = IntMatrix::identity(r);
        let z = IntMatrix::zeros(r, r);
        match self {
            SpGenerator::Translation(s) => id.hcat(s).vcat(&z.hcat(&id)),
            SpGenerator::Rotation { a, d } => a.block_diag(d),
            SpGenerator::SemiInvolution(j) => {
                let jm = IntMatrix::diag(&j.iter().map(|&b| Int::from(b as i64)).collect::<Vec<_>>());
                let ij = id.sub(&jm);
                jm.hcat(&ij).vcat(&ij.neg().hcat(&jm))
            }
        }
    }

    /// Checks the defining equation of the generator's kind.
    pub fn is_valid(&self, form: &SpForm) -> bool {
        match self {
            SpGenerator::Translation(s) => form.is_f_symmetric(&s.to_rat()),
            SpGenerator::Rotation { a, d } => form.rotation_partner(a).as_ref() == Some(d),
            SpGenerator::SemiInvolution(j) => j.len() == form.r(),
        }
    }

    pub fn inverse(&self, form: &SpForm) -> Vec<SpGenerator> {
        match self {
            SpGenerator::Translation(s) => vec![SpGenerator::Translation(s.neg())],
            SpGenerator::Rotation { a, .. } => {
                let ai = a.to_rat().inverse().and_then(|m| m.to_int()).expect("unimodular");
                vec![SpGenerator::rotation(form, ai).expect("inverse rotation")]
            }
            SpGenerator::SemiInvolution(j) => {
                // S_J² = diag(2J−I, 2J−I), so S_J⁻¹ = S_J²·S_J
                let sq = IntMatrix::diag(&j.iter().map(|&b| Int::from(if b { 1 } else { -1 })).collect::<Vec<_>>());
                vec![SpGenerator::Rotation { a: sq.clone(), d: sq }, self.clone()]
            }
        }
    }

    fn is_identity(&self, r: usize) -> bool {
        match self {
            SpGenerator::SemiInvolution(_) => false,
            _ => self.matrix(r) == IntMatrix::identity(2 * r),
        }
    }
}

pub fn compose(gens: &[SpGenerator], r: usize) -> IntMatrix {
    gens.iter().fold(IntMatrix::identity(2 * r), |acc, g| acc.mul(&g.matrix(r)))
}

/// Merges neighbours of the same kind and drops identities.
fn simplify(gens: Vec<SpGenerator>, form: &SpForm) -> Vec<SpGenerator> {
    let r = form.r();
    let mut out: Vec<SpGenerator> = Vec::new();
    for g in gens {
        if g.is_identity(r) {
            continue;
        }
        let merged = match (out.last(), &g) {
            (Some(SpGenerator::Translation(a)), SpGenerator::Translation(b)) => Some(SpGenerator::Translation(a.add(b))),
            (Some(SpGenerator::Rotation { a: a1, d: d1 }), SpGenerator::Rotation { a: a2, d: d2 }) => {
                Some(SpGenerator::Rotation { a: a1.mul(a2), d: d1.mul(d2) })
            }
            (Some(SpGenerator::SemiInvolution(j1)), SpGenerator::SemiInvolution(j2)) if j1 == j2 => {
                let sq = IntMatrix::diag(&j1.iter().map(|&b| Int::from(if b { 1 } else { -1 })).collect::<Vec<_>>());
                Some(SpGenerator::Rotation { a: sq.clone(), d: sq })
            }
            _ => None,
        };
        match merged {
            Some(m) => {
                out.pop();
                if !m.is_identity(r) {
                    out.push(m);
                }
            }
            None => out.push(g),
        }
    }
    out
}

fn blocks(s: &IntMatrix, r: usize) -> [IntMatrix; 4] {
    [s.sub_block(0, 0, r, r), s.sub_block(0, r, r, r), s.sub_block(r, 0, r, r), s.sub_block(r, r, r, r)]
}

/// Outcome of the F-symmetric Euclid step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reduction {
    pub s: IntMatrix,
    /// `det(T − mS)`.
    pub det: Rat,
    /// Whether `|det| < (d₁/d_r)|m|^r` also holds.
    pub scaled_bound: bool,
}

/// Integral F-symmetric `S` with `T − mS = 0` when `m` divides `T`, and
/// `0 < |det(T − mS)| < |m|^r` otherwise. Free off-diagonal entries are 0.
pub fn f_symmetric_reduce(form: &SpForm, t: &RatMatrix, m: &Int) -> Reduction {
    assert!(!m.is_zero());
    let r = t.rows();
    let mr = rat_int(m);
    let s = reduce_rec(&form.divisors, t, &mr);
    let diff = t.sub(&s.to_rat().scale(&mr));
    let det = if r == 0 { Rat::one() } else { diff.det() };
    let bound = rat_int(&form.divisors[0]) / rat_int(&form.divisors[r - 1]) * mr.abs().pow(r as i32);
    let scaled_bound = diff.is_zero() || det.abs() < bound;
    Reduction { s, det, scaled_bound }
}

fn divides(m: &Rat, t: &Rat) -> bool {
    (t / m).is_integer()
}

/// Chooses `s` with `0 < c₀ + slope·s ≤ |slope|` (sign-normalised).
fn euclid(c0: &Rat, slope: &Rat) -> Int {
    let a = slope.abs();
    let (sl, sign) = if slope.is_positive() { (slope.clone(), 1) } else { (-slope.clone(), -1) };
    let s = ((&a - c0) / sl).floor().to_integer();
    if sign > 0 { s } else { -s }
}

fn reduce_rec(d: &[Int], t: &RatMatrix, m: &Rat) -> IntMatrix {
    let r = t.rows();
    if (0..r).all(|i| (0..r).all(|j| divides(m, &t[(i, j)]))) {
        return t.scale(&m.recip()).to_int().expect("divisible");
    }
    if r == 1 {
        return IntMatrix::from_fn(1, 1, |_, _| (&t[(0, 0)] / m).floor().to_integer());
    }
    let diag_bad = (0..r).find(|&i| !divides(m, &t[(i, i)]));
    let (bi, bj) = match diag_bad {
        Some(i) => (i, i),
        None => {
            let mut found = (0, 1);
            'f: for i in 0..r {
                for j in 0..r {
                    if !divides(m, &t[(i, j)]) {
                        found = (i.min(j), i.max(j));
                        break 'f;
                    }
                }
            }
            found
        }
    };
    let mut s = IntMatrix::zeros(r, r);
    if r == 2 && bi != bj {
        // both diagonal entries divisible: fix them, reduce the off-diagonal pair
        s[(0, 0)] = (&t[(0, 0)] / m).to_integer();
        s[(1, 1)] = (&t[(1, 1)] / m).to_integer();
        let s01 = (&t[(0, 1)] / m).round().to_integer();
        let ratio = (&d[1] / &d[0]).clone();
        s[(0, 1)] = s01.clone();
        s[(1, 0)] = s01 * ratio;
        return s;
    }
    // pick k outside the row and column of the bad entry, recurse on the complement
    let k = if r == 2 { 1 - bi } else { (0..r).find(|&k| k != bi && k != bj).expect("r ≥ 3") };
    let keep: Vec<usize> = (0..r).filter(|&i| i != k).collect();
    let sub_d: Vec<Int> = keep.iter().map(|&i| d[i].clone()).collect();
    let s1 = reduce_rec(&sub_d, &t.select_rows(&keep).select_cols(&keep), m);
    for (a, &i) in keep.iter().enumerate() {
        for (b, &j) in keep.iter().enumerate() {
            s[(i, j)] = s1[(a, b)].clone();
        }
    }
    let det_at = |skk: &Int| -> Rat {
        let mut s2 = s.clone();
        s2[(k, k)] = skk.clone();
        t.sub(&s2.to_rat().scale(m)).det()
    };
    let c0 = det_at(&Int::zero());
    let slope = det_at(&Int::one()) - &c0;
    let skk = euclid(&c0, &slope);
    s[(k, k)] = skk;
    s
}

/// `S` F-symmetric integral with `B − AS = 0` or `0 < |det(B − AS)| < |det A|`.
pub fn determinant_descent_step(form: &SpForm, a: &IntMatrix, b: &IntMatrix) -> IntMatrix {
    let m = a.det().abs();
    let ainv = a.to_rat().inverse().expect("nonsingular A");
    let q = ainv.mul(&b.to_rat());
    if let Some(s) = q.to_int() {
        return s;
    }
    let t = q.scale(&rat_int(&m));
    f_symmetric_reduce(form, &t, &m).s
}

/// Small F-symmetric integral `S` with `det(D + C·S) ≠ 0`.
fn unlock_translation(form: &SpForm, c: &IntMatrix, d: &IntMatrix) -> IntMatrix {
    let r = form.r();
    let slots: Vec<(usize, usize)> = (0..r).flat_map(|i| (i..r).map(move |j| (i, j))).collect();
    for bound in 1i64.. {
        let side = (2 * bound + 1) as usize;
        let total = side.pow(slots.len() as u32);
        for mut idx in 0..total {
            let mut s = IntMatrix::zeros(r, r);
            for &(i, j) in &slots {
                let v = Int::from((idx % side) as i64 - bound);
                idx /= side;
                if i == j {
                    s[(i, i)] = v;
                } else {
                    s[(j, i)] = &v * (&form.divisors[j] / &form.divisors[i]);
                    s[(i, j)] = v;
                }
            }
            if !d.add(&c.mul(&s)).det().is_zero() {
                return s;
            }
        }
    }
    unreachable!()
}

/// Writes `S ∈ Sp(𝓕,ℤ)` as an ordered product of generators.
pub fn decompose_sp(form: &SpForm, s: &IntMatrix) -> Result<Vec<SpGenerator>, SpError> {
    let r = form.r();
    if s.rows() != 2 * r || s.cols() != 2 * r {
        return Err(SpError::Shape);
    }
    if !form.is_member(s) {
        return Err(SpError::NotSymplectic);
    }
    let omega = SpGenerator::SemiInvolution(vec![false; r]);
    let mut cur = s.clone();
    let mut applied: Vec<SpGenerator> = Vec::new();
    let apply = |cur: &mut IntMatrix, g: SpGenerator, applied: &mut Vec<SpGenerator>| {
        *cur = cur.mul(&g.matrix(r));
        debug_assert!(form.is_member(cur));
        applied.push(g);
    };
    loop {
        let [_, _, c, d] = blocks(&cur, r);
        if c.is_zero() {
            break;
        }
        if d.det().is_zero() {
            if !c.det().is_zero() {
                apply(&mut cur, omega.clone(), &mut applied);
            } else {
                let t = unlock_translation(form, &c, &d);
                apply(&mut cur, SpGenerator::Translation(t), &mut applied);
            }
            continue;
        }
        // bottom row [C D] → [−D, C] → [−D, C − (−D)·S']
        apply(&mut cur, omega.clone(), &mut applied);
        let [_, _, a2, b2] = blocks(&cur, r);
        let step = determinant_descent_step(form, &a2, &b2);
        apply(&mut cur, SpGenerator::Translation(step.neg()), &mut applied);
    }
    let [a, b, _, _] = blocks(&cur, r);
    let ainv = a.to_rat().inverse().and_then(|m| m.to_int()).ok_or(SpError::NotSymplectic)?;
    let mut out = vec![
        SpGenerator::rotation(form, a).ok_or(SpError::NotSymplectic)?,
        SpGenerator::Translation(ainv.mul(&b)),
    ];
    for g in applied.iter().rev() {
        out.extend(g.inverse(form));
    }
    let out = simplify(out, form);
    debug_assert_eq!(&compose(&out, r), s);
    Ok(out)
}

/// Random generator (kinds uniform, entries in `[−3,3]`, non-integral rotations rejected).
pub fn random_generator<R: Rng>(form: &SpForm, rng: &mut R) -> SpGenerator {
    let r = form.r();
    loop {
        match rng.gen_range(0..3) {
            0 => {
                let mut s = IntMatrix::zeros(r, r);
                for i in 0..r {
                    for j in i..r {
                        let v = Int::from(rng.gen_range(-3i64..=3));
                        if i == j {
                            s[(i, i)] = v;
                        } else {
                            s[(j, i)] = &v * (&form.divisors[j] / &form.divisors[i]);
                            s[(i, j)] = v;
                        }
                    }
                }
                return SpGenerator::Translation(s);
            }
            1 => {
                let a = IntMatrix::from_fn(r, r, |_, _| Int::from(rng.gen_range(-3i64..=3)));
                if !a.is_unimodular() {
                    continue;
                }
                if let Some(g) = SpGenerator::rotation(form, a) {
                    return g;
                }
            }
            _ => return SpGenerator::SemiInvolution((0..r).map(|_| rng.gen_bool(0.5)).collect()),
        }
    }
}

/// Product of up to `max_len` random generators.
pub fn random_element<R: Rng>(form: &SpForm, max_len: usize, rng: &mut R) -> IntMatrix {
    let len = rng.gen_range(0..=max_len);
    let gens: Vec<SpGenerator> = (0..len).map(|_| random_generator(form, rng)).collect();
    compose(&gens, form.r())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::rat;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_and_omega() {
        let f = SpForm::from_i64(&[1]);
        assert!(decompose_sp(&f, &IntMatrix::identity(2)).unwrap().is_empty());
        let omega = IntMatrix::from_i64(&[&[0, 1], &[-1, 0]]);
        assert_eq!(decompose_sp(&f, &omega).unwrap(), vec![SpGenerator::SemiInvolution(vec![false])]);
        assert_eq!(decompose_sp(&f, &IntMatrix::from_i64(&[&[1, 1], &[0, 2]])), Err(SpError::NotSymplectic));
    }

    #[test]
    fn scalar_euclid() {
        let f = SpForm::from_i64(&[1]);
        let red = f_symmetric_reduce(&f, &RatMatrix::from_i64(&[&[7]]), &Int::from(3));
        assert_eq!(red.s, IntMatrix::from_i64(&[&[2]]));
        assert_eq!(red.det, rat(1, 1));
        let div = f_symmetric_reduce(&f, &RatMatrix::from_i64(&[&[9]]), &Int::from(3));
        assert_eq!(div.det, rat(0, 1));
    }

    #[test]
    fn two_by_two_respects_f_symmetry() {
        let f = SpForm::from_i64(&[1, 2]);
        let t = RatMatrix::from_rows(vec![vec![rat(5, 1), rat(1, 1)], vec![rat(2, 1), rat(4, 1)]]);
        assert!(f.is_f_symmetric(&t));
        let red = f_symmetric_reduce(&f, &t, &Int::from(3));
        assert!(f.is_f_symmetric(&red.s.to_rat()));
        assert_eq!(&red.s[(1, 0)], &(&red.s[(0, 1)] * Int::from(2)));
        assert!(red.det.abs() > rat(0, 1) && red.det.abs() < rat(9, 1));
    }

    #[test]
    fn scaled_bound_can_fail_for_uneven_divisors() {
        // every det(T − 2S) is ≡ 2 mod 4 here, so |det| < 2 is out of reach
        let f = SpForm::from_i64(&[1, 2]);
        let t = RatMatrix::from_i64(&[&[0, 1], &[2, 0]]);
        let red = f_symmetric_reduce(&f, &t, &Int::from(2));
        assert!(red.det.abs() > rat(0, 1) && red.det.abs() < rat(4, 1));
        assert!(!red.scaled_bound);
    }

    #[test]
    fn round_trip_random_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for d in [&[1][..], &[2], &[1, 2], &[2, 4]] {
            let f = SpForm::from_i64(d);
            for _ in 0..60 {
                let s = random_element(&f, 8, &mut rng);
                let gens = decompose_sp(&f, &s).unwrap();
                assert_eq!(compose(&gens, f.r()), s);
                assert!(gens.iter().all(|g| g.is_valid(&f)));
            }
        }
    }
}
