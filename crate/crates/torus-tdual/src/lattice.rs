//! Lattices inside a fixed ambient ℚⁿ ⊇ ℤⁿ: Hermite and Smith normal forms,
//! saturation, duals, quotients with box coset representatives.

use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::mat::{frac, int_vec_to_rat, lcm_denoms, rat_int, Int, IntMatrix, Rat, RatMatrix};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LatticeError {
    #[error("not a sublattice: {0}")]
    NotSublattice(String),
    #[error("rational spans differ (rank {small} inside rank {big})")]
    RankMismatch { small: usize, big: usize },
    #[error("sublattice is not primitive in the ambient lattice")]
    NotPrimitive,
    #[error("vector is not in the lattice")]
    NotInLattice,
    #[error("ambient ranks differ ({0} vs {1})")]
    AmbientMismatch(usize, usize),
}

/// Row-style Hermite normal form: returns `(H, U)` with `U` unimodular and
/// `U·M = H`. Nonzero rows of `H` come first, pivots are positive and the
/// entries above each pivot lie in `[0, pivot)`.
pub fn row_hnf(m: &IntMatrix) -> (IntMatrix, IntMatrix, usize) {
    let mut h = m.clone();
    let mut u = IntMatrix::identity(m.rows());
    let rows = m.rows();
    let mut r = 0;
    for c in 0..m.cols() {
        if r == rows {
            break;
        }
        loop {
            let p = (r..rows)
                .filter(|&i| !h[(i, c)].is_zero())
                .min_by(|&a, &b| h[(a, c)].abs().cmp(&h[(b, c)].abs()).then(a.cmp(&b)));
            let Some(p) = p else { break };
            h.swap_rows(r, p);
            u.swap_rows(r, p);
            let mut clean = true;
            for i in r + 1..rows {
                if !h[(i, c)].is_zero() {
                    let q = -h[(i, c)].div_floor(&h[(r, c)]);
                    h.add_row_multiple(i, r, &q);
                    u.add_row_multiple(i, r, &q);
                    if !h[(i, c)].is_zero() {
                        clean = false;
                    }
                }
            }
            if clean {
                break;
            }
        }
        if h[(r, c)].is_zero() {
            continue;
        }
        if h[(r, c)].is_negative() {
            h.neg_row(r);
            u.neg_row(r);
        }
        for i in 0..r {
            let q = -h[(i, c)].div_floor(&h[(r, c)]);
            if !q.is_zero() {
                h.add_row_multiple(i, r, &q);
                u.add_row_multiple(i, r, &q);
            }
        }
        r += 1;
    }
    (h, u, r)
}

/// Smith normal form `U·M·V = D` with `U`, `V` unimodular, `D` diagonal,
/// nonnegative and `dᵢ | dᵢ₊₁`.
pub fn smith_normal_form(m: &IntMatrix) -> (IntMatrix, IntMatrix, IntMatrix) {
    let (rows, cols) = (m.rows(), m.cols());
    let mut d = m.clone();
    let mut u = IntMatrix::identity(rows);
    let mut v = IntMatrix::identity(cols);
    for t in 0..rows.min(cols) {
        loop {
            let mut best: Option<(usize, usize)> = None;
            for i in t..rows {
                for j in t..cols {
                    if d[(i, j)].is_zero() {
                        continue;
                    }
                    if best.map_or(true, |(a, b)| d[(i, j)].abs() < d[(a, b)].abs()) {
                        best = Some((i, j));
                    }
                }
            }
            let Some((pi, pj)) = best else { break };
            d.swap_rows(t, pi);
            u.swap_rows(t, pi);
            d.swap_cols(t, pj);
            v.swap_cols(t, pj);
            let mut clean = true;
            for i in t + 1..rows {
                if !d[(i, t)].is_zero() {
                    let q = -d[(i, t)].div_floor(&d[(t, t)]);
                    d.add_row_multiple(i, t, &q);
                    u.add_row_multiple(i, t, &q);
                    clean &= d[(i, t)].is_zero();
                }
            }
            for j in t + 1..cols {
                if !d[(t, j)].is_zero() {
                    let q = -d[(t, j)].div_floor(&d[(t, t)]);
                    d.add_col_multiple(j, t, &q);
                    v.add_col_multiple(j, t, &q);
                    clean &= d[(t, j)].is_zero();
                }
            }
            if !clean {
                continue;
            }
            let bad = (t + 1..rows)
                .flat_map(|i| (t + 1..cols).map(move |j| (i, j)))
                .find(|&(i, j)| !d[(i, j)].is_multiple_of(&d[(t, t)]));
            match bad {
                Some((i, _)) => {
                    let one = Int::one();
                    d.add_row_multiple(t, i, &one);
                    u.add_row_multiple(t, i, &one);
                }
                None => break,
            }
        }
        if d[(t, t)].is_negative() {
            d.neg_row(t);
            u.neg_row(t);
        }
    }
    (u, d, v)
}

/// Basis (as columns) of the integer kernel `{x ∈ ℤᶜ : M x = 0}`.
pub fn integer_kernel(m: &IntMatrix) -> IntMatrix {
    let (_, u, r) = row_hnf(&m.transpose());
    let idx: Vec<usize> = (r..m.cols()).collect();
    let k = u.select_rows(&idx).transpose();
    column_hnf(&k)
}

/// Column Hermite form of the lattice spanned by the columns; zero columns dropped.
pub fn column_hnf(m: &IntMatrix) -> IntMatrix {
    let (h, _, r) = row_hnf(&m.transpose());
    let idx: Vec<usize> = (0..r).collect();
    h.select_rows(&idx).transpose()
}

/// A lattice `(1/denom)·span_ℤ(gens)` in ℚⁿ, stored canonically.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Lattice {
    ambient: usize,
    denom: Int,
    gens: IntMatrix,
}

impl std::fmt::Debug for Lattice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Lattice(1/{} · {:?})", self.denom, self.gens)
    }
}

impl Lattice {
    pub fn from_int_cols(ambient: usize, cols: &[Vec<Int>]) -> Self {
        let m = IntMatrix::from_fn(ambient, cols.len(), |i, j| cols[j][i].clone());
        Self::canonical(ambient, Int::one(), m)
    }

    pub fn from_rat_cols(ambient: usize, cols: &[Vec<Rat>]) -> Self {
        let den = lcm_denoms(cols.iter().flatten());
        let m = IntMatrix::from_fn(ambient, cols.len(), |i, j| {
            (&cols[j][i] * rat_int(&den)).to_integer()
        });
        Self::canonical(ambient, den, m)
    }

    pub fn from_rat_matrix(m: &RatMatrix) -> Self {
        Self::from_rat_cols(m.rows(), &m.col_vecs())
    }

    pub fn from_int_matrix(m: &IntMatrix) -> Self {
        Self::canonical(m.rows(), Int::one(), m.clone())
    }

    pub fn standard(n: usize) -> Self {
        Self::from_int_matrix(&IntMatrix::identity(n))
    }

    pub fn zero(n: usize) -> Self {
        Self::from_int_matrix(&IntMatrix::zeros(n, 0))
    }

    fn canonical(ambient: usize, denom: Int, m: IntMatrix) -> Self {
        let h = if m.cols() == 0 { m } else { column_hnf(&m) };
        let mut g = denom.clone();
        for i in 0..h.rows() {
            for j in 0..h.cols() {
                g = g.gcd(&h[(i, j)]);
            }
        }
        let h = if g.is_one() { h } else { h.map(|x| x / &g) };
        Lattice { ambient, denom: denom / g, gens: h }
    }

    pub fn ambient_rank(&self) -> usize {
        self.ambient
    }

    pub fn rank(&self) -> usize {
        self.gens.cols()
    }

    pub fn denom(&self) -> &Int {
        &self.denom
    }

    /// Integer numerator generators (columns) in Hermite form.
    pub fn numerators(&self) -> &IntMatrix {
        &self.gens
    }

    pub fn is_integral(&self) -> bool {
        self.denom.is_one()
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank() == self.ambient
    }

    /// Canonical basis as rational columns.
    pub fn basis(&self) -> RatMatrix {
        let d = rat_int(&self.denom).recip();
        self.gens.to_rat().scale(&d)
    }

    pub fn basis_vectors(&self) -> Vec<Vec<Rat>> {
        self.basis().col_vecs()
    }

    /// Integer coordinates of `v` in the canonical basis.
    pub fn coords(&self, v: &[Rat]) -> Option<Vec<Int>> {
        let x = self.rat_coords(v)?;
        x.iter().map(|q| q.is_integer().then(|| q.to_integer())).collect()
    }

    /// Rational coordinates of a vector of the rational span, by forward
    /// substitution along the echelon pivots of the Hermite basis.
    pub fn rat_coords(&self, v: &[Rat]) -> Option<Vec<Rat>> {
        if v.len() != self.ambient {
            return None;
        }
        if self.denom.is_one() && self.gens.is_square() && self.gens == IntMatrix::identity(self.ambient) {
            return Some(v.to_vec());
        }
        if let Some(x) = self.integral_coords(v) {
            return Some(x.into_iter().map(Rat::from_integer).collect());
        }
        let scale = rat_int(&self.denom);
        let w: Vec<Rat> = v.iter().map(|x| x * &scale).collect();
        let mut x: Vec<Rat> = Vec::with_capacity(self.rank());
        let mut row = 0;
        for j in 0..self.rank() {
            while self.gens[(row, j)].is_zero() {
                row += 1;
            }
            let mut acc = w[row].clone();
            for (i, xi) in x.iter().enumerate() {
                acc -= xi * rat_int(&self.gens[(row, i)]);
            }
            x.push(acc / rat_int(&self.gens[(row, j)]));
        }
        let back = (0..self.ambient).all(|r| {
            let sum = x.iter().enumerate().fold(Rat::zero(), |a, (j, xj)| a + xj * rat_int(&self.gens[(r, j)]));
            sum == w[r]
        });
        back.then_some(x)
    }

    /// Integer-only forward substitution; `None` when `v` is not a lattice
    /// vector or leaves the integers along the way.
    fn integral_coords(&self, v: &[Rat]) -> Option<Vec<Int>> {
        let w: Vec<Int> = v
            .iter()
            .map(|x| {
                let y = x * rat_int(&self.denom);
                y.is_integer().then(|| y.to_integer())
            })
            .collect::<Option<_>>()?;
        let mut x: Vec<Int> = Vec::with_capacity(self.rank());
        let mut row = 0;
        for j in 0..self.rank() {
            while self.gens[(row, j)].is_zero() {
                row += 1;
            }
            let mut acc = w[row].clone();
            for (i, xi) in x.iter().enumerate() {
                acc -= xi * &self.gens[(row, i)];
            }
            let (q, r) = acc.div_rem(&self.gens[(row, j)]);
            if !r.is_zero() {
                return None;
            }
            x.push(q);
        }
        (0..self.ambient)
            .all(|r| x.iter().enumerate().fold(Int::zero(), |a, (j, xj)| a + xj * &self.gens[(r, j)]) == w[r])
            .then_some(x)
    }

    pub fn contains(&self, v: &[Rat]) -> bool {
        self.coords(v).is_some()
    }

    pub fn contains_lattice(&self, o: &Lattice) -> bool {
        o.basis_vectors().iter().all(|v| self.contains(v))
    }

    pub fn point(&self, coords: &[Int]) -> Vec<Rat> {
        self.basis().mul_vec(&int_vec_to_rat(coords))
    }

    /// Primitive closure `span_ℚ(L) ∩ ℤⁿ`.
    pub fn saturate(&self) -> Lattice {
        let k = self.rank();
        if k == 0 {
            return Lattice::zero(self.ambient);
        }
        let (u, _, _) = smith_normal_form(&self.gens);
        let uinv = u.to_rat().inverse().expect("unimodular");
        let cols: Vec<usize> = (0..k).collect();
        Lattice::from_rat_matrix(&uinv.select_cols(&cols))
    }

    pub fn is_primitive(&self) -> bool {
        self.is_integral() && self.saturate() == *self
    }

    pub fn sum(&self, o: &Lattice) -> Result<Lattice, LatticeError> {
        self.same_ambient(o)?;
        let mut cols = self.basis_vectors();
        cols.extend(o.basis_vectors());
        Ok(Lattice::from_rat_cols(self.ambient, &cols))
    }

    pub fn intersection(&self, o: &Lattice) -> Result<Lattice, LatticeError> {
        self.same_ambient(o)?;
        let den = self.denom.lcm(&o.denom);
        let a = self.basis().scale(&rat_int(&den)).to_int().expect("scaled");
        let b = o.basis().scale(&rat_int(&den)).to_int().expect("scaled");
        let k = integer_kernel(&a.hcat(&b.neg()));
        let xs = k.sub_block(0, 0, a.cols(), k.cols());
        let pts = a.mul(&xs);
        let cols: Vec<Vec<Rat>> = pts
            .col_vecs()
            .iter()
            .map(|c| c.iter().map(|x| Rat::new(x.clone(), den.clone())).collect())
            .collect();
        Ok(Lattice::from_rat_cols(self.ambient, &cols))
    }

    /// Dual lattice for the standard pairing; requires full rank.
    pub fn dual(&self) -> Result<Lattice, LatticeError> {
        if !self.is_full_rank() {
            return Err(LatticeError::RankMismatch { small: self.rank(), big: self.ambient });
        }
        let inv = self.basis().inverse().expect("full rank basis");
        Ok(Lattice::from_rat_matrix(&inv.transpose()))
    }

    /// `{ξ ∈ ambient_dual : ξ(sub) = 0}`.
    pub fn annihilator(&self, ambient_dual: &Lattice) -> Result<Lattice, LatticeError> {
        self.same_ambient(ambient_dual)?;
        if !self.is_primitive() {
            return Err(LatticeError::NotPrimitive);
        }
        let a = ambient_dual.basis();
        let cond = self.basis().transpose().mul(&a);
        let den = cond.common_denominator();
        let cond = cond.scale(&rat_int(&den)).to_int().expect("scaled");
        let k = integer_kernel(&cond);
        Ok(Lattice::from_rat_matrix(&a.mul(&k.to_rat())))
    }

    /// Index `[self : small]`.
    pub fn index_of(&self, small: &Lattice) -> Result<Int, LatticeError> {
        Ok(self.quotient(small)?.order())
    }

    /// Coordinates of `small`'s basis in this basis (k×k integer matrix).
    pub fn inclusion_matrix(&self, small: &Lattice) -> Result<IntMatrix, LatticeError> {
        self.same_ambient(small)?;
        if small.rank() != self.rank() {
            return Err(LatticeError::RankMismatch { small: small.rank(), big: self.rank() });
        }
        let mut cols = Vec::new();
        for v in small.basis_vectors() {
            match self.rat_coords(&v) {
                None => {
                    return Err(LatticeError::RankMismatch { small: small.rank(), big: self.rank() })
                }
                Some(x) => {
                    if !x.iter().all(|q| q.is_integer()) {
                        return Err(LatticeError::NotSublattice(format!(
                            "generator {v:?} not in the larger lattice"
                        )));
                    }
                    cols.push(x.iter().map(|q| q.to_integer()).collect::<Vec<_>>());
                }
            }
        }
        Ok(IntMatrix::from_fn(self.rank(), cols.len(), |i, j| cols[j][i].clone()))
    }

    pub fn quotient(&self, small: &Lattice) -> Result<FiniteAbelianQuotient, LatticeError> {
        FiniteAbelianQuotient::new(self, small)
    }

    fn same_ambient(&self, o: &Lattice) -> Result<(), LatticeError> {
        if self.ambient == o.ambient {
            Ok(())
        } else {
            Err(LatticeError::AmbientMismatch(self.ambient, o.ambient))
        }
    }

    /// `span_ℚ(self) ∩ big`.
    pub fn saturate_in(&self, big: &Lattice) -> Lattice {
        let b = big.basis();
        let binv = b.inverse().expect("full rank");
        let coords = binv.mul(&self.basis());
        let den = coords.common_denominator();
        let ci = coords.scale(&rat_int(&den)).to_int().expect("scaled");
        let sat = Lattice::from_int_matrix(&ci).saturate();
        Lattice::from_rat_matrix(&b.mul(&sat.basis()))
    }

    /// Image of the lattice under a rational linear map (columns may become dependent).
    pub fn image(&self, map: &RatMatrix) -> Lattice {
        Lattice::from_rat_matrix(&map.mul(&self.basis()))
    }
}

/// `Γ_big / Γ_small` with box representatives `Σ mᵢ gᵢ`, `0 ≤ mᵢ < dᵢ`.
#[derive(Clone, Debug)]
pub struct FiniteAbelianQuotient {
    big: Lattice,
    small: Lattice,
    /// Invariant factors larger than one, in divisibility order.
    pub invariant_factors: Vec<Int>,
    /// Adapted basis of the big lattice (columns), the first ones carrying the factors.
    adapted: RatMatrix,
    /// Maps big-lattice coordinates to adapted coordinates.
    to_adapted: IntMatrix,
    /// Positions in the adapted basis whose factor exceeds one.
    nontrivial: Vec<usize>,
    pub coset_reps: Vec<Vec<Rat>>,
}

impl FiniteAbelianQuotient {
    pub fn new(big: &Lattice, small: &Lattice) -> Result<Self, LatticeError> {
        let c = big.inclusion_matrix(small)?;
        let (u, d, _v) = smith_normal_form(&c);
        let k = big.rank();
        if (0..k).any(|i| d[(i, i)].is_zero()) {
            return Err(LatticeError::RankMismatch { small: small.rank(), big: k });
        }
        let uinv = u.to_rat().inverse().expect("unimodular");
        let adapted = big.basis().mul(&uinv);
        let nontrivial: Vec<usize> = (0..k).filter(|&i| !d[(i, i)].is_one()).collect();
        let invariant_factors: Vec<Int> = nontrivial.iter().map(|&i| d[(i, i)].clone()).collect();
        let mut q = FiniteAbelianQuotient {
            big: big.clone(),
            small: small.clone(),
            invariant_factors,
            adapted,
            to_adapted: u,
            nontrivial,
            coset_reps: Vec::new(),
        };
        q.coset_reps = (0..q.order_usize()).map(|i| q.box_rep(i)).collect();
        Ok(q)
    }

    pub fn big(&self) -> &Lattice {
        &self.big
    }

    pub fn small(&self) -> &Lattice {
        &self.small
    }

    pub fn order(&self) -> Int {
        self.invariant_factors.iter().fold(Int::one(), |a, d| a * d)
    }

    pub fn order_usize(&self) -> usize {
        use num_traits::ToPrimitive;
        self.order().to_usize().expect("quotient too large")
    }

    /// Generators `gᵢ` of the cyclic factors, as vectors.
    pub fn cyclic_generators(&self) -> Vec<Vec<Rat>> {
        self.nontrivial.iter().map(|&i| self.adapted.col(i)).collect()
    }

    /// Mixed-radix digits of a box index (first factor most significant).
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        use num_traits::ToPrimitive;
        let mut out = vec![0; self.invariant_factors.len()];
        for (slot, d) in self.invariant_factors.iter().enumerate().rev() {
            let d = d.to_usize().unwrap();
            out[slot] = index % d;
            index /= d;
        }
        out
    }

    fn box_rep(&self, index: usize) -> Vec<Rat> {
        let digits = self.digits(index);
        let mut v = vec![Rat::zero(); self.big.ambient_rank()];
        for (slot, &pos) in self.nontrivial.iter().enumerate() {
            let g = self.adapted.col(pos);
            let m = Rat::from_integer(Int::from(digits[slot]));
            for (a, b) in v.iter_mut().zip(&g) {
                *a += &m * b;
            }
        }
        v
    }

    /// Box index of the coset of `λ ∈ Γ_big`.
    pub fn class_of(&self, lambda: &[Rat]) -> Result<usize, LatticeError> {
        use num_traits::ToPrimitive;
        let x = self.big.coords(lambda).ok_or(LatticeError::NotInLattice)?;
        let y = self.to_adapted.mul_vec(&x);
        let mut idx = 0usize;
        for (slot, &pos) in self.nontrivial.iter().enumerate() {
            let d = &self.invariant_factors[slot];
            let m = y[pos].mod_floor(d);
            idx = idx * d.to_usize().unwrap() + m.to_usize().unwrap();
        }
        Ok(idx)
    }

    /// Characters of `Γ_big/Γ_small` as covectors in big-lattice coordinates,
    /// indexed like the box representatives: `ψ_p(Σ mᵢgᵢ) = exp(2πi Σ pᵢmᵢ/dᵢ)`.
    pub fn dual_characters(&self) -> Vec<Vec<Rat>> {
        let k = self.big.rank();
        let adapted_t = self.to_adapted.to_rat().transpose();
        (0..self.order_usize())
            .map(|index| {
                let digits = self.digits(index);
                let mut y = vec![Rat::zero(); k];
                for (slot, &pos) in self.nontrivial.iter().enumerate() {
                    y[pos] = Rat::new(Int::from(digits[slot]), self.invariant_factors[slot].clone());
                }
                adapted_t.mul_vec(&y)
            })
            .collect()
    }

    /// `λ = reps[i] + Λ` with `Λ ∈ Γ_small`.
    pub fn reduce(&self, lambda: &[Rat]) -> Result<(usize, Vec<Rat>), LatticeError> {
        let i = self.class_of(lambda)?;
        let rem: Vec<Rat> = lambda.iter().zip(&self.coset_reps[i]).map(|(a, b)| a - b).collect();
        debug_assert!(self.small.contains(&rem));
        Ok((i, rem))
    }
}

/// A chosen set of coset representatives (not necessarily the box ones).
#[derive(Clone, Debug)]
pub struct CosetReps {
    pub quotient: FiniteAbelianQuotient,
    pub reps: Vec<Vec<Rat>>,
    /// box class index → position in `reps`
    slot_of_class: Vec<usize>,
}

impl CosetReps {
    pub fn boxed(q: FiniteAbelianQuotient) -> Self {
        let reps = q.coset_reps.clone();
        let slot_of_class = (0..reps.len()).collect();
        CosetReps { quotient: q, reps, slot_of_class }
    }

    pub fn custom(q: FiniteAbelianQuotient, reps: Vec<Vec<Rat>>) -> Result<Self, LatticeError> {
        let n = q.order_usize();
        if reps.len() != n {
            return Err(LatticeError::NotSublattice(format!("expected {n} representatives")));
        }
        let mut slot_of_class = vec![usize::MAX; n];
        for (slot, r) in reps.iter().enumerate() {
            let c = q.class_of(r)?;
            if slot_of_class[c] != usize::MAX {
                return Err(LatticeError::NotSublattice("two representatives share a coset".into()));
            }
            slot_of_class[c] = slot;
        }
        Ok(CosetReps { quotient: q, reps, slot_of_class })
    }

    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }

    /// `λ = reps[i] + Λ`.
    pub fn reduce(&self, lambda: &[Rat]) -> Result<(usize, Vec<Rat>), LatticeError> {
        let c = self.quotient.class_of(lambda)?;
        let i = self.slot_of_class[c];
        let rem: Vec<Rat> = lambda.iter().zip(&self.reps[i]).map(|(a, b)| a - b).collect();
        Ok((i, rem))
    }
}

/// Completes the canonical basis of a primitive lattice to a unimodular basis
/// of ℤⁿ; the sublattice basis occupies the first columns.
pub fn complete_basis(sub: &Lattice) -> Result<IntMatrix, LatticeError> {
    if !sub.is_primitive() {
        return Err(LatticeError::NotPrimitive);
    }
    let n = sub.ambient_rank();
    let k = sub.rank();
    let s = sub.numerators().clone();
    if k == 0 {
        return Ok(IntMatrix::identity(n));
    }
    let (u, _, _) = smith_normal_form(&s);
    let uinv = u.to_rat().inverse().expect("unimodular").to_int().expect("integral inverse");
    let rest: Vec<usize> = (k..n).collect();
    let q = s.hcat(&uinv.select_cols(&rest));
    debug_assert!(q.is_unimodular());
    Ok(q)
}

/// Reduces a covector mod 1 coordinatewise (used for characters in lattice coordinates).
pub fn reduce_mod_one(v: &[Rat]) -> Vec<Rat> {
    v.iter().map(frac).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::{int, rat};

    fn ivec(v: &[i64]) -> Vec<Int> {
        v.iter().map(|&x| int(x)).collect()
    }

    fn rvec(v: &[(i64, i64)]) -> Vec<Rat> {
        v.iter().map(|&(p, q)| rat(p, q)).collect()
    }

    #[test]
    fn smith_examples() {
        let m = IntMatrix::from_i64(&[&[2, 0], &[0, 3]]);
        let (u, d, v) = smith_normal_form(&m);
        assert_eq!(d, IntMatrix::from_i64(&[&[1, 0], &[0, 6]]));
        assert_eq!(u.mul(&m).mul(&v), d);
        assert!(u.is_unimodular() && v.is_unimodular());
        let z = IntMatrix::from_i64(&[&[0]]);
        assert_eq!(smith_normal_form(&z).1, z);
        let id = IntMatrix::identity(3);
        let (u, d, v) = smith_normal_form(&id);
        assert_eq!((u, d, v), (id.clone(), id.clone(), id));
    }

    #[test]
    fn saturation_examples() {
        let l = Lattice::from_int_cols(2, &[ivec(&[2, 0])]);
        assert_eq!(l.saturate(), Lattice::from_int_cols(2, &[ivec(&[1, 0])]));
        let l = Lattice::from_int_cols(2, &[ivec(&[1, 1])]);
        assert_eq!(l.saturate(), l);
    }

    #[test]
    fn saturation_membership_oracle() {
        let l = Lattice::from_int_cols(2, &[ivec(&[2, 2]), ivec(&[0, 4])]);
        let s = l.saturate();
        // the span is all of ℚ², so every integer vector belongs
        for a in -4..=4 {
            for b in -4..=4 {
                assert!(s.contains(&rvec(&[(a, 1), (b, 1)])));
            }
        }
        assert_eq!(s, Lattice::standard(2));
    }

    #[test]
    fn dual_and_intersection() {
        let l = Lattice::from_int_cols(2, &[ivec(&[2, 0]), ivec(&[0, 1])]);
        let d = l.dual().unwrap();
        assert_eq!(d, Lattice::from_rat_cols(2, &[rvec(&[(1, 2), (0, 1)]), rvec(&[(0, 1), (1, 1)])]));
        assert_eq!(d.dual().unwrap(), l);
        let b = Lattice::from_int_cols(2, &[ivec(&[1, 1])]);
        let i = l.intersection(&b).unwrap();
        assert_eq!(i, Lattice::from_int_cols(2, &[ivec(&[2, 2])]));
        // membership oracle on a box
        for t in -6i64..=6 {
            let v = rvec(&[(t, 1), (t, 1)]);
            assert_eq!(i.contains(&v), t % 2 == 0);
        }
    }

    #[test]
    fn annihilator_examples() {
        let std2 = Lattice::standard(2);
        let e1 = Lattice::from_int_cols(2, &[ivec(&[1, 0])]);
        assert_eq!(e1.annihilator(&std2).unwrap(), Lattice::from_int_cols(2, &[ivec(&[0, 1])]));
        let s = Lattice::from_int_cols(2, &[ivec(&[1, 2])]);
        assert_eq!(s.annihilator(&std2).unwrap(), Lattice::from_int_cols(2, &[ivec(&[2, -1])]));
        assert_eq!(std2.annihilator(&std2).unwrap().rank(), 0);
        let bad = Lattice::from_int_cols(2, &[ivec(&[2, 0])]);
        assert_eq!(bad.annihilator(&std2), Err(LatticeError::NotPrimitive));
    }

    #[test]
    fn quotient_examples() {
        let z = Lattice::standard(1);
        let two = Lattice::from_int_cols(1, &[ivec(&[2])]);
        let q = z.quotient(&two).unwrap();
        assert_eq!(q.invariant_factors, vec![int(2)]);
        assert_eq!(q.coset_reps, vec![rvec(&[(0, 1)]), rvec(&[(1, 1)])]);
        let big = Lattice::standard(2);
        let small = Lattice::from_int_cols(2, &[ivec(&[1, 0]), ivec(&[0, 3])]);
        assert_eq!(big.quotient(&small).unwrap().invariant_factors, vec![int(3)]);
        assert!(matches!(small.quotient(&big), Err(LatticeError::NotSublattice(_))));
        let line = Lattice::from_int_cols(2, &[ivec(&[1, 0])]);
        assert!(matches!(big.quotient(&line), Err(LatticeError::RankMismatch { .. })));
    }

    #[test]
    fn completion_is_unimodular() {
        let s = Lattice::from_int_cols(3, &[ivec(&[1, 2, 3])]);
        let q = complete_basis(&s).unwrap();
        assert!(q.is_unimodular());
        assert_eq!(q.col(0), ivec(&[1, 2, 3]));
    }
}
