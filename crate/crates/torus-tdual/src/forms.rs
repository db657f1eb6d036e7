//! Alternating forms on lattices: symplectic normal form, the rational type
//! data (nᵢ, mᵢ) with the lattice Γ_H, isotropic halves and graph lattices.

use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::lattice::{column_hnf, complete_basis, smith_normal_form, Lattice, LatticeError};
use crate::mat::{rat_int, Int, IntMatrix, Rat, RatMatrix};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormError {
    #[error("form has non-integral entries")]
    NotIntegral,
    #[error("form is degenerate (Pfaffian vanishes)")]
    Degenerate,
    #[error("matrix is not skew-symmetric or does not match the lattice rank")]
    NotSkew,
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Skew form on a lattice, stored as its Gram matrix in the canonical basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlternatingForm {
    pub lattice: Lattice,
    pub matrix: RatMatrix,
}

impl AlternatingForm {
    pub fn new(lattice: Lattice, matrix: RatMatrix) -> Result<Self, FormError> {
        if !matrix.is_skew() || matrix.rows() != lattice.rank() {
            return Err(FormError::NotSkew);
        }
        Ok(AlternatingForm { lattice, matrix })
    }

    /// Form on ℤⁿ given by its Gram matrix.
    pub fn standard(matrix: RatMatrix) -> Result<Self, FormError> {
        Self::new(Lattice::standard(matrix.rows()), matrix)
    }

    pub fn zero(lattice: Lattice) -> Self {
        let k = lattice.rank();
        AlternatingForm { lattice, matrix: RatMatrix::zeros(k, k) }
    }

    pub fn rank(&self) -> usize {
        self.matrix.rows()
    }

    pub fn is_integral(&self) -> bool {
        self.matrix.is_integral()
    }

    /// Value on two vectors given in lattice coordinates.
    pub fn eval(&self, x: &[Rat], y: &[Rat]) -> Rat {
        self.matrix.bilinear(x, y)
    }

    /// Matrix of `v ↦ F(v,·)` acting on coordinate columns (i.e. `Fᵀ`).
    pub fn as_map(&self) -> RatMatrix {
        self.matrix.transpose()
    }

    /// Gram matrix after the change of basis `P` (columns = new basis).
    pub fn transported(&self, p: &RatMatrix) -> RatMatrix {
        p.transpose().mul(&self.matrix).mul(p)
    }

    pub fn is_nondegenerate(&self) -> bool {
        self.matrix.rank() == self.rank()
    }
}

/// Output of the integral symplectic normal form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymplecticData {
    /// Unimodular; columns are `μ₁..μ_r, μ_{r+1}..μ_{2r}`, then the radical.
    pub basis_change: IntMatrix,
    pub elementary_divisors: Vec<Int>,
    pub radical_rank: usize,
}

impl SymplecticData {
    pub fn half_rank(&self) -> usize {
        self.elementary_divisors.len()
    }

    pub fn reduced_pfaffian(&self) -> Int {
        self.elementary_divisors.iter().fold(Int::one(), |a, d| a * d)
    }

    /// The block normal form `[[0,D,0],[−D,0,0],[0,0,0]]`.
    pub fn normal_matrix(&self) -> RatMatrix {
        let r = self.half_rank();
        let k = 2 * r + self.radical_rank;
        RatMatrix::from_fn(k, k, |i, j| {
            if i < r && j == i + r {
                rat_int(&self.elementary_divisors[i])
            } else if j < r && i == j + r {
                -rat_int(&self.elementary_divisors[j])
            } else {
                Rat::zero()
            }
        })
    }
}

struct Congruence {
    a: IntMatrix,
    p: IntMatrix,
}

impl Congruence {
    fn swap(&mut self, i: usize, j: usize) {
        self.a.swap_rows(i, j);
        self.a.swap_cols(i, j);
        self.p.swap_cols(i, j);
    }

    /// basis[k] += s · basis[j]
    fn add(&mut self, k: usize, j: usize, s: &Int) {
        self.a.add_row_multiple(k, j, s);
        self.a.add_col_multiple(k, j, s);
        self.p.add_col_multiple(k, j, s);
    }
}

/// Brings an integral skew form to `Σ dᵢ μᵢ*∧μ_{r+i}*` with `dᵢ | dᵢ₊₁`.
pub fn symplectic_normal_form(e: &AlternatingForm) -> Result<SymplecticData, FormError> {
    let a = e.matrix.to_int().ok_or(FormError::NotIntegral)?;
    let k = a.rows();
    let mut c = Congruence { a, p: IntMatrix::identity(k) };
    let mut t = 0;
    'outer: while t + 1 < k {
        let mut best: Option<(usize, usize)> = None;
        for i in t..k {
            for j in i + 1..k {
                if c.a[(i, j)].is_zero() {
                    continue;
                }
                if best.map_or(true, |(bi, bj)| c.a[(i, j)].abs() < c.a[(bi, bj)].abs()) {
                    best = Some((i, j));
                }
            }
        }
        let Some((i, j)) = best else { break };
        c.swap(t, i);
        c.swap(t + 1, if j == t { i } else { j });
        let piv = c.a[(t, t + 1)].clone();
        for m in t + 2..k {
            let x = c.a[(t, m)].clone();
            if !x.is_multiple_of(&piv) {
                let q = x.div_floor(&piv);
                c.add(m, t + 1, &-q);
                continue 'outer;
            }
            let y = c.a[(t + 1, m)].clone();
            if !y.is_multiple_of(&piv) {
                let q = y.div_floor(&piv);
                c.add(m, t, &q);
                continue 'outer;
            }
        }
        for m in t + 2..k {
            let x = c.a[(t, m)].clone() / &piv;
            let y = c.a[(t + 1, m)].clone() / &piv;
            if !x.is_zero() {
                c.add(m, t + 1, &-x);
            }
            if !y.is_zero() {
                c.add(m, t, &y);
            }
        }
        if c.a[(t, t + 1)].is_negative() {
            c.swap(t, t + 1);
        }
        t += 2;
    }
    let r = t / 2;
    let mut e_cols = Vec::new();
    let mut f_cols = Vec::new();
    for p in 0..r {
        e_cols.push(2 * p);
        f_cols.push(2 * p + 1);
    }
    let rad_idx: Vec<usize> = (2 * r..k).collect();
    let ediag: Vec<Int> = (0..r).map(|p| c.a[(2 * p, 2 * p + 1)].clone()).collect();
    let (u, d, v) = smith_normal_form(&IntMatrix::diag(&ediag));
    let eb = c.p.select_cols(&e_cols).mul(&u.transpose());
    let fb = c.p.select_cols(&f_cols).mul(&v);
    let rad = c.p.select_cols(&rad_idx);
    let rad = if rad.cols() == 0 { rad } else { column_hnf(&rad) };
    let basis_change = eb.hcat(&fb).hcat(&rad);
    let divisors = (0..r).map(|i| d[(i, i)].clone()).collect();
    let data = SymplecticData { basis_change, elementary_divisors: divisors, radical_rank: k - 2 * r };
    debug_assert_eq!(e.transported(&data.basis_change.to_rat()), data.normal_matrix());
    Ok(data)
}

/// The rational type data of a rational skew form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalTypeData {
    /// Coprime pairs `(nᵢ, mᵢ)` with `H = Σ (nᵢ/mᵢ) μᵢ*∧μ_{r+i}*`.
    pub pairs: Vec<(Int, Int)>,
    /// Minimal `m` with `mH` integral.
    pub m: Int,
    /// Symplectic frame of `mH` (columns in lattice coordinates).
    pub frame: IntMatrix,
    pub radical_rank: usize,
    /// `span{m₁μ₁,…,m_rμ_r, m₁μ_{r+1},…,m_rμ_{2r}, radical}` in ambient coordinates.
    pub gamma_h: Lattice,
}

impl RationalTypeData {
    pub fn half_rank(&self) -> usize {
        self.pairs.len()
    }

    pub fn prod_n(&self) -> Int {
        self.pairs.iter().fold(Int::one(), |a, (n, _)| a * n)
    }

    pub fn prod_m(&self) -> Int {
        self.pairs.iter().fold(Int::one(), |a, (_, m)| a * m)
    }

    /// Frame vectors scaled into Γ_H, in lattice coordinates.
    pub fn gamma_h_frame(&self) -> IntMatrix {
        let r = self.half_rank();
        let mut p = self.frame.clone();
        for i in 0..r {
            let mi = self.pairs[i].1.clone();
            for row in 0..p.rows() {
                p[(row, i)] = &p[(row, i)] * &mi;
                p[(row, i + r)] = &p[(row, i + r)] * &mi;
            }
        }
        p
    }
}

pub fn gamma_h(h: &AlternatingForm) -> RationalTypeData {
    let m = h.matrix.common_denominator();
    let scaled = AlternatingForm { lattice: h.lattice.clone(), matrix: h.matrix.scale(&rat_int(&m)) };
    let sd = symplectic_normal_form(&scaled).expect("scaled form is integral");
    let pairs: Vec<(Int, Int)> = sd
        .elementary_divisors
        .iter()
        .map(|d| {
            let g = m.gcd(d);
            (d / &g, &m / &g)
        })
        .collect();
    let mut data = RationalTypeData {
        pairs,
        m,
        frame: sd.basis_change.clone(),
        radical_rank: sd.radical_rank,
        gamma_h: h.lattice.clone(),
    };
    let coords = data.gamma_h_frame();
    data.gamma_h = Lattice::from_rat_matrix(&h.lattice.basis().mul(&coords.to_rat()));
    data
}

/// The two Lagrangian halves of the symplectic frame (ambient coordinates).
pub fn isotropic_decomposition(e: &AlternatingForm) -> Result<(Lattice, Lattice), FormError> {
    let sd = symplectic_normal_form(e)?;
    if sd.radical_rank > 0 || e.rank() == 0 {
        return Err(FormError::Degenerate);
    }
    let r = sd.half_rank();
    let b = e.lattice.basis().mul(&sd.basis_change.to_rat());
    let first: Vec<usize> = (0..r).collect();
    let second: Vec<usize> = (r..2 * r).collect();
    Ok((
        Lattice::from_rat_matrix(&b.select_cols(&first)),
        Lattice::from_rat_matrix(&b.select_cols(&second)),
    ))
}

/// Splitting data for a primitive sublattice Γ_S ⊆ ℤⁿ: a unimodular completion
/// `Q = [S | C]` and its inverse, whose first rows lift covectors of V_S into V*
/// with zero Ann(V_S)-component and whose last rows span Ann(Γ_S).
#[derive(Clone, Debug)]
pub struct SubFrame {
    pub sub: Lattice,
    pub completion: IntMatrix,
    pub inverse: IntMatrix,
}

impl SubFrame {
    pub fn new(sub: &Lattice) -> Result<Self, LatticeError> {
        let q = complete_basis(sub)?;
        let inv = q.to_rat().inverse().expect("unimodular").to_int().expect("integral");
        Ok(SubFrame { sub: sub.clone(), completion: q, inverse: inv })
    }

    pub fn n(&self) -> usize {
        self.completion.rows()
    }

    pub fn l(&self) -> usize {
        self.sub.rank()
    }

    /// Lift of a covector on V_S (coordinates on the Γ_S basis) into V*.
    pub fn lift_covector(&self, h: &[Rat]) -> Vec<Rat> {
        let n = self.n();
        let mut xi = vec![Rat::zero(); n];
        for (j, hj) in h.iter().enumerate() {
            for (k, x) in xi.iter_mut().enumerate() {
                *x += hj * rat_int(&self.inverse[(j, k)]);
            }
        }
        xi
    }

    /// Restriction `q: V* → V_S*`.
    pub fn restrict_covector(&self, xi: &[Rat]) -> Vec<Rat> {
        let s = self.sub.basis();
        s.transpose().mul_vec(xi)
    }

    /// Vector of V_S (Γ_S coordinates) as an ambient vector.
    pub fn embed_vector(&self, s: &[Rat]) -> Vec<Rat> {
        self.sub.basis().mul_vec(s)
    }

    /// Ann(Γ_S) basis (columns of V*).
    pub fn annihilator_basis(&self) -> Vec<Vec<Rat>> {
        (self.l()..self.n())
            .map(|j| self.inverse.row(j).iter().map(rat_int).collect())
            .collect()
    }

    /// Ambient vectors with zero V_S-component: span of the completion columns.
    pub fn complement_basis(&self) -> Vec<Vec<Rat>> {
        (self.l()..self.n()).map(|j| self.completion.col(j).iter().map(rat_int).collect()).collect()
    }

    /// Splits an ambient vector into (V_S coordinates, complement coordinates).
    pub fn split_vector(&self, v: &[Rat]) -> (Vec<Rat>, Vec<Rat>) {
        let c = self.inverse.to_rat().mul_vec(v);
        (c[..self.l()].to_vec(), c[self.l()..].to_vec())
    }
}

/// `Γ_Z ⊂ Γ_S ⊕ Γ^∨`, with Γ_S in its own basis coordinates followed by the n dual
/// coordinates: Ann(Γ_S) together with `(γ, −H(γ))` for γ ∈ Γ_H.
pub fn graph_lattice(h: &AlternatingForm, ambient_dual: &Lattice) -> Result<Lattice, FormError> {
    let frame = SubFrame::new(&h.lattice)?;
    let n = frame.n();
    if *ambient_dual != Lattice::standard(n) {
        return Err(FormError::Lattice(LatticeError::NotSublattice(
            "ambient dual must be the standard dual lattice".into(),
        )));
    }
    let l = frame.l();
    let td = gamma_h(h);
    let mut cols: Vec<Vec<Rat>> = Vec::new();
    for a in frame.annihilator_basis() {
        let mut v = vec![Rat::zero(); l];
        v.extend(a);
        cols.push(v);
    }
    let gh = td.gamma_h_frame().to_rat();
    for j in 0..gh.cols() {
        let g = gh.col(j);
        let neg_h: Vec<Rat> = h.as_map().mul_vec(&g).iter().map(|x| -x).collect();
        let mut v = g.clone();
        v.extend(frame.lift_covector(&neg_h));
        cols.push(v);
    }
    Ok(Lattice::from_rat_cols(l + n, &cols))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::{int, rat};

    fn form(rows: &[&[i64]]) -> AlternatingForm {
        AlternatingForm::standard(RatMatrix::from_i64(rows)).unwrap()
    }

    #[test]
    fn small_types() {
        let sd = symplectic_normal_form(&form(&[&[0, 1], &[-1, 0]])).unwrap();
        assert_eq!(sd.elementary_divisors, vec![int(1)]);
        let sd = symplectic_normal_form(&form(&[&[0, 2], &[-2, 0]])).unwrap();
        assert_eq!(sd.reduced_pfaffian(), int(2));
        let half = AlternatingForm::standard(RatMatrix::from_rows(vec![
            vec![rat(0, 1), rat(1, 2)],
            vec![rat(-1, 2), rat(0, 1)],
        ]))
        .unwrap();
        assert_eq!(symplectic_normal_form(&half), Err(FormError::NotIntegral));
    }

    #[test]
    fn divisibility_is_repaired() {
        // blocks 2 and 3 must become 1 and 6
        let e = form(&[&[0, 0, 2, 0], &[0, 0, 0, 3], &[-2, 0, 0, 0], &[0, -3, 0, 0]]);
        let sd = symplectic_normal_form(&e).unwrap();
        assert_eq!(sd.elementary_divisors, vec![int(1), int(6)]);
        assert!(sd.basis_change.is_unimodular());
        assert_eq!(e.transported(&sd.basis_change.to_rat()), sd.normal_matrix());
    }

    #[test]
    fn gamma_h_examples() {
        let three = form(&[&[0, 3], &[-3, 0]]);
        let td = gamma_h(&three);
        assert_eq!(td.pairs, vec![(int(3), int(1))]);
        assert_eq!(td.gamma_h, Lattice::standard(2));
        let half = AlternatingForm::standard(RatMatrix::from_rows(vec![
            vec![rat(0, 1), rat(1, 2)],
            vec![rat(-1, 2), rat(0, 1)],
        ]))
        .unwrap();
        let td = gamma_h(&half);
        assert_eq!(td.pairs, vec![(int(1), int(2))]);
        let expect = Lattice::from_int_cols(2, &[vec![int(2), int(0)], vec![int(0), int(2)]]);
        assert_eq!(td.gamma_h, expect);
        let zero = AlternatingForm::zero(Lattice::standard(3));
        let td = gamma_h(&zero);
        assert_eq!(td.half_rank(), 0);
        assert_eq!(td.gamma_h, Lattice::standard(3));
    }

    #[test]
    fn graph_lattice_half() {
        let half = AlternatingForm::standard(RatMatrix::from_rows(vec![
            vec![rat(0, 1), rat(1, 2)],
            vec![rat(-1, 2), rat(0, 1)],
        ]))
        .unwrap();
        let gz = graph_lattice(&half, &Lattice::standard(2)).unwrap();
        let expect = Lattice::from_int_cols(
            4,
            &[vec![int(2), int(0), int(0), int(-1)], vec![int(0), int(2), int(1), int(0)]],
        );
        assert_eq!(gz, expect);
        assert_eq!(gz.saturate(), gz);
    }

    #[test]
    fn graph_lattice_degenerate_cases() {
        let n = 2;
        let full = AlternatingForm::zero(Lattice::standard(n));
        let gz = graph_lattice(&full, &Lattice::standard(n)).unwrap();
        let expect = Lattice::from_int_cols(
            4,
            &[vec![int(1), int(0), int(0), int(0)], vec![int(0), int(1), int(0), int(0)]],
        );
        assert_eq!(gz, expect);
        let point = AlternatingForm::zero(Lattice::zero(n));
        let gz = graph_lattice(&point, &Lattice::standard(n)).unwrap();
        assert_eq!(gz, Lattice::standard(2));
    }

    #[test]
    fn isotropic_halves() {
        let (a, b) = isotropic_decomposition(&form(&[&[0, 1], &[-1, 0]])).unwrap();
        assert_eq!(a, Lattice::from_int_cols(2, &[vec![int(1), int(0)]]));
        assert_eq!(b, Lattice::from_int_cols(2, &[vec![int(0), int(1)]]));
        assert_eq!(
            isotropic_decomposition(&form(&[&[0, 0], &[0, 0]])),
            Err(FormError::Degenerate)
        );
    }
}
