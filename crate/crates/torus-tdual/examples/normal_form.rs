//! Integral symplectic normal form and rational type of skew forms.
use torus_tdual::forms::{gamma_h, symplectic_normal_form, AlternatingForm};
use torus_tdual::mat::{fmt_rat, rat, RatMatrix};

fn main() {
    let e = RatMatrix::from_i64(&[&[0, 2, 4, 0], &[-2, 0, 0, 6], &[-4, 0, 0, 2], &[0, -6, -2, 0]]);
    let sd = symplectic_normal_form(&AlternatingForm::standard(e).expect("skew")).expect("integral");
    println!("elementary divisors {:?}, radical rank {}", sd.elementary_divisors, sd.radical_rank);
    println!("basis change {:?}", sd.basis_change);

    let h = RatMatrix::from_rows(vec![vec![rat(0, 1), rat(3, 2)], vec![rat(-3, 2), rat(0, 1)]]);
    let t = gamma_h(&AlternatingForm::standard(h).expect("skew"));
    let basis: Vec<Vec<String>> = t.gamma_h.basis_vectors().iter().map(|v| v.iter().map(fmt_rat).collect()).collect();
    println!("H = 3/2: pairs (n, m) {:?}, Γ_H basis {basis:?}", t.pairs);
}
