//! Hand-computed values first, then the structural statements the library implements.

use num_traits::{Signed, Zero};
use torus_tdual::bundles::{canonical_factor_u1, Phase, Semicharacter};
use torus_tdual::forms::{gamma_h, symplectic_normal_form, AlternatingForm};
use torus_tdual::lattice::Lattice;
use torus_tdual::mat::{int, rat, Int, IntMatrix, Rat, RatMatrix};
use torus_tdual::pushforward::{enumerate_dual_fiber, kernel_decomposition, phi_dual_bundle, trace_identity_defect, Isogeny, PhiDualOptions};
use torus_tdual::semiflat::{legendre_point, semiflat_structures, tdual_swap_check, KahlerTriple};
use torus_tdual::spgen::{compose, decompose_sp, SpForm, SpGenerator};
use torus_tdual::tdual::{brane_tdual, double_dual, higher_rank_pair, Brane, Payload, TDualOptions};

fn skew2(q: Rat) -> RatMatrix {
    RatMatrix::from_rows(vec![vec![Rat::zero(), q.clone()], vec![-q, Rat::zero()]])
}

fn zeros(n: usize) -> Vec<Rat> {
    vec![Rat::zero(); n]
}

// ---- hand-computed oracles ----

#[test]
fn normal_form_of_a_four_by_four_form() {
    // Pfaffian 2·2 − 4·6 + 0·0 = −20 and gcd of entries 2, so D = diag(2, 10)
    let e = RatMatrix::from_i64(&[&[0, 2, 4, 0], &[-2, 0, 0, 6], &[-4, 0, 0, 2], &[0, -6, -2, 0]]);
    let sd = symplectic_normal_form(&AlternatingForm::standard(e.clone()).unwrap()).unwrap();
    assert_eq!(sd.elementary_divisors, vec![int(2), int(10)]);
    assert_eq!(sd.radical_rank, 0);
    let p = sd.basis_change.to_rat();
    assert_eq!(p.transpose().mul(&e).mul(&p), sd.normal_matrix());
    assert_eq!(sd.basis_change.det().abs(), int(1));
}

#[test]
fn rational_type_of_half_and_three_halves() {
    let mut h = RatMatrix::zeros(4, 4);
    h[(0, 1)] = rat(1, 2);
    h[(1, 0)] = rat(-1, 2);
    h[(2, 3)] = rat(3, 2);
    h[(3, 2)] = rat(-3, 2);
    let t = gamma_h(&AlternatingForm::standard(h).unwrap());
    let mut pairs = t.pairs.clone();
    pairs.sort();
    assert_eq!(pairs, vec![(int(1), int(2)), (int(3), int(2))]);
    assert_eq!(t.m, int(2));
    // Γ_H = 2ℤ⁴ here, of index 16
    assert_eq!(Lattice::standard(4).index_of(&t.gamma_h).unwrap(), int(16));
    assert_eq!(t.prod_n(), int(3));
    assert_eq!(t.prod_m(), int(4));
}

#[test]
fn index_six_isogeny_characters_by_hand() {
    // Γ_X = span{(1,3),(0,6)}, hol(L) = exp(2πi (1/12)) on (1,3) and 1 on (0,6)
    let src = Lattice::from_int_cols(2, &[vec![int(1), int(3)], vec![int(0), int(6)]]);
    let iso = Isogeny::new(src.clone(), Lattice::standard(2)).unwrap();
    assert_eq!(iso.degree(), int(6));
    let f = AlternatingForm::zero(src);
    let chi = Semicharacter::from_values(&f, &[Phase::turns(&rat(1, 12)), Phase::one()]).unwrap();
    let l = canonical_factor_u1(&f, &chi).unwrap();
    // c(1,0) + 3c(0,1) ≡ 1/12 and 6c(0,1) ≡ 0: c(0,1) = k/6, c(1,0) = 1/12 − k/2
    let mut expected: Vec<Vec<Rat>> = (0..6)
        .map(|k| {
            let b = rat(k, 6);
            let a = rat(1, 12) - rat(k, 2);
            let a = &a - a.floor();
            vec![a, b]
        })
        .collect();
    expected.sort();
    assert_eq!(enumerate_dual_fiber(&l, &iso).unwrap(), expected);
    let mut got = kernel_decomposition(&l, &iso).unwrap().characters;
    got.sort();
    assert_eq!(got, expected);
}

#[test]
fn the_standard_symplectic_matrix_is_one_semi_involution() {
    let form = SpForm::from_i64(&[1]);
    let omega = IntMatrix::from_i64(&[&[0, 1], &[-1, 0]]);
    let gens = decompose_sp(&form, &omega).unwrap();
    assert_eq!(gens, vec![SpGenerator::SemiInvolution(vec![false])]);
    assert_eq!(compose(&gens, 1), omega);
}

#[test]
fn standard_semiflat_triple_is_its_own_legendre_dual() {
    let t: KahlerTriple<Rat> = KahlerTriple::standard(2);
    let l = legendre_point(&t).unwrap();
    assert_eq!(l.metric(), t.metric());
    assert_eq!(l.complex(), t.complex());
    assert_eq!(semiflat_structures(&t).residuals().max(), 0.0);
}

// ---- structural statements ----

#[test]
fn half_form_pairs_a_rank_two_bundle_with_a_line_bundle() {
    let brane = Brane::point(Lattice::standard(2), zeros(2), Payload::Form(skew2(rat(1, 2)))).unwrap();
    let p = higher_rank_pair(&brane, 0).unwrap();
    assert_eq!(p.ranks, (2, 1));
    assert_eq!(p.curvature_matches, (true, true));
    assert!(p.poincare_identity);
}

#[test]
fn three_halves_form_pairs_ranks_two_and_three() {
    let brane = Brane::point(Lattice::standard(2), zeros(2), Payload::Form(skew2(rat(3, 2)))).unwrap();
    let p = higher_rank_pair(&brane, 0).unwrap();
    assert_eq!(p.ranks, (2, 3));
    assert_eq!(p.curvature_matches, (true, true));
    // dual fiber form −m/n = −2/3
    assert_eq!(p.e_hat.curvature, skew2(rat(-2, 3)));
}

#[test]
fn flat_character_dualizes_to_a_point_and_back() {
    let brane = Brane::point(Lattice::standard(2), zeros(2), Payload::Bundle { fiber_form: RatMatrix::zeros(2, 2), twist: vec![rat(1, 3), rat(0, 1)] }).unwrap();
    let rep = brane_tdual(&brane, &TDualOptions::default()).unwrap();
    assert_eq!(rep.data.gamma_s_hat.rank(), 0);
    assert_eq!(rep.data.fiber_counts, (int(1), int(1)));
    assert!(rep.two_form.holds());
    let dd = double_dual(&brane, &TDualOptions::default()).unwrap();
    assert_eq!(dd.double, brane);
}

#[test]
fn principal_bundle_fiber_counts_are_products_of_squares() {
    let brane = Brane::point(Lattice::standard(2), zeros(2), Payload::Bundle { fiber_form: skew2(rat(2, 1)), twist: zeros(2) }).unwrap();
    let rep = brane_tdual(&brane, &TDualOptions::default()).unwrap();
    // type (2/1): counts (n², m²) = (4, 1), dual rank n = 2
    assert_eq!(rep.data.fiber_counts, (int(4), int(1)));
    assert_eq!(rep.data.dual_rank, int(2));
    assert!(rep.data.checks.all());
    assert!(rep.two_form.holds());
}

#[test]
fn type_two_inverse_pushforward_splits_off_u_two() {
    let f = AlternatingForm::standard(skew2(rat(2, 1))).unwrap();
    let chi = Semicharacter::canonical(&f, vec![rat(1, 4), rat(1, 3)]).unwrap();
    let l = canonical_factor_u1(&f, &chi).unwrap();
    let out = phi_dual_bundle(&l, &PhiDualOptions::default()).unwrap();
    assert_eq!(out.degree, int(2));
    assert_eq!(out.full.rank, 4);
    assert_eq!(out.l_hat.rank, 2);
    assert!(trace_identity_defect(&out.full, &out.l_hat, 2) < 1e-9);
    assert!(out.conjugator.residual < 1e-9);
}

#[test]
fn fiber_swap_matches_structures_for_a_rational_metric() {
    let g = RatMatrix::from_i64(&[&[2, 1], &[1, 1]]);
    let i = RatMatrix::from_i64(&[&[1, 1], &[-2, -1]]);
    let t = KahlerTriple::new(g, i).unwrap();
    let f = RatMatrix::from_i64(&[&[0, 1], &[0, 0]]);
    let rep = tdual_swap_check(&t, &f).unwrap();
    assert!(rep.holds(1e-9), "{rep:?}");
    assert_eq!(rep.matches.len(), 6);
}

#[test]
fn unit_divisor_form_is_accepted_and_bad_divisors_are_not() {
    assert!(SpForm::new(vec![int(2), int(3)]).is_err());
    assert!(SpForm::new(vec![int(1), int(2), int(4)]).is_ok());
    assert!(SpForm::new(vec![Int::zero()]).is_err());
}
