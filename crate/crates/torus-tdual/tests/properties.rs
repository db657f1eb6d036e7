use num_traits::{Signed, Zero};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use torus_tdual::bundles::{canonical_factor_u1, Phase, Semicharacter};
use torus_tdual::cli::schema::Q;
use torus_tdual::forms::{symplectic_normal_form, AlternatingForm};
use torus_tdual::lattice::Lattice;
use torus_tdual::mat::{int, rat, Int, IntMatrix, Rat, RatMatrix};
use torus_tdual::pushforward::{enumerate_dual_fiber, kernel_decomposition, Isogeny};
use torus_tdual::semiflat::{coisotropic_characteristic, legendre_point, random_coisotropic, random_rational_triple};
use torus_tdual::spgen::{compose, decompose_sp, random_element, SpForm};

fn small_rat() -> impl Strategy<Value = Rat> {
    (-20i64..20, 1i64..12).prop_map(|(p, q)| rat(p, q))
}

fn int_vec(n: usize) -> impl Strategy<Value = Vec<Int>> {
    prop::collection::vec((-6i64..6).prop_map(int), n)
}

fn skew_int(n: usize) -> impl Strategy<Value = RatMatrix> {
    prop::collection::vec(-4i64..5, n * (n - 1) / 2).prop_map(move |upper| {
        let mut m = RatMatrix::zeros(n, n);
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                m[(i, j)] = rat(upper[k], 1);
                m[(j, i)] = rat(-upper[k], 1);
                k += 1;
            }
        }
        m
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn rationals_survive_json(q in small_rat()) {
        let text = serde_json::to_string(&Q(q.clone())).unwrap();
        let back: Q = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back.0, q);
    }

    #[test]
    fn phases_form_a_group_mod_two(a in small_rat(), b in small_rat()) {
        let pa = Phase::new(a.clone());
        let pb = Phase::new(b.clone());
        prop_assert_eq!(pa.mul(&pb), Phase::new(&a + &b));
        prop_assert!(pa.mul(&pa.inv()).is_one());
        let e = pa.exponent();
        prop_assert!(!e.is_negative() && e < &rat(2, 1));
        prop_assert!((Phase::new(&a + rat(2, 1)) == pa));
    }

    #[test]
    fn lattice_coordinates_invert_points(cols in prop::collection::vec(int_vec(3), 1..=3), x in int_vec(3)) {
        let m = IntMatrix::from_fn(3, cols.len(), |i, j| cols[j][i].clone());
        let l = Lattice::from_int_matrix(&m);
        let x = &x[..l.rank()];
        let p = l.point(x);
        prop_assert_eq!(l.coords(&p), Some(x.to_vec()));
        prop_assert!(l.contains(&p));
        // each original generator is a lattice vector
        for c in &cols {
            let v: Vec<Rat> = c.iter().map(|z| Rat::from_integer(z.clone())).collect();
            prop_assert!(l.contains(&v));
        }
    }

    #[test]
    fn hermite_form_ignores_unimodular_changes(a in int_vec(4), b in int_vec(4), k in -5i64..5) {
        let l1 = Lattice::from_int_cols(4, &[a.clone(), b.clone()]);
        let sheared: Vec<Int> = b.iter().zip(&a).map(|(y, x)| y + x * int(k)).collect();
        let l2 = Lattice::from_int_cols(4, &[sheared, a.clone()]);
        prop_assert_eq!(l1, l2);
    }

    #[test]
    fn normal_form_is_a_unimodular_congruence(e in skew_int(4)) {
        let sd = symplectic_normal_form(&AlternatingForm::standard(e.clone()).unwrap()).unwrap();
        let p = sd.basis_change.to_rat();
        prop_assert_eq!(p.transpose().mul(&e).mul(&p), sd.normal_matrix());
        prop_assert_eq!(sd.basis_change.det().abs(), int(1));
        for w in sd.elementary_divisors.windows(2) {
            prop_assert!((&w[1] % &w[0]).is_zero());
        }
    }

    #[test]
    fn cocycle_law_holds_exactly(e in skew_int(3), t in prop::collection::vec(small_rat(), 3),
                                 x in prop::collection::vec(small_rat(), 3), l in int_vec(3), m in int_vec(3)) {
        let f = AlternatingForm::standard(e).unwrap();
        let chi = Semicharacter::canonical(&f, t).unwrap();
        let a = canonical_factor_u1(&f, &chi).unwrap();
        let lm: Vec<Int> = l.iter().zip(&m).map(|(p, q)| p + q).collect();
        let xl: Vec<Rat> = x.iter().zip(&l).map(|(p, q)| p + Rat::from_integer(q.clone())).collect();
        let lhs = a.evaluate_coords(&x, &lm);
        let rhs = a.evaluate_coords(&xl, &m).mul(&a.evaluate_coords(&x, &l));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn symplectic_products_decompose_and_recompose(seed in any::<u64>(), which in 0usize..4) {
        let divisors: [&[i64]; 4] = [&[1], &[2], &[1, 2], &[2, 4]];
        let form = SpForm::from_i64(divisors[which]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_element(&form, 8, &mut rng);
        prop_assert!(form.is_member(&s));
        let gens = decompose_sp(&form, &s).unwrap();
        prop_assert!(gens.iter().all(|g| g.is_valid(&form)));
        prop_assert_eq!(compose(&gens, form.r()), s);
    }

    #[test]
    fn legendre_duality_is_an_exact_involution(seed in any::<u64>(), n in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_rational_triple(n, &mut rng);
        let back = legendre_point(&legendre_point(&t).unwrap()).unwrap();
        prop_assert_eq!(back.metric(), t.metric());
        prop_assert_eq!(back.complex(), t.complex());
        prop_assert_eq!(back.form(), t.form());
    }

    #[test]
    fn coisotropic_characteristic_identities(seed in any::<u64>(), g in 1usize..=4, k in 0usize..=4) {
        let k = k.min(g);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = random_coisotropic(g, k, &mut rng);
        let rep = coisotropic_characteristic(&w).unwrap();
        prop_assert!(rep.holds());
    }

    #[test]
    fn flat_pushforward_characters_match_the_dual_fiber(d1 in 1i64..5, d2 in 1i64..5, s in 0i64..4, t1 in small_rat(), t2 in small_rat()) {
        let s = s % d1;
        let src = Lattice::from_int_cols(2, &[vec![int(d1), int(0)], vec![int(s), int(d2)]]);
        let iso = Isogeny::new(src.clone(), Lattice::standard(2)).unwrap();
        let f = AlternatingForm::zero(src);
        let chi = Semicharacter::from_values(&f, &[Phase::turns(&t1), Phase::turns(&t2)]).unwrap();
        let l = canonical_factor_u1(&f, &chi).unwrap();
        let mut got = kernel_decomposition(&l, &iso).unwrap().characters;
        got.sort();
        let fiber = enumerate_dual_fiber(&l, &iso).unwrap();
        prop_assert_eq!(fiber.len() as i64, d1 * d2);
        prop_assert_eq!(got, fiber);
    }
}
