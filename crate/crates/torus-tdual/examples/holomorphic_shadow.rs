//! Holomorphic and unitary pushforwards give the same semi-representation.
use torus_tdual::bundles::{canonical_factor_holo, Semicharacter};
use torus_tdual::forms::AlternatingForm;
use torus_tdual::holo_shadow::holo_pushforward_along;
use torus_tdual::lattice::Lattice;
use torus_tdual::mat::{int, rat, RatMatrix};
use torus_tdual::pushforward::Isogeny;
use torus_tdual::semiflat::standard_complex;

fn main() {
    let lattice = Lattice::from_int_cols(2, &[vec![int(2), int(0)], vec![int(0), int(1)]]);
    let form = AlternatingForm::new(lattice.clone(), RatMatrix::from_i64(&[&[0, 2], &[-2, 0]])).expect("skew");
    let chi = Semicharacter::canonical(&form, vec![rat(1, 2), rat(0, 1)]).expect("semicharacter");
    let complex = standard_complex::<torus_tdual::mat::Rat>(1).to_f64();
    let h = canonical_factor_holo(&form, &complex, &chi).expect("compatible");
    let iso = Isogeny::new(lattice, Lattice::standard(2)).expect("isogeny");
    let samples = vec![vec![rat(1, 7), rat(-2, 7)], vec![rat(0, 1), rat(3, 5)]];
    let rep = holo_pushforward_along(&h, &iso, &samples).expect("pushforward");
    println!("degree {}, exact agreement {}, evaluation residual {:.1e}", rep.degree, rep.exact_equal, rep.evaluation_residual);
}
