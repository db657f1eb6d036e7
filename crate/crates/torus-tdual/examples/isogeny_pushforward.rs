//! Pushforward of a flat line bundle along an isogeny splits into the
//! characters of the dual fiber.
use torus_tdual::bundles::{canonical_factor_u1, Phase, Semicharacter};
use torus_tdual::forms::AlternatingForm;
use torus_tdual::lattice::Lattice;
use torus_tdual::mat::{fmt_rat, int, rat};
use torus_tdual::pushforward::{enumerate_dual_fiber, kernel_decomposition, pushforward_isogeny, Isogeny};

fn main() {
    let source = Lattice::from_int_cols(2, &[vec![int(2), int(0)], vec![int(1), int(3)]]);
    let iso = Isogeny::new(source.clone(), Lattice::standard(2)).expect("finite index");
    let form = AlternatingForm::zero(source);
    let chi = Semicharacter::from_values(&form, &[Phase::turns(&rat(1, 3)), Phase::turns(&rat(1, 4))]).expect("flat");
    let l = canonical_factor_u1(&form, &chi).expect("factor");
    let pushed = pushforward_isogeny(&l, &iso).expect("pushforward");
    println!("degree {} pushforward of rank {}", iso.degree(), pushed.rank);
    let dec = kernel_decomposition(&l, &iso).expect("flat line bundle");
    for c in &dec.characters {
        println!("  character {:?}", c.iter().map(fmt_rat).collect::<Vec<_>>());
    }
    let mut got = dec.characters.clone();
    got.sort();
    println!("equals the brute-force dual fiber: {}", got == enumerate_dual_fiber(&l, &iso).expect("fiber"));
}
