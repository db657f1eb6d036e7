//! Decomposes random elements of Sp(F, Z) into translations, rotations and
//! semi-involutions.
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use torus_tdual::spgen::{compose, decompose_sp, random_element, SpForm};

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for divisors in [&[1i64][..], &[2], &[1, 2], &[2, 4]] {
        let form = SpForm::from_i64(divisors);
        let s = random_element(&form, 8, &mut rng);
        let gens = decompose_sp(&form, &s).expect("symplectic");
        let kinds: Vec<&str> = gens.iter().map(|g| g.kind()).collect();
        println!("F = {divisors:?}: {} generators {kinds:?}, recomposes {}", gens.len(), compose(&gens, form.r()) == s);
    }
}
