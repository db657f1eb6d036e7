//! Semi-flat hyperkähler structures, Legendre duality and the fiberwise swap.
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use torus_tdual::semiflat::{legendre_point, random_rational_triple, semiflat_structures, tdual_swap_check};

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in 1..=3 {
        let t = random_rational_triple(n, &mut rng);
        let dual = legendre_point(&t).expect("invertible metric");
        let back = legendre_point(&dual).expect("invertible metric");
        let zero = torus_tdual::mat::RatMatrix::zeros(2 * n, 2 * n);
        let swap = tdual_swap_check(&t, &zero).expect("swap");
        println!(
            "n = {n}: quaternion residual {:.1e}, Legendre involution distance {:.1e}, swap distance {:.1e}",
            semiflat_structures(&t).residuals().max(),
            back.distance(&t),
            swap.max_distance()
        );
    }
}
