//! Higher-rank T-dual pairs for rational fiber forms.
use num_traits::Zero;
use torus_tdual::lattice::Lattice;
use torus_tdual::mat::{rat, Rat, RatMatrix};
use torus_tdual::tdual::{higher_rank_pair, Brane, Payload};

fn main() {
    for h in [rat(1, 2), rat(3, 2), rat(2, 3)] {
        let form = RatMatrix::from_rows(vec![vec![Rat::zero(), h.clone()], vec![-h.clone(), Rat::zero()]]);
        let brane = Brane::point(Lattice::standard(2), vec![Rat::zero(); 2], Payload::Form(form)).expect("brane");
        let p = higher_rank_pair(&brane, 0).expect("pair");
        println!(
            "H = {h}: ranks (E, Ê) = {:?}, curvatures match {:?}, Poincaré identity {}",
            p.ranks, p.curvature_matches, p.poincare_identity
        );
    }
}
