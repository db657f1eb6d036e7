//! T-duality of branes: lattice data, the two-form identity, and the double dual.
use num_traits::Zero;
use torus_tdual::lattice::Lattice;
use torus_tdual::mat::{rat, Rat, RatMatrix};
use torus_tdual::tdual::{brane_tdual, double_dual, Brane, Payload, TDualOptions};

fn main() {
    let f = RatMatrix::from_rows(vec![vec![Rat::zero(), rat(1, 1)], vec![rat(-1, 1), Rat::zero()]]);
    let twist = vec![rat(1, 4), rat(1, 3)];
    let brane = Brane::point(Lattice::standard(2), vec![Rat::zero(); 2], Payload::Bundle { fiber_form: f, twist }).expect("brane");
    let opts = TDualOptions::default();
    let rep = brane_tdual(&brane, &opts).expect("T-dualizable");
    println!("dual support rank {}, fiber counts {:?}", rep.data.gamma_s_hat.rank(), rep.data.fiber_counts);
    println!("exact sequences hold: {}, two-form identity: {}", rep.data.checks.all(), rep.two_form.holds());
    if let Some(e) = rep.dual_bundle() {
        println!("dual bundle rank {} with curvature {:?}", e.rank, e.curvature);
    }
    let worst = rep.fibers.iter().flat_map(|f| f.leaf_checks.iter().map(|c| c.residual)).fold(0.0, f64::max);
    println!("leaf independence residual {worst:.1e}");
    let dd = double_dual(&brane, &opts).expect("line bundle");
    println!("double dual returns the brane: {}", dd.double == brane);
}
