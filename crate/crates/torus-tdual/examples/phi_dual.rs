//! The inverse bundle pushed along φ_L splits as L̂ ⊗ U(d).
use torus_tdual::bundles::{canonical_factor_u1, Semicharacter};
use torus_tdual::forms::AlternatingForm;
use torus_tdual::mat::{rat, RatMatrix};
use torus_tdual::pushforward::{phi_dual_bundle, trace_identity_defect, PhiDualOptions};

fn main() {
    let g = RatMatrix::from_i64(&[&[0, 1, 0, 0], &[-1, 0, 0, 0], &[0, 0, 0, 2], &[0, 0, -2, 0]]);
    let form = AlternatingForm::standard(g).expect("skew");
    let chi = Semicharacter::canonical(&form, vec![rat(1, 2), rat(0, 1), rat(1, 3), rat(1, 5)]).expect("semicharacter");
    let l = canonical_factor_u1(&form, &chi).expect("factor");
    let out = phi_dual_bundle(&l, &PhiDualOptions::default()).expect("nondegenerate");
    println!("type {:?}, degree {}", out.polarization_type, out.degree);
    println!("rank of pushforward {}, rank of L̂ {}", out.full.rank, out.l_hat.rank);
    println!("trace identity defect {:.1e}", trace_identity_defect(&out.full, &out.l_hat, 2));
    println!("conjugator residual {:.1e}", out.conjugator.residual);
}
