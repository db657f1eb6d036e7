//! JSON encoders for results and the fixed report header.

use num_complex::Complex64;
use serde_json::{json, Map, Value};

use crate::bundles::{MonomialMatrix, Phase, UnitaryFactor};
use crate::lattice::Lattice;
use crate::mat::{fmt_rat, Int, Mat, Rat, RatMatrix};
use crate::semiflat::Field;

pub fn rat(q: &Rat) -> Value {
    Value::String(fmt_rat(q))
}

pub fn int(n: &Int) -> Value {
    Value::String(n.to_string())
}

pub fn rats(v: &[Rat]) -> Value {
    Value::Array(v.iter().map(rat).collect())
}

pub fn ints(v: &[Int]) -> Value {
    Value::Array(v.iter().map(int).collect())
}

pub fn matrix(m: &RatMatrix) -> Value {
    Value::Array(m.row_vecs().iter().map(|r| rats(r)).collect())
}

pub fn int_matrix(m: &Mat<Int>) -> Value {
    Value::Array(m.row_vecs().iter().map(|r| ints(r)).collect())
}

/// Exact entries when the field is exact, decimals otherwise.
pub fn field_matrix<T: Field>(m: &Mat<T>) -> Value {
    Value::Array(
        m.row_vecs()
            .iter()
            .map(|r| Value::Array(r.iter().map(|x| if T::EXACT { Value::String(x.to_string()) } else { json!(x.to_f64()) }).collect()))
            .collect(),
    )
}

pub fn columns(cols: &[Vec<Rat>]) -> Value {
    Value::Array(cols.iter().map(|c| rats(c)).collect())
}

pub fn lattice(l: &Lattice) -> Value {
    json!({
        "ambient": l.ambient_rank(),
        "rank": l.rank(),
        "hermite_basis": columns(&l.basis_vectors()),
    })
}

pub fn phase(p: &Phase) -> Value {
    rat(p.exponent())
}

pub fn monomial(m: &MonomialMatrix) -> Value {
    json!({
        "perm": m.perm,
        "phases": m.phases.iter().map(phase).collect::<Vec<_>>(),
    })
}

pub fn factor(f: &UnitaryFactor) -> Value {
    json!({
        "rank": f.rank,
        "lattice": lattice(&f.lattice),
        "curvature": matrix(&f.curvature),
        "connection": rats(&f.connection),
        "generators": f.generators.iter().map(monomial).collect::<Vec<_>>(),
    })
}

pub fn complex(z: Complex64) -> Value {
    json!([z.re, z.im])
}

pub fn convention() -> Value {
    json!({
        "ambient_basis": "V = Q^n with its standard basis and ambient lattice Z^n; covectors use the dual basis; input generators are re-expressed in the Hermite basis, which every report prints",
        "rationals": "exact strings p/q; phases are exponents q of exp(i*pi*q) reduced to [0,2); characters are turns reduced to [0,1)",
        "factor": "a(v,l) = exp(i*pi*F(v,l)) U(l) with a(v,l+m) = a(v+l,m) a(v,l); generator rows map row i to column perm[i]",
        "poincare_sign": "Poincare curvature 2*pi*i dv^ ^ dv; the dual fiber form is -sum (m_i/n_i) ds_i ^ ds_(r+i)",
        "lift_rules": "brane translations are moved into the complement of V_S and reduced mod 1; the dual character is frac(-twist) on V_S; its lift to V* has zero component on Ann(V_S)",
        "semiflat": "omega = g I; blocks ordered (T base, T fiber, T* base, T* fiber); the fiber T-duality swaps blocks 2 and 4",
        "complex_numbers": "[re, im] decimal pairs",
    })
}

/// Statement names recorded in the provenance block.
pub fn provenance(statements: &[&str]) -> Value {
    Value::Array(statements.iter().map(|s| Value::String((*s).into())).collect())
}

pub fn object(entries: Vec<(&str, Value)>) -> Value {
    let mut m = Map::new();
    for (k, v) in entries {
        m.insert(k.into(), v);
    }
    Value::Object(m)
}
