use crate::error::{Error, Result};
use crate::model::OperatorDerivative;
use crate::operators::{real, CMatrix, SparseOp};
use crate::propagator::KrausMap;

/// Sparse copy of one parameter's (∂G, ∂V_j) for the contraction kernels.
#[derive(Clone, Debug)]
pub struct SparseDerivative {
    pub dg: SparseOp,
    /// (j, ∂V_j) for every nonzero ∂V_j.
    pub dv: Vec<(usize, SparseOp)>,
}

impl From<&OperatorDerivative> for SparseDerivative {
    fn from(d: &OperatorDerivative) -> Self {
        SparseDerivative {
            dg: SparseOp::from_dense(&d.dg),
            dv: d
                .active_jumps
                .iter()
                .map(|&j| (j, SparseOp::from_dense(&d.dv[j])))
                .filter(|(_, s)| !s.is_zero())
                .collect(),
        }
    }
}

/// ∂F_j with respect to one parameter, in the order of [`KrausMap::operators`].
///
/// First order: ∂F₀ = F₀∂G F₀ dt, ∂F_j = (∂F₀V_j + F₀∂V_j)√dt. Second order, with
/// R = (I − ½G dt)⁻¹ and D = I + ½G dt: ∂F₀ = ½dt R∂G(F₀ + I),
/// ∂F_j = ½dt R∂G F_j + √dt R∂V_j D + ½dt^{3/2} R V_j ∂G, and for the double jumps
/// ½dt R∂G F_ab + (dt/√2) R(∂V_a V_b + V_a ∂V_b), without either R factor when simplified.
pub fn kraus_parameter_derivative(k: &KrausMap, d: &OperatorDerivative) -> Result<Vec<CMatrix>> {
    let nv = k.n_jumps();
    if d.dv.len() != nv {
        return Err(Error::Mismatch(format!("{} jump derivatives for {} jump operators", d.dv.len(), nv)));
    }
    if d.dg.nrows() != k.dim() {
        return Err(Error::Mismatch("derivative dimension differs from the Kraus map".into()));
    }
    let dt = k.dt();
    let sdt = dt.sqrt();
    let r = k.resolvent();
    let f = k.operators();
    let mut out = Vec::with_capacity(f.len());
    match k.order() {
        1 => {
            let df0 = f[0].dot(&d.dg).dot(&f[0]) * real(dt);
            for j in 0..nv {
                let t = df0.dot(k.jump(j)) + f[0].dot(&d.dv[j]);
                out.push(t * real(sdt));
            }
            out.insert(0, df0);
        }
        _ => {
            let rdg = r.dot(&d.dg);
            let half = real(0.5 * dt);
            let eye = crate::operators::identity(k.dim());
            out.push(rdg.dot(&(&f[0] + &eye)) * half);
            for j in 0..nv {
                let mut t = rdg.dot(&f[1 + j]) * half;
                t.scaled_add(real(sdt), &r.dot(&d.dv[j]).dot(k.forward_factor()));
                t.scaled_add(real(0.5 * dt * sdt), &r.dot(k.jump(j)).dot(&d.dg));
                out.push(t);
            }
            let c = real(dt * std::f64::consts::FRAC_1_SQRT_2);
            for j2 in 0..nv {
                for j1 in 0..nv {
                    let dvv = d.dv[j1].dot(k.jump(j2)) + k.jump(j1).dot(&d.dv[j2]);
                    let t = if k.is_simplified() {
                        dvv * c
                    } else {
                        let mut t = rdg.dot(&f[1 + nv + j1 + nv * j2]) * half;
                        t.scaled_add(c, &r.dot(&dvv));
                        t
                    };
                    out.push(t);
                }
            }
        }
    }
    Ok(out)
}
