//! Reverse-mode kernels for ⟨A, (∂_α K)ρ⟩.
//!
//! K depends on θ only through G and the V_j, and each Kraus operator is
//! holomorphic in them, so for Hermitian A and ρ
//! `⟨A, (∂_α K)ρ⟩ = 2 Re[tr(∂_αG Ĝ) + Σ_j tr(∂_αV_j V̂_j)]`
//! for matrices Ĝ, V̂_j that depend on (A, ρ) but not on α.

use super::derivative::SparseDerivative;
use crate::operators::{matmul, matmul_acc, real, sandwich, CMatrix};
use crate::propagator::{KrausMap, Scheme};

/// The pair (Ĝ, V̂_j).
#[derive(Clone, Debug)]
pub(crate) struct Cotangent {
    pub g: CMatrix,
    pub v: Vec<CMatrix>,
}

impl Cotangent {
    pub fn zeros(d: usize, n_jumps: usize) -> Self {
        Cotangent { g: CMatrix::zeros((d, d)), v: vec![CMatrix::zeros((d, d)); n_jumps] }
    }

    pub fn contract(&self, pd: &SparseDerivative) -> f64 {
        let mut acc = pd.dg.trace_product(&self.g);
        for (j, dv) in &pd.dv {
            acc += dv.trace_product(&self.v[*j]);
        }
        2.0 * acc.re
    }
}

/// Quantities that depend only on the adjoint operator A.
pub(crate) struct Left {
    a: CMatrix,
    /// A R
    ar: CMatrix,
    /// Ã = R† A R
    at: CMatrix,
    /// J*(Ã)
    b: CMatrix,
    /// Ã + dt J*(Ã)
    atb: CMatrix,
    /// J*(A), simplified scheme only
    ja: Option<CMatrix>,
}

impl Left {
    pub fn new(k: &KrausMap, a: CMatrix) -> Self {
        let ar = matmul(&a, k.resolvent());
        let at = matmul(k.resolvent_adjoint(), &ar);
        let b = k.jump_sum_adjoint(&at);
        let mut atb = at.clone();
        atb.scaled_add(real(k.dt()), &b);
        let ja = (k.scheme() == Scheme::SecondSimplified).then(|| k.jump_sum_adjoint(&a));
        Left { a, ar, at, b, atb, ja }
    }

    /// K*(A), reusing the factors.
    pub fn adjoint_step(&self, k: &KrausMap) -> CMatrix {
        let dt = k.dt();
        match k.scheme() {
            Scheme::First => self.atb.clone(),
            Scheme::Second => {
                let mut out = sandwich(k.forward_factor_adjoint(), &self.atb, k.forward_factor());
                out.scaled_add(real(0.5 * dt * dt), &k.jump_sum_adjoint(&self.b));
                out
            }
            Scheme::SecondSimplified => {
                let mut out = sandwich(k.forward_factor_adjoint(), &self.atb, k.forward_factor());
                let ja = self.ja.as_ref().expect("simplified factors");
                out.scaled_add(real(0.5 * dt * dt), &k.jump_sum_adjoint(ja));
                out
            }
        }
    }

    pub fn op(&self) -> &CMatrix {
        &self.a
    }
}

/// Quantities that depend only on the state ρ_m (and ρ_{m+1}).
pub(crate) struct Right {
    /// R Q R†: ρ_{m+1}, minus the outer double-jump term when simplified
    sandwiched: CMatrix,
    /// ρ D†, second order only
    rho_d: Option<CMatrix>,
    /// multiplies Ã in V̂_j
    x: Vec<CMatrix>,
    /// multiplies J*(Ã) in V̂_j (full second order)
    y: Vec<CMatrix>,
    /// multiply A and J*(A) in V̂_j (simplified)
    z: Vec<CMatrix>,
    w: Vec<CMatrix>,
}

impl Right {
    pub fn new(k: &KrausMap, rho: &CMatrix, rho_next: &CMatrix) -> Self {
        let dt = k.dt();
        let nv = k.n_jumps();
        let js = k.jump_set();
        let right_all =
            |m: &CMatrix, c: f64| -> Vec<CMatrix> { (0..nv).map(|j| js.right_adjoint(j, m) * real(c)).collect() };
        match k.scheme() {
            Scheme::First => Right {
                sandwiched: rho_next.clone(),
                rho_d: None,
                x: right_all(rho, dt),
                y: Vec::new(),
                z: Vec::new(),
                w: Vec::new(),
            },
            Scheme::Second => {
                let rho_d = matmul(rho, k.forward_factor_adjoint());
                let mut p = matmul(k.forward_factor(), &rho_d) * real(dt);
                let jr = k.jump_sum(rho);
                p.scaled_add(real(0.5 * dt * dt), &jr);
                Right {
                    sandwiched: rho_next.clone(),
                    rho_d: Some(rho_d),
                    x: right_all(&p, 1.0),
                    y: right_all(rho, 0.5 * dt * dt),
                    z: Vec::new(),
                    w: Vec::new(),
                }
            }
            Scheme::SecondSimplified => {
                let rho_d = matmul(rho, k.forward_factor_adjoint());
                let drd = matmul(k.forward_factor(), &rho_d);
                let jr = k.jump_sum(rho);
                let mut sandwiched = rho_next.clone();
                sandwiched.scaled_add(real(-0.5 * dt * dt), &k.jump_sum(&jr));
                Right {
                    sandwiched,
                    rho_d: Some(rho_d),
                    x: right_all(&drd, dt),
                    y: Vec::new(),
                    z: right_all(&jr, 0.5 * dt * dt),
                    w: right_all(rho, 0.5 * dt * dt),
                }
            }
        }
    }
}

/// out += weight · cotangent(A, ρ).
pub(crate) fn accumulate(k: &KrausMap, left: &Left, right: &Right, weight: f64, out: &mut Cotangent) {
    let dt = k.dt();
    let w = real(weight);
    match k.scheme() {
        Scheme::First => {
            matmul_acc(w * dt, &right.sandwiched, &left.ar, &mut out.g);
            for (j, x) in right.x.iter().enumerate() {
                matmul_acc(w, x, &left.at, &mut out.v[j]);
            }
        }
        Scheme::Second | Scheme::SecondSimplified => {
            let half = w * (0.5 * dt);
            matmul_acc(half, &right.sandwiched, &left.ar, &mut out.g);
            matmul_acc(half, right.rho_d.as_ref().expect("second order"), &left.atb, &mut out.g);
            for (j, x) in right.x.iter().enumerate() {
                matmul_acc(w, x, &left.at, &mut out.v[j]);
            }
            for (j, y) in right.y.iter().enumerate() {
                matmul_acc(w, y, &left.b, &mut out.v[j]);
            }
            if let Some(ja) = &left.ja {
                for (j, (z, wj)) in right.z.iter().zip(&right.w).enumerate() {
                    matmul_acc(w, z, &left.a, &mut out.v[j]);
                    matmul_acc(w, wj, ja, &mut out.v[j]);
                }
            }
        }
    }
}
