//! Forward sensitivities χ_{m+1} = K χ_m + (∂_α K) ρ_m.
//!
//! Every term is gathered inside one resolvent sandwich R[·]R†, so a step costs
//! four dense products plus three jump sums per parameter.

use num_complex::Complex64;

use super::derivative::SparseDerivative;
use crate::operators::{dagger, hermitize, matmul, real, sandwich, CMatrix};
use crate::propagator::{KrausMap, Scheme};

/// Per-step quantities shared by all parameters.
pub(crate) struct StepFactors {
    /// ρ_m D† (ρ_m for first order)
    rho_d: CMatrix,
    /// R Q_m with Q_m the operator inside the sandwich for ρ_m
    p: CMatrix,
    /// X V_j† for X = D ρ D† (ρ for first order)
    drd_v: Vec<CMatrix>,
    /// J(ρ) V_j†, second order
    jr_v: Vec<CMatrix>,
    /// ρ V_j†, second order
    rho_v: Vec<CMatrix>,
}

impl StepFactors {
    pub fn new(k: &KrausMap, rho: &CMatrix, rho_next: &CMatrix) -> Self {
        let dt = k.dt();
        let js = k.jump_set();
        let nv = k.n_jumps();
        let right_all = |m: &CMatrix| -> Vec<CMatrix> { (0..nv).map(|j| js.right_adjoint(j, m)).collect() };
        let implicit = if k.order() == 1 { dt } else { 0.5 * dt };
        // R Q = R Q R† C† with C = I − implicit·G
        let p_of = |sandwiched: &CMatrix| -> CMatrix {
            let mut p = sandwiched.clone();
            p.scaled_add(real(-implicit), &matmul(sandwiched, &dagger(k.generator())));
            p
        };
        match k.scheme() {
            Scheme::First => StepFactors {
                rho_d: rho.clone(),
                p: p_of(rho_next),
                drd_v: right_all(rho),
                jr_v: Vec::new(),
                rho_v: Vec::new(),
            },
            Scheme::Second | Scheme::SecondSimplified => {
                let rho_d = matmul(rho, k.forward_factor_adjoint());
                let drd = matmul(k.forward_factor(), &rho_d);
                let jr = k.jump_sum(rho);
                let p = if k.scheme() == Scheme::Second {
                    p_of(rho_next)
                } else {
                    let mut s = rho_next.clone();
                    s.scaled_add(real(-0.5 * dt * dt), &k.jump_sum(&jr));
                    p_of(&s)
                };
                StepFactors { rho_d, p, drd_v: right_all(&drd), jr_v: right_all(&jr), rho_v: right_all(rho) }
            }
        }
    }
}

/// T = Σ_j c·∂V_j · pre_j
fn partial_jump(pd: &SparseDerivative, pre: &[CMatrix], c: f64, out: &mut CMatrix) {
    for (j, dv) in &pd.dv {
        dv.left_mul_acc(&pre[*j], real(c), out);
    }
}

fn add_hermitian_part(target: &mut CMatrix, hol: &CMatrix) {
    *target += hol;
    *target += &dagger(hol);
}

/// K χ + (∂K) ρ for one parameter.
pub(crate) fn sensitivity_step(k: &KrausMap, f: &StepFactors, pd: &SparseDerivative, chi: &CMatrix) -> CMatrix {
    let dt = k.dt();
    let one = Complex64::new(1.0, 0.0);
    let d = k.dim();
    let mut out = match k.scheme() {
        Scheme::First => {
            let mut inner = chi.clone();
            inner.scaled_add(real(dt), &k.jump_sum(chi));
            let mut hol = CMatrix::zeros((d, d));
            partial_jump(pd, &f.drd_v, dt, &mut hol);
            pd.dg.left_mul_acc(&f.p, real(dt), &mut hol);
            add_hermitian_part(&mut inner, &hol);
            sandwich(k.resolvent(), &inner, k.resolvent_adjoint())
        }
        Scheme::Second | Scheme::SecondSimplified => {
            let h = 0.5 * dt;
            let h2 = 0.5 * dt * dt;
            let mut s = CMatrix::zeros((d, d));
            pd.dg.left_mul_acc(&f.rho_d, real(h), &mut s);
            let mut z1 = sandwich(k.forward_factor(), chi, k.forward_factor_adjoint());
            add_hermitian_part(&mut z1, &s);
            let mut inner = z1.clone();
            inner.scaled_add(real(dt), &k.jump_sum(&z1));

            let mut hol = CMatrix::zeros((d, d));
            partial_jump(pd, &f.drd_v, dt, &mut hol);
            pd.dg.left_mul_acc(&f.p, real(h), &mut hol);

            let mut t_rho = CMatrix::zeros((d, d));
            partial_jump(pd, &f.rho_v, 1.0, &mut t_rho);
            let mut dd = k.jump_sum(chi);
            add_hermitian_part(&mut dd, &t_rho);
            let mut outer = k.jump_sum(&dd) * real(h2);
            let mut t_jr = CMatrix::zeros((d, d));
            partial_jump(pd, &f.jr_v, h2, &mut t_jr);
            add_hermitian_part(&mut outer, &t_jr);

            add_hermitian_part(&mut inner, &hol);
            if k.scheme() == Scheme::Second {
                inner += &outer;
                sandwich(k.resolvent(), &inner, k.resolvent_adjoint())
            } else {
                let mut r = sandwich(k.resolvent(), &inner, k.resolvent_adjoint());
                r.scaled_add(one, &outer);
                r
            }
        }
    };
    hermitize(&mut out);
    out
}
