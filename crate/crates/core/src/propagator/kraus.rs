use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::jumps::JumpSet;
use crate::error::{Error, Result};
use crate::model::LindbladOperators;
use crate::operators::{
    check_square, dagger, hermitize, identity, lu_factor, real, sandwich, spectral_norm_hermitian, trace, CMatrix,
    DensityMatrix, LuFactorization, Observable,
};

/// Integrator choice for the Kraus-form time step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Semi-implicit Euler, local error O(dt²).
    First,
    /// Implicit midpoint with the resolvent applied to the double-jump terms, local error O(dt³).
    #[default]
    Second,
    /// Second order with the double-jump terms left outside the resolvent.
    SecondSimplified,
}

impl Scheme {
    pub fn order(self) -> u32 {
        match self {
            Scheme::First => 1,
            Scheme::Second | Scheme::SecondSimplified => 2,
        }
    }

    pub fn is_simplified(self) -> bool {
        self == Scheme::SecondSimplified
    }

    pub fn from_order(order: u32, simplified: bool) -> Result<Self> {
        match (order, simplified) {
            (1, false) => Ok(Scheme::First),
            (2, false) => Ok(Scheme::Second),
            (2, true) => Ok(Scheme::SecondSimplified),
            _ => Err(Error::InvalidArgument(format!("no scheme of order {order} (simplified: {simplified})"))),
        }
    }
}

/// One time step ρ ↦ Σ_j F_j ρ F_j† of a completely positive integrator.
///
/// The channel is applied in factored form,
/// `R[D X D† + dt·J(D X D†) + ½dt²·J(J(X))]R†` with `R` the cached resolvent,
/// `D = I + ½G dt` and `J(X) = Σ V_j X V_j†` (first order: `D = I`, no
/// double-jump term). The explicit Kraus list is built only on request.
#[derive(Debug)]
pub struct KrausMap {
    scheme: Scheme,
    dt: f64,
    g: CMatrix,
    jumps: JumpSet,
    lu: LuFactorization,
    r: CMatrix,
    r_dag: CMatrix,
    d: CMatrix,
    d_dag: CMatrix,
    renormalize: bool,
    explicit: OnceLock<Vec<CMatrix>>,
}

pub fn kraus_first_order(ops: &LindbladOperators, dt: f64) -> Result<KrausMap> {
    KrausMap::new(ops, dt, Scheme::First)
}

pub fn kraus_second_order(ops: &LindbladOperators, dt: f64, simplified: bool) -> Result<KrausMap> {
    KrausMap::new(ops, dt, if simplified { Scheme::SecondSimplified } else { Scheme::Second })
}

impl KrausMap {
    pub fn new(ops: &LindbladOperators, dt: f64, scheme: Scheme) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidStep(dt));
        }
        let n = ops.dim();
        let g = ops.generator().clone();
        let eye = identity(n);
        let implicit = match scheme {
            Scheme::First => dt,
            _ => 0.5 * dt,
        };
        let a = &eye - &(&g * real(implicit));
        let lu = lu_factor(&a)?;
        let r = lu.inverse();
        let d = match scheme {
            Scheme::First => eye,
            _ => &eye + &(&g * real(0.5 * dt)),
        };
        Ok(KrausMap {
            scheme,
            dt,
            jumps: JumpSet::new(ops.jumps()),
            r_dag: dagger(&r),
            d_dag: dagger(&d),
            g,
            lu,
            r,
            d,
            renormalize: false,
            explicit: OnceLock::new(),
        })
    }

    /// Divide by the trace after every step. Off by default.
    pub fn with_trace_renormalization(mut self, on: bool) -> Self {
        self.renormalize = on;
        self
    }

    pub fn renormalizes(&self) -> bool {
        self.renormalize
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn order(&self) -> u32 {
        self.scheme.order()
    }

    pub fn is_simplified(&self) -> bool {
        self.scheme.is_simplified()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    pub fn n_jumps(&self) -> usize {
        self.jumps.len()
    }

    pub fn generator(&self) -> &CMatrix {
        &self.g
    }

    pub fn jump(&self, j: usize) -> &CMatrix {
        self.jumps.dense(j)
    }

    pub(crate) fn jump_set(&self) -> &JumpSet {
        &self.jumps
    }

    /// (I − G dt)⁻¹ for first order, (I − ½G dt)⁻¹ for second order.
    pub fn resolvent(&self) -> &CMatrix {
        &self.r
    }

    pub fn resolvent_adjoint(&self) -> &CMatrix {
        &self.r_dag
    }

    pub fn factorization(&self) -> &LuFactorization {
        &self.lu
    }

    /// I + ½G dt for second order, I for first order.
    pub fn forward_factor(&self) -> &CMatrix {
        &self.d
    }

    pub fn forward_factor_adjoint(&self) -> &CMatrix {
        &self.d_dag
    }

    /// J(X) = Σ V_j X V_j†.
    pub fn jump_sum(&self, x: &CMatrix) -> CMatrix {
        self.jumps.apply(x)
    }

    /// J*(X) = Σ V_j† X V_j.
    pub fn jump_sum_adjoint(&self, x: &CMatrix) -> CMatrix {
        self.jumps.apply_adjoint(x)
    }

    fn sandwich(&self, x: &CMatrix) -> CMatrix {
        sandwich(&self.r, x, &self.r_dag)
    }

    /// The inner operator Q with K(X) = R Q R† (+ the outer double-jump term when simplified).
    pub(crate) fn inner(&self, x: &CMatrix) -> CMatrix {
        let dt = self.dt;
        match self.scheme {
            Scheme::First => {
                let mut q = x.clone();
                q.scaled_add(real(dt), &self.jumps.apply(x));
                q
            }
            Scheme::Second | Scheme::SecondSimplified => {
                let y = sandwich(&self.d, x, &self.d_dag);
                let mut q = y.clone();
                q.scaled_add(real(dt), &self.jumps.apply(&y));
                if self.scheme == Scheme::Second {
                    q.scaled_add(real(0.5 * dt * dt), &self.jumps.apply(&self.jumps.apply(x)));
                }
                q
            }
        }
    }

    /// Σ F_j X F_j† for any square X, without re-Hermitization.
    pub fn apply_raw(&self, x: &CMatrix) -> CMatrix {
        let mut out = self.sandwich(&self.inner(x));
        if self.scheme == Scheme::SecondSimplified {
            let jj = self.jumps.apply(&self.jumps.apply(x));
            out.scaled_add(real(0.5 * self.dt * self.dt), &jj);
        }
        out
    }

    /// Σ F_j† A F_j for any square A, without re-Hermitization.
    pub fn apply_adjoint_raw(&self, a: &CMatrix) -> CMatrix {
        let dt = self.dt;
        let x = sandwich(&self.r_dag, a, &self.r);
        let mut inner = x.clone();
        inner.scaled_add(real(dt), &self.jumps.apply_adjoint(&x));
        match self.scheme {
            Scheme::First => inner,
            Scheme::Second | Scheme::SecondSimplified => {
                let mut out = sandwich(&self.d_dag, &inner, &self.d);
                let base = if self.scheme == Scheme::Second { &x } else { a };
                let jj = self.jumps.apply_adjoint(&self.jumps.apply_adjoint(base));
                out.scaled_add(real(0.5 * dt * dt), &jj);
                out
            }
        }
    }

    /// One step of a Hermitian operator, re-Hermitized (and renormalized if enabled).
    pub fn step_op(&self, x: &CMatrix) -> CMatrix {
        let mut y = self.apply_raw(x);
        hermitize(&mut y);
        if self.renormalize {
            let t = trace(&y).re;
            y.mapv_inplace(|z| z / t);
        }
        y
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        check_square(rho.op(), self.dim())?;
        Ok(DensityMatrix::from_hermitian(self.step_op(rho.op())))
    }

    pub fn apply_adjoint(&self, a: &Observable) -> Result<Observable> {
        check_square(a.op(), self.dim())?;
        let mut y = self.apply_adjoint_raw(a.op());
        hermitize(&mut y);
        Observable::new(y, format!("K*[{}]", a.label()))
    }

    /// Explicit Kraus operators: F₀, the N_V single-jump terms, then (second order)
    /// N_V² double-jump terms with index 1 + N_V + j₁ + N_V·j₂ holding V_{j₁}V_{j₂}.
    pub fn operators(&self) -> &[CMatrix] {
        self.explicit.get_or_init(|| self.build_operators())
    }

    fn build_operators(&self) -> Vec<CMatrix> {
        let nv = self.jumps.len();
        let sdt = real(self.dt.sqrt());
        let mut out = Vec::with_capacity(1 + nv + nv * nv);
        let f0 = self.r.dot(&self.d);
        out.push(f0);
        for j in 0..nv {
            out.push(self.r.dot(self.jumps.dense(j)).dot(&self.d) * sdt);
        }
        if self.order() == 2 {
            let c = real(self.dt * std::f64::consts::FRAC_1_SQRT_2);
            for j2 in 0..nv {
                for j1 in 0..nv {
                    let vv = self.jumps.dense(j1).dot(self.jumps.dense(j2));
                    let op = if self.is_simplified() { vv } else { self.r.dot(&vv) };
                    out.push(op * c);
                }
            }
        }
        out
    }

    /// ‖Σ F_j†F_j − I‖₂.
    pub fn tp_defect(&self) -> Result<f64> {
        let n = self.dim();
        let mut s = self.apply_adjoint_raw(&identity(n));
        hermitize(&mut s);
        s -= &identity(n);
        spectral_norm_hermitian(&s)
    }
}

/// Σ F X F† for an explicit operator list.
pub fn apply_kraus_list(ops: &[CMatrix], x: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(x.raw_dim());
    for f in ops {
        out += &sandwich(f, x, &dagger(f));
    }
    out
}

/// Σ F† A F for an explicit operator list.
pub fn apply_kraus_list_adjoint(ops: &[CMatrix], a: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(a.raw_dim());
    for f in ops {
        out += &sandwich(&dagger(f), a, f);
    }
    out
}
