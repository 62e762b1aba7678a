//! Implicit two-step time discretization of
//!
//! ```text
//! ü + 𝒜^s u + ν ℬ^s u̇ + β^ε(u) = g,   u(0) = w₀, u̇(0) = w₁,
//! ```
//!
//! on a uniform grid t_j = j·h, h = T/n:
//!
//! ```text
//! (u_j − 2u_{j−1} + u_{j−2})/h² + 𝒜^s u_j + (ν/h) ℬ^s (u_j − u_{j−1})
//!     + β^ε(u_j) = g(t_j),        u_{−1} := w₀ − h·w₁,
//! ```
//!
//! a fully implicit scheme that is unconditionally stable: the linear
//! single-mode amplification factor has |ρ|² = 1/(1 + h²λ_A) ≤ 1. Each step
//! solves the nonlinear equation by a semismooth Newton iteration on the
//! h²-scaled residual
//!
//! ```text
//! R(u) = u − 2u_{j−1} + u_{j−2} + h²𝒜^s u + hν ℬ^s(u − u_{j−1})
//!        + h² β^ε(u) − h² g,
//! ```
//!
//! whose Jacobian I + h²𝒜^s + hν ℬ^s + h² diag(∂β^ε) is a compact
//! perturbation of the identity; the unscaled form would put the f64 noise
//! floor of the residual near rtol/h² and make absolute tolerances
//! unattainable. Linear solves use matrix-free BiCGStab with an exact
//! constant-coefficient Fourier preconditioner restricted to the interior
//! subspace, so well-resolved steps converge in a handful of inner
//! iterations.

use thiserror::Error;

use crate::domain::{CoefficientField, Field, GridSpec};
use crate::frac_ops::{build_riesz, EllipticOperator, OpsError};
use crate::monotone::MonotoneGraph;
use crate::spectral;

#[derive(Debug, Error)]
pub enum RotheError {
    #[error(transparent)]
    Ops(#[from] OpsError),
    #[error("fields and coefficients must share the problem grid")]
    GridMismatch,
    #[error("viscosity ν = {0} must be finite and nonnegative")]
    BadViscosity(f64),
    #[error("penalty ε = {0} must be finite and positive")]
    BadPenalty(f64),
    #[error("horizon T = {0} must be finite and positive")]
    BadHorizon(f64),
    #[error("need at least one time step")]
    NoSteps,
    #[error("forcing table holds {got} fields, expected steps + 1 = {expected}")]
    ForcingLength { got: usize, expected: usize },
    #[error("initial data must be finite")]
    NonFiniteData,
    #[error("solver parameter {0} is out of range")]
    BadParams(&'static str),
    #[error("Newton stalled at step {step}, iteration {iter}: no backtracking step decreased the residual {residual:.3e}")]
    NewtonStalled {
        step: usize,
        iter: usize,
        residual: f64,
    },
    #[error("Newton did not reach tolerance at step {step}: residual {residual:.3e} after {iters} iterations")]
    NewtonExhausted {
        step: usize,
        iters: usize,
        residual: f64,
    },
    #[error("Krylov solver broke down at step {step}: {reason}")]
    KrylovBreakdown { step: usize, reason: &'static str },
    #[error("solution lost finiteness at step {step}")]
    NonFinite { step: usize },
}

/// Right-hand side g: either one fixed field or a table with one field per
/// time node t_j, j = 0..=steps.
#[derive(Debug, Clone)]
pub enum Forcing {
    Static(Field),
    Table(Vec<Field>),
}

impl Forcing {
    pub(crate) fn at(&self, j: usize) -> &Field {
        match self {
            Forcing::Static(f) => f,
            Forcing::Table(t) => &t[j],
        }
    }
}

/// The continuous problem data: operators 𝒜^s, ℬ^s through their
/// coefficient fields, the constraint graph with its penalty parameter, the
/// forcing, and the initial displacement/velocity.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub grid: GridSpec,
    pub s: f64,
    pub elastic: CoefficientField,
    pub viscous: CoefficientField,
    pub nu: f64,
    pub graph: MonotoneGraph,
    pub eps: f64,
    pub forcing: Forcing,
    pub w0: Field,
    pub w1: Field,
}

/// Newton/Krylov knobs. The Newton tolerance for a step is
/// `rtol·(‖2u_{j−1} − u_{j−2}‖ + h²‖g_j‖) + atol` on the h²-scaled residual.
#[derive(Debug, Clone, Copy)]
pub struct SolverParams {
    pub rtol: f64,
    pub atol: f64,
    pub max_newton: usize,
    pub max_backtracks: usize,
    pub krylov_rtol: f64,
    pub max_krylov: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            rtol: 1e-10,
            atol: 1e-12,
            max_newton: 50,
            max_backtracks: 20,
            krylov_rtol: 1e-13,
            max_krylov: 400,
        }
    }
}

/// The discrete solution: displacements u_j, backward-difference velocities
/// v_j = (u_j − u_{j−1})/h (v₀ = w₁) and accelerations a_j = (v_j − v_{j−1})/h
/// (a₀ = 0), one per time node, plus per-step Newton statistics.
#[derive(Debug, Clone)]
pub struct Trajectory {
    grid: GridSpec,
    s: f64,
    h: f64,
    times: Vec<f64>,
    u: Vec<Field>,
    v: Vec<Field>,
    a: Vec<Field>,
    newton_iters: Vec<usize>,
    step_residuals: Vec<f64>,
}

impl Trajectory {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn step_size(&self) -> f64 {
        self.h
    }

    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn displacements(&self) -> &[Field] {
        &self.u
    }

    pub fn velocities(&self) -> &[Field] {
        &self.v
    }

    pub fn accelerations(&self) -> &[Field] {
        &self.a
    }

    /// Newton iterations spent on step j (index 0 is the initial node: 0).
    pub fn newton_iters(&self) -> &[usize] {
        &self.newton_iters
    }

    /// Final h²-scaled Newton residual of step j.
    pub fn step_residuals(&self) -> &[f64] {
        &self.step_residuals
    }

    fn pc_index(&self, t: f64) -> usize {
        let n = self.steps();
        assert!(
            t >= -1e-12 && t <= self.times[n] * (1.0 + 1e-12) + 1e-12,
            "t = {t} outside the trajectory horizon"
        );
        // step function: value u_j on ((j−1)h, jh], u₀ at t = 0
        ((t / self.h - 1e-9).ceil().max(0.0) as usize).min(n)
    }

    /// Piecewise constant interpolant (the Rothe step function): u_j on
    /// ((j−1)h, jh].
    pub fn value_pc(&self, t: f64) -> &Field {
        &self.u[self.pc_index(t)]
    }

    /// Piecewise constant velocity interpolant: v_j on ((j−1)h, jh].
    pub fn velocity_pc(&self, t: f64) -> &Field {
        &self.v[self.pc_index(t)]
    }

    fn affine(&self, fields: &[Field], t: f64) -> Field {
        let n = self.steps();
        assert!(
            t >= -1e-12 && t <= self.times[n] * (1.0 + 1e-12) + 1e-12,
            "t = {t} outside the trajectory horizon"
        );
        let j = ((t / self.h).floor().max(0.0) as usize).min(n - 1);
        let theta = (t / self.h - j as f64).clamp(0.0, 1.0);
        let mut out = fields[j].clone();
        out.scale(1.0 - theta);
        out.axpy(theta, &fields[j + 1]);
        out
    }

    /// Piecewise affine interpolant of the displacements.
    pub fn value_affine(&self, t: f64) -> Field {
        self.affine(&self.u, t)
    }

    /// Piecewise affine interpolant of the velocities.
    pub fn velocity_affine(&self, t: f64) -> Field {
        self.affine(&self.v, t)
    }
}

fn validate(
    spec: &ProblemSpec,
    t_final: f64,
    steps: usize,
    params: &SolverParams,
) -> Result<(), RotheError> {
    if !(spec.nu.is_finite() && spec.nu >= 0.0) {
        return Err(RotheError::BadViscosity(spec.nu));
    }
    if !(spec.eps.is_finite() && spec.eps > 0.0) {
        return Err(RotheError::BadPenalty(spec.eps));
    }
    if !(t_final.is_finite() && t_final > 0.0) {
        return Err(RotheError::BadHorizon(t_final));
    }
    if steps == 0 {
        return Err(RotheError::NoSteps);
    }
    let g = &spec.grid;
    let grids_match = spec.elastic.grid() == g
        && spec.viscous.grid() == g
        && spec.w0.grid() == g
        && spec.w1.grid() == g
        && match &spec.forcing {
            Forcing::Static(f) => f.grid() == g,
            Forcing::Table(t) => t.iter().all(|f| f.grid() == g),
        };
    if !grids_match {
        return Err(RotheError::GridMismatch);
    }
    if let Forcing::Table(t) = &spec.forcing {
        if t.len() != steps + 1 {
            return Err(RotheError::ForcingLength {
                got: t.len(),
                expected: steps + 1,
            });
        }
    }
    if !(spec.w0.is_finite() && spec.w1.is_finite()) {
        return Err(RotheError::NonFiniteData);
    }
    if !(params.rtol >= 0.0 && params.rtol.is_finite()) {
        return Err(RotheError::BadParams("rtol"));
    }
    if !(params.atol > 0.0 && params.atol.is_finite()) {
        return Err(RotheError::BadParams("atol"));
    }
    if params.max_newton == 0 {
        return Err(RotheError::BadParams("max_newton"));
    }
    if !(params.krylov_rtol > 0.0 && params.krylov_rtol < 1.0) {
        return Err(RotheError::BadParams("krylov_rtol"));
    }
    if params.max_krylov == 0 {
        return Err(RotheError::BadParams("max_krylov"));
    }
    Ok(())
}

/// Interior-subspace Fourier preconditioner: division by the spectrum of
/// I + (h²·tr A/d + hν·tr B/d)(−Δ)^s, the exact inverse of the Jacobian for
/// constant coefficients on the torus.
struct FourierPrecond {
    grid: GridSpec,
    denom: Vec<f64>,
}

impl FourierPrecond {
    fn apply(&self, v: &Field) -> Field {
        let mut hat = spectral::forward(&self.grid, v.component(0));
        for (k, c) in hat.iter_mut().enumerate() {
            *c /= self.denom[k];
        }
        let mut out = Field::zeros(self.grid, 1);
        out.component_mut(0)
            .copy_from_slice(&spectral::inverse_real(&self.grid, hat));
        out.mask_in_place();
        out
    }
}

/// One time step's frozen-diagonal Newton system
/// v ↦ mask(v + h²𝒜^s v + hν ℬ^s v + h² D v).
struct StepJacobian<'a> {
    h: f64,
    nu: f64,
    elastic: &'a EllipticOperator,
    viscous: &'a EllipticOperator,
    diag: Option<&'a [f64]>,
}

impl StepJacobian<'_> {
    fn apply(&self, v: &Field) -> Field {
        let mut out = v.clone();
        out.axpy(self.h * self.h, &self.elastic.apply(v));
        if self.nu > 0.0 {
            out.axpy(self.h * self.nu, &self.viscous.apply(v));
        }
        if let Some(d) = self.diag {
            let hh = self.h * self.h;
            for (o, (&di, &vi)) in out
                .component_mut(0)
                .iter_mut()
                .zip(d.iter().zip(v.component(0)))
            {
                *o += hh * di * vi;
            }
        }
        out.mask_in_place();
        out
    }
}

/// Matrix-free preconditioned BiCGStab on the interior subspace; returns the
/// approximate solution of J x = b with ‖b − Jx‖ ≤ rtol·‖b‖.
fn bicgstab(
    jac: &StepJacobian,
    pre: &FourierPrecond,
    b: &Field,
    rtol: f64,
    max_iter: usize,
) -> Result<Field, &'static str> {
    let bnorm = b.l2_norm();
    let mut x = Field::zeros(*b.grid(), 1);
    if bnorm == 0.0 {
        return Ok(x);
    }
    let tol = rtol * bnorm;
    let mut r = b.clone();
    let rhat = r.clone();
    let mut rho = 1.0_f64;
    let mut alpha = 1.0_f64;
    let mut omega = 1.0_f64;
    let mut v = Field::zeros(*b.grid(), 1);
    let mut p = Field::zeros(*b.grid(), 1);
    for _ in 0..max_iter {
        let rho_new = rhat.inner(&r);
        if rho_new.abs() < 1e-300 {
            return Err("rho collapsed");
        }
        let beta = (rho_new / rho) * (alpha / omega);
        // p = r + β(p − ω v)
        p.axpy(-omega, &v);
        p.scale(beta);
        p.axpy(1.0, &r);
        let phat = pre.apply(&p);
        v = jac.apply(&phat);
        let denom = rhat.inner(&v);
        if denom.abs() < 1e-300 {
            return Err("search direction degenerated");
        }
        alpha = rho_new / denom;
        let mut s = r.clone();
        s.axpy(-alpha, &v);
        if s.l2_norm() <= tol {
            x.axpy(alpha, &phat);
            return Ok(x);
        }
        let shat = pre.apply(&s);
        let t = jac.apply(&shat);
        let tt = t.inner(&t);
        if tt == 0.0 {
            return Err("stabilizer direction vanished");
        }
        omega = t.inner(&s) / tt;
        if omega == 0.0 {
            return Err("stabilizer step vanished");
        }
        x.axpy(alpha, &phat);
        x.axpy(omega, &shat);
        r = s;
        r.axpy(-omega, &t);
        if r.l2_norm() <= tol {
            return Ok(x);
        }
        rho = rho_new;
    }
    Err("iteration budget exhausted")
}

/// Integrates the problem over [0, T] with `steps` uniform implicit steps.
pub fn run(
    spec: &ProblemSpec,
    t_final: f64,
    steps: usize,
    params: &SolverParams,
) -> Result<Trajectory, RotheError> {
    validate(spec, t_final, steps, params)?;
    let grid = spec.grid;
    let h = t_final / steps as f64;
    let riesz = build_riesz(grid, spec.s)?;
    let lam = riesz.lam().to_vec();
    let elastic = EllipticOperator::new(riesz.clone(), spec.elastic.clone())
        .map_err(|_| RotheError::GridMismatch)?;
    let viscous = EllipticOperator::new(riesz, spec.viscous.clone())
        .map_err(|_| RotheError::GridMismatch)?;
    let d = grid.dimension() as f64;
    let a_mean = spec.elastic.mean_trace() / d;
    let b_mean = spec.viscous.mean_trace() / d;
    let weight = h * h * a_mean + h * spec.nu * b_mean;
    let pre = FourierPrecond {
        grid,
        denom: lam.iter().map(|l| 1.0 + weight * l).collect(),
    };
    let trivial = spec.graph.is_trivial();
    let hh = h * h;
    let n_nodes = grid.total_nodes();

    let mut u = Vec::with_capacity(steps + 1);
    let mut v = Vec::with_capacity(steps + 1);
    let mut a = Vec::with_capacity(steps + 1);
    u.push(spec.w0.masked());
    v.push(spec.w1.masked());
    a.push(Field::zeros(grid, 1));
    // ghost node u_{−1} = w₀ − h w₁ encodes the initial velocity
    let mut ghost = spec.w0.masked();
    ghost.axpy(-h, &spec.w1);
    let mut newton_iters = vec![0usize];
    let mut step_residuals = vec![0.0_f64];

    // h²-scaled step residual at the frozen history (u1 = u_{j−1}, u2 = u_{j−2})
    let residual = |cand: &Field, u1: &Field, u2: &Field, g: &Field| -> Field {
        let mut r = cand.clone();
        r.axpy(-2.0, u1);
        r.axpy(1.0, u2);
        r.axpy(hh, &elastic.apply(cand));
        if spec.nu > 0.0 {
            let mut du = cand.clone();
            du.axpy(-1.0, u1);
            r.axpy(h * spec.nu, &viscous.apply(&du));
        }
        if !trivial {
            for (ri, &ci) in r.component_mut(0).iter_mut().zip(cand.component(0)) {
                *ri += hh * spec.graph.yosida(ci, spec.eps);
            }
        }
        r.axpy(-hh, g);
        r.mask_in_place();
        r
    };

    for j in 1..=steps {
        let g_j = spec.forcing.at(j).masked();
        let (u1, u2) = if j == 1 {
            (&u[0], &ghost)
        } else {
            (&u[j - 1], &u[j - 2])
        };
        // linear extrapolation seeds the Newton iteration
        let mut cand = u1.clone();
        cand.scale(2.0);
        cand.axpy(-1.0, u2);
        cand.mask_in_place();

        let mut pred = u1.clone();
        pred.scale(2.0);
        pred.axpy(-1.0, u2);
        let tol = params.rtol * (pred.l2_norm() + hh * g_j.l2_norm()) + params.atol;

        let mut res = residual(&cand, u1, u2, &g_j);
        let mut res_norm = res.l2_norm();
        let mut iters = 0usize;
        while res_norm > tol {
            if iters >= params.max_newton {
                return Err(RotheError::NewtonExhausted {
                    step: j,
                    iters,
                    residual: res_norm,
                });
            }
            iters += 1;
            let diag: Option<Vec<f64>> = if trivial {
                None
            } else {
                let mut dvec = Vec::with_capacity(n_nodes);
                for &ci in cand.component(0) {
                    dvec.push(spec.graph.yosida_slope(ci, spec.eps));
                }
                Some(dvec)
            };
            let jac = StepJacobian {
                h,
                nu: spec.nu,
                elastic: &elastic,
                viscous: &viscous,
                diag: diag.as_deref(),
            };
            let delta = bicgstab(&jac, &pre, &res, params.krylov_rtol, params.max_krylov)
                .map_err(|reason| RotheError::KrylovBreakdown { step: j, reason })?;
            // backtracking: accept the first candidate that decreases ‖R‖
            let mut step_len = 1.0_f64;
            let mut accepted = false;
            for _ in 0..=params.max_backtracks {
                let mut trial = cand.clone();
                trial.axpy(-step_len, &delta);
                let trial_res = residual(&trial, u1, u2, &g_j);
                let trial_norm = trial_res.l2_norm();
                if trial_norm < res_norm {
                    cand = trial;
                    res = trial_res;
                    res_norm = trial_norm;
                    accepted = true;
                    break;
                }
                step_len *= 0.5;
            }
            if !accepted {
                return Err(RotheError::NewtonStalled {
                    step: j,
                    iter: iters,
                    residual: res_norm,
                });
            }
        }
        if !cand.is_finite() {
            return Err(RotheError::NonFinite { step: j });
        }

        let mut vel = cand.clone();
        vel.axpy(-1.0, &u[j - 1]);
        vel.scale(1.0 / h);
        let mut acc = vel.clone();
        acc.axpy(-1.0, &v[j - 1]);
        acc.scale(1.0 / h);
        u.push(cand);
        v.push(vel);
        a.push(acc);
        newton_iters.push(iters);
        step_residuals.push(res_norm);
    }

    Ok(Trajectory {
        grid,
        s: spec.s,
        h,
        times: (0..=steps).map(|j| j as f64 * h).collect(),
        u,
        v,
        a,
        newton_iters,
        step_residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn torus_spec(n: usize, s: f64, nu: f64, amp: f64, vamp: f64, mode: f64) -> ProblemSpec {
        let grid = GridSpec::torus(1, 1.0, n).unwrap();
        ProblemSpec {
            grid,
            s,
            elastic: CoefficientField::identity(grid),
            viscous: CoefficientField::identity(grid),
            nu,
            graph: MonotoneGraph::free(),
            eps: 1e-3,
            forcing: Forcing::Static(Field::zeros(grid, 1)),
            w0: Field::scalar_from_fn(grid, |[x, _]| amp * (TAU * mode * x).sin()),
            w1: Field::scalar_from_fn(grid, |[x, _]| vamp * (TAU * mode * x).sin()),
        }
    }

    fn arch_spec(grid: GridSpec, eps: f64) -> ProblemSpec {
        // a downward-moving half-sine arch over a flat floor at zero
        let l = grid.domain_side();
        let x0 = grid.omega_origin();
        let shape = move |x: f64| (std::f64::consts::PI * (x - x0) / l).sin().max(0.0);
        ProblemSpec {
            grid,
            s: 0.75,
            elastic: CoefficientField::identity(grid),
            viscous: CoefficientField::identity(grid),
            nu: 1e-3,
            graph: MonotoneGraph::interval(0.0, f64::INFINITY).unwrap(),
            eps,
            forcing: Forcing::Static(Field::zeros(grid, 1)),
            w0: Field::interior_from_fn(grid, move |[x, _]| 0.1 * shape(x)),
            w1: Field::interior_from_fn(grid, move |[x, _]| -2.0 * shape(x)),
        }
    }

    #[test]
    fn validation_rejects_bad_inputs() {
        let spec = torus_spec(32, 0.5, 1e-2, 1.0, 0.0, 1.0);
        let p = SolverParams::default();
        assert!(matches!(
            run(&ProblemSpec { nu: -1.0, ..spec.clone() }, 1.0, 10, &p),
            Err(RotheError::BadViscosity(_))
        ));
        assert!(matches!(
            run(&ProblemSpec { eps: 0.0, ..spec.clone() }, 1.0, 10, &p),
            Err(RotheError::BadPenalty(_))
        ));
        assert!(matches!(
            run(&spec, 0.0, 10, &p),
            Err(RotheError::BadHorizon(_))
        ));
        assert!(matches!(run(&spec, 1.0, 0, &p), Err(RotheError::NoSteps)));
        let other = GridSpec::torus(1, 1.0, 64).unwrap();
        assert!(matches!(
            run(
                &ProblemSpec { w0: Field::zeros(other, 1), ..spec.clone() },
                1.0,
                10,
                &p
            ),
            Err(RotheError::GridMismatch)
        ));
        assert!(matches!(
            run(
                &ProblemSpec {
                    forcing: Forcing::Table(vec![Field::zeros(spec.grid, 1); 5]),
                    ..spec.clone()
                },
                1.0,
                10,
                &p
            ),
            Err(RotheError::ForcingLength { got: 5, expected: 11 })
        ));
        assert!(matches!(
            run(&spec, 1.0, 10, &SolverParams { atol: 0.0, ..p }),
            Err(RotheError::BadParams("atol"))
        ));
    }

    #[test]
    fn zero_data_stays_zero() {
        let grid = GridSpec::build(1, 1.0, 4, 64).unwrap();
        let spec = ProblemSpec {
            grid,
            s: 0.5,
            elastic: CoefficientField::identity(grid),
            viscous: CoefficientField::identity(grid),
            nu: 0.1,
            graph: MonotoneGraph::interval(0.0, f64::INFINITY).unwrap(),
            eps: 1e-2,
            forcing: Forcing::Static(Field::zeros(grid, 1)),
            w0: Field::zeros(grid, 1),
            w1: Field::zeros(grid, 1),
        };
        let traj = run(&spec, 1.0, 20, &SolverParams::default()).unwrap();
        for f in traj.displacements() {
            assert_eq!(f.linf_norm(), 0.0);
        }
        assert!(traj.newton_iters().iter().all(|&k| k == 0));
    }

    #[test]
    fn single_mode_matches_scalar_recursion() {
        // on the torus with identity coefficients a single Fourier mode obeys
        // the scalar recursion û_j (1 + h²λ + hνλ_B) = (2 + hνλ_B) û_{j−1} − û_{j−2}
        let (s, nu, mode) = (0.6, 1e-2, 2.0);
        let (amp, vamp) = (0.8, -0.3);
        let spec = torus_spec(64, s, nu, amp, vamp, mode);
        let steps = 50;
        let t_final = 0.5;
        let traj = run(&spec, t_final, steps, &SolverParams::default()).unwrap();
        let h = t_final / steps as f64;
        let lam = (TAU * mode).powf(2.0 * s);
        let (mut prev2, mut prev) = (amp - h * vamp, amp);
        let mut worst = 0.0_f64;
        let mut scale = amp.abs();
        let probe = spec.grid.total_nodes() / 8; // x = 1/8: sin(4π/8) = 1
        for j in 1..=steps {
            let next = ((2.0 + h * nu * lam) * prev - prev2) / (1.0 + h * h * lam + h * nu * lam);
            prev2 = prev;
            prev = next;
            scale = scale.max(next.abs());
            let got = traj.displacements()[j].component(0)[probe];
            worst = worst.max((got - next).abs());
        }
        assert!(worst <= 1e-10 * scale, "worst deviation {worst}");
    }

    #[test]
    fn huge_steps_remain_bounded() {
        // unconditional stability: h²λ ≈ 2.5·10³ and the scheme still damps
        let spec = torus_spec(64, 1.0, 0.0, 1.0, 0.0, 2.0);
        let traj = run(&spec, 40.0, 10, &SolverParams::default()).unwrap();
        let init = traj.displacements()[0].l2_norm();
        for f in traj.displacements() {
            assert!(f.l2_norm() <= init * (1.0 + 1e-12));
        }
    }

    #[test]
    fn discrete_energy_never_grows_without_forcing() {
        let grid = GridSpec::build(1, 1.0, 4, 128).unwrap();
        let c = grid.omega_center();
        let elastic = CoefficientField::from_fn(grid, 0.5, 3.0, |[x, _]| {
            [[1.5 + (x * 1.3).sin().powi(2), 0.0], [0.0, 1.0]]
        })
        .unwrap();
        let spec = ProblemSpec {
            grid,
            s: 0.7,
            elastic: elastic.clone(),
            viscous: CoefficientField::identity(grid),
            nu: 5e-2,
            graph: MonotoneGraph::free(),
            eps: 1e-3,
            forcing: Forcing::Static(Field::zeros(grid, 1)),
            w0: Field::interior_from_fn(grid, move |[x, _]| {
                (-60.0 * (x - c) * (x - c)).exp() * 0.3
            }),
            w1: Field::zeros(grid, 1),
        };
        let traj = run(&spec, 0.5, 100, &SolverParams::default()).unwrap();
        let riesz = build_riesz(grid, 0.7).unwrap();
        let op = EllipticOperator::new(riesz, elastic).unwrap();
        let energy = |j: usize| {
            let vel = &traj.velocities()[j];
            0.5 * vel.inner(vel) + 0.5 * op.quadratic_form(&traj.displacements()[j])
        };
        let mut prev = energy(0);
        for j in 1..=traj.steps() {
            let e = energy(j);
            assert!(e <= prev * (1.0 + 1e-10), "energy grew at step {j}");
            prev = e;
        }
    }

    #[test]
    fn obstacle_limits_penetration_and_changes_motion() {
        let grid = GridSpec::build(1, 1.0, 8, 256).unwrap();
        let eps = 1e-4;
        let spec = arch_spec(grid, eps);
        let steps = 200;
        let traj = run(&spec, 0.1, steps, &SolverParams::default()).unwrap();
        // initial energy bounds the envelope term: dist² ≤ 2ε·E₀ pointwise
        // in the a-priori estimate's L² sense; allow slack on the sup
        let riesz = build_riesz(grid, spec.s).unwrap();
        let e0 = 0.5 * spec.w1.inner(&spec.w1)
            + 0.5 * riesz.hs_seminorm(&spec.w0).powi(2);
        let bound = (2.0 * eps * e0).sqrt() * 5.0;
        let mut deepest = 0.0_f64;
        for f in traj.displacements() {
            for &x in f.component(0) {
                deepest = deepest.max(-x);
            }
        }
        assert!(deepest > 0.0, "the arch never touched the floor");
        assert!(deepest <= bound, "penetration {deepest} exceeds {bound}");
        assert!(traj.newton_iters().iter().any(|&k| k >= 1));

        // the free problem dives far below the floor by the same time
        let free = ProblemSpec {
            graph: MonotoneGraph::free(),
            ..spec
        };
        let free_traj = run(&free, 0.1, steps, &SolverParams::default()).unwrap();
        let free_min = free_traj.displacements()[steps]
            .component(0)
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        // the unconstrained arch (u ≈ w₀ + t·w₁) is near −0.1 by t = 0.1,
        // far beyond the penalized penetration depth
        assert!(free_min < -0.05, "free minimum only {free_min}");
        assert!(free_min < -2.0 * deepest);
    }

    #[test]
    fn interpolants_agree_with_nodes() {
        let spec = torus_spec(32, 0.5, 0.0, 1.0, 0.5, 1.0);
        let traj = run(&spec, 1.0, 10, &SolverParams::default()).unwrap();
        let h = traj.step_size();
        // node values
        for j in 0..=10 {
            let t = j as f64 * h;
            assert_eq!(traj.value_pc(t), &traj.displacements()[j]);
            let aff = traj.value_affine(t);
            assert!(aff.sub(&traj.displacements()[j]).linf_norm() <= 1e-12);
        }
        // strictly inside a step the pc interpolant takes the right endpoint
        assert_eq!(traj.value_pc(2.5 * h), &traj.displacements()[3]);
        assert_eq!(traj.velocity_pc(2.5 * h), &traj.velocities()[3]);
        // affine midpoint is the average
        let mid = traj.value_affine(2.5 * h);
        let mut avg = traj.displacements()[2].clone();
        avg.axpy(1.0, &traj.displacements()[3]);
        avg.scale(0.5);
        assert!(mid.sub(&avg).linf_norm() <= 1e-12);
    }

    #[test]
    fn velocities_and_accelerations_are_differences() {
        let spec = torus_spec(32, 0.8, 1e-2, 0.5, 0.2, 1.0);
        let traj = run(&spec, 0.3, 6, &SolverParams::default()).unwrap();
        let h = traj.step_size();
        assert!(traj.velocities()[0].sub(&spec.w1).linf_norm() <= 1e-14);
        assert_eq!(traj.accelerations()[0].linf_norm(), 0.0);
        for j in 1..=6 {
            let mut dv = traj.displacements()[j].clone();
            dv.axpy(-1.0, &traj.displacements()[j - 1]);
            dv.scale(1.0 / h);
            assert!(dv.sub(&traj.velocities()[j]).linf_norm() <= 1e-12);
            let mut da = traj.velocities()[j].clone();
            da.axpy(-1.0, &traj.velocities()[j - 1]);
            da.scale(1.0 / h);
            assert!(da.sub(&traj.accelerations()[j]).linf_norm() <= 1e-11);
        }
    }

    #[test]
    fn forcing_table_indexes_by_step() {
        // a forcing that switches on halfway leaves the first half at rest
        let grid = GridSpec::build(1, 1.0, 4, 64).unwrap();
        let c = grid.omega_center();
        let bump = Field::interior_from_fn(grid, move |[x, _]| (-80.0 * (x - c) * (x - c)).exp());
        let steps = 20;
        let mut table = vec![Field::zeros(grid, 1); steps + 1];
        for entry in table.iter_mut().skip(steps / 2 + 1) {
            *entry = bump.clone();
        }
        let spec = ProblemSpec {
            grid,
            s: 0.5,
            elastic: CoefficientField::identity(grid),
            viscous: CoefficientField::identity(grid),
            nu: 0.0,
            graph: MonotoneGraph::free(),
            eps: 1e-2,
            forcing: Forcing::Table(table),
            w0: Field::zeros(grid, 1),
            w1: Field::zeros(grid, 1),
        };
        let traj = run(&spec, 1.0, steps, &SolverParams::default()).unwrap();
        for j in 0..=steps / 2 {
            assert_eq!(traj.displacements()[j].linf_norm(), 0.0, "moved early at {j}");
        }
        assert!(traj.displacements()[steps].linf_norm() > 0.0);
    }
}
