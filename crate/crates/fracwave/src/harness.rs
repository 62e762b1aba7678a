//! Parameter sweeps realizing the three limit passages — penalty ε → 0,
//! viscosity ν → 0, exponent s → 1 — as numerical convergence studies, plus
//! the weak-solution residual study under time refinement.
//!
//! A sweep runs one trajectory per axis value (members execute in parallel,
//! report assembly is a deterministic reduction), collects the diagnostics
//! appropriate to the axis, and tabulates successive differences
//! ‖u_{k+1} − u_k‖ in L²(Q_T) and at the final time. Convergence is
//! operationalized as monotone decreasing Cauchy differences: the limits are
//! guaranteed, their rates are not, so observed rates are reported but never
//! asserted. When exponent differences stagnate, the report flags it in
//! `notes` instead of failing hard — distinct solutions in the limit cannot
//! be ruled out.

use rayon::prelude::*;
use thiserror::Error;

use crate::diagnostics::{
    apriori_check, bv_functional, constraint_violation, dual_norm_penalty, pairing_table,
    penalty_mass, test_library, variational_inequality_residual, very_weak_residual,
    weak_identity_residual, DiagError, ToleranceModel,
};
use crate::domain::{Field, GridSpec};
use crate::frac_ops::build_riesz;
use crate::monotone::MonotoneGraph;
use crate::rothe::{run, ProblemSpec, RotheError, SolverParams, Trajectory};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("plan axis {got:?} does not match the sweep (expected {expected:?})")]
    AxisMismatch { expected: SweepAxis, got: SweepAxis },
    #[error("sweep needs at least one axis value")]
    EmptyValues,
    #[error("axis values must be strictly monotone towards the limit")]
    NonMonotoneValues,
    #[error("axis value {0} outside the admissible range")]
    ValueOutOfRange(f64),
    #[error("penalty sweep requires positive fixed viscosity")]
    NeedsViscosity,
    #[error("viscosity sweep requires the zero-obstacle graph [0, ∞)")]
    NeedsObstacle,
    #[error("horizon is not an integer multiple of step size {0}")]
    StepsNotDivisible(f64),
    #[error("member at value {value} failed: {source}")]
    Member { value: f64, source: RotheError },
    #[error(transparent)]
    Diag(#[from] DiagError),
    #[error(transparent)]
    Ops(#[from] crate::frac_ops::OpsError),
}

// ---------------------------------------------------------------------------
// Canonical scenarios
// ---------------------------------------------------------------------------

/// Reference problem builders shared by the sweeps, the acceptance suite,
/// and the CLI profiles. Each returns the problem together with its time
/// horizon.
pub mod scenarios {
    use super::*;
    use crate::domain::CoefficientField;
    use crate::rothe::Forcing;

    /// Positive arch sin(π(x − o)) over Ω = (0, 1), scaled.
    pub fn arch(grid: GridSpec, scale: f64) -> Field {
        let origin = grid.omega_origin();
        Field::interior_from_fn(grid, move |p| {
            scale * (std::f64::consts::PI * (p[0] - origin)).sin().max(0.0)
        })
    }

    /// Canonical obstacle run: an arch launched downward at the zero
    /// obstacle, u ≥ 0. The tuning makes the uniform-bound table honest
    /// across ε ∈ [1e−4, 1e−1] and ν ∈ [1e−3, 1e−1]:
    ///
    /// * horizon 1.5 — the softest penalty (ε = 0.1) needs contact time
    ///   ≈ π√ε ≈ 1.0, so every member finishes its first bounce, and the
    ///   final-time penalty term of the bound vanishes;
    /// * A = 0.5·Id — stretches the free-oscillation period so no member is
    ///   back in contact at the horizon;
    /// * B = 0.05·Id — keeps the viscous share ν b_lo‖D^s u̇‖² of the bound
    ///   below the 10% spread budget even at ν = 0.1.
    pub fn bouncing_string(points: usize) -> Result<(ProblemSpec, f64), HarnessError> {
        let grid = GridSpec::build(1, 1.0, 2, points)
            .map_err(|_| HarnessError::ValueOutOfRange(points as f64))?;
        let spec = ProblemSpec {
            grid,
            s: 0.75,
            elastic: CoefficientField::scalar(grid, 0.5).expect("positive coefficient"),
            viscous: CoefficientField::scalar(grid, 0.05).expect("positive coefficient"),
            nu: 1e-3,
            graph: MonotoneGraph::interval(0.0, f64::INFINITY).expect("valid interval"),
            eps: 1e-4,
            forcing: Forcing::Static(Field::zeros(grid, 1)),
            w0: arch(grid, 0.25),
            w1: arch(grid, -1.5),
        };
        Ok((spec, 1.5))
    }

    /// Unconstrained wave on the same geometry (β ≡ 0), used to calibrate
    /// the h-share of the residual tolerance and as the equality case of
    /// the very weak form. w0 = 0.5·arch lies in H¹₀ and is smooth inside
    /// Ω, matching the hypotheses of the exponent-limit statements.
    pub fn free_wave(points: usize) -> Result<(ProblemSpec, f64), HarnessError> {
        let (base, horizon) = bouncing_string(points)?;
        Ok((
            ProblemSpec {
                graph: MonotoneGraph::free(),
                w0: arch(base.grid, 0.5),
                w1: Field::zeros(base.grid, 1),
                ..base
            },
            horizon,
        ))
    }

    /// Single Fourier mode on the plain torus with constant coefficients —
    /// the configuration whose exact discrete solution is the scalar
    /// three-term recursion [`super::scalar_mode_recursion`].
    pub fn single_mode(
        points: usize,
        mode: usize,
        amp: f64,
        vamp: f64,
        s: f64,
        nu: f64,
    ) -> Result<(ProblemSpec, f64), HarnessError> {
        let grid = GridSpec::torus(1, 1.0, points)
            .map_err(|_| HarnessError::ValueOutOfRange(points as f64))?;
        let k = 2.0 * std::f64::consts::PI * mode as f64;
        let spec = ProblemSpec {
            grid,
            s,
            elastic: CoefficientField::identity(grid),
            viscous: CoefficientField::identity(grid),
            nu,
            graph: MonotoneGraph::free(),
            eps: 1e-3,
            forcing: Forcing::Static(Field::zeros(grid, 1)),
            w0: Field::scalar_from_fn(grid, move |p| amp * (k * p[0]).sin()),
            w1: Field::scalar_from_fn(grid, move |p| vamp * (k * p[0]).sin()),
        };
        Ok((spec, 1.0))
    }
}

/// Smooth nonnegative mollifier bump centered in Ω with radius 0.2·L —
/// the deterministic test field for BV functionals and feasible
/// perturbations.
pub fn center_bump(grid: &GridSpec) -> Field {
    let c = grid.omega_center();
    let w = 0.2 * grid.domain_side();
    let d = grid.dimension();
    Field::scalar_from_fn(*grid, move |p| {
        let dx = p[0] - c;
        let dy = if d == 2 { p[1] - c } else { 0.0 };
        let r2 = (dx * dx + dy * dy) / (w * w);
        if r2 < 1.0 {
            (1.0 - 1.0 / (1.0 - r2)).exp()
        } else {
            0.0
        }
    })
}

// ---------------------------------------------------------------------------
// Plans and reports
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Epsilon,
    Viscosity,
    ExponentS,
    Timestep,
}

/// One convergence study: the base problem, the axis swept towards its
/// limit, the (strictly monotone) value list, and the shared run/test
/// configuration. `sigma` records the lower exponent bound for s-sweeps;
/// `output` is carried for the exporter and ignored by the sweeps
/// themselves.
#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub base: ProblemSpec,
    pub horizon: f64,
    pub steps: usize,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub sigma: f64,
    pub library_size: usize,
    pub seed: u64,
    pub params: SolverParams,
    pub output: Option<std::path::PathBuf>,
}

impl SweepPlan {
    pub fn new(base: ProblemSpec, horizon: f64, steps: usize, axis: SweepAxis) -> Self {
        SweepPlan {
            base,
            horizon,
            steps,
            axis,
            values: Vec::new(),
            sigma: 0.3,
            library_size: 16,
            seed: 7,
            params: SolverParams::default(),
            output: None,
        }
    }

    pub fn with_values(mut self, values: &[f64]) -> Self {
        self.values = values.to_vec();
        self
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    /// The axis value this member ran at (ε, ν, s, or h).
    pub value: f64,
    pub metrics: Vec<(&'static str, f64)>,
}

impl SweepRow {
    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|(n, _)| *n == name).map(|(_, v)| *v)
    }
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub axis: SweepAxis,
    /// Lower exponent bound σ, recorded for exponent sweeps.
    pub sigma: Option<f64>,
    pub rows: Vec<SweepRow>,
    /// ‖u_{k+1} − u_k‖_{L²(Q_T)} for successive members.
    pub cauchy_qt: Vec<f64>,
    /// ‖u_{k+1}(T) − u_k(T)‖_{L²} for successive members.
    pub cauchy_final: Vec<f64>,
    pub cauchy_decreasing: bool,
    pub final_decreasing: bool,
    /// Empirical rates between successive Cauchy entries, reported but
    /// never asserted.
    pub rates_qt: Vec<f64>,
    pub apriori_spread: Option<f64>,
    pub pass: bool,
    pub notes: Vec<String>,
}

// ---------------------------------------------------------------------------
// Shared machinery
// ---------------------------------------------------------------------------

fn ensure_axis(plan: &SweepPlan, expected: SweepAxis) -> Result<(), HarnessError> {
    if plan.axis != expected {
        return Err(HarnessError::AxisMismatch { expected, got: plan.axis });
    }
    if plan.values.is_empty() {
        return Err(HarnessError::EmptyValues);
    }
    Ok(())
}

fn ensure_monotone(values: &[f64], increasing: bool) -> Result<(), HarnessError> {
    let ok = values.windows(2).all(|w| if increasing { w[1] > w[0] } else { w[1] < w[0] });
    if ok {
        Ok(())
    } else {
        Err(HarnessError::NonMonotoneValues)
    }
}

fn run_members(
    specs: &[(f64, ProblemSpec)],
    horizon: f64,
    steps: usize,
    params: &SolverParams,
) -> Result<Vec<Trajectory>, HarnessError> {
    specs
        .par_iter()
        .map(|(value, spec)| {
            run(spec, horizon, steps, params)
                .map_err(|source| HarnessError::Member { value: *value, source })
        })
        .collect()
}

/// (‖a − b‖_{L²(Q_T)}, ‖a(T) − b(T)‖_{L²}). Members on different time
/// partitions are compared through their piecewise-affine interpolants on
/// the finer partition.
fn trajectory_distance(a: &Trajectory, b: &Trajectory) -> (f64, f64) {
    let (fine, other) = if a.steps() >= b.steps() { (a, b) } else { (b, a) };
    let h = fine.step_size();
    let mut qt = 0.0;
    if a.steps() == b.steps() && a.step_size() == b.step_size() {
        for j in 1..=a.steps() {
            qt += h * a.displacements()[j].sub(&b.displacements()[j]).inner(
                &a.displacements()[j].sub(&b.displacements()[j]),
            );
        }
    } else {
        for j in 1..=fine.steps() {
            let t = fine.times()[j];
            let diff = fine.displacements()[j].sub(&other.value_affine(t));
            qt += h * diff.inner(&diff);
        }
    }
    let last_a = &a.displacements()[a.steps()];
    let last_b = &b.displacements()[b.steps()];
    (qt.sqrt(), last_a.sub(last_b).l2_norm())
}

fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

/// Empirical convergence rates: d_k ∝ gap_k^rate with gap the axis distance
/// to the limit (the value itself for ε, ν, h; 1 − s for exponents).
fn empirical_rates(axis: SweepAxis, values: &[f64], diffs: &[f64]) -> Vec<f64> {
    let gap = |v: f64| match axis {
        SweepAxis::ExponentS => 1.0 - v,
        _ => v,
    };
    diffs
        .windows(2)
        .zip(values.windows(3))
        .map(|(d, v)| {
            let num = (d[0] / d[1]).ln();
            let den = (gap(v[0]) / gap(v[1])).ln();
            num / den
        })
        .collect()
}

fn cauchy_tables(members: &[Trajectory]) -> (Vec<f64>, Vec<f64>) {
    let mut qt = Vec::new();
    let mut fin = Vec::new();
    for w in members.windows(2) {
        let (a, b) = trajectory_distance(&w[1], &w[0]);
        qt.push(a);
        fin.push(b);
    }
    (qt, fin)
}

// ---------------------------------------------------------------------------
// The three limit passages
// ---------------------------------------------------------------------------

/// Penalty limit ε → 0 at fixed positive viscosity. Collects the constraint
/// violation, penalty mass, dual-norm proxy, BV variation, and the uniform
/// bound per member. PASS iff the Cauchy differences and the constraint
/// violation both decrease monotonically.
pub fn sweep_epsilon(plan: &SweepPlan) -> Result<SweepReport, HarnessError> {
    ensure_axis(plan, SweepAxis::Epsilon)?;
    ensure_monotone(&plan.values, false)?;
    for &v in &plan.values {
        if !(v > 0.0 && v < 1.0) {
            return Err(HarnessError::ValueOutOfRange(v));
        }
    }
    if !(plan.base.nu > 0.0) {
        return Err(HarnessError::NeedsViscosity);
    }

    let specs: Vec<(f64, ProblemSpec)> = plan
        .values
        .iter()
        .map(|&eps| (eps, ProblemSpec { eps, ..plan.base.clone() }))
        .collect();
    let members = run_members(&specs, plan.horizon, plan.steps, &plan.params)?;

    let tests = test_library(&plan.base.grid, plan.library_size, plan.seed)?;
    let phi = center_bump(&plan.base.grid);
    let family: Vec<(&Trajectory, &ProblemSpec)> =
        members.iter().zip(&specs).map(|(t, (_, s))| (t, s)).collect();
    let apriori = apriori_check(&family)?;

    let mut rows = Vec::with_capacity(members.len());
    let mut violations = Vec::with_capacity(members.len());
    for (k, traj) in members.iter().enumerate() {
        let spec = &specs[k].1;
        let violation = constraint_violation(traj, &spec.graph)?;
        let bv = bv_functional(traj, &phi)?;
        let dual = dual_norm_penalty(traj, spec, &tests)?;
        violations.push(violation.l2_qt);
        rows.push(SweepRow {
            value: specs[k].0,
            metrics: vec![
                ("constraint_linf", violation.linf),
                ("constraint_l2_qt", violation.l2_qt),
                ("penalty_mass", penalty_mass(traj, spec)),
                ("bv_variation", bv.total_variation),
                ("dual_norm", dual),
                ("apriori_bound", apriori.rows[k].bound),
            ],
        });
    }

    let (cauchy_qt, cauchy_final) = cauchy_tables(&members);
    let cauchy_decreasing = strictly_decreasing(&cauchy_qt);
    let final_decreasing = strictly_decreasing(&cauchy_final);
    let violations_fall = violations.windows(2).all(|w| w[1] <= w[0]);
    let rates_qt = empirical_rates(SweepAxis::Epsilon, &plan.values, &cauchy_qt);

    let mut notes = Vec::new();
    if apriori.flagged {
        notes.push(format!("uniform bound spread {:.3} exceeds 10%", apriori.spread));
    }
    if !violations_fall {
        notes.push(format!("constraint violation not decreasing: {violations:?}"));
    }
    let pass =
        (cauchy_qt.len() < 2 || cauchy_decreasing) && violations_fall && !apriori.flagged;
    Ok(SweepReport {
        axis: SweepAxis::Epsilon,
        sigma: None,
        rows,
        cauchy_qt,
        cauchy_final,
        cauchy_decreasing,
        final_decreasing,
        rates_qt,
        apriori_spread: Some(apriori.spread),
        pass,
        notes,
    })
}

/// Viscosity limit ν → 0 at fixed small ε, for the zero obstacle. Each
/// member is tested in its own formulation and in the inviscid-limit form
/// (ν = 0), and the viscous pairing |ν ∬ B D^s u̇ · D^s φ| is checked
/// against the √ν envelope calibrated on the largest-ν member.
pub fn sweep_viscosity(plan: &SweepPlan) -> Result<SweepReport, HarnessError> {
    ensure_axis(plan, SweepAxis::Viscosity)?;
    ensure_monotone(&plan.values, false)?;
    for &v in &plan.values {
        if !(v > 0.0) {
            return Err(HarnessError::ValueOutOfRange(v));
        }
    }
    if !plan.base.graph.is_interval() || plan.base.graph.domain() != (0.0, f64::INFINITY) {
        return Err(HarnessError::NeedsObstacle);
    }

    let specs: Vec<(f64, ProblemSpec)> = plan
        .values
        .iter()
        .map(|&nu| (nu, ProblemSpec { nu, ..plan.base.clone() }))
        .collect();
    let members = run_members(&specs, plan.horizon, plan.steps, &plan.params)?;

    let tests = test_library(&plan.base.grid, plan.library_size, plan.seed)?;
    let tol = ToleranceModel::default();
    let family: Vec<(&Trajectory, &ProblemSpec)> =
        members.iter().zip(&specs).map(|(t, (_, s))| (t, s)).collect();
    let apriori = apriori_check(&family)?;

    let mut rows = Vec::with_capacity(members.len());
    let mut pairings = Vec::with_capacity(members.len());
    let mut all_pass = true;
    for (k, traj) in members.iter().enumerate() {
        let (nu, spec) = (&specs[k].0, &specs[k].1);
        let table = pairing_table(traj, spec, &tests)?;
        let pairing = table
            .viscous
            .iter()
            .map(|p| (nu * p).abs())
            .fold(0.0_f64, f64::max);
        pairings.push(pairing);
        let own = very_weak_residual(traj, spec, &tests, *nu, tol)?;
        let inviscid = very_weak_residual(traj, spec, &tests, 0.0, tol)?;
        all_pass &= own.pass;
        rows.push(SweepRow {
            value: *nu,
            metrics: vec![
                ("very_weak_min", own.min_value()),
                ("inviscid_min", inviscid.min_value()),
                ("viscous_pairing", pairing),
                ("apriori_bound", apriori.rows[k].bound),
            ],
        });
    }

    // √ν envelope with the constant read off the largest-ν member.
    let envelope_c = pairings[0] / plan.values[0].sqrt();
    let envelope_ok = pairings
        .iter()
        .zip(&plan.values)
        .all(|(p, nu)| *p <= 2.0 * envelope_c * nu.sqrt() + 1e-300);

    let (cauchy_qt, cauchy_final) = cauchy_tables(&members);
    let cauchy_decreasing = strictly_decreasing(&cauchy_qt);
    let final_decreasing = strictly_decreasing(&cauchy_final);
    let rates_qt = empirical_rates(SweepAxis::Viscosity, &plan.values, &cauchy_qt);

    let mut notes = Vec::new();
    if !envelope_ok {
        notes.push(format!(
            "viscous pairing escapes the √ν envelope: {pairings:?} (C = {envelope_c:.3e})"
        ));
    }
    let pass = (cauchy_qt.len() < 2 || cauchy_decreasing) && envelope_ok && all_pass;
    Ok(SweepReport {
        axis: SweepAxis::Viscosity,
        sigma: None,
        rows,
        cauchy_qt,
        cauchy_final,
        cauchy_decreasing,
        final_decreasing,
        rates_qt,
        apriori_spread: Some(apriori.spread),
        pass,
        notes,
    })
}

/// Exponent limit s ↗ 1. Runs every listed s plus the classical s = 1
/// reference and measures the gap to it in L²(Q_T), together with the
/// gradient gap ‖D^s u_s − D u_1‖_{L²(Q_T)}. PASS iff the gaps decrease
/// along the list; stagnation is noted, not failed, since the limit
/// solution need not be unique.
pub fn sweep_exponent(plan: &SweepPlan) -> Result<SweepReport, HarnessError> {
    ensure_axis(plan, SweepAxis::ExponentS)?;
    ensure_monotone(&plan.values, true)?;
    if !(plan.sigma > 0.0 && plan.sigma < 1.0) {
        return Err(HarnessError::ValueOutOfRange(plan.sigma));
    }
    for &v in &plan.values {
        if !(v > plan.sigma && v <= 1.0) {
            return Err(HarnessError::ValueOutOfRange(v));
        }
    }

    let mut values = plan.values.clone();
    if *values.last().expect("nonempty") < 1.0 {
        values.push(1.0);
    }
    let specs: Vec<(f64, ProblemSpec)> = values
        .iter()
        .map(|&s| (s, ProblemSpec { s, ..plan.base.clone() }))
        .collect();
    let members = run_members(&specs, plan.horizon, plan.steps, &plan.params)?;

    let family: Vec<(&Trajectory, &ProblemSpec)> =
        members.iter().zip(&specs).map(|(t, (_, s))| (t, s)).collect();
    let apriori = apriori_check(&family)?;

    let reference = members.last().expect("s = 1 member");
    let classical = build_riesz(plan.base.grid, 1.0)?;
    let h = reference.step_size();
    let mut rows = Vec::with_capacity(members.len());
    let mut gaps = Vec::new();
    for (k, traj) in members.iter().enumerate() {
        let s = specs[k].0;
        let (gap_qt, _) = trajectory_distance(traj, reference);
        let riesz = build_riesz(plan.base.grid, s)?;
        let mut grad_gap = 0.0;
        for j in 1..=traj.steps() {
            let diff = riesz
                .gradient(&traj.displacements()[j])
                .sub(&classical.gradient(&reference.displacements()[j]));
            grad_gap += h * diff.inner(&diff);
        }
        if s < 1.0 {
            gaps.push(gap_qt);
        }
        rows.push(SweepRow {
            value: s,
            metrics: vec![
                ("gap_to_classical_qt", gap_qt),
                ("gradient_gap_qt", grad_gap.sqrt()),
                ("apriori_bound", apriori.rows[k].bound),
            ],
        });
    }

    let (cauchy_qt, cauchy_final) = cauchy_tables(&members);
    let cauchy_decreasing = strictly_decreasing(&cauchy_qt);
    let final_decreasing = strictly_decreasing(&cauchy_final);
    let rates_qt = empirical_rates(SweepAxis::ExponentS, &values, &cauchy_qt);

    let gaps_fall = strictly_decreasing(&gaps);
    let mut notes = Vec::new();
    if !gaps_fall {
        notes.push(format!(
            "gap to the classical run stagnates: {gaps:?} — \
             consistent with a non-unique limit, flagged rather than failed"
        ));
    }
    let pass = gaps.len() < 2 || gaps_fall;
    Ok(SweepReport {
        axis: SweepAxis::ExponentS,
        sigma: Some(plan.sigma),
        rows,
        cauchy_qt,
        cauchy_final,
        cauchy_decreasing,
        final_decreasing,
        rates_qt,
        apriori_spread: Some(apriori.spread),
        pass,
        notes,
    })
}

/// Weak-solution residual study at fixed s: for each (steps, ε) resolution
/// the weak identity (with the penalty pairing in place of the abstract
/// multiplier) is evaluated against the test library, and the variational
/// inequality is evaluated for the comparison fields u + offset with
/// offset ∈ {0, center bump}. Reports convergence of the identity residual
/// under refinement.
pub fn weak_solution_residual_study(
    base: &ProblemSpec,
    horizon: f64,
    resolutions: &[(usize, f64)],
    library_size: usize,
    seed: u64,
) -> Result<SweepReport, HarnessError> {
    if resolutions.is_empty() {
        return Err(HarnessError::EmptyValues);
    }
    let params = SolverParams::default();
    let specs: Vec<(f64, ProblemSpec, usize)> = resolutions
        .iter()
        .map(|&(steps, eps)| {
            (horizon / steps as f64, ProblemSpec { eps, ..base.clone() }, steps)
        })
        .collect();
    let members: Vec<Trajectory> = specs
        .par_iter()
        .map(|(h, spec, steps)| {
            run(spec, horizon, *steps, &params)
                .map_err(|source| HarnessError::Member { value: *h, source })
        })
        .collect::<Result<_, _>>()?;

    let tests = test_library(&base.grid, library_size, seed)?;
    let tol = ToleranceModel::default();
    let offset = center_bump(&base.grid);

    let mut rows = Vec::with_capacity(members.len());
    let mut identity_max = Vec::with_capacity(members.len());
    let mut vi_ok = true;
    for (k, traj) in members.iter().enumerate() {
        let (h, spec, _) = &specs[k];
        let identity = weak_identity_residual(traj, spec, &tests, tol)?;
        let very_weak = very_weak_residual(traj, spec, &tests, spec.nu, tol)?;
        let vi_zero =
            variational_inequality_residual(traj, spec, &Field::zeros(base.grid, 1))?;
        let vi_bump = variational_inequality_residual(traj, spec, &offset)?;
        let bound = tol.bound(*h, spec.eps);
        vi_ok &= vi_bump >= -bound;
        identity_max.push(identity.max_abs());
        rows.push(SweepRow {
            value: *h,
            metrics: vec![
                ("eps", spec.eps),
                ("weak_identity_max", identity.max_abs()),
                ("very_weak_min", very_weak.min_value()),
                ("vi_zero", vi_zero),
                ("vi_bump", vi_bump),
            ],
        });
    }

    let (cauchy_qt, cauchy_final) = cauchy_tables(&members);
    let cauchy_decreasing = strictly_decreasing(&cauchy_qt);
    let final_decreasing = strictly_decreasing(&cauchy_final);
    let hs: Vec<f64> = specs.iter().map(|(h, _, _)| *h).collect();
    let rates_qt = empirical_rates(SweepAxis::Timestep, &hs, &cauchy_qt);

    let identity_falls =
        identity_max.len() < 2 || identity_max.windows(2).all(|w| w[1] <= w[0]);
    let mut notes = Vec::new();
    if !identity_falls {
        notes.push(format!("identity residual not decreasing: {identity_max:?}"));
    }
    let pass = identity_falls && vi_ok;
    Ok(SweepReport {
        axis: SweepAxis::Timestep,
        sigma: None,
        rows,
        cauchy_qt,
        cauchy_final,
        cauchy_decreasing,
        final_decreasing,
        rates_qt,
        apriori_spread: None,
        pass,
        notes,
    })
}

// ---------------------------------------------------------------------------
// Independent scalar oracle
// ---------------------------------------------------------------------------

/// Exact discrete solution of the implicit two-step scheme for a single
/// Fourier mode with constant unit coefficients: the scheme collapses to
///
/// ```text
/// û_j = ((2 + hνλ_B)û_{j−1} − û_{j−2}) / (1 + h²λ_A + hνλ_B),   û_{−1} = û₀ − h·v̂₀,
/// ```
///
/// with λ = |2πk/L|^{2s}. Written without any solver machinery so it can
/// arbitrate the full implicit solve.
pub fn scalar_mode_recursion(
    lam_a: f64,
    lam_b: f64,
    nu: f64,
    h: f64,
    steps: usize,
    amp: f64,
    vamp: f64,
) -> Vec<f64> {
    let mut out = Vec::with_capacity(steps + 1);
    let mut prev2 = amp - h * vamp;
    let mut prev = amp;
    out.push(amp);
    let denom = 1.0 + h * h * lam_a + h * nu * lam_b;
    for _ in 1..=steps {
        let next = ((2.0 + h * nu * lam_b) * prev - prev2) / denom;
        out.push(next);
        prev2 = prev;
        prev = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rothe::Forcing;

    fn small_plan(points: usize, steps: usize, axis: SweepAxis) -> SweepPlan {
        let (base, horizon) = scenarios::bouncing_string(points).unwrap();
        SweepPlan::new(base, horizon, steps, axis)
    }

    #[test]
    fn plans_are_validated() {
        let plan = small_plan(64, 50, SweepAxis::Epsilon);
        assert!(matches!(
            sweep_epsilon(&plan.clone().with_values(&[])),
            Err(HarnessError::EmptyValues)
        ));
        assert!(matches!(
            sweep_epsilon(&plan.clone().with_values(&[1e-3, 1e-2])),
            Err(HarnessError::NonMonotoneValues)
        ));
        assert!(matches!(
            sweep_epsilon(&plan.clone().with_values(&[1.5, 1e-2])),
            Err(HarnessError::ValueOutOfRange(_))
        ));
        assert!(matches!(
            sweep_viscosity(&plan.clone().with_values(&[1e-2])),
            Err(HarnessError::AxisMismatch { .. })
        ));

        let mut inviscid = plan.clone().with_values(&[1e-2, 1e-3]);
        inviscid.base.nu = 0.0;
        assert!(matches!(sweep_epsilon(&inviscid), Err(HarnessError::NeedsViscosity)));

        let mut free = small_plan(64, 50, SweepAxis::Viscosity).with_values(&[1e-2, 1e-3]);
        free.base.graph = MonotoneGraph::free();
        assert!(matches!(sweep_viscosity(&free), Err(HarnessError::NeedsObstacle)));

        let mut bad_sigma = small_plan(64, 50, SweepAxis::ExponentS).with_values(&[0.5, 0.9]);
        bad_sigma.sigma = 0.7;
        assert!(matches!(
            sweep_exponent(&bad_sigma),
            Err(HarnessError::ValueOutOfRange(_))
        ));
    }

    #[test]
    fn single_epsilon_is_a_vacuous_pass() {
        let plan = small_plan(64, 60, SweepAxis::Epsilon).with_values(&[1e-3]);
        let report = sweep_epsilon(&plan).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert!(report.cauchy_qt.is_empty());
        assert!(report.pass);
    }

    #[test]
    fn epsilon_has_no_effect_on_unconstrained_runs() {
        let mut plan = small_plan(64, 60, SweepAxis::Epsilon)
            .with_values(&[1e-1, 1e-2, 1e-3]);
        plan.base.graph = MonotoneGraph::free();
        plan.base.w1 = scenarios::arch(plan.base.grid, 0.3);
        let report = sweep_epsilon(&plan).unwrap();
        for d in &report.cauchy_qt {
            assert!(*d <= 1e-10, "ε changed an unconstrained run by {d}");
        }
        for row in &report.rows {
            assert_eq!(row.metric("penalty_mass"), Some(0.0));
            assert_eq!(row.metric("constraint_linf"), Some(0.0));
        }
    }

    #[test]
    fn epsilon_sweep_converges_on_the_obstacle_run() {
        // h must resolve the stiffest contact layer (π√ε ≈ 0.03 for
        // ε = 1e−4), otherwise the last Cauchy gap is discretization noise.
        let plan = small_plan(128, 600, SweepAxis::Epsilon)
            .with_values(&[1e-1, 1e-2, 1e-3, 1e-4]);
        let report = sweep_epsilon(&plan).unwrap();
        assert!(report.pass, "notes: {:?}", report.notes);
        assert!(report.cauchy_decreasing, "cauchy: {:?}", report.cauchy_qt);
        let violations: Vec<f64> = report
            .rows
            .iter()
            .map(|r| r.metric("constraint_l2_qt").unwrap())
            .collect();
        assert!(
            violations.last().unwrap() < &(0.1 * violations[0]),
            "violation decays too slowly: {violations:?}"
        );
    }

    #[test]
    fn single_viscosity_and_zero_data_are_trivial() {
        let plan = small_plan(64, 60, SweepAxis::Viscosity).with_values(&[1e-2]);
        let report = sweep_viscosity(&plan).unwrap();
        assert!(report.pass);

        let mut zero = small_plan(64, 60, SweepAxis::Viscosity)
            .with_values(&[1e-1, 1e-2, 1e-3]);
        zero.base.w0 = Field::zeros(zero.base.grid, 1);
        zero.base.w1 = Field::zeros(zero.base.grid, 1);
        let report = sweep_viscosity(&zero).unwrap();
        for d in &report.cauchy_qt {
            assert_eq!(*d, 0.0);
        }
        for row in &report.rows {
            assert_eq!(row.metric("viscous_pairing"), Some(0.0));
        }
    }

    #[test]
    fn viscous_pairing_follows_the_sqrt_envelope() {
        let plan = small_plan(128, 150, SweepAxis::Viscosity)
            .with_values(&[1e-1, 1e-2, 1e-3]);
        let report = sweep_viscosity(&plan).unwrap();
        assert!(report.pass, "notes: {:?}", report.notes);
        assert!(report.cauchy_decreasing, "cauchy: {:?}", report.cauchy_qt);
    }

    #[test]
    fn exponent_list_of_one_is_the_reference_itself() {
        let mut plan = small_plan(64, 60, SweepAxis::ExponentS).with_values(&[1.0]);
        plan.base.graph = MonotoneGraph::free();
        let report = sweep_exponent(&plan).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert_eq!(report.rows[0].metric("gap_to_classical_qt"), Some(0.0));
        assert!(report.pass);
        assert_eq!(report.sigma, Some(0.3));
    }

    #[test]
    fn exponent_sweep_approaches_the_classical_wave() {
        let mut plan = small_plan(64, 100, SweepAxis::ExponentS)
            .with_values(&[0.6, 0.8, 0.9, 0.99]);
        plan.base.graph = MonotoneGraph::free();
        plan.base.w0 = scenarios::arch(plan.base.grid, 0.5);
        plan.base.w1 = Field::zeros(plan.base.grid, 1);
        let report = sweep_exponent(&plan).unwrap();
        assert!(report.pass, "notes: {:?}", report.notes);
        let gaps: Vec<f64> = report
            .rows
            .iter()
            .filter(|r| r.value < 1.0)
            .map(|r| r.metric("gap_to_classical_qt").unwrap())
            .collect();
        assert!(
            gaps.windows(2).all(|w| w[1] < w[0]),
            "gaps not decreasing: {gaps:?}"
        );
    }

    #[test]
    fn weak_study_is_exact_for_the_trivial_comparison() {
        let (base, horizon) = scenarios::bouncing_string(64).unwrap();
        let report =
            weak_solution_residual_study(&base, horizon, &[(60, 1e-3)], 8, 7).unwrap();
        assert_eq!(report.rows[0].metric("vi_zero"), Some(0.0));
    }

    #[test]
    fn weak_identity_residual_decays_under_refinement() {
        let (base, horizon) = scenarios::free_wave(64).unwrap();
        let report = weak_solution_residual_study(
            &base,
            horizon,
            &[(60, 1e-3), (120, 1e-3), (240, 1e-3)],
            8,
            7,
        )
        .unwrap();
        assert!(report.pass, "notes: {:?}", report.notes);
        let maxes: Vec<f64> = report
            .rows
            .iter()
            .map(|r| r.metric("weak_identity_max").unwrap())
            .collect();
        assert!(
            maxes[2] <= 0.6 * maxes[0],
            "identity residual not O(h): {maxes:?}"
        );
    }

    #[test]
    #[ignore = "manual probe for retuning the reference sweeps"]
    fn probe_epsilon_numbers() {
        for (points, steps) in [(128usize, 150usize), (128, 300), (128, 600), (256, 600)] {
            let plan = small_plan(points, steps, SweepAxis::Epsilon)
                .with_values(&[1e-1, 1e-2, 1e-3, 1e-4]);
            let report = sweep_epsilon(&plan).unwrap();
            let viol: Vec<f64> = report
                .rows
                .iter()
                .map(|r| r.metric("constraint_l2_qt").unwrap())
                .collect();
            let mass: Vec<f64> = report
                .rows
                .iter()
                .map(|r| r.metric("penalty_mass").unwrap())
                .collect();
            let bv: Vec<f64> = report
                .rows
                .iter()
                .map(|r| r.metric("bv_variation").unwrap())
                .collect();
            println!(
                "N={points} n={steps}: cauchy={:?} viol={viol:?} mass={mass:?} bv={bv:?} spread={:?}",
                report.cauchy_qt, report.apriori_spread
            );
        }
    }

    #[test]
    fn recursion_oracle_matches_hand_rolled_steps() {
        let (lam_a, lam_b, nu, h) = (4.0, 2.0, 0.1, 0.05);
        let vals = scalar_mode_recursion(lam_a, lam_b, nu, h, 2, 1.0, -0.5);
        let denom = 1.0 + h * h * lam_a + h * nu * lam_b;
        let u1 = ((2.0 + h * nu * lam_b) * 1.0 - (1.0 - h * -0.5)) / denom;
        let u2 = ((2.0 + h * nu * lam_b) * u1 - 1.0) / denom;
        assert!((vals[1] - u1).abs() < 1e-15);
        assert!((vals[2] - u2).abs() < 1e-15);
    }

    #[test]
    fn zero_forcing_single_mode_scenario_is_well_formed() {
        let (spec, horizon) = scenarios::single_mode(64, 2, 0.8, -0.3, 0.6, 1e-2).unwrap();
        assert!(matches!(spec.forcing, Forcing::Static(_)));
        assert!(spec.grid.is_torus());
        assert_eq!(horizon, 1.0);
        let traj = run(&spec, horizon, 50, &SolverParams::default()).unwrap();
        assert!(traj.displacements()[50].is_finite());
    }
}
