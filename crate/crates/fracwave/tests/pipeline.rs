//! End-to-end exercise of the public API from a consumer's point of view:
//! build a problem from scratch (no scenario helpers), solve it, and push
//! the trajectory through every diagnostic entry point. Guards the exported
//! surface; the numerical tolerances here are coarse on purpose — the tight
//! pins live in the acceptance checklist.

use fracwave::diagnostics::{
    apriori_check, bv_functional, constraint_violation, dual_norm_penalty, energy_ledger,
    initial_condition_residual, penalty_mass, test_library, variational_inequality_residual,
    very_weak_residual, weak_identity_residual, ToleranceModel,
};
use fracwave::domain::{CoefficientField, Field, GridSpec};
use fracwave::harness::{center_bump, sweep_epsilon, SweepAxis, SweepPlan};
use fracwave::monotone::MonotoneGraph;
use fracwave::rothe::{run, Forcing, ProblemSpec, SolverParams, Trajectory};

fn hand_built_obstacle_problem() -> (ProblemSpec, f64, usize) {
    let grid = GridSpec::build(1, 1.0, 2, 128).unwrap();
    let origin = grid.omega_origin();
    // mildly heterogeneous stiffness so the coefficient path is exercised
    let elastic = CoefficientField::from_fn(grid, 0.4, 0.6, move |p| {
        let x = p[0] - origin;
        [[0.5 + 0.1 * (std::f64::consts::TAU * x).sin(), 0.0], [0.0, 0.0]]
    })
    .unwrap();
    let viscous = CoefficientField::scalar(grid, 0.05).unwrap();
    let w0 = Field::interior_from_fn(grid, move |p| {
        0.25 * (std::f64::consts::PI * (p[0] - origin)).sin()
    });
    let mut w1 = w0.clone();
    w1.scale(-6.0);
    let spec = ProblemSpec {
        grid,
        s: 0.75,
        elastic,
        viscous,
        nu: 1e-3,
        graph: MonotoneGraph::interval(0.0, f64::INFINITY).unwrap(),
        eps: 1e-3,
        forcing: Forcing::Static(Field::zeros(grid, 1)),
        w0,
        w1,
    };
    (spec, 1.5, 600)
}

#[test]
fn solve_then_run_every_diagnostic() {
    let (spec, horizon, steps) = hand_built_obstacle_problem();
    let traj: Trajectory = run(&spec, horizon, steps, &SolverParams::default()).unwrap();
    let h = horizon / steps as f64;

    assert_eq!(traj.times().len(), steps + 1);
    assert_eq!(traj.displacements().len(), steps + 1);
    for u in traj.displacements() {
        assert!(u.is_interior_supported());
    }

    // energy ledger: defect form, first order in h (coarse factor)
    let ledger = energy_ledger(&traj, &spec);
    assert!(ledger.max_residual() <= 1e-8, "{}", ledger.max_residual());
    let worst = ledger.residual.iter().fold(0.0_f64, |m, r| m.max(r.abs()));
    assert!(worst <= 1000.0 * h, "|residual| {worst} vs h {h}");

    // uniform bound table over a singleton is trivially unspread
    let table = apriori_check(&[(&traj, &spec)]).unwrap();
    assert_eq!(table.rows.len(), 1);
    assert!(table.spread == 0.0 && !table.flagged);
    assert!(table.rows[0].bound.is_finite() && table.rows[0].bound > 0.0);

    // multiplier mass is positive once the string reaches the obstacle
    assert!(penalty_mass(&traj, &spec) > 0.0);

    // velocity BV against a fixed observable
    let bump = center_bump(&spec.grid);
    let bv = bv_functional(&traj, &bump).unwrap();
    assert_eq!(bv.values.len(), steps + 1);
    assert!(bv.total_variation > 0.0 && bv.total_variation.is_finite());

    // penetration stays within the penalty layer scale ~ √ε
    let violation = constraint_violation(&traj, &spec.graph).unwrap();
    assert!(violation.linf <= 2.0 * spec.eps.sqrt(), "{}", violation.linf);
    assert!(violation.l2_qt <= violation.linf * (horizon * 1.0_f64).sqrt());

    // weak/very-weak residuals against a shared library
    let tests = test_library(&spec.grid, 16, 5).unwrap();
    let tol = ToleranceModel::default();
    let weak = weak_identity_residual(&traj, &spec, &tests, tol).unwrap();
    assert!(weak.pass, "max |weak residual| {}", weak.max_abs());
    let very = very_weak_residual(&traj, &spec, &tests, spec.nu, tol).unwrap();
    assert!(very.pass, "min very-weak residual {}", very.min_value());
    assert_eq!(very.entries.len(), tests.len());

    // dual norm of the multiplier is finite and nonzero on this run
    let dual = dual_norm_penalty(&traj, &spec, &tests).unwrap();
    assert!(dual.is_finite() && dual > 0.0);

    // variational inequality against the admissible rest state ψ = 0
    let rest = Field::zeros(spec.grid, 1);
    let vi = variational_inequality_residual(&traj, &spec, &rest).unwrap();
    assert!(vi >= -tol.bound(h, spec.eps), "VI residual {vi}");

    // initial data are attained against interior bumps; the decay constant
    // scales with the launch speed (‖w1‖ here is 4× the canonical scenario)
    let ic = initial_condition_residual(&traj, &[bump], 1e-2, 8.0).unwrap();
    assert!(ic.pass, "initial-condition residual {}", ic.min_value());
}

#[test]
fn hand_built_problem_feeds_the_sweep_machinery() {
    let (spec, horizon, steps) = hand_built_obstacle_problem();
    let plan = SweepPlan::new(spec, horizon, steps, SweepAxis::Epsilon)
        .with_values(&[1e-1, 1e-2, 1e-3]);
    let report = sweep_epsilon(&plan).unwrap();
    assert!(report.pass, "notes: {:?}", report.notes);
    assert!(report.cauchy_decreasing, "cauchy: {:?}", report.cauchy_qt);
    assert_eq!(report.rows.len(), 3);
    // every row exposes the advertised metrics
    for row in &report.rows {
        for name in [
            "constraint_linf",
            "constraint_l2_qt",
            "penalty_mass",
            "bv_variation",
            "dual_norm",
            "apriori_bound",
        ] {
            assert!(row.metric(name).is_some(), "missing metric {name}");
        }
    }
}
