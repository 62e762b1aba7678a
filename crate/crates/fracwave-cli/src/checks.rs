//! The solver's acceptance checklist: twelve end-to-end checks, each
//! producing one `[PASS]`/`[FAIL]` line with the measured quantity, the
//! pinned tolerance, and the wall time against its budget. The `check`
//! subcommand and the `acceptance` test target both run these.
//!
//! Checks 07–09 share one 12-member penalty × viscosity sweep of the
//! bouncing string (N = 512, n = 1000); whichever of them runs first pays
//! the build, so the budgets are sized for that worst case.

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use fracwave::diagnostics::{
    apriori_check, bv_functional, constraint_violation, energy_ledger, penalty_mass,
    test_library, very_weak_residual, ToleranceModel,
};
use fracwave::domain::{CoefficientField, Field, GridSpec};
use fracwave::frac_ops::{
    build_riesz, gradient_limit_probe, singular_integral_laplacian, EllipticOperator,
};
use fracwave::harness::{
    scalar_mode_recursion, scenarios, sweep_exponent, sweep_viscosity, SweepAxis, SweepPlan,
};
use fracwave::monotone::{Knot, MonotoneGraph};
use fracwave::rothe::{run, ProblemSpec, SolverParams, Trajectory};

pub const COUNT: usize = 12;

pub struct CheckOutcome {
    pub index: usize,
    pub id: &'static str,
    /// The criterion itself, ignoring the time budget.
    pub pass: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub budget: Duration,
}

impl CheckOutcome {
    pub fn ok(&self) -> bool {
        self.pass && self.elapsed <= self.budget
    }

    pub fn line(&self) -> String {
        format!(
            "[{}] {}: {} [{:.2}s of {:.0}s budget]",
            if self.ok() { "PASS" } else { "FAIL" },
            self.id,
            self.detail,
            self.elapsed.as_secs_f64(),
            self.budget.as_secs_f64()
        )
    }
}

/// Runs check `index` (1-based). Panics on an index outside `1..=COUNT`.
pub fn run_check(index: usize) -> CheckOutcome {
    let f = [
        c01, c02, c03, c04, c05, c06, c07, c08, c09, c10, c11, c12,
    ][index - 1];
    f()
}

fn outcome(
    index: usize,
    id: &'static str,
    pass: bool,
    detail: String,
    t0: Instant,
    budget_secs: u64,
) -> CheckOutcome {
    CheckOutcome {
        index,
        id,
        pass,
        detail,
        elapsed: t0.elapsed(),
        budget: Duration::from_secs(budget_secs),
    }
}

fn box_noise(grid: GridSpec, components: usize, rng: &mut ChaCha8Rng) -> Field {
    let mut f = Field::zeros(grid, components);
    for v in f.data_mut() {
        *v = rng.gen_range(-1.0..1.0);
    }
    f
}

fn sci(values: &[f64]) -> String {
    let inner: Vec<String> = values.iter().map(|v| format!("{v:.2e}")).collect();
    format!("[{}]", inner.join(", "))
}

fn c01() -> CheckOutcome {
    let t0 = Instant::now();
    let mut worst = 0.0_f64;
    // 200 scalar/vector pairs per exponent in d = 1; a smaller batch covers
    // the d = 2 index bookkeeping at the same resolution.
    for (d, pairs) in [(1usize, 200usize), (2, 25)] {
        let grid = GridSpec::build(d, 1.0, 2, 256).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &s in &[0.25, 0.5, 0.75, 1.0] {
            let op = build_riesz(grid, s).unwrap();
            for _ in 0..pairs {
                let u = box_noise(grid, 1, &mut rng);
                let phi = box_noise(grid, d, &mut rng);
                let lhs = op.gradient(&u).inner(&phi);
                let rhs = u.inner(&op.divergence(&phi));
                worst = worst.max((lhs + rhs).abs() / (u.l2_norm() * phi.l2_norm()));
            }
        }
    }
    outcome(
        1,
        "01 gradient/divergence duality",
        worst <= 1e-12,
        format!("max |⟨D^s u,Φ⟩ + ⟨u,D^s·Φ⟩| / (‖u‖‖Φ‖) = {worst:.2e} (tol 1e-12)"),
        t0,
        5,
    )
}

fn c02() -> CheckOutcome {
    let t0 = Instant::now();
    let grid = GridSpec::build(1, 1.0, 8, 1024).unwrap();
    let c = grid.omega_center();
    let u = Field::interior_from_fn(grid, move |p| (-50.0 * (p[0] - c) * (p[0] - c)).exp());
    let mut worst = 0.0_f64;
    let mut per_s = Vec::new();
    for &s in &[0.3, 0.5, 0.7] {
        let op =
            EllipticOperator::new(build_riesz(grid, s).unwrap(), CoefficientField::identity(grid))
                .unwrap();
        let spectral = op.apply(&u);
        let oracle = singular_integral_laplacian(&u, s, 4.0 * grid.dx())
            .unwrap()
            .masked();
        let rel = oracle.sub(&spectral).l2_norm() / spectral.l2_norm();
        per_s.push(format!("s={s}: {rel:.1e}"));
        worst = worst.max(rel);
    }
    outcome(
        2,
        "02 singular-integral oracle",
        worst <= 1e-2,
        format!("rel L² gap {} (tol 1e-2)", per_s.join(", ")),
        t0,
        60,
    )
}

fn c03() -> CheckOutcome {
    let t0 = Instant::now();
    // Wide box, unit-width Gaussian: the spectrum sits where the symbol
    // correction (2π|ξ|)^{s−1} − 1 is smallest, so the s ↑ 1 constant is
    // well under 1 and the 1e−3·‖Du‖ pin is meaningful rather than lucky.
    let grid = GridSpec::build(1, 8.0, 2, 256).unwrap();
    let c = grid.omega_center();
    let u = Field::interior_from_fn(grid, move |p| (-(p[0] - c) * (p[0] - c)).exp());
    let errs = gradient_limit_probe(&u, &[0.9, 0.99, 0.999]).unwrap();
    let du = build_riesz(grid, 1.0).unwrap().gradient(&u).l2_norm();
    let decreasing = errs[0].1 > errs[1].1 && errs[1].1 > errs[2].1;
    let small = errs[2].1 <= 1e-3 * du;
    let listed: Vec<String> = errs
        .iter()
        .map(|(s, e)| format!("s={s}: {:.2e}", e / du))
        .collect();
    outcome(
        3,
        "03 classical-gradient limit",
        decreasing && small,
        format!(
            "‖D^s u − Du‖/‖Du‖ = {} (strictly decreasing, final ≤ 1e-3)",
            listed.join(", ")
        ),
        t0,
        5,
    )
}

fn c04() -> CheckOutcome {
    let t0 = Instant::now();
    let graphs: Vec<(&str, MonotoneGraph)> = vec![
        ("[0,∞)", MonotoneGraph::interval(0.0, f64::INFINITY).unwrap()),
        ("[-1,1]", MonotoneGraph::interval(-1.0, 1.0).unwrap()),
        (
            "staircase",
            MonotoneGraph::staircase(
                vec![
                    Knot { x: -1.0, lo: -1.5, hi: -0.5 },
                    Knot { x: 0.0, lo: -0.25, hi: 0.25 },
                    Knot { x: 1.0, lo: 0.5, hi: 1.5 },
                ],
                0.3,
                0.3,
            )
            .unwrap(),
        ),
    ];
    let samples = 10_000;
    let mut ok = true;
    let mut worst_dc = 0.0_f64;
    let mut mismatches = Vec::new();
    for (name, graph) in &graphs {
        for &eps in &[1.0, 0.25] {
            let mut prev: Option<(f64, f64)> = None;
            for i in 0..samples {
                let r = -5.0 + 10.0 * i as f64 / (samples - 1) as f64;
                let y = graph.yosida(r, eps);
                ok &= y.abs() <= r.abs() / eps * (1.0 + 1e-12) + 1e-300;
                if r == 0.0 {
                    ok &= y == 0.0;
                }
                if let Some((rp, yp)) = prev {
                    ok &= y + 1e-12 >= yp; // monotone
                    ok &= (y - yp).abs() <= (r - rp) / eps * (1.0 + 1e-9); // 1/ε-Lipschitz
                }
                prev = Some((r, y));
                // envelope derivative vs Yosida by central differences
                if i % 10 == 0 {
                    let d = 1e-7;
                    let cd = (graph.moreau_envelope(r + d, eps)
                        - graph.moreau_envelope(r - d, eps))
                        / (2.0 * d);
                    let gap = (cd - y).abs() / (1.0 + y.abs());
                    worst_dc = worst_dc.max(gap);
                    if gap > 1e-6 {
                        ok = false;
                        mismatches.push(format!("{name} ε={eps} r={r}: {cd} vs {y}"));
                    }
                }
            }
        }
    }
    let mismatch_note = if mismatches.is_empty() {
        String::new()
    } else {
        format!("; envelope mismatches: {}", mismatches.join(", "))
    };
    outcome(
        4,
        "04 regularized-graph laws",
        ok,
        format!(
            "monotone, 1/ε-Lipschitz, |β^ε(r)| ≤ |r|/ε, β^ε(0) = 0 on 1e4 samples × 3 graphs; \
             envelope slope gap {worst_dc:.1e} (tol 1e-6){mismatch_note}"
        ),
        t0,
        5,
    )
}

fn c05() -> CheckOutcome {
    let t0 = Instant::now();
    let (mode, amp, vamp, s, nu) = (2usize, 0.8, -0.3, 0.6, 1e-2);
    let (spec, horizon) = scenarios::single_mode(64, mode, amp, vamp, s, nu).unwrap();
    let steps = 1000;
    let params = SolverParams { krylov_rtol: 1e-14, ..SolverParams::default() };
    let traj = run(&spec, horizon, steps, &params).unwrap();
    let h = horizon / steps as f64;
    let lam = (std::f64::consts::TAU * mode as f64).powf(2.0 * s);
    let amps = scalar_mode_recursion(lam, lam, nu, h, steps, amp, vamp);
    let scale = amps.iter().fold(0.0_f64, |m, a| m.max(a.abs()));
    let n_nodes = spec.grid.total_nodes();
    let mut worst = 0.0_f64;
    for j in 0..=steps {
        let want = &amps[j];
        let got = traj.displacements()[j].component(0);
        for (k, g) in got.iter().enumerate() {
            let x = k as f64 / n_nodes as f64;
            let profile = (std::f64::consts::TAU * mode as f64 * x).sin();
            worst = worst.max((g - want * profile).abs());
        }
    }
    outcome(
        5,
        "05 scalar-mode recursion oracle",
        worst <= 1e-10 * scale,
        format!(
            "sup node/time deviation {worst:.2e} vs 1e-10·max amplitude = {:.2e}, n = {steps}",
            1e-10 * scale
        ),
        t0,
        10,
    )
}

fn c06() -> CheckOutcome {
    let t0 = Instant::now();
    let params = SolverParams::default();
    // max |residual| / h measured at n ∈ {500, 1000}: free 0.81→0.93;
    // obstacle 1.2e2→1.5e2 (the contact layer contributes ~h/√ε, so the
    // constant carries a 1/√ε ≈ 100 factor at ε = 1e−4). Pinned at ~2.7×.
    let pinned_c = [("free", 2.5), ("obstacle", 400.0)];
    let mut ok = true;
    let mut details = Vec::new();
    for (k, (spec, horizon)) in [
        scenarios::free_wave(256).unwrap(),
        scenarios::bouncing_string(256).unwrap(),
    ]
    .into_iter()
    .enumerate()
    {
        let coarse = run(&spec, horizon, 500, &params).unwrap();
        let fine = run(&spec, horizon, 1000, &params).unwrap();
        let rc = energy_ledger(&coarse, &spec);
        let rf = energy_ledger(&fine, &spec);
        let (label, c_pin) = pinned_c[k];
        // defect form: never positive, bounded by C·h at both resolutions
        ok &= rc.max_residual() <= 1e-8 && rf.max_residual() <= 1e-8;
        let (hc, hf) = (horizon / 500.0, horizon / 1000.0);
        let (ec, ef) = (
            rc.residual.iter().fold(0.0_f64, |m, r| m.max(r.abs())),
            rf.residual.iter().fold(0.0_f64, |m, r| m.max(r.abs())),
        );
        ok &= ec <= c_pin * hc && ef <= c_pin * hf;
        let ratio = ec / ef;
        ok &= (1.5..=3.0).contains(&ratio);
        details.push(format!("{label}: |res|/h = {:.1e}→{:.1e}, ratio {ratio:.2}", ec / hc, ef / hf));
    }
    outcome(
        6,
        "06 energy-ledger residual",
        ok,
        format!("{} (≤ C·h, halving ratio in [1.5,3])", details.join("; ")),
        t0,
        30,
    )
}

// --- shared 12-member sweep for checks 07–09 -------------------------------

const FAMILY_EPS: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];
const FAMILY_NU: [f64; 3] = [1e-1, 1e-2, 1e-3];
const FAMILY_POINTS: usize = 512;
const FAMILY_STEPS: usize = 1000;

struct Family {
    cells: Vec<(ProblemSpec, Trajectory)>,
    build: Duration,
}

static FAMILY: OnceLock<Family> = OnceLock::new();

fn family() -> &'static Family {
    FAMILY.get_or_init(|| {
        let t0 = Instant::now();
        let (base, horizon) = scenarios::bouncing_string(FAMILY_POINTS).unwrap();
        let grid: Vec<(f64, f64)> = FAMILY_EPS
            .iter()
            .flat_map(|&eps| FAMILY_NU.iter().map(move |&nu| (eps, nu)))
            .collect();
        let params = SolverParams::default();
        let cells = grid
            .into_par_iter()
            .map(|(eps, nu)| {
                let spec = ProblemSpec { eps, nu, ..base.clone() };
                let traj = run(&spec, horizon, FAMILY_STEPS, &params)
                    .unwrap_or_else(|e| panic!("sweep member ε={eps} ν={nu}: {e}"));
                (spec, traj)
            })
            .collect();
        Family { cells, build: t0.elapsed() }
    })
}

fn c07() -> CheckOutcome {
    let t0 = Instant::now();
    let fam = family();
    let refs: Vec<(&Trajectory, &ProblemSpec)> =
        fam.cells.iter().map(|(s, t)| (t, s)).collect();
    let table = apriori_check(&refs).unwrap();
    let (lo, hi) = table.rows.iter().fold((f64::INFINITY, 0.0_f64), |(l, h), r| {
        (l.min(r.bound), h.max(r.bound))
    });
    outcome(
        7,
        "07 uniform energy bound",
        table.spread <= 0.10 && !table.flagged,
        format!(
            "bounds in [{lo:.4}, {hi:.4}] over ε∈{FAMILY_EPS:?} × ν∈{FAMILY_NU:?}: \
             spread {:.2}% (tol 10%); sweep build {:.1}s",
            100.0 * table.spread,
            fam.build.as_secs_f64()
        ),
        t0,
        180,
    )
}

fn c08() -> CheckOutcome {
    let t0 = Instant::now();
    let fam = family();
    // bands frozen from the reference sweep (see ledger justification in the
    // assertions' printed values); a regression outside them means the
    // multiplier mass or the velocity BV estimate drifted
    const MASS_BAND: (f64, f64) = (1.0, 2.6);
    const BV_BAND: (f64, f64) = (0.45, 1.7);
    let bump = fracwave::harness::center_bump(&fam.cells[0].0.grid);
    let mut mass_range = (f64::INFINITY, 0.0_f64);
    let mut bv_range = (f64::INFINITY, 0.0_f64);
    let mut ok = true;
    for (spec, traj) in &fam.cells {
        let mass = penalty_mass(traj, spec);
        let bv = bv_functional(traj, &bump).unwrap().total_variation;
        mass_range = (mass_range.0.min(mass), mass_range.1.max(mass));
        bv_range = (bv_range.0.min(bv), bv_range.1.max(bv));
        ok &= (MASS_BAND.0..=MASS_BAND.1).contains(&mass);
        ok &= (BV_BAND.0..=BV_BAND.1).contains(&bv);
    }
    outcome(
        8,
        "08 multiplier mass and BV bands",
        ok,
        format!(
            "∫∫|β^ε(u)| in [{:.2}, {:.2}] (band {MASS_BAND:?}), \
             velocity BV in [{:.2}, {:.2}] (band {BV_BAND:?}) across 12 members",
            mass_range.0, mass_range.1, bv_range.0, bv_range.1
        ),
        t0,
        180,
    )
}

fn c09() -> CheckOutcome {
    let t0 = Instant::now();
    let fam = family();
    let obstacle = MonotoneGraph::interval(0.0, f64::INFINITY).unwrap();
    let nu_fixed = *FAMILY_NU.last().unwrap();
    let violations: Vec<f64> = fam
        .cells
        .iter()
        .filter(|(spec, _)| spec.nu == nu_fixed)
        .map(|(_, traj)| constraint_violation(traj, &obstacle).unwrap().l2_qt)
        .collect();
    assert_eq!(violations.len(), FAMILY_EPS.len());
    let decreasing = violations.windows(2).all(|w| w[1] < w[0]);
    let deep = violations[violations.len() - 1] <= 1e-2 * violations[0];
    outcome(
        9,
        "09 penetration decay",
        decreasing && deep,
        format!(
            "‖dist(u,[0,∞))‖_{{L²(Q_T)}} = {} over ε∈{FAMILY_EPS:?} at ν={nu_fixed:.0e} \
             (monotone ↓, final ≤ 1e-2·initial)",
            sci(&violations)
        ),
        t0,
        120,
    )
}

fn c10() -> CheckOutcome {
    let t0 = Instant::now();
    let params = SolverParams::default();
    let tol = ToleranceModel::default();

    // obstacle run: every one of the 50 pairings stays above −(C₁h + C₂ε)
    let (spec, horizon) = scenarios::bouncing_string(256).unwrap();
    let tests = test_library(&spec.grid, 50, 3).unwrap();
    let traj = run(&spec, horizon, 600, &params).unwrap();
    let obstacle = very_weak_residual(&traj, &spec, &tests, spec.nu, tol).unwrap();

    // free wave: the residual is two-sided O(h) — it halves under halving h
    let (free, horizon) = scenarios::free_wave(256).unwrap();
    let coarse = run(&free, horizon, 250, &params).unwrap();
    let fine = run(&free, horizon, 500, &params).unwrap();
    let rc = very_weak_residual(&coarse, &free, &tests, 0.0, tol).unwrap();
    let rf = very_weak_residual(&fine, &free, &tests, 0.0, tol).unwrap();
    let ratio = rc.max_abs() / rf.max_abs();
    let ok = obstacle.pass
        && rc.pass
        && rf.pass
        && (1.7..=2.3).contains(&ratio)
        && rc.min_value() < 0.0;
    outcome(
        10,
        "10 very weak inequality",
        ok,
        format!(
            "obstacle min {:.2e} ≥ −{:.2e} over 50 tests; free-wave |residual| halves \
             {:.2e}→{:.2e} (ratio {ratio:.2})",
            obstacle.min_value(),
            obstacle.entries[0].tol,
            rc.max_abs(),
            rf.max_abs()
        ),
        t0,
        60,
    )
}

fn c11() -> CheckOutcome {
    let t0 = Instant::now();
    let (base, horizon) = scenarios::bouncing_string(256).unwrap();
    let plan = SweepPlan::new(base, horizon, 600, SweepAxis::Viscosity)
        .with_values(&[1e-1, 1e-2, 1e-3]);
    let report = sweep_viscosity(&plan).unwrap();
    let pairings: Vec<f64> = report
        .rows
        .iter()
        .map(|r| r.metric("viscous_pairing").unwrap())
        .collect();
    outcome(
        11,
        "11 vanishing viscosity",
        report.pass && report.cauchy_decreasing,
        format!(
            "L²(Q_T) Cauchy gaps {} decreasing; ν⟨B D^s u̇, D^s φ⟩ = {} \
             within the 2√ν envelope{}",
            sci(&report.cauchy_qt),
            sci(&pairings),
            if report.notes.is_empty() { String::new() } else { format!("; notes: {:?}", report.notes) }
        ),
        t0,
        120,
    )
}

fn c12() -> CheckOutcome {
    let t0 = Instant::now();
    let s_values = [0.6, 0.8, 0.9, 0.99];
    let mut details = Vec::new();
    let mut ok = true;
    for (label, (base, horizon)) in [
        ("free", scenarios::free_wave(256).unwrap()),
        ("obstacle", scenarios::bouncing_string(256).unwrap()),
    ] {
        let plan =
            SweepPlan::new(base, horizon, 600, SweepAxis::ExponentS).with_values(&s_values);
        let report = sweep_exponent(&plan).unwrap();
        let gaps: Vec<f64> = report
            .rows
            .iter()
            .filter(|r| r.value < 1.0)
            .map(|r| r.metric("gap_to_classical_qt").unwrap())
            .collect();
        ok &= report.pass;
        let notes = if report.notes.is_empty() {
            String::new()
        } else {
            format!(" (notes: {:?})", report.notes)
        };
        details.push(format!(
            "{label} ‖u_s − u_1‖_{{L²(Q_T)}} = {}{notes}",
            sci(&gaps)
        ));
    }

    // the classical-exponent obstacle run itself satisfies the very weak
    // inequality against the full library
    let (spec, horizon) = scenarios::bouncing_string(256).unwrap();
    let classical = ProblemSpec { s: 1.0, ..spec };
    let traj = run(&classical, horizon, 600, &SolverParams::default()).unwrap();
    let tests = test_library(&classical.grid, 50, 3).unwrap();
    let report = very_weak_residual(
        &traj,
        &classical,
        &tests,
        classical.nu,
        ToleranceModel::default(),
    )
    .unwrap();
    ok &= report.pass;
    details.push(format!(
        "s=1 obstacle min residual {:.2e} ≥ −{:.2e}",
        report.min_value(),
        report.entries[0].tol
    ));

    outcome(
        12,
        "12 classical-exponent limit",
        ok,
        format!("{} (strictly decreasing toward s = 1)", details.join("; ")),
        t0,
        180,
    )
}
