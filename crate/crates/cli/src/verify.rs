//! The `verify` command: numerical checks grouped into suites.
//!
//! Whether a check applies to the configured model is decided before it runs,
//! from the parameter ranges where the checked statement holds. A check that
//! does not apply is reported as skipped with the reason; an error raised by a
//! check that does apply counts as a failure.

use std::collections::BTreeMap;

use gbayes_core::blyth::{
    a_bound_check, b_i_bound_profile, default_s_grid, h_integral_check, inequality_suite, q2_constant,
    BoundCheckReport, DEFAULT_I_SET, DEFAULT_Z_SET,
};
use gbayes_core::estimator::{
    baranchik_check, classify, closed_form_b, phi_table, EstimatorSpec, Mode, MONOTONE_TOLERANCE,
};
use gbayes_core::numerics::{log_gamma, log_grid, QuadratureSpec};
use gbayes_core::prior::{
    f_log_moment, log_slope, psi_closed_endpoints, psi_general_quadrature, HyperParams, MixtureDensity,
    MixtureDensityParams, MomentRegion, Problem,
};
use gbayes_core::Result as CoreResult;
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{Suite, VerifyArgs};
use crate::commands::{quadrature, resolve_model, ResolvedModel};
use crate::error::CliError;
use crate::output::{emit, num, render_json, Metadata};

pub const H_INDICES: [u32; 4] = [1, 2, 5, 20];
pub const PSI_TUPLES: [(f64, f64); 3] = [(0.0, 1.0), (0.5, 2.0), (-0.5, 2.0)];
pub const PSI_ENDPOINT_TOLERANCE: f64 = 1e-10;
pub const PSI_INTERIOR_POINTS: usize = 20;
pub const F_NORMALIZATION_TOLERANCE: f64 = 1e-6;
pub const GAMMA_REDUCTION_TOLERANCE: f64 = 1e-10;
/// Relative to `max(1, |limit|)`.
pub const SLOPE_TOLERANCE: f64 = 0.02;
pub const SLOPE_FAR_R: f64 = 1e8;
/// The boundary case `b = p/2 - 1` approaches its limit like `1/ln(1/r)`,
/// so the small-r end has to be very small.
pub const SLOPE_NEAR_R: f64 = 1e-300;
pub const PHI_LIMIT_W: f64 = 1e6;
pub const PHI_LIMIT_TOLERANCE: f64 = 0.01;
pub const PHI_GRID: (f64, f64, usize) = (1e-3, 1e6, 64);
pub const CLOSED_FORM_TOLERANCE: f64 = 1e-8;
pub const A_X_GRID: [f64; 3] = [0.0, 1.0, 10.0];
pub const A_S_GRID: [f64; 3] = [0.01, 1.0, 100.0];
const BOUNDARY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub suite: &'static str,
    pub name: String,
    pub status: Status,
    pub statistics: BTreeMap<String, Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<BoundCheckReport>,
}

struct Builder {
    suite: &'static str,
    results: Vec<CheckResult>,
}

impl Builder {
    fn new(suite: &'static str) -> Self {
        Self {
            suite,
            results: Vec::new(),
        }
    }

    fn skip(&mut self, name: &str, reason: impl Into<String>) {
        self.results.push(CheckResult {
            suite: self.suite,
            name: name.into(),
            status: Status::Skipped,
            statistics: BTreeMap::new(),
            note: Some(reason.into()),
            report: None,
        });
    }

    /// Runs `check` and records its outcome; an error is a failure.
    fn run(&mut self, name: &str, check: impl FnOnce() -> CoreResult<Outcome>) {
        let result = match check() {
            Ok(outcome) => CheckResult {
                suite: self.suite,
                name: name.into(),
                status: if outcome.passed { Status::Pass } else { Status::Fail },
                statistics: outcome.statistics,
                note: outcome.note,
                report: outcome.report,
            },
            Err(e) => CheckResult {
                suite: self.suite,
                name: name.into(),
                status: Status::Fail,
                statistics: BTreeMap::new(),
                note: Some(e.to_string()),
                report: None,
            },
        };
        self.results.push(result);
    }
}

#[derive(Default)]
struct Outcome {
    passed: bool,
    statistics: BTreeMap<String, Value>,
    note: Option<String>,
    report: Option<BoundCheckReport>,
}

impl Outcome {
    fn new(passed: bool) -> Self {
        Self {
            passed,
            ..Self::default()
        }
    }

    fn stat(mut self, key: &str, value: f64) -> Self {
        self.statistics.insert(key.into(), num(value));
        self
    }

    fn note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    fn from_report(report: BoundCheckReport) -> Self {
        Self::new(report.passed)
            .stat("sup_statistic", report.sup_statistic)
            .stat("cap", report.cap)
            .with_report(report)
    }

    fn with_report(mut self, report: BoundCheckReport) -> Self {
        self.note = report.note.clone();
        self.report = Some(report);
        self
    }
}

/// Everything a suite needs: the model, its parsed parts and the tolerances.
pub struct Context {
    pub model: ResolvedModel,
    pub problem: Problem,
    pub hyper: HyperParams,
    pub spec: QuadratureSpec,
    pub seed: u64,
    pub samples: usize,
}

fn lemma_psi_applies(ctx: &Context) -> Option<String> {
    (!(ctx.problem.half_n() - ctx.hyper.a > 0.0)).then(|| "requires n/2 - a > 0".to_string())
}

pub fn prior_suite(ctx: &Context) -> Vec<CheckResult> {
    let mut out = Builder::new("prior");
    let (problem, hyper, spec) = (&ctx.problem, &ctx.hyper, &ctx.spec);

    out.run("h_integral", || Ok(Outcome::from_report(h_integral_check(&H_INDICES, problem, hyper, spec)?)));

    for (j, k) in PSI_TUPLES {
        let name = format!("psi_closed_form(j={j},k={k})");
        if let Some(reason) = lemma_psi_applies(ctx) {
            out.skip(&name, reason);
            continue;
        }
        out.run(&name, || {
            let (at0, at1) = psi_closed_endpoints(j, k, problem, hyper)?;
            let q0 = psi_general_quadrature(0.0, j, k, problem, hyper, spec)?;
            let q1 = psi_general_quadrature(1.0, j, k, problem, hyper, spec)?;
            let err0 = (q0 - at0).abs() / at0;
            let err1 = (q1 - at1).abs() / at1;
            let (lo, hi) = (at0.min(at1), at0.max(at1));
            let slack = PSI_ENDPOINT_TOLERANCE * hi;
            let mut outside = 0usize;
            for m in 1..=PSI_INTERIOR_POINTS {
                let z = m as f64 / (PSI_INTERIOR_POINTS + 1) as f64;
                let v = psi_general_quadrature(z, j, k, problem, hyper, spec)?;
                if !(v >= lo - slack && v <= hi + slack) {
                    outside += 1;
                }
            }
            let passed = err0 <= PSI_ENDPOINT_TOLERANCE && err1 <= PSI_ENDPOINT_TOLERANCE && outside == 0;
            Ok(Outcome::new(passed)
                .stat("relative_error_z0", err0)
                .stat("relative_error_z1", err1)
                .stat("psi_0", at0)
                .stat("psi_1", at1)
                .stat("interior_points_outside", outside as f64))
        });
    }

    if let Some(reason) = lemma_psi_applies(ctx) {
        out.skip("f_normalization", reason.clone());
        out.skip("f_gamma_reduction", reason);
    } else {
        out.run("f_normalization", || {
            let mut worst: f64 = 0.0;
            let mut outcome = Outcome::new(true);
            for z in DEFAULT_Z_SET {
                let params = MixtureDensityParams::new(*problem, *hyper, z)?;
                let mass = f_log_moment(params, 0, MomentRegion::Full, spec)?;
                worst = worst.max((mass - 1.0).abs());
                outcome = outcome.stat(&format!("mass_z={z}"), mass);
            }
            outcome.passed = worst <= F_NORMALIZATION_TOLERANCE;
            Ok(outcome.stat("max_abs_error", worst))
        });
        out.run("f_gamma_reduction", || {
            let density = MixtureDensity::new(MixtureDensityParams::new(*problem, *hyper, 0.0)?, spec)?;
            let shape = (problem.p + problem.n) as f64 / 2.0 + 1.0;
            let log_norm = -shape * std::f64::consts::LN_2 - log_gamma(shape)?;
            let mut worst: f64 = 0.0;
            for v in log_grid(1e-2, 1e3, 16) {
                let gamma = (log_norm + (shape - 1.0) * v.ln() - 0.5 * v).exp();
                let f = density.density(v)?;
                worst = worst.max((f - gamma).abs() / gamma);
            }
            Ok(Outcome::new(worst <= GAMMA_REDUCTION_TOLERANCE).stat("max_relative_error", worst))
        });
    }

    out.run("log_slope_limits", || {
        let (far_limit, near_limit, regime) = slope_limits(problem, hyper);
        let far = log_slope(SLOPE_FAR_R, problem, hyper, spec)?;
        let near = log_slope(SLOPE_NEAR_R, problem, hyper, spec)?;
        let far_err = (far - far_limit).abs() / far_limit.abs().max(1.0);
        let near_err = (near - near_limit).abs() / near_limit.abs().max(1.0);
        Ok(Outcome::new(far_err <= SLOPE_TOLERANCE && near_err <= SLOPE_TOLERANCE)
            .stat("far_slope", far)
            .stat("far_limit", far_limit)
            .stat("near_slope", near)
            .stat("near_limit", near_limit)
            .note(format!("r -> 0 regime: {regime}")))
    });
    out.results
}

/// Limits of `r π′(r)/π(r)` as `r → ∞` and `r → 0`, and the name of the
/// small-`r` regime.
pub fn slope_limits(problem: &Problem, hyper: &HyperParams) -> (f64, f64, &'static str) {
    let half_p = problem.half_p();
    let far = -(half_p + hyper.a + 1.0);
    let edge = half_p - 1.0;
    if (hyper.b - edge).abs() <= BOUNDARY_TOLERANCE {
        (far, 0.0, "b = p/2 - 1, logarithmic approach to 0")
    } else if hyper.b < edge {
        (far, -(edge - hyper.b), "b < p/2 - 1")
    } else {
        (far, 0.0, "b > p/2 - 1")
    }
}

pub fn estimator_suite(ctx: &Context) -> Vec<CheckResult> {
    let mut out = Builder::new("estimator");
    let (problem, hyper) = (ctx.problem, ctx.hyper);
    let general = EstimatorSpec {
        problem,
        hyper,
        mode: Mode::GeneralQuadrature,
        quadrature: ctx.spec,
    };
    let finite_limit = problem.half_n() - hyper.a - 1.0 > 0.0;
    let (lo, hi, points) = PHI_GRID;
    let grid = log_grid(lo, hi, points);

    if finite_limit {
        out.run("phi_limit", || {
            let c = general.limit_constant();
            let phi = phi_table(&[PHI_LIMIT_W], &general)?[0].1;
            let rel = (phi - c).abs() / c;
            Ok(Outcome::new(rel <= PHI_LIMIT_TOLERANCE)
                .stat("phi", phi)
                .stat("limit", c)
                .stat("relative_error", rel))
        });
    } else {
        out.skip("phi_limit", "φ(w) is unbounded unless a < n/2 - 1");
    }

    let table = phi_table(&grid, &general);
    let decrease = |rows: &[(f64, f64, f64)]| {
        rows.windows(2)
            .map(|w| (w[0].1 - w[1].1) / w[0].1.abs().max(1.0))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    match (&table, hyper.b >= 0.0) {
        (Ok(rows), true) => out.run("phi_monotone", || {
            let worst = decrease(rows);
            Ok(Outcome::new(worst <= MONOTONE_TOLERANCE).stat("largest_relative_decrease", worst))
        }),
        (Ok(rows), false) => {
            let worst = decrease(rows);
            out.skip(
                "phi_monotone",
                format!("only asserted for b >= 0; largest relative decrease on the grid was {worst:e}"),
            );
        }
        (Err(e), _) => {
            let e = e.clone();
            out.run("phi_monotone", || Err(e));
        }
    }

    let closed_b = closed_form_b(&problem, hyper.a);
    if (hyper.b - closed_b).abs() <= BOUNDARY_TOLERANCE && finite_limit {
        out.run("closed_form_agreement", || {
            let closed = EstimatorSpec::new(problem, hyper, Mode::ClosedForm, ctx.spec)?;
            let exact = phi_table(&grid, &closed)?;
            let numeric = table.clone()?;
            let worst = exact
                .iter()
                .zip(&numeric)
                .map(|(e, n)| (e.2 - n.2).abs())
                .fold(0.0, f64::max);
            Ok(Outcome::new(worst <= CLOSED_FORM_TOLERANCE)
                .stat("max_abs_difference", worst)
                .stat("shrink_constant", closed.limit_constant()))
        });
    } else {
        out.skip("closed_form_agreement", format!("needs b = n/2 - a - 2 = {closed_b} and a < n/2 - 1"));
    }

    if classify(&problem, &hyper).minimax {
        out.run("baranchik", || {
            let phis: Vec<f64> = table.clone()?.iter().map(|r| r.1).collect();
            let outcome = baranchik_check(&phis, &problem)?;
            let note = outcome.failure.as_ref().map(|f| format!("{f:?}"));
            let mut result = Outcome::new(outcome.passed).stat("bound", gbayes_core::estimator::baranchik_bound(&problem));
            result.note = note;
            Ok(result)
        });
    } else {
        out.skip("baranchik", "the Baranchik conditions are only claimed inside the minimax region");
    }
    out.results
}

pub fn blyth_suite(ctx: &Context) -> Vec<CheckResult> {
    let mut out = Builder::new("blyth");
    let (problem, hyper, spec) = (&ctx.problem, &ctx.hyper, &ctx.spec);
    if problem.half_n() - hyper.a > 0.0 {
        out.run("b_i_profile", || {
            let report = b_i_bound_profile(&DEFAULT_I_SET, &default_s_grid(), &DEFAULT_Z_SET, problem, hyper, spec)?;
            let mut outcome = Outcome::new(report.passed)
                .stat("sup_statistic", report.sup_statistic)
                .stat("cap", report.cap);
            for (key, value) in &report.summary {
                outcome = outcome.stat(key, *value);
            }
            // The sup is asserted non-increasing in i as well.
            let sups: Vec<f64> = DEFAULT_I_SET
                .iter()
                .map(|i| report.summary.get(&format!("sup_i_{i}")).copied().unwrap_or(f64::NAN))
                .collect();
            let monotone = sups.windows(2).all(|w| w[1] <= w[0]);
            outcome.passed &= monotone;
            let outcome = outcome.with_report(report);
            Ok(if monotone { outcome } else { outcome.note("sup over s is not non-increasing in i") })
        });
    } else {
        out.skip("b_i_profile", "requires a < n/2");
    }
    if problem.p >= 3 && hyper.b > -0.5 {
        out.run("a_bound", || Ok(Outcome::from_report(a_bound_check(&A_X_GRID, &A_S_GRID, problem, hyper, spec)?)));
    } else {
        out.skip("a_bound", "requires p >= 3 and b > -1/2");
    }
    if problem.p >= 2 && hyper.b > -0.5 {
        out.run("q2_constant", || {
            let q = q2_constant(problem, hyper, spec)?;
            Ok(Outcome::new(q > 1.0).stat("q2", q))
        });
    } else {
        out.skip("q2_constant", "requires p >= 2 and b > -1/2");
    }
    out.results
}

pub fn inequality_suite_checks(ctx: &Context) -> Vec<CheckResult> {
    let mut out = Builder::new("inequalities");
    out.run("random_points", || {
        let report = inequality_suite(ctx.samples, ctx.seed)?;
        Ok(Outcome::from_report(report.clone()).stat("violations", report.summary["violations"]))
    });
    out.results
}

pub fn run_suites(suite: Suite, ctx: &Context) -> Vec<CheckResult> {
    let mut results = Vec::new();
    let all = suite == Suite::All;
    if all || suite == Suite::Prior {
        results.extend(prior_suite(ctx));
    }
    if all || suite == Suite::Estimator {
        results.extend(estimator_suite(ctx));
    }
    if all || suite == Suite::Blyth {
        results.extend(blyth_suite(ctx));
    }
    if all || suite == Suite::Inequalities {
        results.extend(inequality_suite_checks(ctx));
    }
    results
}

fn text_line(r: &CheckResult) -> String {
    let tag = match r.status {
        Status::Pass => "PASS",
        Status::Fail => "FAIL",
        Status::Skipped => "SKIP",
    };
    let stats: Vec<String> = r.statistics.iter().map(|(k, v)| format!("{k}={v}")).collect();
    let mut line = format!("[{tag}] {}/{}", r.suite, r.name);
    if !stats.is_empty() {
        line.push_str(&format!("  {}", stats.join(" ")));
    }
    if let Some(note) = &r.note {
        line.push_str(&format!("  ({note})"));
    }
    line
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<(), CliError> {
    let model = resolve_model(&args.model)?;
    let spec = quadrature(&args.model)?;
    if args.samples < gbayes_core::blyth::MIN_INEQUALITY_SAMPLES {
        return Err(CliError::usage(format!(
            "--samples must be at least {}, got {}",
            gbayes_core::blyth::MIN_INEQUALITY_SAMPLES,
            args.samples
        )));
    }
    let ctx = Context {
        model,
        problem: model.problem(),
        hyper: model.hyper(),
        spec,
        seed: args.seed,
        samples: args.samples,
    };
    let results = run_suites(args.suite, &ctx);
    for r in &results {
        eprintln!("{}", text_line(r));
    }
    let failed = results.iter().filter(|r| r.status == Status::Fail).count();
    let passed = results.iter().filter(|r| r.status == Status::Pass).count();
    let skipped = results.len() - failed - passed;
    eprintln!("{passed} passed, {failed} failed, {skipped} skipped");

    let meta = Metadata::new(
        "verify",
        json!({ "model": ctx.model, "suite": args.suite.name(), "samples": args.samples }),
        args.seed,
        &spec,
    );
    let report = json!({
        "metadata": meta.to_value(),
        "passed": failed == 0,
        "counts": { "passed": passed, "failed": failed, "skipped": skipped },
        "checks": results,
    });
    emit(&render_json(&report), args.out.as_deref())?;
    if failed > 0 {
        return Err(CliError::ChecksFailed(format!("{failed} check(s) failed")));
    }
    Ok(())
}
