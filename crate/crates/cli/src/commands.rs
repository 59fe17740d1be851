//! `estimate`, `phi`, `risk` and `region`.

use std::fs;
use std::path::Path;

use gbayes_core::estimator::{
    classify, closed_form_b, estimate, phi_table, shrink_fraction, xi, baranchik_bound, EstimatorSpec, Mode,
    Observation, RegionVerdict,
};
use gbayes_core::numerics::{log_grid, QuadratureSpec};
use gbayes_core::prior::{HyperParams, Problem};
use gbayes_core::risk::{risk_curve, DecisionRule, MIN_REPS};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{EstimateArgs, ModelArgs, PhiArgs, RegionArgs, RiskArgs};
use crate::error::CliError;
use crate::output::{emit, num, render_json, render_table, Cell, Metadata, Table};

/// The estimator a command runs with, after defaults are filled in.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResolvedModel {
    pub p: usize,
    pub n: usize,
    pub a: f64,
    pub b: f64,
    pub mode: Mode,
}

impl ResolvedModel {
    pub fn problem(&self) -> Problem {
        Problem { p: self.p, n: self.n }
    }

    pub fn hyper(&self) -> HyperParams {
        HyperParams { a: self.a, b: self.b }
    }
}

pub fn quadrature(model: &ModelArgs) -> Result<QuadratureSpec, CliError> {
    if !(model.rel_tol > 0.0 && model.rel_tol < 1.0) {
        return Err(CliError::usage(format!("--rel-tol must lie in (0, 1), got {}", model.rel_tol)));
    }
    Ok(QuadratureSpec::default().with_relative_tolerance(model.rel_tol))
}

/// `a` defaults to `ξ(p, n)` and `b` to `n/2 - a - 2`.
pub fn resolve_model(model: &ModelArgs) -> Result<ResolvedModel, CliError> {
    let problem = Problem::new(model.p, model.n)?;
    let a = model.a.unwrap_or_else(|| xi(&problem));
    let b = model.b.unwrap_or_else(|| closed_form_b(&problem, a));
    HyperParams::new(a, b)?;
    Ok(ResolvedModel {
        p: model.p,
        n: model.n,
        a,
        b,
        mode: if model.closed_form { Mode::ClosedForm } else { Mode::GeneralQuadrature },
    })
}

pub fn estimator(model: &ModelArgs) -> Result<(ResolvedModel, EstimatorSpec), CliError> {
    let resolved = resolve_model(model)?;
    let spec = EstimatorSpec::new(resolved.problem(), resolved.hyper(), resolved.mode, quadrature(model)?)?;
    Ok((resolved, spec))
}

fn parse_float(text: &str, flag: &str) -> Result<f64, CliError> {
    let t = text.trim();
    t.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| CliError::usage(format!("{flag}: '{t}' is not a finite number")))
}

pub fn parse_list(text: &str, flag: &str) -> Result<Vec<f64>, CliError> {
    let values = text
        .split(',')
        .map(|v| parse_float(v, flag))
        .collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err(CliError::usage(format!("{flag}: no values given")));
    }
    Ok(values)
}

/// One value per line, `#` comments and blank lines ignored; the last value is `s`.
pub fn read_observation_file(path: &Path) -> Result<(Vec<f64>, f64), CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut values = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        values.push(parse_float(line, &format!("{}:{}", path.display(), line_no + 1))?);
    }
    match values.pop() {
        Some(s) if !values.is_empty() => Ok((values, s)),
        _ => Err(CliError::usage(format!(
            "{}: expected the entries of x followed by s, one per line",
            path.display()
        ))),
    }
}

fn verdict_json(verdict: &RegionVerdict) -> Value {
    json!({
        "admissible": verdict.admissible,
        "minimax": verdict.minimax,
        "both": verdict.both(),
        "reasons": verdict.reasons,
    })
}

fn failed_conditions(verdict: &RegionVerdict) -> String {
    let failed: Vec<&str> = verdict.reasons.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    failed.join(";")
}

pub fn cmd_estimate(args: &EstimateArgs) -> Result<(), CliError> {
    let (model, spec) = estimator(&args.model)?;
    let (x, s) = match (&args.x, &args.input) {
        (Some(x), None) => {
            let s = args.s.ok_or_else(|| CliError::usage("--x needs --s"))?;
            (parse_list(x, "--x")?, s)
        }
        (None, Some(path)) => {
            if args.s.is_some() {
                return Err(CliError::usage("--s cannot be combined with --input; put s on the file's last line"));
            }
            read_observation_file(path)?
        }
        _ => return Err(CliError::usage("give the observation with --x and --s, or with --input")),
    };
    let obs = Observation::new(x, s)?;
    let delta = estimate(&obs, &spec)?;
    let w = obs.w();
    let shrink = shrink_fraction(w, &spec)?;
    let verdict = classify(&spec.problem, &spec.hyper);

    let mut meta = Metadata::new(
        "estimate",
        json!({ "model": model, "x": obs.x, "s": obs.s, "format": args.output.format.name() }),
        args.output.seed,
        &spec.quadrature,
    );
    meta.insert("shrink_constant", num(spec.limit_constant()));
    let text = match args.output.format {
        crate::args::Format::Csv => {
            let mut columns: Vec<String> =
                ["w", "shrink_fraction", "phi", "admissible", "minimax", "both", "failed_conditions"]
                    .map(String::from)
                    .to_vec();
            columns.extend((1..=delta.len()).map(|i| format!("estimate_{i}")));
            let mut table = Table::new(&columns);
            let mut row: Vec<Cell> = vec![
                w.into(),
                shrink.into(),
                (w * shrink).into(),
                verdict.admissible.into(),
                verdict.minimax.into(),
                verdict.both().into(),
                Cell::Text(failed_conditions(&verdict)),
            ];
            row.extend(delta.iter().map(|&d| Cell::Float(d)));
            table.push(row);
            render_table(&meta, &table, args.output.format)
        }
        crate::args::Format::Json => render_json(&json!({
            "metadata": meta.to_value(),
            "result": {
                "w": num(w),
                "shrink_fraction": num(shrink),
                "phi": num(w * shrink),
                "estimate": delta.iter().map(|&d| num(d)).collect::<Vec<_>>(),
                "verdict": verdict_json(&verdict),
            }
        })),
    };
    emit(&text, args.output.out.as_deref())
}

pub fn cmd_phi(args: &PhiArgs) -> Result<(), CliError> {
    let (model, spec) = estimator(&args.model)?;
    if !(args.w_min > 0.0 && args.w_min.is_finite() && args.w_max.is_finite() && args.w_min < args.w_max) {
        return Err(CliError::usage(format!(
            "need 0 < --w-min < --w-max, got {} and {}",
            args.w_min, args.w_max
        )));
    }
    if args.points < 2 {
        return Err(CliError::usage(format!("--points must be at least 2, got {}", args.points)));
    }
    let grid = log_grid(args.w_min, args.w_max, args.points);
    let rows = phi_table(&grid, &spec)?;
    let meta = Metadata::new(
        "phi",
        json!({
            "model": model,
            "w_min": args.w_min,
            "w_max": args.w_max,
            "points": args.points,
            "format": args.output.format.name(),
        }),
        args.output.seed,
        &spec.quadrature,
    );
    let mut table = Table::new(&["w", "phi", "shrink_fraction"]);
    for (w, phi, shrink) in rows {
        table.push(vec![w.into(), phi.into(), shrink.into()]);
    }
    emit(&render_table(&meta, &table, args.output.format), args.output.out.as_deref())
}

pub fn cmd_risk(args: &RiskArgs) -> Result<(), CliError> {
    let (model, spec) = estimator(&args.model)?;
    let grid = parse_list(&args.theta_grid, "--theta-grid")?;
    if args.reps < MIN_REPS {
        return Err(CliError::usage(format!("--reps must be at least {MIN_REPS}, got {}", args.reps)));
    }
    if !(args.eta > 0.0 && args.eta.is_finite()) {
        return Err(CliError::usage(format!("--eta must be positive, got {}", args.eta)));
    }
    let rule = if args.identity {
        DecisionRule::Identity
    } else {
        DecisionRule::GeneralizedBayes(spec)
    };
    let rows = risk_curve(&rule, &spec.problem, &grid, args.eta, args.reps, args.output.seed)?;
    let meta = Metadata::new(
        "risk",
        json!({
            "model": model,
            "rule": if args.identity { "identity" } else { "generalized_bayes" },
            "theta_grid": grid,
            "eta": args.eta,
            "reps": args.reps,
            "format": args.output.format.name(),
        }),
        args.output.seed,
        &spec.quadrature,
    );
    let mut table = Table::new(&["theta_norm", "risk_mean", "std_error", "seed"]);
    for row in rows {
        table.push(vec![row.theta_norm.into(), row.mean.into(), row.std_error.into(), row.seed.into()]);
    }
    emit(&render_table(&meta, &table, args.output.format), args.output.out.as_deref())
}

/// `steps + 1` evenly spaced values from `lo` to `hi`, ends exact.
fn linear_grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    (0..=steps)
        .map(|k| if k == steps { hi } else { lo + (hi - lo) * k as f64 / steps as f64 })
        .collect()
}

pub fn cmd_region(args: &RegionArgs) -> Result<(), CliError> {
    let problem = Problem::new(args.p, args.n)?;
    let check_range = |name: &str, lo: f64, hi: f64, steps: usize| -> Result<(), CliError> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(CliError::usage(format!("need finite --{name}-min <= --{name}-max, got {lo} and {hi}")));
        }
        if !(lo > -1.0) {
            return Err(CliError::usage(format!("--{name}-min must exceed -1, got {lo}")));
        }
        if steps < 1 {
            return Err(CliError::usage(format!("--{name}-steps must be at least 1")));
        }
        Ok(())
    };
    check_range("a", args.a_min, args.a_max, args.a_steps)?;
    check_range("b", args.b_min, args.b_max, args.b_steps)?;
    let xi_value = xi(&problem);
    let mut meta = Metadata::new(
        "region",
        json!({
            "p": args.p,
            "n": args.n,
            "a_min": args.a_min, "a_max": args.a_max, "a_steps": args.a_steps,
            "b_min": args.b_min, "b_max": args.b_max, "b_steps": args.b_steps,
            "format": args.output.format.name(),
        }),
        args.output.seed,
        &QuadratureSpec::default(),
    );
    meta.insert("xi", num(xi_value));
    meta.insert("baranchik_bound", num(baranchik_bound(&problem)));
    let mut table = Table::new(&["a", "b", "admissible", "minimax", "both", "failed_conditions"]);
    for a in linear_grid(args.a_min, args.a_max, args.a_steps) {
        for b in linear_grid(args.b_min, args.b_max, args.b_steps) {
            let verdict = classify(&problem, &HyperParams::new(a, b)?);
            table.push(vec![
                a.into(),
                b.into(),
                verdict.admissible.into(),
                verdict.minimax.into(),
                verdict.both().into(),
                Cell::Text(failed_conditions(&verdict)),
            ]);
        }
    }
    emit(&render_table(&meta, &table, args.output.format), args.output.out.as_deref())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(a: Option<f64>, b: Option<f64>) -> ModelArgs {
        ModelArgs {
            p: 10,
            n: 10,
            a,
            b,
            closed_form: false,
            rel_tol: 1e-10,
        }
    }

    #[test]
    fn defaults_are_the_simple_minimax_estimator() {
        let m = resolve_model(&model(None, None)).unwrap();
        assert!((m.a + 2.0 / 7.0).abs() < 1e-15);
        assert!((m.b - (5.0 + 2.0 / 7.0 - 2.0)).abs() < 1e-14);
        let m = resolve_model(&model(Some(0.5), None)).unwrap();
        assert_eq!(m.b, 2.5);
    }

    #[test]
    fn bad_hyperparameters_are_usage_errors() {
        let err = resolve_model(&model(Some(-1.5), Some(0.0))).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn list_parsing() {
        assert_eq!(parse_list(" 1, -2.5 ,3e2", "--x").unwrap(), vec![1.0, -2.5, 300.0]);
        assert!(parse_list("1,,2", "--x").is_err());
        assert!(parse_list("1,nan", "--x").is_err());
    }

    #[test]
    fn observation_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("obs.txt");
        fs::write(&path, "# x then s\n1.0\n\n-2.0  # second\n0.5\n").unwrap();
        assert_eq!(read_observation_file(&path).unwrap(), (vec![1.0, -2.0], 0.5));
        fs::write(&path, "3.0\n").unwrap();
        assert!(read_observation_file(&path).is_err());
    }

    #[test]
    fn linear_grid_hits_both_ends() {
        let g = linear_grid(-0.95, 5.0, 7);
        assert_eq!(g.len(), 8);
        assert_eq!((g[0], g[7]), (-0.95, 5.0));
    }
}
