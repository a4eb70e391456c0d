//! Subcommand implementations.

use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use dkalman::{
    ar_root_moduli, compare_models, fd_gradient, fd_hessian, filter, gradient_filter,
    hessian_filter, multi_start_fit, simulate, CriteriaReport, FdConfig, FilterInit, FitResult,
    ModelBuilder, ParamTransform, ParameterVector, SeasonalArConfig, SeasonalConfig, TimeSeries,
    TrendConfig,
};
use nalgebra::DVector;
use serde_json::{json, Map, Value};

use crate::ingest::ingest_csv;
use crate::report::{
    envelope, mat_json, num, num_exact, sig12, slice_json, vec_json, write_report,
};
use crate::{CliError, DataArgs, Family, InitScale, ModelArgs, OptimizerArgs};

type Builder = Box<dyn ModelBuilder<f64>>;

fn parse_init(raw: &str) -> Result<Vec<f64>, CliError> {
    raw.split(',')
        .map(|field| {
            field
                .trim()
                .parse::<f64>()
                .map_err(|_| CliError::config(format!("cannot parse init value {field:?}")))
        })
        .collect()
}

fn to_working(
    builder: &dyn ModelBuilder<f64>,
    values: &[f64],
    scale: InitScale,
) -> Result<ParameterVector<f64>, CliError> {
    if values.len() != builder.param_dim() {
        return Err(CliError::config(format!(
            "init has {} values but the model has {} parameters",
            values.len(),
            builder.param_dim()
        )));
    }
    match scale {
        InitScale::Working => builder
            .params(values)
            .map_err(|e| CliError::config(e.to_string())),
        InitScale::Natural => {
            ParameterVector::from_natural(values, builder.param_names(), builder.param_transforms())
                .map_err(|e| CliError::config(e.to_string()))
        }
    }
}

/// Variance scale of the data: sample variance of first differences,
/// falling back to the squared level for length-1 series.
fn data_scale(y: &TimeSeries<f64>) -> f64 {
    let v = y.values();
    let scale = if v.len() >= 2 {
        let d: Vec<f64> = v.windows(2).map(|w| w[1] - w[0]).collect();
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / d.len() as f64
    } else {
        v[0] * v[0]
    };
    scale.max(1e-8)
}

/// Deterministic data-driven start: variances proportional to the
/// first-difference variance, AR coefficients at (0.5, 0, ...).
fn default_start(builder: &dyn ModelBuilder<f64>, y: &TimeSeries<f64>) -> ParameterVector<f64> {
    start_from_scale(builder, data_scale(y), 0.5)
}

/// Alternative start probing the small-variance / near-unit-root basin.
fn alternative_start(builder: &dyn ModelBuilder<f64>, y: &TimeSeries<f64>) -> ParameterVector<f64> {
    start_from_scale(builder, data_scale(y) * 1e-3, 0.95)
}

fn start_from_scale(
    builder: &dyn ModelBuilder<f64>,
    scale: f64,
    first_ar: f64,
) -> ParameterVector<f64> {
    let names = builder.param_names();
    let transforms = builder.param_transforms();
    let mut working = Vec::with_capacity(names.len());
    let mut ar_seen = false;
    for (name, tr) in names.iter().zip(&transforms) {
        match tr {
            ParamTransform::Log => {
                let factor = if name.contains("sigma") { 0.5 } else { 0.1 };
                working.push((factor * scale).ln());
            }
            ParamTransform::Identity => {
                working.push(if ar_seen { 0.0 } else { first_ar });
                ar_seen = true;
            }
        }
    }
    builder
        .params(&working)
        .expect("builder metadata is consistent")
}

fn params_json(theta: &ParameterVector<f64>) -> Value {
    json!({
        "names": theta.names(),
        "working": slice_json(theta.values()),
        "natural": slice_json(&theta.natural_scale()),
    })
}

/// Criteria block with the printed identities `aic = -2 loglik + 2 p`
/// and `gic = -2 loglik + 2 b_gic` holding exactly over the rounded
/// values.
fn criteria_json(criteria: &CriteriaReport<f64>) -> Value {
    let loglik = sig12(criteria.loglik);
    let b_gic = criteria.b_gic.map(sig12);
    let p = criteria.param_dim;
    let aic = -2.0 * loglik + 2.0 * p as f64;
    let gic = b_gic.map(|b| -2.0 * loglik + 2.0 * b);
    json!({
        "loglik": num_exact(loglik),
        "p": p,
        "n": criteria.n_obs,
        "i_hat": mat_json(&criteria.i_hat),
        "j_hat": mat_json(&criteria.j_hat),
        "j_condition": num(criteria.j_condition),
        "b_gic": b_gic.map_or(Value::Null, num_exact),
        "aic": num_exact(aic),
        "gic": gic.map_or(Value::Null, num_exact),
    })
}

fn fit_result_json(result: &FitResult<f64>, ar_order: usize) -> Value {
    let n_obs = result.criteria.n_obs as f64;
    // j_hat = -hessian / N
    let hessian = &result.criteria.j_hat * (-n_obs);
    let neg_hessian = &result.criteria.j_hat * n_obs;
    let natural = result.theta_hat.natural_scale();
    let moduli = if ar_order > 0 {
        let coeffs = &natural[natural.len() - ar_order..];
        Value::Array(ar_root_moduli(coeffs).iter().map(|m| num(*m)).collect())
    } else {
        Value::Null
    };
    json!({
        "converged": result.converged,
        "iterations": result.iterations,
        "gradient_norm": num(result.gradient_norm),
        "theta": params_json(&result.theta_hat),
        "loglik": num(result.loglik),
        "gradient": vec_json(&result.gradient),
        "hessian": mat_json(&hessian),
        "neg_hessian": mat_json(&neg_hessian),
        "ar_root_moduli": moduli,
    })
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub model: ModelArgs,

    #[command(flatten)]
    pub data: DataArgs,

    #[command(flatten)]
    pub optimizer: OptimizerArgs,

    /// Initial estimate, comma-separated; repeat the flag for extra
    /// starts. Defaults to a data-driven start.
    #[arg(long)]
    pub init: Vec<String>,

    /// Scale of the --init values.
    #[arg(long, value_enum, default_value_t = InitScale::Natural)]
    pub init_scale: InitScale,

    /// Diffuse prior variance for the initial state.
    #[arg(long, default_value_t = dkalman::DEFAULT_KAPPA)]
    pub kappa: f64,

    /// Report file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run_fit(args: &FitArgs) -> Result<u8, CliError> {
    let y = ingest_csv(&args.data.data, args.data.log_data)?;
    let builder = args.model.builder();
    // Bad model orders are configuration errors, not fit failures.
    builder
        .build(&default_start(builder.as_ref(), &y))
        .map_err(|e| CliError::config(e.to_string()))?;

    let starts: Vec<ParameterVector<f64>> = if args.init.is_empty() {
        vec![default_start(builder.as_ref(), &y)]
    } else {
        args.init
            .iter()
            .map(|raw| to_working(builder.as_ref(), &parse_init(raw)?, args.init_scale))
            .collect::<Result<_, _>>()?
    };

    let init = FilterInit::diffuse(builder.state_dim(), args.kappa);
    let results = multi_start_fit(
        builder.as_ref(),
        &init,
        &y,
        &starts,
        &args.optimizer.config(),
    )
    .map_err(|e| CliError::numerical(e.to_string()))?;
    let best = &results[0];

    let ar_order = match args.model.model {
        Family::SeasonalAr => args.model.ar_order,
        _ => 0,
    };
    let mut payload = Map::new();
    payload.insert("model".into(), args.model.json());
    payload.insert(
        "data".into(),
        json!({
            "path": args.data.data.display().to_string(),
            "n": y.len(),
            "log_transformed": args.data.log_data,
        }),
    );
    payload.insert("kappa".into(), num(args.kappa));
    payload.insert(
        "starts".into(),
        Value::Array(
            results
                .iter()
                .map(|r| {
                    json!({
                        "theta": params_json(&r.theta_hat),
                        "loglik": num(r.loglik),
                        "converged": r.converged,
                        "iterations": r.iterations,
                        "gradient_norm": num(r.gradient_norm),
                    })
                })
                .collect(),
        ),
    );
    payload.insert("fit".into(), fit_result_json(best, ar_order));
    payload.insert("criteria".into(), criteria_json(&best.criteria));

    write_report(args.out.as_deref(), &envelope("fit", payload))?;
    if best.criteria.b_gic.is_none() {
        eprintln!("warning: J is numerically singular; b_gic and GIC are undefined");
        return Ok(3);
    }
    Ok(0)
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[command(flatten)]
    pub model: ModelArgs,

    #[command(flatten)]
    pub data: DataArgs,

    /// Evaluation point, comma-separated. Defaults to a data-driven
    /// point.
    #[arg(long)]
    pub init: Option<String>,

    /// Scale of the --init values.
    #[arg(long, value_enum, default_value_t = InitScale::Natural)]
    pub init_scale: InitScale,

    /// Diffuse prior variance for the initial state.
    #[arg(long, default_value_t = dkalman::DEFAULT_KAPPA)]
    pub kappa: f64,

    /// Maximum relative error tolerated for the gradient.
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,

    /// Maximum relative error tolerated for the Hessian.
    #[arg(long, default_value_t = 1e-3)]
    pub hessian_tol: f64,

    /// Report file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn max_rel_error(analytic: &[f64], reference: &[f64], floor: f64) -> f64 {
    analytic
        .iter()
        .zip(reference)
        .map(|(a, r)| (a - r).abs() / r.abs().max(floor))
        .fold(0.0, f64::max)
}

pub fn run_gradcheck(args: &GradcheckArgs) -> Result<u8, CliError> {
    let y = ingest_csv(&args.data.data, args.data.log_data)?;
    let builder = args.model.builder();
    let theta = match &args.init {
        Some(raw) => to_working(builder.as_ref(), &parse_init(raw)?, args.init_scale)?,
        None => default_start(builder.as_ref(), &y),
    };
    let init = FilterInit::diffuse(builder.state_dim(), args.kappa);

    let spec = builder
        .build(&theta)
        .map_err(|e| CliError::config(e.to_string()))?;
    let analytic =
        hessian_filter(&spec, &init, &y).map_err(|e| CliError::numerical(e.to_string()))?;
    let hessian = analytic.hessian.as_ref().expect("hessian requested");

    let point = DVector::from_column_slice(theta.values());
    let fd_cfg = FdConfig::default();
    let fd_grad = fd_gradient(
        |t: &DVector<f64>| {
            let s = builder.build_working(t.as_slice())?;
            Ok(filter(&s, &init, &y)?.loglik)
        },
        &point,
        &fd_cfg,
    )
    .map_err(|e| CliError::numerical(e.to_string()))?;
    let fd_hess = fd_hessian(
        |t: &DVector<f64>| {
            let s = builder.build_working(t.as_slice())?;
            Ok(gradient_filter(&s, &init, &y)?.gradient)
        },
        &point,
        &fd_cfg,
    )
    .map_err(|e| CliError::numerical(e.to_string()))?;

    let grad_err = max_rel_error(analytic.gradient.as_slice(), fd_grad.as_slice(), 1e-6);
    let hess_err = max_rel_error(hessian.as_slice(), fd_hess.as_slice(), 1e-5);
    let grad_ok = grad_err < args.tol;
    let hess_ok = hess_err < args.hessian_tol;

    let mut payload = Map::new();
    payload.insert("model".into(), args.model.json());
    payload.insert(
        "data".into(),
        json!({
            "path": args.data.data.display().to_string(),
            "n": y.len(),
            "log_transformed": args.data.log_data,
        }),
    );
    payload.insert("theta".into(), params_json(&theta));
    payload.insert("kappa".into(), num(args.kappa));
    payload.insert("loglik".into(), num(analytic.loglik));
    payload.insert(
        "gradient".into(),
        json!({
            "analytic": vec_json(&analytic.gradient),
            "finite_difference": vec_json(&fd_grad),
            "max_rel_error": num(grad_err),
            "tolerance": num(args.tol),
            "pass": grad_ok,
        }),
    );
    payload.insert(
        "hessian".into(),
        json!({
            "analytic": mat_json(hessian),
            "finite_difference": mat_json(&fd_hess),
            "max_rel_error": num(hess_err),
            "tolerance": num(args.hessian_tol),
            "pass": hess_ok,
        }),
    );
    write_report(args.out.as_deref(), &envelope("gradcheck", payload))?;
    Ok(if grad_ok && hess_ok { 0 } else { 1 })
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,

    /// Model parameters, comma-separated.
    #[arg(long)]
    pub init: String,

    /// Scale of the --init values.
    #[arg(long, value_enum, default_value_t = InitScale::Natural)]
    pub init_scale: InitScale,

    /// Number of observations to draw.
    #[arg(long, default_value_t = 200)]
    pub n: usize,

    /// RNG seed; identical seeds give identical series.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Variance of the initial-state draw (0 starts exactly at zero).
    #[arg(long, default_value_t = 0.0)]
    pub kappa: f64,

    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run_simulate(args: &SimulateArgs) -> Result<u8, CliError> {
    let builder = args.model.builder();
    let theta = to_working(builder.as_ref(), &parse_init(&args.init)?, args.init_scale)?;
    let spec = builder
        .build(&theta)
        .map_err(|e| CliError::config(e.to_string()))?;
    if args.n == 0 {
        return Err(CliError::config("simulation length must be at least 1"));
    }
    let init = FilterInit::diffuse(spec.state_dim, args.kappa);
    let y = simulate(&spec, &init, args.n, args.seed)
        .map_err(|e| CliError::numerical(e.to_string()))?;

    let mut file = std::fs::File::create(&args.out)
        .map_err(|e| CliError::config(format!("cannot write {}: {e}", args.out.display())))?;
    let mut text = String::from("value\n");
    for v in y.values() {
        text.push_str(&format!("{v}\n"));
    }
    file.write_all(text.as_bytes())
        .map_err(|e| CliError::config(format!("cannot write {}: {e}", args.out.display())))?;
    eprintln!("wrote {} observations to {}", y.len(), args.out.display());
    Ok(0)
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub data: DataArgs,

    #[command(flatten)]
    pub optimizer: OptimizerArgs,

    /// Seasonal period for the seasonal candidates.
    #[arg(long, default_value_t = 12)]
    pub period: usize,

    /// Largest AR order in the sweep.
    #[arg(long, default_value_t = 3)]
    pub max_ar: usize,

    /// Diffuse prior variance for the initial state.
    #[arg(long, default_value_t = dkalman::DEFAULT_KAPPA)]
    pub kappa: f64,

    /// Report file; stdout when omitted (the text table then goes to
    /// stderr to keep stdout valid JSON).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

struct Candidate {
    label: String,
    orders: (usize, usize, usize),
    builder: Builder,
}

struct FittedCandidate {
    label: String,
    orders: (usize, usize, usize),
    result: FitResult<f64>,
}

fn candidates(period: usize, max_ar: usize) -> Vec<Candidate> {
    let mut list: Vec<Candidate> = vec![
        Candidate {
            label: "(1,0,0)".into(),
            orders: (1, 0, 0),
            builder: Box::new(TrendConfig { order: 1 }),
        },
        Candidate {
            label: "(2,0,0)".into(),
            orders: (2, 0, 0),
            builder: Box::new(TrendConfig { order: 2 }),
        },
        Candidate {
            label: "(2,1,0)".into(),
            orders: (2, 1, 0),
            builder: Box::new(SeasonalConfig::new(2, period)),
        },
    ];
    for m3 in 1..=max_ar {
        list.push(Candidate {
            label: format!("(2,1,{m3})"),
            orders: (2, 1, m3),
            builder: Box::new(SeasonalArConfig::new(SeasonalConfig::new(2, period), m3)),
        });
    }
    list
}

fn comparison_table(rows: &[&FittedCandidate]) -> String {
    let mut text = String::from(
        " m1 m2 m3    log-likelihood  b_AIC      b_GIC            AIC            GIC\n",
    );
    for cand in rows {
        let (m1, m2, m3) = cand.orders;
        let c = &cand.result.criteria;
        let loglik = sig12(c.loglik);
        let p = c.param_dim;
        let aic = -2.0 * loglik + 2.0 * p as f64;
        let (b_txt, gic_txt) = match c.b_gic.map(sig12) {
            Some(b) => (
                format!("{b:10.4}"),
                format!("{:14.4}", -2.0 * loglik + 2.0 * b),
            ),
            None => (format!("{:>10}", "undef"), format!("{:>14}", "undef")),
        };
        text.push_str(&format!(
            " {m1:2} {m2:2} {m3:2}  {loglik:16.4}  {p:5} {b_txt} {aic:14.4} {gic_txt}\n"
        ));
    }
    text
}

pub fn run_compare(args: &CompareArgs) -> Result<u8, CliError> {
    if args.period < 2 {
        return Err(CliError::config(format!(
            "seasonal period must be at least 2, got {}",
            args.period
        )));
    }
    let y = ingest_csv(&args.data.data, args.data.log_data)?;
    let opt_cfg = args.optimizer.config();

    let mut fitted: Vec<FittedCandidate> = Vec::new();
    let mut failures: Vec<Value> = Vec::new();
    for cand in candidates(args.period, args.max_ar) {
        let builder = cand.builder.as_ref();
        let init = FilterInit::diffuse(builder.state_dim(), args.kappa);
        let starts = vec![default_start(builder, &y), alternative_start(builder, &y)];
        match multi_start_fit(builder, &init, &y, &starts, &opt_cfg) {
            Ok(results) => fitted.push(FittedCandidate {
                label: cand.label,
                orders: cand.orders,
                result: results.into_iter().next().expect("non-empty results"),
            }),
            Err(e) => failures.push(json!({
                "label": cand.label,
                "error": e.to_string(),
            })),
        }
    }
    if fitted.is_empty() {
        return Err(CliError::numerical("every candidate model failed to fit"));
    }

    let labelled: Vec<(String, CriteriaReport<f64>)> = fitted
        .iter()
        .map(|cand| (cand.label.clone(), cand.result.criteria.clone()))
        .collect();
    let ranked = compare_models(&labelled);

    // Reorder the fit details to the ranked order for the table and rows.
    let ordered: Vec<&FittedCandidate> = ranked
        .iter()
        .map(|row| {
            fitted
                .iter()
                .find(|cand| cand.label == row.label)
                .expect("ranked label came from fitted set")
        })
        .collect();

    let rows_json: Vec<Value> = ordered
        .iter()
        .map(|cand| {
            let (m1, m2, m3) = cand.orders;
            let criteria = &cand.result.criteria;
            let loglik = sig12(criteria.loglik);
            let b_gic = criteria.b_gic.map(sig12);
            let p = criteria.param_dim;
            json!({
                "label": cand.label,
                "m1": m1,
                "m2": m2,
                "m3": m3,
                "loglik": num_exact(loglik),
                "p": p,
                "b_aic": p,
                "b_gic": b_gic.map_or(Value::Null, num_exact),
                "aic": num_exact(-2.0 * loglik + 2.0 * p as f64),
                "gic": b_gic.map_or(Value::Null, |b| num_exact(-2.0 * loglik + 2.0 * b)),
                "converged": cand.result.converged,
            })
        })
        .collect();

    let table = comparison_table(&ordered);
    let mut payload = Map::new();
    payload.insert(
        "data".into(),
        json!({
            "path": args.data.data.display().to_string(),
            "n": y.len(),
            "log_transformed": args.data.log_data,
        }),
    );
    payload.insert("kappa".into(), num(args.kappa));
    payload.insert("rows".into(), Value::Array(rows_json));
    payload.insert("failures".into(), Value::Array(failures));
    payload.insert("best".into(), json!(ranked[0].label));

    write_report(args.out.as_deref(), &envelope("compare", payload))?;
    if args.out.is_some() {
        print!("{table}");
    } else {
        eprint!("{table}");
    }
    Ok(0)
}
