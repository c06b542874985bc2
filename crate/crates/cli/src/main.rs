//! `regimecalc` command-line front end.
//!
//! Exit codes: 0 success or identified, 2 not identified / not defined /
//! not estimable, 3 identified and oracle answers disagree, 1 any error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use regimecalc::graph::to_dot;
use regimecalc::identify::{compare_with_oracle, oracle, OracleResult};
use regimecalc::io::{
    comparison_to_json, dag_from_json, model_from_json, oracle_to_json, plan_from_json, query_from_json, result_to_json,
};
use regimecalc::model::{fit_cpts, sample};
use regimecalc::regimes::surgery;
use regimecalc::{
    identify, CausalQuery, Dag, Dataset, Error, IdentificationResult, Model, ObservedDistribution, Variable,
    COMPARISON_TOL,
};

#[derive(Parser)]
#[command(
    name = "regimecalc",
    version,
    about = "Exact identification of causal effects under regimes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test A ⊥ B | C in the model graph, optionally after surgery by a plan.
    Dsep(DsepArgs),
    /// Decide identifiability of a query.
    Check(QueryArgs),
    /// Compute an effect from observed data, from the full model, or both.
    Effect(EffectArgs),
    /// Ground-truth answer from the full model.
    Oracle(QueryArgs),
    /// Identified answer next to the oracle answer.
    Compare(QueryArgs),
    /// Forward-sample the model to CSV.
    Simulate(SimulateArgs),
    /// Plug-in estimate of a query from a CSV sample.
    Estimate(EstimateArgs),
    /// Graphviz rendering of the model graph.
    ExportDot(DotArgs),
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Json,
    Text,
    Dot,
    Csv,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Mode {
    Identified,
    Oracle,
    Both,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct QueryArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    query: PathBuf,
    /// Overrides the query's own cap on role-set size.
    #[arg(long)]
    max_adjust_size: Option<usize>,
}

#[derive(Args)]
struct EffectArgs {
    #[command(flatten)]
    q: QueryArgs,
    #[arg(long, value_enum, default_value = "identified")]
    mode: Mode,
}

#[derive(Args)]
struct DsepArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_delimiter = ',', required = true)]
    a: Vec<String>,
    #[arg(long, value_delimiter = ',', required = true)]
    b: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    given: Vec<String>,
    #[arg(long)]
    plan: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    include_latent: bool,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    q: QueryArgs,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    smoothing: f64,
}

#[derive(Args)]
struct DotArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    plan: Option<PathBuf>,
}

struct Output {
    body: String,
    code: u8,
}

impl Output {
    fn ok(body: String) -> Self {
        Output { body, code: 0 }
    }
}

fn read(p: &Path) -> Result<String, Error> {
    Ok(fs::read_to_string(p)?)
}

fn tolerance() -> Result<f64, Error> {
    match std::env::var("REGIMECALC_TOL") {
        Err(_) => Ok(COMPARISON_TOL),
        Ok(s) => match s.trim().parse::<f64>() {
            Ok(t) if t > 0.0 && t.is_finite() => Ok(t),
            _ => Err(Error::Format(format!(
                "REGIMECALC_TOL must be a positive number, got `{s}`"
            ))),
        },
    }
}

fn load_query(a: &QueryArgs, vars: &[Variable]) -> Result<CausalQuery, Error> {
    let mut q = query_from_json(&read(&a.query)?, vars)?;
    if let Some(m) = a.max_adjust_size {
        q.max_adjust_size = m;
    }
    Ok(q)
}

fn status_code(r: &IdentificationResult) -> u8 {
    if r.identified() {
        0
    } else {
        2
    }
}

fn render(v: &Value, format: Format) -> String {
    match format {
        Format::Text => text(v, ""),
        _ => serde_json::to_string_pretty(v).expect("values serialize") + "\n",
    }
}

/// Flat `key: value` lines, nested keys joined with dots.
fn text(v: &Value, prefix: &str) -> String {
    match v {
        Value::Object(m) => m
            .iter()
            .filter(|(_, x)| !x.is_null())
            .map(|(k, x)| {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                text(x, &key)
            })
            .collect(),
        other => format!("{prefix}: {other}\n"),
    }
}

fn cmd_dsep(a: &DsepArgs) -> Result<Output, Error> {
    let (mut g, vars) = dag_from_json(&read(&a.common.model)?)?;
    if let Some(p) = &a.plan {
        g = surgery(&g, &plan_from_json(&read(p)?, &vars)?)?;
    }
    let sep = g.d_separated(&a.a, &a.b, &a.given)?;
    let path = g.open_path(&a.a, &a.b, &a.given)?;
    let v = json!({"d_separated": sep, "open_path": path});
    Ok(Output::ok(render(&v, a.common.format)))
}

fn cmd_check(a: &QueryArgs) -> Result<Output, Error> {
    let (obs, q) = observed(a)?;
    let r = identify(&obs, &q)?;
    Ok(Output {
        body: render(&result_to_json(&r), a.common.format),
        code: status_code(&r),
    })
}

fn observed(a: &QueryArgs) -> Result<(ObservedDistribution, CausalQuery), Error> {
    let m = model_from_json(&read(&a.common.model)?)?;
    let q = load_query(a, m.variables())?;
    Ok((ObservedDistribution::from_model(&m), q))
}

/// The oracle, with an undefined natural effect mapped to exit 2.
fn oracle_or_undefined(m: &Model, q: &CausalQuery) -> Result<Result<OracleResult, String>, Error> {
    match oracle(m, q, None) {
        Ok(o) => Ok(Ok(o)),
        Err(Error::NotDefined(msg)) => Ok(Err(msg)),
        Err(e) => Err(e),
    }
}

fn cmd_oracle(a: &QueryArgs) -> Result<Output, Error> {
    let m = model_from_json(&read(&a.common.model)?)?;
    let q = load_query(a, m.variables())?;
    Ok(match oracle_or_undefined(&m, &q)? {
        Ok(o) => Output::ok(render(&oracle_to_json(&o), a.common.format)),
        Err(msg) => Output {
            body: render(&json!({"status": "not_defined", "reason": msg}), a.common.format),
            code: 2,
        },
    })
}

fn cmd_effect(a: &EffectArgs) -> Result<Output, Error> {
    let fmt = a.q.common.format;
    match a.mode {
        Mode::Identified => cmd_check(&a.q),
        Mode::Oracle => cmd_oracle(&a.q),
        Mode::Both => {
            let tol = tolerance()?;
            let m = model_from_json(&read(&a.q.common.model)?)?;
            let q = load_query(&a.q, m.variables())?;
            let c = compare_with_oracle(&m, &q)?;
            let mut v = comparison_to_json(&c);
            v["tolerance"] = json!(tol);
            let code = match c.max_distribution_deviation.zip(c.effect_deviation) {
                None => 2,
                Some((d, e)) if d.max(e) > tol => 3,
                Some(_) => 0,
            };
            Ok(Output {
                body: render(&v, fmt),
                code,
            })
        }
    }
}

fn cmd_compare(a: &QueryArgs) -> Result<Output, Error> {
    cmd_effect(&EffectArgs {
        q: QueryArgs {
            common: Common {
                model: a.common.model.clone(),
                out: None,
                format: a.common.format,
            },
            query: a.query.clone(),
            max_adjust_size: a.max_adjust_size,
        },
        mode: Mode::Both,
    })
}

fn cmd_simulate(a: &SimulateArgs) -> Result<Output, Error> {
    let m = model_from_json(&read(&a.common.model)?)?;
    let data = sample(&m, a.n, a.seed)?;
    let mut buf = Vec::new();
    data.write_csv(&mut buf, a.include_latent)?;
    Ok(Output::ok(String::from_utf8(buf).expect("csv output is utf-8")))
}

/// Observed law implied by the data: the fitted CPTs when every node is
/// observed, else the saturated empirical joint of the observed columns.
fn estimated(dag: &Dag, vars: &[Variable], data: &Dataset, smoothing: f64) -> Result<ObservedDistribution, Error> {
    if vars.iter().any(|v| v.latent) {
        return ObservedDistribution::from_dataset(dag, vars, data, smoothing);
    }
    let fitted = fit_cpts(data, dag, vars, smoothing)?;
    if let Some(w) = fitted.warnings.first() {
        if smoothing == 0.0 {
            return Err(Error::PositivityViolation(w.clone(), 0.0));
        }
    }
    Ok(ObservedDistribution::from_model(&fitted.model))
}

fn cmd_estimate(a: &EstimateArgs) -> Result<Output, Error> {
    let text = read(&a.q.common.model)?;
    let (dag, vars) = dag_from_json(&text)?;
    let has_cpts = serde_json::from_str::<Value>(&text)?.get("cpts").is_some();
    let q = load_query(&a.q, &vars)?;
    let data = Dataset::read_csv(fs::File::open(&a.data)?)?;
    let obs = estimated(&dag, &vars, &data, a.smoothing)?;
    let r = identify(&obs, &q)?;
    let mut v = result_to_json(&r);
    v["n"] = json!(data.len());
    if !r.identified() {
        v["reason"] = json!("not estimable from this data");
    } else if has_cpts {
        let m = model_from_json(&text)?;
        let truth = oracle(&m, &q, r.roles.get("W").map(|w| w.as_slice()))?.value;
        v["truth"] = json!(truth);
        v["abs_error"] = json!((r.value.expect("identified") - truth).abs());
    }
    Ok(Output {
        body: render(&v, a.q.common.format),
        code: status_code(&r),
    })
}

fn cmd_dot(a: &DotArgs) -> Result<Output, Error> {
    let (mut g, vars) = dag_from_json(&read(&a.common.model)?)?;
    if let Some(p) = &a.plan {
        g = surgery(&g, &plan_from_json(&read(p)?, &vars)?)?;
    }
    Ok(Output::ok(to_dot(&g)))
}

fn run(cli: &Cli) -> Result<(Output, Option<&Path>), Error> {
    let (out, path) = match &cli.command {
        Command::Dsep(a) => (cmd_dsep(a)?, &a.common.out),
        Command::Check(a) => (cmd_check(a)?, &a.common.out),
        Command::Effect(a) => (cmd_effect(a)?, &a.q.common.out),
        Command::Oracle(a) => (cmd_oracle(a)?, &a.common.out),
        Command::Compare(a) => (cmd_compare(a)?, &a.common.out),
        Command::Simulate(a) => (cmd_simulate(a)?, &a.common.out),
        Command::Estimate(a) => (cmd_estimate(a)?, &a.q.common.out),
        Command::ExportDot(a) => (cmd_dot(a)?, &a.common.out),
    };
    Ok((out, path.as_deref()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((out, path)) => {
            let written = match path {
                Some(p) => fs::write(p, &out.body),
                None => std::io::stdout().write_all(out.body.as_bytes()),
            };
            if let Err(e) = written {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
            ExitCode::from(out.code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_flattens_nested_keys_and_drops_nulls() {
        let v = json!({"a": 1, "b": {"c": [1, 2], "d": null}, "e": "x"});
        assert_eq!(text(&v, ""), "a: 1\nb.c: [1,2]\ne: \"x\"\n");
    }

    #[test]
    fn json_output_ends_with_newline() {
        assert_eq!(render(&json!({"k": true}), Format::Json), "{\n  \"k\": true\n}\n");
    }

    #[test]
    fn clap_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
