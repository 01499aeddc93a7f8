//! Command-line front end. Exit codes: 0 pass, 1 check failure, 2 input
//! error.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::capacity::{blahut_arimoto, erasure_classical_capacity, induced_classical_channel, StochasticMatrix};
use crate::channel::{Channel, State};
use crate::error::{Error, Result};
use crate::operator::LabeledOperator;
use crate::process::{CausalDecomposition, ProcessMatrix};
use crate::protocol::{simulate_protocol, ProtocolSpec};
use crate::reduction::{example_process, routing_channel, run_pipeline};
use crate::sweep::{self, format_g12, parse_p_grid, SweepConfig, SweepDirection};

#[derive(Debug, Parser)]
#[command(
    name = "causalcap",
    version,
    about = "Capacities of causally separable process matrices"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// JSON input file.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    #[arg(long, global = true, default_value_t = 2)]
    pub dim: usize,

    /// Grid of mixing probabilities as `a:b:step`.
    #[arg(long = "p-grid", global = true, default_value = "0:1:0.1")]
    pub p_grid: String,

    #[arg(long, global = true, default_value_t = 32)]
    pub restarts: usize,

    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,

    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[arg(long, global = true, value_enum, default_value = "ab")]
    pub direction: SweepDirection,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Residuals of a process or of a causal decomposition.
    Validate,
    /// Contract Alice's channel into a decomposition and check the erasure
    /// reduction.
    Contract,
    /// Quantum and classical capacities of the erasure-family example.
    TheoremSweep,
    /// Entanglement-transmission fidelity of a code.
    ProtocolSim,
    /// Blahut–Arimoto on a stochastic matrix or an induced classical channel.
    ClassicalCap,
}

/// What a successful run prints and how it exits.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: u8,
    pub text: String,
}

impl Outcome {
    fn json(pass: bool, value: Value) -> Self {
        Self {
            code: if pass { 0 } else { 1 },
            text: serde_json::to_string_pretty(&value).expect("serializable") + "\n",
        }
    }
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    if cli.tol.is_nan() || cli.tol <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "--tol must be positive, got {}",
            cli.tol
        )));
    }
    let outcome = match cli.command {
        Command::Validate => validate(cli)?,
        Command::Contract => contract(cli)?,
        Command::TheoremSweep => theorem_sweep(cli)?,
        Command::ProtocolSim => protocol_sim(cli)?,
        Command::ClassicalCap => classical_cap(cli)?,
    };
    match &cli.output {
        Some(path) => {
            fs::write(path, &outcome.text)?;
            Ok(Outcome {
                code: outcome.code,
                text: String::new(),
            })
        }
        None => Ok(outcome),
    }
}

fn input_text(cli: &Cli) -> Result<String> {
    let path = cli
        .input
        .as_deref()
        .ok_or_else(|| Error::InvalidArgument("--input is required".into()))?;
    read(path)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))
}

/// Syntax errors and shape errors both carry serde_json's line and column.
fn parse<T: DeserializeOwned>(text: &str) -> Result<T> {
    Ok(serde_json::from_str(text)?)
}

fn keys(text: &str) -> Result<Value> {
    parse::<Value>(text)
}

fn seed(cli: &Cli) -> Result<u64> {
    cli.seed
        .ok_or_else(|| Error::InvalidArgument("--seed is required for this command".into()))
}

fn validate(cli: &Cli) -> Result<Outcome> {
    let text = input_text(cli)?;
    if keys(&text)?.get("w_ab").is_some() {
        let dec: CausalDecomposition = parse(&text)?;
        let r = dec.validate();
        let pass = r.passes(cli.tol);
        let part = |v: &crate::process::ValidityReport| json!({ "residuals": v, "violations": v.violations(cli.tol) });
        return Ok(Outcome::json(
            pass,
            json!({
                "kind": "decomposition",
                "pass": pass,
                "tol": cli.tol,
                "p": dec.p,
                "w_ab": part(&r.w_ab),
                "w_ba": part(&r.w_ba),
                "mixture": part(&r.mixture),
                "order_ab": r.order_ab,
                "order_ba": r.order_ba,
            }),
        ));
    }
    let w: ProcessMatrix = parse(&text)?;
    let r = w.validate();
    let pass = r.passes(cli.tol);
    Ok(Outcome::json(
        pass,
        json!({
            "kind": "process",
            "pass": pass,
            "tol": cli.tol,
            "residuals": r,
            "violations": r.violations(cli.tol),
        }),
    ))
}

#[derive(Deserialize)]
struct ContractInput {
    dec: CausalDecomposition,
    #[serde(default)]
    alice: Option<Channel>,
}

fn contract(cli: &Cli) -> Result<Outcome> {
    let text = input_text(cli)?;
    let input: ContractInput = if keys(&text)?.get("w_ab").is_some() {
        ContractInput {
            dec: parse(&text)?,
            alice: None,
        }
    } else {
        parse(&text)?
    };
    let dec = match cli.direction {
        SweepDirection::Ab => input.dec,
        SweepDirection::Ba => input.dec.swap_roles(),
        SweepDirection::Both => {
            return Err(Error::InvalidArgument("contract takes --direction ab or ba".into()));
        }
    };
    let dims = dec.dims();
    let alice = input.alice.unwrap_or_else(|| routing_channel(dims.a_i, dims.a_o));
    let red = run_pipeline(&dec, &alice, cli.tol)?;
    let pass = red.report.passes(cli.tol);
    Ok(Outcome::json(
        pass,
        json!({
            "pass": pass,
            "tol": cli.tol,
            "report": red.report,
            "effective": red.effective,
        }),
    ))
}

fn theorem_sweep(cli: &Cli) -> Result<Outcome> {
    let cfg = SweepConfig {
        dim: cli.dim,
        p_grid: parse_p_grid(&cli.p_grid)?,
        restarts: cli.restarts,
        tol: cli.tol,
        seed: seed(cli)?,
        direction: cli.direction,
    };
    let rows = sweep::run_sweep(&cfg)?;
    let pass = rows.iter().all(|r| r.erasure_residual <= cli.tol);
    Ok(Outcome {
        code: if pass { 0 } else { 1 },
        text: sweep::to_csv(&rows),
    })
}

fn protocol_sim(cli: &Cli) -> Result<Outcome> {
    let spec: ProtocolSpec = parse(&input_text(cli)?)?;
    if !(1..=2).contains(&spec.n) {
        return Err(Error::InvalidArgument(format!(
            "protocol-sim supports n = 1 or 2, got {}",
            spec.n
        )));
    }
    let out = simulate_protocol(&spec)?;
    Ok(Outcome::json(
        out.success,
        json!({
            "n": spec.n,
            "rate": spec.rate(),
            "fidelity": out.fidelity,
            "threshold": 1.0 - spec.epsilon,
            "pass": out.success,
        }),
    ))
}

/// Object form of the `classical-cap` input; the other form is a bare
/// row-stochastic matrix.
#[derive(Deserialize)]
struct InducedInput {
    channel: Channel,
    inputs: Vec<State>,
    povm: Vec<LabeledOperator>,
}

/// With `--input`, the capacity of the given channel. Without, a CSV of the
/// example's classical capacity over `--p-grid` at `--dim`.
fn classical_cap(cli: &Cli) -> Result<Outcome> {
    let Some(path) = cli.input.as_deref() else {
        let mut text = String::from("p,classical_cap,analytic\n");
        let mut pass = true;
        for p in parse_p_grid(&cli.p_grid)? {
            let dec = example_process(p, cli.dim)?;
            let red = run_pipeline(&dec, &routing_channel(cli.dim + 1, cli.dim), cli.tol)?;
            let c = sweep::classical_capacity(&red.reduced, cli.dim)?;
            let exact = erasure_classical_capacity(p, cli.dim)?;
            pass &= (c - exact).abs() <= 1e-6;
            text.push_str(&format!("{},{},{}\n", format_g12(p), format_g12(c), format_g12(exact)));
        }
        return Ok(Outcome {
            code: if pass { 0 } else { 1 },
            text,
        });
    };
    let text = read(path)?;
    let matrix = if keys(&text)?.is_array() {
        parse::<StochasticMatrix>(&text)?
    } else {
        let input: InducedInput = parse(&text)?;
        induced_classical_channel(&input.channel, &input.inputs, &input.povm, cli.tol)?
    };
    let ba = blahut_arimoto(&matrix, cli.tol);
    Ok(Outcome::json(
        true,
        json!({ "pass": true, "tol": cli.tol, "result": ba }),
    ))
}
