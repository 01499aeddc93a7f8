//! Capacity sweep over the erasure-family example.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::{
    blahut_arimoto, erasure_quantum_capacity, induced_classical_channel, max_coherent_information, OptimizerConfig,
};
use crate::channel::{Channel, State};
use crate::error::{Error, Result};
use crate::operator::{LabeledOperator, SystemLabel, DEFAULT_TOL};
use crate::process::B_I;
use crate::protocol::DEFAULT_DIMENSION_CAP;
use crate::reduction::{example_process, routing_channel, run_pipeline, ALICE_ANCILLA};

pub const CSV_HEADER: &str =
    "p,q_cap_analytic,q_cap_numeric_ab,q_cap_numeric_ba,classical_cap,erasure_residual,restarts,seed";

/// Convergence tolerance handed to the optimizer and Blahut–Arimoto.
const SOLVER_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SweepDirection {
    Ab,
    Ba,
    Both,
}

impl SweepDirection {
    fn ab(self) -> bool {
        matches!(self, Self::Ab | Self::Both)
    }

    fn ba(self) -> bool {
        matches!(self, Self::Ba | Self::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub dim: usize,
    pub p_grid: Vec<f64>,
    pub restarts: usize,
    /// Tolerance for the pipeline's residual checks.
    pub tol: f64,
    pub seed: u64,
    pub direction: SweepDirection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub p: f64,
    pub q_cap_analytic: f64,
    pub q_cap_numeric_ab: Option<f64>,
    pub q_cap_numeric_ba: Option<f64>,
    pub classical_cap: f64,
    pub erasure_residual: f64,
    pub restarts: usize,
    pub seed: u64,
}

/// Parses `a:b:step` into the points `a, a + step, …` up to `b` inclusive.
/// Points are rounded to 12 decimals so `0:1:0.1` ends exactly at 1.
pub fn parse_p_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [a, b, step] = parts.as_slice() else {
        return Err(Error::InvalidArgument(format!("p-grid `{spec}` is not a:b:step")));
    };
    let parse = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::InvalidArgument(format!("p-grid `{spec}`: `{s}` is not a number")))
    };
    let (a, b, step) = (parse(a)?, parse(b)?, parse(step)?);
    if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) || a > b {
        return Err(Error::InvalidArgument(format!(
            "p-grid `{spec}` must satisfy 0 <= a <= b <= 1"
        )));
    }
    if step.is_nan() || step <= 0.0 {
        return Err(Error::InvalidArgument(format!("p-grid `{spec}` needs a positive step")));
    }
    let count = ((b - a) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|k| ((a + k as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

/// Formats like C's `%.12g`.
pub fn format_g12(x: f64) -> String {
    const P: i32 = 12;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..P).contains(&exp) {
        let fixed = format!("{:.*}", (P - 1 - exp) as usize, x);
        trim_zeros(&fixed).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// One grid point: reduction, quantum estimates in the requested directions
/// and the classical capacity of the reduced channel.
pub fn sweep_point(cfg: &SweepConfig, p: f64) -> Result<SweepRow> {
    let d = cfg.dim;
    let dec = example_process(p, d)?;
    let alice = routing_channel(d + 1, d);
    let opt = OptimizerConfig::new(cfg.restarts, SOLVER_TOL, cfg.seed);

    let forward = run_pipeline(&dec, &alice, cfg.tol)?;
    let q_ab = if cfg.direction.ab() {
        Some(max_coherent_information(&forward.reduced, &opt)?.value)
    } else {
        None
    };
    let q_ba = if cfg.direction.ba() {
        let backward = run_pipeline(&dec.swap_roles(), &alice, cfg.tol)?;
        Some(max_coherent_information(&backward.reduced, &opt)?.value)
    } else {
        None
    };

    Ok(SweepRow {
        p,
        q_cap_analytic: erasure_quantum_capacity(p, d)?,
        q_cap_numeric_ab: q_ab,
        q_cap_numeric_ba: q_ba,
        classical_cap: classical_capacity(&forward.reduced, d)?,
        erasure_residual: forward.report.erasure_residual,
        restarts: cfg.restarts,
        seed: cfg.seed,
    })
}

/// Blahut–Arimoto on `reduced` with basis inputs on `A_I'` and a basis
/// measurement on `B_I`.
pub fn classical_capacity(reduced: &Channel, d: usize) -> Result<f64> {
    let inputs = (0..d)
        .map(|k| State::basis(SystemLabel::new(ALICE_ANCILLA, d), k))
        .collect::<Result<Vec<_>>>()?;
    let out = reduced
        .choi()
        .label(B_I)
        .cloned()
        .ok_or_else(|| Error::UnknownLabel(B_I.into()))?;
    let povm = (0..out.dim)
        .map(|k| State::basis(out.clone(), k).map(State::into_operator))
        .collect::<Result<Vec<LabeledOperator>>>()?;
    let p = induced_classical_channel(reduced, &inputs, &povm, DEFAULT_TOL)?;
    Ok(blahut_arimoto(&p, SOLVER_TOL).capacity)
}

/// All grid points, in grid order.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    if cfg.restarts == 0 {
        return Err(Error::InvalidArgument("restarts must be at least 1".into()));
    }
    if cfg.tol.is_nan() || cfg.tol <= 0.0 {
        return Err(Error::InvalidArgument("tol must be positive".into()));
    }
    let total = (cfg.dim + 1) * (cfg.dim + 1) * cfg.dim * cfg.dim;
    if total > DEFAULT_DIMENSION_CAP {
        return Err(Error::DimensionCap {
            total,
            cap: DEFAULT_DIMENSION_CAP,
        });
    }
    cfg.p_grid.par_iter().map(|&p| sweep_point(cfg, p)).collect()
}

/// CSV with header; a direction that was not run leaves its column empty.
pub fn to_csv(rows: &[SweepRow]) -> String {
    let opt = |v: Option<f64>| v.map(format_g12).unwrap_or_default();
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            format_g12(r.p),
            format_g12(r.q_cap_analytic),
            opt(r.q_cap_numeric_ab),
            opt(r.q_cap_numeric_ba),
            format_g12(r.classical_cap),
            format_g12(r.erasure_residual),
            r.restarts,
            r.seed
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let g = parse_p_grid("0:1:0.1").unwrap();
        assert_eq!(g.len(), 11);
        assert_eq!(g[3], 0.3);
        assert_eq!(g[10], 1.0);
        assert_eq!(parse_p_grid("0.5:0.5:0.1").unwrap(), vec![0.5]);
        assert_eq!(parse_p_grid("0:1:0.25").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        for bad in ["0:1", "0:2:0.1", "0.6:0.5:0.1", "0:1:0", "a:1:0.1", "-0.1:1:0.1"] {
            assert!(parse_p_grid(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn g12_matches_printf() {
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (0.1, "0.1"),
            (-0.5, "-0.5"),
            (1.0 / 3.0, "0.333333333333"),
            (2.0 / 3.0, "0.666666666667"),
            (1e-14, "1e-14"),
            (1.5e-5, "1.5e-05"),
            (0.0001, "0.0001"),
            (123456789012.0, "123456789012"),
            (1234567890123.0, "1.23456789012e+12"),
            (1.584962500721156, "1.58496250072"),
        ];
        for (x, s) in cases {
            assert_eq!(format_g12(x), s, "{x}");
        }
    }

    #[test]
    fn single_point_rows() {
        let cfg = SweepConfig {
            dim: 2,
            p_grid: vec![0.25, 0.75],
            restarts: 4,
            tol: 1e-9,
            seed: 7,
            direction: SweepDirection::Both,
        };
        let rows = run_sweep(&cfg).unwrap();
        let lo = &rows[0];
        assert!(lo.q_cap_numeric_ab.unwrap() <= 1e-6);
        assert!((lo.q_cap_numeric_ba.unwrap() - 0.5).abs() < 1e-3);
        assert!((lo.classical_cap - 0.25).abs() < 1e-6);
        let hi = &rows[1];
        assert!((hi.q_cap_numeric_ab.unwrap() - 0.5).abs() < 1e-3);
        assert!(hi.q_cap_numeric_ba.unwrap() <= 1e-6);
        assert!(hi.erasure_residual <= 1e-9);
        let csv = to_csv(&rows);
        assert!(csv.starts_with(CSV_HEADER));
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn missing_direction_is_empty() {
        let cfg = SweepConfig {
            dim: 2,
            p_grid: vec![1.0],
            restarts: 2,
            tol: 1e-9,
            seed: 1,
            direction: SweepDirection::Ab,
        };
        let csv = to_csv(&run_sweep(&cfg).unwrap());
        let row = csv.lines().nth(1).unwrap();
        assert_eq!(row.split(',').nth(3), Some(""));
    }

    #[test]
    fn oversized_dim() {
        let cfg = SweepConfig {
            dim: 9,
            p_grid: vec![0.5],
            restarts: 1,
            tol: 1e-9,
            seed: 0,
            direction: SweepDirection::Ab,
        };
        assert!(matches!(run_sweep(&cfg), Err(Error::DimensionCap { .. })));
    }
}
