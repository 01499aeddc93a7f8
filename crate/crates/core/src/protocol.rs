//! Entanglement transmission through `n` copies of a process.
//!
//! Copy `i` (1-based) is turned into a channel `N_i = W * (A_i ⊗ B_i)` on the
//! parties' ancillas, whose labels then get the suffix `.i`. The encoding
//! `E_A`, Bob's initial state `E_B` and the decoding `D_B` are given with the
//! suffixed names. The final state is
//!
//! ```text
//! ρ^{C B_D} = (N_1 ⊗ … ⊗ N_n) * E_A * E_B * D_B * τ^{C A_E}
//! ```
//!
//! and is scored by fidelity against `τ` with `A_E` carried to `B_D`. When
//! `B_D` is larger than `A_E`, `τ` is embedded into the first levels of
//! `B_D`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{fidelity, Channel, State};
use crate::error::{Error, Result};
use crate::operator::{CMatrix, LabeledOperator, SystemLabel};
use crate::process::{CausalDecomposition, A_O};

/// Largest total dimension the simulator will contract by default.
pub const DEFAULT_DIMENSION_CAP: usize = 1 << 12;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProtocolSpec {
    pub n: usize,
    pub dec: CausalDecomposition,
    /// One channel per copy: reads `A_I` and ancilla inputs, writes `A_O`.
    /// Any other output must be trivial.
    pub alice: Vec<Channel>,
    /// One channel per copy: reads `B_I`, writes `B_O` and ancilla outputs.
    pub bob: Vec<Channel>,
    pub e_a: Channel,
    pub e_b: State,
    pub d_b: Channel,
    pub tau: State,
    /// Target error: the run succeeds when `F ≥ 1 − epsilon`.
    #[serde(default)]
    pub epsilon: f64,
}

#[derive(Debug, Clone)]
pub struct ProtocolOutcome {
    pub rho: State,
    pub target: State,
    pub fidelity: f64,
    pub success: bool,
}

impl ProtocolSpec {
    /// Rate `log₂(m) / n` with `m` the dimension of the transmitted share.
    pub fn rate(&self) -> f64 {
        (self.e_a.input_dim() as f64).log2() / self.n as f64
    }
}

fn suffix_channel(ch: &Channel, suffix: &str) -> Result<Channel> {
    let renamed: Vec<(String, String)> = ch
        .inputs()
        .iter()
        .chain(ch.outputs())
        .map(|n| (n.clone(), format!("{n}{suffix}")))
        .collect();
    let pairs: Vec<(&str, &str)> = renamed.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    ch.relabel(&pairs)
}

/// Alice's channel with its trivial outgoing ancillas traced away.
fn alice_without_outputs(ch: &Channel) -> Result<Channel> {
    let extra: Vec<String> = ch.outputs().iter().filter(|n| *n != A_O).cloned().collect();
    for name in &extra {
        if ch.choi().dim_of(name)? != 1 {
            return Err(Error::LabelSet(format!(
                "Alice's outgoing ancilla `{name}` must be trivial"
            )));
        }
    }
    ch.discard_outputs(&extra)
}

/// Runs the protocol with the default dimension cap.
pub fn simulate_protocol(spec: &ProtocolSpec) -> Result<ProtocolOutcome> {
    simulate_protocol_capped(spec, DEFAULT_DIMENSION_CAP)
}

pub fn simulate_protocol_capped(spec: &ProtocolSpec, cap: usize) -> Result<ProtocolOutcome> {
    if spec.n == 0 || spec.alice.len() != spec.n || spec.bob.len() != spec.n {
        return Err(Error::InvalidArgument(format!(
            "n = {} with {} Alice and {} Bob channels",
            spec.n,
            spec.alice.len(),
            spec.bob.len()
        )));
    }
    let w = spec.dec.mixture();
    let mut copies = Vec::with_capacity(spec.n);
    for (i, (a, b)) in spec.alice.iter().zip(&spec.bob).enumerate() {
        let a = alice_without_outputs(a)?;
        let n_i = w.insert_parties(&a, b)?;
        copies.push(suffix_channel(&n_i, &format!(".{}", i + 1))?);
    }

    let total: usize =
        copies.iter().map(|c| c.input_dim() * c.output_dim()).product::<usize>() * spec.tau.operator().dim();
    if total > cap {
        return Err(Error::DimensionCap { total, cap });
    }

    if spec.e_a.inputs().len() != 1 || spec.d_b.outputs().len() != 1 {
        return Err(Error::LabelSet(
            "E_A needs one input (A_E) and D_B one output (B_D)".into(),
        ));
    }
    let a_e = spec.e_a.input_labels().remove(0);
    let b_d = spec.d_b.output_labels().remove(0);
    let tau = spec.tau.operator();
    if !tau.has_label(&a_e.name) {
        return Err(Error::UnknownLabel(a_e.name));
    }

    let mut acc = tau.link_product(spec.e_a.choi())?;
    acc = acc.link_product(spec.e_b.operator())?;
    for c in &copies {
        acc = acc.link_product(c.choi())?;
    }
    acc = acc.link_product(spec.d_b.choi())?;

    let mut expected: Vec<String> = tau
        .names()
        .into_iter()
        .filter(|n| *n != a_e.name)
        .map(String::from)
        .collect();
    expected.push(b_d.name.clone());
    let leftover: Vec<&str> = acc
        .names()
        .into_iter()
        .filter(|n| !expected.iter().any(|e| e == n))
        .collect();
    if !leftover.is_empty() {
        return Err(Error::LabelSet(format!(
            "unconnected wires after contraction: {leftover:?}"
        )));
    }
    let rho = State::from_operator_unchecked(acc.permute_to(&expected)?);

    let target = carry_to(&spec.tau, &a_e, &b_d)?;
    let f = fidelity(&target, &rho)?;
    Ok(ProtocolOutcome {
        rho,
        target,
        fidelity: f,
        success: f >= 1.0 - spec.epsilon,
    })
}

/// `τ` with `from` renamed to `to`, embedded if `to` is larger.
fn carry_to(tau: &State, from: &SystemLabel, to: &SystemLabel) -> Result<State> {
    if to.dim < from.dim {
        return Err(Error::Dimension(format!(
            "decoded system `{}` (dim {}) is smaller than `{}` (dim {})",
            to.name, to.dim, from.name, from.dim
        )));
    }
    if to.dim == from.dim {
        return tau.relabel(&[(&from.name, &to.name)]);
    }
    let v = CMatrix::from_fn(to.dim, from.dim, |o, i| {
        Complex64::new(if o == i { 1.0 } else { 0.0 }, 0.0)
    });
    let embed = crate::channel::isometry_channel(&v, &from.name, &to.name)?;
    embed.apply(tau)
}

/// Alice's routing channel for copy-level use: discards `A_I`, sends her
/// ancilla `A_I'` into `A_O`.
pub fn identity_code_alice(a_i: usize, d: usize) -> Channel {
    crate::reduction::routing_channel(a_i, d)
}

/// Bob's channel for the identity code: reads `B_I` into his ancilla output
/// `B_O'` and sends `|0>` into `B_O`.
pub fn identity_code_bob(b_i: usize, b_o: usize) -> Result<Channel> {
    let id = crate::channel::identity_channel(crate::process::B_I, "B_O'", b_i);
    let zero = State::basis(SystemLabel::new(crate::process::B_O, b_o), 0)?;
    let choi = id.choi().tensor_product(zero.operator())?;
    Channel::new(
        choi,
        vec![crate::process::B_I.to_string()],
        vec!["B_O'".to_string(), crate::process::B_O.to_string()],
    )
}

/// The single-copy identity code on `example_process(p, d)` with
/// `τ = Φ+` on `C ⊗ A_E`: Alice routes her share into the process and Bob
/// keeps whatever arrives on `B_I` (flag included).
pub fn identity_code_spec(dec: CausalDecomposition, d: usize) -> Result<ProtocolSpec> {
    let dims = dec.dims();
    Ok(ProtocolSpec {
        n: 1,
        alice: vec![identity_code_alice(dims.a_i, d)],
        bob: vec![identity_code_bob(dims.b_i, dims.b_o)?],
        e_a: crate::channel::identity_channel("A_E", "A_I'.1", d),
        e_b: State::from_operator_unchecked(LabeledOperator::scalar(Complex64::new(1.0, 0.0))),
        d_b: crate::channel::identity_channel("B_O'.1", "B_D", dims.b_i),
        tau: State::max_entangled("C", "A_E", d)?,
        epsilon: 0.0,
        dec,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduction::example_process;

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    /// `p Φ+ + (1 − p) id/2 ⊗ |e><e|` on `C ⊗ B_D` written out directly,
    /// scored against the embedded `Φ+`.
    fn oracle_fidelity(p: f64) -> f64 {
        let s = 0.5f64.sqrt();
        let mut phi = vec![c(0.0); 6];
        phi[0] = c(s);
        phi[4] = c(s);
        let ket = nalgebra::DVector::from_vec(phi);
        let mut rho = (&ket * ket.adjoint()) * c(p);
        rho[(2, 2)] += c((1.0 - p) * 0.5);
        rho[(5, 5)] += c((1.0 - p) * 0.5);
        (ket.adjoint() * rho * &ket)[(0, 0)].re
    }

    #[test]
    fn identity_code_fidelity_is_p() {
        for p in [0.0, 0.3, 0.5, 0.8, 1.0] {
            let spec = identity_code_spec(example_process(p, 2).unwrap(), 2).unwrap();
            let out = simulate_protocol(&spec).unwrap();
            assert!((out.fidelity - p).abs() < 1e-9, "p={p}: F={}", out.fidelity);
            assert!((out.fidelity - oracle_fidelity(p)).abs() < 1e-9);
            assert!((out.rho.operator().trace().re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn p_zero_state_is_mixed_times_flag() {
        let spec = identity_code_spec(example_process(0.0, 2).unwrap(), 2).unwrap();
        let out = simulate_protocol(&spec).unwrap();
        let mut expected = CMatrix::zeros(6, 6);
        expected[(2, 2)] = c(0.5);
        expected[(5, 5)] = c(0.5);
        assert!((out.rho.operator().matrix() - expected).norm() < 1e-12);
        assert!(!out.success);
    }

    #[test]
    fn dimension_cap() {
        let spec = identity_code_spec(example_process(0.5, 2).unwrap(), 2).unwrap();
        assert!(matches!(
            simulate_protocol_capped(&spec, 8),
            Err(Error::DimensionCap { .. })
        ));
    }

    #[test]
    fn copy_count_mismatch() {
        let mut spec = identity_code_spec(example_process(0.5, 2).unwrap(), 2).unwrap();
        spec.n = 2;
        assert!(matches!(simulate_protocol(&spec), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn unconnected_wire_is_reported() {
        let mut spec = identity_code_spec(example_process(0.5, 2).unwrap(), 2).unwrap();
        spec.d_b = crate::channel::identity_channel("B_O'.7", "B_D", 3);
        assert!(matches!(simulate_protocol(&spec), Err(Error::LabelSet(_))));
    }

    /// Two copies, each carrying one qubit of a two-qubit share. Bob's
    /// decoder strips both flags, so `F = p²`.
    fn two_copy_spec(p: f64) -> ProtocolSpec {
        let dec = example_process(p, 2).unwrap();
        let e_a = Channel::from_kraus(
            &[CMatrix::identity(4, 4)],
            vec![SystemLabel::new("A_E", 4)],
            vec![SystemLabel::new("A_I'.1", 2), SystemLabel::new("A_I'.2", 2)],
        )
        .unwrap();
        let mut perm = CMatrix::zeros(9, 9);
        let mut spare = 4..9;
        for k in 0..9 {
            let (a, b) = (k / 3, k % 3);
            let row = if a < 2 && b < 2 {
                2 * a + b
            } else {
                spare.next().unwrap()
            };
            perm[(row, k)] = Complex64::new(1.0, 0.0);
        }
        let d_b = Channel::from_kraus(
            &[perm],
            vec![SystemLabel::new("B_O'.1", 3), SystemLabel::new("B_O'.2", 3)],
            vec![SystemLabel::new("B_D", 9)],
        )
        .unwrap();
        ProtocolSpec {
            n: 2,
            alice: vec![identity_code_alice(3, 2); 2],
            bob: vec![identity_code_bob(3, 2).unwrap(); 2],
            e_a,
            e_b: State::from_operator_unchecked(LabeledOperator::scalar(Complex64::new(1.0, 0.0))),
            d_b,
            tau: State::max_entangled("C", "A_E", 4).unwrap(),
            epsilon: 0.0,
            dec,
        }
    }

    #[test]
    fn two_copies_multiply() {
        for p in [0.0, 0.4, 1.0] {
            let out = simulate_protocol(&two_copy_spec(p)).unwrap();
            assert!((out.fidelity - p * p).abs() < 1e-9, "p={p}: F={}", out.fidelity);
        }
        assert_eq!(two_copy_spec(0.5).rate(), 1.0);
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = identity_code_spec(example_process(0.7, 2).unwrap(), 2).unwrap();
        let text = serde_json::to_string(&spec).unwrap();
        let back: ProtocolSpec = serde_json::from_str(&text).unwrap();
        let f = simulate_protocol(&back).unwrap().fidelity;
        assert!((f - 0.7).abs() < 1e-9);
    }
}
