//! Contraction of a causally separable process with Alice's channel and
//! the erasure-channel simulation of the result.
//!
//! For `W = p W^{A≺B} + (1 − p) W^{A≻B}` and any Alice channel `A` with a
//! trivial outgoing ancilla, `W * A` splits as
//!
//! ```text
//! [ p L + (1 − p) id^{A_I'} ⊗ σ ] ⊗ id^{B_O}
//! ```
//!
//! where `L = Tr_{B_O}(W^{A≺B} * A) / d_{B_O}` is a channel from Alice's
//! ancilla to `B_I` and `σ = Tr_{A_I A_O B_O} W^{A≻B} / (d_{A_O} d_{B_O})` is a
//! fixed state on `B_I`. Bob can therefore reproduce the whole thing from an
//! erasure channel with no-erasure probability `p`: apply `L` when the
//! symbol arrives and prepare `σ` on the flag.
//!
//! The normalization factors on `L` and `σ` make both a CPTP map and a unit
//! trace state. The `B_O` factor is kept as `id/d_{B_O}` so the contracted
//! object stays a channel.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{erasure_channel, Channel, State};
use crate::error::{Error, Result};
use crate::operator::{CMatrix, LabeledOperator, SystemLabel};
use crate::process::{CausalDecomposition, Direction, ProcessDims, ProcessMatrix, A_I, A_O, B_I, B_O};

/// Alice's ancilla input used by the built-in routing channel.
pub const ALICE_ANCILLA: &str = "A_I'";

/// `p`, the no-erasure branch `L` and the erasure-branch state `σ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveDecomposition {
    pub p: f64,
    pub l: Channel,
    pub sigma: State,
}

impl EffectiveDecomposition {
    /// Choi operator of `ρ ↦ p L(ρ) + (1 − p) Tr(ρ) σ`.
    pub fn reconstruct(&self) -> Result<Channel> {
        let discard = LabeledOperator::identity(self.l.input_labels())?;
        let constant = discard.tensor_product(self.sigma.operator())?;
        let choi = self.l.choi().combine(self.p, &constant, 1.0 - self.p)?;
        Channel::new(choi, self.l.inputs().to_vec(), self.l.outputs().to_vec())
    }
}

/// Residuals certifying the reduction for one (decomposition, channel) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub p: f64,
    pub bo_identity_residual: f64,
    pub reconstruction_residual: f64,
    pub erasure_residual: f64,
}

impl PipelineReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.bo_identity_residual <= tol && self.reconstruction_residual <= tol && self.erasure_residual <= tol
    }
}

/// Everything the pipeline produces.
#[derive(Debug, Clone)]
pub struct Reduction {
    /// `W * A` as a channel from Alice's ancilla to `B_I ⊗ B_O`.
    pub contracted: Channel,
    /// The contracted channel with `B_O` discarded.
    pub reduced: Channel,
    pub effective: EffectiveDecomposition,
    pub simulator: Channel,
    pub report: PipelineReport,
}

/// Checks Alice's channel and returns it with its trivial outgoing ancillas
/// traced away, along with its ancilla inputs.
fn alice_ports(alice: &Channel, dims: ProcessDims, tol: f64) -> Result<(Channel, Vec<String>)> {
    alice.ensure_cptp(tol)?;
    let mut ch = alice.clone();
    if !ch.inputs().iter().any(|n| n == A_I) {
        if dims.a_i != 1 {
            return Err(Error::LabelSet("Alice's channel must read A_I".into()));
        }
        let choi = ch
            .choi()
            .tensor_product(&LabeledOperator::identity(vec![SystemLabel::new(A_I, 1)])?)?;
        let mut inputs = ch.inputs().to_vec();
        inputs.push(A_I.to_string());
        ch = Channel::new(choi, inputs, ch.outputs().to_vec())?;
    }
    if !ch.outputs().iter().any(|n| n == A_O) {
        return Err(Error::LabelSet("Alice's channel must write A_O".into()));
    }
    let extra: Vec<String> = ch.outputs().iter().filter(|n| *n != A_O).cloned().collect();
    for name in &extra {
        if ch.choi().dim_of(name)? != 1 {
            return Err(Error::LabelSet(format!(
                "Alice's outgoing ancilla `{name}` must be trivial"
            )));
        }
    }
    let ch = ch.discard_outputs(&extra)?;
    let ancillas = ch.inputs().iter().filter(|n| *n != A_I).cloned().collect();
    Ok((ch, ancillas))
}

/// `W * A` for the mixture, normalized on `B_O`: a channel from Alice's
/// ancilla inputs to `B_I ⊗ B_O`.
pub fn contract_alice(dec: &CausalDecomposition, alice: &Channel, tol: f64) -> Result<Channel> {
    let dims = dec.dims();
    let (alice, ancillas) = alice_ports(alice, dims, tol)?;
    let linked = dec.mixture().operator().link_product(alice.choi())?;
    Channel::new(
        linked.scale(1.0 / dims.b_o as f64),
        ancillas,
        vec![B_I.to_string(), B_O.to_string()],
    )
}

/// `‖N − _{B_O}N‖`: how far the `B_O` factor is from the normalized identity.
pub fn bo_identity_residual(contracted: &Channel) -> Result<f64> {
    let replaced = contracted.choi().trace_replace(&[B_O])?;
    contracted.choi().distance(&replaced)
}

/// `σ = Tr_{A_I A_O B_O} W^{A≻B} / (d_{A_O} d_{B_O})`.
pub fn induced_state(w_ba: &ProcessMatrix) -> Result<State> {
    let dims = w_ba.dims();
    let reduced = w_ba.operator().partial_trace(&[A_I, A_O, B_O])?;
    Ok(State::from_operator_unchecked(
        reduced.scale(1.0 / (dims.a_o * dims.b_o) as f64),
    ))
}

/// Splits the contracted process into `(p, L, σ)` and checks that the split
/// reproduces it.
pub fn effective_decomposition(dec: &CausalDecomposition, alice: &Channel, tol: f64) -> Result<EffectiveDecomposition> {
    let (ed, residual) = effective_with_residual(dec, alice, tol)?;
    if residual > tol {
        return Err(Error::Reconstruction(residual));
    }
    Ok(ed)
}

fn effective_with_residual(
    dec: &CausalDecomposition,
    alice: &Channel,
    tol: f64,
) -> Result<(EffectiveDecomposition, f64)> {
    let dims = dec.dims();
    let (alice_ch, ancillas) = alice_ports(alice, dims, tol)?;
    let ordered = dec.w_ab.operator().link_product(alice_ch.choi())?;
    let l_choi = ordered.partial_trace(&[B_O])?.scale(1.0 / dims.b_o as f64);
    let l = Channel::new(l_choi, ancillas, vec![B_I.to_string()])?;
    let sigma = induced_state(&dec.w_ba)?;
    let ed = EffectiveDecomposition { p: dec.p, l, sigma };
    let target = contract_alice(dec, alice, tol)?.discard_outputs(&[B_O])?;
    let residual = ed.reconstruct()?.choi().distance(target.choi())?;
    Ok((ed, residual))
}

/// Bob's simulator on the erasure output (dimension `d + 1`, flag at `d`):
/// `ρ ↦ L(P ρ P) + <e|ρ|e> σ`.
pub fn erasure_simulator(ed: &EffectiveDecomposition, input: &str) -> Result<Channel> {
    let l_in = ed.l.input_labels();
    let d: usize = l_in.iter().map(|l| l.dim).product();
    let l = ed.l.choi().permute_to(&[ed.l.outputs(), ed.l.inputs()].concat())?;
    let dout = ed.l.output_dim();
    let sigma = ed.sigma.operator().permute_to(ed.l.outputs())?;
    let n = dout * (d + 1);
    let mut m = CMatrix::zeros(n, n);
    for o in 0..dout {
        for op in 0..dout {
            for i in 0..d {
                for ip in 0..d {
                    m[(o * (d + 1) + i, op * (d + 1) + ip)] = l.matrix()[(o * d + i, op * d + ip)];
                }
            }
            m[(o * (d + 1) + d, op * (d + 1) + d)] = sigma.matrix()[(o, op)];
        }
    }
    let mut labels = ed.l.output_labels();
    labels.push(SystemLabel::new(input, d + 1));
    Channel::new(
        LabeledOperator::new(labels, m)?,
        vec![input.to_string()],
        ed.l.outputs().to_vec(),
    )
}

/// Builds the simulator and compares `S ∘ E_p` with the reduced channel.
/// Returns the simulator and the Frobenius residual.
pub fn erasure_simulation(ed: &EffectiveDecomposition, reduced: &Channel) -> Result<(Channel, f64)> {
    if ed.l.inputs().len() != 1 {
        return Err(Error::LabelSet(
            "erasure simulation needs a single ancilla input".into(),
        ));
    }
    let anc = ed.l.input_labels().remove(0);
    let simulator = erasure_simulator(ed, "erasure_out")?;
    let erasure = erasure_channel(ed.p, anc.dim, &anc.name, "erasure_out")?;
    let composed = Channel::compose(&simulator, &erasure)?;
    let residual = composed.choi().distance(reduced.choi())?;
    Ok((simulator, residual))
}

/// Runs contraction, decomposition and simulation, collecting residuals.
pub fn run_pipeline(dec: &CausalDecomposition, alice: &Channel, tol: f64) -> Result<Reduction> {
    let contracted = contract_alice(dec, alice, tol)?;
    let bo = bo_identity_residual(&contracted)?;
    let reduced = contracted.discard_outputs(&[B_O])?;
    let (effective, reconstruction_residual) = effective_with_residual(dec, alice, tol)?;
    let (simulator, erasure_residual) = erasure_simulation(&effective, &reduced)?;
    Ok(Reduction {
        report: PipelineReport {
            p: dec.p,
            bo_identity_residual: bo,
            reconstruction_residual,
            erasure_residual,
        },
        contracted,
        reduced,
        effective,
        simulator,
    })
}

/// Isometric embedding of dimension `d` into the first `d` coordinates of
/// dimension `d + 1`.
pub fn flag_embedding(d: usize) -> CMatrix {
    CMatrix::from_fn(d + 1, d, |o, i| Complex64::new(if o == i { 1.0 } else { 0.0 }, 0.0))
}

/// The causally separable process whose contraction is exactly an erasure
/// channel. Each party receives `d + 1` levels and sends `d`. In the
/// Alice-first branch Alice's output is embedded into the first `d` levels
/// of `B_I` while Alice herself receives the flag `|d>`; the Bob-first
/// branch is the mirror image.
pub fn example_process(p: f64, d: usize) -> Result<CausalDecomposition> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("example process needs d >= 2, got {d}")));
    }
    let v = flag_embedding(d);
    let flag_a = State::basis(SystemLabel::new(A_I, d + 1), d)?;
    let to_bob = crate::channel::isometry_channel(&v, A_O, B_I)?;
    let w_ab = ProcessMatrix::comb(&flag_a, &to_bob, Direction::AliceFirst, d)?;
    let flag_b = State::basis(SystemLabel::new(B_I, d + 1), d)?;
    let to_alice = crate::channel::isometry_channel(&v, B_O, A_I)?;
    let w_ba = ProcessMatrix::comb(&flag_b, &to_alice, Direction::BobFirst, d)?;
    CausalDecomposition::new(p, w_ab, w_ba)
}

/// Alice's channel that discards `A_I` (dimension `a_i`) and routes her
/// ancilla `A_I'` (dimension `d`) into `A_O`.
pub fn routing_channel(a_i: usize, d: usize) -> Channel {
    let discard = LabeledOperator::identity(vec![SystemLabel::new(A_I, a_i)]).expect("valid");
    let route = crate::channel::identity_channel(ALICE_ANCILLA, A_O, d);
    let choi = discard.tensor_product(route.choi()).expect("disjoint labels");
    Channel::new(
        choi,
        vec![A_I.to_string(), ALICE_ANCILLA.to_string()],
        vec![A_O.to_string()],
    )
    .expect("valid channel")
}
