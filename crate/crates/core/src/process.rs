//! Bipartite process matrices on `A_I ⊗ A_O ⊗ B_I ⊗ B_O`.
//!
//! Trivial wires are kept as explicit labels of dimension 1, so a plain
//! channel from Alice to Bob is the process with `A_I` and `B_O` trivial.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{Channel, State};
use crate::error::{Error, Result};
use crate::operator::{LabeledOperator, SystemLabel};
use crate::random::{random_channel, random_density};

pub const A_I: &str = "A_I";
pub const A_O: &str = "A_O";
pub const B_I: &str = "B_I";
pub const B_O: &str = "B_O";

/// Canonical label order of a process.
pub const PROCESS_LABELS: [&str; 4] = [A_I, A_O, B_I, B_O];

/// Causal direction of an ordered process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// Alice before Bob: no signaling from Bob to Alice.
    #[serde(rename = "ab")]
    AliceFirst,
    /// Bob before Alice: no signaling from Alice to Bob.
    #[serde(rename = "ba")]
    BobFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcessDims {
    #[serde(rename = "A_I")]
    pub a_i: usize,
    #[serde(rename = "A_O")]
    pub a_o: usize,
    #[serde(rename = "B_I")]
    pub b_i: usize,
    #[serde(rename = "B_O")]
    pub b_o: usize,
}

impl ProcessDims {
    pub fn new(a_i: usize, a_o: usize, b_i: usize, b_o: usize) -> Self {
        Self { a_i, a_o, b_i, b_o }
    }

    pub fn qubits() -> Self {
        Self::new(2, 2, 2, 2)
    }

    pub fn labels(&self) -> Vec<SystemLabel> {
        vec![
            SystemLabel::new(A_I, self.a_i),
            SystemLabel::new(A_O, self.a_o),
            SystemLabel::new(B_I, self.b_i),
            SystemLabel::new(B_O, self.b_o),
        ]
    }

    /// Product of the output dimensions, `d_O`.
    pub fn d_out(&self) -> usize {
        self.a_o * self.b_o
    }

    pub fn swapped(&self) -> Self {
        Self::new(self.b_i, self.b_o, self.a_i, self.a_o)
    }
}

/// Residuals of the five defining conditions of a process matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    /// Negative part of the spectrum plus any non-Hermitian part.
    pub positivity: f64,
    /// `|Tr W − d_O|`.
    pub trace: f64,
    /// `‖_{B_I B_O}W − _{A_O B_I B_O}W‖`.
    pub marginal_a: f64,
    /// `‖_{A_I A_O}W − _{B_O A_I A_O}W‖`.
    pub marginal_b: f64,
    /// `‖W − (_{A_O}W + _{B_O}W − _{A_O B_O}W)‖`.
    pub no_loops: f64,
}

impl ValidityReport {
    pub const NAMES: [&'static str; 5] = ["positivity", "trace", "marginal_a", "marginal_b", "no_loops"];

    pub fn values(&self) -> [f64; 5] {
        [
            self.positivity,
            self.trace,
            self.marginal_a,
            self.marginal_b,
            self.no_loops,
        ]
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.values().iter().all(|v| *v <= tol)
    }

    /// Names of the conditions whose residual exceeds `tol`.
    pub fn violations(&self, tol: f64) -> Vec<&'static str> {
        Self::NAMES
            .iter()
            .zip(self.values())
            .filter(|(_, v)| *v > tol)
            .map(|(n, _)| *n)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProcessRepr", into = "ProcessRepr")]
pub struct ProcessMatrix {
    op: LabeledOperator,
}

impl ProcessMatrix {
    /// Wraps an operator whose labels are exactly `A_I, A_O, B_I, B_O` (any
    /// order). Validity is not enforced; see [`ProcessMatrix::validate`].
    pub fn new(op: LabeledOperator) -> Result<Self> {
        let names = op.names();
        if names.len() != 4 || PROCESS_LABELS.iter().any(|n| !names.contains(n)) {
            return Err(Error::LabelSet(format!(
                "process labels must be {PROCESS_LABELS:?}, got {names:?}"
            )));
        }
        Ok(Self {
            op: op.permute_to(&PROCESS_LABELS)?,
        })
    }

    pub fn operator(&self) -> &LabeledOperator {
        &self.op
    }

    pub fn dims(&self) -> ProcessDims {
        let d = |n| self.op.dim_of(n).expect("canonical labels");
        ProcessDims::new(d(A_I), d(A_O), d(B_I), d(B_O))
    }

    /// Maximally mixed process `id / (d_{A_I} d_{B_I})`, valid in both orders.
    pub fn maximally_mixed(dims: ProcessDims) -> Self {
        let op = LabeledOperator::identity(dims.labels()).expect("dims are positive");
        Self {
            op: op.scale(1.0 / (dims.a_i * dims.b_i) as f64),
        }
    }

    pub fn validate(&self) -> ValidityReport {
        let w = &self.op;
        let tr = |x: &[&str]| w.trace_replace(x).expect("canonical labels");
        let dist = |a: &LabeledOperator, b: &LabeledOperator| a.distance(b).expect("same labels");

        let min_eig = w.eigenvalues().first().copied().unwrap_or(0.0);
        let positivity = (-min_eig).max(0.0) + w.hermiticity_residual();
        let trace = (w.trace() - num_complex::Complex64::new(self.dims().d_out() as f64, 0.0)).norm();
        let marginal_a = dist(&tr(&[B_I, B_O]), &tr(&[A_O, B_I, B_O]));
        let marginal_b = dist(&tr(&[A_I, A_O]), &tr(&[B_O, A_I, A_O]));
        let recombined = tr(&[A_O])
            .add(&tr(&[B_O]))
            .and_then(|s| s.sub(&tr(&[A_O, B_O])))
            .expect("same labels");
        let no_loops = dist(w, &recombined);
        ValidityReport {
            positivity,
            trace,
            marginal_a,
            marginal_b,
            no_loops,
        }
    }

    /// `‖W − _{B_O}W‖` for Alice-first, `‖W − _{A_O}W‖` for Bob-first.
    pub fn causal_order_residual(&self, direction: Direction) -> f64 {
        let inert = match direction {
            Direction::AliceFirst => B_O,
            Direction::BobFirst => A_O,
        };
        let replaced = self.op.trace_replace(&[inert]).expect("canonical labels");
        self.op.distance(&replaced).expect("same labels")
    }

    /// Embeds a channel from Alice to Bob: its input becomes `A_O`, its
    /// output `B_I`, and `A_I`, `B_O` are trivial.
    pub fn from_channel(channel: &Channel, tol: f64) -> Result<Self> {
        if channel.inputs().len() != 1 || channel.outputs().len() != 1 {
            return Err(Error::LabelSet(
                "from_channel needs one input and one output wire".into(),
            ));
        }
        channel.ensure_cptp(tol)?;
        let choi = channel
            .choi()
            .relabel(&[(&channel.inputs()[0], A_O), (&channel.outputs()[0], B_I)])?;
        let trivial = LabeledOperator::identity(vec![SystemLabel::new(A_I, 1), SystemLabel::new(B_O, 1)])?;
        Self::new(trivial.tensor_product(&choi)?)
    }

    /// Causally ordered process (a channel with memory). For Alice-first,
    /// `rho` lives on `A_I` plus memory wires and `channel` maps memory ⊗
    /// `A_O` to `B_I`; the result is `(rho * channel) ⊗ id^{B_O}` with
    /// `B_O` of dimension `inert_dim`. Bob-first mirrors the roles.
    pub fn comb(rho: &State, channel: &Channel, direction: Direction, inert_dim: usize) -> Result<Self> {
        let (recv, send, next_in, inert) = match direction {
            Direction::AliceFirst => (A_I, A_O, B_I, B_O),
            Direction::BobFirst => (B_I, B_O, A_I, A_O),
        };
        let rho_op = rho.operator();
        if !rho_op.has_label(recv) {
            return Err(Error::UnknownLabel(recv.to_string()));
        }
        let memory: Vec<&str> = rho_op.names().into_iter().filter(|n| *n != recv).collect();
        let mut expected_in: Vec<&str> = memory.clone();
        expected_in.push(send);
        let ins: Vec<&str> = channel.inputs().iter().map(String::as_str).collect();
        if ins.len() != expected_in.len() || expected_in.iter().any(|n| !ins.contains(n)) {
            return Err(Error::LabelSet(format!(
                "comb channel inputs must be {expected_in:?}, got {ins:?}"
            )));
        }
        if channel.outputs() != [next_in.to_string()] {
            return Err(Error::LabelSet(format!("comb channel output must be [{next_in}]")));
        }
        for m in &memory {
            let (a, b) = (rho_op.dim_of(m)?, channel.choi().dim_of(m)?);
            if a != b {
                return Err(Error::LabelDimMismatch {
                    name: m.to_string(),
                    left: a,
                    right: b,
                });
            }
        }
        let linked = rho_op.link_product(channel.choi())?;
        let id = LabeledOperator::identity(vec![SystemLabel::new(inert, inert_dim)])?;
        Self::new(linked.tensor_product(&id)?)
    }

    /// Convex combination `p W1 + (1 − p) W2`.
    pub fn mix(p: f64, w1: &Self, w2: &Self) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidProbability(p));
        }
        if w1.dims() != w2.dims() {
            return Err(Error::Dimension(format!("{:?} vs {:?}", w1.dims(), w2.dims())));
        }
        Self::new(w1.op.combine(p, &w2.op, 1.0 - p)?)
    }

    /// Exchanges Alice's and Bob's wires.
    pub fn swap_parties(&self) -> Self {
        let op = self
            .op
            .relabel(&[(A_I, B_I), (A_O, B_O), (B_I, A_I), (B_O, A_O)])
            .expect("canonical labels");
        Self::new(op).expect("same label set")
    }

    /// `N = W * (A ⊗ B)`: the channel induced on the parties' ancillas.
    /// Alice's channel must read `A_I` and write `A_O`; Bob's likewise with
    /// `B_I`, `B_O`. A missing port is accepted when the wire is trivial.
    pub fn insert_parties(&self, alice: &Channel, bob: &Channel) -> Result<Channel> {
        let alice = with_trivial_ports(alice, &self.op, A_I, A_O)?;
        let bob = with_trivial_ports(bob, &self.op, B_I, B_O)?;
        let mut inputs: Vec<String> = Vec::new();
        let mut outputs: Vec<String> = Vec::new();
        for (ch, port_in, port_out) in [(&alice, A_I, A_O), (&bob, B_I, B_O)] {
            for n in ch.inputs().iter().filter(|n| *n != port_in) {
                inputs.push(n.clone());
            }
            for n in ch.outputs().iter().filter(|n| *n != port_out) {
                outputs.push(n.clone());
            }
        }
        let mut seen = std::collections::HashSet::new();
        for n in inputs.iter().chain(&outputs) {
            if self.op.has_label(n) || !seen.insert(n.as_str()) {
                return Err(Error::DuplicateLabel(n.clone()));
            }
        }
        let n = self.op.link_product(alice.choi())?.link_product(bob.choi())?;
        Channel::new(n, inputs, outputs)
    }

    /// Random ordered process from a Ginibre state on the first party's
    /// input and memory, and a Haar-isometry channel into the second party's
    /// input. Deterministic in `seed`.
    pub fn random_ordered(dims: ProcessDims, memory_dim: usize, seed: u64, direction: Direction) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let memory = SystemLabel::new("E", memory_dim.max(1));
        let (recv, send, next_in, inert) = match direction {
            Direction::AliceFirst => (
                SystemLabel::new(A_I, dims.a_i),
                SystemLabel::new(A_O, dims.a_o),
                SystemLabel::new(B_I, dims.b_i),
                dims.b_o,
            ),
            Direction::BobFirst => (
                SystemLabel::new(B_I, dims.b_i),
                SystemLabel::new(B_O, dims.b_o),
                SystemLabel::new(A_I, dims.a_i),
                dims.a_o,
            ),
        };
        let rho = State::from_operator_unchecked(random_density(&mut rng, vec![recv, memory.clone()]));
        let rank = memory.dim * send.dim;
        let ch = random_channel(&mut rng, vec![memory, send], vec![next_in], rank);
        Self::comb(&rho, &ch, direction, inert).expect("generated wires are consistent")
    }
}

/// Adds dimension-1 ports a party channel left out.
fn with_trivial_ports(ch: &Channel, w: &LabeledOperator, port_in: &str, port_out: &str) -> Result<Channel> {
    let mut choi = ch.choi().clone();
    let mut inputs = ch.inputs().to_vec();
    let mut outputs = ch.outputs().to_vec();
    for (port, is_input) in [(port_in, true), (port_out, false)] {
        let present = if is_input { &inputs } else { &outputs };
        if present.iter().any(|n| n == port) {
            continue;
        }
        if w.dim_of(port)? != 1 {
            return Err(Error::LabelSet(format!("party channel is missing port `{port}`")));
        }
        choi = choi.tensor_product(&LabeledOperator::identity(vec![SystemLabel::new(port, 1)])?)?;
        if is_input {
            inputs.push(port.to_string());
        } else {
            outputs.push(port.to_string());
        }
    }
    Channel::new(choi, inputs, outputs)
}

/// A causally separable process `p W^{A≺B} + (1 − p) W^{A≻B}`, kept in
/// decomposed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DecompositionRepr")]
pub struct CausalDecomposition {
    pub p: f64,
    pub w_ab: ProcessMatrix,
    pub w_ba: ProcessMatrix,
}

#[derive(Deserialize)]
struct DecompositionRepr {
    p: f64,
    w_ab: ProcessMatrix,
    w_ba: ProcessMatrix,
}

impl TryFrom<DecompositionRepr> for CausalDecomposition {
    type Error = Error;

    fn try_from(r: DecompositionRepr) -> Result<Self> {
        Self::new(r.p, r.w_ab, r.w_ba)
    }
}

/// Validity of a decomposition's components and their mixture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub w_ab: ValidityReport,
    pub w_ba: ValidityReport,
    pub mixture: ValidityReport,
    /// Alice-first residual of `w_ab`.
    pub order_ab: f64,
    /// Bob-first residual of `w_ba`.
    pub order_ba: f64,
}

impl DecompositionReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.w_ab.passes(tol)
            && self.w_ba.passes(tol)
            && self.mixture.passes(tol)
            && self.order_ab <= tol
            && self.order_ba <= tol
    }
}

impl CausalDecomposition {
    pub fn new(p: f64, w_ab: ProcessMatrix, w_ba: ProcessMatrix) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidProbability(p));
        }
        if w_ab.dims() != w_ba.dims() {
            return Err(Error::Dimension(format!("{:?} vs {:?}", w_ab.dims(), w_ba.dims())));
        }
        Ok(Self { p, w_ab, w_ba })
    }

    pub fn dims(&self) -> ProcessDims {
        self.w_ab.dims()
    }

    pub fn mixture(&self) -> ProcessMatrix {
        ProcessMatrix::mix(self.p, &self.w_ab, &self.w_ba).expect("checked at construction")
    }

    pub fn validate(&self) -> DecompositionReport {
        DecompositionReport {
            w_ab: self.w_ab.validate(),
            w_ba: self.w_ba.validate(),
            mixture: self.mixture().validate(),
            order_ab: self.w_ab.causal_order_residual(Direction::AliceFirst),
            order_ba: self.w_ba.causal_order_residual(Direction::BobFirst),
        }
    }

    /// Exchanges the parties: wires are relabeled A↔B and `p ↦ 1 − p`, so
    /// the Alice-to-Bob machinery runs in the Bob-to-Alice direction.
    pub fn swap_roles(&self) -> Self {
        Self {
            p: 1.0 - self.p,
            w_ab: self.w_ba.swap_parties(),
            w_ba: self.w_ab.swap_parties(),
        }
    }

    pub fn random(dims: ProcessDims, memory_dim: usize, p: f64, seed: u64) -> Result<Self> {
        let w_ab = ProcessMatrix::random_ordered(dims, memory_dim, seed, Direction::AliceFirst);
        let w_ba = ProcessMatrix::random_ordered(dims, memory_dim, seed ^ 0x9E37_79B9_7F4A_7C15, Direction::BobFirst);
        Self::new(p, w_ab, w_ba)
    }
}

#[derive(Serialize, Deserialize)]
struct ProcessRepr {
    dims: ProcessDims,
    op: LabeledOperator,
}

impl TryFrom<ProcessRepr> for ProcessMatrix {
    type Error = Error;

    fn try_from(repr: ProcessRepr) -> Result<Self> {
        let w = ProcessMatrix::new(repr.op)?;
        if w.dims() != repr.dims {
            return Err(Error::Dimension(format!(
                "declared dims {:?} disagree with operator labels {:?}",
                repr.dims,
                w.dims()
            )));
        }
        Ok(w)
    }
}

impl From<ProcessMatrix> for ProcessRepr {
    fn from(w: ProcessMatrix) -> Self {
        ProcessRepr {
            dims: w.dims(),
            op: w.op,
        }
    }
}
