//! Quantum channels in Choi form.
//!
//! The Choi operator of a map `M` is `Σ_ij M(|i><j|) ⊗ |i><j|`, output
//! factor first and unnormalized, so a CPTP map has `Tr = d_in`. Channels keep
//! explicit input/output label lists; the Choi operator is stored with the
//! outputs first, then the inputs.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{
    hermitian_eigenvalues, hermitian_function, matrix_from_pairs, matrix_to_pairs, CMatrix, LabeledOperator,
    SystemLabel, DEFAULT_TOL,
};

/// JSON form `{"in": [labels], "out": [labels], "choi": matrix}`, or with
/// `"kraus": [matrix, ...]` in place of `"choi"`. Matrices are rows of
/// `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChannelRepr", into = "ChannelRepr")]
pub struct Channel {
    choi: LabeledOperator,
    inputs: Vec<String>,
    outputs: Vec<String>,
}

/// Outcome of [`Channel::is_cptp`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CptpReport {
    pub psd: bool,
    /// Trace norm of `Tr_out(choi) − id_in`.
    pub tp_residual: f64,
}

impl CptpReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.psd && self.tp_residual <= tol
    }
}

impl Channel {
    /// Wraps a Choi operator. Every label must be declared as exactly one of
    /// input or output.
    pub fn new(choi: LabeledOperator, inputs: Vec<String>, outputs: Vec<String>) -> Result<Self> {
        for name in inputs.iter().chain(&outputs) {
            if !choi.has_label(name) {
                return Err(Error::UnknownLabel(name.clone()));
            }
        }
        if let Some(name) = inputs.iter().find(|n| outputs.contains(n)) {
            return Err(Error::DuplicateLabel(name.clone()));
        }
        if inputs.len() + outputs.len() != choi.labels().len() {
            return Err(Error::LabelSet(format!(
                "choi labels {:?} are not inputs {inputs:?} + outputs {outputs:?}",
                choi.names()
            )));
        }
        let order: Vec<&str> = outputs.iter().chain(&inputs).map(String::as_str).collect();
        let choi = choi.permute_to(&order)?;
        Ok(Self { choi, inputs, outputs })
    }

    /// Choi operator of the map `ρ ↦ Σ_k K ρ K†`. Kraus operators act on the
    /// composite (row-major) spaces of `inputs` and `outputs`. Completeness
    /// is not enforced; see [`Channel::is_cptp`].
    pub fn from_kraus(kraus: &[CMatrix], inputs: Vec<SystemLabel>, outputs: Vec<SystemLabel>) -> Result<Self> {
        let din: usize = inputs.iter().map(|l| l.dim).product();
        let dout: usize = outputs.iter().map(|l| l.dim).product();
        for (k, op) in kraus.iter().enumerate() {
            if op.nrows() != dout || op.ncols() != din {
                return Err(Error::Dimension(format!(
                    "Kraus operator {k} is {}x{}, expected {dout}x{din}",
                    op.nrows(),
                    op.ncols()
                )));
            }
        }
        // J[(o,i),(o',i')] = Σ_k K[o,i] conj(K[o',i'])
        let n = dout * din;
        let mut choi = CMatrix::zeros(n, n);
        for op in kraus {
            let v = CMatrix::from_fn(n, 1, |r, _| op[(r / din, r % din)]);
            choi += &v * v.adjoint();
        }
        let in_names = inputs.iter().map(|l| l.name.clone()).collect();
        let out_names = outputs.iter().map(|l| l.name.clone()).collect();
        let mut labels = outputs;
        labels.extend(inputs);
        Self::new(LabeledOperator::new(labels, choi)?, in_names, out_names)
    }

    pub fn choi(&self) -> &LabeledOperator {
        &self.choi
    }

    pub fn inputs(&self) -> &[String] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }

    pub fn input_labels(&self) -> Vec<SystemLabel> {
        self.inputs
            .iter()
            .map(|n| self.choi.label(n).cloned().expect("declared"))
            .collect()
    }

    pub fn output_labels(&self) -> Vec<SystemLabel> {
        self.outputs
            .iter()
            .map(|n| self.choi.label(n).cloned().expect("declared"))
            .collect()
    }

    pub fn input_dim(&self) -> usize {
        self.input_labels().iter().map(|l| l.dim).product()
    }

    pub fn output_dim(&self) -> usize {
        self.output_labels().iter().map(|l| l.dim).product()
    }

    pub fn is_cptp(&self, tol: f64) -> CptpReport {
        let psd = self.choi.is_psd(tol).unwrap_or(false);
        let reduced = self.choi.partial_trace(&self.outputs).expect("outputs are labels");
        let id = LabeledOperator::identity(reduced.labels().to_vec()).expect("labels valid");
        let diff = reduced.sub(&id).expect("same labels");
        let tp_residual = hermitian_eigenvalues(&diff.hermitian_part())
            .iter()
            .map(|v| v.abs())
            .sum::<f64>()
            + diff.hermiticity_residual();
        CptpReport { psd, tp_residual }
    }

    pub fn ensure_cptp(&self, tol: f64) -> Result<()> {
        let report = self.is_cptp(tol);
        if report.passes(tol) {
            Ok(())
        } else {
            Err(Error::NotCptp {
                psd: report.psd,
                tp_residual: report.tp_residual,
            })
        }
    }

    /// Applies the channel to a state carrying every input label. Extra
    /// labels of the state pass through untouched and come first in the
    /// result.
    pub fn apply(&self, rho: &State) -> Result<State> {
        let op = rho.operator();
        for l in self.input_labels() {
            match op.label(&l.name) {
                None => return Err(Error::UnknownLabel(l.name)),
                Some(r) if r.dim != l.dim => {
                    return Err(Error::LabelDimMismatch {
                        name: l.name,
                        left: r.dim,
                        right: l.dim,
                    })
                }
                _ => {}
            }
        }
        for name in &self.outputs {
            if op.has_label(name) {
                return Err(Error::DuplicateLabel(name.clone()));
            }
        }
        Ok(State::from_operator_unchecked(op.link_product(&self.choi)?))
    }

    /// Renames labels on either side; pairs are `(old, new)`.
    pub fn relabel(&self, renames: &[(&str, &str)]) -> Result<Self> {
        let rename = |n: &String| {
            renames
                .iter()
                .find(|(old, _)| old == n)
                .map(|(_, new)| (*new).to_string())
                .unwrap_or_else(|| n.clone())
        };
        Self::new(
            self.choi.relabel(renames)?,
            self.inputs.iter().map(rename).collect(),
            self.outputs.iter().map(rename).collect(),
        )
    }

    /// Traces out some outputs.
    pub fn discard_outputs<S: AsRef<str>>(&self, names: &[S]) -> Result<Self> {
        for n in names {
            if !self.outputs.iter().any(|o| o == n.as_ref()) {
                return Err(Error::UnknownLabel(n.as_ref().to_string()));
            }
        }
        let outputs = self
            .outputs
            .iter()
            .filter(|o| !names.iter().any(|n| n.as_ref() == o.as_str()))
            .cloned()
            .collect();
        Self::new(self.choi.partial_trace(names)?, self.inputs.clone(), outputs)
    }

    /// Sequential composition `second ∘ first`. Outputs of `first` are wired
    /// positionally to inputs of `second`, matched by dimension.
    pub fn compose(second: &Channel, first: &Channel) -> Result<Channel> {
        let outs = first.output_labels();
        let ins = second.input_labels();
        if outs.len() != ins.len() {
            return Err(Error::Dimension(format!(
                "{} output wires feed {} input wires",
                outs.len(),
                ins.len()
            )));
        }
        let mut first_ren = Vec::new();
        let mut second_ren = Vec::new();
        let wires: Vec<String> = (0..outs.len()).map(|k| format!("\u{1}wire{k}")).collect();
        for ((o, i), w) in outs.iter().zip(&ins).zip(&wires) {
            if o.dim != i.dim {
                return Err(Error::Dimension(format!(
                    "`{}` (dim {}) cannot feed `{}` (dim {})",
                    o.name, o.dim, i.name, i.dim
                )));
            }
            first_ren.push((o.name.as_str(), w.as_str()));
            second_ren.push((i.name.as_str(), w.as_str()));
        }
        if let Some(n) = first.inputs.iter().find(|n| second.outputs.contains(n)) {
            return Err(Error::DuplicateLabel(n.clone()));
        }
        let a = first.choi.relabel(&first_ren)?;
        let b = second.choi.relabel(&second_ren)?;
        Self::new(a.link_product(&b)?, first.inputs.clone(), second.outputs.clone())
    }
}

pub fn choi_from_kraus(kraus: &[CMatrix], input: SystemLabel, output: SystemLabel) -> Result<Channel> {
    Channel::from_kraus(kraus, vec![input], vec![output])
}

pub fn identity_channel(input: &str, output: &str, dim: usize) -> Channel {
    Channel::from_kraus(
        &[CMatrix::identity(dim, dim)],
        vec![SystemLabel::new(input, dim)],
        vec![SystemLabel::new(output, dim)],
    )
    .expect("identity is well formed")
}

/// `ρ ↦ p ρ + (1 − p) |e><e|` from dimension `d` into `d + 1`, with the
/// flag `|e>` at index `d`.
pub fn erasure_channel(p: f64, dim: usize, input: &str, output: &str) -> Result<Channel> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    if dim < 2 {
        return Err(Error::InvalidArgument(format!(
            "erasure channel needs d >= 2, got {dim}"
        )));
    }
    let mut kraus = vec![CMatrix::from_fn(dim + 1, dim, |o, i| {
        Complex64::new(if o == i { p.sqrt() } else { 0.0 }, 0.0)
    })];
    for k in 0..dim {
        let mut op = CMatrix::zeros(dim + 1, dim);
        op[(dim, k)] = Complex64::new((1.0 - p).sqrt(), 0.0);
        kraus.push(op);
    }
    Channel::from_kraus(
        &kraus,
        vec![SystemLabel::new(input, dim)],
        vec![SystemLabel::new(output, dim + 1)],
    )
}

/// Channel with no inputs that prepares `sigma`.
pub fn preparation_channel(sigma: &State) -> Channel {
    let op = sigma.operator().clone();
    let outputs = op.names().into_iter().map(String::from).collect();
    Channel::new(op, Vec::new(), outputs).expect("state labels are valid")
}

/// Discards its input.
pub fn trace_channel(input: &str, dim: usize) -> Channel {
    let choi = LabeledOperator::identity(vec![SystemLabel::new(input, dim)]).expect("valid label");
    Channel::new(choi, vec![input.to_string()], Vec::new()).expect("valid label")
}

/// Channel with a single Kraus operator `v` (an isometry for CPTP).
pub fn isometry_channel(v: &CMatrix, input: &str, output: &str) -> Result<Channel> {
    Channel::from_kraus(
        std::slice::from_ref(v),
        vec![SystemLabel::new(input, v.ncols())],
        vec![SystemLabel::new(output, v.nrows())],
    )
}

#[derive(Serialize, Deserialize)]
struct ChannelRepr {
    #[serde(rename = "in")]
    inputs: Vec<SystemLabel>,
    #[serde(rename = "out")]
    outputs: Vec<SystemLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    choi: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kraus: Option<Vec<Vec<Vec<[f64; 2]>>>>,
}

impl TryFrom<ChannelRepr> for Channel {
    type Error = Error;

    fn try_from(repr: ChannelRepr) -> Result<Self> {
        match (repr.choi, repr.kraus) {
            (Some(choi), None) => {
                let matrix = matrix_from_pairs(&choi)?;
                let in_names = repr.inputs.iter().map(|l| l.name.clone()).collect();
                let out_names = repr.outputs.iter().map(|l| l.name.clone()).collect();
                let mut labels = repr.outputs;
                labels.extend(repr.inputs);
                Channel::new(LabeledOperator::new(labels, matrix)?, in_names, out_names)
            }
            (None, Some(kraus)) => {
                let ops = kraus.iter().map(|k| matrix_from_pairs(k)).collect::<Result<Vec<_>>>()?;
                Channel::from_kraus(&ops, repr.inputs, repr.outputs)
            }
            _ => Err(Error::InvalidArgument(
                "channel needs exactly one of `choi` or `kraus`".into(),
            )),
        }
    }
}

impl From<Channel> for ChannelRepr {
    fn from(ch: Channel) -> Self {
        ChannelRepr {
            inputs: ch.input_labels(),
            outputs: ch.output_labels(),
            choi: Some(matrix_to_pairs(ch.choi.matrix())),
            kraus: None,
        }
    }
}

/// A density operator: positive semidefinite with unit trace. Deserializing
/// checks both at [`DEFAULT_TOL`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LabeledOperator", into = "LabeledOperator")]
pub struct State(LabeledOperator);

impl TryFrom<LabeledOperator> for State {
    type Error = Error;

    fn try_from(op: LabeledOperator) -> Result<Self> {
        State::new(op, DEFAULT_TOL)
    }
}

impl From<State> for LabeledOperator {
    fn from(s: State) -> Self {
        s.0
    }
}

impl State {
    pub fn new(op: LabeledOperator, tol: f64) -> Result<Self> {
        let tr = op.trace();
        if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
            return Err(Error::InvalidState(format!("trace is {tr}")));
        }
        match op.is_psd(tol) {
            Ok(true) => Ok(Self(op)),
            Ok(false) => Err(Error::InvalidState("not positive semidefinite".into())),
            Err(e) => Err(Error::InvalidState(e.to_string())),
        }
    }

    /// Wraps an operator that is a state by construction.
    pub fn from_operator_unchecked(op: LabeledOperator) -> Self {
        Self(op)
    }

    pub fn pure(labels: Vec<SystemLabel>, ket: &[Complex64]) -> Result<Self> {
        let norm: f64 = ket.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let ket: Vec<Complex64> = ket.iter().map(|z| z / norm).collect();
        Ok(Self(LabeledOperator::projector(labels, &ket)?))
    }

    /// Computational basis state `|k><k|`.
    pub fn basis(label: SystemLabel, k: usize) -> Result<Self> {
        if k >= label.dim {
            return Err(Error::Dimension(format!("basis index {k} >= dim {}", label.dim)));
        }
        let mut ket = vec![Complex64::new(0.0, 0.0); label.dim];
        ket[k] = Complex64::new(1.0, 0.0);
        Self::pure(vec![label], &ket)
    }

    pub fn maximally_mixed(labels: Vec<SystemLabel>) -> Result<Self> {
        let d: usize = labels.iter().map(|l| l.dim).product();
        Ok(Self(LabeledOperator::identity(labels)?.scale(1.0 / d as f64)))
    }

    /// `|Φ+><Φ+|` on two subsystems of equal dimension.
    pub fn max_entangled(a: &str, b: &str, dim: usize) -> Result<Self> {
        let mut ket = vec![Complex64::new(0.0, 0.0); dim * dim];
        for k in 0..dim {
            ket[k * dim + k] = Complex64::new(1.0, 0.0);
        }
        Self::pure(vec![SystemLabel::new(a, dim), SystemLabel::new(b, dim)], &ket)
    }

    pub fn operator(&self) -> &LabeledOperator {
        &self.0
    }

    pub fn into_operator(self) -> LabeledOperator {
        self.0
    }

    pub fn partial_trace<S: AsRef<str>>(&self, over: &[S]) -> Result<State> {
        Ok(Self(self.0.partial_trace(over)?))
    }

    pub fn tensor_product(&self, other: &State) -> Result<State> {
        Ok(Self(self.0.tensor_product(&other.0)?))
    }

    pub fn relabel(&self, renames: &[(&str, &str)]) -> Result<State> {
        Ok(Self(self.0.relabel(renames)?))
    }
}

/// Squared Uhlmann fidelity `(Tr √(√σ ρ √σ))²`.
pub fn fidelity(rho: &State, sigma: &State) -> Result<f64> {
    let sigma_aligned = rho.operator().align(sigma.operator())?;
    let sqrt_sigma = hermitian_function(&sigma_aligned.hermitian_part(), |v| v.max(0.0).sqrt());
    let inner = &sqrt_sigma * rho.operator().hermitian_part() * &sqrt_sigma;
    let inner = (&inner + inner.adjoint()) * Complex64::new(0.5, 0.0);
    let root_sum: f64 = hermitian_eigenvalues(&inner).iter().map(|v| v.max(0.0).sqrt()).sum();
    Ok((root_sum * root_sum).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_channel, random_density};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn lab(n: &str, d: usize) -> SystemLabel {
        SystemLabel::new(n, d)
    }

    fn kraus_apply(kraus: &[CMatrix], rho: &CMatrix) -> CMatrix {
        kraus
            .iter()
            .fold(CMatrix::zeros(kraus[0].nrows(), kraus[0].nrows()), |acc, k| {
                acc + k * rho * k.adjoint()
            })
    }

    fn pauli() -> [CMatrix; 4] {
        let i = Complex64::new(0.0, 1.0);
        [
            CMatrix::identity(2, 2),
            CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]),
            CMatrix::from_row_slice(2, 2, &[c(0.0), -i, i, c(0.0)]),
            CMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)]),
        ]
    }

    #[test]
    fn identity_kraus_gives_twice_bell() {
        let ch = choi_from_kraus(&[CMatrix::identity(2, 2)], lab("in", 2), lab("out", 2)).unwrap();
        let bell = State::max_entangled("out", "in", 2).unwrap();
        assert!(ch.choi().approx_eq(&bell.operator().scale(2.0), 1e-12));
        assert!((ch.choi().trace().re - 2.0).abs() < 1e-12);
    }

    #[test]
    fn reset_channel_choi() {
        let k0 = CMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(0.0)]);
        let k1 = CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.0), c(0.0)]);
        let ch = choi_from_kraus(&[k0, k1], lab("in", 2), lab("out", 2)).unwrap();
        // Σ_ij |0><0| δ_ij ⊗ |i><j| = |0><0| ⊗ id
        let expected = State::basis(lab("out", 2), 0)
            .unwrap()
            .into_operator()
            .tensor_product(&LabeledOperator::identity(vec![lab("in", 2)]).unwrap())
            .unwrap();
        assert!(ch.choi().approx_eq(&expected, 1e-12));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rho = State::from_operator_unchecked(random_density(&mut rng, vec![lab("in", 2)]));
        let out = ch.apply(&rho).unwrap();
        assert!(out
            .operator()
            .approx_eq(State::basis(lab("out", 2), 0).unwrap().operator(), 1e-12));
    }

    #[test]
    fn depolarizing_choi_spectrum() {
        for lambda in [0.0, 0.2, 0.5, 1.0] {
            let p = pauli();
            let kraus: Vec<CMatrix> = p
                .iter()
                .enumerate()
                .map(|(k, s)| {
                    let w: f64 = if k == 0 { 1.0 - 3.0 * lambda / 4.0 } else { lambda / 4.0 };
                    s * c(w.sqrt())
                })
                .collect();
            let ch = choi_from_kraus(&kraus, lab("in", 2), lab("out", 2)).unwrap();
            let eig = ch.choi().eigenvalues();
            let mut expected = vec![lambda / 2.0; 3];
            expected.push(2.0 - 1.5 * lambda);
            expected.sort_by(f64::total_cmp);
            for (a, b) in eig.iter().zip(&expected) {
                assert!((a - b).abs() < 1e-12, "λ={lambda}: {eig:?} vs {expected:?}");
            }
        }
    }

    #[test]
    fn mismatched_kraus_shapes() {
        let err = choi_from_kraus(&[CMatrix::identity(3, 2)], lab("in", 2), lab("out", 2));
        assert!(matches!(err, Err(Error::Dimension(_))));
    }

    #[test]
    fn cptp_reports() {
        let id = identity_channel("in", "out", 2);
        let r = id.is_cptp(1e-9);
        assert!(r.psd && r.tp_residual < 1e-12);
        let half = Channel::new(id.choi().scale(0.5), vec!["in".into()], vec!["out".into()]).unwrap();
        let r = half.is_cptp(1e-9);
        assert!(r.psd);
        assert!((r.tp_residual - 0.5 * 2.0).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let ch = random_channel(&mut rng, vec![lab("in", 2)], vec![lab("out", 3)], 3);
            let r = ch.is_cptp(1e-9);
            assert!(r.psd && r.tp_residual <= 1e-9);
        }
    }

    #[test]
    fn apply_matches_kraus_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let v = crate::random::random_isometry(&mut rng, 3 * 2, 2);
            let kraus: Vec<CMatrix> = (0..2)
                .map(|k| CMatrix::from_fn(3, 2, |o, i| v[(o * 2 + k, i)]))
                .collect();
            let ch = choi_from_kraus(&kraus, lab("in", 2), lab("out", 3)).unwrap();
            let rho = random_density(&mut rng, vec![lab("in", 2)]);
            let out = ch.apply(&State::from_operator_unchecked(rho.clone())).unwrap();
            let oracle = kraus_apply(&kraus, rho.matrix());
            assert!((out.operator().matrix() - oracle).norm() < 1e-9);
        }
    }

    #[test]
    fn apply_label_errors() {
        let ch = identity_channel("in", "out", 2);
        let wrong = State::maximally_mixed(vec![lab("x", 2)]).unwrap();
        assert!(matches!(ch.apply(&wrong), Err(Error::UnknownLabel(_))));
        let wrong_dim = State::maximally_mixed(vec![lab("in", 3)]).unwrap();
        assert!(matches!(ch.apply(&wrong_dim), Err(Error::LabelDimMismatch { .. })));
    }

    #[test]
    fn identity_extension_on_untouched_labels() {
        let ch = identity_channel("in", "out", 2);
        let bell = State::max_entangled("R", "in", 2).unwrap();
        let out = ch.apply(&bell).unwrap();
        assert!(out
            .operator()
            .approx_eq(State::max_entangled("R", "out", 2).unwrap().operator(), 1e-12));
    }

    #[test]
    fn erasure_cases() {
        let e = erasure_channel(0.75, 2, "in", "out").unwrap();
        let out = e.apply(&State::maximally_mixed(vec![lab("in", 2)]).unwrap()).unwrap();
        let expected = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.375), c(0.375), c(0.25)]));
        assert!((out.operator().matrix() - expected).norm() < 1e-12);

        let e = erasure_channel(0.5, 2, "in", "out").unwrap();
        let out = e.apply(&State::basis(lab("in", 2), 0).unwrap()).unwrap();
        let expected = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.5), c(0.0), c(0.5)]));
        assert!((out.operator().matrix() - expected).norm() < 1e-12);

        let e1 = erasure_channel(1.0, 3, "in", "out").unwrap();
        let rho = State::basis(lab("in", 3), 2).unwrap();
        let out = e1.apply(&rho).unwrap();
        assert!(out
            .operator()
            .approx_eq(State::basis(lab("out", 4), 2).unwrap().operator(), 1e-12));

        let e0 = erasure_channel(0.0, 3, "in", "out").unwrap();
        let out = e0.apply(&rho).unwrap();
        assert!(out
            .operator()
            .approx_eq(State::basis(lab("out", 4), 3).unwrap().operator(), 1e-12));

        assert!(matches!(
            erasure_channel(1.2, 2, "in", "out"),
            Err(Error::InvalidProbability(_))
        ));
        assert!(matches!(
            erasure_channel(-0.1, 2, "in", "out"),
            Err(Error::InvalidProbability(_))
        ));
    }

    #[test]
    fn erasure_is_cptp_on_grid() {
        for k in 0..=10 {
            let p = k as f64 / 10.0;
            for d in [2, 3] {
                let e = erasure_channel(p, d, "in", "out").unwrap();
                assert!((e.choi().trace().re - d as f64).abs() < 1e-12);
                assert!(e.is_cptp(1e-9).passes(1e-9));
            }
        }
    }

    #[test]
    fn compose_identities_and_preparation() {
        let id = identity_channel("in", "out", 2);
        let idid = Channel::compose(&id, &id).unwrap();
        assert!(idid.choi().approx_eq(id.choi(), 1e-12));

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let sigma = State::from_operator_unchecked(random_density(&mut rng, vec![lab("out", 3)]));
        let constant = Channel::compose(&preparation_channel(&sigma), &trace_channel("in", 2)).unwrap();
        let rho = State::from_operator_unchecked(random_density(&mut rng, vec![lab("in", 2)]));
        let out = constant.apply(&rho).unwrap();
        assert!(out.operator().approx_eq(sigma.operator(), 1e-12));

        let bad = identity_channel("x", "y", 3);
        assert!(matches!(Channel::compose(&bad, &id), Err(Error::Dimension(_))));
    }

    #[test]
    fn compose_matches_kraus_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let v1 = crate::random::random_isometry(&mut rng, 3 * 2, 2);
            let k1: Vec<CMatrix> = (0..2)
                .map(|k| CMatrix::from_fn(3, 2, |o, i| v1[(o * 2 + k, i)]))
                .collect();
            let v2 = crate::random::random_isometry(&mut rng, 2 * 3, 3);
            let k2: Vec<CMatrix> = (0..3)
                .map(|k| CMatrix::from_fn(2, 3, |o, i| v2[(o * 3 + k, i)]))
                .collect();
            let c1 = choi_from_kraus(&k1, lab("a", 2), lab("b", 3)).unwrap();
            let c2 = choi_from_kraus(&k2, lab("b", 3), lab("c", 2)).unwrap();
            let composed = Channel::compose(&c2, &c1).unwrap();
            let products: Vec<CMatrix> = k2.iter().flat_map(|b| k1.iter().map(move |a| b * a)).collect();
            let oracle = choi_from_kraus(&products, lab("a", 2), lab("c", 2)).unwrap();
            assert!(composed.choi().approx_eq(oracle.choi(), 1e-9));

            let rho = State::from_operator_unchecked(random_density(&mut rng, vec![lab("a", 2)]));
            let lhs = composed.apply(&rho).unwrap();
            let rhs = c2.apply(&c1.apply(&rho).unwrap()).unwrap();
            assert!(lhs.operator().approx_eq(rhs.operator(), 1e-9));
        }
    }

    #[test]
    fn compose_is_associative() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = random_channel(&mut rng, vec![lab("x", 2)], vec![lab("y", 3)], 2);
        let b = random_channel(&mut rng, vec![lab("y", 3)], vec![lab("z", 2)], 2);
        let c3 = random_channel(&mut rng, vec![lab("z", 2)], vec![lab("w", 2)], 2);
        let left = Channel::compose(&c3, &Channel::compose(&b, &a).unwrap()).unwrap();
        let right = Channel::compose(&Channel::compose(&c3, &b).unwrap(), &a).unwrap();
        assert!(left.choi().approx_eq(right.choi(), 1e-10));
    }

    #[test]
    fn fidelity_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rho = State::from_operator_unchecked(random_density(&mut rng, vec![lab("A", 3)]));
        assert!((fidelity(&rho, &rho).unwrap() - 1.0).abs() < 1e-9);
        let zero = State::basis(lab("A", 2), 0).unwrap();
        let one = State::basis(lab("A", 2), 1).unwrap();
        assert!(fidelity(&zero, &one).unwrap().abs() < 1e-12);
        let mixed = State::maximally_mixed(vec![lab("A", 2)]).unwrap();
        // pure-mixed pair: F = <ψ|σ|ψ>
        assert!((fidelity(&zero, &mixed).unwrap() - 0.5).abs() < 1e-12);
        let sigma = State::from_operator_unchecked(random_density(&mut rng, vec![lab("A", 3)]));
        let f1 = fidelity(&rho, &sigma).unwrap();
        let f2 = fidelity(&sigma, &rho).unwrap();
        assert!((f1 - f2).abs() < 1e-9);
        assert!(f1 > 0.0 && f1 < 1.0);
    }

    #[test]
    fn state_validation() {
        let op = LabeledOperator::identity(vec![lab("A", 2)]).unwrap();
        assert!(matches!(State::new(op.clone(), 1e-9), Err(Error::InvalidState(_))));
        assert!(State::new(op.scale(0.5), 1e-9).is_ok());
    }

    #[test]
    fn channel_json_forms() {
        let ch = erasure_channel(0.3, 2, "X", "Y").unwrap();
        let text = serde_json::to_string(&ch).unwrap();
        let back: Channel = serde_json::from_str(&text).unwrap();
        assert!(back.choi().approx_eq(ch.choi(), 1e-15));

        let kraus = r#"{"in":[{"name":"X","dim":2}],"out":[{"name":"Y","dim":2}],
            "kraus":[[[[0,0],[1,0]],[[1,0],[0,0]]]]}"#;
        let x: Channel = serde_json::from_str(kraus).unwrap();
        assert!(x.is_cptp(1e-12).passes(1e-12));
        assert_eq!(x.choi().matrix()[(1, 2)], c(1.0));

        let both = r#"{"in":[],"out":[],"choi":[[[1,0]]],"kraus":[[[[1,0]]]]}"#;
        assert!(serde_json::from_str::<Channel>(both).is_err());
    }

    #[test]
    fn state_json_is_validated() {
        let s = State::max_entangled("A", "B", 2).unwrap();
        let text = serde_json::to_string(&s).unwrap();
        let back: State = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
        let bad = r#"{"labels":[{"name":"A","dim":1}],"matrix":[[[2,0]]]}"#;
        assert!(serde_json::from_str::<State>(bad).is_err());
    }
}
