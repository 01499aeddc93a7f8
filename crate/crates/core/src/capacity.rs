//! Entropies, coherent information and capacities. All logarithms are base 2.

use nalgebra::{DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{Channel, State};
use crate::error::{Error, Result};
use crate::operator::{hermitian_eigenvalues, CMatrix, LabeledOperator, SystemLabel};

/// Eigenvalues below this are treated as exact zeros.
pub const EIGEN_FLOOR: f64 = 1e-12;

fn entropy_of_spectrum(eig: &[f64]) -> f64 {
    eig.iter()
        .filter(|&&v| v > EIGEN_FLOOR)
        .map(|&v| -v * v.log2())
        .sum::<f64>()
        .max(0.0)
}

fn matrix_entropy(m: &CMatrix) -> f64 {
    entropy_of_spectrum(&hermitian_eigenvalues(m))
}

/// `S(ρ) = −Σ λ log₂ λ`.
pub fn von_neumann_entropy(rho: &State) -> f64 {
    matrix_entropy(&rho.operator().hermitian_part())
}

/// Name of the purifying reference system.
const REFERENCE: &str = "\u{1}ref";

/// `S(C(ρ)) − S((C ⊗ id_R)(φ_ρ))` with `φ_ρ` a purification of `ρ` on a
/// reference of dimension `rank(ρ)`.
pub fn coherent_information(channel: &Channel, rho: &State) -> Result<f64> {
    let ins = channel.input_labels();
    let op = rho.operator().permute_to(channel.inputs())?;
    let eig = SymmetricEigen::new(op.hermitian_part());
    let support: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&k| eig.eigenvalues[k] > EIGEN_FLOOR)
        .collect();
    let d = op.dim();
    let r = support.len().max(1);
    // |φ> = Σ_k √λ_k |k> ⊗ |k_R>
    let mut ket = vec![Complex64::new(0.0, 0.0); d * r];
    for (slot, &k) in support.iter().enumerate() {
        let amp = eig.eigenvalues[k].sqrt();
        for i in 0..d {
            ket[i * r + slot] = eig.eigenvectors[(i, k)] * amp;
        }
    }
    let mut labels = ins;
    labels.push(SystemLabel::new(REFERENCE, r));
    let phi = LabeledOperator::projector(labels, &ket)?;
    let joint = phi.link_product(channel.choi())?;
    let out = joint.partial_trace(&[REFERENCE])?;
    Ok(matrix_entropy(&out.hermitian_part()) - matrix_entropy(&joint.hermitian_part()))
}

/// Closed-form quantum capacity of the erasure channel, `max{0, (2p − 1) log₂ d}`.
pub fn erasure_quantum_capacity(p: f64, d: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    Ok(((2.0 * p - 1.0) * (d as f64).log2()).max(0.0))
}

/// Closed-form classical capacity of the erasure channel, `p log₂ d`.
pub fn erasure_classical_capacity(p: f64, d: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability(p));
    }
    Ok(p * (d as f64).log2())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub restarts: usize,
    /// A sweep improving the best value by less than this halves the step.
    pub tol: f64,
    pub seed: u64,
    pub initial_step: f64,
    /// Converged once the step drops below this.
    pub min_step: f64,
    pub max_sweeps: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 32,
            tol: 1e-12,
            seed: 0,
            initial_step: 0.5,
            min_step: 1e-10,
            max_sweeps: 20_000,
        }
    }
}

impl OptimizerConfig {
    pub fn new(restarts: usize, tol: f64, seed: u64) -> Self {
        Self {
            restarts,
            tol,
            seed,
            ..Self::default()
        }
    }
}

/// Best coherent information found and the input state achieving it.
#[derive(Debug, Clone)]
pub struct CapacityEstimate {
    pub value: f64,
    pub witness: State,
    pub restarts_used: usize,
    pub converged: bool,
}

/// Coherent information as a function of purification amplitudes, evaluated
/// through Kraus operators. The complementary output is the Gram matrix of
/// the branches `(K_k ⊗ I)|ψ>`.
struct Objective {
    kraus: Vec<CMatrix>,
    din: usize,
}

impl Objective {
    fn new(channel: &Channel) -> Result<Self> {
        let din = channel.input_dim();
        let dout = channel.output_dim();
        let order: Vec<&str> = channel
            .outputs()
            .iter()
            .chain(channel.inputs())
            .map(String::as_str)
            .collect();
        let choi = channel.choi().permute_to(&order)?;
        let eig = SymmetricEigen::new(choi.hermitian_part());
        let kraus = (0..eig.eigenvalues.len())
            .filter(|&k| eig.eigenvalues[k] > EIGEN_FLOOR)
            .map(|k| {
                let amp = eig.eigenvalues[k].sqrt();
                CMatrix::from_fn(dout, din, |o, i| eig.eigenvectors[(o * din + i, k)] * amp)
            })
            .collect();
        Ok(Self { kraus, din })
    }

    /// Purification as a `din x din` matrix `Ψ[i, r]` from real parameters.
    fn purification(&self, x: &[f64]) -> CMatrix {
        let n = self.din * self.din;
        let v = DVector::from_fn(n, |k, _| Complex64::new(x[2 * k], x[2 * k + 1]));
        let norm = v.norm();
        CMatrix::from_fn(self.din, self.din, |i, r| v[i * self.din + r] / norm)
    }

    fn value(&self, x: &[f64]) -> f64 {
        let psi = self.purification(x);
        let branches: Vec<CMatrix> = self.kraus.iter().map(|k| k * &psi).collect();
        let dout = branches.first().map_or(1, |b| b.nrows());
        let mut out = CMatrix::zeros(dout, dout);
        for b in &branches {
            out += b * b.adjoint();
        }
        let m = branches.len();
        let env = CMatrix::from_fn(m, m, |k, l| {
            branches[l]
                .iter()
                .zip(branches[k].iter())
                .map(|(a, b)| a.conj() * b)
                .sum()
        });
        matrix_entropy(&out) - matrix_entropy(&env)
    }

    fn input_state(&self, x: &[f64], labels: Vec<SystemLabel>) -> State {
        let psi = self.purification(x);
        let rho = &psi * psi.adjoint();
        State::from_operator_unchecked(LabeledOperator::new(labels, rho).expect("input labels"))
    }
}

struct StartResult {
    value: f64,
    x: Vec<f64>,
    converged: bool,
}

fn refine(obj: &Objective, cfg: &OptimizerConfig, start: usize) -> StartResult {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(start as u64);
    let dim = 2 * obj.din * obj.din;
    let mut x: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    x.iter_mut().for_each(|v| *v /= norm);
    let mut best = obj.value(&x);
    let mut step = cfg.initial_step;
    for _ in 0..cfg.max_sweeps {
        let before = best;
        for j in 0..dim {
            let orig = x[j];
            let mut moved = None;
            for delta in [step, -step] {
                x[j] = orig + delta;
                let v = obj.value(&x);
                if v > best && moved.is_none_or(|(bv, _)| v > bv) {
                    moved = Some((v, x[j]));
                }
            }
            match moved {
                Some((v, xj)) => {
                    best = v;
                    x[j] = xj;
                }
                None => x[j] = orig,
            }
        }
        // keep the parameters on the unit sphere
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v /= norm);
        best = obj.value(&x);
        if best - before < cfg.tol {
            step *= 0.5;
            if step < cfg.min_step {
                return StartResult {
                    value: best,
                    x,
                    converged: true,
                };
            }
        }
    }
    StartResult {
        value: best,
        x,
        converged: false,
    }
}

/// Multi-start derivative-free maximization of the coherent information
/// over input states. Starts run in parallel; the reported start is the
/// best value, ties broken by the lowest start index, so the result does not
/// depend on scheduling.
pub fn max_coherent_information(channel: &Channel, cfg: &OptimizerConfig) -> Result<CapacityEstimate> {
    if cfg.restarts == 0 {
        return Err(Error::InvalidArgument("restarts must be at least 1".into()));
    }
    let obj = Objective::new(channel)?;
    let results: Vec<StartResult> = (0..cfg.restarts)
        .into_par_iter()
        .map(|s| refine(&obj, cfg, s))
        .collect();
    let mut best_idx = 0;
    for (k, r) in results.iter().enumerate() {
        if r.value > results[best_idx].value {
            best_idx = k;
        }
    }
    let best = &results[best_idx];
    Ok(CapacityEstimate {
        value: best.value,
        witness: obj.input_state(&best.x, channel.input_labels()),
        restarts_used: cfg.restarts,
        converged: results.iter().all(|r| r.converged),
    })
}

/// Row-stochastic matrix `P[x][y] = P(y|x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct StochasticMatrix(Vec<Vec<f64>>);

impl StochasticMatrix {
    pub const TOL: f64 = 1e-9;

    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let width = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || width == 0 {
            return Err(Error::NotStochastic("empty matrix".into()));
        }
        for (x, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::NotStochastic(format!(
                    "row {x} has {} entries, expected {width}",
                    row.len()
                )));
            }
            if let Some(v) = row.iter().find(|v| v.is_nan() || **v < -Self::TOL) {
                return Err(Error::NotStochastic(format!("row {x} has entry {v}")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > Self::TOL {
                return Err(Error::NotStochastic(format!("row {x} sums to {sum}")));
            }
        }
        Ok(Self(rows))
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.0
    }

    pub fn inputs(&self) -> usize {
        self.0.len()
    }

    pub fn outputs(&self) -> usize {
        self.0[0].len()
    }

    /// Mutual information `I(X;Y)` for input distribution `q`.
    pub fn mutual_information(&self, q: &[f64]) -> f64 {
        let r = self.output_distribution(q);
        self.0
            .iter()
            .zip(q)
            .map(|(row, &qx)| qx * relative_entropy(row, &r))
            .sum()
    }

    fn output_distribution(&self, q: &[f64]) -> Vec<f64> {
        let mut r = vec![0.0; self.outputs()];
        for (row, &qx) in self.0.iter().zip(q) {
            for (ry, &p) in r.iter_mut().zip(row) {
                *ry += qx * p;
            }
        }
        r
    }
}

impl TryFrom<Vec<Vec<f64>>> for StochasticMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(rows)
    }
}

impl From<StochasticMatrix> for Vec<Vec<f64>> {
    fn from(m: StochasticMatrix) -> Self {
        m.0
    }
}

fn relative_entropy(p: &[f64], r: &[f64]) -> f64 {
    p.iter()
        .zip(r)
        .filter(|(&pv, _)| pv > 0.0)
        .map(|(&pv, &rv)| pv * (pv / rv).log2())
        .sum()
}

/// `P(y|x) = Tr(E_y C(ρ_x))`.
pub fn induced_classical_channel(
    channel: &Channel,
    inputs: &[State],
    povm: &[LabeledOperator],
    tol: f64,
) -> Result<StochasticMatrix> {
    if povm.is_empty() {
        return Err(Error::InvalidPovm("no effects".into()));
    }
    let outs = channel.output_labels();
    let mut total = LabeledOperator::zeros(outs.clone())?;
    for (k, e) in povm.iter().enumerate() {
        match e.is_psd(tol) {
            Ok(true) => {}
            Ok(false) => return Err(Error::InvalidPovm(format!("effect {k} is not positive"))),
            Err(err) => return Err(Error::InvalidPovm(format!("effect {k}: {err}"))),
        }
        total = total
            .add(e)
            .map_err(|err| Error::InvalidPovm(format!("effect {k}: {err}")))?;
    }
    let id = LabeledOperator::identity(outs)?;
    let gap = total.distance(&id)?;
    if gap > tol {
        return Err(Error::InvalidPovm(format!(
            "effects sum to identity only within {gap:.3e}"
        )));
    }
    let mut rows = Vec::with_capacity(inputs.len());
    for rho in inputs {
        let out = channel.apply(rho)?;
        let row = povm
            .iter()
            .map(|e| {
                let e = out.operator().align(e)?;
                Ok((e.matrix() * out.operator().matrix()).trace().re.max(0.0))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    StochasticMatrix::new(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlahutArimoto {
    pub capacity: f64,
    pub lower: f64,
    pub upper: f64,
    pub input_distribution: Vec<f64>,
    pub iterations: usize,
}

/// Classical capacity of a discrete memoryless channel. Iterates until the
/// standard upper and lower bounds are within `tol`.
pub fn blahut_arimoto(p: &StochasticMatrix, tol: f64) -> BlahutArimoto {
    const MAX_ITERATIONS: usize = 1_000_000;
    let n = p.inputs();
    let mut q = vec![1.0 / n as f64; n];
    let mut iterations = 0;
    loop {
        let r = p.output_distribution(&q);
        let div: Vec<f64> = p.rows().iter().map(|row| relative_entropy(row, &r)).collect();
        let weights: Vec<f64> = q.iter().zip(&div).map(|(qx, d)| qx * d.exp2()).collect();
        let z: f64 = weights.iter().sum();
        let lower = z.log2();
        let upper = div.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if upper - lower < tol || iterations >= MAX_ITERATIONS {
            return BlahutArimoto {
                capacity: lower.max(0.0),
                lower,
                upper,
                input_distribution: q,
                iterations,
            };
        }
        q = weights.iter().map(|w| w / z).collect();
        iterations += 1;
    }
}
