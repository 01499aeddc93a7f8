//! Seeded random instances: Ginibre density matrices, Haar-like isometries
//! and the channels built from them.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::channel::Channel;
use crate::operator::{CMatrix, LabeledOperator, SystemLabel};

fn gaussian(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn gaussian_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Operator with i.i.d. complex Gaussian entries; not Hermitian.
pub fn random_operator(rng: &mut impl Rng, labels: Vec<SystemLabel>) -> LabeledOperator {
    let d: usize = labels.iter().map(|l| l.dim).product();
    LabeledOperator::new(labels, gaussian_matrix(rng, d, d)).expect("labels are well formed")
}

/// Random Hermitian operator (GUE-like).
pub fn random_hermitian(rng: &mut impl Rng, labels: Vec<SystemLabel>) -> LabeledOperator {
    let g = random_operator(rng, labels);
    let h = g.hermitian_part();
    LabeledOperator::new(g.labels().to_vec(), h).expect("same labels")
}

/// Full-rank density matrix from the Ginibre ensemble.
pub fn random_density(rng: &mut impl Rng, labels: Vec<SystemLabel>) -> LabeledOperator {
    let d: usize = labels.iter().map(|l| l.dim).product();
    let g = gaussian_matrix(rng, d, d);
    let rho = &g * g.adjoint();
    let tr = rho.trace();
    LabeledOperator::new(labels, rho / tr).expect("labels are well formed")
}

/// Random unit vector.
pub fn random_ket(rng: &mut impl Rng, dim: usize) -> Vec<Complex64> {
    let v = DVector::from_fn(dim, |_, _| gaussian(rng));
    let n = v.norm();
    v.iter().map(|z| z / n).collect()
}

/// Isometry `rows x cols` (rows ≥ cols) with Haar-distributed columns:
/// Gaussian matrix, QR, and the phase fix on R's diagonal.
pub fn random_isometry(rng: &mut impl Rng, rows: usize, cols: usize) -> CMatrix {
    assert!(rows >= cols, "isometry needs rows >= cols");
    let qr = gaussian_matrix(rng, rows, cols).qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..cols {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for row in 0..rows {
            q[(row, k)] *= phase;
        }
    }
    q
}

pub fn random_unitary(rng: &mut impl Rng, dim: usize) -> CMatrix {
    random_isometry(rng, dim, dim)
}

/// Random CPTP channel: a Haar isometry into output ⊗ environment, with the
/// environment split off as Kraus operators.
pub fn random_channel(
    rng: &mut impl Rng,
    inputs: Vec<SystemLabel>,
    outputs: Vec<SystemLabel>,
    kraus_rank: usize,
) -> Channel {
    let din: usize = inputs.iter().map(|l| l.dim).product();
    let dout: usize = outputs.iter().map(|l| l.dim).product();
    let rank = kraus_rank.max(1).max(din.div_ceil(dout));
    let v = random_isometry(rng, dout * rank, din);
    let kraus: Vec<CMatrix> = (0..rank)
        .map(|k| CMatrix::from_fn(dout, din, |o, i| v[(o * rank + k, i)]))
        .collect();
    Channel::from_kraus(&kraus, inputs, outputs).expect("shapes are consistent")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn isometry_columns_are_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v = random_isometry(&mut rng, 6, 3);
        let gram = v.adjoint() * &v;
        assert!((gram - CMatrix::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn density_is_a_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rho = random_density(&mut rng, vec![SystemLabel::new("A", 3)]);
        assert!((rho.trace().re - 1.0).abs() < 1e-12);
        assert!(rho.is_psd(1e-12).unwrap());
    }

    #[test]
    fn same_seed_same_channel() {
        let mk = || {
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            random_channel(
                &mut rng,
                vec![SystemLabel::new("X", 2)],
                vec![SystemLabel::new("Y", 3)],
                2,
            )
        };
        assert_eq!(mk().choi(), mk().choi());
    }
}
