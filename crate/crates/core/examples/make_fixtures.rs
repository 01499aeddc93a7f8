//! Writes the JSON fixtures used by the CLI tests and the README.
//!
//! ```text
//! cargo run -p causalcap --example make_fixtures -- crates/core/fixtures
//! ```

use std::path::{Path, PathBuf};

use causalcap::channel::identity_channel;
use causalcap::operator::{CMatrix, LabeledOperator, SystemLabel};
use causalcap::process::{CausalDecomposition, ProcessDims, ProcessMatrix};
use causalcap::protocol::identity_code_spec;
use causalcap::random::random_channel;
use causalcap::reduction::example_process;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

fn write(dir: &Path, name: &str, value: &impl Serialize) {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string(value).unwrap() + "\n").unwrap();
    println!("{}", path.display());
}

fn main() {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "crates/core/fixtures".into()));
    std::fs::create_dir_all(&dir).unwrap();

    let id = ProcessMatrix::from_channel(&identity_channel("X", "Y", 2), 1e-9).unwrap();
    write(&dir, "identity_process.json", &id);

    // Z on A_O times Z on B_O breaks only the no-loops condition.
    let dims = ProcessDims::qubits();
    let mixed = ProcessMatrix::maximally_mixed(dims);
    let zz = CMatrix::from_fn(16, 16, |r, c| {
        let sign = if ((r >> 2) ^ r) & 1 == 0 { 1.0 } else { -1.0 };
        Complex64::new(if r == c { 0.05 * sign } else { 0.0 }, 0.0)
    });
    let bump = LabeledOperator::new(dims.labels(), zz).unwrap();
    let perturbed = ProcessMatrix::new(mixed.operator().add(&bump).unwrap()).unwrap();
    write(&dir, "perturbed_process.json", &perturbed);

    write(&dir, "decomposition.json", &example_process(0.75, 2).unwrap());

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let dec = CausalDecomposition::random(dims, 2, 0.6, 11).unwrap();
    let alice = random_channel(
        &mut rng,
        vec![SystemLabel::new("A_I", 2), SystemLabel::new("A_I'", 2)],
        vec![SystemLabel::new("A_O", 2)],
        2,
    );
    write(&dir, "contract.json", &json!({ "dec": dec, "alice": alice }));

    let mut spec = identity_code_spec(example_process(0.5, 2).unwrap(), 2).unwrap();
    spec.epsilon = 0.55;
    write(&dir, "protocol_identity.json", &spec);

    write(&dir, "bsc.json", &vec![vec![0.9, 0.1], vec![0.1, 0.9]]);
}
