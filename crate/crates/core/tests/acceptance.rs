//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::process::{Command, ExitCode};
use std::time::Instant;

use causalcap::channel::{identity_channel, State};
use causalcap::operator::{CMatrix, LabeledOperator, SystemLabel};
use causalcap::process::{CausalDecomposition, Direction, ProcessDims, ProcessMatrix};
use causalcap::protocol::{identity_code_spec, simulate_protocol};
use causalcap::random::random_channel;
use causalcap::reduction::{example_process, routing_channel, run_pipeline};
use causalcap::sweep::{classical_capacity, parse_p_grid, run_sweep, to_csv, SweepConfig, SweepDirection};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20_240_601;

type Criterion = (&'static str, fn() -> Verdict);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn sweep_config(direction: SweepDirection) -> SweepConfig {
    SweepConfig {
        dim: 2,
        p_grid: parse_p_grid("0:1:0.1").unwrap(),
        restarts: 32,
        tol: 1e-9,
        seed: SEED,
        direction,
    }
}

fn quantum_sweep() -> Verdict {
    let start = Instant::now();
    let rows = run_sweep(&sweep_config(SweepDirection::Ab)).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let mut worst_hi = 0.0f64;
    let mut worst_lo = 0.0f64;
    for r in &rows {
        let q = r.q_cap_numeric_ab.unwrap();
        if r.p > 0.5 {
            worst_hi = worst_hi.max((q - (2.0 * r.p - 1.0)).abs());
        } else {
            worst_lo = worst_lo.max(q);
        }
    }
    verdict(
        worst_hi <= 1e-3 && worst_lo <= 1e-6 && secs <= 300.0,
        format!(
            "max coherent information vs max(0, 2p-1) on 11 points: err {worst_hi:.2e} above 1/2, max {worst_lo:.2e} at or below, {secs:.1} s"
        ),
    )
}

fn direction_exclusivity() -> Verdict {
    let rows = run_sweep(&sweep_config(SweepDirection::Both)).unwrap();
    let mut both_positive = Vec::new();
    let mut half = (f64::NAN, f64::NAN);
    for r in &rows {
        let (ab, ba) = (r.q_cap_numeric_ab.unwrap(), r.q_cap_numeric_ba.unwrap());
        if ab > 1e-6 && ba > 1e-6 {
            both_positive.push(r.p);
        }
        if r.p == 0.5 {
            half = (ab, ba);
        }
    }
    verdict(
        both_positive.is_empty() && half.0 <= 1e-6 && half.1 <= 1e-6,
        format!(
            "both directions positive at {both_positive:?}; at p = 0.5: ab {:.2e}, ba {:.2e}",
            half.0, half.1
        ),
    )
}

fn erasure_exactness() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst_sim = 0.0f64;
    let mut worst_bo = 0.0f64;
    for k in 0..100 {
        let p = rng.random::<f64>();
        let dec = CausalDecomposition::random(ProcessDims::qubits(), 2, p, SEED + k).unwrap();
        let alice = random_channel(
            &mut rng,
            vec![SystemLabel::new("A_I", 2), SystemLabel::new("A_I'", 2)],
            vec![SystemLabel::new("A_O", 2)],
            1 + k as usize % 4,
        );
        let red = run_pipeline(&dec, &alice, 1e-9).unwrap();
        worst_sim = worst_sim.max(red.report.erasure_residual);
        worst_bo = worst_bo.max(red.report.bo_identity_residual);
    }
    verdict(
        worst_sim <= 1e-9 && worst_bo <= 1e-9,
        format!("100 random pairs: simulation residual {worst_sim:.2e}, B_O identity residual {worst_bo:.2e}"),
    )
}

fn identity_link_lemma() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let id = LabeledOperator::identity(vec![SystemLabel::new("A_O", 2)]).unwrap();
    let target = LabeledOperator::identity(vec![SystemLabel::new("A_I", 2), SystemLabel::new("A_I'", 3)]).unwrap();
    let mut worst = 0.0f64;
    for k in 0..100 {
        let a = random_channel(
            &mut rng,
            vec![SystemLabel::new("A_I", 2), SystemLabel::new("A_I'", 3)],
            vec![SystemLabel::new("A_O", 2)],
            1 + k % 6,
        );
        let linked = id.link_product(a.choi()).unwrap().permute_to(&["A_I", "A_I'"]).unwrap();
        worst = worst.max(linked.distance(&target).unwrap());
    }
    verdict(worst <= 1e-12, format!("100 random channels: residual {worst:.2e}"))
}

/// `W + ε Z` with `Z` diagonal, signs from the parity of the selected
/// output wires.
fn with_z(w: &ProcessMatrix, on_a_o: bool, on_b_o: bool, eps: f64) -> ProcessMatrix {
    let dims = w.dims();
    let z = CMatrix::from_fn(16, 16, |r, c| {
        let a_o = (r >> 2) & 1 == 1 && on_a_o;
        let b_o = r & 1 == 1 && on_b_o;
        let sign = if a_o ^ b_o { -1.0 } else { 1.0 };
        Complex64::new(if r == c { eps * sign } else { 0.0 }, 0.0)
    });
    let bump = LabeledOperator::new(dims.labels(), z).unwrap();
    ProcessMatrix::new(w.operator().add(&bump).unwrap()).unwrap()
}

fn validity_closure() -> Verdict {
    let dims = ProcessDims::qubits();
    let mut worst = 0.0f64;
    for k in 0..100u64 {
        let dir = if k % 2 == 0 {
            Direction::AliceFirst
        } else {
            Direction::BobFirst
        };
        let comb = ProcessMatrix::random_ordered(dims, 2, SEED + k, dir);
        worst = worst.max(comb.validate().values().into_iter().fold(0.0, f64::max));
        let p = (k as f64 + 0.5) / 100.0;
        let mix = CausalDecomposition::random(dims, 2, p, SEED + 1000 + k)
            .unwrap()
            .mixture();
        worst = worst.max(mix.validate().values().into_iter().fold(0.0, f64::max));
    }

    let mixed = ProcessMatrix::maximally_mixed(dims);
    let flag = State::basis(SystemLabel::new("A_I", 2), 0).unwrap();
    let rank_deficient =
        ProcessMatrix::comb(&flag, &identity_channel("A_O", "B_I", 2), Direction::AliceFirst, 2).unwrap();
    let stretched = rank_deficient.operator().combine(1.1, mixed.operator(), -0.1).unwrap();
    let injected = [
        ("positivity", ProcessMatrix::new(stretched).unwrap()),
        ("trace", ProcessMatrix::new(mixed.operator().scale(1.1)).unwrap()),
        ("marginal_a", with_z(&mixed, true, false, 0.05)),
        ("marginal_b", with_z(&mixed, false, true, 0.05)),
        ("no_loops", with_z(&mixed, true, true, 0.05)),
    ];
    let mut misattributed = Vec::new();
    for (name, w) in &injected {
        let found = w.validate().violations(1e-9);
        if found != [*name] {
            misattributed.push(format!("{name} -> {found:?}"));
        }
    }
    verdict(
        worst <= 1e-9 && misattributed.is_empty(),
        format!(
            "200 random processes: worst residual {worst:.2e}; 5 injected violations, misattributed {misattributed:?}"
        ),
    )
}

fn classical_survival() -> Verdict {
    let mut worst = 0.0f64;
    let mut positive = true;
    for d in [2usize, 3] {
        for p in [0.1, 0.25, 0.5, 0.9] {
            let dec = example_process(p, d).unwrap();
            let red = run_pipeline(&dec, &routing_channel(d + 1, d), 1e-9).unwrap();
            let c = classical_capacity(&red.reduced, d).unwrap();
            worst = worst.max((c - p * (d as f64).log2()).abs());
            positive &= c > 0.0;
        }
    }
    verdict(
        worst <= 1e-6 && positive,
        format!("Blahut-Arimoto vs p log2 d for d in {{2, 3}}: err {worst:.2e}"),
    )
}

/// `p Φ+ + (1 − p) id/2 ⊗ |2><2|` on `C ⊗ B_D` and its fidelity with the
/// embedded `Φ+`.
fn hand_contraction(p: f64) -> (CMatrix, f64) {
    let c = |v: f64| Complex64::new(v, 0.0);
    let s = 0.5f64.sqrt();
    let mut ket = CMatrix::zeros(6, 1);
    ket[(0, 0)] = c(s);
    ket[(4, 0)] = c(s);
    let mut rho = (&ket * ket.adjoint()) * c(p);
    rho[(2, 2)] += c((1.0 - p) / 2.0);
    rho[(5, 5)] += c((1.0 - p) / 2.0);
    let f = (ket.adjoint() * &rho * &ket)[(0, 0)].re;
    (rho, f)
}

fn fidelity_simulation() -> Verdict {
    let mut worst = 0.0f64;
    for p in [0.0, 0.5, 1.0] {
        let spec = identity_code_spec(example_process(p, 2).unwrap(), 2).unwrap();
        let out = simulate_protocol(&spec).unwrap();
        let (rho, f) = hand_contraction(p);
        worst = worst
            .max((out.fidelity - p).abs())
            .max((out.fidelity - f).abs())
            .max((out.rho.operator().matrix() - rho).norm());
    }
    verdict(
        worst <= 1e-9,
        format!("identity code at p in {{0, 0.5, 1}}: F - p and state error {worst:.2e}"),
    )
}

fn determinism() -> Verdict {
    let dir = std::env::temp_dir().join(format!("causalcap-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let run = |name: &str| {
        let path = dir.join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_causalcap"))
            .args(["theorem-sweep", "--dim", "2", "--p-grid", "0:1:0.1", "--restarts", "32"])
            .args(["--seed", &SEED.to_string(), "--direction", "both", "--output"])
            .arg(&path)
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(path).unwrap()
    };
    let first = run("first.csv");
    let second = run("second.csv");
    let library = to_csv(&run_sweep(&sweep_config(SweepDirection::Both)).unwrap()).into_bytes();
    let _ = std::fs::remove_dir_all(&dir);
    verdict(
        first == second && first == library,
        format!(
            "two CLI runs and one library run: {} bytes each, identical {}",
            first.len(),
            first == second && first == library
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("quantum capacity sweep", quantum_sweep),
        ("one direction at most", direction_exclusivity),
        ("erasure simulation exactness", erasure_exactness),
        ("identity on Alice's output", identity_link_lemma),
        ("process validity closure", validity_closure),
        ("classical capacity survives", classical_survival),
        ("entanglement fidelity", fidelity_simulation),
        ("deterministic CSV", determinism),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        let tag = if v.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {}. {name}: {}", k + 1, v.detail);
        failed += usize::from(!v.pass);
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
