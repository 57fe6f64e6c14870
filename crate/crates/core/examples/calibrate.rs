//! Sizes `q`, `s` and `omega_const` for a profile.
//!
//! Runs the full pipeline with zero, sampled and extreme (`±B`) noise, takes
//! the largest decryption error `E`, and moves `q` to the next prime above
//! `5 * 8 * E`. Since `m` depends on `q`, this repeats until `q` stops changing
//! its bit length. `s` follows the trapdoor quality threshold at each step.
//!
//! ```text
//! cargo run --release -p srpe-core --features test-hooks --example calibrate -- toy
//! ```

use std::env;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use srpe_core::hooks::{EncHooks, NoiseMode};
use srpe_core::pe::orthogonal_vector;
use srpe_core::params::{ProfileSpec, SysParams};
use srpe_core::srpe::{self, Epoch};
use srpe_core::zq::next_prime;

const SAFETY: f64 = 8.0;
const HEADROOM: f64 = 5.0;
const TRIALS: usize = 12;

fn main() -> srpe_core::Result<()> {
    let name = env::args().nth(1).unwrap_or_else(|| "toy".into());
    let mut spec = match name.as_str() {
        "toy" => ProfileSpec::toy(),
        "small" => ProfileSpec::small(),
        other => panic!("unknown profile {other}"),
    };
    let mut rng = ChaCha20Rng::seed_from_u64(0x5eed);
    let mut dropped = false;
    for round in 0..8 {
        // measure with a negligible budget so validation never interferes
        let probe = SysParams::from_spec(ProfileSpec {
            omega_const: 1e-12,
            ..spec.clone()
        })?;
        let (e_max, threshold) = measure(&probe, &mut rng)?;
        let q = next_prime((HEADROOM * SAFETY * e_max as f64).ceil() as u64 + 1);
        let s = spec.s.max((threshold * 1.1 / 10.0).ceil() * 10.0);
        println!(
            "round {round}: q = {} (m = {}), s = {}, threshold = {threshold:.1}, E_max = {e_max} -> q' = {q}",
            probe.q(),
            probe.m(),
            spec.s
        );
        let (bits, new_bits) = (64 - spec.q.leading_zeros(), 64 - q.leading_zeros());
        if s != spec.s {
            spec.s = s;
            continue;
        }
        if new_bits < bits && !dropped {
            dropped = true;
            spec.q = q;
            continue;
        }
        if new_bits > bits {
            // a smaller m was too tight: settle on the larger modulus
            spec.q = q;
            dropped = true;
            continue;
        }
        spec.q = spec.q.max(q);
        let m = probe.m() as f64;
        let omega = SAFETY * e_max as f64 / (spec.s * spec.ell as f64 * m * m * spec.noise_bound as f64);
        spec.omega_const = (omega * 1e4).ceil() / 1e4;
        let budget = spec.s * spec.ell as f64 * m * m * spec.noise_bound as f64 * spec.omega_const;
        spec.q = spec.q.max(next_prime((HEADROOM * budget).ceil() as u64 + 1));
        assert_eq!(64 - spec.q.leading_zeros(), bits, "rounding moved q across a bit boundary");
        let params = SysParams::from_spec(spec.clone())?;
        println!("pinned: {spec:?}");
        println!("budget {:.3e} < q/5 = {:.3e}", params.error_budget(), params.q() as f64 / 5.0);
        return Ok(());
    }
    panic!("no fixpoint after 8 rounds");
}

/// Largest `|error|` over all noise modes, and the trapdoor quality threshold.
fn measure(params: &SysParams, rng: &mut ChaCha20Rng) -> srpe_core::Result<(i64, f64)> {
    let (pp, msk, rl, mut tree) = srpe::setup(params, rng)?;
    let threshold = msk.t_a.quality_threshold().max(msk.t_b.quality_threshold());
    let q = params.q();
    let ell = params.ell();
    let ids: Vec<Vec<u8>> = (0..params.users().min(4)).map(|i| format!("user{i}").into_bytes()).collect();
    let epoch = Epoch::new(1);
    let mut e_max = 0i64;
    let mut users = Vec::new();
    for id in &ids {
        let y: Vec<u64> = (0..ell).map(|_| rng.gen_range(1..q)).collect();
        let x = orthogonal_vector(params, &y, rng).expect("y is nonzero");
        let sk = srpe::user_kg(&pp, &msk, id, &x, rng)?;
        let token = srpe::token(&pp, &msk, id, &x, &mut tree, rng)?;
        users.push((sk, token, y));
    }
    let uk = srpe::upd_kg(&pp, &msk, &epoch, &rl, &mut tree, rng)?;
    for (sk, token, y) in &users {
        let tk = srpe::tran_kg(token, &uk).expect("no user is revoked");
        for mode in [NoiseMode::Zero, NoiseMode::Sampled, NoiseMode::Extreme] {
            for _ in 0..TRIALS {
                let bit = rng.gen();
                let hooks = EncHooks { noise: mode, split_secret: false };
                let (ct, _) = srpe::enc_traced(&pp, y, &epoch, bit, hooks, rng)?;
                let pct = srpe::transform(&pp, &ct, &tk)?;
                let err = srpe::dec_error(&pp, &pct, sk, bit)?;
                e_max = e_max.max(err.iter().map(|e| e.abs()).max().unwrap_or(0));
            }
        }
    }
    Ok((e_max, threshold))
}

