use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use srpe_core::hooks::{EncHooks, NoiseMode};
use srpe_core::params::{ProfileSpec, SysParams};
use srpe_core::pe::{combine_short, inner_product, orthogonal_vector};
use srpe_core::srpe::{self, Epoch, MasterSecret, PublicParams, TokenSet, UpdateKey, UserSecretKey};
use srpe_core::tree::{BinaryTree, RevocationList};
use srpe_core::wire::WireObject;
use srpe_core::zq::IntMatrix;
use srpe_core::Error;

struct User {
    sk: UserSecretKey,
    token: TokenSet,
    y: Vec<u64>,
}

struct Fixture {
    pp: PublicParams,
    msk: MasterSecret,
    tree: BinaryTree,
    rl: RevocationList,
    users: Vec<User>,
    uk: UpdateKey,
    epoch: Epoch,
}

fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

fn random_attribute(params: &SysParams, rng: &mut ChaCha20Rng) -> Vec<u64> {
    (0..params.ell()).map(|_| rng.gen_range(1..params.q())).collect()
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let params = SysParams::profile("toy").unwrap();
        let mut rng = rng(1);
        let (pp, msk, rl, mut tree) = srpe::setup(&params, &mut rng).unwrap();
        let users = (0..3)
            .map(|i| {
                let id = format!("user-{i}").into_bytes();
                let y = random_attribute(&params, &mut rng);
                let x = orthogonal_vector(&params, &y, &mut rng).unwrap();
                let sk = srpe::user_kg(&pp, &msk, &id, &x, &mut rng).unwrap();
                let token = srpe::token(&pp, &msk, &id, &x, &mut tree, &mut rng).unwrap();
                User { sk, token, y }
            })
            .collect();
        let epoch = Epoch::new(1);
        let uk = srpe::upd_kg(&pp, &msk, &epoch, &rl, &mut tree, &mut rng).unwrap();
        Fixture {
            pp,
            msk,
            tree,
            rl,
            users,
            uk,
            epoch,
        }
    })
}

/// `Z^T v` over the integers.
fn tmul(z: &IntMatrix, v: &[i128]) -> Vec<i128> {
    assert_eq!(z.rows(), v.len());
    (0..z.cols())
        .map(|j| (0..z.rows()).map(|i| z.get(i, j) as i128 * v[i]).sum())
        .collect()
}

fn widen(v: &[i64]) -> Vec<i128> {
    v.iter().map(|&x| x as i128).collect()
}

fn add(a: &[i128], b: &[i128]) -> Vec<i128> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

#[test]
fn honest_pipeline_decrypts() {
    let f = fixture();
    let mut rng = rng(2);
    for user in &f.users {
        let tk = srpe::tran_kg(&user.token, &f.uk).expect("not revoked");
        assert!(srpe::verify_transform_key(&f.pp, &tk).unwrap());
        for bit in [false, true] {
            let ct = srpe::enc(&f.pp, &user.y, &f.epoch, bit, &mut rng).unwrap();
            let pct = srpe::transform(&f.pp, &ct, &tk).unwrap();
            assert_eq!(srpe::dec(&f.pp, &pct, &user.sk).unwrap(), Some(bit));
            let err = srpe::dec_error(&f.pp, &pct, &user.sk, bit).unwrap();
            assert!(err.iter().all(|e| (e.unsigned_abs() as f64) < f.pp.params.q() as f64 / 5.0));
        }
    }
}

#[test]
fn decryption_error_matches_decomposition() {
    let f = fixture();
    let params = &f.pp.params;
    let q = params.q() as i128;
    let gadget = params.gadget();
    let mut rng = rng(3);
    let user = &f.users[0];
    let tk = srpe::tran_kg(&user.token, &f.uk).unwrap();
    for mode in [NoiseMode::Sampled, NoiseMode::Extreme, NoiseMode::Zero] {
        let bit = rng.gen();
        let hooks = EncHooks {
            noise: mode,
            split_secret: false,
        };
        let (ct, trace) = srpe::enc_traced(&f.pp, &user.y, &f.epoch, bit, hooks, &mut rng).unwrap();
        let pct = srpe::transform(&f.pp, &ct, &tk).unwrap();

        let e1 = widen(&trace.e1);
        let e2 = widen(&trace.e2);
        let r_x = combine_short(&gadget, &trace.r, &user.sk.x).unwrap();
        let s_x = combine_short(&gadget, &trace.s_mats, &user.sk.x).unwrap();
        let r_bar = trace.r_bar.as_ref().unwrap();
        // error' = Z_1^T [e_1; R_x^T e_1] + Z_2^T [e_1; R̄^T e_1]
        let first: Vec<i128> = e1.iter().copied().chain(tmul(&r_x, &e1)).collect();
        let second: Vec<i128> = e1.iter().copied().chain(tmul(r_bar, &e1)).collect();
        let error_prime = add(&tmul(&tk.z1, &first), &tmul(&tk.z2, &second));
        // error = e - Z^T [e_2; S_x^T e_2; error']
        let stacked: Vec<i128> = e2.iter().copied().chain(tmul(&s_x, &e2)).chain(error_prime).collect();
        let error: Vec<i128> = widen(&trace.e)
            .iter()
            .zip(tmul(&user.sk.z, &stacked))
            .map(|(a, b)| a - b)
            .collect();

        let d = srpe::dec_vector(&f.pp, &pct, &user.sk).unwrap();
        let half = q / 2;
        for (i, (&got, want)) in d.as_slice().iter().zip(&error).enumerate() {
            let scaled = if i == 0 && bit { half } else { 0 };
            assert_eq!(got as i128, (scaled + want).rem_euclid(q), "coordinate {i}");
        }
        let measured = srpe::dec_error(&f.pp, &pct, &user.sk, bit).unwrap();
        assert_eq!(widen(&measured), error);
        assert!(error.iter().all(|e| (e.unsigned_abs() as f64) < params.error_budget()));
        if mode == NoiseMode::Zero {
            assert!(error.iter().all(|&e| e == 0));
        }
    }
}

#[test]
fn independent_second_layer_secret_breaks_decryption() {
    let f = fixture();
    let mut rng = rng(4);
    let user = &f.users[1];
    let tk = srpe::tran_kg(&user.token, &f.uk).unwrap();
    for _ in 0..10 {
        let bit = rng.gen();
        let hooks = EncHooks {
            noise: NoiseMode::Sampled,
            split_secret: false,
        };
        let (ct, _) = srpe::enc_traced(&f.pp, &user.y, &f.epoch, bit, hooks, &mut rng).unwrap();
        let pct = srpe::transform(&f.pp, &ct, &tk).unwrap();
        assert_eq!(srpe::dec(&f.pp, &pct, &user.sk).unwrap(), Some(bit));

        let split = EncHooks {
            split_secret: true,
            ..hooks
        };
        let (ct, trace) = srpe::enc_traced(&f.pp, &user.y, &f.epoch, bit, split, &mut rng).unwrap();
        assert_ne!(trace.s, trace.s_prime);
        let pct = srpe::transform(&f.pp, &ct, &tk).unwrap();
        assert_ne!(srpe::dec(&f.pp, &pct, &user.sk).unwrap(), Some(bit));
    }
}

#[test]
fn mismatched_attribute_is_rejected() {
    let f = fixture();
    let params = &f.pp.params;
    let mut rng = rng(5);
    let user = &f.users[2];
    let tk = srpe::tran_kg(&user.token, &f.uk).unwrap();
    for _ in 0..20 {
        let y = random_attribute(params, &mut rng);
        assert_ne!(inner_product(params, &user.sk.x, &y), 0);
        let ct = srpe::enc(&f.pp, &y, &f.epoch, rng.gen(), &mut rng).unwrap();
        let pct = srpe::transform(&f.pp, &ct, &tk).unwrap();
        assert_eq!(srpe::dec(&f.pp, &pct, &user.sk).unwrap(), None);
    }
}

#[test]
fn key_chain_relations_hold() {
    let f = fixture();
    for user in &f.users {
        assert!(srpe::verify_user_key(&f.pp, &user.sk).unwrap());
        assert!(srpe::verify_token(&f.pp, &user.token, &f.tree).unwrap());
    }
    assert!(srpe::verify_update_key(&f.pp, &f.uk, &f.tree).unwrap());

    let mut bad = f.users[0].sk.clone();
    bad.z.set(0, 0, bad.z.get(0, 0) + 1);
    assert!(!srpe::verify_user_key(&f.pp, &bad).unwrap());
    let mut other = f.users[1].sk.clone();
    other.id = f.users[0].sk.id.clone();
    assert!(!srpe::verify_user_key(&f.pp, &other).unwrap());
}

#[test]
fn epochs_must_match() {
    let f = fixture();
    let mut rng = rng(6);
    let user = &f.users[0];
    let tk = srpe::tran_kg(&user.token, &f.uk).unwrap();
    let ct = srpe::enc(&f.pp, &user.y, &Epoch::new(2), true, &mut rng).unwrap();
    assert!(matches!(
        srpe::transform(&f.pp, &ct, &tk),
        Err(Error::EpochMismatch { ciphertext: 2, key: 1 })
    ));
}

#[test]
fn revocation_takes_effect_from_its_epoch() {
    let f = fixture();
    let mut rng = rng(7);
    let (mut tree, mut rl) = (f.tree.clone(), f.rl.clone());
    let victim = &f.users[0];
    srpe::revoke(&victim.sk.id, &Epoch::new(3), &mut rl, &tree).unwrap();
    srpe::revoke(&victim.sk.id, &Epoch::new(3), &mut rl, &tree).unwrap();
    assert_eq!(rl.len(), 1);
    assert!(matches!(
        srpe::revoke(b"nobody", &Epoch::new(3), &mut rl, &tree),
        Err(Error::UnknownIdentity)
    ));

    for (counter, revoked) in [(2, false), (3, true), (4, true)] {
        let epoch = Epoch::new(counter);
        let uk = srpe::upd_kg(&f.pp, &f.msk, &epoch, &rl, &mut tree, &mut rng).unwrap();
        assert!(srpe::verify_update_key(&f.pp, &uk, &tree).unwrap());
        assert_eq!(srpe::tran_kg(&victim.token, &uk).is_none(), revoked, "epoch {counter}");
        assert_eq!(srpe::is_covered(&tree, &rl, &victim.sk.id, &epoch).unwrap(), !revoked);
        for other in &f.users[1..] {
            let tk = srpe::tran_kg(&other.token, &uk).expect("others stay covered");
            let ct = srpe::enc(&f.pp, &other.y, &epoch, true, &mut rng).unwrap();
            let pct = srpe::transform(&f.pp, &ct, &tk).unwrap();
            assert_eq!(srpe::dec(&f.pp, &pct, &other.sk).unwrap(), Some(true));
        }
    }
}

#[test]
fn object_sizes_follow_dimensions() {
    let f = fixture();
    let params = &f.pp.params;
    let (n, m, ell, kappa) = (params.n(), params.m(), params.ell(), params.kappa());
    assert_eq!(f.pp.entry_count(), (2 * ell + 4) * n * m + n * kappa);

    let mut rng = rng(8);
    let user = &f.users[0];
    let ct = srpe::enc(&f.pp, &user.y, &f.epoch, false, &mut rng).unwrap();
    assert_eq!(ct.coordinate_count(), kappa + (2 * ell + 3) * m);
    let tk = srpe::tran_kg(&user.token, &f.uk).unwrap();
    let pct = srpe::transform(&f.pp, &ct, &tk).unwrap();
    assert_eq!(pct.coordinate_count(), kappa + (ell + 2) * m);
    assert_eq!(pct.c_bar.len(), m);
    assert_eq!((user.sk.z.rows(), user.sk.z.cols()), (3 * m, kappa));
    assert_eq!(user.token.entries.len(), params.depth() as usize + 1);
    for (_, z) in &user.token.entries {
        assert_eq!((z.rows(), z.cols()), (2 * m, m));
    }

    let width = params.modulus().bit_length().div_ceil(8) as usize;
    let a = ct.to_bytes().unwrap().len();
    let b = srpe::enc(&f.pp, &f.users[1].y, &Epoch::new(1), true, &mut rng)
        .unwrap()
        .to_bytes()
        .unwrap()
        .len();
    assert_eq!(a, b);
    assert!(a >= ct.coordinate_count() * width);
}

#[test]
fn objects_round_trip_through_the_wire_format() {
    let f = fixture();
    let mut rng = rng(9);
    let user = &f.users[0];
    let tk = srpe::tran_kg(&user.token, &f.uk).unwrap();
    let ct = srpe::enc(&f.pp, &user.y, &f.epoch, true, &mut rng).unwrap();
    let pct = srpe::transform(&f.pp, &ct, &tk).unwrap();

    assert_eq!(PublicParams::from_bytes(&f.pp.to_bytes().unwrap()).unwrap(), f.pp);
    assert_eq!(UserSecretKey::from_bytes(&user.sk.to_bytes().unwrap()).unwrap(), user.sk);
    assert_eq!(TokenSet::from_bytes(&user.token.to_bytes().unwrap()).unwrap(), user.token);
    assert_eq!(UpdateKey::from_bytes(&f.uk.to_bytes().unwrap()).unwrap(), f.uk);
    assert_eq!(srpe::TransformKey::from_bytes(&tk.to_bytes().unwrap()).unwrap(), tk);
    assert_eq!(srpe::Ciphertext::from_bytes(&ct.to_bytes().unwrap()).unwrap(), ct);
    assert_eq!(srpe::PartialCiphertext::from_bytes(&pct.to_bytes().unwrap()).unwrap(), pct);

    let msk_bytes = f.msk.to_bytes().unwrap();
    let msk = MasterSecret::from_bytes(&msk_bytes).unwrap();
    assert_eq!(msk.t_a.matrix(), f.msk.t_a.matrix());
    assert_eq!(msk.t_b.r(), f.msk.t_b.r());
    assert_eq!(msk.to_bytes().unwrap(), msk_bytes);
}

#[test]
fn user_key_size_does_not_depend_on_user_count() {
    let mut sizes = Vec::new();
    for users in [8, 64] {
        let spec = ProfileSpec {
            users,
            ..ProfileSpec::toy()
        };
        let params = SysParams::from_spec(spec).unwrap();
        let mut rng = rng(10);
        let (pp, msk, _, mut tree) = srpe::setup(&params, &mut rng).unwrap();
        let x = vec![1; params.ell()];
        let sk = srpe::user_kg(&pp, &msk, b"alice", &x, &mut rng).unwrap();
        let token = srpe::token(&pp, &msk, b"alice", &x, &mut tree, &mut rng).unwrap();
        sizes.push((sk.to_bytes().unwrap().len(), token.entries.len()));
    }
    assert_eq!(sizes[0].0, sizes[1].0);
    assert_eq!((sizes[0].1, sizes[1].1), (4, 7));
}

#[test]
fn fully_revoked_tree_issues_no_update_nodes() {
    let params = SysParams::from_spec(ProfileSpec {
        users: 2,
        ..ProfileSpec::toy()
    })
    .unwrap();
    let mut rng = rng(11);
    let (pp, msk, mut rl, mut tree) = srpe::setup(&params, &mut rng).unwrap();
    let x = vec![0; params.ell()];
    let tokens: Vec<TokenSet> = [b"a", b"b"]
        .iter()
        .map(|id| srpe::token(&pp, &msk, *id, &x, &mut tree, &mut rng).unwrap())
        .collect();
    for id in [b"a", b"b"] {
        srpe::revoke(id, &Epoch::new(1), &mut rl, &tree).unwrap();
    }
    let uk = srpe::upd_kg(&pp, &msk, &Epoch::new(1), &rl, &mut tree, &mut rng).unwrap();
    assert!(uk.entries.is_empty());
    assert!(tokens.iter().all(|t| srpe::tran_kg(t, &uk).is_none()));
}
