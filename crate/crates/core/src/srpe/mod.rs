//! Server-aided revocable predicate encryption.
//!
//! The KGC issues each user a long-term secret key and a public token (one
//! matrix per node on the user's tree path), and publishes one update key per
//! epoch (one matrix per cover node). The server joins a token with an update
//! key into a transformation key whenever the user is not revoked, and uses it
//! to partially decrypt ciphertexts for that user. The user finishes
//! decryption with the secret key alone.
//!
//! Transformation keys are `2m x m`, so the partially decrypted component
//! `c̄` has length `m`, the length the `3m`-row user key consumes.

mod encoding;

pub use encoding::{decode_id_time, encode_id_time};

use rand::Rng;

use crate::error::{Error, Result};
use crate::hooks::{noise_vec, signed_combination, EncHooks, EncTrace};
use crate::params::SysParams;
use crate::pe::{attribute_components, check_vector, combine_components, combine_matrices, lwe_component, message_component};
use crate::trapdoor::{trap_gen, GTrapdoor};
use crate::tree::{cover_check, update_nodes, BinaryTree, NodeId, RevocationList};
use crate::zq::{concat_cols, round_decode, scaled_encoding, IntMatrix, Modulus, ZqMatrix, ZqVector};

/// A time period: an ordered counter plus the label that is encoded into
/// `C_t`. The counter decides revocation (`t_i <= t`); the label is opaque.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Epoch {
    pub counter: u64,
    pub label: String,
}

impl Epoch {
    /// Epoch with the default label `t<counter>`.
    pub fn new(counter: u64) -> Self {
        Self {
            counter,
            label: format!("t{counter}"),
        }
    }

    pub fn with_label(counter: u64, label: impl Into<String>) -> Self {
        Self {
            counter,
            label: label.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PublicParams {
    pub params: SysParams,
    pub a: ZqMatrix,
    pub b: ZqMatrix,
    pub c: ZqMatrix,
    pub d: ZqMatrix,
    pub a_i: Vec<ZqMatrix>,
    pub b_i: Vec<ZqMatrix>,
    pub v: ZqMatrix,
}

#[derive(Debug, Clone)]
pub struct MasterSecret {
    pub t_a: GTrapdoor,
    pub t_b: GTrapdoor,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserSecretKey {
    pub modulus: Modulus,
    pub id: Vec<u8>,
    pub x: Vec<u64>,
    /// `3m x kappa` with `[B | B_x | D_id] * Z = V`.
    pub z: IntMatrix,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSet {
    pub modulus: Modulus,
    pub id: Vec<u8>,
    pub x: Vec<u64>,
    /// `(θ, Z_1θ)` along the path, leaf first; `[A | A_x] * Z_1θ = D_id - U_θ`.
    pub entries: Vec<(NodeId, IntMatrix)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UpdateKey {
    pub modulus: Modulus,
    pub epoch: Epoch,
    /// `(θ, Z_2θ)` over the cover; `[A | C_t] * Z_2θ = U_θ`.
    pub entries: Vec<(NodeId, IntMatrix)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransformKey {
    pub modulus: Modulus,
    pub id: Vec<u8>,
    pub x: Vec<u64>,
    pub epoch: Epoch,
    pub node: NodeId,
    pub z1: IntMatrix,
    pub z2: IntMatrix,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ciphertext {
    pub epoch: Epoch,
    pub c: ZqVector,
    pub c1: ZqVector,
    pub c1_i: Vec<ZqVector>,
    pub c1_0: ZqVector,
    pub c2: ZqVector,
    pub c2_i: Vec<ZqVector>,
}

impl Ciphertext {
    /// `kappa + (2 ell + 3) m`.
    pub fn coordinate_count(&self) -> usize {
        let m = self.c1.len();
        self.c.len() + m * (3 + self.c1_i.len() + self.c2_i.len())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialCiphertext {
    pub epoch: Epoch,
    pub c: ZqVector,
    pub c2: ZqVector,
    pub c2_i: Vec<ZqVector>,
    pub c_bar: ZqVector,
}

impl PartialCiphertext {
    /// `kappa + (ell + 2) m`.
    pub fn coordinate_count(&self) -> usize {
        self.c.len() + self.c2.len() * (2 + self.c2_i.len())
    }
}

impl PublicParams {
    /// `D_id = D + H(id) G`.
    pub fn id_matrix(&self, id: &[u8]) -> Result<ZqMatrix> {
        self.tagged(&self.d, id)
    }

    /// `C_t = C + H(t) G`.
    pub fn time_matrix(&self, epoch: &Epoch) -> Result<ZqMatrix> {
        self.tagged(&self.c, epoch.label.as_bytes())
    }

    fn tagged(&self, base: &ZqMatrix, label: &[u8]) -> Result<ZqMatrix> {
        let h = self.params.frd().apply(&encode_id_time(&self.params, label)?)?;
        base.add(&h.mat_mul(&self.params.gadget().matrix())?)
    }

    /// Matrix entries of the public parameters, `(2 ell + 4) n m + n kappa`.
    pub fn entry_count(&self) -> usize {
        let all = [&self.a, &self.b, &self.c, &self.d, &self.v]
            .into_iter()
            .chain(&self.a_i)
            .chain(&self.b_i);
        all.map(|m| m.rows() * m.cols()).sum()
    }
}

pub fn setup<R: Rng + ?Sized>(
    params: &SysParams,
    rng: &mut R,
) -> Result<(PublicParams, MasterSecret, RevocationList, BinaryTree)> {
    let (n, m, q) = (params.n(), params.m(), params.modulus());
    let t_a = trap_gen(n, m, q, rng)?;
    let t_b = trap_gen(n, m, q, rng)?;
    let c = ZqMatrix::random(n, m, q, rng);
    let d = ZqMatrix::random(n, m, q, rng);
    let a_i = (0..params.ell()).map(|_| ZqMatrix::random(n, m, q, rng)).collect();
    let b_i = (0..params.ell()).map(|_| ZqMatrix::random(n, m, q, rng)).collect();
    let v = ZqMatrix::random(n, params.kappa(), q, rng);
    let pp = PublicParams {
        params: params.clone(),
        a: t_a.matrix().clone(),
        b: t_b.matrix().clone(),
        c,
        d,
        a_i,
        b_i,
        v,
    };
    let tree = BinaryTree::new(params.users())?;
    Ok((pp, MasterSecret { t_a, t_b }, RevocationList::new(), tree))
}

pub fn user_kg<R: Rng + ?Sized>(
    pp: &PublicParams,
    msk: &MasterSecret,
    id: &[u8],
    x: &[u64],
    rng: &mut R,
) -> Result<UserSecretKey> {
    let params = &pp.params;
    check_vector(params, x, "predicate")?;
    let b_x = combine_matrices(&params.gadget(), &pp.b_i, x)?;
    let d_id = pp.id_matrix(id)?;
    let right = concat_cols(&[&b_x, &d_id])?;
    let z = msk.t_b.sample_left_matrix(&right, &pp.v, params.gauss(), rng)?;
    Ok(UserSecretKey {
        modulus: params.modulus(),
        id: id.to_vec(),
        x: x.to_vec(),
        z,
    })
}

/// Registers `id` on first use, then issues one `Z_1θ` per path node, drawing
/// any missing `U_θ` on the way.
pub fn token<R: Rng + ?Sized>(
    pp: &PublicParams,
    msk: &MasterSecret,
    id: &[u8],
    x: &[u64],
    tree: &mut BinaryTree,
    rng: &mut R,
) -> Result<TokenSet> {
    let params = &pp.params;
    check_vector(params, x, "predicate")?;
    let d_id = pp.id_matrix(id)?;
    let leaf = match tree.leaf_of(id) {
        Some(leaf) => leaf,
        None => tree.assign_leaf(id)?,
    };
    let a_x = combine_matrices(&params.gadget(), &pp.a_i, x)?;
    let mut entries = Vec::new();
    for theta in tree.path(leaf)? {
        let u = node_matrix(params, tree, theta, rng)?;
        let target = d_id.sub(&u)?;
        entries.push((theta, msk.t_a.sample_left_matrix(&a_x, &target, params.gauss(), rng)?));
    }
    Ok(TokenSet {
        modulus: params.modulus(),
        id: id.to_vec(),
        x: x.to_vec(),
        entries,
    })
}

fn node_matrix<R: Rng + ?Sized>(
    params: &SysParams,
    tree: &mut BinaryTree,
    theta: NodeId,
    rng: &mut R,
) -> Result<ZqMatrix> {
    let (n, m, q) = (params.n(), params.m(), params.modulus());
    Ok(tree
        .node_or_insert_with(theta, || ZqMatrix::random(n, m, q, rng))?
        .clone())
}

/// One `Z_2θ` per cover node at `epoch`. Cover nodes that were never on a
/// tokenized path get their `U_θ` drawn here, once. When every leaf is
/// revoked the update key is empty.
pub fn upd_kg<R: Rng + ?Sized>(
    pp: &PublicParams,
    msk: &MasterSecret,
    epoch: &Epoch,
    rl: &RevocationList,
    tree: &mut BinaryTree,
    rng: &mut R,
) -> Result<UpdateKey> {
    let params = &pp.params;
    let c_t = pp.time_matrix(epoch)?;
    let mut entries = Vec::new();
    for theta in update_nodes(tree, rl, epoch.counter) {
        let u = node_matrix(params, tree, theta, rng)?;
        entries.push((theta, msk.t_a.sample_left_matrix(&c_t, &u, params.gauss(), rng)?));
    }
    Ok(UpdateKey {
        modulus: params.modulus(),
        epoch: epoch.clone(),
        entries,
    })
}

/// Joins a token and an update key on their common node (the lowest one if
/// there are several); `None` (⊥) when they share no node.
pub fn tran_kg(token: &TokenSet, uk: &UpdateKey) -> Option<TransformKey> {
    let (node, z1, z2) = token
        .entries
        .iter()
        .filter_map(|(theta, z1)| {
            uk.entries
                .iter()
                .find(|(phi, _)| phi == theta)
                .map(|(_, z2)| (*theta, z1, z2))
        })
        .min_by_key(|(theta, _, _)| *theta)?;
    Some(TransformKey {
        modulus: token.modulus,
        id: token.id.clone(),
        x: token.x.clone(),
        epoch: uk.epoch.clone(),
        node,
        z1: z1.clone(),
        z2: z2.clone(),
    })
}

pub fn enc<R: Rng + ?Sized>(pp: &PublicParams, y: &[u64], epoch: &Epoch, bit: bool, rng: &mut R) -> Result<Ciphertext> {
    enc_inner(pp, y, epoch, bit, rng, EncHooks::default(), None)
}

/// [`enc`] under test controls, returning the randomness it used.
#[cfg(feature = "test-hooks")]
pub fn enc_traced<R: Rng + ?Sized>(
    pp: &PublicParams,
    y: &[u64],
    epoch: &Epoch,
    bit: bool,
    hooks: EncHooks,
    rng: &mut R,
) -> Result<(Ciphertext, EncTrace)> {
    let mut trace = EncTrace::default();
    let ct = enc_inner(pp, y, epoch, bit, rng, hooks, Some(&mut trace))?;
    Ok((ct, trace))
}

fn enc_inner<R: Rng + ?Sized>(
    pp: &PublicParams,
    y: &[u64],
    epoch: &Epoch,
    bit: bool,
    rng: &mut R,
    hooks: EncHooks,
    mut trace: Option<&mut EncTrace>,
) -> Result<Ciphertext> {
    let params = &pp.params;
    check_vector(params, y, "attribute")?;
    let (n, m, q) = (params.n(), params.m(), params.modulus());
    let c_t = pp.time_matrix(epoch)?;
    let s = ZqVector::random(n, q, rng);
    let s2 = if hooks.split_secret {
        ZqVector::random(n, q, rng)
    } else {
        s.clone()
    };
    let e = noise_vec(params.noise(), params.kappa(), hooks.noise, rng);
    let e1 = noise_vec(params.noise(), m, hooks.noise, rng);
    let e2 = noise_vec(params.noise(), m, hooks.noise, rng);

    let c = message_component(params, &pp.v, &s, &e, bit)?;
    let c1 = lwe_component(&pp.a, &s, &e1)?;
    let c1_i = attribute_components(params, &pp.a_i, y, &s, &e1, rng, trace.as_deref_mut().map(|t| &mut t.r))?;
    let mut kept_bar = trace.as_ref().map(|_| Vec::new());
    let bar_noise = signed_combination(&e1, m, rng, kept_bar.as_mut());
    let c1_0 = c_t.transpose_mul_vec(&s)?.add(&ZqVector::from_i64(&bar_noise, q))?;
    let c2 = lwe_component(&pp.b, &s2, &e2)?;
    let c2_i = attribute_components(params, &pp.b_i, y, &s2, &e2, rng, trace.as_deref_mut().map(|t| &mut t.s_mats))?;

    if let Some(t) = trace {
        t.s_prime = hooks.split_secret.then(|| s2.clone());
        t.s = Some(s);
        t.e = e;
        t.e1 = e1;
        t.e2 = e2;
        t.r_bar = kept_bar.and_then(|mut v| v.pop());
    }
    Ok(Ciphertext {
        epoch: epoch.clone(),
        c,
        c1,
        c1_i,
        c1_0,
        c2,
        c2_i,
    })
}

/// Server-side partial decryption:
/// `c̄ = Z_1^T [c_1 | c_1x] + Z_2^T [c_1 | c_10]`.
pub fn transform(pp: &PublicParams, ct: &Ciphertext, tk: &TransformKey) -> Result<PartialCiphertext> {
    if tk.epoch != ct.epoch {
        return Err(Error::EpochMismatch {
            ciphertext: ct.epoch.counter,
            key: tk.epoch.counter,
        });
    }
    let c1_x = combine_components(&pp.params.gadget(), &ct.c1_i, &tk.x)?;
    let left = tk.z1.transpose_mul_zq(&ZqVector::stack(&[&ct.c1, &c1_x])?)?;
    let right = tk.z2.transpose_mul_zq(&ZqVector::stack(&[&ct.c1, &ct.c1_0])?)?;
    Ok(PartialCiphertext {
        epoch: ct.epoch.clone(),
        c: ct.c.clone(),
        c2: ct.c2.clone(),
        c2_i: ct.c2_i.clone(),
        c_bar: left.add(&right)?,
    })
}

/// `d = c - Z^T [c_2 | c_2x | c̄]`, before rounding.
pub fn dec_vector(pp: &PublicParams, pct: &PartialCiphertext, sk: &UserSecretKey) -> Result<ZqVector> {
    let c2_x = combine_components(&pp.params.gadget(), &pct.c2_i, &sk.x)?;
    let stacked = ZqVector::stack(&[&pct.c2, &c2_x, &pct.c_bar])?;
    pct.c.sub(&sk.z.transpose_mul_zq(&stacked)?)
}

/// `Some(M)`, or `None` (⊥) when `d` does not round to an encoding.
pub fn dec(pp: &PublicParams, pct: &PartialCiphertext, sk: &UserSecretKey) -> Result<Option<bool>> {
    Ok(round_decode(&dec_vector(pp, pct, sk)?))
}

/// `d - floor(q/2) encode(M)`, centered: the decryption error for a
/// ciphertext known to carry `bit`.
pub fn dec_error(pp: &PublicParams, pct: &PartialCiphertext, sk: &UserSecretKey, bit: bool) -> Result<Vec<i64>> {
    let d = dec_vector(pp, pct, sk)?;
    Ok(d.sub(&scaled_encoding(bit, d.len(), pp.params.modulus()))?.centered())
}

/// Revokes `id` from `epoch` on. Repeating a revocation changes nothing.
pub fn revoke(id: &[u8], epoch: &Epoch, rl: &mut RevocationList, tree: &BinaryTree) -> Result<()> {
    let leaf = tree.leaf_of(id).ok_or(Error::UnknownIdentity)?;
    rl.insert(leaf, epoch.counter);
    Ok(())
}

/// Whether `id` holds a cover node at `epoch`.
pub fn is_covered(tree: &BinaryTree, rl: &RevocationList, id: &[u8], epoch: &Epoch) -> Result<bool> {
    let leaf = tree.leaf_of(id).ok_or(Error::UnknownIdentity)?;
    Ok(cover_check(tree, rl, epoch.counter, leaf)?.is_some())
}

/// `[B | B_x | D_id] * Z == V`.
pub fn verify_user_key(pp: &PublicParams, sk: &UserSecretKey) -> Result<bool> {
    let b_x = combine_matrices(&pp.params.gadget(), &pp.b_i, &sk.x)?;
    let f = concat_cols(&[&pp.b, &b_x, &pp.id_matrix(&sk.id)?])?;
    Ok(f.mul_int(&sk.z)? == pp.v)
}

/// `[A | A_x] * Z_1θ == D_id - U_θ` for every entry.
pub fn verify_token(pp: &PublicParams, token: &TokenSet, tree: &BinaryTree) -> Result<bool> {
    let a_x = combine_matrices(&pp.params.gadget(), &pp.a_i, &token.x)?;
    let f = concat_cols(&[&pp.a, &a_x])?;
    let d_id = pp.id_matrix(&token.id)?;
    for (theta, z1) in &token.entries {
        let Some(u) = tree.node_matrix(*theta) else {
            return Ok(false);
        };
        if f.mul_int(z1)? != d_id.sub(u)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `[A | C_t] * Z_2θ == U_θ` for every entry.
pub fn verify_update_key(pp: &PublicParams, uk: &UpdateKey, tree: &BinaryTree) -> Result<bool> {
    let f = concat_cols(&[&pp.a, &pp.time_matrix(&uk.epoch)?])?;
    for (theta, z2) in &uk.entries {
        match tree.node_matrix(*theta) {
            Some(u) if f.mul_int(z2)? == *u => {}
            _ => return Ok(false),
        }
    }
    Ok(true)
}

/// `[A | A_x] * Z_1 + [A | C_t] * Z_2 == D_id`.
pub fn verify_transform_key(pp: &PublicParams, tk: &TransformKey) -> Result<bool> {
    let a_x = combine_matrices(&pp.params.gadget(), &pp.a_i, &tk.x)?;
    let left = concat_cols(&[&pp.a, &a_x])?.mul_int(&tk.z1)?;
    let right = concat_cols(&[&pp.a, &pp.time_matrix(&tk.epoch)?])?.mul_int(&tk.z2)?;
    Ok(left.add(&right)? == pp.id_matrix(&tk.id)?)
}
