//! File layout of a keystore and the rules for who may read what.
//!
//! ```text
//! public/params.json        system parameters (kgc-sys)
//! public/pp.bin             public parameters
//! kgc/msk.bin               master secret (SECRET)
//! kgc/state.txt             tree, leaf assignment and revocation list
//! kgc/nodes/<node>.bin      node matrices U_θ
//! kgc/lock                  advisory lock for KGC writers
//! users/<hex id>/sk.bin     user secret key (SECRET)
//! server/tokens/<hex id>.bin
//! server/uk/<epoch>.bin
//! server/tk/<hex id>-<epoch>.bin
//! ```

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use srpe_core::params::{ProfileSpec, SysParams, PROFILE_BANNER};
use srpe_core::tree::{read_state, write_state, BinaryTree, NodeId, RevocationList};
use srpe_core::wire::{self, Reader, WireObject, Writer};
use srpe_core::zq::ZqMatrix;

/// The party running a subcommand, fixed by its prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Party {
    Kgc,
    Server,
    Sender,
    User,
}

impl Party {
    fn may_read_secrets(self) -> bool {
        matches!(self, Party::Kgc | Party::User)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ParamsFile {
    notice: String,
    name: String,
    n: usize,
    users: usize,
    ell: usize,
    kappa: usize,
    q: u64,
    s: f64,
    noise_bound: u64,
    omega_const: f64,
    frd_poly: Vec<u64>,
}

pub struct Keystore {
    root: PathBuf,
}

impl Keystore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn params_path(&self) -> PathBuf {
        self.root.join("public/params.json")
    }

    pub fn pp_path(&self) -> PathBuf {
        self.root.join("public/pp.bin")
    }

    pub fn msk_path(&self) -> PathBuf {
        self.root.join("kgc/msk.bin")
    }

    fn state_path(&self) -> PathBuf {
        self.root.join("kgc/state.txt")
    }

    fn node_path(&self, v: NodeId) -> PathBuf {
        self.root.join(format!("kgc/nodes/{v}.bin"))
    }

    pub fn sk_path(&self, id: &[u8]) -> PathBuf {
        self.root.join(format!("users/{}/sk.bin", hex::encode(id)))
    }

    pub fn token_path(&self, id: &[u8]) -> PathBuf {
        self.root.join(format!("server/tokens/{}.bin", hex::encode(id)))
    }

    pub fn uk_path(&self, epoch: u64) -> PathBuf {
        self.root.join(format!("server/uk/{epoch}.bin"))
    }

    pub fn tk_path(&self, id: &[u8], epoch: u64) -> PathBuf {
        self.root.join(format!("server/tk/{}-{epoch}.bin", hex::encode(id)))
    }

    /// Holds the KGC lock until dropped.
    pub fn lock_kgc(&self) -> Result<File> {
        let path = self.root.join("kgc/lock");
        ensure_parent(&path)?;
        let file = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&path)
            .with_context(|| format!("opening {}", path.display()))?;
        file.lock().with_context(|| format!("locking {}", path.display()))?;
        Ok(file)
    }

    pub fn write_params(&self, params: &SysParams) -> Result<()> {
        let spec = params.spec();
        let file = ParamsFile {
            notice: PROFILE_BANNER.into(),
            name: spec.name,
            n: spec.n,
            users: spec.users,
            ell: spec.ell,
            kappa: spec.kappa,
            q: spec.q,
            s: spec.s,
            noise_bound: spec.noise_bound,
            omega_const: spec.omega_const,
            frd_poly: params.frd().poly().to_vec(),
        };
        let mut text = serde_json::to_string_pretty(&file)?;
        text.push('\n');
        write_atomic(&self.params_path(), text.as_bytes())
    }

    pub fn read_params(&self) -> Result<SysParams> {
        let path = self.params_path();
        let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let f: ParamsFile = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let spec = ProfileSpec {
            name: f.name,
            n: f.n,
            users: f.users,
            ell: f.ell,
            kappa: f.kappa,
            q: f.q,
            s: f.s,
            noise_bound: f.noise_bound,
            omega_const: f.omega_const,
        };
        Ok(SysParams::from_spec_with_frd(spec, f.frd_poly)?)
    }

    /// Secret objects are created readable by the owner only.
    pub fn write_object<T: WireObject>(&self, path: &Path, obj: &T) -> Result<()> {
        write_file(path, &obj.to_bytes()?, T::TAG.is_secret())
    }

    pub fn read_object<T: WireObject>(&self, path: &Path, party: Party) -> Result<T> {
        let bytes = read_checked(path, party)?;
        T::from_bytes(&bytes).with_context(|| format!("decoding {}", path.display()))
    }

    pub fn write_state(&self, tree: &BinaryTree, rl: &RevocationList) -> Result<()> {
        for (v, u) in tree.stored_nodes() {
            let path = self.node_path(v);
            if !path.exists() {
                let mut w = Writer::new();
                w.zq_matrix(u)?;
                write_atomic(&path, &w.into_bytes())?;
            }
        }
        let text = write_state(tree, rl, |v| format!("nodes/{v}.bin"));
        write_atomic(&self.state_path(), text.as_bytes())
    }

    pub fn read_state(&self) -> Result<(BinaryTree, RevocationList)> {
        let path = self.state_path();
        let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let kgc = self.root.join("kgc");
        let load = |_: NodeId, file: &str| -> srpe_core::Result<ZqMatrix> {
            let bytes = fs::read(kgc.join(file))
                .map_err(|e| srpe_core::Error::Wire(format!("node file {file}: {e}")))?;
            let mut r = Reader::new(&bytes);
            let m = r.zq_matrix()?;
            r.finish()?;
            Ok(m)
        };
        Ok(read_state(&text, load)?)
    }
}

/// Reads a file after checking its envelope against the party's clearance.
/// Bundles are checked item by item.
pub fn read_checked(path: &Path, party: Party) -> Result<Vec<u8>> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let secret = if bytes.starts_with(BUNDLE_MAGIC) {
        split_bundle(&bytes)?
            .iter()
            .map(|item| wire::peek_header(item).map(|h| h.secret))
            .collect::<srpe_core::Result<Vec<_>>>()?
            .contains(&true)
    } else {
        wire::peek_header(&bytes)
            .with_context(|| format!("{} is not an SRPE object", path.display()))?
            .secret
    };
    if secret && !party.may_read_secrets() {
        bail!(SecrecyViolation(path.display().to_string()));
    }
    Ok(bytes)
}

#[derive(Debug)]
pub struct SecrecyViolation(pub String);

impl std::fmt::Display for SecrecyViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "refusing to read secret-flagged file {}", self.0)
    }
}

impl std::error::Error for SecrecyViolation {}

/// Several objects in one file: `"SRPS" | version u16 | count u32`, then each
/// object prefixed by its length as u32. All integers little-endian.
pub const BUNDLE_MAGIC: &[u8; 4] = b"SRPS";

pub fn bundle(items: &[Vec<u8>]) -> Vec<u8> {
    let mut out = BUNDLE_MAGIC.to_vec();
    out.extend_from_slice(&wire::VERSION.to_le_bytes());
    out.extend_from_slice(&(items.len() as u32).to_le_bytes());
    for item in items {
        out.extend_from_slice(&(item.len() as u32).to_le_bytes());
        out.extend_from_slice(item);
    }
    out
}

pub fn split_bundle(bytes: &[u8]) -> Result<Vec<&[u8]>> {
    let rest = bytes.strip_prefix(BUNDLE_MAGIC.as_slice()).context("not a bundle")?;
    let mut rest = rest;
    let version = u16::from_le_bytes(take(&mut rest, 2)?.try_into()?);
    if version != wire::VERSION {
        bail!("unsupported bundle version {version}");
    }
    let count = u32::from_le_bytes(take(&mut rest, 4)?.try_into()?) as usize;
    let mut items = Vec::new();
    for _ in 0..count {
        let len = u32::from_le_bytes(take(&mut rest, 4)?.try_into()?) as usize;
        items.push(take(&mut rest, len)?);
    }
    if !rest.is_empty() {
        bail!("trailing bytes after bundle");
    }
    Ok(items)
}

fn take<'a>(rest: &mut &'a [u8], n: usize) -> Result<&'a [u8]> {
    if rest.len() < n {
        bail!("truncated bundle");
    }
    let (head, tail) = rest.split_at(n);
    *rest = tail;
    Ok(head)
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

/// Writes through a temporary file and a rename so that readers never see a
/// partial object.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    write_file(path, bytes, false)
}

fn write_file(path: &Path, bytes: &[u8], secret: bool) -> Result<()> {
    ensure_parent(path)?;
    let tmp = path.with_extension("tmp");
    let mut options = OpenOptions::new();
    options.write(true).create(true).truncate(true);
    #[cfg(unix)]
    if secret {
        use std::os::unix::fs::OpenOptionsExt;
        options.mode(0o600);
    }
    #[cfg(not(unix))]
    let _ = secret;
    let mut f = options.open(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
    f.write_all(bytes)?;
    f.sync_all()?;
    fs::rename(&tmp, path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundles_round_trip() {
        let items = vec![b"SRPEabc".to_vec(), vec![], b"x".to_vec()];
        let b = bundle(&items);
        let back: Vec<Vec<u8>> = split_bundle(&b).unwrap().into_iter().map(<[u8]>::to_vec).collect();
        assert_eq!(back, items);
        assert!(split_bundle(&b[..b.len() - 1]).is_err());
    }

    #[test]
    fn servers_may_not_read_secrets() {
        assert!(!Party::Server.may_read_secrets());
        assert!(!Party::Sender.may_read_secrets());
        assert!(Party::Kgc.may_read_secrets());
        assert!(Party::User.may_read_secrets());
    }
}
