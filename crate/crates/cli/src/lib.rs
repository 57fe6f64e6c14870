//! Four-party command-line workflow over a file-based keystore.
//!
//! Each subcommand runs one algorithm of the scheme for one party: `kgc-*`
//! for the key generation center, `server-*` for the untrusted server,
//! `send-*` for senders and `user-*` for recipients. Exit codes: 0 on
//! success, 2 when the result is ⊥ (revoked or undecryptable), 1 on error.

pub mod keystore;

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};
use srpe_core::params::{ProfileSpec, SysParams, PROFILE_BANNER};
use srpe_core::srpe::{self, Ciphertext, Epoch, MasterSecret, PartialCiphertext, PublicParams};
use srpe_core::srpe::{TokenSet, TransformKey, UpdateKey, UserSecretKey};
use srpe_core::wire::WireObject;

use keystore::{bundle, read_checked, split_bundle, Keystore, Party, BUNDLE_MAGIC};

/// Environment variable that pins all randomness for reproducible runs.
pub const SEED_VAR: &str = "SRPE_SEED";

#[derive(Debug, Parser)]
#[command(name = "srpe", version, about = "Server-aided revocable predicate encryption")]
pub struct Cli {
    /// Keystore directory.
    #[arg(long, global = true, default_value = ".")]
    pub keystore: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Choose system parameters from a named profile.
    KgcSys {
        #[arg(long, default_value = "toy")]
        profile: String,
        /// Override the maximum number of users.
        #[arg(long)]
        users: Option<usize>,
    },
    /// Generate public parameters, master secret and an empty user tree.
    KgcSetup,
    /// Issue a user secret key for an identity and predicate vector.
    KgcUserkg {
        #[arg(long)]
        id: String,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        predicate: Vec<i128>,
    },
    /// Issue the public token for an identity (registers it on first use).
    KgcToken {
        #[arg(long)]
        id: String,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        predicate: Vec<i128>,
    },
    /// Publish the update key of an epoch.
    KgcUpdkg {
        #[arg(long)]
        epoch: u64,
        #[arg(long)]
        time_label: Option<String>,
    },
    /// Revoke an identity from an epoch on.
    KgcRevoke {
        #[arg(long)]
        id: String,
        #[arg(long)]
        epoch: u64,
    },
    /// Combine a token with an epoch's update key.
    ServerTrankg {
        #[arg(long)]
        id: String,
        #[arg(long)]
        epoch: u64,
    },
    /// Partially decrypt ciphertexts for one recipient.
    ServerTransform {
        #[arg(long)]
        id: String,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long = "out")]
        output: PathBuf,
        /// Transformation key; defaults to the one stored for the ciphertext's epoch.
        #[arg(long)]
        key: Option<PathBuf>,
    },
    /// Encrypt a bit string, one ciphertext per bit.
    SendEncrypt {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        attribute: Vec<i128>,
        #[arg(long)]
        epoch: u64,
        #[arg(long)]
        time_label: Option<String>,
        /// Bits to encrypt, e.g. `1011`.
        #[arg(long)]
        message: String,
        #[arg(long = "out")]
        output: PathBuf,
    },
    /// Finish decryption of partially decrypted ciphertexts; prints the bits.
    UserDecrypt {
        #[arg(long)]
        id: String,
        #[arg(long = "in")]
        input: PathBuf,
        /// Secret key; defaults to the one stored for the identity.
        #[arg(long)]
        key: Option<PathBuf>,
    },
}

/// Result of a subcommand that did not fail.
#[derive(Debug, PartialEq, Eq)]
pub enum Outcome {
    Done,
    /// The algorithm returned ⊥.
    Bottom(String),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::KgcSys { .. } => "kgc-sys",
            Command::KgcSetup => "kgc-setup",
            Command::KgcUserkg { .. } => "kgc-userkg",
            Command::KgcToken { .. } => "kgc-token",
            Command::KgcUpdkg { .. } => "kgc-updkg",
            Command::KgcRevoke { .. } => "kgc-revoke",
            Command::ServerTrankg { .. } => "server-trankg",
            Command::ServerTransform { .. } => "server-transform",
            Command::SendEncrypt { .. } => "send-encrypt",
            Command::UserDecrypt { .. } => "user-decrypt",
        }
    }

    /// Inputs that make a seeded run of this subcommand unique. Paths are
    /// left out so that two keystores replay identically.
    fn seed_context(&self) -> String {
        let parts: Vec<String> = match self {
            Command::KgcUserkg { id, predicate } | Command::KgcToken { id, predicate } => {
                vec![id.clone(), format!("{predicate:?}")]
            }
            Command::KgcUpdkg { epoch, time_label } => vec![epoch.to_string(), format!("{time_label:?}")],
            Command::SendEncrypt {
                attribute,
                epoch,
                time_label,
                message,
                ..
            } => vec![format!("{attribute:?}"), epoch.to_string(), format!("{time_label:?}"), message.clone()],
            _ => vec![],
        };
        std::iter::once(self.name().to_string()).chain(parts).collect::<Vec<_>>().join("\0")
    }
}

/// Seeded from `SRPE_SEED` and the subcommand's inputs when the variable is
/// set, from the operating system otherwise.
pub fn command_rng(command: &Command, seed: Option<&str>) -> ChaCha20Rng {
    match seed {
        Some(seed) => {
            let digest = Sha256::new()
                .chain_update(b"srpe-cli\0")
                .chain_update(seed.as_bytes())
                .chain_update(b"\0")
                .chain_update(command.seed_context().as_bytes())
                .finalize();
            ChaCha20Rng::from_seed(digest.into())
        }
        None => ChaCha20Rng::from_entropy(),
    }
}

fn vector(params: &SysParams, v: &[i128], what: &str) -> Result<Vec<u64>> {
    if v.len() != params.ell() {
        bail!("{what} needs {} comma-separated entries, got {}", params.ell(), v.len());
    }
    let q = params.q() as i128;
    Ok(v.iter().map(|x| x.rem_euclid(q) as u64).collect())
}

fn epoch(counter: u64, label: &Option<String>) -> Epoch {
    match label {
        Some(l) => Epoch::with_label(counter, l.clone()),
        None => Epoch::new(counter),
    }
}

pub fn run(cli: &Cli, seed: Option<&str>) -> Result<Outcome> {
    let ks = Keystore::new(&cli.keystore);
    let mut rng = command_rng(&cli.command, seed);
    match &cli.command {
        Command::KgcSys { profile, users } => {
            let mut spec = match profile.as_str() {
                "toy" => ProfileSpec::toy(),
                "small" => ProfileSpec::small(),
                other => bail!("unknown profile {other:?}; expected toy or small"),
            };
            if let Some(users) = users {
                spec.users = *users;
            }
            let params = SysParams::from_spec(spec)?;
            ks.write_params(&params)?;
            eprintln!("{PROFILE_BANNER}");
        }
        Command::KgcSetup => {
            let _lock = ks.lock_kgc()?;
            let params = ks.read_params()?;
            let (pp, msk, rl, tree) = srpe::setup(&params, &mut rng)?;
            ks.write_object(&ks.pp_path(), &pp)?;
            ks.write_object(&ks.msk_path(), &msk)?;
            ks.write_state(&tree, &rl)?;
        }
        Command::KgcUserkg { id, predicate } => {
            let pp: PublicParams = ks.read_object(&ks.pp_path(), Party::Kgc)?;
            let msk: MasterSecret = ks.read_object(&ks.msk_path(), Party::Kgc)?;
            let x = vector(&pp.params, predicate, "--predicate")?;
            let sk = srpe::user_kg(&pp, &msk, id.as_bytes(), &x, &mut rng)?;
            ks.write_object(&ks.sk_path(id.as_bytes()), &sk)?;
        }
        Command::KgcToken { id, predicate } => {
            let _lock = ks.lock_kgc()?;
            let pp: PublicParams = ks.read_object(&ks.pp_path(), Party::Kgc)?;
            let msk: MasterSecret = ks.read_object(&ks.msk_path(), Party::Kgc)?;
            let (mut tree, rl) = ks.read_state()?;
            let x = vector(&pp.params, predicate, "--predicate")?;
            let token = srpe::token(&pp, &msk, id.as_bytes(), &x, &mut tree, &mut rng)?;
            ks.write_state(&tree, &rl)?;
            ks.write_object(&ks.token_path(id.as_bytes()), &token)?;
        }
        Command::KgcUpdkg { epoch: e, time_label } => {
            let _lock = ks.lock_kgc()?;
            let pp: PublicParams = ks.read_object(&ks.pp_path(), Party::Kgc)?;
            let msk: MasterSecret = ks.read_object(&ks.msk_path(), Party::Kgc)?;
            let (mut tree, rl) = ks.read_state()?;
            let uk = srpe::upd_kg(&pp, &msk, &epoch(*e, time_label), &rl, &mut tree, &mut rng)?;
            ks.write_state(&tree, &rl)?;
            ks.write_object(&ks.uk_path(*e), &uk)?;
        }
        Command::KgcRevoke { id, epoch: e } => {
            let _lock = ks.lock_kgc()?;
            let (tree, mut rl) = ks.read_state()?;
            srpe::revoke(id.as_bytes(), &Epoch::new(*e), &mut rl, &tree)?;
            ks.write_state(&tree, &rl)?;
        }
        Command::ServerTrankg { id, epoch: e } => {
            let token: TokenSet = ks.read_object(&ks.token_path(id.as_bytes()), Party::Server)?;
            let uk: UpdateKey = ks.read_object(&ks.uk_path(*e), Party::Server)?;
            match srpe::tran_kg(&token, &uk) {
                Some(tk) => ks.write_object(&ks.tk_path(id.as_bytes(), *e), &tk)?,
                None => return Ok(Outcome::Bottom(format!("{id} is revoked at epoch {e}"))),
            }
        }
        Command::ServerTransform {
            id,
            input,
            output,
            key,
        } => {
            let cts: Vec<Ciphertext> = read_many(input, Party::Server)?;
            let pp: PublicParams = ks.read_object(&ks.pp_path(), Party::Server)?;
            let mut out = Vec::new();
            let mut tk: Option<TransformKey> = None;
            for ct in &cts {
                if tk.as_ref().is_none_or(|k| k.epoch != ct.epoch) {
                    let path = key.clone().unwrap_or_else(|| ks.tk_path(id.as_bytes(), ct.epoch.counter));
                    tk = Some(ks.read_object(&path, Party::Server)?);
                }
                let k = tk.as_ref().expect("loaded above");
                if k.id != id.as_bytes() {
                    bail!("transformation key belongs to another identity");
                }
                out.push(srpe::transform(&pp, ct, k)?.to_bytes()?);
            }
            keystore::write_atomic(output, &bundle(&out))?;
        }
        Command::SendEncrypt {
            attribute,
            epoch: e,
            time_label,
            message,
            output,
        } => {
            let pp: PublicParams = ks.read_object(&ks.pp_path(), Party::Sender)?;
            let y = vector(&pp.params, attribute, "--attribute")?;
            let bits = parse_bits(message)?;
            let ep = epoch(*e, time_label);
            let cts = bits
                .iter()
                .map(|&b| Ok(srpe::enc(&pp, &y, &ep, b, &mut rng)?.to_bytes()?))
                .collect::<Result<Vec<_>>>()?;
            keystore::write_atomic(output, &bundle(&cts))?;
        }
        Command::UserDecrypt { id, input, key } => {
            let pp: PublicParams = ks.read_object(&ks.pp_path(), Party::User)?;
            let path = key.clone().unwrap_or_else(|| ks.sk_path(id.as_bytes()));
            let sk: UserSecretKey = ks.read_object(&path, Party::User)?;
            let pcts: Vec<PartialCiphertext> = read_many(input, Party::User)?;
            let mut bits = String::new();
            for pct in &pcts {
                match srpe::dec(&pp, pct, &sk)? {
                    Some(b) => bits.push(if b { '1' } else { '0' }),
                    None => return Ok(Outcome::Bottom("ciphertext does not decrypt under this key".into())),
                }
            }
            println!("{bits}");
        }
    }
    Ok(Outcome::Done)
}

fn parse_bits(message: &str) -> Result<Vec<bool>> {
    if message.is_empty() {
        bail!("--message is empty");
    }
    message
        .chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => bail!("--message may only contain 0 and 1, found {other:?}"),
        })
        .collect()
}

/// Objects of one type from a single-object file or a bundle.
fn read_many<T: WireObject>(path: &std::path::Path, party: Party) -> Result<Vec<T>> {
    let bytes = read_checked(path, party)?;
    let items = if bytes.starts_with(BUNDLE_MAGIC) {
        split_bundle(&bytes)?
    } else {
        vec![bytes.as_slice()]
    };
    items
        .into_iter()
        .map(|b| T::from_bytes(b).with_context(|| format!("decoding {}", path.display())))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bits_parse() {
        assert_eq!(parse_bits("101").unwrap(), vec![true, false, true]);
        assert!(parse_bits("").is_err());
        assert!(parse_bits("12").is_err());
    }

    #[test]
    fn seeds_depend_on_inputs_not_paths() {
        use rand::RngCore;
        let a = Cli::parse_from(["srpe", "--keystore", "a", "kgc-userkg", "--id", "alice", "--predicate", "1,2"]);
        let b = Cli::parse_from(["srpe", "--keystore", "b", "kgc-userkg", "--id", "alice", "--predicate", "1,2"]);
        let c = Cli::parse_from(["srpe", "kgc-userkg", "--id", "bob", "--predicate", "1,2"]);
        let draw = |cli: &Cli| command_rng(&cli.command, Some("7")).next_u64();
        assert_eq!(draw(&a), draw(&b));
        assert_ne!(draw(&a), draw(&c));
    }

    #[test]
    fn negative_entries_wrap_modulo_q() {
        let params = SysParams::profile("toy").unwrap();
        let v = vector(&params, &[-1, 0, 1, 2], "v").unwrap();
        assert_eq!(v, vec![params.q() - 1, 0, 1, 2]);
        assert!(vector(&params, &[1], "v").is_err());
    }
}
