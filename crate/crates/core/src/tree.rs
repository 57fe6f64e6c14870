//! Complete-subtree revocation.
//!
//! Nodes use heap numbering: the root is 1, the children of `v` are `2v` and
//! `2v + 1`, and the leaves of a depth-`d` tree are `2^d .. 2^(d+1) - 1`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::zq::ZqMatrix;

pub type NodeId = u64;

pub const ROOT: NodeId = 1;

const STATE_MAGIC: &str = "SRPE-STATE 1";

/// Revoked leaves with the epoch from which each revocation applies.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RevocationList {
    entries: BTreeSet<(NodeId, u64)>,
}

impl RevocationList {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `(leaf, epoch)`; returns `false` if the pair was already present.
    pub fn insert(&mut self, leaf: NodeId, epoch: u64) -> bool {
        self.entries.insert((leaf, epoch))
    }

    pub fn entries(&self) -> impl Iterator<Item = (NodeId, u64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Leaves revoked at epoch `t`, i.e. with an entry `(leaf, t_i)`, `t_i <= t`.
    pub fn revoked_at(&self, t: u64) -> BTreeSet<NodeId> {
        self.entries.iter().filter(|(_, ti)| *ti <= t).map(|(l, _)| *l).collect()
    }

    pub fn is_revoked(&self, leaf: NodeId, t: u64) -> bool {
        self.entries.iter().any(|&(l, ti)| l == leaf && ti <= t)
    }
}

/// The user tree: leaf assignment plus the write-once store of per-node
/// matrices `U_θ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryTree {
    depth: u32,
    capacity: usize,
    leaves: BTreeMap<Vec<u8>, NodeId>,
    store: BTreeMap<NodeId, ZqMatrix>,
}

impl BinaryTree {
    /// Smallest complete tree with at least `capacity` leaves.
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidParameter("tree needs at least one leaf".into()));
        }
        Ok(Self {
            depth: capacity.next_power_of_two().trailing_zeros(),
            capacity,
            leaves: BTreeMap::new(),
            store: BTreeMap::new(),
        })
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// Maximum number of users `N`.
    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn leaf_count(&self) -> u64 {
        1 << self.depth
    }

    pub fn first_leaf(&self) -> NodeId {
        1 << self.depth
    }

    pub fn is_leaf(&self, v: NodeId) -> bool {
        v >= self.first_leaf() && v < 2 * self.first_leaf()
    }

    pub fn contains(&self, v: NodeId) -> bool {
        v >= ROOT && v < 2 * self.first_leaf()
    }

    /// Next free leaf, left to right in registration order.
    pub fn assign_leaf(&mut self, id: &[u8]) -> Result<NodeId> {
        if self.leaves.contains_key(id) {
            return Err(Error::DuplicateIdentity);
        }
        if self.leaves.len() >= self.capacity {
            return Err(Error::TreeFull(self.capacity));
        }
        let leaf = self.first_leaf() + self.leaves.len() as u64;
        self.leaves.insert(id.to_vec(), leaf);
        Ok(leaf)
    }

    pub fn leaf_of(&self, id: &[u8]) -> Option<NodeId> {
        self.leaves.get(id).copied()
    }

    /// Registered identities with their leaves.
    pub fn identities(&self) -> impl Iterator<Item = (&[u8], NodeId)> {
        self.leaves.iter().map(|(k, &v)| (k.as_slice(), v))
    }

    /// Leaf-to-root node list.
    pub fn path(&self, leaf: NodeId) -> Result<Vec<NodeId>> {
        if !self.is_leaf(leaf) {
            return Err(Error::UnknownLeaf(leaf));
        }
        let mut out = Vec::with_capacity(self.depth as usize + 1);
        let mut v = leaf;
        while v >= ROOT {
            out.push(v);
            v /= 2;
        }
        Ok(out)
    }

    pub fn node_matrix(&self, v: NodeId) -> Option<&ZqMatrix> {
        self.store.get(&v)
    }

    /// Stores `U_θ`; a node never receives a second matrix.
    pub fn store_node(&mut self, v: NodeId, u: ZqMatrix) -> Result<()> {
        if !self.contains(v) {
            return Err(Error::UnknownLeaf(v));
        }
        if self.store.contains_key(&v) {
            return Err(Error::NodeOverwrite(v));
        }
        self.store.insert(v, u);
        Ok(())
    }

    /// The stored matrix of `v`, drawing and storing one first if needed.
    pub fn node_or_insert_with(&mut self, v: NodeId, draw: impl FnOnce() -> ZqMatrix) -> Result<&ZqMatrix> {
        if !self.contains(v) {
            return Err(Error::UnknownLeaf(v));
        }
        Ok(self.store.entry(v).or_insert_with(draw))
    }

    pub fn stored_nodes(&self) -> impl Iterator<Item = (NodeId, &ZqMatrix)> {
        self.store.iter().map(|(&k, v)| (k, v))
    }
}

/// Nodes on the path of some leaf revoked at `t`.
fn revoked_paths(tree: &BinaryTree, rl: &RevocationList, t: u64) -> BTreeSet<NodeId> {
    let mut x = BTreeSet::new();
    for leaf in rl.revoked_at(t) {
        if let Ok(path) = tree.path(leaf) {
            x.extend(path);
        }
    }
    x
}

/// Minimal node set covering exactly the leaves not revoked at `t`.
///
/// Follows the complete-subtree rule literally: when no node qualifies the
/// root is returned, which also happens when every leaf is revoked. See
/// [`update_nodes`] for the set update keys are issued for.
pub fn ku_nodes(tree: &BinaryTree, rl: &RevocationList, t: u64) -> BTreeSet<NodeId> {
    let x = revoked_paths(tree, rl, t);
    let mut y = BTreeSet::new();
    for &v in &x {
        if tree.is_leaf(v) {
            continue;
        }
        for child in [2 * v, 2 * v + 1] {
            if !x.contains(&child) {
                y.insert(child);
            }
        }
    }
    if y.is_empty() {
        y.insert(ROOT);
    }
    y
}

/// [`ku_nodes`] without the nodes on a revoked path. This differs from
/// `ku_nodes` only when every leaf is revoked, where it is empty instead of
/// the root, so that no revoked user ever shares a node with an update key.
pub fn update_nodes(tree: &BinaryTree, rl: &RevocationList, t: u64) -> BTreeSet<NodeId> {
    let x = revoked_paths(tree, rl, t);
    let mut y = ku_nodes(tree, rl, t);
    y.retain(|v| !x.contains(v));
    y
}

/// The node of `Path(leaf)` that appears in the update cover at `t`, or
/// `None` when the leaf is revoked.
pub fn cover_check(tree: &BinaryTree, rl: &RevocationList, t: u64, leaf: NodeId) -> Result<Option<NodeId>> {
    let path = tree.path(leaf)?;
    if rl.is_revoked(leaf, t) {
        return Ok(None);
    }
    let cover = update_nodes(tree, rl, t);
    Ok(path.into_iter().filter(|v| cover.contains(v)).min())
}

/// Text form of the tree and revocation list, one record per line. Stored
/// matrices are referenced by the file name `node_file` gives them.
pub fn write_state(tree: &BinaryTree, rl: &RevocationList, node_file: impl Fn(NodeId) -> String) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{STATE_MAGIC}");
    let _ = writeln!(out, "DEPTH {}", tree.depth);
    let _ = writeln!(out, "CAPACITY {}", tree.capacity);
    let mut leaves: Vec<_> = tree.leaves.iter().collect();
    leaves.sort_by_key(|(_, &leaf)| leaf);
    for (id, leaf) in leaves {
        let _ = writeln!(out, "LEAF {} {leaf}", hex::encode(id));
    }
    for v in tree.store.keys() {
        let _ = writeln!(out, "NODE {v} {}", node_file(*v));
    }
    for (leaf, epoch) in rl.entries() {
        let _ = writeln!(out, "RL {leaf} {epoch}");
    }
    out
}

/// Parses [`write_state`] output, loading node matrices through `load`.
pub fn read_state(
    text: &str,
    mut load: impl FnMut(NodeId, &str) -> Result<ZqMatrix>,
) -> Result<(BinaryTree, RevocationList)> {
    let bad = |line: &str| Error::Wire(format!("malformed state line {line:?}"));
    let mut lines = text.lines();
    if lines.next() != Some(STATE_MAGIC) {
        return Err(Error::Wire("not a state file".into()));
    }
    let mut depth = None;
    let mut tree: Option<BinaryTree> = None;
    let mut rl = RevocationList::new();
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields.as_slice() {
            ["DEPTH", d] => depth = Some(d.parse::<u32>().map_err(|_| bad(line))?),
            ["CAPACITY", c] => {
                let t = BinaryTree::new(c.parse().map_err(|_| bad(line))?)?;
                if Some(t.depth) != depth {
                    return Err(Error::Wire("depth does not match capacity".into()));
                }
                tree = Some(t);
            }
            ["LEAF", id, leaf] => {
                let t = tree.as_mut().ok_or_else(|| bad(line))?;
                let id = hex::decode(id).map_err(|_| bad(line))?;
                let leaf: NodeId = leaf.parse().map_err(|_| bad(line))?;
                if t.assign_leaf(&id)? != leaf {
                    return Err(Error::Wire(format!("leaf {leaf} is out of assignment order")));
                }
            }
            ["NODE", v, file] => {
                let t = tree.as_mut().ok_or_else(|| bad(line))?;
                let v: NodeId = v.parse().map_err(|_| bad(line))?;
                t.store_node(v, load(v, file)?)?;
            }
            ["RL", leaf, epoch] => {
                let leaf = leaf.parse().map_err(|_| bad(line))?;
                rl.insert(leaf, epoch.parse().map_err(|_| bad(line))?);
            }
            _ => return Err(bad(line)),
        }
    }
    let tree = tree.ok_or_else(|| Error::Wire("state file lacks CAPACITY".into()))?;
    Ok((tree, rl))
}
