//! Binary wire format.
//!
//! Every matrix is a self-describing record:
//!
//! ```text
//! "SRPE" | version u16 | kind u8 | q u64 | rows u32 | cols u32 | entries
//! ```
//!
//! with all integers little-endian and each entry stored row-major in
//! `ceil(bit_length(q) / 8)` bytes. Short integer matrices are stored as their
//! residues mod `q` and read back centered.
//!
//! Objects wrap a sequence of fields in an envelope:
//!
//! ```text
//! "SRPE" | version u16 | object tag u8 | flags u8 | fields
//! ```
//!
//! Flag bit 0 marks secret objects (master secrets and user keys).

use crate::error::{Error, Result};
use crate::params::{ProfileSpec, SysParams};
use crate::pe::{PeCiphertext, PeMasterSecret, PePublicParams, PeSecretKey};
use crate::srpe::{
    Ciphertext, Epoch, MasterSecret, PartialCiphertext, PublicParams, TokenSet, TransformKey, UpdateKey, UserSecretKey,
};
use crate::trapdoor::GTrapdoor;
use crate::zq::{IntMatrix, Modulus, ZqMatrix, ZqVector};

pub const MAGIC: &[u8; 4] = b"SRPE";
pub const VERSION: u16 = 1;
pub const FLAG_SECRET: u8 = 0x01;

/// Kind byte of a matrix record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum MatrixKind {
    /// Uniform or public matrix over `Z_q`.
    Public = 0x21,
    /// Short integer matrix (keys, preimages).
    Short = 0x22,
    /// Trapdoor part `R` of a master secret.
    Trapdoor = 0x23,
}

impl MatrixKind {
    fn from_byte(b: u8) -> Result<Self> {
        match b {
            0x21 => Ok(Self::Public),
            0x22 => Ok(Self::Short),
            0x23 => Ok(Self::Trapdoor),
            other => Err(Error::Wire(format!("unknown matrix kind 0x{other:02x}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum ObjectTag {
    PePublicParams = 0x01,
    PeMasterSecret = 0x02,
    PeSecretKey = 0x03,
    PeCiphertext = 0x04,
    PublicParams = 0x11,
    MasterSecret = 0x12,
    SecretKey = 0x13,
    Token = 0x14,
    UpdateKey = 0x15,
    TransformKey = 0x16,
    Ciphertext = 0x17,
    PartialCiphertext = 0x18,
}

impl ObjectTag {
    pub fn from_byte(b: u8) -> Result<Self> {
        use ObjectTag::*;
        [
            PePublicParams,
            PeMasterSecret,
            PeSecretKey,
            PeCiphertext,
            PublicParams,
            MasterSecret,
            SecretKey,
            Token,
            UpdateKey,
            TransformKey,
            Ciphertext,
            PartialCiphertext,
        ]
        .into_iter()
        .find(|t| *t as u8 == b)
        .ok_or_else(|| Error::Wire(format!("unknown object tag 0x{b:02x}")))
    }

    pub fn name(self) -> &'static str {
        use ObjectTag::*;
        match self {
            PePublicParams => "PE-PP",
            PeMasterSecret => "PE-MSK",
            PeSecretKey => "PE-SK",
            PeCiphertext => "PE-CT",
            PublicParams => "PP",
            MasterSecret => "MSK",
            SecretKey => "SK",
            Token => "TOKEN",
            UpdateKey => "UK",
            TransformKey => "TK",
            Ciphertext => "CT",
            PartialCiphertext => "PCT",
        }
    }

    pub fn is_secret(self) -> bool {
        matches!(
            self,
            Self::PeMasterSecret | Self::PeSecretKey | Self::MasterSecret | Self::SecretKey
        )
    }
}

/// Envelope header of a serialized object.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Header {
    pub tag: ObjectTag,
    pub secret: bool,
}

/// Reads only the envelope header, leaving the body unparsed.
pub fn peek_header(bytes: &[u8]) -> Result<Header> {
    let mut r = Reader::new(bytes);
    r.preamble()?;
    let tag = ObjectTag::from_byte(r.u8()?)?;
    let flags = r.u8()?;
    if flags & !FLAG_SECRET != 0 {
        return Err(Error::Wire(format!("unknown flags 0x{flags:02x}")));
    }
    Ok(Header {
        tag,
        secret: flags & FLAG_SECRET != 0,
    })
}

#[derive(Debug, Default)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64(&mut self, v: f64) {
        self.u64(v.to_bits());
    }

    pub fn len(&mut self, v: usize) -> Result<()> {
        let v = u32::try_from(v).map_err(|_| Error::Wire(format!("length {v} does not fit in u32")))?;
        self.u32(v);
        Ok(())
    }

    pub fn bytes(&mut self, v: &[u8]) -> Result<()> {
        self.len(v.len())?;
        self.buf.extend_from_slice(v);
        Ok(())
    }

    pub fn u64s(&mut self, v: &[u64]) -> Result<()> {
        self.len(v.len())?;
        v.iter().for_each(|&x| self.u64(x));
        Ok(())
    }

    fn preamble(&mut self) {
        self.buf.extend_from_slice(MAGIC);
        self.buf.extend_from_slice(&VERSION.to_le_bytes());
    }

    fn record(&mut self, kind: MatrixKind, q: Modulus, rows: usize, cols: usize, entries: impl Iterator<Item = u64>) -> Result<()> {
        self.preamble();
        self.u8(kind as u8);
        self.u64(q.value());
        self.len(rows)?;
        self.len(cols)?;
        let width = entry_width(q);
        for x in entries {
            self.buf.extend_from_slice(&x.to_le_bytes()[..width]);
        }
        Ok(())
    }

    pub fn zq_matrix(&mut self, m: &ZqMatrix) -> Result<()> {
        self.record(MatrixKind::Public, m.modulus(), m.rows(), m.cols(), m.as_slice().iter().copied())
    }

    /// A vector is a one-column matrix.
    pub fn zq_vector(&mut self, v: &ZqVector) -> Result<()> {
        self.record(MatrixKind::Public, v.modulus(), v.len(), 1, v.as_slice().iter().copied())
    }

    pub fn zq_vectors(&mut self, vs: &[ZqVector]) -> Result<()> {
        self.len(vs.len())?;
        vs.iter().try_for_each(|v| self.zq_vector(v))
    }

    pub fn zq_matrices(&mut self, ms: &[ZqMatrix]) -> Result<()> {
        self.len(ms.len())?;
        ms.iter().try_for_each(|m| self.zq_matrix(m))
    }

    pub fn int_matrix(&mut self, kind: MatrixKind, m: &IntMatrix, q: Modulus) -> Result<()> {
        let half = (q.value() / 2) as i64;
        if m.max_abs() > half as u64 {
            return Err(Error::Wire("short matrix entry exceeds q/2".into()));
        }
        self.record(kind, q, m.rows(), m.cols(), m.as_slice().iter().map(|&x| q.reduce_i64(x)))
    }

    /// A vector over `Z_q` given by its representatives (predicates, attributes).
    pub fn residues(&mut self, v: &[u64], q: Modulus) -> Result<()> {
        if v.iter().any(|&x| x >= q.value()) {
            return Err(Error::Wire("residue out of range".into()));
        }
        self.record(MatrixKind::Public, q, v.len(), 1, v.iter().copied())
    }

    pub fn epoch(&mut self, e: &Epoch) -> Result<()> {
        self.u64(e.counter);
        self.bytes(e.label.as_bytes())
    }

    pub fn params(&mut self, p: &SysParams) -> Result<()> {
        let spec = p.spec();
        self.bytes(spec.name.as_bytes())?;
        for v in [spec.n, spec.users, spec.ell, spec.kappa] {
            self.len(v)?;
        }
        self.u64(spec.q);
        self.f64(spec.s);
        self.u64(spec.noise_bound);
        self.f64(spec.omega_const);
        self.u64s(p.frd().poly())
    }
}

#[derive(Debug)]
pub struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() < n {
            return Err(Error::Wire("truncated input".into()));
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    pub fn finish(self) -> Result<()> {
        if self.buf.is_empty() {
            Ok(())
        } else {
            Err(Error::Wire(format!("{} trailing bytes", self.buf.len())))
        }
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }

    pub fn len(&mut self) -> Result<usize> {
        let n = self.u32()? as usize;
        // every element takes at least one byte, which bounds allocations
        if n > self.buf.len() {
            return Err(Error::Wire(format!("length {n} exceeds remaining input")));
        }
        Ok(n)
    }

    pub fn bytes(&mut self) -> Result<Vec<u8>> {
        let n = self.len()?;
        Ok(self.take(n)?.to_vec())
    }

    pub fn u64s(&mut self) -> Result<Vec<u64>> {
        let n = self.len()?;
        (0..n).map(|_| self.u64()).collect()
    }

    fn preamble(&mut self) -> Result<()> {
        if self.take(4)? != MAGIC {
            return Err(Error::Wire("bad magic".into()));
        }
        let version = u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes"));
        if version != VERSION {
            return Err(Error::Wire(format!("unsupported version {version}")));
        }
        Ok(())
    }

    fn record(&mut self, want: MatrixKind) -> Result<(Modulus, usize, usize, Vec<u64>)> {
        self.preamble()?;
        let kind = MatrixKind::from_byte(self.u8()?)?;
        if kind != want {
            return Err(Error::Wire(format!("expected {want:?} matrix, found {kind:?}")));
        }
        let q = Modulus::new(self.u64()?)?;
        let rows = self.u32()? as usize;
        let cols = self.u32()? as usize;
        let width = entry_width(q);
        let count = rows
            .checked_mul(cols)
            .filter(|c| c.checked_mul(width).is_some_and(|b| b <= self.buf.len()))
            .ok_or_else(|| Error::Wire("matrix body truncated".into()))?;
        let body = self.take(count * width)?;
        let entries = body
            .chunks_exact(width)
            .map(|c| {
                let mut b = [0u8; 8];
                b[..width].copy_from_slice(c);
                u64::from_le_bytes(b)
            })
            .collect::<Vec<_>>();
        if entries.iter().any(|&x| x >= q.value()) {
            return Err(Error::Wire("matrix entry out of range".into()));
        }
        Ok((q, rows, cols, entries))
    }

    pub fn zq_matrix(&mut self) -> Result<ZqMatrix> {
        let (q, rows, cols, data) = self.record(MatrixKind::Public)?;
        ZqMatrix::from_vec(rows, cols, data, q)
    }

    pub fn zq_vector(&mut self) -> Result<ZqVector> {
        let (q, _, cols, data) = self.record(MatrixKind::Public)?;
        if cols != 1 {
            return Err(Error::Wire("vector record must have one column".into()));
        }
        ZqVector::from_vec(data, q)
    }

    pub fn zq_vectors(&mut self) -> Result<Vec<ZqVector>> {
        let n = self.len()?;
        (0..n).map(|_| self.zq_vector()).collect()
    }

    pub fn zq_matrices(&mut self) -> Result<Vec<ZqMatrix>> {
        let n = self.len()?;
        (0..n).map(|_| self.zq_matrix()).collect()
    }

    pub fn int_matrix(&mut self, kind: MatrixKind) -> Result<IntMatrix> {
        let (q, rows, cols, data) = self.record(kind)?;
        IntMatrix::from_vec(rows, cols, data.into_iter().map(|x| q.centered(x)).collect())
    }

    pub fn residues(&mut self) -> Result<Vec<u64>> {
        Ok(self.zq_vector()?.into_vec())
    }

    pub fn epoch(&mut self) -> Result<Epoch> {
        let counter = self.u64()?;
        let label = String::from_utf8(self.bytes()?).map_err(|_| Error::Wire("time label is not UTF-8".into()))?;
        Ok(Epoch { counter, label })
    }

    pub fn params(&mut self) -> Result<SysParams> {
        let name = String::from_utf8(self.bytes()?).map_err(|_| Error::Wire("profile name is not UTF-8".into()))?;
        let (n, users, ell, kappa) = (self.u32()?, self.u32()?, self.u32()?, self.u32()?);
        let spec = ProfileSpec {
            name,
            n: n as usize,
            users: users as usize,
            ell: ell as usize,
            kappa: kappa as usize,
            q: self.u64()?,
            s: self.f64()?,
            noise_bound: self.u64()?,
            omega_const: self.f64()?,
        };
        SysParams::from_spec_with_frd(spec, self.u64s()?)
    }
}

fn entry_width(q: Modulus) -> usize {
    (q.bit_length() as usize).div_ceil(8).max(1)
}

/// An object with its own envelope tag.
pub trait WireObject: Sized {
    const TAG: ObjectTag;

    fn write_fields(&self, w: &mut Writer) -> Result<()>;

    fn read_fields(r: &mut Reader<'_>) -> Result<Self>;

    fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = Writer::new();
        w.preamble();
        w.u8(Self::TAG as u8);
        w.u8(if Self::TAG.is_secret() { FLAG_SECRET } else { 0 });
        self.write_fields(&mut w)?;
        Ok(w.into_bytes())
    }

    fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let header = peek_header(bytes)?;
        if header.tag != Self::TAG {
            return Err(Error::Wire(format!(
                "expected a {} object, found {}",
                Self::TAG.name(),
                header.tag.name()
            )));
        }
        if header.secret != Self::TAG.is_secret() {
            return Err(Error::Wire("secrecy flag does not match the object tag".into()));
        }
        let mut r = Reader::new(&bytes[8..]);
        let v = Self::read_fields(&mut r)?;
        r.finish()?;
        Ok(v)
    }
}

fn write_trapdoor(w: &mut Writer, t: &GTrapdoor) -> Result<()> {
    let r = t
        .r()
        .ok_or_else(|| Error::Wire("only generated trapdoors can be serialized".into()))?;
    w.zq_matrix(t.matrix())?;
    w.int_matrix(MatrixKind::Trapdoor, r, t.modulus())
}

fn read_trapdoor(r: &mut Reader<'_>) -> Result<GTrapdoor> {
    let a = r.zq_matrix()?;
    let t = r.int_matrix(MatrixKind::Trapdoor)?;
    GTrapdoor::from_parts(a, t)
}

fn write_entries(w: &mut Writer, entries: &[(u64, IntMatrix)], q: Modulus) -> Result<()> {
    w.len(entries.len())?;
    for (node, z) in entries {
        w.u64(*node);
        w.int_matrix(MatrixKind::Short, z, q)?;
    }
    Ok(())
}

fn read_entries(r: &mut Reader<'_>) -> Result<Vec<(u64, IntMatrix)>> {
    let n = r.len()?;
    (0..n)
        .map(|_| Ok((r.u64()?, r.int_matrix(MatrixKind::Short)?)))
        .collect()
}

impl WireObject for PublicParams {
    const TAG: ObjectTag = ObjectTag::PublicParams;

    fn write_fields(&self, w: &mut Writer) -> Result<()> {
        w.params(&self.params)?;
        for m in [&self.a, &self.b, &self.c, &self.d] {
            w.zq_matrix(m)?;
        }
        w.zq_matrices(&self.a_i)?;
        w.zq_matrices(&self.b_i)?;
        w.zq_matrix(&self.v)
    }

    fn read_fields(r: &mut Reader<'_>) -> Result<Self> {
        Ok(Self {
            params: r.params()?,
            a: r.zq_matrix()?,
            b: r.zq_matrix()?,
            c: r.zq_matrix()?,
            d: r.zq_matrix()?,
            a_i: r.zq_matrices()?,
            b_i: r.zq_matrices()?,
            v: r.zq_matrix()?,
        })
    }
}

impl WireObject for MasterSecret {
    const TAG: ObjectTag = ObjectTag::MasterSecret;

    fn write_fields(&self, w: &mut Writer) -> Result<()> {
        write_trapdoor(w, &self.t_a)?;
        write_trapdoor(w, &self.t_b)
    }

    fn read_fields(r: &mut Reader<'_>) -> Result<Self> {
        Ok(Self {
            t_a: read_trapdoor(r)?,
            t_b: read_trapdoor(r)?,
        })
    }
}

impl WireObject for UserSecretKey {
    const TAG: ObjectTag = ObjectTag::SecretKey;

    fn write_fields(&self, w: &mut Writer) -> Result<()> {
        w.bytes(&self.id)?;
        w.residues(&self.x, self.modulus)?;
        w.int_matrix(MatrixKind::Short, &self.z, self.modulus)
    }

    fn read_fields(r: &mut Reader<'_>) -> Result<Self> {
        let id = r.bytes()?;
        let x = r.zq_vector()?;
        Ok(Self {
            modulus: x.modulus(),
            id,
            x: x.into_vec(),
            z: r.int_matrix(MatrixKind::Short)?,
        })
    }
}

impl WireObject for TokenSet {
    const TAG: ObjectTag = ObjectTag::Token;

    fn write_fields(&self, w: &mut Writer) -> Result<()> {
        w.bytes(&self.id)?;
        w.residues(&self.x, self.modulus)?;
        write_entries(w, &self.entries, self.modulus)
    }

    fn read_fields(r: &mut Reader<'_>) -> Result<Self> {
        let id = r.bytes()?;
        let x = r.zq_vector()?;
        Ok(Self {
            modulus: x.modulus(),
            id,
            x: x.into_vec(),
            entries: read_entries(r)?,
        })
    }
}

impl WireObject for UpdateKey {
    const TAG: ObjectTag = ObjectTag::UpdateKey;

    fn write_fields(&self, w: &mut Writer) -> Result<()> {
        w.u64(self.modulus.value());
        w.epoch(&self.epoch)?;
        write_entries(w, &self.entries, self.modulus)
    }

    fn read_fields(r: &mut Reader<'_>) -> Result<Self> {
        Ok(Self {
            modulus: Modulus::new(r.u64()?)?,
            epoch: r.epoch()?,
            entries: read_entries(r)?,
        })
    }
}

impl WireObject for TransformKey {
    const TAG: ObjectTag = ObjectTag::TransformKey;

    fn write_fields(&self, w: &mut Writer) -> Result<()> {
        w.bytes(&self.id)?;
        w.residues(&self.x, self.modulus)?;
        w.epoch(&self.epoch)?;
        w.u64(self.node);
        w.int_matrix(MatrixKind::Short, &self.z1, self.modulus)?;
        w.int_matrix(MatrixKind::Short, &self.z2, self.modulus)
    }

    fn read_fields(r: &mut Reader<'_>) -> Result<Self> {
        let id = r.bytes()?;
        let x = r.zq_vector()?;
        Ok(Self {
            modulus: x.modulus(),
            id,
            x: x.into_vec(),
            epoch: r.epoch()?,
            node: r.u64()?,
            z1: r.int_matrix(MatrixKind::Short)?,
            z2: r.int_matrix(MatrixKind::Short)?,
        })
    }
}

impl WireObject for Ciphertext {
    const TAG: ObjectTag = ObjectTag::Ciphertext;

    fn write_fields(&self, w: &mut Writer) -> Result<()> {
        w.epoch(&self.epoch)?;
        w.zq_vector(&self.c)?;
        w.zq_vector(&self.c1)?;
        w.zq_vectors(&self.c1_i)?;
        w.zq_vector(&self.c1_0)?;
        w.zq_vector(&self.c2)?;
        w.zq_vectors(&self.c2_i)
    }

    fn read_fields(r: &mut Reader<'_>) -> Result<Self> {
        Ok(Self {
            epoch: r.epoch()?,
            c: r.zq_vector()?,
            c1: r.zq_vector()?,
            c1_i: r.zq_vectors()?,
            c1_0: r.zq_vector()?,
            c2: r.zq_vector()?,
            c2_i: r.zq_vectors()?,
        })
    }
}

impl WireObject for PartialCiphertext {
    const TAG: ObjectTag = ObjectTag::PartialCiphertext;

    fn write_fields(&self, w: &mut Writer) -> Result<()> {
        w.epoch(&self.epoch)?;
        w.zq_vector(&self.c)?;
        w.zq_vector(&self.c2)?;
        w.zq_vectors(&self.c2_i)?;
        w.zq_vector(&self.c_bar)
    }

    fn read_fields(r: &mut Reader<'_>) -> Result<Self> {
        Ok(Self {
            epoch: r.epoch()?,
            c: r.zq_vector()?,
            c2: r.zq_vector()?,
            c2_i: r.zq_vectors()?,
            c_bar: r.zq_vector()?,
        })
    }
}

impl WireObject for PePublicParams {
    const TAG: ObjectTag = ObjectTag::PePublicParams;

    fn write_fields(&self, w: &mut Writer) -> Result<()> {
        w.zq_matrix(&self.a)?;
        w.zq_matrices(&self.a_i)?;
        w.zq_matrix(&self.v)
    }

    fn read_fields(r: &mut Reader<'_>) -> Result<Self> {
        Ok(Self {
            a: r.zq_matrix()?,
            a_i: r.zq_matrices()?,
            v: r.zq_matrix()?,
        })
    }
}

impl WireObject for PeMasterSecret {
    const TAG: ObjectTag = ObjectTag::PeMasterSecret;

    fn write_fields(&self, w: &mut Writer) -> Result<()> {
        write_trapdoor(w, &self.t_a)
    }

    fn read_fields(r: &mut Reader<'_>) -> Result<Self> {
        Ok(Self { t_a: read_trapdoor(r)? })
    }
}

impl WireObject for PeSecretKey {
    const TAG: ObjectTag = ObjectTag::PeSecretKey;

    fn write_fields(&self, w: &mut Writer) -> Result<()> {
        w.residues(&self.x, self.modulus)?;
        w.int_matrix(MatrixKind::Short, &self.z, self.modulus)
    }

    fn read_fields(r: &mut Reader<'_>) -> Result<Self> {
        let x = r.zq_vector()?;
        Ok(Self {
            modulus: x.modulus(),
            x: x.into_vec(),
            z: r.int_matrix(MatrixKind::Short)?,
        })
    }
}

impl WireObject for PeCiphertext {
    const TAG: ObjectTag = ObjectTag::PeCiphertext;

    fn write_fields(&self, w: &mut Writer) -> Result<()> {
        w.zq_vector(&self.c)?;
        w.zq_vector(&self.c0)?;
        w.zq_vectors(&self.c_i)
    }

    fn read_fields(r: &mut Reader<'_>) -> Result<Self> {
        Ok(Self {
            c: r.zq_vector()?,
            c0: r.zq_vector()?,
            c_i: r.zq_vectors()?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn modulus() -> impl Strategy<Value = Modulus> {
        prop_oneof![Just(3u64), Just(257), Just(65537), Just(1_048_583), Just(222_413_166_077), Just((1 << 61) - 1)]
            .prop_map(|q| Modulus::new(q).unwrap())
    }

    fn zq_matrix() -> impl Strategy<Value = ZqMatrix> {
        (modulus(), 0usize..5, 0usize..5).prop_flat_map(|(q, r, c)| {
            prop::collection::vec(0..q.value(), r * c).prop_map(move |d| ZqMatrix::from_vec(r, c, d, q).unwrap())
        })
    }

    fn short(q: Modulus) -> impl Strategy<Value = IntMatrix> {
        let half = (q.value() / 2) as i64;
        (1usize..5, 1usize..5).prop_flat_map(move |(r, c)| {
            prop::collection::vec(-half..=half, r * c).prop_map(move |d| IntMatrix::from_vec(r, c, d).unwrap())
        })
    }

    fn epoch() -> impl Strategy<Value = Epoch> {
        (any::<u64>(), ".{0,12}").prop_map(|(counter, label)| Epoch { counter, label })
    }

    proptest! {
        #[test]
        fn matrix_records_round_trip(m in zq_matrix()) {
            let mut w = Writer::new();
            w.zq_matrix(&m).unwrap();
            let bytes = w.into_bytes();
            let width = (m.modulus().bit_length() as usize).div_ceil(8);
            prop_assert_eq!(bytes.len(), 23 + m.rows() * m.cols() * width);
            let mut r = Reader::new(&bytes);
            prop_assert_eq!(r.zq_matrix().unwrap(), m);
            r.finish().unwrap();
        }

        #[test]
        fn short_records_round_trip((q, z) in modulus().prop_flat_map(|q| (Just(q), short(q)))) {
            let mut w = Writer::new();
            w.int_matrix(MatrixKind::Short, &z, q).unwrap();
            let bytes = w.into_bytes();
            let mut r = Reader::new(&bytes);
            prop_assert_eq!(r.int_matrix(MatrixKind::Short).unwrap(), z);
        }

        #[test]
        fn update_keys_round_trip(
            (q, zs) in modulus().prop_flat_map(|q| (Just(q), prop::collection::vec(short(q), 0..4))),
            e in epoch(),
            nodes in prop::collection::vec(1u64..1000, 4),
        ) {
            let uk = UpdateKey {
                modulus: q,
                epoch: e,
                entries: nodes.into_iter().zip(zs).collect(),
            };
            let bytes = uk.to_bytes().unwrap();
            prop_assert_eq!(UpdateKey::from_bytes(&bytes).unwrap(), uk);
        }

        #[test]
        fn truncation_is_detected(m in zq_matrix(), cut in 1usize..8) {
            let ct = PeCiphertext {
                c: ZqVector::from_vec(m.as_slice().to_vec(), m.modulus()).unwrap(),
                c0: ZqVector::zeros(2, m.modulus()),
                c_i: vec![],
            };
            let bytes = ct.to_bytes().unwrap();
            prop_assert_eq!(PeCiphertext::from_bytes(&bytes).unwrap(), ct);
            prop_assert!(PeCiphertext::from_bytes(&bytes[..bytes.len() - cut]).is_err());
        }
    }

    #[test]
    fn record_layout_is_fixed() {
        let q = Modulus::new(65537).unwrap();
        let m = ZqMatrix::from_vec(1, 2, vec![1, 65536], q).unwrap();
        let mut w = Writer::new();
        w.zq_matrix(&m).unwrap();
        let mut want = b"SRPE".to_vec();
        want.extend_from_slice(&[1, 0, 0x21]);
        want.extend_from_slice(&65537u64.to_le_bytes());
        want.extend_from_slice(&[1, 0, 0, 0, 2, 0, 0, 0]);
        want.extend_from_slice(&[1, 0, 0, 0, 0, 1]);
        assert_eq!(w.into_bytes(), want);
    }

    #[test]
    fn secret_flag_and_tags_are_checked() {
        let q = Modulus::new(257).unwrap();
        let sk = PeSecretKey {
            modulus: q,
            x: vec![1, 2],
            z: IntMatrix::from_vec(1, 1, vec![-3]).unwrap(),
        };
        let mut bytes = sk.to_bytes().unwrap();
        assert_eq!(
            peek_header(&bytes).unwrap(),
            Header {
                tag: ObjectTag::PeSecretKey,
                secret: true
            }
        );
        assert_eq!(PeSecretKey::from_bytes(&bytes).unwrap(), sk);
        assert!(PeCiphertext::from_bytes(&bytes).is_err());
        bytes[7] = 0;
        assert!(PeSecretKey::from_bytes(&bytes).is_err());
        bytes[7] = 0x80;
        assert!(peek_header(&bytes).is_err());
        bytes[0] = b'X';
        assert!(peek_header(&bytes).is_err());
    }

    #[test]
    fn oversized_short_entries_are_refused() {
        let q = Modulus::new(257).unwrap();
        let z = IntMatrix::from_vec(1, 1, vec![200]).unwrap();
        assert!(Writer::new().int_matrix(MatrixKind::Short, &z, q).is_err());
    }
}
