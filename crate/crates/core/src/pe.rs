//! Inner-product predicate encryption with gadget-based attribute encoding.
//!
//! A key for `x` decrypts a ciphertext for `y` iff `<x, y> = 0 mod q`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::hooks::{noise_vec, signed_combination, EncHooks, EncTrace};
use crate::params::SysParams;
use crate::trapdoor::{trap_gen, GTrapdoor};
use crate::zq::{round_decode, scaled_encoding, Gadget, IntMatrix, Modulus, ZqMatrix, ZqVector};

/// `sum_i M_i * G^{-1}(x_i * G)`.
pub fn combine_matrices(gadget: &Gadget, mats: &[ZqMatrix], x: &[u64]) -> Result<ZqMatrix> {
    check_len(mats.len(), x.len())?;
    let mut acc = ZqMatrix::zeros(gadget.n(), gadget.m(), gadget.modulus());
    for (mi, &xi) in mats.iter().zip(x) {
        if xi != 0 {
            acc = acc.add(&gadget.mul_inverse_of_scaled(mi, xi)?)?;
        }
    }
    Ok(acc)
}

/// `sum_i G^{-1}(x_i * G)^T * c_i`, the decryptor's view of `combine_matrices`.
pub fn combine_components(gadget: &Gadget, cs: &[ZqVector], x: &[u64]) -> Result<ZqVector> {
    check_len(cs.len(), x.len())?;
    let mut acc = ZqVector::zeros(gadget.m(), gadget.modulus());
    for (ci, &xi) in cs.iter().zip(x) {
        if xi != 0 {
            acc = acc.add(&gadget.inverse_of_scaled_transpose_mul(xi, ci)?)?;
        }
    }
    Ok(acc)
}

/// `sum_i R_i * G^{-1}(x_i * G)` over the integers.
pub fn combine_short(gadget: &Gadget, rs: &[IntMatrix], x: &[u64]) -> Result<IntMatrix> {
    check_len(rs.len(), x.len())?;
    let mut acc = IntMatrix::zeros(gadget.m(), gadget.m());
    for (ri, &xi) in rs.iter().zip(x) {
        if xi != 0 {
            acc = acc.add(&gadget.int_mul_inverse_of_scaled(ri, xi)?)?;
        }
    }
    Ok(acc)
}

fn check_len(got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::Dimension(format!("{got} components for a vector of length {want}")));
    }
    Ok(())
}

/// Validates a predicate or attribute vector: length `ell`, entries in `Z_q`.
pub fn check_vector(params: &SysParams, v: &[u64], what: &str) -> Result<()> {
    if v.len() != params.ell() {
        return Err(Error::Dimension(format!(
            "{what} vector has length {}, expected {}",
            v.len(),
            params.ell()
        )));
    }
    if v.iter().any(|&x| x >= params.q()) {
        return Err(Error::InvalidParameter(format!("{what} vector has entries outside Z_q")));
    }
    Ok(())
}

/// `<x, y> mod q`.
pub fn inner_product(params: &SysParams, x: &[u64], y: &[u64]) -> u64 {
    let q = params.modulus();
    x.iter().zip(y).fold(0, |acc, (&a, &b)| q.add(acc, q.mul(a, b)))
}

/// Uniform `x` with `<x, y> = 0`; `None` when `y` is zero.
pub fn orthogonal_vector<R: Rng + ?Sized>(params: &SysParams, y: &[u64], rng: &mut R) -> Option<Vec<u64>> {
    let q = params.modulus();
    let j = y.iter().rposition(|&v| v != 0)?;
    let mut x: Vec<u64> = y.iter().map(|_| rng.gen_range(0..q.value())).collect();
    x[j] = 0;
    let rest = inner_product(params, &x, y);
    x[j] = q.mul(q.neg(rest), q.inv(y[j])?);
    Some(x)
}

/// `encode(M) * floor(q/2) + V^T s + e`, the component shared by both schemes.
pub(crate) fn message_component(
    params: &SysParams,
    v: &ZqMatrix,
    s: &ZqVector,
    e: &[i64],
    bit: bool,
) -> Result<ZqVector> {
    let q = params.modulus();
    v.transpose_mul_vec(s)?
        .add(&ZqVector::from_i64(e, q))?
        .add(&scaled_encoding(bit, params.kappa(), q))
}

/// `(M_i + y_i G)^T s + R_i^T e` for every `i`, drawing each `R_i` afresh.
pub(crate) fn attribute_components<R: Rng + ?Sized>(
    params: &SysParams,
    mats: &[ZqMatrix],
    y: &[u64],
    s: &ZqVector,
    e: &[i64],
    rng: &mut R,
    mut keep: Option<&mut Vec<IntMatrix>>,
) -> Result<Vec<ZqVector>> {
    let q = params.modulus();
    let gts = params.gadget().matrix().transpose_mul_vec(s)?;
    mats.iter()
        .zip(y)
        .map(|(mi, &yi)| {
            let noise = signed_combination(e, params.m(), rng, keep.as_deref_mut());
            mi.transpose_mul_vec(s)?
                .add(&gts.scale(yi))?
                .add(&ZqVector::from_i64(&noise, q))
        })
        .collect()
}

/// `A^T s + e`.
pub(crate) fn lwe_component(a: &ZqMatrix, s: &ZqVector, e: &[i64]) -> Result<ZqVector> {
    a.transpose_mul_vec(s)?.add(&ZqVector::from_i64(e, s.modulus()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PePublicParams {
    pub a: ZqMatrix,
    pub a_i: Vec<ZqMatrix>,
    pub v: ZqMatrix,
}

#[derive(Debug, Clone)]
pub struct PeMasterSecret {
    pub t_a: GTrapdoor,
}

/// Short key `Z` with `[A | A_x] * Z = V`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeSecretKey {
    pub modulus: Modulus,
    pub x: Vec<u64>,
    pub z: IntMatrix,
}

/// Basis of `Λ⊥_q([A | A_x])`, from which short keys can be sampled.
#[derive(Debug, Clone)]
pub struct PeBasisKey {
    pub x: Vec<u64>,
    pub t_x: GTrapdoor,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeCiphertext {
    pub c: ZqVector,
    pub c0: ZqVector,
    pub c_i: Vec<ZqVector>,
}

impl PeCiphertext {
    pub fn coordinate_count(&self) -> usize {
        self.c.len() + self.c0.len() + self.c_i.iter().map(ZqVector::len).sum::<usize>()
    }
}

pub fn pe_setup<R: Rng + ?Sized>(params: &SysParams, rng: &mut R) -> Result<(PePublicParams, PeMasterSecret)> {
    let (n, m, q) = (params.n(), params.m(), params.modulus());
    let t_a = trap_gen(n, m, q, rng)?;
    let a_i = (0..params.ell()).map(|_| ZqMatrix::random(n, m, q, rng)).collect();
    let v = ZqMatrix::random(n, params.kappa(), q, rng);
    let pp = PePublicParams {
        a: t_a.matrix().clone(),
        a_i,
        v,
    };
    Ok((pp, PeMasterSecret { t_a }))
}

pub fn pe_keygen<R: Rng + ?Sized>(
    params: &SysParams,
    pp: &PePublicParams,
    msk: &PeMasterSecret,
    x: &[u64],
    rng: &mut R,
) -> Result<PeSecretKey> {
    check_vector(params, x, "predicate")?;
    let a_x = combine_matrices(&params.gadget(), &pp.a_i, x)?;
    let z = msk.t_a.sample_left_matrix(&a_x, &pp.v, params.gauss(), rng)?;
    Ok(PeSecretKey {
        modulus: params.modulus(),
        x: x.to_vec(),
        z,
    })
}

pub fn pe_keygen_basis<R: Rng + ?Sized>(
    params: &SysParams,
    pp: &PePublicParams,
    msk: &PeMasterSecret,
    x: &[u64],
    rng: &mut R,
) -> Result<PeBasisKey> {
    check_vector(params, x, "predicate")?;
    let a_x = combine_matrices(&params.gadget(), &pp.a_i, x)?;
    let t_x = msk.t_a.sample_basis_left(&a_x, params.gauss(), rng)?;
    Ok(PeBasisKey { x: x.to_vec(), t_x })
}

impl PeBasisKey {
    /// Short key `Z` with `[A | A_x] * Z = V`, sampled from the basis.
    pub fn sample_key<R: Rng + ?Sized>(
        &self,
        params: &SysParams,
        pp: &PePublicParams,
        rng: &mut R,
    ) -> Result<PeSecretKey> {
        let z = self.t_x.sample_pre_matrix(&pp.v, params.gauss(), rng)?;
        Ok(PeSecretKey {
            modulus: params.modulus(),
            x: self.x.clone(),
            z,
        })
    }
}

pub fn pe_enc<R: Rng + ?Sized>(
    params: &SysParams,
    pp: &PePublicParams,
    y: &[u64],
    bit: bool,
    rng: &mut R,
) -> Result<PeCiphertext> {
    pe_enc_inner(params, pp, y, bit, rng, EncHooks::default(), None)
}

/// [`pe_enc`] under test controls, returning the randomness it used.
#[cfg(feature = "test-hooks")]
pub fn pe_enc_traced<R: Rng + ?Sized>(
    params: &SysParams,
    pp: &PePublicParams,
    y: &[u64],
    bit: bool,
    hooks: EncHooks,
    rng: &mut R,
) -> Result<(PeCiphertext, EncTrace)> {
    let mut trace = EncTrace::default();
    let ct = pe_enc_inner(params, pp, y, bit, rng, hooks, Some(&mut trace))?;
    Ok((ct, trace))
}

fn pe_enc_inner<R: Rng + ?Sized>(
    params: &SysParams,
    pp: &PePublicParams,
    y: &[u64],
    bit: bool,
    rng: &mut R,
    hooks: EncHooks,
    mut trace: Option<&mut EncTrace>,
) -> Result<PeCiphertext> {
    check_vector(params, y, "attribute")?;
    let q = params.modulus();
    let s = ZqVector::random(params.n(), q, rng);
    let e = noise_vec(params.noise(), params.kappa(), hooks.noise, rng);
    let e1 = noise_vec(params.noise(), params.m(), hooks.noise, rng);
    let c = message_component(params, &pp.v, &s, &e, bit)?;
    let c0 = lwe_component(&pp.a, &s, &e1)?;
    let keep = trace.as_deref_mut().map(|t| &mut t.r);
    let c_i = attribute_components(params, &pp.a_i, y, &s, &e1, rng, keep)?;
    if let Some(t) = trace {
        t.s = Some(s);
        t.e = e;
        t.e1 = e1;
    }
    Ok(PeCiphertext { c, c0, c_i })
}

/// `d = c - Z^T [c0 | c_x]`, before rounding.
pub fn pe_dec_vector(params: &SysParams, sk: &PeSecretKey, ct: &PeCiphertext) -> Result<ZqVector> {
    let c_x = combine_components(&params.gadget(), &ct.c_i, &sk.x)?;
    let stacked = ZqVector::stack(&[&ct.c0, &c_x])?;
    ct.c.sub(&sk.z.transpose_mul_zq(&stacked)?)
}

/// `Some(M)` on success, `None` (⊥) when `d` does not round to an encoding.
pub fn pe_dec(params: &SysParams, sk: &PeSecretKey, ct: &PeCiphertext) -> Result<Option<bool>> {
    Ok(round_decode(&pe_dec_vector(params, sk, ct)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ProfileSpec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn tiny() -> SysParams {
        SysParams::from_spec(ProfileSpec {
            name: "unit".into(),
            n: 2,
            users: 4,
            ell: 2,
            kappa: 8,
            q: 1_048_583,
            s: 30.0,
            noise_bound: 2,
            omega_const: 1e-4,
        })
        .unwrap()
    }

    #[test]
    fn combinations_agree_with_dense_forms() {
        let params = tiny();
        let g = params.gadget();
        let q = params.modulus();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let mats: Vec<ZqMatrix> = (0..2).map(|_| ZqMatrix::random(2, params.m(), q, &mut rng)).collect();
        let cs: Vec<ZqVector> = (0..2).map(|_| ZqVector::random(params.m(), q, &mut rng)).collect();
        let x = [7u64, 1_000_000];
        let dense: Vec<IntMatrix> = x.iter().map(|&xi| g.inverse_of_scaled(xi)).collect();
        let want_m = mats[0].mul_int(&dense[0]).unwrap().add(&mats[1].mul_int(&dense[1]).unwrap()).unwrap();
        assert_eq!(combine_matrices(&g, &mats, &x).unwrap(), want_m);
        let want_c = dense[0]
            .transpose_mul_zq(&cs[0])
            .unwrap()
            .add(&dense[1].transpose_mul_zq(&cs[1]).unwrap())
            .unwrap();
        assert_eq!(combine_components(&g, &cs, &x).unwrap(), want_c);
        assert!(combine_matrices(&g, &mats, &[0, 0]).unwrap().is_zero());
    }

    #[test]
    fn vectors_are_validated() {
        let params = tiny();
        assert!(check_vector(&params, &[1, 2], "x").is_ok());
        assert!(check_vector(&params, &[1], "x").is_err());
        assert!(check_vector(&params, &[1, params.q()], "x").is_err());
        assert_eq!(inner_product(&params, &[2, 3], &[params.q() - 3, 2]), 0);
    }

    #[test]
    fn round_trip_at_unit_scale() {
        let params = tiny();
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let (pp, msk) = pe_setup(&params, &mut rng).unwrap();
        let x = [1u64, 5];
        let y = [params.q() - 5, 1];
        let sk = pe_keygen(&params, &pp, &msk, &x, &mut rng).unwrap();
        for bit in [false, true] {
            let ct = pe_enc(&params, &pp, &y, bit, &mut rng).unwrap();
            assert_eq!(pe_dec(&params, &sk, &ct).unwrap(), Some(bit));
        }
    }
}
