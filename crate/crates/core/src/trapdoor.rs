//! Gadget trapdoors with an explicit short basis, and the preimage samplers
//! built on them.
//!
//! `A = [Ā | G - Ā·R]` where `Ā` is uniform and `R` is short. The basis of
//! `Λ⊥_q(A)` is materialized once so that every sampler is a Klein sampler
//! over a coset of the same lattice.

use rand::Rng;

use crate::error::{Error, Result};
use crate::gauss::{sample_z, sample_z_vec, GaussParam, LatticeSampler};
use crate::zq::{concat_cols, Gadget, IntMatrix, Modulus, ZqMatrix, ZqVector};

/// Gaussian parameter of the entries of `R`; the entry variance is 1/2.
pub const R_PARAM: f64 = 1.772_453_850_905_516;

/// Finds a coset representative: an integer `t` with `A·t ≡ u`.
#[derive(Debug, Clone)]
struct CosetSolver {
    transform: ZqMatrix,
    pivots: Vec<usize>,
    cols: usize,
}

impl CosetSolver {
    fn new(a: &ZqMatrix) -> Result<Self> {
        let red = a.row_reduce()?;
        Ok(Self {
            transform: red.transform,
            pivots: red.pivots,
            cols: a.cols(),
        })
    }

    fn solve(&self, u: &ZqVector) -> Result<Vec<i64>> {
        let y = self.transform.mul_vec(u)?;
        if y.as_slice()[self.pivots.len()..].iter().any(|&x| x != 0) {
            return Err(Error::NoPreimage);
        }
        let q = u.modulus();
        let mut t = vec![0i64; self.cols];
        for (row, &p) in self.pivots.iter().enumerate() {
            t[p] = q.centered(y.get(row));
        }
        Ok(t)
    }
}

/// A matrix together with a short basis of its kernel lattice.
#[derive(Debug, Clone)]
pub struct GTrapdoor {
    a: ZqMatrix,
    /// `R` for matrices from [`trap_gen`]; `None` for delegated bases.
    r: Option<IntMatrix>,
    sampler: LatticeSampler,
    solver: CosetSolver,
}

/// Basis of `Λ⊥_q([Ā | Ā·R + G])` from the kernel basis of `G`:
/// `[[-R·T_G, I - R·W], [T_G, W]]` with `W = G^{-1}(-Ā)`. The `T_G` columns
/// come first so that the Gram-Schmidt norms stay close to those of `T_G`.
fn gadget_trapdoor_basis(a_bar: &ZqMatrix, r: &IntMatrix, gadget: &Gadget) -> Result<IntMatrix> {
    let (mb, w) = (a_bar.cols(), gadget.m());
    if r.rows() != mb || r.cols() != w || gadget.n() != a_bar.rows() {
        return Err(Error::Dimension(format!(
            "trapdoor R must be {mb}x{w}, got {}x{}",
            r.rows(),
            r.cols()
        )));
    }
    let t_g = gadget.basis();
    let wmat = gadget.inverse(&a_bar.neg())?;
    let top_left = r.mul(&t_g)?.neg();
    let mut top_right = r.mul(&wmat)?.neg();
    for i in 0..mb {
        top_right.set(i, i, top_right.get(i, i) + 1);
    }
    let top = top_left.hstack(&top_right)?;
    let bottom = t_g.hstack(&wmat)?;
    top.vstack(&bottom)
}

impl GTrapdoor {
    fn from_basis(a: ZqMatrix, r: Option<IntMatrix>, basis: IntMatrix) -> Result<Self> {
        debug_assert!(a.mul_int(&basis)?.is_zero(), "basis must lie in the kernel lattice");
        let solver = CosetSolver::new(&a)?;
        if solver.pivots.len() != a.rows() {
            return Err(Error::InvalidParameter("matrix does not have full row rank".into()));
        }
        Ok(Self {
            sampler: LatticeSampler::new(basis)?,
            solver,
            a,
            r,
        })
    }

    /// Rebuilds the trapdoor of a matrix produced by [`trap_gen`] from `A` and `R`.
    pub fn from_parts(a: ZqMatrix, r: IntMatrix) -> Result<Self> {
        let (n, m) = (a.rows(), a.cols());
        let gadget = Gadget::tight(n, a.modulus())?;
        let w = gadget.m();
        if m < w || r.cols() != w || r.rows() != m - w {
            return Err(Error::Dimension(format!(
                "trapdoor of shape {}x{} does not fit a {n}x{m} matrix",
                r.rows(),
                r.cols()
            )));
        }
        let a_bar = a.column_range(0, m - w);
        let expected = gadget.matrix().sub(&a_bar.mul_int(&r)?)?;
        if a.column_range(m - w, m) != expected {
            return Err(Error::InvalidParameter("trapdoor does not match the matrix".into()));
        }
        let basis = gadget_trapdoor_basis(&a_bar, &r.neg(), &gadget)?;
        Self::from_basis(a, Some(r), basis)
    }

    pub fn matrix(&self) -> &ZqMatrix {
        &self.a
    }

    pub fn r(&self) -> Option<&IntMatrix> {
        self.r.as_ref()
    }

    pub fn basis(&self) -> &IntMatrix {
        self.sampler.basis()
    }

    pub fn modulus(&self) -> Modulus {
        self.a.modulus()
    }

    /// `‖T̃‖`, the largest Gram-Schmidt norm of the basis.
    pub fn gs_norm(&self) -> f64 {
        self.sampler.gram_schmidt().max_norm()
    }

    /// `s` below which the sampler quality guarantee no longer holds.
    pub fn quality_threshold(&self) -> f64 {
        self.sampler.quality_threshold()
    }

    /// `e ← D_{Λ^u_q(A), s}`.
    pub fn sample_pre<R: Rng + ?Sized>(&self, u: &ZqVector, param: GaussParam, rng: &mut R) -> Result<Vec<i64>> {
        if u.len() != self.a.rows() {
            return Err(Error::Dimension(format!(
                "target of length {} for a matrix with {} rows",
                u.len(),
                self.a.rows()
            )));
        }
        self.sampler.check_quality(param);
        let t = self.solver.solve(u)?;
        let e = self.sampler.sample_coset(param, &t, rng)?;
        debug_assert_eq!(&self.a.mul_vec(&ZqVector::from_i64(&e, u.modulus()))?, u);
        Ok(e)
    }

    /// Column-wise [`GTrapdoor::sample_pre`] for a target matrix.
    pub fn sample_pre_matrix<R: Rng + ?Sized>(
        &self,
        u: &ZqMatrix,
        param: GaussParam,
        rng: &mut R,
    ) -> Result<IntMatrix> {
        let columns = self.sample_pre_columns((0..u.cols()).map(|j| u.column(j)).collect(), param, rng)?;
        IntMatrix::from_columns(&columns)
    }

    fn sample_pre_columns<R: Rng + ?Sized>(
        &self,
        targets: Vec<ZqVector>,
        param: GaussParam,
        rng: &mut R,
    ) -> Result<Vec<Vec<i64>>> {
        self.sampler.check_quality(param);
        let reps = targets
            .iter()
            .map(|u| self.solver.solve(u))
            .collect::<Result<Vec<_>>>()?;
        let out = self.sampler.sample_cosets(param, &reps, rng)?;
        for (e, u) in out.iter().zip(&targets) {
            debug_assert_eq!(&self.a.mul_vec(&ZqVector::from_i64(e, u.modulus()))?, u);
        }
        Ok(out)
    }

    /// `z ← D_{Λ^u_q([A | M]), s}` by drawing the `M` half freely and solving
    /// for the `A` half.
    pub fn sample_left<R: Rng + ?Sized>(
        &self,
        m: &ZqMatrix,
        u: &ZqVector,
        param: GaussParam,
        rng: &mut R,
    ) -> Result<Vec<i64>> {
        let u = ZqMatrix::from_columns(std::slice::from_ref(u))?;
        Ok(self.sample_left_matrix(m, &u, param, rng)?.column(0))
    }

    /// Column-wise [`GTrapdoor::sample_left`] for a target matrix.
    pub fn sample_left_matrix<R: Rng + ?Sized>(
        &self,
        m: &ZqMatrix,
        u: &ZqMatrix,
        param: GaussParam,
        rng: &mut R,
    ) -> Result<IntMatrix> {
        if m.rows() != self.a.rows() || u.rows() != self.a.rows() {
            return Err(Error::Dimension("row mismatch in sample_left".into()));
        }
        let q = self.modulus();
        let free: Vec<Vec<i64>> = (0..u.cols()).map(|_| sample_z_vec(param, m.cols(), rng)).collect();
        let targets = free
            .iter()
            .enumerate()
            .map(|(j, z2)| u.column(j).sub(&m.mul_vec(&ZqVector::from_i64(z2, q))?))
            .collect::<Result<Vec<_>>>()?;
        let solved = self.sample_pre_columns(targets, param, rng)?;
        let columns: Vec<Vec<i64>> = solved
            .into_iter()
            .zip(free)
            .map(|(mut z1, z2)| {
                z1.extend(z2);
                z1
            })
            .collect();
        IntMatrix::from_columns(&columns)
    }

    /// Trapdoor for `[A | M]` with basis `[[T_A, W], [0, I]]`, `A·W ≡ -M`.
    /// Its Gram-Schmidt norm equals that of `T_A`.
    pub fn sample_basis_left<R: Rng + ?Sized>(&self, m: &ZqMatrix, param: GaussParam, rng: &mut R) -> Result<Self> {
        if m.rows() != self.a.rows() {
            return Err(Error::Dimension("row mismatch in sample_basis_left".into()));
        }
        let w = self.sample_pre_matrix(&m.neg(), param, rng)?;
        let k = m.cols();
        let top = self.basis().hstack(&w)?;
        let bottom = IntMatrix::zeros(k, self.a.cols()).hstack(&IntMatrix::identity(k))?;
        let f = concat_cols(&[&self.a, m])?;
        Self::from_basis(f, None, top.vstack(&bottom)?)
    }
}

/// `A` statistically close to uniform in `Z_q^{n x m}` with a short basis of
/// `Λ⊥_q(A)`. Needs a prime `q` and `m >= 2n⌈log q⌉`.
pub fn trap_gen<R: Rng + ?Sized>(n: usize, m: usize, modulus: Modulus, rng: &mut R) -> Result<GTrapdoor> {
    let gadget = Gadget::tight(n, modulus)?;
    let w = gadget.m();
    if m < 2 * w {
        return Err(Error::InvalidParameter(format!(
            "trap_gen needs m >= 2n*ceil(log q) = {}, got {m}",
            2 * w
        )));
    }
    if !modulus.is_prime() {
        return Err(Error::InvalidModulus(modulus.value(), "trap_gen needs a prime modulus"));
    }
    let mb = m - w;
    let a_bar = ZqMatrix::random(n, mb, modulus, rng);
    let rp = GaussParam::new(R_PARAM)?;
    let r = IntMatrix::from_vec(mb, w, (0..mb * w).map(|_| sample_z(rp, 0.0, rng)).collect())?;
    let right = gadget.matrix().sub(&a_bar.mul_int(&r)?)?;
    let a = concat_cols(&[&a_bar, &right])?;
    let basis = gadget_trapdoor_basis(&a_bar, &r.neg(), &gadget)?;
    GTrapdoor::from_basis(a, Some(r), basis)
}

/// `z ← D_{Λ^u_q([A | A·R + G]), s}` using only the short `R` and the gadget
/// (padded to the width of `R`).
pub fn sample_right<Rn: Rng + ?Sized>(
    a: &ZqMatrix,
    r: &IntMatrix,
    gadget: &Gadget,
    u: &ZqVector,
    param: GaussParam,
    rng: &mut Rn,
) -> Result<Vec<i64>> {
    let basis = gadget_trapdoor_basis(a, r, gadget)?;
    let right = a.mul_int(r)?.add(&gadget.matrix())?;
    let f = concat_cols(&[a, &right])?;
    GTrapdoor::from_basis(f, None, basis)?.sample_pre(u, param, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauss::GramSchmidt;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn small() -> (GTrapdoor, ChaCha20Rng) {
        let mut rng = ChaCha20Rng::seed_from_u64(100);
        let q = Modulus::new(12289).unwrap();
        let n = 3;
        let m = 2 * n * q.bit_length() as usize + 4;
        (trap_gen(n, m, q, &mut rng).unwrap(), rng)
    }

    #[test]
    fn basis_is_in_kernel_and_full_rank() {
        let (td, _) = small();
        assert!(td.matrix().mul_int(td.basis()).unwrap().is_zero());
        assert!(GramSchmidt::new(td.basis()).is_ok());
        assert_eq!(td.basis().rows(), td.matrix().cols());
    }

    #[test]
    fn rejects_narrow_dimensions_and_composite_modulus() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let q = Modulus::new(12289).unwrap();
        assert!(trap_gen(2, 55, q, &mut rng).is_err());
        assert!(trap_gen(2, 56, q, &mut rng).is_ok());
        assert!(trap_gen(2, 64, Modulus::new(1 << 14).unwrap(), &mut rng).is_err());
    }

    #[test]
    fn parts_round_trip() {
        let (td, _) = small();
        let again = GTrapdoor::from_parts(td.matrix().clone(), td.r().unwrap().clone()).unwrap();
        assert_eq!(again.basis(), td.basis());
        let mut wrong = td.r().unwrap().clone();
        wrong.set(0, 0, wrong.get(0, 0) + 1);
        assert!(GTrapdoor::from_parts(td.matrix().clone(), wrong).is_err());
    }

    #[test]
    fn zero_target_gives_kernel_vector() {
        let (td, mut rng) = small();
        let p = GaussParam::new(td.quality_threshold()).unwrap();
        let q = td.modulus();
        let e = td.sample_pre(&ZqVector::zeros(3, q), p, &mut rng).unwrap();
        assert!(td.matrix().mul_vec(&ZqVector::from_i64(&e, q)).unwrap().is_zero());
    }

    #[test]
    fn matrix_targets_are_column_wise() {
        let (td, mut rng) = small();
        let q = td.modulus();
        let p = GaussParam::new(td.quality_threshold()).unwrap();
        let u = ZqMatrix::random(3, 5, q, &mut rng);
        let e = td.sample_pre_matrix(&u, p, &mut rng).unwrap();
        assert_eq!(td.matrix().mul_int(&e).unwrap(), u);
    }

    #[test]
    fn left_and_basis_left() {
        let (td, mut rng) = small();
        let q = td.modulus();
        let p = GaussParam::new(td.quality_threshold()).unwrap();
        let m = ZqMatrix::random(3, 7, q, &mut rng);
        let u = ZqVector::random(3, q, &mut rng);
        let z = td.sample_left(&m, &u, p, &mut rng).unwrap();
        let f = concat_cols(&[td.matrix(), &m]).unwrap();
        assert_eq!(f.mul_vec(&ZqVector::from_i64(&z, q)).unwrap(), u);

        let delegated = td.sample_basis_left(&m, p, &mut rng).unwrap();
        assert_eq!(delegated.matrix(), &f);
        assert!(f.mul_int(delegated.basis()).unwrap().is_zero());
        assert!(delegated.gs_norm() <= td.gs_norm() + 1e-6);
        let e = delegated.sample_pre(&u, p, &mut rng).unwrap();
        assert_eq!(f.mul_vec(&ZqVector::from_i64(&e, q)).unwrap(), u);
    }

    #[test]
    fn right_with_zero_r() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let q = Modulus::new(97).unwrap();
        let a = ZqMatrix::random(2, 16, q, &mut rng);
        let g = Gadget::new(2, 16, q).unwrap();
        let u = ZqVector::random(2, q, &mut rng);
        let z = sample_right(&a, &IntMatrix::zeros(16, 16), &g, &u, GaussParam::new(8.0).unwrap(), &mut rng).unwrap();
        let f = concat_cols(&[&a, &g.matrix()]).unwrap();
        assert_eq!(f.mul_vec(&ZqVector::from_i64(&z, q)).unwrap(), u);
    }

    #[test]
    fn unreachable_target_is_reported() {
        let q = Modulus::new(13).unwrap();
        let a = ZqMatrix::from_rows(&[vec![1, 2], vec![2, 4]], q).unwrap();
        let solver = CosetSolver::new(&a).unwrap();
        let u = ZqVector::from_vec(vec![1, 0], q).unwrap();
        assert_eq!(solver.solve(&u), Err(Error::NoPreimage));
        let ok = ZqVector::from_vec(vec![3, 6], q).unwrap();
        let t = solver.solve(&ok).unwrap();
        assert_eq!(a.mul_vec(&ZqVector::from_i64(&t, q)).unwrap(), ok);
    }
}
