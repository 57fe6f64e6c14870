//! Discrete Gaussian sampling: over `Z` by rejection, over arbitrary lattices
//! (and their cosets) with Klein's randomized nearest-plane algorithm, and the
//! `B`-bounded noise distribution.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::zq::IntMatrix;

pub const DEFAULT_TAIL_CUT: f64 = 6.0;

/// Width from which [`sample_z`] switches to the geometric proposal.
const LAPLACE_MIN_S: f64 = 4.0;

/// Statistical distance target used to turn `omega(sqrt(log m))` into a number.
pub const SMOOTHING_EPSILON: f64 = 1.0 / (1u64 << 40) as f64;

/// Deterministic generator used by every sampler in the crate.
pub type SrpeRng = ChaCha20Rng;

pub fn seeded_rng(seed: [u8; 32]) -> SrpeRng {
    ChaCha20Rng::from_seed(seed)
}

pub fn entropy_rng() -> SrpeRng {
    ChaCha20Rng::from_entropy()
}

/// Gaussian parameter `s` (the density is `exp(-pi |x - c|^2 / s^2)`) and the
/// tail cut, in multiples of `s`, beyond which no sample is produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussParam {
    s: f64,
    tail_cut: f64,
}

impl GaussParam {
    pub fn new(s: f64) -> Result<Self> {
        Self::with_tail_cut(s, DEFAULT_TAIL_CUT)
    }

    pub fn with_tail_cut(s: f64, tail_cut: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::InvalidParameter(format!("Gaussian parameter {s} must be positive")));
        }
        if !(tail_cut >= 6.0 && tail_cut.is_finite()) {
            return Err(Error::InvalidParameter(format!("tail cut {tail_cut} must be at least 6")));
        }
        Ok(Self { s, tail_cut })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn tail_cut(&self) -> f64 {
        self.tail_cut
    }

    fn scaled(&self, factor: f64) -> Self {
        Self {
            s: self.s * factor,
            tail_cut: self.tail_cut,
        }
    }
}

/// `D_{Z,s,c}` restricted to integers within `tail_cut * s` of the center.
///
/// Narrow distributions use rejection from the uniform distribution on the
/// window, normalized by the weight of the integer nearest to `c` so that tiny
/// `s` degrades gracefully to rounding. Wider ones use a two-sided geometric
/// proposal around that integer, which accepts far more often.
pub fn sample_z<R: Rng + ?Sized>(param: GaussParam, center: f64, rng: &mut R) -> i64 {
    let s = param.s;
    let reach = param.tail_cut * s;
    let lo = (center - reach).ceil() as i64;
    let hi = (center + reach).floor() as i64;
    let nearest = center.round();
    if lo >= hi {
        return nearest as i64;
    }
    let k = -std::f64::consts::PI / (s * s);
    if s < LAPLACE_MIN_S {
        let d0 = (nearest - center) * (nearest - center);
        loop {
            let x = rng.gen_range(lo..=hi);
            let d = x as f64 - center;
            if rng.gen::<f64>() < (k * (d * d - d0)).exp() {
                return x;
            }
        }
    }
    // Proposal q(x) ~ exp(-|x - x0| / b) with b = s / sqrt(2 pi). For real
    // d = x - c, |x - x0| <= |d| + 1/2, so rho(x) * exp(|x - x0| / b) is at
    // most exp(s^2 / (4 pi b^2) + 1 / (2b)) = exp(1/2 + 1/(2b)).
    let x0 = nearest as i64;
    let b = s / (2.0 * std::f64::consts::PI).sqrt();
    let log_bound = 0.5 + 0.5 / b;
    loop {
        let mag = (-b * rng.gen::<f64>().ln()).floor() as i64;
        let negative = rng.gen::<bool>();
        if mag == 0 && negative {
            continue;
        }
        let x = if negative { x0 - mag } else { x0 + mag };
        if x < lo || x > hi {
            continue;
        }
        let d = x as f64 - center;
        let log_ratio = k * d * d + mag as f64 / b - log_bound;
        if rng.gen::<f64>() < log_ratio.exp() {
            return x;
        }
    }
}

/// Noise distribution `chi`: `D_{Z,sigma}` conditioned on `|x| <= bound`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParam {
    bound: u64,
    sigma: f64,
}

impl NoiseParam {
    pub fn new(bound: u64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("noise sigma {sigma} must be positive")));
        }
        Ok(Self { bound, sigma })
    }

    /// `sigma = bound / 6`.
    pub fn from_bound(bound: u64) -> Result<Self> {
        Self::new(bound, (bound as f64 / 6.0).max(f64::MIN_POSITIVE))
    }

    pub fn bound(&self) -> u64 {
        self.bound
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

pub fn sample_chi<R: Rng + ?Sized>(p: NoiseParam, rng: &mut R) -> i64 {
    if p.bound == 0 {
        return 0;
    }
    let g = GaussParam::new(p.sigma).expect("validated sigma");
    loop {
        let x = sample_z(g, 0.0, rng);
        if x.unsigned_abs() <= p.bound {
            return x;
        }
    }
}

pub fn sample_chi_vec<R: Rng + ?Sized>(p: NoiseParam, len: usize, rng: &mut R) -> Vec<i64> {
    (0..len).map(|_| sample_chi(p, rng)).collect()
}

/// Vector from `D_{Z^len, s}`.
pub fn sample_z_vec<R: Rng + ?Sized>(param: GaussParam, len: usize, rng: &mut R) -> Vec<i64> {
    (0..len).map(|_| sample_z(param, 0.0, rng)).collect()
}

/// Concrete stand-in for `omega(sqrt(log dim))`: the smoothing parameter of
/// `Z^dim` at statistical distance [`SMOOTHING_EPSILON`].
pub fn smoothing_factor(dim: usize) -> f64 {
    let eps = SMOOTHING_EPSILON;
    ((2.0 * dim.max(1) as f64 * (1.0 + 1.0 / eps)).ln() / std::f64::consts::PI).sqrt()
}

/// Gram-Schmidt orthogonalization of the columns of an integer basis, in
/// column order.
#[derive(Debug, Clone)]
pub struct GramSchmidt {
    dim: usize,
    /// Orthogonalized vectors, one contiguous run of `dim` entries each.
    vectors: Vec<f64>,
    sq_norms: Vec<f64>,
}

impl GramSchmidt {
    pub fn new(basis: &IntMatrix) -> Result<Self> {
        let dim = basis.rows();
        if basis.cols() != dim {
            return Err(Error::Dimension(format!(
                "basis must be square, got {}x{}",
                basis.rows(),
                basis.cols()
            )));
        }
        let mut vectors = vec![0f64; dim * dim];
        for j in 0..dim {
            for i in 0..dim {
                vectors[j * dim + i] = basis.get(i, j) as f64;
            }
        }
        let mut sq_norms = vec![0f64; dim];
        // Modified Gram-Schmidt, projecting each finished vector out of all
        // later ones.
        for j in 0..dim {
            let (done, rest) = vectors.split_at_mut((j + 1) * dim);
            let bj = &done[j * dim..];
            let nj: f64 = bj.iter().map(|x| x * x).sum();
            let scale = basis.column(j).iter().map(|&x| (x as f64).abs()).fold(0.0, f64::max);
            if nj <= 1e-18 * scale.max(1.0).powi(2) {
                return Err(Error::SingularBasis);
            }
            sq_norms[j] = nj;
            for later in rest.chunks_exact_mut(dim) {
                let mu = dot(later, bj) / nj;
                if mu != 0.0 {
                    for (l, &b) in later.iter_mut().zip(bj) {
                        *l -= mu * b;
                    }
                }
            }
        }
        Ok(Self {
            dim,
            vectors,
            sq_norms,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn norms(&self) -> Vec<f64> {
        self.sq_norms.iter().map(|x| x.sqrt()).collect()
    }

    /// `max_i ||b~_i||`.
    pub fn max_norm(&self) -> f64 {
        self.sq_norms.iter().copied().fold(0.0, f64::max).sqrt()
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0f64; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for i in 0..4 {
            acc[i] += x[i] * y[i];
        }
    }
    acc.iter().sum::<f64>() + tail
}

/// Integers of magnitude below this are exact in `f64`, including the
/// products and sums formed while walking down the basis.
const EXACT_F64: f64 = (1u64 << 52) as f64;

/// Targets walked together by [`LatticeSampler::sample_cosets`].
const BATCH: usize = 16;

/// Klein sampler bound to one basis. Lattice points are assembled as integer
/// combinations of basis columns, so membership is exact regardless of
/// floating-point error in the Gram-Schmidt data.
#[derive(Debug, Clone)]
pub struct LatticeSampler {
    basis: IntMatrix,
    /// Basis columns as contiguous `f64` runs.
    columns: Vec<f64>,
    column_max: Vec<f64>,
    gs: GramSchmidt,
}

impl LatticeSampler {
    pub fn new(basis: IntMatrix) -> Result<Self> {
        let gs = GramSchmidt::new(&basis)?;
        let dim = gs.dim;
        let mut columns = vec![0f64; dim * dim];
        for i in 0..dim {
            for (j, &v) in basis.row(i).iter().enumerate() {
                columns[j * dim + i] = v as f64;
            }
        }
        let column_max = columns
            .chunks_exact(dim.max(1))
            .map(|c| c.iter().fold(0f64, |m, x| m.max(x.abs())))
            .collect();
        Ok(Self {
            basis,
            columns,
            column_max,
            gs,
        })
    }

    pub fn basis(&self) -> &IntMatrix {
        &self.basis
    }

    pub fn gram_schmidt(&self) -> &GramSchmidt {
        &self.gs
    }

    pub fn dim(&self) -> usize {
        self.gs.dim
    }

    /// Smallest `s` the sampler is meant to be used with.
    pub fn quality_threshold(&self) -> f64 {
        self.gs.max_norm() * smoothing_factor(self.dim())
    }

    pub fn check_quality(&self, param: GaussParam) {
        let need = self.quality_threshold();
        if param.s() < need {
            log::warn!(
                "Gaussian parameter {:.2} is below ||GS(B)||*omega = {:.2}; samples may be far from D_(L,s)",
                param.s(),
                need
            );
        }
    }

    fn column(&self, i: usize) -> &[f64] {
        let dim = self.dim();
        &self.columns[i * dim..(i + 1) * dim]
    }

    /// Lattice point distributed close to `D_{L,s,center}`.
    pub fn sample<R: Rng + ?Sized>(&self, param: GaussParam, center: &[f64], rng: &mut R) -> Result<Vec<i64>> {
        let dim = self.dim();
        if center.len() != dim {
            return Err(Error::Dimension(format!(
                "center of length {} for a {dim}-dimensional lattice",
                center.len()
            )));
        }
        let mut residual = center.to_vec();
        let mut coeffs = vec![0i64; dim];
        for i in (0..dim).rev() {
            let nj = self.gs.sq_norms[i];
            let c = dot(&residual, self.gs.vector(i)) / nj;
            let z = sample_z(param.scaled(1.0 / nj.sqrt()), c, rng);
            if z != 0 {
                axpy(&mut residual, -(z as f64), self.column(i));
                coeffs[i] = z;
            }
        }
        Ok(self.combine(&coeffs))
    }

    /// `B * coeffs` in exact integer arithmetic.
    fn combine(&self, coeffs: &[i64]) -> Vec<i64> {
        (0..self.dim())
            .map(|r| {
                self.basis
                    .row(r)
                    .iter()
                    .zip(coeffs)
                    .map(|(&b, &z)| (b as i128) * (z as i128))
                    .sum::<i128>()
                    .try_into()
                    .expect("lattice point exceeds 64 bits")
            })
            .collect()
    }

    /// Vector of the coset `t + L` distributed close to `D_{t+L,s}`.
    pub fn sample_coset<R: Rng + ?Sized>(&self, param: GaussParam, t: &[i64], rng: &mut R) -> Result<Vec<i64>> {
        self.check_target(t)?;
        let mut out = self.coset_lanes::<1, R>(param, &[t], rng);
        Ok(out.pop().expect("one lane"))
    }

    /// Independent samples for several cosets. Walking the basis once for a
    /// group of targets is considerably faster than one walk per target; the
    /// output is identical in distribution to repeated [`Self::sample_coset`].
    pub fn sample_cosets<R: Rng + ?Sized>(
        &self,
        param: GaussParam,
        targets: &[Vec<i64>],
        rng: &mut R,
    ) -> Result<Vec<Vec<i64>>> {
        let mut out = Vec::with_capacity(targets.len());
        for group in targets.chunks(BATCH) {
            let refs: Vec<&[i64]> = group.iter().map(|t| t.as_slice()).collect();
            for t in &refs {
                self.check_target(t)?;
            }
            out.extend(self.coset_lanes::<BATCH, R>(param, &refs, rng));
        }
        Ok(out)
    }

    fn check_target(&self, t: &[i64]) -> Result<()> {
        if t.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "coset representative of length {} for a {}-dimensional lattice",
                t.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// Klein's walk for up to `L` targets at once, one lane per target.
    ///
    /// Each residual is the negated output so far. It holds integers only and
    /// stays in f64 while a running magnitude bound proves the arithmetic
    /// exact; past that bound the output is rebuilt from the coefficients.
    fn coset_lanes<const L: usize, R: Rng + ?Sized>(
        &self,
        param: GaussParam,
        targets: &[&[i64]],
        rng: &mut R,
    ) -> Vec<Vec<i64>> {
        let dim = self.dim();
        let lanes = targets.len();
        debug_assert!(lanes <= L);
        let mut residual = vec![[0f64; L]; dim];
        let mut bound = [0f64; L];
        for (j, t) in targets.iter().enumerate() {
            for (r, &x) in t.iter().enumerate() {
                residual[r][j] = -(x as f64);
            }
            bound[j] = t.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0) as f64;
        }
        let mut coeffs = vec![[0i64; L]; dim];
        for i in (0..dim).rev() {
            let nj = self.gs.sq_norms[i];
            let scaled = param.scaled(1.0 / nj.sqrt());
            let mut c = [0f64; L];
            for (row, &g) in residual.iter().zip(self.gs.vector(i)) {
                for j in 0..L {
                    c[j] += row[j] * g;
                }
            }
            let mut z = [0f64; L];
            for j in 0..lanes {
                let zi = sample_z(scaled, c[j] / nj, rng);
                coeffs[i][j] = zi;
                bound[j] += zi.unsigned_abs() as f64 * self.column_max[i];
                z[j] = zi as f64;
            }
            if z.iter().any(|&x| x != 0.0) {
                for (row, &b) in residual.iter_mut().zip(self.column(i)) {
                    for j in 0..L {
                        row[j] -= z[j] * b;
                    }
                }
            }
        }
        (0..lanes)
            .map(|j| {
                if bound[j] < EXACT_F64 {
                    residual.iter().map(|row| -(row[j] as i64)).collect()
                } else {
                    let lane: Vec<i64> = coeffs.iter().map(|c| c[j]).collect();
                    let v = self.combine(&lane);
                    v.iter().zip(targets[j]).map(|(&a, &b)| a + b).collect()
                }
            })
            .collect()
    }
}

#[inline]
fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (y, &x) in y.iter_mut().zip(x) {
        *y += a * x;
    }
}

/// One-shot Klein sample from `D_{L(basis),s,center}`.
pub fn sample_d<R: Rng + ?Sized>(
    basis: &IntMatrix,
    param: GaussParam,
    center: &[f64],
    rng: &mut R,
) -> Result<Vec<i64>> {
    let sampler = LatticeSampler::new(basis.clone())?;
    sampler.check_quality(param);
    sampler.sample(param, center, rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng(seed: u64) -> SrpeRng {
        ChaCha20Rng::seed_from_u64(seed)
    }

    #[test]
    fn parameter_validation() {
        assert!(GaussParam::new(0.0).is_err());
        assert!(GaussParam::new(-1.0).is_err());
        assert!(GaussParam::with_tail_cut(2.0, 5.0).is_err());
        assert!(NoiseParam::new(3, 0.0).is_err());
    }

    #[test]
    fn vanishing_width_returns_center() {
        let p = GaussParam::new(1e-9).unwrap();
        let mut r = rng(1);
        for c in [-3i64, 0, 7] {
            for _ in 0..50 {
                assert_eq!(sample_z(p, c as f64, &mut r), c);
            }
        }
        // Off-integer center collapses to the nearest integer.
        assert_eq!(sample_z(p, 2.3, &mut r), 2);
    }

    #[test]
    fn integer_moments() {
        let p = GaussParam::new(4.0).unwrap();
        let mut r = rng(2);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| sample_z(p, 0.0, &mut r) as f64).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        let want = 16.0 / (2.0 * std::f64::consts::PI);
        assert!(mean.abs() < 0.05, "mean {mean}");
        assert!((var - want).abs() < 0.05 * want, "variance {var} vs {want}");
    }

    #[test]
    fn tail_is_cut() {
        let p = GaussParam::new(3.0).unwrap();
        let mut r = rng(3);
        for _ in 0..20_000 {
            let c = r.gen_range(-10.0..10.0);
            let x = sample_z(p, c, &mut r);
            assert!((x as f64 - c).abs() <= 6.0 * 3.0);
        }
    }

    #[test]
    fn chi_is_bounded() {
        let mut r = rng(4);
        let p = NoiseParam::new(5, 2.0).unwrap();
        assert!((0..1_000_000).all(|_| sample_chi(p, &mut r).unsigned_abs() <= 5));
        let zero = NoiseParam::new(0, 1.0).unwrap();
        assert!((0..100).all(|_| sample_chi(zero, &mut r) == 0));
    }

    #[test]
    fn gram_schmidt_of_triangular_basis() {
        let b = IntMatrix::from_rows(&[vec![2, 1], vec![0, 3]]).unwrap();
        let gs = GramSchmidt::new(&b).unwrap();
        let norms = gs.norms();
        assert!((norms[0] - 2.0).abs() < 1e-12);
        assert!((norms[1] - 3.0).abs() < 1e-12);
        let singular = IntMatrix::from_rows(&[vec![1, 2], vec![2, 4]]).unwrap();
        assert!(matches!(GramSchmidt::new(&singular), Err(Error::SingularBasis)));
    }

    #[test]
    fn trivial_lattice_small_s_gives_zero() {
        let q = 97;
        let mut b = IntMatrix::zeros(4, 4);
        for i in 0..4 {
            b.set(i, i, q);
        }
        let mut r = rng(6);
        let p = GaussParam::new(1.0).unwrap();
        for _ in 0..200 {
            assert_eq!(sample_d(&b, p, &[0.0; 4], &mut r).unwrap(), vec![0; 4]);
        }
    }

    #[test]
    fn samples_are_lattice_points() {
        let b = IntMatrix::from_rows(&[vec![3, 1, 0], vec![0, 5, 2], vec![1, 0, 7]]).unwrap();
        let sampler = LatticeSampler::new(b.clone()).unwrap();
        let p = GaussParam::new(20.0).unwrap();
        let mut r = rng(7);
        for _ in 0..500 {
            let v = sampler.sample(p, &[0.5, -1.25, 3.0], &mut r).unwrap();
            // Solve b * x = v exactly by Cramer's rule and check integrality.
            let det = det3(&b, None, &v);
            for col in 0..3 {
                let num = det3(&b, Some(col), &v);
                assert_eq!(num % det, 0);
            }
            let t = [4i64, -2, 9];
            let w = sampler.sample_coset(p, &t, &mut r).unwrap();
            let diff: Vec<i64> = w.iter().zip(&t).map(|(a, b)| a - b).collect();
            for col in 0..3 {
                assert_eq!(det3(&b, Some(col), &diff) % det, 0);
            }
        }
    }

    fn det3(b: &IntMatrix, replace: Option<usize>, v: &[i64]) -> i64 {
        let e = |r: usize, c: usize| if Some(c) == replace { v[r] } else { b.get(r, c) };
        e(0, 0) * (e(1, 1) * e(2, 2) - e(1, 2) * e(2, 1)) - e(0, 1) * (e(1, 0) * e(2, 2) - e(1, 2) * e(2, 0))
            + e(0, 2) * (e(1, 0) * e(2, 1) - e(1, 1) * e(2, 0))
    }
}
