//! System parameters and the named parameter profiles.
//!
//! The profiles are sized for correctness testing only. They make no security
//! claim whatsoever.

use crate::error::{Error, Result};
use crate::gauss::{GaussParam, NoiseParam};
use crate::zq::{FrdMap, Gadget, Modulus};

pub const PROFILE_BANNER: &str = "NO SECURITY CLAIM: correctness-testing parameters";

/// Profile names accepted by [`SysParams::profile`].
pub const PROFILES: [&str; 2] = ["toy", "small"];

/// Free choices of a profile; everything else is derived.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSpec {
    pub name: String,
    pub n: usize,
    /// Maximum number of users `N`.
    pub users: usize,
    pub ell: usize,
    pub kappa: usize,
    pub q: u64,
    pub s: f64,
    pub noise_bound: u64,
    /// Pinned constant of the error budget `s * ell * m^2 * B * omega_const`.
    pub omega_const: f64,
}

impl ProfileSpec {
    /// n = 8, ell = 4, N = 8, kappa = 16; q, s and omega_const come from the
    /// calibration run in `examples/calibrate.rs`.
    pub fn toy() -> Self {
        Self {
            name: "toy".into(),
            n: 8,
            users: 8,
            ell: 4,
            kappa: 16,
            q: 222_413_166_077,
            s: 110.0,
            noise_bound: 8,
            omega_const: 34.1854,
        }
    }

    /// n = 10, ell = 6, N = 32, kappa = 24, calibrated the same way.
    pub fn small() -> Self {
        Self {
            name: "small".into(),
            n: 10,
            users: 32,
            ell: 6,
            kappa: 24,
            q: 740_666_159_377,
            s: 130.0,
            noise_bound: 8,
            omega_const: 25.2972,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SysParams {
    name: String,
    n: usize,
    users: usize,
    ell: usize,
    kappa: usize,
    modulus: Modulus,
    m: usize,
    s: GaussParam,
    noise: NoiseParam,
    omega_const: f64,
    frd: FrdMap,
}

impl SysParams {
    pub fn profile(name: &str) -> Result<Self> {
        match name {
            "toy" => Self::from_spec(ProfileSpec::toy()),
            "small" => Self::from_spec(ProfileSpec::small()),
            other => Err(Error::InvalidParameter(format!(
                "unknown profile {other:?}; expected one of {PROFILES:?} or custom"
            ))),
        }
    }

    pub fn from_spec(spec: ProfileSpec) -> Result<Self> {
        let modulus = Modulus::new_prime(spec.q)?;
        let frd = FrdMap::find(spec.n, modulus)?;
        Self::assemble(spec, frd)
    }

    /// Rebuilds parameters whose FRD polynomial was stored earlier.
    pub fn from_spec_with_frd(spec: ProfileSpec, poly: Vec<u64>) -> Result<Self> {
        let modulus = Modulus::new_prime(spec.q)?;
        let frd = FrdMap::from_poly(poly, modulus)?;
        if frd.degree() != spec.n {
            return Err(Error::InvalidParameter("FRD polynomial degree differs from n".into()));
        }
        Self::assemble(spec, frd)
    }

    fn assemble(spec: ProfileSpec, frd: FrdMap) -> Result<Self> {
        if spec.n == 0 || spec.users == 0 || spec.ell == 0 {
            return Err(Error::InvalidParameter("n, N and ell must be at least 1".into()));
        }
        if spec.kappa < 8 {
            return Err(Error::InvalidParameter(format!("kappa = {} is below 8", spec.kappa)));
        }
        if spec.noise_bound == 0 {
            return Err(Error::InvalidParameter("noise bound B must be at least 1".into()));
        }
        if !(spec.omega_const > 0.0 && spec.omega_const.is_finite()) {
            return Err(Error::InvalidParameter("omega_const must be positive".into()));
        }
        let modulus = Modulus::new_prime(spec.q)?;
        let m = 2 * spec.n * modulus.bit_length() as usize;
        let params = Self {
            s: GaussParam::new(spec.s)?,
            noise: NoiseParam::from_bound(spec.noise_bound)?,
            name: spec.name,
            n: spec.n,
            users: spec.users,
            ell: spec.ell,
            kappa: spec.kappa,
            omega_const: spec.omega_const,
            modulus,
            m,
            frd,
        };
        if params.error_budget() >= modulus.value() as f64 / 5.0 {
            return Err(Error::InvalidParameter(format!(
                "error budget {:.3e} does not fit under q/5 = {:.3e}",
                params.error_budget(),
                modulus.value() as f64 / 5.0
            )));
        }
        Ok(params)
    }

    pub fn spec(&self) -> ProfileSpec {
        ProfileSpec {
            name: self.name.clone(),
            n: self.n,
            users: self.users,
            ell: self.ell,
            kappa: self.kappa,
            q: self.modulus.value(),
            s: self.s.s(),
            noise_bound: self.noise.bound(),
            omega_const: self.omega_const,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Maximum number of users `N`.
    pub fn users(&self) -> usize {
        self.users
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    pub fn q(&self) -> u64 {
        self.modulus.value()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn gauss(&self) -> GaussParam {
        self.s
    }

    pub fn noise(&self) -> NoiseParam {
        self.noise
    }

    pub fn omega_const(&self) -> f64 {
        self.omega_const
    }

    pub fn frd(&self) -> &FrdMap {
        &self.frd
    }

    /// The padded gadget `G in Z_q^{n x m}`.
    pub fn gadget(&self) -> Gadget {
        Gadget::new(self.n, self.m, self.modulus).expect("m = 2n*ceil(log q) fits the gadget")
    }

    /// Depth of the user tree: `ceil(log2 N)`.
    pub fn depth(&self) -> u32 {
        self.users.next_power_of_two().trailing_zeros()
    }

    /// `s * ell * m^2 * B * omega_const`, the bound every decryption error
    /// must stay under.
    pub fn error_budget(&self) -> f64 {
        self.s.s() * self.ell as f64 * (self.m as f64).powi(2) * self.noise.bound() as f64 * self.omega_const
    }

    /// Longest identity or time label, in bytes: `n * floor(log2 q) / 8`.
    pub fn max_label_len(&self) -> usize {
        self.n * (63 - self.modulus.value().leading_zeros() as usize) / 8
    }
}
