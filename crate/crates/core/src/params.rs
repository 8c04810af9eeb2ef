use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};

/// Exponent convention for the free (between-kick) Kerr evolution.
///
/// `HalfChi` is the propagator of `H = (chi/2) a+^2 a^2`, i.e. phases
/// `exp(-i chi T n(n-1)/2)`. It is the convention consistent with the
/// classical recurrence `a -> exp(-i chi T n) a` and is the default.
/// `FullChi` drops the factor 1/2; at `chi T = pi` it reduces the free
/// evolution to the identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KerrConvention {
    #[default]
    HalfChi,
    FullChi,
}

impl KerrConvention {
    pub fn factor(self) -> f64 {
        match self {
            KerrConvention::HalfChi => 0.5,
            KerrConvention::FullChi => 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            KerrConvention::HalfChi => "half",
            KerrConvention::FullChi => "full",
        }
    }
}

impl FromStr for KerrConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "half" => Ok(KerrConvention::HalfChi),
            "full" => Ok(KerrConvention::FullChi),
            other => Err(invalid(
                "kerr",
                format!("expected `half` or `full`, got `{other}`"),
            )),
        }
    }
}

/// How the kick unitary is represented in the truncated Fock space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KickBasis {
    /// `exp(-i g X)` with `X` the position quadrature truncated to `dim`.
    /// Exactly unitary in the truncated space; population reaching the
    /// cutoff is reflected rather than lost.
    #[default]
    Closed,
    /// Top-left `dim x dim` block of the displacement operator evaluated
    /// in `dim + buffer` states from the closed-form Laguerre elements.
    /// Faithful to the infinite operator as long as nothing reaches the
    /// cutoff, but loses norm once something does.
    Embedded,
}

impl KickBasis {
    pub fn as_str(self) -> &'static str {
        match self {
            KickBasis::Closed => "closed",
            KickBasis::Embedded => "embedded",
        }
    }
}

impl FromStr for KickBasis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "closed" => Ok(KickBasis::Closed),
            "embedded" => Ok(KickBasis::Embedded),
            other => Err(invalid(
                "kick_basis",
                format!("expected `closed` or `embedded`, got `{other}`"),
            )),
        }
    }
}

/// Physical and numerical parameters of one kicked-oscillator run.
///
/// Energies are measured in units of `chi`. The defaults are `chi = 1`,
/// `T = pi`, a 128-state Fock space and a 64-state construction buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    pub chi: f64,
    /// Time between kicks.
    pub period: f64,
    pub epsilon: f64,
    pub delta_epsilon: f64,
    pub dim: usize,
    pub buffer: usize,
    pub kicks: usize,
    pub kerr: KerrConvention,
    pub kick_basis: KickBasis,
}

impl Default for SystemParams {
    fn default() -> Self {
        SystemParams {
            chi: 1.0,
            period: PI,
            epsilon: 0.1,
            delta_epsilon: 0.001,
            dim: 128,
            buffer: 64,
            kicks: 10_000,
            kerr: KerrConvention::HalfChi,
            kick_basis: KickBasis::Closed,
        }
    }
}

impl SystemParams {
    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_delta_epsilon(mut self, delta_epsilon: f64) -> Self {
        self.delta_epsilon = delta_epsilon;
        self
    }

    pub fn with_kicks(mut self, kicks: usize) -> Self {
        self.kicks = kicks;
        self
    }

    pub fn with_dim(mut self, dim: usize) -> Self {
        self.dim = dim;
        self
    }

    pub fn with_kick_basis(mut self, basis: KickBasis) -> Self {
        self.kick_basis = basis;
        self
    }

    /// Strength of the perturbed kick, `epsilon + delta_epsilon`.
    pub fn perturbed_strength(&self) -> f64 {
        self.epsilon + self.delta_epsilon
    }

    pub fn validate(&self) -> Result<()> {
        let finite_positive = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(name, format!("must be finite and > 0, got {v}")))
            }
        };
        let finite_nonneg = |name: &'static str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(invalid(name, format!("must be finite and >= 0, got {v}")))
            }
        };
        finite_positive("chi", self.chi)?;
        finite_positive("period", self.period)?;
        finite_nonneg("epsilon", self.epsilon)?;
        finite_nonneg("delta_epsilon", self.delta_epsilon)?;
        if self.dim < 2 {
            return Err(Error::InvalidDimension(format!(
                "simulation dimension must be >= 2, got {}",
                self.dim
            )));
        }
        Ok(())
    }
}

impl fmt::Display for SystemParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "chi={} period={} epsilon={} delta_eps={} dim={} buffer={} kicks={} kerr={} kick_basis={}",
            self.chi,
            self.period,
            self.epsilon,
            self.delta_epsilon,
            self.dim,
            self.buffer,
            self.kicks,
            self.kerr.as_str(),
            self.kick_basis.as_str()
        )
    }
}
