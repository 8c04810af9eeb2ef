//! Truncated Fock-space states and the two propagators of the kicked
//! oscillator: the diagonal Kerr phase and the dense kick matrix.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::{KerrConvention, KickBasis};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A state vector over the photon-number basis `|0>, ..., |dim-1>`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    amplitudes: Vec<Complex64>,
}

impl FockVector {
    /// The vacuum `|0>`.
    pub fn vacuum(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(
                "Fock space needs at least one state".into(),
            ));
        }
        let mut amplitudes = vec![ZERO; dim];
        amplitudes[0] = ONE;
        Ok(FockVector { amplitudes })
    }

    /// The number state `|n>` in a space of size `dim`.
    pub fn number_state(n: usize, dim: usize) -> Result<Self> {
        if n >= dim {
            return Err(Error::InvalidDimension(format!(
                "number state |{n}> does not fit in dimension {dim}"
            )));
        }
        let mut amplitudes = vec![ZERO; dim];
        amplitudes[n] = ONE;
        Ok(FockVector { amplitudes })
    }

    /// Wraps amplitudes as given, without normalizing.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidDimension(
                "Fock space needs at least one state".into(),
            ));
        }
        Ok(FockVector { amplitudes })
    }

    /// Wraps and rescales amplitudes to unit norm.
    pub fn normalized(amplitudes: Vec<Complex64>) -> Result<Self> {
        let mut v = Self::from_amplitudes(amplitudes)?;
        let norm = v.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Normalization(format!("state norm is {norm}")));
        }
        v.amplitudes.iter_mut().for_each(|c| *c /= norm);
        Ok(v)
    }

    /// Coherent state `|alpha>` truncated to `dim` and renormalized.
    pub fn coherent(alpha: Complex64, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(
                "Fock space needs at least one state".into(),
            ));
        }
        let mut amps = Vec::with_capacity(dim);
        let mut c = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
        for n in 0..dim {
            amps.push(c);
            c = c * alpha / ((n + 1) as f64).sqrt();
        }
        Self::normalized(amps)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &FockVector) -> Result<Complex64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `<self| n |other>` with `n = a+ a` the photon-number operator.
    pub fn number_weighted_inner(&self, other: &FockVector) -> Result<Complex64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .enumerate()
            .map(|(n, (a, b))| a.conj() * b * n as f64)
            .sum())
    }

    /// `<n>`, normalized by the current squared norm.
    pub fn mean_photon_number(&self) -> f64 {
        let weighted: f64 = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(n, c)| n as f64 * c.norm_sqr())
            .sum();
        weighted / self.norm_sqr()
    }

    /// Population in the top `band` basis states.
    pub fn tail_population(&self, band: usize) -> f64 {
        let start = self.dim().saturating_sub(band);
        self.amplitudes[start..].iter().map(|c| c.norm_sqr()).sum()
    }
}

fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}

/// The free evolution between kicks, diagonal in the Fock basis.
#[derive(Debug, Clone, PartialEq)]
pub struct KerrPhaseDiagonal {
    phases: Vec<Complex64>,
}

impl KerrPhaseDiagonal {
    /// Phases `exp(-i f chi T n(n-1))` with `f` set by the convention
    /// (1/2 for [`KerrConvention::HalfChi`], 1 for `FullChi`).
    pub fn new(chi: f64, period: f64, dim: usize, convention: KerrConvention) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(
                "Kerr diagonal needs at least one state".into(),
            ));
        }
        if !(chi.is_finite() && period.is_finite()) {
            return Err(Error::NonFinite(format!("chi={chi}, period={period}")));
        }
        let rate = convention.factor() * chi * period;
        let phases = (0..dim)
            .map(|n| {
                let pairs = (n * n.saturating_sub(1)) as f64;
                if pairs == 0.0 {
                    ONE
                } else {
                    Complex64::from_polar(1.0, -rate * pairs)
                }
            })
            .collect();
        Ok(KerrPhaseDiagonal { phases })
    }

    pub fn dim(&self) -> usize {
        self.phases.len()
    }

    pub fn phases(&self) -> &[Complex64] {
        &self.phases
    }

    pub fn apply(&self, psi: &FockVector) -> Result<FockVector> {
        let mut out = psi.clone();
        self.apply_in_place(&mut out)?;
        Ok(out)
    }

    pub fn apply_in_place(&self, psi: &mut FockVector) -> Result<()> {
        check_dim(self.dim(), psi.dim())?;
        psi.amplitudes
            .iter_mut()
            .zip(&self.phases)
            .for_each(|(c, p)| *c *= p);
        Ok(())
    }

    /// Applies the inverse (complex-conjugate) phases.
    pub fn apply_adjoint_in_place(&self, psi: &mut FockVector) -> Result<()> {
        check_dim(self.dim(), psi.dim())?;
        psi.amplitudes
            .iter_mut()
            .zip(&self.phases)
            .for_each(|(c, p)| *c *= p.conj());
        Ok(())
    }
}

/// Builds the Kerr phase diagonal with the literal `exp(-i chi T n(n-1))`
/// exponent.
pub fn make_kerr_diagonal(chi: f64, period: f64, dim: usize) -> Result<KerrPhaseDiagonal> {
    KerrPhaseDiagonal::new(chi, period, dim, KerrConvention::FullChi)
}

/// Dense `dim x dim` representation of the kick `exp(-i g (a+ + a))`.
#[derive(Debug, Clone, PartialEq)]
pub struct KickMatrix {
    dim: usize,
    strength: f64,
    basis: KickBasis,
    // row-major
    elements: Vec<Complex64>,
}

impl KickMatrix {
    /// Builds the kick in the requested representation.
    pub fn build(basis: KickBasis, strength: f64, dim: usize, buffer: usize) -> Result<Self> {
        match basis {
            KickBasis::Embedded => Self::embedded(strength, dim, buffer),
            KickBasis::Closed => Self::closed(strength, dim),
        }
    }

    /// Top-left `dim x dim` block of the displacement operator
    /// `D(-i g)` from its closed-form Laguerre matrix elements.
    ///
    /// The elements are those of the untruncated operator, i.e. the block
    /// one obtains from any sufficiently large working space. `buffer` only
    /// records how much headroom the caller expects beyond `dim`.
    pub fn embedded(strength: f64, dim: usize, buffer: usize) -> Result<Self> {
        check_kick_args(strength, dim)?;
        let _ = buffer;
        let mut elements = vec![ZERO; dim * dim];
        if strength == 0.0 {
            (0..dim).for_each(|i| elements[i * dim + i] = ONE);
        } else {
            fill_displacement(&mut elements, dim, strength);
        }
        Ok(KickMatrix {
            dim,
            strength,
            basis: KickBasis::Embedded,
            elements,
        })
    }

    /// `exp(-i g X_dim)` where `X_dim` is the quadrature `a+ + a` truncated
    /// to `dim` states, computed from the eigendecomposition of the real
    /// symmetric tridiagonal `X_dim`. Exactly unitary in the truncated space.
    pub fn closed(strength: f64, dim: usize) -> Result<Self> {
        check_kick_args(strength, dim)?;
        let mut elements = vec![ZERO; dim * dim];
        if strength == 0.0 {
            (0..dim).for_each(|i| elements[i * dim + i] = ONE);
            return Ok(KickMatrix {
                dim,
                strength,
                basis: KickBasis::Closed,
                elements,
            });
        }
        let x = DMatrix::<f64>::from_fn(dim, dim, |i, j| {
            if i + 1 == j {
                (j as f64).sqrt()
            } else if j + 1 == i {
                (i as f64).sqrt()
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(x);
        let phases: Vec<Complex64> = eig
            .eigenvalues
            .iter()
            .map(|&lambda| Complex64::from_polar(1.0, -strength * lambda))
            .collect();
        let v = &eig.eigenvectors;
        // U is complex symmetric; fill the upper triangle and mirror.
        for i in 0..dim {
            for j in i..dim {
                let mut acc = ZERO;
                for (k, p) in phases.iter().enumerate() {
                    acc += p * (v[(i, k)] * v[(j, k)]);
                }
                elements[i * dim + j] = acc;
                elements[j * dim + i] = acc;
            }
        }
        Ok(KickMatrix {
            dim,
            strength,
            basis: KickBasis::Closed,
            elements,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn strength(&self) -> f64 {
        self.strength
    }

    pub fn basis(&self) -> KickBasis {
        self.basis
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.elements[row * self.dim + col]
    }

    /// Row-major element storage.
    pub fn elements(&self) -> &[Complex64] {
        &self.elements
    }

    pub fn apply(&self, psi: &FockVector) -> Result<FockVector> {
        check_dim(self.dim, psi.dim())?;
        let mut out = vec![ZERO; self.dim];
        self.apply_into(psi.amplitudes(), &mut out);
        Ok(FockVector { amplitudes: out })
    }

    /// `out = M x`. Both slices must have length `dim`.
    pub fn apply_into(&self, x: &[Complex64], out: &mut [Complex64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(out.len(), self.dim);
        for (row, o) in self.elements.chunks_exact(self.dim).zip(out.iter_mut()) {
            *o = dot(row, x);
        }
    }

    /// `out = M+ x`.
    pub fn apply_adjoint_into(&self, x: &[Complex64], out: &mut [Complex64]) {
        out.iter_mut().for_each(|o| *o = ZERO);
        for (row, &xi) in self.elements.chunks_exact(self.dim).zip(x) {
            for (o, m) in out.iter_mut().zip(row) {
                *o += m.conj() * xi;
            }
        }
    }

    /// Operator (spectral) norm of `M+ M - I`.
    pub fn unitarity_defect(&self) -> f64 {
        let d = self.dim;
        let m = DMatrix::<Complex64>::from_fn(d, d, |i, j| self.get(i, j));
        let gram = m.adjoint() * &m - DMatrix::<Complex64>::identity(d, d);
        let eig = SymmetricEigen::new(gram);
        eig.eigenvalues
            .iter()
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }
}

/// Closed-form kick matrix: the top-left `dim x dim` block of
/// `exp(-i g (a+ + a))`.
pub fn make_kick_matrix(strength: f64, dim: usize, buffer: usize) -> Result<KickMatrix> {
    KickMatrix::embedded(strength, dim, buffer)
}

pub fn apply_kerr(diag: &KerrPhaseDiagonal, psi: &FockVector) -> Result<FockVector> {
    diag.apply(psi)
}

pub fn apply_matrix(m: &KickMatrix, psi: &FockVector) -> Result<FockVector> {
    m.apply(psi)
}

fn check_kick_args(strength: f64, dim: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::InvalidDimension(
            "kick matrix needs at least one state".into(),
        ));
    }
    if !strength.is_finite() {
        return Err(Error::NonFinite(format!("kick strength {strength}")));
    }
    Ok(())
}

#[inline]
fn dot(row: &[Complex64], x: &[Complex64]) -> Complex64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (m, v) in row.iter().zip(x) {
        re += m.re * v.re - m.im * v.im;
        im += m.re * v.im + m.im * v.re;
    }
    Complex64::new(re, im)
}

/// `ln k!` for `k = 0..n`.
fn log_factorials(n: usize) -> Vec<f64> {
    let mut table = Vec::with_capacity(n);
    let mut acc = 0.0;
    table.push(0.0);
    for k in 1..n {
        acc += (k as f64).ln();
        table.push(acc);
    }
    table
}

/// Fills `<m| D(-i g) |n>` for `m, n < dim`.
///
/// For `m >= n`, with `d = m - n` and `x = g^2`,
/// `<m|D|n> = sqrt(n!/m!) (-i g)^d e^{-x/2} L_n^{(d)}(x)`, and the matrix is
/// symmetric because `-conj(-i g) = -i g`. Prefactors are evaluated in log
/// space and the Laguerre recurrence is rescaled on the fly so that large
/// dimensions neither overflow nor underflow prematurely.
fn fill_displacement(elements: &mut [Complex64], dim: usize, g: f64) {
    let x = g * g;
    let ln_g = g.abs().ln();
    let lnf = log_factorials(dim);
    let sign = g.signum();
    for d in 0..dim {
        // (-i sign)^d
        let phase = match d % 4 {
            0 => ONE,
            1 => Complex64::new(0.0, -sign),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, sign),
        };
        let alpha = d as f64;
        let (mut prev, mut cur) = (0.0_f64, 1.0_f64);
        let mut log_scale = 0.0_f64;
        for n in 0..dim - d {
            if n == 1 {
                prev = cur;
                cur = (1.0 + alpha - x) * 1.0;
            } else if n > 1 {
                let j = (n - 1) as f64;
                let next = ((2.0 * j + 1.0 + alpha - x) * cur - (j + alpha) * prev) / (j + 1.0);
                prev = cur;
                cur = next;
            }
            if cur.abs() > 1e150 {
                prev *= 1e-150;
                cur *= 1e-150;
                log_scale += 150.0 * std::f64::consts::LN_10;
            }
            let m = n + d;
            let log_mag = 0.5 * (lnf[n] - lnf[m]) + alpha * ln_g - 0.5 * x + log_scale;
            let value = phase * (cur * log_mag.exp());
            elements[m * dim + n] = value;
            elements[n * dim + m] = value;
        }
    }
}
