//! Reference construction of the kick through a dense matrix exponential.
//!
//! Used to cross-check the closed-form and eigendecomposition kicks; the
//! simulator itself never goes through this path.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::KickMatrix;

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

// largest 1-norm for which Pade(13) needs no scaling
const THETA13: f64 = 5.371920351148152;

fn one_norm(a: &DMatrix<Complex64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `exp(a)` by scaling and squaring with a [13/13] Pade approximant.
pub fn expm(a: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: a.ncols(),
        });
    }
    let norm = one_norm(a);
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a * Complex64::new(2f64.powi(-squarings), 0.0);
    let c = |k: usize| Complex64::new(PADE13[k], 0.0);

    let ident = DMatrix::<Complex64>::identity(n, n);
    let a2 = &scaled * &scaled;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let u_inner = &a6 * (&a6 * c(13) + &a4 * c(11) + &a2 * c(9))
        + &a6 * c(7)
        + &a4 * c(5)
        + &a2 * c(3)
        + &ident * c(1);
    let u = &scaled * u_inner;
    let v = &a6 * (&a6 * c(12) + &a4 * c(10) + &a2 * c(8))
        + &a6 * c(6)
        + &a4 * c(4)
        + &a2 * c(2)
        + &ident * c(0);

    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .ok_or_else(|| Error::Domain("singular Pade denominator".into()))?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    Ok(r)
}

/// Top-left `dim x dim` block of `exp(-i g (a+ + a))` with the generator
/// truncated to `dim + buffer` states.
pub fn kick_matrix_by_expm(strength: f64, dim: usize, buffer: usize) -> Result<DenseKick> {
    if dim == 0 {
        return Err(Error::InvalidDimension(
            "kick matrix needs at least one state".into(),
        ));
    }
    let work = dim + buffer;
    let generator = DMatrix::<Complex64>::from_fn(work, work, |i, j| {
        let x = if i + 1 == j {
            (j as f64).sqrt()
        } else if j + 1 == i {
            (i as f64).sqrt()
        } else {
            0.0
        };
        Complex64::new(0.0, -strength * x)
    });
    let full = expm(&generator)?;
    Ok(DenseKick {
        block: full.view((0, 0), (dim, dim)).into_owned(),
    })
}

/// A kick matrix produced by the reference path.
#[derive(Debug, Clone)]
pub struct DenseKick {
    block: DMatrix<Complex64>,
}

impl DenseKick {
    pub fn dim(&self) -> usize {
        self.block.nrows()
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.block[(row, col)]
    }

    pub fn unitarity_defect(&self) -> f64 {
        let n = self.dim();
        let gram = self.block.adjoint() * &self.block - DMatrix::<Complex64>::identity(n, n);
        nalgebra::SymmetricEigen::new(gram)
            .eigenvalues
            .iter()
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    /// Largest element-wise distance to another kick matrix.
    pub fn max_abs_diff(&self, other: &KickMatrix) -> f64 {
        let n = self.dim();
        assert_eq!(n, other.dim());
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.get(i, j) - other.get(i, j)).norm());
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm_of_diagonal() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(0.0, 1.0),
            Complex64::new(2.0, 0.0),
            Complex64::new(-30.0, 5.0),
        ]));
        let e = expm(&a).unwrap();
        for i in 0..3 {
            let want = a[(i, i)].exp();
            assert!((e[(i, i)] - want).norm() < 1e-12 * want.norm().max(1.0));
        }
    }

    #[test]
    fn expm_of_rotation_generator() {
        // exp([[0, -t], [t, 0]]) is a rotation by t
        let t = 7.3;
        let a = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.0, 0.0),
                Complex64::new(-t, 0.0),
                Complex64::new(t, 0.0),
                Complex64::new(0.0, 0.0),
            ],
        );
        let e = expm(&a).unwrap();
        assert!((e[(0, 0)].re - t.cos()).abs() < 1e-13);
        assert!((e[(1, 0)].re - t.sin()).abs() < 1e-13);
    }

    #[test]
    fn reference_kick_is_unitary_in_working_space() {
        let k = kick_matrix_by_expm(0.8, 40, 0).unwrap();
        assert!(k.unitarity_defect() < 1e-13);
    }
}
