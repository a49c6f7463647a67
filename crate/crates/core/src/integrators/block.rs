//! Block-tridiagonal systems with 2×2 blocks: block Thomas elimination with
//! partial pivoting inside every pivot block.

use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

/// Relative size below which a pivot is treated as zero.
pub const PIVOT_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("block row {row}: pivot block is singular")]
    SingularPivot { row: usize },
    #[error("block rows are inconsistent: {0}")]
    Dimension(String),
    #[error("right-hand side is not finite at block row {row}")]
    NonFiniteRhs { row: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const ZERO: Mat2 = Mat2([[0.0, 0.0], [0.0, 0.0]]);
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);

    pub fn new(m00: f64, m01: f64, m10: f64, m11: f64) -> Self {
        Mat2([[m00, m01], [m10, m11]])
    }

    pub fn diag(d0: f64, d1: f64) -> Self {
        Mat2([[d0, 0.0], [0.0, d1]])
    }

    pub fn scale(self, k: f64) -> Self {
        let m = self.0;
        Mat2([[k * m[0][0], k * m[0][1]], [k * m[1][0], k * m[1][1]]])
    }

    pub fn apply(&self, x: [f64; 2]) -> [f64; 2] {
        let m = self.0;
        [
            m[0][0] * x[0] + m[0][1] * x[1],
            m[1][0] * x[0] + m[1][1] * x[1],
        ]
    }

    /// Row-sum norm.
    pub fn norm_inf(&self) -> f64 {
        let m = self.0;
        (m[0][0].abs() + m[0][1].abs()).max(m[1][0].abs() + m[1][1].abs())
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0, |acc, x| acc.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|x| x.is_finite())
    }

    pub fn determinant(&self) -> f64 {
        let m = self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    /// Spectral radius, from the characteristic polynomial.
    pub fn spectral_radius(&self) -> f64 {
        let m = self.0;
        let half_trace = 0.5 * (m[0][0] + m[1][1]);
        let det = self.determinant();
        let disc = half_trace * half_trace - det;
        if disc >= 0.0 {
            let r = disc.sqrt();
            (half_trace + r).abs().max((half_trace - r).abs())
        } else {
            // complex pair with modulus √det
            det.sqrt()
        }
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        let (a, b) = (self.0, o.0);
        Mat2([
            [a[0][0] + b[0][0], a[0][1] + b[0][1]],
            [a[1][0] + b[1][0], a[1][1] + b[1][1]],
        ])
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        self + (-o)
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self.scale(-1.0)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let (a, b) = (self.0, o.0);
        Mat2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }
}

/// `P·M = L·U` for a 2×2 block.
#[derive(Debug, Clone, Copy)]
struct Lu2 {
    swap: bool,
    l10: f64,
    u00: f64,
    u01: f64,
    u11: f64,
}

impl Lu2 {
    fn factor(m: &Mat2, row: usize) -> Result<Self, SolveError> {
        let scale = m.max_abs();
        let tol = PIVOT_TOL * scale;
        let [[a00, a01], [a10, a11]] = m.0;
        let swap = a10.abs() > a00.abs();
        let (r0, r1) = if swap {
            ([a10, a11], [a00, a01])
        } else {
            ([a00, a01], [a10, a11])
        };
        if scale.is_nan() || scale <= 0.0 || r0[0].abs() <= tol {
            return Err(SolveError::SingularPivot { row });
        }
        let l10 = r1[0] / r0[0];
        let u11 = r1[1] - l10 * r0[1];
        if u11.abs() <= tol {
            return Err(SolveError::SingularPivot { row });
        }
        Ok(Self {
            swap,
            l10,
            u00: r0[0],
            u01: r0[1],
            u11,
        })
    }

    fn solve(&self, b: [f64; 2]) -> [f64; 2] {
        let (b0, b1) = if self.swap {
            (b[1], b[0])
        } else {
            (b[0], b[1])
        };
        let y1 = b1 - self.l10 * b0;
        let x1 = y1 / self.u11;
        let x0 = (b0 - self.u01 * x1) / self.u00;
        [x0, x1]
    }

    fn solve_mat(&self, b: &Mat2) -> Mat2 {
        let c0 = self.solve([b.0[0][0], b.0[1][0]]);
        let c1 = self.solve([b.0[0][1], b.0[1][1]]);
        Mat2([[c0[0], c1[0]], [c0[1], c1[1]]])
    }

    fn inverse(&self) -> Mat2 {
        self.solve_mat(&Mat2::IDENTITY)
    }
}

/// Block rows `lower[i]·x[i-1] + diag[i]·x[i] + upper[i]·x[i+1] = rhs[i]`;
/// `lower[0]` and `upper[n-1]` are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockTridiagonalSystem {
    pub lower: Vec<Mat2>,
    pub diag: Vec<Mat2>,
    pub upper: Vec<Mat2>,
    pub rhs: Vec<[f64; 2]>,
}

impl BlockTridiagonalSystem {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    fn check_dimensions(&self) -> Result<(), SolveError> {
        let n = self.diag.len();
        if n == 0 {
            return Err(SolveError::Dimension("no block rows".into()));
        }
        if self.lower.len() != n || self.upper.len() != n {
            return Err(SolveError::Dimension(format!(
                "lower/diag/upper lengths {}/{}/{}",
                self.lower.len(),
                n,
                self.upper.len()
            )));
        }
        Ok(())
    }

    /// `A·x`
    pub fn apply(&self, x: &[[f64; 2]]) -> Vec<[f64; 2]> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut y = self.diag[i].apply(x[i]);
                if i > 0 {
                    let l = self.lower[i].apply(x[i - 1]);
                    y = [y[0] + l[0], y[1] + l[1]];
                }
                if i + 1 < n {
                    let r = self.upper[i].apply(x[i + 1]);
                    y = [y[0] + r[0], y[1] + r[1]];
                }
                y
            })
            .collect()
    }

    /// `‖A·x − rhs‖∞`
    pub fn residual(&self, x: &[[f64; 2]]) -> f64 {
        self.apply(x)
            .iter()
            .zip(&self.rhs)
            .flat_map(|(y, r)| [(y[0] - r[0]).abs(), (y[1] - r[1]).abs()])
            .fold(0.0, f64::max)
    }

    pub fn factor(&self) -> Result<BlockTridiagonalFactor, SolveError> {
        self.check_dimensions()?;
        if let Some(row) = (0..self.len()).find(|&i| {
            !(self.diag[i].is_finite() && self.lower[i].is_finite() && self.upper[i].is_finite())
        }) {
            return Err(SolveError::Dimension(format!(
                "non-finite block in row {row}"
            )));
        }
        let n = self.len();
        let mut pivots = Vec::with_capacity(n);
        let mut upper_prime = Vec::with_capacity(n);
        let mut max_condition: f64 = 0.0;
        for i in 0..n {
            let pivot = if i == 0 {
                self.diag[0]
            } else {
                self.diag[i] - self.lower[i] * upper_prime[i - 1]
            };
            let lu = Lu2::factor(&pivot, i)?;
            max_condition = max_condition.max(pivot.norm_inf() * lu.inverse().norm_inf());
            upper_prime.push(if i + 1 < n {
                lu.solve_mat(&self.upper[i])
            } else {
                Mat2::ZERO
            });
            pivots.push(lu);
        }
        Ok(BlockTridiagonalFactor {
            lower: self.lower.clone(),
            pivots,
            upper_prime,
            max_condition,
        })
    }
}

/// Reusable elimination of a [`BlockTridiagonalSystem`] matrix.
#[derive(Debug, Clone)]
pub struct BlockTridiagonalFactor {
    lower: Vec<Mat2>,
    pivots: Vec<Lu2>,
    upper_prime: Vec<Mat2>,
    max_condition: f64,
}

impl BlockTridiagonalFactor {
    /// Largest `∞`-norm condition number among the pivot blocks.
    pub fn max_pivot_condition(&self) -> f64 {
        self.max_condition
    }

    pub fn solve(&self, rhs: &[[f64; 2]]) -> Result<Vec<[f64; 2]>, SolveError> {
        let n = self.pivots.len();
        if rhs.len() != n {
            return Err(SolveError::Dimension(format!(
                "rhs has {} rows, matrix has {n}",
                rhs.len()
            )));
        }
        if let Some(row) = rhs
            .iter()
            .position(|r| !(r[0].is_finite() && r[1].is_finite()))
        {
            return Err(SolveError::NonFiniteRhs { row });
        }
        let mut d = Vec::with_capacity(n);
        for i in 0..n {
            let mut r = rhs[i];
            if i > 0 {
                let l = self.lower[i].apply(d[i - 1]);
                r = [r[0] - l[0], r[1] - l[1]];
            }
            d.push(self.pivots[i].solve(r));
        }
        for i in (0..n - 1).rev() {
            let c = self.upper_prime[i].apply(d[i + 1]);
            d[i] = [d[i][0] - c[0], d[i][1] - c[1]];
        }
        Ok(d)
    }
}

pub fn solve_block_tridiagonal(
    system: &BlockTridiagonalSystem,
) -> Result<Vec<[f64; 2]>, SolveError> {
    system.factor()?.solve(&system.rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Dense Gaussian elimination with partial pivoting.
    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))
                .unwrap();
            a.swap(k, p);
            b.swap(k, p);
            let pivot_row = a[k].clone();
            for i in k + 1..n {
                let f = a[i][k] / pivot_row[k];
                for (aij, pkj) in a[i][k..].iter_mut().zip(&pivot_row[k..]) {
                    *aij -= f * pkj;
                }
                b[i] -= f * b[k];
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
            x[i] = (b[i] - s) / a[i][i];
        }
        x
    }

    fn to_dense(sys: &BlockTridiagonalSystem) -> Vec<Vec<f64>> {
        let n = sys.len();
        let mut a = vec![vec![0.0; 2 * n]; 2 * n];
        let mut put = |bi: usize, bj: usize, m: &Mat2| {
            for r in 0..2 {
                for c in 0..2 {
                    a[2 * bi + r][2 * bj + c] = m.0[r][c];
                }
            }
        };
        for i in 0..n {
            put(i, i, &sys.diag[i]);
            if i > 0 {
                put(i, i - 1, &sys.lower[i]);
            }
            if i + 1 < n {
                put(i, i + 1, &sys.upper[i]);
            }
        }
        a
    }

    fn random_block(rng: &mut ChaCha8Rng) -> Mat2 {
        Mat2::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        )
    }

    #[test]
    fn identity_blocks_return_rhs() {
        let n = 5;
        let rhs: Vec<[f64; 2]> = (0..n).map(|i| [i as f64, -(i as f64) * 0.5]).collect();
        let sys = BlockTridiagonalSystem {
            lower: vec![Mat2::ZERO; n],
            diag: vec![Mat2::IDENTITY; n],
            upper: vec![Mat2::ZERO; n],
            rhs: rhs.clone(),
        };
        assert_eq!(solve_block_tridiagonal(&sys).unwrap(), rhs);
    }

    #[test]
    fn matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 17; // J = 16
        let lower: Vec<_> = (0..n).map(|_| random_block(&mut rng)).collect();
        let upper: Vec<_> = (0..n).map(|_| random_block(&mut rng)).collect();
        let diag: Vec<_> = (0..n)
            .map(|_| random_block(&mut rng) + Mat2::IDENTITY.scale(5.0))
            .collect();
        let rhs: Vec<[f64; 2]> = (0..n)
            .map(|_| [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)])
            .collect();
        let sys = BlockTridiagonalSystem {
            lower,
            diag,
            upper,
            rhs,
        };
        let x = solve_block_tridiagonal(&sys).unwrap();
        let flat_rhs: Vec<f64> = sys.rhs.iter().flatten().copied().collect();
        let oracle = dense_solve(to_dense(&sys), flat_rhs);
        let scale = oracle.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for (xi, oi) in x.iter().flatten().zip(&oracle) {
            assert!((xi - oi).abs() <= 1e-10 * scale, "{xi} vs {oi}");
        }
        assert!(sys.residual(&x) <= 1e-10 * 4.0);
    }

    #[test]
    fn pivoting_handles_zero_leading_entry() {
        // [[0, 1], [1, 0]] needs a row swap
        let sys = BlockTridiagonalSystem {
            lower: vec![Mat2::ZERO; 1],
            diag: vec![Mat2::new(0.0, 1.0, 1.0, 0.0)],
            upper: vec![Mat2::ZERO; 1],
            rhs: vec![[2.0, 3.0]],
        };
        assert_eq!(solve_block_tridiagonal(&sys).unwrap(), vec![[3.0, 2.0]]);
    }

    #[test]
    fn singular_pivot_names_row() {
        let mut diag = vec![Mat2::IDENTITY; 4];
        diag[2] = Mat2::new(1.0, 2.0, 2.0, 4.0);
        let sys = BlockTridiagonalSystem {
            lower: vec![Mat2::ZERO; 4],
            diag,
            upper: vec![Mat2::ZERO; 4],
            rhs: vec![[1.0, 1.0]; 4],
        };
        assert_eq!(
            solve_block_tridiagonal(&sys),
            Err(SolveError::SingularPivot { row: 2 })
        );
    }

    #[test]
    fn bad_input_rejected() {
        let sys = BlockTridiagonalSystem {
            lower: vec![Mat2::ZERO; 2],
            diag: vec![Mat2::IDENTITY; 3],
            upper: vec![Mat2::ZERO; 3],
            rhs: vec![[0.0; 2]; 3],
        };
        assert!(matches!(
            solve_block_tridiagonal(&sys),
            Err(SolveError::Dimension(_))
        ));
        let sys = BlockTridiagonalSystem {
            lower: vec![Mat2::ZERO; 2],
            diag: vec![Mat2::IDENTITY; 2],
            upper: vec![Mat2::ZERO; 2],
            rhs: vec![[0.0, f64::NAN], [0.0; 2]],
        };
        assert_eq!(
            solve_block_tridiagonal(&sys),
            Err(SolveError::NonFiniteRhs { row: 0 })
        );
    }

    #[test]
    fn spectral_radius_cases() {
        assert_eq!(Mat2::diag(-3.0, 2.0).spectral_radius(), 3.0);
        // rotation-like block with eigenvalues ±2i
        assert!((Mat2::new(0.0, 1.0, -4.0, 0.0).spectral_radius() - 2.0).abs() < 1e-15);
    }
}
