//! Dense matrix helpers and the spectral radius of nonnegative matrices.

use nalgebra::{DMatrix, DVector};

use crate::graph::strongly_connected_components;

/// Diagonal shift applied before power iteration. It makes every irreducible
/// block primitive, so periodic blocks converge too.
pub const SPECTRAL_SHIFT: f64 = 1e-3;

/// Margin below one under which a spectral radius counts as certified `< 1`.
pub const SPECTRAL_MARGIN: f64 = 1e-7;

const MAX_POWER_STEPS: usize = 400_000;
const BRACKET_TOL: f64 = 1e-13;

/// Certified bracket `lower <= rho <= upper` on a spectral radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralBracket {
    pub lower: f64,
    pub upper: f64,
}

impl SpectralBracket {
    pub fn estimate(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    /// `rho < 1 - margin`, certified by the upper bound.
    pub fn below_one(&self, margin: f64) -> bool {
        self.upper < 1.0 - margin
    }
}

/// Spectral radius of a nonnegative square matrix.
///
/// The support graph is split into strongly connected components; each
/// irreducible block is handled by power iteration on `B + eps I`, whose
/// Perron root is `rho(B) + eps`. Collatz-Wielandt ratios of the iterate give
/// lower and upper bounds at every step, and the radius of the whole matrix
/// is the largest block radius.
pub fn spectral_radius(m: &DMatrix<f64>) -> SpectralBracket {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "spectral radius needs a square matrix");
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| m[(i, j)] > 0.0).collect())
        .collect();
    let mut out = SpectralBracket {
        lower: 0.0,
        upper: 0.0,
    };
    for comp in strongly_connected_components(&adj) {
        let b = block_radius(m, &comp);
        out.lower = out.lower.max(b.lower);
        out.upper = out.upper.max(b.upper);
    }
    out
}

fn block_radius(m: &DMatrix<f64>, comp: &[usize]) -> SpectralBracket {
    let k = comp.len();
    if k == 1 {
        let d = m[(comp[0], comp[0])];
        return SpectralBracket { lower: d, upper: d };
    }
    let block = DMatrix::from_fn(k, k, |i, j| m[(comp[i], comp[j])]);
    let mut x = DVector::from_element(k, 1.0);
    let mut lower = 0.0f64;
    let mut upper = f64::INFINITY;
    for _ in 0..MAX_POWER_STEPS {
        let y = &block * &x + &x * SPECTRAL_SHIFT;
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..k {
            let r = y[i] / x[i];
            lo = lo.min(r);
            hi = hi.max(r);
        }
        lower = lower.max(lo - SPECTRAL_SHIFT);
        upper = upper.min(hi - SPECTRAL_SHIFT);
        if upper - lower <= BRACKET_TOL * upper.max(1.0) {
            break;
        }
        let scale = y.max();
        x = y / scale;
    }
    SpectralBracket {
        lower: lower.max(0.0),
        upper: upper.max(lower.max(0.0)),
    }
}

/// `m^t` by repeated squaring.
pub fn matrix_power(m: &DMatrix<f64>, mut t: u32) -> DMatrix<f64> {
    let n = m.nrows();
    let mut result = DMatrix::identity(n, n);
    let mut base = m.clone();
    while t > 0 {
        if t & 1 == 1 {
            result = &result * &base;
        }
        t >>= 1;
        if t > 0 {
            base = &base * &base;
        }
    }
    result
}

/// Solves `(I - a) x = b` by LU with partial pivoting. `None` when the
/// system is singular or the solution is not finite.
pub fn solve_identity_minus(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    if n == 0 {
        return Some(DMatrix::zeros(0, b.ncols()));
    }
    let lhs = DMatrix::identity(n, n) - a;
    let x = lhs.lu().solve(b)?;
    x.iter().all(|v| v.is_finite()).then_some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_block_radius() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 0.0]);
        let r = spectral_radius(&m);
        assert!((r.estimate() - 0.5).abs() < 1e-12, "{r:?}");
        assert!(r.lower <= 0.5 + 1e-15 && r.upper >= 0.5 - 1e-15);
    }

    #[test]
    fn unit_permutation_is_not_below_one() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let r = spectral_radius(&m);
        assert!(!r.below_one(SPECTRAL_MARGIN));
        assert!((r.estimate() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reducible_jordan_like_matrix() {
        // Upper triangular with equal diagonal: plain power iteration would
        // converge only like 1/k here.
        let m = DMatrix::from_row_slice(2, 2, &[0.9, 1.0, 0.0, 0.9]);
        let r = spectral_radius(&m);
        assert!((r.estimate() - 0.9).abs() < 1e-12);
    }

    #[test]
    fn nilpotent_matrix_has_zero_radius() {
        let m = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0]);
        assert_eq!(spectral_radius(&m).upper, 0.0);
    }

    #[test]
    fn radius_matches_characteristic_root() {
        // eigenvalues of [[1,2],[3,1]] are 1 +- sqrt(6)
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 1.0]);
        let r = spectral_radius(&m);
        assert!((r.estimate() - (1.0 + 6f64.sqrt())).abs() < 1e-11);
    }

    #[test]
    fn power_by_squaring() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        assert_eq!(matrix_power(&m, 5), DMatrix::from_row_slice(2, 2, &[1.0, 5.0, 0.0, 1.0]));
        assert_eq!(matrix_power(&m, 0), DMatrix::identity(2, 2));
    }

    #[test]
    fn singular_system_detected() {
        let a = DMatrix::from_row_slice(1, 1, &[1.0]);
        let b = DMatrix::from_row_slice(1, 1, &[1.0]);
        assert!(solve_identity_minus(&a, &b).is_none());
        let a = DMatrix::from_row_slice(1, 1, &[0.5]);
        assert_eq!(solve_identity_minus(&a, &b).unwrap()[(0, 0)], 2.0);
    }
}
