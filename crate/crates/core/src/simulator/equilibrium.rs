use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Solves `t = a + beta·B·t + e` exactly.
pub fn equilibrium_solve(a: &[f64], e: &[f64], beta: f64, b: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = a.len();
    if e.len() != n || b.nrows() != n || b.ncols() != n {
        return Err(Error::Usage("equilibrium_solve: inconsistent dimensions".into()));
    }
    let system = DMatrix::identity(n, n) - b * beta;
    let rhs = DVector::from_iterator(n, a.iter().zip(e).map(|(x, y)| x + y));
    let lu = system.lu();
    let t = lu
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("I - beta·B is singular".into()))?;
    if t.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular("I - beta·B is numerically singular".into()));
    }
    Ok(t.iter().copied().collect())
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.complex_eigenvalues().iter().fold(0.0, |r, z| r.max(z.norm()))
}

/// Maximum absolute row sum, an upper bound on the spectral radius.
pub fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Probability limit of the naive OLS slope of one player's behaviour on the
/// other's in the symmetric two-player system.
///
/// Both players' composite shocks `α + ε` share one variance, so the ratio
/// `2β / (1 + β²)` does not depend on how it splits between `var_alpha` and
/// `var_eps`.
pub fn ols_plim_reflection(beta: f64, var_alpha: f64, var_eps: f64) -> Result<f64> {
    if beta.is_nan() || beta.abs() >= 1.0 {
        return Err(Error::Domain(format!("reflection plim requires |beta| < 1, got {beta}")));
    }
    if !(var_alpha >= 0.0 && var_eps >= 0.0) || var_alpha + var_eps <= 0.0 {
        return Err(Error::Domain("variances must be non-negative and not both zero".into()));
    }
    Ok(2.0 * beta / (1.0 + beta * beta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_hand_case() {
        let b = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let t = equilibrium_solve(&[0.0, 0.0], &[1.0, 0.0], 0.5, &b).unwrap();
        assert!((t[0] - 4.0 / 3.0).abs() < 1e-14);
        assert!((t[1] - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn zero_beta_is_identity() {
        let b = DMatrix::from_element(3, 3, 1.0);
        let t = equilibrium_solve(&[1.0, 2.0, 3.0], &[0.5, -0.5, 0.0], 0.0, &b).unwrap();
        assert_eq!(t, vec![1.5, 1.5, 3.0]);
    }

    #[test]
    fn singular_system() {
        let b = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(matches!(equilibrium_solve(&[0.0; 2], &[1.0, 0.0], 1.0, &b), Err(Error::Singular(_))));
    }

    #[test]
    fn plim_values() {
        assert_eq!(ols_plim_reflection(0.0, 1.0, 1.0).unwrap(), 0.0);
        assert!((ols_plim_reflection(0.5, 1.0, 1.0).unwrap() - 0.8).abs() < 1e-15);
        let near = ols_plim_reflection(0.99, 1.0, 1.0).unwrap();
        assert!((near - 2.0 * 0.99 / 1.9801).abs() < 1e-15);
        assert!((near - 0.99995).abs() < 1e-3);
        assert!(matches!(ols_plim_reflection(1.0, 1.0, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn radius_of_swap() {
        let b = DMatrix::from_row_slice(2, 2, &[0.0, 1.5, 1.5, 0.0]);
        assert!((spectral_radius(&b) - 1.5).abs() < 1e-12);
        assert_eq!(inf_norm(&b), 1.5);
    }
}
