use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::KernelMatrix;
use crate::error::{Error, Result};
use crate::linalg::{helmert_basis, quadratic_form, symmetric_eigen};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DefinitenessKind {
    #[serde(rename = "PD")]
    Pd,
    #[serde(rename = "ND")]
    Nd,
}

/// Outcome of a definiteness test.
///
/// For `Pd`, `extremal_eigenvalue` is `λ_min(K)`. For `Nd` it is the largest
/// eigenvalue of `N` compressed to the mean-zero subspace; this is `≤ tol`
/// exactly when `λ_max(PNP) ≤ tol` with `P = I − 11ᵀ/n`, and unlike
/// `λ_max(PNP)` it is not pinned at zero by the constant direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefinitenessVerdict {
    pub kind: DefinitenessKind,
    pub passed: bool,
    pub extremal_eigenvalue: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub certificate: Option<Vec<f64>>,
}

impl std::fmt::Display for DefinitenessVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match self.kind {
            DefinitenessKind::Pd => "PD",
            DefinitenessKind::Nd => "ND",
        };
        write!(
            f,
            "{kind} {} (extremal eigenvalue {:e}, tol {:e})",
            if self.passed { "passed" } else { "failed" },
            self.extremal_eigenvalue,
            self.tolerance
        )
    }
}

/// `1e-9` scaled by the largest absolute entry.
pub fn default_tolerance(k: &KernelMatrix) -> f64 {
    let scale = k.max_abs();
    if scale > 0.0 {
        1e-9 * scale
    } else {
        1e-9
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::Precondition(format!("tolerance must be positive, got {tol}")));
    }
    Ok(())
}

fn unit(v: DVector<f64>) -> Vec<f64> {
    let norm = v.norm();
    v.iter().map(|x| x / norm).collect()
}

/// Passes iff `λ_min(K) ≥ −tol`.
///
/// A failure is only reported when the eigenvector of `λ_min` itself has
/// quadratic form below `−tol`, so every emitted certificate is sound.
pub fn is_positive_definite(k: &KernelMatrix, tol: f64) -> Result<DefinitenessVerdict> {
    check_tol(tol)?;
    let mut verdict = DefinitenessVerdict {
        kind: DefinitenessKind::Pd,
        passed: true,
        extremal_eigenvalue: f64::INFINITY,
        tolerance: tol,
        certificate: None,
    };
    if k.is_empty() {
        return Ok(verdict);
    }
    let (lambda, v) = symmetric_eigen(k.entries())?.min();
    verdict.extremal_eigenvalue = lambda;
    if lambda < -tol {
        let c = unit(v);
        if quadratic_form(k.entries(), &c) < -tol {
            verdict.passed = false;
            verdict.certificate = Some(c);
        }
    }
    Ok(verdict)
}

/// Passes iff `λ_max(PNP) ≤ tol`; on failure the certificate is a unit
/// mean-zero vector `c` with `cᵀNc > tol`.
pub fn is_negative_definite(n: &KernelMatrix, tol: f64) -> Result<DefinitenessVerdict> {
    check_tol(tol)?;
    let size = n.len();
    let mut verdict = DefinitenessVerdict {
        kind: DefinitenessKind::Nd,
        passed: true,
        extremal_eigenvalue: 0.0,
        tolerance: tol,
        certificate: None,
    };
    // no nonzero mean-zero vector exists in dimension 1
    if size <= 1 {
        return Ok(verdict);
    }
    let basis = helmert_basis(size);
    let compressed = basis.transpose() * n.entries() * &basis;
    // symmetrise away rounding in the triple product
    let compressed = (&compressed + compressed.transpose()) * 0.5;
    let (lambda, w) = symmetric_eigen(&compressed)?.max();
    verdict.extremal_eigenvalue = lambda;
    if lambda > tol {
        let mut c = &basis * w;
        let mean = c.mean();
        c.add_scalar_mut(-mean);
        let c = unit(c);
        if quadratic_form(n.entries(), &c) > tol {
            verdict.passed = false;
            verdict.certificate = Some(c);
        }
    }
    Ok(verdict)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessVerdict {
    pub kind: DefinitenessKind,
    /// True when `c` really witnesses a definiteness violation.
    pub valid: bool,
    pub coefficient_sum: f64,
    pub quadratic_form: f64,
    pub tolerance: f64,
}

fn check_len(k: &KernelMatrix, c: &[f64]) -> Result<()> {
    if c.len() != k.len() {
        return Err(Error::DimensionMismatch { expected: k.len(), got: c.len() });
    }
    Ok(())
}

/// Independent ND-violation check: valid iff `|Σc_i| ≤ 1e-12` and `cᵀNc > tol`.
pub fn witness_validate(n: &KernelMatrix, c: &[f64], tol: f64) -> Result<WitnessVerdict> {
    check_len(n, c)?;
    let sum: f64 = c.iter().sum();
    let q = quadratic_form(n.entries(), c);
    Ok(WitnessVerdict {
        kind: DefinitenessKind::Nd,
        valid: sum.abs() <= 1e-12 && q > tol,
        coefficient_sum: sum,
        quadratic_form: q,
        tolerance: tol,
    })
}

/// PD-violation check: valid iff `cᵀKc < −tol`.
pub fn pd_witness_validate(k: &KernelMatrix, c: &[f64], tol: f64) -> Result<WitnessVerdict> {
    check_len(k, c)?;
    let q = quadratic_form(k.entries(), c);
    Ok(WitnessVerdict {
        kind: DefinitenessKind::Pd,
        valid: q < -tol,
        coefficient_sum: c.iter().sum(),
        quadratic_form: q,
        tolerance: tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn km(rows: &[&[f64]]) -> KernelMatrix {
        KernelMatrix::unlabeled(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn pd_examples() {
        let id = km(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        let v = is_positive_definite(&id, 1e-9).unwrap();
        assert!(v.passed);
        assert!((v.extremal_eigenvalue - 1.0).abs() < 1e-15);

        let e = (-1.0f64).exp();
        let v = is_positive_definite(&km(&[&[1.0, e], &[e, 1.0]]), 1e-9).unwrap();
        assert!(v.passed);
        assert!((v.extremal_eigenvalue - (1.0 - e)).abs() < 1e-15);

        let v = is_positive_definite(&km(&[&[0.0, 1.0], &[1.0, 0.0]]), 1e-9).unwrap();
        assert!(!v.passed);
        assert!((v.extremal_eigenvalue + 1.0).abs() < 1e-15);
        let c = v.certificate.unwrap();
        assert!((c[0] + c[1]).abs() < 1e-15);
        assert!((c[0].abs() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn nd_examples() {
        let line = km(&[&[0.0, 1.0, 2.0], &[1.0, 0.0, 1.0], &[2.0, 1.0, 0.0]]);
        assert!(is_negative_definite(&line, 1e-9).unwrap().passed);
        // the quadratic form of (1,−2,1) expands to 2·(1·(−2)·1 + 1·1·2 + (−2)·1·1) = −4
        assert_eq!(quadratic_form(line.entries(), &[1.0, -2.0, 1.0]), -4.0);

        assert!(is_negative_definite(&km(&[&[0.0, 2.0], &[2.0, 0.0]]), 1e-9).unwrap().passed);
        assert!(is_negative_definite(&km(&[&[0.0, 5.0], &[5.0, 0.0]]), 1e-9).unwrap().passed);
    }

    #[test]
    fn nd_failure_carries_mean_zero_certificate() {
        let bad = km(&[&[0.0, -1.0], &[-1.0, 0.0]]);
        let v = is_negative_definite(&bad, 1e-9).unwrap();
        assert!(!v.passed);
        assert!((v.extremal_eigenvalue - 1.0).abs() < 1e-14);
        let c = v.certificate.unwrap();
        let w = witness_validate(&bad, &c, 1e-9).unwrap();
        assert!(w.valid, "{w:?}");
    }

    #[test]
    fn degenerate_sizes() {
        let one = km(&[&[-3.0]]);
        assert!(is_negative_definite(&one, 1e-9).unwrap().passed);
        let v = is_positive_definite(&one, 1e-9).unwrap();
        assert!(!v.passed);
        assert_eq!(v.certificate, Some(vec![1.0]));
        assert!(is_positive_definite(&km(&[&[-1e-12]]), 1e-9).unwrap().passed);
    }

    #[test]
    fn tolerance_must_be_positive() {
        let k = km(&[&[1.0]]);
        assert!(is_positive_definite(&k, 0.0).is_err());
        assert!(is_negative_definite(&k, -1.0).is_err());
    }

    #[test]
    fn witness_examples() {
        let line = km(&[&[0.0, 1.0, 2.0], &[1.0, 0.0, 1.0], &[2.0, 1.0, 0.0]]);
        let w = witness_validate(&line, &[1.0, -2.0, 1.0], 1e-9).unwrap();
        assert!(!w.valid);
        assert_eq!(w.quadratic_form, -4.0);

        let bad = km(&[&[0.0, -1.0], &[-1.0, 0.0]]);
        let w = witness_validate(&bad, &[1.0, -1.0], 1e-9).unwrap();
        assert!(w.valid);
        assert_eq!(w.quadratic_form, 2.0);

        assert!(!witness_validate(&bad, &[1.0, 1.0], 1e-9).unwrap().valid);
        assert!(witness_validate(&bad, &[1.0], 1e-9).is_err());
    }
}
