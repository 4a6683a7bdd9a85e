//! Failing definiteness tests come with a vector that anyone can re-check.

use coarsekit::kernels::{is_negative_definite, is_positive_definite, witness_validate, KernelMatrix};
use coarsekit::report::Certificate;

fn main() -> coarsekit::error::Result<()> {
    let off = KernelMatrix::unlabeled(&[vec![0.0, 1.0], vec![1.0, 0.0]])?;
    let pd = is_positive_definite(&off, 1e-9)?;
    println!("{pd}");
    if let Some(cert) = Certificate::from_verdict("offdiag", &off, &pd) {
        println!("certificate {:?} re-validates: {}", cert.vector, cert.validate()?.valid);
    }

    // −|i − j|² is not ND on three points
    let bad = KernelMatrix::unlabeled(&[vec![0.0, -1.0, -4.0], vec![-1.0, 0.0, -1.0], vec![-4.0, -1.0, 0.0]])?;
    let nd = is_negative_definite(&bad, 1e-9)?;
    println!("{nd}");
    if let Some(c) = &nd.certificate {
        let check = witness_validate(&bad, c, 1e-9)?;
        println!("Σc = {:e}, cᵀNc = {:.4}, valid {}", check.coefficient_sum, check.quadratic_form, check.valid);
    }

    // a vector that does not witness anything
    let check = witness_validate(&bad, &[1.0, 1.0, 1.0], 1e-9)?;
    println!("(1,1,1) valid: {}", check.valid);
    Ok(())
}
