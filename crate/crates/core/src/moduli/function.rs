use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{
    default_tolerance, function_transforms, is_negative_definite, DefinitenessVerdict, FunctionTransform,
    InvariantFunctionTable, KernelMatrix,
};
use crate::report::{inf_marker, Outcome};
use crate::spaces::PointSet;

/// Min of `value(i)` over support points with `‖x‖^p ≥ t`, with its index.
fn restricted_min(f: &InvariantFunctionTable, t: f64, value: impl Fn(f64) -> f64) -> (f64, Option<usize>) {
    let support = f.support();
    let mut best = f64::INFINITY;
    let mut arg = None;
    for i in 0..support.len() {
        if support.p_norm(i) >= t {
            let v = value(f.value(i));
            if v < best || arg.is_none() {
                best = v;
                arg = Some(i);
            }
        }
    }
    (best, arg)
}

/// `ĝ_f(t) = min {1 − f(x) : ‖x‖^p ≥ t}` per threshold, `+∞` when nothing qualifies.
pub fn g_f_modulus(f: &InvariantFunctionTable, thresholds: &[f64]) -> Vec<f64> {
    thresholds.iter().map(|&t| restricted_min(f, t, |v| 1.0 - v).0).collect()
}

/// `ρ̂_f(t) = min {f(x) : ‖x‖^p ≥ t}` per threshold, `+∞` when nothing qualifies.
pub fn rho_f_modulus(f: &InvariantFunctionTable, thresholds: &[f64]) -> Vec<f64> {
    thresholds.iter().map(|&t| restricted_min(f, t, |v| v).0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub k: u32,
    pub f_kx: f64,
    /// `k²·f(x)`
    pub bound: f64,
    /// `(Σ_{i≤k} √N(ix, (i−1)x))²`, valid for any ND kernel with zero diagonal.
    pub chain_bound: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubadditivityRow {
    pub y: String,
    /// `N(x, −y)`, which equals `f(x + y)` for a translation-invariant kernel.
    pub lhs: f64,
    /// `(√N(x, 0) + √N(0, −y))²`
    pub rhs: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub x: String,
    pub tolerance: f64,
    pub nd_verdict: DefinitenessVerdict,
    /// `N(ix, (i−1)x) = N(x, 0)` along the chain, within tolerance.
    pub translation_invariant_on_chain: bool,
    pub rows: Vec<GrowthRow>,
    pub subadditivity: Vec<SubadditivityRow>,
    pub outcome: Outcome,
}

/// Checks `f(kx) ≤ k²·f(x)` for `k ≤ n`, reading `f(z)` as `N(z, 0)`.
///
/// `points` must be the kernel's point set (same labels, same order) and
/// contain `0, x, 2x, …, n·x`. A growth failure on a kernel that is not
/// translation invariant along the chain is reported as inconclusive, since
/// the inequality is a statement about functions.
pub fn growth_check(points: &PointSet, kernel: &KernelMatrix, x_label: &str, n: u32) -> Result<GrowthReport> {
    if points.labels() != kernel.labels() {
        return Err(Error::Precondition("kernel labels must match the point set".into()));
    }
    if !kernel.has_zero_diagonal() {
        return Err(Error::Precondition("growth check needs a zero-diagonal kernel".into()));
    }
    let xi = points.require_label(x_label)?;
    let x = points.point(xi).to_vec();
    let chain: Vec<usize> = (0..=n)
        .map(|k| {
            let kx: Vec<f64> = x.iter().map(|v| k as f64 * v).collect();
            points.position(&kx).ok_or_else(|| {
                Error::Precondition(format!("chain point {k}·x missing from the sample"))
            })
        })
        .collect::<Result<_>>()?;
    let origin = chain[0];
    let nd_verdict = is_negative_definite(kernel, default_tolerance(kernel))?;
    let tol = 1e-8 * kernel.max_abs();
    let fx = kernel.get(xi, origin);

    let translation_invariant_on_chain =
        (1..chain.len()).all(|i| (kernel.get(chain[i], chain[i - 1]) - fx).abs() <= tol);

    let mut rows = Vec::new();
    let mut link_sum = 0.0;
    for k in 1..=n {
        let kk = k as usize;
        link_sum += kernel.get(chain[kk], chain[kk - 1]).max(0.0).sqrt();
        let f_kx = kernel.get(chain[kk], origin);
        let bound = (k as f64) * (k as f64) * fx;
        rows.push(GrowthRow {
            k,
            f_kx,
            bound,
            chain_bound: link_sum * link_sum,
            passed: f_kx <= bound + tol,
        });
    }

    let mut subadditivity = Vec::new();
    for yi in 0..points.len() {
        let neg: Vec<f64> = points.point(yi).iter().map(|v| -v).collect();
        let Some(nyi) = points.position(&neg) else { continue };
        let lhs = kernel.get(xi, nyi);
        let root = kernel.get(xi, origin).max(0.0).sqrt() + kernel.get(origin, nyi).max(0.0).sqrt();
        let rhs = root * root;
        subadditivity.push(SubadditivityRow {
            y: points.label(yi).to_string(),
            lhs,
            rhs,
            passed: lhs <= rhs + tol,
        });
    }
    let growth_ok = rows.iter().all(|r| r.passed);
    let triangle_ok = subadditivity.iter().all(|r| r.passed);
    let outcome = if !triangle_ok {
        Outcome::Fail
    } else if growth_ok {
        Outcome::Pass
    } else if translation_invariant_on_chain {
        Outcome::Fail
    } else {
        Outcome::Inconclusive
    };
    Ok(GrowthReport {
        x: x_label.to_string(),
        tolerance: tol,
        nd_verdict,
        translation_invariant_on_chain,
        rows,
        subadditivity,
        outcome,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagationReport {
    /// `"rho"` for an ND table, `"g"` when the input was a PD table `h` and
    /// the check ran on `1 − h`.
    pub form: String,
    pub t: f64,
    pub s: f64,
    pub p: f64,
    #[serde(with = "inf_marker::single")]
    pub modulus_t: f64,
    #[serde(with = "inf_marker::single")]
    pub modulus_s: f64,
    /// `4·ρ̂(t)·(s/t)^{2/p}`
    #[serde(with = "inf_marker::single")]
    pub rhs: f64,
    pub witness: Option<String>,
    /// Labels of `x_w, 2x_w, …, n·x_w` found in the support.
    pub chain: Vec<String>,
    pub n: Option<u32>,
    /// `2(s/t)^{1/p}`; the proof guarantees `n` stays below it.
    pub n_limit: f64,
    pub growth_ok: Option<bool>,
    pub outcome: Outcome,
}

/// Checks `ρ̂_f(s) ≤ 4·ρ̂_f(t)·(s/t)^{2/p} + 1e-8` by walking the multiples of
/// the witness attaining `ρ̂_f(t)`.
pub fn propagation_check(f: &InvariantFunctionTable, t: f64, s: f64) -> Result<PropagationReport> {
    propagation_inner(f, t, s, "rho")
}

/// The same check for a PD table `h` with `h(0) = 1`, run on `1 − h` so the
/// reported moduli are `ĝ_h`.
pub fn propagation_check_positive(h: &InvariantFunctionTable, t: f64, s: f64) -> Result<PropagationReport> {
    let nd = function_transforms(h, FunctionTransform::OneMinus)?.table;
    propagation_inner(&nd, t, s, "g")
}

fn propagation_inner(f: &InvariantFunctionTable, t: f64, s: f64, form: &str) -> Result<PropagationReport> {
    if !(t > 0.0 && t < s) {
        return Err(Error::Precondition(format!("need 0 < t < s, got t = {t}, s = {s}")));
    }
    let p = f.space().p;
    let support = f.support();
    let (modulus_t, witness) = restricted_min(f, t, |v| v);
    let (modulus_s, _) = restricted_min(f, s, |v| v);
    let ratio = s / t;
    let rhs = 4.0 * modulus_t * ratio.powf(2.0 / p);
    let n_limit = 2.0 * ratio.powf(1.0 / p);
    let mut report = PropagationReport {
        form: form.to_string(),
        t,
        s,
        p,
        modulus_t,
        modulus_s,
        rhs,
        witness: witness.map(|w| support.label(w).to_string()),
        chain: Vec::new(),
        n: None,
        n_limit,
        growth_ok: None,
        outcome: Outcome::Inconclusive,
    };
    let Some(w) = witness else { return Ok(report) };
    if modulus_s == f64::INFINITY {
        return Ok(report);
    }

    let xw = support.point(w).to_vec();
    let space = *support.space();
    // smallest n with ‖n·x_w‖^p ≥ s
    let cap = n_limit.ceil() as u32 + 1;
    let mut n_found = None;
    for k in 1..=cap {
        let kx: Vec<f64> = xw.iter().map(|v| k as f64 * v).collect();
        if space.p_norm(&kx)? >= s {
            n_found = Some(k);
            break;
        }
    }
    let Some(n) = n_found else { return Ok(report) };
    report.n = Some(n);

    let mut chain = Vec::new();
    for k in 1..=n {
        let kx: Vec<f64> = xw.iter().map(|v| k as f64 * v).collect();
        match support.position(&kx) {
            Some(i) => chain.push(i),
            None => {
                report.chain = chain.iter().map(|&i| support.label(i).to_string()).collect();
                return Ok(report);
            }
        }
    }
    report.chain = chain.iter().map(|&i| support.label(i).to_string()).collect();
    let f_w = f.value(w);
    let f_nw = f.value(*chain.last().unwrap());
    let nn = n as f64;
    report.growth_ok = Some(f_nw <= nn * nn * f_w + 1e-8 * f.max_value().abs().max(1.0));
    report.outcome = Outcome::from_bool(modulus_s <= rhs + 1e-8 && (n as f64) < n_limit);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::kernel_from_function;
    use crate::spaces::{sample_grid, QuasiNormedSpace};

    fn grid(r: u32, q: f64) -> PointSet {
        sample_grid(&QuasiNormedSpace::lq(1, q).unwrap(), r, 1.0).unwrap()
    }

    fn table(r: u32, f: impl Fn(f64) -> f64) -> InvariantFunctionTable {
        InvariantFunctionTable::from_fn(grid(r, 1.0), |x| f(x[0])).unwrap()
    }

    #[test]
    fn g_modulus_examples() {
        let gauss = table(3, |x| (-x * x).exp());
        // support {−3..3}: points with |x| ≥ 2 are ±2, ±3; min of 1 − e^{−x²} is at ±2
        assert_eq!(g_f_modulus(&gauss, &[2.0]), vec![1.0 - (-4.0f64).exp()]);
        assert_eq!(g_f_modulus(&table(3, |_| 1.0), &[0.5, 2.0]), vec![0.0, 0.0]);
        assert_eq!(g_f_modulus(&gauss, &[4.0]), vec![f64::INFINITY]);
    }

    #[test]
    fn rho_modulus_examples() {
        let sq = table(3, |x| x * x);
        assert_eq!(rho_f_modulus(&sq, &[2.0, 0.5]), vec![4.0, 1.0]);
        assert_eq!(rho_f_modulus(&table(3, |_| 0.0), &[1.0, 3.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn rho_of_one_minus_is_g() {
        let h = table(4, |x| (-0.3 * x * x).exp());
        let nd = function_transforms(&h, FunctionTransform::OneMinus).unwrap().table;
        let ts = [0.5, 1.0, 2.5, 4.0, 9.0];
        assert_eq!(rho_f_modulus(&nd, &ts), g_f_modulus(&h, &ts));
    }

    fn kernel_on(points: &PointSet, f: impl Fn(f64) -> f64) -> KernelMatrix {
        let d = points.differences();
        let tab = InvariantFunctionTable::from_fn(d, |x| f(x[0])).unwrap();
        kernel_from_function(&tab, points).unwrap()
    }

    #[test]
    fn growth_quadratic_is_tight() {
        let pts = grid(5, 1.0);
        let k = kernel_on(&pts, |x| x * x);
        let r = growth_check(&pts, &k, "1", 5).unwrap();
        assert_eq!(r.outcome, Outcome::Pass);
        for row in &r.rows {
            assert_eq!(row.f_kx, row.bound);
        }
    }

    #[test]
    fn growth_line_metric_is_strict() {
        let pts = grid(5, 1.0);
        let k = kernel_on(&pts, f64::abs);
        let r = growth_check(&pts, &k, "1", 5).unwrap();
        assert_eq!(r.outcome, Outcome::Pass);
        assert!(r.rows.iter().skip(1).all(|row| row.f_kx < row.bound));
    }

    #[test]
    fn growth_snowflaked_square() {
        let pts = grid(6, 1.0);
        let k = kernel_on(&pts, |x| (x * x).powf(0.5));
        assert_eq!(growth_check(&pts, &k, "2", 3).unwrap().outcome, Outcome::Pass);
    }

    #[test]
    fn growth_missing_chain_point() {
        let pts = grid(2, 1.0);
        let k = kernel_on(&pts, |x| x * x);
        assert!(growth_check(&pts, &k, "1", 3).is_err());
    }

    #[test]
    fn propagation_examples() {
        let sq = table(10, |x| x * x);
        let r = propagation_check(&sq, 1.0, 3.0).unwrap();
        assert_eq!((r.modulus_s, r.rhs), (9.0, 36.0));
        assert_eq!(r.outcome, Outcome::Pass);

        let zero = table(10, |_| 0.0);
        let r = propagation_check(&zero, 1.0, 3.0).unwrap();
        assert_eq!((r.modulus_s, r.rhs, r.outcome), (0.0, 0.0, Outcome::Pass));

        let abs = table(10, f64::abs);
        let r = propagation_check(&abs, 1.0, 4.0).unwrap();
        assert_eq!((r.modulus_s, r.rhs, r.outcome), (4.0, 64.0, Outcome::Pass));
        assert_eq!(r.n, Some(4));
    }

    #[test]
    fn propagation_short_support_is_inconclusive() {
        let sq = table(2, |x| x * x);
        let r = propagation_check(&sq, 1.0, 3.0).unwrap();
        assert_eq!(r.outcome, Outcome::Inconclusive);
        assert!(propagation_check(&sq, 2.0, 1.0).is_err());
    }

    #[test]
    fn propagation_positive_form() {
        let h = table(12, |x| (-0.1 * x * x).exp());
        let r = propagation_check_positive(&h, 1.0, 4.0).unwrap();
        assert_eq!(r.form, "g");
        assert_eq!(r.outcome, Outcome::Pass);
    }
}
