use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::KernelMatrix;
use crate::error::{Error, Result};
use crate::spaces::{sub, PointSet, QuasiNormedSpace};

/// Tabulated even function `f` on a negation-closed support containing 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantFunctionTable {
    support: PointSet,
    values: Vec<f64>,
}

impl InvariantFunctionTable {
    pub fn new(support: PointSet, values: Vec<f64>) -> Result<Self> {
        if values.len() != support.len() {
            return Err(Error::InvalidPointSet(format!(
                "{} values for {} support points",
                values.len(),
                support.len()
            )));
        }
        let origin = vec![0.0; support.space().dim];
        if !support.contains(&origin) {
            return Err(Error::InvalidPointSet("function support must contain the origin".into()));
        }
        for (i, x) in support.points().iter().enumerate() {
            if !values[i].is_finite() {
                return Err(Error::InvalidPointSet(format!("f({}) is not finite", support.label(i))));
            }
            let neg: Vec<f64> = x.iter().map(|v| -v).collect();
            let j = support.position(&neg).ok_or_else(|| {
                Error::InvalidPointSet(format!("support is not closed under negation at `{}`", support.label(i)))
            })?;
            if values[j] != values[i] {
                return Err(Error::InvalidPointSet(format!(
                    "f is not even at `{}`: {} vs {}",
                    support.label(i),
                    values[i],
                    values[j]
                )));
            }
        }
        Ok(Self { support, values })
    }

    pub fn from_fn(support: PointSet, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = support.points().iter().map(|x| f(x)).collect();
        Self::new(support, values)
    }

    pub fn space(&self) -> &QuasiNormedSpace {
        self.support.space()
    }

    pub fn support(&self) -> &PointSet {
        &self.support
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn value_at(&self, x: &[f64]) -> Option<f64> {
        self.support.position(x).map(|i| self.values[i])
    }

    pub fn value_of_label(&self, label: &str) -> Result<f64> {
        Ok(self.values[self.support.require_label(label)?])
    }

    pub fn origin_value(&self) -> f64 {
        self.value_at(&vec![0.0; self.space().dim]).expect("origin is in the support")
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
    }

    /// Pointwise map on the same support.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.support.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    /// `|f(x)| ≤ f(0)` everywhere: necessary for a positive definite function.
    pub fn pd_bound_holds(&self, tol: f64) -> bool {
        let f0 = self.origin_value();
        self.values.iter().all(|v| v.abs() <= f0 + tol)
    }

    /// `f(x) ≥ f(0)` everywhere: necessary for a negative definite function.
    pub fn nd_sign_holds(&self, tol: f64) -> bool {
        let f0 = self.origin_value();
        self.values.iter().all(|&v| v >= f0 - tol)
    }
}

/// `F_ij = f(x_i − x_j)`.
pub fn kernel_from_function(f: &InvariantFunctionTable, points: &PointSet) -> Result<KernelMatrix> {
    if points.space().dim != f.space().dim {
        return Err(Error::DimensionMismatch { expected: f.space().dim, got: points.space().dim });
    }
    let n = points.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let d = sub(points.point(i), points.point(j));
            let v = f
                .value_at(&d)
                .ok_or_else(|| Error::MissingDifference(points.label(i).into(), points.label(j).into()))?;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    KernelMatrix::new(points.labels().to_vec(), m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionTransform {
    /// `1 − f`, taking a normalized PD function to an ND one.
    OneMinus,
    /// `e^{−f}`, taking an ND function vanishing at 0 to a PD one.
    ExpNeg,
}

#[derive(Debug, Clone)]
pub struct TransformedFunction {
    pub table: InvariantFunctionTable,
    /// Set when `f(0)` is not the value the transform expects.
    pub warning: Option<String>,
}

pub fn function_transforms(f: &InvariantFunctionTable, op: FunctionTransform) -> Result<TransformedFunction> {
    let f0 = f.origin_value();
    let (expected, table) = match op {
        FunctionTransform::OneMinus => (1.0, f.map(|v| 1.0 - v)?),
        FunctionTransform::ExpNeg => (0.0, f.map(|v| (-v).exp())?),
    };
    let warning = (f0 != expected).then(|| format!("{op:?} expects f(0) = {expected}, found {f0}"));
    Ok(TransformedFunction { table, warning })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::sample_grid;

    fn line_grid(r: u32) -> PointSet {
        sample_grid(&QuasiNormedSpace::lq(1, 1.0).unwrap(), r, 1.0).unwrap()
    }

    fn pts(xs: &[f64]) -> PointSet {
        PointSet::from_points(QuasiNormedSpace::lq(1, 1.0).unwrap(), xs.iter().map(|&x| vec![x]).collect()).unwrap()
    }

    #[test]
    fn kernel_from_function_examples() {
        let sq = InvariantFunctionTable::from_fn(line_grid(2), |x| x[0] * x[0]).unwrap();
        assert_eq!(kernel_from_function(&sq, &pts(&[0.0, 1.0])).unwrap().rows(), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);

        let one = InvariantFunctionTable::from_fn(line_grid(3), |_| 1.0).unwrap();
        let k = kernel_from_function(&one, &pts(&[-1.0, 0.0, 2.0])).unwrap();
        assert!(k.entries().iter().all(|&v| v == 1.0));

        let gauss = InvariantFunctionTable::from_fn(line_grid(2), |x| (-x[0] * x[0]).exp()).unwrap();
        let k = kernel_from_function(&gauss, &pts(&[0.0, 1.0, 2.0])).unwrap();
        let (e1, e4) = ((-1.0f64).exp(), (-4.0f64).exp());
        assert_eq!(k.rows(), vec![vec![1.0, e1, e4], vec![e1, 1.0, e1], vec![e4, e1, 1.0]]);
    }

    #[test]
    fn missing_difference_names_the_pair() {
        let sq = InvariantFunctionTable::from_fn(line_grid(1), |x| x[0] * x[0]).unwrap();
        match kernel_from_function(&sq, &pts(&[0.0, 2.0])) {
            Err(Error::MissingDifference(a, b)) => assert_eq!((a.as_str(), b.as_str()), ("0", "2")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn table_invariants_enforced() {
        let half = pts(&[0.0, 1.0]);
        assert!(InvariantFunctionTable::from_fn(half, |_| 0.0).is_err());
        assert!(InvariantFunctionTable::from_fn(line_grid(1), |x| x[0]).is_err());
        assert!(InvariantFunctionTable::from_fn(pts(&[-1.0, 1.0]), |_| 0.0).is_err());
    }

    #[test]
    fn transform_examples() {
        let sq = InvariantFunctionTable::from_fn(line_grid(2), |x| x[0] * x[0]).unwrap();
        let h = function_transforms(&sq, FunctionTransform::ExpNeg).unwrap();
        assert!(h.warning.is_none());
        assert_eq!(h.table.value_at(&[1.0]), Some((-1.0f64).exp()));
        let back = function_transforms(&h.table, FunctionTransform::OneMinus).unwrap();
        assert!(back.warning.is_none());
        assert_eq!(back.table.origin_value(), 0.0);

        let one = InvariantFunctionTable::from_fn(line_grid(2), |_| 1.0).unwrap();
        let z = function_transforms(&one, FunctionTransform::OneMinus).unwrap();
        assert!(z.table.values().iter().all(|&v| v == 0.0));

        let w = function_transforms(&one, FunctionTransform::ExpNeg).unwrap();
        assert!(w.warning.is_some());
    }
}
