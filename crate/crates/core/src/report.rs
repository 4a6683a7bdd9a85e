use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::kernels::{
    pd_witness_validate, witness_validate, DefinitenessKind, DefinitenessVerdict, KernelMatrix, WitnessVerdict,
};

/// Three-valued check outcome. `Inconclusive` means the finite sample could
/// not exercise the check (a needed point was missing), not that it failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Fail,
    Inconclusive,
}

impl Outcome {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Outcome::Pass
    }

    /// Worst of two outcomes: fail beats inconclusive beats pass.
    pub fn and(self, other: Outcome) -> Outcome {
        use Outcome::*;
        match (self, other) {
            (Fail, _) | (_, Fail) => Fail,
            (Inconclusive, _) | (_, Inconclusive) => Inconclusive,
            _ => Pass,
        }
    }
}

/// A definiteness failure packaged with the kernel it refutes, so that it can
/// be re-checked without re-running anything.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub label: String,
    pub kind: DefinitenessKind,
    pub kernel: KernelMatrix,
    pub vector: Vec<f64>,
    pub tolerance: f64,
}

impl Certificate {
    /// `None` when the verdict passed or carries no vector.
    pub fn from_verdict(label: impl Into<String>, kernel: &KernelMatrix, verdict: &DefinitenessVerdict) -> Option<Self> {
        let vector = verdict.certificate.clone()?;
        Some(Self {
            label: label.into(),
            kind: verdict.kind,
            kernel: kernel.clone(),
            vector,
            tolerance: verdict.tolerance,
        })
    }

    /// Independent re-check of the stored vector against the stored kernel.
    pub fn validate(&self) -> Result<WitnessVerdict> {
        match self.kind {
            DefinitenessKind::Nd => witness_validate(&self.kernel, &self.vector, self.tolerance),
            DefinitenessKind::Pd => pd_witness_validate(&self.kernel, &self.vector, self.tolerance),
        }
    }
}

/// Serializes `+∞` as the string `"inf"` so profiles stay valid JSON.
pub(crate) mod inf_marker {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Cell {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(values: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let cells: Vec<Cell> = values
            .iter()
            .map(|&v| if v == f64::INFINITY { Cell::Text("inf".into()) } else { Cell::Num(v) })
            .collect();
        cells.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let cells = Vec::<Cell>::deserialize(d)?;
        cells
            .into_iter()
            .map(|c| match c {
                Cell::Num(v) => Ok(v),
                Cell::Text(t) if t == "inf" => Ok(f64::INFINITY),
                Cell::Text(t) => Err(serde::de::Error::custom(format!("unexpected marker `{t}`"))),
            })
            .collect()
    }

    /// The same encoding for a single value.
    pub mod single {
        use super::Cell;
        use serde::{Deserialize, Deserializer, Serialize, Serializer};

        pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
            if *v == f64::INFINITY {
                Cell::Text("inf".into()).serialize(s)
            } else {
                Cell::Num(*v).serialize(s)
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
            match Cell::deserialize(d)? {
                Cell::Num(v) => Ok(v),
                Cell::Text(t) if t == "inf" => Ok(f64::INFINITY),
                Cell::Text(t) => Err(serde::de::Error::custom(format!("unexpected marker `{t}`"))),
            }
        }
    }

    pub fn format(v: f64) -> String {
        if v == f64::INFINITY {
            "inf".into()
        } else {
            format!("{v}")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outcome_combination() {
        assert_eq!(Outcome::Pass.and(Outcome::Inconclusive), Outcome::Inconclusive);
        assert_eq!(Outcome::Inconclusive.and(Outcome::Fail), Outcome::Fail);
        assert_eq!(Outcome::Pass.and(Outcome::Pass), Outcome::Pass);
    }

    #[test]
    fn certificate_roundtrip_revalidates() {
        let k = KernelMatrix::unlabeled(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let verdict = crate::kernels::is_positive_definite(&k, 1e-9).unwrap();
        let cert = Certificate::from_verdict("offdiag", &k, &verdict).unwrap();
        let back: Certificate = serde_json::from_str(&serde_json::to_string(&cert).unwrap()).unwrap();
        assert!(back.validate().unwrap().valid);
    }
}
