//! Weighted f-means of positive matrices.
//!
//! For a positive matrix `X` with spectral projections `P_j` and a
//! normalized weight `G`, the weighted f-mean is `f⁻¹(tr G f(X))`, which is
//! the classical weighted f-mean of the eigenvalues with probabilities
//! `p_j = tr G P_j`. The family used throughout is `f(x) = x^s` for
//! `s ∈ [-1, 1] \ {0}` and `f = ln` at `s = 0`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermitian::{c, Domain, HermitianMatrix, PSD_TOL};

/// The scalar function selected by the exponent `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeanFunction {
    Power(f64),
    Log,
}

impl MeanFunction {
    pub fn from_exponent(s: f64) -> Self {
        if s == 0.0 {
            MeanFunction::Log
        } else {
            MeanFunction::Power(s)
        }
    }

    pub fn exponent(self) -> f64 {
        match self {
            MeanFunction::Power(s) => s,
            MeanFunction::Log => 0.0,
        }
    }

    pub fn eval(self, x: f64) -> f64 {
        match self {
            MeanFunction::Power(1.0) => x,
            MeanFunction::Power(-1.0) => 1.0 / x,
            MeanFunction::Power(s) => x.powf(s),
            MeanFunction::Log => x.ln(),
        }
    }

    pub fn inverse(self, y: f64) -> f64 {
        match self {
            MeanFunction::Power(1.0) => y,
            MeanFunction::Power(-1.0) => 1.0 / y,
            MeanFunction::Power(s) => y.powf(1.0 / s),
            MeanFunction::Log => y.exp(),
        }
    }

    /// Spectral domain: `s ≤ 0` needs strictly positive eigenvalues.
    pub fn domain(self) -> Domain {
        match self {
            MeanFunction::Power(s) if s > 0.0 => Domain::NonNegative,
            _ => Domain::Positive,
        }
    }

    pub fn name(self) -> String {
        match self {
            MeanFunction::Power(s) => format!("x^{s}"),
            MeanFunction::Log => "ln".to_string(),
        }
    }

    /// Operator monotone for `s ∈ [0, 1]`, anti-monotone for `s < 0`.
    pub fn is_monotone(self) -> bool {
        self.exponent() >= 0.0
    }
}

/// Real symmetric PSD weight with unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    m: DMatrix<f64>,
    renormalized: bool,
}

impl WeightMatrix {
    /// Validates symmetry and positivity. A trace other than one is divided
    /// out and flagged rather than rejected.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        if n == 0 || m.ncols() != n {
            return Err(Error::invalid(
                "weight matrix",
                "must be square and non-empty",
            ));
        }
        let scale = m.iter().fold(1.0_f64, |a, x| a.max(x.abs()));
        let asym = (&m - m.transpose()).abs().max();
        if asym > 1e-12 * scale {
            return Err(Error::invalid(
                "weight matrix",
                format!("not symmetric (deviation {asym:e})"),
            ));
        }
        let sym = (&m + m.transpose()) * 0.5;
        let trace = sym.trace();
        if !(trace > 0.0) || !trace.is_finite() {
            return Err(Error::invalid(
                "weight matrix",
                format!("trace must be positive, got {trace}"),
            ));
        }
        let normalized = sym / trace;
        let min = HermitianMatrix::from_real(&normalized)?.min_eigenvalue();
        if min < -1e-10 {
            return Err(Error::invalid(
                "weight matrix",
                format!("not positive semidefinite (min eigenvalue {min:e})"),
            ));
        }
        let renormalized = (trace - 1.0).abs() > 1e-10;
        if renormalized {
            log::warn!("weight matrix had trace {trace}; normalized to unit trace");
        }
        Ok(WeightMatrix {
            m: normalized,
            renormalized,
        })
    }

    /// `I/n`.
    pub fn uniform(n: usize) -> Self {
        WeightMatrix {
            m: DMatrix::identity(n, n) / n as f64,
            renormalized: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    /// True when the input trace was not one and has been divided out.
    pub fn was_renormalized(&self) -> bool {
        self.renormalized
    }

    pub fn to_hermitian(&self) -> HermitianMatrix {
        HermitianMatrix::symmetrized(self.m.map(|x| c(x, 0.0)))
    }

    /// PSD square root, real symmetric.
    pub fn sqrt(&self) -> DMatrix<f64> {
        self.to_hermitian()
            .eig()
            .map(|x| x.max(0.0).sqrt())
            .real_part()
    }

    /// `tr G A` for Hermitian `A`; the imaginary part drops out because
    /// `G` is real symmetric and `Im A` antisymmetric.
    pub fn trace_with(&self, a: &HermitianMatrix) -> f64 {
        self.m.component_mul(&a.real_part()).sum()
    }

    /// `p_j = ⟨v_j|G|v_j⟩` for each column of `vectors`.
    pub fn probabilities(&self, vectors: &crate::hermitian::CMatrix) -> Vec<f64> {
        let g = self.m.map(|x| c(x, 0.0));
        (0..vectors.ncols())
            .map(|j| {
                let v = vectors.column(j);
                (v.adjoint() * &g * v)[(0, 0)].re
            })
            .collect()
    }
}

/// Exponent `s ∈ [-1, 1]` together with a weight.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanSpec {
    s: f64,
    weight: WeightMatrix,
}

impl MeanSpec {
    pub fn new(s: f64, weight: WeightMatrix) -> Result<Self> {
        if !(-1.0..=1.0).contains(&s) {
            return Err(Error::invalid(
                "mean exponent s",
                format!("{s} is outside [-1, 1]"),
            ));
        }
        Ok(MeanSpec { s, weight })
    }

    pub fn uniform(s: f64, n: usize) -> Result<Self> {
        Self::new(s, WeightMatrix::uniform(n))
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn weight(&self) -> &WeightMatrix {
        &self.weight
    }

    pub fn function(&self) -> MeanFunction {
        MeanFunction::from_exponent(self.s)
    }

    /// Same weight, exponent `-s`.
    pub fn negated(&self) -> Self {
        MeanSpec {
            s: -self.s,
            weight: self.weight.clone(),
        }
    }
}

/// JSON form: `{"s": real, "weight": matrix-JSON | "uniform"}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MeanSpecJson {
    pub s: f64,
    #[serde(default)]
    pub weight: WeightJson,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(untagged)]
pub enum WeightJson {
    #[default]
    #[serde(with = "uniform_tag")]
    Uniform,
    Matrix(crate::hermitian::MatrixJson),
}

mod uniform_tag {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("uniform")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        let tag = String::deserialize(d)?;
        if tag == "uniform" {
            Ok(())
        } else {
            Err(serde::de::Error::custom(format!(
                "weight must be \"uniform\" or a matrix, got \"{tag}\""
            )))
        }
    }
}

impl WeightJson {
    pub fn resolve(&self, dim: usize) -> Result<WeightMatrix> {
        match self {
            WeightJson::Uniform => Ok(WeightMatrix::uniform(dim)),
            WeightJson::Matrix(j) => {
                let m = j.to_complex()?;
                if m.iter().any(|z| z.im != 0.0) {
                    return Err(Error::invalid("weight matrix", "must be real"));
                }
                let w = WeightMatrix::new(m.map(|z| z.re))?;
                if w.dim() != dim {
                    return Err(Error::dims("weight matrix", dim, w.dim()));
                }
                Ok(w)
            }
        }
    }
}

impl MeanSpecJson {
    pub fn resolve(&self, dim: usize) -> Result<MeanSpec> {
        MeanSpec::new(self.s, self.weight.resolve(dim)?)
    }
}

fn check_dim(x: &HermitianMatrix, spec: &MeanSpec) -> Result<()> {
    if x.dim() != spec.weight.dim() {
        return Err(Error::dims("weighted f-mean", spec.weight.dim(), x.dim()));
    }
    Ok(())
}

/// `f⁻¹(Σ_j p_j f(x_j))`, the classical weighted f-mean.
pub fn classical_mean(values: &[f64], probs: &[f64], f: MeanFunction) -> Result<f64> {
    if values.len() != probs.len() {
        return Err(Error::dims("classical mean", values.len(), probs.len()));
    }
    let domain = f.domain();
    let mut acc = 0.0;
    for (&x, &p) in values.iter().zip(probs) {
        let x = match domain {
            Domain::Positive if x <= crate::hermitian::ZERO_EIGENVALUE => {
                return Err(Error::OutOfDomain {
                    what: "matrix".into(),
                    function: f.name(),
                    eigenvalue: x,
                })
            }
            Domain::NonNegative if x < -PSD_TOL => {
                return Err(Error::OutOfDomain {
                    what: "matrix".into(),
                    function: f.name(),
                    eigenvalue: x,
                })
            }
            _ => x.max(0.0),
        };
        acc += p * f.eval(x);
    }
    Ok(f.inverse(acc))
}

/// Weighted f-mean `M_{s,G}(X) = f⁻¹(tr G f(X))`.
pub fn weighted_f_mean(x: &HermitianMatrix, spec: &MeanSpec) -> Result<f64> {
    check_dim(x, spec)?;
    let e = x.eig();
    let probs = spec.weight.probabilities(&e.vectors);
    classical_mean(&e.values, &probs, spec.function())
}

/// `1 / M_{s,G}(X⁻¹)`, the mean of `X` under `f∘ζ` with `ζ(x) = 1/x`. For
/// the power family this is `M_{-s,G}(X)`.
pub fn reciprocal_mean(x: &HermitianMatrix, spec: &MeanSpec) -> Result<f64> {
    check_dim(x, spec)?;
    let inv = x.inverse()?;
    Ok(1.0 / weighted_f_mean(&inv, spec)?)
}
