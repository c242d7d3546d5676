//! f-mean errors and the quantum Cramér-Rao bounds on them.
//!
//! * plain f-mean bound: `M_{s,G}(E) ≥ ν⁻¹ / M_{f∘ζ,G}(F) = ν⁻¹ f⁻¹(tr G f(F⁻¹))`
//! * refined bound for a Hermitian (RLD) QFI:
//!   `ν⁻¹ f⁻¹(tr G Re f(F⁻¹) + ‖√G Im f(F⁻¹) √G‖₁)`

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermitian::{matrix_geq, schatten1_norm_antisymmetric, HermitianMatrix};
use crate::mean::{weighted_f_mean, MeanFunction, MeanSpec, WeightMatrix};
use crate::qfi::{QfiKind, QfiMatrix};

/// Weighted f-mean of an error-covariance matrix.
pub fn fmean_error(e: &HermitianMatrix, spec: &MeanSpec) -> Result<f64> {
    weighted_f_mean(e, spec)
}

fn inverse_information(f: &QfiMatrix) -> Result<HermitianMatrix> {
    f.matrix().inverse().map_err(|_| {
        Error::DegenerateInformation(format!(
            "{:?} QFI matrix is singular (min eigenvalue {:e})",
            f.kind(),
            f.matrix().min_eigenvalue()
        ))
    })
}

fn check_nu(nu: u32) -> Result<f64> {
    if nu == 0 {
        return Err(Error::invalid("repetitions nu", "must be positive"));
    }
    Ok(f64::from(nu))
}

fn check_weight(f: &QfiMatrix, spec: &MeanSpec) -> Result<()> {
    if f.n_params() != spec.weight().dim() {
        return Err(Error::dims(
            "weight matrix",
            f.n_params(),
            spec.weight().dim(),
        ));
    }
    Ok(())
}

/// `ν⁻¹ / M_{f∘ζ,G}(F)`, which for the power family is `ν⁻¹ / M_{-s,G}(F)`.
pub fn fmean_qcrb(f: &QfiMatrix, spec: &MeanSpec, nu: u32) -> Result<f64> {
    let nu = check_nu(nu)?;
    check_weight(f, spec)?;
    let inv = inverse_information(f)?;
    Ok(weighted_f_mean(&inv, spec)? / nu)
}

/// The refined bound built from the imaginary part of `f(F⁻¹)`.
///
/// Evaluated as written for both monotone (`s ≥ 0`) and anti-monotone
/// (`s < 0`) `f`. For `s < 0` the norm term enters through a decreasing
/// `f⁻¹`, so the value never exceeds [`fmean_qcrb`] there.
pub fn refined_qcrb(f: &QfiMatrix, spec: &MeanSpec, nu: u32) -> Result<f64> {
    let nu = check_nu(nu)?;
    check_weight(f, spec)?;
    let func = spec.function();
    let inv = inverse_information(f)?;
    let f_inv = inv.apply(|x| func.eval(x), func.domain(), &func.name())?;
    let w = spec.weight();
    let re_term = w.trace_with(&f_inv);
    let sqrt_g = w.sqrt();
    let im = &sqrt_g * f_inv.imag_part() * &sqrt_g;
    let im_term = schatten1_norm_antisymmetric(&im);
    Ok(func.inverse(re_term + im_term) / nu)
}

/// `tr W F⁻¹` for a real symmetric PSD weight `W` of any trace.
pub fn weighted_scalar_bound(f: &QfiMatrix, w: &nalgebra::DMatrix<f64>) -> Result<f64> {
    if w.nrows() != f.n_params() || w.ncols() != f.n_params() {
        return Err(Error::dims("weight matrix", f.n_params(), w.nrows()));
    }
    let inv = inverse_information(f)?;
    Ok(w.component_mul(&inv.real_part()).sum())
}

/// Matrix bound `E ⪰ F⁻¹` within `tol`.
pub fn matrix_qcrb_holds(e: &HermitianMatrix, f: &QfiMatrix, tol: f64) -> Result<bool> {
    if e.dim() != f.n_params() {
        return Err(Error::dims("error covariance", f.n_params(), e.dim()));
    }
    matrix_geq(e, &inverse_information(f)?, tol)
}

/// Both sides of `tr A ≥ tr Re B + ‖Im B‖₁` for real symmetric `A ⪰ B`.
pub fn scalar_trace_lemma_check(
    a: &nalgebra::DMatrix<f64>,
    b: &HermitianMatrix,
) -> Result<(f64, f64)> {
    if a.nrows() != b.dim() || a.ncols() != b.dim() {
        return Err(Error::dims("trace lemma", b.dim(), a.nrows()));
    }
    let rhs = b.real_part().trace() + schatten1_norm_antisymmetric(&b.imag_part());
    Ok((a.trace(), rhs))
}

/// Bounds for one `(s, G, ν)`; fields are absent when the matching QFI was
/// not supplied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub s: f64,
    pub weight: crate::hermitian::MatrixJson,
    pub nu: u32,
    pub plain_bound_sld: Option<f64>,
    pub plain_bound_rld: Option<f64>,
    pub refined_bound_rld: Option<f64>,
    /// `max(plain_bound_sld, refined_bound_rld)` over those present.
    pub best: f64,
}

/// Evaluates every applicable bound. At least one QFI must be given; the
/// RLD slot accepts only RLD-kind matrices and vice versa.
pub fn bound_report(
    sld: Option<&QfiMatrix>,
    rld: Option<&QfiMatrix>,
    spec: &MeanSpec,
    nu: u32,
) -> Result<BoundReport> {
    if sld.is_none() && rld.is_none() {
        return Err(Error::invalid(
            "bound report",
            "needs an SLD or an RLD QFI matrix",
        ));
    }
    if sld.is_some_and(|f| f.kind() != QfiKind::Sld) {
        return Err(Error::invalid(
            "bound report",
            "SLD slot holds an RLD matrix",
        ));
    }
    if rld.is_some_and(|f| f.kind() != QfiKind::Rld) {
        return Err(Error::invalid(
            "bound report",
            "RLD slot holds an SLD matrix",
        ));
    }
    let plain_bound_sld = sld.map(|f| fmean_qcrb(f, spec, nu)).transpose()?;
    let plain_bound_rld = rld.map(|f| fmean_qcrb(f, spec, nu)).transpose()?;
    let refined_bound_rld = rld.map(|f| refined_qcrb(f, spec, nu)).transpose()?;
    let best = [plain_bound_sld, refined_bound_rld]
        .into_iter()
        .flatten()
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(BoundReport {
        s: spec.s(),
        weight: crate::hermitian::MatrixJson::from_complex(
            spec.weight().to_hermitian().as_matrix(),
        ),
        nu,
        plain_bound_sld,
        plain_bound_rld,
        refined_bound_rld,
        best,
    })
}

/// Reports over a grid of exponents with a shared weight, in input order.
pub fn bound_reports(
    sld: Option<&QfiMatrix>,
    rld: Option<&QfiMatrix>,
    exponents: &[f64],
    weight: &WeightMatrix,
    nu: u32,
) -> Result<Vec<BoundReport>> {
    exponents
        .iter()
        .map(|&s| bound_report(sld, rld, &MeanSpec::new(s, weight.clone())?, nu))
        .collect()
}

/// Classical weighted f-mean of a list of eigen-errors; convenience for
/// diagonal error matrices.
pub fn fmean_of_eigenerrors(errors: &[f64], s: f64) -> Result<f64> {
    let p = vec![1.0 / errors.len() as f64; errors.len()];
    crate::mean::classical_mean(errors, &p, MeanFunction::from_exponent(s))
}
