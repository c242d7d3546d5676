//! Symmetric and right logarithmic derivatives and the two QFI matrices.
//!
//! The SLD `L` solves `∂ρ = (Lρ + ρL)/2`; in the eigenbasis of `ρ` this is
//! `L_ab = 2 ∂ρ_ab / (λ_a + λ_b)`, set to zero outside the support. The RLD
//! `R` solves `∂ρ = ρR` and needs a full-rank state.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermitian::{c, max_abs, CMatrix, HermitianMatrix, MatrixJson, C64};
use crate::states::{check_unit, DensityOperator};

/// Eigenvalue pairs summing to at most this are outside the support.
pub const SUPPORT_TOL: f64 = 1e-10;
/// Full-rank threshold for the RLD.
pub const RLD_MIN_EIGENVALUE: f64 = 1e-10;
/// Largest `|∂ρ_ab|` tolerated on pairs outside the support.
pub const SUPPORT_LEAK_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QfiKind {
    Sld,
    Rld,
}

/// An `n × n` QFI matrix: real symmetric for the SLD, Hermitian for the RLD.
#[derive(Debug, Clone, PartialEq)]
pub struct QfiMatrix {
    kind: QfiKind,
    matrix: HermitianMatrix,
}

impl QfiMatrix {
    pub fn new(kind: QfiKind, matrix: HermitianMatrix) -> Result<Self> {
        let scale = max_abs(matrix.as_matrix()).max(1.0);
        if kind == QfiKind::Sld && !matrix.is_real(1e-9 * scale) {
            return Err(Error::invalid("SLD QFI matrix", "must be real"));
        }
        let min = matrix.min_eigenvalue();
        if min < -1e-9 * scale {
            return Err(Error::invalid(
                "QFI matrix",
                format!("not positive semidefinite (min eigenvalue {min:e})"),
            ));
        }
        let matrix = if kind == QfiKind::Sld {
            HermitianMatrix::symmetrized(matrix.real_part().map(|x| c(x, 0.0)))
        } else {
            matrix
        };
        Ok(QfiMatrix { kind, matrix })
    }

    pub fn sld(matrix: HermitianMatrix) -> Result<Self> {
        Self::new(QfiKind::Sld, matrix)
    }

    pub fn rld(matrix: HermitianMatrix) -> Result<Self> {
        Self::new(QfiKind::Rld, matrix)
    }

    pub fn kind(&self) -> QfiKind {
        self.kind
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn n_params(&self) -> usize {
        self.matrix.dim()
    }

    /// QFI of `ν` independent repetitions: `ν F`.
    pub fn repeated(&self, nu: u32) -> Self {
        QfiMatrix {
            kind: self.kind,
            matrix: self.matrix.scale(f64::from(nu)),
        }
    }
}

/// Matrix JSON plus a `"kind"` field.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QfiMatrixJson {
    #[serde(default = "default_kind")]
    pub kind: QfiKind,
    #[serde(flatten)]
    pub matrix: MatrixJson,
}

fn default_kind() -> QfiKind {
    QfiKind::Sld
}

impl From<&QfiMatrix> for QfiMatrixJson {
    fn from(q: &QfiMatrix) -> Self {
        QfiMatrixJson {
            kind: q.kind,
            matrix: MatrixJson::from_complex(q.matrix.as_matrix()),
        }
    }
}

impl TryFrom<QfiMatrixJson> for QfiMatrix {
    type Error = Error;

    fn try_from(j: QfiMatrixJson) -> Result<Self> {
        let m = HermitianMatrix::validated("QFI matrix", j.matrix.to_complex()?)?;
        QfiMatrix::new(j.kind, m)
    }
}

impl Serialize for QfiMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        QfiMatrixJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for QfiMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        QfiMatrix::try_from(QfiMatrixJson::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

fn check_derivatives(rho: &DensityOperator, drho: &[HermitianMatrix]) -> Result<()> {
    for d in drho {
        if d.dim() != rho.dim() {
            return Err(Error::dims("state derivative", rho.dim(), d.dim()));
        }
    }
    Ok(())
}

/// `V† A V`.
fn to_basis(a: &HermitianMatrix, v: &CMatrix) -> CMatrix {
    v.adjoint() * a.as_matrix() * v
}

/// SLD operators, minimal-norm outside the support of `ρ`.
pub fn sld_operators(
    rho: &DensityOperator,
    drho: &[HermitianMatrix],
    support_tol: f64,
) -> Result<Vec<HermitianMatrix>> {
    check_derivatives(rho, drho)?;
    let e = rho.matrix().eig();
    let n = rho.dim();
    drho.iter()
        .enumerate()
        .map(|(param, d)| {
            let db = to_basis(d, &e.vectors);
            let mut l = CMatrix::zeros(n, n);
            for a in 0..n {
                for b in 0..n {
                    let sum = e.values[a] + e.values[b];
                    if sum > support_tol {
                        l[(a, b)] = db[(a, b)] * c(2.0 / sum, 0.0);
                    } else if db[(a, b)].norm() > SUPPORT_LEAK_TOL {
                        return Err(Error::IllPosedDerivative {
                            param,
                            magnitude: db[(a, b)].norm(),
                        });
                    }
                }
            }
            Ok(HermitianMatrix::symmetrized(
                &e.vectors * l * e.vectors.adjoint(),
            ))
        })
        .collect()
}

/// RLD operators `R_j = ρ⁻¹ ∂_jρ`.
pub fn rld_operators(rho: &DensityOperator, drho: &[HermitianMatrix]) -> Result<Vec<CMatrix>> {
    check_derivatives(rho, drho)?;
    let inv = rld_inverse(rho)?;
    Ok(drho
        .iter()
        .map(|d| inv.as_matrix() * d.as_matrix())
        .collect())
}

fn rld_inverse(rho: &DensityOperator) -> Result<HermitianMatrix> {
    let e = rho.matrix().eig();
    if e.values[0] <= RLD_MIN_EIGENVALUE {
        return Err(Error::RankDeficient {
            min_eigenvalue: e.values[0],
        });
    }
    Ok(e.map(|x| 1.0 / x))
}

/// `[F_S]_jk = Re tr(L_j L_k ρ)`.
pub fn qfi_sld(rho: &DensityOperator, drho: &[HermitianMatrix]) -> Result<QfiMatrix> {
    let ls = sld_operators(rho, drho, SUPPORT_TOL)?;
    let n = ls.len();
    let r = rho.matrix().as_matrix();
    let lr: Vec<CMatrix> = ls.iter().map(|l| l.as_matrix() * r).collect();
    let mut f = CMatrix::zeros(n, n);
    for j in 0..n {
        for k in j..n {
            // tr(L_j L_k ρ) = Σ (L_j)_ab (L_k ρ)_ba
            let v = ls[j].as_matrix().transpose().component_mul(&lr[k]).sum().re;
            f[(j, k)] = c(v, 0.0);
            f[(k, j)] = c(v, 0.0);
        }
    }
    QfiMatrix::sld(HermitianMatrix::symmetrized(f))
}

/// RLD QFI with entries `[F_R]_jk = tr(ρ R_j R_k†) = tr(∂_kρ ρ⁻¹ ∂_jρ)`.
///
/// This is the complex conjugate of `tr(R_j† ρ R_k)`; the ordering is the
/// one under which the displaced thermal state has
/// `Im [F_R]_12 = -1/(η(η+1))`. A real covariance `E` satisfies `E ⪰ F⁻¹`
/// for either ordering.
pub fn qfi_rld(rho: &DensityOperator, drho: &[HermitianMatrix]) -> Result<QfiMatrix> {
    check_derivatives(rho, drho)?;
    let inv = rld_inverse(rho)?;
    let n = drho.len();
    let right: Vec<CMatrix> = drho
        .iter()
        .map(|d| inv.as_matrix() * d.as_matrix())
        .collect();
    let mut f = CMatrix::zeros(n, n);
    for j in 0..n {
        for k in 0..n {
            f[(j, k)] = drho[k]
                .as_matrix()
                .transpose()
                .component_mul(&right[j])
                .sum();
        }
    }
    QfiMatrix::rld(HermitianMatrix::symmetrized(f))
}

/// Compresses `ρ` and its derivatives onto the eigenvectors with eigenvalue
/// above `cutoff`, renormalizing the state. Useful for states whose spectra
/// decay below double precision, where the discarded block is numerical
/// noise.
pub fn restrict_to_support(
    rho: &DensityOperator,
    drho: &[HermitianMatrix],
    cutoff: f64,
) -> Result<(DensityOperator, Vec<HermitianMatrix>)> {
    check_derivatives(rho, drho)?;
    let e = rho.matrix().eig();
    let keep: Vec<usize> = (0..e.dim()).filter(|&k| e.values[k] > cutoff).collect();
    if keep.is_empty() {
        return Err(Error::invalid(
            "support cutoff",
            format!("{cutoff} removes every eigenvalue"),
        ));
    }
    let mut v = CMatrix::zeros(e.dim(), keep.len());
    for (dst, &src) in keep.iter().enumerate() {
        v.set_column(dst, &e.vectors.column(src));
    }
    let kept_trace: f64 = keep.iter().map(|&k| e.values[k]).sum();
    let compress =
        |h: &HermitianMatrix| HermitianMatrix::symmetrized(v.adjoint() * h.as_matrix() * &v);
    let state = DensityOperator::new(compress(rho.matrix()).scale(1.0 / kept_trace))?;
    let ds = drho
        .iter()
        .map(|d| compress(d).scale(1.0 / kept_trace))
        .collect();
    Ok((state, ds))
}

/// QFI of `θ ↦ e^{iθZ} ρ e^{-iθZ}` from the spectrum of `ρ`:
/// `Σ 2(λ_a - λ_b)²/(λ_a + λ_b) |Z_ab|²`.
pub fn qfi_unitary_spectral(rho: &DensityOperator, z: &HermitianMatrix) -> Result<f64> {
    if z.dim() != rho.dim() {
        return Err(Error::dims("generator", rho.dim(), z.dim()));
    }
    let e = rho.matrix().eig();
    let zb = to_basis(z, &e.vectors);
    let mut total = 0.0;
    for a in 0..e.dim() {
        for b in 0..e.dim() {
            let (la, lb) = (e.values[a], e.values[b]);
            if la + lb > 1e-12 {
                total += 2.0 * (la - lb).powi(2) / (la + lb) * zb[(a, b)].norm_sqr();
            }
        }
    }
    Ok(total)
}

/// `⟨ψ|A|ψ⟩` for Hermitian `A`.
pub(crate) fn expect(psi: &DVector<C64>, a: &CMatrix) -> f64 {
    (psi.adjoint() * a * psi)[(0, 0)].re
}

/// Arithmetic-mean QFI of a pure state under commuting generators:
/// `(4/n) Σ_j (⟨Z_j²⟩ - ⟨Z_j⟩²)`.
pub fn pure_state_mean_qfi(psi: &DVector<C64>, generators: &[HermitianMatrix]) -> Result<f64> {
    check_unit(psi)?;
    if generators.is_empty() {
        return Err(Error::invalid("generators", "need at least one"));
    }
    let mut total = 0.0;
    for z in generators {
        if z.dim() != psi.len() {
            return Err(Error::dims("generator", psi.len(), z.dim()));
        }
        let zm = z.as_matrix();
        let mean = expect(psi, zm);
        total += expect(psi, &(zm * zm)) - mean * mean;
    }
    Ok(4.0 * total / generators.len() as f64)
}
