//! Hermitian matrix primitives.
//!
//! [`HermitianMatrix`] is the carrier type for density operators, their
//! parameter derivatives, error-covariance matrices and QFI matrices. All
//! spectral work goes through [`EigenDecomposition`]; matrix functions act
//! pointwise on the eigenvalues, so degenerate spectra need no special care.

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

/// Structural tolerance for Hermiticity, relative to the largest entry.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Default tolerance for PSD and Loewner-order checks.
pub const PSD_TOL: f64 = 1e-9;
/// Eigenvalues at or below this are treated as zero when a function needs a
/// strictly positive argument.
pub const ZERO_EIGENVALUE: f64 = 1e-12;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

/// Largest absolute entry of a complex matrix.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Largest absolute deviation of `m` from its conjugate transpose.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// A complex square matrix equal to its conjugate transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    m: CMatrix,
}

/// Where a scalar function may be evaluated on a spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// Any real eigenvalue.
    Real,
    /// Eigenvalues `>= -PSD_TOL`; small negative round-off is clamped to 0.
    NonNegative,
    /// Eigenvalues `> ZERO_EIGENVALUE`.
    Positive,
}

impl HermitianMatrix {
    /// Validates Hermiticity and returns the symmetrized matrix `(M + M†)/2`.
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::validated("matrix", m)
    }

    pub fn validated(what: &str, m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::invalid(
                what,
                format!("not square ({}x{})", m.nrows(), m.ncols()),
            ));
        }
        if m.nrows() == 0 {
            return Err(Error::invalid(what, "empty matrix"));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid(what, "non-finite entry"));
        }
        let deviation = hermiticity_defect(&m);
        if deviation > HERMITIAN_TOL * max_abs(&m).max(1.0) {
            return Err(Error::NotHermitian {
                what: what.to_string(),
                deviation,
            });
        }
        Ok(Self::symmetrized(m))
    }

    /// Symmetrizes without validation. For results of algebra that is
    /// Hermitian in exact arithmetic.
    pub fn symmetrized(m: CMatrix) -> Self {
        let half = (&m + m.adjoint()) * c(0.5, 0.0);
        HermitianMatrix { m: half }
    }

    pub fn from_real(m: &DMatrix<f64>) -> Result<Self> {
        Self::new(m.map(|x| c(x, 0.0)))
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        let mut m = CMatrix::zeros(n, n);
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = c(x, 0.0);
        }
        HermitianMatrix { m }
    }

    pub fn identity(n: usize) -> Self {
        HermitianMatrix {
            m: CMatrix::identity(n, n),
        }
    }

    pub fn zeros(n: usize) -> Self {
        HermitianMatrix {
            m: CMatrix::zeros(n, n),
        }
    }

    /// `|v⟩⟨v|`.
    pub fn projector(v: &nalgebra::DVector<C64>) -> Self {
        Self::symmetrized(v * v.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.m[(i, j)]
    }

    /// Real trace.
    pub fn trace(&self) -> f64 {
        self.m.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn real_part(&self) -> DMatrix<f64> {
        self.m.map(|z| z.re)
    }

    /// Imaginary part; antisymmetric for a Hermitian matrix.
    pub fn imag_part(&self) -> DMatrix<f64> {
        self.m.map(|z| z.im)
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.m.iter().all(|z| z.im.abs() <= tol)
    }

    pub fn scale(&self, t: f64) -> Self {
        HermitianMatrix {
            m: &self.m * c(t, 0.0),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_dim("add", other)?;
        Ok(HermitianMatrix {
            m: &self.m + &other.m,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_dim("sub", other)?;
        Ok(HermitianMatrix {
            m: &self.m - &other.m,
        })
    }

    /// `A M A†` for an arbitrary square `A`.
    pub fn congruence(&self, a: &CMatrix) -> Result<Self> {
        if a.ncols() != self.dim() {
            return Err(Error::dims("congruence", self.dim(), a.ncols()));
        }
        Ok(Self::symmetrized(a * &self.m * a.adjoint()))
    }

    pub(crate) fn same_dim(&self, context: &str, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::dims(context, self.dim(), other.dim()));
        }
        Ok(())
    }

    pub fn eig(&self) -> EigenDecomposition {
        EigenDecomposition::of(self)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eig().values
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eig().values[0]
    }

    /// Applies `f` through the eigendecomposition, checking the spectrum
    /// against `domain` first.
    pub fn apply<F: Fn(f64) -> f64>(&self, f: F, domain: Domain, name: &str) -> Result<Self> {
        self.eig().apply(f, domain, name)
    }

    /// Matrix inverse via the spectrum; refuses (near-)singular input.
    pub fn inverse(&self) -> Result<Self> {
        let e = self.eig();
        let scale = e
            .values
            .iter()
            .fold(0.0_f64, |a, x| a.max(x.abs()))
            .max(1e-300);
        if let Some(&bad) = e.values.iter().find(|x| x.abs() <= ZERO_EIGENVALUE * scale) {
            return Err(Error::OutOfDomain {
                what: "matrix".into(),
                function: "inverse".into(),
                eigenvalue: bad,
            });
        }
        Ok(e.map(|x| 1.0 / x))
    }

    pub fn schatten1_norm(&self) -> f64 {
        schatten1_norm(self)
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        is_psd(self, tol)
    }
}

/// Eigenvalues in ascending order with the matching unitary of column
/// eigenvectors.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl EigenDecomposition {
    pub fn of(h: &HermitianMatrix) -> Self {
        let n = h.dim();
        let se = h.m.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
        let values = order.iter().map(|&k| se.eigenvalues[k]).collect();
        let mut vectors = CMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            vectors.set_column(dst, &se.eigenvectors.column(src));
        }
        EigenDecomposition { values, vectors }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `U diag(f(x)) U†` with no domain check.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> HermitianMatrix {
        let n = self.dim();
        let mut scaled = self.vectors.clone();
        for (j, &x) in self.values.iter().enumerate() {
            let fx = c(f(x), 0.0);
            for i in 0..n {
                scaled[(i, j)] *= fx;
            }
        }
        HermitianMatrix::symmetrized(scaled * self.vectors.adjoint())
    }

    pub fn apply<F: Fn(f64) -> f64>(
        &self,
        f: F,
        domain: Domain,
        name: &str,
    ) -> Result<HermitianMatrix> {
        let out_of_domain = |x: f64| match domain {
            Domain::Real => false,
            Domain::NonNegative => x < -PSD_TOL,
            Domain::Positive => x <= ZERO_EIGENVALUE,
        };
        if let Some(&bad) = self.values.iter().find(|&&x| out_of_domain(x)) {
            return Err(Error::OutOfDomain {
                what: "matrix".into(),
                function: name.to_string(),
                eigenvalue: bad,
            });
        }
        Ok(match domain {
            Domain::NonNegative => self.map(|x| f(x.max(0.0))),
            _ => self.map(f),
        })
    }

    pub fn reconstruct(&self) -> HermitianMatrix {
        self.map(|x| x)
    }

    /// Rank-one projector onto the `k`-th eigenvector.
    pub fn projector(&self, k: usize) -> HermitianMatrix {
        HermitianMatrix::projector(&self.vectors.column(k).into_owned())
    }
}

pub fn eig_hermitian(h: &HermitianMatrix) -> EigenDecomposition {
    EigenDecomposition::of(h)
}

pub fn apply_matrix_function<F: Fn(f64) -> f64>(
    h: &HermitianMatrix,
    f: F,
    domain: Domain,
    name: &str,
) -> Result<HermitianMatrix> {
    h.apply(f, domain, name)
}

/// Sum of absolute eigenvalues.
pub fn schatten1_norm(h: &HermitianMatrix) -> f64 {
    h.eig().values.iter().map(|x| x.abs()).sum()
}

/// Schatten 1-norm of a real antisymmetric matrix `A`, computed as the
/// spectrum of the Hermitian matrix `iA`.
pub fn schatten1_norm_antisymmetric(a: &DMatrix<f64>) -> f64 {
    let ia = HermitianMatrix::symmetrized(a.map(|x| c(0.0, x)));
    schatten1_norm(&ia)
}

pub fn is_psd(h: &HermitianMatrix, tol: f64) -> bool {
    h.min_eigenvalue() >= -tol
}

/// Loewner order `A ⪰ B` within `tol`.
pub fn matrix_geq(a: &HermitianMatrix, b: &HermitianMatrix, tol: f64) -> Result<bool> {
    Ok(is_psd(&a.sub(b)?, tol))
}

/// Row-major JSON form: `{"dim": n, "re": [[..]], "im": [[..]]}` with `im`
/// optional.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MatrixJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixJson {
    pub fn from_complex(m: &CMatrix) -> Self {
        let rows = |part: fn(&C64) -> f64| -> Vec<Vec<f64>> {
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| part(&m[(i, j)])).collect())
                .collect()
        };
        let im = rows(|z| z.im);
        let has_im = im.iter().flatten().any(|&x| x != 0.0);
        MatrixJson {
            dim: m.nrows(),
            re: rows(|z| z.re),
            im: has_im.then_some(im),
        }
    }

    pub fn to_complex(&self) -> Result<CMatrix> {
        let n = self.dim;
        let check = |name: &str, rows: &Vec<Vec<f64>>| -> Result<()> {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(Error::invalid(
                    "matrix JSON",
                    format!("\"{name}\" must be {n} rows of {n} values"),
                ));
            }
            Ok(())
        };
        check("re", &self.re)?;
        if let Some(im) = &self.im {
            check("im", im)?;
        }
        Ok(CMatrix::from_fn(n, n, |i, j| {
            let im = self.im.as_ref().map_or(0.0, |im| im[i][j]);
            c(self.re[i][j], im)
        }))
    }
}

impl Serialize for HermitianMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from_complex(&self.m).serialize(s)
    }
}

impl<'de> Deserialize<'de> for HermitianMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = MatrixJson::deserialize(d)?;
        let m = j.to_complex().map_err(serde::de::Error::custom)?;
        HermitianMatrix::new(m).map_err(serde::de::Error::custom)
    }
}

/// Pauli matrices and friends for qubit work.
pub mod pauli {
    use super::{c, CMatrix, HermitianMatrix};

    pub fn sigma_x() -> HermitianMatrix {
        HermitianMatrix::symmetrized(CMatrix::from_row_slice(
            2,
            2,
            &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)],
        ))
    }

    pub fn sigma_y() -> HermitianMatrix {
        HermitianMatrix::symmetrized(CMatrix::from_row_slice(
            2,
            2,
            &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)],
        ))
    }

    pub fn sigma_z() -> HermitianMatrix {
        HermitianMatrix::from_diagonal(&[1.0, -1.0])
    }

    /// `(I + r·σ)/2`.
    pub fn bloch_state(r: [f64; 3]) -> HermitianMatrix {
        HermitianMatrix::symmetrized(CMatrix::from_row_slice(
            2,
            2,
            &[
                c(0.5 * (1.0 + r[2]), 0.),
                c(0.5 * r[0], -0.5 * r[1]),
                c(0.5 * r[0], 0.5 * r[1]),
                c(0.5 * (1.0 - r[2]), 0.),
            ],
        ))
    }

    /// Bloch vector `(tr σx ρ, tr σy ρ, tr σz ρ)` of a 2x2 matrix.
    pub fn bloch_vector(rho: &HermitianMatrix) -> [f64; 3] {
        let m = rho.as_matrix();
        [
            2.0 * m[(0, 1)].re,
            -2.0 * m[(0, 1)].im,
            (m[(0, 0)] - m[(1, 1)]).re,
        ]
    }
}
