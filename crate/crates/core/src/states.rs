//! Density operators, parametric families and CPTP channels.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermitian::{c, max_abs, CMatrix, HermitianMatrix, MatrixJson, C64};

/// PSD and unit-trace tolerance for density operators.
pub const STATE_TOL: f64 = 1e-10;
/// Central-difference step for families without analytic derivatives.
pub const FD_STEP: f64 = 1e-5;

/// A positive semidefinite, unit-trace Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    m: HermitianMatrix,
}

impl DensityOperator {
    pub fn new(m: HermitianMatrix) -> Result<Self> {
        let tr = m.trace();
        if (tr - 1.0).abs() > STATE_TOL {
            return Err(Error::invalid(
                "density operator",
                format!("trace is {tr}, expected 1"),
            ));
        }
        let min = m.min_eigenvalue();
        if min < -STATE_TOL {
            return Err(Error::invalid(
                "density operator",
                format!("not positive semidefinite (min eigenvalue {min:e})"),
            ));
        }
        Ok(DensityOperator { m })
    }

    /// Divides out the trace, then validates.
    pub fn normalized(m: HermitianMatrix) -> Result<Self> {
        let tr = m.trace();
        if !(tr > 0.0) {
            return Err(Error::invalid("density operator", format!("trace is {tr}")));
        }
        Self::new(m.scale(1.0 / tr))
    }

    /// `|ψ⟩⟨ψ|` for a unit vector.
    pub fn pure(psi: &DVector<C64>) -> Result<Self> {
        check_unit(psi)?;
        Ok(DensityOperator {
            m: HermitianMatrix::projector(psi),
        })
    }

    /// Maximally mixed state `I/n`.
    pub fn maximally_mixed(n: usize) -> Self {
        DensityOperator {
            m: HermitianMatrix::identity(n).scale(1.0 / n as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.dim()
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> HermitianMatrix {
        self.m
    }

    pub fn purity(&self) -> f64 {
        let m = self.m.as_matrix();
        (m * m).trace().re
    }

    /// Expectation value `tr(ρ A)`.
    pub fn expectation(&self, a: &HermitianMatrix) -> f64 {
        (self.m.as_matrix() * a.as_matrix()).trace().re
    }
}

pub(crate) fn check_unit(psi: &DVector<C64>) -> Result<()> {
    let norm = psi.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::invalid(
            "state vector",
            format!("norm is {norm}, expected 1"),
        ));
    }
    Ok(())
}

/// `θ ↦ ρ_θ` together with its partial derivatives.
pub trait ParametricFamily {
    fn n_params(&self) -> usize;

    fn dim(&self) -> usize;

    fn evaluate(&self, theta: &[f64]) -> Result<DensityOperator>;

    /// `∂ρ/∂θ_j` for every parameter; Hermitian and traceless.
    fn derivatives(&self, theta: &[f64]) -> Result<Vec<HermitianMatrix>>;
}

impl<T: ParametricFamily + ?Sized> ParametricFamily for Box<T> {
    fn n_params(&self) -> usize {
        (**self).n_params()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn evaluate(&self, theta: &[f64]) -> Result<DensityOperator> {
        (**self).evaluate(theta)
    }
    fn derivatives(&self, theta: &[f64]) -> Result<Vec<HermitianMatrix>> {
        (**self).derivatives(theta)
    }
}

pub(crate) fn check_theta(theta: &[f64], n: usize) -> Result<()> {
    if theta.len() != n {
        return Err(Error::dims("parameter vector", n, theta.len()));
    }
    Ok(())
}

/// Central differences of `family.evaluate` with step `h` in each parameter.
pub fn central_difference<F: ParametricFamily + ?Sized>(
    family: &F,
    theta: &[f64],
    h: f64,
) -> Result<Vec<HermitianMatrix>> {
    check_theta(theta, family.n_params())?;
    (0..family.n_params())
        .map(|j| {
            let mut plus = theta.to_vec();
            let mut minus = theta.to_vec();
            plus[j] += h;
            minus[j] -= h;
            let hi = family.evaluate(&plus)?;
            let lo = family.evaluate(&minus)?;
            Ok(hi.matrix().sub(lo.matrix())?.scale(0.5 / h))
        })
        .collect()
}

/// `exp(iH)` for Hermitian `H`.
pub fn unitary_exp(h: &HermitianMatrix) -> CMatrix {
    let e = h.eig();
    let mut scaled = e.vectors.clone();
    for (j, &x) in e.values.iter().enumerate() {
        let phase = C64::from_polar(1.0, x);
        for i in 0..scaled.nrows() {
            scaled[(i, j)] *= phase;
        }
    }
    scaled * e.vectors.adjoint()
}

fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// `ρ_θ = exp(iΣθ_jZ_j) ρ₀ exp(-iΣθ_jZ_j)`.
#[derive(Debug, Clone)]
pub struct UnitaryFamily {
    rho0: DensityOperator,
    generators: Vec<HermitianMatrix>,
    commuting: bool,
}

impl UnitaryFamily {
    pub fn new(
        rho0: DensityOperator,
        generators: Vec<HermitianMatrix>,
        commuting: bool,
    ) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::invalid(
                "unitary family",
                "needs at least one generator",
            ));
        }
        for z in &generators {
            if z.dim() != rho0.dim() {
                return Err(Error::dims("generator", rho0.dim(), z.dim()));
            }
        }
        if commuting {
            for (j, a) in generators.iter().enumerate() {
                for (k, b) in generators.iter().enumerate().skip(j + 1) {
                    let defect = max_abs(&commutator(a.as_matrix(), b.as_matrix()));
                    let scale = max_abs(a.as_matrix()).max(max_abs(b.as_matrix())).max(1.0);
                    if defect > 1e-10 * scale * scale {
                        return Err(Error::invalid(
                            "unitary family",
                            format!(
                                "generators {j} and {k} do not commute (|[Z_{j}, Z_{k}]| = {defect:e})"
                            ),
                        ));
                    }
                }
            }
        }
        Ok(UnitaryFamily {
            rho0,
            generators,
            commuting,
        })
    }

    pub fn generators(&self) -> &[HermitianMatrix] {
        &self.generators
    }

    pub fn rho0(&self) -> &DensityOperator {
        &self.rho0
    }

    fn exponent(&self, theta: &[f64]) -> HermitianMatrix {
        let n = self.rho0.dim();
        let mut h = CMatrix::zeros(n, n);
        for (t, z) in theta.iter().zip(&self.generators) {
            h += z.as_matrix() * c(*t, 0.0);
        }
        HermitianMatrix::symmetrized(h)
    }

    /// `i[Z_j, ρ]` for every generator.
    fn commutator_derivatives(&self, rho: &HermitianMatrix) -> Vec<HermitianMatrix> {
        self.generators
            .iter()
            .map(|z| {
                HermitianMatrix::symmetrized(
                    commutator(z.as_matrix(), rho.as_matrix()) * c(0.0, 1.0),
                )
            })
            .collect()
    }
}

pub fn unitary_family(
    rho0: DensityOperator,
    generators: Vec<HermitianMatrix>,
    commuting: bool,
) -> Result<UnitaryFamily> {
    UnitaryFamily::new(rho0, generators, commuting)
}

impl ParametricFamily for UnitaryFamily {
    fn n_params(&self) -> usize {
        self.generators.len()
    }

    fn dim(&self) -> usize {
        self.rho0.dim()
    }

    fn evaluate(&self, theta: &[f64]) -> Result<DensityOperator> {
        check_theta(theta, self.n_params())?;
        if theta.iter().all(|&t| t == 0.0) {
            return Ok(self.rho0.clone());
        }
        let u = unitary_exp(&self.exponent(theta));
        let m = self.rho0.matrix().congruence(&u)?;
        Ok(DensityOperator { m })
    }

    fn derivatives(&self, theta: &[f64]) -> Result<Vec<HermitianMatrix>> {
        check_theta(theta, self.n_params())?;
        if self.commuting || theta.iter().all(|&t| t == 0.0) {
            let rho = self.evaluate(theta)?;
            Ok(self.commutator_derivatives(rho.matrix()))
        } else {
            central_difference(self, theta, FD_STEP)
        }
    }
}

/// Qubit family with Bloch vector `(θ₁, θ₂, z₀)`, or `(θ₁, 0, z₀)` with one
/// parameter. Derivatives are `σ_j/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochFamily {
    pub z0: f64,
    pub n_params: usize,
}

impl BlochFamily {
    pub fn new(z0: f64, n_params: usize) -> Result<Self> {
        if !(1..=2).contains(&n_params) {
            return Err(Error::invalid("Bloch family", "n_params must be 1 or 2"));
        }
        if !(z0.abs() < 1.0) {
            return Err(Error::invalid(
                "Bloch family",
                format!("|z0| must be < 1, got {z0}"),
            ));
        }
        Ok(BlochFamily { z0, n_params })
    }
}

impl ParametricFamily for BlochFamily {
    fn n_params(&self) -> usize {
        self.n_params
    }

    fn dim(&self) -> usize {
        2
    }

    fn evaluate(&self, theta: &[f64]) -> Result<DensityOperator> {
        check_theta(theta, self.n_params)?;
        let r = [theta[0], theta.get(1).copied().unwrap_or(0.0), self.z0];
        let len = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        if len > 1.0 + STATE_TOL {
            return Err(Error::invalid(
                "Bloch family",
                format!("Bloch vector length {len} exceeds 1"),
            ));
        }
        Ok(DensityOperator {
            m: crate::hermitian::pauli::bloch_state(r),
        })
    }

    fn derivatives(&self, theta: &[f64]) -> Result<Vec<HermitianMatrix>> {
        check_theta(theta, self.n_params)?;
        use crate::hermitian::pauli;
        let axes = [pauli::sigma_x(), pauli::sigma_y()];
        Ok(axes[..self.n_params].iter().map(|s| s.scale(0.5)).collect())
    }
}

/// `Φ(ρ) = Σ_l K_l ρ K_l†` with `Σ_l K_l†K_l = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    ops: Vec<CMatrix>,
}

impl KrausChannel {
    pub fn new(ops: Vec<CMatrix>) -> Result<Self> {
        let Some(first) = ops.first() else {
            return Err(Error::invalid(
                "Kraus channel",
                "needs at least one operator",
            ));
        };
        let n = first.ncols();
        let mut sum = CMatrix::zeros(n, n);
        for (l, k) in ops.iter().enumerate() {
            if k.nrows() != n || k.ncols() != n {
                return Err(Error::invalid(
                    "Kraus channel",
                    format!(
                        "operator {l} is {}x{}, expected {n}x{n}",
                        k.nrows(),
                        k.ncols()
                    ),
                ));
            }
            sum += k.adjoint() * k;
        }
        let defect = max_abs(&(sum - CMatrix::identity(n, n)));
        if defect > 1e-10 {
            return Err(Error::invalid(
                "Kraus channel",
                format!("Σ K†K deviates from identity by {defect:e}"),
            ));
        }
        Ok(KrausChannel { ops })
    }

    pub fn identity(n: usize) -> Self {
        KrausChannel {
            ops: vec![CMatrix::identity(n, n)],
        }
    }

    /// Qubit depolarizing channel `ρ ↦ (1-p)ρ + p I/2`.
    pub fn depolarizing(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid(
                "depolarizing probability",
                format!("{p} not in [0, 1]"),
            ));
        }
        use crate::hermitian::pauli;
        let mut ops = vec![CMatrix::identity(2, 2) * c((1.0 - 0.75 * p).sqrt(), 0.0)];
        for s in [pauli::sigma_x(), pauli::sigma_y(), pauli::sigma_z()] {
            ops.push(s.into_matrix() * c((0.25 * p).sqrt(), 0.0));
        }
        Self::new(ops)
    }

    pub fn dim(&self) -> usize {
        self.ops[0].ncols()
    }

    pub fn kraus_ops(&self) -> &[CMatrix] {
        &self.ops
    }

    /// The linear map on Hermitian matrices; used for derivatives too.
    pub fn apply_hermitian(&self, h: &HermitianMatrix) -> Result<HermitianMatrix> {
        if h.dim() != self.dim() {
            return Err(Error::dims("channel input", self.dim(), h.dim()));
        }
        let n = self.dim();
        let mut out = CMatrix::zeros(n, n);
        for k in &self.ops {
            out += k * h.as_matrix() * k.adjoint();
        }
        Ok(HermitianMatrix::symmetrized(out))
    }

    pub fn apply(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        Ok(DensityOperator {
            m: self.apply_hermitian(rho.matrix())?,
        })
    }
}

pub fn apply_channel(ch: &KrausChannel, rho: &DensityOperator) -> Result<DensityOperator> {
    ch.apply(rho)
}

/// `θ ↦ Φ(ρ_θ)` with derivatives `Φ(∂_jρ_θ)`.
pub struct ChannelFamily<F> {
    inner: F,
    channel: KrausChannel,
}

impl<F: ParametricFamily> ChannelFamily<F> {
    pub fn new(inner: F, channel: KrausChannel) -> Result<Self> {
        if inner.dim() != channel.dim() {
            return Err(Error::dims("channel family", inner.dim(), channel.dim()));
        }
        Ok(ChannelFamily { inner, channel })
    }
}

impl<F: ParametricFamily> ParametricFamily for ChannelFamily<F> {
    fn n_params(&self) -> usize {
        self.inner.n_params()
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn evaluate(&self, theta: &[f64]) -> Result<DensityOperator> {
        self.channel.apply(&self.inner.evaluate(theta)?)
    }

    fn derivatives(&self, theta: &[f64]) -> Result<Vec<HermitianMatrix>> {
        self.inner
            .derivatives(theta)?
            .iter()
            .map(|d| self.channel.apply_hermitian(d))
            .collect()
    }
}

/// Family spec JSON, tagged by `kind`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FamilySpec {
    Unitary {
        rho0: MatrixJson,
        generators: Vec<MatrixJson>,
        #[serde(default)]
        commuting: bool,
    },
    Bloch {
        z0: f64,
        #[serde(default = "two")]
        n_params: usize,
    },
}

fn two() -> usize {
    2
}

impl FamilySpec {
    pub fn build(&self) -> Result<Box<dyn ParametricFamily + Send + Sync>> {
        match self {
            FamilySpec::Unitary {
                rho0,
                generators,
                commuting,
            } => {
                let rho0 =
                    DensityOperator::new(HermitianMatrix::validated("rho0", rho0.to_complex()?)?)?;
                let generators = generators
                    .iter()
                    .enumerate()
                    .map(|(j, g)| {
                        HermitianMatrix::validated(&format!("generator {j}"), g.to_complex()?)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Box::new(UnitaryFamily::new(rho0, generators, *commuting)?))
            }
            FamilySpec::Bloch { z0, n_params } => Ok(Box::new(BlochFamily::new(*z0, *n_params)?)),
        }
    }
}

/// Seeded random instances for property tests and examples.
pub mod random {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    pub fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    pub fn gaussian_complex<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
        CMatrix::from_fn(rows, cols, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            c(re, im)
        })
    }

    pub fn gaussian_real<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
        DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
    }

    /// Haar-random unitary: QR of a complex Ginibre matrix with the phases
    /// of R's diagonal divided out.
    pub fn unitary_with<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMatrix {
        let qr = gaussian_complex(rng, dim, dim).qr();
        let (mut q, r) = qr.unpack();
        for j in 0..dim {
            let d = r[(j, j)];
            let phase = if d.norm() > 0.0 {
                d / d.norm()
            } else {
                c(1.0, 0.0)
            };
            for i in 0..dim {
                q[(i, j)] *= phase;
            }
        }
        q
    }

    /// Haar-random real orthogonal matrix.
    pub fn orthogonal_with<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DMatrix<f64> {
        let (mut q, r) = gaussian_real(rng, dim, dim).qr().unpack();
        for j in 0..dim {
            if r[(j, j)] < 0.0 {
                for i in 0..dim {
                    q[(i, j)] = -q[(i, j)];
                }
            }
        }
        q
    }

    /// GUE-like Hermitian matrix.
    pub fn hermitian_with<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> HermitianMatrix {
        HermitianMatrix::symmetrized(gaussian_complex(rng, dim, dim))
    }

    /// Wishart-type `X X†/tr` with `X` of shape `dim × rank`.
    pub fn density_with<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> DensityOperator {
        assert!(rank >= 1 && rank <= dim, "rank must lie in 1..=dim");
        let x = gaussian_complex(rng, dim, rank);
        let m = HermitianMatrix::symmetrized(&x * x.adjoint());
        let tr = m.trace();
        DensityOperator {
            m: m.scale(1.0 / tr),
        }
    }

    pub fn unit_vector_with<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DVector<C64> {
        let v = gaussian_complex(rng, dim, 1).column(0).into_owned();
        let n = v.norm();
        v / c(n, 0.0)
    }

    /// Channel from the row blocks of a random isometry `dim → dim·n_kraus`.
    pub fn channel_with<R: Rng + ?Sized>(rng: &mut R, dim: usize, n_kraus: usize) -> KrausChannel {
        assert!(n_kraus >= 1, "n_kraus must be positive");
        let u = unitary_with(rng, dim * n_kraus);
        let ops = (0..n_kraus)
            .map(|l| u.view((l * dim, 0), (dim, dim)).into_owned())
            .collect();
        KrausChannel { ops }
    }

    pub fn random_density(dim: usize, rank: usize, seed: u64) -> DensityOperator {
        density_with(&mut rng(seed), dim, rank)
    }

    pub fn random_channel(dim: usize, n_kraus: usize, seed: u64) -> KrausChannel {
        channel_with(&mut rng(seed), dim, n_kraus)
    }

    pub fn random_unitary(dim: usize, seed: u64) -> CMatrix {
        unitary_with(&mut rng(seed), dim)
    }
}
