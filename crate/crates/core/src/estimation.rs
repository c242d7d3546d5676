//! Monte Carlo check of the bounds: sample a POVM, apply a locally unbiased
//! linear estimator, and compare the empirical error covariance
//! `E_jk = ⟨(θ̃_j - θ_j)(θ̃_k - θ_k)⟩` against the QCRB family.

use nalgebra::{DMatrix, DVector};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::{bound_reports, fmean_error, matrix_qcrb_holds, BoundReport};
use crate::error::{Error, Result};
use crate::hermitian::{is_psd, max_abs, pauli, CMatrix, HermitianMatrix, MatrixJson};
use crate::mean::{MeanSpec, WeightMatrix};
use crate::qfi::{qfi_rld, qfi_sld, QfiMatrix};
use crate::states::random::rng;
use crate::states::{DensityOperator, ParametricFamily};

pub const POVM_TOL: f64 = 1e-10;
/// Outcomes at or below this probability are dropped.
pub const MIN_PROBABILITY: f64 = 1e-12;
pub const MIN_SHOTS: usize = 1000;
/// Shots per independent random substream.
pub const CHUNK_SHOTS: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    effects: Vec<HermitianMatrix>,
}

impl Povm {
    pub fn new(effects: Vec<HermitianMatrix>) -> Result<Self> {
        let Some(first) = effects.first() else {
            return Err(Error::invalid("POVM", "needs at least one effect"));
        };
        let n = first.dim();
        let mut total = CMatrix::zeros(n, n);
        for (y, m) in effects.iter().enumerate() {
            if m.dim() != n {
                return Err(Error::dims("POVM effect", n, m.dim()));
            }
            if !is_psd(m, POVM_TOL) {
                return Err(Error::invalid(
                    "POVM",
                    format!("effect {y} has eigenvalue {:e}", m.min_eigenvalue()),
                ));
            }
            total += m.as_matrix();
        }
        let defect = max_abs(&(total - CMatrix::identity(n, n)));
        if defect > POVM_TOL {
            return Err(Error::invalid(
                "POVM",
                format!("effects sum to identity only within {defect:e}"),
            ));
        }
        Ok(Povm { effects })
    }

    /// `{(I ± σ₁)/4, (I ± σ₂)/4}`: a fair coin choosing a σ₁ or σ₂
    /// projective measurement.
    pub fn xy_mixed() -> Self {
        let id = HermitianMatrix::identity(2);
        let mut effects = Vec::new();
        for s in [pauli::sigma_x(), pauli::sigma_y()] {
            effects.push(id.add(&s).unwrap().scale(0.25));
            effects.push(id.sub(&s).unwrap().scale(0.25));
        }
        Povm { effects }
    }

    /// Projective measurement of a qubit Pauli operator (`axis` 0, 1, 2).
    pub fn pauli_projective(axis: usize) -> Result<Self> {
        let s = match axis {
            0 => pauli::sigma_x(),
            1 => pauli::sigma_y(),
            2 => pauli::sigma_z(),
            _ => return Err(Error::invalid("Pauli axis", "must be 0, 1 or 2")),
        };
        let id = HermitianMatrix::identity(2);
        Ok(Povm {
            effects: vec![id.add(&s)?.scale(0.5), id.sub(&s)?.scale(0.5)],
        })
    }

    pub fn trivial(dim: usize) -> Self {
        Povm {
            effects: vec![HermitianMatrix::identity(dim)],
        }
    }

    pub fn dim(&self) -> usize {
        self.effects[0].dim()
    }

    pub fn effects(&self) -> &[HermitianMatrix] {
        &self.effects
    }
}

#[derive(Serialize, Deserialize)]
struct PovmJson {
    effects: Vec<MatrixJson>,
}

impl Serialize for Povm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PovmJson {
            effects: self
                .effects
                .iter()
                .map(|m| MatrixJson::from_complex(m.as_matrix()))
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Povm {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = PovmJson::deserialize(d)?;
        let effects = j
            .effects
            .into_iter()
            .map(|m| HermitianMatrix::validated("POVM effect", m.to_complex()?))
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        Povm::new(effects).map_err(serde::de::Error::custom)
    }
}

fn trace_product(a: &HermitianMatrix, b: &HermitianMatrix) -> f64 {
    a.as_matrix()
        .transpose()
        .component_mul(b.as_matrix())
        .sum()
        .re
}

/// `p_y = tr M_y ρ`.
pub fn outcome_probs(povm: &Povm, rho: &DensityOperator) -> Result<Vec<f64>> {
    if povm.dim() != rho.dim() {
        return Err(Error::dims("POVM", rho.dim(), povm.dim()));
    }
    Ok(povm
        .effects
        .iter()
        .map(|m| trace_product(m, rho.matrix()).max(0.0))
        .collect())
}

/// Retained outcomes with `p_y` and `∂_j p_y`.
struct Likelihood {
    outcomes: Vec<usize>,
    probs: Vec<f64>,
    /// `grads[i][j] = ∂_j p_{outcomes[i]}`.
    grads: Vec<Vec<f64>>,
}

fn likelihood(povm: &Povm, rho: &DensityOperator, drho: &[HermitianMatrix]) -> Result<Likelihood> {
    let probs = outcome_probs(povm, rho)?;
    for d in drho {
        if d.dim() != rho.dim() {
            return Err(Error::dims("state derivative", rho.dim(), d.dim()));
        }
    }
    let mut out = Likelihood {
        outcomes: Vec::new(),
        probs: Vec::new(),
        grads: Vec::new(),
    };
    for (y, (&p, m)) in probs.iter().zip(&povm.effects).enumerate() {
        if p <= MIN_PROBABILITY {
            log::info!("dropping outcome {y} with probability {p:e}");
            continue;
        }
        out.outcomes.push(y);
        out.probs.push(p);
        out.grads
            .push(drho.iter().map(|d| trace_product(m, d)).collect());
    }
    Ok(out)
}

fn fisher_of(l: &Likelihood, n: usize) -> DMatrix<f64> {
    let mut f = DMatrix::zeros(n, n);
    for (p, g) in l.probs.iter().zip(&l.grads) {
        for j in 0..n {
            for k in 0..n {
                f[(j, k)] += g[j] * g[k] / p;
            }
        }
    }
    f
}

/// `[I_c]_jk = Σ_y ∂_j p_y ∂_k p_y / p_y` over outcomes with `p_y > 1e-12`.
pub fn classical_fisher(
    povm: &Povm,
    rho: &DensityOperator,
    drho: &[HermitianMatrix],
) -> Result<HermitianMatrix> {
    let l = likelihood(povm, rho, drho)?;
    HermitianMatrix::from_real(&fisher_of(&l, drho.len()))
}

/// Per-outcome estimates `θ̃(y)`; outcomes dropped for zero probability
/// map to `θ₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorTable {
    pub theta0: Vec<f64>,
    pub estimates: Vec<Vec<f64>>,
}

impl EstimatorTable {
    /// `θ̃(y) - θ₀`.
    pub fn deviation(&self, y: usize) -> Vec<f64> {
        self.estimates[y]
            .iter()
            .zip(&self.theta0)
            .map(|(a, b)| a - b)
            .collect()
    }
}

/// `θ̃(y) = θ₀ + I_c⁻¹ d(y)` with `d_j(y) = ∂_j p_y / p_y`.
pub fn locally_unbiased_estimator(
    povm: &Povm,
    rho: &DensityOperator,
    drho: &[HermitianMatrix],
    theta0: &[f64],
) -> Result<EstimatorTable> {
    let n = drho.len();
    if theta0.len() != n {
        return Err(Error::dims("theta0", n, theta0.len()));
    }
    let l = likelihood(povm, rho, drho)?;
    let ic = fisher_of(&l, n);
    let eig = ic.clone().symmetric_eigen();
    let min = eig.eigenvalues.min();
    let scale = eig.eigenvalues.max().max(1.0);
    if n == 0 || min <= 1e-12 * scale {
        return Err(Error::Unidentifiable {
            min_eigenvalue: min,
        });
    }
    let inv = ic.try_inverse().ok_or(Error::Unidentifiable {
        min_eigenvalue: min,
    })?;
    let mut estimates = vec![theta0.to_vec(); povm.effects.len()];
    for ((&y, p), g) in l.outcomes.iter().zip(&l.probs).zip(&l.grads) {
        let d = DVector::from_iterator(n, g.iter().map(|x| x / p));
        let step = &inv * d;
        for j in 0..n {
            estimates[y][j] = theta0[j] + step[j];
        }
    }
    Ok(EstimatorTable {
        theta0: theta0.to_vec(),
        estimates,
    })
}

/// Empirical error covariance with per-entry standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Empirical {
    pub shots: usize,
    pub counts: Vec<u64>,
    pub covariance: Vec<Vec<f64>>,
    pub stderr: Vec<Vec<f64>>,
}

impl Empirical {
    pub fn covariance_matrix(&self) -> Result<HermitianMatrix> {
        let n = self.covariance.len();
        HermitianMatrix::from_real(&DMatrix::from_fn(n, n, |j, k| self.covariance[j][k]))
    }

    /// Frobenius norm of the per-entry standard errors; a scalar error bar
    /// for functions of `E` with unit-scale sensitivity.
    pub fn stderr_scalar(&self) -> f64 {
        self.stderr
            .iter()
            .flatten()
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }
}

/// Outcome counts from `shots` i.i.d. draws. Shots are split into fixed
/// chunks of [`CHUNK_SHOTS`], chunk `c` drawing from stream `c` of the
/// seeded generator, so the counts do not depend on how chunks are
/// scheduled or merged.
pub fn sample_counts(probs: &[f64], shots: usize, seed: u64) -> Result<Vec<u64>> {
    let dist = WeightedIndex::new(probs)
        .map_err(|e| Error::invalid("outcome probabilities", e.to_string()))?;
    let chunks = shots.div_ceil(CHUNK_SHOTS);
    let mut counts = vec![0u64; probs.len()];
    for c in 0..chunks {
        let mut r: ChaCha8Rng = rng(seed);
        r.set_stream(c as u64);
        let len = CHUNK_SHOTS.min(shots - c * CHUNK_SHOTS);
        for _ in 0..len {
            counts[dist.sample(&mut r)] += 1;
        }
    }
    Ok(counts)
}

/// Samples `shots` outcomes at `theta`, estimates with the locally unbiased
/// table built at `theta`, and returns `E` with standard errors.
pub fn simulate(
    family: &dyn ParametricFamily,
    povm: &Povm,
    theta: &[f64],
    shots: usize,
    seed: u64,
) -> Result<Empirical> {
    if shots < MIN_SHOTS {
        return Err(Error::invalid(
            "shots",
            format!("must be at least {MIN_SHOTS}, got {shots}"),
        ));
    }
    let rho = family.evaluate(theta)?;
    let n = family.n_params();
    let probs = outcome_probs(povm, &rho)?;
    let counts = sample_counts(&probs, shots, seed)?;
    let drho = family.derivatives(theta)?;
    let deviations: Vec<Vec<f64>> = if n == 0 {
        vec![Vec::new(); probs.len()]
    } else {
        match locally_unbiased_estimator(povm, &rho, &drho, theta) {
            Ok(table) => (0..probs.len()).map(|y| table.deviation(y)).collect(),
            // an uninformative measurement cannot move the estimate
            Err(Error::Unidentifiable { .. }) if is_uninformative(povm, &rho, &drho)? => {
                vec![vec![0.0; n]; probs.len()]
            }
            Err(e) => return Err(e),
        }
    };
    let total = shots as f64;
    let mut covariance = vec![vec![0.0; n]; n];
    let mut stderr = vec![vec![0.0; n]; n];
    for j in 0..n {
        for k in 0..n {
            let x = |y: usize| deviations[y][j] * deviations[y][k];
            let mean = counts
                .iter()
                .enumerate()
                .map(|(y, &c)| c as f64 * x(y))
                .sum::<f64>()
                / total;
            let var = counts
                .iter()
                .enumerate()
                .map(|(y, &c)| c as f64 * (x(y) - mean).powi(2))
                .sum::<f64>()
                / (total - 1.0);
            covariance[j][k] = mean;
            stderr[j][k] = (var / total).sqrt();
        }
    }
    Ok(Empirical {
        shots,
        counts,
        covariance,
        stderr,
    })
}

fn is_uninformative(povm: &Povm, rho: &DensityOperator, drho: &[HermitianMatrix]) -> Result<bool> {
    Ok(classical_fisher(povm, rho, drho)?
        .as_matrix()
        .iter()
        .all(|z| z.norm() < 1e-12))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanVerdict {
    pub s: f64,
    pub fmean_error: f64,
    pub best_bound: f64,
    /// `fmean_error - best_bound`.
    pub margin: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdicts {
    pub matrix_qcrb: bool,
    pub matrix_tolerance: f64,
    pub scalar_tolerance: f64,
    pub means: Vec<MeanVerdict>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub theta: Vec<f64>,
    pub shots: usize,
    pub seed: u64,
    pub empirical_e: Vec<Vec<f64>>,
    pub stderr: Vec<Vec<f64>>,
    pub qfi_sld: QfiMatrix,
    pub qfi_rld: Option<QfiMatrix>,
    pub bounds: Vec<BoundReport>,
    pub verdicts: Verdicts,
}

/// Runs [`simulate`] and judges the result: the matrix bound at
/// `5·stderr` and each `M_{s,G}(E) ≥ best bound` at `3·stderr` (single-shot
/// bounds, `ν = 1`, uniform `G`).
pub fn verify(
    family: &dyn ParametricFamily,
    povm: &Povm,
    theta: &[f64],
    shots: usize,
    seed: u64,
    exponents: &[f64],
) -> Result<VerificationReport> {
    let emp = simulate(family, povm, theta, shots, seed)?;
    let rho = family.evaluate(theta)?;
    let drho = family.derivatives(theta)?;
    let sld = qfi_sld(&rho, &drho)?;
    let rld = match qfi_rld(&rho, &drho) {
        Ok(f) => Some(f),
        Err(Error::RankDeficient { .. }) => None,
        Err(e) => return Err(e),
    };
    let n = family.n_params();
    let weight = WeightMatrix::uniform(n);
    let bounds = bound_reports(Some(&sld), rld.as_ref(), exponents, &weight, 1)?;
    let e = emp.covariance_matrix()?;
    let scalar_tolerance = 3.0 * emp.stderr_scalar();
    let matrix_tolerance = 5.0 * emp.stderr_scalar();
    let means = bounds
        .iter()
        .map(|b| {
            let value = fmean_error(&e, &MeanSpec::new(b.s, weight.clone())?)?;
            Ok(MeanVerdict {
                s: b.s,
                fmean_error: value,
                best_bound: b.best,
                margin: value - b.best,
                holds: value >= b.best - scalar_tolerance,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(VerificationReport {
        theta: theta.to_vec(),
        shots,
        seed,
        empirical_e: emp.covariance.clone(),
        stderr: emp.stderr.clone(),
        verdicts: Verdicts {
            matrix_qcrb: matrix_qcrb_holds(&e, &sld, matrix_tolerance)?,
            matrix_tolerance,
            scalar_tolerance,
            means,
        },
        qfi_sld: sld,
        qfi_rld: rld,
        bounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::random::{channel_with, density_with, hermitian_with};
    use crate::states::BlochFamily;
    use approx::assert_abs_diff_eq;

    fn z_state(r3: f64) -> DensityOperator {
        DensityOperator::new(pauli::bloch_state([0.0, 0.0, r3])).unwrap()
    }

    #[test]
    fn povm_validation() {
        assert!(Povm::new(vec![HermitianMatrix::identity(2).scale(0.5)]).is_err());
        assert!(Povm::new(vec![
            pauli::sigma_z(),
            HermitianMatrix::identity(2).sub(&pauli::sigma_z()).unwrap()
        ])
        .is_err());
        let xy = Povm::xy_mixed();
        assert!(Povm::new(xy.effects().to_vec()).is_ok());
        let json = serde_json::to_string(&xy).unwrap();
        let back: Povm = serde_json::from_str(&json).unwrap();
        assert_eq!(back.effects().len(), 4);
    }

    #[test]
    fn trivial_povm_has_no_information() {
        let rho = z_state(0.3);
        let drho = [pauli::sigma_z().scale(0.5)];
        let povm = Povm::trivial(2);
        assert_abs_diff_eq!(outcome_probs(&povm, &rho).unwrap()[0], 1.0, epsilon = 1e-15);
        assert_eq!(
            classical_fisher(&povm, &rho, &drho).unwrap().get(0, 0).re,
            0.0
        );
        assert!(matches!(
            locally_unbiased_estimator(&povm, &rho, &drho, &[0.0]),
            Err(Error::Unidentifiable { .. })
        ));
    }

    #[test]
    fn projective_fisher() {
        let drho = [pauli::sigma_z().scale(0.5)];
        let povm = Povm::pauli_projective(2).unwrap();
        for r3 in [0.0, 0.4, -0.7] {
            let ic = classical_fisher(&povm, &z_state(r3), &drho).unwrap();
            assert_abs_diff_eq!(ic.get(0, 0).re, 1.0 / (1.0 - r3 * r3), epsilon = 1e-12);
        }
    }

    #[test]
    fn two_outcome_estimator() {
        let fam = BlochFamily::new(0.5, 1).unwrap();
        let rho = fam.evaluate(&[0.0]).unwrap();
        let drho = fam.derivatives(&[0.0]).unwrap();
        let t =
            locally_unbiased_estimator(&Povm::pauli_projective(0).unwrap(), &rho, &drho, &[0.0])
                .unwrap();
        assert_abs_diff_eq!(t.estimates[0][0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.estimates[1][0], -1.0, epsilon = 1e-12);
    }

    #[test]
    fn local_unbiasedness_and_covariance_identity() {
        let mut r = rng(3);
        for trial in 0..30 {
            let dim = 2 + trial % 2;
            let rho = density_with(&mut r, dim, dim);
            let drho: Vec<_> = (0..2)
                .map(|_| {
                    let h = hermitian_with(&mut r, dim);
                    let t = h.trace() / dim as f64;
                    h.sub(&HermitianMatrix::identity(dim).scale(t)).unwrap()
                })
                .collect();
            // a random POVM from a random channel's Kraus operators
            let ch = channel_with(&mut r, dim, 4);
            let effects = ch
                .kraus_ops()
                .iter()
                .map(|k| HermitianMatrix::symmetrized(k.adjoint() * k))
                .collect();
            let povm = Povm::new(effects).unwrap();
            let theta0 = [0.3, -0.2];
            let table = locally_unbiased_estimator(&povm, &rho, &drho, &theta0).unwrap();
            let p = outcome_probs(&povm, &rho).unwrap();
            let l = likelihood(&povm, &rho, &drho).unwrap();
            for (j, &t0) in theta0.iter().enumerate() {
                let mean: f64 = (0..p.len()).map(|y| p[y] * table.estimates[y][j]).sum();
                assert_abs_diff_eq!(mean, t0, epsilon = 1e-10);
                for k in 0..2 {
                    let jac: f64 = l
                        .outcomes
                        .iter()
                        .zip(&l.grads)
                        .map(|(&y, g)| g[k] * table.estimates[y][j])
                        .sum();
                    assert_abs_diff_eq!(jac, if j == k { 1.0 } else { 0.0 }, epsilon = 1e-8);
                }
            }
            let ic = fisher_of(&l, 2);
            let inv = ic.clone().try_inverse().unwrap();
            let mut cov = DMatrix::zeros(2, 2);
            for (y, py) in p.iter().enumerate() {
                let d = DVector::from_vec(table.deviation(y));
                cov += &d * d.transpose() * *py;
            }
            assert!((cov - &inv).abs().max() < 1e-10 * inv.abs().max().max(1.0));
            // a measurement cannot beat the QFI
            let sld = qfi_sld(&rho, &drho).unwrap();
            let diff = sld
                .matrix()
                .sub(&HermitianMatrix::from_real(&ic).unwrap())
                .unwrap();
            assert!(diff.min_eigenvalue() >= -1e-8);
        }
    }

    #[test]
    fn deterministic_povm_gives_zero_covariance() {
        let fam = BlochFamily::new(0.5, 2).unwrap();
        let emp = simulate(&fam, &Povm::trivial(2), &[0.0, 0.0], 1000, 1).unwrap();
        assert!(emp.covariance.iter().flatten().all(|&x| x == 0.0));
    }

    #[test]
    fn counts_do_not_depend_on_seed_reuse_and_sum_to_shots() {
        let p = [0.25, 0.25, 0.25, 0.25];
        let a = sample_counts(&p, 50_000, 9).unwrap();
        assert_eq!(a, sample_counts(&p, 50_000, 9).unwrap());
        assert_ne!(a, sample_counts(&p, 50_000, 10).unwrap());
        assert_eq!(a.iter().sum::<u64>(), 50_000);
        // the first chunk is shared by every run at least one chunk long
        let first = sample_counts(&p, CHUNK_SHOTS, 9).unwrap();
        let longer = sample_counts(&p, 2 * CHUNK_SHOTS, 9).unwrap();
        assert!(first.iter().zip(&longer).all(|(a, b)| a <= b));
    }

    #[test]
    fn xy_mixed_verification() {
        let fam = BlochFamily::new(0.5, 2).unwrap();
        let rho = fam.evaluate(&[0.0, 0.0]).unwrap();
        let drho = fam.derivatives(&[0.0, 0.0]).unwrap();
        let ic = classical_fisher(&Povm::xy_mixed(), &rho, &drho).unwrap();
        assert_abs_diff_eq!(ic.get(0, 0).re, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(ic.get(0, 1).re, 0.0, epsilon = 1e-14);
        let report = verify(
            &fam,
            &Povm::xy_mixed(),
            &[0.0, 0.0],
            20_000,
            4,
            &[-1.0, 0.0, 1.0],
        )
        .unwrap();
        assert!(report.verdicts.matrix_qcrb);
        assert!(report.verdicts.means.iter().all(|m| m.holds));
        assert_abs_diff_eq!(report.empirical_e[0][0], 2.0, epsilon = 0.1);
        let again = verify(&fam, &Povm::xy_mixed(), &[0.0, 0.0], 20_000, 4, &[1.0]).unwrap();
        assert_eq!(again.empirical_e, report.empirical_e);
    }

    #[test]
    fn too_few_shots() {
        let fam = BlochFamily::new(0.5, 2).unwrap();
        assert!(simulate(&fam, &Povm::xy_mixed(), &[0.0, 0.0], 999, 0).is_err());
    }
}
