//! f-mean QFI as a resource measure.
//!
//! * asymmetry: the f-mean of the SLD QFI of `e^{iΣθZ} ρ e^{-iΣθZ}` at
//!   `θ = 0`;
//! * coherence: the convex roof of the arithmetic-mean QFI with reference
//!   generators `Z_j = |j⟩⟨j|`, which for a pure state is
//!   `(4/n)(1 - Σ_j |⟨j|ψ⟩|⁴)`. Qubits have the closed form
//!   `(tr σ₁ρ)² + (tr σ₂ρ)²`; larger systems get a stochastic upper bound.

use nalgebra::DVector;
use rand::Rng;

use crate::error::{Error, Result};
use crate::hermitian::{c, pauli, CMatrix, HermitianMatrix, C64};
use crate::mean::{weighted_f_mean, MeanSpec};
use crate::qfi::qfi_sld;
use crate::states::random::{hermitian_with, rng, unitary_with};
use crate::states::{
    check_unit, unitary_exp, unitary_family, DensityOperator, KrausChannel, ParametricFamily,
};

/// The computational basis `{|j⟩}` of an `n`-level system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReferenceBasis {
    pub dim: usize,
}

impl ReferenceBasis {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid(
                "reference basis",
                "dimension must be positive",
            ));
        }
        Ok(ReferenceBasis { dim })
    }

    /// `Z_j = |j⟩⟨j|`, orthonormal under `tr Z_j Z_k`.
    pub fn generators(&self) -> Vec<HermitianMatrix> {
        (0..self.dim)
            .map(|j| {
                let mut d = vec![0.0; self.dim];
                d[j] = 1.0;
                HermitianMatrix::from_diagonal(&d)
            })
            .collect()
    }
}

/// `ρ = Σ_l p_l |ψ_l⟩⟨ψ_l|`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleDecomposition {
    probabilities: Vec<f64>,
    states: Vec<DVector<C64>>,
}

impl EnsembleDecomposition {
    pub fn new(probabilities: Vec<f64>, states: Vec<DVector<C64>>) -> Result<Self> {
        if probabilities.len() != states.len() || states.is_empty() {
            return Err(Error::invalid(
                "ensemble",
                "needs one probability per state and at least one state",
            ));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-10 || probabilities.iter().any(|&p| p < 0.0) {
            return Err(Error::invalid(
                "ensemble",
                format!("probabilities sum to {total}"),
            ));
        }
        let dim = states[0].len();
        for psi in &states {
            if psi.len() != dim {
                return Err(Error::dims("ensemble state", dim, psi.len()));
            }
            check_unit(psi)?;
        }
        Ok(EnsembleDecomposition {
            probabilities,
            states,
        })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn states(&self) -> &[DVector<C64>] {
        &self.states
    }

    pub fn density(&self) -> Result<DensityOperator> {
        let n = self.states[0].len();
        let mut m = CMatrix::zeros(n, n);
        for (p, psi) in self.probabilities.iter().zip(&self.states) {
            m += psi * psi.adjoint() * c(*p, 0.0);
        }
        DensityOperator::new(HermitianMatrix::symmetrized(m))
    }

    /// `Σ_l p_l C(ψ_l)`.
    pub fn average_coherence(&self) -> f64 {
        self.probabilities
            .iter()
            .zip(&self.states)
            .map(|(p, psi)| p * pure_coherence_value(psi))
            .sum()
    }
}

/// f-mean of the SLD QFI of the unitary family generated by `generators`,
/// taken at `θ = 0`.
pub fn asymmetry(
    rho: &DensityOperator,
    generators: &[HermitianMatrix],
    spec: &MeanSpec,
) -> Result<f64> {
    let family = unitary_family(rho.clone(), generators.to_vec(), false)?;
    let theta = vec![0.0; generators.len()];
    let f = qfi_sld(rho, &family.derivatives(&theta)?)?;
    weighted_f_mean(f.matrix(), spec).map_err(|e| match e {
        Error::OutOfDomain { eigenvalue, .. } => Error::DegenerateInformation(format!(
            "QFI matrix has eigenvalue {eigenvalue:e}; s = {} needs a non-degenerate QFI, use s in (0, 1]",
            spec.s()
        )),
        other => other,
    })
}

fn pure_coherence_value(psi: &DVector<C64>) -> f64 {
    let n = psi.len() as f64;
    let fourth: f64 = psi.iter().map(|z| z.norm_sqr().powi(2)).sum();
    4.0 / n * (1.0 - fourth)
}

/// `(4/n)(1 - Σ_j |⟨j|ψ⟩|⁴)`.
pub fn coherence_pure(psi: &DVector<C64>, basis: &ReferenceBasis) -> Result<f64> {
    check_unit(psi)?;
    if psi.len() != basis.dim {
        return Err(Error::dims("state vector", basis.dim, psi.len()));
    }
    Ok(pure_coherence_value(psi))
}

/// Closed form for qubits: `r₁² + r₂²`.
pub fn coherence_qubit(rho: &DensityOperator) -> Result<f64> {
    if rho.dim() != 2 {
        return Err(Error::dims("qubit coherence", 2, rho.dim()));
    }
    let r = pauli::bloch_vector(rho.matrix());
    Ok(r[0] * r[0] + r[1] * r[1])
}

/// `4(n-1)/n²`, attained by the maximally coherent state.
pub fn coherence_max(n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    4.0 * (n - 1.0) / (n * n)
}

/// Eigen-ensemble of `ρ` as unnormalized columns `√λ_i |e_i⟩`.
fn eigen_columns(rho: &DensityOperator) -> CMatrix {
    let e = rho.matrix().eig();
    let keep: Vec<usize> = (0..e.dim()).filter(|&k| e.values[k] > 1e-14).collect();
    let mut a = CMatrix::zeros(rho.dim(), keep.len());
    for (dst, &k) in keep.iter().enumerate() {
        a.set_column(dst, &(e.vectors.column(k) * c(e.values[k].sqrt(), 0.0)));
    }
    a
}

/// Ensemble `ψ̃_l = Σ_i U_li √λ_i|e_i⟩` for the first `rank` columns of an
/// `m × m` unitary `U`, scored by its average coherence.
fn score(a: &CMatrix, u: &CMatrix) -> f64 {
    let rank = a.ncols();
    let mix = u.columns(0, rank).transpose();
    let psi = a * mix;
    let n = a.nrows() as f64;
    psi.column_iter()
        .map(|col| {
            let p: f64 = col.iter().map(|z| z.norm_sqr()).sum();
            if p <= 1e-300 {
                return 0.0;
            }
            let fourth: f64 = col.iter().map(|z| z.norm_sqr().powi(2)).sum();
            4.0 / n * (p - fourth / p)
        })
        .sum()
}

fn ensemble_from(a: &CMatrix, u: &CMatrix) -> Result<EnsembleDecomposition> {
    let rank = a.ncols();
    let psi = a * u.columns(0, rank).transpose();
    let mut probabilities = Vec::new();
    let mut states = Vec::new();
    for col in psi.column_iter() {
        let p: f64 = col.iter().map(|z| z.norm_sqr()).sum();
        if p > 1e-300 {
            probabilities.push(p);
            states.push(col.into_owned() / c(p.sqrt(), 0.0));
        }
    }
    let total: f64 = probabilities.iter().sum();
    for p in &mut probabilities {
        *p /= total;
    }
    EnsembleDecomposition::new(probabilities, states)
}

/// Outcome of the stochastic convex-roof search.
#[derive(Debug, Clone)]
pub struct RoofSearch {
    pub upper_bound: f64,
    pub ensemble: EnsembleDecomposition,
    pub trials: usize,
}

/// Ensemble sizes tried beyond the rank.
const EXTRA_MEMBERS: usize = 3;

/// Stochastic search over ensembles `ψ̃ = U·(√λ e)` of `ρ`.
///
/// Trial 1 is the eigen-ensemble. Every fourth later trial draws a fresh
/// Haar unitary of size `rank..=rank+3`; the rest perturb the incumbent by
/// `exp(iεH)` with an adaptive step `ε`. The incumbent only changes on
/// strict improvement, so the result is non-increasing in `trials` and the
/// run with `trials = k` is a prefix of the run with `trials = k + 1`.
pub fn coherence_search(
    rho: &DensityOperator,
    basis: &ReferenceBasis,
    trials: usize,
    seed: u64,
) -> Result<RoofSearch> {
    if trials == 0 {
        return Err(Error::invalid("trials", "must be at least 1"));
    }
    if rho.dim() != basis.dim {
        return Err(Error::dims("coherence search", basis.dim, rho.dim()));
    }
    let a = eigen_columns(rho);
    let rank = a.ncols();
    let mut best_u = CMatrix::identity(rank, rank);
    let mut best = score(&a, &best_u);
    let mut step = 0.5_f64;
    let mut r = rng(seed);
    for t in 1..trials {
        if rank == 1 {
            break;
        }
        let global = t % 4 == 1;
        let candidate = if global {
            let m = rank + r.random_range(0..=EXTRA_MEMBERS);
            unitary_with(&mut r, m)
        } else {
            let m = best_u.nrows();
            let h = hermitian_with(&mut r, m);
            let norm = h.as_matrix().norm().max(1e-300);
            let kick = unitary_exp(&h.scale(step / norm));
            &best_u * kick
        };
        let value = score(&a, &candidate);
        if value < best {
            best = value;
            best_u = candidate;
            if !global {
                step = (step * 1.5).min(1.0);
            }
        } else if !global {
            step = (step * 0.9).max(1e-7);
        }
    }
    Ok(RoofSearch {
        upper_bound: best.max(0.0),
        ensemble: ensemble_from(&a, &best_u)?,
        trials,
    })
}

/// Upper bound on the arithmetic-mean QFI of formation.
pub fn coherence_upper_bound(
    rho: &DensityOperator,
    basis: &ReferenceBasis,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    Ok(coherence_search(rho, basis, trials, seed)?.upper_bound)
}

/// Random incoherent channel with Kraus operators `P_l D_l` (permutation
/// times diagonal); maps diagonal states to diagonal states branch by
/// branch.
pub fn random_incoherent_channel(dim: usize, n_kraus: usize, seed: u64) -> Result<KrausChannel> {
    if n_kraus == 0 || dim == 0 {
        return Err(Error::invalid(
            "incoherent channel",
            "needs dim and n_kraus >= 1",
        ));
    }
    let mut r = rng(seed);
    let diag = crate::states::random::gaussian_complex(&mut r, n_kraus, dim);
    let mut ops = Vec::with_capacity(n_kraus);
    for l in 0..n_kraus {
        let mut perm: Vec<usize> = (0..dim).collect();
        for i in (1..dim).rev() {
            perm.swap(i, r.random_range(0..=i));
        }
        let mut k = CMatrix::zeros(dim, dim);
        for j in 0..dim {
            let col_norm = diag.column(j).norm();
            k[(perm[j], j)] = diag[(l, j)] / c(col_norm, 0.0);
        }
        ops.push(k);
    }
    KrausChannel::new(ops)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermitian::pauli;
    use crate::states::random::{density_with, unit_vector_with};
    use approx::assert_abs_diff_eq;

    fn uniform_vector(n: usize) -> DVector<C64> {
        DVector::from_element(n, c(1.0 / (n as f64).sqrt(), 0.0))
    }

    #[test]
    fn asymmetry_examples() {
        let diag = DensityOperator::new(HermitianMatrix::from_diagonal(&[0.6, 0.4])).unwrap();
        let gens = ReferenceBasis::new(2).unwrap().generators();
        let spec = MeanSpec::uniform(1.0, 2).unwrap();
        assert_abs_diff_eq!(
            asymmetry(&diag, &gens, &spec).unwrap(),
            0.0,
            epsilon = 1e-12
        );

        let plus = DensityOperator::pure(&uniform_vector(2)).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let gens = [
            pauli::sigma_z().scale(h),
            HermitianMatrix::identity(2).scale(h),
        ];
        assert_abs_diff_eq!(
            asymmetry(&plus, &gens, &spec).unwrap(),
            1.0,
            epsilon = 1e-12
        );

        let log_spec = MeanSpec::uniform(0.0, 2).unwrap();
        assert!(matches!(
            asymmetry(&plus, &gens, &log_spec),
            Err(Error::DegenerateInformation(_))
        ));
    }

    #[test]
    fn asymmetry_decreases_under_covariant_channels() {
        let mut r = rng(77);
        for seed in 0..40u64 {
            let dim = 2 + (seed as usize % 3);
            let rho = density_with(&mut r, dim, 1 + seed as usize % dim);
            let gens = ReferenceBasis::new(dim).unwrap().generators();
            let out = random_dephasing(dim, seed).apply(&rho).unwrap();
            for s in [0.5, 1.0] {
                let spec = MeanSpec::uniform(s, dim).unwrap();
                let before = asymmetry(&rho, &gens, &spec).unwrap();
                let after = asymmetry(&out, &gens, &spec).unwrap();
                assert!(after <= before + 1e-8, "{after} > {before}");
            }
        }
    }

    /// Kraus operators `√p_l · diag(e^{iφ_lj})`: a random phase-covariant
    /// dephasing channel.
    fn random_dephasing(dim: usize, seed: u64) -> KrausChannel {
        let mut r = rng(seed + 1000);
        let weights: Vec<f64> = (0..3).map(|_| r.random::<f64>() + 0.1).collect();
        let total: f64 = weights.iter().sum();
        let ops = weights
            .iter()
            .map(|w| {
                let mut d = CMatrix::zeros(dim, dim);
                for j in 0..dim {
                    d[(j, j)] = C64::from_polar((w / total).sqrt(), r.random::<f64>() * 6.3);
                }
                d
            })
            .collect();
        KrausChannel::new(ops).unwrap()
    }

    #[test]
    fn pure_coherence_examples() {
        let basis = ReferenceBasis::new(3).unwrap();
        let mut e1 = DVector::from_element(3, c(0.0, 0.0));
        e1[1] = c(1.0, 0.0);
        assert_abs_diff_eq!(coherence_pure(&e1, &basis).unwrap(), 0.0);
        assert_abs_diff_eq!(
            coherence_pure(&uniform_vector(2), &ReferenceBasis::new(2).unwrap()).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            coherence_pure(&uniform_vector(3), &basis).unwrap(),
            8.0 / 9.0,
            epsilon = 1e-15
        );
        let phased = DVector::from_vec(
            (0..3)
                .map(|j| C64::from_polar(1.0 / 3f64.sqrt(), 0.7 * j as f64))
                .collect(),
        );
        assert_abs_diff_eq!(
            coherence_pure(&phased, &basis).unwrap(),
            8.0 / 9.0,
            epsilon = 1e-15
        );
        assert!(coherence_pure(&uniform_vector(2), &basis).is_err());
    }

    #[test]
    fn pure_coherence_equals_mean_qfi() {
        let mut r = rng(5);
        for dim in 2..6 {
            let basis = ReferenceBasis::new(dim).unwrap();
            for _ in 0..10 {
                let psi = unit_vector_with(&mut r, dim);
                let via_qfi = crate::qfi::pure_state_mean_qfi(&psi, &basis.generators()).unwrap();
                let direct = coherence_pure(&psi, &basis).unwrap();
                assert_abs_diff_eq!(via_qfi, direct, epsilon = 1e-10);
                assert!(direct >= -1e-12 && direct <= coherence_max(dim) + 1e-12);
            }
        }
    }

    #[test]
    fn qubit_closed_form_examples() {
        let diag = DensityOperator::new(HermitianMatrix::from_diagonal(&[0.3, 0.7])).unwrap();
        assert_eq!(coherence_qubit(&diag).unwrap(), 0.0);
        let plus = DensityOperator::pure(&uniform_vector(2)).unwrap();
        assert_abs_diff_eq!(coherence_qubit(&plus).unwrap(), 1.0, epsilon = 1e-15);
        for z in [-0.5, 0.0, 0.8] {
            let rho = DensityOperator::new(pauli::bloch_state([0.3, 0.4, z])).unwrap();
            assert_abs_diff_eq!(coherence_qubit(&rho).unwrap(), 0.25, epsilon = 1e-15);
        }
        assert!(coherence_qubit(&DensityOperator::maximally_mixed(3)).is_err());
    }

    #[test]
    fn max_coherence_values() {
        assert_eq!(coherence_max(1), 0.0);
        assert_abs_diff_eq!(coherence_max(2), 1.0);
        assert_abs_diff_eq!(coherence_max(4), 0.75);
    }

    #[test]
    fn search_on_pure_and_incoherent_states() {
        let basis = ReferenceBasis::new(3).unwrap();
        let mut r = rng(8);
        let psi = unit_vector_with(&mut r, 3);
        let pure = DensityOperator::pure(&psi).unwrap();
        for trials in [1, 10] {
            assert_abs_diff_eq!(
                coherence_upper_bound(&pure, &basis, trials, 1).unwrap(),
                coherence_pure(&psi, &basis).unwrap(),
                epsilon = 1e-12
            );
        }
        let inc = DensityOperator::new(HermitianMatrix::from_diagonal(&[0.2, 0.5, 0.3])).unwrap();
        assert_abs_diff_eq!(
            coherence_upper_bound(&inc, &basis, 1, 0).unwrap(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn search_is_monotone_in_trials() {
        let basis = ReferenceBasis::new(3).unwrap();
        let rho = density_with(&mut rng(9), 3, 2);
        let mut last = f64::INFINITY;
        for trials in [1, 2, 5, 20, 100, 400] {
            let v = coherence_upper_bound(&rho, &basis, trials, 42).unwrap();
            assert!(v <= last);
            last = v;
        }
        let s = coherence_search(&rho, &basis, 400, 42).unwrap();
        let back = s.ensemble.density().unwrap();
        assert!(
            crate::hermitian::max_abs(&(back.matrix().as_matrix() - rho.matrix().as_matrix()))
                < 1e-8
        );
        assert_abs_diff_eq!(
            s.ensemble.average_coherence(),
            s.upper_bound,
            epsilon = 1e-12
        );
    }

    #[test]
    fn qubit_search_approaches_closed_form() {
        let basis = ReferenceBasis::new(2).unwrap();
        let mut r = rng(10);
        for seed in 0..10 {
            let rho = density_with(&mut r, 2, 2);
            let exact = coherence_qubit(&rho).unwrap();
            let ub = coherence_upper_bound(&rho, &basis, 2000, seed).unwrap();
            assert!(ub >= exact - 1e-12 && ub <= exact + 1e-3, "{ub} vs {exact}");
        }
    }

    #[test]
    fn incoherent_channels_map_diagonal_to_diagonal() {
        for seed in 0..10 {
            let ch = random_incoherent_channel(3, 3, seed).unwrap();
            let rho =
                DensityOperator::new(HermitianMatrix::from_diagonal(&[0.2, 0.5, 0.3])).unwrap();
            for k in ch.kraus_ops() {
                let branch = k * rho.matrix().as_matrix() * k.adjoint();
                for i in 0..3 {
                    for j in 0..3 {
                        if i != j {
                            assert!(branch[(i, j)].norm() < 1e-15);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn ensemble_validation() {
        let psi = uniform_vector(2);
        assert!(EnsembleDecomposition::new(vec![0.5], vec![psi.clone()]).is_err());
        assert!(EnsembleDecomposition::new(vec![1.0], vec![psi.clone() * c(2.0, 0.0)]).is_err());
        let e = EnsembleDecomposition::new(vec![1.0], vec![psi]).unwrap();
        assert_abs_diff_eq!(e.average_coherence(), 1.0, epsilon = 1e-15);
    }
}
