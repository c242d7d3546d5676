//! Complex coherent signal in thermal background light.
//!
//! The state is a displaced thermal state with mean thermal photon number
//! `η`; the parameters are `θ₁ = Re μ` and `θ₂ = Im μ`. The QFI matrices
//! are known in closed form:
//!
//! ```text
//! F_S = 4/(2η+1) · I₂
//! F_R = 1/(η(η+1)) · [[2η+1, -i], [i, 2η+1]]
//! ```
//!
//! [`numeric_state`] rebuilds the state in a truncated Fock basis so that
//! both matrices can be recomputed through the generic QFI engine.

use serde::{Deserialize, Serialize};

use crate::bounds::{fmean_of_eigenerrors, fmean_qcrb, refined_qcrb};
use crate::error::{Error, Result};
use crate::hermitian::{c, CMatrix, HermitianMatrix, C64};
use crate::mean::MeanSpec;
use crate::qfi::{qfi_rld, qfi_sld, restrict_to_support, QfiMatrix};
use crate::states::{
    central_difference, check_theta, unitary_exp, DensityOperator, ParametricFamily,
};

/// Default Fock truncation.
pub const DEFAULT_TRUNCATION: usize = 60;
/// Largest tolerated trace deficit of the truncated state.
pub const TRUNCATION_LIMIT: f64 = 1e-6;
/// Finite-difference step in `(Re μ, Im μ)`.
pub const SIGNAL_FD_STEP: f64 = 1e-4;
/// Eigenvalues below this are dropped before the QFI solve; the Fock
/// spectrum decays geometrically and its tail is round-off.
pub const SUPPORT_CUTOFF: f64 = 1e-10;
/// Slack on the verdict comparison in [`region_scan`].
pub const VERDICT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalModel {
    eta: f64,
    mu: C64,
}

impl SignalModel {
    pub fn new(eta: f64, mu: C64) -> Result<Self> {
        check_eta(eta)?;
        Ok(SignalModel { eta, mu })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn mu(&self) -> C64 {
        self.mu
    }

    pub fn theta(&self) -> [f64; 2] {
        [self.mu.re, self.mu.im]
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::NonPositive {
            what: "thermal photon number eta".into(),
            value: eta,
        });
    }
    Ok(())
}

/// Closed-form `(F_S, F_R)`.
pub fn analytic_qfis(eta: f64) -> Result<(QfiMatrix, QfiMatrix)> {
    check_eta(eta)?;
    let sld = QfiMatrix::sld(HermitianMatrix::identity(2).scale(4.0 / (2.0 * eta + 1.0)))?;
    let k = 1.0 / (eta * (eta + 1.0));
    let d = k * (2.0 * eta + 1.0);
    let rld = QfiMatrix::rld(HermitianMatrix::symmetrized(CMatrix::from_row_slice(
        2,
        2,
        &[c(d, 0.0), c(0.0, -k), c(0.0, k), c(d, 0.0)],
    )))?;
    Ok((sld, rld))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticBound {
    pub eta: f64,
    pub s: f64,
    pub sld_bound: f64,
    pub rld_plain: f64,
    pub rld_refined: f64,
    pub overall: f64,
}

/// Unweighted bounds at `(η, s)`, evaluated through the bound engine on the
/// closed-form QFI matrices. `overall = max(sld_bound, rld_refined)`.
pub fn analytic_bound(eta: f64, s: f64) -> Result<AnalyticBound> {
    let (sld, rld) = analytic_qfis(eta)?;
    let spec = MeanSpec::uniform(s, 2)?;
    let sld_bound = fmean_qcrb(&sld, &spec, 1)?;
    let rld_plain = fmean_qcrb(&rld, &spec, 1)?;
    let rld_refined = refined_qcrb(&rld, &spec, 1)?;
    Ok(AnalyticBound {
        eta,
        s,
        sld_bound,
        rld_plain,
        rld_refined,
        overall: sld_bound.max(rld_refined),
    })
}

fn annihilation(n: usize) -> CMatrix {
    let mut a = CMatrix::zeros(n, n);
    for k in 1..n {
        a[(k - 1, k)] = c((k as f64).sqrt(), 0.0);
    }
    a
}

/// `exp(μa† - μ*a)` in the truncated basis; unitary by construction.
fn displacement(mu: C64, n: usize) -> CMatrix {
    let a = annihilation(n);
    let generator = &a.adjoint() * mu - &a * mu.conj();
    // exp(A) = exp(i·H) with H = -iA Hermitian
    unitary_exp(&HermitianMatrix::symmetrized(generator * c(0.0, -1.0)))
}

fn thermal_weights(eta: f64, n: usize) -> Vec<f64> {
    let ratio = eta / (1.0 + eta);
    (0..n).map(|k| ratio.powi(k as i32) / (1.0 + eta)).collect()
}

/// Trace deficit estimate: the thermal tail beyond the cutoff plus the
/// population left on the highest retained Fock level.
fn truncation_deficit(eta: f64, mu: C64, n: usize) -> (f64, HermitianMatrix) {
    let weights = thermal_weights(eta, n);
    let tail = (eta / (1.0 + eta)).powi(n as i32);
    let rho = HermitianMatrix::from_diagonal(&weights)
        .congruence(&displacement(mu, n))
        .expect("square displacement");
    let edge = rho.get(n - 1, n - 1).re.max(0.0);
    (tail + edge, rho)
}

/// `D(μ) ρ_th(η) D(μ)†` in an `n_trunc`-level Fock basis, renormalized.
pub fn numeric_state(eta: f64, mu: C64, n_trunc: usize) -> Result<DensityOperator> {
    check_eta(eta)?;
    if n_trunc < 2 {
        return Err(Error::invalid("n_trunc", "must be at least 2"));
    }
    let (deficit, rho) = truncation_deficit(eta, mu, n_trunc);
    if deficit > TRUNCATION_LIMIT {
        let mut required = n_trunc;
        while truncation_deficit(eta, mu, required).0 > TRUNCATION_LIMIT && required < 1 << 12 {
            required = (required * 3).div_ceil(2);
        }
        return Err(Error::Truncation {
            deficit,
            limit: TRUNCATION_LIMIT,
            required,
        });
    }
    DensityOperator::normalized(rho)
}

/// `(Re μ, Im μ) ↦ ρ` in a truncated Fock basis, differentiated by central
/// differences with step [`SIGNAL_FD_STEP`].
#[derive(Debug, Clone, Copy)]
pub struct DisplacedThermalFamily {
    pub eta: f64,
    pub n_trunc: usize,
}

impl ParametricFamily for DisplacedThermalFamily {
    fn n_params(&self) -> usize {
        2
    }

    fn dim(&self) -> usize {
        self.n_trunc
    }

    fn evaluate(&self, theta: &[f64]) -> Result<DensityOperator> {
        check_theta(theta, 2)?;
        numeric_state(self.eta, c(theta[0], theta[1]), self.n_trunc)
    }

    fn derivatives(&self, theta: &[f64]) -> Result<Vec<HermitianMatrix>> {
        central_difference(self, theta, SIGNAL_FD_STEP)
    }
}

/// `(F_S, F_R)` of the truncated-Fock state, solved on the numerically
/// resolved support.
pub fn numeric_qfis(model: &SignalModel, n_trunc: usize) -> Result<(QfiMatrix, QfiMatrix)> {
    let family = DisplacedThermalFamily {
        eta: model.eta,
        n_trunc,
    };
    let theta = model.theta();
    let rho = family.evaluate(&theta)?;
    let drho = family.derivatives(&theta)?;
    let (rho, drho) = restrict_to_support(&rho, &drho, SUPPORT_CUTOFF)?;
    Ok((qfi_sld(&rho, &drho)?, qfi_rld(&rho, &drho)?))
}

/// `min:max:steps`, inclusive and evenly spaced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Grid {
    pub fn new(min: f64, max: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::invalid("grid", "steps must be positive"));
        }
        if !(min > 0.0) || !(max >= min) || !max.is_finite() {
            return Err(Error::invalid(
                "grid",
                format!("need 0 < min <= max, got {min}:{max}"),
            ));
        }
        Ok(Grid { min, max, steps })
    }

    pub fn points(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.min];
        }
        let step = (self.max - self.min) / (self.steps - 1) as f64;
        (0..self.steps)
            .map(|k| {
                if k + 1 == self.steps {
                    self.max
                } else {
                    self.min + step * k as f64
                }
            })
            .collect()
    }
}

impl std::str::FromStr for Grid {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(':').collect();
        let bad = || Error::invalid("grid", format!("expected min:max:steps, got \"{text}\""));
        if parts.len() != 3 {
            return Err(bad());
        }
        let min = parts[0].trim().parse().map_err(|_| bad())?;
        let max = parts[1].trim().parse().map_err(|_| bad())?;
        let steps = parts[2].trim().parse().map_err(|_| bad())?;
        Grid::new(min, max, steps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Permitted,
    Forbidden,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Permitted => "permitted",
            Verdict::Forbidden => "forbidden",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionRecord {
    pub e1: f64,
    pub e2: f64,
    pub verdict: Verdict,
    /// The exponent with the largest violation, when forbidden.
    pub binding_s: Option<f64>,
}

/// Classifies eigen-error pairs `(E₁, E₂)` against the overall bound for
/// every exponent in `s_set`. Records are row-major: `e1` outer, `e2` inner.
pub fn region_scan(
    eta: f64,
    e1_grid: &[f64],
    e2_grid: &[f64],
    s_set: &[f64],
) -> Result<Vec<RegionRecord>> {
    region_scan_with_tolerance(eta, e1_grid, e2_grid, s_set, VERDICT_TOL)
}

/// [`region_scan`] with an explicit margin: a point is forbidden when some
/// `M_s(diag(E₁, E₂))` falls below the bound by more than `tol`.
pub fn region_scan_with_tolerance(
    eta: f64,
    e1_grid: &[f64],
    e2_grid: &[f64],
    s_set: &[f64],
    tol: f64,
) -> Result<Vec<RegionRecord>> {
    if !(tol >= 0.0) {
        return Err(Error::invalid(
            "tolerance",
            format!("must be non-negative, got {tol}"),
        ));
    }
    if e1_grid.iter().chain(e2_grid).any(|&e| !(e > 0.0)) {
        return Err(Error::invalid(
            "eigen-error grid",
            "values must be positive",
        ));
    }
    if s_set.is_empty() {
        return Err(Error::invalid("region scan", "s set is empty"));
    }
    let bounds = s_set
        .iter()
        .map(|&s| Ok((s, analytic_bound(eta, s)?.overall)))
        .collect::<Result<Vec<_>>>()?;
    let mut records = Vec::with_capacity(e1_grid.len() * e2_grid.len());
    for &e1 in e1_grid {
        for &e2 in e2_grid {
            let mut worst: Option<(f64, f64)> = None;
            for &(s, bound) in &bounds {
                let violation = bound - fmean_of_eigenerrors(&[e1, e2], s)?;
                if violation > tol && worst.is_none_or(|(_, v)| violation > v) {
                    worst = Some((s, violation));
                }
            }
            records.push(RegionRecord {
                e1,
                e2,
                verdict: if worst.is_some() {
                    Verdict::Forbidden
                } else {
                    Verdict::Permitted
                },
                binding_s: worst.map(|(s, _)| s),
            });
        }
    }
    Ok(records)
}

/// Region records as CSV with header `e1,e2,verdict,binding_s`.
pub fn region_csv(records: &[RegionRecord]) -> String {
    let mut out = String::from("e1,e2,verdict,binding_s\n");
    for r in records {
        let binding = r.binding_s.map(|s| s.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.e1,
            r.e2,
            r.verdict.as_str(),
            binding
        ));
    }
    out
}
