//! `fmean-qcrb`: command-line front end for the f-mean QCRB library.
//!
//! Exit codes: 0 success, 1 I/O failure or a failed `verify` verdict,
//! 2 invalid input, 3 domain or numerical failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fmean_qcrb::bounds::{bound_reports, BoundReport};
use fmean_qcrb::coherent::{
    analytic_bound, numeric_qfis, region_csv, region_scan_with_tolerance, AnalyticBound, Grid,
    RegionRecord, SignalModel, VERDICT_TOL,
};
use fmean_qcrb::estimation::{verify, Povm, VerificationReport};
use fmean_qcrb::hermitian::{c, HermitianMatrix, MatrixJson};
use fmean_qcrb::mean::{WeightJson, WeightMatrix};
use fmean_qcrb::qfi::{qfi_rld, qfi_sld, QfiKind, QfiMatrix};
use fmean_qcrb::resource::{coherence_max, coherence_qubit, coherence_search, ReferenceBasis};
use fmean_qcrb::states::{BlochFamily, DensityOperator, FamilySpec, ParametricFamily};
use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(
    name = "fmean-qcrb",
    version,
    about = "Generalized-mean quantum Cramer-Rao bounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Args, Debug)]
struct Global {
    /// Write the main output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Verdict margin for the coherent-signal region scan.
    #[arg(long, global = true, default_value_t = VERDICT_TOL)]
    tol: f64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// QFI matrices of a parametric family at a point.
    Qfi(QfiArgs),
    /// f-mean bounds from QFI matrices.
    Bounds(BoundsArgs),
    /// Coherent signal in a thermal background: closed-form bounds and the
    /// permitted region of eigen-errors.
    CoherentSignal(SignalArgs),
    /// Arithmetic-mean QFI coherence of a state.
    Coherence(CoherenceArgs),
    /// Monte Carlo check of the bounds with a measurement.
    Verify(VerifyArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum KindArg {
    Sld,
    Rld,
    Both,
}

#[derive(Args, Debug)]
struct QfiArgs {
    /// Family spec JSON file.
    #[arg(long)]
    family: PathBuf,
    /// Parameter point, comma separated (default: all zeros).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    theta: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value_t = KindArg::Both)]
    kind: KindArg,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    /// QFI JSON files, each holding one matrix or an array of them.
    #[arg(required = true)]
    qfi: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [-1.0, 0.0, 1.0])]
    s: Vec<f64>,
    /// `uniform` or a weight-matrix JSON file.
    #[arg(long, default_value = "uniform")]
    weights: String,
    #[arg(long, default_value_t = 1)]
    nu: u32,
}

#[derive(Args, Debug)]
struct SignalArgs {
    /// Mean thermal photon number.
    #[arg(long, allow_hyphen_values = true)]
    eta: f64,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [-1.0, 0.0, 1.0])]
    s: Vec<f64>,
    /// `min:max:steps`; give twice, for E1 then E2.
    #[arg(long, num_args = 1)]
    grid: Vec<String>,
    /// Also run the truncated-Fock oracle with this many levels.
    #[arg(long)]
    trunc: Option<usize>,
    /// Signal for the Fock oracle, `re,im`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [0.3, 0.4])]
    mu: Vec<f64>,
    /// Also write the region CSV here (JSON format only).
    #[arg(long)]
    region_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CoherenceArgs {
    /// Density-matrix JSON file.
    #[arg(long)]
    state: PathBuf,
    #[arg(long, default_value_t = 2000)]
    trials: usize,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Family spec JSON file or `builtin:bloch`.
    #[arg(long, default_value = "builtin:bloch")]
    family: String,
    /// z0 of the builtin Bloch family.
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    z0: f64,
    /// POVM JSON file or `builtin:xy-mixed`.
    #[arg(long, default_value = "builtin:xy-mixed")]
    povm: String,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    theta: Option<Vec<f64>>,
    #[arg(long, default_value_t = 100_000)]
    shots: usize,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [-1.0, 0.0, 1.0])]
    s: Vec<f64>,
}

#[derive(Debug)]
enum Failure {
    Validation(String),
    Domain(String),
    Io(String),
    Verdict,
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Io(_) | Failure::Verdict => 1,
            Failure::Validation(_) => 2,
            Failure::Domain(_) => 3,
        }
    }
}

impl From<fmean_qcrb::Error> for Failure {
    fn from(e: fmean_qcrb::Error) -> Self {
        if e.is_validation() {
            Failure::Validation(e.to_string())
        } else {
            Failure::Domain(e.to_string())
        }
    }
}

type Outcome<T> = Result<T, Failure>;

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Validation(msg.into())
}

fn read_json<T: DeserializeOwned>(path: &Path, what: &str) -> Outcome<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| invalid(format!("cannot read {what} file {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| invalid(format!("{what} file {}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output types serialize");
    s.push('\n');
    s
}

fn write_to(path: Option<&Path>, text: &str) -> Outcome<()> {
    match path {
        Some(p) => fs::write(p, text)
            .map_err(|e| Failure::Io(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json_only(g: &Global, command: &str) -> Outcome<()> {
    if g.format == Format::Csv {
        return Err(invalid(format!(
            "--format csv is not available for {command}"
        )));
    }
    Ok(())
}

fn theta_or_zeros(theta: Option<Vec<f64>>, n: usize) -> Outcome<Vec<f64>> {
    let theta = theta.unwrap_or_else(|| vec![0.0; n]);
    if theta.len() != n {
        return Err(invalid(format!(
            "--theta has {} entries, the family has {n} parameters",
            theta.len()
        )));
    }
    Ok(theta)
}

fn run_qfi(g: &Global, a: QfiArgs) -> Outcome<()> {
    json_only(g, "qfi")?;
    let spec: FamilySpec = read_json(&a.family, "family")?;
    let family = spec.build()?;
    let theta = theta_or_zeros(a.theta, family.n_params())?;
    let rho = family.evaluate(&theta)?;
    let drho = family.derivatives(&theta)?;
    let text = match a.kind {
        KindArg::Sld => to_json(&qfi_sld(&rho, &drho)?),
        KindArg::Rld => to_json(&qfi_rld(&rho, &drho)?),
        KindArg::Both => {
            let mut out = vec![qfi_sld(&rho, &drho)?];
            match qfi_rld(&rho, &drho) {
                Ok(f) => out.push(f),
                Err(e @ fmean_qcrb::Error::RankDeficient { .. }) => {
                    eprintln!("note: skipping RLD: {e}")
                }
                Err(e) => return Err(e.into()),
            }
            to_json(&out)
        }
    };
    write_to(g.out.as_deref(), &text)
}

#[derive(serde::Deserialize)]
#[serde(untagged)]
enum QfiFile {
    One(QfiMatrix),
    Many(Vec<QfiMatrix>),
}

fn bounds_csv(reports: &[BoundReport]) -> String {
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    let mut out = String::from("s,nu,plain_sld,plain_rld,refined_rld,best\n");
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.s,
            r.nu,
            opt(r.plain_bound_sld),
            opt(r.plain_bound_rld),
            opt(r.refined_bound_rld),
            r.best
        ));
    }
    out
}

fn run_bounds(g: &Global, a: BoundsArgs) -> Outcome<()> {
    let mut sld = None;
    let mut rld = None;
    for path in &a.qfi {
        let items = match read_json::<QfiFile>(path, "QFI")? {
            QfiFile::One(f) => vec![f],
            QfiFile::Many(v) => v,
        };
        for f in items {
            let slot = match f.kind() {
                QfiKind::Sld => &mut sld,
                QfiKind::Rld => &mut rld,
            };
            if slot.is_some() {
                return Err(invalid(format!(
                    "more than one {:?} QFI matrix given",
                    f.kind()
                )));
            }
            *slot = Some(f);
        }
    }
    let n = sld
        .as_ref()
        .or(rld.as_ref())
        .map(QfiMatrix::n_params)
        .unwrap_or(0);
    if let (Some(s), Some(r)) = (&sld, &rld) {
        if s.n_params() != r.n_params() {
            return Err(invalid("SLD and RLD QFI matrices have different sizes"));
        }
    }
    let weight: WeightMatrix = if a.weights == "uniform" {
        WeightMatrix::uniform(n)
    } else {
        let w: WeightJson = read_json(Path::new(&a.weights), "weight")?;
        w.resolve(n)?
    };
    if weight.was_renormalized() {
        eprintln!("warning: weight matrix rescaled to unit trace");
    }
    let reports = bound_reports(sld.as_ref(), rld.as_ref(), &a.s, &weight, a.nu)?;
    let text = match g.format {
        Format::Json => to_json(&reports),
        Format::Csv => bounds_csv(&reports),
    };
    write_to(g.out.as_deref(), &text)
}

#[derive(Serialize)]
struct FockOracle {
    n_trunc: usize,
    mu: [f64; 2],
    sld: QfiMatrix,
    rld: QfiMatrix,
}

#[derive(Serialize)]
struct SignalOutput {
    eta: f64,
    bounds: Vec<AnalyticBound>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fock_oracle: Option<FockOracle>,
    #[serde(skip_serializing_if = "Option::is_none")]
    region: Option<Vec<RegionRecord>>,
}

fn run_signal(g: &Global, a: SignalArgs) -> Outcome<()> {
    let grids = match a.grid.len() {
        0 => None,
        2 => Some((
            a.grid[0].parse::<Grid>()?.points(),
            a.grid[1].parse::<Grid>()?.points(),
        )),
        k => {
            return Err(invalid(format!(
                "--grid must be given twice (E1 then E2), got {k}"
            )))
        }
    };
    if g.format == Format::Csv && grids.is_none() {
        return Err(invalid(
            "--format csv emits the region CSV and needs two --grid values",
        ));
    }
    if grids.is_none() && a.region_out.is_some() {
        return Err(invalid("--region-out needs two --grid values"));
    }
    if a.mu.len() != 2 {
        return Err(invalid("--mu takes two numbers, re,im"));
    }
    let bounds =
        a.s.iter()
            .map(|&s| analytic_bound(a.eta, s))
            .collect::<fmean_qcrb::Result<Vec<_>>>()?;
    let region = grids
        .map(|(e1, e2)| region_scan_with_tolerance(a.eta, &e1, &e2, &a.s, g.tol))
        .transpose()?;
    let fock_oracle = match a.trunc {
        Some(n) => {
            let (sld, rld) = numeric_qfis(&SignalModel::new(a.eta, c(a.mu[0], a.mu[1]))?, n)?;
            Some(FockOracle {
                n_trunc: n,
                mu: [a.mu[0], a.mu[1]],
                sld,
                rld,
            })
        }
        None => None,
    };
    match g.format {
        Format::Csv => write_to(
            g.out.as_deref(),
            &region_csv(region.as_deref().unwrap_or_default()),
        ),
        Format::Json => {
            if let (Some(path), Some(records)) = (&a.region_out, &region) {
                write_to(Some(path), &region_csv(records))?;
            }
            let out = SignalOutput {
                eta: a.eta,
                bounds,
                fock_oracle,
                region,
            };
            write_to(g.out.as_deref(), &to_json(&out))
        }
    }
}

#[derive(Serialize)]
struct CoherenceOutput {
    exact: Option<f64>,
    upper_bound: f64,
    max_for_dim: f64,
    trials: usize,
    seed: u64,
}

fn run_coherence(g: &Global, a: CoherenceArgs) -> Outcome<()> {
    json_only(g, "coherence")?;
    let m: MatrixJson = read_json(&a.state, "state")?;
    let rho = DensityOperator::new(HermitianMatrix::validated("state", m.to_complex()?)?)?;
    let n = rho.dim();
    let exact = if n == 2 {
        Some(coherence_qubit(&rho)?)
    } else {
        None
    };
    let search = coherence_search(&rho, &ReferenceBasis::new(n)?, a.trials, g.seed)?;
    let out = CoherenceOutput {
        exact,
        upper_bound: search.upper_bound,
        max_for_dim: coherence_max(n),
        trials: a.trials,
        seed: g.seed,
    };
    write_to(g.out.as_deref(), &to_json(&out))
}

fn run_verify(g: &Global, a: VerifyArgs) -> Outcome<()> {
    json_only(g, "verify")?;
    let family: Box<dyn ParametricFamily + Send + Sync> = match a.family.as_str() {
        "builtin:bloch" => Box::new(BlochFamily::new(a.z0, 2)?),
        other if other.starts_with("builtin:") => {
            return Err(invalid(format!("unknown builtin family {other}")))
        }
        path => read_json::<FamilySpec>(Path::new(path), "family")?.build()?,
    };
    let povm: Povm = match a.povm.as_str() {
        "builtin:xy-mixed" => Povm::xy_mixed(),
        other if other.starts_with("builtin:") => {
            return Err(invalid(format!("unknown builtin POVM {other}")))
        }
        path => read_json(Path::new(path), "POVM")?,
    };
    let theta = theta_or_zeros(a.theta, family.n_params())?;
    let report: VerificationReport = verify(family.as_ref(), &povm, &theta, a.shots, g.seed, &a.s)?;
    write_to(g.out.as_deref(), &to_json(&report))?;
    let v = &report.verdicts;
    if v.matrix_qcrb && v.means.iter().all(|m| m.holds) {
        Ok(())
    } else {
        eprintln!("verification failed: a bound is violated beyond its statistical tolerance");
        Err(Failure::Verdict)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let g = &cli.global;
    let result = match cli.command {
        Command::Qfi(a) => run_qfi(g, a),
        Command::Bounds(a) => run_bounds(g, a),
        Command::CoherentSignal(a) => run_signal(g, a),
        Command::Coherence(a) => run_coherence(g, a),
        Command::Verify(a) => run_verify(g, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Validation(m) | Failure::Domain(m) | Failure::Io(m) => {
                    eprintln!("error: {m}")
                }
                Failure::Verdict => {}
            }
            ExitCode::from(f.code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }
}
