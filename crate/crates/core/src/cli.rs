//! The `lecam` command line.
//!
//! JSON results go to stdout in canonical form, a short human summary to stderr. Exit
//! codes: 0 success, 2 invalid input, 3 falsified property, 64 usage error.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::composition::{nft_terms, verify_composition_bound, ChainSpec, Representation};
use crate::deficiency::{deficiency, deficiency_bruteforce_search, lecam_distance};
use crate::error::{Error, Result};
use crate::experiment::{DeterministicMap, Experiment};
use crate::gaussian::{self, Grid};
use crate::hierarchy::classify_hierarchy;
use crate::json;
use crate::risk::{
    empirical_deficiency_gap, exhaustive_class, ClassEntry, DecisionProblem, FrequencyTable,
};
use crate::shannon;
use crate::verify::{self, VerifyOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_FALSIFIED: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Parser, Debug)]
#[command(name = "lecam", version, about = "Le Cam deficiency between finite experiments")]
struct Cli {
    /// Write a run manifest (subcommand, inputs, seed, version, outputs) to this path.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Deficiency δ(source, target) by linear programming.
    Deficiency(DeficiencyArgs),
    /// Sufficiency, likelihood distortion, testing and Le Cam levels of a map.
    Hierarchy(HierarchyArgs),
    /// Empirical deficiency gap over a finite decision class.
    Certify(CertifyArgs),
    /// Binned Gaussian location families.
    #[command(subcommand)]
    Gaussian(GaussianCommand),
    /// Composition bound for a chain of approximate kernels.
    Compose(ComposeArgs),
    /// Fidelity, invariance and task-gap terms of a representation.
    Nft(NftArgs),
    /// Repetition codes over the binary symmetric channel; CSV on stdout.
    Shannon(ShannonArgs),
    /// Run the full regression corpus.
    VerifyPaper(VerifyArgs),
}

#[derive(Args, Debug)]
struct DeficiencyArgs {
    /// Experiment JSON `{name, parameters, outcomes, rows}`.
    #[arg(long)]
    source: PathBuf,
    #[arg(long)]
    target: PathBuf,
    /// Report both directions and the Le Cam distance.
    #[arg(long)]
    both: bool,
    /// Cross-check with a grid search at this resolution (at most 3 target outcomes).
    #[arg(long, value_name = "RES")]
    oracle: Option<f64>,
}

#[derive(Args, Debug)]
struct HierarchyArgs {
    #[arg(long)]
    experiment: PathBuf,
    /// Deterministic map JSON `{mapping, from_outcomes?, to_outcomes?}`.
    #[arg(long)]
    map: PathBuf,
    #[arg(long, default_value_t = 1e-6)]
    eps: f64,
}

#[derive(Args, Debug)]
struct CertifyArgs {
    /// Frequency table `{parameters, outcomes, counts}` or experiment JSON.
    #[arg(long)]
    source: PathBuf,
    #[arg(long)]
    target: PathBuf,
    /// `exhaustive`, or a JSON file listing `{problem, source_rules, target_rules}` entries.
    #[arg(long, default_value = "exhaustive")]
    class: String,
    /// Threshold for the ε-simulability flag.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Decision problem JSON for the exhaustive class (default: 0-1 loss over parameters).
    #[arg(long)]
    problem: Vec<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum GaussianCommand {
    /// Sweep the scaling representation x -> c x between N(θ,1) and N(θ,σ²).
    ///
    /// CSV columns: c, invariance_error, source_fidelity, target_fidelity.
    Collapse(CollapseArgs),
    /// Convolution kernel between N(θ,0.01) and N(θ,1) on a binned grid.
    Ce3(Ce3Args),
}

#[derive(Args, Debug)]
struct CollapseArgs {
    #[arg(long, default_value_t = 2.0)]
    sigma: f64,
    /// Scales as `lo:hi:step`, both ends included.
    #[arg(long, default_value = "-1:1:0.05", allow_hyphen_values = true)]
    c_grid: String,
    /// Observation grid `lo:hi:step` (default -8:8:0.8).
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    /// Comma-separated means (default -1,0,1).
    #[arg(long, allow_hyphen_values = true, value_delimiter = ',')]
    thetas: Vec<f64>,
    /// Also write the table as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct Ce3Args {
    #[arg(long, default_value_t = 0.01)]
    step: f64,
    #[arg(long, default_value_t = -6.0, allow_hyphen_values = true)]
    lo: f64,
    #[arg(long, default_value_t = 6.1, allow_hyphen_values = true)]
    hi: f64,
    #[arg(long, allow_hyphen_values = true, value_delimiter = ',', default_value = "0,0.1")]
    thetas: Vec<f64>,
    /// Skip the wide-to-tight deficiency LP.
    #[arg(long)]
    no_pairwise: bool,
}

#[derive(Args, Debug)]
struct ComposeArgs {
    /// `{base: Experiment, ideal: [Kernel], approx: [Kernel]}`.
    #[arg(long)]
    chain: PathBuf,
}

#[derive(Args, Debug)]
struct NftArgs {
    #[arg(long)]
    source: PathBuf,
    #[arg(long)]
    target: PathBuf,
    /// Representation: a kernel or a deterministic map.
    #[arg(long)]
    map: PathBuf,
}

#[derive(Args, Debug)]
struct ShannonArgs {
    #[arg(long)]
    p: f64,
    /// Odd block lengths.
    #[arg(long, value_delimiter = ',', default_value = "1,3,5,7")]
    repetition: Vec<usize>,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, default_value_t = verify::DEFAULT_SEED)]
    seed: u64,
}

/// Reproducibility record written by `--manifest`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RunManifest {
    pub subcommand: String,
    pub inputs: Vec<String>,
    pub seed: Option<u64>,
    pub versions: String,
    pub outputs: Vec<String>,
}

struct Outcome {
    stdout: String,
    summary: String,
    falsified: bool,
}

impl Outcome {
    fn json<T: Serialize>(value: &T, summary: String, falsified: bool) -> Result<Outcome> {
        Ok(Outcome {
            stdout: json::to_canonical_string(value)?,
            summary,
            falsified,
        })
    }
}

#[derive(Default)]
struct Record {
    inputs: Vec<String>,
    outputs: Vec<String>,
    seed: Option<u64>,
}

impl Record {
    fn read<T: serde::de::DeserializeOwned>(&mut self, path: &Path) -> Result<T> {
        self.inputs.push(path.display().to_string());
        json::from_path(path).map_err(|e| match e {
            Error::Json { line, column, message } => Error::Json {
                line,
                column,
                message: format!("{}: {message}", path.display()),
            },
            Error::Io(io) => Error::Invalid(format!("cannot read {}: {io}", path.display())),
            other => other,
        })
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// [`run`] with explicit output streams.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    if let Err(e) = configure_threads() {
        let _ = writeln!(err, "error: {e}");
        return EXIT_INVALID;
    }
    let mut rec = Record::default();
    let name = subcommand_name(&cli.command);
    let result = dispatch(&cli.command, &mut rec);
    let code = match result {
        Ok(o) => {
            let _ = out.write_all(o.stdout.as_bytes());
            let _ = writeln!(err, "{}", o.summary);
            if o.falsified {
                EXIT_FALSIFIED
            } else {
                EXIT_OK
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    };
    if let Some(path) = &cli.manifest {
        let manifest = RunManifest {
            subcommand: name.into(),
            inputs: rec.inputs,
            seed: rec.seed,
            versions: format!("lecam {}", env!("CARGO_PKG_VERSION")),
            outputs: rec.outputs,
        };
        let written = json::to_canonical_string(&manifest)
            .and_then(|s| std::fs::write(path, s).map_err(Error::from));
        if let Err(e) = written {
            let _ = writeln!(err, "error: cannot write manifest: {e}");
            return code.max(EXIT_INVALID);
        }
    }
    code
}

/// Exit code for an error escaping a subcommand.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Falsified(_) | Error::NestingViolation(_) => EXIT_FALSIFIED,
        _ => EXIT_INVALID,
    }
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("LECAM_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Invalid(format!("LECAM_THREADS=`{v}` is not a positive integer")))?;
    // A second call in the same process keeps the first pool.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn subcommand_name(c: &Command) -> &'static str {
    match c {
        Command::Deficiency(_) => "deficiency",
        Command::Hierarchy(_) => "hierarchy",
        Command::Certify(_) => "certify",
        Command::Gaussian(GaussianCommand::Collapse(_)) => "gaussian collapse",
        Command::Gaussian(GaussianCommand::Ce3(_)) => "gaussian ce3",
        Command::Compose(_) => "compose",
        Command::Nft(_) => "nft",
        Command::Shannon(_) => "shannon",
        Command::VerifyPaper(_) => "verify-paper",
    }
}

fn dispatch(c: &Command, rec: &mut Record) -> Result<Outcome> {
    match c {
        Command::Deficiency(a) => run_deficiency(a, rec),
        Command::Hierarchy(a) => run_hierarchy(a, rec),
        Command::Certify(a) => run_certify(a, rec),
        Command::Gaussian(GaussianCommand::Collapse(a)) => run_collapse(a, rec),
        Command::Gaussian(GaussianCommand::Ce3(a)) => run_ce3(a),
        Command::Compose(a) => run_compose(a, rec),
        Command::Nft(a) => run_nft(a, rec),
        Command::Shannon(a) => run_shannon(a, rec),
        Command::VerifyPaper(a) => run_verify(a, rec),
    }
}

fn oracle_json(e: &Experiment, f: &Experiment, res: f64) -> Result<Value> {
    let g = deficiency_bruteforce_search(e, f, res)?;
    Ok(serde_json::json!({
        "resolution": res,
        "value": g.value,
        "exhaustive": g.exhaustive,
    }))
}

fn run_deficiency(a: &DeficiencyArgs, rec: &mut Record) -> Result<Outcome> {
    let e: Experiment = rec.read(&a.source)?;
    let f: Experiment = rec.read(&a.target)?;
    if a.both {
        let d = lecam_distance(&e, &f)?;
        let mut v = serde_json::to_value(&d)?;
        if let Some(res) = a.oracle {
            v["forward"]["oracle"] = oracle_json(&e, &f, res)?;
            v["backward"]["oracle"] = oracle_json(&f, &e, res)?;
        }
        let summary = format!(
            "δ({0}, {1}) = {2:.6}, δ({1}, {0}) = {3:.6}, Δ = {4:.6}",
            e.name(),
            f.name(),
            d.forward.value,
            d.backward.value,
            d.distance
        );
        return Outcome::json(&v, summary, false);
    }
    let d = deficiency(&e, &f)?;
    let mut v = serde_json::to_value(&d)?;
    if let Some(res) = a.oracle {
        v["oracle"] = oracle_json(&e, &f, res)?;
    }
    let summary = format!("δ({}, {}) = {:.6} ({:?})", e.name(), f.name(), d.value, d.solver_status);
    Outcome::json(&v, summary, false)
}

fn run_hierarchy(a: &HierarchyArgs, rec: &mut Record) -> Result<Outcome> {
    let e: Experiment = rec.read(&a.experiment)?;
    let t: DeterministicMap = rec.read(&a.map)?;
    let t = t.reindexed_from(e.outcomes())?;
    let r = classify_hierarchy(&e, &t, a.eps)?;
    let summary = format!(
        "sufficient: {}, distortion ≤ eps: {}, testing ≤ eps: {}, Le Cam ≤ eps: {}",
        r.levels.sufficiency,
        r.levels.likelihood_distortion,
        r.levels.testing_equivalence,
        r.levels.lecam_equivalence
    );
    Outcome::json(&r, summary, false)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum TableInput {
    Table(FrequencyTable),
    Experiment(Experiment),
}

impl TableInput {
    fn table(self) -> FrequencyTable {
        match self {
            TableInput::Table(t) => t,
            TableInput::Experiment(e) => FrequencyTable::from_experiment(&e),
        }
    }
}

fn run_certify(a: &CertifyArgs, rec: &mut Record) -> Result<Outcome> {
    let s = rec.read::<TableInput>(&a.source)?.table();
    let t = rec.read::<TableInput>(&a.target)?.table();
    let class: Vec<ClassEntry> = if a.class == "exhaustive" {
        let problems = if a.problem.is_empty() {
            vec![DecisionProblem::zero_one(&s.parameters)]
        } else {
            a.problem
                .iter()
                .map(|p| rec.read(p))
                .collect::<Result<Vec<DecisionProblem>>>()?
        };
        exhaustive_class(&s.outcomes, &t.outcomes, &problems)?
    } else {
        if !a.problem.is_empty() {
            return Err(Error::Invalid("--problem only applies to --class exhaustive".into()));
        }
        rec.read(Path::new(&a.class))?
    };
    let r = empirical_deficiency_gap(&s, &t, &class, a.epsilon)?;
    let summary = format!(
        "δ̂ = {:.6} over {} target rules{}",
        r.delta_hat,
        r.decision_class_size,
        match r.epsilon_simulable {
            Some(true) => " (ε-simulable)",
            Some(false) => " (not ε-simulable)",
            None => "",
        }
    );
    Outcome::json(&r, summary, false)
}

/// Parses `lo:hi:step` into the points `lo, lo + step, …` up to `hi` inclusive.
pub fn parse_range(s: &str) -> Result<Vec<f64>> {
    let (lo, hi, step) = parse_triple(s)?;
    if !(step > 0.0) || hi < lo {
        return Err(Error::Invalid(format!("range `{s}` needs lo ≤ hi and a positive step")));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    if n >= 1_000_000 {
        return Err(Error::Guard(format!("range `{s}` has more than a million points")));
    }
    Ok((0..=n)
        .map(|k| ((lo + k as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

fn parse_triple(s: &str) -> Result<(f64, f64, f64)> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || Error::Invalid(format!("`{s}` is not of the form lo:hi:step"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let v = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<Vec<f64>>>()?;
    Ok((v[0], v[1], v[2]))
}

fn run_collapse(a: &CollapseArgs, rec: &mut Record) -> Result<Outcome> {
    let cs = parse_range(&a.c_grid)?;
    let (default_grid, default_thetas) = gaussian::default_collapse_grid();
    let grid = match &a.grid {
        Some(g) => {
            let (lo, hi, step) = parse_triple(g)?;
            Grid::new(lo, hi, step)?
        }
        None => default_grid,
    };
    let thetas = if a.thetas.is_empty() { default_thetas } else { a.thetas.clone() };
    let rows = gaussian::invariance_collapse_sweep(a.sigma, &cs, grid, &thetas)?;
    if let Some(path) = &a.out {
        let mut w = csv::Writer::from_path(path)?;
        for r in &rows {
            w.serialize(r)?;
        }
        w.flush()?;
        rec.outputs.push(path.display().to_string());
    }
    let both_small = rows
        .iter()
        .filter(|r| r.invariance_error < 0.05 && r.source_fidelity < 0.05 && r.target_fidelity < 0.05)
        .count();
    let summary = format!(
        "{} scales, {} with invariance and both fidelities below 0.05",
        rows.len(),
        both_small
    );
    Outcome::json(&rows, summary, false)
}

fn run_ce3(a: &Ce3Args) -> Result<Outcome> {
    let grid = Grid::new(a.lo, a.hi, a.step)?;
    let mut r = gaussian::counterexample3_simulation(grid, &a.thetas)?;
    if !a.no_pairwise && a.thetas.len() >= 2 {
        let (tight, wide) = gaussian::default_deficiency_grids();
        r.pairwise_deficiency_wide_to_tight = Some(gaussian::wide_to_tight_deficiency(
            a.thetas[0],
            a.thetas[1],
            tight,
            wide,
        )?);
    }
    let summary = format!(
        "simulation error {:.2e} (bound {:.3}); {}",
        r.simulation_error, r.discretization_bound, r.convention_note
    );
    Outcome::json(&r, summary, false)
}

fn run_compose(a: &ComposeArgs, rec: &mut Record) -> Result<Outcome> {
    let spec: ChainSpec = rec.read(&a.chain)?;
    let r = verify_composition_bound(&spec)?;
    let summary = format!(
        "δ_total = {:.6} {} Σε = {:.6}",
        r.delta_total,
        if r.holds { "≤" } else { ">" },
        r.eps_sum
    );
    let falsified = !r.holds;
    Outcome::json(&r, summary, falsified)
}

fn run_nft(a: &NftArgs, rec: &mut Record) -> Result<Outcome> {
    let s: Experiment = rec.read(&a.source)?;
    let t: Experiment = rec.read(&a.target)?;
    let rep: Representation = rec.read(&a.map)?;
    let r = nft_terms(&s, &t, &rep)?;
    let summary = format!(
        "source {:.6} + target {:.6} + invariance {:.6} vs gap {:.6}: {}",
        r.source_fidelity,
        r.target_fidelity,
        r.invariance_error,
        r.task_gap,
        if r.holds { "holds" } else { "violated" }
    );
    let falsified = !r.holds;
    Outcome::json(&r, summary, falsified)
}

fn run_shannon(a: &ShannonArgs, rec: &mut Record) -> Result<Outcome> {
    let rows = shannon::repetition_sweep(a.p, &a.repetition)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        w.serialize(r)?;
    }
    let text = String::from_utf8(w.into_inner().map_err(|e| Error::Invalid(e.to_string()))?)
        .expect("csv is UTF-8");
    let summary = format!("capacity {:.6} bits per use", shannon::bsc_capacity(a.p));
    if let Some(path) = &a.out {
        std::fs::write(path, &text)?;
        rec.outputs.push(path.display().to_string());
        return Ok(Outcome { stdout: String::new(), summary, falsified: false });
    }
    Ok(Outcome { stdout: text, summary, falsified: false })
}

fn run_verify(a: &VerifyArgs, rec: &mut Record) -> Result<Outcome> {
    rec.seed = Some(a.seed);
    let r = verify::verify_paper(&VerifyOptions { seed: a.seed, ..Default::default() });
    let mut summary: Vec<String> = vec![format!("seed {}", r.seed)];
    summary.extend(r.anchors.iter().map(|x| x.line()));
    summary.push(format!("{} passed, {} failed", r.passed, r.failed));
    let falsified = !r.all_passed();
    Outcome::json(&r, summary.join("\n"), falsified)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run_with(std::iter::once("lecam").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn ranges() {
        let r = parse_range("-1:1:0.05").unwrap();
        assert_eq!(r.len(), 41);
        assert_eq!(r[20], 0.0);
        assert_eq!(r[40], 1.0);
        assert!(parse_range("1:0:0.1").is_err());
        assert!(parse_range("0:1").is_err());
    }

    #[test]
    fn usage_errors() {
        assert_eq!(run_capture(&["frobnicate"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["deficiency", "--bogus"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn shannon_csv() {
        let (code, out, _) = run_capture(&["shannon", "--p", "0.1", "--repetition", "1,3"]);
        assert_eq!(code, 0);
        let mut lines = out.lines();
        assert_eq!(lines.next().unwrap(), "n,rate,Pe,capacity,average_error");
        assert!(lines.next().unwrap().starts_with("1,1.0,0.1,"));
        assert_eq!(run_capture(&["shannon", "--p", "0.1", "--repetition", "2"]).0, EXIT_INVALID);
    }
}
