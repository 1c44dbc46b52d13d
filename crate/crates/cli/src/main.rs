mod error;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use spinsync_core::bound::{self, BoundError, ClaimCheck, MuSequence};
use spinsync_core::dynamics::{self, DynamicsError, McReport};
use spinsync_core::gp::{self, GpAnalysis, GpParams};
use spinsync_core::graph::{density_report, Edge};
use spinsync_core::io as sio;
use spinsync_core::lift::{self, LiftOptions};
use spinsync_core::spectral::{self, StabilityVerdict};
use spinsync_core::{
    spin, BoundCertificate, CertifyOptions, Convention, Coupling, ExactRatio, FlowOptions, LiftReport, PhaseVector,
    Verdict, WeightedGraph,
};

use crate::error::{CliError, Exit};

#[derive(Debug, Parser, Serialize)]
#[command(name = "spinsync", version, about = "k-spinning of weighted Kuramoto graphs and stability certificates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Debug, Clone, clap::Args, Serialize)]
struct Global {
    /// Seed for every random draw of the run.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Residual below which a point counts as an equilibrium.
    #[arg(long, global = true, default_value_t = 1e-10)]
    eq_tol: f64,
    /// Zero tolerance for eigenvalues, as a multiple of 1 + ‖H‖∞.
    #[arg(long, global = true, default_value_t = 1e-9)]
    zero_factor: f64,
    /// Spectral matching tolerance, as a multiple of 1 + ‖H‖∞.
    #[arg(long, global = true, default_value_t = 1e-8)]
    match_factor: f64,
    /// Spread below which a trajectory counts as consensus.
    #[arg(long, global = true, default_value_t = 1e-6)]
    consensus_tol: f64,
    /// Distance, modulo rotation, for matching a known equilibrium.
    #[arg(long, global = true, default_value_t = 1e-5)]
    phase_match_tol: f64,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Report format; csv is available for `mu` and `spectrum`.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ConventionArg {
    Paper,
    Strong,
}

impl From<ConventionArg> for Convention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::Paper => Convention::PaperRatio,
            ConventionArg::Strong => Convention::StrongDensity,
        }
    }
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "lowercase")]
enum Command {
    /// Build the k-spinning of a weighted graph; prints the edge list.
    Spin {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        k: usize,
    },
    /// Analyse one member of the eight-vertex family.
    Gp {
        #[arg(long, value_name = "a,b,c,d")]
        params: GpParams,
    },
    /// Certify a stable non-consensus equilibrium on S_k(G_(p_k)).
    Certify {
        #[arg(long, required_unless_present = "k_range", conflicts_with = "k_range")]
        k: Option<u64>,
        /// Inclusive range `A..B`.
        #[arg(long, value_name = "A..B", value_parser = parse_range)]
        k_range: Option<(u64, u64)>,
        /// Also check that the flow returns from a small perturbation.
        #[arg(long)]
        perturb: bool,
        #[arg(long, default_value_t = 0.01)]
        step: f64,
        #[arg(long, default_value_t = 1e4)]
        tmax: f64,
    },
    /// Tabulate the density sequence of S_k(G_(p_k)).
    Mu {
        #[arg(long)]
        kmax: u64,
        /// Report the first k whose density exceeds this value (`p/q` or decimal).
        #[arg(long)]
        threshold: Option<ExactRatio>,
        #[arg(long, value_enum, default_value = "paper")]
        convention: ConventionArg,
        /// Where to write the JSON summary when the table goes to --out.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Monte Carlo estimate of the consensus basin.
    Simulate {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        trials: u64,
        #[arg(long, default_value_t = 0.01)]
        step: f64,
        #[arg(long, default_value_t = 1e4)]
        tmax: f64,
        /// Phase file of a known equilibrium to classify against; repeatable.
        #[arg(long)]
        known: Vec<PathBuf>,
    },
    /// Hessian spectrum and stability of an equilibrium.
    Spectrum {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        phases: PathBuf,
    },
    /// Lift an equilibrium to S_k and match the spectra.
    Lift {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        phases: PathBuf,
        #[arg(long)]
        k: usize,
    },
}

fn parse_range(s: &str) -> Result<(u64, u64), String> {
    let (a, b) = s.split_once("..").ok_or_else(|| format!("expected A..B, got {s:?}"))?;
    let a: u64 = a.trim().parse().map_err(|e| format!("{a:?}: {e}"))?;
    let b: u64 = b.trim().parse().map_err(|e| format!("{b:?}: {e}"))?;
    if a > b {
        return Err(format!("empty range {s}"));
    }
    Ok((a, b))
}

/// Every JSON report: tool identity, the resolved invocation, the result.
#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    config: &'a Cli,
    threads: usize,
    report: T,
}

fn emit_text(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn emit_json(cli: &Cli, report: impl Serialize, out: Option<&Path>) -> Result<(), CliError> {
    let env = Envelope {
        tool: "spinsync",
        version: env!("CARGO_PKG_VERSION"),
        config: cli,
        threads: rayon::current_num_threads(),
        report,
    };
    emit_text(&sio::to_json_string(&env)?, out)
}

impl Global {
    fn flow(&self, step: f64, t_max: f64) -> FlowOptions {
        FlowOptions {
            step,
            t_max,
            eq_tol: self.eq_tol,
            consensus_tol: self.consensus_tol,
            match_tol: self.phase_match_tol,
        }
    }

    /// Residual and stability of `theta` on `g`, with this run's tolerances.
    fn classify(&self, g: &WeightedGraph, theta: &PhaseVector) -> Result<(f64, StabilityVerdict), CliError> {
        let h = spectral::hessian(g, theta)?;
        let residual = dynamics::residual(g, theta)?;
        if residual >= self.eq_tol {
            return Err(DynamicsError::NotAnEquilibrium { residual, tol: self.eq_tol }.into());
        }
        let zero_tol = self.zero_factor * (1.0 + spectral::inf_norm(&h));
        Ok((residual, spectral::stability_of_hessian(h, Some(zero_tol))?))
    }

    fn json_only(&self, command: &str) -> Result<(), CliError> {
        match self.format {
            Some(Format::Csv) => Err(CliError::invalid(format!("`{command}` has no csv output"))),
            _ => Ok(()),
        }
    }
}

#[derive(Serialize)]
struct DensitySummary {
    order: usize,
    min_degree: usize,
    strong_density: ExactRatio,
    paper_ratio: ExactRatio,
}

#[derive(Serialize)]
struct SpinReport {
    base_order: usize,
    k: usize,
    order: usize,
    edge_count: usize,
    density: DensitySummary,
    edges: Vec<Edge>,
}

fn density_summary(g: &impl Coupling) -> Result<DensitySummary, CliError> {
    let d = density_report(g)?;
    Ok(DensitySummary {
        order: d.order,
        min_degree: d.min_degree,
        strong_density: d.strong_density.into(),
        paper_ratio: d.paper_ratio.into(),
    })
}

fn run_spin(cli: &Cli, graph: &Path, k: usize) -> Result<(), CliError> {
    let g = read_graph(graph)?;
    let s = spin(&g, k)?;
    let out = cli.global.out.as_deref();
    match cli.global.format {
        Some(Format::Json) => {
            let report = SpinReport {
                base_order: g.n(),
                k,
                order: s.order(),
                edge_count: s.edges().len(),
                density: density_summary(&s)?,
                edges: s.edges().to_vec(),
            };
            emit_json(cli, report, out)
        }
        Some(Format::Csv) => Err(CliError::invalid("`spin` writes an edge list or json")),
        None => {
            let header = format!("# spinsync {} seed={}\n", env!("CARGO_PKG_VERSION"), cli.global.seed);
            emit_text(&(header + &sio::write_spin_graph(&s)), out)
        }
    }
}

#[derive(Serialize)]
struct GpReport {
    analysis: GpAnalysis,
    edges: Vec<Edge>,
    equilibrium: PhaseVector,
    residual: f64,
    lemma_verdict: Verdict,
    stability: StabilityVerdict,
    scaled_hessian_spectrum: Vec<f64>,
    closed_form_spectrum: [f64; 8],
    closed_form_max_gap: f64,
    /// `‖M·V − V·Λ‖∞` for the explicit eigenvector basis.
    basis_defect: f64,
    verdicts_agree: bool,
}

fn run_gp(cli: &Cli, p: &GpParams) -> Result<(), CliError> {
    cli.global.json_only("gp")?;
    let g = gp::gp_graph(p);
    let theta = gp::gp_equilibrium(p)?;
    let lemma = gp::gp_lemma_check(p)?;
    let (residual, stability) = cli.global.classify(&g, &theta)?;
    let m = gp::gp_scaled_hessian(p)?;
    let jacobi = spectral::eigen(&m, false)?.eigenvalues;
    let closed = gp::gp_closed_form_spectrum(p)?;
    let v = gp::gp_eigenvector_basis(p)?;
    let lambda = DMatrix::from_diagonal(&DVector::from_row_slice(&gp::closed_form_in_basis_order(p)));
    let basis_defect = spectral::inf_norm(&(&m * &v - &v * lambda));
    let report = GpReport {
        analysis: gp::gp_analysis(p)?,
        edges: g.edges().to_vec(),
        residual,
        equilibrium: theta,
        lemma_verdict: lemma,
        verdicts_agree: lemma == stability.verdict,
        stability,
        closed_form_max_gap: jacobi.iter().zip(&closed).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max),
        scaled_hessian_spectrum: jacobi,
        closed_form_spectrum: closed,
        basis_defect,
    };
    emit_json(cli, report, cli.global.out.as_deref())
}

fn run_certify(
    cli: &Cli,
    k: Option<u64>,
    range: Option<(u64, u64)>,
    perturb: bool,
    step: f64,
    tmax: f64,
) -> Result<(), CliError> {
    cli.global.json_only("certify")?;
    let g = &cli.global;
    let opts = CertifyOptions {
        run_perturbation_test: perturb,
        seed: g.seed,
        eq_tol: g.eq_tol,
        zero_factor: g.zero_factor,
        match_factor: g.match_factor,
        flow: g.flow(step, tmax),
        ..CertifyOptions::default()
    };
    let ks: Vec<u64> = match (k, range) {
        (Some(k), _) => vec![k],
        (None, Some((a, b))) => (a..=b).collect(),
        (None, None) => unreachable!("clap requires --k or --k-range"),
    };
    let mut certs: Vec<BoundCertificate> = Vec::with_capacity(ks.len());
    let mut failures = Vec::new();
    let mut only_stalled = true;
    for r in bound::certify_many(&ks, &opts) {
        match r {
            Ok(c) => certs.push(c),
            Err(BoundError::CertificationFailed { k, stage, reason, certificate }) => {
                failures.push(format!("k={k} failed at {stage:?}: {reason}"));
                only_stalled &= certificate.perturbation.as_ref().is_some_and(|p| !p.converged);
                certs.push(*certificate);
            }
            Err(e) => return Err(e.into()),
        }
    }
    let out = g.out.as_deref();
    if k.is_some() {
        emit_json(cli, &certs[0], out)?;
    } else {
        emit_json(cli, &certs, out)?;
    }
    match (failures.is_empty(), only_stalled) {
        (true, _) => Ok(()),
        // the only problem was a perturbed flow that ran out of time
        (false, true) => Err(CliError { exit: Exit::NonConvergence, message: failures.join("\n") }),
        (false, false) => Err(CliError::certification(failures.join("\n"))),
    }
}

#[derive(Serialize)]
struct ThresholdReport {
    threshold: ExactRatio,
    convention: Convention,
    first_k: u64,
    mu_at_first_k: ExactRatio,
}

#[derive(Serialize)]
struct MuReport<'a> {
    kmax: u64,
    limit: ExactRatio,
    threshold: Option<ThresholdReport>,
    published_claims: Vec<ClaimCheck>,
    /// Present when the table itself is part of the json report.
    sequence: Option<&'a MuSequence>,
}

fn run_mu(
    cli: &Cli,
    kmax: u64,
    threshold: Option<ExactRatio>,
    convention: Convention,
    summary: Option<&Path>,
) -> Result<(), CliError> {
    let seq = bound::mu_sequence(kmax)?;
    let threshold = threshold
        .map(|t| -> Result<_, CliError> {
            let first_k = bound::first_k_exceeding(t.0, convention)?;
            Ok(ThresholdReport { threshold: t, convention, first_k, mu_at_first_k: convention.mu(first_k).into() })
        })
        .transpose()?;
    let mut report = MuReport {
        kmax,
        limit: bound::mu_limit().into(),
        threshold,
        published_claims: bound::claim_checks(),
        sequence: None,
    };
    let out = cli.global.out.as_deref();
    if cli.global.format == Some(Format::Json) {
        report.sequence = Some(&seq);
        return emit_json(cli, report, out);
    }
    let mut csv = Vec::new();
    seq.write_csv(&mut csv).map_err(|e| CliError::invalid(e.to_string()))?;
    match out {
        Some(path) => {
            fs::write(path, csv)?;
            emit_json(cli, report, summary)
        }
        None => {
            std::io::stdout().lock().write_all(&csv)?;
            match summary {
                Some(path) => emit_json(cli, report, Some(path)),
                None => Ok(()),
            }
        }
    }
}

fn run_simulate(cli: &Cli, graph: &Path, trials: u64, step: f64, tmax: f64, known: &[PathBuf]) -> Result<(), CliError> {
    cli.global.json_only("simulate")?;
    let g = read_graph(graph)?;
    let known: Vec<PhaseVector> = known.iter().map(|p| read_phases(p)).collect::<Result<_, _>>()?;
    let report: McReport = dynamics::monte_carlo(&g, trials, cli.global.seed, &cli.global.flow(step, tmax), &known)?;
    emit_json(cli, report, cli.global.out.as_deref())
}

#[derive(Serialize)]
struct SpectrumReport {
    order: usize,
    residual: f64,
    verdict: Verdict,
    algebraic_connectivity: f64,
    kernel_dim_est: usize,
    zero_tol: f64,
    /// Hessian eigenvalues, ascending.
    eigenvalues: Vec<f64>,
}

fn run_spectrum(cli: &Cli, graph: &Path, phases: &Path) -> Result<(), CliError> {
    let g = read_graph(graph)?;
    let theta = read_phases(phases)?;
    let (residual, stability) = cli.global.classify(&g, &theta)?;
    let out = cli.global.out.as_deref();
    if cli.global.format == Some(Format::Csv) {
        let mut text = String::from("index,eigenvalue\n");
        for (i, x) in stability.spectrum.iter().enumerate() {
            text.push_str(&format!("{i},{}\n", sio::format_f64(*x)));
        }
        return emit_text(&text, out);
    }
    let report = SpectrumReport {
        order: g.n(),
        residual,
        verdict: stability.verdict,
        algebraic_connectivity: stability.algebraic_connectivity,
        kernel_dim_est: stability.kernel_dim_est,
        zero_tol: stability.zero_tol,
        eigenvalues: stability.spectrum,
    };
    emit_json(cli, report, out)
}

#[derive(Serialize)]
struct LiftCliReport {
    spin_order: usize,
    #[serde(flatten)]
    lift: LiftReport,
}

fn run_lift(cli: &Cli, graph: &Path, phases: &Path, k: usize) -> Result<(), CliError> {
    cli.global.json_only("lift")?;
    let g = read_graph(graph)?;
    let theta = read_phases(phases)?;
    let opts = LiftOptions { eq_tol: cli.global.eq_tol, match_factor: cli.global.match_factor };
    let report = lift::verify_prop2(&g, &theta, k, &opts)?;
    emit_json(cli, LiftCliReport { spin_order: lift::lifted_order(&g, k), lift: report }, cli.global.out.as_deref())
}

fn read_graph(path: &Path) -> Result<WeightedGraph, CliError> {
    sio::parse_graph_file(path).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))
}

fn read_phases(path: &Path) -> Result<PhaseVector, CliError> {
    sio::parse_phases_file(path).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("SPINSYNC_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::invalid(format!("SPINSYNC_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::invalid(e.to_string()))
}

fn run(cli: &Cli) -> Result<(), CliError> {
    configure_threads()?;
    match &cli.command {
        Command::Spin { graph, k } => run_spin(cli, graph, *k),
        Command::Gp { params } => run_gp(cli, params),
        Command::Certify { k, k_range, perturb, step, tmax } => run_certify(cli, *k, *k_range, *perturb, *step, *tmax),
        Command::Mu { kmax, threshold, convention, summary } => {
            run_mu(cli, *kmax, *threshold, (*convention).into(), summary.as_deref())
        }
        Command::Simulate { graph, trials, step, tmax, known } => {
            run_simulate(cli, graph, *trials, *step, *tmax, known)
        }
        Command::Spectrum { graph, phases } => run_spectrum(cli, graph, phases),
        Command::Lift { graph, phases, k } => run_lift(cli, graph, phases, *k),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(Exit::Invalid as u8) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("spinsync: {e}");
            ExitCode::from(e.exit as u8)
        }
    }
}
