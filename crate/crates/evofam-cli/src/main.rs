//! Command-line surface for the evofam library.
//!
//! Five subcommands over one JSON run configuration: `oscillator` dumps a
//! single mode track, `solve` the spectral solution trajectory, `check` the
//! full invariant report, `perturb` the perturbed-propagator diagnostics at
//! one base node, and `convergence` the self-refinement study. All numeric
//! output is text (CSV or JSON), floats carry 17 significant digits so they
//! round-trip bitwise, files are written atomically (temp + rename), and a
//! fixed configuration plus seed reproduces every output byte for byte.
//!
//! Exit status: 0 when everything the subcommand checks passes, 1 when the
//! run completed but some check failed, 2 on any error (bad flags,
//! unreadable config, solver failure, I/O).

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};

use evofam::config::config_hash;
use evofam::oscillator::solve_mode_at;
use evofam::perturbation::{column_gap, VolterraColumn};
use evofam::report::{CheckEntry, InvariantReport, ReportMeta, FORMAT_VERSION};
use evofam::space::state_weights;
use evofam::verify::{ORACLE_GAP_TOL, PICARD_ITERATION_BUDGET};
use evofam::{
    assemble_b, direct_oracle, parse_config, run_full_suite, solve_volterra, FundamentalSolutionField,
    ModeIndex, RunSpec,
};

/// Default sampling seed, shared with the library default.
const DEFAULT_SEED: u64 = 0xE70F;

// ═══════════════════════════════════════════════════════ flag surface

#[derive(Debug, Parser)]
#[command(name = "evofam")]
#[command(about = "spectral evolution families for time-dependent wave equations")]
struct Cli {
    /// Path to the JSON run configuration (required by every subcommand).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Directory the output files are written into.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Sampling seed for the residual probes.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Dump one mode track r, ṙ, c, ċ from a base time to oscillator.csv
    Oscillator {
        /// Mode index (≥ 1)
        #[arg(long)]
        n: usize,

        /// Base time; must lie on the configured grid
        #[arg(long)]
        s: f64,
    },

    /// Dump the solution trajectory for the configured initial data to solution.csv
    Solve {
        /// Construction of the perturbed propagator when β ≠ 0
        #[arg(long, value_enum, default_value_t = SolveMethod::Volterra)]
        method: SolveMethod,
    },

    /// Run the full invariant suite and write check.json
    Check,

    /// Perturbed-propagator diagnostics at one base node, to perturb.json
    Perturb {
        /// Base node index
        #[arg(long, default_value_t = 0)]
        base: usize,

        /// Which construction(s) to run
        #[arg(long, value_enum, default_value_t = PerturbMethod::Both)]
        method: PerturbMethod,

        /// Also dump ‖V(t, t_base)‖ per node to perturbed_norms.csv
        #[arg(long)]
        norms: bool,
    },

    /// Self-convergence study over doubling refinements, to convergence.csv
    Convergence {
        /// Number of doubling refinements beyond the configured resolution
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SolveMethod {
    /// Picard fixed point of the perturbation integral equation
    Volterra,
    /// Fixed-step integration of the full first-order system
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PerturbMethod {
    Volterra,
    Direct,
    /// Run both constructions and measure their gap
    Both,
}

// ═══════════════════════════════════════════════════════ run manifest

/// Resolved invocation: everything a subcommand needs to run and to stamp
/// into its outputs. Construction verifies the output directory is usable.
struct RunManifest {
    subcommand: &'static str,
    spec: RunSpec,
    out_dir: PathBuf,
    seed: u64,
    format_version: &'static str,
}

impl RunManifest {
    fn resolve(cli: &Cli, subcommand: &'static str) -> anyhow::Result<Self> {
        let config_path = cli
            .config
            .as_ref()
            .context("--config PATH is required")?;
        let text = std::fs::read_to_string(config_path)
            .with_context(|| format!("reading config {}", config_path.display()))?;
        let spec = parse_config(&text)
            .with_context(|| format!("parsing config {}", config_path.display()))?;
        std::fs::create_dir_all(&cli.out)
            .with_context(|| format!("creating output directory {}", cli.out.display()))?;
        Ok(RunManifest {
            subcommand,
            spec,
            out_dir: cli.out.clone(),
            seed: cli.seed,
            format_version: FORMAT_VERSION,
        })
    }

    fn out_path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn note_written(&self, path: &Path) {
        println!("{}: wrote {}", self.subcommand, path.display());
    }

    fn report_meta(&self) -> ReportMeta {
        ReportMeta {
            config_hash: config_hash(&self.spec),
            n: self.spec.trunc.n(),
            m: self.spec.grid.m(),
            t_end: self.spec.grid.t_end(),
            seed: self.seed,
            format_version: self.format_version.to_string(),
        }
    }
}

// ═══════════════════════════════════════════════════════ output plumbing

/// Render a float with 17 significant digits: enough for a lossless
/// round-trip back to the identical f64.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write through a sibling temp file and rename into place, so interrupted
/// runs never leave a truncated file under the real name.
fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating temp file next to {}", path.display()))?;
    tmp.write_all(bytes)
        .with_context(|| format!("writing {}", path.display()))?;
    tmp.flush()
        .with_context(|| format!("flushing {}", path.display()))?;
    tmp.persist(path)
        .with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

// ═══════════════════════════════════════════════════════ subcommands

fn cmd_oscillator(man: &RunManifest, n: usize, s: f64) -> anyhow::Result<bool> {
    let mode = ModeIndex::new(n)?;
    let grid = &man.spec.grid;
    let base = grid.index_of(s)?;
    let sol = solve_mode_at(mode, base, &man.spec.family, grid)?;
    let (r, rdot, c, cdot) = (
        sol.r_slice(),
        sol.rdot_slice(),
        sol.c_slice(),
        sol.cdot_slice(),
    );
    let mut out = String::from("t,r,rdot,c,cdot\n");
    for i in base..=grid.m() {
        let k = i - base;
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_f64(grid.node(i)),
            fmt_f64(r[k]),
            fmt_f64(rdot[k]),
            fmt_f64(c[k]),
            fmt_f64(cdot[k]),
        ));
    }
    let path = man.out_path("oscillator.csv");
    write_atomic(&path, out.as_bytes())?;
    man.note_written(&path);
    Ok(true)
}

/// Column of the perturbed propagator at base 0, by the requested method.
fn propagator_column(spec: &RunSpec, method: SolveMethod) -> anyhow::Result<VolterraColumn> {
    let b = assemble_b(&spec.family, spec.trunc, &spec.grid);
    match method {
        SolveMethod::Volterra => {
            let field = FundamentalSolutionField::assemble(&spec.family, spec.trunc, &spec.grid)?;
            Ok(solve_volterra(&field, &b, 0, spec.tolerances.picard)?)
        }
        SolveMethod::Direct => Ok(direct_oracle(&spec.family, &b, 0, &spec.grid)?),
    }
}

fn cmd_solve(man: &RunManifest, method: SolveMethod) -> anyhow::Result<bool> {
    let spec = &man.spec;
    let n = spec.trunc.n();
    let m = spec.grid.m();
    let phi = &spec.initial.phi;
    let psi = &spec.initial.psi;

    // trajectory[i][k] = k-th sine coefficient at node i
    let trajectory: Vec<Vec<f64>> = if spec.family.beta_family().is_zero() {
        // unperturbed: each mode evolves on its own, a_k(t) = c_k(t)φ_k + r_k(t)ψ_k
        let mut rows = vec![vec![0.0f64; n]; m + 1];
        for mode in spec.trunc.modes() {
            let k = mode.get() - 1;
            let sol = solve_mode_at(mode, 0, &spec.family, &spec.grid)?;
            for i in 0..=m {
                rows[i][k] = sol.c_slice()[i] * phi[k] + sol.r_slice()[i] * psi[k];
            }
        }
        rows
    } else {
        let col = propagator_column(spec, method)?;
        let mut data = vec![0.0f64; 2 * n];
        data[..n].copy_from_slice(phi);
        data[n..].copy_from_slice(psi);
        (0..=m)
            .map(|i| {
                let mat = col.sample(i)?;
                Ok((0..n)
                    .map(|k| (0..2 * n).map(|j| mat[(k, j)] * data[j]).sum())
                    .collect())
            })
            .collect::<evofam::Result<Vec<_>>>()?
    };

    let mut out = String::from("t");
    for k in 1..=n {
        out.push_str(&format!(",a_{k}"));
    }
    out.push('\n');
    for (i, row) in trajectory.iter().enumerate() {
        out.push_str(&fmt_f64(spec.grid.node(i)));
        for v in row {
            out.push(',');
            out.push_str(&fmt_f64(*v));
        }
        out.push('\n');
    }
    let path = man.out_path("solution.csv");
    write_atomic(&path, out.as_bytes())?;
    man.note_written(&path);
    Ok(true)
}

fn cmd_check(man: &RunManifest) -> anyhow::Result<bool> {
    let report = run_full_suite(&man.spec, man.seed)?;
    let mut json = report.to_json();
    json.push('\n');
    let path = man.out_path("check.json");
    write_atomic(&path, json.as_bytes())?;
    man.note_written(&path);
    for (section, name) in report.failures() {
        eprintln!("FAIL {section}/{name}");
    }
    println!(
        "check: {} checks, {} failed",
        report.len(),
        report.failures().len(),
    );
    Ok(report.all_pass())
}

fn cmd_perturb(
    man: &RunManifest,
    base: usize,
    method: PerturbMethod,
    norms: bool,
) -> anyhow::Result<bool> {
    let spec = &man.spec;
    let grid = &spec.grid;
    anyhow::ensure!(
        base <= grid.m(),
        "base node {base} is past the last grid index {}",
        grid.m()
    );
    let b = assemble_b(&spec.family, spec.trunc, grid);
    let mut report = InvariantReport::new(man.report_meta());
    let sec = "perturbation";

    let volterra_col = if matches!(method, PerturbMethod::Volterra | PerturbMethod::Both) {
        let field = FundamentalSolutionField::assemble(&spec.family, spec.trunc, grid)?;
        let col = solve_volterra(&field, &b, base, spec.tolerances.picard)?;
        report.insert(
            sec,
            "picard_iterations",
            CheckEntry::thresholded(
                col.iterations() as f64,
                PICARD_ITERATION_BUDGET as f64,
                "sweeps until the largest column increment fell below the fixed-point tolerance",
            ),
        );
        Some(col)
    } else {
        None
    };
    let direct_col = if matches!(method, PerturbMethod::Direct | PerturbMethod::Both) {
        Some(direct_oracle(&spec.family, &b, base, grid)?)
    } else {
        None
    };
    if let (Some(v), Some(d)) = (&volterra_col, &direct_col) {
        report.insert(
            sec,
            "oracle_equivalence_gap",
            CheckEntry::thresholded(
                column_gap(v, d, spec.trunc)?,
                ORACLE_GAP_TOL,
                "max weighted-operator-norm gap between the fixed point and the direct integration over the column",
            ),
        );
    }

    let mut json = report.to_json();
    json.push('\n');
    let path = man.out_path("perturb.json");
    write_atomic(&path, json.as_bytes())?;
    man.note_written(&path);

    if norms {
        let col = volterra_col
            .as_ref()
            .or(direct_col.as_ref())
            .expect("at least one method always runs");
        let w = state_weights(spec.trunc);
        let mut out = String::from("t,norm\n");
        for i in base..=grid.m() {
            let norm = evofam::opnorm::weighted_op_norm(col.sample(i)?, &w, &w)?;
            out.push_str(&format!("{},{}\n", fmt_f64(grid.node(i)), fmt_f64(norm)));
        }
        let path = man.out_path("perturbed_norms.csv");
        write_atomic(&path, out.as_bytes())?;
        man.note_written(&path);
    }

    for (section, name) in report.failures() {
        eprintln!("FAIL {section}/{name}");
    }
    Ok(report.all_pass())
}

fn cmd_convergence(man: &RunManifest, levels: usize) -> anyhow::Result<bool> {
    anyhow::ensure!(levels >= 1, "need at least one refinement level");
    let spec = &man.spec;
    let n0 = spec.trunc.n();
    let m0 = spec.grid.m();
    let ladder: Vec<(usize, usize)> = (0..=levels).map(|k| (n0 << k, m0 << k)).collect();
    let diffs = evofam::convergence_study(&spec.family, &ladder, spec.tolerances.picard)?;

    let mut out = String::from("n,m,n_next,m_next,diff\n");
    for (k, d) in diffs.iter().enumerate() {
        let (na, ma) = ladder[k];
        let (nb, mb) = ladder[k + 1];
        out.push_str(&format!("{na},{ma},{nb},{mb},{}\n", fmt_f64(*d)));
    }
    let path = man.out_path("convergence.csv");
    write_atomic(&path, out.as_bytes())?;
    man.note_written(&path);

    // refining must not make the terminal state move further; exact families
    // sit at zero on every rung, so the gate is non-increase
    let monotone = diffs.windows(2).all(|w| w[1] <= w[0]);
    if !monotone {
        eprintln!("FAIL convergence/non_increasing_differences");
    }
    Ok(monotone)
}

// ═══════════════════════════════════════════════════════ entry

/// Cap the global worker pool when EVOFAM_THREADS is set.
fn init_threads() {
    match std::env::var("EVOFAM_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(k) if k >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
            }
            _ => eprintln!("warning: ignoring EVOFAM_THREADS={v:?} (want a positive integer)"),
        },
        Err(_) => {}
    }
}

fn dispatch(cli: &Cli) -> anyhow::Result<bool> {
    match &cli.command {
        Command::Oscillator { n, s } => {
            cmd_oscillator(&RunManifest::resolve(cli, "oscillator")?, *n, *s)
        }
        Command::Solve { method } => cmd_solve(&RunManifest::resolve(cli, "solve")?, *method),
        Command::Check => cmd_check(&RunManifest::resolve(cli, "check")?),
        Command::Perturb {
            base,
            method,
            norms,
        } => cmd_perturb(&RunManifest::resolve(cli, "perturb")?, *base, *method, *norms),
        Command::Convergence { levels } => {
            cmd_convergence(&RunManifest::resolve(cli, "convergence")?, *levels)
        }
    }
}

fn main() -> ExitCode {
    init_threads();
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
