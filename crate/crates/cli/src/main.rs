//! `cartan-vp`: analyses of variational principles given as JSON problem
//! files.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cartan_core::error::{Error, Result};
use cartan_core::report::{self, GridOverrides, Report};
use cartan_core::spec::{ProblemSpec, SectionSpec};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "cartan-vp", version, about = "Variational Cartan ideals, characteristic distributions and critical sections")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classify the principle and print N(dθ) with its Frobenius verdict.
    Analyze(Common),
    /// List the critical-section equations Δ_a.
    El(Common),
    /// Print a basis of N(dθ).
    Annihilator(Common),
    /// Check that N(dθ) is involutive.
    Frobenius(Common),
    /// Sweep a seed section along the characteristic distribution.
    Integrate {
        #[command(flatten)]
        common: Common,
        /// Seed section file.
        #[arg(long)]
        section: PathBuf,
        /// Lattice nodes per base axis.
        #[arg(long)]
        nodes: Option<usize>,
    },
    /// Test whether a section is critical.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Section file.
        #[arg(long)]
        section: PathBuf,
    },
    /// Build θ for a Liouville field and check the characteristic identities.
    Liouville(Common),
    /// Compare the engine with the golden values of a bundled example.
    Example {
        /// example1, example2 or example3.
        name: String,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Args, Debug)]
struct Output {
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Sampling seed; overrides the problem file.
    #[arg(long, env = "CARTAN_VP_SEED")]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct Common {
    /// Problem file.
    #[arg(long)]
    spec: PathBuf,
    #[command(flatten)]
    output: Output,
    /// Integration step.
    #[arg(long)]
    step: Option<f64>,
    /// Residual tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Sampling box, as "lo,hi".
    #[arg(long = "box", value_parser = parse_box)]
    bounds: Option<(f64, f64)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
    Csv,
}

fn parse_box(s: &str) -> std::result::Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(',').ok_or_else(|| format!("expected \"lo,hi\", found `{s}`"))?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("bad lower bound: {e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("bad upper bound: {e}"))?;
    if !(lo < hi) {
        return Err(format!("empty box [{lo}, {hi}]"));
    }
    Ok((lo, hi))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn load(common: &Common) -> Result<ProblemSpec> {
    let mut spec = ProblemSpec::from_json(&read(&common.spec)?)?;
    if let Some((lo, hi)) = common.bounds {
        spec.options.bounds = Some([lo, hi]);
    }
    if common.step.is_some() {
        spec.options.step = common.step;
    }
    if common.tol.is_some() {
        spec.options.tolerance = common.tol;
    }
    Ok(spec)
}

fn emit(output: &Output, text: &str) -> Result<()> {
    match &output.out {
        Some(path) => fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn render(report: &Report, format: Format) -> Result<String> {
    match format {
        Format::Json => Ok(report.to_json()),
        Format::Text => Ok(report.to_text()),
        Format::Csv => Err(Error::Invalid("CSV output is only available for `integrate`".into())),
    }
}

fn run(cli: Cli) -> Result<bool> {
    let simple: Option<(&Common, fn(&ProblemSpec, &_) -> Result<Report>)> = match &cli.command {
        Command::Analyze(c) => Some((c, report::analyze)),
        Command::El(c) => Some((c, report::el)),
        Command::Annihilator(c) => Some((c, report::annihilator)),
        Command::Frobenius(c) => Some((c, report::frobenius)),
        Command::Liouville(c) => Some((c, report::liouville)),
        _ => None,
    };
    if let Some((common, build)) = simple {
        let spec = load(common)?;
        let r = build(&spec, &spec.sampler(common.output.seed))?;
        emit(&common.output, &render(&r, common.output.format)?)?;
        return Ok(r.passed);
    }
    match &cli.command {
        Command::Verify { common, section } => {
            let spec = load(common)?;
            let section = SectionSpec::from_json(&read(section)?)?;
            let r = report::verify(&spec, &section, &spec.sampler(common.output.seed))?;
            emit(&common.output, &render(&r, common.output.format)?)?;
            Ok(r.passed)
        }
        Command::Integrate { common, section, nodes } => {
            let spec = load(common)?;
            let seed = SectionSpec::from_json(&read(section)?)?;
            let grid = GridOverrides { step: common.step, tolerance: common.tol, nodes: *nodes };
            let (r, patch) = report::integrate(&spec, &seed, &grid, &spec.sampler(common.output.seed))?;
            let text = match common.output.format {
                Format::Csv => patch.to_csv()?,
                f => render(&r, f)?,
            };
            emit(&common.output, &text)?;
            Ok(r.passed)
        }
        Command::Example { name, output } => {
            let r = report::example(name, output.seed)?;
            emit(output, &render(&r, output.format)?)?;
            Ok(r.passed)
        }
        _ => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
