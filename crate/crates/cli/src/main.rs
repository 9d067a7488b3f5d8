//! distlab command-line front end.
//!
//! Exit codes: 0 success, 1 a checked claim was violated, 2 usage or guard error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use distlab::energy::EnergyProfile;
use distlab::pointset::{self, PointSet};
use distlab::spectral;
use distlab::theorems::{self, CheckName, GeneratorSpec, SizeSpec, SweepConfig};
use distlab::{Execution, FieldSpec};
use serde_json::json;

#[derive(Parser)]
#[command(name = "distlab", version, about = "Distance-sum energies and sum-product graph spectra over finite fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a field specification and print its parameters
    FieldCheck {
        /// `p`, `p^m` or a prime power such as `9`
        spec: String,
        #[arg(long, value_parser = parse_modulus)]
        modulus: Option<Modulus>,
    },
    /// Generate a point set as CSV
    Gen {
        #[command(flatten)]
        set: SetArgs,
        /// Output file (stdout if omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Distance multiplicities, k-fold energy and sumset of a point set
    Energy {
        /// Point-set CSV
        input: PathBuf,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build SP_{q,d} and certify its spectral parameters
    Spectral {
        #[arg(long)]
        field: String,
        #[arg(long, value_parser = parse_modulus)]
        modulus: Option<Modulus>,
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one check on one generated set
    Check {
        #[arg(value_enum)]
        name: Check,
        #[command(flatten)]
        set: SetArgs,
        #[arg(long, default_value_t = 2)]
        k: usize,
        /// Size of the second set for two-set checks
        #[arg(long)]
        partner_size: Option<String>,
    },
    /// Run a sweep described by a JSON config, one report per line
    Verify {
        config: PathBuf,
        #[arg(long, env = "DISTLAB_JOBS", default_value_t = 1)]
        jobs: usize,
        /// Report stream (stdout if omitted)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Summary CSV
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SetArgs {
    #[arg(long)]
    field: String,
    /// Modulus coefficients, constant term first, e.g. `1,0,1`
    #[arg(long, value_parser = parse_modulus)]
    modulus: Option<Modulus>,
    #[arg(long)]
    dim: usize,
    #[arg(long = "gen", value_enum, default_value_t = Gen::Random)]
    generator: Gen,
    /// Count or an expression in q such as `4*q^(8/7)` (random only)
    #[arg(long)]
    size: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Sphere radius
    #[arg(long, default_value = "0")]
    radius: String,
    /// Base set for the product generator, comma separated
    #[arg(long, value_delimiter = ',')]
    set: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Gen {
    Random,
    Sphere,
    Product,
    Grid,
}

#[derive(Clone, Copy, ValueEnum)]
enum Check {
    IosevichRudnev,
    #[value(name = "koh-sun-2d")]
    KohSun2d,
    KohSunHighd,
    Recursion,
    Energy,
    Sumset,
    Asymmetric,
    ShparlinskiSumset,
}

impl From<Check> for CheckName {
    fn from(c: Check) -> Self {
        match c {
            Check::IosevichRudnev => CheckName::IosevichRudnev,
            Check::KohSun2d => CheckName::KohSun2d,
            Check::KohSunHighd => CheckName::KohSunHighd,
            Check::Recursion => CheckName::Recursion,
            Check::Energy => CheckName::Energy,
            Check::Sumset => CheckName::Sumset,
            Check::Asymmetric => CheckName::Asymmetric,
            Check::ShparlinskiSumset => CheckName::ShparlinskiSumset,
        }
    }
}

/// Modulus coefficients, constant term first.
#[derive(Clone, Debug)]
struct Modulus(Vec<u32>);

fn parse_modulus(s: &str) -> Result<Modulus, String> {
    let coeffs = s.split(',').map(|c| c.trim().parse::<u32>().map_err(|e| format!("{c:?}: {e}")));
    Ok(Modulus(coeffs.collect::<Result<_, _>>()?))
}

fn coeffs(m: &Option<Modulus>) -> Option<&[u32]> {
    m.as_ref().map(|m| m.0.as_slice())
}

fn size_spec(s: &str) -> SizeSpec {
    match s.parse::<usize>() {
        Ok(n) => SizeSpec::Count(n),
        Err(_) => SizeSpec::Expr(s.to_string()),
    }
}

enum Failure {
    Violated,
    Usage(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Usage(e.into())
    }
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

impl SetArgs {
    fn field(&self) -> anyhow::Result<FieldSpec> {
        Ok(FieldSpec::parse(&self.field, coeffs(&self.modulus))?)
    }

    fn generator(&self, partner: Option<&str>) -> anyhow::Result<GeneratorSpec> {
        Ok(match self.generator {
            Gen::Random => {
                let size = self.size.as_deref().ok_or_else(|| anyhow!("--size is required for the random generator"))?;
                GeneratorSpec::Random { sizes: vec![size_spec(size)], partner_size: partner.map(size_spec) }
            }
            Gen::Sphere => GeneratorSpec::Sphere { radius: self.radius.clone() },
            Gen::Product => {
                if self.set.is_empty() {
                    bail!("--set is required for the product generator");
                }
                GeneratorSpec::Product { set: self.set.clone() }
            }
            Gen::Grid => GeneratorSpec::Grid,
        })
    }

    fn seed(&self) -> anyhow::Result<Vec<u64>> {
        match (self.generator, self.seed) {
            (Gen::Random, None) => bail!("--seed is required for the random generator"),
            (_, s) => Ok(s.into_iter().collect()),
        }
    }

    fn build(&self) -> anyhow::Result<PointSet> {
        let field = self.field()?;
        let d = self.dim;
        Ok(match self.generator {
            Gen::Random => {
                let size = self.size.as_deref().ok_or_else(|| anyhow!("--size is required for the random generator"))?;
                let n = size_spec(size).resolve(field.q())?;
                pointset::gen_random(&field, d, n, self.seed()?[0])?
            }
            Gen::Sphere => pointset::gen_sphere(&field, d, field.parse_elem(&self.radius)?)?,
            Gen::Product => {
                self.generator(None)?;
                let a = self.set.iter().map(|s| field.parse_elem(s)).collect::<Result<Vec<_>, _>>()?;
                pointset::gen_product(&field, &a, d)?
            }
            Gen::Grid => PointSet::full_grid(&field, d)?,
        })
    }
}

fn field_check(spec: &str, modulus: Option<&[u32]>) -> Result<(), Failure> {
    let f = FieldSpec::parse(spec, modulus)?;
    let m: Vec<String> = f.modulus().iter().map(|c| c.to_string()).collect();
    println!("q={}", f.q());
    println!("p={}", f.p());
    println!("m={}", f.m());
    println!("q_mod_4={}", f.residue_class_mod4());
    println!("modulus={}", m.join(","));
    Ok(())
}

fn energy_cmd(input: &Path, k: usize, out: Option<&Path>) -> Result<(), Failure> {
    let text = fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let e = pointset::from_csv(&text, input.display().to_string())?;
    let prof = EnergyProfile::compute(&e, k, Execution::Parallel)?;
    let field = e.field();
    let sumset: Vec<String> = prof.sumset.iter().map(|&a| field.format_elem(a)).collect();
    let report = json!({
        "field": field.to_string(),
        "d": e.dim(),
        "size": e.len(),
        "k": k,
        "nu": prof.nu.to_json()["counts"],
        "N": prof.n_k.to_json()["counts"],
        "energy": prof.energy.to_string(),
        "sumset": sumset,
        "sumset_size": prof.sumset.len(),
        "cs_bound": prof.cs_bound.to_string(),
    });
    emit(out, &format!("{report}\n"))?;
    Ok(())
}

fn spectral_cmd(field: &str, modulus: Option<&[u32]>, dim: usize, out: Option<&Path>) -> Result<(), Failure> {
    let f = FieldSpec::parse(field, modulus)?;
    let graph = spectral::build_sp_graph(&f, dim)?;
    let report = spectral::certify(&graph)?;
    emit(out, &format!("{}\n", serde_json::to_string(&report)?))?;
    if report.certified {
        Ok(())
    } else {
        Err(Failure::Violated)
    }
}

fn run_sweep(cfg: &SweepConfig, jobs: usize, out: Option<&Path>, csv: Option<&Path>) -> Result<(), Failure> {
    let reports = theorems::sweep(cfg, jobs)?;
    emit(out, &theorems::to_json_lines(&reports))?;
    if let Some(p) = csv {
        fs::write(p, theorems::to_summary_csv(&reports)).with_context(|| format!("writing {}", p.display()))?;
    }
    if theorems::any_violated(&reports) {
        Err(Failure::Violated)
    } else {
        Ok(())
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::FieldCheck { spec, modulus } => field_check(&spec, coeffs(&modulus)),
        Command::Gen { set, out } => {
            let e = set.build()?;
            emit(out.as_deref(), &pointset::to_csv(&e))?;
            Ok(())
        }
        Command::Energy { input, k, out } => energy_cmd(&input, k, out.as_deref()),
        Command::Spectral { field, modulus, dim, out } => spectral_cmd(&field, coeffs(&modulus), dim, out.as_deref()),
        Command::Check { name, set, k, partner_size } => {
            let cfg = SweepConfig {
                fields: vec![set.field.clone()],
                modulus: set.modulus.clone().map(|m| m.0),
                dims: vec![set.dim],
                ks: vec![k],
                generator: set.generator(partner_size.as_deref())?,
                seeds: set.seed()?,
                checks: vec![name.into()],
            };
            run_sweep(&cfg, 1, None, None)
        }
        Command::Verify { config, jobs, out, csv } => {
            let text = fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let cfg = SweepConfig::from_json(&text)?;
            run_sweep(&cfg, jobs, out.as_deref(), csv.as_deref())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Violated) => ExitCode::from(1),
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
