//! Command line frontend: forward projection, Novikov inversion, pairing
//! estimates, self tests, and PGM rendering over the ASG1/AFG1 file formats.
//!
//! Every command is deterministic given its full flag set. Result records go
//! to stdout; grid summaries and wall times go to stderr. Exit codes:
//! 0 success, 1 usage, 2 numerical-validation failure, 3 I/O.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use attrad::beam::BeamQuadratureConfig;
use attrad::fields::{phantom_from_spec, GridField, ScalarField};
use attrad::geometry::{Direction, SinogramGrid};
use attrad::novikov::{reconstruct, relative_l2_error, ReconstructionConfig};
use attrad::plancherel::{
    pair_contract, pair_monte_carlo, pairing_kernel, KernelSource, PairingConfig, PairingResult,
};
use attrad::radon::{forward_sinogram, LineQuadratureConfig, Sinogram};
use attrad::selftest::run_selftest;
use attrad::Error;

#[derive(Parser)]
#[command(name = "attrad", version, about = "Attenuated Radon transform toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Forward-project a phantom to an ASG1 sinogram
    Forward(ForwardArgs),
    /// Invert an ASG1 sinogram to an AFG1 field, optionally rendering a PGM
    Invert(InvertArgs),
    /// Deterministic quadrature estimate of the integral of f·g
    Pair(PairArgs),
    /// Monte Carlo estimate of the integral of f·g
    PairMc(PairMcArgs),
    /// Run the invariant suites at reduced resolution
    Selftest(SelftestArgs),
    /// Render an AFG1 field to an 8-bit PGM image
    Render(RenderArgs),
}

/// Sinogram grid flags shared by the data-producing commands. Omitted flags
/// fall back to the config file, then to built-in defaults.
#[derive(Args)]
struct GridArgs {
    /// Number of angles on [0, 2pi)
    #[arg(long = "n-angles")]
    n_angles: Option<usize>,
    /// Number of offsets per angle
    #[arg(long = "n-p")]
    n_p: Option<usize>,
    /// Half-width of the offset range
    #[arg(long = "p-max")]
    p_max: Option<f64>,
    /// Plain-text key=value file supplying defaults for omitted flags
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ForwardArgs {
    /// Phantom spec for the test field, `name` or `name:key=val,...`
    #[arg(long)]
    f: String,
    /// Phantom spec for the attenuation
    #[arg(long, default_value = "zero")]
    a: String,
    #[command(flatten)]
    grid: GridArgs,
    /// Output sinogram path
    #[arg(long, default_value = "sinogram.asg1")]
    out: PathBuf,
}

#[derive(Args)]
struct InvertArgs {
    /// Input ASG1 sinogram
    #[arg(long)]
    sino: PathBuf,
    /// Phantom spec for the attenuation the data was measured under
    #[arg(long, default_value = "zero")]
    a: String,
    /// Reconstruction nodes along x
    #[arg(long)]
    nx: Option<usize>,
    /// Reconstruction nodes along y
    #[arg(long)]
    ny: Option<usize>,
    /// Half-extent of the square reconstruction window
    #[arg(long = "L")]
    l: Option<f64>,
    /// Phantom spec to compare against; prints rel_l2=<err> on stdout
    #[arg(long)]
    truth: Option<String>,
    /// Output field path
    #[arg(long, default_value = "reconstruction.afg1")]
    out: PathBuf,
    /// Also render the reconstruction to this PGM path
    #[arg(long)]
    pgm: Option<PathBuf>,
    /// Plain-text key=value file supplying defaults for omitted flags
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct PairCommon {
    /// Phantom spec for f, forward-projected on the fly (or use --sino)
    #[arg(long)]
    f: Option<String>,
    /// Existing ASG1 sinogram of f; its grid wins over the grid flags
    #[arg(long)]
    sino: Option<PathBuf>,
    /// Phantom spec for the known field g (needs a gradient; all registry
    /// phantoms have one)
    #[arg(long)]
    g: String,
    /// Phantom spec for the attenuation
    #[arg(long, default_value = "zero")]
    a: String,
    #[command(flatten)]
    grid: GridArgs,
    /// Emit a CSV header and row instead of the one-line record
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct PairArgs {
    #[command(flatten)]
    common: PairCommon,
}

#[derive(Args)]
struct PairMcArgs {
    #[command(flatten)]
    common: PairCommon,
    /// Number of Monte Carlo line samples
    #[arg(long)]
    samples: Option<u64>,
    /// RNG seed; fixed seed gives byte-identical output
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SelftestArgs {
    /// Halve the check resolutions
    #[arg(long)]
    quick: bool,
}

#[derive(Args)]
struct RenderArgs {
    /// Input AFG1 field
    #[arg(long)]
    field: PathBuf,
    /// Output PGM path
    #[arg(long, default_value = "field.pgm")]
    out: PathBuf,
}

fn main() {
    env_logger::init();
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Forward(args) => cmd_forward(args),
        Command::Invert(args) => cmd_invert(args),
        Command::Pair(args) => cmd_pair(args.common, None),
        Command::PairMc(args) => cmd_pair(args.common, Some((args.samples, args.seed))),
        Command::Selftest(args) => cmd_selftest(args),
        Command::Render(args) => cmd_render(args),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::Io(_) | Error::BadFormat(_) => 3,
                _ => 1,
            }
        }
    }
}

const CONFIG_KEYS: [&str; 8] = [
    "n_angles", "n_p", "p_max", "nx", "ny", "L", "seed", "samples",
];

/// Key=value defaults from `--config`. Lines are `key = value`, `#` starts a
/// comment, keys outside [`CONFIG_KEYS`] are rejected.
struct FileConfig(BTreeMap<String, String>);

impl FileConfig {
    fn load(path: Option<&Path>) -> Result<Self, Error> {
        let mut map = BTreeMap::new();
        let Some(path) = path else {
            return Ok(FileConfig(map));
        };
        let text = fs::read_to_string(path)?;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let at = |msg: String| {
                Error::InvalidConfig(format!("{}:{}: {msg}", path.display(), idx + 1))
            };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| at(format!("expected key = value, got `{line}`")))?;
            let key = k.trim();
            if !CONFIG_KEYS.contains(&key) {
                return Err(at(format!("unknown key `{key}`")));
            }
            map.insert(key.to_owned(), v.trim().to_owned());
        }
        Ok(FileConfig(map))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, Error> {
        match self.0.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|_| {
                Error::InvalidConfig(format!("config key `{key}`: `{raw}` does not parse"))
            }),
        }
    }
}

fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

fn resolve_grid(args: &GridArgs, cfg: &FileConfig) -> Result<SinogramGrid, Error> {
    let n_angles = pick(args.n_angles, cfg.parse("n_angles")?, 180);
    let n_p = pick(args.n_p, cfg.parse("n_p")?, 257);
    let p_max = pick(args.p_max, cfg.parse("p_max")?, 6.0);
    SinogramGrid::new(n_angles, n_p, p_max)
}

/// Beam quadrature tied to the attenuation scale, safe for the zero field.
fn beam_for(a: &ScalarField, divisor: f64) -> BeamQuadratureConfig {
    BeamQuadratureConfig::with_step((a.support_radius() / divisor).max(0.01))
}

fn cmd_forward(args: ForwardArgs) -> Result<i32, Error> {
    let t0 = Instant::now();
    let cfg = FileConfig::load(args.grid.config.as_deref())?;
    let f = phantom_from_spec(&args.f)?;
    let a = phantom_from_spec(&args.a)?;
    let grid = resolve_grid(&args.grid, &cfg)?;
    let line = LineQuadratureConfig::for_support(f.support_radius());
    let beam = BeamQuadratureConfig::for_field(&a);
    let sino = forward_sinogram(&f, &a, grid, &line, &beam);
    sino.save_asg1(&args.out)?;
    eprintln!(
        "forward: {}x{} sinogram, p_max = {}, wrote {} in {:.2} s",
        grid.n_angles(),
        grid.n_p(),
        grid.p_max(),
        args.out.display(),
        t0.elapsed().as_secs_f64()
    );
    Ok(0)
}

fn cmd_invert(args: InvertArgs) -> Result<i32, Error> {
    let t0 = Instant::now();
    let cfg = FileConfig::load(args.config.as_deref())?;
    let sino = Sinogram::load_asg1(&args.sino)?;
    let a = phantom_from_spec(&args.a)?;
    let rc = ReconstructionConfig::new(
        pick(args.nx, cfg.parse("nx")?, 128),
        pick(args.ny, cfg.parse("ny")?, 128),
        pick(args.l, cfg.parse("L")?, 3.0),
    );
    let rec = reconstruct(&sino, &a, &rc, &beam_for(&a, 128.0))?;
    rec.save_afg1(&args.out)?;
    if let Some(pgm) = &args.pgm {
        rec.save_pgm(pgm)?;
    }
    if let Some(spec) = &args.truth {
        let truth = phantom_from_spec(spec)?;
        println!("rel_l2={:.6e}", relative_l2_error(&rec, &truth));
    }
    eprintln!(
        "invert: {}x{} sinogram -> {}x{} field over [-{}, {}]^2, wrote {} in {:.2} s",
        sino.grid().n_angles(),
        sino.grid().n_p(),
        rc.n_x,
        rc.n_y,
        rc.half_extent,
        rc.half_extent,
        args.out.display(),
        t0.elapsed().as_secs_f64()
    );
    Ok(0)
}

/// Shared by `pair` (mc = None) and `pair-mc`. The kernel is always built
/// from (g, a) on the data grid; the data side is either loaded or
/// forward-projected, never filtered.
fn cmd_pair(common: PairCommon, mc: Option<(Option<u64>, Option<u64>)>) -> Result<i32, Error> {
    let t0 = Instant::now();
    let cfg = FileConfig::load(common.grid.config.as_deref())?;
    let g = phantom_from_spec(&common.g)?;
    let a = phantom_from_spec(&common.a)?;
    let pairing = PairingConfig::new(0.025);
    let sino = match (&common.sino, &common.f) {
        (Some(path), None) => Sinogram::load_asg1(path)?,
        (None, Some(spec)) => {
            let f = phantom_from_spec(spec)?;
            let grid = resolve_grid(&common.grid, &cfg)?;
            forward_sinogram(&f, &a, grid, &pairing.data_line, &pairing.beam)
        }
        _ => {
            return Err(Error::InvalidConfig(
                "exactly one of --sino or --f is required".into(),
            ))
        }
    };
    let grid = sino.grid();
    let kernel = pairing_kernel(&g, &a, grid, &pairing)?;
    let result = match mc {
        None => pair_contract(&sino, &kernel)?,
        Some((samples, seed)) => {
            let samples = pick(samples, cfg.parse("samples")?, 10_000);
            let seed = pick(seed, cfg.parse("seed")?, 0);
            // Data oracle: nearest angle row, linear in p, zero outside the
            // sampled offset range; the same lookup the stored kernel uses.
            let raf = |omega: Direction, p: f64| {
                let k = (omega.angle() / grid.domega()).round() as usize % grid.n_angles();
                let row = sino.row(k);
                let (p_max, dp) = (grid.p_max(), grid.dp());
                if p < -p_max || p > p_max {
                    return 0.0;
                }
                let t = (p + p_max) / dp;
                let j = t.floor() as usize;
                if j + 1 >= row.len() {
                    return row[row.len() - 1];
                }
                let frac = t - j as f64;
                (1.0 - frac) * row[j] + frac * row[j + 1]
            };
            pair_monte_carlo(raf, &KernelSource::Stored(&kernel), samples, seed)?
        }
    };
    if common.csv {
        println!("{}", PairingResult::csv_header());
        println!("{}", result.csv_row());
    } else {
        println!("{}", result.record());
    }
    eprintln!(
        "pair: {}x{} grid, p_max = {}, {:.2} s",
        grid.n_angles(),
        grid.n_p(),
        grid.p_max(),
        t0.elapsed().as_secs_f64()
    );
    Ok(0)
}

fn cmd_selftest(args: SelftestArgs) -> Result<i32, Error> {
    let t0 = Instant::now();
    let report = run_selftest(args.quick);
    for line in report.summary_lines() {
        println!("{line}");
    }
    let passed = report.checks.iter().filter(|c| c.passed).count();
    println!("selftest: {passed}/{} checks passed", report.checks.len());
    eprintln!("selftest: {:.2} s", t0.elapsed().as_secs_f64());
    Ok(if report.passed() { 0 } else { 2 })
}

fn cmd_render(args: RenderArgs) -> Result<i32, Error> {
    let field = GridField::load_afg1(&args.field)?;
    field.save_pgm(&args.out)?;
    eprintln!(
        "render: {}x{} field -> {}",
        field.n_x(),
        field.n_y(),
        args.out.display()
    );
    Ok(0)
}
