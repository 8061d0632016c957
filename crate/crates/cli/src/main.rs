//! `mbo`: runs, Brakke ledgers, refinement studies, tension checks and frame rendering.

use clap::{Args, Parser, Subcommand};
use mbo_core::energetics::energy_eh;
use mbo_core::harness::config::{parse_sigma, OneOrMany, SigmaSpec};
use mbo_core::harness::reference::analytic_energy;
use mbo_core::harness::{build_dictionary, build_ledger, io, refinement_study, run_recorded, ConfigFile, LedgerSettings, StudyConfig};
use mbo_core::{MboError, SurfaceTensionMatrix};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[global_allocator]
static ALLOC: mimalloc::MiMalloc = mimalloc::MiMalloc;

const EXIT_VALIDATION: u8 = 2;
const EXIT_LEDGER: u8 = 3;
const EXIT_USAGE: u8 = 64;
const EXIT_IO: u8 = 1;

#[derive(Parser)]
#[command(name = "mbo", version, about = "Thresholding scheme for multi-phase mean-curvature flow on periodic grids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scheme and write manifest, checkpoints and frames.
    Run(RunArgs),
    /// Run the scheme and assemble the localized Brakke ledger.
    Ledger(LedgerArgs),
    /// h-refinement study over the configured h list.
    Study(StudyArgs),
    /// Check a surface-tension matrix and report its bounds.
    ValidateSigma(SigmaArgs),
    /// Convert checkpoints to PGM frames.
    Render(RenderArgs),
}

/// Keys shared with the config file; flags override the file.
#[derive(Args, Clone, Default)]
struct Setup {
    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    side: Option<f64>,
    #[arg(long)]
    phases: Option<usize>,
    /// Preset (uniform, two-phase(s), read-shockley(θ1,..)) or a matrix "0,1;1,0".
    #[arg(long)]
    sigma: Option<String>,
    #[arg(long)]
    sigma_cutoff: Option<f64>,
    /// stripe[:axis[:fraction]], disk:r[@x,y[,z]], two_disks, triple_t, voronoi[:P[:seed]], single[:label]
    #[arg(long)]
    shape: Option<String>,
    /// One step size, or a comma-separated list for studies.
    #[arg(long, value_delimiter = ',')]
    h: Option<Vec<f64>>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    final_time: Option<f64>,
    /// one, constant:c, cos-bump, gaussian-bump
    #[arg(long)]
    zeta: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Checkpoint every k steps (0: none).
    #[arg(long)]
    dump_every: Option<usize>,
    /// PGM frame every k steps (0: none).
    #[arg(long)]
    frame_every: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    setup: Setup,
}

#[derive(Args)]
struct LedgerArgs {
    #[command(flatten)]
    setup: Setup,
    /// Fourier modes up to this order in the slope dictionary (-1: none).
    #[arg(long, allow_hyphen_values = true)]
    k: Option<i32>,
    /// Leave out the radial fields around disk centers.
    #[arg(long)]
    no_radial: bool,
    /// Interpolation samples per step.
    #[arg(long)]
    t_samples: Option<usize>,
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
}

#[derive(Args)]
struct StudyArgs {
    #[command(flatten)]
    setup: Setup,
}

#[derive(Args)]
struct SigmaArgs {
    /// uniform, two-phase(s) or read-shockley(θ1,..)
    #[arg(long, conflicts_with = "matrix")]
    preset: Option<String>,
    #[arg(long)]
    phases: Option<usize>,
    /// Rows separated by ';', entries by ','.
    #[arg(long)]
    matrix: Option<String>,
    #[arg(long)]
    sigma_cutoff: Option<f64>,
}

#[derive(Args)]
struct RenderArgs {
    /// Checkpoint files, or run directories whose dumps/ is rendered.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Output directory (default: frames/ next to each dumps/ directory).
    #[arg(long, short)]
    output: Option<PathBuf>,
}

enum Failure {
    Validation(String),
    Ledger(String),
    Io(String),
}

impl From<MboError> for Failure {
    fn from(e: MboError) -> Self {
        match e {
            MboError::Io(m) => Failure::Io(m),
            MboError::LedgerViolation { .. } => Failure::Ledger(e.to_string()),
            other => Failure::Validation(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

fn parse_matrix(s: &str) -> Result<Vec<Vec<f64>>, Failure> {
    s.split(';')
        .map(|row| {
            row.split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|_| Failure::Validation(format!("bad matrix entry `{t}`"))))
                .collect()
        })
        .collect()
}

fn sigma_spec(s: &str) -> Result<SigmaSpec, Failure> {
    if s.contains(';') {
        Ok(SigmaSpec::Rows(parse_matrix(s)?))
    } else {
        Ok(SigmaSpec::Preset(s.to_string()))
    }
}

/// Config file (if any) with flags on top.
fn resolve(setup: &Setup) -> Result<StudyConfig, Failure> {
    let mut file = match &setup.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    macro_rules! over {
        ($($f:ident),*) => { $( if setup.$f.is_some() { file.$f = setup.$f.clone(); } )* };
    }
    over!(n, dim, side, phases, sigma_cutoff, shape, seed, output, dump_every, frame_every, zeta);
    if let Some(s) = &setup.sigma {
        file.sigma = Some(sigma_spec(s)?);
    }
    if let Some(h) = &setup.h {
        file.h = Some(if h.len() == 1 { OneOrMany::One(h[0]) } else { OneOrMany::Many(h.clone()) });
    }
    // a flag for one of steps / final_time replaces the other from the file
    if setup.steps.is_some() {
        file.steps = setup.steps;
        file.final_time = None;
    }
    if setup.final_time.is_some() {
        file.final_time = setup.final_time;
        file.steps = None;
    }
    Ok(StudyConfig::from_file(&file)?)
}

fn single_h(cfg: &StudyConfig) -> Result<f64, Failure> {
    match cfg.h_list.as_slice() {
        [h] => Ok(*h),
        _ => Err(Failure::Validation(format!("expected one h, got {}", cfg.h_list.len()))),
    }
}

fn command_line() -> String {
    std::env::args().collect::<Vec<_>>().join(" ")
}

fn cmd_run(args: &RunArgs) -> Result<(), Failure> {
    let mut cfg = resolve(&args.setup)?;
    let h = single_h(&cfg)?;
    let steps = cfg.steps_for(h)?;
    if args.setup.dump_every.is_none() && !file_sets_dumps(&args.setup)? {
        // initial and final state by default
        cfg.dump_every = steps;
    }
    let dir = cfg.output.clone();
    let (traj, mut manifest) = run_recorded(&cfg, h, &dir, &command_line())?;
    manifest.outputs.push("manifest.json".into());
    manifest.write(&dir.join("manifest.json"))?;
    let last = traj.steps.last().expect("nonempty trajectory");
    let e = energy_eh(&last.to_phase_field(), &cfg.sigma, h)?;
    println!("ran {steps} steps with h = {h:e} on {}^{} cells; E_h(final) = {e:.10e}", cfg.grid.n(), cfg.grid.dim());
    println!("wrote {}", dir.display());
    Ok(())
}

fn file_sets_dumps(setup: &Setup) -> Result<bool, Failure> {
    Ok(match &setup.config {
        Some(p) => ConfigFile::load(p)?.dump_every.is_some(),
        None => false,
    })
}

fn cmd_ledger(args: &LedgerArgs) -> Result<(), Failure> {
    let mut cfg = resolve(&args.setup)?;
    if let Some(k) = args.k {
        cfg.dictionary.k = k;
    }
    if args.no_radial {
        cfg.dictionary.radial = false;
    }
    if let Some(t) = args.t_samples {
        cfg.t_samples = t;
    }
    if let Some(t) = args.tolerance {
        cfg.solver.tolerance = t;
    }
    if let Some(m) = args.max_iterations {
        cfg.solver.max_iterations = m;
    }
    let h = single_h(&cfg)?;
    let dir = cfg.output.clone();
    let (traj, mut manifest) = run_recorded(&cfg, h, &dir, &command_line())?;
    let zeta = cfg.zeta.field(&cfg.grid);
    let dictionary = build_dictionary(&cfg.grid, &cfg.shape, &cfg.dictionary);
    if dictionary.is_empty() {
        return Err(Failure::Validation("empty slope dictionary".into()));
    }
    let settings = LedgerSettings { solver: cfg.solver.clone(), t_samples: cfg.t_samples, dictionary, skip_slopes: false };
    let ledger = build_ledger(&traj, &zeta, &cfg.sigma, h, &settings)?;
    std::fs::write(dir.join("ledger.csv"), ledger.to_csv())?;
    manifest.outputs.extend(["ledger.csv".to_string(), "manifest.json".to_string()]);
    manifest.write(&dir.join("manifest.json"))?;
    println!("E_h(chi^0) = {:.10e}", ledger.initial_energy());
    match analytic_energy(&cfg.shape, &cfg.grid, &cfg.sigma) {
        Some(e) => println!("E(chi^0) analytic = {e:.10e}"),
        None => println!("E(chi^0) has no closed form here; stand-in E_h(chi^0) at h = {h:e}: {:.10e}", ledger.initial_energy()),
    }
    println!(
        "{} steps, final margin {:.6e}, {} interpolation samples excluded",
        traj.steps.len() - 1,
        ledger.final_margin(),
        ledger.excluded_samples
    );
    println!("slope columns are dictionary lower bounds; the tested inequality is the implied lower-bound form");
    println!("wrote {}", dir.join("ledger.csv").display());
    ledger.verify()?;
    println!("ledger holds");
    Ok(())
}

fn cmd_study(args: &StudyArgs) -> Result<(), Failure> {
    let cfg = resolve(&args.setup)?;
    let report = refinement_study(&cfg)?;
    report.write(&cfg.output)?;
    print!("{}", report.to_csv());
    if let Some(d) = report.error_decreasing {
        println!("error against the closed-form integral decreasing in h: {d}");
    }
    println!("E_4h(chi^0) <= E_h(chi^0) for every h: {}", report.monotone_in_h);
    println!("wrote {}", cfg.output.display());
    if let Some(r) = report.rows.iter().find(|r| !r.energy_dissipation_ok) {
        return Err(Failure::Ledger(format!("energy-dissipation estimate violated at h = {:e}", r.h)));
    }
    Ok(())
}

fn cmd_validate_sigma(args: &SigmaArgs) -> Result<(), Failure> {
    let cutoff = args.sigma_cutoff.unwrap_or(mbo_core::harness::config::DEFAULT_READ_SHOCKLEY_CUTOFF);
    let sigma: SurfaceTensionMatrix = match (&args.matrix, &args.preset) {
        (Some(m), _) => SurfaceTensionMatrix::from_rows(&parse_matrix(m)?)?,
        (None, Some(p)) => {
            let spec = SigmaSpec::Preset(p.clone());
            let phases = args.phases.unwrap_or(2);
            parse_sigma(&spec, phases, cutoff)?
        }
        (None, None) => return Err(Failure::Validation("give --preset or --matrix".into())),
    };
    if let Some(p) = args.phases {
        if p != sigma.phases() {
            return Err(Failure::Validation(format!("matrix has {} phases, --phases says {p}", sigma.phases())));
        }
    }
    println!("admissible: {} phases", sigma.phases());
    for row in sigma.rows() {
        println!("  {}", row.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>().join(" "));
    }
    println!("sigma lower bound = {}", short(sigma.lower_bound()));
    println!("sigma upper bound = {}", short(sigma.upper_bound()));
    Ok(())
}

/// Twelve decimals with trailing zeros removed, so eigenvalue round-off does not show.
fn short(x: f64) -> String {
    let s = format!("{x:.12}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

fn dumps_in(dir: &Path) -> Result<Vec<PathBuf>, Failure> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "mbof"))
        .collect();
    out.sort();
    Ok(out)
}

fn cmd_render(args: &RenderArgs) -> Result<(), Failure> {
    let mut count = 0;
    for input in &args.inputs {
        let (files, default_out) = if input.is_dir() {
            let dumps = if input.join("dumps").is_dir() { input.join("dumps") } else { input.clone() };
            (dumps_in(&dumps)?, input.join("frames"))
        } else {
            let parent = input.parent().unwrap_or(Path::new("."));
            (vec![input.clone()], parent.join("frames"))
        };
        let out = args.output.clone().unwrap_or(default_out);
        std::fs::create_dir_all(&out)?;
        for f in files {
            let u = io::read_dump(&f)?;
            let target = out.join(f.with_extension("pgm").file_name().expect("file name"));
            io::write_pgm(&target, &u.to_partition())?;
            count += 1;
        }
    }
    println!("rendered {count} frames");
    Ok(())
}

fn configure_threads() {
    if let Ok(v) = std::env::var("MBO_THREADS") {
        match v.parse::<usize>() {
            Ok(k) if k > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
                    log::warn!("MBO_THREADS ignored: {e}");
                }
            }
            _ => log::warn!("MBO_THREADS = `{v}` is not a positive integer; ignored"),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    configure_threads();
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Ledger(a) => cmd_ledger(a),
        Command::Study(a) => cmd_study(a),
        Command::ValidateSigma(a) => cmd_validate_sigma(a),
        Command::Render(a) => cmd_render(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(Failure::Ledger(m)) => {
            eprintln!("ledger failure: {m}");
            ExitCode::from(EXIT_LEDGER)
        }
        Err(Failure::Io(m)) => {
            eprintln!("io error: {m}");
            ExitCode::from(EXIT_IO)
        }
    }
}
