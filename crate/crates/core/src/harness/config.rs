//! Run and study configuration: a TOML file of plain keys with named presets.
//!
//! ```toml
//! n = 64                  # cells per axis
//! dim = 2
//! side = 1.0
//! phases = 3              # optional; inferred from sigma or shape
//! sigma = "uniform"       # "uniform", "two-phase(s)", "read-shockley(θ1,θ2,..)", or a dense matrix
//! sigma_cutoff = 30.0     # read-shockley cutoff angle in degrees
//! shape = "disk:0.3"      # stripe[:axis[:fraction]], disk:r[@x,y[,z]], two_disks, triple_t,
//!                         # voronoi[:P[:seed]], single[:label]
//! h = [4e-3, 1e-3]        # one value or a list
//! steps = 20              # or final_time; final_time must be a multiple of every h
//! zeta = "one"            # one, constant:c, cos-bump, gaussian-bump
//! seed = 0
//! output = "out"
//! dump_every = 0          # 0 disables checkpoints
//! frame_every = 0
//!
//! [dictionary]
//! k = 3
//! radial = true
//!
//! [solver]
//! tolerance = 1e-8
//! max_iterations = 5000
//! accelerated = true
//! t_samples = 8
//! ```

use crate::energetics::ZetaPreset;
use crate::error::{MboError, Result};
use crate::grid::{rasterize, Grid, Partition, ShapeSpec};
use crate::tensions::SurfaceTensionMatrix;
use crate::variational::SolverSettings;
use serde::Deserialize;
use std::path::{Path, PathBuf};

pub const DEFAULT_T_SAMPLES: usize = 8;
pub const DEFAULT_DICTIONARY_K: i32 = 3;
pub const DEFAULT_READ_SHOCKLEY_CUTOFF: f64 = 30.0;

/// Either a preset name or a dense matrix (nested or flat row-major).
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum SigmaSpec {
    Preset(String),
    Rows(Vec<Vec<f64>>),
    Flat(Vec<f64>),
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DictionaryFile {
    pub k: Option<i32>,
    pub radial: Option<bool>,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SolverFile {
    pub tolerance: Option<f64>,
    pub max_iterations: Option<usize>,
    pub accelerated: Option<bool>,
    pub t_samples: Option<usize>,
}

/// The file as written; every key optional so command-line flags can fill gaps.
#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub n: Option<usize>,
    pub dim: Option<usize>,
    pub side: Option<f64>,
    pub phases: Option<usize>,
    pub sigma: Option<SigmaSpec>,
    pub sigma_cutoff: Option<f64>,
    pub shape: Option<String>,
    pub h: Option<OneOrMany>,
    pub steps: Option<usize>,
    pub final_time: Option<f64>,
    pub zeta: Option<String>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub dump_every: Option<usize>,
    pub frame_every: Option<usize>,
    #[serde(default)]
    pub dictionary: DictionaryFile,
    #[serde(default)]
    pub solver: SolverFile,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| MboError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| MboError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DictionarySpec {
    pub k: i32,
    /// Add the smoothed radial field around each disk center.
    pub radial: bool,
}

impl Default for DictionarySpec {
    fn default() -> Self {
        DictionarySpec { k: DEFAULT_DICTIONARY_K, radial: true }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyConfig {
    pub grid: Grid,
    pub sigma: SurfaceTensionMatrix,
    pub shape: ShapeSpec,
    pub h_list: Vec<f64>,
    pub final_time: f64,
    pub zeta: ZetaPreset,
    pub dictionary: DictionarySpec,
    pub solver: SolverSettings,
    pub t_samples: usize,
    pub output: PathBuf,
    pub seed: u64,
    pub dump_every: usize,
    pub frame_every: usize,
}

impl StudyConfig {
    /// Resolve a parsed file. `steps`, if given, is counted in units of the first `h`.
    pub fn from_file(file: &ConfigFile) -> Result<Self> {
        let n = file.n.ok_or_else(|| MboError::Config("missing key `n`".into()))?;
        let grid = Grid::new(n, file.dim.unwrap_or(2), file.side.unwrap_or(1.0))?;
        let seed = file.seed.unwrap_or(0);
        let shape_text = file.shape.as_deref().ok_or_else(|| MboError::Config("missing key `shape`".into()))?;
        let shape = parse_shape(shape_text, &grid, file.phases, seed)?;
        let phases = resolve_phases(file.phases, file.sigma.as_ref(), &shape)?;
        let sigma = parse_sigma(
            file.sigma.as_ref().unwrap_or(&SigmaSpec::Preset("uniform".into())),
            phases,
            file.sigma_cutoff.unwrap_or(DEFAULT_READ_SHOCKLEY_CUTOFF),
        )?;
        if sigma.phases() != phases {
            return Err(MboError::Config(format!("sigma is {0}x{0} but {phases} phases requested", sigma.phases())));
        }
        shape.validate(&grid, phases)?;
        let h_list = match &file.h {
            Some(OneOrMany::One(h)) => vec![*h],
            Some(OneOrMany::Many(v)) => v.clone(),
            None => return Err(MboError::Config("missing key `h`".into())),
        };
        if h_list.is_empty() || h_list.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
            return Err(MboError::Config("h must be a nonempty list of positive numbers".into()));
        }
        let final_time = match (file.steps, file.final_time) {
            (Some(_), Some(_)) => return Err(MboError::Config("give either `steps` or `final_time`, not both".into())),
            (Some(s), None) => s as f64 * h_list[0],
            (None, Some(t)) => t,
            (None, None) => return Err(MboError::Config("missing `steps` or `final_time`".into())),
        };
        let defaults = SolverSettings::default();
        let cfg = StudyConfig {
            grid,
            sigma,
            shape,
            h_list,
            final_time,
            zeta: parse_zeta(file.zeta.as_deref().unwrap_or("one"), &grid)?,
            dictionary: DictionarySpec {
                k: file.dictionary.k.unwrap_or(DEFAULT_DICTIONARY_K),
                radial: file.dictionary.radial.unwrap_or(true),
            },
            solver: SolverSettings {
                tolerance: file.solver.tolerance.unwrap_or(defaults.tolerance),
                max_iterations: file.solver.max_iterations.unwrap_or(defaults.max_iterations),
                accelerated: file.solver.accelerated.unwrap_or(defaults.accelerated),
            },
            t_samples: file.solver.t_samples.unwrap_or(DEFAULT_T_SAMPLES),
            output: file.output.clone().unwrap_or_else(|| PathBuf::from("out")),
            seed,
            dump_every: file.dump_every.unwrap_or(0),
            frame_every: file.frame_every.unwrap_or(0),
        };
        for &h in &cfg.h_list {
            cfg.steps_for(h)?;
        }
        if cfg.t_samples == 0 {
            return Err(MboError::Config("t_samples must be positive".into()));
        }
        Ok(cfg)
    }

    /// `N` with `N h = T`, rejecting a final time that is not a multiple of `h`.
    pub fn steps_for(&self, h: f64) -> Result<usize> {
        let q = self.final_time / h;
        let n = q.round();
        if n < 1.0 || (q - n).abs() > 1e-9 * q.max(1.0) {
            return Err(MboError::Config(format!("final time {} is not a positive multiple of h = {h}", self.final_time)));
        }
        Ok(n as usize)
    }

    pub fn initial_partition(&self) -> Result<Partition> {
        rasterize(&self.shape, &self.grid, self.sigma.phases())
    }
}

fn resolve_phases(explicit: Option<usize>, sigma: Option<&SigmaSpec>, shape: &ShapeSpec) -> Result<usize> {
    if let Some(p) = explicit {
        return Ok(p);
    }
    match sigma {
        Some(SigmaSpec::Rows(r)) => return Ok(r.len()),
        Some(SigmaSpec::Flat(v)) => {
            let p = (v.len() as f64).sqrt().round() as usize;
            if p * p != v.len() {
                return Err(MboError::Config(format!("flat sigma has {} entries, not a square", v.len())));
            }
            return Ok(p);
        }
        Some(SigmaSpec::Preset(s)) => {
            if let Some(args) = preset_args(s, "read-shockley") {
                return Ok(parse_list(args)?.len());
            }
            if preset_args(s, "two-phase").is_some() {
                return Ok(2);
            }
        }
        None => {}
    }
    Ok(match shape {
        ShapeSpec::Stripe { .. } | ShapeSpec::Disk { .. } | ShapeSpec::TwoDisks { .. } => 2,
        ShapeSpec::TripleT => 3,
        ShapeSpec::Voronoi { phases, .. } => *phases,
        ShapeSpec::Single { label } => (*label as usize + 1).max(2),
    })
}

/// `name(args)` → `Some("args")`; bare `name` → `Some("")`.
fn preset_args<'a>(s: &'a str, name: &str) -> Option<&'a str> {
    let s = s.trim();
    let rest = s.strip_prefix(name)?;
    if rest.is_empty() {
        return Some("");
    }
    rest.strip_prefix('(')?.strip_suffix(')')
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<f64>().map_err(|_| MboError::Config(format!("bad number `{t}`"))))
        .collect()
}

pub fn parse_sigma(spec: &SigmaSpec, phases: usize, cutoff: f64) -> Result<SurfaceTensionMatrix> {
    match spec {
        SigmaSpec::Rows(rows) => SurfaceTensionMatrix::from_rows(rows),
        SigmaSpec::Flat(v) => {
            let p = (v.len() as f64).sqrt().round() as usize;
            if p * p != v.len() {
                return Err(MboError::Config(format!("flat sigma has {} entries, not a square", v.len())));
            }
            SurfaceTensionMatrix::from_rows(&v.chunks(p).map(|r| r.to_vec()).collect::<Vec<_>>())
        }
        SigmaSpec::Preset(s) => {
            if s.trim() == "uniform" {
                return SurfaceTensionMatrix::uniform(phases);
            }
            if let Some(args) = preset_args(s, "two-phase") {
                let v = parse_list(args)?;
                return SurfaceTensionMatrix::two_phase(v.first().copied().unwrap_or(1.0));
            }
            if let Some(args) = preset_args(s, "read-shockley") {
                return SurfaceTensionMatrix::read_shockley(&parse_list(args)?, cutoff);
            }
            Err(MboError::Config(format!("unknown sigma preset `{s}`")))
        }
    }
}

pub fn parse_zeta(s: &str, grid: &Grid) -> Result<ZetaPreset> {
    let s = s.trim();
    match s {
        "one" | "constant" => return Ok(ZetaPreset::one()),
        "cos-bump" => return Ok(ZetaPreset::CosBump),
        "gaussian-bump" => return Ok(ZetaPreset::default_bump(grid)),
        _ => {}
    }
    if let Some(v) = s.strip_prefix("constant:") {
        let value: f64 = v.trim().parse().map_err(|_| MboError::Config(format!("bad constant `{v}`")))?;
        if !(value >= 0.0) {
            return Err(MboError::Config("constant zeta must be nonnegative".into()));
        }
        return Ok(ZetaPreset::Constant { value });
    }
    Err(MboError::Config(format!("unknown zeta preset `{s}`")))
}

/// Shape strings; lengths are absolute (same units as `side`).
pub fn parse_shape(s: &str, grid: &Grid, phases: Option<usize>, seed: u64) -> Result<ShapeSpec> {
    let s = s.trim();
    let mut parts = s.split(':');
    let kind = parts.next().unwrap_or("");
    let rest: Vec<&str> = parts.collect();
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| MboError::Config(format!("bad number `{t}` in shape `{s}`")));
    let half = 0.5 * grid.side();
    match kind {
        "stripe" => {
            let axis = match rest.first() {
                Some(a) => a.trim().parse::<usize>().map_err(|_| MboError::Config(format!("bad axis in `{s}`")))?,
                None => 0,
            };
            let fraction = match rest.get(1) {
                Some(f) => num(f)?,
                None => 0.5,
            };
            Ok(ShapeSpec::Stripe { axis, fraction })
        }
        "disk" => {
            let arg = rest.first().ok_or_else(|| MboError::Config("disk needs a radius, e.g. disk:0.25".into()))?;
            let (r, c) = match arg.split_once('@') {
                Some((r, c)) => {
                    let v = parse_list(c)?;
                    let mut center = [half; 3];
                    for (k, x) in v.iter().take(3).enumerate() {
                        center[k] = *x;
                    }
                    (num(r)?, center)
                }
                None => (num(arg)?, [half; 3]),
            };
            Ok(ShapeSpec::Disk { center: c, radius: r })
        }
        "two_disks" => Ok(ShapeSpec::default_two_disks(grid)),
        "triple_t" | "triple_T" => Ok(ShapeSpec::TripleT),
        "voronoi" => {
            let p = match rest.first() {
                Some(p) => p.trim().parse::<usize>().map_err(|_| MboError::Config(format!("bad phase count in `{s}`")))?,
                None => phases.unwrap_or(3),
            };
            let seed = match rest.get(1) {
                Some(v) => v.trim().parse::<u64>().map_err(|_| MboError::Config(format!("bad seed in `{s}`")))?,
                None => seed,
            };
            Ok(ShapeSpec::Voronoi { phases: p, seed })
        }
        "single" => {
            let label = match rest.first() {
                Some(l) => l.trim().parse::<u8>().map_err(|_| MboError::Config(format!("bad label in `{s}`")))?,
                None => 0,
            };
            Ok(ShapeSpec::Single { label })
        }
        _ => Err(MboError::Config(format!("unknown shape `{s}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
n = 32
shape = "voronoi"
phases = 3
sigma = "uniform"
h = [4e-3, 1e-3]
final_time = 8e-3
zeta = "cos-bump"
seed = 7

[solver]
t_samples = 4
"#;

    #[test]
    fn parses_sample() {
        let cfg = StudyConfig::from_file(&ConfigFile::parse(SAMPLE).unwrap()).unwrap();
        assert_eq!(cfg.grid.n(), 32);
        assert_eq!(cfg.sigma.phases(), 3);
        assert_eq!(cfg.shape, ShapeSpec::Voronoi { phases: 3, seed: 7 });
        assert_eq!(cfg.steps_for(1e-3).unwrap(), 8);
        assert_eq!(cfg.t_samples, 4);
        assert_eq!(cfg.zeta, ZetaPreset::CosBump);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ConfigFile::parse("n = 32\nbogus = 1\n").is_err());
        let off = SAMPLE.replace("final_time = 8e-3", "final_time = 9e-3");
        assert!(StudyConfig::from_file(&ConfigFile::parse(&off).unwrap()).is_err());
        let g = Grid::new(16, 2, 1.0).unwrap();
        assert!(parse_shape("hexagon", &g, None, 0).is_err());
        assert!(parse_zeta("wiggle", &g).is_err());
    }

    #[test]
    fn sigma_forms() {
        let a = parse_sigma(&SigmaSpec::Flat(vec![0.0, 1.0, 1.0, 0.0]), 2, 30.0).unwrap();
        let b = parse_sigma(&SigmaSpec::Preset("two-phase(1)".into()), 2, 30.0).unwrap();
        assert_eq!(a, b);
        let rs = parse_sigma(&SigmaSpec::Preset("read-shockley(0,10,25)".into()), 3, 30.0).unwrap();
        assert_eq!(rs.phases(), 3);
        let g = Grid::new(16, 2, 1.0).unwrap();
        assert_eq!(
            parse_shape("disk:0.2@0.3,0.4", &g, None, 0).unwrap(),
            ShapeSpec::Disk { center: [0.3, 0.4, 0.5], radius: 0.2 }
        );
    }
}
