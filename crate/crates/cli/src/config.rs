//! Option structs shared by flags and TOML config files. A flag wins over
//! the config value, which wins over the built-in default.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;

pub trait Overlay {
    /// `self` takes precedence, `base` fills the gaps.
    fn overlay(self, base: Self) -> Self;
}

macro_rules! overlay {
    ($t:ty { $($f:ident),* $(,)? } $(nested $n:ident)?) => {
        impl Overlay for $t {
            fn overlay(self, base: Self) -> Self {
                Self { $($f: self.$f.or(base.$f),)* $($n: self.$n.overlay(base.$n),)? }
            }
        }
    };
}

#[derive(Args, Deserialize, Default, Clone, Debug)]
#[serde(default)]
pub struct Globals {
    /// TOML file with option values; flags override it.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Where to write the JSON report (stdout when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for generated inputs.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Fail on actions that are not c-bounded instead of warning.
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    pub strict: Option<bool>,
}

overlay!(Globals { config, out, seed, strict });

#[derive(Args, Deserialize, Default, Clone, Debug)]
#[serde(default)]
pub struct GridArgs {
    /// Coarsest grid value is 2^-kmin.
    #[arg(long)]
    pub kmin: Option<i32>,
    /// Finest grid value is 2^-kmax.
    #[arg(long)]
    pub kmax: Option<i32>,
    /// Lower end of every box axis.
    #[arg(long, allow_hyphen_values = true)]
    pub lo: Option<f64>,
    /// Upper end of every box axis.
    #[arg(long, allow_hyphen_values = true)]
    pub hi: Option<f64>,
    /// Lattice points per box axis.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Order at which negligibility is required.
    #[arg(long)]
    pub p: Option<u32>,
    #[arg(long)]
    pub p_max: Option<u32>,
    /// Highest derivative order probed.
    #[arg(long)]
    pub max_order: Option<u32>,
    /// Lattice points for one-dimensional scans.
    #[arg(long)]
    pub line_samples: Option<usize>,
}

overlay!(GridArgs { kmin, kmax, lo, hi, samples, p, p_max, max_order, line_samples });

#[derive(Args, Deserialize, Default, Clone, Debug)]
#[serde(default)]
pub struct NetArgs {
    /// Expression in eps and x1..xd.
    #[arg(long, allow_hyphen_values = true)]
    pub f: Option<String>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
}

overlay!(NetArgs { f, dim } nested grid);

#[derive(Args, Deserialize, Default, Clone, Debug)]
#[serde(default)]
pub struct InvarianceArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub net: NetArgs,
    /// Group element as JSON text or a path to a JSON file.
    #[arg(long)]
    pub element: Option<String>,
    /// Planar rotation "i,j,theta".
    #[arg(long, allow_hyphen_values = true)]
    pub rotation: Option<String>,
    /// Boost "i,j,theta".
    #[arg(long, allow_hyphen_values = true)]
    pub boost: Option<String>,
    /// Translation "h1,h2,...".
    #[arg(long, allow_hyphen_values = true)]
    pub shift: Option<String>,
}

overlay!(InvarianceArgs { element, rotation, boost, shift } nested net);

#[derive(Args, Deserialize, Default, Clone, Debug)]
#[serde(default)]
pub struct OneParamArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub net: NetArgs,
    /// rotation, boost or translation.
    #[arg(long)]
    pub flow: Option<String>,
    #[arg(long)]
    pub i: Option<usize>,
    #[arg(long)]
    pub j: Option<usize>,
    /// Translation direction "v1,v2,...".
    #[arg(long, allow_hyphen_values = true)]
    pub direction: Option<String>,
    /// Extra real parameter for the hypothesis (repeatable).
    #[arg(long = "theta", allow_hyphen_values = true)]
    pub thetas: Option<Vec<f64>>,
    /// Generalized parameter expression (repeatable).
    #[arg(long = "gen", allow_hyphen_values = true)]
    pub gen: Option<Vec<String>>,
}

overlay!(OneParamArgs { flow, i, j, direction, thetas, gen } nested net);

#[derive(Args, Deserialize, Default, Clone, Debug)]
#[serde(default)]
pub struct MatrixArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub net: NetArgs,
    /// JSON file with an array of rows; entries are numbers, expressions
    /// or {"table": [[eps, value], ...]}. Generated from --seed when absent.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
}

overlay!(MatrixArgs { matrix } nested net);

#[derive(Args, Deserialize, Default, Clone, Debug)]
#[serde(default)]
pub struct DecomposeArgs {
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
}

overlay!(DecomposeArgs { matrix } nested grid);

#[derive(Args, Deserialize, Default, Clone, Debug)]
#[serde(default)]
pub struct AlphaArgs {
    /// sqrt2, sqrt3, sqrt5, phi, cbrt2, cbrt3, pi, e or a number.
    #[arg(long)]
    pub alpha: Option<String>,
    /// Integer polynomial, highest degree first, for a custom algebraic α.
    #[arg(long, allow_hyphen_values = true)]
    pub poly: Option<String>,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: Option<u64>,
    #[arg(long = "R")]
    #[serde(rename = "R")]
    pub r: Option<f64>,
}

overlay!(AlphaArgs { alpha, poly, n, r });

#[derive(Args, Deserialize, Default, Clone, Debug)]
#[serde(default)]
pub struct PeriodArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub net: NetArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub alpha: AlphaArgs,
}

impl Overlay for PeriodArgs {
    fn overlay(self, base: Self) -> Self {
        PeriodArgs { net: self.net.overlay(base.net), alpha: self.alpha.overlay(base.alpha) }
    }
}

#[derive(Args, Deserialize, Default, Clone, Debug)]
#[serde(default)]
pub struct TranslationArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub net: NetArgs,
    /// Translation "h1,h2,..." (repeatable).
    #[arg(long = "shift", allow_hyphen_values = true)]
    pub shifts: Option<Vec<String>>,
}

overlay!(TranslationArgs { shifts } nested net);

/// Reads the config file (if any) as `T` and overlays the flags on it.
pub fn resolve<T>(flags: T, globals: &Globals) -> Result<(T, Globals), String>
where
    T: Overlay + Default + for<'de> Deserialize<'de>,
{
    let Some(path) = &globals.config else {
        return Ok((flags, globals.clone()));
    };
    let text = read(path)?;
    let file: T = toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let file_globals: Globals = toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok((flags.overlay(file), globals.clone().overlay(file_globals)))
}

pub fn read(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}
