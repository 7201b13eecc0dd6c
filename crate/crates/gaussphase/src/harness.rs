//! Experiment driver behind the `gaussphase` binary.
//!
//! A run is described by one JSON [`ExperimentConfig`]; command-line flags
//! override individual fields. Sampled runs and random states require a seed.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::fock::{oracle_trace, DEFAULT_CUTOFF_ONE_MODE, DEFAULT_CUTOFF_TWO_MODES};
use crate::gaussian::{random_state, GaussianState, StateKind};
use crate::phase::{trace_detailed, MetaplecticEvolution};
use crate::reconstruction::{
    reconstruct, PhaseSource, PipelinePlan, ReconstructionReport, ShearChoice, StrategyParams, StrategyTag,
};
use crate::symplectic::GeneratorSpec;

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "GAUSSPHASE_OUT";
/// Largest closed-form/oracle difference accepted by `verify`.
pub const VERIFY_TOLERANCE: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// State specification, see [`StateSpec::parse`].
    pub state: String,
    pub strategy: u8,
    pub shots: u64,
    pub seed: Option<u64>,
    pub params: StrategyParams,
    pub shear: ShearChoice,
    pub disambiguate: bool,
    pub cutoff: Option<usize>,
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            state: "vacuum:n=1".into(),
            strategy: 1,
            shots: 0,
            seed: None,
            params: StrategyParams::default(),
            shear: ShearChoice::Both,
            disambiguate: true,
            cutoff: None,
            output_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    /// Output directory: the config value, else the environment, else `./out`.
    pub fn output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn plan(&self) -> Result<PipelinePlan> {
        Ok(PipelinePlan {
            strategy: StrategyTag::from_number(self.strategy)?,
            params: self.params,
            shear: self.shear,
            disambiguate: self.disambiguate,
            pairs: true,
        })
    }

    fn require_seed(&self, why: &str) -> Result<u64> {
        self.seed.ok_or_else(|| Error::InvalidArgument(format!("{why} requires an explicit seed")))
    }

    pub fn state(&self) -> Result<GaussianState> {
        let spec = StateSpec::parse(&self.state)?;
        let seed = if spec.is_random() { Some(self.require_seed("a random state")?) } else { None };
        spec.build(seed)
    }
}

/// Parsed state specification.
#[derive(Debug, Clone, PartialEq)]
pub enum StateSpec {
    Vacuum { n: usize },
    Thermal { n: usize, nu: f64 },
    TwoModeSqueezed { r: f64 },
    RandomPure { n: usize },
    RandomMixed { n: usize, nu_max: f64 },
    File(PathBuf),
}

impl StateSpec {
    /// Accepts `vacuum:n=2`, `thermal:n=1,nu=1.5`, `tms:r=1`, `random-pure:n=3`,
    /// `random-mixed:n=2,nu_max=2` and `file:<path>` (or a bare `.json` path).
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(path) = s.strip_prefix("file:") {
            return Ok(StateSpec::File(PathBuf::from(path)));
        }
        if s.ends_with(".json") {
            return Ok(StateSpec::File(PathBuf::from(s)));
        }
        let (name, args) = s.split_once(':').unwrap_or((s, ""));
        let mut kv = std::collections::HashMap::new();
        for part in args.split(',').filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("malformed state argument '{part}'")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("state argument '{part}' is not a number")))?;
            kv.insert(k.trim().to_string(), v);
        }
        let get = |k: &str, default: Option<f64>| -> Result<f64> {
            kv.get(k)
                .copied()
                .or(default)
                .ok_or_else(|| Error::InvalidArgument(format!("state '{name}' needs '{k}='")))
        };
        let modes = |v: f64| -> Result<usize> {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::InvalidArgument(format!("mode count must be a positive integer, got {v}")))
            }
        };
        let spec = match name {
            "vacuum" => StateSpec::Vacuum { n: modes(get("n", Some(1.0))?)? },
            "thermal" => StateSpec::Thermal { n: modes(get("n", Some(1.0))?)?, nu: get("nu", None)? },
            "tms" => StateSpec::TwoModeSqueezed { r: get("r", None)? },
            "random-pure" => StateSpec::RandomPure { n: modes(get("n", Some(1.0))?)? },
            "random-mixed" => {
                StateSpec::RandomMixed { n: modes(get("n", Some(1.0))?)?, nu_max: get("nu_max", Some(2.0))? }
            }
            other => return Err(Error::InvalidArgument(format!("unknown state preset '{other}'"))),
        };
        let known: &[&str] = match &spec {
            StateSpec::Vacuum { .. } | StateSpec::RandomPure { .. } => &["n"],
            StateSpec::Thermal { .. } => &["n", "nu"],
            StateSpec::TwoModeSqueezed { .. } => &["r"],
            StateSpec::RandomMixed { .. } => &["n", "nu_max"],
            StateSpec::File(_) => &[],
        };
        if let Some(k) = kv.keys().find(|k| !known.contains(&k.as_str())) {
            return Err(Error::InvalidArgument(format!("state '{name}' does not take '{k}'")));
        }
        Ok(spec)
    }

    pub fn is_random(&self) -> bool {
        matches!(self, StateSpec::RandomPure { .. } | StateSpec::RandomMixed { .. })
    }

    pub fn build(&self, seed: Option<u64>) -> Result<GaussianState> {
        let seed = || seed.ok_or_else(|| Error::InvalidArgument("a random state requires a seed".into()));
        match self {
            StateSpec::Vacuum { n } => Ok(GaussianState::vacuum(*n)),
            StateSpec::Thermal { n, nu } => GaussianState::thermal(*n, *nu),
            StateSpec::TwoModeSqueezed { r } => Ok(GaussianState::two_mode_squeezed(*r)),
            StateSpec::RandomPure { n } => Ok(random_state(*n, StateKind::Pure, seed()?)),
            StateSpec::RandomMixed { n, nu_max } => {
                if *nu_max < 0.5 {
                    return Err(Error::InvalidArgument(format!("nu_max must be at least 1/2, got {nu_max}")));
                }
                Ok(random_state(*n, StateKind::Mixed { nu_max: *nu_max }, seed()?))
            }
            StateSpec::File(p) => GaussianState::from_json(&fs::read_to_string(p)?),
        }
    }
}

/// Writes the configured state to `<out>/state.json`.
pub fn cmd_gen_state(cfg: &ExperimentConfig) -> Result<(GaussianState, PathBuf)> {
    let state = cfg.state()?;
    let dir = cfg.output_dir();
    fs::create_dir_all(&dir)?;
    let path = dir.join("state.json");
    fs::write(&path, state.to_json()? + "\n")?;
    Ok((state, path))
}

/// Result of a reconstruction run.
#[derive(Debug, Clone)]
pub struct ReconstructOutcome {
    pub report: ReconstructionReport,
    pub json_path: PathBuf,
    pub csv_path: PathBuf,
    /// 0 on success, 2 when the report carries warnings.
    pub exit_code: i32,
}

pub fn cmd_reconstruct(cfg: &ExperimentConfig) -> Result<ReconstructOutcome> {
    let state = cfg.state()?.translate_to_zero();
    let plan = cfg.plan()?;
    let mut source = if cfg.shots > 0 {
        PhaseSource::sampled(&state, cfg.shots, cfg.require_seed("a sampled run")?)
    } else {
        PhaseSource::exact(&state)
    };
    let report = reconstruct(&mut source, &plan)?;
    let dir = cfg.output_dir();
    fs::create_dir_all(&dir)?;
    let json_path = dir.join("report.json");
    let csv_path = dir.join("report.csv");
    fs::write(&json_path, report.to_json()? + "\n")?;
    report.write_csv(fs::File::create(&csv_path)?)?;
    let exit_code = if report.warnings.is_empty() { 0 } else { 2 };
    Ok(ReconstructOutcome { report, json_path, csv_path, exit_code })
}

/// One row of the oracle comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyRow {
    pub label: String,
    pub closed_form: [f64; 2],
    pub oracle: [f64; 2],
    pub abs_diff: f64,
    pub truncation: f64,
    pub branch: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyTable {
    pub cutoff: usize,
    pub rows: Vec<VerifyRow>,
}

impl VerifyTable {
    pub fn max_diff(&self) -> f64 {
        self.rows.iter().fold(0.0, |m, r| m.max(r.abs_diff))
    }

    pub fn passed(&self) -> bool {
        self.max_diff() <= VERIFY_TOLERANCE
    }

    pub fn render(&self) -> String {
        let mut out = format!("{:<34} {:>10} {:>12} {:>12}\n", "evolution", "branch", "|diff|", "truncation");
        for r in &self.rows {
            let _ = writeln!(out, "{:<34} {:>10} {:>12.3e} {:>12.3e}", r.label, r.branch, r.abs_diff, r.truncation);
        }
        let _ = writeln!(out, "max |closed form − oracle| = {:.3e} (cutoff {})", self.max_diff(), self.cutoff);
        out
    }
}

/// Default evolutions compared against the oracle for an `n`-mode state.
pub fn verify_suite(n: usize, params: &StrategyParams) -> Result<Vec<(String, MetaplecticEvolution)>> {
    let mut suite = vec![
        ("rotation θ'".to_string(), vec![GeneratorSpec::Rotation { mode: 0, theta: params.theta1 }]),
        ("rotation θ''".to_string(), vec![GeneratorSpec::Rotation { mode: 0, theta: params.theta2 }]),
        ("rotation π".to_string(), vec![GeneratorSpec::Rotation { mode: 0, theta: PI }]),
        ("squeeze ζ, φ=π/2".to_string(), vec![GeneratorSpec::Squeeze { mode: 0, zeta: params.zeta, phi: FRAC_PI_2 }]),
        ("squeeze ζ, φ=0".to_string(), vec![GeneratorSpec::Squeeze { mode: 0, zeta: params.zeta, phi: 0.0 }]),
        ("position shear s".to_string(), vec![GeneratorSpec::ShearPosition { mode: 0, s: params.s }]),
        ("momentum shear s".to_string(), vec![GeneratorSpec::ShearMomentum { mode: 0, s: params.s }]),
        (
            "squeeze then rotation θ'''".to_string(),
            vec![
                GeneratorSpec::Squeeze { mode: 0, zeta: 0.5, phi: 0.0 },
                GeneratorSpec::Rotation { mode: 0, theta: params.theta3 },
            ],
        ),
    ];
    if n == 2 {
        suite.push(("two-mode rotation π/2".into(), vec![GeneratorSpec::TwoModeRotation { j: 0, k: 1, theta: FRAC_PI_2 }]));
        suite.push((
            "rotation π on mode 1".into(),
            vec![GeneratorSpec::Rotation { mode: 1, theta: PI }],
        ));
        suite.push((
            "quarter turn, two-mode rotation".into(),
            vec![
                GeneratorSpec::Rotation { mode: 0, theta: FRAC_PI_2 },
                GeneratorSpec::TwoModeRotation { j: 0, k: 1, theta: FRAC_PI_2 },
            ],
        ));
    }
    suite
        .into_iter()
        .map(|(l, steps)| Ok((l, MetaplecticEvolution::new(n, steps)?)))
        .collect()
}

/// Compares the closed-form trace with the Fock oracle on [`verify_suite`].
pub fn cmd_verify(cfg: &ExperimentConfig) -> Result<VerifyTable> {
    let state = cfg.state()?;
    let n = state.n();
    if n > 2 {
        return Err(Error::Unsupported(format!("oracle verification handles n ≤ 2, got n = {n}")));
    }
    let state = state.translate_to_zero();
    let cutoff = cfg.cutoff.unwrap_or(if n == 1 { DEFAULT_CUTOFF_ONE_MODE } else { DEFAULT_CUTOFF_TWO_MODES });
    let mut rows = Vec::new();
    for (label, evo) in verify_suite(n, &cfg.params)? {
        let exact = trace_detailed(&state, &evo)?;
        let oracle = oracle_trace(&state, &evo, cutoff)?;
        rows.push(VerifyRow {
            label,
            closed_form: [exact.value.re, exact.value.im],
            oracle: [oracle.value.re, oracle.value.im],
            abs_diff: (exact.value - oracle.value).norm(),
            truncation: oracle.defect,
            branch: format!("{:?}", exact.branch).to_lowercase(),
        });
    }
    Ok(VerifyTable { cutoff, rows })
}

/// Human-readable summary of a stored report.
pub fn cmd_report(path: &Path) -> Result<String> {
    let report = ReconstructionReport::from_json(&fs::read_to_string(path)?)?;
    Ok(render_report(&report))
}

pub fn render_report(report: &ReconstructionReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "modes: {}    phase samples: {}", report.n, report.samples.len());
    let _ = writeln!(out, "estimated covariance matrix:");
    for row in &report.v_est {
        let cells: Vec<String> = row.iter().map(|x| format!("{x:>12.6}")).collect();
        let _ = writeln!(out, "  {}", cells.join(" "));
    }
    if let Some(e) = report.max_abs_error {
        let _ = writeln!(out, "max |error| = {e:.3e}");
        for (block, r) in &report.block_residuals {
            let _ = writeln!(out, "  {block:<5} {r:.3e}");
        }
    }
    let show = |x: Option<f64>, f: fn(f64) -> String| x.map_or_else(|| "undefined".to_string(), f);
    let mixedness = show(report.mixedness, |m| format!("{m:.3e}"));
    let _ = writeln!(out, "bona-fide slack: {:.3e}    mixedness: {mixedness}", report.bona_fide_slack);
    for m in &report.modes {
        let fixed = |x: f64| format!("{x:.6}");
        let _ = writeln!(
            out,
            "mode {}: τ = {:.6}  purity = {}  Rényi-2 = {}",
            m.mode,
            m.tau,
            show(m.purity, fixed),
            show(m.renyi2, fixed)
        );
    }
    for w in &report.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse() {
        assert_eq!(StateSpec::parse("vacuum:n=2").unwrap(), StateSpec::Vacuum { n: 2 });
        assert_eq!(StateSpec::parse("tms:r=1").unwrap(), StateSpec::TwoModeSqueezed { r: 1.0 });
        assert!(StateSpec::parse("tms:n=2").is_err());
        assert!(StateSpec::parse("vacuum:n=1.5").is_err());
        assert!(StateSpec::parse("cat:n=1").is_err());
        assert!(StateSpec::parse("random-pure:n=2").unwrap().build(None).is_err());
    }

    #[test]
    fn vacuum_two_modes() {
        let st = StateSpec::parse("vacuum:n=2").unwrap().build(None).unwrap();
        assert_eq!(st.cov().matrix(), &(crate::linalg::RMat::identity(4, 4) * 0.5));
    }

    #[test]
    fn config_requires_seed_for_sampling() {
        let cfg = ExperimentConfig { shots: 100, output_dir: Some(std::env::temp_dir()), ..Default::default() };
        assert!(matches!(cmd_reconstruct(&cfg), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn verify_rejects_three_modes() {
        let cfg = ExperimentConfig { state: "vacuum:n=3".into(), ..Default::default() };
        assert!(matches!(cmd_verify(&cfg), Err(Error::Unsupported(_))));
    }
}
