//! Configuration-driven runs: spectra, dynamics, mean-field orbits and the
//! invariant checks behind the `slpd` binary.
//!
//! A run is described by one JSON document. Unknown keys are rejected.
//!
//! ```json
//! {
//!   "model": { "three_boson": { "omega1": 1.0, "omega2": 1.0, "omega3": 2.0, "g": [1.0, 0.0] } },
//!   "blocks": { "ncut": 3 },
//!   "solvers": ["all"]
//! }
//! ```

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::algebra::{block_operators, build_block, holstein_primakoff, Block, StructureFunction};
use crate::dynamics::evolution::{energy_expectation, norm};
use crate::dynamics::{
    detect_collapse_revival, incommensurability_measure, meanfield_trajectory, rabi_signal, uniform_grid,
    BlockEvolution, CollapseRevivalReport, DetectorSettings, IncommensurabilityReport, MeanFieldState, Signal,
};
use crate::error::Error;
use crate::exact::{
    build_hamiltonian, eigensolve, sl2_reference_spectrum, spectral_polynomial_roots, HamiltonianParams,
};
use crate::three_boson::{
    block_constants, block_for_label, enumerate_blocks, project_coherent, BlockLabel, CoherentInput,
    ThreeBosonParams,
};
use crate::variational::{variational_spectrum, VariationalSolution};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const VERIFY_FAILED: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const NUMERIC: i32 = 3;
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::Numeric(_) => exit::NUMERIC,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn numeric(block: &str, err: Error) -> CliError {
    CliError::Numeric(format!("block {block}: {err}"))
}

fn io_error(path: &Path, err: std::io::Error) -> CliError {
    CliError::Config(format!("{}: {err}", path.display()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub blocks: Option<BlockSelector>,
    #[serde(default = "default_solvers")]
    pub solvers: Vec<Solver>,
    #[serde(default)]
    pub dynamics: Option<DynamicsConfig>,
    #[serde(default)]
    pub meanfield: Option<MeanFieldConfig>,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub outputs: OutputNames,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelConfig {
    ThreeBoson(ThreeBosonParams),
    CustomPsi(CustomPsiConfig),
    Sl2Limit(Sl2Config),
}

/// A single block of an explicit structure function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomPsiConfig {
    pub leading_coeff: f64,
    pub roots: Vec<f64>,
    pub l0: f64,
    pub a: f64,
    pub g: Complex64,
    #[serde(default)]
    pub constant: f64,
    #[serde(default = "default_dmax")]
    pub dmax: usize,
}

/// A single spin-`j` block of undeformed su(2).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sl2Config {
    pub j: f64,
    pub a: f64,
    pub g: Complex64,
    #[serde(default)]
    pub constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockSelector {
    Labels(Vec<BlockLabel>),
    Ncut(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    Exact,
    Variational,
    Sl2Reference,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsConfig {
    pub tmax: f64,
    pub samples: usize,
    /// Initial product coherent state (three-boson model).
    #[serde(default)]
    pub coherent: Option<CoherentInput>,
    /// Initial basis vector (single-block models).
    #[serde(default)]
    pub seed_level: usize,
    #[serde(default = "default_tail_bound")]
    pub tail_bound: f64,
    #[serde(default)]
    pub detector: DetectorSettings,
    #[serde(default = "default_qmax")]
    pub qmax: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeanFieldConfig {
    pub p0: f64,
    pub q0: f64,
    pub dt: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RootFault {
    pub root_index: usize,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    /// Shift one root of the structure function used to build the operators.
    #[serde(default)]
    pub fault: Option<RootFault>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputNames {
    pub spectrum_csv: String,
    pub spectrum_json: String,
    pub signal_csv: String,
    pub dynamics_json: String,
    pub meanfield_csv: String,
    pub meanfield_json: String,
}

impl Default for OutputNames {
    fn default() -> Self {
        Self {
            spectrum_csv: "spectrum.csv".into(),
            spectrum_json: "spectrum_summary.json".into(),
            signal_csv: "signal.csv".into(),
            dynamics_json: "dynamics_report.json".into(),
            meanfield_csv: "meanfield.csv".into(),
            meanfield_json: "meanfield_report.json".into(),
        }
    }
}

fn default_solvers() -> Vec<Solver> {
    vec![Solver::All]
}

fn default_dmax() -> usize {
    256
}

fn default_tail_bound() -> f64 {
    1e-6
}

fn default_qmax() -> u32 {
    8
}

/// A parsed configuration and the SHA-256 of its bytes.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub digest: String,
}

impl LoadedConfig {
    pub fn from_bytes(bytes: &[u8]) -> CliResult<Self> {
        let config = serde_json::from_slice(bytes).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(Self {
            config,
            digest: hex::encode(Sha256::digest(bytes)),
        })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let bytes = fs::read(path).map_err(|e| io_error(path, e))?;
        Self::from_bytes(&bytes)
    }

    /// Built-in configuration used by `verify` without `--config`.
    pub fn default_verify() -> Self {
        let text = r#"{"model":{"three_boson":{"omega1":1.0,"omega2":1.0,"omega3":2.0,"g":[1.0,0.0]}},"blocks":{"ncut":4}}"#;
        Self::from_bytes(text.as_bytes()).expect("built-in config parses")
    }
}

/// Flags shared by all commands.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub verbose: bool,
    /// Include wall-clock timings in JSON summaries (outputs are then no
    /// longer reproducible byte for byte).
    pub timings: bool,
}

/// A block ready for solving.
#[derive(Debug, Clone)]
pub struct ResolvedBlock {
    pub id: String,
    pub block: Block,
    pub params: HamiltonianParams,
    pub label: Option<BlockLabel>,
}

fn check_half_integer(j: f64) -> CliResult<usize> {
    let two_j = 2.0 * j;
    if j < 0.0 || (two_j - two_j.round()).abs() > 1e-12 {
        return Err(CliError::Config(format!("j = {j} is not a nonnegative half-integer")));
    }
    Ok(two_j.round() as usize)
}

/// Blocks selected by a configuration, in output order.
pub fn resolve_blocks(config: &RunConfig) -> CliResult<Vec<ResolvedBlock>> {
    let build_err = |id: &str, e: Error| CliError::Config(format!("block {id}: {e}"));
    match &config.model {
        ModelConfig::ThreeBoson(params) => {
            let labels = match &config.blocks {
                Some(BlockSelector::Labels(labels)) => labels.iter().map(|l| BlockLabel::new(l.k, l.sign, l.m)).collect(),
                Some(BlockSelector::Ncut(ncut)) => enumerate_blocks(*ncut),
                None => return Err(CliError::Config("three_boson model needs a \"blocks\" selector".into())),
            };
            labels
                .into_iter()
                .map(|label| {
                    let id = label.to_string();
                    let block = block_for_label(&label, params).map_err(|e| build_err(&id, e))?;
                    Ok(ResolvedBlock {
                        id,
                        block,
                        params: block_constants(&label, params),
                        label: Some(label),
                    })
                })
                .collect()
        }
        ModelConfig::CustomPsi(c) => {
            if config.blocks.is_some() {
                return Err(CliError::Config("\"blocks\" applies to the three_boson model only".into()));
            }
            let psi = StructureFunction::new(c.leading_coeff, c.roots.clone());
            let block = build_block(&psi, c.l0, BTreeMap::new(), c.constant, c.dmax).map_err(|e| build_err("custom", e))?;
            Ok(vec![ResolvedBlock {
                id: "custom".into(),
                block,
                params: HamiltonianParams::new(c.a, c.g, c.constant),
                label: None,
            }])
        }
        ModelConfig::Sl2Limit(c) => {
            if config.blocks.is_some() {
                return Err(CliError::Config("\"blocks\" applies to the three_boson model only".into()));
            }
            let two_j = check_half_integer(c.j)?;
            let block = build_block(&StructureFunction::su2(c.j), -c.j, BTreeMap::new(), c.constant, two_j + 2)
                .map_err(|e| build_err("sl2", e))?;
            Ok(vec![ResolvedBlock {
                id: "sl2".into(),
                block,
                params: HamiltonianParams::new(c.a, c.g, c.constant),
                label: None,
            }])
        }
    }
}

/// Shortest decimal that parses back to the same `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:?}")
}

fn opt_float(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

fn write_file(dir: &Path, name: &str, contents: &str) -> CliResult<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| io_error(&path, e))?;
    Ok(path)
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> CliResult<PathBuf> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Numeric(e.to_string()))?;
    text.push('\n');
    write_file(dir, name, &text)
}

fn wants(config: &RunConfig, solver: Solver) -> bool {
    config.solvers.iter().any(|s| *s == solver || *s == Solver::All)
}

/// Per-block spectra from the selected methods.
#[derive(Debug, Clone)]
pub struct BlockSpectra {
    pub id: String,
    pub dim: usize,
    pub truncated: bool,
    pub exact: Option<Vec<f64>>,
    pub variational: Option<VariationalSolution>,
    pub variational_note: Option<String>,
    pub sl2_reference: Option<Vec<f64>>,
}

fn solve_block(config: &RunConfig, rb: &ResolvedBlock) -> CliResult<BlockSpectra> {
    let exact = if wants(config, Solver::Exact) {
        let tri = build_hamiltonian(&rb.block, &rb.params).map_err(|e| numeric(&rb.id, e))?;
        Some(eigensolve(&tri).map_err(|e| numeric(&rb.id, e))?.energies)
    } else {
        None
    };
    let (variational, variational_note) = if wants(config, Solver::Variational) {
        match variational_spectrum(&rb.block, &rb.params) {
            Ok(sol) => (Some(sol), None),
            Err(Error::ZeroCoupling) => (None, Some(Error::ZeroCoupling.to_string())),
            Err(e) => return Err(numeric(&rb.id, e)),
        }
    } else {
        (None, None)
    };
    let sl2_reference = wants(config, Solver::Sl2Reference).then(|| sl2_reference_spectrum(&rb.block, &rb.params).energies);
    Ok(BlockSpectra {
        id: rb.id.clone(),
        dim: rb.block.dim(),
        truncated: rb.block.truncated(),
        exact,
        variational,
        variational_note,
        sl2_reference,
    })
}

#[derive(Debug, Serialize)]
struct BlockSummary<'a> {
    block_id: &'a str,
    dim: usize,
    truncated: bool,
    alpha_roots: Vec<f64>,
    root_residuals: Vec<f64>,
    alpha_selected: Option<f64>,
    r_selected: Option<f64>,
    max_abs_err_var: Option<f64>,
    max_abs_err_sl2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<&'a str>,
}

#[derive(Debug, Serialize)]
struct Tolerances {
    root_detection: f64,
    eigen_residual: f64,
    oracle_equivalence: f64,
    stationarity: f64,
}

#[derive(Debug, Serialize)]
struct SpectrumSummary<'a> {
    config_sha256: &'a str,
    blocks: Vec<BlockSummary<'a>>,
    tolerances: Tolerances,
    #[serde(skip_serializing_if = "Option::is_none")]
    timings_ms: Option<BTreeMap<&'static str, f64>>,
}

fn max_err(a: &Option<Vec<f64>>, b: Option<&[f64]>) -> Option<f64> {
    match (a, b) {
        (Some(a), Some(b)) => Some(a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)),
        _ => None,
    }
}

/// Result of `cmd_spectrum`.
#[derive(Debug, Clone)]
pub struct SpectrumOutcome {
    pub blocks: Vec<BlockSpectra>,
    pub csv: PathBuf,
    pub summary: PathBuf,
}

/// Solves every selected block and writes the CSV table and JSON summary.
pub fn cmd_spectrum(loaded: &LoadedConfig, out: &Path, opts: RunOptions) -> CliResult<SpectrumOutcome> {
    let started = Instant::now();
    let config = &loaded.config;
    let blocks = resolve_blocks(config)?;
    let solved: Vec<BlockSpectra> = blocks
        .par_iter()
        .map(|rb| solve_block(config, rb))
        .collect::<CliResult<_>>()?;
    let solve_ms = started.elapsed().as_secs_f64() * 1e3;

    let mut csv = format!("# config_sha256={}\n", loaded.digest);
    csv.push_str("block_id,v,E_exact,E_variational,E_sl2ref,abs_err_var,abs_err_sl2,alpha_selected,residual\n");
    for b in &solved {
        let var = b.variational.as_ref();
        let alpha = var.map(|s| s.alpha_selected());
        let residual = var.map(|s| s.roots[s.selected].residual);
        for v in 0..b.dim {
            let e = b.exact.as_ref().map(|x| x[v]);
            let ev = var.map(|s| s.energies[v]);
            let es = b.sl2_reference.as_ref().map(|x| x[v]);
            let err = |x: Option<f64>| match (x, e) {
                (Some(x), Some(e)) => Some((x - e).abs()),
                _ => None,
            };
            writeln!(
                csv,
                "{},{},{},{},{},{},{},{},{}",
                b.id,
                v,
                opt_float(e),
                opt_float(ev),
                opt_float(es),
                opt_float(err(ev)),
                opt_float(err(es)),
                opt_float(alpha),
                opt_float(residual)
            )
            .expect("writing to a String");
        }
    }
    let csv_path = write_file(out, &config.outputs.spectrum_csv, &csv)?;

    let summary = SpectrumSummary {
        config_sha256: &loaded.digest,
        blocks: solved
            .iter()
            .map(|b| {
                let var = b.variational.as_ref();
                BlockSummary {
                    block_id: &b.id,
                    dim: b.dim,
                    truncated: b.truncated,
                    alpha_roots: var.map(|s| s.alpha_roots()).unwrap_or_default(),
                    root_residuals: var.map(|s| s.residuals()).unwrap_or_default(),
                    alpha_selected: var.map(|s| s.alpha_selected()),
                    r_selected: var.map(|s| s.r_selected()),
                    max_abs_err_var: max_err(&b.exact, var.map(|s| s.energies.as_slice())),
                    max_abs_err_sl2: max_err(&b.exact, b.sl2_reference.as_deref()),
                    note: b.variational_note.as_deref(),
                }
            })
            .collect(),
        tolerances: Tolerances {
            root_detection: crate::algebra::ROOT_TOLERANCE,
            eigen_residual: 1e-10,
            oracle_equivalence: 1e-8,
            stationarity: 1e-10,
        },
        timings_ms: opts.timings.then(|| {
            let mut t = BTreeMap::new();
            t.insert("solve", solve_ms);
            t.insert("total", started.elapsed().as_secs_f64() * 1e3);
            t
        }),
    };
    let summary_path = write_json(out, &config.outputs.spectrum_json, &summary)?;
    if opts.verbose {
        eprintln!("solved {} blocks in {solve_ms:.1} ms", solved.len());
    }
    Ok(SpectrumOutcome {
        blocks: solved,
        csv: csv_path,
        summary: summary_path,
    })
}

/// Report written by `cmd_dynamics`.
#[derive(Debug, Clone, Serialize)]
pub struct DynamicsReport {
    pub config_sha256: String,
    pub samples: usize,
    pub blocks_used: usize,
    pub discarded_probability: f64,
    pub tail_warning: bool,
    /// `2 pi / (E_1 - E_0)` when the signal is a single two-level or
    /// equidistant block.
    pub expected_period: Option<f64>,
    pub carrier_period: Option<f64>,
    pub initial_envelope: Option<f64>,
    pub collapse_time: Option<f64>,
    pub revival_times: Vec<f64>,
    pub detector_note: Option<String>,
    pub incommensurability_block: Option<String>,
    pub incommensurability: Option<IncommensurabilityReport>,
}

#[derive(Debug, Clone)]
pub struct DynamicsOutcome {
    pub signal: Signal,
    pub report: DynamicsReport,
    pub detection: Option<CollapseRevivalReport>,
}

fn single_block_signal(rb: &ResolvedBlock, dynamics: &DynamicsConfig, times: &[f64]) -> CliResult<(Signal, Vec<f64>)> {
    let d = rb.block.dim();
    if dynamics.seed_level >= d {
        return Err(CliError::Config(format!(
            "seed_level {} outside block {} of dimension {d}",
            dynamics.seed_level, rb.id
        )));
    }
    let tri = build_hamiltonian(&rb.block, &rb.params).map_err(|e| numeric(&rb.id, e))?;
    let spectrum = eigensolve(&tri).map_err(|e| numeric(&rb.id, e))?;
    let energies = spectrum.energies.clone();
    let mut c0 = vec![Complex64::new(0.0, 0.0); d];
    c0[dynamics.seed_level] = Complex64::new(1.0, 0.0);
    let weights: Vec<f64> = (0..d).map(|v| (d - 1 - v) as f64).collect();
    Ok((BlockEvolution::new(spectrum, &c0).signal(&weights, times), energies))
}

fn heaviest_block(input: &CoherentInput, params: &ThreeBosonParams) -> CliResult<Option<(String, Vec<f64>)>> {
    let mut best: Option<(f64, BlockLabel)> = None;
    for label in enumerate_blocks(input.ncut).into_iter().filter(|l| l.dim() >= 3) {
        let w: f64 = project_coherent(input, &label).iter().map(|z| z.norm_sqr()).sum();
        if w > 0.0 && best.is_none_or(|(bw, _)| w > bw) {
            best = Some((w, label));
        }
    }
    let Some((_, label)) = best else { return Ok(None) };
    let id = label.to_string();
    let block = block_for_label(&label, params).map_err(|e| numeric(&id, e))?;
    let tri = build_hamiltonian(&block, &block_constants(&label, params)).map_err(|e| numeric(&id, e))?;
    let energies = eigensolve(&tri).map_err(|e| numeric(&id, e))?.energies;
    Ok(Some((id, energies)))
}

/// Evolves the configured initial state and writes the signal and report.
pub fn cmd_dynamics(loaded: &LoadedConfig, out: &Path, opts: RunOptions) -> CliResult<DynamicsOutcome> {
    let config = &loaded.config;
    let dynamics = config
        .dynamics
        .as_ref()
        .ok_or_else(|| CliError::Config("missing \"dynamics\" section".into()))?;
    if !(dynamics.tmax > 0.0) || dynamics.samples < 2 {
        return Err(CliError::Config("dynamics needs tmax > 0 and at least 2 samples".into()));
    }
    let times = uniform_grid(dynamics.tmax, dynamics.samples);

    let (signal, blocks_used, discarded, tail_warning, expected_period, inc_source) = match &config.model {
        ModelConfig::ThreeBoson(params) => {
            let input = dynamics
                .coherent
                .ok_or_else(|| CliError::Config("three_boson dynamics needs \"coherent\"".into()))?;
            let s = rabi_signal(&input, params, &times, dynamics.tail_bound)
                .map_err(|e| CliError::Numeric(e.to_string()))?;
            (s.signal, s.blocks_used, s.discarded_probability, s.tail_warning, None, heaviest_block(&input, params)?)
        }
        _ => {
            if dynamics.coherent.is_some() {
                return Err(CliError::Config("\"coherent\" applies to the three_boson model only".into()));
            }
            let rb = resolve_blocks(config)?.remove(0);
            let (signal, energies) = single_block_signal(&rb, dynamics, &times)?;
            let equidistant = matches!(config.model, ModelConfig::Sl2Limit(_));
            let expected = (energies.len() == 2 || (equidistant && energies.len() > 1))
                .then(|| 2.0 * PI / (energies[1] - energies[0]));
            (signal, 1, 0.0, false, expected, Some((rb.id, energies)))
        }
    };

    let (detection, detector_note) = match detect_collapse_revival(&signal, &dynamics.detector) {
        Ok(r) if r.oscillating() => (Some(r), None),
        Ok(_) => (None, Some("no oscillation".to_string())),
        Err(e) => (None, Some(e.to_string())),
    };
    let (incommensurability_block, incommensurability) = match inc_source {
        Some((id, energies)) => match incommensurability_measure(&energies, dynamics.qmax) {
            Ok(r) => (Some(id), Some(r)),
            Err(_) => (None, None),
        },
        None => (None, None),
    };

    let mut csv = format!("# config_sha256={}\n", loaded.digest);
    csv.push_str("t,n3_mean,envelope\n");
    for (i, (t, x)) in signal.times.iter().zip(&signal.values).enumerate() {
        let env = detection.as_ref().and_then(|d| d.envelope.get(i).copied());
        writeln!(csv, "{},{},{}", format_float(*t), format_float(*x), opt_float(env)).expect("writing to a String");
    }
    write_file(out, &config.outputs.signal_csv, &csv)?;

    let report = DynamicsReport {
        config_sha256: loaded.digest.clone(),
        samples: signal.len(),
        blocks_used,
        discarded_probability: discarded,
        tail_warning,
        expected_period,
        carrier_period: detection.as_ref().and_then(|d| d.carrier_period),
        initial_envelope: detection.as_ref().map(|d| d.initial_envelope),
        collapse_time: detection.as_ref().and_then(|d| d.collapse_time),
        revival_times: detection.as_ref().map(|d| d.revival_times.clone()).unwrap_or_default(),
        detector_note,
        incommensurability_block,
        incommensurability,
    };
    write_json(out, &config.outputs.dynamics_json, &report)?;
    if opts.verbose {
        eprintln!(
            "{} samples, {} blocks, collapse {:?}, revivals {:?}",
            report.samples, report.blocks_used, report.collapse_time, report.revival_times
        );
    }
    Ok(DynamicsOutcome {
        signal,
        report,
        detection,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MeanFieldReport {
    pub config_sha256: String,
    pub block_id: String,
    pub steps: usize,
    pub dt: f64,
    pub initial_energy: f64,
    pub energy_drift: f64,
    pub clamped: bool,
}

/// Integrates the mean-field equations on the configured block.
pub fn cmd_meanfield(loaded: &LoadedConfig, out: &Path, opts: RunOptions) -> CliResult<MeanFieldReport> {
    let config = &loaded.config;
    let mf = config
        .meanfield
        .as_ref()
        .ok_or_else(|| CliError::Config("missing \"meanfield\" section".into()))?;
    let blocks = resolve_blocks(config)?;
    if blocks.len() != 1 {
        return Err(CliError::Config(format!("meanfield needs exactly one block, {} selected", blocks.len())));
    }
    let rb = &blocks[0];
    let start = MeanFieldState { p: mf.p0, q: mf.q0 };
    let traj = meanfield_trajectory(&rb.block, &rb.params, start, mf.dt, mf.steps).map_err(|e| match e {
        Error::InvalidInput(msg) => CliError::Config(msg),
        e => numeric(&rb.id, e),
    })?;

    let mut csv = format!("# config_sha256={}\n", loaded.digest);
    csv.push_str("t,p,q,energy\n");
    for ((t, s), e) in traj.times.iter().zip(&traj.states).zip(&traj.energies) {
        writeln!(csv, "{},{},{},{}", format_float(*t), format_float(s.p), format_float(s.q), format_float(*e))
            .expect("writing to a String");
    }
    write_file(out, &config.outputs.meanfield_csv, &csv)?;
    let report = MeanFieldReport {
        config_sha256: loaded.digest.clone(),
        block_id: rb.id.clone(),
        steps: mf.steps,
        dt: mf.dt,
        initial_energy: traj.energies[0],
        energy_drift: traj.energy_drift(),
        clamped: traj.clamped,
    };
    write_json(out, &config.outputs.meanfield_json, &report)?;
    if traj.clamped {
        eprintln!("warning: |p| reached j and was clamped");
    }
    if opts.verbose {
        eprintln!("energy drift {:e}", report.energy_drift);
    }
    Ok(report)
}

/// Outcome of one invariant over all blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    /// Worst residual relative to the check's scale.
    pub worst: f64,
    pub tolerance: f64,
    pub worst_block: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOutcome {
    pub checks: Vec<CheckResult>,
}

impl VerifyOutcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            exit::OK
        } else {
            exit::VERIFY_FAILED
        }
    }

    pub fn table(&self, verbose: bool) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let status = if c.passed { "PASS" } else { "FAIL" };
            if verbose {
                let block = c.worst_block.as_deref().unwrap_or("-");
                writeln!(s, "{:<20} {status}  worst {:.3e} (tol {:.0e}, block {block})", c.name, c.worst, c.tolerance)
            } else {
                writeln!(s, "{:<20} {status}", c.name)
            }
            .expect("writing to a String");
        }
        s
    }
}

struct Tally {
    name: &'static str,
    tolerance: f64,
    worst: f64,
    worst_block: Option<String>,
    failed: bool,
}

impl Tally {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            tolerance,
            worst: 0.0,
            worst_block: None,
            failed: false,
        }
    }

    fn record(&mut self, block: &str, value: f64) {
        if !(value <= self.tolerance) {
            self.failed = true;
        }
        if !(value <= self.worst) {
            self.worst = value;
            self.worst_block = Some(block.to_string());
        }
    }

    fn finish(self) -> CheckResult {
        CheckResult {
            name: self.name,
            passed: !self.failed,
            worst: self.worst,
            tolerance: self.tolerance,
            worst_block: self.worst_block,
        }
    }
}

const VERIFY_EVOLVE_TIME: f64 = 1000.0;
const VERIFY_SL2_MAX_TWO_J: usize = 40;

/// Runs the algebraic, spectral and dynamical invariants on every block.
pub fn cmd_verify(loaded: &LoadedConfig, opts: RunOptions) -> CliResult<VerifyOutcome> {
    let config = &loaded.config;
    let blocks = resolve_blocks(config)?;
    let mut commutator = Tally::new("commutator", 1e-10);
    let mut product = Tally::new("product", 1e-10);
    let mut hp = Tally::new("holstein_primakoff", 1e-10);
    let mut oracle = Tally::new("oracle_equivalence", 1e-8);
    let mut reduction = Tally::new("sl2_reduction", 1e-8);
    let mut unitarity = Tally::new("unitarity", 1e-10);

    for rb in &blocks {
        let nominal = rb.block.psi();
        let scale = rb.block.psi_scale().max(1.0);
        let operators_block = match config.verify.fault {
            Some(f) => {
                if f.root_index >= nominal.degree() {
                    return Err(CliError::Config(format!("fault root_index {} out of range", f.root_index)));
                }
                let faulty = nominal.with_perturbed_root(f.root_index, f.delta);
                build_block(&faulty, rb.block.l0(), rb.block.labels().clone(), rb.block.constant(), rb.block.dim() + 1)
            }
            None => Ok(rb.block.clone()),
        };
        match operators_block {
            Ok(b) => {
                let ops = block_operators(&b, b.psi());
                commutator.record(&rb.id, ops.commutator_residual(nominal) / scale);
                product.record(&rb.id, ops.product_residual(nominal) / scale);
                hp.record(&rb.id, holstein_primakoff(&b, b.psi()).su2_residual());
            }
            Err(_) => {
                commutator.record(&rb.id, f64::INFINITY);
                product.record(&rb.id, f64::INFINITY);
            }
        }

        let tri = build_hamiltonian(&rb.block, &rb.params).map_err(|e| numeric(&rb.id, e))?;
        let spectrum = eigensolve(&tri).map_err(|e| numeric(&rb.id, e))?;
        let roots = spectral_polynomial_roots(&tri);
        let radius = spectrum.energies.iter().map(|e| e.abs()).fold(0.0, f64::max);
        let gap = spectrum.energies.iter().zip(&roots).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        oracle.record(&rb.id, if gap == 0.0 { 0.0 } else { gap / radius });

        let two_j = rb.block.two_j();
        if rb.params.g_mod > 0.0 && two_j <= VERIFY_SL2_MAX_TWO_J {
            let j = rb.block.j();
            let su2 = build_block(&StructureFunction::su2(j), -j, BTreeMap::new(), 0.0, two_j + 2)
                .map_err(|e| numeric(&rb.id, e))?;
            let p = HamiltonianParams { constant: 0.0, ..rb.params };
            let sol = variational_spectrum(&su2, &p).map_err(|e| numeric(&rb.id, e))?;
            let omega = p.rabi_frequency();
            let err = sol
                .energies
                .iter()
                .enumerate()
                .map(|(v, e)| (e - (v as f64 - j) * omega).abs())
                .fold(0.0, f64::max);
            reduction.record(&rb.id, err);
        }

        let d = rb.block.dim();
        let c0: Vec<Complex64> = (0..d).map(|v| Complex64::from_polar(1.0 / (d as f64).sqrt(), 0.37 * v as f64)).collect();
        let e0 = energy_expectation(&tri, &c0);
        let c = BlockEvolution::new(spectrum, &c0).amplitudes(VERIFY_EVOLVE_TIME);
        let drift = (norm(&c) - 1.0).abs().max((energy_expectation(&tri, &c) - e0).abs() / e0.abs().max(1.0));
        unitarity.record(&rb.id, drift);
    }

    let outcome = VerifyOutcome {
        checks: [commutator, product, hp, oracle, reduction, unitarity]
            .into_iter()
            .map(Tally::finish)
            .collect(),
    };
    if opts.verbose {
        eprintln!("verified {} blocks", blocks.len());
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn loaded(text: &str) -> LoadedConfig {
        LoadedConfig::from_bytes(text.as_bytes()).unwrap()
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = LoadedConfig::from_bytes(br#"{"model":{"sl2_limit":{"j":1,"a":0,"g":[1,0]}},"bogus":1}"#).unwrap_err();
        assert_eq!(err.exit_code(), exit::CONFIG);
        let err = LoadedConfig::from_bytes(br#"{"model":{"sl2_limit":{"j":1,"a":0,"g":[1,0],"x":2}}}"#).unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
    }

    #[test]
    fn resolves_each_model() {
        let c = loaded(r#"{"model":{"three_boson":{"omega1":1,"omega2":1,"omega3":2,"g":[1,0]}},"blocks":{"labels":[{"k":0,"sign":"plus","m":2}]}}"#);
        let b = resolve_blocks(&c.config).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].id, "k0m2");
        assert_eq!(b[0].block.dim(), 3);

        let c = loaded(r#"{"model":{"sl2_limit":{"j":1.5,"a":1,"g":[1,0]}}}"#);
        assert_eq!(resolve_blocks(&c.config).unwrap()[0].block.dim(), 4);

        let c = loaded(r#"{"model":{"sl2_limit":{"j":0.3,"a":1,"g":[1,0]}}}"#);
        assert!(matches!(resolve_blocks(&c.config), Err(CliError::Config(_))));

        let c = loaded(r#"{"model":{"custom_psi":{"leading_coeff":-1,"roots":[0,-3],"l0":0,"a":0,"g":[1,0]}}}"#);
        let err = resolve_blocks(&c.config).unwrap_err();
        assert!(err.to_string().contains("non-unitary block"));
    }

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, 1e-12, -2.5e300, 6f64.sqrt(), 0.0] {
            assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(format_float(1e-12), "1e-12");
    }

    #[test]
    fn default_verify_passes() {
        let outcome = cmd_verify(&LoadedConfig::default_verify(), RunOptions::default()).unwrap();
        assert!(outcome.passed(), "{}", outcome.table(true));
    }

    #[test]
    fn injected_fault_fails_commutator() {
        let c = loaded(
            r#"{"model":{"three_boson":{"omega1":1,"omega2":1,"omega3":2,"g":[1,0]}},"blocks":{"labels":[{"k":0,"sign":"plus","m":4}]},"verify":{"fault":{"root_index":1,"delta":0.001}}}"#,
        );
        let outcome = cmd_verify(&c, RunOptions::default()).unwrap();
        assert_eq!(outcome.exit_code(), exit::VERIFY_FAILED);
        let comm = outcome.checks.iter().find(|c| c.name == "commutator").unwrap();
        assert!(!comm.passed);
        assert!(outcome.table(false).contains("commutator           FAIL"));
        assert!(outcome.table(true).contains("worst"));
    }
}
