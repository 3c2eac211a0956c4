//! Command-line front end: CUP-set data generation, estimation-protocol
//! simulation, bound verification and depolarizing-model fitting.

pub mod output;

use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;

use anyhow::{bail, Context};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use cupset_core::channel::{marginal_channels, QuantumChannel};
use cupset_core::cupset::{
    self, boundary_cnot_ab, boundary_cnotba_cnotab, boundary_swap_alpha, classical_cupset,
    cup_from_unitary, fit_depolarizing, generate_cupset, CupSample, Family, Variant,
};
use cupset_core::families;
use cupset_core::operator::{cnot_ab, swap_gate, DenseOperator, SeededRng};
use cupset_core::sim::{
    channel_dilation_circuit, estimate_cup_direct_choi, estimate_cup_direct_complementarity,
    run_efficient_urb, run_interleaved_urb, NoiseModel, UrbOptions, UrbTarget,
};
use cupset_core::unitarity::spectral_lower_bound;
use output::{CupsetRecord, FitRecord, ProtocolRecord, SurfaceRow};

/// Output serialization format.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Set variant selector, including the exact classical sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum VariantArg {
    Isometric,
    Reversible,
    Full,
    ClassicalIsometric,
    ClassicalReversible,
    ClassicalFull,
}

impl VariantArg {
    fn is_classical(self) -> bool {
        matches!(
            self,
            VariantArg::ClassicalIsometric
                | VariantArg::ClassicalReversible
                | VariantArg::ClassicalFull
        )
    }

    fn core_variant(self) -> Variant {
        match self {
            VariantArg::Isometric | VariantArg::ClassicalIsometric => Variant::Isometric,
            VariantArg::Reversible | VariantArg::ClassicalReversible => Variant::Reversible,
            VariantArg::Full | VariantArg::ClassicalFull => Variant::Full,
        }
    }
}

/// Estimation pipeline for the `protocol` command.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Pipeline {
    SwapComplementarity,
    SwapChoi,
    Irb,
    IrbEfficient,
    Spectral,
}

impl std::fmt::Display for Pipeline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Pipeline::SwapComplementarity => "swap-complementarity",
            Pipeline::SwapChoi => "swap-choi",
            Pipeline::Irb => "irb",
            Pipeline::IrbEfficient => "irb-efficient",
            Pipeline::Spectral => "spectral",
        };
        write!(f, "{s}")
    }
}

/// Which command a config drives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Cupset,
    Protocol,
    Fit,
}

/// Complete, serializable description of one run; identical configs produce
/// byte-identical outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub variant: VariantArg,
    pub family: String,
    pub pipeline: Option<Pipeline>,
    pub points: usize,
    pub dims: (usize, usize, usize),
    pub noise: NoiseModel,
    pub lengths: Vec<usize>,
    pub sequences: usize,
    pub repetitions: usize,
    pub settings: usize,
    pub out: String,
    pub format: OutputFormat,
    /// Inputs for `fit`: noisy CSV then ideal CSV.
    pub fit_inputs: Option<(String, String)>,
}

impl RunConfig {
    pub fn master_seed(&self) -> u64 {
        self.noise.seed
    }
}

/// Cap the rayon pool from `CUPSET_THREADS` (first call wins).
pub fn init_thread_pool() {
    static INIT: OnceLock<()> = OnceLock::new();
    INIT.get_or_init(|| {
        if let Ok(v) = std::env::var("CUPSET_THREADS") {
            if let Ok(n) = v.parse::<usize>() {
                if n >= 1 {
                    let _ = rayon::ThreadPoolBuilder::new()
                        .num_threads(n)
                        .build_global();
                }
            }
        }
    });
}

fn write_output<F>(out: &str, write: F) -> anyhow::Result<()>
where
    F: FnOnce(&mut dyn Write) -> anyhow::Result<()>,
{
    if out == "-" {
        let stdout = std::io::stdout();
        let mut lock = stdout.lock();
        write(&mut lock)
    } else {
        let mut file = fs::File::create(out).with_context(|| format!("creating {out}"))?;
        write(&mut file)
    }
}

/// Band bounds used for the `in_band` column, depending on what class the
/// sample came from. Classical samples are unconstrained.
fn band_for(sample: &CupSample, classical: bool) -> (f64, f64) {
    if classical {
        return (0.0, 2.0);
    }
    match sample.variant {
        Variant::Isometric => cupset::band_bounds(sample.dims),
        Variant::Reversible => {
            if sample.dims == (2, 2, 2) {
                (1.0 / 3.0, 1.0)
            } else {
                (0.0, 1.0)
            }
        }
        Variant::Full => (0.0, 1.0),
    }
}

fn sample_to_record(sample: &CupSample, classical: bool) -> CupsetRecord {
    let (lower, upper) = band_for(sample, classical);
    let s = sample.u + sample.ubar;
    CupsetRecord {
        family: sample.family.to_string(),
        variant: sample.variant.to_string(),
        p0: sample.params.first().copied(),
        p1: sample.params.get(1).copied(),
        p2: sample.params.get(2).copied(),
        u: sample.u,
        ubar: sample.ubar,
        band_lower: lower,
        band_upper: upper,
        in_band: s >= lower - 1e-9 && s <= upper + 1e-9,
    }
}

/// Generate CUP-set rows; exit code 2 flags a band violation.
pub fn cmd_cupset(config: &RunConfig) -> anyhow::Result<(i32, Vec<CupsetRecord>)> {
    let classical = config.variant.is_classical();
    let samples = if classical {
        classical_cupset(config.variant.core_variant(), config.points)
    } else {
        let family = Family::from_str(&config.family)?;
        let mut rng = SeededRng::new(config.master_seed());
        generate_cupset(
            config.variant.core_variant(),
            family,
            config.points,
            config.dims,
            &mut rng,
        )?
    };
    let rows: Vec<CupsetRecord> = samples
        .iter()
        .map(|s| sample_to_record(s, classical))
        .collect();
    let code = if rows.iter().any(|r| !r.in_band) {
        2
    } else {
        0
    };
    write_output(&config.out, |w| {
        output::write_cupset(w, config.format, &rows)
    })?;
    Ok((code, rows))
}

/// The three extremal global unitaries and their exact CUP points; six
/// decay experiments cover them.
fn extremal_points() -> Vec<(f64, DenseOperator, (f64, f64))> {
    vec![
        (0.0, DenseOperator::identity(4), (1.0, 0.0)),
        (1.0, swap_gate(), (0.0, 1.0)),
        (2.0, cnot_ab(), (1.0 / 3.0, 1.0 / 3.0)),
    ]
}

struct ProtocolPoint {
    alpha: f64,
    unitary: DenseOperator,
    ideal: (f64, f64),
}

fn protocol_grid(config: &RunConfig) -> anyhow::Result<Vec<ProtocolPoint>> {
    if config.family == "extremal" {
        return Ok(extremal_points()
            .into_iter()
            .map(|(alpha, unitary, ideal)| ProtocolPoint {
                alpha,
                unitary,
                ideal,
            })
            .collect());
    }
    let family = Family::from_str(&config.family)?;
    let n = config.points.max(2);
    let reversible = config.variant == VariantArg::Reversible;
    let ancilla = if reversible {
        DenseOperator::maximally_mixed(2)
    } else {
        DenseOperator::basis_projector(0, 2)
    };
    (0..n)
        .map(|i| {
            let alpha = i as f64 / (n - 1) as f64;
            let unitary = match family {
                Family::SwapAlpha => families::family_swap_alpha(alpha)?,
                Family::CnotAlpha => families::family_cnot_ab_alpha(alpha)?,
                Family::CnotBaCnotAb => families::family_cnotba_cnotab(alpha)?,
                Family::CnotAlphaRev => families::family_cnotab_alpha_cnotba_cnotab(alpha)?,
                other => {
                    return Err(cupset_core::Error::InvalidArgument(format!(
                        "family {other} is not a protocol boundary family"
                    )))
                }
            };
            let ideal = if reversible {
                let s = cup_from_unitary(
                    &unitary,
                    2,
                    2,
                    &ancilla,
                    Variant::Reversible,
                    family,
                    vec![alpha],
                )?;
                (s.u, s.ubar)
            } else {
                let s = match family {
                    Family::SwapAlpha => boundary_swap_alpha(alpha),
                    Family::CnotAlpha => boundary_cnot_ab(alpha),
                    Family::CnotBaCnotAb => boundary_cnotba_cnotab(alpha),
                    _ => cup_from_unitary(
                        &unitary,
                        2,
                        2,
                        &ancilla,
                        Variant::Isometric,
                        family,
                        vec![alpha],
                    )?,
                };
                (s.u, s.ubar)
            };
            Ok(ProtocolPoint {
                alpha,
                unitary,
                ideal,
            })
        })
        .collect::<cupset_core::Result<Vec<_>>>()
        .map_err(Into::into)
}

fn run_pipeline_point(
    config: &RunConfig,
    pipeline: Pipeline,
    point: &ProtocolPoint,
    point_noise: NoiseModel,
) -> Result<(f64, f64, f64, f64), String> {
    let reversible = config.variant == VariantArg::Reversible;
    let ancilla = if reversible {
        DenseOperator::maximally_mixed(2)
    } else {
        DenseOperator::basis_projector(0, 2)
    };
    match pipeline {
        Pipeline::SwapComplementarity => {
            if reversible {
                return Err(
                    "swap-complementarity assumes complementary marginals; use swap-choi for \
                     the reversible variant"
                        .to_string(),
                );
            }
            estimate_cup_direct_complementarity(&point.unitary, &point_noise)
                .map(|e| (e.sample.u, e.sample.ubar, e.u_stderr, e.ubar_stderr))
                .map_err(|e| e.to_string())
        }
        Pipeline::SwapChoi => estimate_cup_direct_choi(&point.unitary, &ancilla, &point_noise)
            .map(|e| (e.sample.u, e.sample.ubar, e.u_stderr, e.ubar_stderr))
            .map_err(|e| e.to_string()),
        Pipeline::Irb => {
            if reversible {
                return Err(
                    "interleaved RB resets the ancilla to |0>, so only the isometric \
                            variant is supported"
                        .to_string(),
                );
            }
            let opts = UrbOptions {
                repetitions: config.repetitions,
                ..UrbOptions::default()
            };
            let fit_e = run_interleaved_urb(
                &point.unitary,
                UrbTarget::E,
                &config.lengths,
                config.sequences,
                &point_noise,
                opts,
            )
            .map_err(|e| e.to_string())?;
            let fit_b = run_interleaved_urb(
                &point.unitary,
                UrbTarget::Ebar,
                &config.lengths,
                config.sequences,
                &point_noise.clone().with_seed(point_noise.seed ^ 0x5bd1),
                opts,
            )
            .map_err(|e| e.to_string())?;
            Ok((fit_e.s, fit_b.s, fit_e.s_stderr, fit_b.s_stderr))
        }
        Pipeline::IrbEfficient => {
            if reversible {
                return Err(
                    "efficient interleaved RB resets the ancilla to |0>, so only the \
                            isometric variant is supported"
                        .to_string(),
                );
            }
            let circ_e = channel_dilation_circuit(&point.unitary, UrbTarget::E)
                .map_err(|e| e.to_string())?;
            let circ_b = channel_dilation_circuit(&point.unitary, UrbTarget::Ebar)
                .map_err(|e| e.to_string())?;
            let reps = config.repetitions.max(1);
            let fit_e = run_efficient_urb(
                &circ_e,
                &config.lengths,
                config.sequences * reps,
                &point_noise,
            )
            .map_err(|e| e.to_string())?;
            let fit_b = run_efficient_urb(
                &circ_b,
                &config.lengths,
                config.sequences * reps,
                &point_noise.clone().with_seed(point_noise.seed ^ 0x5bd1),
            )
            .map_err(|e| e.to_string())?;
            Ok((fit_e.s, fit_b.s, fit_e.s_stderr, fit_b.s_stderr))
        }
        Pipeline::Spectral => {
            let (e, ebar) =
                marginal_channels(&point.unitary, 2, 2, &ancilla).map_err(|e| e.to_string())?;
            // Gate noise enters as a depolarizing composition on each
            // marginal, matching the noise key used for channel insertions.
            let p = point_noise.depolarizing_for("unitary");
            let compose_noise = |ch: QuantumChannel| -> Result<QuantumChannel, String> {
                if p > 0.0 {
                    QuantumChannel::depolarizing_mix(2, p)
                        .and_then(|d| d.compose(&ch))
                        .map_err(|e| e.to_string())
                } else {
                    Ok(ch)
                }
            };
            let e = compose_noise(e)?;
            let ebar = compose_noise(ebar)?;
            let mut rng_e = SeededRng::new(point_noise.seed).fork(1);
            let mut rng_b = SeededRng::new(point_noise.seed).fork(2);
            let u =
                spectral_lower_bound(&e, config.settings, &mut rng_e).map_err(|e| e.to_string())?;
            let ubar = spectral_lower_bound(&ebar, config.settings, &mut rng_b)
                .map_err(|e| e.to_string())?;
            Ok((u, ubar, 0.0, 0.0))
        }
    }
}

/// Run an estimation pipeline over a boundary-family grid; per-row failures
/// are reported in the status column, and the exit code is 1 only when all
/// rows fail.
pub fn cmd_protocol(config: &RunConfig) -> anyhow::Result<(i32, Vec<ProtocolRecord>)> {
    let pipeline = config
        .pipeline
        .ok_or_else(|| anyhow::anyhow!("protocol command needs --pipeline"))?;
    let grid = protocol_grid(config)?;
    let base = SeededRng::new(config.master_seed());
    let rows: Vec<ProtocolRecord> = grid
        .par_iter()
        .enumerate()
        .map(|(idx, point)| {
            let point_noise = config.noise.clone().with_seed(base.fork(idx as u64).seed());
            let (u_est, ubar_est, u_se, ubar_se, status) =
                match run_pipeline_point(config, pipeline, point, point_noise) {
                    Ok((u, ubar, se_u, se_b)) => (
                        Some(u),
                        Some(ubar),
                        Some(se_u),
                        Some(se_b),
                        "ok".to_string(),
                    ),
                    Err(msg) => (None, None, None, None, format!("error: {msg}")),
                };
            ProtocolRecord {
                family: config.family.clone(),
                pipeline: pipeline.to_string(),
                variant: config.variant.core_variant().to_string(),
                alpha: point.alpha,
                u_est,
                ubar_est,
                u_stderr: u_se,
                ubar_stderr: ubar_se,
                u_ideal: point.ideal.0,
                ubar_ideal: point.ideal.1,
                status,
            }
        })
        .collect();
    let all_failed = rows.iter().all(|r| r.status != "ok");
    let code = if all_failed && !rows.is_empty() { 1 } else { 0 };
    write_output(&config.out, |w| {
        output::write_protocol(w, config.format, &rows)
    })?;
    Ok((code, rows))
}

/// Fit the depolarizing deformation mapping an ideal surface file onto a
/// noisy one, per (family, variant) surface.
pub fn cmd_fit(config: &RunConfig) -> anyhow::Result<(i32, Vec<FitRecord>)> {
    let (noisy_path, ideal_path) = config
        .fit_inputs
        .as_ref()
        .ok_or_else(|| anyhow::anyhow!("fit command needs noisy and ideal CSV paths"))?;
    let noisy = output::read_surface_csv(Path::new(noisy_path))?;
    let ideal = output::read_surface_csv(Path::new(ideal_path))?;
    if noisy.len() != ideal.len() {
        bail!(
            "misaligned inputs: {} noisy rows vs {} ideal rows",
            noisy.len(),
            ideal.len()
        );
    }
    for (n, i) in noisy.iter().zip(&ideal) {
        if n.family != i.family || n.key != i.key {
            bail!(
                "misaligned rows: ({}, {}) vs ({}, {})",
                n.family,
                n.key,
                i.family,
                i.key
            );
        }
    }
    // Group rows per (family, variant) surface, preserving order.
    let mut surfaces: Vec<(String, String, Vec<usize>)> = Vec::new();
    for (idx, row) in noisy.iter().enumerate() {
        match surfaces
            .iter_mut()
            .find(|(f, v, _)| f == &row.family && v == &row.variant)
        {
            Some((_, _, rows)) => rows.push(idx),
            None => surfaces.push((row.family.clone(), row.variant.clone(), vec![idx])),
        }
    }
    let to_sample = |r: &SurfaceRow| CupSample {
        u: r.u,
        ubar: r.ubar,
        variant: Variant::Full,
        family: Family::Custom,
        params: vec![],
        dims: (2, 2, 2),
    };
    let mut records = Vec::new();
    for (family, variant, idxs) in surfaces {
        let noisy_samples: Vec<CupSample> = idxs.iter().map(|&i| to_sample(&noisy[i])).collect();
        let ideal_samples: Vec<CupSample> = idxs.iter().map(|&i| to_sample(&ideal[i])).collect();
        let fit = fit_depolarizing(&noisy_samples, &ideal_samples)?;
        println!(
            "surface {family}/{variant}: p_A = {:.6}, p_B = {:.6}, residual = {:.3e}",
            fit.p_a, fit.p_b, fit.residual
        );
        records.push(FitRecord {
            family,
            variant,
            points: idxs.len(),
            p_a: fit.p_a,
            p_b: fit.p_b,
            residual: fit.residual,
        });
    }
    write_output(&config.out, |w| {
        output::write_fit(w, config.format, &records)
    })?;
    Ok((0, records))
}

/// Dispatch a config to its command.
pub fn run(config: &RunConfig) -> anyhow::Result<i32> {
    init_thread_pool();
    config.noise.validate().map_err(|e| anyhow::anyhow!(e))?;
    let code = match config.command {
        CommandKind::Cupset => cmd_cupset(config)?.0,
        CommandKind::Protocol => cmd_protocol(config)?.0,
        CommandKind::Fit => cmd_fit(config)?.0,
    };
    Ok(code)
}

/// Parse "a..b" (inclusive) or a comma-separated list of lengths.
pub fn parse_lengths(spec: &str) -> anyhow::Result<Vec<usize>> {
    if let Some((a, b)) = spec.split_once("..") {
        let a: usize = a.trim().parse()?;
        let b: usize = b.trim().parse()?;
        if b < a {
            bail!("empty length range {spec}");
        }
        Ok((a..=b).collect())
    } else {
        spec.split(',')
            .map(|s| s.trim().parse::<usize>().map_err(Into::into))
            .collect()
    }
}

/// Parse "dx,da,db" dimensions.
pub fn parse_dims(spec: &str) -> anyhow::Result<(usize, usize, usize)> {
    let parts: Vec<usize> = spec
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<Result<_, _>>()?;
    if parts.len() != 3 {
        bail!("dims must be three comma-separated integers");
    }
    Ok((parts[0], parts[1], parts[2]))
}

/// Load a noise model from inline JSON or a file path; explicit shot/seed
/// flags override the loaded values.
pub fn load_noise(
    spec: Option<&str>,
    shots: Option<usize>,
    seed: Option<u64>,
) -> anyhow::Result<NoiseModel> {
    let mut noise = match spec {
        Some(s) if s.trim_start().starts_with('{') => {
            NoiseModel::from_json(s).map_err(|e| anyhow::anyhow!(e))?
        }
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
            NoiseModel::from_json(&text).map_err(|e| anyhow::anyhow!(e))?
        }
        None => NoiseModel::noiseless(200, 7),
    };
    if let Some(shots) = shots {
        noise.shots = shots;
    }
    if let Some(seed) = seed {
        noise.seed = seed;
    }
    noise.validate().map_err(|e| anyhow::anyhow!(e))?;
    Ok(noise)
}
