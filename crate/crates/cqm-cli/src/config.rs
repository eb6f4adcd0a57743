//! Experiment config files: a flat `key = value` format with `#` comments
//! and dotted section keys (`drive.rise_time = 10.0`), which is a plain TOML
//! subset, so parsing is delegated to the TOML parser with unknown keys
//! rejected.
//!
//! `cycles` is the one required key; everything else falls back to the
//! reference-device defaults. Generator delays are special: when both
//! `drive.gd1_delay` and `drive.gd2_delay` are absent they are synthesized
//! from `cycles`, when both are present they are taken verbatim, and setting
//! only one is an error.
//!
//! Run sidecars re-use this format and add bookkeeping keys (`digest`,
//! `tool_version`, `calibration_note`, `fit.*`, `sweep.*`), which the parser
//! accepts so a sidecar can be fed back as `--config`; a present `digest` is
//! re-verified against the resolved config.

use serde::{Deserialize, Deserializer};
use sha2::{Digest, Sha256};

use cqm::control::{schedule_for_cycles, DriveConfig};
use cqm::device::CycleModel;
use cqm::monte_carlo::ExperimentConfig;

use crate::CliError;

/// Seeds are full 64-bit values but TOML integers are signed; accept either
/// a non-negative integer or a decimal string.
fn de_seed<'de, D: Deserializer<'de>>(de: D) -> Result<Option<u64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum IntOrString {
        Int(i64),
        Text(String),
    }
    match Option::<IntOrString>::deserialize(de)? {
        None => Ok(None),
        Some(IntOrString::Int(v)) => u64::try_from(v).map(Some).map_err(|_| {
            serde::de::Error::custom(format!("seed must be non-negative, got {v}"))
        }),
        Some(IntOrString::Text(s)) => s.parse::<u64>().map(Some).map_err(|_| {
            serde::de::Error::custom(format!("seed string must be a decimal u64, got {s:?}"))
        }),
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCycleModel {
    loss_per_cycle: Option<f64>,
    storage_phase: Option<f64>,
    visibility: Option<f64>,
    pbs_extinction: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDrive {
    gd1_delay: Option<f64>,
    gd2_delay: Option<f64>,
    pulse_width: Option<f64>,
    rise_time: Option<f64>,
    fall_time: Option<f64>,
    round_trip: Option<f64>,
}

/// A parsed config file, before defaults and schedule synthesis.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pair_rate: Option<f64>,
    duration: Option<f64>,
    input_theta: Option<f64>,
    cycles: Option<u32>,
    fiber_delay: Option<f64>,
    detector_efficiency_trigger: Option<f64>,
    detector_efficiency_qubit: Option<f64>,
    dark_rate: Option<f64>,
    bin_width: Option<f64>,
    timing_jitter_sigma: Option<f64>,
    analyzer_theta: Option<f64>,
    #[serde(default, deserialize_with = "de_seed")]
    seed: Option<u64>,
    #[serde(default)]
    cycle_model: RawCycleModel,
    #[serde(default)]
    drive: RawDrive,

    // Sidecar bookkeeping, accepted so sidecars round-trip as configs.
    digest: Option<String>,
    #[allow(dead_code)]
    tool_version: Option<String>,
    #[allow(dead_code)]
    calibration_note: Option<String>,
    #[allow(dead_code)]
    fit: Option<toml::Value>,
    #[allow(dead_code)]
    sweep: Option<toml::Value>,
}

impl RawConfig {
    pub fn digest_claim(&self) -> Option<&str> {
        self.digest.as_deref()
    }
}

/// Parses the config text, rejecting unknown keys with the parser's
/// line/column diagnostics.
pub fn parse_config(text: &str) -> Result<RawConfig, CliError> {
    toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
}

/// A fully resolved run description.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub experiment: ExperimentConfig,
    /// True when the generator delays were synthesized from `cycles` rather
    /// than taken from the file.
    pub synthesized_delays: bool,
}

/// Applies defaults, synthesizes the drive schedule if needed, range-checks
/// everything, verifies a claimed digest, and finally applies the seed
/// override (the digest describes the file's own contents, so an override
/// does not participate in verification).
pub fn resolve(raw: &RawConfig, seed_override: Option<u64>) -> Result<ResolvedConfig, CliError> {
    let defaults = ExperimentConfig::default();
    let cycles = raw.cycles.ok_or_else(|| {
        CliError::Config("missing required field `cycles`".into())
    })?;

    let model_defaults = CycleModel::default();
    let cycle_model = CycleModel {
        loss_per_cycle: raw
            .cycle_model
            .loss_per_cycle
            .unwrap_or(model_defaults.loss_per_cycle),
        storage_phase: raw
            .cycle_model
            .storage_phase
            .unwrap_or(model_defaults.storage_phase),
        visibility: raw.cycle_model.visibility.unwrap_or(model_defaults.visibility),
        pbs_extinction: raw
            .cycle_model
            .pbs_extinction
            .unwrap_or(model_defaults.pbs_extinction),
    };

    let drive_defaults = DriveConfig::default();
    let template = DriveConfig {
        gd1_delay: 0.0,
        gd2_delay: 0.0,
        pulse_width: raw.drive.pulse_width.unwrap_or(drive_defaults.pulse_width),
        rise_time: raw.drive.rise_time.unwrap_or(drive_defaults.rise_time),
        fall_time: raw.drive.fall_time.unwrap_or(drive_defaults.fall_time),
        round_trip: raw.drive.round_trip.unwrap_or(drive_defaults.round_trip),
    };
    let (drive, synthesized_delays) = match (raw.drive.gd1_delay, raw.drive.gd2_delay) {
        (None, None) => (
            schedule_for_cycles(cycles, template.round_trip, &template)?,
            true,
        ),
        (Some(gd1), Some(gd2)) => (
            DriveConfig {
                gd1_delay: gd1,
                gd2_delay: gd2,
                ..template
            },
            false,
        ),
        _ => {
            return Err(CliError::Config(
                "drive.gd1_delay and drive.gd2_delay must be set together \
                 (omit both to synthesize the schedule from `cycles`)"
                    .into(),
            ))
        }
    };

    let mut experiment = ExperimentConfig {
        pair_rate: raw.pair_rate.unwrap_or(defaults.pair_rate),
        duration: raw.duration.unwrap_or(defaults.duration),
        input_theta: raw.input_theta.unwrap_or(defaults.input_theta),
        cycles,
        cycle_model,
        drive,
        fiber_delay: raw.fiber_delay.unwrap_or(defaults.fiber_delay),
        detector_efficiency_trigger: raw
            .detector_efficiency_trigger
            .unwrap_or(defaults.detector_efficiency_trigger),
        detector_efficiency_qubit: raw
            .detector_efficiency_qubit
            .unwrap_or(defaults.detector_efficiency_qubit),
        dark_rate: raw.dark_rate.unwrap_or(defaults.dark_rate),
        bin_width: raw.bin_width.unwrap_or(defaults.bin_width),
        timing_jitter_sigma: raw
            .timing_jitter_sigma
            .unwrap_or(defaults.timing_jitter_sigma),
        analyzer_theta: raw.analyzer_theta,
        seed: raw.seed.unwrap_or(defaults.seed),
    };
    experiment.validate()?;
    cqm::control::build_waveform(&experiment.drive)?;

    if let Some(claim) = raw.digest_claim() {
        let actual = config_digest(&experiment);
        if claim != actual {
            return Err(CliError::Config(format!(
                "config digest mismatch: file claims {claim}, resolved config \
                 digests to {actual}"
            )));
        }
    }

    if let Some(seed) = seed_override {
        experiment.seed = seed;
    }
    Ok(ResolvedConfig {
        experiment,
        synthesized_delays,
    })
}

/// Formats a float so TOML reads it back as a float (Rust's shortest
/// round-trip representation, with a forced decimal point).
fn toml_float(v: f64) -> String {
    let s = format!("{v}");
    if s.contains('.') || s.contains('e') || s.contains("inf") || s.contains("NaN") {
        s
    } else {
        format!("{s}.0")
    }
}

fn toml_seed(seed: u64) -> String {
    if seed <= i64::MAX as u64 {
        format!("{seed}")
    } else {
        format!("\"{seed}\"")
    }
}

/// Canonical text of a resolved config: every key explicit, keys sorted,
/// values in round-trip float form. Two configs are operationally identical
/// exactly when their canonical texts match, regardless of key order or
/// omitted defaults in the source file.
pub fn canonical_text(cfg: &ExperimentConfig) -> String {
    let mut out = String::new();
    if let Some(theta) = cfg.analyzer_theta {
        out.push_str(&format!("analyzer_theta = {}\n", toml_float(theta)));
    }
    out.push_str(&format!("bin_width = {}\n", toml_float(cfg.bin_width)));
    out.push_str(&format!(
        "cycle_model.loss_per_cycle = {}\n",
        toml_float(cfg.cycle_model.loss_per_cycle)
    ));
    out.push_str(&format!(
        "cycle_model.pbs_extinction = {}\n",
        toml_float(cfg.cycle_model.pbs_extinction)
    ));
    out.push_str(&format!(
        "cycle_model.storage_phase = {}\n",
        toml_float(cfg.cycle_model.storage_phase)
    ));
    out.push_str(&format!(
        "cycle_model.visibility = {}\n",
        toml_float(cfg.cycle_model.visibility)
    ));
    out.push_str(&format!("cycles = {}\n", cfg.cycles));
    out.push_str(&format!("dark_rate = {}\n", toml_float(cfg.dark_rate)));
    out.push_str(&format!(
        "detector_efficiency_qubit = {}\n",
        toml_float(cfg.detector_efficiency_qubit)
    ));
    out.push_str(&format!(
        "detector_efficiency_trigger = {}\n",
        toml_float(cfg.detector_efficiency_trigger)
    ));
    out.push_str(&format!(
        "drive.fall_time = {}\n",
        toml_float(cfg.drive.fall_time)
    ));
    out.push_str(&format!(
        "drive.gd1_delay = {}\n",
        toml_float(cfg.drive.gd1_delay)
    ));
    out.push_str(&format!(
        "drive.gd2_delay = {}\n",
        toml_float(cfg.drive.gd2_delay)
    ));
    out.push_str(&format!(
        "drive.pulse_width = {}\n",
        toml_float(cfg.drive.pulse_width)
    ));
    out.push_str(&format!(
        "drive.rise_time = {}\n",
        toml_float(cfg.drive.rise_time)
    ));
    out.push_str(&format!(
        "drive.round_trip = {}\n",
        toml_float(cfg.drive.round_trip)
    ));
    out.push_str(&format!("duration = {}\n", toml_float(cfg.duration)));
    out.push_str(&format!("fiber_delay = {}\n", toml_float(cfg.fiber_delay)));
    out.push_str(&format!("input_theta = {}\n", toml_float(cfg.input_theta)));
    out.push_str(&format!("pair_rate = {}\n", toml_float(cfg.pair_rate)));
    out.push_str(&format!("seed = {}\n", toml_seed(cfg.seed)));
    out.push_str(&format!(
        "timing_jitter_sigma = {}\n",
        toml_float(cfg.timing_jitter_sigma)
    ));
    out
}

/// SHA-256 hex digest of the canonical text. Stable across key reordering
/// and omitted defaults in the source file.
pub fn config_digest(cfg: &ExperimentConfig) -> String {
    let mut hasher = Sha256::new();
    hasher.update(canonical_text(cfg).as_bytes());
    let bytes = hasher.finalize();
    let mut hex = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        hex.push_str(&format!("{b:02x}"));
    }
    hex
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "cycles = 3\n";

    #[test]
    fn minimal_config_resolves_with_synthesized_schedule() {
        let raw = parse_config(MINIMAL).unwrap();
        let resolved = resolve(&raw, None).unwrap();
        assert!(resolved.synthesized_delays);
        assert_eq!(resolved.experiment.cycles, 3);
        assert_eq!(resolved.experiment.cycle_model.loss_per_cycle, 0.19);
        // Synthesized five-traversal window: rise centered before traversal 1.
        assert!((resolved.experiment.drive.gd1_delay - 1.65).abs() < 1e-12);
    }

    #[test]
    fn comments_and_dotted_keys_parse() {
        let text = "\
# reference run
cycles = 2
duration = 120.0           # seconds
drive.rise_time = 8.0
cycle_model.visibility = 0.95
";
        let raw = parse_config(text).unwrap();
        let resolved = resolve(&raw, None).unwrap();
        assert_eq!(resolved.experiment.duration, 120.0);
        assert_eq!(resolved.experiment.drive.rise_time, 8.0);
        assert_eq!(resolved.experiment.cycle_model.visibility, 0.95);
    }

    #[test]
    fn missing_cycles_is_named() {
        let raw = parse_config("duration = 10.0\n").unwrap();
        let err = resolve(&raw, None).unwrap_err();
        assert!(err.to_string().contains("cycles"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = parse_config("cycles = 1\ncyles_typo = 2\n").unwrap_err();
        assert!(err.to_string().contains("cyles_typo"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn lone_generator_delay_is_rejected() {
        let raw = parse_config("cycles = 2\ndrive.gd1_delay = 1.65\n").unwrap();
        let err = resolve(&raw, None).unwrap_err();
        assert!(err.to_string().contains("gd2_delay"), "{err}");
    }

    #[test]
    fn explicit_delays_are_taken_verbatim() {
        let text = "cycles = 2\ndrive.gd1_delay = 1.65\ndrive.gd2_delay = -85.05\n";
        let resolved = resolve(&parse_config(text).unwrap(), None).unwrap();
        assert!(!resolved.synthesized_delays);
        assert_eq!(resolved.experiment.drive.gd2_delay, -85.05);
    }

    #[test]
    fn out_of_range_fields_fail_resolution() {
        let raw = parse_config("cycles = 1\ndetector_efficiency_qubit = 1.2\n").unwrap();
        let err = resolve(&raw, None).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("detector_efficiency_qubit"), "{err}");
    }

    #[test]
    fn infeasible_synthesis_is_a_schedule_error() {
        let raw = parse_config("cycles = 3\ndrive.round_trip = 8.0\n").unwrap();
        let err = resolve(&raw, None).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("rise"), "{err}");
    }

    #[test]
    fn seed_override_applies_after_digest_check() {
        let raw = parse_config(MINIMAL).unwrap();
        let resolved = resolve(&raw, None).unwrap();
        let digest = config_digest(&resolved.experiment);

        // A sidecar-style file carrying its own digest still resolves when
        // the seed is overridden, and the override lands in the result.
        let sidecar = format!(
            "{}digest = \"{digest}\"\n",
            canonical_text(&resolved.experiment)
        );
        let re_raw = parse_config(&sidecar).unwrap();
        let re_resolved = resolve(&re_raw, Some(999)).unwrap();
        assert_eq!(re_resolved.experiment.seed, 999);

        // Tampering with a run-relevant value breaks the digest.
        let tampered = sidecar.replace("cycles = 3", "cycles = 4");
        let err = resolve(&parse_config(&tampered).unwrap(), None).unwrap_err();
        assert!(err.to_string().contains("digest mismatch"), "{err}");
    }

    #[test]
    fn canonical_text_round_trips_exactly() {
        let text = "cycles = 5\nseed = 12345\ninput_theta = 30.0\nduration = 600.0\n";
        let resolved = resolve(&parse_config(text).unwrap(), None).unwrap();
        let canonical = canonical_text(&resolved.experiment);
        let re_resolved = resolve(&parse_config(&canonical).unwrap(), None).unwrap();
        assert_eq!(resolved.experiment, re_resolved.experiment);
        assert_eq!(canonical, canonical_text(&re_resolved.experiment));
        assert_eq!(
            config_digest(&resolved.experiment),
            config_digest(&re_resolved.experiment)
        );
    }

    #[test]
    fn digest_ignores_key_order_and_spelled_out_defaults() {
        let a = resolve(&parse_config("cycles = 2\nduration = 600.0\n").unwrap(), None).unwrap();
        let b = resolve(
            &parse_config("duration = 600.0\npair_rate = 2000.0\ncycles = 2\n").unwrap(),
            None,
        )
        .unwrap();
        assert_eq!(config_digest(&a.experiment), config_digest(&b.experiment));
    }

    #[test]
    fn huge_seeds_survive_the_canonical_round_trip() {
        let raw = parse_config("cycles = 1\nseed = \"18446744073709551615\"\n").unwrap();
        let resolved = resolve(&raw, None).unwrap();
        assert_eq!(resolved.experiment.seed, u64::MAX);
        let canonical = canonical_text(&resolved.experiment);
        let re = resolve(&parse_config(&canonical).unwrap(), None).unwrap();
        assert_eq!(re.experiment.seed, u64::MAX);
    }

    #[test]
    fn analyzer_theta_is_optional_and_canonicalized_when_set() {
        let resolved =
            resolve(&parse_config("cycles = 1\nanalyzer_theta = 45.0\n").unwrap(), None).unwrap();
        assert_eq!(resolved.experiment.analyzer_theta, Some(45.0));
        assert!(canonical_text(&resolved.experiment).starts_with("analyzer_theta = 45.0\n"));

        let no_analyzer = resolve(&parse_config(MINIMAL).unwrap(), None).unwrap();
        assert!(!canonical_text(&no_analyzer.experiment).contains("analyzer_theta"));
    }
}
