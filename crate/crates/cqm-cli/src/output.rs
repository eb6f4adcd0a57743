//! Table and sidecar emission: fixed-precision CSV, atomic writes, and the
//! run-metadata sidecar that doubles as a re-runnable config.

use std::io::Write;
use std::path::Path;

use cqm::monte_carlo::{ArrivalHistogram, SweepPoint};

use crate::config::{canonical_text, config_digest};
use crate::fit::FringeFit;
use crate::CliError;

/// Formats with nine significant digits in plain decimal notation, the fixed
/// precision of every numeric table column.
pub fn fmt_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (8 - magnitude).clamp(0, 17) as usize;
    format!("{x:.decimals$}")
}

/// Writes via a temporary file in the destination directory followed by an
/// atomic rename, so a crash or full disk never leaves a partial file at the
/// final path.
pub fn write_atomic(path: &Path, content: &str) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = tempfile::NamedTempFile::new_in(dir.unwrap_or_else(|| Path::new(".")))
        .map_err(|e| CliError::Io(format!("creating temporary file for {path:?}: {e}")))?;
    tmp.write_all(content.as_bytes())
        .map_err(|e| CliError::Io(format!("writing {path:?}: {e}")))?;
    tmp.persist(path)
        .map_err(|e| CliError::Io(format!("renaming into {path:?}: {e}")))?;
    Ok(())
}

/// Histogram table: one row per bin.
pub fn histogram_csv(hist: &ArrivalHistogram) -> String {
    let mut out = String::from("bin_start_ns,bin_end_ns,counts\n");
    for (i, counts) in hist.counts.iter().enumerate() {
        let start = hist.bin_start + i as f64 * hist.bin_width;
        let end = hist.bin_start + (i as f64 + 1.0) * hist.bin_width;
        out.push_str(&format!("{},{},{counts}\n", fmt_sig9(start), fmt_sig9(end)));
    }
    out
}

/// Sweep table: one row per analyzer angle.
pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("analyzer_theta_deg,counts,sigma\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{}\n",
            fmt_sig9(p.analyzer_theta),
            p.counts,
            fmt_sig9(p.sigma)
        ));
    }
    out
}

/// Extra metadata appended to a sweep sidecar.
pub struct SweepMeta<'a> {
    pub start: f64,
    pub end: f64,
    pub step: f64,
    pub fit: Option<&'a FringeFit>,
}

/// Builds the sidecar: the canonical resolved config followed by bookkeeping
/// keys. The result is itself a valid config file; feeding it back through
/// `--config` reproduces the run bit for bit, and the embedded digest is
/// verified on re-ingest.
pub fn sidecar_text(
    cfg: &cqm::monte_carlo::ExperimentConfig,
    sweep: Option<&SweepMeta>,
) -> String {
    let mut out = canonical_text(cfg);
    out.push_str(&format!("digest = \"{}\"\n", config_digest(cfg)));
    out.push_str(&format!(
        "tool_version = \"{}\"\n",
        env!("CARGO_PKG_VERSION")
    ));
    out.push_str(
        "calibration_note = \"pair_rate and detector efficiencies are \
         order-of-magnitude defaults, not calibrated absolutes\"\n",
    );
    if let Some(meta) = sweep {
        out.push_str(&format!("sweep.start = {}\n", float_key(meta.start)));
        out.push_str(&format!("sweep.end = {}\n", float_key(meta.end)));
        out.push_str(&format!("sweep.step = {}\n", float_key(meta.step)));
        if let Some(fit) = meta.fit {
            out.push_str(&format!("fit.amplitude = {}\n", float_key(fit.amplitude)));
            out.push_str(&format!("fit.center_deg = {}\n", float_key(fit.center_deg)));
            out.push_str(&format!(
                "fit.center_sigma_deg = {}\n",
                float_key(fit.center_sigma_deg)
            ));
            out.push_str(&format!("fit.contrast = {}\n", float_key(fit.contrast)));
            out.push_str(&format!(
                "fit.contrast_sigma = {}\n",
                float_key(fit.contrast_sigma)
            ));
            out.push_str(&format!("fit.offset = {}\n", float_key(fit.offset)));
        }
    }
    out
}

fn float_key(v: f64) -> String {
    let s = format!("{v}");
    if s.contains('.') || s.contains('e') || s.contains("inf") || s.contains("NaN") {
        s
    } else {
        format!("{s}.0")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig9_keeps_nine_significant_digits() {
        assert_eq!(fmt_sig9(613.3), "613.300000");
        assert_eq!(fmt_sig9(0.531441), "0.531441000");
        assert_eq!(fmt_sig9(-45.15), "-45.1500000");
        assert_eq!(fmt_sig9(0.0), "0");
        assert_eq!(fmt_sig9(123456789.0), "123456789");
        assert_eq!(fmt_sig9(1.0e-4), "0.000100000000");
    }

    #[test]
    fn histogram_csv_has_one_row_per_bin() {
        let hist = ArrivalHistogram::from_counts(600.0, 0.5, vec![1, 0, 7]).unwrap();
        let csv = histogram_csv(&hist);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], "bin_start_ns,bin_end_ns,counts");
        assert_eq!(lines[1], "600.000000,600.500000,1");
        assert_eq!(lines[3], "601.000000,601.500000,7");
    }

    #[test]
    fn atomic_write_replaces_content_completely(){
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("table.csv");
        write_atomic(&path, "first\n").unwrap();
        write_atomic(&path, "second\n").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "second\n");
        // No stray temporaries left behind.
        let leftovers: Vec<_> = std::fs::read_dir(dir.path())
            .unwrap()
            .filter_map(|e| e.ok())
            .filter(|e| e.path() != path)
            .collect();
        assert!(leftovers.is_empty(), "{leftovers:?}");
    }

    #[test]
    fn sidecar_is_a_valid_config_with_matching_digest() {
        let cfg = cqm::monte_carlo::ExperimentConfig::default();
        let text = sidecar_text(&cfg, None);
        let raw = crate::config::parse_config(&text).unwrap();
        assert!(raw.digest_claim().is_some());
        let resolved = crate::config::resolve(&raw, None).unwrap();
        assert_eq!(resolved.experiment, cfg);
    }
}
