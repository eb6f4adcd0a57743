//! Seeded Monte Carlo photon-counting experiments.
//!
//! Each emitted photon pair is one trial: the trigger detector heralds the
//! pair, the stored photon walks the loop cycle by cycle (loss, storage
//! phase, dephasing, and a branch choice at every switch traversal), and a
//! surviving photon is detected through an optional analyzer with finite
//! detector efficiency and timing jitter.
//!
//! Reproducibility contract: every random decision draws from a ChaCha8
//! stream derived from `(seed, stream index)`, where trial `i` owns stream
//! `i` and the pair-count and dark-count draws own reserved streams. Trials
//! therefore do not share generator state, results are independent of how
//! trials are distributed over threads, and histogram merging is integer
//! addition, which is exactly associative. Identical configs give
//! bit-identical histograms at any thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;

use crate::control::{build_waveform, DriveConfig};
use crate::device::CycleModel;
use crate::polarization::{make_linear, PureState};
use crate::{Error, Result};

/// Stream index of the pair-count draw.
const PAIR_COUNT_STREAM: u64 = u64::MAX;
/// Stream index of the dark-count draws.
const DARK_STREAM: u64 = u64::MAX - 1;
/// Trials per parallel work unit. Fixed so the trial-to-chunk assignment
/// never depends on the thread count.
const TRIAL_CHUNK: u64 = 8192;
/// Extra traversals allowed past the drive's last active time before a
/// photon is declared lost (only reachable through repeated switch leaks).
const EXTRA_TRAVERSALS: u32 = 256;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A well-mixed 64-bit seed for substream `stream` of `seed`. Used for the
/// per-angle runs of an analyzer sweep; the same derivation keys the
/// per-trial generators.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut state = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let a = splitmix64(&mut state);
    splitmix64(&mut state) ^ a.rotate_left(23)
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut state = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Full description of one photon-counting run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Photon-pair emission rate, pairs per second.
    pub pair_rate: f64,
    /// Acquisition time, seconds. Zero is legal and emits no pairs.
    pub duration: f64,
    /// Input linear polarization, degrees from horizontal.
    pub input_theta: f64,
    /// Intended storage length in round trips.
    pub cycles: u32,
    /// Loop imperfection model.
    pub cycle_model: CycleModel,
    /// Switch drive; its delays determine the actual storage behavior.
    pub drive: DriveConfig,
    /// Optical delay between the trigger detection and the photon's first
    /// arrival at the loop, ns.
    pub fiber_delay: f64,
    /// Trigger-detector efficiency, in `[0, 1]`.
    pub detector_efficiency_trigger: f64,
    /// Qubit-detector efficiency, in `[0, 1]`.
    pub detector_efficiency_qubit: f64,
    /// Dark-count rate referred to the histogram window, counts per second
    /// of acquisition.
    pub dark_rate: f64,
    /// Histogram bin width, ns.
    pub bin_width: f64,
    /// Gaussian detection-time jitter, standard deviation in ns.
    pub timing_jitter_sigma: f64,
    /// Linear analyzer angle before the qubit detector, degrees; `None`
    /// removes the analyzer.
    pub analyzer_theta: Option<f64>,
    /// Master seed; fully determines the run.
    pub seed: u64,
}

impl Default for ExperimentConfig {
    /// Reference-device scale: 2000 pairs/s for 600 s, a 30-degree input
    /// stored for one cycle, 600 ns of delay fiber, 12% detector
    /// efficiencies. The rate and efficiencies set a plausible counting
    /// scale; they are order-of-magnitude values, not calibrated absolutes.
    fn default() -> Self {
        let drive = DriveConfig {
            // Zero-on-time pair: single-cycle storage needs no drive.
            gd1_delay: crate::DEFAULT_ROUND_TRIP_NS,
            gd2_delay: crate::DEFAULT_ROUND_TRIP_NS - 100.0,
            ..DriveConfig::default()
        };
        Self {
            pair_rate: 2000.0,
            duration: 600.0,
            input_theta: 30.0,
            cycles: 1,
            cycle_model: CycleModel::default(),
            drive,
            fiber_delay: 600.0,
            detector_efficiency_trigger: 0.12,
            detector_efficiency_qubit: 0.12,
            dark_rate: 0.0,
            bin_width: 0.5,
            timing_jitter_sigma: 0.5,
            analyzer_theta: None,
            seed: 1,
        }
    }
}

impl ExperimentConfig {
    /// Range-checks every field (the drive's schedule consistency is checked
    /// separately when the waveform is built).
    pub fn validate(&self) -> Result<()> {
        if !self.pair_rate.is_finite() || self.pair_rate < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "pair_rate must be non-negative, got {}",
                self.pair_rate
            )));
        }
        if !self.duration.is_finite() || self.duration < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "duration must be non-negative, got {}",
                self.duration
            )));
        }
        if !self.input_theta.is_finite() {
            return Err(Error::InvalidArgument("input_theta must be finite".into()));
        }
        if self.cycles == 0 {
            return Err(Error::InvalidArgument("cycles must be at least 1".into()));
        }
        self.cycle_model.validate()?;
        self.drive.validate()?;
        if !self.fiber_delay.is_finite() || self.fiber_delay < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "fiber_delay must be non-negative, got {}",
                self.fiber_delay
            )));
        }
        for (name, v) in [
            ("detector_efficiency_trigger", self.detector_efficiency_trigger),
            ("detector_efficiency_qubit", self.detector_efficiency_qubit),
        ] {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must lie in [0, 1], got {v}"
                )));
            }
        }
        if !self.dark_rate.is_finite() || self.dark_rate < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "dark_rate must be non-negative, got {}",
                self.dark_rate
            )));
        }
        if !self.bin_width.is_finite() || self.bin_width <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "bin_width must be positive, got {}",
                self.bin_width
            )));
        }
        if !self.timing_jitter_sigma.is_finite() || self.timing_jitter_sigma < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "timing_jitter_sigma must be non-negative, got {}",
                self.timing_jitter_sigma
            )));
        }
        if let Some(theta) = self.analyzer_theta {
            if !theta.is_finite() {
                return Err(Error::InvalidArgument(
                    "analyzer_theta must be finite".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Arrival-time histogram of qubit detections relative to the trigger.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalHistogram {
    /// Left edge of bin 0, ns.
    pub bin_start: f64,
    /// Bin width, ns.
    pub bin_width: f64,
    /// Counts per bin.
    pub counts: Vec<u64>,
    /// Photon pairs emitted during the acquisition.
    pub pairs_emitted: u64,
    /// Signal detections that landed inside the histogram window.
    pub signal_counts: u64,
    /// Dark counts added to the window.
    pub dark_counts: u64,
}

impl ArrivalHistogram {
    /// Builds a histogram from raw bin contents (for synthetic data and
    /// tests). `bin_width` must be positive and finite.
    pub fn from_counts(bin_start: f64, bin_width: f64, counts: Vec<u64>) -> Result<Self> {
        if !bin_start.is_finite() || !bin_width.is_finite() || bin_width <= 0.0 {
            return Err(Error::InvalidArgument(
                "histogram needs finite bin_start and positive bin_width".into(),
            ));
        }
        let signal_counts = counts.iter().sum();
        Ok(Self {
            bin_start,
            bin_width,
            counts,
            pairs_emitted: 0,
            signal_counts,
            dark_counts: 0,
        })
    }

    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    /// Center time of bin `i`, ns.
    pub fn bin_center(&self, i: usize) -> f64 {
        self.bin_start + (i as f64 + 0.5) * self.bin_width
    }

    /// `(start, end)` of the covered window, ns.
    pub fn window(&self) -> (f64, f64) {
        (
            self.bin_start,
            self.bin_start + self.bin_width * self.counts.len() as f64,
        )
    }

    pub fn total_counts(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Integrated counts around one storage peak.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakArea {
    /// Cycle index (peak `k` sits at `fiber_delay + k * round_trip`).
    pub cycle: u32,
    /// Nominal peak center, ns.
    pub center_ns: f64,
    /// Counts integrated over one round trip centered on the peak.
    pub counts: u64,
    /// Poisson standard deviation, `sqrt(counts)`.
    pub sigma: f64,
}

/// Integrates the histogram over a one-round-trip window centered on each
/// peak `k = 1..=max_cycle`. A bin belongs to the window containing its
/// center (half-open on the right). Errors if any window extends outside
/// the histogram.
pub fn peak_areas(
    hist: &ArrivalHistogram,
    round_trip: f64,
    fiber_delay: f64,
    max_cycle: u32,
) -> Result<Vec<PeakArea>> {
    if !round_trip.is_finite() || round_trip <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "round_trip must be positive, got {round_trip}"
        )));
    }
    if max_cycle == 0 {
        return Err(Error::InvalidArgument("max_cycle must be at least 1".into()));
    }
    let (win_lo, win_hi) = hist.window();
    let mut areas = Vec::with_capacity(max_cycle as usize);
    for k in 1..=max_cycle {
        let center = fiber_delay + f64::from(k) * round_trip;
        let lo = center - round_trip / 2.0;
        let hi = center + round_trip / 2.0;
        // Half a bin of slack: membership is by bin center.
        if lo < win_lo - hist.bin_width / 2.0 || hi > win_hi + hist.bin_width / 2.0 {
            return Err(Error::OutOfRange(format!(
                "peak {k} window [{lo}, {hi}] ns extends outside the histogram \
                 [{win_lo}, {win_hi}] ns"
            )));
        }
        let counts: u64 = hist
            .counts
            .iter()
            .enumerate()
            .filter(|(i, _)| {
                let c = hist.bin_center(*i);
                c >= lo && c < hi
            })
            .map(|(_, n)| *n)
            .sum();
        areas.push(PeakArea {
            cycle: k,
            center_ns: center,
            counts,
            sigma: (counts as f64).sqrt(),
        });
    }
    Ok(areas)
}

/// One angle of an analyzer sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    /// Analyzer setting, degrees.
    pub analyzer_theta: f64,
    /// Counts in the storage peak for the configured cycle count.
    pub counts: u64,
    /// Poisson standard deviation, `sqrt(counts)`.
    pub sigma: f64,
}

/// Per-traversal quantities precomputed from the drive waveform.
struct TraversalTable {
    /// Probability of taking the onward port at traversal `k` (index 0 is
    /// the entry traversal at `t = 0`).
    p_onward: Vec<f64>,
    /// Table length: two traversals past anything the drive can populate
    /// (and at least `cycles + 2`). Beyond it the drive is certainly off.
    span: u32,
}

fn traversal_table(cfg: &ExperimentConfig) -> Result<TraversalTable> {
    let waveform = build_waveform(&cfg.drive)?;
    let rt = cfg.drive.round_trip;
    let last_driven = (waveform.last_nonzero_time().max(0.0) / rt).ceil() as u32;
    let span = last_driven.max(cfg.cycles) + 2;
    let mut p_onward = Vec::with_capacity(span as usize + 1);
    for k in 0..=span {
        let t = f64::from(k) * rt;
        // Beyond the waveform's tail margin the drive is defined to be off.
        let delta = match waveform.retardation_at(t) {
            Ok(d) => d,
            Err(Error::OutOfRange(_)) => 0.0,
            Err(e) => return Err(e),
        };
        p_onward.push((delta / 2.0).cos().powi(2));
    }
    Ok(TraversalTable { p_onward, span })
}

impl TraversalTable {
    fn p_onward_at(&self, k: u32) -> f64 {
        self.p_onward
            .get(k as usize)
            .copied()
            .unwrap_or(1.0)
    }
}

/// Outcome of one trial: the exit cycle index of a detected photon.
fn simulate_trial(
    rng: &mut ChaCha8Rng,
    cfg: &ExperimentConfig,
    input: &PureState,
    table: &TraversalTable,
) -> Option<u32> {
    if rng.random::<f64>() >= cfg.detector_efficiency_trigger {
        return None;
    }

    // Entry traversal: only the onward port leads into the loop; the
    // returned branch is back-reflected toward the source and lost.
    let p_enter = table.p_onward_at(0);
    if p_enter < 1.0 && rng.random::<f64>() >= p_enter {
        return None;
    }

    let transmission = 1.0 - cfg.cycle_model.loss_per_cycle;
    let dephase_prob = (1.0 - cfg.cycle_model.visibility) / 2.0;
    let extinction = cfg.cycle_model.pbs_extinction;
    let max_traversals = table.span + EXTRA_TRAVERSALS;

    let mut psi = *input;
    let mut k = 1u32;
    let exit_cycle = loop {
        // One pass through the storage line.
        if transmission < 1.0 && rng.random::<f64>() >= transmission {
            return None; // absorbed or scattered out of the mode
        }
        if cfg.cycle_model.storage_phase != 0.0 {
            psi = psi.with_relative_phase(cfg.cycle_model.storage_phase);
        }
        if dephase_prob > 0.0 && rng.random::<f64>() < dephase_prob {
            psi = psi.phase_flipped();
        }

        // Switch traversal: the onward branch leaves unflipped, the returned
        // branch stays trapped and flipped. A leak swaps the port while
        // keeping the branch polarization.
        let onward = rng.random::<f64>() < table.p_onward_at(k);
        let leaked = extinction > 0.0 && rng.random::<f64>() < extinction;
        let (exits, flipped) = match (onward, leaked) {
            (true, false) => (true, false),
            (true, true) => (false, false),
            (false, false) => (false, true),
            (false, true) => (true, true),
        };
        if flipped {
            psi = psi.bit_flipped();
        }
        if exits {
            break k;
        }
        k += 1;
        if k > max_traversals {
            return None; // leak-trapped far beyond the drive; call it lost
        }
    };

    if let Some(theta) = cfg.analyzer_theta {
        if rng.random::<f64>() >= psi.analyzer_probability(theta) {
            return None;
        }
    }
    if rng.random::<f64>() >= cfg.detector_efficiency_qubit {
        return None;
    }
    Some(exit_cycle)
}

fn arrival_time(rng: &mut ChaCha8Rng, cfg: &ExperimentConfig, exit_cycle: u32) -> f64 {
    let nominal = cfg.fiber_delay + f64::from(exit_cycle) * cfg.drive.round_trip;
    if cfg.timing_jitter_sigma > 0.0 {
        let jitter = Normal::new(0.0, cfg.timing_jitter_sigma)
            .expect("sigma validated non-negative")
            .sample(rng);
        nominal + jitter
    } else {
        nominal
    }
}

/// Runs the configured experiment and histograms qubit arrival times.
///
/// The window starts at `fiber_delay` and extends half a round trip past the
/// last traversal the drive can populate (at least one cycle past the
/// intended storage), so every nominal peak and its integration window lie
/// inside. Detections jittered outside the window are dropped.
pub fn run_histogram(cfg: &ExperimentConfig) -> Result<ArrivalHistogram> {
    cfg.validate()?;
    let input = make_linear(cfg.input_theta)?;
    let table = traversal_table(cfg)?;
    let rt = cfg.drive.round_trip;

    let k_span = f64::from(table.span.max(cfg.cycles + 1)) + 0.5;
    let n_bins = ((k_span * rt) / cfg.bin_width).ceil() as usize;
    let bin_start = cfg.fiber_delay;

    let mean_pairs = cfg.pair_rate * cfg.duration;
    let pairs_emitted = if mean_pairs > 0.0 {
        let mut rng = stream_rng(cfg.seed, PAIR_COUNT_STREAM);
        Poisson::new(mean_pairs)
            .map_err(|e| Error::InvalidArgument(format!("pair count draw: {e}")))?
            .sample(&mut rng) as u64
    } else {
        0
    };

    // Fixed-size chunks of consecutive trials; each chunk fills a local
    // histogram and the merge is elementwise integer addition, so the result
    // is independent of the thread count.
    let n_chunks = pairs_emitted.div_ceil(TRIAL_CHUNK);
    let zero = || (vec![0u64; n_bins], 0u64);
    let merge = |(mut ca, sa): (Vec<u64>, u64), (cb, sb): (Vec<u64>, u64)| {
        for (a, b) in ca.iter_mut().zip(cb) {
            *a += b;
        }
        (ca, sa + sb)
    };
    let (mut counts, signal_counts) = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let lo = chunk * TRIAL_CHUNK;
            let hi = (lo + TRIAL_CHUNK).min(pairs_emitted);
            let mut local = vec![0u64; n_bins];
            let mut binned = 0u64;
            for trial in lo..hi {
                let mut rng = stream_rng(cfg.seed, trial);
                if let Some(exit_cycle) = simulate_trial(&mut rng, cfg, &input, &table) {
                    let t = arrival_time(&mut rng, cfg, exit_cycle);
                    let idx = ((t - bin_start) / cfg.bin_width).floor();
                    if (0.0..n_bins as f64).contains(&idx) {
                        local[idx as usize] += 1;
                        binned += 1;
                    }
                }
            }
            (local, binned)
        })
        .reduce(zero, merge);

    let mut dark_counts = 0u64;
    let mean_darks = cfg.dark_rate * cfg.duration;
    if mean_darks > 0.0 {
        let mut rng = stream_rng(cfg.seed, DARK_STREAM);
        let n_dark = Poisson::new(mean_darks)
            .map_err(|e| Error::InvalidArgument(format!("dark count draw: {e}")))?
            .sample(&mut rng) as u64;
        for _ in 0..n_dark {
            let idx = (rng.random::<f64>() * n_bins as f64) as usize;
            counts[idx.min(n_bins - 1)] += 1;
            dark_counts += 1;
        }
    }

    Ok(ArrivalHistogram {
        bin_start,
        bin_width: cfg.bin_width,
        counts,
        pairs_emitted,
        signal_counts,
        dark_counts,
    })
}

/// Runs one histogram per analyzer angle and integrates the storage peak for
/// the configured cycle count.
///
/// Each angle runs under its own seed derived from `(cfg.seed, angle index)`
/// so points are statistically independent but the whole sweep is still a
/// pure function of the config.
pub fn run_analyzer_sweep(cfg: &ExperimentConfig, thetas: &[f64]) -> Result<Vec<SweepPoint>> {
    if thetas.is_empty() {
        return Err(Error::InvalidArgument(
            "analyzer sweep needs at least one angle".into(),
        ));
    }
    if let Some(bad) = thetas.iter().find(|t| !t.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "analyzer angles must be finite, got {bad}"
        )));
    }
    cfg.validate()?;
    let mut points = Vec::with_capacity(thetas.len());
    for (i, &theta) in thetas.iter().enumerate() {
        let mut sub = cfg.clone();
        sub.analyzer_theta = Some(theta);
        sub.seed = derive_seed(cfg.seed, i as u64);
        let hist = run_histogram(&sub)?;
        let areas = peak_areas(&hist, cfg.drive.round_trip, cfg.fiber_delay, cfg.cycles)?;
        let peak = areas.last().expect("max_cycle >= 1 yields at least one area");
        points.push(SweepPoint {
            analyzer_theta: theta,
            counts: peak.counts,
            sigma: peak.sigma,
        });
    }
    Ok(points)
}
