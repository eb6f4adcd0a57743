//! Drive electronics for the loop switch: TTL pulse pair, high-voltage
//! waveform, and schedule synthesis.
//!
//! The switch must hold half-wave retardation for every trapped traversal
//! and be off again one round trip later, but the round trip (13.3 ns) is
//! shorter than the narrowest available TTL pulse (100 ns). The trick is to
//! derive the on and off transitions from two different delayed pulses: the
//! driver turns on at the leading edge of pulse 1 and off at the trailing
//! edge of pulse 2, with the OR of the two pulses required to stay high in
//! between. Because the off edge comes from a different pulse, the on-time
//! can be anywhere from zero to two pulse widths regardless of the width of
//! either pulse.
//!
//! Times are in nanoseconds. `t = 0` is the photon's first arrival at the
//! loop switch; generator delays are in this frame and may be negative (the
//! pulse fires while the photon is still in the delay fiber ahead of the
//! loop).

use std::f64::consts::PI;

use crate::{Error, Result, DEFAULT_ROUND_TRIP_NS};

/// Pulse-pair drive settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveConfig {
    /// Delay of pulse 1 (its leading edge starts the drive), ns.
    pub gd1_delay: f64,
    /// Delay of pulse 2 (its trailing edge ends the drive), ns.
    pub gd2_delay: f64,
    /// TTL pulse width, ns. Must exceed the round trip; that is the premise
    /// of the pulse-pair scheme.
    pub pulse_width: f64,
    /// Drive 0-to-half-wave rise time, ns.
    pub rise_time: f64,
    /// Drive half-wave-to-0 fall time, ns.
    pub fall_time: f64,
    /// Storage-loop round trip, ns.
    pub round_trip: f64,
}

impl Default for DriveConfig {
    fn default() -> Self {
        Self {
            gd1_delay: 0.0,
            gd2_delay: 0.0,
            pulse_width: 100.0,
            rise_time: 10.0,
            fall_time: 10.0,
            round_trip: DEFAULT_ROUND_TRIP_NS,
        }
    }
}

impl DriveConfig {
    /// Checks field ranges: widths and times finite, `pulse_width > 0`,
    /// `rise_time >= 0`, `fall_time >= 0`, `round_trip > 0`, and
    /// `pulse_width > round_trip`. Delays may be any finite value.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("gd1_delay", self.gd1_delay),
            ("gd2_delay", self.gd2_delay),
            ("pulse_width", self.pulse_width),
            ("rise_time", self.rise_time),
            ("fall_time", self.fall_time),
            ("round_trip", self.round_trip),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} must be finite")));
            }
        }
        if self.pulse_width <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "pulse_width must be positive, got {}",
                self.pulse_width
            )));
        }
        if self.rise_time < 0.0 || self.fall_time < 0.0 {
            return Err(Error::InvalidArgument(
                "rise_time and fall_time must be non-negative".into(),
            ));
        }
        if self.round_trip <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "round_trip must be positive, got {}",
                self.round_trip
            )));
        }
        if self.pulse_width <= self.round_trip {
            return Err(Error::InvalidArgument(format!(
                "pulse_width ({}) must exceed round_trip ({}); the pulse pair \
                 exists precisely because single pulses are wider than one cycle",
                self.pulse_width, self.round_trip
            )));
        }
        Ok(())
    }
}

/// One piece of a piecewise-linear waveform. Retardation interpolates
/// linearly from `delta_start` at `t_start` to `delta_end` at `t_end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub t_start: f64,
    pub t_end: f64,
    pub delta_start: f64,
    pub delta_end: f64,
}

impl Segment {
    fn value_at(&self, t: f64) -> f64 {
        if self.delta_start == self.delta_end || self.t_end == self.t_start {
            return self.delta_start;
        }
        let frac = (t - self.t_start) / (self.t_end - self.t_start);
        self.delta_start + (self.delta_end - self.delta_start) * frac
    }
}

/// The switch retardation as a piecewise-linear function of time.
///
/// Contiguous segments cover the whole domain; a query on a shared boundary
/// resolves to the earlier segment (indistinguishable except across a
/// zero-length ramp, where the step is taken after the instant itself).
#[derive(Debug, Clone, PartialEq)]
pub struct DriveWaveform {
    segments: Vec<Segment>,
}

impl DriveWaveform {
    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// `(start, end)` of the covered time span.
    pub fn domain(&self) -> (f64, f64) {
        (
            self.segments.first().map_or(0.0, |s| s.t_start),
            self.segments.last().map_or(0.0, |s| s.t_end),
        )
    }

    /// The last instant at which the retardation is nonzero (domain start if
    /// the waveform never turns on). After this time the switch stays off.
    pub fn last_nonzero_time(&self) -> f64 {
        self.segments
            .iter()
            .rev()
            .find(|s| s.delta_start != 0.0 || s.delta_end != 0.0)
            .map_or(self.domain().0, |s| s.t_end)
    }

    /// Retardation (radians) at time `t`. Errors on non-finite `t` or `t`
    /// outside the domain.
    pub fn retardation_at(&self, t: f64) -> Result<f64> {
        if !t.is_finite() {
            return Err(Error::InvalidArgument("query time must be finite".into()));
        }
        let (lo, hi) = self.domain();
        if t < lo || t > hi {
            return Err(Error::OutOfRange(format!(
                "time {t} ns outside waveform domain [{lo}, {hi}] ns"
            )));
        }
        let seg = self
            .segments
            .iter()
            .find(|s| t >= s.t_start && t <= s.t_end)
            .expect("contiguous segments cover the domain");
        Ok(seg.value_at(t))
    }
}

/// Builds the retardation waveform produced by a pulse pair.
///
/// The drive rises linearly from 0 to half-wave over `rise_time` starting at
/// pulse 1's leading edge (`gd1_delay`), holds, and falls back over
/// `fall_time` from pulse 2's trailing edge (`gd2_delay + pulse_width`).
/// Errors with an invalid-schedule if the pulse OR drops low in between
/// (`|gd1_delay - gd2_delay| > pulse_width`) or if the on-time is too short
/// to complete the rise. An exactly zero on-time is legal and yields an
/// always-off waveform (the off edge pre-empts the on edge).
///
/// The domain extends one pulse width before the earlier of `t = 0` and the
/// on edge, and one pulse width past the end of the fall, so every traversal
/// of a photon released by this waveform is queryable.
pub fn build_waveform(cfg: &DriveConfig) -> Result<DriveWaveform> {
    // Below this (1 attosecond, far under any physical timescale) an on-time
    // is treated as exactly zero, absorbing rounding in gd2 + width - gd1.
    const ON_TIME_SNAP: f64 = 1e-9;

    cfg.validate()?;
    let on_start = cfg.gd1_delay;
    let on_end = cfg.gd2_delay + cfg.pulse_width;
    if (cfg.gd1_delay - cfg.gd2_delay).abs() > cfg.pulse_width + ON_TIME_SNAP {
        return Err(Error::InvalidSchedule(format!(
            "pulse OR drops low between the pulses: |gd1 - gd2| = {} ns exceeds \
             the pulse width {} ns",
            (cfg.gd1_delay - cfg.gd2_delay).abs(),
            cfg.pulse_width
        )));
    }

    let lo = on_start.min(0.0) - cfg.pulse_width;
    if (on_end - on_start).abs() <= ON_TIME_SNAP {
        // Off edge coincides with the on edge: the driver never latches.
        let hi = on_end + cfg.fall_time + cfg.pulse_width;
        return Ok(DriveWaveform {
            segments: vec![Segment {
                t_start: lo,
                t_end: hi,
                delta_start: 0.0,
                delta_end: 0.0,
            }],
        });
    }
    if on_end < on_start + cfg.rise_time {
        return Err(Error::InvalidSchedule(format!(
            "on-time {} ns is shorter than the {} ns rise: the drive never \
             reaches half-wave retardation",
            on_end - on_start,
            cfg.rise_time
        )));
    }

    let rise_end = on_start + cfg.rise_time;
    let fall_end = on_end + cfg.fall_time;
    let hi = fall_end + cfg.pulse_width;
    let mut segments = Vec::with_capacity(5);
    segments.push(Segment {
        t_start: lo,
        t_end: on_start,
        delta_start: 0.0,
        delta_end: 0.0,
    });
    if cfg.rise_time > 0.0 {
        segments.push(Segment {
            t_start: on_start,
            t_end: rise_end,
            delta_start: 0.0,
            delta_end: PI,
        });
    }
    if rise_end < on_end {
        segments.push(Segment {
            t_start: rise_end,
            t_end: on_end,
            delta_start: PI,
            delta_end: PI,
        });
    }
    if cfg.fall_time > 0.0 {
        segments.push(Segment {
            t_start: on_end,
            t_end: fall_end,
            delta_start: PI,
            delta_end: 0.0,
        });
    }
    segments.push(Segment {
        t_start: fall_end,
        t_end: hi,
        delta_start: 0.0,
        delta_end: 0.0,
    });
    Ok(DriveWaveform { segments })
}

/// Retardation seen by the stored photon at each of its loop traversals
/// `k = 1..=cycles`, which occur at `t = k * round_trip`.
pub fn traversal_retardations(
    waveform: &DriveWaveform,
    cycles: u32,
    round_trip: f64,
) -> Result<Vec<f64>> {
    if cycles == 0 {
        return Err(Error::InvalidArgument("cycles must be at least 1".into()));
    }
    if !round_trip.is_finite() || round_trip <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "round_trip must be positive, got {round_trip}"
        )));
    }
    (1..=cycles)
        .map(|k| waveform.retardation_at(f64::from(k) * round_trip))
        .collect()
}

/// Synthesizes generator delays that store a photon for exactly `cycles`
/// round trips: half-wave retardation at traversals `1..cycles`, off at
/// traversal `cycles` (and at the entry, `t = 0`).
///
/// The rise is centered between entry and the first traversal, the fall
/// between the last trapped traversal and the exit, which uses the timing
/// slack symmetrically. Single-cycle storage needs no drive at all and is
/// realized as a zero-on-time pulse pair. Width, ramp times and the round
/// trip are taken from `template`, except that `round_trip` replaces the
/// template's value.
///
/// Errors with an infeasible-schedule naming the first unsatisfiable
/// traversal when a ramp does not fit inside one round trip, or when the
/// requested storage exceeds the pulse pair's maximum on-time (two widths).
pub fn schedule_for_cycles(
    cycles: u32,
    round_trip: f64,
    template: &DriveConfig,
) -> Result<DriveConfig> {
    if cycles == 0 {
        return Err(Error::InvalidArgument("cycles must be at least 1".into()));
    }
    let mut cfg = DriveConfig {
        round_trip,
        ..*template
    };
    cfg.gd1_delay = 0.0;
    cfg.gd2_delay = 0.0;
    cfg.validate()?;

    if cycles == 1 {
        // No trapped traversal: park a zero-on-time pair so the drive stays
        // off for the single pass.
        cfg.gd1_delay = round_trip;
        cfg.gd2_delay = round_trip - cfg.pulse_width;
    } else {
        if cfg.rise_time >= round_trip {
            return Err(Error::InfeasibleSchedule {
                traversal: 1,
                reason: format!(
                    "rise time {} ns does not fit between entry and the first \
                     traversal ({} ns)",
                    cfg.rise_time, round_trip
                ),
            });
        }
        if cfg.fall_time >= round_trip {
            return Err(Error::InfeasibleSchedule {
                traversal: cycles - 1,
                reason: format!(
                    "fall time {} ns does not fit between the last trapped \
                     traversal and the exit ({} ns)",
                    cfg.fall_time, round_trip
                ),
            });
        }
        let gd1 = 0.5 * (round_trip - cfg.rise_time);
        let on_end = f64::from(2 * cycles - 1) * round_trip / 2.0 - 0.5 * cfg.fall_time;
        let gd2 = on_end - cfg.pulse_width;
        if gd2 - gd1 > cfg.pulse_width {
            // Longest reachable plateau ends at gd1 + 2 widths; the first
            // trapped traversal past it cannot be held.
            let reach = gd1 + 2.0 * cfg.pulse_width;
            let first_unmet = ((reach / round_trip).floor() as u32 + 1).min(cycles - 1);
            return Err(Error::InfeasibleSchedule {
                traversal: first_unmet,
                reason: format!(
                    "{} trapped traversals need {} ns of drive, beyond the \
                     pulse pair's maximum on-time of {} ns",
                    cycles - 1,
                    on_end - gd1,
                    2.0 * cfg.pulse_width
                ),
            });
        }
        cfg.gd1_delay = gd1;
        cfg.gd2_delay = gd2;
    }

    // Verification pass: re-derive what each traversal will actually see.
    let waveform = build_waveform(&cfg)?;
    if waveform.retardation_at(0.0)? > 1e-9 {
        return Err(Error::InfeasibleSchedule {
            traversal: 0,
            reason: "drive is already on when the photon first arrives".into(),
        });
    }
    let deltas = traversal_retardations(&waveform, cycles, round_trip)?;
    for (i, &delta) in deltas.iter().enumerate() {
        let k = i as u32 + 1;
        let target = if k < cycles { PI } else { 0.0 };
        if (delta - target).abs() > 1e-9 {
            return Err(Error::InfeasibleSchedule {
                traversal: k,
                reason: format!(
                    "traversal at {} ns sees {delta:.6} rad, needs {target:.6}",
                    f64::from(k) * round_trip
                ),
            });
        }
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    #[test]
    fn single_pulse_pair_produces_documented_plateau() {
        // gd1 = 0, gd2 = 50: rise [0, 10], plateau [10, 150], fall [150, 160].
        let cfg = DriveConfig {
            gd2_delay: 50.0,
            ..DriveConfig::default()
        };
        let wf = build_waveform(&cfg).unwrap();
        assert_abs_diff_eq!(wf.retardation_at(-10.0).unwrap(), 0.0);
        assert_relative_eq!(wf.retardation_at(5.0).unwrap(), PI / 2.0, max_relative = 1e-12);
        assert_relative_eq!(wf.retardation_at(10.0).unwrap(), PI, max_relative = 1e-12);
        assert_relative_eq!(wf.retardation_at(150.0).unwrap(), PI, max_relative = 1e-12);
        assert_relative_eq!(wf.retardation_at(155.0).unwrap(), PI / 2.0, max_relative = 1e-12);
        assert_abs_diff_eq!(wf.retardation_at(165.0).unwrap(), 0.0);
        assert_relative_eq!(wf.last_nonzero_time(), 160.0, max_relative = 1e-12);
    }

    #[test]
    fn coincident_pulses_merge_into_one() {
        // gd1 = gd2 = 0 behaves like a single 100 ns pulse: plateau [10, 100].
        let wf = build_waveform(&DriveConfig::default()).unwrap();
        assert_relative_eq!(wf.retardation_at(10.0).unwrap(), PI, max_relative = 1e-12);
        assert_relative_eq!(wf.retardation_at(100.0).unwrap(), PI, max_relative = 1e-12);
        assert_relative_eq!(wf.retardation_at(105.0).unwrap(), PI / 2.0, max_relative = 1e-12);
        assert_abs_diff_eq!(wf.retardation_at(110.5).unwrap(), 0.0);
    }

    #[test]
    fn pulse_gap_is_an_invalid_schedule() {
        let cfg = DriveConfig {
            gd2_delay: 150.0,
            ..DriveConfig::default()
        };
        assert!(matches!(
            build_waveform(&cfg),
            Err(Error::InvalidSchedule(_))
        ));
        // Order reversed: the off edge lands before the on edge.
        let cfg = DriveConfig {
            gd1_delay: 150.0,
            ..DriveConfig::default()
        };
        assert!(matches!(
            build_waveform(&cfg),
            Err(Error::InvalidSchedule(_))
        ));
    }

    #[test]
    fn too_short_on_time_never_reaches_half_wave() {
        // On-time of 4 ns against a 10 ns rise.
        let cfg = DriveConfig {
            gd1_delay: 0.0,
            gd2_delay: 4.0 - 100.0,
            ..DriveConfig::default()
        };
        assert!(matches!(
            build_waveform(&cfg),
            Err(Error::InvalidSchedule(_))
        ));
    }

    #[test]
    fn waveform_rejects_out_of_domain_queries() {
        let wf = build_waveform(&DriveConfig::default()).unwrap();
        assert!(matches!(
            wf.retardation_at(1e6),
            Err(Error::OutOfRange(_))
        ));
        assert!(matches!(
            wf.retardation_at(f64::NAN),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn drive_config_validation_catches_bad_fields() {
        let cfg = DriveConfig {
            pulse_width: 10.0, // narrower than the 13.3 ns round trip
            ..DriveConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = DriveConfig {
            rise_time: -1.0,
            ..DriveConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = DriveConfig {
            round_trip: 0.0,
            ..DriveConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = DriveConfig {
            gd1_delay: f64::NAN,
            ..DriveConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn five_cycle_schedule_centers_both_ramps() {
        let cfg = schedule_for_cycles(5, DEFAULT_ROUND_TRIP_NS, &DriveConfig::default()).unwrap();
        assert_relative_eq!(cfg.gd1_delay, 1.65, max_relative = 1e-12);
        // Fall midpoint sits halfway between traversals 4 and 5:
        // on_end = 9 * 13.3 / 2 - 5 = 54.85, so gd2 = -45.15.
        assert_relative_eq!(cfg.gd2_delay, -45.15, max_relative = 1e-12);

        let wf = build_waveform(&cfg).unwrap();
        let deltas = traversal_retardations(&wf, 5, DEFAULT_ROUND_TRIP_NS).unwrap();
        for (i, &d) in deltas.iter().enumerate() {
            let target = if i + 1 < 5 { PI } else { 0.0 };
            assert_abs_diff_eq!(d, target, epsilon = 1e-9);
        }
        assert_abs_diff_eq!(wf.retardation_at(0.0).unwrap(), 0.0);
    }

    #[test]
    fn single_cycle_schedule_keeps_the_drive_off() {
        let cfg = schedule_for_cycles(1, DEFAULT_ROUND_TRIP_NS, &DriveConfig::default()).unwrap();
        let wf = build_waveform(&cfg).unwrap();
        let (lo, hi) = wf.domain();
        assert!(lo <= 0.0 && hi >= DEFAULT_ROUND_TRIP_NS);
        assert_abs_diff_eq!(wf.retardation_at(0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(
            wf.retardation_at(DEFAULT_ROUND_TRIP_NS).unwrap(),
            0.0
        );
        assert_eq!(wf.last_nonzero_time(), wf.domain().0);
    }

    #[test]
    fn storage_beyond_the_pulse_pair_reach_is_infeasible() {
        // Defaults support up to 16 cycles: 15 trapped traversals over
        // 199.5 ns against a 200 ns maximum on-time.
        assert!(schedule_for_cycles(16, DEFAULT_ROUND_TRIP_NS, &DriveConfig::default()).is_ok());
        match schedule_for_cycles(17, DEFAULT_ROUND_TRIP_NS, &DriveConfig::default()) {
            Err(Error::InfeasibleSchedule { traversal, .. }) => assert_eq!(traversal, 16),
            other => panic!("expected infeasible schedule, got {other:?}"),
        }
    }

    #[test]
    fn slow_ramps_are_infeasible_and_name_the_traversal() {
        let template = DriveConfig {
            rise_time: 15.0,
            ..DriveConfig::default()
        };
        match schedule_for_cycles(3, DEFAULT_ROUND_TRIP_NS, &template) {
            Err(Error::InfeasibleSchedule { traversal, reason }) => {
                assert_eq!(traversal, 1);
                assert!(reason.contains("rise"));
            }
            other => panic!("expected infeasible schedule, got {other:?}"),
        }
        let template = DriveConfig {
            fall_time: 14.0,
            ..DriveConfig::default()
        };
        match schedule_for_cycles(4, DEFAULT_ROUND_TRIP_NS, &template) {
            Err(Error::InfeasibleSchedule { traversal, reason }) => {
                assert_eq!(traversal, 3);
                assert!(reason.contains("fall"));
            }
            other => panic!("expected infeasible schedule, got {other:?}"),
        }
    }

    #[test]
    fn mistimed_schedule_shows_partial_retardation_at_a_traversal() {
        // Shift the rise so the first traversal lands mid-ramp.
        let cfg = DriveConfig {
            gd1_delay: DEFAULT_ROUND_TRIP_NS - 5.0,
            gd2_delay: DEFAULT_ROUND_TRIP_NS - 5.0,
            ..DriveConfig::default()
        };
        let wf = build_waveform(&cfg).unwrap();
        let deltas = traversal_retardations(&wf, 2, DEFAULT_ROUND_TRIP_NS).unwrap();
        assert_relative_eq!(deltas[0], PI / 2.0, max_relative = 1e-12);
        assert_relative_eq!(deltas[1], PI, max_relative = 1e-12);
    }

    #[test]
    fn zero_ramp_times_degenerate_to_steps() {
        let cfg = DriveConfig {
            gd2_delay: 20.0,
            rise_time: 0.0,
            fall_time: 0.0,
            ..DriveConfig::default()
        };
        let wf = build_waveform(&cfg).unwrap();
        assert_abs_diff_eq!(wf.retardation_at(-1.0).unwrap(), 0.0);
        assert_relative_eq!(wf.retardation_at(1.0).unwrap(), PI, max_relative = 1e-12);
        assert_relative_eq!(wf.retardation_at(119.9).unwrap(), PI, max_relative = 1e-12);
        assert_abs_diff_eq!(wf.retardation_at(120.5).unwrap(), 0.0);
    }

    proptest! {
        #[test]
        fn synthesis_hits_every_target_or_reports_infeasibility(
            cycles in 1u32..=20,
            rise in 0.0..13.0f64,
            fall in 0.0..13.0f64,
        ) {
            let template = DriveConfig {
                rise_time: rise,
                fall_time: fall,
                ..DriveConfig::default()
            };
            // Ramps fit in a round trip by construction, so the only
            // obstruction is the pulse pair's two-width on-time ceiling.
            let span_needed = f64::from(cycles - 1) * DEFAULT_ROUND_TRIP_NS
                + (rise - fall) / 2.0;
            match schedule_for_cycles(cycles, DEFAULT_ROUND_TRIP_NS, &template) {
                Ok(cfg) => {
                    prop_assert!(span_needed <= 2.0 * template.pulse_width + 1e-9);
                    let wf = build_waveform(&cfg).unwrap();
                    prop_assert!(wf.retardation_at(0.0).unwrap() <= 1e-9);
                    let deltas =
                        traversal_retardations(&wf, cycles, DEFAULT_ROUND_TRIP_NS).unwrap();
                    for (i, &d) in deltas.iter().enumerate() {
                        let target = if (i as u32 + 1) < cycles { PI } else { 0.0 };
                        prop_assert!((d - target).abs() <= 1e-9);
                    }
                }
                Err(Error::InfeasibleSchedule { .. }) => {
                    prop_assert!(cycles > 1 && span_needed > 2.0 * template.pulse_width - 1e-9);
                }
                Err(other) => return Err(TestCaseError::fail(format!("{other:?}"))),
            }
        }

        #[test]
        fn waveforms_stay_within_range_and_continuous(
            gd1 in -120.0..120.0f64,
            on_time in 0.0..200.0f64,
            rise in 0.0..30.0f64,
            fall in 0.0..30.0f64,
        ) {
            let cfg = DriveConfig {
                gd1_delay: gd1,
                gd2_delay: gd1 + on_time - 100.0,
                rise_time: rise,
                fall_time: fall,
                ..DriveConfig::default()
            };
            // Gap-free by construction (0 <= on_time <= 2 * width); discard
            // the cases where the on-time cannot complete the rise.
            let Ok(wf) = build_waveform(&cfg) else {
                prop_assert!(on_time <= rise + 1e-9);
                return Ok(());
            };
            let (lo, hi) = wf.domain();
            let steps = 400;
            let mut prev: Option<f64> = None;
            for i in 0..=steps {
                let t = (lo + (hi - lo) * (i as f64) / (steps as f64)).min(hi);
                let d = wf.retardation_at(t).unwrap();
                prop_assert!((-1e-12..=PI + 1e-12).contains(&d));
                if let (Some(p), true) = (prev, rise > 0.1 && fall > 0.1) {
                    // Between consecutive samples the slope is bounded by the
                    // steeper ramp.
                    let dt = (hi - lo) / (steps as f64);
                    let max_slope = PI / rise.min(fall);
                    prop_assert!((d - p).abs() <= max_slope * dt + 1e-9);
                }
                prev = Some(d);
            }
        }
    }
}
