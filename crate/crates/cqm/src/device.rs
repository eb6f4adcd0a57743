//! The storage device: a fiber loop closed by a polarizing Sagnac switch.
//!
//! Geometry, briefly: the input beam meets a polarizing beam splitter (PBS)
//! whose two output directions both lead around the same Sagnac ring, in
//! opposite senses, through a Pockels cell with its fast axis at 45 degrees.
//! With the cell off, the counter-propagating amplitudes recombine at the PBS
//! exactly as they split and the photon passes straight through. With the
//! cell at half-wave retardation the amplitudes are exchanged (a bit flip),
//! which routes the photon back out the port it came from. A photon that
//! entered from the storage fiber is therefore sent back into the storage
//! fiber: it is trapped until the cell turns off.
//!
//! The composed per-cycle channel ([`cycle_channel`]) applies, in order:
//! storage-line relative phase, loss, coherence damping, then the switch
//! action (bit flip while trapped, identity on exit). The order is pinned by
//! [`brute_force_oracle`], which never uses the composed channel: it walks
//! the photon element by element around the ring and must agree with
//! [`propagate`] to within 1e-12.

use std::f64::consts::{PI, TAU};

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::polarization::{pockels_operator, ElementOperator, PolarizationState, PureState};
use crate::{Error, Result, DEFAULT_ROUND_TRIP_NS};

/// Imperfection model for one storage cycle.
///
/// `loss_per_cycle` lumps every amplitude loss a photon sees in one round
/// trip (component insertion loss plus refocusing loss). `storage_phase` is
/// the birefringent phase (radians) the storage line adds between horizontal
/// and vertical each cycle. `visibility` scales the polarization coherence
/// each cycle (1 = perfectly aligned interferometer). `pbs_extinction` is the
/// probability that the switch routes a photon out the wrong port; it feeds
/// the Monte Carlo switching-noise model and deliberately does not enter the
/// composed channel, which describes the correctly-routed history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleModel {
    pub loss_per_cycle: f64,
    pub storage_phase: f64,
    pub visibility: f64,
    pub pbs_extinction: f64,
}

impl Default for CycleModel {
    /// Reference-device values: 19% loss per cycle (15% components, 4%
    /// refocusing), no storage birefringence, unit visibility, ideal switch.
    fn default() -> Self {
        Self {
            loss_per_cycle: 0.19,
            storage_phase: 0.0,
            visibility: 1.0,
            pbs_extinction: 0.0,
        }
    }
}

impl CycleModel {
    /// A lossless, noiseless loop. Useful as a baseline in tests and for
    /// isolating one imperfection at a time.
    pub fn ideal() -> Self {
        Self {
            loss_per_cycle: 0.0,
            storage_phase: 0.0,
            visibility: 1.0,
            pbs_extinction: 0.0,
        }
    }

    /// Checks every field range: `loss_per_cycle` in `[0, 1)`,
    /// `storage_phase` finite, `visibility` in `[0, 1]`, `pbs_extinction`
    /// in `[0, 1)`.
    pub fn validate(&self) -> Result<()> {
        if !self.loss_per_cycle.is_finite() || !(0.0..1.0).contains(&self.loss_per_cycle) {
            return Err(Error::InvalidArgument(format!(
                "loss_per_cycle must lie in [0, 1), got {}",
                self.loss_per_cycle
            )));
        }
        if !self.storage_phase.is_finite() {
            return Err(Error::InvalidArgument(
                "storage_phase must be finite".into(),
            ));
        }
        if !self.visibility.is_finite() || !(0.0..=1.0).contains(&self.visibility) {
            return Err(Error::InvalidArgument(format!(
                "visibility must lie in [0, 1], got {}",
                self.visibility
            )));
        }
        if !self.pbs_extinction.is_finite() || !(0.0..1.0).contains(&self.pbs_extinction) {
            return Err(Error::InvalidArgument(format!(
                "pbs_extinction must lie in [0, 1), got {}",
                self.pbs_extinction
            )));
        }
        Ok(())
    }
}

/// One storage cycle as a sequence of element actions plus a damping factor.
#[derive(Debug, Clone)]
pub struct CycleChannel {
    storage_phase: ElementOperator,
    loss: ElementOperator,
    visibility: f64,
    switch: ElementOperator,
}

impl CycleChannel {
    /// Applies the cycle: phase, then loss, then coherence damping, then the
    /// switch action.
    pub fn apply(&self, state: &PolarizationState) -> PolarizationState {
        state
            .apply(&self.storage_phase)
            .apply(&self.loss)
            .damp_coherence(self.visibility)
            .expect("visibility validated at construction")
            .apply(&self.switch)
    }

    /// The switch action this channel ends with (bit flip or identity).
    pub fn switch(&self) -> &ElementOperator {
        &self.switch
    }
}

/// Builds the composed single-cycle channel. `trapped` selects whether the
/// cycle ends with the switch holding the photon (bit flip) or releasing it
/// (identity).
pub fn cycle_channel(model: &CycleModel, trapped: bool) -> Result<CycleChannel> {
    model.validate()?;
    Ok(CycleChannel {
        storage_phase: ElementOperator::relative_phase(model.storage_phase)?,
        loss: ElementOperator::attenuator(model.loss_per_cycle)?,
        visibility: model.visibility,
        switch: if trapped {
            ElementOperator::bit_flip()
        } else {
            ElementOperator::identity()
        },
    })
}

/// Result of running a photon through `cycles` round trips and out.
#[derive(Debug, Clone)]
pub struct CycleOutcome {
    /// Exit polarization; its trace is the survival probability.
    pub state: PolarizationState,
    /// Number of completed round trips.
    pub cycles: u32,
    /// Exit time relative to first loop entry: `cycles x` the round trip
    /// ([`DEFAULT_ROUND_TRIP_NS`]).
    pub exit_time_ns: f64,
}

/// The noiseless expected output: the input bit-flipped once per trapped
/// traversal, i.e. `cycles - 1` times. Odd cycle counts return the input
/// polarization; even counts return it flipped.
pub fn ideal_output(input: &PureState, cycles: u32) -> Result<PureState> {
    if cycles == 0 {
        return Err(Error::InvalidArgument(
            "cycles must be at least 1".into(),
        ));
    }
    Ok(if (cycles - 1) % 2 == 1 {
        input.bit_flipped()
    } else {
        *input
    })
}

/// Propagates a pure input through `cycles` round trips of the composed
/// channel: `cycles - 1` trapped cycles followed by the exit cycle.
pub fn propagate(input: &PureState, cycles: u32, model: &CycleModel) -> Result<CycleOutcome> {
    if cycles == 0 {
        return Err(Error::InvalidArgument(
            "cycles must be at least 1".into(),
        ));
    }
    let trapped = cycle_channel(model, true)?;
    let exit = cycle_channel(model, false)?;
    let mut state = input.density();
    for _ in 1..cycles {
        state = trapped.apply(&state);
    }
    state = exit.apply(&state);
    Ok(CycleOutcome {
        state,
        cycles,
        exit_time_ns: f64::from(cycles) * DEFAULT_ROUND_TRIP_NS,
    })
}

/// Builds the two Sagnac traversal operators for a given cell retardation by
/// multiplying out the individual elements along both ring senses, with no
/// reference to the composed cycle channel.
///
/// Returns `(onward, returned)`: `onward` is the amplitude leaving by the far
/// port (continuing forward), `returned` the amplitude sent back out the port
/// it arrived by. With the cell off `onward` is the identity; at half-wave
/// retardation `returned` is a bit flip and `onward` vanishes.
fn sagnac_traversal(delta: f64) -> Result<(Matrix2<Complex64>, Matrix2<Complex64>)> {
    let transmit = ElementOperator::pbs_transmit();
    let reflect = ElementOperator::pbs_reflect();
    let mirror_a = ElementOperator::mirror();
    let mirror_b = ElementOperator::mirror();
    let cell = pockels_operator(delta)?;

    // Counter-clockwise branch: transmitted at the PBS, then mirror A, the
    // cell, mirror B, and back to the PBS. Clockwise runs the same elements
    // in the opposite order. Rightmost factor acts first.
    let ccw = mirror_b.matrix() * cell.matrix() * mirror_a.matrix() * transmit.matrix();
    let cw = mirror_a.matrix() * cell.matrix() * mirror_b.matrix() * reflect.matrix();

    // At the second PBS encounter each branch splits over the two exits.
    // The horizontal part of the returning counter-clockwise beam transmits
    // onward while its vertical part reflects back toward the source, and
    // vice versa for the clockwise beam.
    let onward = transmit.matrix() * ccw + reflect.matrix() * cw;
    let returned = reflect.matrix() * ccw + transmit.matrix() * cw;
    Ok((onward, returned))
}

/// Reference implementation of [`propagate`] that walks the photon element
/// by element: entry traversal, then for each cycle the loop-closing mirror,
/// the storage line's phase, loss and coherence damping, and a fresh Sagnac
/// traversal assembled from PBS projectors, mirrors and the cell operator.
///
/// Trapped traversals hold the cell at half-wave retardation; the final
/// traversal finds it off. Agrees with [`propagate`] entrywise to 1e-12.
pub fn brute_force_oracle(
    input: &PureState,
    cycles: u32,
    model: &CycleModel,
) -> Result<CycleOutcome> {
    if cycles == 0 {
        return Err(Error::InvalidArgument(
            "cycles must be at least 1".into(),
        ));
    }
    model.validate()?;

    let loop_mirror = ElementOperator::mirror();
    let storage_phase = ElementOperator::relative_phase(model.storage_phase)?;
    let attenuator = ElementOperator::attenuator(model.loss_per_cycle)?;

    // Entry traversal with the cell off: the onward port leads into the
    // storage line and passes the photon through unchanged.
    let (entry, _) = sagnac_traversal(0.0)?;
    let mut rho = input.density().apply(&ElementOperator::new(entry, "Sagnac entry")?);

    for k in 1..=cycles {
        rho = rho
            .apply(&loop_mirror)
            .apply(&storage_phase)
            .apply(&attenuator)
            .damp_coherence(model.visibility)?;
        let delta = if k < cycles { PI } else { 0.0 };
        let (onward, returned) = sagnac_traversal(delta)?;
        // While trapped, the amplitude routed back toward the storage line
        // is the survivor; on the last pass the onward port is the exit.
        let port = if k < cycles { returned } else { onward };
        rho = rho.apply(&ElementOperator::new(port, "Sagnac traversal")?);
    }

    Ok(CycleOutcome {
        state: rho,
        cycles,
        exit_time_ns: f64::from(cycles) * DEFAULT_ROUND_TRIP_NS,
    })
}

/// How a constant per-cycle storage phase shows up at the output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseErrorReport {
    /// Fidelity of the (trace-normalized) output against the noiseless
    /// expected output.
    pub fidelity: f64,
    /// Residual relative phase between horizontal and vertical at the exit,
    /// in `[0, 2*pi)`. Zero means the accumulated phase became an
    /// unobservable global phase.
    pub residual_phase: f64,
}

/// Quantifies the self-correction of storage-line phase errors.
///
/// Each trapped cycle applies `diag(1, e^{i phi})` followed by a bit flip,
/// so consecutive cycles deposit the phase on alternating amplitudes. Over
/// an even number of cycles the deposits equalize into a global phase and
/// the qubit is unharmed; an odd count leaves one uncompensated `phi` on the
/// vertical amplitude.
pub fn phase_error_report(input: &PureState, cycles: u32, phi: f64) -> Result<PhaseErrorReport> {
    if !phi.is_finite() {
        return Err(Error::InvalidArgument(
            "storage phase must be finite".into(),
        ));
    }
    let model = CycleModel {
        storage_phase: phi,
        ..CycleModel::ideal()
    };
    let outcome = propagate(input, cycles, &model)?;
    let ideal = ideal_output(input, cycles)?;
    let fidelity = outcome.state.fidelity(&ideal)?;

    // The residual phase is read off the coherence: rho_out[0,1] should
    // equal rho_ideal[0,1] rotated by e^{-i r}. States with no coherence
    // (horizontal/vertical inputs) carry no observable relative phase.
    let out_coh = outcome.state.coherence();
    let ideal_coh = ideal.density().coherence();
    let residual_phase = if out_coh.norm() < 1e-9 || ideal_coh.norm() < 1e-9 {
        0.0
    } else {
        (ideal_coh * out_coh.conj()).arg().rem_euclid(TAU)
    };
    Ok(PhaseErrorReport {
        fidelity,
        residual_phase,
    })
}

/// Convenience: the fraction of photons still present after `cycles` round
/// trips, `(1 - loss_per_cycle)^cycles`.
pub fn survival_after(cycles: u32, model: &CycleModel) -> f64 {
    (1.0 - model.loss_per_cycle).powi(cycles as i32)
}
