//! Polarization states and optical-element operators in the Jones calculus.
//!
//! The computational basis is horizontal/vertical polarization. Pure states
//! are unit Jones vectors; mixed states are 2x2 density matrices whose trace
//! carries the survival probability of a possibly-lossy history, so traces
//! live in `(0, 1]` rather than being renormalized after every step.
//!
//! Angle conventions: polarization angles (`make_linear`, wave-plate axes,
//! analyzer settings) are in degrees measured from horizontal; retardations
//! and accumulated phases are in radians.

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::{Error, Result};

/// Tolerance for structural validation (hermiticity, positivity, unitarity).
pub const VALIDATION_TOL: f64 = 1e-12;

const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);
const C_ONE: Complex64 = Complex64::new(1.0, 0.0);

fn complex_is_finite(z: Complex64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

fn matrix_is_finite(m: &Matrix2<Complex64>) -> bool {
    m.iter().all(|z| complex_is_finite(*z))
}

/// A pure polarization state: a normalized Jones vector `(amp_h, amp_v)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureState {
    amp_h: Complex64,
    amp_v: Complex64,
}

impl PureState {
    /// Builds a normalized state from raw amplitudes.
    ///
    /// Errors if either amplitude is non-finite or both are (numerically)
    /// zero, since no direction can be inferred from a null vector.
    pub fn new(amp_h: Complex64, amp_v: Complex64) -> Result<Self> {
        if !complex_is_finite(amp_h) || !complex_is_finite(amp_v) {
            return Err(Error::InvalidArgument(
                "pure-state amplitudes must be finite".into(),
            ));
        }
        let norm = (amp_h.norm_sqr() + amp_v.norm_sqr()).sqrt();
        if norm < 1e-150 {
            return Err(Error::InvalidArgument(
                "pure-state amplitudes must not both be zero".into(),
            ));
        }
        Ok(Self {
            amp_h: amp_h / norm,
            amp_v: amp_v / norm,
        })
    }

    /// Horizontally polarized light, `(1, 0)`.
    pub fn horizontal() -> Self {
        Self {
            amp_h: C_ONE,
            amp_v: C_ZERO,
        }
    }

    /// Vertically polarized light, `(0, 1)`.
    pub fn vertical() -> Self {
        Self {
            amp_h: C_ZERO,
            amp_v: C_ONE,
        }
    }

    pub fn amp_h(&self) -> Complex64 {
        self.amp_h
    }

    pub fn amp_v(&self) -> Complex64 {
        self.amp_v
    }

    /// The state with horizontal and vertical amplitudes exchanged.
    pub fn bit_flipped(&self) -> Self {
        Self {
            amp_h: self.amp_v,
            amp_v: self.amp_h,
        }
    }

    /// The state with the sign of the vertical amplitude reversed.
    pub fn phase_flipped(&self) -> Self {
        Self {
            amp_h: self.amp_h,
            amp_v: -self.amp_v,
        }
    }

    /// The state with `exp(i*phi)` applied to the vertical amplitude only.
    pub fn with_relative_phase(&self, phi: f64) -> Self {
        Self {
            amp_h: self.amp_h,
            amp_v: self.amp_v * Complex64::from_polar(1.0, phi),
        }
    }

    /// Applies an element operator and renormalizes.
    ///
    /// Errors if the operator annihilates the state (e.g. a projector on the
    /// orthogonal polarization), since the result has no direction.
    pub fn apply(&self, op: &ElementOperator) -> Result<Self> {
        let m = op.matrix();
        Self::new(
            m[(0, 0)] * self.amp_h + m[(0, 1)] * self.amp_v,
            m[(1, 0)] * self.amp_h + m[(1, 1)] * self.amp_v,
        )
    }

    /// `|<self|other>|^2`; equals 1 exactly when the states match up to a
    /// global phase.
    pub fn overlap(&self, other: &PureState) -> f64 {
        let inner = self.amp_h.conj() * other.amp_h + self.amp_v.conj() * other.amp_v;
        inner.norm_sqr().min(1.0)
    }

    /// Probability of transmission through a linear analyzer at `theta_deg`.
    pub fn analyzer_probability(&self, theta_deg: f64) -> f64 {
        let (s, c) = theta_deg.to_radians().sin_cos();
        let inner = c * self.amp_h + s * self.amp_v;
        inner.norm_sqr().clamp(0.0, 1.0)
    }

    /// The rank-one density matrix `|psi><psi|` (trace exactly 1).
    pub fn density(&self) -> PolarizationState {
        let h = self.amp_h;
        let v = self.amp_v;
        PolarizationState {
            rho: Matrix2::new(
                Complex64::new(h.norm_sqr(), 0.0),
                h * v.conj(),
                v * h.conj(),
                Complex64::new(v.norm_sqr(), 0.0),
            ),
        }
    }
}

/// Linearly polarized light at `theta_deg` degrees from horizontal.
pub fn make_linear(theta_deg: f64) -> Result<PureState> {
    if !theta_deg.is_finite() {
        return Err(Error::InvalidArgument(
            "polarization angle must be finite".into(),
        ));
    }
    let (s, c) = theta_deg.to_radians().sin_cos();
    Ok(PureState {
        amp_h: Complex64::new(c, 0.0),
        amp_v: Complex64::new(s, 0.0),
    })
}

/// A single optical element as a 2x2 Jones operator with a descriptive label.
///
/// Elements are not required to be unitary: projectors (polarizing
/// beam-splitter ports) and attenuators are elements too. What distinguishes
/// an element from a composed channel is that it acts by a single
/// `M rho M^dag` conjugation.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementOperator {
    matrix: Matrix2<Complex64>,
    label: String,
}

impl ElementOperator {
    /// Wraps an arbitrary finite matrix as an element.
    pub fn new(matrix: Matrix2<Complex64>, label: impl Into<String>) -> Result<Self> {
        if !matrix_is_finite(&matrix) {
            return Err(Error::InvalidArgument(
                "element operator entries must be finite".into(),
            ));
        }
        Ok(Self {
            matrix,
            label: label.into(),
        })
    }

    /// The identity element (a lossless, non-birefringent segment).
    pub fn identity() -> Self {
        Self {
            matrix: Matrix2::identity(),
            label: "identity".into(),
        }
    }

    /// A flat mirror, polarization-neutral in this model.
    pub fn mirror() -> Self {
        Self {
            matrix: Matrix2::identity(),
            label: "mirror".into(),
        }
    }

    /// The bit-flip operator (Pauli X): exchanges horizontal and vertical.
    pub fn bit_flip() -> Self {
        Self {
            matrix: Matrix2::new(C_ZERO, C_ONE, C_ONE, C_ZERO),
            label: "bit flip".into(),
        }
    }

    /// Transmitted port of a polarizing beam splitter: projects onto
    /// horizontal.
    pub fn pbs_transmit() -> Self {
        Self {
            matrix: Matrix2::new(C_ONE, C_ZERO, C_ZERO, C_ZERO),
            label: "PBS transmit".into(),
        }
    }

    /// Reflected port of a polarizing beam splitter: projects onto vertical.
    pub fn pbs_reflect() -> Self {
        Self {
            matrix: Matrix2::new(C_ZERO, C_ZERO, C_ZERO, C_ONE),
            label: "PBS reflect".into(),
        }
    }

    /// Birefringent segment applying `diag(1, exp(i*phi))`.
    pub fn relative_phase(phi: f64) -> Result<Self> {
        if !phi.is_finite() {
            return Err(Error::InvalidArgument(
                "relative phase must be finite".into(),
            ));
        }
        Ok(Self {
            matrix: Matrix2::new(C_ONE, C_ZERO, C_ZERO, Complex64::from_polar(1.0, phi)),
            label: "relative phase".into(),
        })
    }

    /// Polarization-independent attenuator scaling amplitudes by
    /// `sqrt(1 - loss)`, so traces scale by `1 - loss`. Requires
    /// `0 <= loss < 1`.
    pub fn attenuator(loss: f64) -> Result<Self> {
        if !loss.is_finite() || !(0.0..1.0).contains(&loss) {
            return Err(Error::InvalidArgument(format!(
                "loss must lie in [0, 1), got {loss}"
            )));
        }
        let a = Complex64::new((1.0 - loss).sqrt(), 0.0);
        Ok(Self {
            matrix: Matrix2::new(a, C_ZERO, C_ZERO, a),
            label: "attenuator".into(),
        })
    }

    pub fn matrix(&self) -> &Matrix2<Complex64> {
        &self.matrix
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// True when `M^dag M = I` within `tol`.
    pub fn is_unitary(&self, tol: f64) -> bool {
        let gram = self.matrix.adjoint() * self.matrix;
        let dev = gram - Matrix2::identity();
        dev.iter().all(|z| z.norm() <= tol)
    }
}

/// Jones operator of a Pockels cell with its fast axis at 45 degrees,
/// applying retardation `delta` (radians) between its principal axes:
/// `R(45) * diag(1, exp(i*delta)) * R(-45)`, written here in the equivalent
/// half-angle form `exp(i*delta/2) * (cos(delta/2) I - i sin(delta/2) X)`.
///
/// `delta = 0` is the exact identity; `delta = pi` is a bit flip up to a
/// global phase. Requires `0 <= delta <= pi`; partial-voltage behavior between
/// these extremes is the caller's to schedule, clamping is not done here.
pub fn pockels_operator(delta: f64) -> Result<ElementOperator> {
    if !delta.is_finite() || !(0.0..=std::f64::consts::PI).contains(&delta) {
        return Err(Error::InvalidArgument(format!(
            "retardation must lie in [0, pi], got {delta}"
        )));
    }
    if delta == 0.0 {
        return Ok(ElementOperator {
            matrix: Matrix2::identity(),
            label: "Pockels cell (off)".into(),
        });
    }
    let half = delta / 2.0;
    let phase = Complex64::from_polar(1.0, half);
    let diag = phase * half.cos();
    let off = phase * Complex64::new(0.0, -half.sin());
    Ok(ElementOperator {
        matrix: Matrix2::new(diag, off, off, diag),
        label: "Pockels cell".into(),
    })
}

/// Jones operator of a half-wave plate with its fast axis at `axis_deg`
/// degrees from horizontal: `[[cos 2a, sin 2a], [sin 2a, -cos 2a]]`.
///
/// Maps linear polarization at `theta` to linear polarization at
/// `2*axis_deg - theta` (up to sign of the Jones vector).
pub fn hwp_operator(axis_deg: f64) -> Result<ElementOperator> {
    if !axis_deg.is_finite() {
        return Err(Error::InvalidArgument(
            "wave-plate axis must be finite".into(),
        ));
    }
    let (s, c) = (2.0 * axis_deg.to_radians()).sin_cos();
    Ok(ElementOperator {
        matrix: Matrix2::new(
            Complex64::new(c, 0.0),
            Complex64::new(s, 0.0),
            Complex64::new(s, 0.0),
            Complex64::new(-c, 0.0),
        ),
        label: "half-wave plate".into(),
    })
}

/// A polarization state as a 2x2 density matrix.
///
/// Invariants (enforced by [`PolarizationState::from_matrix`] and preserved
/// by every operation here): Hermitian within [`VALIDATION_TOL`], eigenvalues
/// `>= -VALIDATION_TOL`, trace in `[0, 1 + VALIDATION_TOL]`. The trace is the
/// survival probability, so lossy histories shrink it instead of being
/// renormalized away.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationState {
    rho: Matrix2<Complex64>,
}

impl PolarizationState {
    /// Wraps and validates a density matrix.
    pub fn from_matrix(rho: Matrix2<Complex64>) -> Result<Self> {
        if !matrix_is_finite(&rho) {
            return Err(Error::InvalidArgument(
                "density matrix entries must be finite".into(),
            ));
        }
        let herm_dev = (rho - rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm_dev > VALIDATION_TOL {
            return Err(Error::InvalidArgument(format!(
                "density matrix is not Hermitian (deviation {herm_dev:.3e})"
            )));
        }
        let state = Self { rho };
        let (lo, _) = state.eigenvalues();
        if lo < -VALIDATION_TOL {
            return Err(Error::InvalidArgument(format!(
                "density matrix has negative eigenvalue {lo:.3e}"
            )));
        }
        let tr = state.survival_probability();
        if !(0.0..=1.0 + VALIDATION_TOL).contains(&tr) {
            return Err(Error::InvalidArgument(format!(
                "density matrix trace {tr} outside [0, 1]"
            )));
        }
        Ok(state)
    }

    pub fn matrix(&self) -> &Matrix2<Complex64> {
        &self.rho
    }

    /// Trace of the density matrix: the probability that the photon has
    /// survived its history so far.
    pub fn survival_probability(&self) -> f64 {
        self.rho[(0, 0)].re + self.rho[(1, 1)].re
    }

    /// Off-diagonal element `rho[0,1]`, the horizontal/vertical coherence.
    pub fn coherence(&self) -> Complex64 {
        self.rho[(0, 1)]
    }

    /// Eigenvalues `(min, max)` of the Hermitian matrix, in closed form.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let a = self.rho[(0, 0)].re;
        let b = self.rho[(1, 1)].re;
        let mean = 0.5 * (a + b);
        let disc = (0.25 * (a - b) * (a - b) + self.rho[(0, 1)].norm_sqr()).sqrt();
        (mean - disc, mean + disc)
    }

    /// Conjugates by an element: `M rho M^dag`. Unitary elements preserve the
    /// trace; projectors and attenuators shrink it.
    pub fn apply(&self, op: &ElementOperator) -> Self {
        let m = op.matrix();
        Self {
            rho: m * self.rho * m.adjoint(),
        }
    }

    /// Scales the off-diagonal elements by `factor` (a phase-damping step).
    /// Requires `0 <= factor <= 1` so positivity is preserved.
    pub fn damp_coherence(&self, factor: f64) -> Result<Self> {
        if !factor.is_finite() || !(0.0..=1.0).contains(&factor) {
            return Err(Error::InvalidArgument(format!(
                "coherence damping factor must lie in [0, 1], got {factor}"
            )));
        }
        let f = Complex64::new(factor, 0.0);
        Ok(Self {
            rho: Matrix2::new(
                self.rho[(0, 0)],
                self.rho[(0, 1)] * f,
                self.rho[(1, 0)] * f,
                self.rho[(1, 1)],
            ),
        })
    }

    /// Probability that a photon in this (possibly sub-unit-trace) state
    /// passes a linear analyzer at `theta_deg`: `<theta| rho |theta>`.
    pub fn analyzer_probability(&self, theta_deg: f64) -> f64 {
        let (s, c) = theta_deg.to_radians().sin_cos();
        let p = c * c * self.rho[(0, 0)].re
            + s * s * self.rho[(1, 1)].re
            + 2.0 * c * s * self.rho[(0, 1)].re;
        p.max(0.0)
    }

    /// Fidelity against a pure target: `<psi| rho |psi> / tr(rho)`.
    ///
    /// Normalizing by the trace separates "arrived in the wrong state" from
    /// "did not arrive": loss alone leaves fidelity at 1. Errors when the
    /// trace is zero, where the conditional state is undefined.
    pub fn fidelity(&self, target: &PureState) -> Result<f64> {
        let tr = self.survival_probability();
        if tr <= 0.0 {
            return Err(Error::DegenerateState(
                "fidelity undefined for a zero-trace state".into(),
            ));
        }
        let h = target.amp_h;
        let v = target.amp_v;
        // <psi|rho|psi> for |psi> = (h, v).
        let val = (h.conj() * (self.rho[(0, 0)] * h + self.rho[(0, 1)] * v)
            + v.conj() * (self.rho[(1, 0)] * h + self.rho[(1, 1)] * v))
            .re;
        Ok((val / tr).clamp(0.0, 1.0))
    }

    /// Renormalizes to unit trace. Errors on zero trace.
    pub fn normalized(&self) -> Result<Self> {
        let tr = self.survival_probability();
        if tr <= 0.0 {
            return Err(Error::DegenerateState(
                "cannot normalize a zero-trace state".into(),
            ));
        }
        Ok(Self {
            rho: self.rho / Complex64::new(tr, 0.0),
        })
    }
}

/// True when `b = exp(i*phi) * a` for some phase, within `tol` entrywise.
pub fn operators_equal_up_to_phase(a: &ElementOperator, b: &ElementOperator, tol: f64) -> bool {
    let (ma, mb) = (a.matrix(), b.matrix());
    // Best-fit alignment phase maximizes Re(e^{-i phi} tr(a^dag b)).
    let overlap = (ma.adjoint() * mb).trace();
    let phase = if overlap.norm() > 1e-300 {
        overlap / overlap.norm()
    } else {
        C_ONE
    };
    ma.iter()
        .zip(mb.iter())
        .all(|(x, y)| (*y - phase * *x).norm() <= tol)
}

/// True when the two pure states coincide up to a global phase, i.e.
/// `1 - |<a|b>|^2 <= tol`.
pub fn states_equal_up_to_phase(a: &PureState, b: &PureState, tol: f64) -> bool {
    1.0 - a.overlap(b) <= tol
}
