//! Unit-level checks of the state-engine operations: free evolution,
//! rotations, and the event-based emission/detection projection.

use std::collections::BTreeMap;

use timebin_core::dsl::{Angle, Detector, RotAxis};
use timebin_core::engine::{
    add_amp, apply_emission_and_detection, apply_rotation, apply_wait, Amp, JointState, Ket,
    SpinState,
};
use timebin_core::error::EngineError;
use timebin_core::phase::{ratio, FreqSymbol::*, LinearPhase, TimeExpr, TimeSymbol::*};

use SpinState::{DownE, DownG, UpE, UpG};

fn single_ket_state(ket: Ket) -> JointState {
    let mut amps = BTreeMap::new();
    add_amp(&mut amps, ket, Amp::unit()).unwrap();
    JointState::from_amps(amps)
}

fn the_amp(state: &JointState, ket: Ket) -> &Amp {
    state.amps().get(&ket).expect("ket should be populated")
}

const NO_ALPHA: (f64, f64) = (f64::NAN, f64::NAN);

#[test]
fn wait_leaves_the_dark_ket_alone() {
    let mut s = single_ket_state(Ket(DownG, DownG));
    apply_wait(&mut s, &TimeExpr::symbol(WaitT));
    let amp = the_amp(&s, Ket(DownG, DownG));
    assert!(amp.phase.is_zero());
    assert!(amp.exposure.is_zero());
}

#[test]
fn wait_accumulates_optical_and_ground_phase() {
    // |↓e↑g⟩ over T: ω₁T on the excited emitter, Δg2·T on the spectator.
    let mut s = single_ket_state(Ket(DownE, UpG));
    apply_wait(&mut s, &TimeExpr::symbol(WaitT));
    let amp = the_amp(&s, Ket(DownE, UpG));
    let expect = LinearPhase::from_terms([
        (Omega1, WaitT, ratio(1, 1)),
        (DeltaG2, WaitT, ratio(1, 1)),
    ]);
    assert_eq!(amp.phase, expect);
}

#[test]
fn wait_in_the_shelf_adds_the_excited_detuning() {
    // |↑e↑g⟩ over t₁: (ω₁+Δe1)t₁ + Δg2·t₁.
    let mut s = single_ket_state(Ket(UpE, UpG));
    apply_wait(&mut s, &TimeExpr::symbol(ShelfT1));
    let amp = the_amp(&s, Ket(UpE, UpG));
    let expect = LinearPhase::from_terms([
        (Omega1, ShelfT1, ratio(1, 1)),
        (DeltaE1, ShelfT1, ratio(1, 1)),
        (DeltaG2, ShelfT1, ratio(1, 1)),
    ]);
    assert_eq!(amp.phase, expect);
}

#[test]
fn ground_pi_flip_is_minus_i() {
    let mut s = single_ket_state(Ket(UpG, DownG));
    apply_rotation(&mut s, RotAxis::Ground, Angle::Pi, &TimeExpr::zero(), NO_ALPHA).unwrap();
    // Both emitters flip, each picking up the −i (π/2) factor.
    let amp = the_amp(&s, Ket(DownG, UpG));
    assert!((amp.mag - 1.0).abs() < 1e-15);
    assert_eq!(amp.phase, LinearPhase::pi_multiple(ratio(1, 1)));
}

#[test]
fn ground_pi_twice_is_identity_up_to_global_phase() {
    let mut s = single_ket_state(Ket(UpG, UpG));
    for _ in 0..2 {
        apply_rotation(&mut s, RotAxis::Ground, Angle::Pi, &TimeExpr::zero(), NO_ALPHA).unwrap();
    }
    let amp = the_amp(&s, Ket(UpG, UpG));
    assert!((amp.mag - 1.0).abs() < 1e-15);
    assert!(amp.phase.is_constant());
}

#[test]
fn half_pi_twice_equals_pi() {
    let mut twice = single_ket_state(Ket(UpG, UpG));
    for _ in 0..2 {
        apply_rotation(&mut twice, RotAxis::Ground, Angle::HalfPi, &TimeExpr::zero(), NO_ALPHA)
            .unwrap();
    }
    let mut once = single_ket_state(Ket(UpG, UpG));
    apply_rotation(&mut once, RotAxis::Ground, Angle::Pi, &TimeExpr::zero(), NO_ALPHA).unwrap();
    // Interference removes the stay-stay and flip-flip paths exactly.
    assert_eq!(twice.amps().len(), 1);
    let t = the_amp(&twice, Ket(DownG, DownG));
    let o = the_amp(&once, Ket(DownG, DownG));
    assert!((t.mag - o.mag).abs() < 1e-12);
}

#[test]
fn weak_pulse_and_excitation_produce_the_heralding_superposition() {
    let alpha: f64 = 0.27;
    let mut s = single_ket_state(Ket(UpG, UpG));
    let amps = ((1.0 - alpha).sqrt(), alpha.sqrt());
    apply_rotation(&mut s, RotAxis::Ground, Angle::Alpha, &TimeExpr::zero(), amps).unwrap();
    apply_rotation(&mut s, RotAxis::Optical, Angle::Pi, &TimeExpr::zero(), NO_ALPHA).unwrap();

    // Weights (1−α), √(α(1−α)), √(α(1−α)), α on ↑↑, ↓e↑, ↑↓e, ↓e↓e.
    let m = |k: Ket| the_amp(&s, k).mag;
    assert!((m(Ket(UpG, UpG)) - (1.0 - alpha)).abs() < 1e-12);
    assert!((m(Ket(DownE, UpG)) - (alpha * (1.0 - alpha)).sqrt()).abs() < 1e-12);
    assert!((m(Ket(UpG, DownE)) - (alpha * (1.0 - alpha)).sqrt()).abs() < 1e-12);
    assert!((m(Ket(DownE, DownE)) - alpha).abs() < 1e-12);
    assert!((s.norm_sq() - 1.0).abs() < 1e-12);
}

#[test]
fn optical_pulse_pair_imprints_the_drive_phase() {
    // Excite at clock 0, wait t₁, de-excite at clock t₁: the drive tone's
    // phase over the shelving window lands on the state.
    let mut s = single_ket_state(Ket(DownG, UpG));
    apply_rotation(&mut s, RotAxis::Optical, Angle::Pi, &TimeExpr::zero(), NO_ALPHA).unwrap();
    apply_wait(&mut s, &TimeExpr::symbol(ShelfT1));
    apply_rotation(
        &mut s,
        RotAxis::Optical,
        Angle::Pi,
        &TimeExpr::symbol(ShelfT1),
        NO_ALPHA,
    )
    .unwrap();
    let amp = the_amp(&s, Ket(DownG, UpG));
    assert_eq!(amp.phase.coeff(Laser1, ShelfT1), ratio(1, 1));
    assert_eq!(amp.phase.coeff(Omega1, ShelfT1), ratio(1, 1));
    assert_eq!(amp.phase.coeff(DeltaG2, ShelfT1), ratio(1, 1));
    assert_eq!(amp.phase.const_pi(), &ratio(1, 1));
}

#[test]
fn optical_pulse_rejects_other_angles() {
    let mut s = single_ket_state(Ket(DownG, DownG));
    let err = apply_rotation(&mut s, RotAxis::Optical, Angle::HalfPi, &TimeExpr::zero(), NO_ALPHA)
        .unwrap_err();
    assert_eq!(err, EngineError::OpticalAngleUnsupported);
}

#[test]
fn detection_projects_onto_the_heralded_superposition() {
    // The post-excitation superposition collapses onto the one-photon kets
    // with the photon phase and equal weights; the no-photon ket vanishes.
    let alpha: f64 = 0.1;
    let mut s = single_ket_state(Ket(UpG, UpG));
    let amps = ((1.0 - alpha).sqrt(), alpha.sqrt());
    apply_rotation(&mut s, RotAxis::Ground, Angle::Alpha, &TimeExpr::zero(), amps).unwrap();
    apply_rotation(&mut s, RotAxis::Optical, Angle::Pi, &TimeExpr::zero(), NO_ALPHA).unwrap();
    apply_emission_and_detection(&mut s, "w1", Detector::Plus, Tau).unwrap();

    assert!((s.norm_sq() - 1.0).abs() < 1e-12);
    assert!(!s.amps().contains_key(&Ket(UpG, UpG)));
    let a = the_amp(&s, Ket(DownG, UpG));
    let b = the_amp(&s, Ket(UpG, DownG));
    assert!((a.mag - b.mag).abs() < 1e-12);
    assert_eq!(a.phase.coeff(Omega1, Tau), ratio(1, 1));
    assert_eq!(a.phase.coeff(Omega1, FlightT0), ratio(-1, 1));
    assert_eq!(a.phase.coeff(Omega1, FlightDelta), ratio(1, 2));
    assert_eq!(b.phase.coeff(Omega2, Tau), ratio(1, 1));
    assert_eq!(b.phase.coeff(Omega2, FlightDelta), ratio(-1, 2));

    // The double-excitation branch survives as flagged impurity weight α.
    let c = the_amp(&s, Ket(DownG, DownG));
    assert!(c.impure);
    assert!((s.herald_impurity() - alpha).abs() < 1e-12);
    assert_eq!(s.clicks.len(), 1);
}

#[test]
fn click_with_no_excited_component_is_impossible() {
    let mut s = single_ket_state(Ket(UpG, UpG));
    let err = apply_emission_and_detection(&mut s, "w1", Detector::Plus, Tau).unwrap_err();
    assert_eq!(err, EngineError::ImpossibleHerald);
}

#[test]
fn minus_detector_marks_the_second_mode() {
    let mut s = single_ket_state(Ket(UpG, UpG));
    apply_rotation(&mut s, RotAxis::Ground, Angle::HalfPi, &TimeExpr::zero(), NO_ALPHA).unwrap();
    apply_rotation(&mut s, RotAxis::Optical, Angle::Pi, &TimeExpr::zero(), NO_ALPHA).unwrap();
    apply_emission_and_detection(&mut s, "w1", Detector::Minus, Tau).unwrap();
    assert_eq!(the_amp(&s, Ket(DownG, UpG)).det_pi, 0);
    assert_eq!(the_amp(&s, Ket(UpG, DownG)).det_pi, 1);
}
