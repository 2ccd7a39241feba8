use std::collections::BTreeMap;

use crate::dsl::{Angle, Detector, Instruction, RotAxis, Sequence};
use crate::error::EngineError;
use crate::params::{BranchOrder, EmitterPair, RunOptions};
use crate::phase::{ratio, FreqSymbol, TimeExpr, TimeSymbol};

use super::report::BellReport;
use super::state::{add_amp, Click, DecayChannel, JointState, SpinState};

fn omega(emitter: usize) -> FreqSymbol {
    [FreqSymbol::Omega1, FreqSymbol::Omega2][emitter]
}

fn laser(emitter: usize) -> FreqSymbol {
    [FreqSymbol::Laser1, FreqSymbol::Laser2][emitter]
}

fn delta_g(emitter: usize) -> FreqSymbol {
    [FreqSymbol::DeltaG1, FreqSymbol::DeltaG2][emitter]
}

fn delta_e(emitter: usize) -> FreqSymbol {
    [FreqSymbol::DeltaE1, FreqSymbol::DeltaE2][emitter]
}

/// Free evolution for a symbolic duration. Each ket gains, per emitter,
/// the phase of its level eigenfrequency over the duration: (ω+Δ_e) in |↑e⟩,
/// ω in |↓e⟩, Δ_g in |↑g⟩ and nothing in |↓g⟩. Components sitting in an
/// excited level also accumulate decay exposure at the matching rate.
pub fn apply_wait(state: &mut JointState, duration: &TimeExpr) {
    let one = ratio(1, 1);
    for (ket, amp) in state.amps_mut().iter_mut() {
        for e in 0..2 {
            match ket.get(e) {
                SpinState::UpE => {
                    amp.phase.add_freq_over(omega(e), duration, one.clone());
                    amp.phase.add_freq_over(delta_e(e), duration, one.clone());
                    amp.exposure.add(DecayChannel::Shelf, duration);
                }
                SpinState::DownE => {
                    amp.phase.add_freq_over(omega(e), duration, one.clone());
                    amp.exposure.add(DecayChannel::Bright, duration);
                }
                SpinState::UpG => {
                    amp.phase.add_freq_over(delta_g(e), duration, one.clone());
                }
                SpinState::DownG => {}
            }
        }
    }
}

/// A rotation pulse applied to both emitters in parallel.
///
/// Spin rotations mix {↑,↓} within their manifold with amplitudes
/// cos(θ/2) and −i·sin(θ/2). The optical π pulse swaps ↓g ↔ ↓e with a −i
/// factor and imprints the drive phase at the pulse time: −ω_L·t going up,
/// +ω_L·t coming down (phases as arguments of e^{−iφ}).
///
/// `alpha_amplitudes` supplies the (stay, flip) magnitudes used when the
/// angle is the weak-pulse parameter.
pub fn apply_rotation(
    state: &mut JointState,
    axis: RotAxis,
    angle: Angle,
    at_time: &TimeExpr,
    alpha_amplitudes: (f64, f64),
) -> Result<(), EngineError> {
    match axis {
        RotAxis::Optical => {
            if angle != Angle::Pi {
                return Err(EngineError::OpticalAngleUnsupported);
            }
            for e in 0..2 {
                optical_pi(state, e, at_time)?;
            }
        }
        RotAxis::Ground | RotAxis::Excited => {
            let (stay, flip) = match angle {
                Angle::Pi => (0.0, 1.0),
                Angle::HalfPi => (std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2),
                Angle::Alpha => alpha_amplitudes,
            };
            let pair = match axis {
                RotAxis::Ground => (SpinState::UpG, SpinState::DownG),
                RotAxis::Excited => (SpinState::UpE, SpinState::DownE),
                RotAxis::Optical => unreachable!(),
            };
            for e in 0..2 {
                rotate_pair(state, e, pair, stay, flip)?;
            }
        }
    }
    Ok(())
}

fn rotate_pair(
    state: &mut JointState,
    emitter: usize,
    (up, down): (SpinState, SpinState),
    stay: f64,
    flip: f64,
) -> Result<(), EngineError> {
    let mut next = BTreeMap::new();
    for (ket, amp) in state.amps() {
        let spin = ket.get(emitter);
        if spin != up && spin != down {
            add_amp(&mut next, *ket, amp.clone())?;
            continue;
        }
        let partner = if spin == up { down } else { up };
        if stay != 0.0 {
            let mut kept = amp.clone();
            kept.mag *= stay;
            add_amp(&mut next, *ket, kept)?;
        }
        if flip != 0.0 {
            let mut flipped = amp.clone();
            flipped.mag *= flip;
            flipped.phase.add_pi(ratio(1, 2));
            add_amp(&mut next, ket.with(emitter, partner), flipped)?;
        }
    }
    state.replace_amps(next);
    Ok(())
}

fn optical_pi(state: &mut JointState, emitter: usize, at_time: &TimeExpr) -> Result<(), EngineError> {
    let mut next = BTreeMap::new();
    for (ket, amp) in state.amps() {
        match ket.get(emitter) {
            SpinState::DownG => {
                let mut a = amp.clone();
                a.phase.add_pi(ratio(1, 2));
                a.phase.add_freq_over(laser(emitter), at_time, ratio(-1, 1));
                add_amp(&mut next, ket.with(emitter, SpinState::DownE), a)?;
            }
            SpinState::DownE => {
                let mut a = amp.clone();
                a.phase.add_pi(ratio(1, 2));
                a.phase.add_freq_over(laser(emitter), at_time, ratio(1, 1));
                add_amp(&mut next, ket.with(emitter, SpinState::DownG), a)?;
            }
            _ => add_amp(&mut next, *ket, amp.clone())?,
        }
    }
    state.replace_amps(next);
    Ok(())
}

/// Emission followed by a detector click at `at` (a window-relative time):
/// the event-based form of the spontaneous-emission channel, beamsplitter
/// and click projector.
///
/// Every |↓e⟩ component decays to |↓g⟩. A ket with exactly one such
/// component produced the detected photon: it picks up the photon phase
/// ω_i·τ − ω_i·(flight time of path i) and, on the minus detector, a π sign
/// when the photon came from emitter 2. Kets with no emitting component
/// cannot explain the click and are projected out; kets with two emitting
/// components are kept as loss-flagged herald impurity. The state is
/// renormalized and the click recorded.
pub fn apply_emission_and_detection(
    state: &mut JointState,
    window: &str,
    detector: Detector,
    at: TimeSymbol,
) -> Result<(), EngineError> {
    let any_excited = state
        .amps()
        .keys()
        .any(|k| k.0 == SpinState::DownE || k.1 == SpinState::DownE);
    if !any_excited {
        return Err(EngineError::ImpossibleHerald);
    }

    let mut next = BTreeMap::new();
    for (ket, amp) in state.amps() {
        let emitting: Vec<usize> = (0..2).filter(|&e| ket.get(e) == SpinState::DownE).collect();
        match emitting.len() {
            0 => {} // cannot have produced this click
            1 => {
                let e = emitting[0];
                let mut a = amp.clone();
                a.mag *= std::f64::consts::FRAC_1_SQRT_2;
                // Photon phase ω_e·τ − k_e·x_e, with the path delay written in
                // terms of the mean and differential times of flight:
                // x₁/c = T₀ − δT/2, x₂/c = T₀ + δT/2.
                a.phase.add_term(omega(e), at, ratio(1, 1));
                a.phase.add_term(omega(e), TimeSymbol::FlightT0, ratio(-1, 1));
                a.phase.add_term(
                    omega(e),
                    TimeSymbol::FlightDelta,
                    if e == 0 { ratio(1, 2) } else { ratio(-1, 2) },
                );
                if detector == Detector::Minus && e == 1 {
                    a.det_pi += 1;
                }
                add_amp(&mut next, ket.with(e, SpinState::DownG), a)?;
            }
            _ => {
                // Both emitters fired; one photon clicked, the other was lost.
                let mut a = amp.clone();
                a.impure = true;
                let mut k = *ket;
                for e in emitting {
                    k = k.with(e, SpinState::DownG);
                }
                add_amp(&mut next, k, a)?;
            }
        }
    }
    state.replace_amps(next);
    state.renormalize()?;
    state.clicks.push(Click { detector, at, window: window.to_string() });
    Ok(())
}

/// Drives a sequence over the joint state, tracking the wall-clock time of
/// each pulse as a symbolic expression (waits are scheduled from the window
/// excitation, so detection events do not advance the clock).
pub struct Runner<'a> {
    params: &'a EmitterPair,
    opts: &'a RunOptions,
    state: JointState,
    clock: TimeExpr,
}

impl<'a> Runner<'a> {
    pub fn new(params: &'a EmitterPair, opts: &'a RunOptions) -> Self {
        Runner { params, opts, state: JointState::initial(), clock: TimeExpr::zero() }
    }

    fn alpha_amplitudes(&self) -> (f64, f64) {
        let a = self.params.alpha;
        if self.opts.alpha_as_amplitude {
            ((a / 2.0).cos(), (a / 2.0).sin())
        } else {
            ((1.0 - a).sqrt(), a.sqrt())
        }
    }

    fn exec_block(&mut self, block: &[Instruction]) -> Result<(), EngineError> {
        for inst in block {
            match inst {
                Instruction::Rot { axis, angle } => {
                    let clock = self.clock.clone();
                    let alpha_amps = self.alpha_amplitudes();
                    apply_rotation(&mut self.state, *axis, *angle, &clock, alpha_amps)?;
                    self.state.assert_normalized(1e-12);
                }
                Instruction::Wait(d) => {
                    apply_wait(&mut self.state, d);
                    self.clock = self.clock.clone() + d.clone();
                }
                Instruction::Emit { .. } => {
                    // The window opens at the current clock; the paired
                    // detection consumes it.
                }
                Instruction::Detect { detector, at } => {
                    let window = self.current_window_label();
                    apply_emission_and_detection(&mut self.state, &window, *detector, *at)?;
                }
                Instruction::BranchOnOrder { second_later, first_later } => {
                    if self.state.clicks.len() < 2 {
                        return Err(EngineError::UnresolvedBranch);
                    }
                    match self.opts.assumed_order {
                        BranchOrder::SecondLater => self.exec_block(second_later)?,
                        BranchOrder::FirstLater => self.exec_block(first_later)?,
                    }
                }
            }
        }
        Ok(())
    }

    fn current_window_label(&self) -> String {
        format!("w{}", self.state.clicks.len() + 1)
    }

    pub fn finish(self) -> JointState {
        self.state
    }
}

/// Execute a sequence and report the heralded Bell pair: the two dominant
/// coherent kets, their relative phase, and its unknown residual after the
/// mean-plus-offset frequency expansion.
pub fn run(
    sequence: &Sequence,
    params: &EmitterPair,
    opts: &RunOptions,
) -> Result<(JointState, BellReport), EngineError> {
    let mut runner = Runner::new(params, opts);
    runner.exec_block(&sequence.instructions)?;
    let state = runner.finish();
    let report = BellReport::from_state(&state, params, opts)?;
    Ok((state, report))
}
