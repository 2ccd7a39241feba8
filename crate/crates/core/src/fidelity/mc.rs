use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::dsl::BuiltinSeq;
use crate::engine::{run, BellReport, DecayChannel};
use crate::error::FidelityError;
use crate::params::{BranchOrder, EmitterPair, RunOptions};
use crate::phase::{CompiledPhase, CompiledTimeExpr, FreqSymbol, TimeSymbol};

/// A Monte Carlo fidelity estimate. Bit-identical for a fixed (seed, n)
/// regardless of how samples are partitioned across workers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: u64,
    pub seed: u64,
}

/// Minimum sample count accepted by the estimator.
pub const MIN_SAMPLES: u64 = 1_000;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Monte Carlo Bell-state fidelity of a built-in protocol at acceptance
/// fraction `f_a`.
///
/// Each sample draws quasi-static frequency offsets Δ_i ~ Normal(0, (2πσ_f)²)
/// per emitter and emission times from Exp(Γ_B) truncated at the acceptance
/// window; the per-draw fidelity combines the protocol's symbolic phase
/// residual, evaluated at the draw, with the shelving survival factor from
/// its decay exposure. Sampling is counter-based: sample k reads stream k of
/// the seeded generator, so worker partitioning cannot change the result.
pub fn mc_fidelity(
    sequence: BuiltinSeq,
    params: &EmitterPair,
    opts: &RunOptions,
    f_a: f64,
    n: u64,
    seed: u64,
) -> Result<MCEstimate, FidelityError> {
    params.validate()?;
    if !(f_a > 0.0 && f_a <= 1.0) {
        return Err(FidelityError::InvalidParam(format!(
            "acceptance fraction must lie in (0, 1], got {f_a}"
        )));
    }
    if n < MIN_SAMPLES {
        return Err(FidelityError::InvalidParam(format!(
            "need at least {MIN_SAMPLES} samples, got {n}"
        )));
    }

    let sampler = Sampler::prepare(sequence, params, opts, f_a)?;

    let master = ChaCha8Rng::seed_from_u64(seed);
    let values: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|k| {
            let mut rng = master.clone();
            rng.set_stream(k.wrapping_add(1));
            sampler.draw(&mut rng)
        })
        .collect();

    let mean = kahan_sum(values.iter().copied()) / n as f64;
    let var = kahan_sum(values.iter().map(|v| {
        let d = v - mean;
        d * d
    })) / (n as f64 - 1.0);
    let stderr = (var / n as f64).sqrt();

    Ok(MCEstimate { mean, stderr, n, seed })
}

/// Order-insensitive-enough summation for deterministic two-pass statistics:
/// the values arrive in index order, so the compensated sum is reproducible.
fn kahan_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let y = v - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Everything the per-draw evaluation needs, precomputed from one symbolic
/// run per branch.
struct Sampler {
    branches: Vec<CompiledBranch>,
    two_photon: bool,
    f_a: f64,
    gamma_b: f64,
    sigma_rad: f64,
    base_freqs: [f64; FreqSymbol::COUNT],
    base_times: [f64; TimeSymbol::COUNT],
    eps: f64,
    flight_mean: f64,
}

struct CompiledBranch {
    phase: CompiledPhase,
    exposure_a: Vec<(f64, CompiledTimeExpr)>,
    exposure_b: Vec<(f64, CompiledTimeExpr)>,
}

/// Time symbols the sampler assigns per draw; a sequence whose residual or
/// exposure references anything else cannot be sampled.
const SUPPORTED_TIMES: [TimeSymbol; 10] = [
    TimeSymbol::Tau,
    TimeSymbol::Tau1,
    TimeSymbol::Tau2,
    TimeSymbol::EmitT0,
    TimeSymbol::ShelfT1,
    TimeSymbol::WaitT,
    TimeSymbol::FlightT0,
    TimeSymbol::FlightDelta,
    TimeSymbol::Eps,
    TimeSymbol::One,
];

impl Sampler {
    fn prepare(
        sequence: BuiltinSeq,
        params: &EmitterPair,
        opts: &RunOptions,
        f_a: f64,
    ) -> Result<Self, FidelityError> {
        let seq = sequence.sequence(&params.moment_ratio);
        let orders: &[BranchOrder] = if seq.has_branch() {
            &[BranchOrder::SecondLater, BranchOrder::FirstLater]
        } else {
            &[BranchOrder::SecondLater]
        };

        let mut branches = Vec::new();
        for order in orders {
            let mut o = opts.clone();
            o.assumed_order = *order;
            let (_, report) = run(&seq, params, &o)?;
            branches.push(CompiledBranch::compile(&report, params)?);
        }

        let mut base_freqs = [0.0; FreqSymbol::COUNT];
        base_freqs[FreqSymbol::OmegaBar1.index()] = params.omega_bar[0];
        base_freqs[FreqSymbol::OmegaBar2.index()] = params.omega_bar[1];
        base_freqs[FreqSymbol::Laser1.index()] = params.laser[0];
        base_freqs[FreqSymbol::Laser2.index()] = params.laser[1];
        base_freqs[FreqSymbol::DeltaG1.index()] = params.delta_g[0];
        base_freqs[FreqSymbol::DeltaG2.index()] = params.delta_g[1];
        base_freqs[FreqSymbol::DeltaE1.index()] = params.delta_e[0];
        base_freqs[FreqSymbol::DeltaE2.index()] = params.delta_e[1];

        let mut base_times = [0.0; TimeSymbol::COUNT];
        base_times[TimeSymbol::WaitT.index()] = params.wait_t;
        base_times[TimeSymbol::FlightT0.index()] = params.flight_mean();
        base_times[TimeSymbol::FlightDelta.index()] = params.flight_delta();
        base_times[TimeSymbol::Eps.index()] = params.eps;
        base_times[TimeSymbol::One.index()] = 1.0;

        Ok(Sampler {
            branches,
            two_photon: sequence.is_two_photon(),
            f_a,
            gamma_b: params.gamma_b,
            sigma_rad: TWO_PI * params.sigma_f,
            base_freqs,
            base_times,
            eps: params.eps,
            flight_mean: params.flight_mean(),
        })
    }

    /// Exponential deviate truncated at the acceptance window: the inverse
    /// CDF of Exp(Γ_B) conditioned on landing inside the window.
    fn truncated_exp(&self, u: f64) -> f64 {
        -(1.0 - u * self.f_a).ln() / self.gamma_b
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        // Fixed draw order keeps the stream layout stable.
        let g1: f64 = rng.sample(StandardNormal);
        let g2: f64 = rng.sample(StandardNormal);
        let d1 = self.sigma_rad * g1;
        let d2 = self.sigma_rad * g2;

        let mut freqs = self.base_freqs;
        freqs[FreqSymbol::Delta1.index()] = d1;
        freqs[FreqSymbol::Delta2.index()] = d2;
        freqs[FreqSymbol::Omega1.index()] = freqs[FreqSymbol::OmegaBar1.index()] + d1;
        freqs[FreqSymbol::Omega2.index()] = freqs[FreqSymbol::OmegaBar2.index()] + d2;
        freqs[FreqSymbol::Omega0.index()] =
            0.5 * (freqs[FreqSymbol::Omega1.index()] + freqs[FreqSymbol::Omega2.index()]);

        let mut times = self.base_times;
        let branch;
        if self.two_photon {
            // The acceptance window applies to the arrival-time difference,
            // which is exponentially distributed for two independent
            // emissions; the earlier arrival and the order are free.
            let u_diff: f64 = rng.random();
            let diff = self.truncated_exp(u_diff);
            let u_first: f64 = rng.random();
            let first = -(1.0 - u_first).ln() / self.gamma_b;
            let second_later: bool = rng.random();
            let (tau1, tau2) = if second_later { (first, first + diff) } else { (first + diff, first) };
            times[TimeSymbol::Tau1.index()] = tau1;
            times[TimeSymbol::Tau2.index()] = tau2;
            // Ties follow the second-later branch; both coincide there.
            branch = if second_later || diff == 0.0 { 0 } else { 1 };
        } else {
            let u: f64 = rng.random();
            let t0 = self.truncated_exp(u);
            times[TimeSymbol::EmitT0.index()] = t0;
            times[TimeSymbol::Tau.index()] = self.flight_mean + t0;
            times[TimeSymbol::ShelfT1.index()] = t0 + self.eps;
            branch = 0;
        }

        let b = &self.branches[branch.min(self.branches.len() - 1)];
        let phi = b.phase.eval(&freqs, &times);
        let ea: f64 = b.exposure_a.iter().map(|(g, d)| g * d.eval(&times)).sum();
        let eb: f64 = b.exposure_b.iter().map(|(g, d)| g * d.eval(&times)).sum();
        // Bell overlap of the partially decayed pair with the phase-corrected
        // target: ¼|e^{−E_a/2} + e^{−E_b/2} e^{iφ}|².
        0.25 * ((-ea).exp() + (-eb).exp() + 2.0 * (-0.5 * (ea + eb)).exp() * phi.cos())
    }
}

impl CompiledBranch {
    fn compile(report: &BellReport, params: &EmitterPair) -> Result<Self, FidelityError> {
        let check_time = |ts: TimeSymbol| -> Result<(), FidelityError> {
            if SUPPORTED_TIMES.contains(&ts) {
                Ok(())
            } else {
                Err(FidelityError::InvalidParam(format!(
                    "sequence references time symbol `{}` which the sampler does not assign",
                    ts.as_str()
                )))
            }
        };
        for ts in report.unknown_part.time_symbols() {
            check_time(ts)?;
        }
        let rate = |ch: DecayChannel| match ch {
            DecayChannel::Bright => params.gamma_b,
            DecayChannel::Shelf => params.gamma_a,
        };
        let compile_exposure = |exp: &crate::engine::Exposure| -> Result<Vec<_>, FidelityError> {
            let mut v = Vec::new();
            for (ch, d) in exp.iter() {
                for ts in d.symbols() {
                    check_time(ts)?;
                }
                v.push((rate(ch), CompiledTimeExpr::compile(d)));
            }
            Ok(v)
        };
        Ok(CompiledBranch {
            phase: CompiledPhase::compile(&report.unknown_part),
            exposure_a: compile_exposure(&report.exposure_a)?,
            exposure_b: compile_exposure(&report.exposure_b)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_params() -> EmitterPair {
        EmitterPair::default()
    }

    #[test]
    fn rejects_small_sample_counts() {
        let r = mc_fidelity(
            BuiltinSeq::SingleStandard,
            &base_params(),
            &RunOptions::default(),
            1.0,
            10,
            1,
        );
        assert!(matches!(r, Err(FidelityError::InvalidParam(_))));
    }

    #[test]
    fn zero_diffusion_post_selection_is_exactly_one() {
        let est = mc_fidelity(
            BuiltinSeq::SingleStandard,
            &base_params(),
            &RunOptions::default(),
            0.7,
            2_000,
            7,
        )
        .unwrap();
        assert_eq!(est.mean, 1.0);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn identical_seed_gives_identical_estimate() {
        let p = EmitterPair { sigma_f: 0.5, ..base_params() };
        let a = mc_fidelity(BuiltinSeq::SingleStandard, &p, &RunOptions::default(), 0.8, 5_000, 42)
            .unwrap();
        let b = mc_fidelity(BuiltinSeq::SingleStandard, &p, &RunOptions::default(), 0.8, 5_000, 42)
            .unwrap();
        assert_eq!(a, b);
        let c = mc_fidelity(BuiltinSeq::SingleStandard, &p, &RunOptions::default(), 0.8, 5_000, 43)
            .unwrap();
        assert_ne!(a.mean, c.mean);
    }

    #[test]
    fn worker_count_does_not_change_the_estimate() {
        let p = EmitterPair { sigma_f: 2.0, gamma_a: 0.3, ..base_params() };
        let run_with = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| {
                mc_fidelity(
                    BuiltinSeq::SingleRephaseShelved,
                    &p,
                    &RunOptions::default(),
                    0.9,
                    20_000,
                    123,
                )
                .unwrap()
            })
        };
        let single = run_with(1);
        let eight = run_with(8);
        assert_eq!(single, eight);
    }
}
