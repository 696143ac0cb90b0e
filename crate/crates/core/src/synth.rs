//! Seeded synthetic accelerometer signals.
//!
//! Each activity is a train of Gaussian bumps repeating with a nominal period.
//! Cycle onsets are jittered independently (`k * period + U(-jitter, jitter)`),
//! so the jitter never accumulates into phase drift.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::activity::Activity;
use crate::data::{Recording, DEFAULT_SAMPLE_RATE_HZ};
use crate::error::{Error, Result};
use crate::series::TimeSeries;

const TEMPLATE_STREAM: u64 = 0x5eed_7e3f;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    /// Position inside the cycle, in samples from the onset.
    pub offset: f64,
    /// Gaussian standard deviation in samples.
    pub width: f64,
    pub amplitude: [f64; 3],
}

/// A periodic triaxial pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivitySignal {
    pub period: f64,
    pub jitter: f64,
    pub baseline: [f64; 3],
    pub bumps: Vec<Bump>,
    pub noise_sd: f64,
}

impl ActivitySignal {
    /// Noise-free value of `axis` at sample time `t` for the given onsets.
    fn clean(&self, axis: usize, t: f64, onsets: &[f64]) -> f64 {
        let mut v = self.baseline[axis];
        for &o in onsets {
            for b in &self.bumps {
                let z = (t - o - b.offset) / b.width;
                if z.abs() < 12.0 {
                    v += b.amplitude[axis] * (-0.5 * z * z).exp();
                }
            }
        }
        v
    }

    fn onsets(&self, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let cycles = (n as f64 / self.period).ceil() as i64 + 1;
        (-1..=cycles)
            .map(|c| {
                let j = if self.jitter > 0.0 {
                    rng.random_range(-self.jitter..=self.jitter)
                } else {
                    0.0
                };
                c as f64 * self.period + j
            })
            .collect()
    }

    /// `n` samples at `t = 0, 1, ...`, one array per axis.
    pub fn sample(&self, n: usize, seed: u64) -> [Vec<f64>; 3] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let onsets = self.onsets(n, &mut rng);
        let noise = Normal::new(0.0, self.noise_sd.max(0.0)).expect("finite noise sd");
        let mut out = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for i in 0..n {
            for (a, axis) in out.iter_mut().enumerate() {
                let mut v = self.clean(a, i as f64, &onsets);
                if self.noise_sd > 0.0 {
                    v += noise.sample(&mut rng);
                }
                axis[i] = v;
            }
        }
        out
    }

    pub fn recording(
        &self,
        subject_id: &str,
        label: Activity,
        n: usize,
        seed: u64,
    ) -> Result<Recording> {
        let [x, y, z] = self.sample(n, seed);
        let f = |v: Vec<f64>| v.into_iter().map(|x| x as f32).collect();
        Recording::new(subject_id, label, DEFAULT_SAMPLE_RATE_HZ, f(x), f(y), f(z))
    }

    /// Exactly `cycles` periods worth of samples.
    pub fn cycles(&self, cycles: usize, seed: u64) -> Result<[TimeSeries; 3]> {
        let n = (cycles as f64 * self.period).round() as usize;
        let [x, y, z] = self.sample(n, seed);
        Ok([
            TimeSeries::from_values(x)?,
            TimeSeries::from_values(y)?,
            TimeSeries::from_values(z)?,
        ])
    }

    /// Same pattern with every amplitude multiplied by `factor` about the baseline.
    pub fn scaled(&self, factor: f64) -> ActivitySignal {
        let mut s = self.clone();
        for b in &mut s.bumps {
            for a in &mut b.amplitude {
                *a *= factor;
            }
        }
        s
    }
}

struct Shape {
    period: f64,
    baseline: [f64; 3],
    bumps: &'static [(f64, f64, [f64; 3])],
}

fn shape(activity: Activity) -> Shape {
    match activity {
        Activity::Walking => Shape {
            period: 56.0,
            baseline: [0.5, 9.6, 1.2],
            bumps: &[(10.0, 5.0, [1.5, 3.0, 0.8]), (38.0, 5.0, [-1.2, 2.6, -0.6])],
        },
        Activity::Running => Shape {
            period: 36.0,
            baseline: [1.0, 9.0, 2.0],
            bumps: &[(8.0, 4.0, [3.5, 7.0, 2.0]), (26.0, 4.0, [-3.0, 6.0, -1.5])],
        },
        Activity::Jumping => Shape {
            period: 50.0,
            baseline: [0.8, 9.5, 1.5],
            bumps: &[(12.0, 5.0, [2.5, 9.0, 1.8]), (30.0, 7.0, [-1.5, -5.0, -1.0])],
        },
        Activity::StandingUp => Shape {
            period: 90.0,
            baseline: [1.5, 8.5, 3.5],
            bumps: &[(25.0, 9.0, [1.0, 2.5, -2.0]), (60.0, 8.0, [-0.6, -1.2, 1.0])],
        },
        Activity::SittingDown => Shape {
            period: 85.0,
            baseline: [1.5, 9.0, 2.5],
            bumps: &[(28.0, 8.0, [-1.0, -2.0, 2.0]), (62.0, 9.0, [0.7, 1.5, -1.5])],
        },
        Activity::LyingDown => Shape {
            period: 95.0,
            baseline: [2.0, 6.0, 5.0],
            bumps: &[(30.0, 10.0, [1.5, -3.0, 3.0]), (70.0, 9.0, [-1.0, 2.0, -2.0])],
        },
    }
}

/// The pattern of `activity`, with per-bump amplitudes fixed by `seed`.
///
/// Amplitudes are the nominal ones scaled by a factor in `[0.85, 1.15]`.
pub fn activity_signal(activity: Activity, seed: u64) -> ActivitySignal {
    let s = shape(activity);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ TEMPLATE_STREAM);
    let bumps = s
        .bumps
        .iter()
        .map(|&(offset, width, amp)| {
            let f: f64 = rng.random_range(0.85..1.15);
            Bump {
                offset,
                width,
                amplitude: amp.map(|a| a * f),
            }
        })
        .collect();
    ActivitySignal {
        period: s.period,
        jitter: 2.0,
        baseline: s.baseline,
        bumps,
        noise_sd: 0.1,
    }
}

/// Jump-like recording: period-50 bursts with onset jitter of 2 samples.
pub fn jump_like(seed: u64, n: usize) -> Result<Recording> {
    activity_signal(Activity::Jumping, seed).recording("synthetic", Activity::Jumping, n, seed)
}

/// `2t + 1 + sin(2 pi t / 20) + N(0, noise_sd)` at `t = 0..n`.
pub fn linear_seasonal(n: usize, noise_sd: f64, seed: u64) -> Result<TimeSeries> {
    if !(noise_sd >= 0.0 && noise_sd.is_finite()) {
        return Err(Error::InvalidArgument(format!("noise sd {noise_sd}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, noise_sd).expect("valid sd");
    let y = (0..n)
        .map(|i| {
            let t = i as f64;
            let e = if noise_sd > 0.0 { noise.sample(&mut rng) } else { 0.0 };
            2.0 * t + 1.0 + (2.0 * std::f64::consts::PI * t / 20.0).sin() + e
        })
        .collect();
    TimeSeries::from_values(y)
}
