//! Collapse/revival detection and commensurability of level spacings.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::evolution::Signal;
use crate::error::{Error, Result};

/// Minimum number of samples accepted by the detector.
pub const MIN_SAMPLES: usize = 1000;

/// Thresholds of the collapse/revival detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorSettings {
    /// Sliding RMS window, in carrier periods.
    pub window_periods: f64,
    /// Collapse when the envelope falls below this fraction of its initial value.
    pub collapse_fraction: f64,
    /// ... for this many consecutive windows.
    pub sustain_windows: usize,
    /// Revival peaks must exceed this fraction of the initial envelope.
    pub revival_fraction: f64,
}

impl Default for DetectorSettings {
    fn default() -> Self {
        Self {
            window_periods: 2.0,
            collapse_fraction: 0.1,
            sustain_windows: 5,
            revival_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollapseRevivalReport {
    /// `None` when the signal has no oscillating component.
    pub carrier_period: Option<f64>,
    pub window_samples: usize,
    pub initial_envelope: f64,
    pub collapse_time: Option<f64>,
    pub revival_times: Vec<f64>,
    /// Sliding RMS of the mean-free signal; entry `i` covers the window
    /// starting at sample `i`.
    pub envelope: Vec<f64>,
}

impl CollapseRevivalReport {
    pub fn oscillating(&self) -> bool {
        self.carrier_period.is_some()
    }
}

fn check_grid(signal: &Signal) -> Result<f64> {
    let n = signal.len();
    if n < MIN_SAMPLES || signal.values.len() != n {
        return Err(Error::TooFewSamples {
            got: n.min(signal.values.len()),
            need: MIN_SAMPLES,
        });
    }
    let dt = (signal.times[n - 1] - signal.times[0]) / (n - 1) as f64;
    let uniform = dt > 0.0
        && signal
            .times
            .windows(2)
            .all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-9 * dt);
    if uniform {
        Ok(dt)
    } else {
        Err(Error::NonUniformGrid)
    }
}

/// Period of the strongest nonzero frequency of a mean-free signal.
pub fn dominant_period(centered: &[f64], dt: f64) -> Option<f64> {
    let n = centered.len();
    let mut buffer: Vec<Complex<f64>> = centered.iter().map(|&x| Complex::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buffer);
    let scale = centered.iter().map(|x| x.abs()).fold(0.0, f64::max) * n as f64;
    let (k, peak) = buffer[1..=n / 2]
        .iter()
        .enumerate()
        .map(|(i, z)| (i + 1, z.norm()))
        .fold((0, 0.0), |best, x| if x.1 > best.1 { x } else { best });
    if k == 0 || peak <= 1e-9 * scale || scale == 0.0 {
        None
    } else {
        Some(n as f64 * dt / k as f64)
    }
}

/// Sliding-window RMS envelope, collapse time and revival peaks.
pub fn detect_collapse_revival(signal: &Signal, settings: &DetectorSettings) -> Result<CollapseRevivalReport> {
    let dt = check_grid(signal)?;
    let n = signal.len();
    let mean = signal.values.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = signal.values.iter().map(|x| x - mean).collect();

    let Some(period) = dominant_period(&centered, dt) else {
        return Ok(CollapseRevivalReport {
            carrier_period: None,
            window_samples: 0,
            initial_envelope: 0.0,
            collapse_time: None,
            revival_times: Vec::new(),
            envelope: Vec::new(),
        });
    };

    let window = ((settings.window_periods * period / dt).round() as usize).clamp(2, n);
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for x in &centered {
        prefix.push(prefix.last().unwrap() + x * x);
    }
    let envelope: Vec<f64> = (0..=n - window)
        .map(|i| ((prefix[i + window] - prefix[i]) / window as f64).max(0.0).sqrt())
        .collect();
    let initial = envelope[0];
    let t0 = signal.times[0];

    let sustain = settings.sustain_windows * window;
    let mut run = 0;
    let mut collapse = None;
    for (i, &e) in envelope.iter().enumerate() {
        run = if e < settings.collapse_fraction * initial { run + 1 } else { 0 };
        if run >= sustain {
            collapse = Some(i + 1 - run);
            break;
        }
    }

    let mut revival_times = Vec::new();
    if let Some(start) = collapse {
        let threshold = settings.revival_fraction * initial;
        let mut i = start;
        while i < envelope.len() {
            if envelope[i] > threshold {
                let mut end = i;
                while end < envelope.len() && envelope[end] > threshold {
                    end += 1;
                }
                let peak = (i..end).fold(i, |best, k| if envelope[k] > envelope[best] { k } else { best });
                revival_times.push(t0 + peak as f64 * dt);
                i = end;
            } else {
                i += 1;
            }
        }
    }

    Ok(CollapseRevivalReport {
        carrier_period: Some(period),
        window_samples: window,
        initial_envelope: initial,
        collapse_time: collapse.map(|i| t0 + i as f64 * dt),
        revival_times,
        envelope,
    })
}

/// Closest rational approximation to a ratio of consecutive level spacings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IncommensurabilityReport {
    /// `|ratio - p/q|` for the worst pair.
    pub min_distance: f64,
    /// Index `i` of the spacing pair `(E_{i+1} - E_i, E_{i+2} - E_{i+1})`.
    pub pair: usize,
    pub ratio: f64,
    pub p: i64,
    pub q: i64,
}

/// Smallest distance of a consecutive-spacing ratio to a rational `p/q`,
/// `q <= qmax`. Energies closer than `1e-12` of the spectral scale are merged.
pub fn incommensurability_measure(energies: &[f64], qmax: u32) -> Result<IncommensurabilityReport> {
    if qmax == 0 {
        return Err(Error::InvalidInput("qmax must be positive".into()));
    }
    let mut sorted = energies.to_vec();
    sorted.sort_by(f64::total_cmp);
    let scale = sorted.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1.0);
    let mut levels: Vec<f64> = Vec::new();
    for e in sorted {
        if levels.last().is_none_or(|&last| e - last > 1e-12 * scale) {
            levels.push(e);
        }
    }
    if levels.len() < 3 {
        return Err(Error::TooFewLevels {
            got: levels.len(),
            need: 3,
        });
    }
    let spacings: Vec<f64> = levels.windows(2).map(|w| w[1] - w[0]).collect();
    let mut best: Option<IncommensurabilityReport> = None;
    for (i, pair) in spacings.windows(2).enumerate() {
        let ratio = pair[1] / pair[0];
        for q in 1..=qmax as i64 {
            let p = (ratio * q as f64).round() as i64;
            let distance = (ratio - p as f64 / q as f64).abs();
            if best.is_none_or(|b| distance < b.min_distance) {
                best = Some(IncommensurabilityReport {
                    min_distance: distance,
                    pair: i,
                    ratio,
                    p,
                    q,
                });
            }
        }
    }
    Ok(best.expect("at least one spacing pair"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::evolution::uniform_grid;

    fn sampled(tmax: f64, samples: usize, f: impl Fn(f64) -> f64) -> Signal {
        let times = uniform_grid(tmax, samples);
        let values = times.iter().map(|&t| f(t)).collect();
        Signal { times, values }
    }

    #[test]
    fn pure_sinusoid_has_no_collapse() {
        let s = sampled(200.0, 4001, |t| 3.0 + (1.3 * t).sin());
        let r = detect_collapse_revival(&s, &DetectorSettings::default()).unwrap();
        let period = r.carrier_period.unwrap();
        assert!((period - 2.0 * std::f64::consts::PI / 1.3).abs() < 0.05 * period);
        assert!((r.initial_envelope - 0.5f64.sqrt()).abs() < 0.05);
        assert_eq!(r.collapse_time, None);
        assert!(r.revival_times.is_empty());
    }

    #[test]
    fn two_tone_beating_is_not_a_collapse() {
        let s = sampled(400.0, 8001, |t| (1.0 * t).sin() + 0.8 * (2f64.sqrt() * t).sin());
        for window_periods in [2.0, 20.0] {
            let settings = DetectorSettings {
                window_periods,
                ..DetectorSettings::default()
            };
            let r = detect_collapse_revival(&s, &settings).unwrap();
            assert_eq!(r.collapse_time, None, "window {window_periods}");
        }
    }

    #[test]
    fn synthetic_collapse_and_revival() {
        // Gaussian wave packets of a carrier: on at t = 0 and around t = 60
        let s = sampled(120.0, 6001, |t| {
            let env = (-(t / 6.0).powi(2)).exp() + (-((t - 60.0) / 6.0).powi(2)).exp();
            env * (4.0 * t).cos()
        });
        let r = detect_collapse_revival(&s, &DetectorSettings::default()).unwrap();
        let collapse = r.collapse_time.unwrap();
        assert!(collapse > 3.0 && collapse < 20.0, "{collapse}");
        assert_eq!(r.revival_times.len(), 1);
        assert!((r.revival_times[0] - 60.0).abs() < 3.0);
    }

    #[test]
    fn flat_signal_has_no_oscillation() {
        let s = sampled(10.0, 1000, |_| 2.5);
        let r = detect_collapse_revival(&s, &DetectorSettings::default()).unwrap();
        assert!(!r.oscillating());
        assert!(r.envelope.is_empty());
    }

    #[test]
    fn grid_checks() {
        let s = sampled(10.0, 999, |t| t.sin());
        assert!(matches!(
            detect_collapse_revival(&s, &DetectorSettings::default()),
            Err(Error::TooFewSamples { got: 999, .. })
        ));
        let mut s = sampled(10.0, 1200, |t| t.sin());
        s.times[500] += 1e-3;
        assert_eq!(
            detect_collapse_revival(&s, &DetectorSettings::default()),
            Err(Error::NonUniformGrid)
        );
    }

    #[test]
    fn equidistant_spectrum_is_commensurate() {
        let r = incommensurability_measure(&[-1.0, 0.0, 1.0, 2.0], 8).unwrap();
        assert_eq!(r.min_distance, 0.0);
        assert_eq!((r.p, r.q), (1, 1));
        let s6 = 6f64.sqrt();
        let r = incommensurability_measure(&[s6, -s6, 0.0], 8).unwrap();
        assert!(r.min_distance < 1e-15);
    }

    #[test]
    fn needs_three_levels() {
        assert_eq!(
            incommensurability_measure(&[0.0, 1.0, 1.0 + 1e-14], 8),
            Err(Error::TooFewLevels { got: 2, need: 3 })
        );
    }

    #[test]
    fn irrational_ratio() {
        let r = incommensurability_measure(&[0.0, 1.0, 1.0 + 2f64.sqrt()], 3).unwrap();
        // sqrt(2) ~ 4/3 at q <= 3
        assert_eq!((r.p, r.q), (4, 3));
        assert!((r.min_distance - (4.0 / 3.0 - 2f64.sqrt()).abs()).abs() < 1e-15);
    }
}
