//! Victim/interferer coexistence simulation at IF level.
//!
//! A second FMCW transmitter with scaled ramp parameters is mixed into the
//! victim's receive chain. Wherever the instantaneous frequency difference
//! between the interferer chirp and the victim's LO chirp falls inside the
//! IF band, the mixer output picks up the difference-phase tone; outside it
//! the ideal anti-alias low-pass removes it. The six canonical scenarios
//! scale bandwidth, sweep time, and the number of overlapping ramps, and the
//! anomaly metrics quantify ghost targets and noise-floor shifts against an
//! interference-free baseline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{convert, Scalar};
use crate::waveform::{
    derive_waveform, range_doppler_map, synthesize_beat_frames, BeatFrame, PointEcho,
    RangeDopplerMap, WaveformConfig,
};

/// Width (dB below ghost peak) of the smear measurement.
pub const SMEAR_WIDTH_DB: f64 = 10.0;
/// Half-size of the square exclusion box around the victim target (bins).
pub const VICTIM_EXCLUSION_BINS: usize = 3;

/// Interfering transmitter, described relative to the victim ramp.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
#[serde(deny_unknown_fields, default)]
pub struct InterfererConfig<T: Scalar> {
    /// Interferer sweep bandwidth / victim sweep bandwidth.
    pub bandwidth_ratio: T,
    /// Interferer sweep time / victim sweep time (also scales its
    /// repetition interval).
    pub sweep_time_ratio: T,
    /// Number of victim ramps (from ramp 0) during which the interferer
    /// transmits.
    pub overlap_ramps: usize,
    /// Linear amplitude at the victim mixer.
    pub amplitude: T,
    /// Carrier frequency offset from the victim (Hz).
    pub carrier_offset: T,
    /// Transmit start time relative to the victim frame start (s).
    pub start_offset: T,
}

impl<T: Scalar> Default for InterfererConfig<T> {
    fn default() -> Self {
        Self {
            bandwidth_ratio: T::one(),
            sweep_time_ratio: T::one(),
            overlap_ramps: 32,
            amplitude: T::one(),
            carrier_offset: T::zero(),
            start_offset: T::zero(),
        }
    }
}

impl<T: Scalar> InterfererConfig<T> {
    pub fn validate(&self, prefix: &str, ramps_per_frame: usize) -> Result<()> {
        if self.bandwidth_ratio <= T::zero() {
            return Err(Error::config(format!("{prefix}.bandwidth_ratio"), "must be > 0"));
        }
        if self.sweep_time_ratio <= T::zero() {
            return Err(Error::config(format!("{prefix}.sweep_time_ratio"), "must be > 0"));
        }
        if self.overlap_ramps > ramps_per_frame {
            return Err(Error::config(
                format!("{prefix}.overlap_ramps"),
                format!("must be <= ramps_per_frame ({ramps_per_frame})"),
            ));
        }
        if self.amplitude < T::zero() {
            return Err(Error::config(format!("{prefix}.amplitude"), "must be >= 0"));
        }
        Ok(())
    }
}

/// Ghost-target and noise-floor statistics of one interference map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct AnomalyMetrics<T: Scalar> {
    /// Peak of (map - baseline) outside the victim exclusion box (dB).
    pub ghost_peak_db: T,
    /// Bins within 10 dB of the ghost peak along the range axis.
    pub ghost_range_smear_bins: usize,
    /// Same along the Doppler axis.
    pub ghost_doppler_smear_bins: usize,
    /// Median of map minus median of the baseline (dB).
    pub noise_floor_delta_db: T,
    pub ghost_range_bin: usize,
    pub ghost_doppler_bin: usize,
}

/// Mix a second FMCW transmitter into the victim's beat frame.
///
/// The victim part comes from [`synthesize_beat_frames`] with the same seed,
/// so a zero-amplitude interferer reproduces the victim-only frame
/// bit-exactly. Phase terms involve f0 * t products; use `f64` when absolute
/// phase fidelity matters.
pub fn synthesize_interference<T: Scalar>(
    victim: &WaveformConfig<T>,
    intf: &InterfererConfig<T>,
    victim_echoes: &[PointEcho<T>],
    noise_sigma: T,
    seed: u64,
) -> Result<BeatFrame<T>> {
    intf.validate("interferer", victim.ramps_per_frame)?;
    let mut frame = synthesize_beat_frames(victim, victim_echoes, noise_sigma, seed)?;
    if intf.amplitude == T::zero() || intf.overlap_ramps == 0 {
        return Ok(frame);
    }

    let derived = derive_waveform(victim)?;
    let n = derived.samples_per_chirp;
    let slope_v = derived.chirp_slope;
    let slope_i = slope_v * intf.bandwidth_ratio / intf.sweep_time_ratio;
    let chirp_i = victim.chirp_duration * intf.sweep_time_ratio;
    let rep_i = victim.chirp_interval * intf.sweep_time_ratio;
    let half_band = victim.sample_rate * convert(0.5);
    let two_pi = T::two_pi();
    let half: T = convert(0.5);

    let active_ramps = intf.overlap_ramps.min(victim.ramps_per_frame);
    for ramp in 0..active_ramps {
        let ramp_start = convert::<T>(ramp as f64) * victim.chirp_interval;
        for sample in 0..n {
            let tau_v = convert::<T>(sample as f64) / victim.sample_rate;
            let t = ramp_start + tau_v;
            let t_i = t - intf.start_offset;
            if t_i < T::zero() {
                continue;
            }
            let chirp_index = (t_i / rep_i).floor();
            let tau_i = t_i - chirp_index * rep_i;
            if tau_i >= chirp_i {
                continue; // interferer between chirps
            }
            let delta_f = intf.carrier_offset + slope_i * tau_i - slope_v * tau_v;
            if delta_f.abs() >= half_band {
                continue; // outside the ideal anti-alias low-pass
            }
            // Difference of the integrated instantaneous frequencies.
            let phase_i = two_pi
                * ((victim.center_frequency + intf.carrier_offset) * t_i
                    + half * slope_i * tau_i * tau_i);
            let phase_v =
                two_pi * (victim.center_frequency * t + half * slope_v * tau_v * tau_v);
            let psi = phase_i - phase_v;
            frame.iq[ramp * n + sample] += num_complex::Complex::new(
                intf.amplitude * psi.cos(),
                intf.amplitude * psi.sin(),
            );
        }
    }
    Ok(frame)
}

/// Interferer settings for canonical scenario `index` in 1..=6.
///
/// Ratio columns scale the victim's bandwidth and sweep time; the ramp
/// column gives the interferer/victim ramp-count ratio, realized as the
/// first `k` of the victim's ramps.
pub fn scenario_interferer<T: Scalar>(
    index: usize,
    ramps_per_frame: usize,
) -> Result<InterfererConfig<T>> {
    let (bw, sweep, ramp_num, ramp_den) = match index {
        1 => (1.0, 1.0, 1, 1),
        2 => (1.01, 1.0, 1, 1),
        3 => (1.2, 1.0, 1, 1),
        4 => (1.01, 1.0, 10, 32),
        5 => (1.0, 1.1, 1, 1),
        6 => (1.0, 1.01, 3, 32),
        _ => {
            return Err(Error::Usage(format!(
                "interference scenario must be 1..=6, got {index}"
            )))
        }
    };
    let overlap = (ramps_per_frame * ramp_num + ramp_den / 2) / ramp_den;
    Ok(InterfererConfig {
        bandwidth_ratio: convert(bw),
        sweep_time_ratio: convert(sweep),
        overlap_ramps: overlap.max(1).min(ramps_per_frame),
        amplitude: T::one(),
        carrier_offset: T::zero(),
        start_offset: T::zero(),
    })
}

/// Victim target placed in the lower-right of the map: three quarters of the
/// unambiguous range, receding at 30% of the measurable span.
pub fn default_victim_echo<T: Scalar>(cfg: &WaveformConfig<T>) -> Result<PointEcho<T>> {
    let derived = derive_waveform(cfg)?;
    Ok(PointEcho {
        range: derived.unambiguous_range * convert(0.75),
        radial_velocity: -derived.max_speed() * convert(0.6),
        amplitude: T::one(),
        phase: T::zero(),
    })
}

/// Quantify ghost and floor anomalies of `map` against `baseline`.
///
/// The ghost peak is the global maximum of (map - baseline) outside a
/// square exclusion box around the true victim target; smear counts the bins
/// within 10 dB of that peak along each axis through the peak.
pub fn measure_anomalies<T: Scalar>(
    map: &RangeDopplerMap<T>,
    baseline: &RangeDopplerMap<T>,
    victim_bins: (usize, usize),
) -> Result<AnomalyMetrics<T>> {
    if map.range_bins != baseline.range_bins || map.doppler_bins != baseline.doppler_bins {
        return Err(Error::Contract(format!(
            "map shape {}x{} does not match baseline {}x{}",
            map.range_bins, map.doppler_bins, baseline.range_bins, baseline.doppler_bins
        )));
    }
    let excluded = |r: usize, d: usize| {
        r.abs_diff(victim_bins.0) <= VICTIM_EXCLUSION_BINS
            && d.abs_diff(victim_bins.1) <= VICTIM_EXCLUSION_BINS
    };
    let diff = |r: usize, d: usize| map.db_at(r, d) - baseline.db_at(r, d);

    let mut ghost = (0usize, 0usize);
    let mut ghost_db = T::min_value().unwrap_or_else(|| convert(-1e300));
    for d in 0..map.doppler_bins {
        for r in 0..map.range_bins {
            if excluded(r, d) {
                continue;
            }
            let v = diff(r, d);
            if v > ghost_db {
                ghost_db = v;
                ghost = (r, d);
            }
        }
    }
    let width: T = convert(SMEAR_WIDTH_DB);
    let cut = ghost_db - width;
    let mut range_smear = 0usize;
    for r in 0..map.range_bins {
        if !excluded(r, ghost.1) && diff(r, ghost.1) >= cut {
            range_smear += 1;
        }
    }
    let mut doppler_smear = 0usize;
    for d in 0..map.doppler_bins {
        if !excluded(ghost.0, d) && diff(ghost.0, d) >= cut {
            doppler_smear += 1;
        }
    }
    Ok(AnomalyMetrics {
        ghost_peak_db: ghost_db,
        ghost_range_smear_bins: range_smear,
        ghost_doppler_smear_bins: doppler_smear,
        noise_floor_delta_db: map.median_db() - baseline.median_db(),
        ghost_range_bin: ghost.0,
        ghost_doppler_bin: ghost.1,
    })
}

/// Maps and metrics of one scenario run.
#[derive(Clone, Debug)]
pub struct ScenarioRun<T: Scalar> {
    pub scenario: usize,
    pub interferer: InterfererConfig<T>,
    pub map: RangeDopplerMap<T>,
    pub baseline: RangeDopplerMap<T>,
    pub metrics: AnomalyMetrics<T>,
}

/// Run canonical scenario `index`: build its interferer, synthesize victim
/// and interfered frames with the same seed, map both, and measure the
/// anomalies.
pub fn run_scenario<T: Scalar>(
    victim: &WaveformConfig<T>,
    index: usize,
    victim_echoes: &[PointEcho<T>],
    noise_sigma: T,
    seed: u64,
) -> Result<ScenarioRun<T>> {
    let interferer = scenario_interferer::<T>(index, victim.ramps_per_frame)?;
    let derived = derive_waveform(victim)?;
    let baseline_frame = synthesize_beat_frames(victim, victim_echoes, noise_sigma, seed)?;
    let baseline = range_doppler_map(victim, &baseline_frame)?;
    let frame = synthesize_interference(victim, &interferer, victim_echoes, noise_sigma, seed)?;
    let map = range_doppler_map(victim, &frame)?;
    let victim_bins = victim_echoes
        .first()
        .map(|e| crate::waveform::expected_bins(&derived, victim.ramps_per_frame, e))
        .unwrap_or((usize::MAX / 2, usize::MAX / 2));
    let metrics = measure_anomalies(&map, &baseline, victim_bins)?;
    Ok(ScenarioRun {
        scenario: index,
        interferer,
        map,
        baseline,
        metrics,
    })
}
