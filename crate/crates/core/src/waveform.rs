//! FMCW chirp-sequence waveform math.
//!
//! Covers the configured ramp parameters, the quantities derived from them,
//! IF beat-signal synthesis for point echoes, the 2D range-Doppler transform,
//! and simple peak extraction. Sampling is complex baseband with the
//! real-sampling range-bin convention: only the first `samples / 2` range
//! bins are kept, matching the ~128 m scale of the default configuration.

use num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{convert, Scalar};
use crate::seeds::stream_rng;
use crate::SPEED_OF_LIGHT;

/// Floor added before the dB conversion so zero bins stay finite.
pub const DB_EPSILON: f64 = 1e-12;

/// Spectral window applied per dimension before the 2D transform.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    Rectangular,
    #[default]
    Hann,
    Hamming,
}

/// FMCW chirp-sequence ramp parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
#[serde(deny_unknown_fields, default)]
pub struct WaveformConfig<T: Scalar> {
    /// Carrier center frequency f0 (Hz).
    pub center_frequency: T,
    /// Sweep bandwidth (Hz).
    pub bandwidth: T,
    /// IF sampling frequency (Hz).
    pub sample_rate: T,
    /// Chirp (ramp) duration (s).
    pub chirp_duration: T,
    /// Chirp repetition interval (s), >= chirp_duration.
    pub chirp_interval: T,
    /// Ramps per processed frame.
    pub ramps_per_frame: usize,
    /// Measurement cycle rate (Hz).
    pub cycle_rate: T,
    pub window: WindowKind,
    /// Data-sheet unambiguous range (m); deviations from the derived value
    /// are reported, not hidden.
    pub range_override: Option<T>,
    /// Data-sheet unambiguous speed span (m/s); same reporting rule.
    pub speed_override: Option<T>,
}

impl<T: Scalar> Default for WaveformConfig<T> {
    fn default() -> Self {
        Self {
            center_frequency: convert(76.5e9),
            bandwidth: convert(150.0e6),
            sample_rate: convert(12.5e6),
            chirp_duration: convert(20.48e-6),
            chirp_interval: convert(29.5e-6),
            ramps_per_frame: 32,
            cycle_rate: convert(20.0),
            window: WindowKind::Hann,
            range_override: Some(convert(127.2)),
            speed_override: Some(convert(66.56)),
        }
    }
}

impl<T: Scalar> WaveformConfig<T> {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        for (name, v) in [
            ("center_frequency", self.center_frequency),
            ("bandwidth", self.bandwidth),
            ("sample_rate", self.sample_rate),
            ("chirp_duration", self.chirp_duration),
            ("chirp_interval", self.chirp_interval),
            ("cycle_rate", self.cycle_rate),
        ] {
            if v <= T::zero() {
                return Err(Error::config(format!("{prefix}.{name}"), "must be > 0"));
            }
        }
        if self.chirp_interval < self.chirp_duration {
            return Err(Error::config(
                format!("{prefix}.chirp_interval"),
                "must be >= chirp_duration",
            ));
        }
        if self.ramps_per_frame < 1 {
            return Err(Error::config(
                format!("{prefix}.ramps_per_frame"),
                "must be >= 1",
            ));
        }
        let spc = self.sample_rate * self.chirp_duration;
        let rounded = spc.round();
        if (spc - rounded).abs() > convert::<T>(1e-6) * rounded.max(T::one()) {
            return Err(Error::config(
                format!("{prefix}.sample_rate"),
                format!("sample_rate * chirp_duration = {spc} is not an integer sample count"),
            ));
        }
        if rounded < convert(2.0) {
            return Err(Error::config(
                format!("{prefix}.sample_rate"),
                "needs at least two samples per chirp",
            ));
        }
        Ok(())
    }

    /// Sweep slope bw / t_chirp (Hz/s).
    pub fn chirp_slope(&self) -> T {
        self.bandwidth / self.chirp_duration
    }
}

/// Quantities computed from a [`WaveformConfig`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct DerivedWaveform<T: Scalar> {
    pub samples_per_chirp: usize,
    /// c / (2 bw) (m).
    pub range_resolution: T,
    /// Speed per Doppler bin (m/s).
    pub doppler_resolution: T,
    /// Max range with the beat frequency inside fs/2 (m).
    pub unambiguous_range: T,
    /// Full unambiguous speed span lambda / (2 t_rep) (m/s); measurable
    /// velocities cover +/- half of it.
    pub unambiguous_speed: T,
    /// bw / t_chirp (Hz/s).
    pub chirp_slope: T,
    pub wavelength: T,
    /// Relative deviation of the derived unambiguous range from the
    /// configured override, when one is set.
    pub range_override_deviation: Option<T>,
    /// Same for the unambiguous speed span.
    pub speed_override_deviation: Option<T>,
}

impl<T: Scalar> DerivedWaveform<T> {
    /// Half-span of measurable radial velocities (m/s).
    pub fn max_speed(&self) -> T {
        self.unambiguous_speed * convert(0.5)
    }
}

/// Compute all derived quantities from the standard chirp-sequence
/// relations, reporting deviations against any configured overrides.
pub fn derive_waveform<T: Scalar>(cfg: &WaveformConfig<T>) -> Result<DerivedWaveform<T>> {
    cfg.validate("waveform")?;
    let c: T = convert(SPEED_OF_LIGHT);
    let samples = (cfg.sample_rate * cfg.chirp_duration)
        .round()
        .to_usize()
        .expect("validated sample count");
    let slope = cfg.chirp_slope();
    let wavelength = c / cfg.center_frequency;
    let range_resolution = c / (convert::<T>(2.0) * cfg.bandwidth);
    // Beat frequency f_b = 2 R slope / c stays below fs/2.
    let unambiguous_range = c * cfg.sample_rate / (convert::<T>(4.0) * slope);
    let unambiguous_speed = wavelength / (convert::<T>(2.0) * cfg.chirp_interval);
    let doppler_resolution =
        unambiguous_speed / convert(cfg.ramps_per_frame as f64);
    let rel_dev = |derived: T, configured: T| (derived - configured).abs() / configured;
    Ok(DerivedWaveform {
        samples_per_chirp: samples,
        range_resolution,
        doppler_resolution,
        unambiguous_range,
        unambiguous_speed,
        chirp_slope: slope,
        wavelength,
        range_override_deviation: cfg.range_override.map(|r| rel_dev(unambiguous_range, r)),
        speed_override_deviation: cfg.speed_override.map(|v| rel_dev(unambiguous_speed, v)),
    })
}

/// A point reflector at IF level.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct PointEcho<T: Scalar> {
    /// Range (m), >= 0.
    pub range: T,
    /// Radial velocity (m/s), positive = receding.
    pub radial_velocity: T,
    /// Linear amplitude.
    pub amplitude: T,
    /// Initial phase (rad).
    pub phase: T,
}

/// One frame of complex IF samples, ramp-major.
#[derive(Clone, Debug, PartialEq)]
pub struct BeatFrame<T: Scalar> {
    pub ramps: usize,
    pub samples: usize,
    pub iq: Vec<Complex<T>>,
}

impl<T: Scalar> BeatFrame<T> {
    pub fn zeroed(ramps: usize, samples: usize) -> Self {
        Self {
            ramps,
            samples,
            iq: vec![Complex::new(T::zero(), T::zero()); ramps * samples],
        }
    }

    pub fn at(&self, ramp: usize, sample: usize) -> Complex<T> {
        self.iq[ramp * self.samples + sample]
    }
}

/// Synthesize the IF beat signal of a set of point echoes.
///
/// Sample (m, n) accumulates, per echo,
/// `amp * exp(j (2 pi (f_b n / fs + f_d m t_rep) + phase))` with
/// `f_b = 2 R slope / c` and `f_d = 2 v f0 / c`, plus circular complex white
/// noise of standard deviation `noise_sigma`. Deterministic per seed.
pub fn synthesize_beat_frames<T: Scalar>(
    cfg: &WaveformConfig<T>,
    echoes: &[PointEcho<T>],
    noise_sigma: T,
    seed: u64,
) -> Result<BeatFrame<T>> {
    let derived = derive_waveform(cfg)?;
    let c: T = convert(SPEED_OF_LIGHT);
    let limit = derived.unambiguous_range * convert(1.5);
    for (i, e) in echoes.iter().enumerate() {
        if e.range < T::zero() || e.range >= limit {
            return Err(Error::Contract(format!(
                "echo[{i}] range {} outside [0, {limit})",
                e.range
            )));
        }
    }
    let n = derived.samples_per_chirp;
    let m = cfg.ramps_per_frame;
    let mut frame = BeatFrame::zeroed(m, n);
    let two_pi = T::two_pi();
    for e in echoes {
        let f_b = convert::<T>(2.0) * e.range * derived.chirp_slope / c;
        let f_d = convert::<T>(2.0) * e.radial_velocity * cfg.center_frequency / c;
        for ramp in 0..m {
            let slow_phase = f_d * convert::<T>(ramp as f64) * cfg.chirp_interval;
            for sample in 0..n {
                let fast_phase = f_b * convert::<T>(sample as f64) / cfg.sample_rate;
                let phi = two_pi * (fast_phase + slow_phase) + e.phase;
                frame.iq[ramp * n + sample] +=
                    Complex::new(e.amplitude * phi.cos(), e.amplitude * phi.sin());
            }
        }
    }
    if noise_sigma > T::zero() {
        let mut rng = stream_rng(seed, "waveform.noise", 0);
        let per_axis = noise_sigma / convert(std::f64::consts::SQRT_2);
        for z in &mut frame.iq {
            *z += Complex::new(
                per_axis * T::std_normal(&mut rng),
                per_axis * T::std_normal(&mut rng),
            );
        }
    }
    Ok(frame)
}

/// Magnitude grid (dB) over range x Doppler bins with the physical axis
/// scaling. Doppler is FFT-shifted so zero velocity sits at the middle bin.
#[derive(Clone, Debug, PartialEq)]
pub struct RangeDopplerMap<T: Scalar> {
    pub range_bins: usize,
    pub doppler_bins: usize,
    /// Row-major over Doppler rows: `db[doppler * range_bins + range]`.
    pub db: Vec<T>,
    /// Meters per range bin.
    pub range_per_bin: T,
    /// Meters/second per Doppler bin.
    pub speed_per_bin: T,
}

impl<T: Scalar> RangeDopplerMap<T> {
    pub fn db_at(&self, range_bin: usize, doppler_bin: usize) -> T {
        self.db[doppler_bin * self.range_bins + range_bin]
    }

    pub fn range_of_bin(&self, range_bin: usize) -> T {
        convert::<T>(range_bin as f64) * self.range_per_bin
    }

    pub fn velocity_of_bin(&self, doppler_bin: usize) -> T {
        (convert::<T>(doppler_bin as f64) - convert((self.doppler_bins / 2) as f64))
            * self.speed_per_bin
    }

    /// Median of all dB cells.
    pub fn median_db(&self) -> T {
        let mut v = self.db.clone();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2]
        } else {
            (v[n / 2 - 1] + v[n / 2]) * convert(0.5)
        }
    }

    /// Total linear power (sum of 10^(dB/10)).
    pub fn total_power(&self) -> T {
        let ten: T = convert(10.0);
        self.db
            .iter()
            .fold(T::zero(), |acc, &d| acc + ten.powf(d / ten))
    }

    /// Bin indices of the global maximum as (range_bin, doppler_bin).
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = (0, 0);
        let mut best_v = self.db[0];
        for d in 0..self.doppler_bins {
            for r in 0..self.range_bins {
                let v = self.db_at(r, d);
                if v > best_v {
                    best_v = v;
                    best = (r, d);
                }
            }
        }
        best
    }
}

/// Window coefficients of the given length (symmetric definition).
pub fn window_coefficients<T: Scalar>(kind: WindowKind, len: usize) -> Vec<T> {
    let mut w = Vec::with_capacity(len);
    for i in 0..len {
        let x = if len > 1 {
            convert::<T>(i as f64) / convert((len - 1) as f64)
        } else {
            T::zero()
        };
        let v = match kind {
            WindowKind::Rectangular => T::one(),
            WindowKind::Hann => {
                convert::<T>(0.5) - convert::<T>(0.5) * (T::two_pi() * x).cos()
            }
            WindowKind::Hamming => {
                convert::<T>(0.54) - convert::<T>(0.46) * (T::two_pi() * x).cos()
            }
        };
        w.push(v);
    }
    w
}

/// Compute the range-Doppler map of one beat frame.
///
/// The configured window is applied per dimension, the fast-time FFT maps to
/// range (first `samples/2` bins kept), the slow-time FFT maps to Doppler
/// (shifted to center zero), and magnitudes are stored as
/// `20 log10(|X| + 1e-12)`.
pub fn range_doppler_map<T: Scalar>(
    cfg: &WaveformConfig<T>,
    frame: &BeatFrame<T>,
) -> Result<RangeDopplerMap<T>> {
    let derived = derive_waveform(cfg)?;
    if frame.samples != derived.samples_per_chirp || frame.ramps != cfg.ramps_per_frame {
        return Err(Error::Contract(format!(
            "frame shape {}x{} does not match configured {}x{}",
            frame.ramps, frame.samples, cfg.ramps_per_frame, derived.samples_per_chirp
        )));
    }
    let n = frame.samples;
    let m = frame.ramps;
    let range_bins = n / 2;
    let w_fast = window_coefficients::<T>(cfg.window, n);
    let w_slow = window_coefficients::<T>(cfg.window, m);

    let mut planner = FftPlanner::<T>::new();
    let fft_fast = planner.plan_fft_forward(n);
    let fft_slow = planner.plan_fft_forward(m);

    // Fast-time FFT per ramp.
    let mut spectra = vec![Complex::new(T::zero(), T::zero()); m * n];
    let mut row = vec![Complex::new(T::zero(), T::zero()); n];
    for ramp in 0..m {
        for sample in 0..n {
            row[sample] = frame.iq[ramp * n + sample] * (w_fast[sample] * w_slow[ramp]);
        }
        fft_fast.process(&mut row);
        spectra[ramp * n..(ramp + 1) * n].copy_from_slice(&row);
    }

    // Slow-time FFT per kept range bin, then shift zero Doppler to center.
    let eps: T = convert(DB_EPSILON);
    let twenty: T = convert(20.0);
    let mut db = vec![T::zero(); range_bins * m];
    let mut col = vec![Complex::new(T::zero(), T::zero()); m];
    let half = m / 2;
    for r in 0..range_bins {
        for ramp in 0..m {
            col[ramp] = spectra[ramp * n + r];
        }
        fft_slow.process(&mut col);
        for (jd, slot) in (0..m).map(|j| (j, (j + half) % m)) {
            let z = col[slot];
            let mag = (z.re * z.re + z.im * z.im).sqrt();
            db[jd * range_bins + r] = twenty * (mag + eps).log10();
        }
    }
    // Range per bin generalizes the resolution formula to any FFT length.
    let range_per_bin = cfg.sample_rate * convert::<T>(SPEED_OF_LIGHT) * cfg.chirp_duration
        / (convert::<T>(2.0) * cfg.bandwidth * convert(n as f64));
    Ok(RangeDopplerMap {
        range_bins,
        doppler_bins: m,
        db,
        range_per_bin,
        speed_per_bin: derived.doppler_resolution,
    })
}

/// One extracted local maximum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct Peak<T: Scalar> {
    pub range_bin: usize,
    pub doppler_bin: usize,
    pub range: T,
    pub velocity: T,
    pub magnitude_db: T,
}

/// Peak extraction result; `floor_db` is the median-of-map floor estimate.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct PeakSet<T: Scalar> {
    pub floor_db: T,
    pub peaks: Vec<Peak<T>>,
}

/// Extract 8-neighborhood local maxima at least `threshold_db` above the
/// median floor, strongest first.
pub fn extract_peaks<T: Scalar>(
    map: &RangeDopplerMap<T>,
    threshold_db: T,
) -> Result<PeakSet<T>> {
    if threshold_db <= T::zero() {
        return Err(Error::Contract(format!(
            "peak threshold must be > 0 dB, got {threshold_db}"
        )));
    }
    let floor = map.median_db();
    let cut = floor + threshold_db;
    let mut peaks = Vec::new();
    for d in 0..map.doppler_bins {
        for r in 0..map.range_bins {
            let v = map.db_at(r, d);
            if v < cut {
                continue;
            }
            let mut is_max = true;
            'nbrs: for dd in -1i64..=1 {
                for dr in -1i64..=1 {
                    if dd == 0 && dr == 0 {
                        continue;
                    }
                    let nd = d as i64 + dd;
                    let nr = r as i64 + dr;
                    if nd < 0
                        || nr < 0
                        || nd >= map.doppler_bins as i64
                        || nr >= map.range_bins as i64
                    {
                        continue;
                    }
                    if map.db_at(nr as usize, nd as usize) >= v {
                        is_max = false;
                        break 'nbrs;
                    }
                }
            }
            if is_max {
                peaks.push(Peak {
                    range_bin: r,
                    doppler_bin: d,
                    range: map.range_of_bin(r),
                    velocity: map.velocity_of_bin(d),
                    magnitude_db: v,
                });
            }
        }
    }
    peaks.sort_by(|a, b| {
        b.magnitude_db
            .partial_cmp(&a.magnitude_db)
            .unwrap()
            .then(a.range_bin.cmp(&b.range_bin))
            .then(a.doppler_bin.cmp(&b.doppler_bin))
    });
    Ok(PeakSet { floor_db: floor, peaks })
}

/// Expected map bins of an echo, including Doppler wrap-around.
pub fn expected_bins<T: Scalar>(
    derived: &DerivedWaveform<T>,
    ramps: usize,
    echo: &PointEcho<T>,
) -> (usize, usize) {
    let r_bin = (echo.range / derived.range_resolution)
        .round()
        .to_usize()
        .unwrap_or(0)
        .min(derived.samples_per_chirp / 2 - 1);
    // Wrap velocity into the centered unambiguous span.
    let span = derived.unambiguous_speed;
    let half = span * convert(0.5);
    let mut v = echo.radial_velocity;
    while v >= half {
        v -= span;
    }
    while v < -half {
        v += span;
    }
    let centered = (v / derived.doppler_resolution).round();
    let d_bin = (centered + convert((ramps / 2) as f64))
        .to_i64()
        .unwrap_or(0)
        .rem_euclid(ramps as i64) as usize;
    (r_bin, d_bin)
}
