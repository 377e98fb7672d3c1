//! Road geometry, vehicle population, and ground-truth kinematics.
//!
//! The road frame is shared by every module: the s-axis points along the
//! travel direction, the d-axis points laterally from the roadside into the
//! road, with d = 0 at the sensor line. Vehicles follow constant-velocity
//! motion on their lane centerline; there are no lane changes.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{convert, Scalar};
use crate::seeds::stream_rng;

/// Hard cap for sampled vehicle speeds: 160 km/h.
pub const MAX_SPEED_MPS: f64 = 44.4;

/// Motorway cross-section. Lane centerlines sit at
/// `offset + (i + 0.5) * lane_width` for 0-based lane index `i`, where the
/// offset is one lane width when an emergency lane is present.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
#[serde(deny_unknown_fields, default)]
pub struct RoadSpec<T: Scalar> {
    /// Simulated segment length (m).
    pub segment_length: T,
    /// Number of travel lanes (the emergency lane is extra).
    pub lane_count: usize,
    /// Lane width (m).
    pub lane_width: T,
    /// Emergency lane between the sensor line and lane 1.
    pub emergency_lane: bool,
}

impl<T: Scalar> Default for RoadSpec<T> {
    fn default() -> Self {
        Self {
            segment_length: convert(300.0),
            lane_count: 3,
            lane_width: convert(3.5),
            emergency_lane: true,
        }
    }
}

impl<T: Scalar> RoadSpec<T> {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        if self.segment_length <= T::zero() {
            return Err(Error::config(
                format!("{prefix}.segment_length"),
                "must be > 0",
            ));
        }
        if self.lane_count < 1 {
            return Err(Error::config(format!("{prefix}.lane_count"), "must be >= 1"));
        }
        if self.lane_width <= T::zero() {
            return Err(Error::config(format!("{prefix}.lane_width"), "must be > 0"));
        }
        Ok(())
    }

    /// Lateral offset of lane 1's inner edge from the sensor line.
    pub fn lane_offset(&self) -> T {
        if self.emergency_lane {
            self.lane_width
        } else {
            T::zero()
        }
    }

    /// Centerline d-coordinate of a 0-based lane index.
    pub fn lane_center(&self, lane: usize) -> T {
        self.lane_offset() + (convert::<T>(lane as f64) + convert(0.5)) * self.lane_width
    }

    /// Total paved width covered by grids (emergency lane + travel lanes).
    pub fn width(&self) -> T {
        self.lane_offset() + convert::<T>(self.lane_count as f64) * self.lane_width
    }

    /// Travel lane whose centerline is closest to `d`.
    pub fn nearest_lane(&self, d: T) -> usize {
        let mut best = 0usize;
        let mut best_dist = T::max_value().unwrap_or_else(T::one);
        for lane in 0..self.lane_count {
            let dist = (d - self.lane_center(lane)).abs();
            if dist < best_dist {
                best_dist = dist;
                best = lane;
            }
        }
        best
    }
}

/// Vehicle category, selecting footprint, height, clearance, and base RCS.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VehicleClass {
    Car,
    Truck,
    TruckWithTrailer,
}

impl VehicleClass {
    /// (length range, width, body height, ground clearance, base RCS dBsm).
    fn defaults(self) -> ((f64, f64), f64, f64, f64, f64) {
        match self {
            VehicleClass::Car => ((4.0, 5.5), 1.8, 1.5, 0.15, 10.0),
            VehicleClass::Truck => ((10.0, 14.0), 2.5, 4.0, 0.4, 30.0),
            VehicleClass::TruckWithTrailer => ((14.0, 20.0), 2.5, 4.0, 0.4, 30.0),
        }
    }
}

/// One vehicle's state inside a ground-truth frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Vehicle<T: Scalar> {
    pub id: u64,
    pub class: VehicleClass,
    /// Body length along s (m).
    pub length: T,
    /// Body width along d (m).
    pub width: T,
    /// Vertical body extent above the ground clearance (m).
    pub body_height: T,
    /// Gap between road surface and body underside (m).
    pub ground_clearance: T,
    /// Head-on radar cross section (dBsm).
    pub base_rcs: T,
    pub lane_index: usize,
    /// Longitudinal position of the body center (m).
    pub s: T,
    /// Lateral position (lane centerline, m).
    pub d: T,
    /// Ground speed along +s (m/s).
    pub speed: T,
}

impl<T: Scalar> Vehicle<T> {
    /// Build a vehicle of the given class with default dimensions.
    pub fn of_class(
        id: u64,
        class: VehicleClass,
        length: T,
        lane_index: usize,
        road: &RoadSpec<T>,
        s: T,
        speed: T,
    ) -> Self {
        let ((_, _), width, height, clearance, rcs) = class.defaults();
        Vehicle {
            id,
            class,
            length,
            width: convert(width),
            body_height: convert(height),
            ground_clearance: convert(clearance),
            base_rcs: convert(rcs),
            lane_index,
            s,
            d: road.lane_center(lane_index),
            speed,
        }
    }

    /// Plan-view footprint as (s_min, s_max, d_min, d_max).
    pub fn footprint(&self) -> (T, T, T, T) {
        let half_l = self.length * convert(0.5);
        let half_w = self.width * convert(0.5);
        (self.s - half_l, self.s + half_l, self.d - half_w, self.d + half_w)
    }

    /// Top of the body above the road surface (m).
    pub fn body_top(&self) -> T {
        self.ground_clearance + self.body_height
    }
}

/// Truncated-normal speed model (clamped to [0, 44.4] m/s).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
#[serde(deny_unknown_fields)]
pub struct SpeedModel<T: Scalar> {
    pub mean: T,
    pub sigma: T,
}

/// Poisson arrival process and vehicle mix for one lane.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
#[serde(deny_unknown_fields)]
pub struct LaneTraffic<T: Scalar> {
    /// Mean arrivals per second.
    pub arrival_rate: T,
    pub car_speed: SpeedModel<T>,
    pub truck_speed: SpeedModel<T>,
    /// Fraction of arrivals that are trucks (with or without trailer).
    pub truck_fraction: T,
    /// Fraction of trucks that tow a trailer.
    pub trailer_fraction: T,
}

/// Deterministic spawn, useful for fixtures and demos.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
#[serde(deny_unknown_fields)]
pub struct ScriptedSpawn<T: Scalar> {
    pub lane: usize,
    /// Spawn time (s); the vehicle enters at s = 0.
    pub time: T,
    pub speed: T,
    pub class: VehicleClass,
    /// Overrides the class default length when set.
    #[serde(default)]
    pub length: Option<T>,
}

/// Traffic synthesis parameters for one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
#[serde(deny_unknown_fields, default)]
pub struct TrafficScenario<T: Scalar> {
    /// One entry per travel lane.
    pub lanes: Vec<LaneTraffic<T>>,
    /// Simulated duration (s).
    pub duration: T,
    /// Frame cadence (Hz); must match the sensor measurement cycle rate.
    pub cycle_rate: T,
    /// Stream index under the global seed.
    pub seed: u64,
    /// Deterministic spawns merged with the Poisson arrivals.
    pub scripted: Vec<ScriptedSpawn<T>>,
}

impl<T: Scalar> Default for TrafficScenario<T> {
    fn default() -> Self {
        // Motorway mix: busy right lane with most of the trucks, faster and
        // emptier lanes further out.
        let lane = |rate: f64, car_mean: f64, truck_mean: f64, tf: f64| LaneTraffic {
            arrival_rate: convert(rate),
            car_speed: SpeedModel {
                mean: convert(car_mean),
                sigma: convert(2.5),
            },
            truck_speed: SpeedModel {
                mean: convert(truck_mean),
                sigma: convert(1.5),
            },
            truck_fraction: convert(tf),
            trailer_fraction: convert(0.4),
        };
        Self {
            lanes: vec![
                lane(0.25, 27.0, 22.5, 0.30),
                lane(0.18, 31.0, 24.0, 0.08),
                lane(0.10, 36.0, 25.0, 0.01),
            ],
            duration: convert(120.0),
            cycle_rate: convert(20.0),
            seed: 0,
            scripted: Vec::new(),
        }
    }
}

impl<T: Scalar> TrafficScenario<T> {
    pub fn validate(&self, prefix: &str, road: &RoadSpec<T>) -> Result<()> {
        if self.lanes.len() != road.lane_count {
            return Err(Error::config(
                format!("{prefix}.lanes"),
                format!(
                    "expected one entry per travel lane ({}), got {}",
                    road.lane_count,
                    self.lanes.len()
                ),
            ));
        }
        if self.duration < T::zero() {
            return Err(Error::config(format!("{prefix}.duration"), "must be >= 0"));
        }
        if self.cycle_rate <= T::zero() {
            return Err(Error::config(format!("{prefix}.cycle_rate"), "must be > 0"));
        }
        let max_speed: T = convert(MAX_SPEED_MPS);
        for (i, lane) in self.lanes.iter().enumerate() {
            let path = format!("{prefix}.lanes[{i}]");
            if lane.arrival_rate < T::zero() {
                return Err(Error::config(format!("{path}.arrival_rate"), "must be >= 0"));
            }
            for (name, m) in [("car_speed", &lane.car_speed), ("truck_speed", &lane.truck_speed)] {
                if m.mean < T::zero() || m.mean > max_speed {
                    return Err(Error::config(
                        format!("{path}.{name}.mean"),
                        "must be within [0, 44.4] m/s",
                    ));
                }
                if m.sigma < T::zero() {
                    return Err(Error::config(format!("{path}.{name}.sigma"), "must be >= 0"));
                }
            }
            for (name, f) in [
                ("truck_fraction", lane.truck_fraction),
                ("trailer_fraction", lane.trailer_fraction),
            ] {
                if f < T::zero() || f > T::one() {
                    return Err(Error::config(format!("{path}.{name}"), "must be in [0, 1]"));
                }
            }
        }
        for (i, sp) in self.scripted.iter().enumerate() {
            let path = format!("{prefix}.scripted[{i}]");
            if sp.lane >= road.lane_count {
                return Err(Error::config(format!("{path}.lane"), "lane index out of range"));
            }
            if sp.time < T::zero() || sp.time > self.duration {
                return Err(Error::config(
                    format!("{path}.time"),
                    "must be within [0, duration]",
                ));
            }
            if sp.speed < T::zero() || sp.speed > max_speed {
                return Err(Error::config(
                    format!("{path}.speed"),
                    "must be within [0, 44.4] m/s",
                ));
            }
        }
        Ok(())
    }
}

/// Vehicle states at one instant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct GroundTruthFrame<T: Scalar> {
    pub timestamp: T,
    pub vehicles: Vec<Vehicle<T>>,
}

/// A full run of ground-truth frames at fixed cadence.
#[derive(Clone, Debug, PartialEq)]
pub struct TrafficLog<T: Scalar> {
    pub frames: Vec<GroundTruthFrame<T>>,
    pub cycle_rate: T,
    pub duration: T,
}

impl<T: Scalar> TrafficLog<T> {
    /// Frame at time `t`: exact at frame timestamps, otherwise the nearest
    /// earlier frame. `t` outside [0, duration] is an error.
    pub fn at(&self, t: T) -> Result<&GroundTruthFrame<T>> {
        if t < T::zero() || t > self.duration {
            return Err(Error::Contract(format!(
                "ground truth query at t={} outside [0, {}]",
                t, self.duration
            )));
        }
        let idx = (t * self.cycle_rate + convert(1e-9)).floor();
        let idx = idx.to_usize().unwrap_or(0).min(self.frames.len() - 1);
        Ok(&self.frames[idx])
    }
}

struct SpawnEvent<T: Scalar> {
    time: T,
    lane: usize,
    class: VehicleClass,
    speed: T,
    length: T,
}

fn sample_truncated_normal<T: Scalar, R: Rng + ?Sized>(rng: &mut R, model: &SpeedModel<T>) -> T {
    let lo = T::zero();
    let hi: T = convert(MAX_SPEED_MPS);
    for _ in 0..64 {
        let x = model.mean + model.sigma * T::std_normal(rng);
        if x >= lo && x <= hi {
            return x;
        }
    }
    model.mean.clamp(lo, hi)
}

/// Generate the ground-truth frame sequence for a scenario.
///
/// Output is a pure function of (scenario, road): arrivals per lane are
/// Poisson with independent derived streams, vehicles move with constant
/// velocity, and vehicles are retired past the segment end.
pub fn generate_traffic<T: Scalar>(
    scenario: &TrafficScenario<T>,
    road: &RoadSpec<T>,
) -> Result<TrafficLog<T>> {
    scenario.validate("scenario", road)?;
    road.validate("road")?;

    let mut spawns: Vec<SpawnEvent<T>> = Vec::new();
    for (lane_idx, lane) in scenario.lanes.iter().enumerate() {
        if lane.arrival_rate <= T::zero() {
            continue;
        }
        let mut rng = stream_rng(scenario.seed, "scene.lane", lane_idx as u64);
        let mut t = T::zero();
        loop {
            // Exponential inter-arrival gap.
            let u: T = rng.gen_range(T::zero()..T::one());
            let gap = -(T::one() - u).ln() / lane.arrival_rate;
            t += gap;
            if t >= scenario.duration {
                break;
            }
            let class = if rng.gen_range(T::zero()..T::one()) < lane.truck_fraction {
                if rng.gen_range(T::zero()..T::one()) < lane.trailer_fraction {
                    VehicleClass::TruckWithTrailer
                } else {
                    VehicleClass::Truck
                }
            } else {
                VehicleClass::Car
            };
            let ((len_lo, len_hi), ..) = class.defaults();
            let length: T = rng.gen_range(convert(len_lo)..convert(len_hi));
            let speed_model = match class {
                VehicleClass::Car => &lane.car_speed,
                _ => &lane.truck_speed,
            };
            let speed = sample_truncated_normal(&mut rng, speed_model);
            spawns.push(SpawnEvent {
                time: t,
                lane: lane_idx,
                class,
                speed,
                length,
            });
        }
    }
    for sp in &scenario.scripted {
        let ((len_lo, len_hi), ..) = sp.class.defaults();
        let length = sp
            .length
            .unwrap_or_else(|| convert((len_lo + len_hi) * 0.5));
        spawns.push(SpawnEvent {
            time: sp.time,
            lane: sp.lane,
            class: sp.class,
            speed: sp.speed,
            length,
        });
    }
    // Stable spawn order: time, then lane. Ids follow this order.
    spawns.sort_by(|a, b| {
        a.time
            .partial_cmp(&b.time)
            .unwrap()
            .then(a.lane.cmp(&b.lane))
    });

    let n_frames = (scenario.duration * scenario.cycle_rate)
        .floor()
        .to_usize()
        .ok_or_else(|| Error::config("scenario.duration", "duration * cycle_rate overflows"))?
        + 1;
    let mut frames = Vec::with_capacity(n_frames);
    for k in 0..n_frames {
        let t = convert::<T>(k as f64) / scenario.cycle_rate;
        let mut vehicles = Vec::new();
        for (id, sp) in spawns.iter().enumerate() {
            if sp.time > t {
                continue;
            }
            let s = sp.speed * (t - sp.time);
            if s > road.segment_length {
                continue;
            }
            vehicles.push(Vehicle::of_class(
                id as u64, sp.class, sp.length, sp.lane, road, s, sp.speed,
            ));
        }
        frames.push(GroundTruthFrame { timestamp: t, vehicles });
    }
    Ok(TrafficLog {
        frames,
        cycle_rate: scenario.cycle_rate,
        duration: scenario.duration,
    })
}

/// Advance a frame by `dt` under constant-velocity motion; vehicles past the
/// segment end are retired.
pub fn propagate<T: Scalar>(
    frame: &GroundTruthFrame<T>,
    dt: T,
    segment_length: T,
) -> Result<GroundTruthFrame<T>> {
    if dt <= T::zero() {
        return Err(Error::Contract(format!("propagate dt must be > 0, got {dt}")));
    }
    let mut vehicles = Vec::with_capacity(frame.vehicles.len());
    for v in &frame.vehicles {
        let mut v = v.clone();
        v.s += v.speed * dt;
        if v.s <= segment_length {
            vehicles.push(v);
        }
    }
    Ok(GroundTruthFrame {
        timestamp: frame.timestamp + dt,
        vehicles,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet_scenario() -> TrafficScenario<f64> {
        let mut sc = TrafficScenario::<f64>::default();
        for lane in &mut sc.lanes {
            lane.arrival_rate = 0.0;
        }
        sc.duration = 2.0;
        sc
    }

    #[test]
    fn zero_rates_give_empty_frames() {
        let road = RoadSpec::default();
        let log = generate_traffic(&quiet_scenario(), &road).unwrap();
        assert_eq!(log.frames.len(), 41);
        assert!(log.frames.iter().all(|f| f.vehicles.is_empty()));
    }

    #[test]
    fn scripted_car_advances_at_constant_velocity() {
        let road = RoadSpec::default();
        let mut sc = quiet_scenario();
        sc.scripted.push(ScriptedSpawn {
            lane: 0,
            time: 0.0,
            speed: 30.0,
            class: VehicleClass::Car,
            length: None,
        });
        let log = generate_traffic(&sc, &road).unwrap();
        let frame = &log.frames[20];
        assert_eq!(frame.timestamp, 1.0);
        assert_eq!(frame.vehicles.len(), 1);
        assert!((frame.vehicles[0].s - 30.0).abs() < 1e-12);
        assert_eq!(frame.vehicles[0].d, road.lane_center(0));
    }

    #[test]
    fn seeded_runs_are_identical() {
        let road = RoadSpec::default();
        let mut sc = TrafficScenario::<f64>::default();
        sc.duration = 10.0;
        sc.seed = 42;
        let a = generate_traffic(&sc, &road).unwrap();
        let b = generate_traffic(&sc, &road).unwrap();
        assert_eq!(a, b);
        sc.seed = 43;
        let c = generate_traffic(&sc, &road).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn propagate_moves_and_retires() {
        let road = RoadSpec::<f64>::default();
        let mut frame = GroundTruthFrame {
            timestamp: 0.0,
            vehicles: vec![
                Vehicle::of_class(0, VehicleClass::Car, 4.5, 0, &road, 10.0, 20.0),
                Vehicle::of_class(1, VehicleClass::Car, 4.5, 1, &road, 299.9, 30.0),
                Vehicle::of_class(2, VehicleClass::Car, 4.5, 2, &road, 50.0, 0.0),
            ],
        };
        frame = propagate(&frame, 0.05, road.segment_length).unwrap();
        assert_eq!(frame.timestamp, 0.05);
        assert_eq!(frame.vehicles.len(), 2);
        assert!((frame.vehicles[0].s - 11.0).abs() < 1e-12);
        assert_eq!(frame.vehicles[1].s, 50.0);
        assert!(propagate(&frame, 0.0, road.segment_length).is_err());
    }

    #[test]
    fn ground_truth_lookup_prefers_earlier_frame() {
        let road = RoadSpec::default();
        let log = generate_traffic(&quiet_scenario(), &road).unwrap();
        assert_eq!(log.at(0.0).unwrap().timestamp, 0.0);
        assert_eq!(log.at(0.05).unwrap().timestamp, 0.05);
        assert_eq!(log.at(0.07).unwrap().timestamp, 0.05);
        assert!(log.at(-0.1).is_err());
        assert!(log.at(2.3).is_err());
    }

    #[test]
    fn sampled_lengths_respect_class_bounds() {
        let road = RoadSpec::default();
        let mut sc = TrafficScenario::<f64>::default();
        sc.duration = 60.0;
        sc.lanes[0].truck_fraction = 0.8;
        sc.lanes[0].trailer_fraction = 0.9;
        for seed in 0..5 {
            sc.seed = seed;
            let log = generate_traffic(&sc, &road).unwrap();
            for frame in &log.frames {
                for v in &frame.vehicles {
                    assert!(v.length >= 3.0 && v.length <= 20.0);
                    if v.class == VehicleClass::TruckWithTrailer {
                        assert!(v.length >= 14.0 && v.length <= 20.0);
                    }
                    assert!(v.speed >= 0.0 && v.speed <= MAX_SPEED_MPS);
                }
            }
        }
    }

    #[test]
    fn speeds_make_monotone_progress() {
        let road = RoadSpec::default();
        let mut sc = TrafficScenario::<f64>::default();
        sc.duration = 20.0;
        sc.seed = 7;
        let log = generate_traffic(&sc, &road).unwrap();
        for pair in log.frames.windows(2) {
            for v in &pair[1].vehicles {
                if let Some(prev) = pair[0].vehicles.iter().find(|p| p.id == v.id) {
                    if v.speed > 0.0 {
                        assert!(v.s > prev.s);
                    }
                    assert_eq!(v.d, prev.d);
                    assert_eq!(v.speed, prev.speed);
                }
            }
        }
    }

    #[test]
    fn lane_geometry() {
        let road = RoadSpec::<f64>::default();
        assert!((road.lane_center(0) - 5.25).abs() < 1e-12);
        assert!((road.lane_center(2) - 12.25).abs() < 1e-12);
        assert!((road.width() - 14.0).abs() < 1e-12);
        assert_eq!(road.nearest_lane(5.0), 0);
        assert_eq!(road.nearest_lane(13.9), 2);
    }
}
