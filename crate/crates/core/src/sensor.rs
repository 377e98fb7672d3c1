//! Pole-mounted sensor model: pose, field of view, 2.5D occlusion,
//! aspect-angle RCS, and noisy target-list generation.
//!
//! Each vehicle is reduced to a single scatter point at the midpoint of the
//! footprint edge facing the sensor, so opposite-facing sensors see opposite
//! ends of long vehicles. Occlusion casts the plan-view ray from the sensor
//! to the scatter point and blocks it when another footprint crosses the ray
//! at a height inside that vehicle's body slab.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{convert, Scalar};
use crate::scene::{GroundTruthFrame, Vehicle};
use crate::seeds::stream_rng;

/// Total swing of the aspect-angle RCS modulation (dB).
pub const RCS_ASPECT_SWING_DB: f64 = 30.0;

/// Which traffic direction the sensor looks at.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Facing {
    /// Boresight against travel direction (sees oncoming traffic).
    Upstream,
    /// Boresight along travel direction (sees departing traffic).
    Downstream,
}

/// Placement of one sensor on the roadside.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SensorPose<T: Scalar> {
    pub sensor_id: u32,
    /// Longitudinal pole position (m).
    pub s_position: T,
    /// Distance behind the road edge; the sensor sits at d = -lateral_offset.
    pub lateral_offset: T,
    /// Mounting height above the road surface (m).
    pub height: T,
    /// Boresight angle from the road axis toward the road (deg).
    pub yaw_deg: T,
    pub facing: Facing,
}

impl<T: Scalar> SensorPose<T> {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        if self.height <= T::zero() {
            return Err(Error::config(format!("{prefix}.height"), "must be > 0"));
        }
        if self.yaw_deg.abs() >= convert(90.0) {
            return Err(Error::config(format!("{prefix}.yaw_deg"), "must satisfy |yaw| < 90"));
        }
        Ok(())
    }

    /// Sensor position in the road frame.
    pub fn position(&self) -> (T, T) {
        (self.s_position, -self.lateral_offset)
    }

    /// Boresight direction angle in the road frame (rad, from the +s axis,
    /// counterclockwise toward +d).
    pub fn boresight_angle(&self) -> T {
        let yaw = self.yaw_deg * T::pi() / convert(180.0);
        match self.facing {
            Facing::Downstream => yaw,
            Facing::Upstream => T::pi() - yaw,
        }
    }

    /// Signed azimuth of a road-frame point in the sensor frame (deg,
    /// counterclockwise positive).
    pub fn azimuth_of(&self, point: (T, T)) -> T {
        let (s0, d0) = self.position();
        let angle = (point.1 - d0).atan2(point.0 - s0) - self.boresight_angle();
        wrap_angle(angle) * convert(180.0) / T::pi()
    }
}

/// Detection and noise properties shared by all sensors of a layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
#[serde(deny_unknown_fields, default)]
pub struct SensorModel<T: Scalar> {
    /// Total azimuth beam width (deg).
    pub azimuth_fov_deg: T,
    /// Detection range limit (m); matched to the unambiguous range when
    /// built from a waveform configuration.
    pub max_range: T,
    /// SNR of a 0 dBsm target at the reference range (dB).
    pub snr_ref_db: T,
    /// Reference range for the SNR law (m).
    pub reference_range: T,
    /// Detection threshold (dB).
    pub detection_threshold_db: T,
    pub sigma_range: T,
    pub sigma_velocity: T,
    pub sigma_azimuth_deg: T,
    /// Measurement cycle rate (Hz).
    pub cycle_rate: T,
    /// Apply the aspect-angle RCS modulation.
    pub aspect_rcs: bool,
}

impl<T: Scalar> Default for SensorModel<T> {
    fn default() -> Self {
        Self {
            azimuth_fov_deg: convert(20.0),
            max_range: convert(127.2),
            snr_ref_db: convert(17.0),
            reference_range: convert(100.0),
            detection_threshold_db: convert(12.0),
            sigma_range: convert(0.3),
            sigma_velocity: convert(0.15),
            sigma_azimuth_deg: convert(0.5),
            cycle_rate: convert(20.0),
            aspect_rcs: true,
        }
    }
}

impl<T: Scalar> SensorModel<T> {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        for (name, v) in [
            ("azimuth_fov_deg", self.azimuth_fov_deg),
            ("max_range", self.max_range),
            ("reference_range", self.reference_range),
            ("sigma_range", self.sigma_range),
            ("sigma_velocity", self.sigma_velocity),
            ("sigma_azimuth_deg", self.sigma_azimuth_deg),
            ("cycle_rate", self.cycle_rate),
        ] {
            if v <= T::zero() {
                return Err(Error::config(format!("{prefix}.{name}"), "must be > 0"));
            }
        }
        Ok(())
    }
}

/// One vehicle visible from a sensor.
#[derive(Clone, Debug, PartialEq)]
pub struct VisibleTarget<T: Scalar> {
    pub vehicle_index: usize,
    pub vehicle_id: u64,
    /// Scatter point: midpoint of the footprint edge facing the sensor.
    pub scatter: (T, T),
    pub range: T,
    pub azimuth_deg: T,
    /// Angle between the vehicle heading and the vehicle-to-sensor
    /// direction (deg); 0 = head-on illumination.
    pub aspect_deg: T,
}

/// One detection inside a target list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TargetDetection<T: Scalar> {
    pub range: T,
    /// Positive = receding.
    pub radial_velocity: T,
    pub azimuth_deg: T,
    pub snr_db: T,
    pub timestamp: T,
    pub sensor_id: u32,
}

/// The per-cycle output of one sensor.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetList<T: Scalar> {
    pub sensor_id: u32,
    pub timestamp: T,
    pub detections: Vec<TargetDetection<T>>,
}

fn wrap_angle<T: Scalar>(a: T) -> T {
    let two_pi = T::two_pi();
    let mut a = a;
    while a > T::pi() {
        a -= two_pi;
    }
    while a < -T::pi() {
        a += two_pi;
    }
    a
}

/// Height of the scatter point above the road: half the body height.
fn scatter_height<T: Scalar>(v: &Vehicle<T>) -> T {
    v.body_height * convert(0.5)
}

/// Does `occluder` block the plan-view ray from the sensor to the scatter
/// point, considering the ray height along the way?
fn blocks_ray<T: Scalar>(
    sensor: (T, T),
    sensor_height: T,
    scatter: (T, T),
    target_height: T,
    occluder: &Vehicle<T>,
) -> bool {
    let (s_min, s_max, d_min, d_max) = occluder.footprint();
    let dir = (scatter.0 - sensor.0, scatter.1 - sensor.1);
    let tiny: T = convert(1e-12);
    let mut t0 = T::zero();
    let mut t1 = T::one();
    for (p, delta, lo, hi) in [
        (sensor.0, dir.0, s_min, s_max),
        (sensor.1, dir.1, d_min, d_max),
    ] {
        if delta.abs() < tiny {
            if p < lo || p > hi {
                return false;
            }
            continue;
        }
        let mut ta = (lo - p) / delta;
        let mut tb = (hi - p) / delta;
        if ta > tb {
            std::mem::swap(&mut ta, &mut tb);
        }
        t0 = t0.max(ta);
        t1 = t1.min(tb);
        if t0 > t1 {
            return false;
        }
    }
    // The ray height is linear in t; check the height interval across the
    // crossing against the occluder's body slab.
    let h = |t: T| sensor_height + t * (target_height - sensor_height);
    let (ha, hb) = (h(t0), h(t1));
    let h_lo = ha.min(hb);
    let h_hi = ha.max(hb);
    h_hi >= occluder.ground_clearance && h_lo <= occluder.body_top()
}

/// Vehicles of a frame visible to a sensor: inside the FoV cone, within
/// range, and not occluded by any other vehicle.
pub fn visible_set<T: Scalar>(
    pose: &SensorPose<T>,
    model: &SensorModel<T>,
    frame: &GroundTruthFrame<T>,
) -> Vec<VisibleTarget<T>> {
    let sensor = pose.position();
    let half_fov = model.azimuth_fov_deg * convert(0.5);
    let mut out = Vec::new();
    for (idx, v) in frame.vehicles.iter().enumerate() {
        let half_len = v.length * convert(0.5);
        // Front edge if the sensor is ahead of the vehicle, rear edge if
        // behind.
        let edge_s = if pose.s_position >= v.s {
            v.s + half_len
        } else {
            v.s - half_len
        };
        let scatter = (edge_s, v.d);
        let delta = (scatter.0 - sensor.0, scatter.1 - sensor.1);
        let range = (delta.0 * delta.0 + delta.1 * delta.1).sqrt();
        if range <= T::zero() || range > model.max_range {
            continue;
        }
        let azimuth = pose.azimuth_of(scatter);
        if azimuth.abs() > half_fov {
            continue;
        }
        let occluded = frame.vehicles.iter().any(|w| {
            w.id != v.id
                && blocks_ray(sensor, pose.height, scatter, scatter_height(v), w)
        });
        if occluded {
            continue;
        }
        // Heading is +s; aspect measures heading vs the vehicle-to-sensor
        // direction, so 0 deg means the sensor illuminates the front.
        let to_sensor_s = -delta.0 / range;
        let aspect = to_sensor_s.clamp(-T::one(), T::one()).acos() * convert(180.0) / T::pi();
        out.push(VisibleTarget {
            vehicle_index: idx,
            vehicle_id: v.id,
            scatter,
            range,
            azimuth_deg: azimuth,
            aspect_deg: aspect,
        });
    }
    out
}

/// Aspect-angle RCS: lobed modulation with peaks head-on, broadside, and
/// tail-on, oblique minima, and a fixed 30 dB swing.
pub fn rcs_of<T: Scalar>(vehicle: &Vehicle<T>, aspect_deg: T) -> T {
    let theta = aspect_deg.clamp(T::zero(), convert(180.0)) * T::pi() / convert(180.0);
    let half_swing: T = convert(RCS_ASPECT_SWING_DB * 0.5);
    vehicle.base_rcs + half_swing * ((convert::<T>(4.0) * theta).cos() - T::one())
}

/// Deterministic SNR of a visible target.
pub fn snr_of<T: Scalar>(model: &SensorModel<T>, rcs_dbsm: T, range: T) -> T {
    model.snr_ref_db + rcs_dbsm
        - convert::<T>(40.0) * (range / model.reference_range).log10()
}

/// Generate one target list from ground truth using the caller's RNG stream.
///
/// Geometry and the SNR gate are deterministic; Gaussian noise with the
/// model sigmas is added to detected targets only, then clamped back into
/// the FoV and range limits.
pub fn generate_target_list_with<T: Scalar, R: rand::Rng + ?Sized>(
    pose: &SensorPose<T>,
    model: &SensorModel<T>,
    frame: &GroundTruthFrame<T>,
    rng: &mut R,
) -> TargetList<T> {
    let sensor = pose.position();
    let half_fov = model.azimuth_fov_deg * convert(0.5);
    let mut detections = Vec::new();
    for vt in visible_set(pose, model, frame) {
        let v = &frame.vehicles[vt.vehicle_index];
        let radial = v.speed * (vt.scatter.0 - sensor.0) / vt.range;
        let rcs = if model.aspect_rcs {
            rcs_of(v, vt.aspect_deg)
        } else {
            v.base_rcs
        };
        let snr = snr_of(model, rcs, vt.range);
        if snr < model.detection_threshold_db {
            continue;
        }
        let range = (vt.range + model.sigma_range * T::std_normal(rng))
            .clamp(T::zero(), model.max_range);
        let velocity = radial + model.sigma_velocity * T::std_normal(rng);
        let azimuth = (vt.azimuth_deg + model.sigma_azimuth_deg * T::std_normal(rng))
            .clamp(-half_fov, half_fov);
        detections.push(TargetDetection {
            range,
            radial_velocity: velocity,
            azimuth_deg: azimuth,
            snr_db: snr,
            timestamp: frame.timestamp,
            sensor_id: pose.sensor_id,
        });
    }
    TargetList {
        sensor_id: pose.sensor_id,
        timestamp: frame.timestamp,
        detections,
    }
}

/// Seeded convenience wrapper around [`generate_target_list_with`].
pub fn generate_target_list<T: Scalar>(
    pose: &SensorPose<T>,
    model: &SensorModel<T>,
    frame: &GroundTruthFrame<T>,
    seed: u64,
) -> TargetList<T> {
    let mut rng = stream_rng(seed, "sensor.noise", u64::from(pose.sensor_id));
    generate_target_list_with(pose, model, frame, &mut rng)
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "")]
struct TargetRecord<T: Scalar> {
    r: T,
    vr: T,
    az: T,
    snr: T,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "")]
#[serde(deny_unknown_fields)]
struct TargetListRecord<T: Scalar> {
    sensor: u32,
    t: T,
    targets: Vec<TargetRecord<T>>,
}

/// Encode a target list as one newline-terminated JSON record.
pub fn encode_target_list<T: Scalar>(list: &TargetList<T>) -> String {
    let record = TargetListRecord {
        sensor: list.sensor_id,
        t: list.timestamp,
        targets: list
            .detections
            .iter()
            .map(|d| TargetRecord {
                r: d.range,
                vr: d.radial_velocity,
                az: d.azimuth_deg,
                snr: d.snr_db,
            })
            .collect(),
    };
    let mut line = serde_json::to_string(&record).expect("target list serializes");
    line.push('\n');
    line
}

/// Decode one target-list record line.
pub fn decode_target_list<T: Scalar>(line: &str) -> Result<TargetList<T>> {
    let record: TargetListRecord<T> =
        serde_json::from_str(line.trim_end()).map_err(|e| Error::Parse {
            line: 0,
            message: e.to_string(),
        })?;
    let detections = record
        .targets
        .into_iter()
        .map(|t| TargetDetection {
            range: t.r,
            radial_velocity: t.vr,
            azimuth_deg: t.az,
            snr_db: t.snr,
            timestamp: record.t,
            sensor_id: record.sensor,
        })
        .collect();
    Ok(TargetList {
        sensor_id: record.sensor,
        timestamp: record.t,
        detections,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{RoadSpec, VehicleClass};

    fn road() -> RoadSpec<f64> {
        RoadSpec::default()
    }

    fn pose_at(s: f64, facing: Facing) -> SensorPose<f64> {
        SensorPose {
            sensor_id: 0,
            s_position: s,
            lateral_offset: 0.0,
            height: 1.3,
            yaw_deg: 15.0,
            facing,
        }
    }

    fn car(id: u64, lane: usize, s: f64, speed: f64) -> Vehicle<f64> {
        Vehicle::of_class(id, VehicleClass::Car, 4.5, lane, &road(), s, speed)
    }

    fn truck(id: u64, lane: usize, s: f64) -> Vehicle<f64> {
        Vehicle::of_class(id, VehicleClass::Truck, 14.0, lane, &road(), s, 22.0)
    }

    fn frame(vehicles: Vec<Vehicle<f64>>) -> GroundTruthFrame<f64> {
        GroundTruthFrame { timestamp: 0.0, vehicles }
    }

    #[test]
    fn empty_frame_sees_nothing() {
        let model = SensorModel::default();
        let pose = pose_at(0.0, Facing::Downstream);
        assert!(visible_set(&pose, &model, &frame(vec![])).is_empty());
    }

    #[test]
    fn truck_on_the_ray_occludes_the_car_behind_it() {
        // Sensor looks downstream from s=0; a lane-1 car sits at 50 m where
        // the ray to it crosses ~25 m at about half the lateral offset.
        let model = SensorModel {
            azimuth_fov_deg: 40.0,
            ..SensorModel::default()
        };
        let pose = pose_at(0.0, Facing::Downstream);
        let target = car(1, 0, 50.0, 30.0);
        let clear = visible_set(&pose, &model, &frame(vec![target.clone()]));
        assert_eq!(clear.len(), 1);
        assert!((clear[0].scatter.0 - 47.75).abs() < 1e-9); // front edge

        // Place a truck footprint straight on the ray at ~25 m.
        let mut occluder = truck(2, 0, 25.0);
        occluder.d = clear[0].scatter.1 * 25.0 / clear[0].scatter.0;
        let seen = visible_set(&pose, &model, &frame(vec![target, occluder]));
        assert!(seen.iter().all(|t| t.vehicle_id != 1));
        assert!(seen.iter().any(|t| t.vehicle_id == 2));
    }

    #[test]
    fn occlusion_asymmetry_swapping_positions_unblocks() {
        let model = SensorModel {
            azimuth_fov_deg: 40.0,
            ..SensorModel::default()
        };
        let pose = pose_at(0.0, Facing::Downstream);
        let mut near_truck = truck(2, 0, 25.0);
        let far_car = car(1, 0, 50.0, 30.0);
        near_truck.d = far_car.d * 25.0 / 48.0;
        let blocked = visible_set(&pose, &model, &frame(vec![far_car, near_truck]));
        assert!(blocked.iter().all(|t| t.vehicle_id != 1));

        // Swap: the car is now in front of the truck, ray to the car clear.
        let near_car = car(1, 0, 25.0, 30.0);
        let far_truck = truck(2, 0, 50.0);
        let swapped = visible_set(&pose, &model, &frame(vec![near_car, far_truck]));
        assert!(swapped.iter().any(|t| t.vehicle_id == 1));
    }

    #[test]
    fn high_clearance_lets_the_ray_pass_underneath() {
        let model = SensorModel {
            azimuth_fov_deg: 40.0,
            ..SensorModel::default()
        };
        let pose = pose_at(0.0, Facing::Downstream);
        let target = car(1, 0, 50.0, 30.0);
        let scatter_d = 5.25 * 1.0; // lane-1 centerline
        let mut occluder = truck(2, 0, 25.0);
        occluder.d = scatter_d * 25.0 / 47.75;

        // Clearance 0.4, body top 4.4: the descending ray (1.3 -> 0.75)
        // crosses inside the slab and blocks.
        let blocked = visible_set(&pose, &model, &frame(vec![target.clone(), occluder.clone()]));
        assert!(blocked.iter().all(|t| t.vehicle_id != 1));

        // Clearance 1.5: the ray passes underneath the raised body.
        occluder.ground_clearance = 1.5;
        let open = visible_set(&pose, &model, &frame(vec![target, occluder]));
        assert!(open.iter().any(|t| t.vehicle_id == 1));
    }

    #[test]
    fn aspect_modulation_swings_exactly_30_db() {
        let v = car(0, 0, 10.0, 20.0);
        assert_eq!(rcs_of(&v, 0.0), v.base_rcs);
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for i in 0..=1800 {
            let r = rcs_of(&v, i as f64 * 0.1);
            min = min.min(r);
            max = max.max(r);
        }
        assert!((max - min - RCS_ASPECT_SWING_DB).abs() < 1e-9);
        assert!(rcs_of(&v, 45.0) < rcs_of(&v, 90.0));
        assert!((rcs_of(&v, 90.0) - v.base_rcs).abs() < 1e-9);
    }

    #[test]
    fn radial_velocity_is_the_line_of_sight_projection() {
        // 30 m/s along the road seen under a 15 deg line of sight.
        let model = SensorModel {
            sigma_range: 1e-12,
            sigma_velocity: 1e-12,
            sigma_azimuth_deg: 1e-12,
            detection_threshold_db: -1e9,
            ..SensorModel::default()
        };
        let pose = pose_at(0.0, Facing::Downstream);
        let mut v = car(0, 0, 0.0, 30.0);
        // Put the scatter point (rear edge, sensor behind) exactly at 15 deg
        // from the road axis.
        let d = 5.25f64;
        let s_edge = d / (15f64.to_radians().tan());
        v.s = s_edge + v.length / 2.0;
        v.d = d;
        let list = generate_target_list(&pose, &model, &frame(vec![v]), 1);
        assert_eq!(list.detections.len(), 1);
        let expected = 30.0 * 15f64.to_radians().cos();
        assert!((expected - 28.977_774_788_672_046).abs() < 1e-9);
        assert!((list.detections[0].radial_velocity - expected).abs() < 1e-6);
    }

    #[test]
    fn noise_free_limit_reports_exact_geometry() {
        let model = SensorModel {
            sigma_range: 1e-12,
            sigma_velocity: 1e-12,
            sigma_azimuth_deg: 1e-12,
            detection_threshold_db: -1e9,
            ..SensorModel::default()
        };
        let pose = pose_at(0.0, Facing::Downstream);
        let v = car(0, 0, 40.0, 25.0);
        let vis = visible_set(&pose, &model, &frame(vec![v.clone()]));
        let list = generate_target_list(&pose, &model, &frame(vec![v]), 1);
        assert_eq!(list.detections.len(), 1);
        assert!((list.detections[0].range - vis[0].range).abs() < 1e-9);
        assert!((list.detections[0].azimuth_deg - vis[0].azimuth_deg).abs() < 1e-9);
    }

    #[test]
    fn detections_never_leave_fov_or_range_for_any_seed() {
        let model = SensorModel {
            sigma_range: 5.0,
            sigma_azimuth_deg: 5.0,
            ..SensorModel::default()
        };
        let pose = pose_at(60.0, Facing::Upstream);
        let f = frame(vec![car(0, 0, 10.0, 30.0), car(1, 1, 30.0, 28.0), truck(2, 0, 45.0)]);
        for seed in 0..200 {
            let list = generate_target_list(&pose, &model, &f, seed);
            for det in &list.detections {
                assert!(det.range >= 0.0 && det.range <= model.max_range);
                assert!(det.azimuth_deg.abs() <= model.azimuth_fov_deg / 2.0);
                assert_eq!(det.timestamp, f.timestamp);
            }
        }
    }

    #[test]
    fn snr_gate_is_monotone_in_range() {
        let model = SensorModel::<f64>::default();
        let mut last = f64::INFINITY;
        for r in [20.0, 40.0, 60.0, 80.0, 100.0, 120.0] {
            let snr = snr_of(&model, 10.0, r);
            assert!(snr < last);
            last = snr;
        }
        // Calibration: a 10 dBsm car at 100 m sits 15 dB above threshold.
        let margin = snr_of(&model, 10.0, 100.0) - model.detection_threshold_db;
        assert!((margin - 15.0).abs() < 1e-9);
    }

    #[test]
    fn target_list_round_trips_through_the_wire_format() {
        let model = SensorModel::default();
        let pose = pose_at(0.0, Facing::Downstream);
        let f = frame(vec![car(0, 0, 40.0, 25.0), car(1, 1, 60.0, 33.0)]);
        let list = generate_target_list(&pose, &model, &f, 3);
        let line = encode_target_list(&list);
        assert!(line.ends_with('\n'));
        let decoded: TargetList<f64> = decode_target_list(&line).unwrap();
        assert_eq!(list, decoded);

        let empty = TargetList::<f64> { sensor_id: 7, timestamp: 1.5, detections: vec![] };
        let line = encode_target_list(&empty);
        assert_eq!(line, "{\"sensor\":7,\"t\":1.5,\"targets\":[]}\n");
        assert_eq!(decode_target_list::<f64>(&line).unwrap(), empty);
    }

    #[test]
    fn truncated_record_is_a_parse_error() {
        let line = "{\"sensor\":7,\"t\":1.5,\"targe";
        assert!(matches!(
            decode_target_list::<f64>(line),
            Err(Error::Parse { .. })
        ));
    }
}
