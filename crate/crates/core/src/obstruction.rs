//! Relative-motion classification of a visible obstacle and the decision
//! whether it blocks the robot's path.

use std::fmt;

use crate::dynamics::{estimate_velocity, MovingObstacle};
use crate::error::{Error, Result};
use crate::geometry::{distance, normalize_angle, segment_intersects_disk, Point, Segment, Vector};
use crate::world::SimParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MotionClass {
    SameDirection,
    HeadOn,
    Crossing,
    NotTowardObstacle,
}

impl fmt::Display for MotionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MotionClass::SameDirection => "SameDirection",
            MotionClass::HeadOn => "HeadOn",
            MotionClass::Crossing => "Crossing",
            MotionClass::NotTowardObstacle => "NotTowardObstacle",
        };
        f.write_str(s)
    }
}

/// Bearing from robot to obstacle in degrees, in (-180, 180].
pub fn direction_angle(robot: Point, obs: Point) -> Result<f64> {
    if robot == obs {
        return Err(Error::CoincidentPoints);
    }
    let d = robot.to(obs);
    Ok(normalize_angle(d.vj().atan2(d.vi()).to_degrees()))
}

/// Heading of a velocity in degrees, in (-180, 180].
pub fn velocity_angle(v: Vector) -> Result<f64> {
    if v.is_zero() {
        return Err(Error::ZeroVector);
    }
    Ok(normalize_angle(v.vj().atan2(v.vi()).to_degrees()))
}

/// Classifies the obstacle's motion relative to the robot. Comparisons
/// against the threshold are strict; an exact boundary falls to `Crossing`
/// (or `NotTowardObstacle` for the bearing gate).
pub fn classify(
    robot_pos: Point,
    robot_vel: Vector,
    obs_pos: Point,
    obs_vel: Vector,
    angle_thresh: f64,
) -> Result<MotionClass> {
    let robot_heading = velocity_angle(robot_vel)?;
    let obs_heading = velocity_angle(obs_vel)?;
    let bearing = direction_angle(robot_pos, obs_pos)?;
    let d = normalize_angle(bearing - robot_heading).abs();
    if d >= angle_thresh {
        return Ok(MotionClass::NotTowardObstacle);
    }
    let g = normalize_angle(robot_heading - obs_heading).abs();
    Ok(if g < angle_thresh {
        MotionClass::SameDirection
    } else if g > 180.0 - angle_thresh {
        MotionClass::HeadOn
    } else {
        MotionClass::Crossing
    })
}

/// What the robot knows about itself when judging an obstacle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotView {
    pub position: Point,
    /// Direction of travel. Kept while the robot is halted.
    pub heading: Vector,
    /// Position of the path node the robot is heading for.
    pub segment_end: Point,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verdict {
    pub blocked: bool,
    /// `None` when the class is undefined (stationary obstacle, zero heading
    /// or coincident positions).
    pub class: Option<MotionClass>,
    pub distance: f64,
}

/// Blocked when the obstacle is closer than the proximity alarm, when it is
/// head-on, or when it is travelling with the robot (or standing still) and
/// its disk grown by the robot radius overlaps the current path segment.
pub fn is_path_blocked(robot: &RobotView, obs: &MovingObstacle, params: &SimParams) -> Result<Verdict> {
    let obs_vel = estimate_velocity(obs).ok_or(Error::MissingObservation(obs.id))?;
    let dist = distance(robot.position, obs.position);
    let class = if obs_vel.is_zero() || robot.heading.is_zero() || dist == 0.0 {
        None
    } else {
        Some(classify(
            robot.position,
            robot.heading,
            obs.position,
            obs_vel,
            params.angle_thresh,
        )?)
    };
    let on_segment = || {
        segment_intersects_disk(
            &Segment::new(robot.position, robot.segment_end),
            obs.position,
            obs.radius + params.robot_radius,
        )
    };
    let blocked = dist < params.proximity_alarm
        || match class {
            Some(MotionClass::HeadOn) => true,
            Some(MotionClass::SameDirection) | None => on_segment(),
            _ => false,
        };
    Ok(Verdict {
        blocked,
        class,
        distance: dist,
    })
}
