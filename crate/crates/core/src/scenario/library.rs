//! Synthetic reconstructions of four urban conflict situations. These are
//! hand-built geometries, not recorded traffic.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use super::spec::{
    ActionSpec, AgentSpec, DestinationSpec, EgoSpec, MotionSpec, RoadSpec, ScenarioSpec,
    TimedWaypoint,
};
use crate::risk::AgentClass;

fn action(horizon_s: f64, lateral_m: f64, speed_mps: f64) -> Vec<ActionSpec> {
    vec![ActionSpec {
        horizon_s,
        lateral_m,
        speed_mps,
    }]
}

fn ego(x_m: f64, y_m: f64, heading_rad: f64, speed_mps: f64) -> EgoSpec {
    EgoSpec {
        x_m,
        y_m,
        heading_rad,
        speed_mps,
        half_length_m: 2.4,
        half_width_m: 0.9,
        mass_kg: None,
    }
}

fn cv(id: &str, class: AgentClass, half: (f64, f64), x: f64, y: f64, heading: f64, speed: f64) -> AgentSpec {
    AgentSpec {
        id: id.into(),
        class,
        mass_kg: None,
        half_length_m: half.0,
        half_width_m: half.1,
        motion: MotionSpec::ConstantVelocity {
            x_m: x,
            y_m: y,
            heading_rad: heading,
            speed_mps: speed,
        },
    }
}

fn timed(points: &[(f64, f64, f64)]) -> Vec<TimedWaypoint> {
    points
        .iter()
        .map(|&(t_s, x_m, y_m)| TimedWaypoint { t_s, x_m, y_m })
        .collect()
}

/// Straight run, quarter arc of `radius` turning by `sign * pi/2`, straight
/// run. Coordinates rounded to millimetres so the JSON stays readable.
fn turn_path(start: (f64, f64), heading: f64, lead: f64, radius: f64, sign: f64, tail: f64) -> Vec<[f64; 2]> {
    let r3 = |v: f64| (v * 1000.0).round() / 1000.0;
    let (hx, hy) = (heading.cos(), heading.sin());
    let entry = (start.0 + hx * lead, start.1 + hy * lead);
    // center sits to the left for sign > 0
    let (nx, ny) = (-hy * sign, hx * sign);
    let center = (entry.0 + nx * radius, entry.1 + ny * radius);
    let mut pts = vec![[start.0, start.1]];
    for i in 0..=12 {
        let phi = heading - sign * FRAC_PI_2 + sign * FRAC_PI_2 * i as f64 / 12.0;
        pts.push([r3(center.0 + radius * phi.cos()), r3(center.1 + radius * phi.sin())]);
    }
    let out = heading + sign * FRAC_PI_2;
    let last = pts[pts.len() - 1];
    pts.push([r3(last[0] + out.cos() * tail), r3(last[1] + out.sin() * tail)]);
    pts
}

/// Two-way road; a cyclist rides near the right edge of the ego lane while
/// traffic comes the other way in the adjacent lane.
pub fn cyclist_following() -> ScenarioSpec {
    let car = (2.4, 0.9);
    let mut scripts = BTreeMap::new();
    scripts.insert("overtake".into(), action(2.0, 0.5, 16.0));
    scripts.insert("yield".into(), action(2.0, 0.0, 4.0));
    ScenarioSpec {
        name: "cyclist_following".into(),
        description: "Two-way road, cyclist ahead in the ego lane, oncoming cars in the left lane".into(),
        reference_path: vec![[0.0, 0.0], [220.0, 0.0]],
        road: Some(RoadSpec {
            left_m: 5.25,
            right_m: -1.75,
        }),
        lane_center_offset_m: 0.0,
        ego: ego(0.0, 0.0, 0.0, 6.0),
        agents: vec![
            cv("cyclist", AgentClass::Cyclist, (0.9, 0.3), 15.0, -0.9, 0.0, 4.0),
            cv("oncoming_1", AgentClass::Vehicle, car, 120.0, 3.5, PI, 8.0),
            cv("oncoming_2", AgentClass::Vehicle, car, 200.0, 3.5, PI, 8.0),
        ],
        navigation_waypoints: vec![[50.0, 0.0], [100.0, 0.0], [150.0, 0.0], [200.0, 0.0]],
        duration_s: 12.0,
        destination: DestinationSpec {
            l_min_m: 150.0,
            l_max_m: 220.0,
            half_width_m: 3.0,
        },
        prediction_noise_m: 0.2,
        focus_agent: Some("cyclist".into()),
        scripts,
    }
}

/// Ego turns left across the path of an oncoming car, then meets a
/// pedestrian crossing the exit leg.
pub fn unprotected_left_turn() -> ScenarioSpec {
    let mut scripts = BTreeMap::new();
    scripts.insert("go".into(), action(2.0, 0.0, 9.0));
    scripts.insert("yield".into(), action(2.0, 0.0, 3.0));
    ScenarioSpec {
        name: "unprotected_left_turn".into(),
        description: "Left turn across an oncoming car, pedestrian on the exit crosswalk".into(),
        reference_path: turn_path((0.0, -40.0), FRAC_PI_2, 32.0, 8.0, 1.0, 40.0),
        road: None,
        lane_center_offset_m: 0.0,
        ego: ego(0.0, -40.0, FRAC_PI_2, 8.0),
        agents: vec![
            cv("oncoming", AgentClass::Vehicle, (2.4, 0.9), -3.5, 45.0, -FRAC_PI_2, 10.0),
            AgentSpec {
                id: "pedestrian".into(),
                class: AgentClass::Pedestrian,
                mass_kg: None,
                half_length_m: 0.3,
                half_width_m: 0.3,
                motion: MotionSpec::Trajectory {
                    waypoints: timed(&[(0.0, -16.0, 7.0), (4.0, -16.0, 7.0), (11.0, -16.0, -3.0)]),
                    heading_rad: -FRAC_PI_2,
                },
            },
        ],
        navigation_waypoints: vec![[0.0, -20.0], [-8.0, 0.0], [-30.0, 0.0]],
        duration_s: 12.0,
        destination: DestinationSpec {
            l_min_m: 65.0,
            l_max_m: 84.0,
            half_width_m: 2.0,
        },
        prediction_noise_m: 0.2,
        focus_agent: Some("oncoming".into()),
        scripts,
    }
}

/// Ego turns right into a road with crossing traffic while a cyclist goes
/// straight on its right.
pub fn right_turn_merge() -> ScenarioSpec {
    let mut scripts = BTreeMap::new();
    scripts.insert("go".into(), action(2.0, 0.0, 8.0));
    scripts.insert("yield".into(), action(2.0, 0.0, 2.0));
    ScenarioSpec {
        name: "right_turn_merge".into(),
        description: "Right turn merging ahead of crossing traffic, cyclist continuing straight".into(),
        reference_path: turn_path((0.0, -40.0), FRAC_PI_2, 32.0, 8.0, -1.0, 40.0),
        road: None,
        lane_center_offset_m: 0.0,
        ego: ego(0.0, -40.0, FRAC_PI_2, 7.0),
        agents: vec![
            cv("crossing", AgentClass::Vehicle, (2.4, 0.9), -35.0, 0.0, 0.0, 9.0),
            cv("cyclist", AgentClass::Cyclist, (0.9, 0.3), 2.2, -30.0, FRAC_PI_2, 5.0),
        ],
        navigation_waypoints: vec![[0.0, -20.0], [8.0, 0.0], [30.0, 0.0]],
        duration_s: 12.0,
        destination: DestinationSpec {
            l_min_m: 65.0,
            l_max_m: 84.0,
            half_width_m: 2.0,
        },
        prediction_noise_m: 0.2,
        focus_agent: Some("cyclist".into()),
        scripts,
    }
}

/// Ego goes straight through while an oncoming car turns left across it.
pub fn straight_with_left_turner() -> ScenarioSpec {
    let mut scripts = BTreeMap::new();
    scripts.insert("go".into(), action(2.0, 0.0, 12.0));
    scripts.insert("yield".into(), action(2.0, 0.0, 4.0));
    ScenarioSpec {
        name: "straight_with_left_turner".into(),
        description: "Straight through an intersection while an oncoming car turns left".into(),
        reference_path: vec![[0.0, -50.0], [0.0, 60.0]],
        road: None,
        lane_center_offset_m: 0.0,
        ego: ego(0.0, -50.0, FRAC_PI_2, 10.0),
        agents: vec![AgentSpec {
            id: "left_turner".into(),
            class: AgentClass::Vehicle,
            mass_kg: None,
            half_length_m: 2.4,
            half_width_m: 0.9,
            motion: MotionSpec::Trajectory {
                waypoints: timed(&[
                    (0.0, -3.5, 40.0),
                    (3.2, -3.5, 8.0),
                    (4.0, -2.8, 3.5),
                    (4.8, 0.5, 1.0),
                    (5.6, 5.5, 0.5),
                    (7.0, 19.5, 0.5),
                ]),
                heading_rad: -FRAC_PI_2,
            },
        }],
        navigation_waypoints: vec![[0.0, -20.0], [0.0, 20.0], [0.0, 50.0]],
        duration_s: 10.0,
        destination: DestinationSpec {
            l_min_m: 90.0,
            l_max_m: 110.0,
            half_width_m: 2.0,
        },
        prediction_noise_m: 0.2,
        focus_agent: Some("left_turner".into()),
        scripts,
    }
}

pub fn bundled() -> Vec<ScenarioSpec> {
    vec![
        cyclist_following(),
        unprotected_left_turn(),
        right_turn_merge(),
        straight_with_left_turner(),
    ]
}

/// Pretty JSON as stored in the repository's `scenarios/` directory.
pub fn to_json(spec: &ScenarioSpec) -> String {
    let mut s = serde_json::to_string_pretty(spec).expect("spec serializes");
    s.push('\n');
    s
}
