use crate::fmt::{json_array, json_f64, json_string};

use super::RobotModel;

/// Canonical JSON rendering of a model: fixed field order, 17 significant digits.
pub fn dump_model_json(model: &RobotModel) -> String {
    let mut links = Vec::new();
    for link in &model.links {
        let rows: Vec<String> = (0..3)
            .map(|r| json_array((0..3).map(|c| link.inertia[(r, c)])))
            .collect();
        links.push(format!(
            "{{\"name\":{},\"mass\":{},\"com\":{},\"inertia\":[{}]}}",
            json_string(&link.name),
            json_f64(link.mass),
            json_array(link.com.iter().copied()),
            rows.join(",")
        ));
    }
    let mut joints = Vec::new();
    for joint in &model.joints {
        let limits = match joint.position_limits {
            Some(l) => json_array(l),
            None => "null".to_string(),
        };
        let effort = joint.effort_limit.map_or("null".to_string(), json_f64);
        joints.push(format!(
            "{{\"name\":{},\"kind\":\"{}\",\"parent\":{},\"child\":{},\"origin\":{{\"xyz\":{},\"rpy\":{}}},\"axis\":{},\"position_limits\":{},\"effort_limit\":{}}}",
            json_string(&joint.name),
            joint.kind.as_str(),
            json_string(&joint.parent),
            json_string(&joint.child),
            json_array(joint.origin.xyz),
            json_array(joint.origin.rpy),
            json_array(joint.axis.iter().copied()),
            limits,
            effort
        ));
    }
    format!(
        "{{\"name\":{},\"root\":{},\"links\":[{}],\"joints\":[{}]}}",
        json_string(&model.name),
        json_string(&model.root),
        links.join(","),
        joints.join(",")
    )
}
