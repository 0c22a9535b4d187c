//! Canonical float formatting shared by the JSON and CSV writers.

/// Formats `value` with 17 significant digits (`d.dddddddddddddddde±x`).
///
/// Non-finite values are written as `NaN`, `inf` and `-inf`, which `str::parse::<f64>`
/// reads back.
pub fn sig17(value: f64) -> String {
    if value.is_finite() {
        format!("{value:.16e}")
    } else {
        value.to_string()
    }
}

/// JSON rendering of a float. JSON has no non-finite numbers, so those become `null`.
pub fn json_f64(value: f64) -> String {
    if value.is_finite() {
        sig17(value)
    } else {
        "null".to_string()
    }
}

pub fn json_array<I: IntoIterator<Item = f64>>(values: I) -> String {
    let items: Vec<String> = values.into_iter().map(json_f64).collect();
    format!("[{}]", items.join(","))
}

pub fn json_string(s: &str) -> String {
    serde_json::Value::String(s.to_string()).to_string()
}
