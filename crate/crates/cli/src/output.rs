// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write as _;

use iwastat::cldensity::DensityValue;
use serde_json::{json, Value};

/// `x` with 10 significant digits.
pub fn sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let e = x.abs().log10().floor() as i32;
    if (-5..10).contains(&e) {
        format!("{:.*}", (9 - e).max(0) as usize, x)
    } else {
        format!("{x:.9e}")
    }
}

pub fn bound(b: f64) -> String {
    format!("{b:.1e}")
}

pub fn density(v: &DensityValue) -> String {
    format!("{} ± {}", sig(v.value), bound(v.error_bound))
}

pub fn density_json(v: &DensityValue) -> Value {
    json!({ "value": v.value, "error_bound": v.error_bound })
}

/// What a subcommand produced, in both renderings.
pub struct Output {
    pub lines: Vec<String>,
    pub json: Value,
}

impl Output {
    pub fn new() -> Self {
        Self {
            lines: Vec::new(),
            json: json!({}),
        }
    }

    pub fn line(&mut self, s: impl Into<String>) -> &mut Self {
        self.lines.push(s.into());
        self
    }

    pub fn set(&mut self, key: &str, v: impl Into<Value>) -> &mut Self {
        self.json[key] = v.into();
        self
    }

    pub fn render(&self, json_mode: bool, header: Option<&Value>) -> String {
        if json_mode {
            let mut doc = json!({ "result": self.json });
            if let Some(h) = header {
                doc["header"] = h.clone();
            }
            let mut s = serde_json::to_string_pretty(&doc).expect("values serialize");
            s.push('\n');
            return s;
        }
        let mut s = String::new();
        if let Some(h) = header {
            let _ = writeln!(
                s,
                "# iwastat {} at {}",
                h["version"].as_str().unwrap_or(""),
                h["timestamp"].as_str().unwrap_or("")
            );
            let _ = writeln!(s, "# config {}", h["config"]);
        }
        for l in &self.lines {
            s.push_str(l);
            s.push('\n');
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_significant_digits() {
        assert_eq!(sig(0.019779394), "0.01977939400");
        assert_eq!(sig(0.5601260779279), "0.5601260779");
        assert_eq!(sig(3.0), "3.000000000");
        assert_eq!(sig(1.5e-9), "1.500000000e-9");
        assert_eq!(sig(0.0), "0");
    }
}
