use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::distributions::{chi2_sf, normal_sf};
use crate::error::{Error, Result};

/// Asymptotic law a statistic is calibrated against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceLaw {
    /// Chi-square; the degrees of freedom live in [`TestReport::df`].
    ChiSquared,
    /// Standard normal; [`TestReport::df`] then holds the standard deviation (1).
    StdNormal,
}

/// Outcome of one hypothesis test. Serialized field order is part of the
/// output contract.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    /// `+inf` when the constraint set restricted to the sample is empty.
    #[serde(with = "extended_f64")]
    pub statistic: f64,
    pub reference_law: ReferenceLaw,
    pub df: f64,
    pub p_value: f64,
    pub alpha: f64,
    pub reject: bool,
    pub diagnostics: BTreeMap<String, f64>,
}

/// JSON has no infinities; they are written as the strings `"inf"` / `"-inf"`.
mod extended_f64 {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(de::Error::custom(format!("unexpected number text '{other}'"))),
            },
        }
    }
}

pub fn check_level(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidLevel(alpha))
    }
}

impl TestReport {
    /// Upper-tail chi-square report.
    pub fn chi_squared(statistic: f64, df: u32, alpha: f64) -> Result<Self> {
        check_level(alpha)?;
        Ok(Self::finish(
            statistic,
            ReferenceLaw::ChiSquared,
            df as f64,
            chi2_sf(statistic, df),
            alpha,
        ))
    }

    /// Upper-tail standard normal report.
    pub fn std_normal(statistic: f64, alpha: f64) -> Result<Self> {
        check_level(alpha)?;
        Ok(Self::finish(
            statistic,
            ReferenceLaw::StdNormal,
            1.0,
            normal_sf(statistic),
            alpha,
        ))
    }

    fn finish(statistic: f64, reference_law: ReferenceLaw, df: f64, p: f64, alpha: f64) -> Self {
        let p_value = p.clamp(0.0, 1.0);
        Self {
            statistic,
            reference_law,
            df,
            p_value,
            alpha,
            reject: p_value < alpha,
            diagnostics: BTreeMap::new(),
        }
    }

    /// Records a named diagnostic; non-finite values are dropped so the
    /// report always serializes.
    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.insert(name, value);
        self
    }

    pub fn insert(&mut self, name: &str, value: f64) {
        if value.is_finite() {
            self.diagnostics.insert(name.to_string(), value);
        }
    }

    /// Flags a warning as a diagnostic named `warning.<name>` with value 1.
    pub fn warn(&mut self, name: &str) {
        self.diagnostics.insert(format!("warning.{name}"), 1.0);
    }

    pub fn warnings(&self) -> impl Iterator<Item = &str> {
        self.diagnostics.keys().filter_map(|k| k.strip_prefix("warning."))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report fields are always serializable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(format!("report JSON: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_and_field_order() {
        let mut r = TestReport::chi_squared(4.2, 3, 0.05).unwrap().with("n", 100.0);
        r.warn("degenerate_cells");
        r.insert("nan", f64::NAN);
        let js = r.to_json();
        let order = [
            "statistic",
            "reference_law",
            "df",
            "p_value",
            "alpha",
            "reject",
            "diagnostics",
        ];
        let pos: Vec<usize> = order.iter().map(|f| js.find(&format!("\"{f}\"")).unwrap()).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(TestReport::from_json(&js).unwrap(), r);
        assert_eq!(r.warnings().collect::<Vec<_>>(), vec!["degenerate_cells"]);
    }

    #[test]
    fn infinite_statistic_round_trips() {
        let r = TestReport::std_normal(f64::INFINITY, 0.05).unwrap();
        assert_eq!(r.p_value, 0.0);
        assert!(r.reject);
        assert_eq!(TestReport::from_json(&r.to_json()).unwrap(), r);
    }

    #[test]
    fn zero_statistic_has_unit_p_value() {
        let r = TestReport::chi_squared(0.0, 2, 0.05).unwrap();
        assert_eq!(r.p_value, 1.0);
        assert!(!r.reject);
    }

    #[test]
    fn p_value_decreases_in_statistic() {
        let mut last = 1.0;
        for i in 1..200 {
            let p = TestReport::chi_squared(i as f64 * 0.25, 3, 0.05).unwrap().p_value;
            assert!(p < last);
            last = p;
        }
    }

    #[test]
    fn invalid_level() {
        assert_eq!(TestReport::std_normal(0.0, 1.0), Err(Error::InvalidLevel(1.0)));
        assert!(TestReport::chi_squared(0.0, 1, 0.0).is_err());
    }
}
