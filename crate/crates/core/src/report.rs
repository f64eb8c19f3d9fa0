//! Named numeric checks and the JSON report.

use serde::Serialize;
use serde_json::value::RawValue;

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub id: String,
    pub description: String,
    /// The formula being checked.
    pub paper_ref: String,
    pub lhs: f64,
    pub rhs: f64,
    pub abs_err: f64,
    pub pass: bool,
}

fn scaled_ok(lhs: f64, rhs: f64, tol: f64) -> (f64, bool) {
    let err = (lhs - rhs).abs();
    (err, err <= tol * 1f64.max(lhs.abs()).max(rhs.abs()))
}

impl Check {
    /// `lhs = rhs` up to `tol * max(1, |lhs|, |rhs|)`.
    pub fn equal(id: impl Into<String>, description: impl Into<String>, formula: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        let (abs_err, pass) = scaled_ok(lhs, rhs, tol);
        Check { id: id.into(), description: description.into(), paper_ref: formula.into(), lhs, rhs, abs_err, pass }
    }

    /// A residual that must not exceed `tol`.
    pub fn residual(id: impl Into<String>, description: impl Into<String>, formula: impl Into<String>, residual: f64, tol: f64) -> Self {
        Check {
            id: id.into(),
            description: description.into(),
            paper_ref: formula.into(),
            lhs: residual,
            rhs: 0.0,
            abs_err: residual.abs(),
            pass: residual.abs() <= tol,
        }
    }

    /// `|value| > floor`.
    pub fn nonzero(id: impl Into<String>, description: impl Into<String>, formula: impl Into<String>, value: f64, floor: f64) -> Self {
        Check {
            id: id.into(),
            description: description.into(),
            paper_ref: formula.into(),
            lhs: value,
            rhs: floor,
            abs_err: 0.0,
            pass: value.abs() > floor,
        }
    }

    /// `value >= bound - tol`.
    pub fn at_least(id: impl Into<String>, description: impl Into<String>, formula: impl Into<String>, value: f64, bound: f64, tol: f64) -> Self {
        Check {
            id: id.into(),
            description: description.into(),
            paper_ref: formula.into(),
            lhs: value,
            rhs: bound,
            abs_err: (bound - value).max(0.0),
            pass: value >= bound - tol,
        }
    }

    /// Two boolean verdicts must agree; encoded as 0/1.
    pub fn agree(id: impl Into<String>, description: impl Into<String>, formula: impl Into<String>, lhs: bool, rhs: bool) -> Self {
        let (l, r) = (lhs as u8 as f64, rhs as u8 as f64);
        Check {
            id: id.into(),
            description: description.into(),
            paper_ref: formula.into(),
            lhs: l,
            rhs: r,
            abs_err: (l - r).abs(),
            pass: lhs == rhs,
        }
    }

    /// `premise => conclusion`; encoded as 0/1.
    pub fn implies(id: impl Into<String>, description: impl Into<String>, formula: impl Into<String>, premise: bool, conclusion: bool) -> Self {
        let (l, r) = (premise as u8 as f64, conclusion as u8 as f64);
        let pass = !premise || conclusion;
        Check {
            id: id.into(),
            description: description.into(),
            paper_ref: formula.into(),
            lhs: l,
            rhs: r,
            abs_err: if pass { 0.0 } else { 1.0 },
            pass,
        }
    }

    /// A reported value pair that carries no verdict.
    pub fn info(id: impl Into<String>, description: impl Into<String>, formula: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Check { id: id.into(), description: description.into(), paper_ref: formula.into(), lhs, rhs, abs_err: 0.0, pass: true }
    }

    /// An unconditional failure, e.g. an unmet precondition.
    pub fn failed(id: impl Into<String>, description: impl Into<String>, formula: impl Into<String>) -> Self {
        Check {
            id: id.into(),
            description: description.into(),
            paper_ref: formula.into(),
            lhs: f64::NAN,
            rhs: f64::NAN,
            abs_err: f64::NAN,
            pass: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub model: String,
    pub suite: String,
    pub tolerance: f64,
    /// Sorted by id.
    pub checks: Vec<Check>,
    pub pass: bool,
    pub wall_time_s: f64,
}

impl Report {
    pub fn new(model: impl Into<String>, suite: impl Into<String>, tolerance: f64, mut checks: Vec<Check>, wall_time_s: f64) -> Self {
        checks.sort_by(|a, b| a.id.cmp(&b.id));
        let pass = checks.iter().all(|c| c.pass);
        Report { model: model.into(), suite: suite.into(), tolerance, checks, pass, wall_time_s }
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn get(&self, id: &str) -> Option<&Check> {
        self.checks.binary_search_by(|c| c.id.as_str().cmp(id)).ok().map(|i| &self.checks[i])
    }

    /// Pretty JSON; with `with_wall_time = false` the output depends only on inputs.
    pub fn to_json(&self, with_wall_time: bool) -> String {
        let json = JsonReport {
            model: &self.model,
            suite: &self.suite,
            tolerance: number(self.tolerance),
            checks: self
                .checks
                .iter()
                .map(|c| JsonCheck {
                    id: &c.id,
                    description: &c.description,
                    paper_ref: &c.paper_ref,
                    lhs: number(c.lhs),
                    rhs: number(c.rhs),
                    abs_err: number(c.abs_err),
                    pass: c.pass,
                })
                .collect(),
            pass: self.pass,
            wall_time_s: with_wall_time.then(|| number(self.wall_time_s)),
        };
        serde_json::to_string_pretty(&json).expect("report serialises")
    }
}

/// 17 significant digits; non-finite values become `null`.
fn number(x: f64) -> Box<RawValue> {
    let text = if x.is_finite() { format!("{x:.16e}") } else { "null".to_string() };
    RawValue::from_string(text).expect("valid JSON number")
}

#[derive(Serialize)]
struct JsonCheck<'a> {
    id: &'a str,
    description: &'a str,
    paper_ref: &'a str,
    lhs: Box<RawValue>,
    rhs: Box<RawValue>,
    abs_err: Box<RawValue>,
    pass: bool,
}

#[derive(Serialize)]
struct JsonReport<'a> {
    model: &'a str,
    suite: &'a str,
    tolerance: Box<RawValue>,
    checks: Vec<JsonCheck<'a>>,
    pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_s: Option<Box<RawValue>>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_is_scaled() {
        assert!(Check::equal("a", "", "", 1000.0, 1000.0 + 1e-7, 1e-9).pass);
        assert!(!Check::equal("a", "", "", 1.0, 1.0 + 1e-7, 1e-9).pass);
    }

    #[test]
    fn sorted_and_overall() {
        let r = Report::new(
            "m",
            "s",
            1e-9,
            vec![Check::residual("b", "", "", 0.0, 1e-9), Check::residual("a", "", "", 1.0, 1e-9)],
            0.5,
        );
        assert_eq!(r.checks[0].id, "a");
        assert!(!r.pass);
        assert_eq!(r.get("b").unwrap().id, "b");
    }

    #[test]
    fn json_numbers_and_nulls() {
        let r = Report::new("m", "s", 0.25, vec![Check::failed("x", "d", "f")], 1.25);
        let j = r.to_json(true);
        assert!(j.contains("\"tolerance\": 2.5000000000000000e-1"));
        assert!(j.contains("\"lhs\": null"));
        assert!(j.contains("\"wall_time_s\": 1.2500000000000000e0"));
        assert!(!r.to_json(false).contains("wall_time_s"));
        let v: serde_json::Value = serde_json::from_str(&j).unwrap();
        assert_eq!(v["checks"][0]["pass"], false);
    }
}
