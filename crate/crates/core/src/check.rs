use alloc::string::String;

/// How a [`Check`] compares its value with its bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    /// Passes when `value <= bound` (residual checks).
    AtMost,
    /// Passes when `value > bound` (strict margins).
    Above,
}

impl Relation {
    /// Short identifier used in serialized reports.
    pub fn as_str(self) -> &'static str {
        match self {
            Relation::AtMost => "le",
            Relation::Above => "gt",
        }
    }
}

/// One named numerical verification.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    /// Stable identifier.
    pub name: String,
    /// Measured quantity (usually a residual norm).
    pub value: f64,
    /// Threshold it is compared with.
    pub bound: f64,
    /// Comparison direction.
    pub relation: Relation,
    /// Outcome. NaN values never pass.
    pub pass: bool,
}

impl Check {
    /// Residual check: passes when `value <= bound`.
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check {
            name: name.into(),
            value,
            bound,
            relation: Relation::AtMost,
            pass: value <= bound,
        }
    }

    /// Margin check: passes when `value > bound`.
    pub fn above(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check {
            name: name.into(),
            value,
            bound,
            relation: Relation::Above,
            pass: value > bound,
        }
    }

    /// Boolean predicate recorded as a check with value 0 (true) or 1 (false).
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Check::at_most(name, if ok { 0.0 } else { 1.0 }, 0.0)
    }
}

/// `true` when every check passes.
pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.pass)
}
