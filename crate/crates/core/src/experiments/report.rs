use serde::Serialize;
use serde_json::Value;

/// One compared quantity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub quantity: String,
    pub oracle: f64,
    pub test: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Reported but excluded from the verdict.
    pub informational: bool,
}

/// Wall-clock data, kept apart so the rest of a report is reproducible byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMeta {
    pub timestamp: String,
    pub runtime_ms: u128,
}

/// A CSV side table written next to the report.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub csv: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub echo: Value,
    pub checks: Vec<CheckRecord>,
    pub verdict: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub meta: Option<RunMeta>,
    #[serde(skip)]
    pub tables: Vec<Table>,
}

/// Slack added to every comparison so that two exact computations that differ
/// only by rounding still agree.
pub const ROUNDING_FLOOR: f64 = 1e-9;

/// Width of the moment bands in combined standard errors.
pub const SIGMAS: f64 = 3.0;

impl ExperimentReport {
    pub fn new(experiment: &str, echo: Value) -> Self {
        Self {
            experiment: experiment.to_string(),
            echo,
            checks: Vec::new(),
            verdict: true,
            meta: None,
            tables: Vec::new(),
        }
    }

    fn push(&mut self, record: CheckRecord) {
        if !record.informational {
            self.verdict &= record.pass;
        }
        self.checks.push(record);
    }

    /// |test − oracle| ≤ 3·sqrt(se_o² + se_t²) + rounding floor.
    pub fn within_sigma(&mut self, quantity: String, oracle: f64, oracle_se: f64, test: f64, test_se: f64) {
        let tolerance = SIGMAS * oracle_se.hypot(test_se) + ROUNDING_FLOOR * oracle.abs().max(1.0);
        self.within(quantity, oracle, test, tolerance);
    }

    /// |test − oracle| ≤ tolerance.
    pub fn within(&mut self, quantity: String, oracle: f64, test: f64, tolerance: f64) {
        let pass = (test - oracle).abs() <= tolerance;
        self.push(CheckRecord {
            quantity,
            oracle,
            test,
            tolerance,
            pass,
            informational: false,
        });
    }

    /// test ≤ limit; the limit is reported as the oracle and the tolerance is zero.
    pub fn at_most(&mut self, quantity: String, test: f64, limit: f64) {
        self.push(CheckRecord {
            quantity,
            oracle: limit,
            test,
            tolerance: 0.0,
            pass: test <= limit,
            informational: false,
        });
    }

    /// test ≥ limit.
    pub fn at_least(&mut self, quantity: String, test: f64, limit: f64) {
        self.push(CheckRecord {
            quantity,
            oracle: limit,
            test,
            tolerance: 0.0,
            pass: test >= limit,
            informational: false,
        });
    }

    pub fn info(&mut self, quantity: String, oracle: f64, test: f64) {
        self.push(CheckRecord {
            quantity,
            oracle,
            test,
            tolerance: f64::NAN,
            pass: true,
            informational: true,
        });
    }

    pub fn flag(&mut self, quantity: String, pass: bool) {
        self.push(CheckRecord {
            quantity,
            oracle: 1.0,
            test: f64::from(u8::from(pass)),
            tolerance: 0.0,
            pass,
            informational: false,
        });
    }

    pub fn check(&self, quantity: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.quantity == quantity)
    }

    pub fn failures(&self) -> Vec<&CheckRecord> {
        self.checks.iter().filter(|c| !c.pass && !c.informational).collect()
    }

    /// The report without wall-clock data, as pretty JSON.
    pub fn payload_json(&self) -> String {
        let mut bare = self.clone();
        bare.meta = None;
        serde_json::to_string_pretty(&bare).expect("reports always serialize")
    }
}
