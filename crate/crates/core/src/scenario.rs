//! Scenario documents.
//!
//! A scenario is a flat UTF-8 `key = value` file. `#` starts a comment.
//! Every key is optional; missing model parameters take the reference
//! calibration, missing initial values take the Case 1 split, and the
//! default strategy uses both controls.
//!
//! ```text
//! # equal weights on both controls
//! case = 1
//! strategy = 3
//! w1 = 50
//! w2 = 50
//! ```
//!
//! Initial values come from `case = 1|2` or from all five of `init_s`,
//! `init_l1`, `init_i`, `init_l2`, `init_r` (absolute individuals); the
//! explicit values win when both are present.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::integrator::TimeGrid;
use crate::model::{ModelParams, StateVec, StrategyMask};
use crate::solver::SolverOptions;

/// Reference initial splits of the population.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialCase {
    Case1,
    Case2,
}

impl InitialCase {
    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(InitialCase::Case1),
            2 => Some(InitialCase::Case2),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            InitialCase::Case1 => "case1",
            InitialCase::Case2 => "case2",
        }
    }

    /// Compartment fractions `(S, L1, I, L2, R)`.
    pub fn fractions(&self) -> [f64; 5] {
        match self {
            InitialCase::Case1 => [76.0, 36.0, 5.0, 2.0, 1.0].map(|v| v / 120.0),
            InitialCase::Case2 => [16.0, 28.0, 3.0, 2.0, 1.0].map(|v| v / 50.0),
        }
    }

    pub fn initial(&self, n_total: f64) -> StateVec {
        StateVec::from_array(self.fractions().map(|f| f * n_total))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub params: ModelParams,
    pub initial: StateVec,
    pub case_label: String,
    pub strategy: StrategyMask,
    pub solver: SolverOptions,
}

impl Default for Scenario {
    fn default() -> Self {
        let params = ModelParams::default();
        Scenario {
            initial: InitialCase::Case1.initial(params.n_total),
            case_label: InitialCase::Case1.label().to_string(),
            strategy: StrategyMask::STRATEGY_3,
            solver: SolverOptions::with_horizon(params.horizon).expect("default grid is valid"),
            params,
        }
    }
}

const INIT_KEYS: [&str; 5] = ["init_s", "init_l1", "init_i", "init_l2", "init_r"];
const OTHER_KEYS: [&str; 7] = [
    "case",
    "strategy",
    "n_steps",
    "tol",
    "relaxation",
    "max_iters",
    "label",
];

fn is_known_key(key: &str) -> bool {
    ModelParams::default()
        .fields()
        .iter()
        .any(|(k, _)| *k == key)
        || INIT_KEYS.contains(&key)
        || OTHER_KEYS.contains(&key)
}

struct Entry {
    value: String,
    line: usize,
}

impl Entry {
    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.value.parse::<T>().map_err(|e| Error::Parse {
            key: key.to_string(),
            line: self.line,
            reason: format!("`{}`: {e}", self.value),
        })
    }

    fn error(&self, key: &str, reason: impl Into<String>) -> Error {
        Error::Parse {
            key: key.to_string(),
            line: self.line,
            reason: reason.into(),
        }
    }
}

impl Scenario {
    /// Validates the cross-field invariants of a scenario.
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.solver.validate()?;
        let total = self.initial.total();
        if self
            .initial
            .to_array()
            .iter()
            .any(|v| !v.is_finite() || *v < 0.0)
        {
            return Err(Error::invalid(
                "initial",
                format!(
                    "compartments must be finite and >= 0, got {:?}",
                    self.initial
                ),
            ));
        }
        if (total - self.params.n_total).abs() > 1e-9 * self.params.n_total {
            return Err(Error::invalid(
                "initial",
                format!(
                    "conservation rule violated: initial compartments sum to {total}, n_total is {}",
                    self.params.n_total
                ),
            ));
        }
        Ok(())
    }

    /// Parses a scenario document.
    pub fn parse(text: &str) -> Result<Scenario> {
        let mut entries: HashMap<String, Entry> = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(Error::Parse {
                    key: content.to_string(),
                    line,
                    reason: "expected `key = value`".into(),
                });
            };
            let key = key.trim();
            if !is_known_key(key) {
                return Err(Error::UnknownKey {
                    key: key.to_string(),
                    line,
                });
            }
            let entry = Entry {
                value: value.trim().to_string(),
                line,
            };
            if let Some(first) = entries.get(key) {
                return Err(entry.error(
                    key,
                    format!("duplicate key, first set on line {}", first.line),
                ));
            }
            entries.insert(key.to_string(), entry);
        }

        let mut params = ModelParams::default();
        for (name, _) in ModelParams::default().fields() {
            if let Some(e) = entries.get(name) {
                *params.field_mut(name).expect("field exists") = e.parse(name)?;
            }
        }
        if let Err(Error::Invalid { field, reason }) = params.validate() {
            return Err(match entries.get(field) {
                Some(e) => e.error(field, reason),
                None => Error::Invalid { field, reason },
            });
        }

        let case = match entries.get("case") {
            Some(e) => InitialCase::from_number(e.parse("case")?)
                .ok_or_else(|| e.error("case", "must be 1 or 2"))?,
            None => InitialCase::Case1,
        };
        let strategy = match entries.get("strategy") {
            Some(e) => StrategyMask::from_index(e.parse("strategy")?)
                .ok_or_else(|| e.error("strategy", "must be 0, 1, 2 or 3"))?,
            None => StrategyMask::STRATEGY_3,
        };

        let given: Vec<_> = INIT_KEYS
            .iter()
            .filter(|k| entries.contains_key(**k))
            .collect();
        let (initial, mut case_label) = match given.len() {
            0 => (case.initial(params.n_total), case.label().to_string()),
            5 => {
                let mut v = [0.0; 5];
                for (slot, key) in v.iter_mut().zip(INIT_KEYS) {
                    *slot = entries[key].parse(key)?;
                }
                (StateVec::from_array(v), "custom".to_string())
            }
            _ => {
                let key = given[0];
                let missing: Vec<_> = INIT_KEYS
                    .iter()
                    .filter(|k| !entries.contains_key(**k))
                    .collect();
                return Err(entries[*key].error(
                    key,
                    format!("explicit initial values need all five keys, missing {missing:?}"),
                ));
            }
        };
        if let Some(e) = entries.get("label") {
            if e.value.is_empty() || e.value.contains(|c: char| c.is_whitespace() || c == ',') {
                return Err(e.error("label", "must be non-empty without whitespace or commas"));
            }
            case_label = e.value.clone();
        }

        let mut solver = SolverOptions::with_horizon(params.horizon)?;
        if let Some(e) = entries.get("n_steps") {
            let n: usize = e.parse("n_steps")?;
            solver.grid = TimeGrid::new(0.0, params.horizon, n)
                .map_err(|err| e.error("n_steps", err.to_string()))?;
        }
        if let Some(e) = entries.get("tol") {
            solver.tol = e.parse("tol")?;
        }
        if let Some(e) = entries.get("relaxation") {
            solver.relaxation = e.parse("relaxation")?;
        }
        if let Some(e) = entries.get("max_iters") {
            solver.max_iters = e.parse("max_iters")?;
        }
        if let Err(Error::Invalid { field, reason }) = solver.validate() {
            return Err(match entries.get(field) {
                Some(e) => e.error(field, reason),
                None => Error::Invalid { field, reason },
            });
        }

        let scenario = Scenario {
            params,
            initial,
            case_label,
            strategy,
            solver,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    /// Serializes every field so that [`Scenario::parse`] reproduces it exactly.
    pub fn to_document(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "label = {}", self.case_label);
        let _ = writeln!(out, "strategy = {}", self.strategy.index());
        let _ = writeln!(out, "n_steps = {}", self.solver.grid.n_steps);
        let _ = writeln!(out, "tol = {}", self.solver.tol);
        let _ = writeln!(out, "relaxation = {}", self.solver.relaxation);
        let _ = writeln!(out, "max_iters = {}", self.solver.max_iters);
        for (name, value) in self.params.fields() {
            let _ = writeln!(out, "{name} = {value}");
        }
        for (key, value) in INIT_KEYS.iter().zip(self.initial.to_array()) {
            let _ = writeln!(out, "{key} = {value}");
        }
        out
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Scenario::parse(&text)
}

pub fn save_scenario(scenario: &Scenario, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, scenario.to_document()).map_err(|e| Error::io(path, e))
}
