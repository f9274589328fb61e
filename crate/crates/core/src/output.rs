//! CSV emission for trajectories and strategy summaries.
//!
//! Numbers use Rust's shortest round-trip decimal formatting, so output is
//! deterministic and re-reads to the same `f64`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{AdjointVec, ModelParams};
use crate::solver::{SolveReport, StrategyRow};

pub const TRAJECTORY_HEADER: &str =
    "t,S,L1,I,L2,R,u1,u2,lam1,lam2,lam3,lam4,lam5,frac_S,frac_L1,frac_I,frac_L2,frac_R";

pub const SUMMARY_HEADER: &str = "strategy,terminal_IL2,objective,iterations,converged";

/// Renders one row per grid node. Missing costates are written as zeros.
pub fn trajectory_csv(report: &SolveReport, p: &ModelParams) -> Result<String> {
    let traj = &report.trajectory;
    traj.check_lengths()?;
    let mut out = String::with_capacity(traj.grid.len() * 256);
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for (k, t) in traj.grid.nodes().enumerate() {
        let x = traj.states[k];
        let u = traj.controls[k];
        let lam = traj.adjoints.as_ref().map_or(AdjointVec::ZERO, |a| a[k]);
        let _ = write!(out, "{t}");
        let values = x
            .to_array()
            .into_iter()
            .chain(u.to_array())
            .chain(lam.to_array())
            .chain(x.fractions(p.n_total));
        for v in values {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn write_trajectory_csv(
    report: &SolveReport,
    p: &ModelParams,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let text = trajectory_csv(report, p)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// A summary line: label plus the solve outcome, `None` for a failed row.
pub struct SummaryLine<'a> {
    pub label: &'a str,
    pub report: Option<&'a SolveReport>,
}

impl<'a> From<&'a StrategyRow> for SummaryLine<'a> {
    fn from(row: &'a StrategyRow) -> Self {
        SummaryLine {
            label: row.label(),
            report: row.outcome.as_ref().ok(),
        }
    }
}

/// Failed rows keep their label, leave the numeric columns empty and
/// carry `failed` in the `converged` column.
pub fn summary_csv<'a>(lines: impl IntoIterator<Item = SummaryLine<'a>>) -> String {
    let mut out = String::new();
    out.push_str(SUMMARY_HEADER);
    out.push('\n');
    for line in lines {
        match line.report {
            Some(r) => {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    line.label,
                    r.terminal_infected_plus_latent,
                    r.objective,
                    r.iterations,
                    r.converged
                );
            }
            None => {
                let _ = writeln!(out, "{},,,,failed", line.label);
            }
        }
    }
    out
}

pub fn write_summary(rows: &[StrategyRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, summary_csv(rows.iter().map(SummaryLine::from))).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::TimeGrid;
    use crate::model::{StateVec, StrategyMask};
    use crate::scenario::InitialCase;
    use crate::solver::{solve, SolverOptions, COMPARISON_ORDER};

    fn quick_report(mask: StrategyMask) -> (SolveReport, ModelParams) {
        let p = ModelParams::default();
        let opts = SolverOptions {
            grid: TimeGrid::new(0.0, p.horizon, 50).unwrap(),
            ..SolverOptions::default()
        };
        let x0 = InitialCase::Case1.initial(p.n_total);
        (solve(x0, &p, mask, &opts).unwrap(), p)
    }

    #[test]
    fn trajectory_layout() {
        let (report, p) = quick_report(StrategyMask::UNCONTROLLED);
        let csv = trajectory_csv(&report, &p).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], TRAJECTORY_HEADER);
        assert_eq!(lines.len(), 1 + 51);
        let row0: Vec<f64> = lines[1].split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(row0.len(), 18);
        assert_eq!(row0[0], 0.0);
        let expected = [76.0 / 120.0, 0.30, 5.0 / 120.0, 2.0 / 120.0, 1.0 / 120.0];
        for (got, want) in row0[13..].iter().zip(expected) {
            assert!((got - want).abs() < 1e-12);
        }
        for line in &lines[1..] {
            let v: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
            let sum: f64 = v[13..].iter().sum();
            assert!((sum - 1.0).abs() <= 1e-6);
        }
    }

    #[test]
    fn write_to_unwritable_path_fails() {
        let (report, p) = quick_report(StrategyMask::UNCONTROLLED);
        let err = write_trajectory_csv(&report, &p, "/nonexistent/dir/t.csv").unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn summary_rows() {
        let (report, _) = quick_report(StrategyMask::STRATEGY_3);
        let one = summary_csv([SummaryLine {
            label: "strategy3",
            report: Some(&report),
        }]);
        let lines: Vec<&str> = one.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], SUMMARY_HEADER);
        assert_eq!(lines[1].split(',').count(), 5);
        assert!(lines[1].starts_with("strategy3,"));

        let failed: Vec<StrategyRow> = COMPARISON_ORDER
            .iter()
            .map(|&mask| StrategyRow {
                mask,
                outcome: Err(Error::Domain("boom".into())),
            })
            .collect();
        let text = summary_csv(failed.iter().map(SummaryLine::from));
        let rows: Vec<&str> = text.lines().skip(1).collect();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.ends_with(",,,,failed")));
        assert_eq!(rows[3], "uncontrolled,,,,failed");
    }

    #[test]
    fn state_fractions_helper() {
        let x = StateVec::new(1.0, 2.0, 3.0, 4.0, 0.0);
        assert_eq!(x.fractions(10.0), [0.1, 0.2, 0.3, 0.4, 0.0]);
    }
}
