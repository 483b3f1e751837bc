use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::ExperimentConfig;
use crate::error::Result;

/// Least-squares fit of `log y` against `log x`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Points that entered the fit.
    pub points: usize,
    /// Abscissae inside the window dropped because `y ≤ 0`.
    pub excluded: Vec<f64>,
    /// Fewer than two usable points; slope and intercept are NaN.
    pub degenerate: bool,
}

/// Fit over the points with `x` inside the inclusive `window` and `y > 0`.
pub fn fit_loglog(xs: &[f64], ys: &[f64], window: Option<[f64; 2]>) -> LogLogFit {
    let [lo, hi] = window.unwrap_or([f64::NEG_INFINITY, f64::INFINITY]);
    let mut excluded = Vec::new();
    let mut pts = Vec::new();
    for (&x, &y) in xs.iter().zip(ys) {
        if x < lo || x > hi {
            continue;
        }
        if y > 0.0 && x > 0.0 && y.is_finite() {
            pts.push((x.ln(), y.ln()));
        } else {
            excluded.push(x);
        }
    }
    if pts.len() < 2 {
        return LogLogFit {
            slope: f64::NAN,
            intercept: f64::NAN,
            r_squared: f64::NAN,
            points: pts.len(),
            excluded,
            degenerate: true,
        };
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return LogLogFit {
            slope: f64::NAN,
            intercept: f64::NAN,
            r_squared: f64::NAN,
            points: pts.len(),
            excluded,
            degenerate: true,
        };
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if syy > 0.0 {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    LogLogFit {
        slope,
        intercept,
        r_squared,
        points: pts.len(),
        excluded,
        degenerate: false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    /// Whether this check decides the exit status.
    pub asserted: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, status: Status, asserted: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status,
            asserted,
            detail: detail.into(),
        }
    }

    pub fn from_bool(name: &str, ok: bool, asserted: bool, detail: impl Into<String>) -> Self {
        let status = if ok { Status::Pass } else { Status::Fail };
        Self::new(name, status, asserted, detail)
    }
}

/// Results of one sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    /// `m_sweep`, `eps_sweep` or `bound_check`.
    pub kind: String,
    pub abscissae: Vec<f64>,
    pub kl_values: Vec<f64>,
    /// Bound per point; `None` unless `τ = 1`.
    pub bounds: Vec<Option<f64>>,
    /// Per-interval KLs of each chain (m-sweeps and bound checks).
    pub per_interval_kl: Vec<Vec<f64>>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub fit: LogLogFit,
    pub checks: Vec<Check>,
    pub runtime_seconds: f64,
    pub config: ExperimentConfig,
}

impl RateReport {
    pub fn slope(&self) -> f64 {
        self.fit.slope
    }

    pub fn intercept(&self) -> f64 {
        self.fit.intercept
    }

    pub fn r_squared(&self) -> f64 {
        self.fit.r_squared
    }

    /// `bound − kl` per point.
    pub fn margins(&self) -> Vec<Option<f64>> {
        self.bounds
            .iter()
            .zip(&self.kl_values)
            .map(|(b, k)| b.map(|b| b - k))
            .collect()
    }

    /// True when no asserted check failed.
    pub fn passed(&self) -> bool {
        self.checks
            .iter()
            .all(|c| !c.asserted || c.status != Status::Fail)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// CSV with columns `abscissa,kl,bound,margin`; missing bounds are empty.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = crate::fokker_planck::csv_writer(writer);
        w.write_record(["abscissa", "kl", "bound", "margin"])?;
        for ((x, k), (b, m)) in self
            .abscissae
            .iter()
            .zip(&self.kl_values)
            .zip(self.bounds.iter().zip(self.margins()))
        {
            let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
            w.write_record([x.to_string(), k.to_string(), opt(*b), opt(m)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Paths written by [`emit_report`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReportPaths {
    pub csv: PathBuf,
    pub json: PathBuf,
}

/// Write `<dir>/<stem>.csv` and `<dir>/<stem>.json`, creating `dir`.
pub fn emit_report(report: &RateReport, dir: &Path, stem: &str) -> Result<ReportPaths> {
    fs::create_dir_all(dir)?;
    let csv = dir.join(format!("{stem}.csv"));
    let json = dir.join(format!("{stem}.json"));
    report.write_csv(fs::File::create(&csv)?)?;
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    fs::write(&json, text)?;
    Ok(ReportPaths { csv, json })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exact_power_laws() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let inv: Vec<f64> = xs.iter().map(|x| 3.0 / x).collect();
        let f = fit_loglog(&xs, &inv, None);
        assert_abs_diff_eq!(f.slope, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.intercept, 3f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(f.r_squared, 1.0, epsilon = 1e-12);
        let inv2: Vec<f64> = xs.iter().map(|x| 0.5 / (x * x)).collect();
        assert_abs_diff_eq!(fit_loglog(&xs, &inv2, None).slope, -2.0, epsilon = 1e-12);
    }

    #[test]
    fn zeros_are_excluded_and_flagged() {
        let f = fit_loglog(&[1.0, 2.0, 4.0], &[0.0, 0.5, 0.25], None);
        assert_eq!(f.excluded, vec![1.0]);
        assert_eq!(f.points, 2);
        assert!(!f.degenerate);
        assert_abs_diff_eq!(f.slope, -1.0, epsilon = 1e-12);
        let d = fit_loglog(&[1.0, 2.0], &[0.0, 0.0], None);
        assert!(d.degenerate && d.slope.is_nan());
    }

    #[test]
    fn window_limits_points() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys = [5.0, 0.5, 0.25, 0.125];
        let f = fit_loglog(&xs, &ys, Some([2.0, 8.0]));
        assert_eq!(f.points, 3);
        assert_abs_diff_eq!(f.slope, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn empty_report_writes_header_only() {
        let report = RateReport {
            kind: "m_sweep".into(),
            abscissae: vec![],
            kl_values: vec![],
            bounds: vec![],
            per_interval_kl: vec![],
            c1: None,
            c2: None,
            fit: fit_loglog(&[], &[], None),
            checks: vec![],
            runtime_seconds: 0.0,
            config: ExperimentConfig::benchmark(),
        };
        let dir = tempfile::tempdir().unwrap();
        let paths = emit_report(&report, dir.path(), "empty").unwrap();
        assert_eq!(
            fs::read_to_string(&paths.csv).unwrap(),
            "abscissa,kl,bound,margin\n"
        );
        let json: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(&paths.json).unwrap()).unwrap();
        assert_eq!(json["kl_values"], serde_json::json!([]));
        assert!(json["fit"]["slope"].is_null());
        assert!(report.passed());
    }
}
