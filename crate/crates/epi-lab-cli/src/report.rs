//! Sweep reports and their CSV/JSON/SVG serializations.
//!
//! CSV columns are fixed as `gamma,I,h_x_given_y,mmse,residual,error_estimate`;
//! floats print in Rust's shortest round-trip form so identical runs produce
//! identical bytes and re-parsing reproduces every value exactly.

use crate::config::ExperimentConfig;
use crate::CliError;
use epi_lab_core::epi::{DiscreteViolation, EpiVerdict};
use epi_lab_core::limits::{LimitVerdict, RateFit};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct Row {
    pub gamma: f64,
    #[serde(rename = "I")]
    pub i: Option<f64>,
    pub h_x_given_y: Option<f64>,
    pub mmse: Option<f64>,
    pub residual: Option<f64>,
    pub error_estimate: f64,
}

impl Row {
    pub fn at(gamma: f64) -> Self {
        Self {
            gamma,
            i: None,
            h_x_given_y: None,
            mmse: None,
            residual: None,
            error_estimate: 0.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VerdictRecord {
    Limit(LimitVerdict),
    RateFit(RateFit),
    Epi(EpiVerdict),
    DiscreteViolation(DiscreteViolation),
    PyramidAgreement {
        gamma: f64,
        scale: f64,
        points: usize,
        max_abs_diff: f64,
    },
    Domination {
        gamma: f64,
        probes: usize,
        violations: usize,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub config: ExperimentConfig,
    pub rows: Vec<Row>,
    pub verdicts: Vec<VerdictRecord>,
    /// Named scalar outcomes (entropy values, slacks, fitted exponents).
    pub extras: BTreeMap<String, f64>,
    pub wall_time_s: f64,
}

impl SweepReport {
    pub fn new(config: ExperimentConfig) -> Self {
        Self {
            config,
            rows: Vec::new(),
            verdicts: Vec::new(),
            extras: BTreeMap::new(),
            wall_time_s: 0.0,
        }
    }

    /// Rows must arrive sorted by gamma and with finite error estimates.
    pub fn validate(&self) -> Result<(), CliError> {
        if self
            .rows
            .windows(2)
            .any(|w| !(w[0].gamma <= w[1].gamma))
        {
            return Err(CliError::Config {
                field: "rows".into(),
                reason: "rows must be sorted by gamma".into(),
            });
        }
        if self.rows.iter().any(|r| !r.error_estimate.is_finite()) {
            return Err(CliError::Config {
                field: "rows".into(),
                reason: "every row needs a finite error estimate".into(),
            });
        }
        Ok(())
    }

    pub fn csv_string(&self) -> String {
        let mut s = String::from("gamma,I,h_x_given_y,mmse,residual,error_estimate\n");
        let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.gamma,
                cell(r.i),
                cell(r.h_x_given_y),
                cell(r.mmse),
                cell(r.residual),
                r.error_estimate
            ));
        }
        s
    }

    pub fn svg_string(&self) -> String {
        render_svg(self)
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io_err = |e: std::io::Error| CliError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    };
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(io_err)?;
        }
    }
    let mut f = std::fs::File::create(path).map_err(io_err)?;
    f.write_all(bytes).map_err(io_err)
}

pub fn emit_csv(report: &SweepReport, path: &Path) -> Result<(), CliError> {
    report.validate()?;
    write_file(path, report.csv_string().as_bytes())
}

pub fn emit_json(report: &SweepReport, path: &Path) -> Result<(), CliError> {
    report.validate()?;
    let mut text = serde_json::to_string_pretty(report).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

pub fn emit_svg(report: &SweepReport, path: &Path) -> Result<(), CliError> {
    write_file(path, render_svg(report).as_bytes())
}

const W: f64 = 640.0;
const H: f64 = 480.0;
const MARGIN: f64 = 64.0;

/// Log-log plot of residual (or |I|, or MMSE) against gamma, with the fitted
/// rate line overlaid when a fit is present.
fn render_svg(report: &SweepReport) -> String {
    let pts: Vec<(f64, f64)> = report
        .rows
        .iter()
        .filter_map(|r| {
            let v = r.residual.or(r.i.map(f64::abs)).or(r.mmse)?;
            (v > 0.0 && r.gamma > 0.0).then(|| (r.gamma.log10(), v.log10()))
        })
        .collect();

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {W} {H}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    let (x0, y0, x1, y1) = (MARGIN, H - MARGIN, W - MARGIN, MARGIN);
    svg.push_str(&format!(
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>\n"
    ));
    svg.push_str(&format!(
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\">gamma (log10)</text>\n",
        0.5 * W,
        H - 16.0
    ));
    svg.push_str(&format!(
        "<text x=\"18\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">residual (log10)</text>\n",
        0.5 * H,
        0.5 * H
    ));

    if !pts.is_empty() {
        let (mut lo_x, mut hi_x) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut lo_y, mut hi_y) = (f64::INFINITY, f64::NEG_INFINITY);
        for (x, y) in &pts {
            lo_x = lo_x.min(*x);
            hi_x = hi_x.max(*x);
            lo_y = lo_y.min(*y);
            hi_y = hi_y.max(*y);
        }
        if hi_x - lo_x < 1e-9 {
            hi_x = lo_x + 1.0;
        }
        if hi_y - lo_y < 1e-9 {
            hi_y = lo_y + 1.0;
        }
        let sx = |x: f64| x0 + (x - lo_x) / (hi_x - lo_x) * (x1 - x0);
        let sy = |y: f64| y0 - (y - lo_y) / (hi_y - lo_y) * (y0 - y1);

        for k in (lo_x.ceil() as i64)..=(hi_x.floor() as i64) {
            let px = sx(k as f64);
            svg.push_str(&format!(
                "<line x1=\"{px}\" y1=\"{y0}\" x2=\"{px}\" y2=\"{}\" stroke=\"black\"/>\n",
                y0 + 5.0
            ));
            svg.push_str(&format!(
                "<text x=\"{px}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\">1e{k}</text>\n",
                y0 + 18.0
            ));
        }
        for k in (lo_y.ceil() as i64)..=(hi_y.floor() as i64) {
            let py = sy(k as f64);
            svg.push_str(&format!(
                "<line x1=\"{}\" y1=\"{py}\" x2=\"{x0}\" y2=\"{py}\" stroke=\"black\"/>\n",
                x0 - 5.0
            ));
            svg.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\">1e{k}</text>\n",
                x0 - 8.0,
                py + 4.0
            ));
        }

        let poly: Vec<String> = pts
            .iter()
            .map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y)))
            .collect();
        svg.push_str(&format!(
            "<polyline class=\"data\" fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            poly.join(" ")
        ));

        // overlay the fitted rate line where one was computed
        let fit = report.verdicts.iter().find_map(|v| match v {
            VerdictRecord::RateFit(f) => Some((f.exponent, f.constant)),
            VerdictRecord::Limit(l) => l.fitted_exponent.zip(l.fitted_constant),
            _ => None,
        });
        if let Some((expo, c)) = fit {
            let f = |x: f64| c.log10() + expo * x; // log10 r = log10 C + p log10 g
            svg.push_str(&format!(
                "<line class=\"fit\" x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"crimson\" stroke-dasharray=\"6 3\"/>\n",
                sx(lo_x), sy(f(lo_x)), sx(hi_x), sy(f(hi_x))
            ));
            svg.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-size=\"12\" fill=\"crimson\">slope {expo:.3}</text>\n",
                x0 + 12.0,
                y1 + 16.0
            ));
        }
    }
    svg.push_str("</svg>\n");
    svg
}
