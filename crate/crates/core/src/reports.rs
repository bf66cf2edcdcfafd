//! CSV tables and static SVG charts produced from simulation output.
//!
//! CSV is the canonical output. Charts are rendered from parsed CSV rows, so
//! regenerating a chart from a saved CSV file yields the same SVG.

use std::fmt::Write as _;

use crate::engine::{DayStats, EnsembleSummary, Trajectory};
use crate::scenario::Scenario;
use crate::HURT_LEVELS;

/// Formats with six significant digits, dropping trailing zeros.
pub fn fmt_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    if !(-5..15).contains(&magnitude) {
        return format!("{x:.5e}");
    }
    let decimals = (5 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// One row per simulated day.
pub fn trajectory_csv(scenario: &Scenario, traj: &Trajectory) -> String {
    let ids: Vec<&str> = scenario.areas.iter().map(|a| a.id.as_str()).collect();
    let mut header = vec!["day".to_string()];
    header.extend(ids.iter().map(|id| format!("theta_{id}")));
    header.extend(ids.iter().map(|id| format!("xi_{id}")));
    for id in &ids {
        header.push(format!("n_e_{id}"));
        header.push(format!("n_neg_{id}"));
        header.push(format!("n_pos_{id}"));
    }
    for obs in &scenario.obs_types {
        for id in &ids {
            header.push(format!("obs_pos_{}_{id}", obs.id));
            header.push(format!("obs_neg_{}_{id}", obs.id));
        }
    }
    header.push("expected_loss".into());
    header.push("tail_prob".into());

    let mut out = header.join(",");
    out.push('\n');
    for rec in &traj.records {
        let mut row = vec![rec.day.to_string()];
        row.extend(rec.theta.iter().map(|&t| fmt_sig6(t)));
        row.extend(rec.xi.iter().map(|&x| fmt_sig6(x)));
        for ev in &rec.events {
            row.push(ev.counts.incidents.to_string());
            row.push(ev.counts.unsafe_acts.to_string());
            row.push(ev.counts.safe_acts.to_string());
        }
        for t in 0..scenario.n_obs_types() {
            for a in 0..scenario.n_areas() {
                let c = rec.observations.get(t, a);
                row.push(c.positive.to_string());
                row.push(c.negative.to_string());
            }
        }
        row.push(fmt_sig6(rec.metrics.expected_loss));
        row.push(fmt_sig6(rec.metrics.tail_prob));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Incident-count percentiles per area and Hurt level, one row per area.
pub fn table2_csv(scenario: &Scenario, summary: &EnsembleSummary) -> String {
    let mut out = String::from("area");
    for j in 0..HURT_LEVELS {
        write!(out, ",ahl{j}_p50,ahl{j}_p05,ahl{j}_p95").unwrap();
    }
    out.push('\n');
    for (area, row) in scenario.areas.iter().zip(&summary.incident_percentiles) {
        out.push_str(&area.id);
        for p in row {
            write!(out, ",{},{},{}", p.p50, p.p05, p.p95).unwrap();
        }
        out.push('\n');
    }
    out
}

pub const COMPARE_HEADER: &str =
    "day,mean_expected_loss,std_expected_loss,mean_tail_prob,std_tail_prob";

/// Per-day mean and standard deviation of both aggregate metrics.
pub fn compare_csv(summary: &EnsembleSummary) -> String {
    let mut out = String::from(COMPARE_HEADER);
    out.push('\n');
    for d in &summary.days {
        writeln!(
            out,
            "{},{},{},{},{}",
            d.day,
            fmt_sig6(d.mean_expected_loss),
            fmt_sig6(d.std_expected_loss),
            fmt_sig6(d.mean_tail_prob),
            fmt_sig6(d.std_tail_prob)
        )
        .unwrap();
    }
    out
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CsvError {
    #[error("unexpected header `{0}`")]
    Header(String),
    #[error("line {line}: {message}")]
    Row { line: usize, message: String },
}

pub fn parse_compare_csv(text: &str) -> Result<Vec<DayStats>, CsvError> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header.trim() != COMPARE_HEADER {
        return Err(CsvError::Header(header.to_string()));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let line = i + 2;
            let err = |message: String| CsvError::Row { line, message };
            let fields: Vec<&str> = l.split(',').collect();
            if fields.len() != 5 {
                return Err(err(format!("expected 5 fields, got {}", fields.len())));
            }
            let num = |k: usize| {
                fields[k]
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| err(format!("field {}: {e}", k + 1)))
            };
            Ok(DayStats {
                day: fields[0]
                    .trim()
                    .parse()
                    .map_err(|e| err(format!("day: {e}")))?,
                mean_expected_loss: num(1)?,
                std_expected_loss: num(2)?,
                mean_tail_prob: num(3)?,
                std_tail_prob: num(4)?,
            })
        })
        .collect()
}

/// Incident totals per AHL for one run of each approach.
pub fn severity_counts_csv(rows: &[(String, [u32; HURT_LEVELS])]) -> String {
    let mut out = String::from("approach");
    for j in 0..HURT_LEVELS {
        write!(out, ",ahl{j}").unwrap();
    }
    out.push('\n');
    for (name, counts) in rows {
        out.push_str(name);
        for c in counts {
            write!(out, ",{c}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn parse_severity_counts_csv(
    text: &str,
) -> Result<Vec<(String, [u32; HURT_LEVELS])>, CsvError> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header.trim() != "approach,ahl0,ahl1,ahl2,ahl3,ahl4,ahl5" {
        return Err(CsvError::Header(header.to_string()));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let err = |message: String| CsvError::Row {
                line: i + 2,
                message,
            };
            let fields: Vec<&str> = l.split(',').collect();
            if fields.len() != HURT_LEVELS + 1 {
                return Err(err(format!("expected {} fields", HURT_LEVELS + 1)));
            }
            let mut counts = [0u32; HURT_LEVELS];
            for (c, f) in counts.iter_mut().zip(&fields[1..]) {
                *c = f.trim().parse().map_err(|e| err(format!("{e}")))?;
            }
            Ok((fields[0].to_string(), counts))
        })
        .collect()
}

/// Which metric a chart shows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    ExpectedLoss,
    TailProbability,
}

impl Metric {
    fn title(self) -> &'static str {
        match self {
            Metric::ExpectedLoss => "Expected loss",
            Metric::TailProbability => "Tail probability (AHL >= 4)",
        }
    }

    fn pick(self, d: &DayStats) -> (f64, f64) {
        match self {
            Metric::ExpectedLoss => (d.mean_expected_loss, d.std_expected_loss),
            Metric::TailProbability => (d.mean_tail_prob, d.std_tail_prob),
        }
    }
}

/// One policy's ensemble curve.
#[derive(Debug, Clone)]
pub struct ChartSeries {
    pub label: String,
    pub days: Vec<DayStats>,
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

fn nice_step(range: f64, target_ticks: f64) -> f64 {
    let raw = range / target_ticks;
    let exp = 10f64.powf(raw.log10().floor());
    let f = raw / exp;
    let nice = if f < 1.5 {
        1.0
    } else if f < 3.0 {
        2.0
    } else if f < 7.0 {
        5.0
    } else {
        10.0
    };
    nice * exp
}

/// Mean line plus a ±1 standard deviation band per series, with an optional
/// dotted horizontal asymptote.
pub fn band_chart_svg(metric: Metric, series: &[ChartSeries], asymptote: Option<f64>) -> String {
    let max_day = series
        .iter()
        .flat_map(|s| s.days.iter().map(|d| d.day))
        .max()
        .unwrap_or(1)
        .max(2) as f64;
    let mut y_max = series
        .iter()
        .flat_map(|s| {
            s.days.iter().map(|d| {
                let (m, sd) = metric.pick(d);
                m + sd
            })
        })
        .fold(0.0f64, f64::max);
    if let Some(a) = asymptote {
        y_max = y_max.max(a);
    }
    if y_max <= 0.0 {
        y_max = 1.0;
    }
    let y_step = nice_step(y_max, 5.0);
    let y_top = (y_max / y_step).ceil() * y_step;

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |day: f64| LEFT + (day - 1.0) / (max_day - 1.0) * plot_w;
    let sy = |v: f64| TOP + plot_h - (v / y_top).clamp(0.0, 1.0) * plot_h;

    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(
        svg,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    )
    .unwrap();
    writeln!(
        svg,
        r#"<text x="{:.1}" y="24" font-size="16" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        metric.title()
    )
    .unwrap();

    // grid and y ticks
    let n_y = (y_top / y_step).round() as usize;
    for i in 0..=n_y {
        let v = i as f64 * y_step;
        let y = sy(v);
        writeln!(
            svg,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e0e0e0"/>"##,
            LEFT + plot_w
        )
        .unwrap();
        writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            y + 4.0,
            fmt_sig6(v)
        )
        .unwrap();
    }
    // x ticks
    let x_step = nice_step(max_day, 6.0).max(1.0);
    let mut d = 0.0;
    while d <= max_day {
        let day = d.max(1.0);
        let x = sx(day);
        writeln!(
            svg,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#888"/>"##,
            TOP + plot_h,
            TOP + plot_h + 5.0
        )
        .unwrap();
        writeln!(
            svg,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + plot_h + 18.0,
            day as u32
        )
        .unwrap();
        d += x_step;
    }
    writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">day</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 10.0
    )
    .unwrap();
    writeln!(
        svg,
        r##"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#444"/>"##
    )
    .unwrap();

    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        if s.days.is_empty() {
            continue;
        }
        let upper: Vec<String> = s
            .days
            .iter()
            .map(|d| {
                let (m, sd) = metric.pick(d);
                format!("{:.2},{:.2}", sx(d.day as f64), sy(m + sd))
            })
            .collect();
        let lower: Vec<String> = s
            .days
            .iter()
            .rev()
            .map(|d| {
                let (m, sd) = metric.pick(d);
                format!("{:.2},{:.2}", sx(d.day as f64), sy((m - sd).max(0.0)))
            })
            .collect();
        writeln!(
            svg,
            r#"<polygon points="{} {}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
            upper.join(" "),
            lower.join(" ")
        )
        .unwrap();
        let line: Vec<String> = s
            .days
            .iter()
            .map(|d| format!("{:.2},{:.2}", sx(d.day as f64), sy(metric.pick(d).0)))
            .collect();
        writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.6"/>"#,
            line.join(" ")
        )
        .unwrap();
        let ly = TOP + 14.0 + 18.0 * k as f64;
        let lx = LEFT + plot_w + 12.0;
        writeln!(
            svg,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="3"/>"#,
            lx + 18.0
        )
        .unwrap();
        writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 24.0,
            ly + 4.0,
            escape(&s.label)
        )
        .unwrap();
    }

    if let Some(a) = asymptote {
        let y = sy(a);
        writeln!(
            svg,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#000" stroke-dasharray="2,4" stroke-width="1.2"/>"##,
            LEFT + plot_w
        )
        .unwrap();
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
