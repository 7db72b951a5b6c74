//! Static SVG line charts of a persisted run, one polyline per road.

use std::fmt::Write;
use std::str::FromStr;

use thiserror::Error;

use crate::graph::RoadId;
use crate::output::StepRow;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Series {
    X,
    XHat,
    D,
}

impl Series {
    pub fn name(self) -> &'static str {
        match self {
            Series::X => "x",
            Series::XHat => "x_hat",
            Series::D => "d",
        }
    }

    fn value(self, row: &StepRow) -> Option<f64> {
        match self {
            Series::X => Some(row.x),
            Series::XHat => Some(row.x_hat),
            Series::D => row.d,
        }
    }
}

impl FromStr for Series {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "x" => Ok(Series::X),
            "x_hat" => Ok(Series::XHat),
            "d" => Ok(Series::D),
            other => Err(format!("unknown series `{other}` (expected x, x_hat or d)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlotError {
    #[error("empty road selection")]
    EmptySelection,
    #[error("road {0} not present in run")]
    UnknownRoad(RoadId),
    #[error("run has no rows")]
    EmptyRun,
}

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 540.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

/// Data-to-pixel mapping of a chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub k_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Frame {
    pub fn px_x(&self, k: f64) -> f64 {
        LEFT + (WIDTH - LEFT - RIGHT)
            * if self.k_max > 0.0 {
                k / self.k_max
            } else {
                0.0
            }
    }

    pub fn px_y(&self, y: f64) -> f64 {
        let span = self.y_max - self.y_min;
        let t = if span > 0.0 {
            (y - self.y_min) / span
        } else {
            0.5
        };
        HEIGHT - BOTTOM - (HEIGHT - TOP - BOTTOM) * t
    }
}

pub struct Chart {
    pub frame: Frame,
    pub svg: String,
}

/// Renders the chosen series for `roads` (all roads when `None`).
pub fn render_svg(
    rows: &[StepRow],
    roads: Option<&[RoadId]>,
    series: Series,
) -> Result<Chart, PlotError> {
    if rows.is_empty() {
        return Err(PlotError::EmptyRun);
    }
    let mut known: Vec<u32> = rows.iter().map(|r| r.road).collect();
    known.sort_unstable();
    known.dedup();
    let selected: Vec<u32> = match roads {
        None => known.clone(),
        Some([]) => return Err(PlotError::EmptySelection),
        Some(list) => {
            for r in list {
                if known.binary_search(&r.0).is_err() {
                    return Err(PlotError::UnknownRoad(*r));
                }
            }
            list.iter().map(|r| r.0).collect()
        }
    };

    let lines: Vec<(u32, Vec<(f64, f64)>)> = selected
        .iter()
        .map(|&road| {
            let pts = rows
                .iter()
                .filter(|r| r.road == road)
                .filter_map(|r| series.value(r).map(|v| (r.k as f64, v)))
                .collect();
            (road, pts)
        })
        .collect();

    let k_max = rows.iter().map(|r| r.k).max().unwrap_or(0) as f64;
    let (mut y_min, mut y_max) = lines
        .iter()
        .flat_map(|(_, pts)| pts.iter().map(|p| p.1))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
    if !y_min.is_finite() {
        (y_min, y_max) = (0.0, 1.0);
    }
    if series != Series::D {
        y_min = y_min.min(0.0);
    }
    let frame = Frame {
        k_max,
        y_min,
        y_max,
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (x0, x1) = (frame.px_x(0.0), frame.px_x(k_max));
    let (y0, y1) = (HEIGHT - BOTTOM, TOP);
    let _ = writeln!(
        svg,
        r#"<path d="M{x0:.2} {y1:.2} L{x0:.2} {y0:.2} L{x1:.2} {y0:.2}" fill="none" stroke="black"/>"#
    );
    for (label, k) in [("0".to_string(), 0.0), (format!("{k_max}"), k_max)] {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{label}</text>"#,
            frame.px_x(k),
            y0 + 16.0
        );
    }
    for v in [y_min, y_max] {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="end">{}</text>"#,
            x0 - 6.0,
            frame.px_y(v) + 4.0,
            fmt_tick(v)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-size="14" text-anchor="middle">k</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{:.2}" font-size="14" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        series.name()
    );

    for (idx, (road, pts)) in lines.iter().enumerate() {
        let mut points = String::new();
        for (n, &(k, v)) in pts.iter().enumerate() {
            if n > 0 {
                points.push(' ');
            }
            let _ = write!(points, "{:.2},{:.2}", frame.px_x(k), frame.px_y(v));
        }
        let _ = writeln!(
            svg,
            r#"<polyline data-road="{road}" points="{points}" fill="none" stroke="{}" stroke-width="1"/>"#,
            PALETTE[idx % PALETTE.len()]
        );
    }
    svg.push_str("</svg>\n");
    Ok(Chart { frame, svg })
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}
