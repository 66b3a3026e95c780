//! Static SVG figures: learning curves and indicators versus ring.

use std::fs;
use std::ops::Range;
use std::path::Path;

use anyhow::{anyhow, Context, Result};
use plotters::coord::Shift;
use plotters::prelude::*;

use crate::config::{Algorithm, RingName};
use crate::experiment::{Phase, RunRecord, METRICS};
use crate::output::{group_runs, AggregateRow};
use crate::stats::{mean_ci95, moving_average};

/// Episodes in the moving average of the learning curves.
pub const SMOOTHING: usize = 20;

const COLORS: [RGBColor; 9] = [
    RGBColor(31, 119, 180),
    RGBColor(214, 39, 40),
    RGBColor(44, 160, 44),
    RGBColor(255, 127, 14),
    RGBColor(148, 103, 189),
    RGBColor(140, 86, 75),
    RGBColor(227, 119, 194),
    RGBColor(127, 127, 127),
    RGBColor(23, 190, 207),
];

fn plot_err<E: std::fmt::Display>(e: E) -> anyhow::Error {
    anyhow!("plotting failed: {e}")
}

/// A line with a confidence band.
struct Band {
    label: String,
    x: Vec<f64>,
    mean: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

fn padded_range(bands: &[&Band]) -> Range<f64> {
    let lo = bands.iter().flat_map(|b| b.lo.iter()).copied().fold(f64::INFINITY, f64::min);
    let hi = bands.iter().flat_map(|b| b.hi.iter()).copied().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() || !hi.is_finite() {
        return 0.0..1.0;
    }
    let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5 * lo.abs().max(1.0) };
    (lo - pad)..(hi + pad)
}

fn draw_panel(
    area: &DrawingArea<SVGBackend, Shift>,
    title: &str,
    x_desc: &str,
    x_range: Range<f64>,
    bands: &[(usize, &Band)],
    ring_axis: bool,
) -> Result<()> {
    let y_range = padded_range(&bands.iter().map(|(_, b)| *b).collect::<Vec<_>>());
    let mut chart = ChartBuilder::on(area)
        .caption(title, ("sans-serif", 16))
        .margin(8)
        .x_label_area_size(32)
        .y_label_area_size(56)
        .build_cartesian_2d(x_range, y_range)
        .map_err(plot_err)?;
    let ring_label = |x: &f64| {
        RingName::ALL
            .iter()
            .find(|r| (r.index() as f64 - x).abs() < 1e-9)
            .map_or(String::new(), |r| r.label())
    };
    let mut mesh = chart.configure_mesh();
    mesh.x_desc(x_desc);
    if ring_axis {
        mesh.x_labels(5).x_label_formatter(&ring_label);
    }
    mesh.draw().map_err(plot_err)?;
    for &(color, band) in bands {
        let c = COLORS[color % COLORS.len()];
        let mut outline: Vec<(f64, f64)> = band.x.iter().copied().zip(band.hi.iter().copied()).collect();
        outline.extend(band.x.iter().copied().zip(band.lo.iter().copied()).rev());
        chart
            .draw_series(std::iter::once(Polygon::new(outline, c.mix(0.2).filled())))
            .map_err(plot_err)?;
        let line: Vec<(f64, f64)> = band.x.iter().copied().zip(band.mean.iter().copied()).collect();
        chart
            .draw_series(LineSeries::new(line.clone(), c.stroke_width(2)))
            .map_err(plot_err)?
            .label(band.label.clone())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], c.stroke_width(2)));
        if ring_axis {
            chart
                .draw_series(line.into_iter().map(|p| Circle::new(p, 3, c.filled())))
                .map_err(plot_err)?;
        }
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.85))
        .border_style(BLACK)
        .draw()
        .map_err(plot_err)?;
    Ok(())
}

/// Per-episode curves of one group: smoothed per seed, then mean and CI
/// across seeds over the episodes every seed reached.
fn learning_bands(runs: &[&RunRecord], label: &str) -> Result<Option<(Band, Band)>> {
    let series: Vec<Vec<(f64, f64)>> = runs
        .iter()
        .map(|r| {
            let train: Vec<_> = r.training().collect();
            let rows: Vec<_> = if train.is_empty() {
                r.episodes.iter().filter(|e| e.phase == Phase::Eval).collect()
            } else {
                train
            };
            let reward = moving_average(&rows.iter().map(|e| e.reward).collect::<Vec<_>>(), SMOOTHING);
            let success = moving_average(
                &rows.iter().map(|e| if e.success { 1.0 } else { 0.0 }).collect::<Vec<_>>(),
                SMOOTHING,
            );
            reward.into_iter().zip(success).collect()
        })
        .collect();
    let len = series.iter().map(Vec::len).min().unwrap_or(0);
    if len == 0 {
        return Ok(None);
    }
    let mut reward = Band { label: label.to_string(), x: Vec::new(), mean: Vec::new(), lo: Vec::new(), hi: Vec::new() };
    let mut success = Band { label: label.to_string(), x: Vec::new(), mean: Vec::new(), lo: Vec::new(), hi: Vec::new() };
    for i in 0..len {
        for (band, pick) in [(&mut reward, 0), (&mut success, 1)] {
            let v: Vec<f64> = series.iter().map(|s| if pick == 0 { s[i].0 } else { s[i].1 }).collect();
            let ci = mean_ci95(&v)?;
            band.x.push(i as f64);
            band.mean.push(ci.mean);
            band.lo.push(ci.lower());
            band.hi.push(ci.upper());
        }
    }
    Ok(Some((reward, success)))
}

fn ring_bands(rows: &[AggregateRow], metric: &str) -> Vec<(usize, Band)> {
    let mut out = Vec::new();
    for (i, alg) in Algorithm::ALL.iter().enumerate() {
        let mut band = Band { label: alg.to_string(), x: Vec::new(), mean: Vec::new(), lo: Vec::new(), hi: Vec::new() };
        for row in rows.iter().filter(|r| r.algorithm == *alg) {
            let ci = row.metric(metric).expect("known metric");
            band.x.push(row.ring.index() as f64);
            band.mean.push(ci.mean);
            band.lo.push(ci.lower());
            band.hi.push(ci.upper());
        }
        if !band.x.is_empty() {
            out.push((i, band));
        }
    }
    out
}

fn ring_figure(path: &Path, rows: &[AggregateRow], panels: &[(&str, &str)], grid: (usize, usize)) -> Result<()> {
    let root = SVGBackend::new(path, (480 * grid.1 as u32, 340 * grid.0 as u32)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    for (area, (metric, title)) in root.split_evenly(grid).iter().zip(panels) {
        debug_assert!(METRICS.contains(metric));
        let bands = ring_bands(rows, metric);
        let refs: Vec<(usize, &Band)> = bands.iter().map(|(c, b)| (*c, b)).collect();
        draw_panel(area, title, "UE distance ring", -0.25..2.25, &refs, true)?;
    }
    root.present().map_err(plot_err)?;
    Ok(())
}

/// Writes `learning.svg`, `qoe_vs_ring.svg` and `throughput_vs_ring.svg`.
pub fn write_plots(dir: &Path, records: &[RunRecord], rows: &[AggregateRow]) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;

    let mut curves = Vec::new();
    for (i, ((alg, ring), runs)) in group_runs(records).into_iter().enumerate() {
        if let Some(b) = learning_bands(&runs, &format!("{alg} {ring}"))? {
            curves.push((i, b));
        }
    }
    let learning = dir.join("learning.svg");
    let root = SVGBackend::new(&learning, (960, 720)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let halves = root.split_evenly((2, 1));
    let x_max = curves.iter().map(|(_, (r, _))| r.x.len()).max().unwrap_or(1).max(2) as f64;
    let reward: Vec<(usize, &Band)> = curves.iter().map(|(c, (r, _))| (*c, r)).collect();
    let success: Vec<(usize, &Band)> = curves.iter().map(|(c, (_, s))| (*c, s)).collect();
    draw_panel(&halves[0], "Team reward per window", "episode", 0.0..x_max, &reward, false)?;
    draw_panel(&halves[1], "Success rate", "episode", 0.0..x_max, &success, false)?;
    root.present().map_err(plot_err)?;

    ring_figure(
        &dir.join("qoe_vs_ring.svg"),
        rows,
        &[("xqi", "XR quality index"), ("jitter_ms", "Jitter (ms)"), ("delay_ms", "Delay (ms)"), ("plr", "Packet loss ratio")],
        (2, 2),
    )?;
    ring_figure(
        &dir.join("throughput_vs_ring.svg"),
        rows,
        &[
            ("throughput_ar_mbps", "AR throughput (Mbps)"),
            ("throughput_vr_mbps", "VR throughput (Mbps)"),
            ("throughput_cg_mbps", "CG throughput (Mbps)"),
            ("goodput_ar_mbps", "AR goodput (Mbps)"),
            ("goodput_vr_mbps", "VR goodput (Mbps)"),
            ("goodput_cg_mbps", "CG goodput (Mbps)"),
        ],
        (2, 3),
    )?;
    Ok(())
}
