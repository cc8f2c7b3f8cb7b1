//! Static SVG convergence plots: median against cumulative evaluations with
//! a shaded interquartile band, one series per summary.

use plotters::coord::ranged1d::{Ranged, ValueFormatter};
use plotters::coord::types::RangedCoordf64;
use plotters::prelude::*;

use astars::bench::TrialSummary;

use crate::error::{CliError, CliResult};

const COLORS: [RGBColor; 6] = [
    RGBColor(31, 119, 180),
    RGBColor(214, 39, 40),
    RGBColor(44, 160, 44),
    RGBColor(148, 103, 189),
    RGBColor(255, 127, 14),
    RGBColor(23, 190, 207),
];

struct Series {
    label: String,
    /// (evals, q25, median, q75), already shifted.
    points: Vec<(f64, f64, f64, f64)>,
}

fn series_of(s: &TrialSummary, shift: f64) -> Series {
    let points = s
        .rows
        .iter()
        .map(|r| {
            // noiseless values when the oracle exposed them
            let q = r.f.unwrap_or(r.fhat);
            (r.evals as f64, q.q25 - shift, q.median - shift, q.q75 - shift)
        })
        .collect();
    Series {
        label: s.label.clone(),
        points,
    }
}

fn plot_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Plot(e.to_string())
}

fn draw<'a, Y>(
    chart: &mut ChartContext<'a, SVGBackend<'a>, Cartesian2d<RangedCoordf64, Y>>,
    series: &[Series],
    y_desc: &str,
) -> CliResult<()>
where
    Y: Ranged<ValueType = f64> + ValueFormatter<f64>,
{
    chart
        .configure_mesh()
        .x_desc("evaluations")
        .y_desc(y_desc)
        .draw()
        .map_err(plot_err)?;
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut band: Vec<(f64, f64)> = s.points.iter().map(|p| (p.0, p.3)).collect();
        band.extend(s.points.iter().rev().map(|p| (p.0, p.1)));
        chart
            .draw_series(std::iter::once(Polygon::new(band, color.mix(0.2).filled())))
            .map_err(plot_err)?;
        chart
            .draw_series(LineSeries::new(
                s.points.iter().map(|p| (p.0, p.2)),
                color.stroke_width(2),
            ))
            .map_err(plot_err)?
            .label(s.label.clone())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2)));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.85))
        .border_style(BLACK)
        .draw()
        .map_err(plot_err)?;
    Ok(())
}

/// Renders the summaries to an SVG document. The y axis is logarithmic
/// unless some plotted value is not positive.
pub fn render_svg(summaries: &[TrialSummary], shift: f64, title: &str) -> CliResult<String> {
    if summaries.is_empty() {
        return Err(CliError::Usage("no summaries to plot".into()));
    }
    if let Some(s) = summaries.iter().find(|s| s.is_empty()) {
        return Err(CliError::Usage(format!(
            "summary `{}` has no rows to plot",
            s.label
        )));
    }
    let series: Vec<Series> = summaries.iter().map(|s| series_of(s, shift)).collect();
    let all = || series.iter().flat_map(|s| s.points.iter());
    let x0 = all().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let x1 = all().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max).max(x0 + 1.0);
    let lo = all().map(|p| p.1.min(p.2)).fold(f64::INFINITY, f64::min);
    let hi = all().map(|p| p.3.max(p.2)).fold(f64::NEG_INFINITY, f64::max);
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(CliError::Usage("summaries contain non-finite values".into()));
    }
    let y_desc = if shift == 0.0 {
        "median f".to_string()
    } else {
        format!("median f - ({shift})")
    };

    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, (960, 600)).into_drawing_area();
        root.fill(&WHITE).map_err(plot_err)?;
        let mut builder = ChartBuilder::on(&root);
        builder
            .caption(title, ("sans-serif", 22))
            .margin(16)
            .x_label_area_size(45)
            .y_label_area_size(80);
        if lo > 0.0 {
            let mut chart = builder
                .build_cartesian_2d(x0..x1, (lo * 0.8..hi * 1.25).log_scale())
                .map_err(plot_err)?;
            draw(&mut chart, &series, &y_desc)?;
        } else {
            let pad = 0.05 * (hi - lo).max(f64::EPSILON);
            let mut chart = builder
                .build_cartesian_2d(x0..x1, lo - pad..hi + pad)
                .map_err(plot_err)?;
            draw(&mut chart, &series, &y_desc)?;
        }
        root.present().map_err(plot_err)?;
    }
    Ok(svg)
}
