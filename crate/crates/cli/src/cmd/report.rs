use plotters::prelude::*;
use serde_json::{json, Value};

use super::{need_file, parent_dir};
use crate::args::ReportArgs;
use crate::error::{invalid, CliError, Result};
use crate::Ctx;

struct Series {
    name: String,
    points: Vec<(f64, f64)>,
}

/// Numeric columns of a CSV keyed by the first column. Cells that do not
/// parse as numbers are skipped; columns with no number at all are dropped.
fn read_series(text: &str) -> Result<Vec<Series>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| invalid(format!("bad csv header: {e}")))?.clone();
    if headers.len() < 2 {
        return Err(invalid("csv needs an x column and at least one value column"));
    }
    let mut series: Vec<Series> =
        headers.iter().skip(1).map(|h| Series { name: h.to_string(), points: Vec::new() }).collect();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| invalid(format!("bad csv row: {e}")))?;
        let Some(x) = rec.get(0).and_then(|v| v.parse::<f64>().ok()) else { continue };
        for (s, cell) in series.iter_mut().zip(rec.iter().skip(1)) {
            if let Ok(y) = cell.parse::<f64>() {
                if y.is_finite() {
                    s.points.push((x, y));
                }
            }
        }
    }
    series.retain(|s| !s.points.is_empty());
    if series.is_empty() {
        return Err(invalid("csv holds no numeric values"));
    }
    Ok(series)
}

fn bounds(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

fn draw_err<E: std::fmt::Debug>(e: E) -> CliError {
    CliError::Runtime(format!("plot: {e:?}"))
}

pub fn report(a: &ReportArgs, ctx: &Ctx) -> Result<Value> {
    let input = ctx.path(&a.input);
    need_file(&input)?;
    let series = read_series(&std::fs::read_to_string(&input)?)?;
    let out = ctx.path(&a.out);
    parent_dir(&out)?;
    let (x0, x1) = bounds(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let (y0, y1) = bounds(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let title = a.title.clone().unwrap_or_else(|| input.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default());
    {
        let root = SVGBackend::new(&out, (900, 500)).into_drawing_area();
        root.fill(&WHITE).map_err(draw_err)?;
        let mut chart = ChartBuilder::on(&root)
            .caption(&title, ("sans-serif", 22))
            .margin(12)
            .x_label_area_size(36)
            .y_label_area_size(56)
            .build_cartesian_2d(x0..x1, y0..y1)
            .map_err(draw_err)?;
        chart.configure_mesh().draw().map_err(draw_err)?;
        for (i, s) in series.iter().enumerate() {
            let color = Palette99::pick(i).to_rgba();
            chart
                .draw_series(LineSeries::new(s.points.iter().copied(), color.stroke_width(2)))
                .map_err(draw_err)?
                .label(s.name.clone())
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], color.stroke_width(2)));
        }
        chart.configure_series_labels().background_style(WHITE.mix(0.8)).border_style(BLACK).draw().map_err(draw_err)?;
        root.present().map_err(draw_err)?;
    }
    Ok(json!({
        "command": "report",
        "out": out,
        "series": series.iter().map(|s| json!({ "name": s.name, "points": s.points.len() })).collect::<Vec<_>>(),
    }))
}
