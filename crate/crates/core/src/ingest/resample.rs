use crate::series::SampleSeries;
use crate::time::Rate;

/// Last-observation-carried-forward onto a `target` grid starting at the
/// series start and ending before the series end. Validity is carried with
/// the held sample, so gaps stay masked.
pub fn resample_hold(series: &SampleSeries, target: Rate) -> SampleSeries {
    let span_ms = series.end().millis() - series.start.millis();
    let n_out = if series.is_empty() { 0 } else { target.samples_in(span_ms) };
    let mut values = Vec::with_capacity(n_out);
    let mut valid = Vec::with_capacity(n_out);
    let mut j = 0usize;
    for k in 0..n_out {
        let off = target.offset_ms(k);
        while j + 1 < series.len() && series.rate.offset_ms(j + 1) <= off {
            j += 1;
        }
        values.push(series.values[j]);
        valid.push(series.valid[j]);
    }
    SampleSeries { channel: series.channel, rate: target, start: series.start, values, valid }
}
