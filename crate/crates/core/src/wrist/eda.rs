use crate::series::{Channel, SampleSeries};

/// Span of the centered moving average that defines EDA tonic level.
pub const EDA_TONIC_SPAN_S: f64 = 10.0;

/// Centered moving average over `span_s` seconds (`2h + 1` samples with
/// `h = floor(span_s * rate / 2)`), truncated at the edges. Only valid
/// samples contribute; output validity follows the input.
pub fn moving_average(series: &SampleSeries, span_s: f64) -> SampleSeries {
    let half = ((span_s * series.rate.as_f64()).round() as usize) / 2;
    let n = series.len();
    let mut values = vec![0.0; n];
    for (i, out) in values.iter_mut().enumerate() {
        if !series.valid[i] {
            continue;
        }
        let lo = i.saturating_sub(half);
        let hi = (i + half + 1).min(n);
        let (mut sum, mut count) = (0.0, 0usize);
        for j in lo..hi {
            if series.valid[j] {
                sum += series.values[j];
                count += 1;
            }
        }
        *out = sum / count as f64;
    }
    SampleSeries { channel: series.channel, rate: series.rate, start: series.start, values, valid: series.valid.clone() }
}

/// Splits skin conductance into a slow tonic level (10-s centered moving
/// average) and the phasic residual. `tonic + phasic` reconstructs the
/// input sample for sample.
pub fn eda_decompose(eda: &SampleSeries) -> (SampleSeries, SampleSeries) {
    let tonic = moving_average(eda, EDA_TONIC_SPAN_S).with_channel(Channel::EdaTonic);
    let values = eda
        .values
        .iter()
        .zip(&tonic.values)
        .zip(&eda.valid)
        .map(|((v, t), ok)| if *ok { v - t } else { 0.0 })
        .collect();
    let phasic = SampleSeries {
        channel: Channel::EdaPhasic,
        rate: eda.rate,
        start: eda.start,
        values,
        valid: eda.valid.clone(),
    };
    (tonic, phasic)
}
