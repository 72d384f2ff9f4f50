use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{fmt_sig9, malformed};
use crate::error::{Error, Result};
use crate::series::{Channel, SampleSeries};
use crate::time::Timestamp;

/// What a raw channel file contains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RawFile {
    Single(Channel),
    /// `t_ms,x,y,z` accelerometer rows.
    Acc,
}

impl RawFile {
    fn channels(self) -> Vec<Channel> {
        match self {
            RawFile::Single(c) => vec![c],
            RawFile::Acc => vec![Channel::AccX, Channel::AccY, Channel::AccZ],
        }
    }

    fn header(self) -> &'static str {
        match self {
            RawFile::Single(_) => "t_ms,value",
            RawFile::Acc => "t_ms,x,y,z",
        }
    }
}

const RATE_TOLERANCE: f64 = 0.01;

/// Parses one raw channel CSV onto a uniform grid.
///
/// An optional first line `# rate_hz=<rate>` overrides the channel's
/// default native rate. Missing grid positions become invalid samples.
pub fn parse_channel_file(path: &Path, kind: RawFile) -> Result<Vec<SampleSeries>> {
    let text = fs::read_to_string(path)?;
    let channels = kind.channels();
    let mut rate = channels[0].default_rate();
    let mut lines = text.lines().enumerate().peekable();

    if let Some((n, first)) = lines.peek().copied() {
        if let Some(decl) = first.trim().strip_prefix('#') {
            let decl = decl.trim();
            let value = decl
                .strip_prefix("rate_hz=")
                .ok_or_else(|| malformed(path, n + 1, format!("unrecognized directive {decl:?}")))?;
            rate = value.parse().map_err(|e: Error| malformed(path, n + 1, e.to_string()))?;
            lines.next();
        }
    }
    match lines.next() {
        Some((_, h)) if h.trim() == kind.header() => {}
        Some((n, h)) => return Err(malformed(path, n + 1, format!("expected header {:?}, got {h:?}", kind.header()))),
        None => return Err(malformed(path, 1, "empty file")),
    }

    let width = channels.len();
    let mut times: Vec<i64> = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (n, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != width + 1 {
            return Err(malformed(path, n + 1, format!("expected {} columns, got {}", width + 1, cols.len())));
        }
        let t: i64 = cols[0].parse().map_err(|_| malformed(path, n + 1, format!("bad timestamp {:?}", cols[0])))?;
        if t < 0 {
            return Err(malformed(path, n + 1, "negative timestamp"));
        }
        if let Some(&prev) = times.last() {
            if t <= prev {
                return Err(malformed(path, n + 1, format!("timestamp {t} not after {prev}")));
            }
        }
        let mut vals = Vec::with_capacity(width);
        for c in &cols[1..] {
            let v: f64 = c.parse().map_err(|_| malformed(path, n + 1, format!("bad value {c:?}")))?;
            if !v.is_finite() {
                return Err(malformed(path, n + 1, format!("non-finite value {c:?}")));
            }
            vals.push(v);
        }
        times.push(t);
        rows.push(vals);
    }

    if times.is_empty() {
        return Ok(channels.into_iter().map(|c| SampleSeries::dense(c, rate, Timestamp::ZERO, Vec::new())).collect());
    }

    let period = rate.period_ms();
    let (mut sum, mut count) = (0.0, 0usize);
    for w in times.windows(2) {
        let dt = (w[1] - w[0]) as f64;
        if dt < 1.5 * period {
            sum += dt;
            count += 1;
        }
    }
    if times.len() > 1 {
        let observed_period = if count > 0 {
            sum / count as f64
        } else {
            (times[times.len() - 1] - times[0]) as f64 / (times.len() - 1) as f64
        };
        if count == 0 || (observed_period / period - 1.0).abs() > RATE_TOLERANCE {
            return Err(Error::RateMismatch {
                file: path.to_path_buf(),
                declared: rate.to_string(),
                observed: 1000.0 / observed_period,
            });
        }
    }

    let t0 = times[0];
    let mut indices = Vec::with_capacity(times.len());
    for (k, &t) in times.iter().enumerate() {
        let idx = ((t - t0) as f64 / period).round() as usize;
        if let Some(&prev) = indices.last() {
            if idx <= prev {
                return Err(malformed(path, k + 2, format!("timestamp {t} collides with the previous grid slot")));
            }
        }
        indices.push(idx);
    }
    let len = indices.last().map_or(0, |i| i + 1);
    let mut out = Vec::with_capacity(width);
    for (col, channel) in channels.into_iter().enumerate() {
        let mut values = vec![0.0; len];
        let mut valid = vec![false; len];
        for (row, &idx) in rows.iter().zip(&indices) {
            values[idx] = row[col];
            valid[idx] = true;
        }
        out.push(SampleSeries::new(channel, rate, Timestamp(t0), values, valid)?);
    }
    Ok(out)
}

/// Writes one or three (accelerometer) series sharing a grid. Only samples
/// valid in every series are written.
pub fn write_channel_file(path: &Path, series: &[&SampleSeries]) -> Result<()> {
    fs::write(path, format_channel(series)?)?;
    Ok(())
}

pub fn format_channel(series: &[&SampleSeries]) -> Result<String> {
    let first = series.first().ok_or_else(|| Error::validation("no series to write"))?;
    if series.iter().any(|s| s.len() != first.len() || s.rate != first.rate || s.start != first.start) {
        return Err(Error::validation("series written together must share a grid"));
    }
    let mut out = String::new();
    if first.rate != first.channel.default_rate() {
        writeln!(out, "# rate_hz={}", first.rate).unwrap();
    }
    out.push_str(if series.len() == 1 { "t_ms,value\n" } else { "t_ms,x,y,z\n" });
    for i in 0..first.len() {
        if !series.iter().all(|s| s.valid[i]) {
            continue;
        }
        write!(out, "{}", first.time_of(i).millis()).unwrap();
        for s in series {
            write!(out, ",{}", fmt_sig9(s.values[i])).unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::Rate;

    #[test]
    fn declared_rate_overrides_default() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("eda.csv");
        let mut body = String::from("# rate_hz=8\nt_ms,value\n");
        for i in 0..16 {
            body.push_str(&format!("{},{}\n", i * 125, i));
        }
        std::fs::write(&path, body).unwrap();
        let s = parse_channel_file(&path, RawFile::Single(Channel::Eda)).unwrap();
        assert_eq!(s[0].rate, Rate::hz(8));
        assert_eq!(s[0].len(), 16);
        let text = format_channel(&[&s[0]]).unwrap();
        assert!(text.starts_with("# rate_hz=8\n"));
    }

    #[test]
    fn non_monotone_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("hr.csv");
        std::fs::write(&path, "t_ms,value\n0,60\n1000,60\n1000,61\n").unwrap();
        assert!(matches!(
            parse_channel_file(&path, RawFile::Single(Channel::Hr)),
            Err(Error::Malformed { line: 4, .. })
        ));
    }
}
