use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Milliseconds since the Unix epoch, UTC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Timestamp(pub i64);

impl Timestamp {
    pub const ZERO: Timestamp = Timestamp(0);

    pub fn from_millis(ms: i64) -> Self {
        Timestamp(ms)
    }

    pub fn from_secs_f64(s: f64) -> Self {
        Timestamp((s * 1000.0).round() as i64)
    }

    pub fn millis(self) -> i64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1000.0
    }

    pub fn add_ms(self, ms: i64) -> Self {
        Timestamp(self.0 + ms)
    }

    pub fn add_secs(self, s: f64) -> Self {
        self.add_ms(secs_to_ms(s))
    }

    /// Signed difference `self - other` in seconds.
    pub fn secs_since(self, other: Timestamp) -> f64 {
        (self.0 - other.0) as f64 / 1000.0
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}ms", self.0)
    }
}

pub fn secs_to_ms(s: f64) -> i64 {
    (s * 1000.0).round() as i64
}

/// A positive rational sampling rate in Hz.
///
/// Sample `i` of a series lies at `start + floor(i * 1000 * den / num)` ms,
/// so long sessions never accumulate floating-point drift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Rate {
    num: u32,
    den: u32,
}

impl Rate {
    pub fn new(num: u32, den: u32) -> Result<Self> {
        if num == 0 || den == 0 {
            return Err(Error::validation(format!("rate {num}/{den} must be positive")));
        }
        let g = gcd(num, den);
        Ok(Rate { num: num / g, den: den / g })
    }

    pub fn hz(hz: u32) -> Self {
        Rate::new(hz, 1).expect("integer rate must be positive")
    }

    pub fn num(self) -> u32 {
        self.num
    }

    pub fn den(self) -> u32 {
        self.den
    }

    pub fn as_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Offset of sample `i` from the series start, in ms.
    pub fn offset_ms(self, i: usize) -> i64 {
        ((i as i128 * 1000 * self.den as i128) / self.num as i128) as i64
    }

    /// Nominal sample period in ms (may be fractional).
    pub fn period_ms(self) -> f64 {
        1000.0 * self.den as f64 / self.num as f64
    }

    /// Smallest index whose offset is >= `offset_ms`.
    pub fn index_ceil(self, offset_ms: i64) -> usize {
        if offset_ms <= 0 {
            return 0;
        }
        let n = self.num as i128;
        let d = 1000 * self.den as i128;
        // ceil(offset * n / d) is an exact index whose floor-offset is >= offset
        // or one past it; step back while the previous index still qualifies.
        let mut i = ((offset_ms as i128 * n + d - 1) / d) as usize;
        while i > 0 && self.offset_ms(i - 1) >= offset_ms {
            i -= 1;
        }
        while self.offset_ms(i) < offset_ms {
            i += 1;
        }
        i
    }

    /// Number of samples that fit in `duration_ms` starting at offset 0.
    pub fn samples_in(self, duration_ms: i64) -> usize {
        self.index_ceil(duration_ms)
    }
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl FromStr for Rate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::validation(format!("invalid rate {s:?}"));
        match s.trim().split_once('/') {
            Some((n, d)) => Rate::new(n.trim().parse().map_err(|_| bad())?, d.trim().parse().map_err(|_| bad())?),
            None => Rate::new(s.trim().parse().map_err(|_| bad())?, 1),
        }
    }
}

impl TryFrom<String> for Rate {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Rate> for String {
    fn from(r: Rate) -> String {
        r.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_reduces_and_parses() {
        assert_eq!(Rate::new(64, 2).unwrap(), Rate::hz(32));
        assert_eq!("1/2".parse::<Rate>().unwrap().as_f64(), 0.5);
        assert!("0".parse::<Rate>().is_err());
        assert_eq!(Rate::new(3, 2).unwrap().to_string(), "3/2");
    }

    #[test]
    fn offsets_do_not_drift() {
        let r = Rate::hz(32);
        assert_eq!(r.offset_ms(32 * 3600), 3_600_000);
        assert_eq!(r.offset_ms(1), 31);
        assert_eq!(r.offset_ms(3), 93);
    }

    #[test]
    fn index_ceil_matches_scan() {
        for rate in [Rate::hz(32), Rate::hz(4), Rate::new(3, 7).unwrap(), Rate::hz(64)] {
            for off in -5..5000i64 {
                let scan = (0..).find(|&i| rate.offset_ms(i) >= off).unwrap();
                assert_eq!(rate.index_ceil(off), scan, "rate {rate} offset {off}");
            }
        }
    }
}
