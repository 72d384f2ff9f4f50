use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::time::{Rate, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    AccX,
    AccY,
    AccZ,
    AccMag,
    Eda,
    EdaTonic,
    EdaPhasic,
    Temp,
    Bvp,
    Hr,
}

impl Channel {
    pub const ALL: [Channel; 10] = [
        Channel::AccX,
        Channel::AccY,
        Channel::AccZ,
        Channel::AccMag,
        Channel::Eda,
        Channel::EdaTonic,
        Channel::EdaPhasic,
        Channel::Temp,
        Channel::Bvp,
        Channel::Hr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Channel::AccX => "acc_x",
            Channel::AccY => "acc_y",
            Channel::AccZ => "acc_z",
            Channel::AccMag => "acc_mag",
            Channel::Eda => "eda",
            Channel::EdaTonic => "eda_tonic",
            Channel::EdaPhasic => "eda_phasic",
            Channel::Temp => "temp",
            Channel::Bvp => "bvp",
            Channel::Hr => "hr",
        }
    }

    /// Native sampling rate of the wristband when a file does not declare one.
    pub fn default_rate(self) -> Rate {
        match self {
            Channel::AccX | Channel::AccY | Channel::AccZ | Channel::AccMag => Rate::hz(32),
            Channel::Bvp => Rate::hz(64),
            Channel::Eda | Channel::EdaTonic | Channel::EdaPhasic => Rate::hz(4),
            Channel::Temp | Channel::Hr => Rate::hz(1),
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Channel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Channel::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::UnknownChannel(s.to_string()))
    }
}

/// A uniformly sampled channel with a per-sample validity mask.
///
/// Gaps in the source are kept on the grid as invalid samples; their values
/// are meaningless and are stored as 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSeries {
    pub channel: Channel,
    pub rate: Rate,
    pub start: Timestamp,
    pub values: Vec<f64>,
    pub valid: Vec<bool>,
}

impl SampleSeries {
    pub fn new(channel: Channel, rate: Rate, start: Timestamp, values: Vec<f64>, valid: Vec<bool>) -> Result<Self> {
        if values.len() != valid.len() {
            return Err(Error::validation(format!(
                "{channel}: {} values but {} validity flags",
                values.len(),
                valid.len()
            )));
        }
        Ok(SampleSeries { channel, rate, start, values, valid })
    }

    /// A series with every sample valid.
    pub fn dense(channel: Channel, rate: Rate, start: Timestamp, values: Vec<f64>) -> Self {
        let valid = vec![true; values.len()];
        SampleSeries { channel, rate, start, values, valid }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time_of(&self, i: usize) -> Timestamp {
        self.start.add_ms(self.rate.offset_ms(i))
    }

    /// Exclusive end of the series: the timestamp one sample past the last.
    pub fn end(&self) -> Timestamp {
        self.time_of(self.len())
    }

    /// Index range of samples whose timestamps fall in `[from, to)`.
    pub fn index_range(&self, from: Timestamp, to: Timestamp) -> std::ops::Range<usize> {
        let lo = self.rate.index_ceil(from.millis() - self.start.millis()).min(self.len());
        let hi = self.rate.index_ceil(to.millis() - self.start.millis()).min(self.len());
        lo..hi.max(lo)
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    pub fn with_channel(mut self, channel: Channel) -> Self {
        self.channel = channel;
        self
    }
}

/// Euclidean magnitude of three accelerometer axes sharing one grid.
/// A sample is valid only where all three axes are valid.
pub fn acc_magnitude(x: &SampleSeries, y: &SampleSeries, z: &SampleSeries) -> Result<SampleSeries> {
    if x.len() != y.len() || x.len() != z.len() || x.rate != y.rate || x.rate != z.rate || x.start != y.start || x.start != z.start
    {
        return Err(Error::validation("accelerometer axes do not share a sampling grid"));
    }
    let mut values = Vec::with_capacity(x.len());
    let mut valid = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let ok = x.valid[i] && y.valid[i] && z.valid[i];
        valid.push(ok);
        values.push(if ok {
            (x.values[i] * x.values[i] + y.values[i] * y.values[i] + z.values[i] * z.values[i]).sqrt()
        } else {
            0.0
        });
    }
    SampleSeries::new(Channel::AccMag, x.rate, x.start, values, valid)
}
