use crate::error::{Error, Result};

/// A real scalar sampled once every `stride` kicks, starting at kick `t0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
    t0: usize,
    stride: usize,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>, t0: usize, stride: usize) -> Result<Self> {
        if stride == 0 {
            return Err(Error::InvalidParameter {
                name: "stride",
                reason: "must be >= 1".into(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "series value at index {i} is {}",
                values[i]
            )));
        }
        Ok(TimeSeries { values, t0, stride })
    }

    /// Unit-stride series starting at kick 0.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        Self::new(values, 0, 1)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn t0(&self) -> usize {
        self.t0
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    /// Kick index of sample `i`.
    pub fn kick_at(&self, i: usize) -> usize {
        self.t0 + i * self.stride
    }

    /// Index of the first sample at or after `kick`.
    pub fn index_at(&self, kick: usize) -> usize {
        kick.saturating_sub(self.t0).div_ceil(self.stride)
    }

    /// The samples from index `start` on, keeping kick bookkeeping.
    pub fn tail(&self, start: usize) -> TimeSeries {
        let start = start.min(self.values.len());
        TimeSeries {
            values: self.values[start..].to_vec(),
            t0: self.kick_at(start),
            stride: self.stride,
        }
    }

    /// Samples `[start, end)`.
    pub fn window(&self, start: usize, end: usize) -> Result<TimeSeries> {
        if start > end || end > self.values.len() {
            return Err(Error::InvalidParameter {
                name: "window",
                reason: format!(
                    "[{start}, {end}) outside series of length {}",
                    self.values.len()
                ),
            });
        }
        Ok(TimeSeries {
            values: self.values[start..end].to_vec(),
            t0: self.kick_at(start),
            stride: self.stride,
        })
    }

    pub fn with_t0(mut self, t0: usize) -> Self {
        self.t0 = t0;
        self
    }

    pub(crate) fn require_len(&self, needed: usize) -> Result<()> {
        if self.values.len() < needed {
            return Err(Error::InsufficientData {
                needed,
                available: self.values.len(),
            });
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Population standard deviation.
    pub fn std_dev(&self) -> f64 {
        let m = self.mean();
        (self.values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / self.values.len() as f64).sqrt()
    }
}
