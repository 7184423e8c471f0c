//! Parameter sweeps over one ChannelParams field.

use dbs_core::ChannelParams;

use crate::args::{Axis, SweepArgs};
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub axis: Option<Axis>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub axis: Option<Axis>,
    pub value: Option<f64>,
    pub params: ChannelParams,
}

/// `a:b:s` inclusive of `b` (up to rounding), or `x,y,z`. An empty string
/// is an empty sweep.
pub fn parse_values(text: &str) -> Result<Vec<f64>, CliError> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let number = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| CliError::Usage(format!("values: `{s}` is not a number")))
    };
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let [a, b, s] = parts[..] else {
            return Err(CliError::Usage("values: range must be start:stop:step".into()));
        };
        let (a, b, s) = (number(a)?, number(b)?, number(s)?);
        if s.is_nan() || s <= 0.0 || a.is_nan() || b.is_nan() || b < a {
            return Err(CliError::Usage("values: need step > 0 and stop ≥ start".into()));
        }
        let count = ((b - a) / s + 1e-9).floor() as usize + 1;
        if count > 1_000_000 {
            return Err(CliError::Usage("values: more than a million points".into()));
        }
        Ok((0..count).map(|i| a + i as f64 * s).collect())
    } else {
        text.split(',').map(number).collect()
    }
}

impl SweepPlan {
    pub fn from_args(args: &SweepArgs) -> Result<Self, CliError> {
        let values = match &args.values {
            Some(v) => parse_values(v)?,
            None => Vec::new(),
        };
        Ok(SweepPlan {
            axis: args.sweep,
            values,
        })
    }

    /// One point per value; a single point at `base` when there is no axis.
    pub fn points(&self, base: ChannelParams) -> Result<Vec<SweepPoint>, CliError> {
        let Some(axis) = self.axis else {
            return Ok(vec![SweepPoint {
                axis: None,
                value: None,
                params: base,
            }]);
        };
        self.values
            .iter()
            .map(|&v| {
                let params = match axis {
                    Axis::Dimension => {
                        if v.fract() != 0.0 || v < 0.0 {
                            return Err(CliError::Usage(format!("dimension: {v} is not an integer")));
                        }
                        base.with_dimension(v as usize)
                    }
                    Axis::Efficiency => base.with_efficiency(v),
                    Axis::Loss => base.with_efficiency(1.0 - v),
                    Axis::DarkRate => base.with_dark_rate(v),
                    Axis::GateTime => base.with_gate_time(v),
                    Axis::MeanPhotonNumber => base.with_mean_photon_number(v),
                }
                .map_err(|e| CliError::Usage(format!("sweep {}={v}: {e}", axis.name())))?;
                Ok(SweepPoint {
                    axis: Some(axis),
                    value: Some(v),
                    params,
                })
            })
            .collect()
    }
}
