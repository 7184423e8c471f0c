//! Where DBS overtakes IPBE on the (P_BE + P_EE)/P_Corr metric.
//!
//! Ties go to DBS: IPBE is preferred only when its ratio is strictly lower.

use serde::Serialize;

use super::{dbs_components, ipbe_components};
use crate::error::{Error, Result};
use crate::params::{ChannelParams, RawChannelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Preference {
    Dbs,
    Ipbe,
}

pub fn preference(params: &ChannelParams) -> Result<Preference> {
    let dbs = dbs_components(params)?.ratio;
    let ipbe = ipbe_components(params)?.ratio;
    Ok(if dbs <= ipbe {
        Preference::Dbs
    } else {
        Preference::Ipbe
    })
}

/// Smallest D in `2..=max_dimension` at which DBS is preferred, keeping the
/// other parameters fixed.
pub fn find_crossover_dimension(params: &ChannelParams, max_dimension: usize) -> Result<Option<usize>> {
    for d in 2..=max_dimension {
        if preference(&params.with_dimension(d)?)? == Preference::Dbs {
            return Ok(Some(d));
        }
    }
    Ok(None)
}

/// Range of loss (1 − η) scanned by [`find_crossover_loss`].
///
/// Both ratios diverge as η → 0 and the DBS one (∝ 1/η²) always overtakes
/// the IPBE one (∝ 1/η) in the last few percent, so the scan stops short of
/// total loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossWindow {
    pub max_loss: f64,
    pub grid_points: usize,
}

pub const DEFAULT_LOSS_WINDOW: LossWindow = LossWindow {
    max_loss: 0.95,
    grid_points: 951,
};

const LOSS_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum LossCrossover {
    /// The preference flips at `loss`.
    Crossing {
        loss: f64,
        dbs_preferred_above: bool,
    },
    DbsDominates,
    IpbeDominates,
}

impl LossCrossover {
    pub fn loss(&self) -> Option<f64> {
        match self {
            LossCrossover::Crossing { loss, .. } => Some(*loss),
            _ => None,
        }
    }
}

/// First loss in the window at which the preferred protocol changes, found
/// on a grid and refined by bisection to 1e-6.
pub fn find_crossover_loss(
    dimension: usize,
    params: &ChannelParams,
    window: LossWindow,
) -> Result<LossCrossover> {
    let base = params.with_dimension(dimension)?;
    let at = |loss: f64| -> Result<Preference> { preference(&base.with_efficiency(1.0 - loss)?) };

    let points = window.grid_points.max(2);
    let step = window.max_loss / (points - 1) as f64;
    let start = at(0.0)?;
    let mut lo = 0.0;
    for i in 1..points {
        let hi = if i == points - 1 {
            window.max_loss
        } else {
            i as f64 * step
        };
        if at(hi)? != start {
            let (mut a, mut b) = (lo, hi);
            while b - a > LOSS_TOLERANCE {
                let mid = 0.5 * (a + b);
                if at(mid)? == start {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            return Ok(LossCrossover::Crossing {
                loss: 0.5 * (a + b),
                dbs_preferred_above: start == Preference::Ipbe,
            });
        }
        lo = hi;
    }
    Ok(match start {
        Preference::Dbs => LossCrossover::DbsDominates,
        Preference::Ipbe => LossCrossover::IpbeDominates,
    })
}

/// Loss-crossover condition used to pin the unstated gate time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CalibrationTarget {
    pub dimension: usize,
    pub target_loss: f64,
    pub dark_rate: f64,
    pub mean_photon_number: f64,
    pub window: LossWindow,
    pub max_gate_time: f64,
}

impl Default for CalibrationTarget {
    /// D = 16 switches to DBS at 45% loss with γ = 500 counts/s, λ = 0.2.
    fn default() -> Self {
        CalibrationTarget {
            dimension: 16,
            target_loss: 0.45,
            dark_rate: 500.0,
            mean_photon_number: 0.2,
            window: DEFAULT_LOSS_WINDOW,
            max_gate_time: 1e-3,
        }
    }
}

impl CalibrationTarget {
    fn params(&self, gate_time: f64) -> Result<ChannelParams> {
        RawChannelParams {
            dimension: self.dimension,
            efficiency: 1.0,
            dark_rate: self.dark_rate,
            gate_time,
            mean_photon_number: self.mean_photon_number,
            basis_count: 2,
        }
        .validate()
    }

    /// Loss above which DBS wins, if there is such a crossing.
    fn crossing(&self, gate_time: f64) -> Result<Option<f64>> {
        let params = self.params(gate_time)?;
        Ok(match find_crossover_loss(self.dimension, &params, self.window)? {
            LossCrossover::Crossing {
                loss,
                dbs_preferred_above: true,
            } => Some(loss),
            _ => None,
        })
    }
}

/// Gate time τ for which the target dimension's loss crossover lands on
/// `target_loss` (within 5e-3).
pub fn calibrate_tau(target: &CalibrationTarget) -> Result<f64> {
    let no_solution = || {
        Error::NoSolution(format!(
            "no gate time in (0, {}] puts the D={} crossover at loss {}",
            target.max_gate_time, target.dimension, target.target_loss
        ))
    };
    let (log_lo, log_hi) = (-10.0f64, target.max_gate_time.log10());
    let steps = 240;
    let tau_at = |i: usize| 10f64.powf(log_lo + (log_hi - log_lo) * i as f64 / steps as f64);

    let mut prev = (tau_at(0), target.crossing(tau_at(0))?);
    for i in 1..=steps {
        let tau = tau_at(i);
        let cur = (tau, target.crossing(tau)?);
        if let (Some(c0), Some(c1)) = (prev.1, cur.1) {
            if (c0 - target.target_loss) * (c1 - target.target_loss) <= 0.0 {
                return bisect_tau(target, prev.0, c0, cur.0).ok_or_else(no_solution);
            }
        }
        prev = cur;
    }
    Err(no_solution())
}

fn bisect_tau(target: &CalibrationTarget, mut lo: f64, c_lo: f64, mut hi: f64) -> Option<f64> {
    let lo_above = c_lo > target.target_loss;
    let mut best = None;
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        let c = target.crossing(mid).ok()??;
        best = Some((mid, c));
        if (c - target.target_loss).abs() < 1e-7 || hi / lo - 1.0 < 1e-13 {
            break;
        }
        if (c > target.target_loss) == lo_above {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (tau, c) = best?;
    ((c - target.target_loss).abs() <= 5e-3).then_some(tau)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn baseline_like(dark_rate: f64, gate_time: f64) -> ChannelParams {
        RawChannelParams {
            dark_rate,
            gate_time,
            ..RawChannelParams::baseline(2)
        }
        .validate()
        .unwrap()
    }

    #[test]
    fn noiseless_ipbe_is_never_beaten() {
        let p = RawChannelParams {
            efficiency: 1.0,
            dark_rate: 0.0,
            ..RawChannelParams::baseline(2)
        }
        .validate()
        .unwrap();
        assert_eq!(find_crossover_dimension(&p, 200).unwrap(), None);
    }

    #[test]
    fn heavy_dark_counts_cross_early() {
        // γτ = 0.05 per gate and detector.
        let p = baseline_like(50_000.0, 1e-6);
        let d = find_crossover_dimension(&p, 100).unwrap().unwrap();
        assert_eq!(d, 2);
        // Brute scan agrees.
        let first = (2..=100)
            .find(|&d| {
                let q = p.with_dimension(d).unwrap();
                dbs_components(&q).unwrap().ratio <= ipbe_components(&q).unwrap().ratio
            })
            .unwrap();
        assert_eq!(d, first);
    }

    #[test]
    fn calibration_hits_target_and_scales_with_dark_rate() {
        let target = CalibrationTarget::default();
        let tau = calibrate_tau(&target).unwrap();
        let params = target.params(tau).unwrap();
        let cross = find_crossover_loss(16, &params, target.window).unwrap();
        let loss = cross.loss().unwrap();
        assert!((loss - 0.45).abs() <= 5e-3, "{loss}");
        // Reference value from an independent root solve (brentq, 1e-15).
        assert!((tau / 4.653_359e-7 - 1.0).abs() < 1e-4, "{tau}");

        let doubled = CalibrationTarget {
            dark_rate: 1000.0,
            ..target
        };
        let tau2 = calibrate_tau(&doubled).unwrap();
        assert!((tau2 * 2.0 / tau - 1.0).abs() < 1e-4, "{tau} vs {tau2}");
    }

    #[test]
    fn zero_target_has_no_solution() {
        let target = CalibrationTarget {
            target_loss: 0.0,
            ..CalibrationTarget::default()
        };
        assert!(matches!(calibrate_tau(&target), Err(Error::NoSolution(_))));
    }

    #[test]
    fn loss_sides_at_calibrated_tau() {
        let target = CalibrationTarget::default();
        let tau = calibrate_tau(&target).unwrap();
        let p = target.params(tau).unwrap();
        let w = DEFAULT_LOSS_WINDOW;
        assert_eq!(
            find_crossover_loss(4, &p, w).unwrap(),
            LossCrossover::IpbeDominates
        );
        assert_eq!(
            find_crossover_loss(36, &p, w).unwrap(),
            LossCrossover::DbsDominates
        );
        assert_eq!(
            find_crossover_loss(100, &p, w).unwrap(),
            LossCrossover::DbsDominates
        );
        match find_crossover_loss(16, &p, w).unwrap() {
            LossCrossover::Crossing {
                loss,
                dbs_preferred_above,
            } => {
                assert!(dbs_preferred_above);
                assert!((loss - 0.45).abs() < 5e-3);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ties_prefer_dbs() {
        // η = 0: both ratios infinite.
        let p = baseline_like(300.0, 5e-7).with_efficiency(0.0).unwrap();
        assert_eq!(preference(&p).unwrap(), Preference::Dbs);
    }
}
