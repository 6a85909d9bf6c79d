//! Losses, Bayes-optimal actions and the uncertainty functional.
//!
//! The uncertainty of a distribution `p` under a loss `ℓ` is the expected
//! loss of the best action available: `h[p] = min_a E_p[ℓ(a, Z)]`. Quadratic
//! loss gives the variance and log loss gives the entropy; the quantile-type
//! losses have closed-form Bayes acts (quantiles) and their expected loss is
//! evaluated from partial expectations of `p`.

use crate::distributions::Distribution;
use crate::error::{Error, Result};
use crate::numeric;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossFunction {
    /// `(a - z)²`
    Quadratic,
    /// `-ln a(z)`, with `a` a distribution. Negative when `a(z) > 1`.
    Log,
    /// `q (z - a)⁺ + (1 - q) (a - z)⁺`
    Pinball { level: f64 },
    /// `c_u (z - a)⁺ + c_o (a - z)⁺`
    AsymmetricLinear { under_cost: f64, over_cost: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionSpace {
    Point,
    Probabilistic,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Point(f64),
    Distribution(Distribution),
}

impl Action {
    pub fn as_point(&self) -> Option<f64> {
        match self {
            Action::Point(a) => Some(*a),
            Action::Distribution(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BayesAct {
    pub action: Action,
    pub expected_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalLoss {
    pub mean: f64,
    pub per_pair: Vec<f64>,
}

impl LossFunction {
    pub fn pinball(level: f64) -> Result<Self> {
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::invalid("level", format!("must lie in (0, 1), got {level}")));
        }
        Ok(LossFunction::Pinball { level })
    }

    pub fn asymmetric_linear(under_cost: f64, over_cost: f64) -> Result<Self> {
        for (name, c) in [("under_cost", under_cost), ("over_cost", over_cost)] {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::invalid(name, format!("must be finite and > 0, got {c}")));
            }
        }
        Ok(LossFunction::AsymmetricLinear { under_cost, over_cost })
    }

    pub fn name(&self) -> &'static str {
        match self {
            LossFunction::Quadratic => "quadratic",
            LossFunction::Log => "log",
            LossFunction::Pinball { .. } => "pinball",
            LossFunction::AsymmetricLinear { .. } => "asymmetric_linear",
        }
    }

    pub fn action_space(&self) -> ActionSpace {
        match self {
            LossFunction::Log => ActionSpace::Probabilistic,
            _ => ActionSpace::Point,
        }
    }

    /// Weights `(c_u, c_o)` on under- and over-estimation for the piecewise
    /// linear losses.
    fn linear_costs(&self) -> Option<(f64, f64)> {
        match *self {
            LossFunction::Pinball { level } => Some((level, 1.0 - level)),
            LossFunction::AsymmetricLinear { under_cost, over_cost } => Some((under_cost, over_cost)),
            _ => None,
        }
    }

    pub fn loss(&self, action: &Action, z: f64) -> Result<f64> {
        match (self, action) {
            (LossFunction::Quadratic, Action::Point(a)) => Ok((a - z) * (a - z)),
            (LossFunction::Log, Action::Distribution(d)) => {
                let log_p = d.log_density(z).unwrap_or(f64::NEG_INFINITY);
                if log_p == f64::NEG_INFINITY {
                    Err(Error::InfiniteLoss { outcome: z })
                } else {
                    Ok(-log_p)
                }
            }
            (_, Action::Point(a)) if self.linear_costs().is_some() => {
                let (under, over) = self.linear_costs().expect("linear loss");
                Ok(under * (z - a).max(0.0) + over * (a - z).max(0.0))
            }
            _ => Err(Error::ActionMismatch { loss: self.name() }),
        }
    }

    /// `E_p[ℓ(a, Z)]` for a point action.
    pub fn expected_loss(&self, a: f64, p: &Distribution) -> Result<f64> {
        match self {
            LossFunction::Quadratic => {
                let (mean, var) = p.moments();
                Ok(var + (mean - a) * (mean - a))
            }
            LossFunction::Log => Err(Error::ActionMismatch { loss: self.name() }),
            _ => {
                let (under, over) = self.linear_costs().expect("linear loss");
                let excess = p.expected_excess(a);
                // E[(a - Z)⁺] = a - E[Z] + E[(Z - a)⁺]
                let shortfall = (a - p.mean() + excess).max(0.0);
                Ok(under * excess + over * shortfall)
            }
        }
    }

    /// The action minimising expected loss under `p`. Quantile-type losses
    /// return the lower quantile, the infimum of the minimising set.
    pub fn bayes_act(&self, p: &Distribution) -> Result<BayesAct> {
        match self {
            LossFunction::Quadratic => {
                let (mean, var) = p.moments();
                if !mean.is_finite() {
                    return Err(Error::Precondition(format!(
                        "{} has no finite mean",
                        p.name()
                    )));
                }
                Ok(BayesAct {
                    action: Action::Point(mean),
                    expected_loss: var,
                })
            }
            LossFunction::Log => Ok(BayesAct {
                action: Action::Distribution(p.clone()),
                expected_loss: p.entropy()?,
            }),
            _ => {
                let (under, over) = self.linear_costs().expect("linear loss");
                let a = p.quantile(under / (under + over))?;
                Ok(BayesAct {
                    action: Action::Point(a),
                    expected_loss: self.expected_loss(a, p)?,
                })
            }
        }
    }

    /// `h[p]`: the expected loss of the Bayes act.
    pub fn uncertainty(&self, p: &Distribution) -> Result<f64> {
        match self {
            LossFunction::Quadratic => Ok(p.variance()),
            LossFunction::Log => p.entropy(),
            _ => Ok(self.bayes_act(p)?.expected_loss),
        }
    }

    /// Scores realised `(action, outcome)` pairs.
    pub fn empirical_loss(&self, pairs: &[(Action, f64)]) -> Result<EmpiricalLoss> {
        if pairs.is_empty() {
            return Err(Error::Precondition(
                "empirical loss needs at least one forecast-outcome pair".into(),
            ));
        }
        let per_pair = pairs
            .iter()
            .map(|(a, z)| self.loss(a, *z))
            .collect::<Result<Vec<_>>>()?;
        let mean = numeric::sum(per_pair.iter().copied()) / per_pair.len() as f64;
        Ok(EmpiricalLoss { mean, per_pair })
    }
}

/// Minimises the expected point-action loss by golden-section search on
/// `[lo, hi]`. Works for any point loss whose expected loss is unimodal in
/// the action; the closed-form acts above are preferred where they exist.
pub fn numeric_bayes_act(loss: &LossFunction, p: &Distribution, lo: f64, hi: f64) -> Result<BayesAct> {
    if loss.action_space() != ActionSpace::Point {
        return Err(Error::ActionMismatch { loss: loss.name() });
    }
    let objective = |a: f64| loss.expected_loss(a, p).unwrap_or(f64::INFINITY);
    let a = numeric::golden_section(objective, lo, hi, 1e-8);
    Ok(BayesAct {
        action: Action::Point(a),
        expected_loss: loss.expected_loss(a, p)?,
    })
}
