//! Value-of-information quantities expressed through the uncertainty
//! engine.
//!
//! The expected value of sample information is the expected uncertainty
//! reduction, and the expected information gain is its log-loss case. The
//! expected value of perfect information is the current uncertainty, since
//! knowing `z` exactly leaves no loss to minimise.

use crate::decision::LossFunction;
use crate::distributions::Distribution;
use crate::engine::{self, EurResult, MonteCarlo, PosteriorModel, PredictiveModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Evsi {
    pub result: EurResult,
    /// Set when the predictive is not known to be coherent with the model,
    /// in which case the value may be negative.
    pub incoherent_warning: bool,
}

impl Evsi {
    pub fn value(&self) -> f64 {
        self.result.eur
    }

    fn new(result: EurResult, coherent: bool) -> Self {
        Self {
            result,
            incoherent_warning: !coherent,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VoiReport {
    pub evsi: f64,
    pub evsi_standard_error: f64,
    pub evpi: f64,
    pub eig: Option<f64>,
    pub fisher: Option<f64>,
    pub loss: LossFunction,
    pub incoherent_warning: bool,
}

impl VoiReport {
    /// `evpi ≥ evsi - 3 SE`.
    pub fn perfect_dominates_sample(&self) -> bool {
        self.evpi >= self.evsi - 3.0 * self.evsi_standard_error
    }
}

pub fn evsi_exact<M>(
    loss: &LossFunction,
    model: &PosteriorModel<'_, M>,
    predictive: &PredictiveModel<'_, M>,
) -> Result<Evsi> {
    let result = engine::eur_exact(loss, model, predictive)?;
    Ok(Evsi::new(result, predictive.declared_coherent))
}

pub fn evsi_monte_carlo<M: Sync>(
    loss: &LossFunction,
    model: &PosteriorModel<'_, M>,
    predictive: &PredictiveModel<'_, M>,
    mc: &MonteCarlo,
) -> Result<Evsi> {
    let result = engine::eur_monte_carlo(loss, model, predictive, mc)?;
    Ok(Evsi::new(result, predictive.declared_coherent))
}

/// `h[p] - E_p[min_a ℓ(a, z)]`. For point losses the inner minimum is zero;
/// for log loss it is the entropy of a point mass, which is zero only for
/// discrete outcomes.
pub fn evpi(loss: &LossFunction, posterior: &Distribution) -> Result<f64> {
    if *loss == LossFunction::Log && !posterior.is_discrete() {
        return Err(Error::Precondition(
            "perfect information under log loss is only finite for discrete outcomes".into(),
        ));
    }
    loss.uncertainty(posterior)
}

/// `H[p(z | y_obs)] - E_pred H[p(z | y_all)]` over an enumerable predictive.
/// Entropies come from closed forms or finite sums.
pub fn eig_exact<M>(
    model: &PosteriorModel<'_, M>,
    predictive: &PredictiveModel<'_, M>,
) -> Result<EurResult> {
    engine::eur_exact(&LossFunction::Log, model, predictive)
}

pub fn eig_monte_carlo<M: Sync>(
    model: &PosteriorModel<'_, M>,
    predictive: &PredictiveModel<'_, M>,
    mc: &MonteCarlo,
) -> Result<EurResult> {
    engine::eur_monte_carlo(&LossFunction::Log, model, predictive, mc)
}

/// Fisher information `ΣΛ / R` of the Poisson renewal likelihood for a
/// window with total infectiousness `lambda_sum`. With a flat prior the
/// posterior variance of `R` is close to `1 / FI` once counts are large.
pub fn fisher_information_renewal(r: f64, lambda_sum: f64) -> Result<f64> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::invalid("r", format!("must be finite and > 0, got {r}")));
    }
    if !(lambda_sum.is_finite() && lambda_sum >= 0.0) {
        return Err(Error::invalid("lambda_sum", "must be finite and >= 0"));
    }
    Ok(lambda_sum / r)
}

/// EVSI, EVPI and EIG for one model and enumerable predictive.
pub fn report_exact<M>(
    loss: &LossFunction,
    model: &PosteriorModel<'_, M>,
    predictive: &PredictiveModel<'_, M>,
) -> Result<VoiReport> {
    let evsi = evsi_exact(loss, model, predictive)?;
    let eig = match eig_exact(model, predictive) {
        Ok(r) => Some(r.eur),
        Err(e) if e.is_numerical() => None,
        Err(e) => return Err(e),
    };
    Ok(VoiReport {
        evsi: evsi.value(),
        evsi_standard_error: 0.0,
        evpi: evpi(loss, &model.posterior)?,
        eig,
        fisher: None,
        loss: *loss,
        incoherent_warning: evsi.incoherent_warning,
    })
}
