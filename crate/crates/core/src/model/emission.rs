use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::network::EmissionKind;

/// Log density of one edge value under the emission law.
pub fn log_emission(x: f64, rate: f64, kind: EmissionKind) -> Result<f64> {
    if !kind.in_domain(rate) {
        return Err(Error::Domain {
            rate,
            kind: kind.name(),
        });
    }
    kind.check_value(x)?;
    Ok(log_density(x, rate, kind))
}

/// Unchecked version; `rate` must already be in the domain.
pub(crate) fn log_density(x: f64, rate: f64, kind: EmissionKind) -> f64 {
    match kind {
        EmissionKind::Bernoulli => {
            if x == 0.0 {
                (1.0 - rate).ln()
            } else {
                rate.ln()
            }
        }
        EmissionKind::Poisson => -rate + x * rate.ln() - ln_gamma(x + 1.0),
    }
}

/// Coefficients (slope, intercept) such that, up to a term independent of
/// the rate, `log f(x; rate) = x * slope + intercept`.
pub(crate) fn linear_coefficients(rate: f64, kind: EmissionKind) -> (f64, f64) {
    match kind {
        EmissionKind::Bernoulli => (rate.ln() - (1.0 - rate).ln(), (1.0 - rate).ln()),
        EmissionKind::Poisson => (rate.ln(), -rate),
    }
}
