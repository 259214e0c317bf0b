#![allow(dead_code)]

use crisscross::params::NetworkLimits;
use proptest::prelude::*;

/// Random limits satisfying heavy traffic and the Case IIA cost ordering.
pub fn valid_limits() -> impl Strategy<Value = NetworkLimits> {
    (0.6f64..4.0, 0.6f64..4.0, 0.15f64..0.85, 0.2f64..5.0, 0.05f64..1.0, 0.05f64..1.0, 0.2f64..2.0).prop_map(
        |(mu1, mu2, rho, h2, u, s, gamma)| {
            let lambda = [rho * mu1, (1.0 - rho) * mu2];
            let mu = [mu1, mu2, lambda[1]];
            let h3 = h2 * u;
            // h1 mu1 sits strictly inside ((h2 - h3) mu2, h2 mu2].
            let h1 = h2 * mu2 * (s + (1.0 - s) * (1.0 - u)) / mu1;
            NetworkLimits { lambda, mu, h: [h1, h2, h3], gamma, b: [0.0; 3] }
        },
    )
}
