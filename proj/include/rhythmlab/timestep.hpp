#pragma once

// Logit-normal timestep density and sampler used to weight flow-matching
// training. t = sigmoid(u) with u ~ Normal(m, s); the density concentrates
// around t = 0.5 for m = 0 and shifts toward 0 for m < 0.

#include "rhythmlab/rng.hpp"

namespace rhythmlab {

struct LogitNormalParams {
    double m = 0.0;
    double s = 1.0;
};

/// Density of the logit-normal distribution at t in (0,1).
/// Throws DomainError for t outside (0,1) and ParamError for s <= 0.
double logit_normal_pdf(double t, const LogitNormalParams& params);

/// Draws t = sigmoid(u), u ~ Normal(m, s). Result is strictly inside (0,1);
/// saturated draws are nudged off the endpoints by 1e-7.
double sample_timestep(Rng& rng, const LogitNormalParams& params);

/// Uniform baseline for schedule ablations: t ~ U(0,1), endpoints excluded.
double sample_timestep_uniform(Rng& rng);

} // namespace rhythmlab
