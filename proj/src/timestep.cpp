#include "rhythmlab/timestep.hpp"

#include <cmath>

#include "rhythmlab/error.hpp"

namespace rhythmlab {

namespace {
constexpr double kTwoPi = 6.28318530717958647692;
constexpr double kEdge = 1e-7;
} // namespace

double logit_normal_pdf(double t, const LogitNormalParams& params) {
    if (params.s <= 0.0) {
        throw ParamError("logit_normal_pdf: scale must be positive, got s=" +
                         std::to_string(params.s));
    }
    if (!(t > 0.0 && t < 1.0)) {
        throw DomainError("logit_normal_pdf: t must lie in (0,1), got t=" +
                          std::to_string(t));
    }
    const double logit = std::log(t / (1.0 - t));
    const double z = (logit - params.m) / params.s;
    return 1.0 / (params.s * std::sqrt(kTwoPi)) * (1.0 / (t * (1.0 - t))) *
           std::exp(-0.5 * z * z);
}

double sample_timestep(Rng& rng, const LogitNormalParams& params) {
    if (params.s <= 0.0) {
        throw ParamError("sample_timestep: scale must be positive, got s=" +
                         std::to_string(params.s));
    }
    const double u = rng.normal(params.m, params.s);
    double t = 1.0 / (1.0 + std::exp(-u));
    if (t <= 0.0) t = kEdge;
    if (t >= 1.0) t = 1.0 - kEdge;
    return t;
}

double sample_timestep_uniform(Rng& rng) {
    double t = rng.uniform();
    if (t <= 0.0) t = kEdge;
    return t;
}

} // namespace rhythmlab
