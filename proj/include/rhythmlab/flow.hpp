#pragma once

// Conditional flow matching on the straight-line path:
//   z_t = (1-t) z0 + t z1,  target velocity z1 - z0 (constant in t),
//   loss = mean((v_pred - (z1 - z0))^2).

#include <vector>

#include "rhythmlab/error.hpp"
#include "rhythmlab/kernels.hpp"
#include "rhythmlab/latent.hpp"
#include "rhythmlab/tensor.hpp"

namespace rhythmlab {

namespace flow_detail {
template <typename T>
void interpolate_raw(const T* z0, const T* z1, double t, T* out, std::size_t n) {
    const T w0 = static_cast<T>(1.0 - t);
    const T w1 = static_cast<T>(t);
    for (std::size_t i = 0; i < n; ++i) out[i] = w0 * z0[i] + w1 * z1[i];
}
} // namespace flow_detail

/// One training draw along the path: endpoints, interpolant and target.
template <typename T>
struct FlowSample {
    std::vector<T> z0;
    std::vector<T> z1;
    double t = 0.0;
    std::vector<T> z_t;
    std::vector<T> target_v; // z1 - z0
};

template <typename T>
FlowSample<T> make_flow_sample(std::vector<T> z0, std::vector<T> z1, double t) {
    if (z0.size() != z1.size()) {
        throw DimensionError("flow_sample: endpoint sizes disagree: " +
                             std::to_string(z0.size()) + " vs " +
                             std::to_string(z1.size()));
    }
    FlowSample<T> s;
    s.t = t;
    s.z_t.resize(z0.size());
    s.target_v.resize(z0.size());
    flow_detail::interpolate_raw(z0.data(), z1.data(), t, s.z_t.data(), z0.size());
    kernels::ops<T>().sub(z1.data(), z0.data(), s.target_v.data(), z0.size());
    s.z0 = std::move(z0);
    s.z1 = std::move(z1);
    return s;
}

inline LatentSequence interpolate(const LatentSequence& z0, const LatentSequence& z1,
                                  double t) {
    z0.require_same_shape(z1, "interpolate");
    if (t < 0.0 || t > 1.0) {
        throw DomainError("interpolate: t must lie in [0,1], got " + std::to_string(t));
    }
    LatentSequence out(z0.frames, z0.channels, z0.frame_rate);
    flow_detail::interpolate_raw(z0.data.data(), z1.data.data(), t, out.data.data(),
                                 out.size());
    return out;
}

inline LatentSequence target_velocity(const LatentSequence& z0, const LatentSequence& z1) {
    z0.require_same_shape(z1, "target_velocity");
    LatentSequence out(z0.frames, z0.channels, z0.frame_rate);
    kernels::ops<float>().sub(z1.data.data(), z0.data.data(), out.data.data(), out.size());
    return out;
}

/// Non-differentiable loss value (accumulated in double regardless of T).
template <typename T>
double fm_loss_value(const std::vector<T>& pred_v, const std::vector<T>& target_v) {
    if (pred_v.size() != target_v.size()) {
        throw DimensionError("fm_loss: prediction size " + std::to_string(pred_v.size()) +
                             " vs target " + std::to_string(target_v.size()));
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < pred_v.size(); ++i) {
        const double d = static_cast<double>(pred_v[i]) - static_cast<double>(target_v[i]);
        acc += d * d;
    }
    return acc / static_cast<double>(pred_v.size());
}

inline double fm_loss(const LatentSequence& pred_v, const LatentSequence& z0,
                      const LatentSequence& z1) {
    pred_v.require_same_shape(z0, "fm_loss");
    const LatentSequence tv = target_velocity(z0, z1);
    return fm_loss_value(pred_v.data, tv.data);
}

/// Differentiable loss node; gradient flows through pred_v only.
template <typename T>
Tensor<T> fm_loss_node(const Tensor<T>& pred_v, const std::vector<T>& target_v) {
    Tensor<T> target(pred_v.shape(), target_v);
    return squared_error(pred_v, target);
}

} // namespace rhythmlab
