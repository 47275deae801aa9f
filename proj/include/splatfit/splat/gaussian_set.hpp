#pragma once

#include "splatfit/core/error.hpp"
#include "splatfit/core/rotation.hpp"

#include <vector>

namespace splatfit {

// One optimizable splat cloud. Scales are stored as log-scales
// (scale = exp(log_scale)) and opacities as logits (opacity = sigmoid(logit))
// so every attribute is unconstrained under gradient descent. Colors are
// linear RGB, clamped to [0,1] at render time.
struct GaussianSet {
    std::vector<Vec3> centers;
    std::vector<Vec4> rotations;  // unit quaternions (w,x,y,z)
    std::vector<Vec3> log_scales;
    std::vector<double> opacity_logits;
    std::vector<Vec3> colors;

    std::size_t size() const { return centers.size(); }

    void resize(std::size_t n) {
        centers.assign(n, Vec3::Zero());
        rotations.assign(n, quat_identity());
        log_scales.assign(n, Vec3::Zero());
        opacity_logits.assign(n, 0.0);
        colors.assign(n, Vec3::Constant(0.5));
    }

    void validate() const {
        const std::size_t n = size();
        if (rotations.size() != n || log_scales.size() != n ||
            opacity_logits.size() != n || colors.size() != n)
            throw ShapeMismatch("GaussianSet attribute arrays disagree in length");
        for (std::size_t i = 0; i < n; ++i) {
            if (!centers[i].allFinite() || !rotations[i].allFinite() ||
                !log_scales[i].allFinite() || !std::isfinite(opacity_logits[i]) ||
                !colors[i].allFinite())
                throw ShapeMismatch("GaussianSet has non-finite attribute at splat " +
                                    std::to_string(i));
        }
    }
};

// Gradients w.r.t. every attribute of one GaussianSet.
struct SplatGradients {
    std::vector<Vec3> d_centers;
    std::vector<Vec4> d_rotations;
    std::vector<Vec3> d_log_scales;
    std::vector<double> d_opacity_logits;
    std::vector<Vec3> d_colors;

    explicit SplatGradients(std::size_t n = 0) { resize(n); }

    void resize(std::size_t n) {
        d_centers.assign(n, Vec3::Zero());
        d_rotations.assign(n, Vec4::Zero());
        d_log_scales.assign(n, Vec3::Zero());
        d_opacity_logits.assign(n, 0.0);
        d_colors.assign(n, Vec3::Zero());
    }

    std::size_t size() const { return d_centers.size(); }

    void accumulate(const SplatGradients& o) {
        for (std::size_t i = 0; i < size(); ++i) {
            d_centers[i] += o.d_centers[i];
            d_rotations[i] += o.d_rotations[i];
            d_log_scales[i] += o.d_log_scales[i];
            d_opacity_logits[i] += o.d_opacity_logits[i];
            d_colors[i] += o.d_colors[i];
        }
    }
};

}  // namespace splatfit
