#pragma once

#include "splatfit/core/error.hpp"
#include "splatfit/core/linalg.hpp"

#include <cstdint>
#include <vector>

namespace splatfit {

// Dense row-major image, values double. Index order (y, x, c).
struct Image {
    int width = 0, height = 0, channels = 0;
    std::vector<double> data;

    Image() = default;
    Image(int w, int h, int c, double fill = 0.0)
        : width(w), height(h), channels(c),
          data(static_cast<std::size_t>(w) * h * c, fill) {}

    double& at(int y, int x, int c = 0) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    double at(int y, int x, int c = 0) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }

    std::size_t size() const { return data.size(); }
    bool same_shape(const Image& o) const {
        return width == o.width && height == o.height && channels == o.channels;
    }
};

inline void require_same_shape(const Image& a, const Image& b, const char* where) {
    if (!a.same_shape(b))
        throw DimensionMismatch(std::string(where) + ": image shapes differ (" +
                                std::to_string(a.width) + "x" + std::to_string(a.height) +
                                "x" + std::to_string(a.channels) + " vs " +
                                std::to_string(b.width) + "x" + std::to_string(b.height) +
                                "x" + std::to_string(b.channels) + ")");
}

}  // namespace splatfit
