#pragma once

#include "splatfit/core/camera.hpp"
#include "splatfit/core/image.hpp"
#include "splatfit/core/parallel.hpp"
#include "splatfit/splat/gaussian_set.hpp"

#include <algorithm>
#include <memory>
#include <vector>

namespace splatfit {

// Tile-based CPU rasterizer for 3D Gaussians with an analytic backward pass.
// Splats are depth-sorted front to back (ties broken by original index),
// projected with the EWA approximation, and alpha-composited per pixel.

constexpr double kCovDilation = 0.3;      // added to both cov2d diagonals
constexpr double kAlphaClamp = 0.99;      // per-contribution alpha ceiling
constexpr double kAlphaSkip = 1.0 / 255.0;
constexpr double kEllipseSigmas = 3.0;    // evaluation bbox half-extent
constexpr int kTileSize = 16;

struct GaussianProjection {
    Vec2 mean2d;   // pixels
    Mat2 cov2d;    // pixels^2, symmetric positive definite
};

// EWA projection of one splat. `scale` holds the actual (exp'ed) scales.
inline GaussianProjection project_gaussian(const Camera& cam, const Vec3& center,
                                           const Rotation& rotation, const Vec3& scale) {
    const Vec3 p = cam.to_camera(center);
    if (p.z() <= kMinDepth)
        throw NonPositiveDepth("gaussian center at depth " + std::to_string(p.z()));
    const Mat3 R = rotation.matrix();
    const Mat3 cov3d = R * scale.cwiseProduct(scale).asDiagonal() * R.transpose();
    const Mat23 M = projection_jacobian(cam, p) * cam.world_to_camera.rotation.matrix();
    Mat2 cov2d = M * cov3d * M.transpose();
    cov2d(0, 0) += kCovDilation;
    cov2d(1, 1) += kCovDilation;
    cov2d(0, 1) = cov2d(1, 0) = 0.5 * (cov2d(0, 1) + cov2d(1, 0));
    const Projection pr = project(cam, p);
    return GaussianProjection{Vec2(pr.u, pr.v), cov2d};
}

namespace detail {

// Everything the backward pass needs about one visible splat.
struct SplatRecord {
    int set_index;
    int local_index;
    double depth;
    Vec3 p_cam;
    Vec2 mean2d;
    Mat2 cov2d;
    Mat2 conic;     // cov2d^{-1}
    Mat3 rot_mat;   // from normalized quaternion
    Vec4 q_raw;
    Vec3 scale;     // exp(log_scale)
    Mat3 cov3d;
    double opacity;           // sigmoid(logit)
    double opacity_logit;
    Vec3 color;               // clamped to [0,1]
    Vec3 color_raw;
    int x_lo, x_hi, y_lo, y_hi;  // inclusive pixel bbox, already clipped
};

}  // namespace detail

struct RasterCache {
    Camera camera;
    Vec3 background;
    std::vector<detail::SplatRecord> records;          // depth-sorted
    std::vector<std::vector<int32_t>> pixel_lists;     // per pixel, record ids front-to-back
    std::vector<std::size_t> set_sizes;
};

struct RenderedImage {
    Image rgb;    // H x W x 3
    Image alpha;  // H x W x 1
    std::shared_ptr<const RasterCache> cache;
};

namespace detail {

inline std::vector<SplatRecord> build_records(const Camera& cam,
                                              const std::vector<const GaussianSet*>& sets) {
    std::vector<SplatRecord> recs;
    const Mat3 W = cam.world_to_camera.rotation.matrix();
    for (int si = 0; si < static_cast<int>(sets.size()); ++si) {
        const GaussianSet& g = *sets[si];
        for (int i = 0; i < static_cast<int>(g.size()); ++i) {
            const Vec3 p = cam.to_camera(g.centers[i]);
            if (p.z() <= kMinDepth) continue;  // culled, not an abort
            SplatRecord r;
            r.set_index = si;
            r.local_index = i;
            r.depth = p.z();
            r.p_cam = p;
            r.q_raw = g.rotations[i];
            r.rot_mat = quat_to_matrix(r.q_raw);
            r.scale = g.log_scales[i].array().exp();
            r.cov3d = r.rot_mat * r.scale.cwiseProduct(r.scale).asDiagonal() *
                      r.rot_mat.transpose();
            const Mat23 M = projection_jacobian(cam, p) * W;
            Mat2 c2 = M * r.cov3d * M.transpose();
            c2(0, 0) += kCovDilation;
            c2(1, 1) += kCovDilation;
            c2(0, 1) = c2(1, 0) = 0.5 * (c2(0, 1) + c2(1, 0));
            r.cov2d = c2;
            const double det = c2(0, 0) * c2(1, 1) - c2(0, 1) * c2(0, 1);
            if (det <= 0.0) continue;
            r.conic << c2(1, 1) / det, -c2(0, 1) / det, -c2(0, 1) / det, c2(0, 0) / det;
            r.mean2d = Vec2(cam.fx * p.x() / p.z() + cam.cx, cam.fy * p.y() / p.z() + cam.cy);
            r.opacity_logit = g.opacity_logits[i];
            r.opacity = sigmoid(r.opacity_logit);
            r.color_raw = g.colors[i];
            r.color = Vec3(clamp01(r.color_raw[0]), clamp01(r.color_raw[1]),
                           clamp01(r.color_raw[2]));
            const double rx = kEllipseSigmas * std::sqrt(c2(0, 0));
            const double ry = kEllipseSigmas * std::sqrt(c2(1, 1));
            // pixel centres are at integer + 0.5
            r.x_lo = std::max(0, static_cast<int>(std::ceil(r.mean2d.x() - rx - 0.5)));
            r.x_hi = std::min(cam.width - 1,
                              static_cast<int>(std::floor(r.mean2d.x() + rx - 0.5)));
            r.y_lo = std::max(0, static_cast<int>(std::ceil(r.mean2d.y() - ry - 0.5)));
            r.y_hi = std::min(cam.height - 1,
                              static_cast<int>(std::floor(r.mean2d.y() + ry - 0.5)));
            if (r.x_lo > r.x_hi || r.y_lo > r.y_hi) continue;
            recs.push_back(r);
        }
    }
    // stable sort keeps original (set, index) order for equal depths
    std::stable_sort(recs.begin(), recs.end(),
                     [](const SplatRecord& a, const SplatRecord& b) { return a.depth < b.depth; });
    return recs;
}

inline double contribution_alpha(const SplatRecord& r, double px, double py, double& g_out) {
    const Vec2 d(px - r.mean2d.x(), py - r.mean2d.y());
    const double q = d.dot(r.conic * d);
    g_out = std::exp(-0.5 * q);
    return std::min(kAlphaClamp, r.opacity * g_out);
}

}  // namespace detail

inline RenderedImage rasterize(const Camera& cam, const std::vector<const GaussianSet*>& sets,
                               const Vec3& background) {
    auto cache = std::make_shared<RasterCache>();
    cache->camera = cam;
    cache->background = background;
    for (const GaussianSet* s : sets) {
        s->validate();
        cache->set_sizes.push_back(s->size());
    }
    cache->records = detail::build_records(cam, sets);
    cache->pixel_lists.assign(static_cast<std::size_t>(cam.width) * cam.height, {});

    RenderedImage out;
    out.rgb = Image(cam.width, cam.height, 3);
    out.alpha = Image(cam.width, cam.height, 1);

    const int tiles_x = (cam.width + kTileSize - 1) / kTileSize;
    const int tiles_y = (cam.height + kTileSize - 1) / kTileSize;
    const int n_tiles = tiles_x * tiles_y;

    // per-tile record lists, in sorted order
    std::vector<std::vector<int32_t>> tile_records(n_tiles);
    for (int ri = 0; ri < static_cast<int>(cache->records.size()); ++ri) {
        const auto& r = cache->records[ri];
        for (int ty = r.y_lo / kTileSize; ty <= r.y_hi / kTileSize; ++ty)
            for (int tx = r.x_lo / kTileSize; tx <= r.x_hi / kTileSize; ++tx)
                tile_records[ty * tiles_x + tx].push_back(ri);
    }

    RasterCache* cptr = cache.get();
    parallel_for(static_cast<std::size_t>(n_tiles), [&, cptr](std::size_t t) {
        const int tx = static_cast<int>(t) % tiles_x;
        const int ty = static_cast<int>(t) / tiles_x;
        const int px_lo = tx * kTileSize, px_hi = std::min(cam.width, px_lo + kTileSize);
        const int py_lo = ty * kTileSize, py_hi = std::min(cam.height, py_lo + kTileSize);
        const int tw = px_hi - px_lo, th = py_hi - py_lo;

        std::vector<double> trans(static_cast<std::size_t>(tw) * th, 1.0);
        std::vector<double> accum(static_cast<std::size_t>(tw) * th * 3, 0.0);

        for (int32_t ri : tile_records[t]) {
            const auto& r = cptr->records[ri];
            const int xa = std::max(px_lo, r.x_lo), xb = std::min(px_hi - 1, r.x_hi);
            const int ya = std::max(py_lo, r.y_lo), yb = std::min(py_hi - 1, r.y_hi);
            for (int y = ya; y <= yb; ++y) {
                for (int x = xa; x <= xb; ++x) {
                    double g;
                    const double a = detail::contribution_alpha(r, x + 0.5, y + 0.5, g);
                    if (a < kAlphaSkip) continue;
                    const std::size_t li = static_cast<std::size_t>(y - py_lo) * tw + (x - px_lo);
                    double& T = trans[li];
                    accum[li * 3 + 0] += T * a * r.color[0];
                    accum[li * 3 + 1] += T * a * r.color[1];
                    accum[li * 3 + 2] += T * a * r.color[2];
                    T *= 1.0 - a;
                    cptr->pixel_lists[static_cast<std::size_t>(y) * cam.width + x].push_back(ri);
                }
            }
        }
        for (int y = py_lo; y < py_hi; ++y) {
            for (int x = px_lo; x < px_hi; ++x) {
                const std::size_t li = static_cast<std::size_t>(y - py_lo) * tw + (x - px_lo);
                const double T = trans[li];
                for (int c = 0; c < 3; ++c)
                    out.rgb.at(y, x, c) = accum[li * 3 + c] + background[c] * T;
                out.alpha.at(y, x, 0) = 1.0 - T;
            }
        }
    });

    out.cache = cache;
    return out;
}

inline RenderedImage rasterize(const Camera& cam, const GaussianSet& set, const Vec3& background) {
    return rasterize(cam, std::vector<const GaussianSet*>{&set}, background);
}

// Analytic adjoint of rasterize. `rendered` must carry the forward cache.
inline std::vector<SplatGradients> rasterize_backward(const RenderedImage& rendered,
                                                      const Image& d_rgb) {
    if (!rendered.cache)
        throw StateMismatch("rasterize_backward: forward buffers absent");
    const RasterCache& cache = *rendered.cache;
    const Camera& cam = cache.camera;
    if (d_rgb.width != cam.width || d_rgb.height != cam.height || d_rgb.channels != 3)
        throw DimensionMismatch("rasterize_backward: cotangent shape mismatch");

    const std::size_t n_rec = cache.records.size();
    // per-record accumulators in 2D quantities
    std::vector<Vec2> d_mean2d(n_rec, Vec2::Zero());
    std::vector<Mat2> d_conic(n_rec, Mat2::Zero());
    std::vector<double> d_opacity(n_rec, 0.0);
    std::vector<Vec3> d_color(n_rec, Vec3::Zero());

    const int n_px = cam.width * cam.height;
    const int threads = thread_count();
    const int chunks = threads <= 1 ? 1 : threads;
    const int chunk_px = (n_px + chunks - 1) / chunks;

    struct Partial {
        std::vector<Vec2> d_mean2d;
        std::vector<Mat2> d_conic;
        std::vector<double> d_opacity;
        std::vector<Vec3> d_color;
    };
    std::vector<Partial> partials(chunks);

    parallel_for(static_cast<std::size_t>(chunks), [&](std::size_t ci) {
        Partial& P = partials[ci];
        P.d_mean2d.assign(n_rec, Vec2::Zero());
        P.d_conic.assign(n_rec, Mat2::Zero());
        P.d_opacity.assign(n_rec, 0.0);
        P.d_color.assign(n_rec, Vec3::Zero());
        const int lo = static_cast<int>(ci) * chunk_px;
        const int hi = std::min(n_px, lo + chunk_px);

        std::vector<double> alphas, trans;
        for (int pi = lo; pi < hi; ++pi) {
            const auto& list = cache.pixel_lists[pi];
            if (list.empty()) continue;
            const int x = pi % cam.width;
            const int y = pi / cam.width;
            const Vec3 dC(d_rgb.at(y, x, 0), d_rgb.at(y, x, 1), d_rgb.at(y, x, 2));
            if (dC.isZero(0.0)) continue;
            const double px = x + 0.5, py = y + 0.5;

            const std::size_t k = list.size();
            alphas.resize(k);
            trans.resize(k);
            double T = 1.0;
            for (std::size_t i = 0; i < k; ++i) {
                const auto& r = cache.records[list[i]];
                double g;
                alphas[i] = detail::contribution_alpha(r, px, py, g);
                trans[i] = T;
                T *= 1.0 - alphas[i];
            }
            // walk back to front; B = colour composited behind contribution i
            Vec3 B = cache.background;
            for (std::size_t ii = k; ii-- > 0;) {
                const int32_t ri = list[ii];
                const auto& r = cache.records[ri];
                const double a = alphas[ii];
                const double Ti = trans[ii];
                const double d_a = dC.dot(r.color - B) * Ti;
                P.d_color[ri] += dC * (a * Ti);
                // alpha -> opacity and gaussian value
                const Vec2 d(px - r.mean2d.x(), py - r.mean2d.y());
                const double q = d.dot(r.conic * d);
                const double g = std::exp(-0.5 * q);
                if (r.opacity * g < kAlphaClamp) {  // clamp inactive
                    P.d_opacity[ri] += d_a * g;
                    const double d_g = d_a * r.opacity;
                    const double d_q = -0.5 * g * d_g;
                    P.d_conic[ri] += d_q * d * d.transpose();
                    const Vec2 d_d = 2.0 * d_q * (r.conic * d);
                    P.d_mean2d[ri] -= d_d;
                }
                B = a * r.color + (1.0 - a) * B;
            }
        }
    });

    for (const auto& P : partials) {
        for (std::size_t i = 0; i < n_rec; ++i) {
            d_mean2d[i] += P.d_mean2d[i];
            d_conic[i] += P.d_conic[i];
            d_opacity[i] += P.d_opacity[i];
            d_color[i] += P.d_color[i];
        }
    }

    std::vector<SplatGradients> grads;
    grads.reserve(cache.set_sizes.size());
    for (std::size_t n : cache.set_sizes) grads.emplace_back(n);

    const Mat3 W = cam.world_to_camera.rotation.matrix();
    for (std::size_t ri = 0; ri < n_rec; ++ri) {
        const auto& r = cache.records[ri];
        SplatGradients& g = grads[r.set_index];
        const int i = r.local_index;

        // colour clamp mask
        for (int c = 0; c < 3; ++c)
            if (r.color_raw[c] > 0.0 && r.color_raw[c] < 1.0)
                g.d_colors[i][c] += d_color[ri][c];
        // opacity logit
        g.d_opacity_logits[i] += d_opacity[ri] * r.opacity * (1.0 - r.opacity);

        // conic -> cov2d
        const Mat2 d_cov2d = -r.conic * d_conic[ri] * r.conic;

        // cov2d = M cov3d M^T (+ const), M = J W
        const Mat23 J = projection_jacobian(cam, r.p_cam);
        const Mat23 M = J * W;
        const Mat3 d_cov3d = M.transpose() * d_cov2d * M;
        const Mat23 d_M = (d_cov2d + d_cov2d.transpose()) * M * r.cov3d;
        const Mat23 d_J = d_M * W.transpose();

        // cov3d = R S^2 R^T
        const Mat3 S2 = r.scale.cwiseProduct(r.scale).asDiagonal();
        const Mat3 d_R = (d_cov3d + d_cov3d.transpose()) * r.rot_mat * S2;
        const Vec3 d_s2 = (r.rot_mat.transpose() * d_cov3d * r.rot_mat).diagonal();
        for (int ax = 0; ax < 3; ++ax)
            g.d_log_scales[i][ax] += d_s2[ax] * 2.0 * r.scale[ax] * r.scale[ax];
        g.d_rotations[i] += quat_to_matrix_backward(r.q_raw, d_R);

        // mean2d and J both depend on p_cam
        Vec3 d_p = J.transpose() * d_mean2d[ri];
        const double z = r.p_cam.z(), iz2 = 1.0 / (z * z), iz3 = iz2 / z;
        d_p.x() += d_J(0, 2) * (-cam.fx * iz2);
        d_p.y() += d_J(1, 2) * (-cam.fy * iz2);
        d_p.z() += d_J(0, 0) * (-cam.fx * iz2) + d_J(1, 1) * (-cam.fy * iz2) +
                   d_J(0, 2) * (2.0 * cam.fx * r.p_cam.x() * iz3) +
                   d_J(1, 2) * (2.0 * cam.fy * r.p_cam.y() * iz3);

        g.d_centers[i] += W.transpose() * d_p;
    }
    return grads;
}

}  // namespace splatfit
