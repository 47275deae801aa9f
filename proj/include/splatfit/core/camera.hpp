#pragma once

#include "splatfit/core/error.hpp"
#include "splatfit/core/transform.hpp"

namespace splatfit {

constexpr double kMinDepth = 1e-8;

// Pinhole camera. Pixel (ix, iy) is sampled at continuous coordinates
// (ix + 0.5, iy + 0.5).
struct Camera {
    double fx = 1.0, fy = 1.0;
    double cx = 0.0, cy = 0.0;
    int width = 1, height = 1;
    RigidTransform world_to_camera;

    Camera() = default;
    Camera(double fx_, double fy_, double cx_, double cy_, int w, int h,
           const RigidTransform& w2c = RigidTransform())
        : fx(fx_), fy(fy_), cx(cx_), cy(cy_), width(w), height(h),
          world_to_camera(w2c) {
        if (fx <= 0.0 || fy <= 0.0)
            throw DimensionMismatch("camera focal lengths must be positive");
        if (width < 1 || height < 1)
            throw DimensionMismatch("camera image size must be at least 1x1");
    }

    Vec3 to_camera(const Vec3& p_world) const { return world_to_camera.apply(p_world); }
};

struct Projection {
    double u, v;     // pixels
    double depth;    // scene units
};

inline Projection project(const Camera& cam, const Vec3& p_cam) {
    if (p_cam.z() <= kMinDepth)
        throw NonPositiveDepth("point at depth " + std::to_string(p_cam.z()) +
                               " is behind or on the camera plane");
    return Projection{cam.fx * p_cam.x() / p_cam.z() + cam.cx,
                      cam.fy * p_cam.y() / p_cam.z() + cam.cy, p_cam.z()};
}

// d(u,v)/d(p_cam) at p_cam; rows (u, v), columns (x, y, z).
inline Mat23 projection_jacobian(const Camera& cam, const Vec3& p) {
    const double iz = 1.0 / p.z();
    Mat23 J;
    J << cam.fx * iz, 0.0, -cam.fx * p.x() * iz * iz,
         0.0, cam.fy * iz, -cam.fy * p.y() * iz * iz;
    return J;
}

}  // namespace splatfit
