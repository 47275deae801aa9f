#pragma once

#include "splatfit/core/rotation.hpp"

namespace splatfit {

// Rigid map p -> R·p + t. Translations are in scene units (1 unit = 1 cm).
struct RigidTransform {
    Rotation rotation;
    Vec3 translation = Vec3::Zero();

    RigidTransform() = default;
    RigidTransform(const Rotation& r, const Vec3& t) : rotation(r), translation(t) {}

    static RigidTransform identity() { return RigidTransform(); }

    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }

    RigidTransform inverse() const {
        const Rotation rinv = rotation.inverse();
        return RigidTransform(rinv, -(rinv * translation));
    }

    // this ∘ rhs: applies rhs first.
    RigidTransform compose(const RigidTransform& rhs) const {
        return RigidTransform(rotation * rhs.rotation,
                              rotation * rhs.translation + translation);
    }
};

inline Vec3 apply_rigid(const RigidTransform& T, const Vec3& p) { return T.apply(p); }

}  // namespace splatfit
