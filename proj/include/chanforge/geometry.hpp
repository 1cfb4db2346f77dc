// SPDX-License-Identifier: Apache-2.0
//
// chanforge - multi-frequency double-directional channel model toolkit
// Copyright (C) 2026 chanforge contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace chanforge {

inline constexpr double deg_per_rad = 180.0 / std::numbers::pi;
inline constexpr double rad_per_deg = std::numbers::pi / 180.0;

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm() const { return std::sqrt(dot(*this)); }
    Vec3 normalized() const {
        const double n = norm();
        if (n <= 0.0) throw std::invalid_argument("cannot normalize zero vector");
        return {x / n, y / n, z / n};
    }
};

/// Wrap an azimuth (degrees) into (-180, 180].
inline double wrap_azimuth_deg(double a) {
    a = std::fmod(a, 360.0);
    if (a <= -180.0) a += 360.0;
    if (a > 180.0) a -= 360.0;
    return a;
}

/// Signed smallest angular difference a-b in degrees, wrapped to (-180, 180].
inline double wrap_angle_diff_deg(double a, double b) { return wrap_azimuth_deg(a - b); }

/// (inclination-from-+z in [0,180], azimuth in (-180,180]) degrees.
struct AnglePair {
    double incl_deg = 0.0;
    double az_deg = 0.0;
};

inline Vec3 direction_from_angles(const AnglePair& a) {
    const double th = a.incl_deg * rad_per_deg;
    const double ph = a.az_deg * rad_per_deg;
    return {std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)};
}

/// Azimuth of a (numerically) polar direction is reported as 0.
inline AnglePair angles_from_direction(const Vec3& v) {
    const double n = v.norm();
    if (n <= 0.0) throw std::invalid_argument("zero direction vector");
    const double cz = std::clamp(v.z / n, -1.0, 1.0);
    AnglePair out;
    out.incl_deg = std::acos(cz) * deg_per_rad;
    const bool polar = std::hypot(v.x, v.y) <= 1e-9 * n;
    out.az_deg = polar ? 0.0 : wrap_azimuth_deg(std::atan2(v.y, v.x) * deg_per_rad);
    return out;
}

/// Rotation that maps a reference direction onto +z; used to express ray
/// angles relative to the LOS direction.  forward() then inverse() composes
/// to the identity.
class LosRotation {
  public:
    explicit LosRotation(const Vec3& los_direction) {
        const AnglePair los = angles_from_direction(los_direction);
        theta_ = los.incl_deg * rad_per_deg;
        phi_ = los.az_deg * rad_per_deg;
    }

    /// Global angles -> angles in the frame whose +z axis is the LOS direction.
    AnglePair forward(const AnglePair& global) const {
        const Vec3 v = direction_from_angles(global);
        // Rz(-phi) then Ry(-theta)
        const Vec3 a{v.x * std::cos(phi_) + v.y * std::sin(phi_),
                     -v.x * std::sin(phi_) + v.y * std::cos(phi_), v.z};
        const Vec3 b{a.x * std::cos(theta_) - a.z * std::sin(theta_), a.y,
                     a.x * std::sin(theta_) + a.z * std::cos(theta_)};
        return angles_from_direction(b);
    }

    /// Inverse map back to global angles.
    AnglePair inverse(const AnglePair& relative) const {
        const Vec3 v = direction_from_angles(relative);
        // Ry(theta) then Rz(phi)
        const Vec3 a{v.x * std::cos(theta_) + v.z * std::sin(theta_), v.y,
                     -v.x * std::sin(theta_) + v.z * std::cos(theta_)};
        const Vec3 b{a.x * std::cos(phi_) - a.y * std::sin(phi_),
                     a.x * std::sin(phi_) + a.y * std::cos(phi_), a.z};
        return angles_from_direction(b);
    }

  private:
    double theta_ = 0.0;
    double phi_ = 0.0;
};

}  // namespace chanforge
