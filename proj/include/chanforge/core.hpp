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
//
// Domain types and closed-form radio math.  Conventions used throughout the
// library: delays in nanoseconds, powers in dBm, angles in degrees with
// inclination measured from +z in [0,180] and azimuth in (-180,180], all
// positions in a global ENU frame in meters.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "chanforge/common.hpp"
#include "chanforge/geometry.hpp"

namespace chanforge {

/// Number of cluster slots in every cluster vector.
inline constexpr int kNumClusterSlots = 10;

/// One propagation path at one frequency.
struct Ray {
    double delay_ns = 0.0;
    double aoa_incl_deg = 0.0;
    double aoa_az_deg = 0.0;
    double aod_incl_deg = 0.0;
    double aod_az_deg = 0.0;
    double rx_power_dbm = 0.0;
};

/// TX/RX pair with per-frequency ray lists; the unit of one training record.
struct Link {
    std::int64_t id = 0;
    Vec3 tx_pos;
    Vec3 rx_pos;
    std::vector<double> frequencies_hz;       // length M, strictly ascending
    std::vector<std::vector<Ray>> rays;       // [M][<=20]
};

/// TX->RX displacement and the derived condition features.
struct Condition {
    Vec3 u;               // rx_pos - tx_pos
    double d3d_m = 0.0;
    double log10_d3d = 0.0;
};

/// Per-frequency components of one cluster.
struct ClusterFreq {
    double rms_aoa_incl_deg = 0.0;
    double rms_aoa_az_deg = 0.0;
    double rms_aod_incl_deg = 0.0;
    double rms_aod_az_deg = 0.0;
    double rms_delay_ns = 0.0;
    std::optional<double> power_dbm;  // absent = cluster not seen at this frequency
};

struct Cluster {
    double min_delay_ns = 0.0;
    double mean_aoa_incl_deg = 0.0;
    double mean_aoa_az_deg = 0.0;
    double mean_aod_incl_deg = 0.0;
    double mean_aod_az_deg = 0.0;
    std::vector<ClusterFreq> fm;  // length M

    bool present_at(std::size_t m) const { return m < fm.size() && fm[m].power_dbm.has_value(); }
    bool present() const {
        for (const auto& f : fm)
            if (f.power_dbm) return true;
        return false;
    }
};

/// Exactly kNumClusterSlots cluster slots plus the link condition.  Slots
/// with no power at any frequency are padding.
struct ClusterVector {
    std::array<Cluster, kNumClusterSlots> clusters;
    Condition condition;
    std::size_t num_freq = 0;

    /// (5 + 6M) * L flattened parameter count.
    std::size_t flat_size() const { return (5 + 6 * num_freq) * kNumClusterSlots; }
};

inline ClusterVector make_outage_vector(const Condition& cond, std::size_t num_freq) {
    ClusterVector x;
    x.condition = cond;
    x.num_freq = num_freq;
    for (auto& cl : x.clusters) cl.fm.assign(num_freq, ClusterFreq{});
    return x;
}

inline double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }
inline double mw_to_dbm(double mw) { return 10.0 * std::log10(mw); }

/// Free-space path loss 20*log10(4*pi*d*f/c) in dB.
inline double fspl_db(double d_m, double f_hz) {
    if (!(d_m > 0.0) || !(f_hz > 0.0))
        throw std::invalid_argument("fspl_db: distance and frequency must be positive");
    return 20.0 * std::log10(4.0 * std::numbers::pi * d_m * f_hz / c_light);
}

/// Line-of-sight propagation delay in nanoseconds.
inline double los_delay_ns(double d3d_m) {
    if (!(d3d_m > 0.0)) throw std::invalid_argument("los_delay_ns: distance must be positive");
    return d3d_m / c_light * 1e9;
}

/// (d3D, log10 d3D) from the TX->RX displacement.
inline Condition condition_features(const Vec3& u) {
    const double d = u.norm();
    if (!(d > 0.0)) throw std::invalid_argument("condition_features: zero displacement");
    return Condition{u, d, std::log10(d)};
}

/// Total received power over present clusters at frequency m, as seen by
/// isotropic antennas; absent when no cluster is present (outage).
inline std::optional<double> omni_rx_power_dbm(const ClusterVector& x, std::size_t m) {
    if (m >= x.num_freq) throw std::invalid_argument("omni_rx_power_dbm: frequency index out of range");
    double total_mw = 0.0;
    bool any = false;
    for (const auto& cl : x.clusters) {
        if (cl.present_at(m)) {
            total_mw += dbm_to_mw(*cl.fm[m].power_dbm);
            any = true;
        }
    }
    if (!any) return std::nullopt;
    return mw_to_dbm(total_mw);
}

/// LOS direction of arrival (unit vector from RX toward TX).
inline Vec3 los_aoa_direction(const Condition& cond) { return (cond.u * -1.0).normalized(); }

/// LOS direction of departure (unit vector from TX toward RX).
inline Vec3 los_aod_direction(const Condition& cond) { return cond.u.normalized(); }

}  // namespace chanforge
