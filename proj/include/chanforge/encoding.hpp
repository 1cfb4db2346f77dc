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
// Bidirectional codec between cluster vectors and the fixed-length
// normalized vectors the GAN consumes.  All angle fields are expressed
// relative to the LOS direction, delays relative to the LOS delay, and
// powers as excess path loss over free space.

#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "chanforge/core.hpp"
#include "chanforge/geometry.hpp"

namespace chanforge {

inline constexpr double kDefaultDeltaDb = 80.0;
inline constexpr double kDefaultGainMin = 0.05;
inline constexpr double kDefaultTxRefPowerDbm = 30.0;

/// Min-max scaler with the degenerate guard: an unfittable field keeps
/// range 1 so the map stays invertible.
struct MinMaxScaler {
    double min = 0.0;
    double range = 1.0;

    void fit(const std::vector<double>& values) {
        if (values.empty()) return;
        const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
        min = *lo;
        range = (*hi > *lo) ? (*hi - *lo) : 1.0;
    }
    double encode(double v) const { return std::clamp((v - min) / range, 0.0, 1.0); }
    double decode(double e) const { return e * range + min; }
};

struct StandardScaler {
    double mean = 0.0;
    double std = 1.0;

    void fit(const std::vector<double>& values) {
        if (values.empty()) return;
        double m = 0.0;
        for (double v : values) m += v;
        m /= static_cast<double>(values.size());
        double var = 0.0;
        for (double v : values) var += (v - m) * (v - m);
        var /= static_cast<double>(values.size());
        mean = m;
        std = var > 0.0 ? std::sqrt(var) : 1.0;
    }
    double encode(double v) const { return (v - mean) / std; }
    double decode(double e) const { return e * std + mean; }
};

/// Spread kinds in their per-frequency block order.
inline constexpr int kNumSpreadKinds = 5;

/// Fitted transforms.  Immutable after fitting; serialized into the model
/// checkpoint so encode/decode stay consistent at sampling time.
struct Scalers {
    std::array<MinMaxScaler, kNumClusterSlots> excess_delay;   // per cluster slot, ns
    StandardScaler aoa_incl;                                   // LOS-relative, degrees
    StandardScaler aod_incl;
    std::vector<std::array<MinMaxScaler, kNumSpreadKinds>> spreads;  // [M][kind]
    std::vector<StandardScaler> cond;                          // length 2 (+1 with link state)
    std::vector<double> frequencies_hz;
    double delta_db = kDefaultDeltaDb;
    double g_min = kDefaultGainMin;
    double tx_ref_power_dbm = kDefaultTxRefPowerDbm;
    std::size_t fitted_on = 0;

    std::size_t num_freq() const { return frequencies_hz.size(); }
    bool fitted() const { return fitted_on > 0; }
};

/// Flattened feature layout: per cluster slot
/// [excess_delay, aoa_incl, aoa_az, aod_incl, aod_az,
///  then per frequency (rms_aoa_incl, rms_aoa_az, rms_aod_incl,
///  rms_aod_az, rms_delay, gain)].
struct EncodingLayout {
    std::size_t num_freq = 0;

    std::size_t slot_stride() const { return 5 + 6 * num_freq; }
    std::size_t flat_size() const { return slot_stride() * kNumClusterSlots; }
    std::size_t slot(std::size_t l) const { return l * slot_stride(); }
    std::size_t freq_block(std::size_t l, std::size_t m) const { return slot(l) + 5 + 6 * m; }
    std::size_t gain_index(std::size_t l, std::size_t m) const { return freq_block(l, m) + 5; }
};

enum class FieldAct { sigmoid01, identity, tanh_sym };

/// Per-output squashing pattern for a generator emitting this layout:
/// [0,1] fields (delays, spreads, gains) are logistic, azimuths tanh,
/// standard-scaled inclinations pass through.
inline std::vector<FieldAct> layout_output_activations(std::size_t num_freq) {
    const EncodingLayout lay{num_freq};
    std::vector<FieldAct> acts(lay.flat_size(), FieldAct::sigmoid01);
    for (std::size_t l = 0; l < kNumClusterSlots; ++l) {
        acts[lay.slot(l) + 1] = FieldAct::identity;  // aoa_incl
        acts[lay.slot(l) + 2] = FieldAct::tanh_sym;  // aoa_az
        acts[lay.slot(l) + 3] = FieldAct::identity;  // aod_incl
        acts[lay.slot(l) + 4] = FieldAct::tanh_sym;  // aod_az
    }
    return acts;
}

struct EncodedSample {
    Eigen::VectorXd x;
    Eigen::VectorXd c;
};

/// Excess path loss over free space mapped to [0,1]; absent or >= delta
/// maps to 0, free-space-strength paths to 1.
inline double encode_gain(std::optional<double> power_dbm, double d3d_m, double f_hz, double delta_db,
                          double tx_ref_power_dbm = kDefaultTxRefPowerDbm) {
    if (!(delta_db > 0.0)) throw std::invalid_argument("encode_gain: delta must be positive");
    if (!power_dbm) return 0.0;
    const double path_loss = tx_ref_power_dbm - *power_dbm;
    const double excess = path_loss - fspl_db(d3d_m, f_hz);
    if (excess >= delta_db) return 0.0;
    return std::clamp((delta_db - excess) / delta_db, 0.0, 1.0);
}

inline Scalers fit_scalers(const std::vector<ClusterVector>& training, std::vector<double> frequencies_hz,
                           double delta_db = kDefaultDeltaDb, double tx_ref_power_dbm = kDefaultTxRefPowerDbm,
                           const std::vector<double>* extra_cond = nullptr) {
    if (training.size() < 2) throw std::invalid_argument("fit_scalers: need at least 2 training samples");
    const std::size_t num_freq = frequencies_hz.size();

    Scalers s;
    s.frequencies_hz = std::move(frequencies_hz);
    s.delta_db = delta_db;
    s.tx_ref_power_dbm = tx_ref_power_dbm;
    s.spreads.resize(num_freq);
    s.fitted_on = training.size();

    std::array<std::vector<double>, kNumClusterSlots> delays;
    std::vector<double> rel_aoa_incl, rel_aod_incl;
    std::vector<std::array<std::vector<double>, kNumSpreadKinds>> spread_vals(num_freq);
    std::vector<double> cond_d3d, cond_log;

    for (const auto& x : training) {
        cond_d3d.push_back(x.condition.d3d_m);
        cond_log.push_back(x.condition.log10_d3d);
        const double los_ns = los_delay_ns(x.condition.d3d_m);
        const LosRotation aoa_rot(los_aoa_direction(x.condition));
        const LosRotation aod_rot(los_aod_direction(x.condition));
        for (std::size_t l = 0; l < kNumClusterSlots; ++l) {
            const Cluster& cl = x.clusters[l];
            if (!cl.present()) continue;
            delays[l].push_back(cl.min_delay_ns - los_ns);
            rel_aoa_incl.push_back(aoa_rot.forward({cl.mean_aoa_incl_deg, cl.mean_aoa_az_deg}).incl_deg);
            rel_aod_incl.push_back(aod_rot.forward({cl.mean_aod_incl_deg, cl.mean_aod_az_deg}).incl_deg);
            for (std::size_t m = 0; m < num_freq && m < cl.fm.size(); ++m) {
                if (!cl.fm[m].power_dbm) continue;
                spread_vals[m][0].push_back(cl.fm[m].rms_aoa_incl_deg);
                spread_vals[m][1].push_back(cl.fm[m].rms_aoa_az_deg);
                spread_vals[m][2].push_back(cl.fm[m].rms_aod_incl_deg);
                spread_vals[m][3].push_back(cl.fm[m].rms_aod_az_deg);
                spread_vals[m][4].push_back(cl.fm[m].rms_delay_ns);
            }
        }
    }

    for (std::size_t l = 0; l < kNumClusterSlots; ++l) s.excess_delay[l].fit(delays[l]);
    s.aoa_incl.fit(rel_aoa_incl);
    s.aod_incl.fit(rel_aod_incl);
    for (std::size_t m = 0; m < num_freq; ++m)
        for (int kind = 0; kind < kNumSpreadKinds; ++kind) s.spreads[m][kind].fit(spread_vals[m][kind]);

    s.cond.resize(extra_cond ? 3 : 2);
    s.cond[0].fit(cond_d3d);
    s.cond[1].fit(cond_log);
    if (extra_cond) {
        if (extra_cond->size() != training.size())
            throw std::invalid_argument("fit_scalers: extra condition size mismatch");
        s.cond[2].fit(*extra_cond);
    }
    return s;
}

inline Eigen::VectorXd encode_condition(const Condition& cond, const Scalers& s,
                                        std::optional<double> extra = std::nullopt) {
    if (s.cond.size() == 3 && !extra)
        throw std::invalid_argument("encode_condition: model expects a link-state feature");
    Eigen::VectorXd c(static_cast<Eigen::Index>(s.cond.size()));
    c[0] = s.cond[0].encode(cond.d3d_m);
    c[1] = s.cond[1].encode(cond.log10_d3d);
    if (s.cond.size() == 3) c[2] = s.cond[2].encode(*extra);
    return c;
}

inline EncodedSample encode(const ClusterVector& x, const Scalers& s,
                            std::optional<double> extra_cond = std::nullopt) {
    if (!s.fitted()) throw std::logic_error("encode: scalers not fitted");
    const EncodingLayout lay{s.num_freq()};
    EncodedSample out;
    out.x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(lay.flat_size()));
    out.c = encode_condition(x.condition, s, extra_cond);

    const double los_ns = los_delay_ns(x.condition.d3d_m);
    const LosRotation aoa_rot(los_aoa_direction(x.condition));
    const LosRotation aod_rot(los_aod_direction(x.condition));

    for (std::size_t l = 0; l < kNumClusterSlots; ++l) {
        const Cluster& cl = x.clusters[l];
        if (!cl.present()) continue;
        const std::size_t base = lay.slot(l);
        out.x[base + 0] = s.excess_delay[l].encode(cl.min_delay_ns - los_ns);
        const AnglePair rel_aoa = aoa_rot.forward({cl.mean_aoa_incl_deg, cl.mean_aoa_az_deg});
        const AnglePair rel_aod = aod_rot.forward({cl.mean_aod_incl_deg, cl.mean_aod_az_deg});
        out.x[base + 1] = s.aoa_incl.encode(rel_aoa.incl_deg);
        out.x[base + 2] = rel_aoa.az_deg / 180.0;
        out.x[base + 3] = s.aod_incl.encode(rel_aod.incl_deg);
        out.x[base + 4] = rel_aod.az_deg / 180.0;
        for (std::size_t m = 0; m < s.num_freq(); ++m) {
            if (!cl.present_at(m)) continue;  // block stays zero
            const std::size_t fb = lay.freq_block(l, m);
            const ClusterFreq& f = cl.fm[m];
            out.x[fb + 0] = s.spreads[m][0].encode(f.rms_aoa_incl_deg);
            out.x[fb + 1] = s.spreads[m][1].encode(f.rms_aoa_az_deg);
            out.x[fb + 2] = s.spreads[m][2].encode(f.rms_aod_incl_deg);
            out.x[fb + 3] = s.spreads[m][3].encode(f.rms_aod_az_deg);
            out.x[fb + 4] = s.spreads[m][4].encode(f.rms_delay_ns);
            out.x[fb + 5] = encode_gain(f.power_dbm, x.condition.d3d_m, s.frequencies_hz[m], s.delta_db,
                                        s.tx_ref_power_dbm);
        }
    }
    return out;
}

/// Exact inverse of encode on the valid range.  Gain entries below g_min
/// decode to an absent (cluster, frequency); a slot absent everywhere is
/// padding.  Decoded spreads and delays are clamped non-negative and
/// azimuths wrapped, so any finite input yields a valid cluster vector.
inline ClusterVector decode(const Eigen::VectorXd& flat, const Condition& condition, const Scalers& s) {
    const EncodingLayout lay{s.num_freq()};
    if (flat.size() != static_cast<Eigen::Index>(lay.flat_size()))
        throw std::invalid_argument("decode: flat vector has wrong length");

    ClusterVector out = make_outage_vector(condition, s.num_freq());
    const double los_ns = los_delay_ns(condition.d3d_m);
    const LosRotation aoa_rot(los_aoa_direction(condition));
    const LosRotation aod_rot(los_aod_direction(condition));

    for (std::size_t l = 0; l < kNumClusterSlots; ++l) {
        bool any = false;
        for (std::size_t m = 0; m < s.num_freq(); ++m)
            if (flat[lay.gain_index(l, m)] >= s.g_min) any = true;
        if (!any) continue;

        Cluster& cl = out.clusters[l];
        const std::size_t base = lay.slot(l);
        cl.min_delay_ns = los_ns + std::max(0.0, s.excess_delay[l].decode(flat[base + 0]));
        const AnglePair rel_aoa{std::clamp(s.aoa_incl.decode(flat[base + 1]), 0.0, 180.0),
                                wrap_azimuth_deg(flat[base + 2] * 180.0)};
        const AnglePair rel_aod{std::clamp(s.aod_incl.decode(flat[base + 3]), 0.0, 180.0),
                                wrap_azimuth_deg(flat[base + 4] * 180.0)};
        const AnglePair aoa = aoa_rot.inverse(rel_aoa);
        const AnglePair aod = aod_rot.inverse(rel_aod);
        cl.mean_aoa_incl_deg = aoa.incl_deg;
        cl.mean_aoa_az_deg = aoa.az_deg;
        cl.mean_aod_incl_deg = aod.incl_deg;
        cl.mean_aod_az_deg = aod.az_deg;

        for (std::size_t m = 0; m < s.num_freq(); ++m) {
            const std::size_t fb = lay.freq_block(l, m);
            const double g = flat[lay.gain_index(l, m)];
            if (g < s.g_min) continue;  // absent at this frequency
            ClusterFreq& f = cl.fm[m];
            f.rms_aoa_incl_deg = std::max(0.0, s.spreads[m][0].decode(flat[fb + 0]));
            f.rms_aoa_az_deg = std::max(0.0, s.spreads[m][1].decode(flat[fb + 1]));
            f.rms_aod_incl_deg = std::max(0.0, s.spreads[m][2].decode(flat[fb + 2]));
            f.rms_aod_az_deg = std::max(0.0, s.spreads[m][3].decode(flat[fb + 3]));
            f.rms_delay_ns = std::max(0.0, s.spreads[m][4].decode(flat[fb + 4]));
            const double excess = s.delta_db * (1.0 - std::min(g, 1.0));
            f.power_dbm = s.tx_ref_power_dbm - excess - fspl_db(condition.d3d_m, s.frequencies_hz[m]);
        }
    }
    return out;
}

inline ClusterVector decode(const EncodedSample& sample, const Condition& condition, const Scalers& s) {
    return decode(sample.x, condition, s);
}

}  // namespace chanforge
