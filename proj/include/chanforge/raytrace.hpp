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
// Deterministic synthetic multipath generator: LOS + first-order wall
// reflections (image method) + single-bounce diffuse scattering.  Power is
// frequency dependent, geometry is not, so a given path has identical
// angles and delay at every frequency.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "chanforge/common.hpp"
#include "chanforge/core.hpp"
#include "chanforge/geometry.hpp"
#include "chanforge/rng.hpp"

namespace chanforge {

inline constexpr int kMaxRaysPerLink = 20;

/// Per-frequency propagation parameters of the synthetic scene.
struct FreqChannelParams {
    double scattering_s = 0.273;        // ratio of scattered to incident field, in [0,1]
    double reflection_loss_db = 6.0;
    double detection_floor_dbm = -250.0;
};

struct SceneConfig {
    double area_x_m = 500.0;
    double area_y_m = 400.0;
    int n_walls = 30;
    double wall_height_m = 20.0;
    double wall_len_min_m = 20.0;
    double wall_len_max_m = 60.0;
    int n_scatterers = 50;
    double scatter_z_min_m = 0.5;
    double tx_ref_power_dbm = 30.0;     // fixed reference TX power
    double interaction_jitter_db = 3.0; // per-path uniform loss jitter on interactions
    double scatter_lobe_exponent = 4.0; // forward-scatter directivity exponent
    std::vector<FreqChannelParams> freq_params;

    void validate() const {
        if (!(area_x_m > 0.0) || !(area_y_m > 0.0))
            throw std::invalid_argument("SceneConfig: area must be positive");
        if (n_walls < 0 || n_scatterers < 0)
            throw std::invalid_argument("SceneConfig: negative object count");
        if (!(wall_height_m > 0.0)) throw std::invalid_argument("SceneConfig: wall height must be positive");
        for (const auto& fp : freq_params) {
            if (!(fp.scattering_s >= 0.0 && fp.scattering_s <= 1.0))
                throw std::invalid_argument("SceneConfig: scattering coefficient outside [0,1]");
        }
    }
};

inline std::vector<FreqChannelParams> default_freq_params_28_140() {
    return {FreqChannelParams{0.273, 6.0, -250.0}, FreqChannelParams{0.4, 12.0, -250.0}};
}

/// Vertical rectangular reflector: base segment a-b at z=0, extruded to height.
struct Wall {
    Vec3 a, b;       // z = 0
    double height = 0.0;

    Vec3 unit_normal() const {
        const Vec3 d = b - a;
        return Vec3{-d.y, d.x, 0.0}.normalized();
    }
};

struct Scene {
    SceneConfig cfg;
    std::vector<Wall> walls;
    std::vector<Vec3> scatterers;
    std::uint64_t seed = 0;
};

struct Deployment {
    std::vector<Vec3> gnb_positions;  // TX side, default height 10 m
    std::vector<Vec3> ue_positions;   // RX side, default height 1.5 m
    std::vector<double> frequencies_hz;
};

inline Scene generate_scene(const SceneConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Scene scene;
    scene.cfg = cfg;
    scene.seed = seed;
    Rng rng(mix_seed(seed, 0x5ce7eULL));
    for (int i = 0; i < cfg.n_walls; ++i) {
        const double cx = rng.uniform(0.0, cfg.area_x_m);
        const double cy = rng.uniform(0.0, cfg.area_y_m);
        const double ang = rng.uniform(0.0, std::numbers::pi);
        const double len = rng.uniform(cfg.wall_len_min_m, cfg.wall_len_max_m);
        const Vec3 h{0.5 * len * std::cos(ang), 0.5 * len * std::sin(ang), 0.0};
        scene.walls.push_back(Wall{Vec3{cx, cy, 0.0} - h, Vec3{cx, cy, 0.0} + h, cfg.wall_height_m});
    }
    for (int i = 0; i < cfg.n_scatterers; ++i) {
        const double x = rng.uniform(0.0, cfg.area_x_m);
        const double y = rng.uniform(0.0, cfg.area_y_m);
        const double z = rng.uniform(cfg.scatter_z_min_m, cfg.wall_height_m);
        scene.scatterers.push_back(Vec3{x, y, z});
    }
    return scene;
}

namespace detail {

/// True when the open segment p->q crosses the wall rectangle.
inline bool segment_hits_wall(const Vec3& p, const Vec3& q, const Wall& w) {
    const Vec3 n = w.unit_normal();
    const Vec3 d = q - p;
    const double denom = n.dot(d);
    if (std::abs(denom) < 1e-12) return false;  // parallel to the wall plane
    const double t = n.dot(w.a - p) / denom;
    if (t <= 1e-9 || t >= 1.0 - 1e-9) return false;
    const Vec3 x = p + d * t;
    if (x.z < 0.0 || x.z > w.height) return false;
    const Vec3 seg = w.b - w.a;
    const double s = (x - w.a).dot(seg) / seg.dot(seg);
    return s >= 0.0 && s <= 1.0;
}

inline bool path_blocked(const Scene& scene, const Vec3& p, const Vec3& q, int skip_wall = -1) {
    for (std::size_t i = 0; i < scene.walls.size(); ++i) {
        if (static_cast<int>(i) == skip_wall) continue;
        if (segment_hits_wall(p, q, scene.walls[i])) return true;
    }
    return false;
}

/// Geometry of one candidate path; power is filled in per frequency.
struct PathGeom {
    double length_m = 0.0;
    double hop1_m = 0.0, hop2_m = 0.0;  // scatter paths only
    AnglePair aoa, aod;
    double lobe_loss_db = 0.0;   // scatter directivity loss, frequency independent
    double jitter_db = 0.0;
    bool scatter = false;        // scatter paths take the S(f) gain, walls the (1-S(f)) term
    bool interacts = false;      // false only for LOS
};

inline AnglePair arrival_angles(const Vec3& at, const Vec3& toward) {
    return angles_from_direction(toward - at);
}

}  // namespace detail

/// Trace one link.  The rng drives per-path interaction jitter and must be
/// dedicated to this link (see generate_dataset for the seeding contract);
/// exactly n_walls + n_scatterers draws are consumed regardless of which
/// paths exist.
inline std::vector<std::vector<Ray>> trace_link(const Scene& scene, const Vec3& tx, const Vec3& rx,
                                                const std::vector<double>& frequencies_hz, Rng& rng) {
    if ((tx - rx).norm() <= 0.0) throw std::invalid_argument("trace_link: tx == rx");
    if (frequencies_hz.size() > scene.cfg.freq_params.size())
        throw std::invalid_argument("trace_link: missing per-frequency parameters");

    const double j = scene.cfg.interaction_jitter_db;
    std::vector<detail::PathGeom> paths;

    // LOS
    if (!detail::path_blocked(scene, tx, rx)) {
        detail::PathGeom p;
        p.length_m = (rx - tx).norm();
        p.aoa = detail::arrival_angles(rx, tx);
        p.aod = detail::arrival_angles(tx, rx);
        paths.push_back(p);
    }

    // First-order specular reflections via the image method.
    for (std::size_t wi = 0; wi < scene.walls.size(); ++wi) {
        const double jitter = (j > 0.0) ? rng.uniform(-j, j) : 0.0;
        const Wall& w = scene.walls[wi];
        const Vec3 n = w.unit_normal();
        const double side_tx = n.dot(tx - w.a);
        const double side_rx = n.dot(rx - w.a);
        if (side_tx * side_rx <= 1e-12) continue;  // image method needs both on one side
        const Vec3 tx_img = tx - n * (2.0 * side_tx);
        const Vec3 d = rx - tx_img;
        const double denom = n.dot(d);
        if (std::abs(denom) < 1e-12) continue;
        const double t = n.dot(w.a - tx_img) / denom;
        if (t <= 0.0 || t >= 1.0) continue;
        const Vec3 refl = tx_img + d * t;
        if (refl.z < 0.0 || refl.z > w.height) continue;
        const Vec3 seg = w.b - w.a;
        const double s = (refl - w.a).dot(seg) / seg.dot(seg);
        if (s < 0.0 || s > 1.0) continue;
        if (detail::path_blocked(scene, tx, refl, static_cast<int>(wi))) continue;
        if (detail::path_blocked(scene, refl, rx, static_cast<int>(wi))) continue;

        detail::PathGeom p;
        p.length_m = d.norm();  // |tx - refl| + |refl - rx|
        p.aoa = detail::arrival_angles(rx, refl);
        p.aod = detail::arrival_angles(tx, refl);
        p.jitter_db = jitter;
        p.interacts = true;
        paths.push_back(p);
    }

    // Single-bounce diffuse scattering with a forward-directed lobe.
    for (const Vec3& sc : scene.scatterers) {
        const double jitter = (j > 0.0) ? rng.uniform(-j, j) : 0.0;
        if (detail::path_blocked(scene, tx, sc)) continue;
        if (detail::path_blocked(scene, sc, rx)) continue;
        const double d1 = (sc - tx).norm();
        const double d2 = (rx - sc).norm();
        if (d1 <= 0.0 || d2 <= 0.0) continue;
        const double cos_psi = (sc - tx).normalized().dot((rx - sc).normalized());
        const double lobe = 0.5 * (1.0 + cos_psi);
        if (lobe < 1e-12) continue;  // pure backscatter

        detail::PathGeom p;
        p.length_m = d1 + d2;
        p.hop1_m = d1;
        p.hop2_m = d2;
        p.aoa = detail::arrival_angles(rx, sc);
        p.aod = detail::arrival_angles(tx, sc);
        p.lobe_loss_db = -10.0 * scene.cfg.scatter_lobe_exponent * std::log10(lobe);
        p.jitter_db = jitter;
        p.scatter = true;
        p.interacts = true;
        paths.push_back(p);
    }

    std::vector<std::vector<Ray>> out(frequencies_hz.size());
    for (std::size_t m = 0; m < frequencies_hz.size(); ++m) {
        const double f = frequencies_hz[m];
        const auto& fp = scene.cfg.freq_params[m];
        std::vector<Ray> rays;
        for (const auto& p : paths) {
            double power = scene.cfg.tx_ref_power_dbm - p.lobe_loss_db + p.jitter_db;
            if (p.scatter) {
                // spreading over each hop, scaled by S(f)^2 in power
                power -= fspl_db(p.hop1_m, f) + fspl_db(p.hop2_m, f);
                power += 20.0 * std::log10(std::max(fp.scattering_s, 1e-300));
            } else {
                power -= fspl_db(p.length_m, f);
                if (p.interacts) {
                    power -= fp.reflection_loss_db;
                    power += 20.0 * std::log10(std::max(1.0 - fp.scattering_s, 1e-300));
                }
            }
            if (power < fp.detection_floor_dbm) continue;
            Ray r;
            r.delay_ns = p.length_m / c_light * 1e9;
            r.aoa_incl_deg = p.aoa.incl_deg;
            r.aoa_az_deg = p.aoa.az_deg;
            r.aod_incl_deg = p.aod.incl_deg;
            r.aod_az_deg = p.aod.az_deg;
            r.rx_power_dbm = power;
            rays.push_back(r);
        }
        std::stable_sort(rays.begin(), rays.end(),
                         [](const Ray& a, const Ray& b) { return a.rx_power_dbm > b.rx_power_dbm; });
        if (rays.size() > kMaxRaysPerLink) rays.resize(kMaxRaysPerLink);
        out[m] = std::move(rays);
    }
    return out;
}

/// Uniform random gNB/UE drop inside the scene area.
inline Deployment make_random_deployment(const SceneConfig& cfg, std::size_t n_gnb, std::size_t n_ue,
                                         std::vector<double> frequencies_hz, std::uint64_t seed,
                                         double gnb_height_m = 10.0, double ue_height_m = 1.5) {
    if (!(gnb_height_m > 0.0) || !(ue_height_m > 0.0))
        throw std::invalid_argument("make_random_deployment: heights must be positive");
    Deployment dep;
    dep.frequencies_hz = std::move(frequencies_hz);
    Rng rng(mix_seed(seed, 0xde910ULL));
    for (std::size_t i = 0; i < n_gnb; ++i)
        dep.gnb_positions.push_back({rng.uniform(0.0, cfg.area_x_m), rng.uniform(0.0, cfg.area_y_m), gnb_height_m});
    for (std::size_t i = 0; i < n_ue; ++i)
        dep.ue_positions.push_back({rng.uniform(0.0, cfg.area_x_m), rng.uniform(0.0, cfg.area_y_m), ue_height_m});
    return dep;
}

/// One Link per (gnb, ue) pair, id = gnb_index * n_ue + ue_index.  Each
/// link's jitter rng is seeded from (master seed, link id), so the result
/// does not depend on tracing order or parallelism.
inline std::vector<Link> generate_dataset(const SceneConfig& cfg, const Deployment& dep,
                                          std::uint64_t seed) {
    if (dep.frequencies_hz.empty()) throw std::invalid_argument("generate_dataset: no frequencies");
    if (dep.frequencies_hz.size() > cfg.freq_params.size())
        throw std::invalid_argument("generate_dataset: missing per-frequency parameters");
    for (std::size_t m = 1; m < dep.frequencies_hz.size(); ++m)
        if (!(dep.frequencies_hz[m] > dep.frequencies_hz[m - 1]))
            throw std::invalid_argument("generate_dataset: frequencies must be strictly ascending");

    const Scene scene = generate_scene(cfg, seed);
    const std::size_t n = dep.gnb_positions.size() * dep.ue_positions.size();
    std::vector<Link> links(n);
    parallel_for(n, [&](std::size_t idx) {
        const std::size_t g = idx / dep.ue_positions.size();
        const std::size_t u = idx % dep.ue_positions.size();
        Link link;
        link.id = static_cast<std::int64_t>(idx);
        link.tx_pos = dep.gnb_positions[g];
        link.rx_pos = dep.ue_positions[u];
        link.frequencies_hz = dep.frequencies_hz;
        Rng link_rng(mix_seed(seed, static_cast<std::uint64_t>(link.id)));
        link.rays = trace_link(scene, link.tx_pos, link.rx_pos, dep.frequencies_hz, link_rng);
        links[idx] = std::move(link);
    });
    return links;
}

}  // namespace chanforge
