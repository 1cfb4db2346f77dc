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

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "chanforge/raytrace.hpp"

using namespace chanforge;

namespace {

SceneConfig small_config(int walls, int scatterers) {
    SceneConfig cfg;
    cfg.area_x_m = 200.0;
    cfg.area_y_m = 200.0;
    cfg.n_walls = walls;
    cfg.n_scatterers = scatterers;
    cfg.freq_params = default_freq_params_28_140();
    return cfg;
}

const std::vector<double> kFreqs{28e9, 140e9};

bool same_scene(const Scene& a, const Scene& b) {
    if (a.walls.size() != b.walls.size() || a.scatterers.size() != b.scatterers.size()) return false;
    for (std::size_t i = 0; i < a.walls.size(); ++i) {
        if (a.walls[i].a.x != b.walls[i].a.x || a.walls[i].a.y != b.walls[i].a.y) return false;
        if (a.walls[i].b.x != b.walls[i].b.x || a.walls[i].b.y != b.walls[i].b.y) return false;
    }
    for (std::size_t i = 0; i < a.scatterers.size(); ++i)
        if (a.scatterers[i].x != b.scatterers[i].x || a.scatterers[i].z != b.scatterers[i].z) return false;
    return true;
}

}  // namespace

TEST_CASE("generate_scene determinism and seed sensitivity") {
    const SceneConfig cfg = small_config(12, 8);
    const Scene s1 = generate_scene(cfg, 77);
    const Scene s2 = generate_scene(cfg, 77);
    CHECK(same_scene(s1, s2));

    const Scene s3 = generate_scene(cfg, 78);
    CHECK_FALSE(same_scene(s1, s3));

    const Scene empty = generate_scene(small_config(0, 0), 1);
    CHECK(empty.walls.empty());
    CHECK(empty.scatterers.empty());

    SceneConfig bad = cfg;
    bad.area_x_m = 0.0;
    CHECK_THROWS_AS(generate_scene(bad, 1), std::invalid_argument);
}

TEST_CASE("free space gives exactly the LOS ray") {
    const Scene scene = generate_scene(small_config(0, 0), 3);
    const Vec3 tx{10, 10, 10}, rx{110, 60, 1.5};
    Rng rng(1);
    const auto rays = trace_link(scene, tx, rx, kFreqs, rng);
    REQUIRE(rays.size() == 2);
    const double d = (rx - tx).norm();
    for (std::size_t m = 0; m < 2; ++m) {
        REQUIRE(rays[m].size() == 1);
        CHECK(rays[m][0].delay_ns == Catch::Approx(los_delay_ns(d)).epsilon(1e-12));
        CHECK(rays[m][0].rx_power_dbm ==
              Catch::Approx(scene.cfg.tx_ref_power_dbm - fspl_db(d, kFreqs[m])).margin(1e-9));
    }
    // LOS arrival/departure point at each other
    const AnglePair aoa = angles_from_direction(tx - rx);
    CHECK(rays[0][0].aoa_incl_deg == Catch::Approx(aoa.incl_deg).margin(1e-9));
    CHECK(rays[0][0].aoa_az_deg == Catch::Approx(aoa.az_deg).margin(1e-9));

    CHECK_THROWS_AS(trace_link(scene, tx, tx, kFreqs, rng), std::invalid_argument);
}

TEST_CASE("full blockage with no reflectors is an outage") {
    Scene scene = generate_scene(small_config(0, 0), 3);
    scene.walls.push_back(Wall{{10, -50, 0}, {10, 150, 0}, 100.0});
    const Vec3 tx{0, 0, 5}, rx{20, 0, 5};
    Rng rng(1);
    const auto rays = trace_link(scene, tx, rx, kFreqs, rng);
    CHECK(rays[0].empty());
    CHECK(rays[1].empty());
}

TEST_CASE("image-method reflection geometry") {
    SceneConfig cfg = small_config(0, 0);
    cfg.interaction_jitter_db = 0.0;
    Scene scene = generate_scene(cfg, 3);
    scene.walls.push_back(Wall{{10, -50, 0}, {10, 50, 0}, 100.0});
    const Vec3 tx{0, 0, 5}, rx{0, 20, 5};
    Rng rng(1);
    const auto rays = trace_link(scene, tx, rx, kFreqs, rng);
    REQUIRE(rays[0].size() == 2);  // LOS + one reflection

    // image of tx across the plane x=10 is (20,0,5); path length |image - rx|
    const double ref_len = (Vec3{20, 0, 5} - rx).norm();
    CHECK(ref_len == Catch::Approx(20.0 * std::sqrt(2.0)).epsilon(1e-12));
    const double ref_delay = ref_len / c_light * 1e9;
    bool found = false;
    for (const Ray& r : rays[0]) {
        if (std::abs(r.delay_ns - ref_delay) < 1e-9) {
            found = true;
            // arrival from the reflection point (10,10,5)
            CHECK(r.aoa_az_deg == Catch::Approx(-45.0).margin(1e-9));
            CHECK(r.aoa_incl_deg == Catch::Approx(90.0).margin(1e-9));
            CHECK(r.aod_az_deg == Catch::Approx(45.0).margin(1e-9));
            const double expected_power = cfg.tx_ref_power_dbm - fspl_db(ref_len, kFreqs[0]) -
                                          cfg.freq_params[0].reflection_loss_db +
                                          20.0 * std::log10(1.0 - cfg.freq_params[0].scattering_s);
            CHECK(r.rx_power_dbm == Catch::Approx(expected_power).margin(1e-9));
        }
    }
    CHECK(found);
}

TEST_CASE("ray invariants over random scenes") {
    Rng outer(99);
    for (int trial = 0; trial < 20; ++trial) {
        SceneConfig cfg = small_config(10, 15);
        // raise the floor so frequency-dependent filtering actually bites
        for (auto& fp : cfg.freq_params) fp.detection_floor_dbm = -135.0;
        const Scene scene = generate_scene(cfg, 1000 + trial);
        const Vec3 tx{outer.uniform(0, 200), outer.uniform(0, 200), 10};
        const Vec3 rx{outer.uniform(0, 200), outer.uniform(0, 200), 1.5};
        if ((tx - rx).norm() < 1.0) continue;
        Rng rng(mix_seed(42, trial));
        const auto rays = trace_link(scene, tx, rx, kFreqs, rng);
        const double los = los_delay_ns((tx - rx).norm());
        for (std::size_t m = 0; m < rays.size(); ++m) {
            CHECK(rays[m].size() <= kMaxRaysPerLink);
            for (const Ray& r : rays[m]) {
                CHECK(r.delay_ns >= los - 1e-6);
                CHECK(r.rx_power_dbm >= cfg.freq_params[m].detection_floor_dbm);
            }
        }
        // non-decreasing losses in frequency: high band can never see more rays
        CHECK(rays[1].size() <= rays[0].size());
    }
}

TEST_CASE("generate_dataset cardinality and determinism") {
    SceneConfig cfg = small_config(8, 10);
    Deployment dep;
    dep.frequencies_hz = kFreqs;
    Rng rng(5);
    for (int g = 0; g < 2; ++g) dep.gnb_positions.push_back({rng.uniform(0, 200), rng.uniform(0, 200), 10});
    for (int u = 0; u < 3; ++u) dep.ue_positions.push_back({rng.uniform(0, 200), rng.uniform(0, 200), 1.5});

    const auto d1 = generate_dataset(cfg, dep, 31337);
    REQUIRE(d1.size() == 6);
    const auto d2 = generate_dataset(cfg, dep, 31337);
    REQUIRE(d2.size() == d1.size());
    for (std::size_t i = 0; i < d1.size(); ++i) {
        CHECK(d1[i].id == d2[i].id);
        REQUIRE(d1[i].rays.size() == d2[i].rays.size());
        for (std::size_t m = 0; m < d1[i].rays.size(); ++m) {
            REQUIRE(d1[i].rays[m].size() == d2[i].rays[m].size());
            for (std::size_t r = 0; r < d1[i].rays[m].size(); ++r) {
                CHECK(d1[i].rays[m][r].delay_ns == d2[i].rays[m][r].delay_ns);
                CHECK(d1[i].rays[m][r].rx_power_dbm == d2[i].rays[m][r].rx_power_dbm);
            }
        }
    }
}

TEST_CASE("LOS blockage fraction grows with wall density") {
    const std::array<int, 3> densities{4, 16, 48};
    std::array<double, 3> blocked_fraction{};
    for (std::size_t di = 0; di < densities.size(); ++di) {
        SceneConfig cfg = small_config(densities[di], 0);
        Deployment dep;
        dep.frequencies_hz = {28e9};
        Rng rng(8);
        for (int g = 0; g < 5; ++g)
            dep.gnb_positions.push_back({rng.uniform(0, 200), rng.uniform(0, 200), 10});
        for (int u = 0; u < 40; ++u)
            dep.ue_positions.push_back({rng.uniform(0, 200), rng.uniform(0, 200), 1.5});
        const auto data = generate_dataset(cfg, dep, 4242);
        int blocked = 0;
        for (const Link& link : data) {
            const double los = los_delay_ns((link.rx_pos - link.tx_pos).norm());
            bool has_los = false;
            for (const Ray& r : link.rays[0])
                if (std::abs(r.delay_ns - los) < 1e-6) has_los = true;
            if (!has_los) ++blocked;
        }
        blocked_fraction[di] = static_cast<double>(blocked) / static_cast<double>(data.size());
    }
    CHECK(blocked_fraction[0] < blocked_fraction[1]);
    CHECK(blocked_fraction[1] < blocked_fraction[2]);
}
