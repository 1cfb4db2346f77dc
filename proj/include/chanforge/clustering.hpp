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
// Ray-to-cluster conversion: rays of all frequencies are pooled into one
// 7-D feature space (azimuths as sin/cos pairs to avoid the +-180 seam),
// clustered with k-means, and the cluster count picked by silhouette score.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "chanforge/core.hpp"
#include "chanforge/rng.hpp"

namespace chanforge {

inline constexpr int kDefaultKMax = 10;
inline constexpr double kSilhouetteFloor = 0.2;

/// Standardized per-ray feature point.
using ClusterFeature = std::array<double, 7>;

inline double feature_dist2(const ClusterFeature& a, const ClusterFeature& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

/// Build the pooled, standardized feature set of a link.  Dimensions are
/// (sin/cos aoa_az, sin/cos aod_az, aoa_incl, aod_incl, delay), each shifted
/// to zero mean and scaled by the population standard deviation; a constant
/// dimension collapses to 0.
inline std::vector<ClusterFeature> make_cluster_features(const std::vector<const Ray*>& rays) {
    std::vector<ClusterFeature> pts(rays.size());
    for (std::size_t i = 0; i < rays.size(); ++i) {
        const Ray& r = *rays[i];
        pts[i] = {std::sin(r.aoa_az_deg * rad_per_deg), std::cos(r.aoa_az_deg * rad_per_deg),
                  std::sin(r.aod_az_deg * rad_per_deg), std::cos(r.aod_az_deg * rad_per_deg),
                  r.aoa_incl_deg, r.aod_incl_deg, r.delay_ns};
    }
    const double n = static_cast<double>(pts.size());
    for (std::size_t d = 0; d < 7; ++d) {
        double mean = 0.0;
        for (const auto& p : pts) mean += p[d];
        mean /= n;
        double var = 0.0;
        for (const auto& p : pts) var += (p[d] - mean) * (p[d] - mean);
        var /= n;
        const double sd = std::sqrt(var);
        for (auto& p : pts) p[d] = sd > 0.0 ? (p[d] - mean) / sd : 0.0;
    }
    return pts;
}

struct KmeansResult {
    std::vector<int> assignments;
    std::vector<ClusterFeature> centroids;
};

/// Lloyd's algorithm with k-means++ seeding.  Converges when no assignment
/// changes or after 100 iterations; an emptied cluster is reseeded to the
/// point farthest from its assigned centroid.
inline KmeansResult kmeans(const std::vector<ClusterFeature>& points, int k, std::uint64_t seed) {
    const int n = static_cast<int>(points.size());
    if (k < 1 || k > n) throw std::invalid_argument("kmeans: need 1 <= K <= #points");

    Rng rng(mix_seed(seed, 0x5eedULL));
    std::vector<ClusterFeature> centroids;
    centroids.reserve(k);
    centroids.push_back(points[rng.below(n)]);
    std::vector<double> d2(n, std::numeric_limits<double>::max());
    while (static_cast<int>(centroids.size()) < k) {
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], feature_dist2(points[i], centroids.back()));
            total += d2[i];
        }
        int pick = 0;
        if (total > 0.0) {
            const double target = rng.uniform() * total;
            double acc = 0.0;
            pick = n - 1;
            for (int i = 0; i < n; ++i) {
                acc += d2[i];
                if (acc >= target) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = static_cast<int>(rng.below(n));
        }
        centroids.push_back(points[pick]);
    }

    std::vector<int> assign(n, -1);
    for (int iter = 0; iter < 100; ++iter) {
        bool changed = false;
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double best_d = feature_dist2(points[i], centroids[0]);
            for (int c = 1; c < k; ++c) {
                const double d = feature_dist2(points[i], centroids[c]);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (assign[i] != best) {
                assign[i] = best;
                changed = true;
            }
        }

        std::vector<ClusterFeature> sums(k, ClusterFeature{});
        std::vector<int> counts(k, 0);
        for (int i = 0; i < n; ++i) {
            for (std::size_t d = 0; d < 7; ++d) sums[assign[i]][d] += points[i][d];
            ++counts[assign[i]];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                // reseed to the globally farthest point from its centroid
                int far_i = 0;
                double far_d = -1.0;
                for (int i = 0; i < n; ++i) {
                    const double d = feature_dist2(points[i], centroids[assign[i]]);
                    if (d > far_d) {
                        far_d = d;
                        far_i = i;
                    }
                }
                centroids[c] = points[far_i];
                assign[far_i] = c;
                changed = true;
            } else {
                for (std::size_t d = 0; d < 7; ++d) centroids[c][d] = sums[c][d] / counts[c];
            }
        }
        if (!changed) break;
    }
    return {std::move(assign), std::move(centroids)};
}

/// Mean silhouette score of an assignment (Euclidean distances; singleton
/// clusters contribute 0).
inline double mean_silhouette(const std::vector<ClusterFeature>& points, const std::vector<int>& assign,
                              int k) {
    const int n = static_cast<int>(points.size());
    std::vector<int> counts(k, 0);
    for (int a : assign) ++counts[a];
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const int ci = assign[i];
        if (counts[ci] <= 1) continue;  // s(i) = 0
        std::vector<double> mean_d(k, 0.0);
        for (int jj = 0; jj < n; ++jj) {
            if (jj == i) continue;
            mean_d[assign[jj]] += std::sqrt(feature_dist2(points[i], points[jj]));
        }
        const double a = mean_d[ci] / (counts[ci] - 1);
        double b = std::numeric_limits<double>::max();
        for (int c = 0; c < k; ++c) {
            if (c == ci || counts[c] == 0) continue;
            b = std::min(b, mean_d[c] / counts[c]);
        }
        const double denom = std::max(a, b);
        if (denom > 0.0) total += (b - a) / denom;
    }
    return total / n;
}

/// Silhouette-based choice of the cluster count; weak structure (best score
/// below the floor) falls back to a single cluster.  Ties break toward
/// smaller K.
inline int select_cluster_count(const std::vector<ClusterFeature>& points, int k_max, std::uint64_t seed) {
    const int n = static_cast<int>(points.size());
    if (n < 1) throw std::invalid_argument("select_cluster_count: empty input");
    // Coincident points (e.g. the same geometric path seen at every
    // frequency) always form one cluster.
    if (n == 2) return feature_dist2(points[0], points[1]) > 0.0 ? 2 : 1;
    const int hi = std::min(k_max, n - 1);
    int best_k = 1;
    double best_score = -std::numeric_limits<double>::max();
    for (int k = 2; k <= hi; ++k) {
        const auto result = kmeans(points, k, mix_seed(seed, static_cast<std::uint64_t>(k)));
        const double score = mean_silhouette(points, result.assignments, k);
        if (score > best_score + 1e-12) {
            best_score = score;
            best_k = k;
        }
    }
    if (best_score < kSilhouetteFloor) return 1;
    return best_k;
}

namespace detail {

struct PooledRay {
    const Ray* ray;
    std::size_t freq;
};

/// Power-weighted circular mean of azimuths in degrees.
inline double circular_mean_deg(const std::vector<double>& az, const std::vector<double>& w) {
    double s = 0.0, c = 0.0;
    for (std::size_t i = 0; i < az.size(); ++i) {
        s += w[i] * std::sin(az[i] * rad_per_deg);
        c += w[i] * std::cos(az[i] * rad_per_deg);
    }
    if (s == 0.0 && c == 0.0) return az.empty() ? 0.0 : az.front();
    return wrap_azimuth_deg(std::atan2(s, c) * deg_per_rad);
}

}  // namespace detail

/// Convert a link's rays into its cluster vector.  Rays of all frequencies
/// are clustered together so clusters are common across frequencies; the
/// per-frequency statistics then capture what each band sees of a cluster.
inline ClusterVector extract_clusters(const Link& link, int k_max = kDefaultKMax) {
    const Condition cond = condition_features(link.rx_pos - link.tx_pos);
    const std::size_t num_freq = link.frequencies_hz.size();

    std::vector<detail::PooledRay> pooled;
    for (std::size_t m = 0; m < link.rays.size(); ++m)
        for (const Ray& r : link.rays[m]) pooled.push_back({&r, m});
    if (pooled.empty()) return make_outage_vector(cond, num_freq);

    std::vector<const Ray*> ray_ptrs(pooled.size());
    for (std::size_t i = 0; i < pooled.size(); ++i) ray_ptrs[i] = pooled[i].ray;
    const auto features = make_cluster_features(ray_ptrs);

    const std::uint64_t seed = mix_seed(0xc157e2ULL, static_cast<std::uint64_t>(link.id));
    const int k = std::min(select_cluster_count(features, std::min(k_max, kNumClusterSlots), seed),
                           kNumClusterSlots);
    const auto km = kmeans(features, k, mix_seed(seed, 0xa551ULL));

    ClusterVector out = make_outage_vector(cond, num_freq);

    struct Group {
        std::vector<detail::PooledRay> rays;
        double total_linear = 0.0;
    };
    std::vector<Group> groups(k);
    for (std::size_t i = 0; i < pooled.size(); ++i) {
        groups[km.assignments[i]].rays.push_back(pooled[i]);
        groups[km.assignments[i]].total_linear += dbm_to_mw(pooled[i].ray->rx_power_dbm);
    }
    std::stable_sort(groups.begin(), groups.end(),
                     [](const Group& a, const Group& b) { return a.total_linear > b.total_linear; });

    for (int g = 0; g < k; ++g) {
        Cluster& cl = out.clusters[g];
        const auto& rays = groups[g].rays;

        cl.min_delay_ns = std::numeric_limits<double>::max();
        for (const auto& pr : rays) cl.min_delay_ns = std::min(cl.min_delay_ns, pr.ray->delay_ns);

        // Frequency-balanced mean angles: within each frequency the ray
        // weights are normalized to sum 1 before pooling.
        std::vector<double> az_aoa, az_aod, incl_aoa, incl_aod, weights;
        for (std::size_t m = 0; m < num_freq; ++m) {
            double freq_total = 0.0;
            for (const auto& pr : rays)
                if (pr.freq == m) freq_total += dbm_to_mw(pr.ray->rx_power_dbm);
            if (freq_total <= 0.0) continue;
            for (const auto& pr : rays) {
                if (pr.freq != m) continue;
                weights.push_back(dbm_to_mw(pr.ray->rx_power_dbm) / freq_total);
                az_aoa.push_back(pr.ray->aoa_az_deg);
                az_aod.push_back(pr.ray->aod_az_deg);
                incl_aoa.push_back(pr.ray->aoa_incl_deg);
                incl_aod.push_back(pr.ray->aod_incl_deg);
            }
        }
        double wsum = 0.0, mi_aoa = 0.0, mi_aod = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            wsum += weights[i];
            mi_aoa += weights[i] * incl_aoa[i];
            mi_aod += weights[i] * incl_aod[i];
        }
        cl.mean_aoa_az_deg = detail::circular_mean_deg(az_aoa, weights);
        cl.mean_aod_az_deg = detail::circular_mean_deg(az_aod, weights);
        cl.mean_aoa_incl_deg = mi_aoa / wsum;
        cl.mean_aod_incl_deg = mi_aod / wsum;

        // Per-frequency power and spreads.
        for (std::size_t m = 0; m < num_freq; ++m) {
            std::vector<const Ray*> fr;
            for (const auto& pr : rays)
                if (pr.freq == m) fr.push_back(pr.ray);
            if (fr.empty()) continue;

            double lin = 0.0;
            for (const Ray* r : fr) lin += dbm_to_mw(r->rx_power_dbm);
            ClusterFreq& f = cl.fm[m];
            f.power_dbm = mw_to_dbm(lin);
            if (fr.size() > 1) {
                std::vector<double> w(fr.size());
                for (std::size_t i = 0; i < fr.size(); ++i) w[i] = dbm_to_mw(fr[i]->rx_power_dbm);
                auto weighted_rms = [&](auto field_of) {
                    double mean = 0.0;
                    for (std::size_t i = 0; i < fr.size(); ++i) mean += w[i] * field_of(*fr[i]);
                    mean /= lin;
                    double ss = 0.0;
                    for (std::size_t i = 0; i < fr.size(); ++i) {
                        const double d = field_of(*fr[i]) - mean;
                        ss += w[i] * d * d;
                    }
                    return std::sqrt(ss / lin);
                };
                auto circular_rms = [&](auto az_of) {
                    std::vector<double> az(fr.size());
                    for (std::size_t i = 0; i < fr.size(); ++i) az[i] = az_of(*fr[i]);
                    const double mean = detail::circular_mean_deg(az, w);
                    double ss = 0.0;
                    for (std::size_t i = 0; i < fr.size(); ++i) {
                        const double d = wrap_angle_diff_deg(az[i], mean);
                        ss += w[i] * d * d;
                    }
                    return std::sqrt(ss / lin);
                };
                f.rms_delay_ns = weighted_rms([](const Ray& r) { return r.delay_ns; });
                f.rms_aoa_incl_deg = weighted_rms([](const Ray& r) { return r.aoa_incl_deg; });
                f.rms_aod_incl_deg = weighted_rms([](const Ray& r) { return r.aod_incl_deg; });
                f.rms_aoa_az_deg = circular_rms([](const Ray& r) { return r.aoa_az_deg; });
                f.rms_aod_az_deg = circular_rms([](const Ray& r) { return r.aod_az_deg; });
            }
        }
    }
    return out;
}

}  // namespace chanforge
