#pragma once

// Seeded Lloyd k-means on 2-D points: fixed iteration cap, best of a few
// restarts by inertia, fully deterministic for a given seed.

#include <limits>
#include <random>
#include <vector>

#include "fmec/model.hpp"

namespace fmec {

struct KMeansResult {
    std::vector<Vec2> centers;
    std::vector<int> labels;
    double inertia = 0.0;
};

inline KMeansResult kmeans(const std::vector<Vec2>& points, int k,
                           std::uint64_t seed, int max_iter = 20,
                           int restarts = 5) {
    KMeansResult best;
    best.inertia = std::numeric_limits<double>::infinity();
    if (points.empty() || k < 1) return best;
    k = std::min<int>(k, static_cast<int>(points.size()));
    std::mt19937_64 rng(seed);

    for (int r = 0; r < restarts; ++r) {
        // Forgy init: k distinct points
        std::vector<std::size_t> order(points.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<Vec2> centers(static_cast<std::size_t>(k));
        for (int c = 0; c < k; ++c) centers[static_cast<std::size_t>(c)] = points[order[static_cast<std::size_t>(c)]];

        std::vector<int> labels(points.size(), 0);
        for (int it = 0; it < max_iter; ++it) {
            bool changed = false;
            for (std::size_t i = 0; i < points.size(); ++i) {
                int arg = 0;
                double bestd = std::numeric_limits<double>::infinity();
                for (int c = 0; c < k; ++c) {
                    const double d = dist2(points[i], centers[static_cast<std::size_t>(c)]);
                    if (d < bestd) { bestd = d; arg = c; }
                }
                if (labels[i] != arg) { labels[i] = arg; changed = true; }
            }
            std::vector<Vec2> sums(static_cast<std::size_t>(k));
            std::vector<int> counts(static_cast<std::size_t>(k), 0);
            for (std::size_t i = 0; i < points.size(); ++i) {
                sums[static_cast<std::size_t>(labels[i])].x += points[i].x;
                sums[static_cast<std::size_t>(labels[i])].y += points[i].y;
                ++counts[static_cast<std::size_t>(labels[i])];
            }
            for (int c = 0; c < k; ++c)
                if (counts[static_cast<std::size_t>(c)] > 0)
                    centers[static_cast<std::size_t>(c)] = {
                        sums[static_cast<std::size_t>(c)].x / counts[static_cast<std::size_t>(c)],
                        sums[static_cast<std::size_t>(c)].y / counts[static_cast<std::size_t>(c)]};
            if (!changed) break;
        }
        double inertia = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i)
            inertia += dist2(points[i], centers[static_cast<std::size_t>(labels[i])]);
        if (inertia < best.inertia) best = {centers, labels, inertia};
    }
    return best;
}

}  // namespace fmec
