#pragma once

#include <cstdint>
#include <vector>

namespace csmil {

struct ClusterModel {
    size_t k = 0;
    size_t dim = 0;
    std::vector<double> centroids;   // k x dim, row-major
    std::vector<size_t> assignments; // per input point, argmin centroid (ties -> lowest index)
    double inertia = 0.0;            // sum of squared distances to assigned centroid
};

// Lloyd iterations from k-means++ seeds until the centroid shift drops below
// tol or max_iter is hit. Empty clusters are re-seeded at the point farthest
// from its centroid so k stays constant. Inertia is asserted non-increasing
// across iterations.
ClusterModel kmeans_fit(const std::vector<double>& points, size_t n, size_t dim, size_t k,
                        uint64_t seed, size_t max_iter = 100, double tol = 1e-6);

// Nearest centroid, lowest index on exact ties.
size_t assign(const ClusterModel& model, const double* point, size_t dim);

} // namespace csmil
