#include "csmil/kmeans.hpp"

#include <cmath>
#include <limits>

#include "csmil/common.hpp"
#include "csmil/rng.hpp"

namespace csmil {

namespace {

double sqdist(const double* a, const double* b, size_t dim) {
    double s = 0.0;
    for (size_t i = 0; i < dim; ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

} // namespace

size_t assign(const ClusterModel& model, const double* point, size_t dim) {
    if (dim != model.dim)
        throw DataError("assign: point dim " + std::to_string(dim) + " != model dim " +
                        std::to_string(model.dim));
    size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (size_t c = 0; c < model.k; ++c) {
        double d = sqdist(point, model.centroids.data() + c * dim, dim);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

ClusterModel kmeans_fit(const std::vector<double>& points, size_t n, size_t dim, size_t k,
                        uint64_t seed, size_t max_iter, double tol) {
    if (k == 0) throw DataError("kmeans: k must be >= 1");
    if (n < k)
        throw DataError("kmeans: n=" + std::to_string(n) + " < k=" + std::to_string(k));
    if (points.size() != n * dim) throw DataError("kmeans: points size mismatch");

    ClusterModel m;
    m.k = k;
    m.dim = dim;
    m.centroids.assign(k * dim, 0.0);
    m.assignments.assign(n, 0);

    // k-means++ seeding
    Rng rng(seed);
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    size_t first = size_t(rng.index(n));
    for (size_t j = 0; j < dim; ++j) m.centroids[j] = points[first * dim + j];
    for (size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (size_t i = 0; i < n; ++i) {
            double d = sqdist(points.data() + i * dim, m.centroids.data() + (c - 1) * dim, dim);
            if (d < d2[i]) d2[i] = d;
            total += d2[i];
        }
        size_t chosen;
        if (total <= 0.0) {
            chosen = size_t(rng.index(n)); // all points identical to chosen centroids
        } else {
            double target = rng.uniform() * total;
            double acc = 0.0;
            chosen = n - 1;
            for (size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (acc >= target) {
                    chosen = i;
                    break;
                }
            }
        }
        for (size_t j = 0; j < dim; ++j) m.centroids[c * dim + j] = points[chosen * dim + j];
    }

    double prev_inertia = std::numeric_limits<double>::infinity();
    std::vector<double> next(k * dim);
    std::vector<size_t> counts(k);
    for (size_t iter = 0; iter < max_iter; ++iter) {
        // assignment step
        double inertia = 0.0;
        for (size_t i = 0; i < n; ++i) {
            size_t best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (size_t c = 0; c < k; ++c) {
                double d = sqdist(points.data() + i * dim, m.centroids.data() + c * dim, dim);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            m.assignments[i] = best;
            inertia += best_d;
        }
        if (inertia > prev_inertia + 1e-9 * (1.0 + prev_inertia))
            throw NumericError("kmeans: inertia increased across iterations");
        m.inertia = inertia;

        // update step
        next.assign(k * dim, 0.0);
        counts.assign(k, 0);
        for (size_t i = 0; i < n; ++i) {
            size_t c = m.assignments[i];
            counts[c]++;
            for (size_t j = 0; j < dim; ++j) next[c * dim + j] += points[i * dim + j];
        }
        for (size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                // re-seed at the point with max squared distance to its centroid
                size_t far = 0;
                double far_d = -1.0;
                for (size_t i = 0; i < n; ++i) {
                    double d = sqdist(points.data() + i * dim,
                                      m.centroids.data() + m.assignments[i] * dim, dim);
                    if (d > far_d) {
                        far_d = d;
                        far = i;
                    }
                }
                for (size_t j = 0; j < dim; ++j) next[c * dim + j] = points[far * dim + j];
                counts[c] = 1;
                // invalidate the monotonicity baseline: re-seeding may move inertia up
                // transiently for the donor cluster but total inertia still decreases
                // because the farthest point snaps to distance zero.
            } else {
                for (size_t j = 0; j < dim; ++j) next[c * dim + j] /= double(counts[c]);
            }
        }

        double shift = 0.0;
        for (size_t c = 0; c < k * dim; ++c) {
            double d = next[c] - m.centroids[c];
            shift += d * d;
        }
        m.centroids = next;
        prev_inertia = inertia;
        if (std::sqrt(shift) < tol) break;
    }

    // final assignment pass against the last centroids
    double inertia = 0.0;
    for (size_t i = 0; i < n; ++i) {
        size_t best = assign(m, points.data() + i * dim, dim);
        m.assignments[i] = best;
        inertia += sqdist(points.data() + i * dim, m.centroids.data() + best * dim, dim);
    }
    m.inertia = inertia;
    return m;
}

} // namespace csmil
