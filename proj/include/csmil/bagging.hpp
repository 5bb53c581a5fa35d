#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "csmil/embedder.hpp"
#include "csmil/kmeans.hpp"
#include "csmil/toydata.hpp"

namespace csmil {

// A MIL bag: fixed-size set of feature-row indices from one region group.
struct Bag {
    int bag_id = 0;
    int group_id = 0;
    int label = 0;
    std::vector<size_t> rows; // indices into FeatureSet / manifest order
};

// Region groups restricted to one split, in ascending group id order.
struct GroupIndex {
    std::vector<int> group_ids;
    std::vector<int> labels;
    std::vector<std::vector<size_t>> rows;
};

GroupIndex build_groups(const DatasetManifest& manifest, Split split);

// Per-group k-means over the 20x features, aligned with GroupIndex order.
std::vector<ClusterModel> cluster_groups(const FeatureSet& feats, const GroupIndex& groups,
                                         size_t k, uint64_t seed);

// Training bags: per bag, nonempty clusters are visited in shuffled
// round-robin and one patch is drawn uniformly per visit, without replacement
// inside a cluster until it is exhausted.
std::vector<Bag> make_train_bags(const GroupIndex& groups,
                                 const std::vector<ClusterModel>& clusters, size_t bag_size,
                                 size_t bags_per_group, uint64_t seed);

// Unstratified training bags for the naive ablation.
std::vector<Bag> make_naive_train_bags(const GroupIndex& groups, size_t bag_size,
                                       size_t bags_per_group, uint64_t seed);

// Test bags: concatenated random permutations of each group's patches are
// chunked into bags, so every patch appears floor/ceil(n_bags*bag_size/N)
// times. With the toy default this guarantees >= 10 attention samples each.
std::vector<Bag> make_test_bags(const GroupIndex& groups, size_t bag_size,
                                size_t n_bags_per_group, uint64_t seed);

// Line-delimited audit dump: one record per bag.
void dump_bags(const std::vector<Bag>& bags, const DatasetManifest& manifest,
               const std::string& path);

} // namespace csmil
