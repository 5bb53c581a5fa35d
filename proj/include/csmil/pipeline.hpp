#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "csmil/bagging.hpp"
#include "csmil/net.hpp"
#include "csmil/trainer.hpp"

namespace csmil {

// Variant names: "cs", "mean", "concat" (all three scales with the given
// fusion), "s20" / "s10" / "s5" (single-scale, attention degenerate),
// "cs-naive" (cs fusion, unstratified training bags).
NetConfig make_net_config(const std::string& variant, size_t feature_dim,
                          AttnAct act = AttnAct::relu, bool shared = true);
bool variant_uses_clustering(const std::string& variant);

struct VariantResult {
    std::string name;
    double auc = 0.0, ap = 0.0, acc = 0.0;
    size_t best_epoch = 0;
};

struct RunArtifacts {
    CsMilParams params;
    TrainLog log;
    EvalResult test;
};

// Train one variant and evaluate it on the test split with the dense
// random-bag protocol (n_test_bags per group).
VariantResult run_variant(const FeatureSet& feats, const DatasetManifest& manifest,
                          TrainConfig base, const std::string& variant,
                          size_t n_test_bags = 100, RunArtifacts* artifacts = nullptr);

// Aligned-text and comma-separated result tables.
void write_ablation_tables(const std::vector<VariantResult>& rows, const std::string& txt_path,
                           const std::string& csv_path);

// Cluster file: "region_ids" + "assignments" rows aligned with the feature
// cache, plus "centroids_g<id>" per group.
void save_clusters(const std::string& path, const FeatureSet& feats, const GroupIndex& groups,
                   const std::vector<ClusterModel>& models);
std::vector<ClusterModel> load_clusters(const std::string& path, const GroupIndex& groups);

// FNV-1a hashes for the run-all staleness guard.
uint64_t fnv1a(const std::string& bytes, uint64_t h = 0xcbf29ce484222325ULL);
uint64_t fnv1a_file(const std::string& path, uint64_t h = 0xcbf29ce484222325ULL);

} // namespace csmil
