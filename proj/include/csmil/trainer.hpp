#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "csmil/bagging.hpp"
#include "csmil/embedder.hpp"
#include "csmil/metrics.hpp"
#include "csmil/net.hpp"
#include "csmil/toydata.hpp"

namespace csmil {

struct TrainConfig {
    size_t epochs = 150;
    size_t bags_per_group = 8; // fresh training bags per group per epoch
    double lr = 1e-3;
    double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    double weight_decay = 1.0; // decoupled, applied before the adaptive step
    size_t accum_bags = 1;     // bags per optimizer step (gradient accumulation)
    size_t eval_every = 4; // validation/checkpoint cadence in epochs
    uint64_t seed = 0;
    size_t bag_size = 8;
    size_t k_clusters = 8;
    bool use_clustering = true; // false = naive unstratified training bags
    size_t val_bags_per_group = 8;
    NetConfig net;
    // Optional precomputed cluster models for the training groups (ascending
    // group id order, as from cluster_groups); empty = fit here.
    std::vector<ClusterModel> clusters;
};

struct EvalPoint {
    size_t epoch = 0;
    double loss = 0.0;
    double auc = 0.0;
};

struct TrainLog {
    std::vector<double> train_loss; // mean NLL per epoch
    std::vector<EvalPoint> evals;
    size_t best_epoch = 0; // argmin validation loss, ties -> earliest
};

struct TrainResult {
    CsMilParams params; // snapshot from the best validation epoch
    TrainLog log;
};

// Adam with per-tensor first/second moment state.
class AdamOptimizer {
  public:
    // decay_mask, when given, holds a per-tensor multiplier on weight_decay
    // (0 disables decay for that tensor).
    AdamOptimizer(std::vector<Tensor> params, double lr, double beta1, double beta2, double eps,
                  double weight_decay = 0.0, std::vector<double> decay_mask = {});
    void step();      // applies grads, then zeroes them
    void zero_grad();

  private:
    std::vector<Tensor> params_;
    std::vector<std::vector<double>> m_, v_;
    std::vector<double> decay_mask_;
    double lr_, beta1_, beta2_, eps_, wd_;
    size_t t_ = 0;
};

TrainResult train(const FeatureSet& feats, const DatasetManifest& manifest,
                  const TrainConfig& cfg);

void write_train_log(const TrainLog& log, const std::string& path);

// Frozen-model evaluation over one split using the dense random-bag test
// protocol; slide scores are mean bag probabilities, metrics are region-level.
struct EvalResult {
    double auc = 0.0, ap = 0.0, acc = 0.0;
    ScoredSet region_scores;                // one entry per group
    std::vector<Bag> bags;                  // all bags, group-major
    std::vector<ForwardTrace> traces;       // aligned with bags (kept on request)
    double max_scale_attn_err = 0.0;        // max |sum_s a_s - 1| seen
    double max_pool_attn_err = 0.0;         // max |sum_i b_i - 1| seen
};

EvalResult evaluate(const CsMilParams& params, const FeatureSet& feats,
                    const DatasetManifest& manifest, Split split, size_t n_bags_per_group,
                    size_t bag_size, uint64_t seed, bool keep_traces = false);

} // namespace csmil
