#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "csmil/autodiff.hpp"
#include "csmil/bagging.hpp"
#include "csmil/embedder.hpp"

namespace csmil {

enum class FusionMode { cs_attention, mean_vector, concatenation };
enum class AttnAct { relu, tanh };

std::string fusion_name(FusionMode m);
FusionMode fusion_from_name(const std::string& s);
std::string act_name(AttnAct a);
AttnAct act_from_name(const std::string& s);

struct NetConfig {
    FusionMode mode = FusionMode::cs_attention;
    AttnAct act = AttnAct::relu; // activation inside the scale-attention block
    bool shared = true;          // one encoder parameter set shared across scales
    size_t dim_in = 64;          // D: feature dim per scale
    size_t dim_hidden = 64;      // L: encoder output dim
    size_t dim_attn = 32;        // M: attention hidden dim
    size_t bag_size = 8;         // n, recorded in checkpoints
    std::vector<size_t> scales = {0, 1, 2}; // feature-set scale indices used

    size_t n_scales() const { return scales.size(); }
    size_t fused_dim() const {
        return mode == FusionMode::concatenation ? n_scales() * dim_hidden : dim_hidden;
    }
};

// All trainable tensors. In shared mode enc_w/enc_b hold one set referenced by
// every scale; otherwise one set per scale.
struct CsMilParams {
    NetConfig config;
    std::vector<Tensor> enc_w; // D x L
    std::vector<Tensor> enc_b; // 1 x L
    Tensor attn_v;             // L x M
    Tensor attn_w;             // M x 1
    Tensor pool_v;             // L_f x M  (tanh branch)
    Tensor pool_u;             // L_f x M  (sigmoid gate)
    Tensor pool_w;             // M x 1
    Tensor cls_w;              // L_f x 2
    Tensor cls_b;              // 1 x 2

    static CsMilParams init(const NetConfig& cfg, uint64_t seed);
    std::vector<Tensor> all() const;
    size_t param_count() const;
    CsMilParams clone() const;
};

// Per-bag forward artifacts used for attention maps and diagnostics.
struct ForwardTrace {
    size_t n = 0, s = 0;
    std::vector<double> scale_attn; // n x s row-major, softmax over scales per instance
    std::vector<double> pool_attn;  // n, softmax over instances
    double prob_pos = 0.0;
    double prob_neg = 0.0;
};

// Per-scale instance features for one bag: S tensors of shape n x D.
std::vector<Tensor> bag_inputs(const FeatureSet& feats, const Bag& bag, const NetConfig& cfg);

// Encoder -> cross-scale attention -> fusion -> gated attention pooling ->
// 2-class softmax. Returns the [1 x 2] probability tensor on the tape.
Tensor forward_bag(Tape& tape, const CsMilParams& params, const std::vector<Tensor>& scale_feats,
                   ForwardTrace* trace = nullptr);

// -log p(true class), probabilities clamped at 1e-12.
Tensor nll_loss(Tape& tape, const Tensor& probs, int label);
double nll_loss_value(double prob_pos, int label);

void save_checkpoint(const CsMilParams& params, const std::string& path);
CsMilParams load_checkpoint(const std::string& path);

} // namespace csmil
