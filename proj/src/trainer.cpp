#include "csmil/trainer.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include "json.hpp"

#include "csmil/common.hpp"
#include "csmil/rng.hpp"

using json = nlohmann::json;

namespace csmil {

AdamOptimizer::AdamOptimizer(std::vector<Tensor> params, double lr, double beta1, double beta2,
                             double eps, double weight_decay, std::vector<double> decay_mask)
    : params_(std::move(params)), decay_mask_(std::move(decay_mask)), lr_(lr), beta1_(beta1),
      beta2_(beta2), eps_(eps), wd_(weight_decay) {
    if (decay_mask_.empty()) decay_mask_.assign(params_.size(), 1.0);
    if (decay_mask_.size() != params_.size())
        throw ConfigError("optimizer: decay mask does not match parameter list");
    for (const Tensor& p : params_) {
        m_.emplace_back(p.size(), 0.0);
        v_.emplace_back(p.size(), 0.0);
    }
}

void AdamOptimizer::step() {
    ++t_;
    double bc1 = 1.0 - std::pow(beta1_, double(t_));
    double bc2 = 1.0 - std::pow(beta2_, double(t_));
    for (size_t i = 0; i < params_.size(); ++i) {
        Tensor& p = params_[i];
        for (size_t j = 0; j < p.size(); ++j) {
            double g = p.grad()[j];
            m_[i][j] = beta1_ * m_[i][j] + (1.0 - beta1_) * g;
            v_[i][j] = beta2_ * v_[i][j] + (1.0 - beta2_) * g * g;
            double mhat = m_[i][j] / bc1;
            double vhat = v_[i][j] / bc2;
            p.values()[j] -= lr_ * (mhat / (std::sqrt(vhat) + eps_) +
                                    wd_ * decay_mask_[i] * p.values()[j]);
        }
        p.zero_grad();
    }
}

void AdamOptimizer::zero_grad() {
    for (Tensor& p : params_) p.zero_grad();
}

TrainResult train(const FeatureSet& feats, const DatasetManifest& manifest,
                  const TrainConfig& cfg) {
    if (cfg.epochs < cfg.eval_every || cfg.eval_every < 1)
        throw ConfigError("train: need epochs >= eval_every >= 1");
    if (cfg.lr < 0) throw ConfigError("train: learning rate must be >= 0");

    GroupIndex train_groups = build_groups(manifest, Split::train);
    GroupIndex val_groups = build_groups(manifest, Split::val);
    if (train_groups.group_ids.empty() || val_groups.group_ids.empty())
        throw DataError("train: empty train or validation split");

    std::vector<ClusterModel> clusters;
    if (cfg.use_clustering) {
        if (!cfg.clusters.empty()) {
            if (cfg.clusters.size() != train_groups.group_ids.size())
                throw DataError("train: precomputed clusters do not cover the training groups");
            clusters = cfg.clusters;
        } else {
            clusters = cluster_groups(feats, train_groups, cfg.k_clusters,
                                      derive_seed(cfg.seed, 0xC125));
        }
    }

    CsMilParams params = CsMilParams::init(cfg.net, derive_seed(cfg.seed, 0x1417));
    // decoupled weight decay on every weight matrix and scoring vector;
    // biases are exempt. The cross-scale attention vectors get a reduced
    // multiplier: undecayed they memorize per-sample logit offsets, fully
    // decayed the scale softmax collapses to uniform.
    std::vector<double> decay_mask;
    for (size_t s = 0; s < params.enc_w.size(); ++s) decay_mask.push_back(1.0);
    for (size_t s = 0; s < params.enc_b.size(); ++s) decay_mask.push_back(0.0);
    decay_mask.insert(decay_mask.end(), {0.1, 0.1, 1.0, 1.0, 1.0, 1.0, 0.0});
    AdamOptimizer opt(params.all(), cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps, cfg.weight_decay,
                      decay_mask);

    // fixed validation bags, reused at every eval for comparable losses
    std::vector<Bag> val_bags = make_test_bags(val_groups, cfg.bag_size, cfg.val_bags_per_group,
                                               derive_seed(cfg.seed, 0x7a1));

    TrainResult result;
    result.params = params.clone();
    double best_val = std::numeric_limits<double>::infinity();
    Tape tape;

    for (size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::vector<Bag> bags =
            cfg.use_clustering
                ? make_train_bags(train_groups, clusters, cfg.bag_size, cfg.bags_per_group,
                                  derive_seed(cfg.seed, epoch, 0xE90C))
                : make_naive_train_bags(train_groups, cfg.bag_size, cfg.bags_per_group,
                                        derive_seed(cfg.seed, epoch, 0xE90C));
        Rng order_rng(derive_seed(cfg.seed, epoch, 0x0D3));
        order_rng.shuffle(bags);

        double epoch_loss = 0.0;
        size_t accum = cfg.accum_bags == 0 ? bags.size() : cfg.accum_bags;
        size_t pending = 0;
        for (const Bag& bag : bags) {
            tape.reset();
            Tensor probs = forward_bag(tape, params, bag_inputs(feats, bag, cfg.net));
            Tensor loss = nll_loss(tape, probs, bag.label);
            double lv = loss.scalar_value();
            if (!std::isfinite(lv)) throw NumericError("train: loss diverged (NaN/Inf)");
            tape.backward(loss); // grads accumulate across bags until the step
            if (++pending == accum) {
                opt.step();
                pending = 0;
            }
            epoch_loss += lv;
        }
        if (pending > 0) opt.step();
        result.log.train_loss.push_back(bags.empty() ? 0.0 : epoch_loss / double(bags.size()));

        if (epoch % cfg.eval_every == 0) {
            double val_loss = 0.0;
            std::map<int, std::vector<double>> group_probs;
            for (const Bag& bag : val_bags) {
                tape.reset();
                ForwardTrace tr;
                forward_bag(tape, params, bag_inputs(feats, bag, cfg.net), &tr);
                val_loss += nll_loss_value(tr.prob_pos, bag.label);
                group_probs[bag.group_id].push_back(tr.prob_pos);
            }
            val_loss /= double(val_bags.size());
            ScoredSet s;
            for (size_t g = 0; g < val_groups.group_ids.size(); ++g) {
                s.scores.push_back(slide_score(group_probs[val_groups.group_ids[g]]));
                s.labels.push_back(val_groups.labels[g]);
            }
            EvalPoint ev{epoch, val_loss, roc_auc(s)};
            result.log.evals.push_back(ev);
            if (val_loss < best_val) {
                best_val = val_loss;
                result.log.best_epoch = epoch;
                result.params = params.clone();
            }
        }
    }
    return result;
}

void write_train_log(const TrainLog& log, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError("train log: cannot open for write: " + path);
    for (size_t e = 0; e < log.train_loss.size(); ++e) {
        json j = {{"epoch", e + 1}, {"split", "train"}, {"loss", log.train_loss[e]}};
        f << j.dump() << "\n";
    }
    for (const EvalPoint& ev : log.evals) {
        json j = {{"epoch", ev.epoch}, {"split", "val"}, {"loss", ev.loss}, {"auc", ev.auc}};
        f << j.dump() << "\n";
    }
    json j = {{"best_epoch", log.best_epoch}};
    f << j.dump() << "\n";
}

EvalResult evaluate(const CsMilParams& params, const FeatureSet& feats,
                    const DatasetManifest& manifest, Split split, size_t n_bags_per_group,
                    size_t bag_size, uint64_t seed, bool keep_traces) {
    GroupIndex groups = build_groups(manifest, split);
    EvalResult out;
    out.bags = make_test_bags(groups, bag_size, n_bags_per_group, seed);
    Tape tape;
    std::map<int, std::vector<double>> group_probs;
    for (const Bag& bag : out.bags) {
        tape.reset();
        ForwardTrace tr;
        forward_bag(tape, params, bag_inputs(feats, bag, params.config), &tr);
        group_probs[bag.group_id].push_back(tr.prob_pos);
        for (size_t i = 0; i < tr.n; ++i) {
            double sa = 0.0;
            for (size_t s = 0; s < tr.s; ++s) sa += tr.scale_attn[i * tr.s + s];
            out.max_scale_attn_err = std::max(out.max_scale_attn_err, std::fabs(sa - 1.0));
        }
        double sb = 0.0;
        for (double b : tr.pool_attn) sb += b;
        out.max_pool_attn_err = std::max(out.max_pool_attn_err, std::fabs(sb - 1.0));
        if (keep_traces) out.traces.push_back(std::move(tr));
    }
    for (size_t g = 0; g < groups.group_ids.size(); ++g) {
        out.region_scores.scores.push_back(slide_score(group_probs[groups.group_ids[g]]));
        out.region_scores.labels.push_back(groups.labels[g]);
    }
    out.auc = roc_auc(out.region_scores);
    out.ap = pr_ap(out.region_scores);
    out.acc = accuracy(out.region_scores);
    return out;
}

} // namespace csmil
