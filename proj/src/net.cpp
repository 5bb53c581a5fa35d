#include "csmil/net.hpp"

#include <cmath>

#include "csmil/common.hpp"
#include "csmil/container.hpp"
#include "csmil/rng.hpp"

namespace csmil {

std::string fusion_name(FusionMode m) {
    switch (m) {
        case FusionMode::cs_attention: return "cs";
        case FusionMode::mean_vector: return "mean";
        default: return "concat";
    }
}

FusionMode fusion_from_name(const std::string& s) {
    if (s == "cs") return FusionMode::cs_attention;
    if (s == "mean") return FusionMode::mean_vector;
    if (s == "concat") return FusionMode::concatenation;
    throw ConfigError("unknown fusion mode: " + s + " (want cs|mean|concat)");
}

std::string act_name(AttnAct a) { return a == AttnAct::relu ? "relu" : "tanh"; }

AttnAct act_from_name(const std::string& s) {
    if (s == "relu") return AttnAct::relu;
    if (s == "tanh") return AttnAct::tanh;
    throw ConfigError("unknown activation: " + s + " (want relu|tanh)");
}

namespace {

Tensor xavier(size_t rows, size_t cols, Rng& rng) {
    Tensor t(rows, cols, true);
    double lim = std::sqrt(6.0 / double(rows + cols));
    for (double& v : t.values()) v = rng.uniform(-lim, lim);
    return t;
}

} // namespace

CsMilParams CsMilParams::init(const NetConfig& cfg, uint64_t seed) {
    if (cfg.scales.empty()) throw ConfigError("net: at least one scale required");
    for (size_t s : cfg.scales)
        if (s > 2) throw ConfigError("net: scale index out of range");
    CsMilParams p;
    p.config = cfg;
    Rng rng(derive_seed(seed, 0x1217));
    size_t n_enc = cfg.shared ? 1 : cfg.n_scales();
    for (size_t i = 0; i < n_enc; ++i) {
        p.enc_w.push_back(xavier(cfg.dim_in, cfg.dim_hidden, rng));
        p.enc_b.push_back(Tensor(1, cfg.dim_hidden, true));
    }
    p.attn_v = xavier(cfg.dim_hidden, cfg.dim_attn, rng);
    p.attn_w = xavier(cfg.dim_attn, 1, rng);
    size_t lf = cfg.fused_dim();
    p.pool_v = xavier(lf, cfg.dim_attn, rng);
    p.pool_u = xavier(lf, cfg.dim_attn, rng);
    p.pool_w = xavier(cfg.dim_attn, 1, rng);
    p.cls_w = xavier(lf, 2, rng);
    p.cls_b = Tensor(1, 2, true);
    return p;
}

std::vector<Tensor> CsMilParams::all() const {
    std::vector<Tensor> out;
    for (const Tensor& t : enc_w) out.push_back(t);
    for (const Tensor& t : enc_b) out.push_back(t);
    out.push_back(attn_v);
    out.push_back(attn_w);
    out.push_back(pool_v);
    out.push_back(pool_u);
    out.push_back(pool_w);
    out.push_back(cls_w);
    out.push_back(cls_b);
    return out;
}

size_t CsMilParams::param_count() const {
    size_t n = 0;
    for (const Tensor& t : all()) n += t.size();
    return n;
}

CsMilParams CsMilParams::clone() const {
    CsMilParams p;
    p.config = config;
    for (const Tensor& t : enc_w) p.enc_w.push_back(t.clone());
    for (const Tensor& t : enc_b) p.enc_b.push_back(t.clone());
    p.attn_v = attn_v.clone();
    p.attn_w = attn_w.clone();
    p.pool_v = pool_v.clone();
    p.pool_u = pool_u.clone();
    p.pool_w = pool_w.clone();
    p.cls_w = cls_w.clone();
    p.cls_b = cls_b.clone();
    return p;
}

std::vector<Tensor> bag_inputs(const FeatureSet& feats, const Bag& bag, const NetConfig& cfg) {
    if (bag.rows.empty()) throw DataError("net: empty bag");
    std::vector<Tensor> out;
    for (size_t s : cfg.scales) {
        Tensor t(bag.rows.size(), feats.dim);
        for (size_t i = 0; i < bag.rows.size(); ++i)
            std::copy(feats.feats[s].begin() + bag.rows[i] * feats.dim,
                      feats.feats[s].begin() + (bag.rows[i] + 1) * feats.dim,
                      t.values().begin() + i * feats.dim);
        out.push_back(std::move(t));
    }
    return out;
}

Tensor forward_bag(Tape& tape, const CsMilParams& params, const std::vector<Tensor>& scale_feats,
                   ForwardTrace* trace) {
    const NetConfig& cfg = params.config;
    size_t S = cfg.n_scales();
    if (scale_feats.size() != S)
        throw DataError("net: expected " + std::to_string(S) + " scale inputs, got " +
                        std::to_string(scale_feats.size()));
    size_t n = scale_feats[0].rows();
    if (n == 0) throw DataError("net: empty bag");
    for (const Tensor& f : scale_feats)
        if (f.cols() != cfg.dim_in)
            throw DataError("net: input dim " + f.shape_str() + " does not match D=" +
                            std::to_string(cfg.dim_in));

    // multi-scale encoder, weight-shared or per-scale
    std::vector<Tensor> enc;
    for (size_t s = 0; s < S; ++s) {
        size_t pi = cfg.shared ? 0 : s;
        enc.push_back(tape.relu(
            tape.add(tape.matmul(scale_feats[s], params.enc_w[pi]), params.enc_b[pi])));
    }

    // cross-scale attention: one logit per scale per instance, softmax over scales
    Tensor attn; // n x S
    {
        std::vector<Tensor> logits;
        for (size_t s = 0; s < S; ++s) {
            Tensor h = tape.matmul(enc[s], params.attn_v);
            h = cfg.act == AttnAct::relu ? tape.relu(h) : tape.tanh(h);
            logits.push_back(tape.matmul(h, params.attn_w));
        }
        attn = tape.softmax_rows(tape.concat_cols(logits));
    }

    // fusion
    Tensor fused;
    switch (cfg.mode) {
        case FusionMode::cs_attention: {
            for (size_t s = 0; s < S; ++s) {
                Tensor part = tape.colwise_scale(enc[s], tape.slice_col(attn, s));
                fused = s == 0 ? part : tape.add(fused, part);
            }
            break;
        }
        case FusionMode::mean_vector: {
            for (size_t s = 0; s < S; ++s) fused = s == 0 ? enc[s] : tape.add(fused, enc[s]);
            fused = tape.scale(fused, 1.0 / double(S));
            break;
        }
        case FusionMode::concatenation: {
            fused = tape.concat_cols(enc);
            break;
        }
    }

    // gated attention pooling over instances
    Tensor gate = tape.mul(tape.tanh(tape.matmul(fused, params.pool_v)),
                           tape.sigmoid(tape.matmul(fused, params.pool_u)));
    Tensor e = tape.matmul(gate, params.pool_w);          // n x 1
    Tensor pool = tape.softmax_rows(tape.transpose(e));   // 1 x n
    Tensor z = tape.matmul(pool, fused);                  // 1 x L_f
    Tensor probs = tape.softmax_rows(tape.add(tape.matmul(z, params.cls_w), params.cls_b));

    if (trace) {
        trace->n = n;
        trace->s = S;
        trace->scale_attn = attn.values();
        trace->pool_attn = pool.values();
        trace->prob_neg = probs.at(0, 0);
        trace->prob_pos = probs.at(0, 1);
    }
    return probs;
}

Tensor nll_loss(Tape& tape, const Tensor& probs, int label) {
    if (probs.rows() != 1 || probs.cols() != 2)
        throw NumericError("nll_loss: want [1x2] probabilities, got " + probs.shape_str());
    double sum = probs.at(0, 0) + probs.at(0, 1);
    if (!(probs.at(0, 0) >= 0.0) || !(probs.at(0, 1) >= 0.0) || std::fabs(sum - 1.0) > 1e-6)
        throw NumericError("nll_loss: invalid probability vector");
    return tape.scale(tape.log_clamped(tape.pick(probs, 0, label == 1 ? 1 : 0)), -1.0);
}

double nll_loss_value(double prob_pos, int label) {
    double p = label == 1 ? prob_pos : 1.0 - prob_pos;
    return -std::log(std::max(p, 1e-12));
}

namespace {

NamedTensor to_named(const std::string& name, const Tensor& t) {
    return NamedTensor{name, {t.rows(), t.cols()}, t.values()};
}

Tensor from_named(const NamedTensor& nt, bool requires_grad = true) {
    if (nt.shape.size() != 2) throw DataError("checkpoint: tensor " + nt.name + " is not 2-D");
    return Tensor(nt.shape[0], nt.shape[1], nt.data, requires_grad);
}

} // namespace

void save_checkpoint(const CsMilParams& params, const std::string& path) {
    const NetConfig& c = params.config;
    std::vector<NamedTensor> ts;
    std::vector<double> cfg = {double(int(c.mode)), double(int(c.act)), c.shared ? 1.0 : 0.0,
                               double(c.dim_in),    double(c.dim_hidden), double(c.dim_attn),
                               double(c.n_scales()), double(c.bag_size)};
    for (size_t s : c.scales) cfg.push_back(double(s));
    ts.push_back({"net_config", {cfg.size()}, cfg});
    for (size_t i = 0; i < params.enc_w.size(); ++i) {
        ts.push_back(to_named("enc_w" + std::to_string(i), params.enc_w[i]));
        ts.push_back(to_named("enc_b" + std::to_string(i), params.enc_b[i]));
    }
    ts.push_back(to_named("attn_v", params.attn_v));
    ts.push_back(to_named("attn_w", params.attn_w));
    ts.push_back(to_named("pool_v", params.pool_v));
    ts.push_back(to_named("pool_u", params.pool_u));
    ts.push_back(to_named("pool_w", params.pool_w));
    ts.push_back(to_named("cls_w", params.cls_w));
    ts.push_back(to_named("cls_b", params.cls_b));
    write_container(path, ts);
}

CsMilParams load_checkpoint(const std::string& path) {
    std::vector<NamedTensor> ts = read_container(path);
    const NamedTensor& cfg_t = find_tensor(ts, "net_config");
    if (cfg_t.data.size() < 8) throw DataError("checkpoint: truncated net_config");
    CsMilParams p;
    NetConfig c;
    c.mode = FusionMode(int(cfg_t.data[0]));
    c.act = AttnAct(int(cfg_t.data[1]));
    c.shared = cfg_t.data[2] != 0.0;
    c.dim_in = size_t(cfg_t.data[3]);
    c.dim_hidden = size_t(cfg_t.data[4]);
    c.dim_attn = size_t(cfg_t.data[5]);
    size_t n_scales = size_t(cfg_t.data[6]);
    c.bag_size = size_t(cfg_t.data[7]);
    if (cfg_t.data.size() != 8 + n_scales) throw DataError("checkpoint: bad scale list");
    c.scales.clear();
    for (size_t i = 0; i < n_scales; ++i) c.scales.push_back(size_t(cfg_t.data[8 + i]));
    p.config = c;
    size_t n_enc = c.shared ? 1 : n_scales;
    for (size_t i = 0; i < n_enc; ++i) {
        p.enc_w.push_back(from_named(find_tensor(ts, "enc_w" + std::to_string(i))));
        p.enc_b.push_back(from_named(find_tensor(ts, "enc_b" + std::to_string(i))));
    }
    p.attn_v = from_named(find_tensor(ts, "attn_v"));
    p.attn_w = from_named(find_tensor(ts, "attn_w"));
    p.pool_v = from_named(find_tensor(ts, "pool_v"));
    p.pool_u = from_named(find_tensor(ts, "pool_u"));
    p.pool_w = from_named(find_tensor(ts, "pool_w"));
    p.cls_w = from_named(find_tensor(ts, "cls_w"));
    p.cls_b = from_named(find_tensor(ts, "cls_b"));
    return p;
}

} // namespace csmil
