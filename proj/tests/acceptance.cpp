// End-to-end acceptance runner. Each numbered check prints one PASS/FAIL
// line; the process exits nonzero if any check fails. The pipeline checks
// (1-5) train the full variant grid on freshly generated micro/macro
// datasets for seeds 0-2, so this binary runs for a while.
//
// argv[1] (optional): path to the csmil CLI, used by the artifact
// determinism check to exercise the real pipeline stages.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "csmil/attnmap.hpp"
#include "csmil/common.hpp"
#include "csmil/embedder.hpp"
#include "csmil/kmeans.hpp"
#include "csmil/metrics.hpp"
#include "csmil/net.hpp"
#include "csmil/pipeline.hpp"
#include "csmil/rng.hpp"
#include "csmil/toydata.hpp"
#include "csmil/trainer.hpp"

using namespace csmil;
namespace fs = std::filesystem;

namespace {

struct CheckResult {
    int id = 0;
    bool pass = false;
    std::string detail;
};

std::vector<CheckResult> g_results;

void report(int id, bool pass, std::string detail) {
    g_results.push_back({id, pass, std::move(detail)});
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

// ---------------------------------------------------------------- oracles

double auc_pairwise(const ScoredSet& s) {
    double wins = 0, ties = 0;
    size_t p = 0, n = 0;
    for (size_t i = 0; i < s.labels.size(); ++i) {
        if (s.labels[i] != 1) continue;
        ++p;
        for (size_t j = 0; j < s.labels.size(); ++j) {
            if (s.labels[j] == 1) continue;
            if (s.scores[i] > s.scores[j]) wins += 1;
            else if (s.scores[i] == s.scores[j]) ties += 1;
        }
    }
    for (int l : s.labels)
        if (l == 0) ++n;
    return (wins + 0.5 * ties) / (double(p) * double(n));
}

double ap_step(const ScoredSet& s) {
    std::vector<size_t> order(s.scores.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return s.scores[a] > s.scores[b]; });
    size_t total_pos = 0;
    for (int l : s.labels) total_pos += size_t(l == 1);
    double ap = 0;
    size_t tp = 0, seen = 0, prev_tp = 0, i = 0;
    while (i < order.size()) {
        size_t j = i;
        while (j < order.size() && s.scores[order[j]] == s.scores[order[i]]) {
            tp += size_t(s.labels[order[j]] == 1);
            ++seen;
            ++j;
        }
        ap += (double(tp - prev_tp) / double(total_pos)) * (double(tp) / double(seen));
        prev_tp = tp;
        i = j;
    }
    return ap;
}

ScoredSet random_scored_set(uint64_t seed) {
    Rng rng(seed);
    ScoredSet s;
    size_t n = 2 + rng.index(199);
    bool has_pos = false, has_neg = false;
    for (size_t i = 0; i < n; ++i) {
        s.scores.push_back(double(rng.index(20)) / 10.0); // quantized -> ties
        int l = int(rng.index(2));
        s.labels.push_back(l);
        (l ? has_pos : has_neg) = true;
    }
    if (!has_pos) s.labels[0] = 1;
    if (!has_neg) s.labels[s.labels.size() - 1] = 0;
    return s;
}

// exhaustive optimum over all 2-partitions of <= 20 points
double best_two_partition_inertia(const std::vector<double>& pts, size_t n) {
    double best = 1e300;
    for (uint32_t mask = 1; mask + 1 < (1u << n); ++mask) {
        double cx[2] = {0, 0}, cy[2] = {0, 0};
        size_t cnt[2] = {0, 0};
        for (size_t i = 0; i < n; ++i) {
            int side = (mask >> i) & 1;
            cx[side] += pts[2 * i];
            cy[side] += pts[2 * i + 1];
            cnt[side]++;
        }
        for (int c = 0; c < 2; ++c) {
            cx[c] /= double(cnt[c]);
            cy[c] /= double(cnt[c]);
        }
        double inertia = 0;
        for (size_t i = 0; i < n; ++i) {
            int side = (mask >> i) & 1;
            double dx = pts[2 * i] - cx[side], dy = pts[2 * i + 1] - cy[side];
            inertia += dx * dx + dy * dy;
        }
        best = std::min(best, inertia);
    }
    return best;
}

FeatureSet random_feats(size_t n, size_t dim, uint64_t seed) {
    Rng rng(seed);
    FeatureSet f;
    f.n = n;
    f.dim = dim;
    for (auto& v : f.feats) {
        v.resize(n * dim);
        for (double& x : v) x = rng.normal();
    }
    for (size_t i = 0; i < n; ++i) {
        f.labels.push_back(int(i % 2));
        f.region_ids.push_back(0);
    }
    return f;
}

Bag bag_of(std::vector<size_t> rows) {
    Bag b;
    b.group_id = 0;
    b.label = 1;
    b.rows = std::move(rows);
    return b;
}

// ------------------------------------------------------- pipeline harness

struct DatasetOutcome {
    std::map<std::string, double> auc;
    double med_a20_pos = 0.0, med_a5_pos = 0.0; // cs model, positive test bags
    double max_scale_err = 0.0, max_pool_err = 0.0;
    double core_minutes = 0.0; // cs + both single-scale variants
};

DatasetOutcome run_dataset(DatasetKind kind, uint64_t seed, const fs::path& scratch) {
    ToyConfig tc;
    tc.kind = kind;
    tc.regions_per_class = 120;
    tc.seed = seed;
    tc.out_dir = (scratch / (kind_name(kind) + "_s" + std::to_string(seed))).string();
    DatasetManifest manifest = generate_toy(tc);
    EmbedderSpec spec = EmbedderSpec::make(seed, 64);
    FeatureSet feats = embed_dataset(manifest, spec, "");

    TrainConfig base;
    base.seed = seed;
    base.net.dim_in = feats.dim;

    std::vector<std::string> variants = {"cs", "mean", "concat", "s20", "s10", "s5"};
    DatasetOutcome out;
    for (const std::string& v : variants) {
        auto t0 = std::chrono::steady_clock::now();
        RunArtifacts art;
        VariantResult r = run_variant(feats, manifest, base, v, 100, &art);
        auto t1 = std::chrono::steady_clock::now();
        double minutes = std::chrono::duration<double>(t1 - t0).count() / 60.0;
        if (v == "cs" || v[0] == 's') out.core_minutes += minutes;
        out.auc[v] = r.auc;
        out.max_scale_err = std::max(out.max_scale_err, art.test.max_scale_attn_err);
        out.max_pool_err = std::max(out.max_pool_err, art.test.max_pool_attn_err);
        if (v == "cs") {
            auto stats = scale_attention_stats(art.test.traces, art.test.bags);
            out.med_a20_pos = stats[0][1].median;
            out.med_a5_pos = stats[2][1].median;
        }
        std::fprintf(stderr, "[%s seed %llu] %s: auc %.4f (%.1f min)\n", kind_name(kind).c_str(),
                     (unsigned long long)seed, v.c_str(), r.auc, minutes);
    }
    fs::remove_all(tc.out_dir); // patches are large; drop them once embedded
    return out;
}

std::string join3(const std::array<DatasetOutcome, 3>& runs, const std::string& v) {
    return fmt(runs[0].auc.at(v)) + "/" + fmt(runs[1].auc.at(v)) + "/" + fmt(runs[2].auc.at(v));
}

size_t count_ok(const std::array<DatasetOutcome, 3>& runs, const std::string& v, double lo,
                double hi) {
    size_t n = 0;
    for (const DatasetOutcome& r : runs) {
        double a = r.auc.at(v);
        n += size_t(a >= lo && a <= hi);
    }
    return n;
}

// ------------------------------------------------------- CLI determinism

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw DataError("acceptance: cannot open " + p.string());
    return std::string((std::istreambuf_iterator<char>(f)), {});
}

bool run_tool(const std::string& tool, const std::string& args, const fs::path& log) {
    std::string cmd = "\"" + tool + "\" " + args + " >\"" + log.string() + "\" 2>&1";
    return std::system(cmd.c_str()) == 0;
}

// byte-compares every regular file under two directories (same relative set)
bool dirs_identical(const fs::path& a, const fs::path& b, std::string& why) {
    std::vector<fs::path> rel;
    for (const auto& e : fs::recursive_directory_iterator(a))
        if (e.is_regular_file()) rel.push_back(fs::relative(e.path(), a));
    std::sort(rel.begin(), rel.end());
    for (const fs::path& r : rel) {
        if (!fs::exists(b / r)) {
            why = "missing " + r.string();
            return false;
        }
        if (slurp(a / r) != slurp(b / r)) {
            why = "differs: " + r.string();
            return false;
        }
    }
    return true;
}

void check_determinism(const std::string& tool, const fs::path& scratch) {
    if (tool.empty()) {
        report(9, false, "no CLI path given; stage artifacts not exercised");
        return;
    }
    fs::path d = scratch / "det";
    fs::create_directories(d);
    fs::path log = d / "log.txt";
    std::vector<std::string> diffs;

    auto stage = [&](const std::string& name, const std::string& args_a,
                     const std::string& args_b, auto&& compare) {
        if (!run_tool(tool, args_a, log) || !run_tool(tool, args_b, log)) {
            diffs.push_back(name + " failed: " + slurp(log).substr(0, 120));
            return;
        }
        std::string why;
        if (!compare(why)) diffs.push_back(name + " " + why);
    };

    fs::path g1 = d / "g1", g2 = d / "g2";
    stage(
        "gen-toy", "gen-toy --kind micro --regions 6 --seed 3 --out \"" + g1.string() + "\"",
        "gen-toy --kind micro --regions 6 --seed 3 --out \"" + g2.string() + "\"",
        [&](std::string& why) { return dirs_identical(g1, g2, why); });

    std::string mani = (g1 / "manifest.jsonl").string();
    fs::path f1 = d / "f1.csml", f2 = d / "f2.csml";
    stage(
        "embed",
        "embed --manifest \"" + mani + "\" --seed 3 --dim 16 --out \"" + f1.string() + "\"",
        "embed --manifest \"" + mani + "\" --seed 3 --dim 16 --out \"" + f2.string() + "\"",
        [&](std::string& why) {
            why = "cache differs";
            return slurp(f1) == slurp(f2);
        });

    fs::path c1 = d / "c1.csml", c2 = d / "c2.csml";
    stage(
        "cluster",
        "cluster --feats \"" + f1.string() + "\" --manifest \"" + mani + "\" --k 4 --seed 3 --out \"" + c1.string() + "\"",
        "cluster --feats \"" + f1.string() + "\" --manifest \"" + mani + "\" --k 4 --seed 3 --out \"" + c2.string() + "\"",
        [&](std::string& why) {
            why = "cluster file differs";
            return slurp(c1) == slurp(c2);
        });

    std::string train_common = "train --manifest \"" + mani + "\" --feats \"" + f1.string() +
                               "\" --epochs 8 --bags-per-group 4 --bag-size 4 --k 4 --seed 3 --out ";
    fs::path k1 = d / "k1.csml", k2 = d / "k2.csml";
    stage(
        "train", train_common + "\"" + k1.string() + "\"", train_common + "\"" + k2.string() + "\"",
        [&](std::string& why) {
            why = "checkpoint differs";
            return slurp(k1) == slurp(k2);
        });

    std::string eval_common = "eval --ckpt \"" + k1.string() + "\" --manifest \"" + mani +
                              "\" --feats \"" + f1.string() +
                              "\" --bags 10 --bag-size 4 --seed 5 --split test --out ";
    fs::path m1 = d / "m1.json", m2 = d / "m2.json";
    stage(
        "eval", eval_common + "\"" + m1.string() + "\"", eval_common + "\"" + m2.string() + "\"",
        [&](std::string& why) {
            why = "metrics differ";
            return slurp(m1) == slurp(m2);
        });

    std::string detail = "gen-toy, embed, cluster, train, eval re-runs byte-identical";
    if (!diffs.empty()) {
        detail = diffs[0];
        for (size_t i = 1; i < diffs.size(); ++i) detail += "; " + diffs[i];
    }
    report(9, diffs.empty(), detail);
}

// --------------------------------------------------------- quick checks

void check_gradient_oracle() {
    double worst = 0;
    for (uint64_t seed = 0; seed < 5; ++seed) {
        NetConfig cfg;
        cfg.dim_in = 8;
        cfg.dim_hidden = 6;
        cfg.dim_attn = 4;
        cfg.act = seed % 2 ? AttnAct::tanh : AttnAct::relu;
        CsMilParams p = CsMilParams::init(cfg, seed);
        FeatureSet f = random_feats(8, cfg.dim_in, seed + 100);
        Bag b = bag_of({0, 1, 2, 3});
        auto loss_fn = [&]() {
            Tape tape;
            Tensor loss = nll_loss(tape, forward_bag(tape, p, bag_inputs(f, b, cfg)), 1);
            double lv = loss.scalar_value();
            tape.backward(loss);
            return lv;
        };
        worst = std::max(worst, finite_diff_check(p.all(), loss_fn));
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "max rel err %.2e over 5 draws", worst);
    report(6, worst < 1e-4, buf);
}

void check_metric_oracles() {
    size_t auc_bad = 0;
    double ap_worst = 0;
    for (uint64_t seed = 0; seed < 100; ++seed) {
        ScoredSet s = random_scored_set(seed);
        if (roc_auc(s) != auc_pairwise(s)) ++auc_bad;
        ap_worst = std::max(ap_worst, std::fabs(pr_ap(s) - ap_step(s)));
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "auc mismatches %zu/100, ap max dev %.2e", auc_bad, ap_worst);
    report(7, auc_bad == 0 && ap_worst <= 1e-12, buf);
}

void check_kmeans_oracle() {
    size_t hits = 0;
    bool monotone = true; // kmeans_fit throws if inertia ever increases
    for (uint64_t inst = 0; inst < 20; ++inst) {
        Rng rng(900 + inst);
        const size_t n = 8;
        std::vector<double> pts(2 * n);
        for (double& v : pts) v = rng.uniform() * 10.0;
        double best = 1e300;
        try {
            for (uint64_t s = 0; s < 5; ++s)
                best = std::min(best, kmeans_fit(pts, n, 2, 2, s).inertia);
        } catch (const NumericError&) {
            monotone = false;
            break;
        }
        if (std::fabs(best - best_two_partition_inertia(pts, n)) <= 1e-9) ++hits;
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "optimum matched on %zu/20 instances%s", hits,
                  monotone ? "" : ", inertia increased");
    report(8, hits >= 18 && monotone, buf);
}

void check_equal_logit_equivalence() {
    double worst = 0;
    for (uint64_t seed = 0; seed < 100; ++seed) {
        NetConfig cfg;
        cfg.dim_in = 8;
        cfg.dim_hidden = 6;
        cfg.dim_attn = 4;
        CsMilParams p = CsMilParams::init(cfg, seed);
        for (double& v : p.attn_w.values()) v = 0.0; // all logits equal
        CsMilParams q = p.clone();
        q.config.mode = FusionMode::mean_vector;
        FeatureSet f = random_feats(8, cfg.dim_in, seed + 2000);
        Bag b = bag_of({0, 1, 2, 3});
        Tape tape;
        ForwardTrace ta, tb;
        forward_bag(tape, p, bag_inputs(f, b, cfg), &ta);
        tape.reset();
        forward_bag(tape, q, bag_inputs(f, b, q.config), &tb);
        worst = std::max(worst, std::fabs(ta.prob_pos - tb.prob_pos));
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "max |cs - mean| %.2e over 100 draws", worst);
    report(10, worst <= 1e-12, buf);
}

} // namespace

int main(int argc, char** argv) {
    std::string tool = argc > 1 ? argv[1] : "";
    fs::path scratch = fs::temp_directory_path() / "csmil_acceptance";
    fs::remove_all(scratch);
    fs::create_directories(scratch);

    check_gradient_oracle();
    check_metric_oracles();
    check_kmeans_oracle();
    check_equal_logit_equivalence();
    check_determinism(tool, scratch);

    std::array<DatasetOutcome, 3> micro, macro;
    for (uint64_t seed = 0; seed < 3; ++seed) {
        micro[seed] = run_dataset(DatasetKind::micro, seed, scratch);
        macro[seed] = run_dataset(DatasetKind::macro, seed, scratch);
    }

    {
        size_t cs_ok = count_ok(micro, "cs", 0.90, 1.0);
        size_t s10_ok = count_ok(micro, "s10", 0.35, 0.65);
        size_t s20_ok = count_ok(micro, "s20", 0.95, 1.0);
        std::string detail = "cs " + join3(micro, "cs") + ", s10 " + join3(micro, "s10") +
                             ", s20 " + join3(micro, "s20") + "; core runs " +
                             fmt(micro[0].core_minutes) + "/" + fmt(micro[1].core_minutes) + "/" +
                             fmt(micro[2].core_minutes) + " min/seed";
        report(1, cs_ok >= 2 && s10_ok >= 2 && s20_ok >= 2, detail);
    }
    {
        size_t cs_ok = count_ok(macro, "cs", 0.90, 1.0);
        size_t s5_ok = count_ok(macro, "s5", 0.95, 1.0);
        size_t s20_ok = count_ok(macro, "s20", 0.0, 0.85);
        std::string detail = "cs " + join3(macro, "cs") + ", s5 " + join3(macro, "s5") + ", s20 " +
                             join3(macro, "s20");
        report(2, cs_ok >= 2 && s5_ok >= 2 && s20_ok >= 2, detail);
    }
    {
        size_t mean_ok = count_ok(micro, "mean", 0.0, 0.70);
        size_t concat_ok = count_ok(micro, "concat", 0.0, 0.70);
        size_t cs_ok = count_ok(micro, "cs", 0.90, 1.0);
        size_t mc_ok = count_ok(macro, "concat", 0.95, 1.0);
        // mean AUC across both datasets, averaged over seeds; variants
        // trained on only one dataset get the optimistic 1.0 on the other,
        // so cs must beat even their best case
        std::map<std::string, double> mean_auc;
        for (const std::string& v : {"cs", "mean", "concat", "s20", "s10", "s5"}) {
            double sum = 0;
            for (int i = 0; i < 3; ++i) sum += micro[i].auc.at(v) + macro[i].auc.at(v);
            mean_auc[v] = sum / 6.0;
        }
        bool cs_highest = true;
        for (const auto& [v, a] : mean_auc)
            if (v != "cs" && a >= mean_auc["cs"]) cs_highest = false;
        std::string detail = "micro mean " + join3(micro, "mean") + ", micro concat " +
                             join3(micro, "concat") + ", macro concat " + join3(macro, "concat") +
                             ", mean-auc cs " + fmt(mean_auc["cs"]) +
                             (cs_highest ? " highest" : " not highest");
        report(3, mean_ok >= 2 && concat_ok >= 2 && cs_ok >= 2 && mc_ok >= 2 && cs_highest,
               detail);
    }
    {
        size_t micro_ok = 0, macro_ok = 0;
        std::string mi, ma;
        for (int i = 0; i < 3; ++i) {
            double dm = micro[i].med_a20_pos - micro[i].med_a5_pos;
            double dM = macro[i].med_a5_pos - macro[i].med_a20_pos;
            micro_ok += size_t(dm >= 0.05);
            macro_ok += size_t(dM >= 0.05);
            mi += (i ? "/" : "") + fmt(dm);
            ma += (i ? "/" : "") + fmt(dM);
        }
        report(4, micro_ok >= 2 && macro_ok >= 2,
               "micro med(a20-a5) " + mi + ", macro med(a5-a20) " + ma);
    }
    {
        double worst = 0;
        for (int i = 0; i < 3; ++i) {
            worst = std::max({worst, micro[i].max_scale_err, micro[i].max_pool_err,
                              macro[i].max_scale_err, macro[i].max_pool_err});
        }
        char buf[64];
        std::snprintf(buf, sizeof buf, "max |sum - 1| = %.2e over all test passes", worst);
        report(5, worst <= 1e-6, buf);
    }

    fs::remove_all(scratch);

    std::sort(g_results.begin(), g_results.end(),
              [](const CheckResult& a, const CheckResult& b) { return a.id < b.id; });
    bool all = true;
    for (const CheckResult& r : g_results) {
        std::printf("criterion %d: %s (%s)\n", r.id, r.pass ? "PASS" : "FAIL", r.detail.c_str());
        all = all && r.pass;
    }
    return all ? 0 : 1;
}
