// csmil: single entry point for the toy CS-MIL pipeline.
// Subcommands chain over on-disk artifacts; run-all drives the whole thing
// with a hash-based staleness guard.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "csmil/attnmap.hpp"
#include "csmil/bagging.hpp"
#include "csmil/common.hpp"
#include "csmil/container.hpp"
#include "csmil/embedder.hpp"
#include "csmil/kmeans.hpp"
#include "csmil/metrics.hpp"
#include "csmil/net.hpp"
#include "csmil/pgm.hpp"
#include "csmil/pipeline.hpp"
#include "csmil/rng.hpp"
#include "csmil/toydata.hpp"
#include "csmil/trainer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace csmil;

namespace {

std::string scale_tag(size_t s) {
    if (s == 0) return "s20";
    if (s == 1) return "s10";
    if (s == 2) return "s5";
    throw ConfigError("scale index out of range: " + std::to_string(s));
}

std::vector<size_t> parse_scales(const std::string& s) {
    std::vector<size_t> out;
    for (char c : s) {
        if (c == ',') continue;
        if (c < '0' || c > '2') throw ConfigError("bad --scales (want digits from 0,1,2): " + s);
        out.push_back(size_t(c - '0'));
    }
    if (out.empty()) throw ConfigError("--scales must name at least one scale");
    return out;
}

void echo_config(CLI::App* sub, const std::string& dir) {
    fs::create_directories(dir);
    std::ofstream f(dir + "/config.txt", std::ios::trunc);
    f << sub->config_to_str(true, false);
}

// Shared train-flag bundle so train/ablate/run-all agree on defaults.
struct TrainFlags {
    size_t epochs = 150, bags_per_group = 8, bag_size = 8, k = 8;
    double lr = 1e-3;
    double weight_decay = 1.0;
    size_t accum_bags = 1;
    uint64_t seed = 0;
    std::string act = "relu";
    bool shared = true;
    std::string scales = "0,1,2";
    bool no_clustering = false;

    void attach(CLI::App* sub) {
        sub->add_option("--epochs", epochs, "training epochs");
        sub->add_option("--bags-per-group", bags_per_group, "fresh bags per region per epoch");
        sub->add_option("--bag-size", bag_size, "instances per bag");
        sub->add_option("--k", k, "phenotype clusters per region");
        sub->add_option("--lr", lr, "Adam learning rate");
        sub->add_option("--weight-decay", weight_decay, "decoupled weight decay");
        sub->add_option("--accum", accum_bags, "bags per optimizer step (0 = whole epoch)");
        sub->add_option("--seed", seed, "run seed");
        sub->add_option("--act", act, "attention activation: relu|tanh");
        sub->add_option("--shared", shared, "share the encoder across scales");
        sub->add_option("--scales", scales, "scale indices, e.g. 0,1,2 or 0");
        sub->add_flag("--no-clustering", no_clustering, "naive unstratified training bags");
    }

    TrainConfig to_config(const std::string& mode) const {
        TrainConfig cfg;
        cfg.epochs = epochs;
        cfg.bags_per_group = bags_per_group;
        cfg.bag_size = bag_size;
        cfg.k_clusters = k;
        cfg.lr = lr;
        cfg.weight_decay = weight_decay;
        cfg.accum_bags = accum_bags;
        cfg.seed = seed;
        cfg.use_clustering = !no_clustering;
        cfg.net.mode = fusion_from_name(mode);
        cfg.net.act = act_from_name(act);
        cfg.net.shared = shared;
        cfg.net.scales = parse_scales(scales);
        cfg.net.bag_size = bag_size;
        return cfg;
    }
};

void export_region_maps(const EvalResult& ev, const DatasetManifest& manifest,
                        const NetConfig& net, int region, const std::string& dir) {
    fs::create_directories(dir);
    for (size_t p = 0; p < net.scales.size(); ++p) {
        AttentionMap m = fill_back(ev.traces, ev.bags, manifest, region, p);
        std::string tag = scale_tag(net.scales[p]);
        export_map(m, dir + "/attn_" + tag + ".csv", dir + "/attn_" + tag + ".pgm");
    }
    AttentionMap b = fill_back_pool(ev.traces, ev.bags, manifest, region);
    export_map(b, dir + "/instance_b.csv", dir + "/instance_b.pgm");
}

json metrics_record(const VariantResult& r) {
    return json{{"variant", r.name}, {"auc", r.auc}, {"ap", r.ap},
                {"accuracy", r.acc}, {"best_epoch", r.best_epoch}};
}

// ---- staleness guard ------------------------------------------------------

json load_state(const std::string& path) {
    std::ifstream f(path);
    if (!f) return json::object();
    json j;
    f >> j;
    return j;
}

void store_state(const std::string& path, const json& j) {
    std::ofstream f(path, std::ios::trunc);
    f << j.dump(2) << "\n";
}

bool fresh(const json& state, const std::string& key, const std::string& hash,
           const std::vector<std::string>& outputs) {
    if (!state.contains(key) || state[key] != hash) return false;
    for (const std::string& p : outputs)
        if (!fs::exists(p)) return false;
    return true;
}

std::string hex(uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)h);
    return buf;
}

// ---- subcommand bodies ----------------------------------------------------

int cmd_gen_toy(const std::string& kind, size_t regions, uint64_t seed, const std::string& out) {
    ToyConfig cfg;
    cfg.kind = kind_from_name(kind);
    cfg.regions_per_class = regions;
    cfg.seed = seed;
    cfg.out_dir = out;
    DatasetManifest m = generate_toy(cfg);
    std::cout << json{{"dataset", kind}, {"regions", 2 * regions},
                      {"patches", m.records.size()}, {"manifest", out + "/manifest.jsonl"}}
                     .dump()
              << "\n";
    return 0;
}

int cmd_embed(const std::string& manifest_path, uint64_t seed, size_t dim,
              const std::string& out) {
    DatasetManifest m = read_manifest(manifest_path);
    EmbedderSpec spec = EmbedderSpec::make(seed, dim);
    FeatureSet fsset = embed_dataset(m, spec, out);
    std::cout << json{{"patches", fsset.n}, {"dim", fsset.dim}, {"out", out}}.dump() << "\n";
    return 0;
}

int cmd_cluster(const std::string& feats_path, const std::string& manifest_path, size_t k,
                uint64_t seed, const std::string& out) {
    FeatureSet feats = load_features(feats_path);
    DatasetManifest m = read_manifest(manifest_path);
    GroupIndex groups = build_groups(m, Split::train);
    std::vector<ClusterModel> models = cluster_groups(feats, groups, k, seed);
    save_clusters(out, feats, groups, models);
    double inertia = 0.0;
    for (const ClusterModel& cm : models) inertia += cm.inertia;
    std::cout << json{{"groups", models.size()}, {"k", k}, {"total_inertia", inertia},
                      {"out", out}}
                     .dump()
              << "\n";
    return 0;
}

int cmd_bags(const std::string& manifest_path, const std::string& feats_path,
             const std::string& clusters_path, const std::string& split_s, size_t bag_size,
             size_t bags_per_group, size_t k, uint64_t seed, bool dump,
             const std::string& out) {
    DatasetManifest m = read_manifest(manifest_path);
    Split split = split_from_name(split_s);
    GroupIndex groups = build_groups(m, split);
    std::vector<Bag> bags;
    if (split == Split::train) {
        FeatureSet feats = load_features(feats_path);
        std::vector<ClusterModel> models =
            clusters_path.empty() ? cluster_groups(feats, groups, k, derive_seed(seed, 0xC125))
                                  : load_clusters(clusters_path, groups);
        bags = make_train_bags(groups, models, bag_size, bags_per_group, seed);
    } else {
        bags = make_test_bags(groups, bag_size, bags_per_group, seed);
    }
    if (dump) {
        if (out.empty()) throw ConfigError("bags --dump needs --out");
        dump_bags(bags, m, out);
    }
    std::cout << json{{"split", split_s}, {"bags", bags.size()}, {"bag_size", bag_size}}.dump()
              << "\n";
    return 0;
}

int cmd_train(const std::string& manifest_path, const std::string& feats_path,
              const std::string& clusters_path, const std::string& mode, const TrainFlags& tf,
              const std::string& out, const std::string& log_path) {
    DatasetManifest m = read_manifest(manifest_path);
    FeatureSet feats = load_features(feats_path);
    TrainConfig cfg = tf.to_config(mode);
    cfg.net.dim_in = feats.dim;
    if (!clusters_path.empty() && cfg.use_clustering)
        cfg.clusters = load_clusters(clusters_path, build_groups(m, Split::train));
    TrainResult tr = train(feats, m, cfg);
    save_checkpoint(tr.params, out);
    if (!log_path.empty()) write_train_log(tr.log, log_path);
    double final_loss = tr.log.train_loss.empty() ? 0.0 : tr.log.train_loss.back();
    std::cout << json{{"best_epoch", tr.log.best_epoch}, {"final_train_loss", final_loss},
                      {"ckpt", out}}
                     .dump()
              << "\n";
    return 0;
}

int cmd_eval(const std::string& ckpt, const std::string& manifest_path,
             const std::string& feats_path, size_t n_bags, size_t bag_size, uint64_t seed,
             const std::string& split_s, const std::string& out) {
    CsMilParams params = load_checkpoint(ckpt);
    DatasetManifest m = read_manifest(manifest_path);
    FeatureSet feats = load_features(feats_path);
    if (feats.dim != params.config.dim_in)
        throw DataError("eval: feature dim " + std::to_string(feats.dim) +
                        " does not match checkpoint dim " + std::to_string(params.config.dim_in));
    EvalResult ev = evaluate(params, feats, m, split_from_name(split_s), n_bags, bag_size, seed);
    json rec = {{"split", split_s},    {"auc", ev.auc}, {"ap", ev.ap}, {"accuracy", ev.acc},
                {"bags", ev.bags.size()}, {"bag_size", bag_size}};
    std::cout << rec.dump() << "\n";
    if (!out.empty()) {
        std::ofstream f(out, std::ios::trunc);
        if (!f) throw DataError("eval: cannot open --out: " + out);
        f << rec.dump() << "\n";
    }
    return 0;
}

int cmd_attnmap(const std::string& ckpt, const std::string& manifest_path,
                const std::string& feats_path, int region, size_t n_bags, uint64_t seed,
                const std::string& out) {
    CsMilParams params = load_checkpoint(ckpt);
    DatasetManifest m = read_manifest(manifest_path);
    FeatureSet feats = load_features(feats_path);
    Split split = Split::train;
    bool found = false;
    for (const PatchRecord& r : m.records)
        if (r.region_id == region) {
            split = r.split;
            found = true;
            break;
        }
    if (!found) throw DataError("attnmap: region not in manifest: " + std::to_string(region));
    EvalResult ev = evaluate(params, feats, m, split, n_bags, params.config.bag_size, seed, true);
    export_region_maps(ev, m, params.config, region, out);
    std::cout << json{{"region", region}, {"out", out}}.dump() << "\n";
    return 0;
}

struct CellSpec {
    std::string name, variant;
    AttnAct act;
    bool shared;
};

std::vector<CellSpec> make_grid(const std::vector<std::string>& variants,
                                const std::vector<std::string>& acts,
                                const std::vector<bool>& shared_opts) {
    std::vector<CellSpec> cells;
    for (const std::string& v : variants)
        for (const std::string& a : acts)
            for (bool sh : shared_opts) {
                std::string name = v;
                if (acts.size() > 1 || a != "relu") name += "-" + a;
                if (shared_opts.size() > 1 || !sh) name += sh ? "-shared" : "-nonshared";
                cells.push_back({name, v, act_from_name(a), sh});
            }
    return cells;
}

int cmd_ablate(const std::string& manifest_path, const std::string& feats_path,
               const std::string& clusters_path, const std::vector<std::string>& variants,
               const std::vector<std::string>& acts, const std::vector<bool>& shared_opts,
               const TrainFlags& tf, size_t eval_bags, const std::string& out_dir) {
    DatasetManifest m = read_manifest(manifest_path);
    FeatureSet feats = load_features(feats_path);
    std::vector<ClusterModel> models;
    if (!clusters_path.empty())
        models = load_clusters(clusters_path, build_groups(m, Split::train));
    fs::create_directories(out_dir);
    std::vector<VariantResult> rows;
    for (const CellSpec& cell : make_grid(variants, acts, shared_opts)) {
        try {
            TrainConfig cfg = tf.to_config("cs");
            cfg.net.act = cell.act;
            cfg.net.shared = cell.shared;
            cfg.clusters = models;
            VariantResult r = run_variant(feats, m, cfg, cell.variant, eval_bags);
            r.name = cell.name;
            rows.push_back(r);
            std::cerr << "cell " << cell.name << ": auc " << r.auc << "\n";
        } catch (const Error& e) {
            throw Error(e.exit_code, "ablate cell " + cell.name + ": " + e.what());
        }
    }
    write_ablation_tables(rows, out_dir + "/ablation.txt", out_dir + "/ablation.csv");
    for (const VariantResult& r : rows) std::cout << metrics_record(r).dump() << "\n";
    return 0;
}

int cmd_run_all(CLI::App* sub, const std::string& kind, size_t regions, size_t dim,
                const std::vector<std::string>& variants, const TrainFlags& tf,
                size_t eval_bags, const std::string& out_root) {
    std::string droot = out_root + "/" + kind;
    fs::create_directories(droot);
    std::string state_path = droot + "/state.json";
    json state = load_state(state_path);

    std::string data_dir = droot + "/data";
    std::string manifest_path = data_dir + "/manifest.jsonl";
    std::string gen_cfg = "gen:kind=" + kind + ",regions=" + std::to_string(regions) +
                          ",seed=" + std::to_string(tf.seed);
    if (!fresh(state, "gen", hex(fnv1a(gen_cfg)), {manifest_path})) {
        std::cerr << "[" << kind << "] generating dataset\n";
        ToyConfig cfg;
        cfg.kind = kind_from_name(kind);
        cfg.regions_per_class = regions;
        cfg.seed = tf.seed;
        cfg.out_dir = data_dir;
        generate_toy(cfg);
        state["gen"] = hex(fnv1a(gen_cfg));
        store_state(state_path, state);
    } else {
        std::cerr << "[" << kind << "] dataset up to date\n";
    }
    DatasetManifest m = read_manifest(manifest_path);

    std::string feats_path = droot + "/feats.csml";
    std::string embed_cfg = "embed:dim=" + std::to_string(dim) +
                            ",seed=" + std::to_string(tf.seed) +
                            ",manifest=" + hex(fnv1a_file(manifest_path));
    FeatureSet feats;
    if (!fresh(state, "embed", hex(fnv1a(embed_cfg)), {feats_path})) {
        std::cerr << "[" << kind << "] embedding patches\n";
        EmbedderSpec spec = EmbedderSpec::make(tf.seed, dim);
        feats = embed_dataset(m, spec, feats_path);
        state["embed"] = hex(fnv1a(embed_cfg));
        store_state(state_path, state);
    } else {
        std::cerr << "[" << kind << "] feature cache up to date\n";
        feats = load_features(feats_path);
    }

    GroupIndex train_groups = build_groups(m, Split::train);
    std::string clusters_path = droot + "/clusters.csml";
    std::string cl_cfg = "cluster:k=" + std::to_string(tf.k) +
                         ",seed=" + std::to_string(tf.seed) +
                         ",feats=" + hex(fnv1a_file(feats_path));
    std::vector<ClusterModel> models;
    if (!fresh(state, "cluster", hex(fnv1a(cl_cfg)), {clusters_path})) {
        std::cerr << "[" << kind << "] clustering phenotypes\n";
        models = cluster_groups(feats, train_groups, tf.k, derive_seed(tf.seed, 0xC125));
        save_clusters(clusters_path, feats, train_groups, models);
        state["cluster"] = hex(fnv1a(cl_cfg));
        store_state(state_path, state);
    } else {
        std::cerr << "[" << kind << "] clusters up to date\n";
        models = load_clusters(clusters_path, train_groups);
    }

    std::vector<VariantResult> rows;
    for (const std::string& v : variants) {
        std::string vdir = droot + "/" + v;
        std::string ckpt = vdir + "/ckpt.csml";
        std::string metrics_path = vdir + "/metrics.json";
        std::string tr_cfg = "train:variant=" + v + ",epochs=" + std::to_string(tf.epochs) +
                             ",bpg=" + std::to_string(tf.bags_per_group) +
                             ",bag=" + std::to_string(tf.bag_size) +
                             ",lr=" + std::to_string(tf.lr) +
                             ",wd=" + std::to_string(tf.weight_decay) +
                             ",accum=" + std::to_string(tf.accum_bags) +
                             ",k=" + std::to_string(tf.k) + ",act=" + tf.act +
                             ",shared=" + std::to_string(tf.shared) +
                             ",seed=" + std::to_string(tf.seed) +
                             ",feats=" + hex(fnv1a_file(feats_path)) +
                             ",evalbags=" + std::to_string(eval_bags);
        if (fresh(state, "train:" + v, hex(fnv1a(tr_cfg)), {ckpt, metrics_path})) {
            std::cerr << "[" << kind << "] " << v << " up to date\n";
            std::ifstream f(metrics_path);
            json rec;
            f >> rec;
            rows.push_back({v, rec["auc"], rec["ap"], rec["accuracy"], rec["best_epoch"]});
            continue;
        }
        std::cerr << "[" << kind << "] training " << v << "\n";
        TrainConfig cfg = tf.to_config("cs");
        cfg.clusters = models;
        RunArtifacts art;
        VariantResult r = run_variant(feats, m, cfg, v, eval_bags, &art);
        fs::create_directories(vdir);
        echo_config(sub, vdir);
        save_checkpoint(art.params, ckpt);
        write_train_log(art.log, vdir + "/train.log");
        {
            std::ofstream f(metrics_path, std::ios::trunc);
            f << metrics_record(r).dump() << "\n";
        }
        // attention maps for the first positive and negative test region
        GroupIndex test_groups = build_groups(m, Split::test);
        for (int want : {1, 0})
            for (size_t g = 0; g < test_groups.group_ids.size(); ++g)
                if (test_groups.labels[g] == want) {
                    export_region_maps(art.test, m, art.params.config, test_groups.group_ids[g],
                                       vdir + "/maps/region_" +
                                           std::to_string(test_groups.group_ids[g]));
                    break;
                }
        state["train:" + v] = hex(fnv1a(tr_cfg));
        store_state(state_path, state);
        rows.push_back(r);
        std::cerr << "[" << kind << "] " << v << ": auc " << r.auc << "\n";
    }
    write_ablation_tables(rows, droot + "/results.txt", droot + "/results.csv");
    for (const VariantResult& r : rows) std::cout << metrics_record(r).dump() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"cross-scale attention MIL pipeline on synthetic toy datasets"};
    app.require_subcommand(1);

    // gen-toy
    std::string g_kind = "micro", g_out = "data";
    size_t g_regions = 120;
    uint64_t g_seed = 0;
    CLI::App* gen = app.add_subcommand("gen-toy", "generate a synthetic dataset");
    gen->add_option("--kind", g_kind, "micro|macro")->required();
    gen->add_option("--regions", g_regions, "regions per class (3:1:2 split)");
    gen->add_option("--seed", g_seed, "dataset seed");
    gen->add_option("--out", g_out, "output directory")->required();
    gen->set_config("--config");

    // embed
    std::string e_manifest, e_out = "feats.csml";
    uint64_t e_seed = 0;
    size_t e_dim = 64;
    CLI::App* emb = app.add_subcommand("embed", "embed all patches with the frozen encoder");
    emb->add_option("--manifest", e_manifest)->required();
    emb->add_option("--seed", e_seed, "embedder seed");
    emb->add_option("--dim", e_dim, "embedding dimension");
    emb->add_option("--out", e_out, "feature cache path")->required();
    emb->set_config("--config");

    // cluster
    std::string c_feats, c_manifest, c_out = "clusters.csml";
    size_t c_k = 8;
    uint64_t c_seed = 0;
    CLI::App* clu = app.add_subcommand("cluster", "per-region phenotype clustering (train split)");
    clu->add_option("--feats", c_feats)->required();
    clu->add_option("--manifest", c_manifest)->required();
    clu->add_option("--k", c_k, "clusters per region");
    clu->add_option("--seed", c_seed);
    clu->add_option("--out", c_out)->required();
    clu->set_config("--config");

    // bags
    std::string b_manifest, b_feats, b_clusters, b_split = "train", b_out;
    size_t b_bag_size = 8, b_bpg = 32, b_k = 8;
    uint64_t b_seed = 0;
    bool b_dump = false;
    CLI::App* bags = app.add_subcommand("bags", "build bags; --dump writes an audit file");
    bags->add_option("--manifest", b_manifest)->required();
    bags->add_option("--feats", b_feats, "feature cache (train-split bags only)");
    bags->add_option("--clusters", b_clusters, "precomputed cluster file");
    bags->add_option("--split", b_split, "train|val|test");
    bags->add_option("--bag-size", b_bag_size);
    bags->add_option("--bags-per-group", b_bpg);
    bags->add_option("--k", b_k);
    bags->add_option("--seed", b_seed);
    bags->add_flag("--dump", b_dump, "write line-delimited bag records");
    bags->add_option("--out", b_out, "dump path");
    bags->set_config("--config");

    // train
    std::string t_manifest, t_feats, t_clusters, t_mode = "cs", t_out = "ckpt.csml", t_log;
    TrainFlags t_flags;
    CLI::App* tr = app.add_subcommand("train", "train one model variant");
    tr->add_option("--manifest", t_manifest)->required();
    tr->add_option("--feats", t_feats)->required();
    tr->add_option("--clusters", t_clusters, "precomputed cluster file");
    tr->add_option("--mode", t_mode, "fusion: cs|mean|concat");
    t_flags.attach(tr);
    tr->add_option("--out", t_out, "checkpoint path")->required();
    tr->add_option("--log", t_log, "training log path");
    tr->set_config("--config");

    // eval
    std::string v_ckpt, v_manifest, v_feats, v_split = "test", v_out;
    size_t v_bags = 100, v_bag_size = 8;
    uint64_t v_seed = 0;
    CLI::App* ev = app.add_subcommand("eval", "evaluate a checkpoint on one split");
    ev->add_option("--ckpt", v_ckpt)->required();
    ev->add_option("--manifest", v_manifest)->required();
    ev->add_option("--feats", v_feats)->required();
    ev->add_option("--bags", v_bags, "bags per region");
    ev->add_option("--bag-size", v_bag_size);
    ev->add_option("--seed", v_seed);
    ev->add_option("--split", v_split, "train|val|test");
    ev->add_option("--out", v_out, "metrics record path");
    ev->set_config("--config");

    // attnmap
    std::string a_ckpt, a_manifest, a_feats, a_out = "maps";
    int a_region = 0;
    size_t a_bags = 100;
    uint64_t a_seed = 0;
    CLI::App* am = app.add_subcommand("attnmap", "export attention maps for one region");
    am->add_option("--ckpt", a_ckpt)->required();
    am->add_option("--manifest", a_manifest)->required();
    am->add_option("--feats", a_feats)->required();
    am->add_option("--region", a_region)->required();
    am->add_option("--bags", a_bags, "bags per region when sampling");
    am->add_option("--seed", a_seed);
    am->add_option("--out", a_out, "output directory")->required();
    am->set_config("--config");

    // ablate
    std::string ab_manifest, ab_feats, ab_clusters, ab_out = "ablation";
    std::vector<std::string> ab_variants = {"cs", "mean", "concat", "s20", "s10", "s5"};
    std::vector<std::string> ab_acts = {"relu"};
    std::vector<bool> ab_shared = {true};
    size_t ab_eval_bags = 100;
    TrainFlags ab_flags;
    CLI::App* ab = app.add_subcommand("ablate", "train and evaluate a variant grid");
    ab->add_option("--manifest", ab_manifest)->required();
    ab->add_option("--feats", ab_feats)->required();
    ab->add_option("--clusters", ab_clusters);
    ab->add_option("--variants", ab_variants, "cs|mean|concat|s20|s10|s5|cs-naive")
        ->delimiter(',');
    ab->add_option("--acts", ab_acts, "relu,tanh grid axis")->delimiter(',');
    ab->add_option("--shared-grid", ab_shared, "true,false grid axis")->delimiter(',');
    ab->add_option("--eval-bags", ab_eval_bags, "test bags per region");
    ab_flags.attach(ab);
    ab->add_option("--out", ab_out, "table directory")->required();
    ab->set_config("--config");

    // run-all
    std::string r_kind = "micro", r_out = "out";
    size_t r_regions = 120, r_dim = 64, r_eval_bags = 100;
    std::vector<std::string> r_variants = {"cs", "mean", "concat", "s20", "s10", "s5"};
    TrainFlags r_flags;
    CLI::App* ra = app.add_subcommand("run-all", "generate, embed, cluster, train, evaluate");
    ra->add_option("--kind", r_kind, "micro|macro")->required();
    ra->add_option("--regions", r_regions, "regions per class");
    ra->add_option("--dim", r_dim, "embedding dimension");
    ra->add_option("--variants", r_variants)->delimiter(',');
    ra->add_option("--eval-bags", r_eval_bags);
    r_flags.attach(ra);
    ra->add_option("--out", r_out, "output root")->required();
    ra->set_config("--config");

    try {
        app.parse(argc, argv);
        if (gen->parsed()) return cmd_gen_toy(g_kind, g_regions, g_seed, g_out);
        if (emb->parsed()) return cmd_embed(e_manifest, e_seed, e_dim, e_out);
        if (clu->parsed()) return cmd_cluster(c_feats, c_manifest, c_k, c_seed, c_out);
        if (bags->parsed())
            return cmd_bags(b_manifest, b_feats, b_clusters, b_split, b_bag_size, b_bpg, b_k,
                            b_seed, b_dump, b_out);
        if (tr->parsed())
            return cmd_train(t_manifest, t_feats, t_clusters, t_mode, t_flags, t_out, t_log);
        if (ev->parsed())
            return cmd_eval(v_ckpt, v_manifest, v_feats, v_bags, v_bag_size, v_seed, v_split,
                            v_out);
        if (am->parsed())
            return cmd_attnmap(a_ckpt, a_manifest, a_feats, a_region, a_bags, a_seed, a_out);
        if (ab->parsed())
            return cmd_ablate(ab_manifest, ab_feats, ab_clusters, ab_variants, ab_acts, ab_shared,
                              ab_flags, ab_eval_bags, ab_out);
        if (ra->parsed())
            return cmd_run_all(ra, r_kind, r_regions, r_dim, r_variants, r_flags, r_eval_bags,
                               r_out);
    } catch (const CLI::ParseError& e) {
        int r = app.exit(e);
        return r == 0 ? 0 : 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
