#include "csmil/pipeline.hpp"

#include <cstdio>
#include <fstream>

#include "csmil/common.hpp"
#include "csmil/container.hpp"
#include "csmil/rng.hpp"

namespace csmil {

NetConfig make_net_config(const std::string& variant, size_t feature_dim, AttnAct act,
                          bool shared) {
    NetConfig c;
    c.dim_in = feature_dim;
    c.act = act;
    c.shared = shared;
    if (variant == "cs" || variant == "cs-naive") {
        c.mode = FusionMode::cs_attention;
    } else if (variant == "mean") {
        c.mode = FusionMode::mean_vector;
    } else if (variant == "concat") {
        c.mode = FusionMode::concatenation;
    } else if (variant == "s20" || variant == "s10" || variant == "s5") {
        c.mode = FusionMode::cs_attention;
        c.scales = {variant == "s20" ? size_t(0) : variant == "s10" ? size_t(1) : size_t(2)};
    } else {
        throw ConfigError("unknown variant: " + variant +
                          " (want cs|mean|concat|s20|s10|s5|cs-naive)");
    }
    return c;
}

bool variant_uses_clustering(const std::string& variant) { return variant != "cs-naive"; }

VariantResult run_variant(const FeatureSet& feats, const DatasetManifest& manifest,
                          TrainConfig base, const std::string& variant, size_t n_test_bags,
                          RunArtifacts* artifacts) {
    base.net = make_net_config(variant, feats.dim, base.net.act, base.net.shared);
    base.net.bag_size = base.bag_size;
    base.use_clustering = variant_uses_clustering(variant) && base.use_clustering;
    TrainResult tr = train(feats, manifest, base);
    EvalResult ev = evaluate(tr.params, feats, manifest, Split::test, n_test_bags, base.bag_size,
                             derive_seed(base.seed, 0xE7A1), artifacts != nullptr);
    VariantResult out{variant, ev.auc, ev.ap, ev.acc, tr.log.best_epoch};
    if (artifacts) {
        artifacts->params = std::move(tr.params);
        artifacts->log = std::move(tr.log);
        artifacts->test = std::move(ev);
    }
    return out;
}

void write_ablation_tables(const std::vector<VariantResult>& rows, const std::string& txt_path,
                           const std::string& csv_path) {
    std::ofstream txt(txt_path, std::ios::trunc);
    std::ofstream csv(csv_path, std::ios::trunc);
    if (!txt || !csv) throw DataError("ablate: cannot open output tables");
    char buf[128];
    txt << "variant        auc      ap       acc\n";
    csv << "variant,auc,ap,acc\n";
    for (const VariantResult& r : rows) {
        std::snprintf(buf, sizeof buf, "%-12s %8.4f %8.4f %8.4f\n", r.name.c_str(), r.auc, r.ap,
                      r.acc);
        txt << buf;
        std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f,%.6f\n", r.name.c_str(), r.auc, r.ap, r.acc);
        csv << buf;
    }
}

void save_clusters(const std::string& path, const FeatureSet& feats, const GroupIndex& groups,
                   const std::vector<ClusterModel>& models) {
    if (models.size() != groups.group_ids.size())
        throw DataError("clusters: model list does not match groups");
    std::vector<double> region_ids(feats.region_ids.begin(), feats.region_ids.end());
    std::vector<double> assignments(feats.n, -1.0);
    std::vector<NamedTensor> ts;
    for (size_t g = 0; g < models.size(); ++g) {
        for (size_t i = 0; i < groups.rows[g].size(); ++i)
            assignments[groups.rows[g][i]] = double(models[g].assignments[i]);
        ts.push_back({"centroids_g" + std::to_string(groups.group_ids[g]),
                      {models[g].k, models[g].dim},
                      models[g].centroids});
    }
    ts.insert(ts.begin(), {"assignments", {feats.n}, std::move(assignments)});
    ts.insert(ts.begin(), {"region_ids", {feats.n}, std::move(region_ids)});
    write_container(path, ts);
}

std::vector<ClusterModel> load_clusters(const std::string& path, const GroupIndex& groups) {
    std::vector<NamedTensor> ts = read_container(path);
    const NamedTensor& assignments = find_tensor(ts, "assignments");
    std::vector<ClusterModel> out;
    for (size_t g = 0; g < groups.group_ids.size(); ++g) {
        const NamedTensor& cent = find_tensor(ts, "centroids_g" + std::to_string(groups.group_ids[g]));
        if (cent.shape.size() != 2) throw DataError("clusters: bad centroid rank");
        ClusterModel m;
        m.k = cent.shape[0];
        m.dim = cent.shape[1];
        m.centroids = cent.data;
        for (size_t row : groups.rows[g]) {
            if (row >= assignments.data.size() || assignments.data[row] < 0)
                throw DataError("clusters: missing assignment for feature row " +
                                std::to_string(row));
            m.assignments.push_back(size_t(assignments.data[row]));
        }
        out.push_back(std::move(m));
    }
    return out;
}

uint64_t fnv1a(const std::string& bytes, uint64_t h) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

uint64_t fnv1a_file(const std::string& path, uint64_t h) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("hash: cannot open: " + path);
    std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return fnv1a(buf, h);
}

} // namespace csmil
