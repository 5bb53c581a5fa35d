#include "csmil/bagging.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "json.hpp"

#include "csmil/common.hpp"
#include "csmil/rng.hpp"

using json = nlohmann::json;

namespace csmil {

GroupIndex build_groups(const DatasetManifest& manifest, Split split) {
    std::map<int, std::vector<size_t>> by_group;
    std::map<int, int> labels;
    for (size_t i = 0; i < manifest.records.size(); ++i) {
        const PatchRecord& r = manifest.records[i];
        if (r.split != split) continue;
        by_group[r.region_id].push_back(i);
        labels[r.region_id] = r.label;
    }
    GroupIndex g;
    for (auto& [gid, rows] : by_group) {
        if (rows.empty()) throw DataError("bagging: group " + std::to_string(gid) + " is empty");
        g.group_ids.push_back(gid);
        g.labels.push_back(labels[gid]);
        g.rows.push_back(std::move(rows));
    }
    return g;
}

std::vector<ClusterModel> cluster_groups(const FeatureSet& feats, const GroupIndex& groups,
                                         size_t k, uint64_t seed) {
    std::vector<ClusterModel> out;
    out.reserve(groups.group_ids.size());
    for (size_t g = 0; g < groups.group_ids.size(); ++g) {
        const std::vector<size_t>& rows = groups.rows[g];
        size_t kk = std::min(k, rows.size());
        std::vector<double> pts;
        pts.reserve(rows.size() * feats.dim);
        for (size_t r : rows)
            pts.insert(pts.end(), feats.feats[0].begin() + r * feats.dim,
                       feats.feats[0].begin() + (r + 1) * feats.dim);
        out.push_back(kmeans_fit(pts, rows.size(), feats.dim, kk,
                                 derive_seed(seed, uint64_t(groups.group_ids[g]))));
    }
    return out;
}

std::vector<Bag> make_train_bags(const GroupIndex& groups,
                                 const std::vector<ClusterModel>& clusters, size_t bag_size,
                                 size_t bags_per_group, uint64_t seed) {
    if (clusters.size() != groups.group_ids.size())
        throw DataError("bagging: cluster models do not match groups");
    std::vector<Bag> bags;
    int bag_id = 0;
    for (size_t g = 0; g < groups.group_ids.size(); ++g) {
        const std::vector<size_t>& rows = groups.rows[g];
        const ClusterModel& cm = clusters[g];
        if (cm.assignments.size() != rows.size())
            throw DataError("bagging: cluster assignments do not match group rows");

        // cluster -> local row indices
        std::vector<std::vector<size_t>> members(cm.k);
        for (size_t i = 0; i < rows.size(); ++i) members[cm.assignments[i]].push_back(i);
        std::vector<size_t> nonempty;
        for (size_t c = 0; c < cm.k; ++c)
            if (!members[c].empty()) nonempty.push_back(c);

        Rng rng(derive_seed(seed, uint64_t(groups.group_ids[g]), 0xBA6));
        for (size_t b = 0; b < bags_per_group; ++b) {
            std::vector<size_t> order = nonempty;
            rng.shuffle(order);
            // per-bag decks, refilled only when a cluster is exhausted
            std::vector<std::vector<size_t>> deck(cm.k);
            Bag bag;
            bag.bag_id = bag_id++;
            bag.group_id = groups.group_ids[g];
            bag.label = groups.labels[g];
            for (size_t slot = 0; slot < bag_size; ++slot) {
                size_t c = order[slot % order.size()];
                if (deck[c].empty()) {
                    deck[c] = members[c];
                    rng.shuffle(deck[c]);
                }
                bag.rows.push_back(rows[deck[c].back()]);
                deck[c].pop_back();
            }
            bags.push_back(std::move(bag));
        }
    }
    return bags;
}

std::vector<Bag> make_naive_train_bags(const GroupIndex& groups, size_t bag_size,
                                       size_t bags_per_group, uint64_t seed) {
    std::vector<Bag> bags;
    int bag_id = 0;
    for (size_t g = 0; g < groups.group_ids.size(); ++g) {
        const std::vector<size_t>& rows = groups.rows[g];
        Rng rng(derive_seed(seed, uint64_t(groups.group_ids[g]), 0xA1));
        for (size_t b = 0; b < bags_per_group; ++b) {
            Bag bag;
            bag.bag_id = bag_id++;
            bag.group_id = groups.group_ids[g];
            bag.label = groups.labels[g];
            std::vector<size_t> deck = rows;
            rng.shuffle(deck);
            for (size_t slot = 0; slot < bag_size; ++slot)
                bag.rows.push_back(deck[slot % deck.size()]);
            bags.push_back(std::move(bag));
        }
    }
    return bags;
}

std::vector<Bag> make_test_bags(const GroupIndex& groups, size_t bag_size,
                                size_t n_bags_per_group, uint64_t seed) {
    if (n_bags_per_group < 1) throw ConfigError("bagging: need at least one test bag per group");
    std::vector<Bag> bags;
    int bag_id = 0;
    for (size_t g = 0; g < groups.group_ids.size(); ++g) {
        const std::vector<size_t>& rows = groups.rows[g];
        Rng rng(derive_seed(seed, uint64_t(groups.group_ids[g]), 0x7e57));
        std::vector<size_t> stream;
        size_t slots = n_bags_per_group * bag_size;
        while (stream.size() < slots) {
            std::vector<size_t> perm = rows;
            rng.shuffle(perm);
            stream.insert(stream.end(), perm.begin(), perm.end());
        }
        for (size_t b = 0; b < n_bags_per_group; ++b) {
            Bag bag;
            bag.bag_id = bag_id++;
            bag.group_id = groups.group_ids[g];
            bag.label = groups.labels[g];
            bag.rows.assign(stream.begin() + b * bag_size, stream.begin() + (b + 1) * bag_size);
            bags.push_back(std::move(bag));
        }
    }
    return bags;
}

void dump_bags(const std::vector<Bag>& bags, const DatasetManifest& manifest,
               const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError("bags: cannot open for write: " + path);
    for (const Bag& b : bags) {
        json ids = json::array();
        for (size_t r : b.rows) ids.push_back(manifest.records[r].id);
        json j = {{"bag_id", b.bag_id},
                  {"group_id", b.group_id},
                  {"label", b.label == 1 ? "positive" : "negative"},
                  {"patch_ids", ids}};
        f << j.dump() << "\n";
    }
}

} // namespace csmil
