#include "csmil/attnmap.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "csmil/common.hpp"
#include "csmil/pgm.hpp"

namespace csmil {

namespace {

AttentionMap accumulate(const std::vector<ForwardTrace>& traces, const std::vector<Bag>& bags,
                        const DatasetManifest& manifest, int region_id,
                        const std::function<double(const ForwardTrace&, size_t)>& value) {
    if (traces.empty() || traces.size() != bags.size())
        throw DataError("attnmap: traces and bags must be nonempty and aligned");
    size_t grid = 256 / manifest.grid_step;
    AttentionMap map;
    map.grid = grid;
    map.sum.assign(grid * grid, 0.0);
    map.count.assign(grid * grid, 0);
    for (size_t b = 0; b < bags.size(); ++b) {
        if (bags[b].group_id != region_id) continue;
        for (size_t i = 0; i < bags[b].rows.size(); ++i) {
            const PatchRecord& rec = manifest.records[bags[b].rows[i]];
            size_t cx = size_t(rec.cx) / manifest.grid_step;
            size_t cy = size_t(rec.cy) / manifest.grid_step;
            if (cx >= grid || cy >= grid)
                throw DataError("attnmap: patch center outside region grid (id " +
                                std::to_string(rec.id) + ")");
            map.sum[cy * grid + cx] += value(traces[b], i);
            map.count[cy * grid + cx] += 1;
        }
    }
    return map;
}

} // namespace

AttentionMap fill_back(const std::vector<ForwardTrace>& traces, const std::vector<Bag>& bags,
                       const DatasetManifest& manifest, int region_id, size_t scale_pos) {
    return accumulate(traces, bags, manifest, region_id,
                      [scale_pos](const ForwardTrace& t, size_t i) {
                          if (scale_pos >= t.s) throw DataError("attnmap: scale out of range");
                          return t.scale_attn[i * t.s + scale_pos];
                      });
}

AttentionMap fill_back_pool(const std::vector<ForwardTrace>& traces, const std::vector<Bag>& bags,
                            const DatasetManifest& manifest, int region_id) {
    return accumulate(traces, bags, manifest, region_id,
                      [](const ForwardTrace& t, size_t i) { return t.pool_attn[i]; });
}

void export_map(const AttentionMap& map, const std::string& csv_path,
                const std::string& pgm_path) {
    std::ofstream csv(csv_path, std::ios::trunc);
    if (!csv) throw DataError("attnmap: cannot open for write: " + csv_path);
    csv.precision(17);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (size_t cy = 0; cy < map.grid; ++cy) {
        for (size_t cx = 0; cx < map.grid; ++cx) {
            if (cx) csv << ",";
            if (map.covered(cy, cx)) {
                double v = map.mean_at(cy, cx);
                csv << v;
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            } else {
                csv << "NA";
            }
        }
        csv << "\n";
    }
    if (!csv) throw DataError("attnmap: write failed: " + csv_path);

    GrayImage img;
    img.width = img.height = map.grid;
    img.pixels.assign(map.grid * map.grid, 0);
    for (size_t cy = 0; cy < map.grid; ++cy)
        for (size_t cx = 0; cx < map.grid; ++cx) {
            if (!map.covered(cy, cx)) continue; // absent -> 0
            double v;
            if (hi > lo)
                v = (map.mean_at(cy, cx) - lo) / (hi - lo);
            else
                v = 128.0 / 255.0; // constant map -> mid-gray
            img.at(cy, cx) = uint8_t(std::lround(255.0 * v));
        }
    write_pgm(pgm_path, img);
}

std::vector<double> read_map_csv(const std::string& path, size_t& grid) {
    std::ifstream f(path);
    if (!f) throw DataError("attnmap: cannot open: " + path);
    std::vector<double> out;
    std::string line;
    size_t rows = 0;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        ++rows;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            if (cell == "NA")
                out.push_back(std::numeric_limits<double>::quiet_NaN());
            else
                out.push_back(std::stod(cell));
        }
    }
    grid = rows;
    if (out.size() != rows * rows) throw DataError("attnmap: non-square grid in " + path);
    return out;
}

std::vector<std::array<AttnSummary, 2>> scale_attention_stats(
    const std::vector<ForwardTrace>& traces, const std::vector<Bag>& bags) {
    if (traces.empty() || traces.size() != bags.size())
        throw DataError("attnmap: traces and bags must be nonempty and aligned");
    size_t S = traces[0].s;
    std::vector<std::array<std::vector<double>, 2>> samples(S);
    for (size_t b = 0; b < traces.size(); ++b) {
        const ForwardTrace& t = traces[b];
        int label = bags[b].label == 1 ? 1 : 0;
        for (size_t i = 0; i < t.n; ++i)
            for (size_t s = 0; s < S; ++s) samples[s][label].push_back(t.scale_attn[i * S + s]);
    }
    auto quantile = [](const std::vector<double>& sorted, double p) {
        if (sorted.empty()) return 0.0;
        double idx = p * double(sorted.size() - 1);
        size_t lo = size_t(idx);
        size_t hi = std::min(lo + 1, sorted.size() - 1);
        double frac = idx - double(lo);
        return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
    };
    std::vector<std::array<AttnSummary, 2>> out(S);
    for (size_t s = 0; s < S; ++s)
        for (int label = 0; label < 2; ++label) {
            std::vector<double>& v = samples[s][label];
            std::sort(v.begin(), v.end());
            AttnSummary& a = out[s][label];
            a.n = v.size();
            if (v.empty()) continue;
            a.min = v.front();
            a.max = v.back();
            a.q1 = quantile(v, 0.25);
            a.median = quantile(v, 0.5);
            a.q3 = quantile(v, 0.75);
        }
    return out;
}

} // namespace csmil
