#pragma once

#include <array>
#include <string>
#include <vector>

#include "csmil/bagging.hpp"
#include "csmil/net.hpp"
#include "csmil/toydata.hpp"

namespace csmil {

// Accumulated attention scores on the patch-center grid of one region.
// Cells never sampled have count == 0 and are exported as "NA" / black.
struct AttentionMap {
    size_t grid = 0; // cells per side
    std::vector<double> sum;
    std::vector<size_t> count;

    double mean_at(size_t cy, size_t cx) const { return sum[cy * grid + cx] / double(count[cy * grid + cx]); }
    bool covered(size_t cy, size_t cx) const { return count[cy * grid + cx] > 0; }
};

// Mean of all a_s samples per patch cell for one region and scale.
// scale_pos indexes the trace's scale axis (the net's scales list).
AttentionMap fill_back(const std::vector<ForwardTrace>& traces, const std::vector<Bag>& bags,
                       const DatasetManifest& manifest, int region_id, size_t scale_pos);

// Same fill-back for the instance-pooling weights b_i.
AttentionMap fill_back_pool(const std::vector<ForwardTrace>& traces, const std::vector<Bag>& bags,
                            const DatasetManifest& manifest, int region_id);

// Writes (a) the raw mean grid as comma-separated text with "NA" for absent
// cells and (b) an 8-bit PGM of the min-max normalized map (constant maps
// render mid-gray, absent cells black).
void export_map(const AttentionMap& map, const std::string& csv_path,
                const std::string& pgm_path);

// Re-parses the CSV grid; absent cells come back as NaN.
std::vector<double> read_map_csv(const std::string& path, size_t& grid);

// Five-number summary of a_s over instances, per scale and bag label.
struct AttnSummary {
    size_t n = 0;
    double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
};

// Indexed [scale_pos][bag label 0/1].
std::vector<std::array<AttnSummary, 2>> scale_attention_stats(
    const std::vector<ForwardTrace>& traces, const std::vector<Bag>& bags);

} // namespace csmil
