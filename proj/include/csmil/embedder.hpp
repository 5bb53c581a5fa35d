#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "csmil/pgm.hpp"
#include "csmil/toydata.hpp"

namespace csmil {

constexpr size_t kDescriptorDim = 164;

// Raw 164-dim patch descriptor. Layout (fixed):
//   [0..79]    4x4 grid of 16x16 cells, row-major, 5 stats per cell:
//              mean, std, max, mean |horizontal gradient|, mean |vertical gradient|
//   [80..143]  8x8 box-mean intensities, row-major
//   [144..159] global 16-bin intensity histogram (pixel fractions, bin width 16)
//   [160..163] rotation-invariant second moments of the bright-outlier mass
//              (pixels more than one std above the mean): sqrt of the
//              major/minor covariance eigenvalues (/32), eigenvalue
//              anisotropy (l1-l2)/(l1+l2), total mass fraction
std::array<double, kDescriptorDim> patch_descriptor(const GrayImage& img);

// Frozen label-free encoder. Two-stage normalization, both fitted on the
// training split only: descriptor dimensions are standardized per scale (the
// raw stats mix scales from ~0.01 histogram fractions to ~255 maxima, which
// would let the projection drown the small ones) and weighted so each
// descriptor block carries equal total energy, then the seeded Gaussian
// projection maps to D dims, then the projected features are standardized
// per scale.
struct EmbedderSpec {
    uint64_t seed = 0;
    size_t dim = 64;
    std::vector<double> projection; // kDescriptorDim x dim, N(0, 1/kDescriptorDim) from seed
    std::array<std::vector<double>, 3> desc_mean; // per scale, length kDescriptorDim
    std::array<std::vector<double>, 3> desc_std;  // per scale, length kDescriptorDim
    std::array<std::vector<double>, 3> mean;      // per scale (20x, 10x, 5x), length dim
    std::array<std::vector<double>, 3> std;       // per scale, length dim

    static EmbedderSpec make(uint64_t seed, size_t dim);
};

// Descriptor + projection, no normalization. scale_idx: 0 = 20x, 1 = 10x, 2 = 5x.
std::vector<double> embed_patch_raw(const GrayImage& img, const EmbedderSpec& spec);
std::vector<double> embed_patch(const GrayImage& img, const EmbedderSpec& spec, size_t scale_idx);

// Per-patch features for a whole dataset, rows in manifest order.
struct FeatureSet {
    size_t n = 0;
    size_t dim = 0;
    std::array<std::vector<double>, 3> feats; // per scale, n x dim
    std::vector<int> labels;
    std::vector<int> region_ids;
};

// Embeds every patch in the manifest, fits normalization statistics on the
// training split only, and writes the cache ("feat_s20", "feat_s10", "feat_s5",
// "labels", "region_ids") to out_path. Missing or corrupt patch files abort
// naming the file.
FeatureSet embed_dataset(const DatasetManifest& manifest, EmbedderSpec& spec,
                         const std::string& out_path);

FeatureSet load_features(const std::string& path);

} // namespace csmil
