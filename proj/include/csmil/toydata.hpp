#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "csmil/pgm.hpp"

namespace csmil {

enum class Split { train, val, test };
enum class DatasetKind { micro, macro };

std::string split_name(Split s);
Split split_from_name(const std::string& name);
std::string kind_name(DatasetKind k);
DatasetKind kind_from_name(const std::string& name);

// 256x256 grayscale base region with a weak binary label. `pixels` is the
// full-detail 20x rendering; `coarse` is the source for the 10x/5x views.
// For the micro dataset the cross pattern lives only in `pixels`, so it is
// invisible below 20x; for macro both layers are identical.
struct BaseRegion {
    int region_id = 0;
    int label = 0; // 1 = positive, 0 = negative
    Split split = Split::train;
    GrayImage pixels;
    GrayImage coarse;
};

// Co-centered views at 20x / 10x / 5x, each 64x64:
//   s20 = 64x64 crop at the center,
//   s10 = 128x128 crop box-downsampled 2x,
//   s5  = the full region box-downsampled 4x.
struct PatchTriplet {
    int cx = 0, cy = 0;
    GrayImage s20, s10, s5;
};

struct PatchRecord {
    int id = 0;
    int region_id = 0;
    Split split = Split::train;
    int label = 0;
    int cx = 0, cy = 0;
    std::string path_s20, path_s10, path_s5; // relative to the manifest directory
};

struct DatasetManifest {
    DatasetKind kind = DatasetKind::micro;
    uint64_t seed = 0;
    size_t grid_step = 64;
    std::string dir; // directory the relative paths resolve against
    std::vector<PatchRecord> records;
};

struct ToyConfig {
    DatasetKind kind = DatasetKind::micro;
    size_t regions_per_class = 120; // split 3:1:2 into train/val/test
    uint64_t seed = 0;
    std::string out_dir;
    size_t grid_step = 64;
};

// Geometry and texture parameters for the two synthetic datasets. These are
// declared parameters of this artifact, not reconstructions of any upstream
// dataset.
struct ToyParams {
    // two-octave value noise, clamped around base
    double texture_base = 128.0;
    double texture_sigma1 = 16.0; // lattice 32
    double texture_sigma2 = 12.0; // lattice 8
    size_t lattice1 = 32;
    size_t lattice2 = 8;
    // micro: 5x5 plus-shaped crosses, arm width 1, 9 lit pixels; stamped
    // per 64x64 tile so every patch of a positive region carries some
    int cross_min = 1, cross_max = 2;
    int cross_intensity = 255;
    // macro: one filled bright shape per region. diameter is the
    // equivalent-circle diameter, shared by both classes so areas match and
    // only the aspect ratio separates them; the boundary gets a bounded
    // radial wobble that masks local curvature at narrow fields of view.
    double diameter_min = 104.0, diameter_max = 124.0;
    double ratio_min = 2.2, ratio_max = 3.0;
    int shape_intensity = 210;
    static constexpr int wobble_harmonics = 5;
    int wobble_k0 = 5;         // lowest harmonic; k0..k0+harmonics-1
    double wobble_total = 0.12; // max |radial modulation|
    double tilt_max = 1.5707963267948966; // free major-axis orientation
    double edge_ramp = 14.0;    // px over which the rim fades into texture
};

const ToyParams& toy_params();

// Deterministic per-region rendering (pure in region_seed).
GrayImage value_noise_texture(uint64_t seed, size_t size = 256);
void stamp_cross(GrayImage& img, int cx, int cy, int intensity);
BaseRegion make_region(DatasetKind kind, int region_id, int label, Split split,
                       uint64_t region_seed);

GrayImage box_downsample(const GrayImage& img, size_t factor);
std::vector<PatchTriplet> tile_region(const BaseRegion& region, size_t grid_step);

// Renders all regions, writes the patch PGMs and manifest.jsonl under
// cfg.out_dir, and returns the manifest.
DatasetManifest generate_toy(const ToyConfig& cfg);

DatasetManifest read_manifest(const std::string& path);
void write_manifest(const DatasetManifest& m, const std::string& path);

// 3:1:2 split per class over regions_per_class.
void split_counts(size_t regions_per_class, size_t& n_train, size_t& n_val, size_t& n_test);

} // namespace csmil
