#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "csmil/common.hpp"
#include "csmil/embedder.hpp"
#include "csmil/toydata.hpp"

using namespace csmil;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(f), {});
}

GrayImage constant_patch(uint8_t v) {
    GrayImage img;
    img.width = img.height = 64;
    img.pixels.assign(64 * 64, v);
    return img;
}

} // namespace

TEST_CASE("descriptor of a constant image") {
    std::array<double, kDescriptorDim> d = patch_descriptor(constant_patch(0));
    for (size_t c = 0; c < 16; ++c) {
        CHECK(d[c * 5 + 0] == 0.0); // mean
        CHECK(d[c * 5 + 1] == 0.0); // std
        CHECK(d[c * 5 + 2] == 0.0); // max
        CHECK(d[c * 5 + 3] == 0.0); // |dx|
        CHECK(d[c * 5 + 4] == 0.0); // |dy|
    }
    for (size_t b = 80; b < 144; ++b) CHECK(d[b] == 0.0);
    CHECK(d[144] == 1.0); // all pixels in histogram bin 0
    for (size_t b = 145; b < 160; ++b) CHECK(d[b] == 0.0);
    for (size_t b = 160; b < 164; ++b) CHECK(d[b] == 0.0); // no above-mean mass

    std::array<double, kDescriptorDim> d2 = patch_descriptor(constant_patch(200));
    CHECK(d2[0] == 200.0);
    CHECK(d2[80] == 200.0);
    CHECK(d2[144 + 200 / 16] == 1.0);
    for (size_t b = 160; b < 164; ++b) CHECK(d2[b] == 0.0);
}

TEST_CASE("descriptor rejects wrong size") {
    GrayImage img;
    img.width = img.height = 32;
    img.pixels.assign(32 * 32, 0);
    CHECK_THROWS_AS(patch_descriptor(img), DataError);
}

TEST_CASE("embedder determinism") {
    EmbedderSpec a = EmbedderSpec::make(9, 64);
    EmbedderSpec b = EmbedderSpec::make(9, 64);
    CHECK(a.projection == b.projection);
    EmbedderSpec c = EmbedderSpec::make(10, 64);
    CHECK(a.projection != c.projection);
    CHECK_THROWS_AS(EmbedderSpec::make(9, 0), ConfigError);

    BaseRegion r = make_region(DatasetKind::micro, 0, 0, Split::train, 4);
    GrayImage patch = tile_region(r, 64)[5].s20;
    CHECK(embed_patch(patch, a, 0) == embed_patch(patch, b, 0));
}

TEST_CASE("cross twin differs before normalization") {
    BaseRegion r = make_region(DatasetKind::micro, 0, 0, Split::train, 21);
    GrayImage plain = tile_region(r, 64)[5].s20;
    GrayImage crossed = plain;
    stamp_cross(crossed, 32, 32, 255);
    EmbedderSpec spec = EmbedderSpec::make(0, 64);
    std::vector<double> a = embed_patch_raw(plain, spec);
    std::vector<double> b = embed_patch_raw(crossed, spec);
    double l2 = 0;
    for (size_t i = 0; i < a.size(); ++i) l2 += (a[i] - b[i]) * (a[i] - b[i]);
    CHECK(std::sqrt(l2) > 0.0);
}

TEST_CASE("embed_dataset statistics and cache determinism") {
    ToyConfig cfg;
    cfg.kind = DatasetKind::micro;
    cfg.regions_per_class = 4;
    cfg.seed = 2;
    cfg.grid_step = 128;
    cfg.out_dir = (fs::temp_directory_path() / "toyemb").string();
    DatasetManifest m = generate_toy(cfg);

    std::string cache1 = (fs::path(cfg.out_dir) / "f1.csml").string();
    std::string cache2 = (fs::path(cfg.out_dir) / "f2.csml").string();
    EmbedderSpec spec1 = EmbedderSpec::make(0, 32);
    FeatureSet fsa = embed_dataset(m, spec1, cache1);
    EmbedderSpec spec2 = EmbedderSpec::make(0, 32);
    embed_dataset(m, spec2, cache2);
    CHECK(slurp(cache1) == slurp(cache2)); // same spec -> byte-identical cache

    CHECK(fsa.n == m.records.size());
    CHECK(fsa.dim == 32);

    // training-split mean ~0 and variance ~1 per dimension, per scale
    size_t n_train = 0;
    for (const PatchRecord& r : m.records) n_train += size_t(r.split == Split::train);
    REQUIRE(n_train > 0);
    for (size_t s = 0; s < 3; ++s)
        for (size_t j = 0; j < fsa.dim; ++j) {
            double mean = 0, var = 0;
            for (size_t i = 0; i < fsa.n; ++i) {
                if (m.records[i].split != Split::train) continue;
                mean += fsa.feats[s][i * fsa.dim + j];
            }
            mean /= double(n_train);
            for (size_t i = 0; i < fsa.n; ++i) {
                if (m.records[i].split != Split::train) continue;
                double c = fsa.feats[s][i * fsa.dim + j] - mean;
                var += c * c;
            }
            var /= double(n_train);
            CHECK(std::fabs(mean) < 1e-9);
            CHECK(std::fabs(var - 1.0) < 0.05);
        }

    // cache round trip
    FeatureSet back = load_features(cache1);
    CHECK(back.n == fsa.n);
    CHECK(back.feats == fsa.feats);
    CHECK(back.labels == fsa.labels);
    CHECK(back.region_ids == fsa.region_ids);

    // missing patch file aborts naming the file
    DatasetManifest broken = m;
    broken.records[0].path_s20 = "patches/nope.pgm";
    EmbedderSpec spec3 = EmbedderSpec::make(0, 32);
    CHECK_THROWS_WITH_AS(embed_dataset(broken, spec3, ""),
                         doctest::Contains("nope.pgm"), DataError);
    fs::remove_all(cfg.out_dir);
}
