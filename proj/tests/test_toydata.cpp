#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "csmil/common.hpp"
#include "csmil/rng.hpp"
#include "csmil/toydata.hpp"

using namespace csmil;
namespace fs = std::filesystem;

TEST_CASE("split_counts is 3:1:2") {
    size_t tr, va, te;
    split_counts(60, tr, va, te);
    CHECK(tr == 30);
    CHECK(va == 10);
    CHECK(te == 20);
    split_counts(6, tr, va, te);
    CHECK(tr == 3);
    CHECK(va == 1);
    CHECK(te == 2);
}

TEST_CASE("region rendering is deterministic") {
    BaseRegion a = make_region(DatasetKind::micro, 0, 1, Split::train, 77);
    BaseRegion b = make_region(DatasetKind::micro, 0, 1, Split::train, 77);
    CHECK(a.pixels.pixels == b.pixels.pixels);
    CHECK(a.coarse.pixels == b.coarse.pixels);
    BaseRegion c = make_region(DatasetKind::micro, 0, 1, Split::train, 78);
    CHECK(a.pixels.pixels != c.pixels.pixels);
}

TEST_CASE("micro crosses live only in the 20x layer") {
    // positive and negative regions from one seed share the texture, so the
    // coarse views must be identical while the fine view differs
    BaseRegion pos = make_region(DatasetKind::micro, 0, 1, Split::train, 123);
    BaseRegion neg = make_region(DatasetKind::micro, 0, 0, Split::train, 123);
    CHECK(pos.coarse.pixels == neg.pixels.pixels);
    CHECK(pos.pixels.pixels != neg.pixels.pixels);

    std::vector<PatchTriplet> tp = tile_region(pos, 64);
    std::vector<PatchTriplet> tn = tile_region(neg, 64);
    REQUIRE(tp.size() == tn.size());
    bool s20_differs = false;
    for (size_t i = 0; i < tp.size(); ++i) {
        CHECK(tp[i].s5.pixels == tn[i].s5.pixels);
        CHECK(tp[i].s10.pixels == tn[i].s10.pixels);
        if (tp[i].s20.pixels != tn[i].s20.pixels) s20_differs = true;
    }
    CHECK(s20_differs);
}

TEST_CASE("box_downsample arithmetic") {
    GrayImage flat;
    flat.width = flat.height = 8;
    flat.pixels.assign(64, 100);
    GrayImage d = box_downsample(flat, 4);
    CHECK(d.width == 2);
    for (uint8_t p : d.pixels) CHECK(p == 100);

    GrayImage g;
    g.width = g.height = 2;
    g.pixels = {10, 20, 30, 40};
    CHECK(box_downsample(g, 2).pixels[0] == 25);

    CHECK_THROWS_AS(box_downsample(g, 3), DataError);
    CHECK_THROWS_AS(box_downsample(g, 0), DataError);
}

TEST_CASE("cross pooling oracle on a flat background") {
    // 5x5 plus cross (9 lit px) on constant 128; a 4x4 box cell holds at most
    // 7 lit pixels, so the worst-case 5x lift is 7*(255-128)/16 = 55.56
    GrayImage img;
    img.width = img.height = 256;
    img.pixels.assign(256 * 256, 128);
    stamp_cross(img, 10, 10, 255);
    GrayImage d = box_downsample(img, 4);
    // cell (2,2) covers rows/cols 8..11: 4 vertical + 4 horizontal - 1 overlap = 7 lit
    CHECK(d.at(2, 2) == uint8_t(std::lround(128.0 + 7.0 * 127.0 / 16.0)));
    // one arm pixel spills into the cells below and to the right
    CHECK(d.at(3, 2) == uint8_t(std::lround(128.0 + 127.0 / 16.0)));
    CHECK(d.at(2, 3) == uint8_t(std::lround(128.0 + 127.0 / 16.0)));
    // untouched cell
    CHECK(d.at(10, 10) == 128);
}

TEST_CASE("tile_region geometry") {
    BaseRegion r = make_region(DatasetKind::micro, 0, 0, Split::train, 5);
    std::vector<PatchTriplet> t64 = tile_region(r, 64);
    CHECK(t64.size() == 16);
    for (const PatchTriplet& t : t64) {
        CHECK(t.s20.width == 64);
        CHECK(t.s20.height == 64);
        CHECK(t.s10.width == 64);
        CHECK(t.s5.width == 64);
    }

    std::vector<PatchTriplet> t256 = tile_region(r, 256);
    REQUIRE(t256.size() == 1);
    CHECK(t256[0].cx == 128);
    CHECK(t256[0].s5.pixels == box_downsample(r.coarse, 4).pixels);

    CHECK_THROWS_AS(tile_region(r, 0), DataError);
    CHECK_THROWS_AS(tile_region(r, 512), DataError);
    CHECK_THROWS_AS(tile_region(r, 48), DataError);
}

TEST_CASE("macro 20x patches mostly miss the boundary") {
    // over 100 regions, >50% of 20x crops see less than 30% of the shape's
    // boundary arc
    const int intensity = toy_params().shape_intensity;
    size_t patches = 0, starved = 0;
    for (int id = 0; id < 100; ++id) {
        BaseRegion r =
            make_region(DatasetKind::macro, id, id % 2, Split::train, derive_seed(0, id, 0x22));
        auto is_shape = [&](int y, int x) {
            return y >= 0 && y < 256 && x >= 0 && x < 256 &&
                   r.pixels.at(size_t(y), size_t(x)) == intensity;
        };
        std::vector<std::pair<int, int>> boundary;
        for (int y = 0; y < 256; ++y)
            for (int x = 0; x < 256; ++x)
                if (is_shape(y, x) && (!is_shape(y - 1, x) || !is_shape(y + 1, x) ||
                                       !is_shape(y, x - 1) || !is_shape(y, x + 1)))
                    boundary.emplace_back(y, x);
        REQUIRE(!boundary.empty());
        for (int by = 0; by < 4; ++by)
            for (int bx = 0; bx < 4; ++bx) {
                size_t inside = 0;
                for (auto [y, x] : boundary)
                    if (y / 64 == by && x / 64 == bx) ++inside;
                ++patches;
                if (double(inside) < 0.3 * double(boundary.size())) ++starved;
            }
    }
    CHECK(double(starved) > 0.5 * double(patches));
}

TEST_CASE("manifest round trip") {
    ToyConfig cfg;
    cfg.kind = DatasetKind::micro;
    cfg.regions_per_class = 2;
    cfg.seed = 3;
    cfg.grid_step = 128;
    cfg.out_dir = (fs::temp_directory_path() / "toyrt").string();
    DatasetManifest m = generate_toy(cfg);
    CHECK(m.records.size() == 2 * 2 * 4); // 2 classes x 2 regions x 4 patches at step 128

    DatasetManifest back = read_manifest((fs::path(cfg.out_dir) / "manifest.jsonl").string());
    REQUIRE(back.records.size() == m.records.size());
    CHECK(back.kind == m.kind);
    CHECK(back.seed == m.seed);
    CHECK(back.grid_step == m.grid_step);
    for (size_t i = 0; i < m.records.size(); ++i) {
        CHECK(back.records[i].id == m.records[i].id);
        CHECK(back.records[i].region_id == m.records[i].region_id);
        CHECK(back.records[i].split == m.records[i].split);
        CHECK(back.records[i].label == m.records[i].label);
        CHECK(back.records[i].cx == m.records[i].cx);
        CHECK(back.records[i].path_s20 == m.records[i].path_s20);
        // every referenced file parses as a valid patch image
        GrayImage img = read_pgm((fs::path(cfg.out_dir) / back.records[i].path_s20).string());
        CHECK(img.width == 64);
    }
    fs::remove_all(cfg.out_dir);
}

TEST_CASE("manifest rejects duplicates and garbage") {
    std::string path = (fs::temp_directory_path() / "bad_manifest.jsonl").string();
    {
        std::ofstream f(path);
        f << R"({"kind":"micro","seed":0,"grid_step":64})" << "\n";
        f << R"({"id":1,"region_id":0,"split":"train","label":"positive","cx":32,"cy":32,"path_s20":"a","path_s10":"b","path_s5":"c"})"
          << "\n";
        f << R"({"id":1,"region_id":0,"split":"train","label":"negative","cx":96,"cy":32,"path_s20":"a","path_s10":"b","path_s5":"c"})"
          << "\n";
    }
    CHECK_THROWS_AS(read_manifest(path), DataError);
    {
        std::ofstream f(path);
        f << "not structured text\n";
    }
    CHECK_THROWS_AS(read_manifest(path), DataError);
    std::remove(path.c_str());
}

TEST_CASE("label balance per split") {
    ToyConfig cfg;
    cfg.kind = DatasetKind::micro;
    cfg.regions_per_class = 6;
    cfg.seed = 1;
    cfg.grid_step = 128;
    cfg.out_dir = (fs::temp_directory_path() / "toybal").string();
    DatasetManifest m = generate_toy(cfg);
    for (Split s : {Split::train, Split::val, Split::test}) {
        int pos = 0, neg = 0;
        for (const PatchRecord& r : m.records)
            if (r.split == s) (r.label == 1 ? pos : neg)++;
        CHECK(pos == neg);
        CHECK(pos > 0);
    }
    fs::remove_all(cfg.out_dir);
}
