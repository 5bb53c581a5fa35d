#include "csmil/toydata.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "json.hpp"

#include "csmil/common.hpp"
#include "csmil/rng.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace csmil {

std::string split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        default: return "test";
    }
}

Split split_from_name(const std::string& name) {
    if (name == "train") return Split::train;
    if (name == "val") return Split::val;
    if (name == "test") return Split::test;
    throw DataError("unknown split: " + name);
}

std::string kind_name(DatasetKind k) { return k == DatasetKind::micro ? "micro" : "macro"; }

DatasetKind kind_from_name(const std::string& name) {
    if (name == "micro") return DatasetKind::micro;
    if (name == "macro") return DatasetKind::macro;
    throw DataError("unknown dataset kind: " + name);
}

const ToyParams& toy_params() {
    static const ToyParams p;
    return p;
}

namespace {

uint8_t clamp_u8(double v) {
    long r = std::lround(v);
    return uint8_t(std::clamp(r, 0l, 255l));
}

// One value-noise octave: N(0,1) lattice, bilinear interpolation, divided by
// the interpolation weight norm so the pointwise variance is 1 everywhere.
void add_octave(std::vector<double>& field, size_t size, size_t lattice, double sigma, Rng& rng) {
    size_t nodes = size / lattice + 1;
    std::vector<double> lat(nodes * nodes);
    for (double& v : lat) v = rng.normal();
    for (size_t y = 0; y < size; ++y) {
        size_t gy = y / lattice;
        double fy = double(y % lattice) / double(lattice);
        for (size_t x = 0; x < size; ++x) {
            size_t gx = x / lattice;
            double fx = double(x % lattice) / double(lattice);
            double w00 = (1 - fx) * (1 - fy), w10 = fx * (1 - fy);
            double w01 = (1 - fx) * fy, w11 = fx * fy;
            double v = w00 * lat[gy * nodes + gx] + w10 * lat[gy * nodes + gx + 1] +
                       w01 * lat[(gy + 1) * nodes + gx] + w11 * lat[(gy + 1) * nodes + gx + 1];
            double norm = std::sqrt(w00 * w00 + w10 * w10 + w01 * w01 + w11 * w11);
            field[y * size + x] += sigma * v / norm;
        }
    }
}

} // namespace

GrayImage value_noise_texture(uint64_t seed, size_t size) {
    const ToyParams& p = toy_params();
    Rng rng(seed);
    std::vector<double> field(size * size, 0.0);
    add_octave(field, size, p.lattice1, p.texture_sigma1, rng);
    add_octave(field, size, p.lattice2, p.texture_sigma2, rng);
    GrayImage img;
    img.width = img.height = size;
    img.pixels.resize(size * size);
    for (size_t i = 0; i < field.size(); ++i) img.pixels[i] = clamp_u8(p.texture_base + field[i]);
    return img;
}

void stamp_cross(GrayImage& img, int cx, int cy, int intensity) {
    for (int d = -2; d <= 2; ++d) {
        img.at(size_t(cy), size_t(cx + d)) = uint8_t(intensity);
        img.at(size_t(cy + d), size_t(cx)) = uint8_t(intensity);
    }
}

BaseRegion make_region(DatasetKind kind, int region_id, int label, Split split,
                       uint64_t region_seed) {
    const ToyParams& p = toy_params();
    BaseRegion r;
    r.region_id = region_id;
    r.label = label;
    r.split = split;
    r.pixels = value_noise_texture(derive_seed(region_seed, 1), 256);
    Rng rng(derive_seed(region_seed, 2));
    int size = int(r.pixels.width);

    if (kind == DatasetKind::micro) {
        // crosses exist only at the finest magnification: the coarse layer
        // stays cross-free, mirroring a detail too fine for lower pyramid levels
        r.coarse = r.pixels;
        if (label == 1) {
            // every 64x64 tile gets crosses, so each patch cut from a positive
            // region carries the pattern at 20x
            for (int ty = 0; ty + 64 <= size; ty += 64)
                for (int tx = 0; tx + 64 <= size; tx += 64) {
                    int n = p.cross_min + int(rng.index(uint64_t(p.cross_max - p.cross_min + 1)));
                    for (int c = 0; c < n; ++c) {
                        int cx = tx + 2 + int(rng.index(60));
                        int cy = ty + 2 + int(rng.index(60));
                        stamp_cross(r.pixels, cx, cy, p.cross_intensity);
                    }
                }
        }
    } else {
        // one filled shape per region. Both classes share the equivalent-circle
        // diameter distribution (equal areas), so only the global elongation
        // separates them; the wobbled boundary hides local curvature from
        // narrow fields of view.
        const double pi = 3.14159265358979323846;
        double ratio = label == 1 ? rng.uniform(p.ratio_min, p.ratio_max) : 1.0;
        double d = rng.uniform(p.diameter_min, p.diameter_max);
        double a = (d / 2.0) * std::sqrt(ratio); // semi-major
        double b = (d / 2.0) / std::sqrt(ratio); // semi-minor
        double theta = rng.uniform(-p.tilt_max, p.tilt_max);
        double margin = a * (1.0 + p.wobble_total);
        double cx = rng.uniform(margin, double(size) - margin);
        double cy = rng.uniform(margin, double(size) - margin);
        double ct = std::cos(theta), st = std::sin(theta);
        // radial wobble: bounded mix of mid-frequency harmonics
        double amp[ToyParams::wobble_harmonics], phase[ToyParams::wobble_harmonics];
        double amp_sum = 0;
        for (int k = 0; k < ToyParams::wobble_harmonics; ++k) {
            amp[k] = rng.uniform(0.2, 1.0);
            phase[k] = rng.uniform(0.0, 2.0 * pi);
            amp_sum += amp[k];
        }
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) {
                double dx = x - cx, dy = y - cy;
                double u = (dx * ct + dy * st) / a;
                double v = (-dx * st + dy * ct) / b;
                double ang = std::atan2(v, u);
                double g = 0;
                for (int k = 0; k < ToyParams::wobble_harmonics; ++k)
                    g += amp[k] * std::cos(double(p.wobble_k0 + k) * ang + phase[k]);
                double rim = 1.0 + p.wobble_total * g / amp_sum;
                // soft edge: a wide intensity ramp hides the boundary in the
                // 20x texture noise but reads as a crisp outline once
                // downsampled to 5x
                double depth = (rim - std::sqrt(u * u + v * v)) * (d / 2.0);
                double alpha = std::clamp(depth / p.edge_ramp, 0.0, 1.0);
                if (alpha > 0.0) {
                    double base = r.pixels.at(size_t(y), size_t(x));
                    r.pixels.at(size_t(y), size_t(x)) =
                        clamp_u8(base + alpha * (double(p.shape_intensity) - base));
                }
            }
        r.coarse = r.pixels;
    }
    return r;
}

GrayImage box_downsample(const GrayImage& img, size_t factor) {
    if (factor == 0 || img.width % factor != 0 || img.height % factor != 0)
        throw DataError("box_downsample: factor " + std::to_string(factor) +
                        " does not divide image size");
    GrayImage out;
    out.width = img.width / factor;
    out.height = img.height / factor;
    out.pixels.resize(out.width * out.height);
    for (size_t y = 0; y < out.height; ++y)
        for (size_t x = 0; x < out.width; ++x) {
            unsigned sum = 0;
            for (size_t dy = 0; dy < factor; ++dy)
                for (size_t dx = 0; dx < factor; ++dx)
                    sum += img.at(y * factor + dy, x * factor + dx);
            out.pixels[y * out.width + x] =
                clamp_u8(double(sum) / double(factor * factor));
        }
    return out;
}

namespace {

GrayImage crop(const GrayImage& img, size_t x0, size_t y0, size_t w, size_t h) {
    GrayImage out;
    out.width = w;
    out.height = h;
    out.pixels.resize(w * h);
    for (size_t y = 0; y < h; ++y)
        for (size_t x = 0; x < w; ++x) out.pixels[y * w + x] = img.at(y0 + y, x0 + x);
    return out;
}

size_t clamp_start(int center, size_t window, size_t limit) {
    int s = center - int(window) / 2;
    s = std::clamp(s, 0, int(limit - window));
    return size_t(s);
}

} // namespace

std::vector<PatchTriplet> tile_region(const BaseRegion& region, size_t grid_step) {
    size_t size = region.pixels.width;
    if (grid_step == 0 || grid_step > size)
        throw DataError("tile_region: grid step " + std::to_string(grid_step) +
                        " larger than region " + std::to_string(size));
    if (size % grid_step != 0)
        throw DataError("tile_region: grid step " + std::to_string(grid_step) +
                        " does not divide region size " + std::to_string(size));

    const GrayImage& coarse = region.coarse.pixels.empty() ? region.pixels : region.coarse;
    GrayImage s5 = box_downsample(coarse, 4);
    std::vector<PatchTriplet> out;
    for (size_t gy = grid_step / 2; gy < size; gy += grid_step)
        for (size_t gx = grid_step / 2; gx < size; gx += grid_step) {
            PatchTriplet t;
            t.cx = int(gx);
            t.cy = int(gy);
            t.s20 = crop(region.pixels, clamp_start(t.cx, 64, size), clamp_start(t.cy, 64, size),
                         64, 64);
            t.s10 = box_downsample(crop(coarse, clamp_start(t.cx, 128, size),
                                        clamp_start(t.cy, 128, size), 128, 128),
                                   2);
            t.s5 = s5;
            out.push_back(std::move(t));
        }
    return out;
}

void split_counts(size_t regions_per_class, size_t& n_train, size_t& n_val, size_t& n_test) {
    n_train = regions_per_class / 2;
    n_val = regions_per_class / 6;
    n_test = regions_per_class - n_train - n_val;
}

DatasetManifest generate_toy(const ToyConfig& cfg) {
    if (cfg.regions_per_class < 1) throw ConfigError("gen-toy: need at least 1 region per class");
    if (cfg.out_dir.empty()) throw ConfigError("gen-toy: output directory required");
    fs::create_directories(fs::path(cfg.out_dir) / "patches");

    size_t n_train, n_val, n_test;
    split_counts(cfg.regions_per_class, n_train, n_val, n_test);

    DatasetManifest m;
    m.kind = cfg.kind;
    m.seed = cfg.seed;
    m.grid_step = cfg.grid_step;
    m.dir = cfg.out_dir;

    int next_patch_id = 0;
    for (size_t i = 0; i < cfg.regions_per_class; ++i) {
        Split split = i < n_train ? Split::train : (i < n_train + n_val ? Split::val : Split::test);
        for (int label = 0; label <= 1; ++label) {
            int region_id = int(i) * 2 + label;
            uint64_t rseed = derive_seed(cfg.seed, uint64_t(region_id),
                                         cfg.kind == DatasetKind::micro ? 0x11 : 0x22);
            BaseRegion region = make_region(cfg.kind, region_id, label, split, rseed);
            for (PatchTriplet& t : tile_region(region, cfg.grid_step)) {
                PatchRecord rec;
                rec.id = next_patch_id++;
                rec.region_id = region_id;
                rec.split = split;
                rec.label = label;
                rec.cx = t.cx;
                rec.cy = t.cy;
                char buf[64];
                std::snprintf(buf, sizeof buf, "patches/r%04d_p%06d", region_id, rec.id);
                rec.path_s20 = std::string(buf) + "_s20.pgm";
                rec.path_s10 = std::string(buf) + "_s10.pgm";
                rec.path_s5 = std::string(buf) + "_s5.pgm";
                write_pgm((fs::path(cfg.out_dir) / rec.path_s20).string(), t.s20);
                write_pgm((fs::path(cfg.out_dir) / rec.path_s10).string(), t.s10);
                write_pgm((fs::path(cfg.out_dir) / rec.path_s5).string(), t.s5);
                m.records.push_back(std::move(rec));
            }
        }
    }
    write_manifest(m, (fs::path(cfg.out_dir) / "manifest.jsonl").string());
    return m;
}

void write_manifest(const DatasetManifest& m, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError("manifest: cannot open for write: " + path);
    json meta = {{"kind", kind_name(m.kind)}, {"seed", m.seed}, {"grid_step", m.grid_step}};
    f << meta.dump() << "\n";
    for (const PatchRecord& r : m.records) {
        json j = {{"id", r.id},
                  {"region_id", r.region_id},
                  {"split", split_name(r.split)},
                  {"label", r.label == 1 ? "positive" : "negative"},
                  {"cx", r.cx},
                  {"cy", r.cy},
                  {"path_s20", r.path_s20},
                  {"path_s10", r.path_s10},
                  {"path_s5", r.path_s5}};
        f << j.dump() << "\n";
    }
    if (!f) throw DataError("manifest: write failed: " + path);
}

DatasetManifest read_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("manifest: cannot open: " + path);
    DatasetManifest m;
    m.dir = fs::path(path).parent_path().string();
    if (m.dir.empty()) m.dir = ".";
    std::string line;
    size_t lineno = 0;
    std::set<int> ids;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw DataError("manifest: parse error at line " + std::to_string(lineno) + ": " +
                            e.what());
        }
        if (lineno == 1 && j.contains("kind")) {
            m.kind = kind_from_name(j.at("kind").get<std::string>());
            m.seed = j.at("seed").get<uint64_t>();
            m.grid_step = j.value("grid_step", size_t(64));
            continue;
        }
        PatchRecord r;
        try {
            r.id = j.at("id").get<int>();
            r.region_id = j.at("region_id").get<int>();
            r.split = split_from_name(j.at("split").get<std::string>());
            std::string label = j.at("label").get<std::string>();
            r.label = label == "positive" ? 1 : 0;
            r.cx = j.at("cx").get<int>();
            r.cy = j.at("cy").get<int>();
            r.path_s20 = j.at("path_s20").get<std::string>();
            r.path_s10 = j.at("path_s10").get<std::string>();
            r.path_s5 = j.at("path_s5").get<std::string>();
        } catch (const json::exception& e) {
            throw DataError("manifest: bad record at line " + std::to_string(lineno) + ": " +
                            e.what());
        }
        if (!ids.insert(r.id).second)
            throw DataError("manifest: duplicate id " + std::to_string(r.id) + " at line " +
                            std::to_string(lineno));
        m.records.push_back(std::move(r));
    }
    if (m.records.empty()) throw DataError("manifest: no patch records in " + path);
    return m;
}

} // namespace csmil
