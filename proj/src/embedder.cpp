#include "csmil/embedder.hpp"

#include <cmath>
#include <filesystem>

#include "csmil/common.hpp"
#include "csmil/container.hpp"
#include "csmil/rng.hpp"

namespace fs = std::filesystem;

namespace csmil {

std::array<double, kDescriptorDim> patch_descriptor(const GrayImage& img) {
    if (img.width != 64 || img.height != 64)
        throw DataError("embed: expected 64x64 patch, got " + std::to_string(img.width) + "x" +
                        std::to_string(img.height));
    std::array<double, kDescriptorDim> d{};

    // 4x4 grid of 16x16 cells: mean, std, max, mean |dx|, mean |dy|
    size_t idx = 0;
    for (size_t cy = 0; cy < 4; ++cy)
        for (size_t cx = 0; cx < 4; ++cx) {
            double sum = 0, sum2 = 0, mx = 0;
            double gx = 0, gy = 0;
            for (size_t y = cy * 16; y < cy * 16 + 16; ++y)
                for (size_t x = cx * 16; x < cx * 16 + 16; ++x) {
                    double v = img.at(y, x);
                    sum += v;
                    sum2 += v * v;
                    mx = std::max(mx, v);
                    if (x + 1 < cx * 16 + 16) gx += std::fabs(double(img.at(y, x + 1)) - v);
                    if (y + 1 < cy * 16 + 16) gy += std::fabs(double(img.at(y + 1, x)) - v);
                }
            double n = 256.0;
            double mean = sum / n;
            double var = std::max(sum2 / n - mean * mean, 0.0);
            d[idx++] = mean;
            d[idx++] = std::sqrt(var);
            d[idx++] = mx;
            d[idx++] = gx / (16.0 * 15.0);
            d[idx++] = gy / (16.0 * 15.0);
        }

    // 8x8 box means
    for (size_t by = 0; by < 8; ++by)
        for (size_t bx = 0; bx < 8; ++bx) {
            double sum = 0;
            for (size_t y = by * 8; y < by * 8 + 8; ++y)
                for (size_t x = bx * 8; x < bx * 8 + 8; ++x) sum += img.at(y, x);
            d[idx++] = sum / 64.0;
        }

    // global 16-bin histogram
    for (size_t i = 0; i < img.pixels.size(); ++i) d[144 + img.pixels[i] / 16] += 1.0;
    for (size_t b = 0; b < 16; ++b) d[144 + b] /= double(img.pixels.size());

    // second moments of the bright-outlier intensity mass: rotation-invariant
    // shape-of-the-bright-stuff summary (covariance eigenvalues). The
    // threshold sits one global std above the mean so diffuse texture does
    // not lend its positions leverage over the moments.
    double mean_all = 0, var_all = 0;
    for (size_t i = 0; i < img.pixels.size(); ++i) mean_all += img.pixels[i];
    mean_all /= double(img.pixels.size());
    for (size_t i = 0; i < img.pixels.size(); ++i) {
        double c = double(img.pixels[i]) - mean_all;
        var_all += c * c;
    }
    double thresh = mean_all + std::sqrt(var_all / double(img.pixels.size()));
    double W = 0, mx2 = 0, my2 = 0;
    for (size_t y = 0; y < 64; ++y)
        for (size_t x = 0; x < 64; ++x) {
            double w = std::max(double(img.at(y, x)) - thresh, 0.0);
            W += w;
            mx2 += w * double(x);
            my2 += w * double(y);
        }
    if (W > 0.0) {
        double cx0 = mx2 / W, cy0 = my2 / W;
        double u20 = 0, u02 = 0, u11 = 0;
        for (size_t y = 0; y < 64; ++y)
            for (size_t x = 0; x < 64; ++x) {
                double w = std::max(double(img.at(y, x)) - thresh, 0.0);
                double dx2 = double(x) - cx0, dy2 = double(y) - cy0;
                u20 += w * dx2 * dx2;
                u02 += w * dy2 * dy2;
                u11 += w * dx2 * dy2;
            }
        u20 /= W;
        u02 /= W;
        u11 /= W;
        double tr = u20 + u02;
        double det = std::sqrt(std::max((u20 - u02) * (u20 - u02) / 4.0 + u11 * u11, 0.0));
        double l1 = tr / 2.0 + det, l2 = std::max(tr / 2.0 - det, 0.0);
        d[160] = std::sqrt(l1) / 32.0;
        d[161] = std::sqrt(l2) / 32.0;
        d[162] = tr > 0.0 ? (l1 - l2) / tr : 0.0;
        d[163] = W / (255.0 * double(img.pixels.size()));
    }
    return d;
}

EmbedderSpec EmbedderSpec::make(uint64_t seed, size_t dim) {
    if (dim == 0) throw ConfigError("embedder: dim must be >= 1");
    EmbedderSpec s;
    s.seed = seed;
    s.dim = dim;
    s.projection.resize(kDescriptorDim * dim);
    Rng rng(derive_seed(seed, 0xE3BED));
    double scale = 1.0 / std::sqrt(double(kDescriptorDim));
    for (double& v : s.projection) v = rng.normal() * scale; // row-major draw order
    for (auto& m : s.desc_mean) m.assign(kDescriptorDim, 0.0);
    for (auto& v : s.desc_std) v.assign(kDescriptorDim, 1.0);
    for (auto& m : s.mean) m.assign(dim, 0.0);
    for (auto& v : s.std) v.assign(dim, 1.0);
    return s;
}

std::vector<double> embed_patch_raw(const GrayImage& img, const EmbedderSpec& spec) {
    std::array<double, kDescriptorDim> desc = patch_descriptor(img);
    std::vector<double> out(spec.dim, 0.0);
    for (size_t i = 0; i < kDescriptorDim; ++i) {
        double v = desc[i];
        if (v == 0.0) continue;
        const double* row = spec.projection.data() + i * spec.dim;
        for (size_t j = 0; j < spec.dim; ++j) out[j] += v * row[j];
    }
    return out;
}

namespace {

// after per-dim standardization every block's total variance is its dim
// count; these weights equalize block energy so the small blocks are not
// drowned in the projection
double block_weight(size_t i) {
    if (i < 80) return 1.0 / std::sqrt(80.0);  // cell stats
    if (i < 144) return 1.0 / std::sqrt(64.0); // box means
    if (i < 160) return 1.0 / std::sqrt(16.0); // histogram
    return 1.0 / std::sqrt(4.0);               // bright-mass moments
}

std::vector<double> project_standardized(const std::array<double, kDescriptorDim>& desc,
                                         const EmbedderSpec& spec, size_t scale_idx) {
    std::vector<double> out(spec.dim, 0.0);
    for (size_t i = 0; i < kDescriptorDim; ++i) {
        double v = block_weight(i) * (desc[i] - spec.desc_mean[scale_idx][i]) /
                   spec.desc_std[scale_idx][i];
        if (v == 0.0) continue;
        const double* row = spec.projection.data() + i * spec.dim;
        for (size_t j = 0; j < spec.dim; ++j) out[j] += v * row[j];
    }
    return out;
}

} // namespace

std::vector<double> embed_patch(const GrayImage& img, const EmbedderSpec& spec, size_t scale_idx) {
    if (scale_idx > 2) throw ConfigError("embed: scale index out of range");
    std::vector<double> out = project_standardized(patch_descriptor(img), spec, scale_idx);
    for (size_t j = 0; j < spec.dim; ++j)
        out[j] = (out[j] - spec.mean[scale_idx][j]) / spec.std[scale_idx][j];
    return out;
}

FeatureSet embed_dataset(const DatasetManifest& manifest, EmbedderSpec& spec,
                         const std::string& out_path) {
    FeatureSet fs_out;
    fs_out.n = manifest.records.size();
    fs_out.dim = spec.dim;
    for (auto& f : fs_out.feats) f.resize(fs_out.n * spec.dim);
    fs_out.labels.reserve(fs_out.n);
    fs_out.region_ids.reserve(fs_out.n);

    std::array<std::vector<double>, 3> descs;
    for (auto& d : descs) d.resize(fs_out.n * kDescriptorDim);
    const std::string* paths[3];
    for (size_t i = 0; i < fs_out.n; ++i) {
        const PatchRecord& rec = manifest.records[i];
        paths[0] = &rec.path_s20;
        paths[1] = &rec.path_s10;
        paths[2] = &rec.path_s5;
        for (size_t s = 0; s < 3; ++s) {
            std::string full = (fs::path(manifest.dir) / *paths[s]).string();
            GrayImage img;
            try {
                img = read_pgm(full);
            } catch (const Error& e) {
                throw DataError(std::string("embed: bad patch file ") + full + ": " + e.what());
            }
            std::array<double, kDescriptorDim> d = patch_descriptor(img);
            std::copy(d.begin(), d.end(), descs[s].begin() + i * kDescriptorDim);
        }
        fs_out.labels.push_back(rec.label);
        fs_out.region_ids.push_back(rec.region_id);
    }

    // descriptor standardization statistics from the training split only
    size_t n_train = 0;
    for (const PatchRecord& rec : manifest.records)
        if (rec.split == Split::train) ++n_train;
    if (n_train == 0) throw DataError("embed: manifest has no training patches");
    for (size_t s = 0; s < 3; ++s) {
        std::vector<double>& dm = spec.desc_mean[s];
        std::vector<double>& ds = spec.desc_std[s];
        dm.assign(kDescriptorDim, 0.0);
        ds.assign(kDescriptorDim, 0.0);
        for (size_t i = 0; i < fs_out.n; ++i) {
            if (manifest.records[i].split != Split::train) continue;
            for (size_t j = 0; j < kDescriptorDim; ++j)
                dm[j] += descs[s][i * kDescriptorDim + j];
        }
        for (size_t j = 0; j < kDescriptorDim; ++j) dm[j] /= double(n_train);
        for (size_t i = 0; i < fs_out.n; ++i) {
            if (manifest.records[i].split != Split::train) continue;
            for (size_t j = 0; j < kDescriptorDim; ++j) {
                double c = descs[s][i * kDescriptorDim + j] - dm[j];
                ds[j] += c * c;
            }
        }
        for (size_t j = 0; j < kDescriptorDim; ++j)
            ds[j] = std::max(std::sqrt(ds[j] / double(n_train)), 1e-8);

        for (size_t i = 0; i < fs_out.n; ++i) {
            std::array<double, kDescriptorDim> d;
            std::copy(descs[s].begin() + i * kDescriptorDim,
                      descs[s].begin() + (i + 1) * kDescriptorDim, d.begin());
            std::vector<double> proj = project_standardized(d, spec, s);
            std::copy(proj.begin(), proj.end(), fs_out.feats[s].begin() + i * spec.dim);
        }
    }

    // projected-feature normalization statistics from the training split only
    for (size_t s = 0; s < 3; ++s) {
        std::vector<double>& mean = spec.mean[s];
        std::vector<double>& sd = spec.std[s];
        mean.assign(spec.dim, 0.0);
        sd.assign(spec.dim, 0.0);
        for (size_t i = 0; i < fs_out.n; ++i) {
            if (manifest.records[i].split != Split::train) continue;
            for (size_t j = 0; j < spec.dim; ++j) mean[j] += fs_out.feats[s][i * spec.dim + j];
        }
        for (size_t j = 0; j < spec.dim; ++j) mean[j] /= double(n_train);
        for (size_t i = 0; i < fs_out.n; ++i) {
            if (manifest.records[i].split != Split::train) continue;
            for (size_t j = 0; j < spec.dim; ++j) {
                double c = fs_out.feats[s][i * spec.dim + j] - mean[j];
                sd[j] += c * c;
            }
        }
        for (size_t j = 0; j < spec.dim; ++j) sd[j] = std::max(std::sqrt(sd[j] / double(n_train)), 1e-8);
        for (size_t i = 0; i < fs_out.n; ++i)
            for (size_t j = 0; j < spec.dim; ++j) {
                double& v = fs_out.feats[s][i * spec.dim + j];
                v = (v - mean[j]) / sd[j];
            }
    }

    if (!out_path.empty()) {
        std::vector<NamedTensor> ts;
        const char* names[3] = {"feat_s20", "feat_s10", "feat_s5"};
        for (size_t s = 0; s < 3; ++s)
            ts.push_back({names[s], {fs_out.n, spec.dim}, fs_out.feats[s]});
        std::vector<double> labels(fs_out.labels.begin(), fs_out.labels.end());
        std::vector<double> regions(fs_out.region_ids.begin(), fs_out.region_ids.end());
        ts.push_back({"labels", {fs_out.n}, std::move(labels)});
        ts.push_back({"region_ids", {fs_out.n}, std::move(regions)});
        write_container(out_path, ts);
    }
    return fs_out;
}

FeatureSet load_features(const std::string& path) {
    std::vector<NamedTensor> ts = read_container(path);
    FeatureSet out;
    const char* names[3] = {"feat_s20", "feat_s10", "feat_s5"};
    for (size_t s = 0; s < 3; ++s) {
        const NamedTensor& t = find_tensor(ts, names[s]);
        if (t.shape.size() != 2) throw DataError("features: bad rank for " + t.name);
        if (s == 0) {
            out.n = t.shape[0];
            out.dim = t.shape[1];
        } else if (t.shape[0] != out.n || t.shape[1] != out.dim) {
            throw DataError("features: inconsistent shapes across scales");
        }
        out.feats[s] = t.data;
    }
    const NamedTensor& labels = find_tensor(ts, "labels");
    const NamedTensor& regions = find_tensor(ts, "region_ids");
    if (labels.data.size() != out.n || regions.data.size() != out.n)
        throw DataError("features: labels/region_ids length mismatch");
    for (double v : labels.data) out.labels.push_back(int(v));
    for (double v : regions.data) out.region_ids.push_back(int(v));
    return out;
}

} // namespace csmil
