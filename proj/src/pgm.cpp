#include "csmil/pgm.hpp"

#include <fstream>

#include "csmil/common.hpp"

namespace csmil {

void write_pgm(const std::string& path, const GrayImage& img) {
    if (img.pixels.size() != img.width * img.height)
        throw DataError("pgm: pixel buffer does not match dimensions for " + path);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("pgm: cannot open for write: " + path);
    f << "P5\n" << img.width << " " << img.height << "\n255\n";
    f.write(reinterpret_cast<const char*>(img.pixels.data()), std::streamsize(img.pixels.size()));
    if (!f) throw DataError("pgm: write failed: " + path);
}

namespace {

// Skips whitespace and '#' comment lines between header tokens.
int next_token_int(std::istream& in, const std::string& path) {
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (!isspace(c)) {
            break;
        }
        c = in.get();
    }
    if (c == EOF || !isdigit(c)) throw DataError("pgm: malformed header in " + path);
    int v = 0;
    while (c != EOF && isdigit(c)) {
        v = v * 10 + (c - '0');
        c = in.get();
    }
    return v;
}

} // namespace

GrayImage read_pgm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("pgm: cannot open: " + path);
    char m0 = 0, m1 = 0;
    f.get(m0);
    f.get(m1);
    if (m0 != 'P' || m1 != '5') throw DataError("pgm: not a binary PGM (P5): " + path);
    GrayImage img;
    img.width = size_t(next_token_int(f, path));
    img.height = size_t(next_token_int(f, path));
    int maxval = next_token_int(f, path);
    if (maxval != 255) throw DataError("pgm: unsupported maxval in " + path);
    img.pixels.resize(img.width * img.height);
    f.read(reinterpret_cast<char*>(img.pixels.data()), std::streamsize(img.pixels.size()));
    if (size_t(f.gcount()) != img.pixels.size())
        throw DataError("pgm: truncated pixel data in " + path);
    return img;
}

} // namespace csmil
