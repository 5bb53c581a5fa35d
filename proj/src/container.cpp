#include "csmil/container.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "csmil/common.hpp"

namespace csmil {

namespace {

void put_u16(std::string& out, uint16_t v) {
    out.push_back(char(v & 0xff));
    out.push_back(char(v >> 8));
}

void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

struct Reader {
    const std::string& buf;
    size_t pos = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw DataError("container parse error at offset " + std::to_string(pos) + ": " + what);
    }
    void need(size_t n) const {
        if (pos + n > buf.size()) fail("truncated (need " + std::to_string(n) + " bytes)");
    }
    uint8_t u8() {
        need(1);
        return uint8_t(buf[pos++]);
    }
    uint16_t u16() {
        need(2);
        uint16_t v = uint16_t(uint8_t(buf[pos])) | uint16_t(uint8_t(buf[pos + 1])) << 8;
        pos += 2;
        return v;
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= uint32_t(uint8_t(buf[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
};

} // namespace

void write_container(const std::string& path, const std::vector<NamedTensor>& tensors) {
    if (tensors.size() > 0xffff) throw DataError("container: too many entries");
    std::string out;
    out += "CSML";
    put_u16(out, kContainerVersion);
    put_u16(out, uint16_t(tensors.size()));
    for (const NamedTensor& t : tensors) {
        if (t.name.size() > 0xffff) throw DataError("container: name too long: " + t.name);
        if (t.shape.size() > 0xff) throw DataError("container: rank too large for " + t.name);
        if (t.count() != t.data.size())
            throw DataError("container: shape/data mismatch for " + t.name);
        put_u16(out, uint16_t(t.name.size()));
        out += t.name;
        out.push_back(char(uint8_t(t.shape.size())));
        for (size_t d : t.shape) put_u32(out, uint32_t(d));
        size_t off = out.size();
        out.resize(off + t.data.size() * 8);
        std::memcpy(out.data() + off, t.data.data(), t.data.size() * 8);
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot open for write: " + path);
    f.write(out.data(), std::streamsize(out.size()));
    if (!f) throw DataError("write failed: " + path);
}

std::vector<NamedTensor> read_container(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open: " + path);
    std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    Reader r{buf};
    r.need(4);
    if (buf.compare(0, 4, "CSML") != 0) r.fail("bad magic");
    r.pos = 4;
    uint16_t version = r.u16();
    if (version != kContainerVersion) r.fail("unsupported version " + std::to_string(version));
    uint16_t count = r.u16();
    std::vector<NamedTensor> out;
    out.reserve(count);
    for (uint16_t i = 0; i < count; ++i) {
        NamedTensor t;
        uint16_t nlen = r.u16();
        r.need(nlen);
        t.name.assign(buf, r.pos, nlen);
        r.pos += nlen;
        uint8_t rank = r.u8();
        size_t n = 1;
        for (uint8_t d = 0; d < rank; ++d) {
            uint32_t dim = r.u32();
            t.shape.push_back(dim);
            n *= dim;
        }
        r.need(n * 8);
        t.data.resize(n);
        std::memcpy(t.data.data(), buf.data() + r.pos, n * 8);
        r.pos += n * 8;
        out.push_back(std::move(t));
    }
    return out;
}

const NamedTensor& find_tensor(const std::vector<NamedTensor>& ts, const std::string& name) {
    for (const NamedTensor& t : ts)
        if (t.name == name) return t;
    throw DataError("container: missing tensor '" + name + "'");
}

} // namespace csmil
