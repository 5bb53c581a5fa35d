#pragma once

#include <string>
#include <vector>

namespace csmil {

// One named tensor in a .csml container file.
//
// File layout (all integers little-endian):
//   magic "CSML", format version u16, entry count u16;
//   per entry: name length u16, name bytes, rank u8, dims as u32s,
//   payload as little-endian f64 row-major.
struct NamedTensor {
    std::string name;
    std::vector<size_t> shape;
    std::vector<double> data;

    size_t count() const {
        size_t n = 1;
        for (size_t d : shape) n *= d;
        return n;
    }
};

constexpr uint16_t kContainerVersion = 1;

void write_container(const std::string& path, const std::vector<NamedTensor>& tensors);

// Throws DataError with the byte offset of the first malformed field.
std::vector<NamedTensor> read_container(const std::string& path);

// Lookup by name; throws DataError if absent.
const NamedTensor& find_tensor(const std::vector<NamedTensor>& ts, const std::string& name);

} // namespace csmil
