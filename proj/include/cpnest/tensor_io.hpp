#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "cpnest/tensor.hpp"

// Tensor file format "cpnest-tensor v1": three text header lines (magic,
// mode count, space-separated extents) followed by the values as raw
// little-endian IEEE-754 doubles in storage order (first index fastest).
// Round trips are bit-exact.

namespace cpnest {

struct TensorIoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
/// Malformed or inconsistent header.
struct TensorHeaderError : TensorIoError {
    using TensorIoError::TensorIoError;
};
/// Payload shorter or longer than the header promises.
struct TensorTruncatedError : TensorIoError {
    using TensorIoError::TensorIoError;
};
/// Non-finite values in the payload (or in a tensor being saved).
struct TensorValueError : TensorIoError {
    using TensorIoError::TensorIoError;
};

namespace detail {

inline void swap_to_little_endian(double* data, Index n) {
    if constexpr (std::endian::native == std::endian::big) {
        for (Index i = 0; i < n; ++i) {
            std::uint64_t bits;
            std::memcpy(&bits, data + i, 8);
            bits = __builtin_bswap64(bits);
            std::memcpy(data + i, &bits, 8);
        }
    } else {
        (void)data;
        (void)n;
    }
}

}  // namespace detail

inline void save_tensor(const DenseTensor& t, const std::filesystem::path& path) {
    if (!t.all_finite()) throw TensorValueError("refusing to save tensor with non-finite values");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw TensorIoError("cannot open for writing: " + path.string());
    out << "cpnest-tensor v1\n" << t.order() << "\n";
    for (int m = 0; m < t.order(); ++m) {
        if (m) out << ' ';
        out << t.extent(m);
    }
    out << '\n';
    Vector payload = t.values;
    detail::swap_to_little_endian(payload.data(), payload.size());
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size() * sizeof(double)));
    if (!out) throw TensorIoError("write failed: " + path.string());
}

inline DenseTensor load_tensor(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw TensorIoError("cannot open for reading: " + path.string());

    std::string magic;
    if (!std::getline(in, magic) || magic != "cpnest-tensor v1")
        throw TensorHeaderError("bad magic line in " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw TensorHeaderError("missing mode-count line");
    long n_modes = 0;
    {
        std::istringstream ss(line);
        if (!(ss >> n_modes) || !(ss >> std::ws).eof() || n_modes < 2)
            throw TensorHeaderError("bad mode count: " + line);
    }

    if (!std::getline(in, line)) throw TensorHeaderError("missing extents line");
    std::vector<Index> shape;
    {
        std::istringstream ss(line);
        long extent;
        while (ss >> extent) {
            if (extent < 1) throw TensorHeaderError("non-positive extent");
            shape.push_back(extent);
        }
        if (!ss.eof()) throw TensorHeaderError("bad extents line: " + line);
    }
    if (static_cast<long>(shape.size()) != n_modes)
        throw TensorHeaderError("extent count does not match declared mode count");

    Index total = 1;
    for (Index e : shape) total *= e;
    Vector values(total);
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(total * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(total * sizeof(double)))
        throw TensorTruncatedError("payload shorter than header promises: " + path.string());
    char extra;
    if (in.read(&extra, 1); in.gcount() != 0)
        throw TensorTruncatedError("payload longer than header promises: " + path.string());
    detail::swap_to_little_endian(values.data(), values.size());
    if (!values.allFinite()) throw TensorValueError("non-finite values in " + path.string());
    return DenseTensor(std::move(shape), std::move(values));
}

}  // namespace cpnest
