#pragma once

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "qsynth/epoch.hpp"
#include "qsynth/errors.hpp"

namespace qsynth::data {

// EPO1 epoch file, little-endian throughout:
//   offset 0   4 bytes  magic "EPO1"
//   offset 4   u32      n (epochs)
//   offset 8   u32      C (channels)
//   offset 12  u32      T (samples per channel)
//   offset 16  n*C*T    IEEE-754 binary32 values, [epoch][channel][time]
//   then       n        i32 labels, -1 = unlabeled
// Total length 16 + 4*n*C*T + 4*n bytes.

inline constexpr char kEpochMagic[4] = {'E', 'P', 'O', '1'};

inline constexpr std::uint64_t epoch_file_size(std::uint64_t n, std::uint64_t channels, std::uint64_t samples) {
    return 16 + 4 * n * channels * samples + 4 * n;
}

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[at + i]) << (8 * i);
    return v;
}

inline std::uint32_t checked_u32(std::size_t v, const char* what) {
    if (v > std::numeric_limits<std::uint32_t>::max()) {
        throw InvalidArgument(std::string("epoch file: ") + what + " does not fit in 32 bits");
    }
    return static_cast<std::uint32_t>(v);
}

}  // namespace detail

/// Serializes `set`; values are narrowed to binary32.
inline std::vector<std::uint8_t> encode_epochs(const LabeledSet& set) {
    const Shape shape = set.shape();
    std::vector<std::uint8_t> out;
    out.reserve(epoch_file_size(set.size(), shape.channels, shape.samples));
    out.insert(out.end(), std::begin(kEpochMagic), std::end(kEpochMagic));
    detail::put_u32(out, detail::checked_u32(set.size(), "epoch count"));
    detail::put_u32(out, detail::checked_u32(shape.channels, "channel count"));
    detail::put_u32(out, detail::checked_u32(shape.samples, "sample count"));
    for (const Epoch& e : set.epochs()) {
        for (double v : e.values()) {
            if (!std::isfinite(v)) throw InvalidArgument("epoch file: non-finite value");
            detail::put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
        }
    }
    for (Label y : set.labels()) detail::put_u32(out, std::bit_cast<std::uint32_t>(static_cast<std::int32_t>(y)));
    return out;
}

inline LabeledSet decode_epochs(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4) throw MalformedFile("epoch file: truncated magic", bytes.size());
    if (!std::equal(std::begin(kEpochMagic), std::end(kEpochMagic), bytes.begin())) {
        throw MalformedFile("epoch file: bad magic", 0);
    }
    if (bytes.size() < 16) throw MalformedFile("epoch file: truncated header", bytes.size());
    const std::uint64_t n = detail::get_u32(bytes, 4);
    const std::uint64_t channels = detail::get_u32(bytes, 8);
    const std::uint64_t samples = detail::get_u32(bytes, 12);
    if (n > 0 && (channels == 0 || samples == 0)) throw MalformedFile("epoch file: empty epoch shape", 8);

    const unsigned __int128 total = 16 + 4 * (static_cast<unsigned __int128>(n) * channels * samples) + 4 * n;
    if (total > static_cast<unsigned __int128>(std::numeric_limits<std::int64_t>::max())) {
        throw MalformedFile("epoch file: shape overflow", 4);
    }
    const auto expected = static_cast<std::uint64_t>(total);
    if (bytes.size() < expected) throw MalformedFile("epoch file: truncated payload", bytes.size());
    if (bytes.size() > expected) throw MalformedFile("epoch file: trailing bytes", expected);

    const Shape shape{static_cast<std::size_t>(channels), static_cast<std::size_t>(samples)};
    std::vector<Epoch> epochs;
    epochs.reserve(n);
    std::size_t at = 16;
    for (std::uint64_t i = 0; i < n; ++i) {
        std::vector<double> values(shape.size());
        for (double& v : values) {
            const float f = std::bit_cast<float>(detail::get_u32(bytes, at));
            if (!std::isfinite(f)) throw MalformedFile("epoch file: non-finite value", at);
            v = f;
            at += 4;
        }
        epochs.emplace_back(shape, std::move(values));
    }
    std::vector<Label> labels;
    labels.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i, at += 4) {
        labels.push_back(std::bit_cast<std::int32_t>(detail::get_u32(bytes, at)));
    }
    return LabeledSet(std::move(epochs), std::move(labels));
}

inline void write_epochs(const std::string& path, const LabeledSet& set) {
    const auto bytes = encode_epochs(set);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("failed writing '" + path + "'");
}

inline LabeledSet read_epochs(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_epochs(bytes);
}

}  // namespace qsynth::data
