// Deliberately naive reference codecs used to cross-check the production
// implementations. These take different computational routes on purpose:
// the varint reference works on explicit bit strings, the delta reference
// uses arithmetic zigzag, the dictionary reference uses linear scans.
#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace refimpl {

// Variable-length integer: binary string, left-padded to a multiple of 7,
// split into 7-bit groups, high bit set on the final byte.
inline std::string elastic_encode(std::uint64_t value) {
    std::string bits;
    if (value == 0) bits = "0";
    for (std::uint64_t v = value; v != 0; v >>= 1) bits.push_back(char('0' + (v & 1)));
    std::reverse(bits.begin(), bits.end());
    while (bits.size() % 7 != 0) bits.insert(bits.begin(), '0');
    std::string out;
    for (std::size_t g = 0; g < bits.size(); g += 7) {
        unsigned byte = 0;
        for (std::size_t i = 0; i < 7; ++i) byte = byte * 2 + unsigned(bits[g + i] - '0');
        if (g + 7 == bits.size()) byte |= 0x80u;
        out.push_back(char(byte));
    }
    return out;
}

inline std::uint64_t elastic_decode(const std::string& data, std::size_t& pos) {
    std::string bits;
    while (true) {
        if (pos >= data.size()) throw std::runtime_error("ref: unterminated varint");
        const unsigned byte = static_cast<unsigned char>(data[pos++]);
        for (int i = 6; i >= 0; --i) bits.push_back(char('0' + ((byte >> i) & 1)));
        if (byte & 0x80u) break;
    }
    const std::size_t first_one = bits.find('1');
    const std::size_t meaningful = first_one == std::string::npos ? 0 : bits.size() - first_one;
    if (meaningful > 64) throw std::runtime_error("ref: varint overflow");
    std::uint64_t value = 0;
    for (char bit : bits) value = (value << 1) | std::uint64_t(bit - '0');
    return value;
}

// Zigzag by arithmetic cases rather than bit tricks. Diffs are computed in
// unsigned space where wraparound matches two's complement subtraction.
inline std::uint64_t zigzag(std::int64_t n) {
    if (n >= 0) return std::uint64_t(n) * 2;
    return std::uint64_t(-(n + 1)) * 2 + 1;
}

inline std::string delta_encode(const std::vector<std::uint64_t>& values) {
    if (values.empty()) return {};
    std::string out = elastic_encode(values[0]);
    for (std::size_t i = 1; i < values.size(); ++i) {
        const std::uint64_t diff = values[i] - values[i - 1];
        out += elastic_encode(zigzag(static_cast<std::int64_t>(diff)));
    }
    return out;
}

inline std::vector<std::uint64_t> delta_decode(const std::string& data, std::size_t count) {
    std::vector<std::uint64_t> out;
    if (count == 0) return out;
    std::size_t pos = 0;
    out.push_back(elastic_decode(data, pos));
    while (out.size() < count) {
        const std::uint64_t z = elastic_decode(data, pos);
        const std::int64_t diff = (z % 2 == 0) ? std::int64_t(z / 2)
                                               : -std::int64_t(z / 2) - 1;
        out.push_back(out.back() + std::uint64_t(diff));
    }
    if (pos != data.size()) throw std::runtime_error("ref: trailing delta bytes");
    return out;
}

struct DictRef {
    std::vector<std::string> keys;  // first-appearance order
    std::vector<std::size_t> ids;   // one per occurrence
};

inline DictRef dict_encode(const std::vector<std::string>& tokens) {
    DictRef ref;
    for (const std::string& token : tokens) {
        auto it = std::find(ref.keys.begin(), ref.keys.end(), token);
        if (it == ref.keys.end()) {
            ref.ids.push_back(ref.keys.size());
            ref.keys.push_back(token);
        } else {
            ref.ids.push_back(std::size_t(it - ref.keys.begin()));
        }
    }
    return ref;
}

inline std::string dict_keys_blob(const DictRef& ref) {
    std::string out;
    for (const std::string& key : ref.keys) {
        out += elastic_encode(key.size());
        out += key;
    }
    return out;
}

inline std::string dict_ids_blob(const DictRef& ref) {
    std::string out;
    for (std::size_t id : ref.ids) out += elastic_encode(id);
    return out;
}

}  // namespace refimpl
