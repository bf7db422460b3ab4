#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace delog {

// Byte buffers are std::string throughout: contents are raw bytes, not text.
using bytes = std::string;
using bytes_view = std::string_view;

// Makes room for `incoming` more bytes while capping growth at ~12% over
// what is needed. Append-heavy block-scale buffers would otherwise double,
// and the overshoot dominates a streaming pipeline's footprint.
inline void reserve_snug(bytes& buf, std::size_t incoming) {
    const std::size_t need = buf.size() + incoming;
    if (need > buf.capacity()) buf.reserve(need + need / 8);
}

// Read cursor over an immutable byte span.
struct ByteCursor {
    bytes_view data;
    std::size_t pos = 0;

    bool done() const { return pos >= data.size(); }
    std::size_t remaining() const { return data.size() - pos; }
};

inline bool is_ascii_digit(unsigned char b) { return b >= '0' && b <= '9'; }
inline bool is_ascii_letter(unsigned char b) {
    return (b >= 'A' && b <= 'Z') || (b >= 'a' && b <= 'z');
}

}  // namespace delog
