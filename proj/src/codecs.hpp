#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "bytes.hpp"

namespace delog::codecs {

// Variable-length integer code. The value is split into minimal-length 7-bit
// groups, most significant group first; every byte carries a group in its low
// bits and the final byte is marked by a set high bit (the stop bit).
// 12 -> 0x8C, 0 -> 0x80, 300 -> 0x02 0xAC.
void elastic_append(bytes& out, std::uint64_t v);
bytes elastic_encode(std::uint64_t v);
std::uint64_t elastic_decode(ByteCursor& cur);

// Encoded byte length of v without materializing the encoding.
std::size_t elastic_size(std::uint64_t v);

// Maps signed deltas onto non-negative integers: 2d for d >= 0, -2d-1 otherwise.
inline std::uint64_t zigzag(std::int64_t d) {
    return (static_cast<std::uint64_t>(d) << 1) ^ static_cast<std::uint64_t>(d >> 63);
}
inline std::int64_t unzigzag(std::uint64_t u) {
    return static_cast<std::int64_t>(u >> 1) ^ -static_cast<std::int64_t>(u & 1);
}

// Delta stream: elastic(first), then elastic(zigzag(v[i] - v[i-1])) for the
// rest. Values must stay below 2^63 so the signed difference cannot overflow.
void delta_append(bytes& out, std::span<const std::uint64_t> values);
bytes delta_encode(std::span<const std::uint64_t> values);
std::vector<std::uint64_t> delta_decode(ByteCursor& cur, std::size_t count);
std::vector<std::uint64_t> delta_decode(bytes_view encoded, std::size_t count);

// Incremental decoder for one delta stream; used by the token reconstructor
// which interleaves reads across many streams.
class DeltaCursor {
  public:
    DeltaCursor() = default;
    explicit DeltaCursor(bytes_view encoded) : cur_{encoded} {}

    bool done() const { return cur_.done(); }
    std::uint64_t next();

  private:
    ByteCursor cur_;
    std::uint64_t prev_ = 0;
    bool first_ = true;
};

// Incremental encoder for one delta stream, the counterpart of DeltaCursor.
// Produces the same bytes as delta_append over the full value sequence while
// holding only the encoded stream and the previous value.
class DeltaAppender {
  public:
    void add(std::uint64_t v) {
        if (first_) {
            elastic_append(out_, v);
            first_ = false;
        } else {
            elastic_append(out_, zigzag(static_cast<std::int64_t>(v) -
                                        static_cast<std::int64_t>(prev_)));
        }
        prev_ = v;
    }

    const bytes& stream() const { return out_; }
    bytes take() { return std::move(out_); }

  private:
    bytes out_;
    std::uint64_t prev_ = 0;
    bool first_ = true;
};

// Dictionary code. Distinct tokens get dense ids in first-appearance order.
// Keys blob: elastic(length) + bytes per distinct token. Ids blob: elastic id
// per occurrence. Each distinct key is stored once, in the blob itself; the
// lookup table is a flat open-addressed array of blob offsets, so the whole
// encoder is three buffers with no per-key nodes.
class DictEncoder {
  public:
    std::uint32_t add(bytes_view token);

    std::size_t distinct() const { return distinct_; }
    std::size_t occurrences() const { return occurrences_; }

    const bytes& keys_blob() const { return keys_blob_; }
    const bytes& ids_blob() const { return ids_blob_; }

    bytes take_keys_blob() { return std::move(keys_blob_); }
    bytes take_ids_blob() { return std::move(ids_blob_); }

  private:
    struct Slot {
        std::uint32_t off = 0;  // key bytes start in keys_blob_; 0 marks empty
        std::uint32_t len = 0;
        std::uint32_t id = 0;
    };

    bytes_view key_at(const Slot& s) const { return bytes_view(keys_blob_).substr(s.off, s.len); }
    void grow();

    std::vector<Slot> slots_;
    std::size_t distinct_ = 0;
    std::size_t occurrences_ = 0;
    bytes keys_blob_;
    bytes ids_blob_;
};

struct DictBlobs {
    bytes keys;
    bytes ids;
};

DictBlobs dict_encode(std::span<const bytes> tokens);
std::vector<bytes> dict_keys_decode(bytes_view keys_blob);
std::vector<bytes> dict_decode(bytes_view keys_blob, bytes_view ids_blob);

}  // namespace delog::codecs
