#include "codecs.hpp"

#include <bit>

#include "error.hpp"

namespace delog::codecs {

std::size_t elastic_size(std::uint64_t v) {
    int bits = v == 0 ? 1 : 64 - std::countl_zero(v);
    return static_cast<std::size_t>((bits + 6) / 7);
}

void elastic_append(bytes& out, std::uint64_t v) {
    std::size_t n = elastic_size(v);
    for (std::size_t i = n; i-- > 1;) {
        out.push_back(static_cast<char>((v >> (7 * i)) & 0x7F));
    }
    out.push_back(static_cast<char>(0x80 | (v & 0x7F)));
}

bytes elastic_encode(std::uint64_t v) {
    bytes out;
    elastic_append(out, v);
    return out;
}

std::uint64_t elastic_decode(ByteCursor& cur) {
    std::uint64_t v = 0;
    for (std::size_t n = 0; cur.pos < cur.data.size(); ++n) {
        if (n >= 10) raise(ErrorCode::Overflow, "varint longer than 10 bytes");
        if (v >> 57) raise(ErrorCode::Overflow, "varint exceeds 64 bits");
        auto b = static_cast<unsigned char>(cur.data[cur.pos++]);
        v = (v << 7) | (b & 0x7F);
        if (b & 0x80) return v;
    }
    raise(ErrorCode::UnterminatedVarint, "varint missing stop byte");
}

void delta_append(bytes& out, std::span<const std::uint64_t> values) {
    if (values.empty()) return;
    elastic_append(out, values[0]);
    for (std::size_t i = 1; i < values.size(); ++i) {
        auto d = static_cast<std::int64_t>(values[i]) - static_cast<std::int64_t>(values[i - 1]);
        elastic_append(out, zigzag(d));
    }
}

bytes delta_encode(std::span<const std::uint64_t> values) {
    bytes out;
    delta_append(out, values);
    return out;
}

std::uint64_t DeltaCursor::next() {
    std::uint64_t raw = elastic_decode(cur_);
    if (first_) {
        first_ = false;
        prev_ = raw;
    } else {
        prev_ = static_cast<std::uint64_t>(static_cast<std::int64_t>(prev_) + unzigzag(raw));
    }
    return prev_;
}

std::vector<std::uint64_t> delta_decode(ByteCursor& cur, std::size_t count) {
    std::vector<std::uint64_t> out;
    out.reserve(count);
    std::uint64_t prev = 0;
    for (std::size_t i = 0; i < count; ++i) {
        std::uint64_t raw = elastic_decode(cur);
        prev = i == 0 ? raw
                      : static_cast<std::uint64_t>(static_cast<std::int64_t>(prev) + unzigzag(raw));
        out.push_back(prev);
    }
    return out;
}

std::vector<std::uint64_t> delta_decode(bytes_view encoded, std::size_t count) {
    ByteCursor cur{encoded};
    auto out = delta_decode(cur, count);
    if (!cur.done()) raise(ErrorCode::MalformedBlob, "trailing bytes after delta stream");
    return out;
}

std::uint32_t DictEncoder::add(bytes_view token) {
    ++occurrences_;
    if (slots_.empty()) slots_.resize(16);
    const std::size_t mask = slots_.size() - 1;
    std::size_t i = std::hash<bytes_view>{}(token) & mask;
    std::uint32_t id;
    for (;;) {
        const Slot& s = slots_[i];
        if (s.off == 0) {
            // First appearance: the key goes into the blob, the slot records
            // where. Offsets are 32-bit, which caps one group's distinct keys
            // at 4 GiB of blob; refuse rather than wrap.
            if (token.size() > UINT32_MAX ||
                keys_blob_.size() + token.size() + 10 > UINT32_MAX)
                raise(ErrorCode::Overflow, "dictionary blob too large");
            id = static_cast<std::uint32_t>(distinct_);
            reserve_snug(keys_blob_, token.size() + 10);
            elastic_append(keys_blob_, token.size());
            const auto off = static_cast<std::uint32_t>(keys_blob_.size());
            keys_blob_.append(token);
            slots_[i] = Slot{off, static_cast<std::uint32_t>(token.size()), id};
            ++distinct_;
            // Grow at 7/10 load so probe runs stay short.
            if (distinct_ * 10 >= slots_.size() * 7) grow();
            break;
        }
        if (s.len == token.size() && key_at(s) == token) {
            id = s.id;
            break;
        }
        i = (i + 1) & mask;
    }
    reserve_snug(ids_blob_, 10);
    elastic_append(ids_blob_, id);
    return id;
}

void DictEncoder::grow() {
    std::vector<Slot> old = std::move(slots_);
    slots_.assign(old.size() * 2, Slot{});
    const std::size_t mask = slots_.size() - 1;
    for (const Slot& s : old) {
        if (s.off == 0) continue;
        std::size_t i = std::hash<bytes_view>{}(key_at(s)) & mask;
        while (slots_[i].off != 0) i = (i + 1) & mask;
        slots_[i] = s;
    }
}

DictBlobs dict_encode(std::span<const bytes> tokens) {
    DictEncoder enc;
    for (const auto& t : tokens) enc.add(t);
    return DictBlobs{enc.take_keys_blob(), enc.take_ids_blob()};
}

std::vector<bytes> dict_keys_decode(bytes_view keys_blob) {
    std::vector<bytes> keys;
    ByteCursor cur{keys_blob};
    while (!cur.done()) {
        std::uint64_t len = elastic_decode(cur);
        if (len > cur.remaining()) raise(ErrorCode::MalformedBlob, "dictionary key truncated");
        keys.emplace_back(cur.data.substr(cur.pos, len));
        cur.pos += len;
    }
    return keys;
}

std::vector<bytes> dict_decode(bytes_view keys_blob, bytes_view ids_blob) {
    auto keys = dict_keys_decode(keys_blob);
    std::vector<bytes> out;
    ByteCursor cur{ids_blob};
    while (!cur.done()) {
        std::uint64_t id = elastic_decode(cur);
        if (id >= keys.size()) raise(ErrorCode::MalformedBlob, "dictionary id out of range");
        out.push_back(keys[id]);
    }
    return out;
}

}  // namespace delog::codecs
