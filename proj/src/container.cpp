#include "container.hpp"

#include <algorithm>
#include <cstring>
#include <istream>
#include <ostream>

#include "codecs.hpp"
#include "error.hpp"

namespace delog {

using codecs::elastic_append;
using codecs::elastic_decode;

namespace {

enum PresenceBit : unsigned {
    kHasCtx = 1u << 0,
    kHasIdx = 1u << 1,
    kHasLen = 1u << 2,
    kHasShape = 1u << 3,
    kHasSpecial = 1u << 4,
    kHasName = 1u << 5,
    kPresenceMask = (1u << 6) - 1,
};

void append_blob(bytes& out, bytes_view blob) {
    elastic_append(out, blob.size());
    out.append(blob);
}

bytes_view read_blob(ByteCursor& cur, const char* what) {
    const std::uint64_t len = elastic_decode(cur);
    if (len > cur.remaining()) raise(ErrorCode::MalformedTable, bytes(what) + " truncated");
    bytes_view view = cur.data.substr(cur.pos, len);
    cur.pos += len;
    return view;
}

void append_shape(bytes& out, const RunShape& shape) {
    elastic_append(out, shape.runs.size());
    append_blob(out, shape.lead);
    for (std::size_t i = 0; i < shape.runs.size(); ++i) {
        elastic_append(out, shape.runs[i]);
        if (i + 1 < shape.runs.size()) append_blob(out, shape.literal_specials[i]);
    }
    append_blob(out, shape.trail);
}

RunShape read_shape(ByteCursor& cur) {
    RunShape shape;
    const std::uint64_t run_count = elastic_decode(cur);
    if (run_count == 0) raise(ErrorCode::MalformedTable, "run shape without digit runs");
    if (run_count > cur.remaining()) raise(ErrorCode::MalformedTable, "run shape truncated");
    shape.lead.assign(read_blob(cur, "shape lead"));
    shape.runs.reserve(run_count);
    for (std::uint64_t i = 0; i < run_count; ++i) {
        const std::uint64_t run = elastic_decode(cur);
        if (run == 0 || run > 0xFFFFFFFFu) raise(ErrorCode::MalformedTable, "bad digit run length");
        shape.runs.push_back(static_cast<std::uint32_t>(run));
        if (i + 1 < run_count) {
            bytes_view lit = read_blob(cur, "shape literal");
            if (lit.empty()) raise(ErrorCode::MalformedTable, "empty literal between digit runs");
            shape.literal_specials.emplace_back(lit);
        }
    }
    shape.trail.assign(read_blob(cur, "shape trail"));
    return shape;
}

void validate_fields(const PatternSignature& sig) {
    const auto fail = [](const char* msg) { raise(ErrorCode::MalformedTable, msg); };
    switch (sig.category) {
        case PatternCategory::ShortPureNumeric:
            if (!sig.has_len || sig.has_idx || sig.has_ctx || sig.has_shape || sig.has_special ||
                !sig.named.empty())
                fail("bad field set for short numeric signature");
            if (sig.len == 0 || sig.len > 2) fail("short numeric length out of range");
            break;
        case PatternCategory::LongPureNumeric:
            if (!sig.has_len || sig.has_shape || sig.has_special || !sig.named.empty())
                fail("bad field set for long numeric signature");
            if (sig.has_idx != sig.has_ctx) fail("index and context must appear together");
            if (sig.len <= 2) fail("long numeric length out of range");
            break;
        case PatternCategory::ComplexNumeric:
            if (!sig.has_shape || sig.has_len || sig.has_idx || sig.has_special ||
                !sig.named.empty())
                fail("bad field set for complex numeric signature");
            break;
        case PatternCategory::Alphanumeric:
            if (!sig.has_special || sig.has_len || sig.has_idx || sig.has_shape ||
                !sig.named.empty())
                fail("bad field set for alphanumeric signature");
            if (sig.special_sig.empty() || sig.special_sig[0] != '_')
                fail("alphanumeric specials must start with underscore");
            break;
        case PatternCategory::Named:
            if (sig.named.empty() || sig.has_len || sig.has_idx || sig.has_ctx || sig.has_special)
                fail("bad field set for named signature");
            if (sig.layout == NamedLayout::FixedRuns && !sig.has_shape)
                fail("fixed-runs signature without shape");
            if (sig.layout == NamedLayout::Octets4 && sig.has_shape)
                fail("octet signature with shape");
            break;
        case PatternCategory::AnyVariable:
            if (sig.has_len || sig.has_idx || sig.has_ctx || sig.has_shape || sig.has_special ||
                !sig.named.empty())
                fail("catch-all signature carries fields");
            break;
        case PatternCategory::Keyword:
            fail("keyword category in signature table");
    }
}

}  // namespace

bytes serialize_table(const SignatureTable& table) {
    bytes out;
    elastic_append(out, table.size());
    for (std::uint32_t id = 0; id < table.size(); ++id) {
        const PatternSignature& sig = table.at(id);
        out.push_back(static_cast<char>(sig.category));
        unsigned presence = 0;
        if (sig.has_ctx) presence |= kHasCtx;
        if (sig.has_idx) presence |= kHasIdx;
        if (sig.has_len) presence |= kHasLen;
        if (sig.has_shape) presence |= kHasShape;
        if (sig.has_special) presence |= kHasSpecial;
        if (!sig.named.empty()) presence |= kHasName;
        out.push_back(static_cast<char>(presence));
        if (sig.has_ctx) append_blob(out, sig.ctx);
        if (sig.has_idx) elastic_append(out, sig.idx);
        if (sig.has_len) elastic_append(out, sig.len);
        if (sig.has_shape) append_shape(out, sig.shape);
        if (sig.has_special) append_blob(out, sig.special_sig);
        if (!sig.named.empty()) {
            append_blob(out, sig.named);
            out.push_back(static_cast<char>(sig.layout));
        }
    }
    return out;
}

SignatureTable deserialize_table(bytes_view blob) {
    ByteCursor cur{blob};
    SignatureTable table;
    std::uint64_t count = 0;
    try {
        count = elastic_decode(cur);
        if (count > blob.size()) raise(ErrorCode::MalformedTable, "signature count implausible");
        for (std::uint64_t i = 0; i < count; ++i) {
            if (cur.remaining() < 2) raise(ErrorCode::MalformedTable, "signature entry truncated");
            const auto category = static_cast<unsigned char>(cur.data[cur.pos++]);
            const auto presence = static_cast<unsigned char>(cur.data[cur.pos++]);
            if (category == 0 || category > static_cast<unsigned>(PatternCategory::AnyVariable))
                raise(ErrorCode::MalformedTable, "unknown signature category");
            if (presence & ~kPresenceMask)
                raise(ErrorCode::MalformedTable, "reserved presence bits set");
            PatternSignature sig;
            sig.category = static_cast<PatternCategory>(category);
            if (presence & kHasCtx) {
                sig.has_ctx = true;
                sig.ctx.assign(read_blob(cur, "context"));
            }
            if (presence & kHasIdx) {
                sig.has_idx = true;
                const std::uint64_t idx = elastic_decode(cur);
                if (idx > 0xFFFFFFFFu) raise(ErrorCode::MalformedTable, "token index implausible");
                sig.idx = static_cast<std::uint32_t>(idx);
            }
            if (presence & kHasLen) {
                sig.has_len = true;
                sig.len = elastic_decode(cur);
            }
            if (presence & kHasShape) {
                sig.has_shape = true;
                sig.shape = read_shape(cur);
            }
            if (presence & kHasSpecial) {
                sig.has_special = true;
                sig.special_sig.assign(read_blob(cur, "specials"));
            }
            if (presence & kHasName) {
                sig.named.assign(read_blob(cur, "rule name"));
                if (sig.named.empty()) raise(ErrorCode::MalformedTable, "empty rule name");
                if (cur.done()) raise(ErrorCode::MalformedTable, "signature entry truncated");
                const auto layout = static_cast<unsigned char>(cur.data[cur.pos++]);
                if (layout > 1) raise(ErrorCode::MalformedTable, "unknown value layout");
                sig.layout = static_cast<NamedLayout>(layout);
            }
            validate_fields(sig);
            bytes key = sig.key();
            if (table.find(key)) raise(ErrorCode::MalformedTable, "duplicate signature");
            table.insert(std::move(key), std::move(sig));
        }
    } catch (const Error& e) {
        if (e.code() == ErrorCode::UnterminatedVarint || e.code() == ErrorCode::Overflow)
            raise(ErrorCode::MalformedTable, "signature table truncated");
        throw;
    }
    if (!cur.done()) raise(ErrorCode::MalformedTable, "trailing bytes after signature table");
    return table;
}

bytes serialize_index(std::span<const IndexEntry> entries) {
    bytes out;
    elastic_append(out, entries.size());
    for (const IndexEntry& e : entries) {
        elastic_append(out, e.sig_id);
        out.push_back(static_cast<char>(e.member));
        elastic_append(out, e.offset);
        elastic_append(out, e.length);
        elastic_append(out, e.count);
    }
    return out;
}

std::vector<IndexEntry> parse_index(bytes_view blob) {
    ByteCursor cur{blob};
    std::vector<IndexEntry> entries;
    try {
        const std::uint64_t count = elastic_decode(cur);
        if (count > blob.size()) raise(ErrorCode::MalformedIndex, "index count implausible");
        entries.reserve(count);
        for (std::uint64_t i = 0; i < count; ++i) {
            IndexEntry e;
            const std::uint64_t sig = elastic_decode(cur);
            if (sig > 0xFFFFFFFFu) raise(ErrorCode::MalformedIndex, "signature id implausible");
            e.sig_id = static_cast<std::uint32_t>(sig);
            if (cur.done()) raise(ErrorCode::MalformedIndex, "index entry truncated");
            e.member = static_cast<std::uint8_t>(cur.data[cur.pos++]);
            if (e.member >= kMemberCount) raise(ErrorCode::MalformedIndex, "bad member id");
            e.offset = elastic_decode(cur);
            e.length = elastic_decode(cur);
            e.count = elastic_decode(cur);
            entries.push_back(e);
        }
    } catch (const Error& e) {
        if (e.code() == ErrorCode::UnterminatedVarint || e.code() == ErrorCode::Overflow)
            raise(ErrorCode::MalformedIndex, "index truncated");
        throw;
    }
    if (!cur.done()) raise(ErrorCode::MalformedIndex, "trailing bytes after index");
    return entries;
}

ArchiveWriter::ArchiveWriter() {
    spool_ = std::tmpfile();
    if (!spool_) raise(ErrorCode::Io, "cannot create spool file");
}

ArchiveWriter::~ArchiveWriter() {
    if (spool_) std::fclose(spool_);
}

void ArchiveWriter::add_block(bytes_view compressed_payload) {
    bytes head;
    elastic_append(head, compressed_payload.size());
    if (std::fwrite(head.data(), 1, head.size(), spool_) != head.size() ||
        std::fwrite(compressed_payload.data(), 1, compressed_payload.size(), spool_) !=
            compressed_payload.size())
        raise(ErrorCode::Io, "spool write failed");
    spooled_ += head.size() + compressed_payload.size();
    ++blocks_;
}

std::uint64_t ArchiveWriter::finish(std::ostream& out, Mode mode, std::uint8_t kernel_id,
                                    bool trailing_newline) {
    bytes header(kMagic, sizeof kMagic);
    header.push_back(static_cast<char>(kFormatVersion));
    header.push_back(static_cast<char>(mode));
    header.push_back(static_cast<char>(kernel_id));
    header.push_back(static_cast<char>(trailing_newline ? 1 : 0));
    elastic_append(header, blocks_);
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    std::rewind(spool_);
    char buf[1 << 18];
    std::uint64_t copied = 0;
    while (copied < spooled_) {
        const std::size_t n = std::fread(buf, 1, sizeof buf, spool_);
        if (n == 0) raise(ErrorCode::Io, "spool read failed");
        out.write(buf, static_cast<std::streamsize>(n));
        copied += n;
    }
    out.flush();
    if (!out) raise(ErrorCode::Io, "archive write failed");
    return header.size() + spooled_;
}

namespace {

std::uint64_t elastic_decode_stream(std::istream& in, const char* what) {
    std::uint64_t v = 0;
    for (int n = 0; n < 10; ++n) {
        const int c = in.get();
        if (c == std::char_traits<char>::eof())
            raise(ErrorCode::TruncatedArchive, bytes(what) + " truncated");
        if (v >> 57) raise(ErrorCode::TruncatedArchive, bytes(what) + " implausible");
        v = v << 7 | static_cast<std::uint64_t>(c & 0x7F);
        if (c & 0x80) return v;
    }
    raise(ErrorCode::TruncatedArchive, bytes(what) + " implausible");
}

}  // namespace

ArchiveReader::ArchiveReader(std::istream& in) : in_(in) {
    char head[8];
    in_.read(head, sizeof head);
    if (in_.gcount() != sizeof head) raise(ErrorCode::TruncatedArchive, "archive header truncated");
    if (std::memcmp(head, kMagic, sizeof kMagic) != 0)
        raise(ErrorCode::BadMagic, "not an archive: bad magic");
    manifest_.version = static_cast<std::uint8_t>(head[4]);
    if (manifest_.version != kFormatVersion)
        raise(ErrorCode::UnsupportedVersion,
              "unsupported format version " + std::to_string(manifest_.version));
    const auto mode = static_cast<unsigned char>(head[5]);
    if (mode > 1) raise(ErrorCode::UnsupportedVersion, "unknown mode byte");
    manifest_.mode = static_cast<Mode>(mode);
    manifest_.kernel_id = static_cast<std::uint8_t>(head[6]);
    if (manifest_.kernel_id > 3) raise(ErrorCode::UnsupportedVersion, "unknown kernel id");
    const auto flags = static_cast<unsigned char>(head[7]);
    if (flags & ~1u) raise(ErrorCode::UnsupportedVersion, "reserved flag bits set");
    manifest_.trailing_newline = (flags & 1) != 0;
    manifest_.block_count = elastic_decode_stream(in_, "block count");
}

bool ArchiveReader::next_block(bytes& payload) {
    if (read_ == manifest_.block_count) {
        if (in_.peek() != std::char_traits<char>::eof())
            raise(ErrorCode::TruncatedArchive, "trailing bytes after final block");
        return false;
    }
    const std::uint64_t len = elastic_decode_stream(in_, "block length");
    payload.clear();
    std::uint64_t remaining = len;
    // Grow in bounded steps so a corrupted length fails on a short read
    // instead of one huge allocation.
    while (remaining > 0) {
        const auto chunk = static_cast<std::size_t>(std::min<std::uint64_t>(remaining, 1 << 24));
        const std::size_t old = payload.size();
        payload.resize(old + chunk);
        in_.read(payload.data() + old, static_cast<std::streamsize>(chunk));
        if (static_cast<std::size_t>(in_.gcount()) != chunk)
            raise(ErrorCode::TruncatedArchive, "block payload truncated");
        remaining -= chunk;
    }
    ++read_;
    return true;
}

}  // namespace delog
