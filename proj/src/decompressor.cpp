#include "decompressor.hpp"

#include <charconv>
#include <vector>

#include "codecs.hpp"
#include "container.hpp"
#include "error.hpp"
#include "grouper.hpp"
#include "scanner.hpp"
#include "signatures.hpp"

namespace delog {

using codecs::DeltaCursor;
using codecs::elastic_decode;

namespace {

// Reading state over one signature's encoded value regions.
struct ColumnCursor {
    bool numeric = false;
    std::uint32_t width = 0;
    DeltaCursor delta;
    bytes_view raw;
    std::size_t raw_pos = 0;
};

struct SigCursor {
    const PatternSignature* sig = nullptr;
    GroupKind kind = GroupKind::Dictionary;
    std::vector<ColumnCursor> cols;
    std::vector<bytes_view> dict_keys;
    ByteCursor dict_ids;
    std::uint64_t remaining = 0;
};

[[noreturn]] void corrupt(const char* msg) { raise(ErrorCode::MalformedStream, msg); }

std::uint64_t next_numeric(ColumnCursor& col) {
    if (col.delta.done()) raise(ErrorCode::GroupExhausted, "numeric stream exhausted");
    return col.delta.next();
}

bytes_view next_raw(ColumnCursor& col) {
    if (col.raw.size() - col.raw_pos < col.width)
        raise(ErrorCode::GroupExhausted, "raw digit stream exhausted");
    bytes_view v = col.raw.substr(col.raw_pos, col.width);
    col.raw_pos += col.width;
    return v;
}

// Renders v zero-padded to exactly `width` digits.
void append_padded(bytes& out, std::uint64_t v, std::uint32_t width) {
    char buf[20];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    const auto digits = static_cast<std::uint32_t>(end - buf);
    if (digits > width) corrupt("numeric value wider than its column");
    out.append(width - digits, '0');
    out.append(buf, end);
}

void reconstruct_token(SigCursor& sc, bytes& out) {
    if (sc.remaining == 0) raise(ErrorCode::GroupExhausted, "more placeholders than values");
    --sc.remaining;
    const PatternSignature& sig = *sc.sig;
    switch (sc.kind) {
        case GroupKind::RawDigits:
            out.append(next_raw(sc.cols[0]));
            break;
        case GroupKind::DeltaNumeric:
            append_padded(out, next_numeric(sc.cols[0]), static_cast<std::uint32_t>(sig.len));
            break;
        case GroupKind::RunColumns:
            out.append(sig.shape.lead);
            for (std::size_t i = 0; i < sc.cols.size(); ++i) {
                ColumnCursor& col = sc.cols[i];
                if (col.numeric) {
                    append_padded(out, next_numeric(col), col.width);
                } else {
                    out.append(next_raw(col));
                }
                if (i + 1 < sc.cols.size()) out.append(sig.shape.literal_specials[i]);
            }
            out.append(sig.shape.trail);
            break;
        case GroupKind::Octets4:
            for (int i = 0; i < 4; ++i) {
                const std::uint64_t octet = next_numeric(sc.cols[i]);
                if (octet > 255) corrupt("octet out of range");
                char buf[4];
                auto [end, ec] = std::to_chars(buf, buf + sizeof buf, octet);
                out.append(buf, end);
                if (i < 3) out.push_back('.');
            }
            break;
        case GroupKind::Dictionary: {
            if (sc.dict_ids.done()) raise(ErrorCode::GroupExhausted, "dictionary ids exhausted");
            const std::uint64_t id = elastic_decode(sc.dict_ids);
            if (id >= sc.dict_keys.size()) corrupt("dictionary id out of range");
            out.append(sc.dict_keys[id]);
            break;
        }
    }
}

std::vector<bytes_view> decode_key_views(bytes_view keys_blob) {
    std::vector<bytes_view> keys;
    ByteCursor cur{keys_blob};
    while (!cur.done()) {
        const std::uint64_t len = elastic_decode(cur);
        if (len > cur.remaining()) raise(ErrorCode::MalformedBlob, "dictionary key truncated");
        keys.push_back(cur.data.substr(cur.pos, len));
        cur.pos += len;
    }
    return keys;
}

bytes_view member_slice(bytes_view member, const IndexEntry& e, const char* what) {
    if (e.offset > member.size() || e.length > member.size() - e.offset)
        raise(ErrorCode::MalformedIndex, bytes(what) + " region out of bounds");
    return member.substr(e.offset, e.length);
}

}  // namespace

void decode_block(bytes_view payload, bool last_block, bool trailing_newline, bytes& out) {
    ByteCursor cur{payload};
    std::uint64_t line_count = 0;
    std::uint64_t member_len[kMemberCount];
    try {
        line_count = elastic_decode(cur);
        for (std::uint64_t& len : member_len) len = elastic_decode(cur);
    } catch (const Error&) {
        corrupt("block header truncated");
    }
    std::uint64_t need = 0;
    for (std::uint64_t len : member_len) {
        if (len > payload.size()) corrupt("member length implausible");
        need += len;
    }
    if (need != cur.remaining()) corrupt("member lengths do not partition the block");
    bytes_view member[kMemberCount];
    for (int i = 0; i < kMemberCount; ++i) {
        member[i] = cur.data.substr(cur.pos, member_len[i]);
        cur.pos += member_len[i];
    }

    const SignatureTable table = deserialize_table(member[kMemberTable]);
    const std::vector<IndexEntry> entries = parse_index(member[kMemberIndex]);

    // Bind every signature's entries to cursors. Entries are grouped by
    // ascending signature id, columns in layout order.
    std::vector<SigCursor> cursors(table.size());
    std::size_t at = 0;
    for (std::uint32_t id = 0; id < table.size(); ++id) {
        SigCursor& sc = cursors[id];
        sc.sig = &table.at(id);
        sc.kind = value_layout(*sc.sig);
        const auto take = [&](std::uint8_t expected_member, const char* what) -> IndexEntry {
            if (at >= entries.size() || entries[at].sig_id != id ||
                entries[at].member != expected_member)
                raise(ErrorCode::MalformedIndex, bytes("missing ") + what + " entry");
            return entries[at++];
        };
        const auto check_count = [&](const IndexEntry& e) {
            if (sc.remaining == 0 && e.count == 0)
                raise(ErrorCode::MalformedIndex, "empty value group");
            if (sc.remaining == 0)
                sc.remaining = e.count;
            else if (sc.remaining != e.count)
                raise(ErrorCode::MalformedIndex, "inconsistent occurrence counts");
        };
        switch (sc.kind) {
            case GroupKind::RawDigits: {
                const IndexEntry e = take(kMemberRawDigits, "raw digits");
                check_count(e);
                ColumnCursor col;
                col.numeric = false;
                col.width = static_cast<std::uint32_t>(sc.sig->len);
                col.raw = member_slice(member[kMemberRawDigits], e, "raw digits");
                if (col.width == 0 || col.raw.size() != e.count * col.width ||
                    e.count != col.raw.size() / col.width)
                    raise(ErrorCode::MalformedIndex, "raw region does not match count");
                sc.cols.push_back(std::move(col));
                break;
            }
            case GroupKind::DeltaNumeric: {
                const IndexEntry e = take(kMemberNumeric, "numeric");
                check_count(e);
                ColumnCursor col;
                col.numeric = true;
                col.width = static_cast<std::uint32_t>(sc.sig->len);
                col.delta = DeltaCursor(member_slice(member[kMemberNumeric], e, "numeric"));
                sc.cols.push_back(std::move(col));
                break;
            }
            case GroupKind::RunColumns:
                for (std::uint32_t run : sc.sig->shape.runs) {
                    ColumnCursor col;
                    col.width = run;
                    col.numeric = run <= kMaxNumericRun;
                    if (col.numeric) {
                        const IndexEntry e = take(kMemberNumeric, "run column");
                        check_count(e);
                        col.delta = DeltaCursor(member_slice(member[kMemberNumeric], e, "run column"));
                    } else {
                        const IndexEntry e = take(kMemberRawDigits, "run column");
                        check_count(e);
                        col.raw = member_slice(member[kMemberRawDigits], e, "run column");
                        if (col.raw.size() != e.count * col.width ||
                            e.count != col.raw.size() / col.width)
                            raise(ErrorCode::MalformedIndex, "raw region does not match count");
                    }
                    sc.cols.push_back(std::move(col));
                }
                break;
            case GroupKind::Octets4:
                for (int i = 0; i < 4; ++i) {
                    const IndexEntry e = take(kMemberNumeric, "octet");
                    check_count(e);
                    ColumnCursor col;
                    col.numeric = true;
                    col.delta = DeltaCursor(member_slice(member[kMemberNumeric], e, "octet"));
                    sc.cols.push_back(std::move(col));
                }
                break;
            case GroupKind::Dictionary: {
                const IndexEntry keys = take(kMemberDictKeys, "dictionary keys");
                check_count(keys);
                const IndexEntry ids = take(kMemberDictIds, "dictionary ids");
                check_count(ids);
                sc.dict_keys = decode_key_views(member_slice(member[kMemberDictKeys], keys,
                                                             "dictionary keys"));
                sc.dict_ids = ByteCursor{member_slice(member[kMemberDictIds], ids,
                                                      "dictionary ids")};
                break;
            }
        }
    }
    if (at != entries.size()) raise(ErrorCode::MalformedIndex, "index entries without signature");

    // Walk the modified stream sequentially: placeholder bytes may contain
    // any value, including the line separator, so the stream cannot be
    // pre-split on newlines.
    const bytes_view modified = member[kMemberModified];
    std::uint64_t separators = 0;
    std::size_t i = 0;
    while (i < modified.size()) {
        const char c = modified[i];
        if (c == kPlaceholderMark) {
            ++i;
            if (i >= modified.size()) corrupt("dangling placeholder mark");
            if (modified[i] == kMarkEscape) {
                out.push_back(kPlaceholderMark);
                ++i;
                continue;
            }
            ByteCursor pc{modified, i};
            const std::uint64_t id = elastic_decode(pc);
            i = pc.pos;
            if (id >= cursors.size()) corrupt("placeholder names unknown signature");
            reconstruct_token(cursors[id], out);
        } else {
            if (c == '\n') ++separators;
            out.push_back(c);
            ++i;
        }
    }

    if (line_count == 0) {
        if (!modified.empty()) corrupt("modified stream in empty block");
    } else if (separators != line_count - 1) {
        corrupt("line separators do not match line count");
    }
    for (const SigCursor& sc : cursors) {
        bool drained = sc.remaining == 0;
        for (const ColumnCursor& col : sc.cols) {
            if (col.numeric ? !col.delta.done() : col.raw_pos != col.raw.size()) drained = false;
        }
        if (sc.kind == GroupKind::Dictionary && !sc.dict_ids.done()) drained = false;
        if (!drained) raise(ErrorCode::TrailingValues, "encoded values left after last line");
    }

    if (!last_block || trailing_newline) out.push_back('\n');
}

}  // namespace delog
