#include "grouper.hpp"

#include <charconv>

#include "error.hpp"

namespace delog {

using codecs::elastic_append;

GroupKind value_layout(const PatternSignature& sig) {
    switch (sig.category) {
        case PatternCategory::ShortPureNumeric:
            return GroupKind::RawDigits;
        case PatternCategory::LongPureNumeric:
            return sig.len <= kMaxNumericRun ? GroupKind::DeltaNumeric : GroupKind::RawDigits;
        case PatternCategory::ComplexNumeric:
            return GroupKind::RunColumns;
        case PatternCategory::Alphanumeric:
        case PatternCategory::AnyVariable:
            return GroupKind::Dictionary;
        case PatternCategory::Named:
            return sig.layout == NamedLayout::Octets4 ? GroupKind::Octets4
                                                      : GroupKind::RunColumns;
        case PatternCategory::Keyword:
            break;
    }
    raise(ErrorCode::Internal, "no value layout for keywords");
}

namespace {

TokenGroup make_group(const PatternSignature& sig) {
    TokenGroup group;
    group.kind = value_layout(sig);
    switch (group.kind) {
        case GroupKind::RawDigits: {
            TokenGroup::Column col;
            col.numeric = false;
            col.width = static_cast<std::uint32_t>(sig.len);
            group.cols.push_back(std::move(col));
            break;
        }
        case GroupKind::DeltaNumeric: {
            TokenGroup::Column col;
            col.numeric = true;
            group.cols.push_back(std::move(col));
            break;
        }
        case GroupKind::RunColumns:
            for (std::uint32_t run : sig.shape.runs) {
                TokenGroup::Column col;
                col.numeric = run <= kMaxNumericRun;
                col.width = run;
                group.cols.push_back(std::move(col));
            }
            break;
        case GroupKind::Octets4:
            for (int i = 0; i < 4; ++i) {
                TokenGroup::Column col;
                col.numeric = true;
                group.cols.push_back(std::move(col));
            }
            break;
        case GroupKind::Dictionary:
            break;
    }
    return group;
}

std::uint64_t parse_digits(bytes_view digits) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
    if (ec != std::errc{} || ptr != digits.data() + digits.size())
        raise(ErrorCode::Internal, "digit run failed to parse");
    return v;
}

}  // namespace

BlockEncoder::BlockEncoder(Mode mode, FeatureSet features, const RuleSet& rules)
    : mode_(mode), features_(features), rules_(rules) {}

void BlockEncoder::add_line(bytes_view line) {
    // Mark escaping and placeholders can expand a line, but never past 3x.
    reserve_snug(modified_, 3 * line.size() + 8);
    if (lines_ > 0) modified_.push_back('\n');
    ++lines_;
    state_.reset();
    scanner_.scan_line_into(line, state_, [this](const FeaturePool& pool) { return on_token(pool); },
                            modified_);
}

TokenDecision BlockEncoder::on_token(const FeaturePool& pool) {
    const Classified cls = classify(pool, mode_, features_, rules_);
    if (!cls.has_pattern()) return TokenDecision{false, {}};
    synthesize_key(key_scratch_, pool, cls, features_);
    std::uint32_t id;
    if (auto found = table_.find(key_scratch_)) {
        id = *found;
    } else {
        id = table_.insert(key_scratch_, synthesize(pool, cls, features_));
        groups_.push_back(make_group(table_.at(id)));
    }
    append_value(groups_[id], table_.at(id), pool.current_token);
    placeholder_scratch_.clear();
    placeholder_scratch_.push_back(kPlaceholderMark);
    elastic_append(placeholder_scratch_, id);
    return TokenDecision{true, placeholder_scratch_};
}

void BlockEncoder::append_value(TokenGroup& group, const PatternSignature& sig, bytes_view token) {
    switch (group.kind) {
        case GroupKind::RawDigits:
            group.cols[0].raw.append(token);
            break;
        case GroupKind::DeltaNumeric:
            group.cols[0].delta.add(parse_digits(token));
            break;
        case GroupKind::RunColumns: {
            std::size_t off = sig.shape.lead.size();
            for (std::size_t i = 0; i < sig.shape.runs.size(); ++i) {
                const bytes_view run = token.substr(off, sig.shape.runs[i]);
                TokenGroup::Column& col = group.cols[i];
                if (col.numeric) {
                    col.delta.add(parse_digits(run));
                } else {
                    col.raw.append(run);
                }
                off += sig.shape.runs[i];
                if (i + 1 < sig.shape.runs.size()) off += sig.shape.literal_specials[i].size();
            }
            break;
        }
        case GroupKind::Octets4: {
            std::size_t off = 0;
            for (int i = 0; i < 4; ++i) {
                std::size_t dot = token.find('.', off);
                if (dot == bytes_view::npos) dot = token.size();
                group.cols[i].delta.add(parse_digits(token.substr(off, dot - off)));
                off = dot + 1;
            }
            break;
        }
        case GroupKind::Dictionary:
            group.dict.add(token);
            break;
    }
    ++group.count;
}

std::vector<bytes> BlockEncoder::finalize_chunks() {
    bytes members[kMemberCount];
    members[kMemberModified] = std::move(modified_);
    members[kMemberTable] = serialize_table(table_);

    // Every appended size is known up front, so reserve members exactly
    // instead of letting append growth overshoot at block scale.
    std::size_t totals[kMemberCount] = {};
    for (const TokenGroup& group : groups_) {
        if (group.kind == GroupKind::Dictionary) {
            totals[kMemberDictKeys] += group.dict.keys_blob().size();
            totals[kMemberDictIds] += group.dict.ids_blob().size();
        } else {
            for (const TokenGroup::Column& col : group.cols) {
                if (col.numeric) {
                    totals[kMemberNumeric] += col.delta.stream().size();
                } else {
                    totals[kMemberRawDigits] += col.raw.size();
                }
            }
        }
    }
    members[kMemberNumeric].reserve(totals[kMemberNumeric]);
    members[kMemberDictKeys].reserve(totals[kMemberDictKeys]);
    members[kMemberDictIds].reserve(totals[kMemberDictIds]);
    members[kMemberRawDigits].reserve(totals[kMemberRawDigits]);

    std::vector<IndexEntry> entries;
    for (std::uint32_t id = 0; id < groups_.size(); ++id) {
        TokenGroup& group = groups_[id];
        if (group.kind == GroupKind::Dictionary) {
            bytes keys = group.dict.take_keys_blob();
            bytes ids = group.dict.take_ids_blob();
            entries.push_back({id, kMemberDictKeys, members[kMemberDictKeys].size(), keys.size(),
                               group.count});
            members[kMemberDictKeys].append(keys);
            entries.push_back(
                {id, kMemberDictIds, members[kMemberDictIds].size(), ids.size(), group.count});
            members[kMemberDictIds].append(ids);
        } else {
            for (TokenGroup::Column& col : group.cols) {
                if (col.numeric) {
                    const std::size_t off = members[kMemberNumeric].size();
                    const bytes stream = col.delta.take();
                    members[kMemberNumeric].append(stream);
                    entries.push_back({id, kMemberNumeric, off, stream.size(), group.count});
                } else {
                    entries.push_back({id, kMemberRawDigits, members[kMemberRawDigits].size(),
                                       col.raw.size(), group.count});
                    members[kMemberRawDigits].append(col.raw);
                    col.raw.clear();
                    col.raw.shrink_to_fit();
                }
            }
        }
    }
    groups_.clear();
    members[kMemberIndex] = serialize_index(entries);

    bytes header;
    elastic_append(header, lines_);
    for (const bytes& member : members) elastic_append(header, member.size());

    std::vector<bytes> chunks;
    chunks.reserve(1 + kMemberCount);
    chunks.push_back(std::move(header));
    for (bytes& member : members) chunks.push_back(std::move(member));
    return chunks;
}

bytes BlockEncoder::finalize() {
    std::vector<bytes> chunks = finalize_chunks();
    std::size_t total = 0;
    for (const bytes& chunk : chunks) total += chunk.size();
    bytes payload;
    payload.reserve(total);
    for (bytes& chunk : chunks) {
        payload.append(chunk);
        chunk = bytes{};
    }
    return payload;
}

}  // namespace delog
