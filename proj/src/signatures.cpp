#include "signatures.hpp"

#include <charconv>
#include <fstream>
#include <regex>

#include "error.hpp"

namespace delog {

namespace {

// Bytes with structural meaning inside a key; any occurrence in field values
// is percent-escaped so keys parse unambiguously.
bool needs_key_escape(unsigned char b) {
    return b == '%' || b == '|' || b == '<' || b == '>' || b == '=' || b == '\\';
}

void append_key_escaped(bytes& out, bytes_view raw) {
    static constexpr char kHex[] = "0123456789ABCDEF";
    for (char c : raw) {
        const auto b = static_cast<unsigned char>(c);
        if (needs_key_escape(b)) {
            out.push_back('%');
            out.push_back(kHex[b >> 4]);
            out.push_back(kHex[b & 0x0F]);
        } else {
            out.push_back(c);
        }
    }
}

void append_decimal(bytes& out, std::uint64_t v) {
    char buf[20];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, end);
}

// Emits the run pattern of a token directly: escaped literals interleaved
// with \d{N} markers. Produces exactly what a decomposed shape would render.
void append_token_pattern(bytes& out, bytes_view token) {
    std::size_t i = 0;
    const std::size_t n = token.size();
    while (i < n) {
        if (is_ascii_digit(static_cast<unsigned char>(token[i]))) {
            std::size_t start = i;
            while (i < n && is_ascii_digit(static_cast<unsigned char>(token[i]))) ++i;
            out.append("\\d{");
            append_decimal(out, i - start);
            out.push_back('}');
        } else {
            std::size_t start = i;
            while (i < n && !is_ascii_digit(static_cast<unsigned char>(token[i]))) ++i;
            append_key_escaped(out, token.substr(start, i - start));
        }
    }
}

void append_shape_pattern(bytes& out, const RunShape& shape) {
    append_key_escaped(out, shape.lead);
    for (std::size_t i = 0; i < shape.runs.size(); ++i) {
        out.append("\\d{");
        append_decimal(out, shape.runs[i]);
        out.push_back('}');
        if (i + 1 < shape.runs.size()) append_key_escaped(out, shape.literal_specials[i]);
    }
    append_key_escaped(out, shape.trail);
}

}  // namespace

std::uint64_t RunShape::total_length() const {
    std::uint64_t n = lead.size() + trail.size();
    for (std::uint32_t r : runs) n += r;
    for (const bytes& lit : literal_specials) n += lit.size();
    return n;
}

RunShape decompose_runs(bytes_view token) {
    RunShape shape;
    std::size_t i = 0;
    const std::size_t n = token.size();
    while (i < n && !is_ascii_digit(static_cast<unsigned char>(token[i]))) ++i;
    shape.lead.assign(token.substr(0, i));
    while (i < n) {
        std::size_t start = i;
        while (i < n && is_ascii_digit(static_cast<unsigned char>(token[i]))) ++i;
        if (i - start > 0xFFFFFFFFu) raise(ErrorCode::Overflow, "digit run too long");
        shape.runs.push_back(static_cast<std::uint32_t>(i - start));
        start = i;
        while (i < n && !is_ascii_digit(static_cast<unsigned char>(token[i]))) ++i;
        if (i < n) {
            shape.literal_specials.emplace_back(token.substr(start, i - start));
        } else {
            shape.trail.assign(token.substr(start, i - start));
        }
    }
    if (shape.runs.empty()) raise(ErrorCode::Internal, "run decomposition of digitless token");
    return shape;
}

bytes PatternSignature::key() const {
    bytes out;
    out.push_back('<');
    switch (category) {
        case PatternCategory::AnyVariable:
            out.append("VAR");
            break;
        case PatternCategory::ShortPureNumeric:
        case PatternCategory::LongPureNumeric:
            if (has_idx) {
                out.append("IDX=");
                append_decimal(out, idx);
                out.push_back('|');
            }
            if (has_ctx) {
                out.append("CTX=");
                append_key_escaped(out, ctx);
                out.push_back('|');
            }
            out.append("LEN=");
            append_decimal(out, len);
            break;
        case PatternCategory::ComplexNumeric:
            if (has_ctx) {
                out.append("CTX=");
                append_key_escaped(out, ctx);
                out.push_back('|');
            }
            out.append("STR=");
            append_shape_pattern(out, shape);
            break;
        case PatternCategory::Alphanumeric:
            if (has_ctx) {
                out.append("CTX=");
                append_key_escaped(out, ctx);
                out.push_back('|');
            }
            out.append("STR=");
            append_key_escaped(out, special_sig);
            break;
        case PatternCategory::Named:
            out.append("PAT=");
            append_key_escaped(out, named);
            if (layout == NamedLayout::FixedRuns) {
                out.append("|STR=");
                append_shape_pattern(out, shape);
            }
            break;
        case PatternCategory::Keyword:
            raise(ErrorCode::Internal, "keyword has no signature key");
    }
    out.push_back('>');
    return out;
}

namespace {

// Canonical dotted quad: four groups of 1..3 digits, each <= 255, no group
// with a leading zero (except the single digit 0).
bool is_canonical_ipv4(bytes_view t) {
    std::size_t i = 0;
    for (int group = 0; group < 4; ++group) {
        std::size_t start = i;
        std::uint32_t v = 0;
        while (i < t.size() && i - start < 3 && is_ascii_digit(static_cast<unsigned char>(t[i]))) {
            v = v * 10 + static_cast<std::uint32_t>(t[i] - '0');
            ++i;
        }
        if (i == start) return false;
        if (i < t.size() && is_ascii_digit(static_cast<unsigned char>(t[i]))) return false;
        if (t[start] == '0' && i - start > 1) return false;
        if (v > 255) return false;
        if (group == 3) return i == t.size();
        if (i >= t.size() || t[i] != '.') return false;
        ++i;
    }
    return false;
}

// Wall-clock time of day: dd:dd:dd with an optional ,ddd millisecond tail.
bool matches_ts_hms(bytes_view t) {
    if (t.size() != 8 && t.size() != 12) return false;
    auto digit = [&](std::size_t i) { return is_ascii_digit(static_cast<unsigned char>(t[i])); };
    if (!digit(0) || !digit(1) || t[2] != ':' || !digit(3) || !digit(4) || t[5] != ':' ||
        !digit(6) || !digit(7))
        return false;
    if (t.size() == 12) {
        if (t[8] != ',' || !digit(9) || !digit(10) || !digit(11)) return false;
    }
    return true;
}

}  // namespace

struct RuleSet::Rule {
    bytes name;
    NamedLayout layout = NamedLayout::FixedRuns;
    enum class Kind { Ipv4Builtin, TsHmsBuiltin, Regex } kind = Kind::Regex;
    std::regex re;
};

RuleSet RuleSet::builtins() {
    RuleSet rs;
    auto ipv4 = std::make_shared<Rule>();
    ipv4->name = "ipv4";
    ipv4->layout = NamedLayout::Octets4;
    ipv4->kind = Rule::Kind::Ipv4Builtin;
    rs.rules_.push_back(std::move(ipv4));
    auto ts = std::make_shared<Rule>();
    ts->name = "ts_hms";
    ts->layout = NamedLayout::FixedRuns;
    ts->kind = Rule::Kind::TsHmsBuiltin;
    rs.rules_.push_back(std::move(ts));
    return rs;
}

RuleSet RuleSet::none() { return RuleSet{}; }

RuleSet RuleSet::load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorCode::Io, "cannot open rules file: " + path);
    RuleSet rs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto where = [&] { return path + ":" + std::to_string(lineno); };
        std::size_t tab1 = line.find('\t');
        std::size_t tab2 = tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
        if (tab2 == std::string::npos)
            raise(ErrorCode::MalformedRule, where() + ": expected name<TAB>layout<TAB>pattern");
        auto rule = std::make_shared<Rule>();
        rule->name = line.substr(0, tab1);
        const std::string layout = line.substr(tab1 + 1, tab2 - tab1 - 1);
        const std::string pattern = line.substr(tab2 + 1);
        if (rule->name.empty()) raise(ErrorCode::MalformedRule, where() + ": empty rule name");
        if (layout == "octets4") {
            rule->layout = NamedLayout::Octets4;
        } else if (layout == "fixed_runs") {
            rule->layout = NamedLayout::FixedRuns;
        } else {
            raise(ErrorCode::MalformedRule, where() + ": unknown layout '" + layout + "'");
        }
        if (pattern.empty()) raise(ErrorCode::MalformedRule, where() + ": empty pattern");
        try {
            rule->re.assign(pattern, std::regex::ECMAScript | std::regex::optimize);
        } catch (const std::regex_error& e) {
            raise(ErrorCode::MalformedRule, where() + ": " + e.what());
        }
        rule->kind = Rule::Kind::Regex;
        rs.rules_.push_back(std::move(rule));
    }
    return rs;
}

std::optional<NamedMatch> RuleSet::match(const FeaturePool& pool) const {
    // Both layouts store digit runs, so a match needs at least one digit and
    // tolerates no letters or high bytes; filtering here is exact, not a
    // heuristic, because the canonicality checks below imply it.
    if (pool.digit_count == 0 || pool.letter_count != 0 || pool.high_byte_count != 0)
        return std::nullopt;
    const bytes_view token = pool.current_token;
    for (const auto& rule : rules_) {
        bool ok = false;
        switch (rule->kind) {
            case Rule::Kind::Ipv4Builtin:
                ok = is_canonical_ipv4(token);
                break;
            case Rule::Kind::TsHmsBuiltin:
                ok = matches_ts_hms(token);
                break;
            case Rule::Kind::Regex:
                ok = std::regex_match(token.begin(), token.end(), rule->re);
                if (ok && rule->layout == NamedLayout::Octets4) ok = is_canonical_ipv4(token);
                break;
        }
        if (ok) return NamedMatch{rule->name, rule->layout};
    }
    return std::nullopt;
}

Classified classify(const FeaturePool& pool, Mode mode, FeatureSet features, const RuleSet& rules) {
    if (mode == Mode::Standard && features != FeatureSet::Binary) {
        if (auto m = rules.match(pool)) return Classified{PatternCategory::Named, *m};
    }
    if (pool.digit_count == 0 && pool.ascii_special.empty())
        return Classified{PatternCategory::Keyword, {}};
    if (pool.all_digits()) {
        return Classified{pool.token_length <= 2 ? PatternCategory::ShortPureNumeric
                                                 : PatternCategory::LongPureNumeric,
                          {}};
    }
    if (pool.digit_count >= 1 && pool.letter_count == 0 && pool.high_byte_count == 0)
        return Classified{PatternCategory::ComplexNumeric, {}};
    return Classified{PatternCategory::Alphanumeric, {}};
}

PatternSignature synthesize(const FeaturePool& pool, const Classified& cls, FeatureSet features) {
    PatternSignature s;
    if (features == FeatureSet::Binary) {
        s.category = PatternCategory::AnyVariable;
        return s;
    }
    s.category = cls.category;
    const bool contextual = features == FeatureSet::Full;
    switch (cls.category) {
        case PatternCategory::ShortPureNumeric:
            s.has_len = true;
            s.len = pool.token_length;
            break;
        case PatternCategory::LongPureNumeric:
            s.has_len = true;
            s.len = pool.token_length;
            if (contextual) {
                s.has_idx = true;
                s.idx = pool.token_index;
                s.has_ctx = true;
                s.ctx.assign(pool.semantic_context);
            }
            break;
        case PatternCategory::ComplexNumeric:
            s.has_shape = true;
            s.shape = decompose_runs(pool.current_token);
            if (contextual) {
                s.has_ctx = true;
                s.ctx.assign(pool.semantic_context);
            }
            break;
        case PatternCategory::Alphanumeric:
            s.has_special = true;
            s.special_sig.reserve(pool.ascii_special.size() + 1);
            s.special_sig.push_back('_');
            s.special_sig.append(pool.ascii_special);
            if (contextual) {
                s.has_ctx = true;
                s.ctx.assign(pool.semantic_context);
            }
            break;
        case PatternCategory::Named:
            s.named.assign(cls.named.name);
            s.layout = cls.named.layout;
            if (s.layout == NamedLayout::FixedRuns) {
                s.has_shape = true;
                s.shape = decompose_runs(pool.current_token);
            }
            break;
        case PatternCategory::Keyword:
        case PatternCategory::AnyVariable:
            raise(ErrorCode::Internal, "synthesize on non-variable category");
    }
    return s;
}

void synthesize_key(bytes& out, const FeaturePool& pool, const Classified& cls,
                    FeatureSet features) {
    out.clear();
    if (features == FeatureSet::Binary) {
        out.append("<VAR>");
        return;
    }
    const bool contextual = features == FeatureSet::Full;
    out.push_back('<');
    switch (cls.category) {
        case PatternCategory::ShortPureNumeric:
            out.append("LEN=");
            append_decimal(out, pool.token_length);
            break;
        case PatternCategory::LongPureNumeric:
            if (contextual) {
                out.append("IDX=");
                append_decimal(out, pool.token_index);
                out.append("|CTX=");
                append_key_escaped(out, pool.semantic_context);
                out.push_back('|');
            }
            out.append("LEN=");
            append_decimal(out, pool.token_length);
            break;
        case PatternCategory::ComplexNumeric:
            if (contextual) {
                out.append("CTX=");
                append_key_escaped(out, pool.semantic_context);
                out.push_back('|');
            }
            out.append("STR=");
            append_token_pattern(out, pool.current_token);
            break;
        case PatternCategory::Alphanumeric:
            if (contextual) {
                out.append("CTX=");
                append_key_escaped(out, pool.semantic_context);
                out.push_back('|');
            }
            out.append("STR=_");
            append_key_escaped(out, pool.ascii_special);
            break;
        case PatternCategory::Named:
            out.append("PAT=");
            append_key_escaped(out, cls.named.name);
            if (cls.named.layout == NamedLayout::FixedRuns) {
                out.append("|STR=");
                append_token_pattern(out, pool.current_token);
            }
            break;
        case PatternCategory::Keyword:
        case PatternCategory::AnyVariable:
            raise(ErrorCode::Internal, "synthesize on non-variable category");
    }
    out.push_back('>');
}

namespace {

[[noreturn]] void bad_key(bytes_view key) {
    raise(ErrorCode::MalformedTable, "malformed signature key: " + bytes(key));
}

unsigned hex_nibble(char c, bytes_view key) {
    if (c >= '0' && c <= '9') return static_cast<unsigned>(c - '0');
    if (c >= 'A' && c <= 'F') return static_cast<unsigned>(c - 'A' + 10);
    bad_key(key);
}

// Unescapes a plain field value (CTX, PAT, or the Alphanumeric STR body).
bytes unescape_value(bytes_view v, bytes_view key) {
    bytes out;
    out.reserve(v.size());
    for (std::size_t i = 0; i < v.size();) {
        if (v[i] == '%') {
            if (i + 2 >= v.size()) bad_key(key);
            out.push_back(static_cast<char>(hex_nibble(v[i + 1], key) << 4 |
                                            hex_nibble(v[i + 2], key)));
            i += 3;
        } else {
            out.push_back(v[i]);
            ++i;
        }
    }
    return out;
}

std::uint64_t parse_decimal(bytes_view v, bytes_view key) {
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty()) bad_key(key);
    return out;
}

// Parses a STR value. Digit-run markers appear as raw "\d{N}"; everything
// else is escaped literal text. With runs present the value is a run
// pattern; without, it must be a specials signature starting with '_'.
struct ParsedStr {
    bool is_pattern = false;
    RunShape shape;
    bytes literal;
};

ParsedStr parse_str_value(bytes_view v, bytes_view key) {
    ParsedStr out;
    bytes current;
    bool any_run = false;
    std::size_t i = 0;
    while (i < v.size()) {
        if (v[i] == '\\') {
            if (i + 3 >= v.size() || v[i + 1] != 'd' || v[i + 2] != '{') bad_key(key);
            i += 3;
            std::size_t start = i;
            while (i < v.size() && is_ascii_digit(static_cast<unsigned char>(v[i]))) ++i;
            if (i == start || i >= v.size() || v[i] != '}') bad_key(key);
            const std::uint64_t count = parse_decimal(v.substr(start, i - start), key);
            if (count == 0 || count > 0xFFFFFFFFu) bad_key(key);
            ++i;
            if (!any_run) {
                out.shape.lead = std::move(current);
            } else {
                if (current.empty()) bad_key(key);  // adjacent runs cannot exist
                out.shape.literal_specials.push_back(std::move(current));
            }
            current.clear();
            any_run = true;
            out.shape.runs.push_back(static_cast<std::uint32_t>(count));
        } else if (v[i] == '%') {
            if (i + 2 >= v.size()) bad_key(key);
            current.push_back(static_cast<char>(hex_nibble(v[i + 1], key) << 4 |
                                                hex_nibble(v[i + 2], key)));
            i += 3;
        } else {
            current.push_back(v[i]);
            ++i;
        }
    }
    if (any_run) {
        out.is_pattern = true;
        out.shape.trail = std::move(current);
    } else {
        if (current.empty() || current[0] != '_') bad_key(key);
        out.literal = std::move(current);
    }
    return out;
}

}  // namespace

PatternSignature parse_key(bytes_view key) {
    if (key.size() < 3 || key.front() != '<' || key.back() != '>') bad_key(key);
    const bytes_view inner = key.substr(1, key.size() - 2);
    PatternSignature sig;
    if (inner == "VAR") {
        sig.category = PatternCategory::AnyVariable;
        return sig;
    }

    std::optional<bytes_view> f_idx, f_ctx, f_len, f_pat, f_str;
    std::size_t pos = 0;
    while (pos <= inner.size()) {
        std::size_t bar = inner.find('|', pos);
        if (bar == bytes_view::npos) bar = inner.size();
        const bytes_view field = inner.substr(pos, bar - pos);
        const std::size_t eq = field.find('=');
        if (eq == bytes_view::npos) bad_key(key);
        const bytes_view name = field.substr(0, eq);
        const bytes_view value = field.substr(eq + 1);
        auto set = [&](std::optional<bytes_view>& slot) {
            if (slot) bad_key(key);
            slot = value;
        };
        if (name == "IDX") {
            set(f_idx);
        } else if (name == "CTX") {
            set(f_ctx);
        } else if (name == "LEN") {
            set(f_len);
        } else if (name == "PAT") {
            set(f_pat);
        } else if (name == "STR") {
            set(f_str);
        } else {
            bad_key(key);
        }
        pos = bar + 1;
    }

    if (f_pat) {
        if (f_idx || f_ctx || f_len) bad_key(key);
        sig.category = PatternCategory::Named;
        sig.named = unescape_value(*f_pat, key);
        if (sig.named.empty()) bad_key(key);
        if (f_str) {
            ParsedStr ps = parse_str_value(*f_str, key);
            if (!ps.is_pattern) bad_key(key);
            sig.layout = NamedLayout::FixedRuns;
            sig.has_shape = true;
            sig.shape = std::move(ps.shape);
        } else {
            sig.layout = NamedLayout::Octets4;
        }
    } else if (f_str) {
        if (f_idx || f_len) bad_key(key);
        ParsedStr ps = parse_str_value(*f_str, key);
        if (ps.is_pattern) {
            sig.category = PatternCategory::ComplexNumeric;
            sig.has_shape = true;
            sig.shape = std::move(ps.shape);
        } else {
            sig.category = PatternCategory::Alphanumeric;
            sig.has_special = true;
            sig.special_sig = std::move(ps.literal);
        }
        if (f_ctx) {
            sig.has_ctx = true;
            sig.ctx = unescape_value(*f_ctx, key);
        }
    } else if (f_len) {
        sig.len = parse_decimal(*f_len, key);
        sig.has_len = true;
        if (sig.len == 0) bad_key(key);
        // Context and index only ever appear together, and only on tokens
        // long enough to classify as long numerics.
        if (f_idx.has_value() != f_ctx.has_value()) bad_key(key);
        if (f_idx && sig.len <= 2) bad_key(key);
        if (f_idx) {
            sig.has_idx = true;
            const std::uint64_t idx = parse_decimal(*f_idx, key);
            if (idx > 0xFFFFFFFFu) bad_key(key);
            sig.idx = static_cast<std::uint32_t>(idx);
            sig.has_ctx = true;
            sig.ctx = unescape_value(*f_ctx, key);
        }
        sig.category = (f_idx || sig.len > 2) ? PatternCategory::LongPureNumeric
                                              : PatternCategory::ShortPureNumeric;
    } else {
        bad_key(key);
    }

    // Canonical form is the only accepted spelling: field order, escaping,
    // and decimal rendering must all round-trip exactly.
    if (sig.key() != key) bad_key(key);
    return sig;
}

std::optional<std::uint32_t> SignatureTable::find(bytes_view key) const {
    auto it = ids_.find(key);
    return it == ids_.end() ? std::nullopt : std::optional<std::uint32_t>(it->second);
}

std::uint32_t SignatureTable::insert(bytes key, PatternSignature sig) {
    const auto id = static_cast<std::uint32_t>(sigs_.size());
    auto [it, fresh] = ids_.try_emplace(std::move(key), id);
    if (!fresh) raise(ErrorCode::Internal, "duplicate signature key insert");
    sigs_.push_back(std::move(sig));
    return id;
}

std::uint32_t SignatureTable::intern(PatternSignature sig) {
    bytes key = sig.key();
    if (auto id = find(key)) return *id;
    return insert(std::move(key), std::move(sig));
}

}  // namespace delog
