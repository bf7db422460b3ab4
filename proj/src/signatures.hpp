#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "bytes.hpp"
#include "scanner.hpp"

namespace delog {

// Compression mode. Lite skips all named-rule matching on the compression
// path; everything else is shared.
enum class Mode : std::uint8_t { Standard = 0, Lite = 1 };

// Feature ablation. Binary collapses every variable token into one catch-all
// signature; Intrinsic drops the contextual fields (context keyword, token
// index) and keeps only token-derived ones; Full uses everything.
enum class FeatureSet : std::uint8_t { Binary = 0, Intrinsic = 1, Full = 2 };

enum class PatternCategory : std::uint8_t {
    Keyword = 0,
    ShortPureNumeric = 1,
    LongPureNumeric = 2,
    ComplexNumeric = 3,
    Alphanumeric = 4,
    Named = 5,
    AnyVariable = 6,
};

enum class NamedLayout : std::uint8_t { Octets4 = 0, FixedRuns = 1 };

// Digit-run decomposition of a token made of digits and ASCII specials:
// lead literal, digit runs, literals between runs, trail literal. Every
// byte of the token is covered exactly once.
struct RunShape {
    bytes lead;
    bytes trail;
    std::vector<std::uint32_t> runs;
    std::vector<bytes> literal_specials;  // size runs.size() - 1, each non-empty

    std::uint64_t total_length() const;
    bool operator==(const RunShape&) const = default;
};

// Decomposes a token containing at least one digit and no letters into its
// run shape.
RunShape decompose_runs(bytes_view token);

// Immutable description of one token group. Only the fields implied by the
// category are populated.
struct PatternSignature {
    PatternCategory category = PatternCategory::Keyword;

    bool has_ctx = false;
    bytes ctx;
    bool has_idx = false;
    std::uint32_t idx = 0;
    bool has_len = false;
    std::uint64_t len = 0;
    bool has_shape = false;
    RunShape shape;
    bool has_special = false;
    bytes special_sig;  // '_' followed by the token's specials in order

    bytes named;  // rule name, Named only
    NamedLayout layout = NamedLayout::FixedRuns;

    // Canonical textual key; distinct signatures render to distinct keys.
    bytes key() const;
    bool operator==(const PatternSignature&) const = default;
};

// Inverse of PatternSignature::key. Raises MalformedTable on any byte
// sequence key() cannot produce.
PatternSignature parse_key(bytes_view key);

// A named rule: a whole-token matcher plus the value layout its matches are
// stored under. Built-ins use hand-coded validators; rules loaded from a
// file use anchored regexes.
class RuleSet;

struct NamedMatch {
    bytes_view name;
    NamedLayout layout = NamedLayout::FixedRuns;
};

class RuleSet {
  public:
    // Built-in rules: ipv4 (canonical dotted quad, octets 0..255, no leading
    // zeros) and ts_hms (\d{2}:\d{2}:\d{2} with optional ,\d{3}).
    static RuleSet builtins();
    static RuleSet none();
    // Loads tab-separated lines: name, layout (octets4|fixed_runs), pattern.
    // Replaces the built-ins entirely. '#' lines and blank lines skipped.
    static RuleSet load_file(const std::string& path);

    bool empty() const { return rules_.empty(); }
    std::size_t size() const { return rules_.size(); }

    // First rule whose matcher covers the entire token and whose layout
    // canonicality holds. Tokens with letters or high bytes never match.
    std::optional<NamedMatch> match(const FeaturePool& pool) const;

  private:
    struct Rule;
    std::vector<std::shared_ptr<const Rule>> rules_;
};

// Classification verdict: the category plus, for Named, which rule matched.
struct Classified {
    PatternCategory category = PatternCategory::Keyword;
    NamedMatch named{};

    bool has_pattern() const { return category != PatternCategory::Keyword; }
};

Classified classify(const FeaturePool& pool, Mode mode, FeatureSet features, const RuleSet& rules);

// Builds the signature for a classified non-keyword token.
PatternSignature synthesize(const FeaturePool& pool, const Classified& cls, FeatureSet features);

// Renders the key synthesize(...).key() would produce without materializing
// the signature; the hot path interns by key and only synthesizes on a miss.
void synthesize_key(bytes& out, const FeaturePool& pool, const Classified& cls,
                    FeatureSet features);

// Per-block signature store with dense ids in first-appearance order.
class SignatureTable {
  public:
    std::optional<std::uint32_t> find(bytes_view key) const;
    std::uint32_t insert(bytes key, PatternSignature sig);
    std::uint32_t intern(PatternSignature sig);

    const PatternSignature& at(std::uint32_t id) const { return sigs_[id]; }
    std::uint32_t size() const { return static_cast<std::uint32_t>(sigs_.size()); }

  private:
    struct KeyHash {
        using is_transparent = void;
        std::size_t operator()(bytes_view v) const { return std::hash<bytes_view>{}(v); }
    };
    std::vector<PatternSignature> sigs_;
    std::unordered_map<bytes, std::uint32_t, KeyHash, std::equal_to<>> ids_;
};

}  // namespace delog
