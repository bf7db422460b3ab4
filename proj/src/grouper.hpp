#pragma once

#include <cstdint>
#include <vector>

#include "bytes.hpp"
#include "codecs.hpp"
#include "container.hpp"
#include "scanner.hpp"
#include "signatures.hpp"

namespace delog {

// Storage layout a signature's occurrence values are encoded under.
enum class GroupKind : std::uint8_t {
    RawDigits,     // fixed-width digit strings, stored verbatim
    DeltaNumeric,  // one delta-coded integer stream
    RunColumns,    // one column per digit run, numeric or raw by run width
    Dictionary,    // distinct byte-strings plus id stream
    Octets4,       // four delta-coded octet streams
};

// Digit runs up to this many digits are stored numerically; anything longer
// stays a raw digit string so values fit signed 64-bit deltas.
inline constexpr std::uint32_t kMaxNumericRun = 18;

GroupKind value_layout(const PatternSignature& sig);

// Values of one signature within one block. Numeric columns delta-encode as
// values arrive so staging costs encoded bytes, not eight bytes a value.
struct TokenGroup {
    struct Column {
        bool numeric = false;
        std::uint32_t width = 0;  // raw columns: digits per occurrence
        codecs::DeltaAppender delta;
        bytes raw;
    };

    GroupKind kind = GroupKind::Dictionary;
    std::uint64_t count = 0;
    std::vector<Column> cols;
    codecs::DictEncoder dict;
};

// Single-use per-block encoder: feed lines, then finalize into the block
// payload. Owns the signature table, token groups, and modified-log stream.
class BlockEncoder {
  public:
    BlockEncoder(Mode mode, FeatureSet features, const RuleSet& rules);

    void add_line(bytes_view line);
    // Serializes the block payload: elastic line count, seven member
    // lengths, then the members back to back. finalize_chunks returns the
    // same bytes as a header-plus-members sequence so callers can hand them
    // to a kernel without concatenating; finalize joins them for convenience.
    std::vector<bytes> finalize_chunks();
    bytes finalize();

    std::uint64_t line_count() const { return lines_; }
    const SignatureTable& table() const { return table_; }

  private:
    TokenDecision on_token(const FeaturePool& pool);
    void append_value(TokenGroup& group, const PatternSignature& sig, bytes_view token);

    Mode mode_;
    FeatureSet features_;
    RuleSet rules_;  // by value: rules are shared_ptrs, the encoder may outlive the argument
    Scanner scanner_;
    ContextState state_;
    SignatureTable table_;
    std::vector<TokenGroup> groups_;
    bytes modified_;
    bytes key_scratch_;
    bytes placeholder_scratch_;
    std::uint64_t lines_ = 0;
};

}  // namespace delog
