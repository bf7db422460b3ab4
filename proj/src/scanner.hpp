#pragma once

#include <cstdint>
#include <utility>

#include "bytes.hpp"

namespace delog {

// Delimiters split a line into tokens and are carried through verbatim.
// CR counts as a delimiter so CRLF files survive untouched.
inline bool is_delimiter(unsigned char b) { return b == 0x20 || b == 0x09 || b == 0x0D; }

// ASCII bytes that are neither letters nor digits. Bytes >= 0x80 are general
// content (multi-byte text), never special. Callers exclude delimiters first.
inline bool is_ascii_special(unsigned char b) {
    return b < 0x80 && !is_ascii_digit(b) && !is_ascii_letter(b);
}

// Per-token feature record filled during the scan. Views point into scanner
// scratch and the line's context state; they are valid only for the duration
// of the classifier call.
struct FeaturePool {
    bytes_view current_token;
    bytes_view ascii_special;
    bytes_view general_content;
    bytes_view semantic_context;
    std::uint32_t token_index = 0;
    std::size_t token_length = 0;

    // Byte-class tallies gathered in the same pass; derived data, kept so
    // classification never rescans the token.
    std::uint32_t digit_count = 0;
    std::uint32_t letter_count = 0;
    std::uint32_t high_byte_count = 0;

    bool all_digits() const { return token_length > 0 && digit_count == token_length; }
};

// Keyword context carried across tokens of one line; reset per line.
struct ContextState {
    bytes context;
    std::uint32_t token_index = 0;

    void reset() {
        context.clear();
        token_index = 0;
    }
};

// The modified-log stream marks each replaced token with this byte followed
// by the elastic signature id. A literal mark byte in passthrough text is
// escaped as 0x01 0x00; a minimal elastic encoding never starts with 0x00,
// so the two cannot collide.
inline constexpr char kPlaceholderMark = 0x01;
inline constexpr char kMarkEscape = 0x00;

inline void append_escaped(bytes& out, bytes_view raw) {
    for (std::size_t from = 0;;) {
        std::size_t mark = raw.find(kPlaceholderMark, from);
        if (mark == bytes_view::npos) {
            out.append(raw, from, raw.size() - from);
            return;
        }
        out.append(raw, from, mark - from + 1);
        out.push_back(kMarkEscape);
        from = mark + 1;
    }
}

inline bytes escape_modified(bytes_view raw) {
    bytes out;
    out.reserve(raw.size());
    append_escaped(out, raw);
    return out;
}

// Verdict returned by the classifier callback. When has_pattern is set the
// replacement bytes (typically a placeholder) land in the modified line;
// otherwise the token itself is kept and becomes the new context keyword.
struct TokenDecision {
    bool has_pattern = false;
    bytes_view replacement{};
};

// Splits a token into its general content and ASCII specials, preserving
// byte order within each class.
struct SplitToken {
    bytes general_content;
    bytes ascii_special;
    std::size_t token_length = 0;
};
SplitToken split_token(bytes_view token);

// Single-pass line scanner. One instance per worker; scratch buffers are
// reused across lines. The Source parameter exists so tests can substitute
// an instrumented byte source; production code uses bytes_view.
class Scanner {
  public:
    // Appends the modified form of `src` to `out`. Each source byte is read
    // exactly once. `state` must be reset by the caller at line start.
    template <class Source, class Classify>
    void scan_line_into(const Source& src, ContextState& state, Classify&& classify, bytes& out) {
        const std::size_t n = src.size();
        bool in_token = false;
        clear_token();
        for (std::size_t i = 0; i < n; ++i) {
            const unsigned char b = src[i];
            if (is_delimiter(b)) {
                if (in_token) {
                    flush_token(state, classify, out);
                    in_token = false;
                }
                // Delimiters are never the mark byte; append directly.
                out.push_back(static_cast<char>(b));
            } else {
                in_token = true;
                consume_token_byte(b);
            }
        }
        if (in_token) flush_token(state, classify, out);
    }

    template <class Classify>
    bytes scan_line(bytes_view line, ContextState& state, Classify&& classify) {
        bytes out;
        out.reserve(line.size());
        scan_line_into(line, state, std::forward<Classify>(classify), out);
        return out;
    }

    // Event form of the same pass: emits delimiter runs and token pools in
    // input order. on_token returns has_pattern and drives the context
    // update exactly like the classifier above.
    template <class OnDelims, class OnToken>
    void scan_line_events(bytes_view line, ContextState& state, OnDelims&& on_delims,
                          OnToken&& on_token) {
        const std::size_t n = line.size();
        std::size_t i = 0;
        while (i < n) {
            std::size_t start = i;
            while (i < n && is_delimiter(static_cast<unsigned char>(line[i]))) ++i;
            if (i > start) on_delims(line.substr(start, i - start));
            if (i >= n) break;
            clear_token();
            while (i < n && !is_delimiter(static_cast<unsigned char>(line[i]))) {
                consume_token_byte(static_cast<unsigned char>(line[i]));
                ++i;
            }
            FeaturePool pool = make_pool(state);
            if (on_token(pool)) {
                state.token_index += 1;
            } else {
                state.context.assign(token_);
                state.token_index = 0;
            }
        }
    }

  private:
    void clear_token() {
        token_.clear();
        special_.clear();
        content_.clear();
        digits_ = letters_ = high_ = 0;
    }

    void consume_token_byte(unsigned char b) {
        token_.push_back(static_cast<char>(b));
        if (is_ascii_special(b)) {
            special_.push_back(static_cast<char>(b));
        } else {
            content_.push_back(static_cast<char>(b));
            if (is_ascii_digit(b)) {
                ++digits_;
            } else if (b >= 0x80) {
                ++high_;
            } else {
                ++letters_;
            }
        }
    }

    FeaturePool make_pool(const ContextState& state) const {
        FeaturePool pool;
        pool.current_token = token_;
        pool.ascii_special = special_;
        pool.general_content = content_;
        pool.semantic_context = state.context;
        pool.token_index = state.token_index;
        pool.token_length = token_.size();
        pool.digit_count = digits_;
        pool.letter_count = letters_;
        pool.high_byte_count = high_;
        return pool;
    }

    template <class Classify>
    void flush_token(ContextState& state, Classify&& classify, bytes& out) {
        FeaturePool pool = make_pool(state);
        TokenDecision decision = classify(pool);
        if (decision.has_pattern) {
            out.append(decision.replacement);
            state.token_index += 1;
        } else {
            append_escaped(out, token_);
            state.context.assign(token_);
            state.token_index = 0;
        }
        clear_token();
    }

    bytes token_;
    bytes special_;
    bytes content_;
    std::uint32_t digits_ = 0;
    std::uint32_t letters_ = 0;
    std::uint32_t high_ = 0;
};

}  // namespace delog
