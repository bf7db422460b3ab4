#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace delog {

enum class ErrorCode : int {
    Io = 1,
    Usage,
    BadMagic,
    UnsupportedVersion,
    TruncatedArchive,
    KernelError,
    UnterminatedVarint,
    Overflow,
    MalformedBlob,
    MalformedTable,
    MalformedStream,
    MalformedIndex,
    MalformedRule,
    GroupExhausted,
    TrailingValues,
    Internal,
};

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, std::string message)
        : std::runtime_error(std::move(message)), code_(code) {}

    ErrorCode code() const { return code_; }

    // Block index the failure was observed in, or -1 when not block-scoped.
    Error& at_block(std::int64_t index) {
        block_ = index;
        return *this;
    }
    std::int64_t block() const { return block_; }

  private:
    ErrorCode code_;
    std::int64_t block_ = -1;
};

[[noreturn]] inline void raise(ErrorCode code, std::string message) {
    throw Error(code, std::move(message));
}

}  // namespace delog
