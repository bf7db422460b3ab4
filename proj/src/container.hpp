#pragma once

#include <cstdint>
#include <cstdio>
#include <iosfwd>
#include <span>
#include <vector>

#include "bytes.hpp"
#include "signatures.hpp"

namespace delog {

inline constexpr char kMagic[4] = {'D', 'L', 'G', '1'};
inline constexpr std::uint8_t kFormatVersion = 1;

// Block payload member slots, in serialization order.
enum : std::uint8_t {
    kMemberModified = 0,
    kMemberTable = 1,
    kMemberIndex = 2,
    kMemberNumeric = 3,
    kMemberDictKeys = 4,
    kMemberDictIds = 5,
    kMemberRawDigits = 6,
    kMemberCount = 7,
};

struct Manifest {
    std::uint8_t version = kFormatVersion;
    Mode mode = Mode::Standard;
    std::uint8_t kernel_id = 0;
    bool trailing_newline = false;
    std::uint64_t block_count = 0;
};

// Self-contained binary form of the signature table; decompression rebuilds
// signatures from this alone, never by re-running classification.
bytes serialize_table(const SignatureTable& table);
SignatureTable deserialize_table(bytes_view blob);

// One encoded value region: which member holds it, where, and how many
// token occurrences it covers.
struct IndexEntry {
    std::uint32_t sig_id = 0;
    std::uint8_t member = 0;
    std::uint64_t offset = 0;
    std::uint64_t length = 0;
    std::uint64_t count = 0;
};

bytes serialize_index(std::span<const IndexEntry> entries);
std::vector<IndexEntry> parse_index(bytes_view blob);

// Writes compressed block frames to an anonymous spool file and emits the
// final archive on finish, once the block count and trailing-newline flag
// are known. Frames are written in commit order.
class ArchiveWriter {
  public:
    ArchiveWriter();
    ~ArchiveWriter();
    ArchiveWriter(const ArchiveWriter&) = delete;
    ArchiveWriter& operator=(const ArchiveWriter&) = delete;

    void add_block(bytes_view compressed_payload);
    // Returns the total archive size in bytes.
    std::uint64_t finish(std::ostream& out, Mode mode, std::uint8_t kernel_id,
                         bool trailing_newline);

    std::uint64_t block_count() const { return blocks_; }

  private:
    std::FILE* spool_ = nullptr;
    std::uint64_t blocks_ = 0;
    std::uint64_t spooled_ = 0;
};

// Sequential archive reader over a stream. Parses the header eagerly and
// yields one compressed payload per block.
class ArchiveReader {
  public:
    explicit ArchiveReader(std::istream& in);

    const Manifest& manifest() const { return manifest_; }
    // Fills `payload` with the next block's compressed bytes; returns false
    // after the last block (and verifies nothing trails it).
    bool next_block(bytes& payload);

  private:
    std::istream& in_;
    Manifest manifest_;
    std::uint64_t read_ = 0;
};

}  // namespace delog
