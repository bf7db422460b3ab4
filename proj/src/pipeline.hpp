#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "bytes.hpp"
#include "container.hpp"
#include "kernels.hpp"
#include "signatures.hpp"

namespace delog {

struct RunConfig {
    Mode mode = Mode::Standard;
    FeatureSet features = FeatureSet::Full;
    std::uint8_t kernel_id = kKernelLzma;
    int level = -1;  // -1 resolves to the kernel's maximum
    std::uint64_t block_lines = 100000;
    int workers = 4;
    RuleSet rules = RuleSet::builtins();
};

struct CompressStats {
    std::uint64_t input_bytes = 0;
    std::uint64_t output_bytes = 0;
    std::uint64_t blocks = 0;
    std::uint64_t lines = 0;
};

struct DecompressStats {
    std::uint64_t output_bytes = 0;
    std::uint64_t blocks = 0;
};

CompressStats compress_stream(std::istream& in, std::ostream& out, const RunConfig& config);
DecompressStats decompress_stream(std::istream& in, std::ostream& out, int workers);

// Parses just the archive header.
Manifest read_manifest(std::istream& in);

struct VerifyOutcome {
    bool match = false;
    std::uint64_t first_diff = 0;  // byte offset, valid when match is false
    std::uint64_t original_bytes = 0;
    std::uint64_t archive_bytes = 0;
    std::string original_sha256;
    std::string roundtrip_sha256;
};

// Compresses input_path to a temporary archive, decompresses it, and
// compares the round trip byte for byte. Requires a seekable input file.
VerifyOutcome verify_file(const std::string& input_path, const RunConfig& config);

// Streaming SHA-256, hex digest.
class Sha256 {
  public:
    Sha256();
    ~Sha256();
    Sha256(const Sha256&) = delete;
    Sha256& operator=(const Sha256&) = delete;
    void update(bytes_view chunk);
    std::string hex_digest();

  private:
    void* ctx_ = nullptr;
};

}  // namespace delog
