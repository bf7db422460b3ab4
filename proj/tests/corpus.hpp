// Deterministic synthetic log corpora for tests. Samples imitate the line
// shapes of well-known public log datasets (web server, distributed fs,
// syslog, ssh, cluster scheduler, coordination service, mobile app, proxy)
// without reproducing any real data.
#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "bytes.hpp"

namespace corpus {

// Eight system names, each with a 2000-line sample.
const std::vector<std::string>& systems();
delog::bytes sample(std::string_view system);

// 50k adversarial lines: 0x01/0x00 bytes, non-UTF-8, specials-only tokens,
// 25-digit runs, empty lines. No trailing newline.
delog::bytes fuzz_corpus(std::uint64_t seed = 0x5eedf00d);

// Timestamp- and address-heavy traffic log, trailing newline.
delog::bytes timestamp_ip_corpus(std::size_t lines);

// Large mixed corpus streamed to `out`: interleaved system templates plus
// occasional stack-trace bursts. Trailing newline.
void write_mixed_large(std::ostream& out, std::size_t lines);

// Unique per-instance directory under the system temp root, removed on
// destruction.
class TempDir {
  public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return dir_; }
    std::filesystem::path file(std::string_view name, const delog::bytes& content) const;

  private:
    std::filesystem::path dir_;
};

}  // namespace corpus
