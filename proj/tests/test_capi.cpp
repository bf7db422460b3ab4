#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <fstream>
#include <string>

#include "corpus.hpp"
#include "delog.h"

namespace {

using delog::bytes;

bytes slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.is_open());
    std::ostringstream buf;
    buf << in.rdbuf();
    return bytes(buf.str());
}

struct Opts {
    delog_options* h = delog_options_new();
    ~Opts() { delog_options_free(h); }
};

}  // namespace

TEST_CASE("option validation") {
    Opts o;
    CHECK(delog_options_set_mode(o.h, "delog") == DELOG_OK);
    CHECK(delog_options_set_mode(o.h, "delog-l") == DELOG_OK);
    CHECK(delog_options_set_mode(o.h, "fast") == DELOG_E_USAGE);
    CHECK(delog_options_set_kernel(o.h, "gzip") == DELOG_OK);
    CHECK(delog_options_set_kernel(o.h, "zstd") == DELOG_E_USAGE);
    CHECK(delog_options_set_level(o.h, -1) == DELOG_OK);
    CHECK(delog_options_set_level(o.h, 10) == DELOG_E_USAGE);
    CHECK(delog_options_set_block_lines(o.h, 0) == DELOG_E_USAGE);
    CHECK(delog_options_set_workers(o.h, 0) == DELOG_E_USAGE);
    CHECK(delog_options_set_features(o.h, "binary") == DELOG_OK);
    CHECK(delog_options_set_features(o.h, "all") == DELOG_E_USAGE);
    CHECK(std::strlen(delog_last_error()) > 0);
    CHECK(delog_options_set_mode(nullptr, "delog") == DELOG_E_USAGE);
}

TEST_CASE("file compress and decompress round trip") {
    corpus::TempDir tmp;
    const bytes text = corpus::sample("distfs");
    const auto input = tmp.file("input.log", text);
    const auto archive = tmp.path() / "input.dlg";
    const auto restored = tmp.path() / "restored.log";

    Opts o;
    REQUIRE(delog_options_set_kernel(o.h, "gzip") == DELOG_OK);
    REQUIRE(delog_options_set_block_lines(o.h, 250) == DELOG_OK);
    REQUIRE(delog_compress_file(input.c_str(), archive.c_str(), o.h) == DELOG_OK);
    REQUIRE(delog_decompress_file(archive.c_str(), restored.c_str(), o.h) == DELOG_OK);
    CHECK(slurp(restored) == text);

    delog_archive_info info;
    REQUIRE(delog_archive_info_read(archive.c_str(), &info) == DELOG_OK);
    CHECK(info.format_version == 1);
    CHECK(std::string(info.mode) == "delog");
    CHECK(std::string(info.kernel) == "gzip");
    CHECK(info.block_count == 8);
    CHECK(info.trailing_newline == 1);
}

TEST_CASE("null options mean defaults") {
    corpus::TempDir tmp;
    const auto input = tmp.file("small.log", "alpha 1\nbeta 2\n");
    const auto archive = tmp.path() / "small.dlg";
    const auto restored = tmp.path() / "small.out";
    REQUIRE(delog_compress_file(input.c_str(), archive.c_str(), nullptr) == DELOG_OK);
    REQUIRE(delog_decompress_file(archive.c_str(), restored.c_str(), nullptr) == DELOG_OK);
    CHECK(slurp(restored) == "alpha 1\nbeta 2\n");
}

TEST_CASE("buffer compress and decompress round trip") {
    const bytes text = corpus::sample("proxy");
    Opts o;
    REQUIRE(delog_options_set_kernel(o.h, "none") == DELOG_OK);
    void* archive = nullptr;
    size_t archive_len = 0;
    REQUIRE(delog_compress_buffer(text.data(), text.size(), &archive, &archive_len, o.h) ==
            DELOG_OK);
    REQUIRE(archive != nullptr);
    REQUIRE(archive_len > 0);

    void* restored = nullptr;
    size_t restored_len = 0;
    REQUIRE(delog_decompress_buffer(archive, archive_len, &restored, &restored_len) ==
            DELOG_OK);
    CHECK(bytes(static_cast<char*>(restored), restored_len) == text);
    delog_free(archive);
    delog_free(restored);
}

TEST_CASE("empty buffer round trip") {
    void* archive = nullptr;
    size_t archive_len = 0;
    REQUIRE(delog_compress_buffer("", 0, &archive, &archive_len, nullptr) == DELOG_OK);
    void* restored = nullptr;
    size_t restored_len = 0;
    REQUIRE(delog_decompress_buffer(archive, archive_len, &restored, &restored_len) ==
            DELOG_OK);
    CHECK(restored_len == 0);
    CHECK(restored != nullptr);  // release() never hands back NULL
    delog_free(archive);
    delog_free(restored);
}

TEST_CASE("verify reports a match") {
    corpus::TempDir tmp;
    const auto input = tmp.file("v.log", corpus::sample("syslog"));
    Opts o;
    REQUIRE(delog_options_set_kernel(o.h, "none") == DELOG_OK);
    delog_verify_report report;
    REQUIRE(delog_verify_file(input.c_str(), o.h, &report) == DELOG_OK);
    CHECK(report.match == 1);
    CHECK(report.original_bytes > 0);
    CHECK(std::strlen(report.original_sha256) == 64);
    CHECK(std::strcmp(report.original_sha256, report.roundtrip_sha256) == 0);
}

TEST_CASE("error paths set status and message") {
    Opts o;
    CHECK(delog_compress_file("/does/not/exist.log", "/dev/null", o.h) == DELOG_E_IO);
    CHECK(std::strlen(delog_last_error()) > 0);

    corpus::TempDir tmp;
    const auto junk = tmp.file("junk.dlg", "this is not an archive at all");
    const auto out = tmp.path() / "out.log";
    CHECK(delog_decompress_file(junk.c_str(), out.c_str(), o.h) == DELOG_E_FORMAT);

    // Valid header, corrupt payload: the kernel checksum must surface it as
    // data corruption tagged with the block it hit.
    const bytes text = corpus::sample("webserver");
    const auto input = tmp.file("w.log", text);
    const auto archive = tmp.path() / "w.dlg";
    REQUIRE(delog_options_set_kernel(o.h, "gzip") == DELOG_OK);
    REQUIRE(delog_compress_file(input.c_str(), archive.c_str(), o.h) == DELOG_OK);
    bytes raw = slurp(archive);
    raw[raw.size() - 5] ^= 0x40;
    const auto bad = tmp.file("bad.dlg", raw);
    const delog_status rc = delog_decompress_file(bad.c_str(), out.c_str(), o.h);
    CHECK(rc == DELOG_E_CORRUPT);
    CHECK(std::string(delog_last_error()).find("block") != std::string::npos);

    delog_verify_report report;
    CHECK(delog_verify_file("-", o.h, &report) == DELOG_E_USAGE);
    CHECK(delog_verify_file(nullptr, o.h, &report) == DELOG_E_USAGE);
}

TEST_CASE("kernel passthrough round trips") {
    corpus::TempDir tmp;
    const bytes text = corpus::sample("coord");
    const auto input = tmp.file("k.log", text);
    const auto packed = tmp.path() / "k.gz";
    const auto unpacked = tmp.path() / "k.out";
    REQUIRE(delog_kernel_compress_file(input.c_str(), packed.c_str(), "gzip", -1) == DELOG_OK);
    CHECK(std::filesystem::file_size(packed) < text.size());
    REQUIRE(delog_kernel_decompress_file(packed.c_str(), unpacked.c_str(), "gzip") == DELOG_OK);
    CHECK(slurp(unpacked) == text);
    CHECK(delog_kernel_compress_file(input.c_str(), packed.c_str(), "nope", -1) ==
          DELOG_E_USAGE);
}

TEST_CASE("version string is set") {
    CHECK(std::strlen(delog_version()) >= 5);
}
