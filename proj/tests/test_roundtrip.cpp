#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "error.hpp"
#include "pipeline.hpp"

using namespace delog;

namespace {

bytes compress_text(const bytes& text, const RunConfig& config, CompressStats* stats = nullptr) {
    std::istringstream in{std::string(text), std::ios::binary};
    std::ostringstream out{std::ios::binary};
    const CompressStats s = compress_stream(in, out, config);
    if (stats) *stats = s;
    return bytes(out.str());
}

bytes decompress_archive(const bytes& archive, int workers = 2) {
    std::istringstream in{std::string(archive), std::ios::binary};
    std::ostringstream out{std::ios::binary};
    decompress_stream(in, out, workers);
    return bytes(out.str());
}

bytes roundtrip(const bytes& text, const RunConfig& config) {
    return decompress_archive(compress_text(text, config));
}

RunConfig small_blocks(std::uint8_t kernel = kKernelNone) {
    RunConfig config;
    config.kernel_id = kernel;
    config.block_lines = 37;  // force many blocks on small corpora
    config.workers = 2;
    return config;
}

}  // namespace

TEST_CASE("system samples round trip under every mode, kernel, and feature set") {
    for (const std::string& system : corpus::systems()) {
        const bytes text = corpus::sample(system);
        for (const Mode mode : {Mode::Standard, Mode::Lite}) {
            for (const std::uint8_t kernel :
                 {kKernelNone, kKernelGzip, kKernelBzip2, kKernelLzma}) {
                RunConfig config = small_blocks(kernel);
                config.mode = mode;
                config.block_lines = 300;
                CAPTURE(system);
                CAPTURE(int(kernel));
                CHECK(roundtrip(text, config) == text);
            }
        }
        for (const FeatureSet features :
             {FeatureSet::Binary, FeatureSet::Intrinsic, FeatureSet::Full}) {
            RunConfig config = small_blocks();
            config.features = features;
            config.block_lines = 300;
            CHECK(roundtrip(text, config) == text);
        }
    }
}

TEST_CASE("fuzz corpus round trips with and without trailing newline") {
    const bytes bare = corpus::fuzz_corpus();
    REQUIRE_FALSE(bare.empty());
    REQUIRE(bare.back() != '\n');
    for (const std::uint8_t kernel : {kKernelNone, kKernelGzip, kKernelLzma}) {
        RunConfig config = small_blocks(kernel);
        config.block_lines = 997;
        CAPTURE(int(kernel));
        CHECK(roundtrip(bare, config) == bare);
        const bytes with_lf = bare + "\n";
        CHECK(roundtrip(with_lf, config) == with_lf);
    }
}

TEST_CASE("edge inputs") {
    RunConfig config = small_blocks();
    CHECK(roundtrip("", config) == "");
    CHECK(roundtrip("\n", config) == "\n");
    CHECK(roundtrip("\n\n\n", config) == "\n\n\n");
    CHECK(roundtrip("x", config) == "x");
    CHECK(roundtrip("x\n", config) == "x\n");
    const bytes lone(1, '\x01');
    CHECK(roundtrip(lone, config) == lone);
    // A line longer than the reader chunk.
    bytes big(3 << 20, 'a');
    big += " 123\nsecond";
    CHECK(roundtrip(big, config) == big);
}

TEST_CASE("block splitting is invisible in the output") {
    const bytes text = corpus::sample("sshd");
    RunConfig one = small_blocks();
    one.block_lines = 1;
    CHECK(roundtrip(text, one) == text);
    RunConfig whole = small_blocks();
    whole.block_lines = 1'000'000;
    CompressStats stats;
    const bytes archive = compress_text(text, whole, &stats);
    CHECK(stats.blocks == 1);
    CHECK(stats.lines == 2000);
    CHECK(decompress_archive(archive) == text);
}

TEST_CASE("worker count never changes the archive bytes") {
    const bytes text = corpus::sample("scheduler") + corpus::fuzz_corpus();
    RunConfig config = small_blocks(kKernelGzip);
    config.block_lines = 501;
    config.workers = 1;
    const bytes serial = compress_text(text, config);
    config.workers = 4;
    const bytes parallel = compress_text(text, config);
    CHECK(serial == parallel);
    CHECK(decompress_archive(parallel, 1) == text);
    CHECK(decompress_archive(parallel, 4) == text);
}

TEST_CASE("manifest reflects the run configuration") {
    RunConfig config = small_blocks(kKernelBzip2);
    config.mode = Mode::Lite;
    const bytes archive = compress_text("one 1\ntwo 2\n", config);
    std::istringstream in{std::string(archive), std::ios::binary};
    const Manifest manifest = read_manifest(in);
    CHECK(manifest.mode == Mode::Lite);
    CHECK(manifest.kernel_id == kKernelBzip2);
    CHECK(manifest.trailing_newline == true);
    CHECK(manifest.block_count == 1);
}

TEST_CASE("compression stats add up") {
    const bytes text = corpus::sample("webserver");
    CompressStats stats;
    RunConfig config = small_blocks();
    config.block_lines = 256;
    const bytes archive = compress_text(text, config, &stats);
    CHECK(stats.input_bytes == text.size());
    CHECK(stats.output_bytes == archive.size());
    CHECK(stats.lines == 2000);
    CHECK(stats.blocks == (2000 + 255) / 256);
}

TEST_CASE("invalid configurations are rejected before any work") {
    std::istringstream in{std::string("x\n"), std::ios::binary};
    std::ostringstream out{std::ios::binary};
    RunConfig config;
    SUBCASE("zero block lines") { config.block_lines = 0; }
    SUBCASE("zero workers") { config.workers = 0; }
    SUBCASE("level beyond kernel maximum") {
        config.kernel_id = kKernelNone;
        config.level = 3;
    }
    try {
        compress_stream(in, out, config);
        FAIL("expected a usage error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Usage);
    }
}

TEST_CASE("decompressing damaged archives raises block-tagged errors") {
    const bytes text = corpus::sample("coord");
    RunConfig config = small_blocks(kKernelGzip);
    config.block_lines = 200;
    const bytes archive = compress_text(text, config);
    // Damage one byte in the middle of the frame area.
    bytes bad = archive;
    bad[bad.size() / 2] ^= 0x20;
    std::istringstream in{std::string(bad), std::ios::binary};
    std::ostringstream out{std::ios::binary};
    CHECK_THROWS_AS(decompress_stream(in, out, 2), Error);
}

TEST_CASE("verify_file reports matches and mismatch offsets") {
    corpus::TempDir tmp;
    const bytes text = corpus::sample("mobile");
    const auto path = tmp.file("sample.log", text);
    RunConfig config = small_blocks(kKernelGzip);
    config.block_lines = 333;

    const VerifyOutcome ok = verify_file(path.string(), config);
    CHECK(ok.match);
    CHECK(ok.original_bytes == text.size());
    CHECK(ok.archive_bytes > 0);
    CHECK(ok.original_sha256.size() == 64);
    CHECK(ok.original_sha256 == ok.roundtrip_sha256);

    // The fault hook flips one byte on the write side, so verification must
    // fail at exactly that offset with differing digests.
    ::setenv("DELOG_VERIFY_FAULT_OFFSET", "100", 1);
    const VerifyOutcome bad = verify_file(path.string(), config);
    ::unsetenv("DELOG_VERIFY_FAULT_OFFSET");
    CHECK_FALSE(bad.match);
    CHECK(bad.first_diff == 100);
    CHECK(bad.original_sha256 != bad.roundtrip_sha256);
}

TEST_CASE("sha256 matches a known vector") {
    Sha256 h;
    h.update("abc");
    CHECK(h.hex_digest() == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
