#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "codecs.hpp"
#include "error.hpp"
#include "reference_codecs.hpp"

using namespace delog;
using namespace delog::codecs;

namespace {

bytes ref_to_bytes(const std::string& s) { return bytes(s); }

std::uint64_t decode_all(bytes_view data) {
    ByteCursor cur{data};
    const std::uint64_t v = elastic_decode(cur);
    REQUIRE(cur.done());
    return v;
}

}  // namespace

TEST_CASE("elastic pinned encodings") {
    CHECK(elastic_encode(12) == bytes("\x8C", 1));
    CHECK(elastic_encode(0) == bytes("\x80", 1));
    CHECK(elastic_encode(300) == bytes("\x02\xAC", 2));
    CHECK(elastic_encode(127) == bytes("\xFF", 1));
    CHECK(elastic_encode(128) == bytes("\x01\x80", 2));
}

TEST_CASE("elastic matches the bit-string reference on boundaries") {
    std::vector<std::uint64_t> values{0, 1, 127, 128, 129, 16383, 16384, 16385};
    for (int shift = 0; shift < 64; ++shift) {
        values.push_back(std::uint64_t(1) << shift);
        values.push_back((std::uint64_t(1) << shift) - 1);
    }
    values.push_back(std::numeric_limits<std::uint64_t>::max());
    for (std::uint64_t v : values) {
        CAPTURE(v);
        const bytes mine = elastic_encode(v);
        CHECK(mine == ref_to_bytes(refimpl::elastic_encode(v)));
        CHECK(mine.size() == elastic_size(v));
        CHECK(decode_all(mine) == v);
        std::size_t pos = 0;
        CHECK(refimpl::elastic_decode(std::string(mine), pos) == v);
    }
}

TEST_CASE("elastic random round trips against the reference") {
    std::mt19937_64 rng(42);
    for (int i = 0; i < 20000; ++i) {
        // Bias toward small widths so every byte-length is exercised.
        const int width = int(rng() % 64) + 1;
        const std::uint64_t v = rng() >> (64 - width);
        const bytes mine = elastic_encode(v);
        CHECK(mine == ref_to_bytes(refimpl::elastic_encode(v)));
        CHECK(decode_all(mine) == v);
    }
}

TEST_CASE("elastic decode rejects malformed input") {
    SUBCASE("unterminated") {
        const bytes data("\x01\x02\x03", 3);  // no stop bit anywhere
        ByteCursor cur{data};
        CHECK_THROWS_AS(elastic_decode(cur), Error);
    }
    SUBCASE("empty") {
        ByteCursor cur{bytes_view{}};
        CHECK_THROWS_AS(elastic_decode(cur), Error);
    }
    SUBCASE("too many continuation bytes") {
        bytes data(10, '\x7F');
        data += '\xFF';  // 11 bytes total
        ByteCursor cur{data};
        CHECK_THROWS_AS(elastic_decode(cur), Error);
    }
    SUBCASE("ten bytes overflowing 64 bits") {
        bytes data = "\x03";  // first group 2 bits, 9 more groups = 65 bits
        data += bytes(8, '\x7F');
        data += '\xFF';
        ByteCursor cur{data};
        CHECK_THROWS_AS(elastic_decode(cur), Error);
    }
    SUBCASE("maximum value is exactly ten bytes and legal") {
        const bytes mine = elastic_encode(std::numeric_limits<std::uint64_t>::max());
        CHECK(mine.size() == 10);
        CHECK(decode_all(mine) == std::numeric_limits<std::uint64_t>::max());
    }
}

TEST_CASE("zigzag maps sign alternation onto small naturals") {
    CHECK(zigzag(0) == 0);
    CHECK(zigzag(-1) == 1);
    CHECK(zigzag(1) == 2);
    CHECK(zigzag(-2) == 3);
    CHECK(zigzag(2) == 4);
    CHECK(zigzag(std::numeric_limits<std::int64_t>::min()) ==
          std::numeric_limits<std::uint64_t>::max());
    std::mt19937_64 rng(7);
    for (int i = 0; i < 10000; ++i) {
        const auto d = static_cast<std::int64_t>(rng());
        CHECK(unzigzag(zigzag(d)) == d);
        CHECK(zigzag(d) == refimpl::zigzag(d));
    }
}

TEST_CASE("delta streams match the reference") {
    std::mt19937_64 rng(99);
    for (int iter = 0; iter < 500; ++iter) {
        const std::size_t n = rng() % 50 + 1;
        std::vector<std::uint64_t> values(n);
        for (auto& v : values) v = rng() >> (rng() % 40 + 24);  // keep below 2^40
        const bytes mine = delta_encode(values);
        CHECK(mine == ref_to_bytes(refimpl::delta_encode(values)));
        CHECK(delta_decode(mine, n) == values);
        CHECK(refimpl::delta_decode(std::string(mine), n) == values);

        DeltaCursor cursor{mine};
        for (std::uint64_t v : values) CHECK(cursor.next() == v);
        CHECK(cursor.done());
    }
}

TEST_CASE("delta handles descending and flat runs") {
    const std::vector<std::uint64_t> values{100, 90, 90, 95, 0, 1000000};
    const bytes mine = delta_encode(values);
    CHECK(delta_decode(mine, values.size()) == values);
    CHECK(mine == ref_to_bytes(refimpl::delta_encode(values)));
}

TEST_CASE("delta decode error paths") {
    const std::vector<std::uint64_t> values{5, 6, 7};
    const bytes mine = delta_encode(values);
    SUBCASE("truncated stream") {
        const bytes cut(mine.data(), mine.size() - 1);
        CHECK_THROWS_AS(delta_decode(cut, values.size()), Error);
    }
    SUBCASE("trailing bytes rejected by full-buffer overload") {
        bytes extra = mine;
        extra += '\x80';
        CHECK_THROWS_AS(delta_decode(bytes_view(extra), values.size()), Error);
    }
}

TEST_CASE("dictionary matches the linear-scan reference") {
    std::mt19937_64 rng(1234);
    static const std::vector<std::string> pool{"alpha", "beta", "gamma", "delta", "x",
                                               "longer-token-value", ""};
    for (int iter = 0; iter < 300; ++iter) {
        const std::size_t n = rng() % 40;
        std::vector<bytes> tokens;
        std::vector<std::string> ref_tokens;
        for (std::size_t i = 0; i < n; ++i) {
            const std::string& t = pool[rng() % pool.size()];
            tokens.emplace_back(t);
            ref_tokens.push_back(t);
        }
        const DictBlobs mine = dict_encode(tokens);
        const refimpl::DictRef ref = refimpl::dict_encode(ref_tokens);
        CHECK(mine.keys == ref_to_bytes(refimpl::dict_keys_blob(ref)));
        CHECK(mine.ids == ref_to_bytes(refimpl::dict_ids_blob(ref)));
        CHECK(dict_decode(mine.keys, mine.ids) == tokens);
    }
}

TEST_CASE("dictionary ids are dense and first-appearance ordered") {
    DictEncoder enc;
    CHECK(enc.add("b") == 0);
    CHECK(enc.add("a") == 1);
    CHECK(enc.add("b") == 0);
    CHECK(enc.add("c") == 2);
    CHECK(enc.distinct() == 3);
    CHECK(enc.occurrences() == 4);
    const auto keys = dict_keys_decode(enc.keys_blob());
    REQUIRE(keys.size() == 3);
    CHECK(keys[0] == "b");
    CHECK(keys[1] == "a");
    CHECK(keys[2] == "c");
}

TEST_CASE("dictionary decode rejects out-of-range ids") {
    DictEncoder enc;
    enc.add("only");
    bytes ids = enc.ids_blob();
    ids += elastic_encode(9);  // id beyond key count
    CHECK_THROWS_AS(dict_decode(enc.keys_blob(), ids), Error);
}

TEST_CASE("dictionary keys blob round trips binary tokens") {
    std::vector<bytes> tokens;
    tokens.push_back(bytes("\x00\x01\x02", 3));
    tokens.push_back(bytes("\xFF\xFE", 2));
    tokens.push_back(bytes());
    tokens.push_back(bytes("\x00\x01\x02", 3));
    const DictBlobs blobs = dict_encode(tokens);
    CHECK(dict_decode(blobs.keys, blobs.ids) == tokens);
}
