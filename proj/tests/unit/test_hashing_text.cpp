#include <doctest.h>

#include <array>
#include <set>

#include "reldata/hashing.hpp"
#include "reldata/parallel.hpp"
#include "reldata/text.hpp"
#include "reldata/types.hpp"
#include "support.hpp"

using namespace reldata;

TEST_CASE("fnv1a64 matches published test vectors") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
    static_assert(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("fnv1a64 chains across calls") {
    CHECK(fnv1a64("bar", fnv1a64("foo")) == fnv1a64("foobar"));
}

TEST_CASE("to_hex64 pads to sixteen digits") {
    CHECK(to_hex64(0) == "0000000000000000");
    CHECK(to_hex64(0xabcULL) == "0000000000000abc");
    CHECK(to_hex64(0xffffffffffffffffULL) == "ffffffffffffffff");
}

TEST_CASE("hash_file hashes bytes and rejects missing files") {
    testsupport::TempDir dir{"hash"};
    testsupport::write_file(dir / "x.txt", "foobar");
    CHECK(hash_file(dir / "x.txt") == to_hex64(fnv1a64("foobar")));
    CHECK_THROWS_AS(hash_file(dir / "missing.txt"), DataError);
}

TEST_CASE("SplitMix64 reproduces the reference sequence for seed 0") {
    SplitMix64 rng{0};
    CHECK(rng.next() == 0xe220a8397b1dcdafULL);
    CHECK(rng.next() == 0x6e789e6aa1b965f4ULL);
    CHECK(rng.next() == 0x06c45d188009454fULL);
}

TEST_CASE("SplitMix64 bounded draws stay in range and cover it") {
    SplitMix64 rng{42};
    std::array<int, 7> hist{};
    for (int i = 0; i < 70000; ++i) {
        const auto v = rng.below(7);
        REQUIRE(v < 7);
        ++hist[v];
    }
    for (const int h : hist) {
        CHECK(h > 9000);
        CHECK(h < 11000);
    }
    CHECK(rng.below(1) == 0);
}

TEST_CASE("SplitMix64 unit draws lie in [0, 1)") {
    SplitMix64 rng{9};
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.unit();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
    }
}

TEST_CASE("derive_seed depends on master and key") {
    CHECK(derive_seed(1, "abc") == derive_seed(1, "abc"));
    CHECK(derive_seed(1, "abc") != derive_seed(2, "abc"));
    CHECK(derive_seed(1, "abc") != derive_seed(1, "abd"));
    CHECK(derive_seed(5, "k") == SplitMix64::mix(5 ^ fnv1a64("k")));
}

TEST_CASE("nfc_lower composes and lowercases") {
    CHECK(text::nfc_lower("E\xCC\x81") == "\xC3\xA9");
    CHECK(text::nfc_lower("\xC3\x89") == "\xC3\xA9");
    CHECK(text::nfc_lower("Red SHOES") == "red shoes");
    CHECK(text::nfc_lower("\xC3\x84pfel") == "\xC3\xA4pfel");
    CHECK_THROWS_AS(text::nfc_lower("\xff\xfe"), DataError);
}

TEST_CASE("code_points splits multibyte text") {
    const auto cps = text::code_points("a\xC3\xA9\xE2\x9F\xA6");
    REQUIRE(cps.size() == 3);
    CHECK(cps[0] == "a");
    CHECK(cps[1] == "\xC3\xA9");
    CHECK(cps[2] == "\xE2\x9F\xA6");
}

TEST_CASE("whitespace helpers") {
    CHECK(text::trim("  a b \t") == "a b");
    CHECK(text::trim("   ").empty());
    CHECK(text::split_whitespace("  a \t b\n") == std::vector<std::string>{"a", "b"});
    CHECK(text::split_whitespace("").empty());
    CHECK(text::split("a > b > c", " > ") == std::vector<std::string>{"a", "b", "c"});
    CHECK(text::split("a,,b", ",") == std::vector<std::string>{"a", "", "b"});
    CHECK(text::normalize_query("  Red   SHOES ") == "red shoes");
}

TEST_CASE("is_valid_utf8") {
    CHECK(text::is_valid_utf8("plain"));
    CHECK(text::is_valid_utf8("\xC3\xA9"));
    CHECK_FALSE(text::is_valid_utf8("\xC3"));
    CHECK_FALSE(text::is_valid_utf8("\xff"));
}

TEST_CASE("parallel_for visits each index once for any worker count") {
    for (const std::size_t workers : {1U, 2U, 7U, 64U}) {
        std::vector<int> hits(1000, 0);
        parallel_for(hits.size(), workers, [&](std::size_t i) { ++hits[i]; });
        CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
    }
}

TEST_CASE("parallel_for rethrows the first failure") {
    CHECK_THROWS_AS(parallel_for(100, 4,
                                 [](std::size_t i) {
                                     if (i == 37) throw DataError("boom");
                                 }),
                    DataError);
    parallel_for(0, 4, [](std::size_t) { FAIL("no work expected"); });
}

TEST_CASE("task and origin wire names round-trip") {
    CHECK(parse_task("QC") == Task::QC);
    CHECK(parse_task(to_string(Task::QI)) == Task::QI);
    CHECK_THROWS_AS(parse_task("qx"), DataError);
    for (const auto o : {Origin::Original, Origin::Translated, Origin::SyntheticNegative}) {
        CHECK(parse_origin(to_string(o)) == o);
    }
}
