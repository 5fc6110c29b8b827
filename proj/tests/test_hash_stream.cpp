#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "lmq/hash.hpp"
#include "lmq/stream.hpp"

using namespace lmq;

namespace {

std::string temp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("multiply-shift hash is deterministic per seed and differs per row") {
    std::uint64_t s1 = 42, s2 = 42, s3 = 43;
    MultiplyShiftHash a(s1), b(s2), c(s3);
    const std::uint64_t probes[] = {0, 1, 77, 1ULL << 20, UINT64_MAX};
    for (std::uint64_t k : probes) {
        CHECK(a(k) == b(k));
    }
    int diffs = 0;
    for (std::uint64_t k = 0; k < 64; ++k) {
        if (a(k) != c(k)) ++diffs;
    }
    CHECK(diffs > 60);
}

TEST_CASE("zipf generator: determinism and trivial cases") {
    StreamSpec spec{1.5, 1000, 5000, 7};
    const auto s1 = gen_zipf(spec);
    const auto s2 = gen_zipf(spec);
    CHECK(s1 == s2);
    CHECK(s1.size() == 5000);
    for (const Tuple& t : s1) {
        CHECK(t.value == 1);
        CHECK(t.key < 1000);
    }

    spec.length = 0;
    CHECK(gen_zipf(spec).empty());
}

TEST_CASE("zipf z=0 is uniform within 2% over 1M samples on 100 keys") {
    StreamSpec spec{0.0, 100, 1000000, 397};
    const auto s = gen_zipf(spec);
    std::vector<std::uint64_t> counts(100, 0);
    for (const Tuple& t : s) counts[t.key]++;
    const double expected = 10000.0;
    for (std::uint32_t k = 0; k < 100; ++k) {
        CHECK(std::abs(static_cast<double>(counts[k]) - expected) <= 0.02 * expected);
    }
}

TEST_CASE("zipf skew concentrates mass on low ranks") {
    StreamSpec spec{2.0, 1000, 100000, 11};
    const auto s = gen_zipf(spec);
    std::uint64_t rank0 = 0;
    for (const Tuple& t : s) rank0 += t.key == 0;
    CHECK(rank0 > 50000);  // z=2 gives rank 0 ~ 61% of mass
}

TEST_CASE("tuple file round-trip identity") {
    StreamSpec spec{1.0, 500, 1000, 5};
    const auto tuples = gen_zipf(spec);
    const std::string path = temp_path("lmq_roundtrip.bin");
    write_tuples(path, tuples);
    const auto back = read_tuples(path);
    CHECK(back == tuples);
    std::filesystem::remove(path);
}

TEST_CASE("tuple file error kinds are distinct") {
    const std::string path = temp_path("lmq_badfile.bin");

    SUBCASE("empty file -> bad magic") {
        std::ofstream(path, std::ios::binary | std::ios::trunc).close();
        CHECK_THROWS_WITH_AS(read_tuples(path), doctest::Contains("bad magic"), TupleFileError);
        try {
            read_tuples(path);
        } catch (const TupleFileError& e) {
            CHECK(e.kind() == TupleFileErrorKind::bad_magic);
        }
    }

    SUBCASE("wrong version") {
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        f.write("LMQS", 4);
        const std::uint16_t version = 99;
        const std::uint64_t count = 0;
        f.write(reinterpret_cast<const char*>(&version), sizeof version);
        f.write(reinterpret_cast<const char*>(&count), sizeof count);
        f.close();
        try {
            read_tuples(path);
            FAIL("expected version mismatch");
        } catch (const TupleFileError& e) {
            CHECK(e.kind() == TupleFileErrorKind::version_mismatch);
        }
    }

    SUBCASE("truncated body") {
        write_tuples(path, {{1, 1}, {2, 2}});
        std::filesystem::resize_file(path, std::filesystem::file_size(path) - 5);
        try {
            read_tuples(path);
            FAIL("expected truncation error");
        } catch (const TupleFileError& e) {
            CHECK(e.kind() == TupleFileErrorKind::truncated);
        }
    }

    std::filesystem::remove(path);
}

TEST_CASE("csv fallback parses equivalently") {
    StreamSpec spec{1.2, 100, 500, 9};
    const auto tuples = gen_zipf(spec);
    const std::string bin = temp_path("lmq_eq.bin");
    const std::string csv = temp_path("lmq_eq.csv");
    write_tuples(bin, tuples);
    write_tuples_csv(csv, tuples);
    CHECK(read_tuples(bin) == read_tuples_csv(csv));
    std::filesystem::remove(bin);
    std::filesystem::remove(csv);
}

TEST_CASE("split_round_robin") {
    StreamSpec spec{1.0, 50, 8, 2};
    const auto tuples = gen_zipf(spec);

    SUBCASE("P=1 identity") {
        const auto subs = split_round_robin(tuples, 1);
        REQUIRE(subs.size() == 1);
        CHECK(subs[0] == tuples);
    }

    SUBCASE("P=4 on 8 tuples -> sizes 2,2,2,2 and multiset preserved") {
        const auto subs = split_round_robin(tuples, 4);
        REQUIRE(subs.size() == 4);
        std::vector<Tuple> merged;
        for (const auto& s : subs) {
            CHECK(s.size() == 2);
            merged.insert(merged.end(), s.begin(), s.end());
        }
        auto key_of = [](const Tuple& t) { return (std::uint64_t(t.key) << 32) | t.value; };
        auto lt = [&](const Tuple& a, const Tuple& b) { return key_of(a) < key_of(b); };
        std::vector<Tuple> orig = tuples;
        std::sort(orig.begin(), orig.end(), lt);
        std::sort(merged.begin(), merged.end(), lt);
        CHECK(orig == merged);
    }

    SUBCASE("element i goes to sub-stream i mod P") {
        const auto subs = split_round_robin(tuples, 3);
        for (std::size_t i = 0; i < tuples.size(); ++i) {
            CHECK(subs[i % 3][i / 3] == tuples[i]);
        }
    }
}

TEST_CASE("stream_weight sums values") {
    CHECK(stream_weight({}) == 0);
    CHECK(stream_weight({{1, 2}, {9, 3}}) == 5);
}
