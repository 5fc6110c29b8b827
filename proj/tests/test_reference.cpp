#include <doctest.h>

#include <cmath>

#include "lmq/reference.hpp"
#include "lmq/stream.hpp"

using namespace lmq;

TEST_CASE("exact oracle bookkeeping") {
    ExactOracle o;
    CHECK(o.total_weight() == 0);
    CHECK(o.f2() == 0);
    o.add(1, 2);
    o.add(2, 3);
    o.add(1, 1);
    CHECK(o.total_weight() == 6);
    CHECK(o.frequency(1) == 3);
    CHECK(o.frequency(5) == 0);
    CHECK(o.f2() == 9 + 9);
}

TEST_CASE("ladder estimators: empty stream and one-sidedness") {
    const std::vector<Tuple> empty;
    CHECK(wide_cmplus(empty, 8, 1, 1024, 1) == 0);
    CHECK(part_cmplus(empty, 4, 8, 256, 1) == 0);
    CHECK(partas_cmplus(empty, 4, 8, 256, 16, 1) == 0);

    const auto stream = gen_zipf(StreamSpec{1.5, 2000, 50000, 7});
    ExactOracle oracle;
    oracle.add_stream(stream);
    const std::uint64_t truth = oracle.f2();

    const std::uint64_t wide = wide_cmplus(stream, 8, 4, 256, 3);
    const std::uint64_t part = part_cmplus(stream, 4, 8, 256, 3);
    const std::uint64_t partas = partas_cmplus(stream, 4, 8, 248, 16, 3);
    CHECK(wide >= truth);
    CHECK(part >= truth);
    CHECK(partas >= truth);

    // fixed-seed trend: partitioning helps, filters help further
    CHECK(part <= wide);
    CHECK(partas <= part);
}

TEST_CASE("part_cmplus with P=1 and equal geometry equals wide_cmplus") {
    const auto stream = gen_zipf(StreamSpec{1.2, 500, 20000, 9});
    CHECK(part_cmplus(stream, 1, 8, 1024, 5) == wide_cmplus(stream, 8, 1, 1024, 5));
}

TEST_CASE("partas is filter-exact for a lone key") {
    const std::vector<Tuple> stream(5, Tuple{77, 1});
    CHECK(partas_cmplus(stream, 1, 8, 64, 16, 1) == 25);
}

TEST_CASE("fast-agms basics") {
    const std::vector<Tuple> empty;
    CHECK(fast_agms_f2(empty, 6, 1024, 1) == 0);

    const std::vector<Tuple> one{{42, 7}};
    CHECK(fast_agms_f2(one, 6, 1024, 1) == 49);  // single bucket, sign^2 = 1
}

TEST_CASE("fast-agms relative error under 5% at the paper geometry") {
    // z = 1.0 stream at 6 x 2^13, fixed seeds
    const auto stream = gen_zipf(StreamSpec{1.0, 100000, 10000000, 19});
    ExactOracle oracle;
    oracle.add_stream(stream);
    const double truth = static_cast<double>(oracle.f2());
    const double est = static_cast<double>(fast_agms_f2(stream, 6, 8192, 19));
    CHECK(std::abs(est - truth) / truth < 0.05);
}

TEST_CASE("mape") {
    CHECK(mape({100.0, 50.0}, {100.0, 50.0}) == 0.0);
    CHECK(mape({110.0}, {100.0}) == doctest::Approx(10.0));
    CHECK(mape({110.0, 90.0}, {100.0, 100.0}) == doctest::Approx(10.0));
    CHECK_THROWS_AS(mape({1.0}, {1.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(mape({1.0}, {0.0}), std::invalid_argument);
}

TEST_CASE("cols_for_budget accounting") {
    // 32 KiB, H=8, C=16: no delegation filters -> (32768 - 512) / 32
    CHECK(cols_for_budget(32768, 8, 0, 16) == 1008);
    // LMQ at P=4: (32768 - 512 - 1024) / 32
    CHECK(cols_for_budget(32768, 8, 4, 16) == 976);
    // LMQ at P=16: (32768 - 512 - 4096) / 32
    CHECK(cols_for_budget(32768, 8, 16, 16) == 880);
    CHECK_THROWS_AS(cols_for_budget(600, 8, 16, 16), std::invalid_argument);
}
