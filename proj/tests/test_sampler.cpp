#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "pspns/rng.hpp"
#include "pspns/sampler.hpp"

using namespace pspns;

TEST_CASE("uniform sampling avoids the exclusion set", "[sampler]") {
    RandomStream rng(1);
    std::vector<uint32_t> excl = {1, 3};
    for (int i = 0; i < 2000; ++i) {
        uint32_t p = sample_uniform(5, excl, rng);
        REQUIRE(p < 5);
        REQUIRE_FALSE(is_excluded(excl, p));
    }
}

TEST_CASE("uniform sampling falls back to the complement when rejection starves", "[sampler]") {
    // 1 eligible item out of 200: rejection nearly always exhausts its tries
    std::vector<uint32_t> excl;
    for (uint32_t p = 0; p < 200; ++p)
        if (p != 137) excl.push_back(p);
    RandomStream rng(2);
    for (int i = 0; i < 50; ++i) REQUIRE(sample_uniform(200, excl, rng) == 137);
}

TEST_CASE("uniform sampling errors when nothing is eligible", "[sampler]") {
    std::vector<uint32_t> excl = {0, 1, 2};
    RandomStream rng(3);
    REQUIRE_THROWS(sample_uniform(3, excl, rng));
    REQUIRE_THROWS(sample_uniform(0, {}, rng));
}

TEST_CASE("popularity sampling is proportional to degree^exponent", "[sampler]") {
    PopularityDist dist(std::vector<uint32_t>{1, 0, 3}, 1.0);
    RandomStream rng(4);
    int counts[3] = {0, 0, 0};
    const int draws = 40000;
    for (int i = 0; i < draws; ++i) ++counts[dist.sample({}, rng)];
    REQUIRE(counts[1] == 0);  // zero degree, zero mass
    // item 2 mass = 3/4; binomial sd ~ 87, allow 6 sigma
    REQUIRE(std::abs(counts[2] - draws * 3 / 4) < 550);
}

TEST_CASE("exponent zero flattens positive-degree items", "[sampler]") {
    PopularityDist dist(std::vector<uint32_t>{5, 0, 1}, 0.0);
    RandomStream rng(5);
    int counts[3] = {0, 0, 0};
    const int draws = 40000;
    for (int i = 0; i < draws; ++i) ++counts[dist.sample({}, rng)];
    REQUIRE(counts[1] == 0);
    REQUIRE(std::abs(counts[0] - draws / 2) < 600);
}

TEST_CASE("popularity sampling respects exclusions through the fallback", "[sampler]") {
    PopularityDist dist(std::vector<uint32_t>{1, 1000000}, 1.0);
    std::vector<uint32_t> excl = {1};  // excludes nearly all the mass
    RandomStream rng(6);
    for (int i = 0; i < 20; ++i) REQUIRE(dist.sample(excl, rng) == 0);
    std::vector<uint32_t> all = {0, 1};
    REQUIRE_THROWS(dist.sample(all, rng));
    PopularityDist empty(std::vector<uint32_t>{0, 0}, 1.0);
    REQUIRE_THROWS(empty.sample({}, rng));
    REQUIRE_THROWS(PopularityDist(std::vector<uint32_t>{1}, -1.0));
}

TEST_CASE("dynamic sampling picks the best-scoring candidate", "[sampler]") {
    // two eligible items; 64 candidates make missing one astronomically rare
    std::vector<uint32_t> excl = {0};
    auto score = [](uint32_t p) { return p == 2 ? 5.0 : 1.0; };
    RandomStream rng(7);
    for (int i = 0; i < 50; ++i) REQUIRE(sample_dynamic(3, excl, score, 64, rng) == 2);
}

TEST_CASE("dynamic sampling breaks score ties toward the lower index", "[sampler]") {
    auto flat = [](uint32_t) { return 1.0; };
    RandomStream rng(8);
    for (int i = 0; i < 50; ++i) REQUIRE(sample_dynamic(2, {}, flat, 64, rng) == 0);
    REQUIRE_THROWS(sample_dynamic(2, {}, flat, 0, rng));
}

TEST_CASE("samplers are stream-deterministic", "[sampler]") {
    std::vector<uint32_t> excl = {2};
    RandomStream a(9), b(9);
    for (int i = 0; i < 200; ++i) REQUIRE(sample_uniform(10, excl, a) == sample_uniform(10, excl, b));
}

TEST_CASE("sampler kinds parse and print", "[sampler]") {
    for (SamplerKind k : {SamplerKind::uniform, SamplerKind::popularity, SamplerKind::dynamic})
        REQUIRE(parse_sampler_kind(to_string(k)) == k);
    REQUIRE_THROWS(parse_sampler_kind("bogus"));
}
