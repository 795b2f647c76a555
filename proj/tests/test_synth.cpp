#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>

#include "pspns/synth.hpp"

using namespace pspns;

namespace {

SyntheticSpec base_spec(uint64_t seed) {
    SyntheticSpec s;
    s.n_users = 60;
    s.n_items = 40;
    s.n_blocks = 4;
    s.density_in = 0.4;
    s.density_out = 0.02;
    s.noise_rate = 0.0;
    s.activity_skew = 1.2;
    s.seed = seed;
    return s;
}

}  // namespace

TEST_CASE("spec validation rejects degenerate parameters", "[synth]") {
    auto reject = [](auto mutate) {
        SyntheticSpec s = base_spec(0);
        mutate(s);
        REQUIRE_THROWS(s.validate());
    };
    reject([](SyntheticSpec& s) { s.n_users = 0; });
    reject([](SyntheticSpec& s) { s.n_items = 0; });
    reject([](SyntheticSpec& s) { s.n_blocks = 0; });
    reject([](SyntheticSpec& s) { s.n_blocks = 41; });  // more blocks than items
    reject([](SyntheticSpec& s) { s.density_in = 0.0; });
    reject([](SyntheticSpec& s) { s.density_out = s.density_in; });  // in must dominate
    reject([](SyntheticSpec& s) { s.noise_rate = 1.0; });
    reject([](SyntheticSpec& s) { s.noise_rate = -0.1; });
    reject([](SyntheticSpec& s) { s.activity_skew = 0.0; });
    REQUIRE_NOTHROW(base_spec(0).validate());
}

TEST_CASE("block assignment partitions users and items contiguously", "[synth]") {
    SyntheticSpec s = base_spec(0);
    REQUIRE(block_of_user(s, 0) == 0);
    REQUIRE(block_of_user(s, 14) == 0);
    REQUIRE(block_of_user(s, 15) == 1);
    REQUIRE(block_of_user(s, 59) == 3);
    REQUIRE(block_of_item(s, 9) == 0);
    REQUIRE(block_of_item(s, 10) == 1);
    // every block non-empty and sizes differ by at most one
    SyntheticSpec odd = base_spec(0);
    odd.n_users = 33;
    odd.n_blocks = 5;
    std::vector<int> count(5, 0);
    for (uint32_t u = 0; u < 33; ++u) count[block_of_user(odd, u)]++;
    int lo = *std::min_element(count.begin(), count.end());
    int hi = *std::max_element(count.begin(), count.end());
    REQUIRE(lo >= 6);
    REQUIRE(hi - lo <= 1);
}

TEST_CASE("noise-free observations are contained in the truth sets", "[synth]") {
    SyntheticData d = generate_synthetic(base_spec(5));
    REQUIRE(!d.observed.empty());
    REQUIRE(d.n_flipped == 0);
    for (const auto& [u, p] : d.observed) {
        const auto& t = d.truth[u];
        REQUIRE(std::binary_search(t.begin(), t.end(), p));
    }
}

TEST_CASE("truth always contains the user's full own block", "[synth]") {
    SyntheticSpec spec = base_spec(9);
    spec.noise_rate = 0.2;
    SyntheticData d = generate_synthetic(spec);
    for (uint32_t u = 0; u < spec.n_users; ++u) {
        uint32_t b = block_of_user(spec, u);
        for (uint32_t p = 0; p < spec.n_items; ++p)
            if (block_of_item(spec, p) == b)
                REQUIRE(std::binary_search(d.truth[u].begin(), d.truth[u].end(), p));
    }
}

TEST_CASE("generation is deterministic in the seed and sensitive to it", "[synth]") {
    SyntheticData a = generate_synthetic(base_spec(21));
    SyntheticData b = generate_synthetic(base_spec(21));
    SyntheticData c = generate_synthetic(base_spec(22));
    REQUIRE(a.observed == b.observed);
    REQUIRE(a.truth == b.truth);
    REQUIRE(a.activity == b.activity);
    REQUIRE(a.observed != c.observed);
}

TEST_CASE("observed pairs are sorted and unique", "[synth]") {
    SyntheticSpec spec = base_spec(33);
    spec.noise_rate = 0.15;
    SyntheticData d = generate_synthetic(spec);
    REQUIRE(std::is_sorted(d.observed.begin(), d.observed.end()));
    REQUIRE(std::adjacent_find(d.observed.begin(), d.observed.end()) == d.observed.end());
    for (const auto& [u, p] : d.observed) {
        REQUIRE(u < spec.n_users);
        REQUIRE(p < spec.n_items);
    }
}

TEST_CASE("activity multipliers follow the heavy-tailed draw", "[synth]") {
    SyntheticData d = generate_synthetic(base_spec(41));
    REQUIRE(d.activity.size() == 60);
    for (double a : d.activity) REQUIRE(a >= 1.0);  // (1-u)^(-1/skew) with u in [0,1)
    // the tail produces at least one user well above the median
    double hi = *std::max_element(d.activity.begin(), d.activity.end());
    REQUIRE(hi > 1.5);
}

TEST_CASE("flip count tracks the noise rate", "[synth]") {
    SyntheticSpec spec = base_spec(55);
    spec.n_users = 300;
    spec.n_items = 200;
    spec.noise_rate = 0.1;
    SyntheticData noisy = generate_synthetic(spec);
    spec.noise_rate = 0.0;
    SyntheticData clean = generate_synthetic(spec);
    // per-pair flip draws run over the pre-noise observations
    double draws = static_cast<double>(clean.observed.size());
    double expect = 0.1 * draws;
    double sigma = std::sqrt(draws * 0.1 * 0.9);
    REQUIRE(std::abs(static_cast<double>(noisy.n_flipped) - expect) < 4.0 * sigma);
    REQUIRE(noisy.n_flipped > 0);
}

TEST_CASE("noise moves observations off the truth support", "[synth]") {
    SyntheticSpec spec = base_spec(61);
    spec.noise_rate = 0.3;
    SyntheticData d = generate_synthetic(spec);
    size_t off_truth = 0;
    for (const auto& [u, p] : d.observed)
        if (!std::binary_search(d.truth[u].begin(), d.truth[u].end(), p)) ++off_truth;
    REQUIRE(off_truth > 0);
}
