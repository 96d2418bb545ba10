#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "flowdse/evaluator.hpp"
#include "support.hpp"

using namespace flowdse;

namespace {

Scenario two_recipe_scenario() {
    Scenario sc;
    sc.id = "s";
    sc.horizon = 3600;
    Recipe a{"1", "batching1", 1, Throughput::per_minute(60), 100, 200, 50};
    Recipe b{"2", "burger", 2, Throughput::per_minute(30), 200, 300, 100};
    Recipe d{"3", "fillet-strips", std::nullopt, std::nullopt, 0, 1000, 0};
    sc.recipes = {a, b, d};
    return sc;
}

RunTallies tallies(std::uint64_t a, std::uint64_t b, std::uint64_t d) {
    RunTallies t;
    t.horizon = 3600;
    t.destinations.recipe_absorbed = {a, b, d};
    t.destinations.count = {a, b, d};
    t.destinations.mass = {0, 0, 0};
    t.injected = a + b + d;
    return t;
}

std::set<std::size_t> brute_front(const std::vector<KpiVector>& v) {
    std::set<std::size_t> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        bool dominated = false;
        for (std::size_t j = 0; j < v.size() && !dominated; ++j) {
            if (i == j) continue;
            bool ge = true, gt = false;
            for (std::size_t k = 0; k < v[i].values.size(); ++k) {
                ge = ge && v[j].values[k] >= v[i].values[k];
                gt = gt || v[j].values[k] > v[i].values[k];
            }
            dominated = ge && gt;
        }
        if (!dominated) out.insert(i);
    }
    return out;
}

std::vector<KpiVector> random_vectors(std::mt19937_64& rng, std::size_t n, std::size_t dims, bool coarse) {
    std::uniform_real_distribution<double> u(0, 1);
    std::uniform_int_distribution<int> grid(0, 5);
    std::vector<KpiVector> v;
    for (std::size_t i = 0; i < n; ++i) {
        KpiVector k{i, {}};
        for (std::size_t d = 0; d < dims; ++d) k.values.push_back(coarse ? grid(rng) / 5.0 : u(rng));
        v.push_back(std::move(k));
    }
    return v;
}

std::multiset<std::vector<double>> values_of(const std::vector<KpiVector>& v) {
    std::multiset<std::vector<double>> out;
    for (const auto& k : v) out.insert(k.values);
    return out;
}

std::vector<KpiVector> front_vectors(const std::vector<KpiVector>& v) {
    std::vector<KpiVector> out;
    for (auto i : pareto_front(v)) out.push_back(v[i]);
    return out;
}

} // namespace

TEST_CASE("attainment is achieved over target throughput") {
    const auto sc = two_recipe_scenario();
    const std::vector<std::string> tags{"batching1", "burger", "fillet-strips"};
    auto r = score(tallies(1800, 0, 500), sc, tags);
    REQUIRE(r.recipes.size() == 3);
    CHECK(r.recipes[0].achieved_per_min == doctest::Approx(30));
    CHECK(r.recipes[0].attainment == doctest::Approx(0.5));
    CHECK(r.recipes[1].attainment == 0.0);
    CHECK(r.recipes[2].is_default);
    CHECK(r.kpi == doctest::Approx(0.25));

    auto over = score(tallies(4000, 1800, 0), sc, tags);
    CHECK(over.recipes[0].attainment == 1.0);
    CHECK(over.recipes[1].attainment == 1.0);
    CHECK(over.kpi == 1.0);
    auto raw = score(tallies(4000, 1800, 0), sc, tags, ScoreOptions{false});
    CHECK(raw.recipes[0].attainment == doctest::Approx(4000.0 / 60 / 60));
    CHECK(raw.kpi > 1.0);
}

TEST_CASE("pareto front examples") {
    std::vector<KpiVector> a{{0, {1, 0}}, {1, {0, 1}}, {2, {0.5, 0.5}}};
    CHECK(pareto_front(a) == std::vector<std::size_t>{0, 1, 2});
    std::vector<KpiVector> b{{0, {1, 1}}, {1, {0.5, 0.5}}};
    CHECK(pareto_front(b) == std::vector<std::size_t>{0});
    std::vector<KpiVector> ties{{0, {0.7, 0.2}}, {1, {0.7, 0.2}}, {2, {0.1, 0.1}}};
    CHECK(pareto_front(ties) == std::vector<std::size_t>{0, 1});
    CHECK(pareto_front(std::vector<KpiVector>{}).empty());
}

TEST_CASE("pareto front equals the pairwise oracle on random sets") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        const auto v = random_vectors(rng, 1 + trial % 60, 2 + trial % 3, trial % 2 == 0);
        auto f = pareto_front(v);
        CHECK(std::set<std::size_t>(f.begin(), f.end()) == brute_front(v));
    }
}

TEST_CASE("adding a dominated vector leaves the front unchanged") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        auto v = random_vectors(rng, 30, 2, false);
        const auto before = values_of(front_vectors(v));
        // Strictly below some existing vector.
        auto extra = v[trial % v.size()];
        for (auto& x : extra.values) x -= 0.01;
        v.push_back(extra);
        CHECK(values_of(front_vectors(v)) == before);
    }
}

TEST_CASE("adding a dominating vector removes exactly what it dominates") {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 100; ++trial) {
        auto v = random_vectors(rng, 30, 3, false);
        const auto before = front_vectors(v);
        KpiVector top{999, {}};
        const auto& base = before[trial % before.size()];
        for (auto x : base.values) top.values.push_back(x + 0.05);
        v.push_back(top);
        auto expected = values_of({top});
        for (const auto& f : before)
            if (!dominates(top, f)) expected.insert(f.values);
        CHECK(values_of(front_vectors(v)) == expected);
    }
}

TEST_CASE("merging partial fronts equals the front of the union") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        auto a = random_vectors(rng, 25, 2, trial % 2 == 0);
        auto b = random_vectors(rng, 25, 2, trial % 2 == 0);
        auto c = random_vectors(rng, 25, 2, trial % 2 == 0);
        std::vector<KpiVector> all(a);
        all.insert(all.end(), b.begin(), b.end());
        const auto merged = merge_fronts(front_vectors(a), front_vectors(b));
        CHECK(values_of(merged) == values_of(front_vectors(all)));
        // Associative.
        auto left = merge_fronts(merge_fronts(front_vectors(a), front_vectors(b)), front_vectors(c));
        auto right = merge_fronts(front_vectors(a), merge_fronts(front_vectors(b), front_vectors(c)));
        CHECK(values_of(left) == values_of(right));
    }
}

TEST_CASE("stop-first replay halts at the first qualifying design") {
    // Recorded KPI vectors; design #37 (index 36) is the first with >= 0.8 and >= 0.6.
    std::vector<KpiVector> recorded;
    for (std::size_t d = 0; d < 100; ++d) recorded.push_back({d, {0.5 + 0.004 * d, 0.3}});
    recorded[12].values = {0.9, 0.55};
    recorded[20].values = {0.79, 0.95};
    recorded[36].values = {0.8, 0.6};
    recorded[50].values = {0.95, 0.9};
    std::size_t calls = 0;
    auto eval = [&](std::size_t d) {
        ++calls;
        return recorded[d];
    };
    Thresholds t{{0.8, 0.6}};
    CHECK(explore_until(recorded.size(), eval, t) == 37);
    CHECK(calls == 37);
    CHECK(explore_until(recorded.size(), eval, std::nullopt) == 100);
    Thresholds impossible{{1.1, std::nullopt}};
    CHECK(explore_until(recorded.size(), eval, impossible) == 100);
    CHECK(filter_by_minimums(recorded, impossible).empty());
    CHECK(filter_by_minimums(recorded, t) == std::vector<std::size_t>{36, 50});
}

TEST_CASE("weighted ranking") {
    std::vector<KpiVector> v{{0, {1, 0}}, {1, {0, 1}}, {2, {0.6, 0.6}}};
    const double w[] = {0.5, 0.5};
    auto r = rank_by_weights(v, w);
    CHECK(r[0].first == 2);
    CHECK(r[0].second == doctest::Approx(0.6));
    const double skew[] = {1, 0};
    CHECK(rank_by_weights(v, skew)[0].first == 0);
}
