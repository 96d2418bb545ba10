#include <doctest.h>

#include <algorithm>
#include <limits>
#include <random>
#include <set>
#include <tuple>
#include <vector>

#include "flowdse/kernel.hpp"

using namespace flowdse;

TEST_CASE("events run in time order, ties in insertion order") {
    Kernel k;
    k.schedule_at(5.0, EventKind::User, 1);
    k.schedule_at(1.0, EventKind::User, 2);
    k.schedule_at(5.0, EventKind::User, 3);
    k.schedule_at(3.0, EventKind::User, 4);
    std::vector<std::uint32_t> seen;
    auto n = k.run(std::numeric_limits<double>::infinity(), [&](const Event& e) { seen.push_back(e.target); });
    CHECK(n == 4);
    CHECK(seen == std::vector<std::uint32_t>{2, 4, 1, 3});
    CHECK(k.now() == 5.0);
}

TEST_CASE("run stops at the horizon and leaves later events pending") {
    Kernel k;
    k.schedule_at(1.0, EventKind::User, 0);
    k.schedule_at(10.0, EventKind::User, 0);
    k.schedule_at(10.5, EventKind::User, 0);
    auto n = k.run(10.0, [](const Event&) {});
    CHECK(n == 2);
    CHECK(k.pending() == 1);
    CHECK(k.now() == 10.0);
    CHECK(k.run(20.0, [](const Event&) {}) == 1);
    CHECK(k.now() == 20.0);
}

TEST_CASE("scheduling in the past throws") {
    Kernel k;
    k.schedule_at(2.0, EventKind::User, 0);
    k.run(2.0, [](const Event&) {});
    CHECK_THROWS_AS(k.schedule_at(1.0, EventKind::User, 0), SimulationError);
    CHECK_NOTHROW(k.schedule_at(2.0, EventKind::User, 0));
}

TEST_CASE("handlers may schedule follow-up events, including at the current time") {
    Kernel k;
    k.schedule_at(0.0, EventKind::User, 0);
    std::vector<std::pair<double, std::uint32_t>> log;
    k.run(100.0, [&](const Event& e) {
        log.emplace_back(k.now(), e.target);
        if (e.target < 3) {
            k.schedule_at(k.now(), EventKind::User, e.target + 10);
            k.schedule_at(k.now() + 1.0, EventKind::User, e.target + 1);
        }
    });
    // Zero-delay follow-ups run before the next time step.
    REQUIRE(log.size() == 7);
    CHECK(log[0] == std::pair{0.0, 0u});
    CHECK(log[1] == std::pair{0.0, 10u});
    CHECK(log[2] == std::pair{1.0, 1u});
    CHECK(log.back() == std::pair{3.0, 3u});
}

TEST_CASE("random schedules execute like a stable sort on time") {
    std::mt19937_64 rng(12345);
    for (int trial = 0; trial < 50; ++trial) {
        Kernel k;
        std::vector<std::pair<double, std::uint32_t>> expected;
        std::uniform_int_distribution<int> t(0, 20);
        for (std::uint32_t i = 0; i < 200; ++i) {
            double time = t(rng) * 0.5;
            k.schedule_at(time, EventKind::User, i);
            expected.emplace_back(time, i);
        }
        std::stable_sort(expected.begin(), expected.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        std::vector<std::pair<double, std::uint32_t>> got;
        double last = -1;
        bool monotone = true;
        k.run(std::numeric_limits<double>::infinity(), [&](const Event& e) {
            monotone = monotone && k.now() >= last;
            last = k.now();
            got.emplace_back(e.time, e.target);
        });
        CHECK(monotone);
        CHECK(got == expected);
    }
}

TEST_CASE("random streams are reproducible and label-separated") {
    RandomStream a(42, "lane-1/weights"), b(42, "lane-1/weights"), c(42, "lane-2/weights"), d(43, "lane-1/weights");
    std::vector<double> va, vb, vc, vd;
    for (int i = 0; i < 100; ++i) {
        va.push_back(a.uniform());
        vb.push_back(b.uniform());
        vc.push_back(c.uniform());
        vd.push_back(d.uniform());
    }
    CHECK(va == vb);
    CHECK(va != vc);
    CHECK(va != vd);
    CHECK(std::all_of(va.begin(), va.end(), [](double x) { return x >= 0.0 && x < 1.0; }));
}

TEST_CASE("hash_label is the 64-bit FNV-1a hash") {
    CHECK(hash_label("") == 0xcbf29ce484222325ULL);
    CHECK(hash_label("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("uniform draws have the right mean") {
    RandomStream s(7, "check");
    double sum = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) sum += s.uniform(100, 300);
    CHECK(sum / n == doctest::Approx(200).epsilon(0.005));
}
