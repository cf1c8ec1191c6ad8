#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "cds/error.hpp"
#include "cds/trust.hpp"

using namespace cds;
using namespace cds::trust;

namespace {

// Independent evaluator: weight by table, power by repeated multiplication.
double pa_oracle(std::uint64_t na, std::uint64_t totala, ActionClass c, unsigned m) {
    double w = c == ActionClass::positive ? 1.0 : (c == ActionClass::wrong ? 0.5 : 0.0);
    double wm = 1.0;
    for (unsigned i = 0; i < m; ++i) wm *= w;
    return (1.0 - static_cast<double>(na) / static_cast<double>(totala)) * wm;
}

TrustConfig defaults() { return TrustConfig{}; }

}  // namespace

TEST_CASE("action weights match the three classes") {
    CHECK(action_weight(ActionClass::positive) == 1.0);
    CHECK(action_weight(ActionClass::wrong) == 0.5);
    CHECK(action_weight(ActionClass::malicious) == 0.0);
}

TEST_CASE("action_value anchor cases") {
    CHECK(action_value(0, 1, ActionClass::positive, 1) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(action_value(1, 1, ActionClass::malicious, 1) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(action_value(2, 10, ActionClass::wrong, 2) == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("action_value rejects zero totala") {
    CHECK_THROWS_AS(action_value(0, 0, ActionClass::positive, 1), CdsError);
}

TEST_CASE("action_value agrees with the independent evaluator") {
    std::mt19937_64 rng(20240817);
    for (int i = 0; i < 200; ++i) {
        std::uint64_t totala = 1 + rng() % 1000;
        std::uint64_t na = rng() % (totala + 1);
        auto cls = static_cast<ActionClass>(rng() % 3);
        unsigned m = 1 + static_cast<unsigned>(rng() % 6);
        double got = action_value(na, totala, cls, m);
        CHECK(got == doctest::Approx(pa_oracle(na, totala, cls, m)).epsilon(1e-12));
        CHECK(got >= 0.0);
        CHECK(got <= 1.0);
    }
}

TEST_CASE("action_value is zero exactly for malicious or saturated counters") {
    for (std::uint64_t totala = 1; totala <= 20; ++totala) {
        for (std::uint64_t na = 0; na <= totala; ++na) {
            for (int ci = 0; ci < 3; ++ci) {
                auto cls = static_cast<ActionClass>(ci);
                double v = action_value(na, totala, cls, 2);
                bool expect_zero = cls == ActionClass::malicious || na == totala;
                CHECK((v == 0.0) == expect_zero);
            }
        }
    }
}

TEST_CASE("action_value strictly decreases in na while weight is positive") {
    for (std::uint64_t na = 0; na + 1 <= 12; ++na) {
        CHECK(action_value(na, 12, ActionClass::wrong, 3) >
              action_value(na + 1, 12, ActionClass::wrong, 3));
    }
}

TEST_CASE("action_value strictly decreases in m for wrong actions") {
    for (unsigned m = 1; m < 8; ++m) {
        CHECK(action_value(2, 9, ActionClass::wrong, m) >
              action_value(2, 9, ActionClass::wrong, m + 1));
    }
}

TEST_CASE("record_action EMA anchors") {
    TrustConfig cfg = defaults();
    TrustState fresh = initial_state("c1", cfg);
    CHECK(fresh.trust_degree == 0.5);
    CHECK(fresh.category == Category::innocent);

    SUBCASE("first positive action lifts T to 0.75") {
        TrustState s = record_action(fresh, ActionClass::positive, cfg);
        CHECK(s.last_pa == 1.0);
        CHECK(s.trust_degree == 0.75);
        CHECK(s.total_actions == 1);
        CHECK(s.negative_actions == 0);
        CHECK(s.category == Category::trusted);
        // input untouched
        CHECK(fresh.total_actions == 0);
        CHECK(fresh.trust_degree == 0.5);
    }

    SUBCASE("first malicious action drops T to 0.25") {
        TrustState s = record_action(fresh, ActionClass::malicious, cfg);
        CHECK(s.last_pa == 0.0);
        CHECK(s.trust_degree == 0.25);
        CHECK(s.negative_actions == 1);
        CHECK(s.category == Category::untrusted);
    }

    SUBCASE("three malicious actions trace 0.25, 0.125, 0.0625 exactly") {
        TrustState s = fresh;
        const double expected[] = {0.25, 0.125, 0.0625};
        for (double e : expected) {
            s = record_action(s, ActionClass::malicious, cfg);
            CHECK(s.trust_degree == e);
        }
        CHECK(s.negative_actions == 3);
        CHECK(s.total_actions == 3);
    }

    SUBCASE("alpha = 0 degenerates to the last Pa") {
        TrustConfig cfg0 = defaults();
        cfg0.smoothing = 0.0;
        TrustState s = record_action(fresh, ActionClass::wrong, cfg0);
        CHECK(s.trust_degree == s.last_pa);
    }
}

TEST_CASE("record_action keeps invariants under random sequences") {
    TrustConfig cfg = defaults();
    std::mt19937_64 rng(7);
    for (int run = 0; run < 50; ++run) {
        TrustState s = initial_state("c", cfg);
        for (int i = 0; i < 60; ++i) {
            s = record_action(s, static_cast<ActionClass>(rng() % 3), cfg);
            CHECK(s.negative_actions <= s.total_actions);
            CHECK(s.trust_degree >= 0.0);
            CHECK(s.trust_degree <= 1.0);
            CHECK(s.category == classify(s.trust_degree, cfg));
        }
    }
}

TEST_CASE("positive-only sequences converge monotonically toward 1") {
    TrustConfig cfg = defaults();
    TrustState s = initial_state("c", cfg);
    double prev = s.trust_degree;
    for (int i = 0; i < 64; ++i) {
        s = record_action(s, ActionClass::positive, cfg);
        CHECK(s.trust_degree >= prev);
        CHECK(s.trust_degree <= 1.0);
        prev = s.trust_degree;
    }
    CHECK(s.trust_degree > 0.999);
}

TEST_CASE("classify partitions [0,1]") {
    TrustConfig cfg = defaults();
    CHECK(classify(1.0, cfg) == Category::trusted);
    CHECK(classify(0.0, cfg) == Category::untrusted);
    CHECK(classify(0.55, cfg) == Category::innocent);
    // boundaries are inclusive on the upper category
    CHECK(classify(0.7, cfg) == Category::trusted);
    CHECK(classify(0.4, cfg) == Category::innocent);
    CHECK(classify(std::nextafter(0.4, 0.0), cfg) == Category::untrusted);
    for (double t = 0.0; t <= 1.0; t += 0.001) {
        Category c = classify(t, cfg);
        CHECK((c == Category::trusted || c == Category::innocent || c == Category::untrusted));
    }
}

TEST_CASE("authorize_connection uses an inclusive threshold") {
    TrustConfig cfg = defaults();
    cfg.connection_threshold = 0.5;
    TrustState s = initial_state("c", cfg);
    s.trust_degree = 0.9;
    CHECK(authorize_connection(s, cfg));
    s.trust_degree = 0.1;
    CHECK(!authorize_connection(s, cfg));
    s.trust_degree = 0.5;
    CHECK(authorize_connection(s, cfg));
}

TEST_CASE("config validation rejects out-of-range parameters") {
    TrustConfig cfg = defaults();
    CHECK_NOTHROW(cfg.validate());
    TrustConfig bad = cfg;
    bad.security_level = 0;
    CHECK_THROWS_AS(bad.validate(), CdsError);
    bad = cfg;
    bad.innocent_threshold = 0.8;  // above trusted
    CHECK_THROWS_AS(bad.validate(), CdsError);
    bad = cfg;
    bad.smoothing = 1.0;
    CHECK_THROWS_AS(bad.validate(), CdsError);
}
