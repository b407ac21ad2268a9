#include <catch_amalgamated.hpp>

#include <random>

#include "ckg/hypothesis.hpp"
#include "helpers.hpp"
#include "oracles/hypergeometric.hpp"

using namespace ckg;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using testing::D;
using testing::R;

namespace {

PersonRecord person(const std::string& id, std::vector<std::pair<std::string, int>> dx,
                    std::vector<std::pair<std::string, int>> rx = {}) {
    PersonRecord p;
    p.id = id;
    const Date base = Date::from_ymd(2010, 1, 1);
    for (auto& [code, offset] : dx) p.diagnoses.push_back({code, base.plus_days(offset)});
    for (auto& [drug, offset] : rx) p.exposures.push_back({drug, base.plus_days(offset), std::nullopt});
    return p;
}

} // namespace

TEST_CASE("relative risk examples") {
    CHECK_THAT(relative_risk(5, 20, 10, 100).rr, WithinAbs(2.5, 1e-15));
    CHECK_THAT(relative_risk(2, 10, 20, 100).rr, WithinAbs(1.0, 1e-15));
    auto r = relative_risk(2, 2, 2, 4);
    CHECK_THAT(r.rr, WithinAbs(2.0, 1e-15));
    CHECK_THAT(r.p_value, WithinAbs(1.0 / 6.0, 1e-14));
    CHECK(relative_risk(0, 3, 4, 10).p_value == 1.0);
}

TEST_CASE("relative risk rejects impossible counts") {
    CHECK_THROWS_AS(relative_risk(3, 2, 5, 10), Error);
    CHECK_THROWS_AS(relative_risk(1, 0, 5, 10), Error);
    CHECK_THROWS_AS(relative_risk(1, 5, 11, 10), Error);
}

TEST_CASE("hypergeometric tail matches enumeration for N <= 12") {
    for (std::size_t N = 1; N <= 12; ++N)
        for (std::size_t K = 1; K <= N; ++K)
            for (std::size_t n = 1; n <= N; ++n)
                for (std::size_t k = 0; k <= std::min(K, n); ++k) {
                    INFO("N=" << N << " K=" << K << " n=" << n << " k=" << k);
                    CHECK_THAT(relative_risk(k, K, n, N).p_value,
                               WithinAbs(oracle::hypergeometric_tail_bruteforce(k, N, K, n), 1e-12));
                }
}

TEST_CASE("hypergeometric tail is accurate far into the tail") {
    // symmetric roles of the two margins
    auto a = relative_risk(40, 100, 200, 2000).p_value;
    auto b = relative_risk(40, 200, 100, 2000).p_value;
    CHECK_THAT(a, WithinRel(b, 1e-10));
    CHECK(a > 0.0);
    CHECK(a < 1e-10);
}

TEST_CASE("comorbidity mining orients by first diagnosis") {
    auto g = CausalKnowledgeGraph::from_edges({}, {D("A"), D("B"), D("C")});
    std::vector<PersonRecord> ps;
    for (int i = 0; i < 30; ++i) ps.push_back(person("ab" + std::to_string(i), {{"A", 0}, {"B", 10 + i}}));
    for (int i = 0; i < 60; ++i) ps.push_back(person("c" + std::to_string(i), {{"C", i}}));
    auto c = Cohort::from_persons(ps);
    auto pairs = mine_comorbidity_pairs(c, g, 0.05);
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].d1 == D("A"));
    CHECK(pairs[0].d2 == D("B"));
    CHECK(pairs[0].n_before == 30);
    CHECK(pairs[0].n_after == 0);
    CHECK(pairs[0].oriented);
    CHECK(pairs[0].rr > 1.0);
    CHECK(pairs[0].p_bh <= 0.05);
}

TEST_CASE("comorbidity mining drops ties, same-day pairs and depleted pairs") {
    auto g = CausalKnowledgeGraph::from_edges({}, {D("A"), D("B"), D("C"), D("E"), D("F")});
    std::vector<PersonRecord> ps;
    for (int i = 0; i < 20; ++i) ps.push_back(person("ab" + std::to_string(i), {{"A", i % 2 ? 0 : 5}, {"B", i % 2 ? 5 : 0}}));
    for (int i = 0; i < 20; ++i) ps.push_back(person("ce" + std::to_string(i), {{"C", 0}, {"E", 0}}));
    for (int i = 0; i < 40; ++i) ps.push_back(person("f" + std::to_string(i), {{"F", 0}}));
    auto c = Cohort::from_persons(ps);
    auto scored = score_comorbidity_pairs(c, g);
    CHECK(std::none_of(scored.begin(), scored.end(), [](const auto& p) { return p.oriented && p.d1 == D("C"); }));
    CHECK(mine_comorbidity_pairs(c, g, 0.05).empty());
    for (const auto& s : scored)
        if ((s.d1 == D("A") && s.d2 == D("F")) || (s.d1 == D("F") && s.d2 == D("A"))) CHECK(s.rr < 1.0);
    CHECK_THROWS_AS(mine_comorbidity_pairs(c, g, 1.0), Error);
}

TEST_CASE("planted comorbidity is retained and orientation is antisymmetric") {
    std::mt19937_64 rng(11);
    auto g = CausalKnowledgeGraph::from_edges({}, {D("A"), D("B"), D("N1"), D("N2")});
    std::vector<PersonRecord> ps;
    // P(A)=P(B)=0.1 marginally; joint 0.04 = 4x independence
    for (int i = 0; i < 2000; ++i) {
        double u = std::uniform_real_distribution<>(0, 1)(rng);
        std::vector<std::pair<std::string, int>> dx;
        if (u < 0.04) dx = {{"A", 0}, {"B", 30}};
        else if (u < 0.10) dx = {{"A", 0}};
        else if (u < 0.16) dx = {{"B", 0}};
        if (std::uniform_real_distribution<>(0, 1)(rng) < 0.1) dx.push_back({"N1", 3});
        if (std::uniform_real_distribution<>(0, 1)(rng) < 0.1) dx.push_back({"N2", 4});
        ps.push_back(person("p" + std::to_string(i), dx));
    }
    auto c = Cohort::from_persons(ps);
    auto pairs = mine_comorbidity_pairs(c, g, 0.05);
    bool found = false;
    for (const auto& p : pairs) {
        if (p.d1 == D("A") && p.d2 == D("B")) found = true;
        for (const auto& q : pairs) CHECK_FALSE((q.d1 == p.d2 && q.d2 == p.d1));
    }
    CHECK(found);
    auto counts = cooccurrence_counts(c, g, D("A"), D("B"));
    auto rr = relative_risk(counts.both, counts.first, counts.second, counts.total);
    CHECK(rr.p_value < 1e-10);
}

TEST_CASE("IsA-related pairs are not scored") {
    auto g = CausalKnowledgeGraph::from_edges({{D("A.1"), Relation::IsA, D("A")}}, {D("B")});
    auto c = Cohort::from_persons({person("p", {{"A.1", 0}, {"B", 3}})});
    for (const auto& s : score_comorbidity_pairs(c, g)) CHECK_FALSE((s.d1.code.substr(0, 1) == "A" && s.d2.code.substr(0, 1) == "A"));
}

TEST_CASE("hypothesis generation and filters") {
    auto base = std::vector<Edge>{{R("m1"), Relation::IndicatedFor, D("X")}, {D("X"), Relation::CausesOnset, D("Y")}};
    auto g1 = CausalKnowledgeGraph::from_edges(base);
    auto h1 = generate_hypotheses(g1, causal_pairs(g1), HypothesisSource::CausalSet);
    REQUIRE(h1.size() == 1);
    CHECK(h1[0] == Hypothesis{D("X"), R("m1"), D("Y"), HypothesisSource::CausalSet});

    auto both_ind = base;
    both_ind.push_back({R("m1"), Relation::IndicatedFor, D("Y")});
    auto g2 = CausalKnowledgeGraph::from_edges(both_ind);
    GenerationCounts counts;
    CHECK(generate_hypotheses(g2, causal_pairs(g2), HypothesisSource::CausalSet, &counts).empty());
    CHECK(counts.dropped_shared_indication == 1);

    auto both_se = base;
    both_se.push_back({R("m1"), Relation::HasSideEffect, D("X")});
    both_se.push_back({R("m1"), Relation::HasSideEffect, D("Y")});
    auto g3 = CausalKnowledgeGraph::from_edges(both_se);
    CHECK(generate_hypotheses(g3, causal_pairs(g3), HypothesisSource::CausalSet, &counts).empty());
    CHECK(counts.dropped_shared_side_effect == 1);

    auto one_se = base;
    one_se.push_back({R("m1"), Relation::HasSideEffect, D("Y")});
    auto g4 = CausalKnowledgeGraph::from_edges(one_se);
    CHECK(generate_hypotheses(g4, causal_pairs(g4), HypothesisSource::CausalSet).size() == 1);

    CHECK_THROWS_AS(generate_hypotheses(g1, {{D("X"), D("nope")}}, HypothesisSource::CausalSet), Error);
    CHECK(generate_hypotheses(g1, {{D("X"), D("X")}}, HypothesisSource::CausalSet).empty());
}

TEST_CASE("generation is a subset of the cross product and filters are monotone") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<Edge> edges;
        const int nd = 5, nr = 4;
        for (int i = 0; i < nd; ++i)
            for (int j = 0; j < nd; ++j)
                if (i < j && rng() % 3 == 0) edges.push_back({D("d" + std::to_string(i)), Relation::CausesOnset, D("d" + std::to_string(j))});
        for (int k = 0; k < nr; ++k)
            for (int i = 0; i < nd; ++i)
                if (rng() % 3 == 0) edges.push_back({R("m" + std::to_string(k)), Relation::IndicatedFor, D("d" + std::to_string(i))});
        std::vector<NodeId> all;
        for (int i = 0; i < nd; ++i) all.push_back(D("d" + std::to_string(i)));
        for (int k = 0; k < nr; ++k) all.push_back(R("m" + std::to_string(k)));
        auto g = CausalKnowledgeGraph::from_edges(edges, all);
        auto pairs = causal_pairs(g);
        auto hyps = generate_hypotheses(g, pairs, HypothesisSource::CausalSet);
        for (const auto& h : hyps) {
            CHECK(g.has_edge(h.indication, Relation::CausesOnset, h.outcome));
            CHECK(g.has_edge(h.drug, Relation::IndicatedFor, h.indication));
        }
        auto more = edges;
        for (int k = 0; k < nr; ++k)
            for (int i = 0; i < nd; ++i)
                if (rng() % 4 == 0) more.push_back({R("m" + std::to_string(k)), Relation::HasSideEffect, D("d" + std::to_string(i))});
        auto g2 = CausalKnowledgeGraph::from_edges(more, all);
        auto fewer = generate_hypotheses(g2, pairs, HypothesisSource::CausalSet);
        CHECK(std::includes(hyps.begin(), hyps.end(), fewer.begin(), fewer.end()));
    }
}

TEST_CASE("availability filter") {
    auto g = CausalKnowledgeGraph::from_edges({{R("m"), Relation::IndicatedFor, D("X")}, {D("X"), Relation::CausesOnset, D("Y")},
                                               {R("absent"), Relation::IndicatedFor, D("X")}});
    std::vector<Hypothesis> hyps{{D("X"), R("m"), D("Y")}, {D("X"), R("absent"), D("Y")}};
    auto apart = Cohort::from_persons({person("a", {{"X", 0}}, {{"m", 1}}), person("b", {{"Y", 0}})});
    CHECK(availability_filter(apart, g, hyps).empty());
    auto joint = Cohort::from_persons({person("a", {{"X", 0}, {"Y", 9}}, {{"m", 1}})});
    auto kept = availability_filter(joint, g, hyps);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].drug == R("m"));
}
