#include <catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "ckg/cohort.hpp"
#include "ckg/sample.hpp"
#include "helpers.hpp"

using namespace ckg;
using testing::D;
using testing::day;
using testing::R;

namespace {

PersonRecord person(const std::string& id, std::vector<std::pair<std::string, std::string>> dx,
                    std::vector<std::tuple<std::string, std::string, std::string>> rx = {}) {
    PersonRecord p;
    p.id = id;
    for (auto& [code, date] : dx) p.diagnoses.push_back({code, day(date)});
    for (auto& [drug, start, end] : rx)
        p.exposures.push_back({drug, day(start), end.empty() ? std::nullopt : std::optional<Date>(day(end))});
    return p;
}

// indication I treated by drug M, outcome Y, confounder C; I has child code I.1
CausalKnowledgeGraph toy_graph() {
    return CausalKnowledgeGraph::from_edges({
        {R("M"), Relation::IndicatedFor, D("I")},
        {D("I"), Relation::CausesOnset, D("Y")},
        {D("C"), Relation::CausesOnset, D("I")},
        {D("C"), Relation::CausesOnset, D("Y")},
        {D("I.1"), Relation::IsA, D("I")},
        {D("Y.1"), Relation::IsA, D("Y")},
    });
}

const Hypothesis kH{D("I"), R("M"), D("Y"), HypothesisSource::CausalSet};

Errc code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return Errc::Io;
}

} // namespace

TEST_CASE("load_cohort ingests the three files") {
    testing::TempDir dir("cohort");
    auto dx = dir.file("d.csv", "person_id,code,date\np1,E11,2010-01-01\np1,N18,2011-01-01\np2,E11,2012-05-05\n");
    auto rx = dir.file("r.csv", "person_id,drug_code,start_date,end_date\np2,met,2012-06-01,\n");
    auto bl = dir.file("b.csv", "person_id,name,value\np3,age,61\np1,age,\n");
    auto c = load_cohort(dx, rx, bl);
    REQUIRE(c.size() == 3);
    CHECK(c.person(2).id == "p3");
    CHECK(c.person(2).diagnoses.empty());
    CHECK(c.person(2).exposures.empty());
    CHECK(c.person(2).baseline.at("age") == 61.0);
    CHECK(c.person(0).baseline.empty());
    CHECK(c.persons_with_diagnosis("E11").size() == 2);
    CHECK(c.persons_with_drug("met") == PersonSet{1});

    auto bad = dir.file("bad.csv", "person_id,drug_code,start_date,end_date\np2,met,2012-06-01,2012-05-01\n");
    CHECK(code_of([&] { load_cohort(dx, bad, bl); }) == Errc::Date);
    auto baddate = dir.file("bd.csv", "person_id,code,date\np1,E11,2010-13-01\n");
    CHECK(code_of([&] { load_cohort(baddate, rx, bl); }) == Errc::Date);
    auto badhdr = dir.file("bh.csv", "id,code,date\n");
    CHECK(code_of([&] { load_cohort(badhdr, rx, bl); }) == Errc::Parse);
    CHECK(code_of([&] { load_cohort(dir / "missing.csv", rx, bl); }) == Errc::Io);
}

TEST_CASE("extension closes over IsA") {
    auto g = CausalKnowledgeGraph::from_edges({{D("E11.9"), Relation::IsA, D("E11")}, {R("x"), Relation::IndicatedFor, D("E11")}},
                                              {D("Z99")});
    auto c = Cohort::from_persons({person("a", {{"E11.9", "2010-01-01"}}), person("b", {{"E11", "2011-01-01"}})});
    CHECK(extension_ids(c, g, D("E11")) == std::set<std::string>{"a", "b"});
    CHECK(extension_ids(c, g, D("E11.9")) == std::set<std::string>{"a"});
    CHECK(extension(c, g, D("Z99")).empty());
    CHECK(probability(c, g, D("E11")) == 1.0);
    CHECK(probability(c, g, D("E11.9")) == 0.5);
    CHECK(probability(c, g, D("Z99")) == 0.0);
    CHECK(code_of([&] { extension(c, g, D("nope")); }) == Errc::UnknownNode);
    CHECK(code_of([&] { probability(Cohort{}, g, D("E11")); }) == Errc::EmptyCohort);
}

TEST_CASE("probability of an extension of 2 in 4") {
    auto g = CausalKnowledgeGraph::from_edges({{R("x"), Relation::IndicatedFor, D("A")}});
    auto c = Cohort::from_persons({person("1", {{"A", "2010-01-01"}}), person("2", {{"A", "2010-01-01"}}),
                                   person("3", {{"B", "2010-01-01"}}), person("4", {})});
    CHECK(probability(c, g, D("A")) == 0.5);
}

TEST_CASE("index date rules") {
    auto g = toy_graph();
    CHECK(index_date(person("p", {{"I", "2010-01-01"}}, {{"M", "2011-02-02", ""}}), kH, g) == day("2010-01-01"));
    CHECK(index_date(person("p", {{"I.1", "2010-01-01"}, {"I", "2010-03-01"}}), kH, g) == day("2010-01-01"));
    CHECK(index_date(person("p", {}, {{"M", "2012-03-03", ""}}), kH, g) == day("2012-03-03"));
    CHECK(index_date(person("p", {{"Q", "2009-05-05"}, {"Q", "2010-05-05"}}), kH, g) == day("2009-05-05"));
    CHECK(code_of([&] { index_date(person("p", {}), kH, g); }) == Errc::NoRecords);
}

TEST_CASE("select_sample temporal exclusions") {
    auto g = toy_graph();
    std::vector<PersonRecord> ps{
        person("outcome_first", {{"Y", "2009-01-01"}, {"I", "2010-01-01"}, {"Z", "2013-01-01"}}, {{"M", "2011-01-01", ""}}),
        person("drug_before", {{"I", "2010-01-01"}, {"Z", "2013-01-01"}}, {{"M", "2008-01-01", "2009-01-01"}}),
        person("canonical", {{"I", "2010-01-01"}, {"Y", "2012-01-01"}, {"Z", "2013-01-01"}}, {{"M", "2011-01-01", ""}}),
        person("no_follow_up", {{"I", "2010-01-01"}}),
        person("control", {{"Q", "2010-01-01"}, {"Z", "2013-01-01"}}),
    };
    auto c = Cohort::from_persons(ps);
    auto s = select_sample(c, g, kH, {}, false);
    CHECK(s.excluded.outcome_first == 1);
    CHECK(s.excluded.drug_only_before == 1);
    CHECK(s.excluded.no_follow_up == 1);
    REQUIRE(s.n() == 2);
    CHECK(s.person_ids == std::vector<std::string>{"canonical", "control"});
    CHECK(s.t[0] == 1);
    CHECK(s.m[0] == 1);
    CHECK(s.y[0] == 1);
    CHECK(s.t[1] == 0);
    CHECK(s.m[1] == 0);
    CHECK(s.y[1] == 0);
    CHECK(s.covariate_names == std::vector<std::string>{"n_comorbidities", "n_drugs"});
}

TEST_CASE("outcome on the same day as the exposure does not count") {
    auto g = toy_graph();
    auto c = Cohort::from_persons({
        person("a", {{"I", "2010-01-01"}, {"Y", "2011-01-01"}, {"Z", "2013-01-01"}}, {{"M", "2011-01-01", ""}}),
        person("b", {{"I", "2010-01-01"}, {"Y.1", "2011-01-02"}, {"Z", "2013-01-01"}}, {{"M", "2011-01-01", ""}}),
    });
    auto s = select_sample(c, g, kH, {}, false);
    CHECK(s.y[0] == 0);
    CHECK(s.y[1] == 1);
}

TEST_CASE("untreated persons count any exposure toward M") {
    auto g = toy_graph();
    auto c = Cohort::from_persons({person("a", {{"Q", "2010-01-01"}, {"Z", "2013-01-01"}}, {{"M", "2011-01-01", ""}})});
    auto s = select_sample(c, g, kH, {}, false);
    CHECK(s.t[0] == 0);
    CHECK(s.m[0] == 1);
}

TEST_CASE("covariates: proxies, baseline imputation, adjustment indicators") {
    auto g = toy_graph();
    auto a = person("a", {{"C", "2009-01-01"}, {"Q", "2009-06-01"}, {"I", "2010-01-01"}, {"Z", "2013-01-01"}},
                    {{"M", "2011-01-01", ""}, {"K", "2008-01-01", ""}});
    a.baseline["age"] = 50;
    auto b = person("b", {{"I", "2010-01-01"}, {"C", "2011-01-01"}, {"Y", "2012-01-01"}, {"Z", "2013-01-01"}},
                    {{"M", "2011-01-01", ""}});
    b.baseline["age"] = 70;
    auto d = person("d", {{"Q", "2010-01-01"}, {"Z", "2013-01-01"}});
    auto c = Cohort::from_persons({a, b, d});
    AdjustmentSet adj;
    adj.nodes = {D("C")};
    auto s = select_sample(c, g, kH, adj);
    REQUIRE(s.covariate_names ==
            std::vector<std::string>{"age", "age_missing", "n_comorbidities", "n_drugs", "adj:C"});
    auto col = [&](const std::string& n) { return s.covariates.col(static_cast<Eigen::Index>(*s.column(n))); };
    CHECK(col("age")[2] == 60.0);
    CHECK(col("age_missing")[2] == 1.0);
    CHECK(col("age_missing")[0] == 0.0);
    CHECK(col("n_comorbidities")[0] == 2.0);
    CHECK(col("n_drugs")[0] == 1.0);
    CHECK(col("adj:C")[0] == 1.0);
    CHECK(col("adj:C")[1] == 0.0); // C diagnosed after the index date
    // d is anchored on its earliest record; same-day events count as baseline
    CHECK(col("n_comorbidities")[2] == 1.0);
}

TEST_CASE("empty and degenerate samples are flagged") {
    auto g = toy_graph();
    auto only = Cohort::from_persons({person("a", {{"I", "2010-01-01"}})});
    CHECK(code_of([&] { select_sample(only, g, kH, {}); }) == Errc::EmptySample);
    auto flat = Cohort::from_persons({person("a", {{"Q", "2010-01-01"}, {"Z", "2011-01-01"}}),
                                      person("b", {{"Q", "2010-01-01"}, {"Z", "2011-01-01"}})});
    CHECK(code_of([&] { select_sample(flat, g, kH, {}); }) == Errc::DegenerateSample);
}

TEST_CASE("cooccurrence counts") {
    auto g = CausalKnowledgeGraph::from_edges({{D("A"), Relation::CausesOnset, D("B")}}, {D("C")});
    auto c = Cohort::from_persons({person("p1", {{"A", "2010-01-01"}}), person("p2", {{"A", "2010-01-01"}, {"B", "2010-01-01"}}),
                                   person("p3", {{"B", "2010-01-01"}}), person("p4", {})});
    CHECK(cooccurrence_counts(c, g, D("A"), D("B")) == CooccurrenceCounts{1, 2, 2, 4});
    CHECK(cooccurrence_counts(c, g, D("A"), D("C")).both == 0);
    CHECK(cooccurrence_counts(c, g, D("A"), D("A")) == CooccurrenceCounts{2, 2, 2, 4});
}

namespace {

struct RandomWorld {
    CausalKnowledgeGraph g;
    Cohort c;
    std::vector<std::string> diseases;
};

RandomWorld random_world(std::mt19937_64& rng) {
    const int nd = 3 + static_cast<int>(rng() % 10);
    RandomWorld w;
    std::vector<Edge> edges;
    for (int i = 0; i < nd; ++i) w.diseases.push_back("d" + std::to_string(i));
    for (int i = 1; i < nd; ++i)
        if (rng() % 4 != 0) edges.push_back({D(w.diseases[i]), Relation::IsA, D(w.diseases[rng() % i])});
    for (int i = 0; i + 1 < nd; ++i)
        if (rng() % 3 == 0) edges.push_back({D(w.diseases[i]), Relation::CausesOnset, D(w.diseases[i + 1])});
    std::vector<NodeId> extra;
    for (const auto& d : w.diseases) extra.push_back(D(d));
    w.g = CausalKnowledgeGraph::from_edges(edges, extra);
    std::vector<PersonRecord> ps;
    const int np = 1 + static_cast<int>(rng() % 40);
    for (int p = 0; p < np; ++p) {
        PersonRecord r;
        r.id = "p" + std::to_string(p);
        const int k = static_cast<int>(rng() % 4);
        for (int j = 0; j < k; ++j)
            r.diagnoses.push_back({w.diseases[rng() % nd], Date::from_ymd(2000, 1, 1).plus_days(static_cast<int>(rng() % 3000))});
        ps.push_back(r);
    }
    w.c = Cohort::from_persons(ps);
    return w;
}

} // namespace

TEST_CASE("IsA monotonicity on random graph and cohort pairs") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
        auto w = random_world(rng);
        for (const auto& e : w.g.edges_of(Relation::IsA)) {
            auto child = extension(w.c, w.g, e.src), parent = extension(w.c, w.g, e.dst);
            CHECK(std::includes(parent.begin(), parent.end(), child.begin(), child.end()));
            CHECK(probability(w.c, w.g, e.src) <= probability(w.c, w.g, e.dst));
        }
        for (const auto& d : w.diseases) {
            for (const auto& up : ancestors(w.g, D(d), Relation::IsA))
                CHECK(probability(w.c, w.g, up) >= probability(w.c, w.g, D(d)));
        }
    }
}

TEST_CASE("select_sample ignores input order and adjusts only on pre-index events") {
    std::mt19937_64 rng(99);
    auto g = toy_graph();
    const std::vector<std::string> codes{"I", "I.1", "Y", "Y.1", "C", "Q"};
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<PersonRecord> ps;
        for (int p = 0; p < 30; ++p) {
            PersonRecord r;
            r.id = "p" + std::to_string(p);
            for (int j = 0; j < 4; ++j)
                r.diagnoses.push_back({codes[rng() % codes.size()], Date::from_ymd(2005, 1, 1).plus_days(static_cast<int>(rng() % 2000))});
            if (rng() % 2) {
                auto start = Date::from_ymd(2005, 1, 1).plus_days(static_cast<int>(rng() % 2000));
                r.exposures.push_back({"M", start, start.plus_days(static_cast<int>(rng() % 100))});
            }
            ps.push_back(r);
        }
        AdjustmentSet adj;
        adj.nodes = {D("C"), D("Y.1")};
        auto s1 = select_sample(Cohort::from_persons(ps), g, kH, adj, false);
        std::shuffle(ps.begin(), ps.end(), rng);
        auto s2 = select_sample(Cohort::from_persons(ps), g, kH, adj, false);
        CHECK(s1.person_ids == s2.person_ids);
        CHECK(s1.covariates == s2.covariates);
        CHECK(s1.t == s2.t);
        CHECK(s1.y == s2.y);

        auto c = Cohort::from_persons(ps);
        for (std::size_t k = 0; k < s1.n(); ++k) {
            const auto& p = c.person(static_cast<std::size_t>(
                std::find_if(c.persons().begin(), c.persons().end(), [&](const auto& x) { return x.id == s1.person_ids[k]; }) -
                c.persons().begin()));
            for (const auto& node : adj.nodes) {
                double v = s1.covariates(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(*s1.column(adjustment_column(node))));
                if (v == 1.0) {
                    auto onset = first_onset(p, member_codes(g, node), NodeKind::Disease);
                    REQUIRE(onset);
                    bool fallback = index_date_anchored(p, kH, g).anchor == IndexAnchor::EarliestRecord;
                    CHECK((fallback ? *onset <= s1.index_dates[k] : *onset < s1.index_dates[k]));
                }
            }
        }
    }
}
