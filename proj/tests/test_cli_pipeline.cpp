#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <regex>
#include <sstream>

#include <sys/wait.h>

#include "ckg/pipeline.hpp"
#include "helpers.hpp"

using namespace ckg;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

const std::string kRoot = CKG_SOURCE_DIR;
const std::string kToy = kRoot + "/data/toy";

struct Run {
    int code;
    std::string out, err;
};

Run ckg_cli(const std::string& args, const testing::TempDir& dir) {
    const std::string out = dir / "stdout.txt", err = dir / "stderr.txt";
    const std::string cmd = std::string("'") + CKG_CLI + "' " + args + " >'" + out + "' 2>'" + err + "'";
    int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, testing::slurp(out), testing::slurp(err)};
}

std::string without_comments(const std::string& text) {
    std::istringstream in(text);
    std::string line, out;
    while (std::getline(in, line))
        if (line.empty() || line[0] != '#') out += line + '\n';
    return out;
}

std::map<std::string, std::string> key_values(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        auto eq = line.find('=');
        if (line.empty() || line[0] == '#' || eq == std::string::npos) continue;
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

std::vector<std::vector<std::string>> tsv_rows(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(without_comments(text));
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> f;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, '\t')) f.push_back(cell);
        if (!line.empty() && line.back() == '\t') f.emplace_back();
        rows.push_back(f);
    }
    return rows;
}

std::string toy_args(const testing::TempDir& dir) { return "--config '" + kToy + "/toy.conf' --out-dir '" + dir.path.string() + "'"; }

} // namespace

TEST_CASE("gen-hypotheses on the toy dataset matches the golden file") {
    testing::TempDir dir("gen");
    auto r = ckg_cli(toy_args(dir) + " gen-hypotheses", dir);
    REQUIRE(r.code == 0);
    CHECK_THAT(r.out, ContainsSubstring("generated=4"));
    CHECK_THAT(r.out, ContainsSubstring("available=4"));
    auto produced = testing::slurp(dir / "hypotheses.tsv");
    CHECK(without_comments(produced) == without_comments(testing::slurp(kToy + "/hypotheses.tsv")));
    CHECK(std::regex_search(produced, std::regex("^# ckg 0\\.1\\.0 config=[0-9a-f]{16} seed=7\n")));
}

TEST_CASE("gen-hypotheses edge cases") {
    testing::TempDir dir("gen_edge");
    auto empty = dir.file("empty.tsv", "");
    auto r = ckg_cli("--graph '" + empty + "' --out-dir '" + dir.path.string() + "' gen-hypotheses", dir);
    CHECK(r.code == 0);
    CHECK(tsv_rows(testing::slurp(dir / "hypotheses.tsv")).size() == 1);

    r = ckg_cli("--graph '" + kToy + "/graph.tsv' --source comorbidity --out-dir '" + dir.path.string() + "' gen-hypotheses", dir);
    CHECK(r.code == 2);
    CHECK_THAT(r.err, ContainsSubstring("comorbidity"));

    auto bad = dir.file("bad.tsv", "A\tcauses_onset\tB\tdisease\tdisease\nA\tcures\tB\tdisease\tdisease\n");
    r = ckg_cli("--graph '" + bad + "' --out-dir '" + dir.path.string() + "' gen-hypotheses", dir);
    CHECK(r.code == 2);
    CHECK_THAT(r.err, ContainsSubstring("bad.tsv:2"));

    r = ckg_cli("--graph '" + (dir / "missing.tsv") + "' gen-hypotheses", dir);
    CHECK(r.code == 2);
}

TEST_CASE("comorbidity source mines the toy cohort") {
    testing::TempDir dir("gen_com");
    auto r = ckg_cli(toy_args(dir) + " --source comorbidity gen-hypotheses", dir);
    REQUIRE(r.code == 0);
    auto pairs = tsv_rows(testing::slurp(dir / "comorbidity.tsv"));
    REQUIRE_FALSE(pairs.empty());
    CHECK(pairs[0] == std::vector<std::string>{"d1", "d2", "rr", "p", "p_bh", "n_before", "n_after"});
    for (const auto& h : tsv_rows(testing::slurp(dir / "hypotheses.tsv")))
        if (h[0] != "indication") CHECK(h[3] == "comorbidity");
}

TEST_CASE("adjust writes one row per hypothesis and criterion") {
    testing::TempDir dir("adjust");
    auto r = ckg_cli(toy_args(dir) + " adjust", dir);
    REQUIRE(r.code == 0);
    auto rows = tsv_rows(testing::slurp(dir / "adjustments.tsv"));
    REQUIRE(rows.size() == 9);
    CHECK(rows[0] == std::vector<std::string>{"indication", "drug", "outcome", "criterion", "nodes", "status"});
    CHECK(rows[2] == std::vector<std::string>{"E11", "metformin", "N18", "disjunctive", "E66;I10", "ok"});
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i][5] == "ok");
}

TEST_CASE("mediate on the toy dataset") {
    testing::TempDir dir("mediate");
    auto r = ckg_cli(toy_args(dir) + " mediate", dir);
    REQUIRE(r.code == 0);
    auto rows = tsv_rows(testing::slurp(dir / "mediation.tsv"));
    REQUIRE(rows.size() == 9);
    CHECK(rows[0].size() == 18);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i].size() == 18);
        CHECK(rows[i][16] == "ok");
        const double acme = std::stod(rows[i][7]), lo = std::stod(rows[i][8]), hi = std::stod(rows[i][9]);
        CHECK(lo <= acme);
        CHECK(acme <= hi);
    }
    auto summary = tsv_rows(testing::slurp(dir / "summary.tsv"));
    REQUIRE(summary.size() == 3);
    CHECK(summary[1][1] == "disjunctive");
    CHECK(summary[2][1] == "backdoor");
    for (std::size_t i = 1; i < 3; ++i) {
        int total = 0;
        for (int k = 3; k <= 6; ++k) total += std::stoi(summary[i][k]);
        CHECK(total == 4);
        CHECK(summary[i][7] != "NA");
    }
}

TEST_CASE("mediate output is byte-identical across repeats and thread counts") {
    testing::TempDir a("det_a"), b("det_b"), c("det_c");
    REQUIRE(ckg_cli(toy_args(a) + " --nsim 200 --threads 1 mediate", a).code == 0);
    REQUIRE(ckg_cli(toy_args(b) + " --nsim 200 --threads 1 mediate", b).code == 0);
    REQUIRE(ckg_cli(toy_args(c) + " --nsim 200 --threads 4 mediate", c).code == 0);
    for (const char* f : {"mediation.tsv", "summary.tsv"}) {
        CHECK(testing::slurp(a / f) == testing::slurp(b / f));
        CHECK(testing::slurp(a / f) == testing::slurp(c / f));
    }
    testing::TempDir d("det_d");
    REQUIRE(ckg_cli(toy_args(d) + " --nsim 200 --seed 8 mediate", d).code == 0);
    CHECK(testing::slurp(a / "mediation.tsv") != testing::slurp(d / "mediation.tsv"));
}

TEST_CASE("mediate rejects invalid configuration") {
    testing::TempDir dir("mediate_bad");
    CHECK(ckg_cli(toy_args(dir) + " --nsim 50 mediate", dir).code == 2);
    CHECK(ckg_cli(toy_args(dir) + " --alpha 1.5 mediate", dir).code == 2);
    CHECK(ckg_cli(toy_args(dir) + " --criterion frontdoor mediate", dir).code == 2);
    auto conf = dir.file("bad.conf", "nonsense = 1\n");
    auto r = ckg_cli("--config '" + conf + "' mediate", dir);
    CHECK(r.code == 2);
    CHECK_THAT(r.err, ContainsSubstring("nonsense"));
    CHECK(ckg_cli("", dir).code == 2);
}

TEST_CASE("evaluate in arithmetic and file modes") {
    testing::TempDir dir("evaluate");
    auto r = ckg_cli("--precision 0.905 --recall 0.233 --out-dir '" + dir.path.string() + "' evaluate", dir);
    REQUIRE(r.code == 0);
    auto m = key_values(testing::slurp(dir / "metrics.txt"));
    CHECK_THAT(std::stod(m.at("f1")), WithinAbs(0.371, 0.001));
    CHECK(ckg_cli("--precision 0.9 evaluate", dir).code == 2);

    REQUIRE(ckg_cli(toy_args(dir) + " --nsim 200 mediate", dir).code == 0);
    r = ckg_cli(toy_args(dir) + " --mediation '" + (dir / "mediation.tsv") + "' evaluate", dir);
    REQUIRE(r.code == 0);
    auto kv = key_values(testing::slurp(dir / "metrics.txt"));
    CHECK(kv.count("disjunctive.f1"));
    CHECK(kv.count("backdoor.precision"));
}

TEST_CASE("similarity with two identical drugs applies the degenerate SD rule") {
    testing::TempDir dir("similarity");
    auto graph = dir.file("g.tsv",
                          "a\tindicated_for\tX\tdrug\tdisease\n"
                          "b\tindicated_for\tW\tdrug\tdisease\n"
                          "a\thas_side_effect\tS\tdrug\tdisease\n"
                          "b\thas_side_effect\tS\tdrug\tdisease\n");
    auto r = ckg_cli("--graph '" + graph + "' --out-dir '" + dir.path.string() + "' similarity", dir);
    REQUIRE(r.code == 0);
    auto rows = tsv_rows(testing::slurp(dir / "similarity.tsv"));
    REQUIRE(rows.size() == 2);
    CHECK(rows[1] == std::vector<std::string>{"a", "b", "0"});
    auto m = key_values(testing::slurp(dir / "similarity_metrics.txt"));
    CHECK(m.at("auc_known") == "NA");  // a single pair has one class only
}

TEST_CASE("similarity on the toy graph") {
    testing::TempDir dir("similarity_toy");
    auto r = ckg_cli(toy_args(dir) + " similarity", dir);
    REQUIRE(r.code == 0);
    auto m = key_values(testing::slurp(dir / "similarity_metrics.txt"));
    CHECK(m.at("auc_known") == "1");
    CHECK(m.at("auc_discovered") == "NA");
}

TEST_CASE("simulate round-trips into mediate within the oracle band") {
    testing::TempDir dir("simulate");
    const std::string spec = kRoot + "/tests/fixtures/scm/simple.spec";
    auto r = ckg_cli("--spec '" + spec + "' --n 5000 --seed 3 --oracle-draws 2000000 --out-dir '" + dir.path.string() +
                         "' simulate",
                     dir);
    REQUIRE(r.code == 0);
    auto oracle = key_values(testing::slurp(dir / "oracle.txt"));
    const double truth = std::stod(oracle.at("true_acme")), mc_se = std::stod(oracle.at("mc_se"));

    auto hyps = dir.file("h.tsv", "indication\tdrug\toutcome\tsource\nX\tm\tY\tcausal\n");
    const std::string d = dir.path.string();
    r = ckg_cli("--graph '" + d + "/graph.tsv' --diagnoses '" + d + "/diagnoses.csv' --exposures '" + d +
                    "/exposures.csv' --baseline '" + d + "/baseline.csv' --hypotheses '" + hyps + "' --out-dir '" + d +
                    "' mediate",
                dir);
    REQUIRE(r.code == 0);
    auto rows = tsv_rows(testing::slurp(dir / "mediation.tsv"));
    REQUIRE(rows.size() == 2);
    const double acme = std::stod(rows[1][7]), lo = std::stod(rows[1][8]), hi = std::stod(rows[1][9]);
    const double se_hat = (hi - lo) / 3.92;
    CHECK(std::abs(acme - truth) <= 1.96 * std::sqrt(se_hat * se_hat + mc_se * mc_se));
}

TEST_CASE("check-graph summary") {
    testing::TempDir dir("check");
    auto r = ckg_cli("--graph '" + kToy + "/graph.tsv' check-graph", dir);
    REQUIRE(r.code == 0);
    CHECK_THAT(r.out, ContainsSubstring("drugs=4"));
    CHECK_THAT(r.out, ContainsSubstring("indicated_for=4"));
    CHECK_THAT(r.out, ContainsSubstring("acyclic=true"));
    auto cyclic = dir.file("c.tsv", "A\tcauses_onset\tB\tdisease\tdisease\nB\tcauses_onset\tA\tdisease\tdisease\n");
    CHECK(ckg_cli("--graph '" + cyclic + "' check-graph", dir).code == 2);
}

TEST_CASE("run configuration contract") {
    RunConfig a;
    a.set("seed", "5");
    RunConfig b = a;
    b.set("threads", "8");
    CHECK(a.hash() == b.hash());
    b.set("seed", "6");
    CHECK(a.hash() != b.hash());
    CHECK(a.header() == "# ckg 0.1.0 config=" + a.hash() + " seed=5");
    CHECK_THROWS_AS(a.set("alpha", "abc"), Error);
    CHECK_THROWS_AS(a.set("nsim", "-3"), Error);
    CHECK_THROWS_AS(a.set("unknown", "1"), Error);
    a.set("criterion", "backdoor,none");
    CHECK(a.criteria == std::vector<Criterion>{Criterion::Backdoor, Criterion::None});

    std::ostringstream err;
    CHECK(pipeline::run_command([] { fail(Errc::Config, "bad"); }, err) == 2);
    CHECK(pipeline::run_command([] { throw std::logic_error("broken invariant"); }, err) == 3);
    CHECK(pipeline::run_command([] {}, err) == 0);
}
