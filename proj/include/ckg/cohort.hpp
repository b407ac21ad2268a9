#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "ckg/csv.hpp"
#include "ckg/date.hpp"
#include "ckg/error.hpp"
#include "ckg/graph.hpp"
#include "ckg/types.hpp"

namespace ckg {

struct Diagnosis {
    std::string code;
    Date date;
};

/// Drug exposure window. Without an end date it is a point exposure at start.
struct Exposure {
    std::string drug;
    Date start;
    std::optional<Date> end;

    Date last() const { return end.value_or(start); }
};

struct PersonRecord {
    std::string id;
    std::vector<Diagnosis> diagnoses;
    std::vector<Exposure> exposures;
    std::map<std::string, double> baseline;

    std::optional<Date> earliest_record() const {
        std::optional<Date> best;
        for (const auto& d : diagnoses)
            if (!best || d.date < *best) best = d.date;
        for (const auto& e : exposures)
            if (!best || e.start < *best) best = e.start;
        return best;
    }

    bool has_record_after(Date when) const {
        for (const auto& d : diagnoses)
            if (d.date > when) return true;
        for (const auto& e : exposures)
            if (e.start > when || e.last() > when) return true;
        return false;
    }
};

/// Sorted, de-duplicated person indices into a Cohort.
using PersonSet = std::vector<std::size_t>;

/// Population with per-code indexes. Persons are held in person_id order so
/// every derived quantity is independent of input order.
class Cohort {
public:
    Cohort() = default;

    static Cohort from_persons(std::vector<PersonRecord> persons) {
        Cohort c;
        std::sort(persons.begin(), persons.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
        for (std::size_t i = 1; i < persons.size(); ++i) {
            if (persons[i].id == persons[i - 1].id) fail(Errc::Parse, "duplicate person_id '" + persons[i].id + "'");
        }
        for (auto& p : persons) {
            auto by_date = [](const auto& a, const auto& b) { return std::tie(a.date, a.code) < std::tie(b.date, b.code); };
            std::sort(p.diagnoses.begin(), p.diagnoses.end(), by_date);
            std::sort(p.exposures.begin(), p.exposures.end(), [](const auto& a, const auto& b) {
                return std::tie(a.start, a.drug, a.end) < std::tie(b.start, b.drug, b.end);
            });
        }
        c.persons_ = std::move(persons);
        c.rebuild_indexes();
        return c;
    }

    std::size_t size() const { return persons_.size(); }
    bool empty() const { return persons_.empty(); }
    const std::vector<PersonRecord>& persons() const { return persons_; }
    const PersonRecord& person(std::size_t i) const { return persons_[i]; }

    const PersonSet& persons_with_diagnosis(const std::string& code) const { return lookup(by_diagnosis_, code); }
    const PersonSet& persons_with_drug(const std::string& code) const { return lookup(by_drug_, code); }

    const std::map<std::string, PersonSet>& diagnosis_index() const { return by_diagnosis_; }
    const std::map<std::string, PersonSet>& drug_index() const { return by_drug_; }

    void rebuild_indexes() {
        by_diagnosis_.clear();
        by_drug_.clear();
        for (std::size_t i = 0; i < persons_.size(); ++i) {
            for (const auto& d : persons_[i].diagnoses) push_unique(by_diagnosis_[d.code], i);
            for (const auto& e : persons_[i].exposures) push_unique(by_drug_[e.drug], i);
        }
    }

private:
    static void push_unique(PersonSet& s, std::size_t i) {
        if (s.empty() || s.back() != i) s.push_back(i);
    }

    static const PersonSet& lookup(const std::map<std::string, PersonSet>& idx, const std::string& code) {
        static const PersonSet empty;
        auto it = idx.find(code);
        return it == idx.end() ? empty : it->second;
    }

    std::vector<PersonRecord> persons_;
    std::map<std::string, PersonSet> by_diagnosis_;
    std::map<std::string, PersonSet> by_drug_;
};

namespace detail {

inline double parse_number(const std::string& s, const std::string& where) {
    double v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
        fail(Errc::Parse, where + "non-numeric value '" + s + "'");
    return v;
}

inline Date parse_date_at(const std::string& s, const std::string& where) {
    try {
        return Date::parse(s);
    } catch (const Error& e) {
        fail(Errc::Date, where + e.what());
    }
}

} // namespace detail

/// Reads diagnoses.csv, exposures.csv and baseline.csv; the population is the
/// union of person ids over all three files.
inline Cohort load_cohort(const std::string& diagnoses_path, const std::string& exposures_path,
                          const std::string& baseline_path) {
    std::map<std::string, PersonRecord> persons;
    auto person = [&](const std::string& id) -> PersonRecord& {
        auto& p = persons[id];
        p.id = id;
        return p;
    };
    auto where = [](const std::string& path, std::size_t line) { return path + ":" + std::to_string(line) + ": "; };

    csv::read_table(diagnoses_path, ',', {"person_id", "code", "date"}, [&](std::size_t ln, const auto& f) {
        if (f[0].empty() || f[1].empty()) fail(Errc::Parse, where(diagnoses_path, ln) + "empty person_id or code");
        person(f[0]).diagnoses.push_back({f[1], detail::parse_date_at(f[2], where(diagnoses_path, ln))});
    });
    csv::read_table(exposures_path, ',', {"person_id", "drug_code", "start_date", "end_date"},
                    [&](std::size_t ln, const auto& f) {
                        auto w = where(exposures_path, ln);
                        if (f[0].empty() || f[1].empty()) fail(Errc::Parse, w + "empty person_id or drug_code");
                        Exposure e{f[1], detail::parse_date_at(f[2], w), std::nullopt};
                        if (!f[3].empty()) {
                            e.end = detail::parse_date_at(f[3], w);
                            if (*e.end < e.start)
                                fail(Errc::Date, w + "end_date " + f[3] + " precedes start_date " + f[2]);
                        }
                        person(f[0]).exposures.push_back(std::move(e));
                    });
    csv::read_table(baseline_path, ',', {"person_id", "name", "value"}, [&](std::size_t ln, const auto& f) {
        auto w = where(baseline_path, ln);
        if (f[0].empty() || f[1].empty()) fail(Errc::Parse, w + "empty person_id or name");
        auto& p = person(f[0]);
        if (f[2].empty()) return; // absent value
        auto [it, inserted] = p.baseline.emplace(f[1], detail::parse_number(f[2], w));
        if (!inserted) fail(Errc::Parse, w + "duplicate baseline '" + f[1] + "' for person " + f[0]);
    });

    std::vector<PersonRecord> list;
    list.reserve(persons.size());
    for (auto& [id, p] : persons) list.push_back(std::move(p));
    return Cohort::from_persons(std::move(list));
}

/// Codes whose occurrence places a person in f(node): the node itself plus
/// every IsA-descendant for diseases; the drug code for drugs.
inline std::set<std::string> member_codes(const CausalKnowledgeGraph& g, const NodeId& node) {
    g.slot(node);
    std::set<std::string> codes{node.code};
    if (node.kind == NodeKind::Disease)
        for (const auto& d : descendants(g, node, Relation::IsA)) codes.insert(d.code);
    return codes;
}

/// Persons mapped to `node`, closed upward over IsA.
inline PersonSet extension(const Cohort& c, const CausalKnowledgeGraph& g, const NodeId& node) {
    PersonSet out;
    for (const auto& code : member_codes(g, node)) {
        const auto& s = node.kind == NodeKind::Disease ? c.persons_with_diagnosis(code) : c.persons_with_drug(code);
        PersonSet merged;
        std::set_union(out.begin(), out.end(), s.begin(), s.end(), std::back_inserter(merged));
        out.swap(merged);
    }
    return out;
}

inline std::set<std::string> extension_ids(const Cohort& c, const CausalKnowledgeGraph& g, const NodeId& node) {
    std::set<std::string> ids;
    for (std::size_t i : extension(c, g, node)) ids.insert(c.person(i).id);
    return ids;
}

/// Empirical P(f(node)).
inline double probability(const Cohort& c, const CausalKnowledgeGraph& g, const NodeId& node) {
    if (c.empty()) fail(Errc::EmptyCohort, "probability on empty cohort");
    return static_cast<double>(extension(c, g, node).size()) / static_cast<double>(c.size());
}

/// Earliest date at which a person enters f(node): first diagnosis among the
/// member codes, or first exposure start for drugs.
inline std::optional<Date> first_onset(const PersonRecord& p, const std::set<std::string>& codes, NodeKind kind) {
    std::optional<Date> best;
    if (kind == NodeKind::Disease) {
        for (const auto& d : p.diagnoses)
            if (codes.count(d.code) && (!best || d.date < *best)) best = d.date;
    } else {
        for (const auto& e : p.exposures)
            if (codes.count(e.drug) && (!best || e.start < *best)) best = e.start;
    }
    return best;
}

enum class IndexAnchor { Indication, Drug, EarliestRecord };

struct IndexDate {
    Date date;
    IndexAnchor anchor = IndexAnchor::EarliestRecord;
};

/// First indication diagnosis (IsA-closed), else first exposure to the drug,
/// else the earliest record. Throws NoRecords for persons without dated records.
inline IndexDate index_date_anchored(const PersonRecord& p, const Hypothesis& h, const CausalKnowledgeGraph& g) {
    if (auto d = first_onset(p, member_codes(g, h.indication), NodeKind::Disease)) return {*d, IndexAnchor::Indication};
    if (auto d = first_onset(p, member_codes(g, h.drug), NodeKind::Drug)) return {*d, IndexAnchor::Drug};
    if (auto d = p.earliest_record()) return {*d, IndexAnchor::EarliestRecord};
    fail(Errc::NoRecords, "person '" + p.id + "' has no dated records");
}

inline Date index_date(const PersonRecord& p, const Hypothesis& h, const CausalKnowledgeGraph& g) {
    return index_date_anchored(p, h, g).date;
}

struct CooccurrenceCounts {
    std::size_t both = 0;  ///< C12
    std::size_t first = 0; ///< P1
    std::size_t second = 0;
    std::size_t total = 0; ///< N

    friend bool operator==(const CooccurrenceCounts&, const CooccurrenceCounts&) = default;
};

inline CooccurrenceCounts cooccurrence_counts(const Cohort& c, const CausalKnowledgeGraph& g, const NodeId& d1,
                                              const NodeId& d2) {
    auto e1 = extension(c, g, d1);
    auto e2 = extension(c, g, d2);
    PersonSet both;
    std::set_intersection(e1.begin(), e1.end(), e2.begin(), e2.end(), std::back_inserter(both));
    return {both.size(), e1.size(), e2.size(), c.size()};
}

} // namespace ckg
