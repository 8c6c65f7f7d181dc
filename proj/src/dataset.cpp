#include "fclearn/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fclearn/constraints.hpp"
#include "fclearn/errors.hpp"
#include "fclearn/rng.hpp"

namespace fclearn {

namespace {

constexpr double kExpClamp = 700.0;

double clamped_exp(double x) { return std::exp(std::clamp(x, -kExpClamp, kExpClamp)); }

std::vector<double> gather(const std::vector<double>& v, const std::vector<int>& idx) {
    std::vector<double> out;
    out.reserve(idx.size());
    for (int i : idx) out.push_back(v[i]);
    return out;
}

}  // namespace

void LocalDataSet::validate() const {
    if (ts.size() != ys.size())
        throw DataError("set '" + id + "': ages and volumes differ in length");
    if (ts.empty()) throw DataError("set '" + id + "': empty");
    for (std::size_t i = 0; i < ts.size(); ++i) {
        if (!std::isfinite(ts[i]) || !std::isfinite(ys[i]))
            throw DataError("set '" + id + "': non-finite value");
        if (i > 0 && !(ts[i] > ts[i - 1]))
            throw DataError("set '" + id + "': ages not strictly ascending");
    }
}

std::optional<SplitView> split(const LocalDataSet& set, int n_rv) {
    if (n_rv < 3) throw UsageError("n_rv must be at least 3");
    const int n = set.n();
    if (n < n_rv + 1) return std::nullopt;

    SplitView view;
    view.n_rv = n_rv;
    for (int i = 0; i < n_rv; ++i) view.train.push_back(i);
    if (n == n_rv + 1) {
        view.validation.push_back(n - 1);
    } else {
        for (int i = n_rv; i < n - 1; ++i) view.validation.push_back(i);
        view.test.push_back(n - 1);
    }
    return view;
}

GlobalDataSet make_global(std::vector<LocalDataSet> sets, int n_rv,
                          std::vector<std::string>* notes) {
    GlobalDataSet global;
    global.n_rv = n_rv;
    for (auto& set : sets) {
        set.validate();
        auto view = split(set, n_rv);
        if (!view) {
            if (notes)
                notes->push_back("set '" + set.id + "' dropped: " + std::to_string(set.n()) +
                                 " points, need at least " + std::to_string(n_rv + 1));
            continue;
        }
        global.splits.push_back(std::move(*view));
        global.sets.push_back(std::move(set));
    }
    if (global.sets.empty()) throw DataError("no usable local data sets");
    return global;
}

std::vector<double> GlobalDataSet::train_ts(int m) const { return gather(sets[m].ts, splits[m].train); }
std::vector<double> GlobalDataSet::train_ys(int m) const { return gather(sets[m].ys, splits[m].train); }
std::vector<double> GlobalDataSet::validation_ts(int m) const { return gather(sets[m].ts, splits[m].validation); }
std::vector<double> GlobalDataSet::validation_ys(int m) const { return gather(sets[m].ys, splits[m].validation); }

double eval_logistic(double t, double c1, double c2, double c3) {
    return c1 / (1.0 + clamped_exp(-c2 * (t - c3)));
}

double eval_gompertz(double t, double c1, double c2, double c3) {
    return c1 * clamped_exp(-c2 * clamped_exp(-c3 * t));
}

double eval_truth(const GroundTruthSpec& spec, double t) {
    return spec.curve == CurveClass::Logistic ? eval_logistic(t, spec.c1, spec.c2, spec.c3)
                                              : eval_gompertz(t, spec.c1, spec.c2, spec.c3);
}

namespace {

bool satisfies_constraints(const GroundTruthSpec& spec) {
    const auto& grid = constraint_age_grid();
    std::vector<double> pred(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) pred[i] = eval_truth(spec, grid[i]);
    return count_violations(pred) == 0;
}

std::vector<double> sample_ages(Rng& rng, int count) {
    std::vector<double> ages(count);
    for (;;) {
        for (auto& a : ages) a = rng.uniform(30.0, 80.0);
        std::sort(ages.begin(), ages.end());
        bool distinct = true;
        for (int i = 1; i < count; ++i)
            if (!(ages[i] > ages[i - 1])) distinct = false;
        if (distinct) return ages;
    }
}

}  // namespace

std::vector<GroundTruthSpec> sample_truth_specs(int count, int points_per_set,
                                                std::uint64_t seed) {
    if (points_per_set < 1) throw UsageError("points_per_set must be positive");
    Rng rng(derive_seed(seed, fnv1a64("truth_specs")));
    std::vector<GroundTruthSpec> specs;
    specs.reserve(count);
    for (int i = 0; i < count; ++i) {
        GroundTruthSpec spec;
        spec.set_id = "set_" + std::to_string(i);
        spec.curve = (i % 2 == 0) ? CurveClass::Logistic : CurveClass::Gompertz;
        int attempts = 0;
        do {
            if (++attempts > 100000)
                throw std::logic_error("ground-truth rejection sampling failed to converge");
            if (spec.curve == CurveClass::Logistic) {
                spec.c1 = rng.uniform(0.5, 50.0);
                spec.c2 = rng.uniform(0.05, 0.5);
                spec.c3 = rng.uniform(20.0, 80.0);
            } else {
                spec.c1 = rng.uniform(0.5, 50.0);
                spec.c2 = rng.uniform(4.0, 10.0);
                spec.c3 = rng.uniform(0.02, 0.15);
            }
        } while (!satisfies_constraints(spec));
        spec.ages = sample_ages(rng, points_per_set);
        specs.push_back(std::move(spec));
    }
    return specs;
}

GlobalDataSet generate_synthetic(const std::vector<GroundTruthSpec>& specs,
                                 double noise_sigma, std::uint64_t seed, int n_rv) {
    if (noise_sigma < 0.0) throw UsageError("noise_sigma must be non-negative");
    std::vector<LocalDataSet> sets;
    sets.reserve(specs.size());
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const auto& spec = specs[i];
        if (!satisfies_constraints(spec))
            throw DataError("ground truth '" + spec.set_id + "' violates growth constraints");
        Rng rng(derive_seed(seed, fnv1a64("noise"), i));
        LocalDataSet set;
        set.id = spec.set_id;
        set.ts = spec.ages;
        set.ys.reserve(spec.ages.size());
        for (double t : spec.ages) {
            double y = eval_truth(spec, t) * (1.0 + rng.normal(0.0, noise_sigma));
            set.ys.push_back(std::max(y, 0.0));
        }
        sets.push_back(std::move(set));
    }
    return make_global(std::move(sets), n_rv);
}

namespace {

std::string strip_cr(std::string line) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    return line;
}

double parse_double_field(const std::string& field, int line_no, const char* what) {
    double value = 0.0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end || !std::isfinite(value))
        throw DataError("line " + std::to_string(line_no) + ": bad " + what + " value '" +
                        field + "'");
    return value;
}

}  // namespace

GlobalDataSet load_global(const std::string& path, int n_rv, std::vector<std::string>* notes) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");

    std::string line;
    int line_no = 0;
    if (!std::getline(in, line)) throw DataError("'" + path + "': empty file");
    ++line_no;
    if (strip_cr(line) != "set_id,t,y")
        throw DataError("line 1: expected header 'set_id,t,y'");

    struct Row {
        double t, y;
        int line_no;
    };
    std::vector<std::string> order;
    std::map<std::string, std::vector<Row>> by_set;

    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        std::size_t p1 = line.find(',');
        std::size_t p2 = (p1 == std::string::npos) ? std::string::npos : line.find(',', p1 + 1);
        if (p1 == std::string::npos || p2 == std::string::npos)
            throw DataError("line " + std::to_string(line_no) + ": expected 3 comma-separated fields");
        std::string id = line.substr(0, p1);
        if (id.empty()) throw DataError("line " + std::to_string(line_no) + ": empty set_id");
        double t = parse_double_field(line.substr(p1 + 1, p2 - p1 - 1), line_no, "t");
        double y = parse_double_field(line.substr(p2 + 1), line_no, "y");
        auto it = by_set.find(id);
        if (it == by_set.end()) {
            order.push_back(id);
            it = by_set.emplace(id, std::vector<Row>{}).first;
        }
        it->second.push_back({t, y, line_no});
    }
    if (order.empty()) throw DataError("'" + path + "': no data rows");

    std::vector<LocalDataSet> sets;
    sets.reserve(order.size());
    for (const auto& id : order) {
        auto rows = by_set[id];
        std::stable_sort(rows.begin(), rows.end(),
                         [](const Row& a, const Row& b) { return a.t < b.t; });
        for (std::size_t i = 1; i < rows.size(); ++i) {
            if (rows[i].t == rows[i - 1].t)
                throw DataError("line " + std::to_string(rows[i].line_no) + ": duplicate age " +
                                std::to_string(rows[i].t) + " in set '" + id + "'");
        }
        LocalDataSet set;
        set.id = id;
        for (const auto& row : rows) {
            set.ts.push_back(row.t);
            set.ys.push_back(row.y);
        }
        sets.push_back(std::move(set));
    }
    return make_global(std::move(sets), n_rv, notes);
}

namespace {

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

}  // namespace

void save_global_csv(const GlobalDataSet& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << "set_id,t,y\n";
    for (const auto& set : data.sets)
        for (int i = 0; i < set.n(); ++i)
            out << set.id << ',' << format_double(set.ts[i]) << ',' << format_double(set.ys[i])
                << '\n';
}

void save_truth_json(const std::vector<GroundTruthSpec>& specs, const std::string& path) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& spec : specs) {
        arr.push_back({{"set_id", spec.set_id},
                       {"class", spec.curve == CurveClass::Logistic ? "logistic" : "gompertz"},
                       {"c1", spec.c1},
                       {"c2", spec.c2},
                       {"c3", spec.c3},
                       {"ages", spec.ages}});
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << arr.dump(2) << '\n';
}

std::vector<GroundTruthSpec> load_truth_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    nlohmann::json arr;
    try {
        in >> arr;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("'" + path + "': " + e.what());
    }
    if (!arr.is_array()) throw DataError("'" + path + "': expected a JSON array");
    std::vector<GroundTruthSpec> specs;
    try {
        for (const auto& item : arr) {
            GroundTruthSpec spec;
            spec.set_id = item.at("set_id").get<std::string>();
            std::string cls = item.at("class").get<std::string>();
            if (cls == "logistic")
                spec.curve = CurveClass::Logistic;
            else if (cls == "gompertz")
                spec.curve = CurveClass::Gompertz;
            else
                throw DataError("'" + path + "': unknown class '" + cls + "'");
            spec.c1 = item.at("c1").get<double>();
            spec.c2 = item.at("c2").get<double>();
            spec.c3 = item.at("c3").get<double>();
            spec.ages = item.at("ages").get<std::vector<double>>();
            specs.push_back(std::move(spec));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError("'" + path + "': " + e.what());
    }
    return specs;
}

}  // namespace fclearn
