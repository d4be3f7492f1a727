#ifndef FDELAB_CLI_HPP
#define FDELAB_CLI_HPP

// Config parsing, report serialization and the run/sweep drivers behind the
// fdelab executable. Config and report formats are described in docs/formats.md.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>  // vendored nlohmann/json

#include "experiments.hpp"

namespace fdelab::cli {

using json = nlohmann::ordered_json;

inline constexpr int kExitPass = 0;
inline constexpr int kExitCheckFailure = 1;
inline constexpr int kExitError = 2;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LoadedConfig {
    ExperimentConfig cfg;
    std::optional<std::string> out;
};

enum class KeyKind { Text, Int, Real, RealList, Bool };

inline const std::map<std::string, KeyKind>& config_keys()
{
    static const std::map<std::string, KeyKind> keys = {
        {"experiment", KeyKind::Text}, {"domain", KeyKind::Text},   {"out", KeyKind::Text},
        {"d", KeyKind::Int},           {"n", KeyKind::Int},         {"seed", KeyKind::Int},
        {"samples", KeyKind::Int},     {"cases", KeyKind::Int},     {"store_every", KeyKind::Int},
        {"extent", KeyKind::Real},     {"m", KeyKind::Real},        {"c", KeyKind::Real},
        {"T", KeyKind::Real},          {"p", KeyKind::Real},        {"r", KeyKind::Real},
        {"S2", KeyKind::Real},         {"dt0", KeyKind::Real},      {"t_max", KeyKind::Real},
        {"newton_tol", KeyKind::Real}, {"amplitude", KeyKind::Real}, {"v0_scale", KeyKind::Real},
        {"C_min", KeyKind::Real},      {"p_list", KeyKind::RealList}, {"adaptive_dt", KeyKind::Bool},
    };
    return keys;
}

inline bool is_numeric_key(const std::string& k)
{
    auto it = config_keys().find(k);
    return it != config_keys().end() && (it->second == KeyKind::Int || it->second == KeyKind::Real);
}

namespace detail {

inline int line_of_offset(const std::string& text, std::size_t off)
{
    off = std::min(off, text.size());
    return 1 + int(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(off), '\n'));
}

// Line of the first occurrence of "key" in the source, or 0 when absent.
inline int line_of_key(const std::string& text, const std::string& key)
{
    const std::size_t pos = text.find("\"" + key + "\"");
    return pos == std::string::npos ? 0 : line_of_offset(text, pos);
}

inline std::string anchored(const std::string& origin, const std::string& text, const std::string& key,
                            const std::string& msg)
{
    const int line = line_of_key(text, key);
    return origin + (line > 0 ? ":" + std::to_string(line) : "") + ": key \"" + key + "\": " + msg;
}

}  // namespace detail

// Builds an ExperimentConfig from a parsed JSON object. text is the source
// used for line anchors; origin prefixes every message.
inline LoadedConfig config_from_json(const json& j, const std::string& text, const std::string& origin)
{
    auto fail = [&](const std::string& key, const std::string& msg) {
        throw ConfigError(detail::anchored(origin, text, key, msg));
    };
    if (!j.is_object()) throw ConfigError(origin + ":1: top level must be a JSON object");
    for (const auto& [k, v] : j.items())
        if (!config_keys().count(k)) fail(k, "unknown key");

    auto real = [&](const std::string& k) -> std::optional<double> {
        if (!j.contains(k)) return std::nullopt;
        if (!j[k].is_number()) fail(k, "expected a number");
        const double v = j[k].get<double>();
        if (!std::isfinite(v)) fail(k, "must be finite");
        return v;
    };
    auto integer = [&](const std::string& k) -> std::optional<long long> {
        if (!j.contains(k)) return std::nullopt;
        const json& v = j[k];
        if (v.is_number_integer()) return v.get<long long>();
        if (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>() && std::abs(v.get<double>()) < 1e15)
            return static_cast<long long>(v.get<double>());
        fail(k, "expected an integer");
        return std::nullopt;
    };
    auto positive = [&](const std::string& k) {
        auto v = real(k);
        if (v && !(*v > 0.0)) fail(k, "must be positive");
        return v;
    };
    auto at_least = [&](const std::string& k, long long lo) -> std::optional<int> {
        auto v = integer(k);
        if (!v) return std::nullopt;
        if (*v < lo || *v > 100000000) fail(k, "must lie in [" + std::to_string(lo) + ", 1e8]");
        return int(*v);
    };

    LoadedConfig lc;
    ExperimentConfig& c = lc.cfg;
    if (!j.contains("experiment")) throw ConfigError(origin + ":1: missing required key \"experiment\"");
    if (!j["experiment"].is_string()) fail("experiment", "expected a string");
    c.experiment = j["experiment"].get<std::string>();
    const ExperimentInfo* info = find_experiment(c.experiment);
    if (!info) fail("experiment", "unknown experiment \"" + c.experiment + "\" (see `fdelab list`)");
    if (j.contains("domain")) {
        if (!j["domain"].is_string()) fail("domain", "expected a string");
        c.domain = j["domain"].get<std::string>();
        if (c.domain != "interval" && c.domain != "ball") fail("domain", "must be \"interval\" or \"ball\"");
    }
    if (j.contains("out")) {
        if (!j["out"].is_string()) fail("out", "expected a string");
        lc.out = j["out"].get<std::string>();
    }
    if (auto d = at_least("d", 1)) c.d = *d;
    if (c.domain == "interval" && c.d != 1) fail("d", "the interval domain is one-dimensional");
    if (c.domain == "ball" && c.d > 12) fail("d", "must not exceed 12");
    if (auto e = positive("extent")) c.extent = *e;
    else if (c.domain == "ball") c.extent = 1.0;
    c.n = at_least("n", 3);
    c.m = positive("m");
    c.c = positive("c");
    c.T = positive("T");
    c.r = real("r");
    if (c.r && !(*c.r > 1.0)) fail("r", "must exceed 1");
    c.S2 = positive("S2");
    c.p = real("p");
    if (c.p && !(*c.p > 1.0)) fail("p", "must exceed 1");
    if (j.contains("p_list")) {
        if (!j["p_list"].is_array()) fail("p_list", "expected an array of numbers");
        for (const auto& v : j["p_list"]) {
            if (!v.is_number() || !(v.get<double>() > 1.0) || !std::isfinite(v.get<double>()))
                fail("p_list", "entries must be finite numbers above 1");
            c.p_list.push_back(v.get<double>());
        }
    }
    c.dt0 = positive("dt0");
    c.t_max = positive("t_max");
    if (auto t = positive("newton_tol")) c.newton_tol = *t;
    if (j.contains("seed")) {
        auto s = integer("seed");
        if (*s < 0) fail("seed", "must be nonnegative");
        c.seed = static_cast<std::uint64_t>(*s);
    }
    c.samples = at_least("samples", 1);
    c.cases = at_least("cases", 1);
    c.store_every = at_least("store_every", 1);
    c.amplitude = real("amplitude");
    if (c.amplitude && !(*c.amplitude > -1.0)) fail("amplitude", "must exceed -1");
    c.v0_scale = positive("v0_scale");
    c.C_min = positive("C_min");
    if (j.contains("adaptive_dt")) {
        if (!j["adaptive_dt"].is_boolean()) fail("adaptive_dt", "expected true or false");
        c.adaptive_dt = j["adaptive_dt"].get<bool>();
    }
    if (c.c && c.T) fail("T", "give c or T, not both");
    if (info->needs_seed && !c.seed)
        throw ConfigError(origin + ":1: experiment \"" + c.experiment + "\" is randomized and requires \"seed\"");
    return lc;
}

inline json parse_json_text(const std::string& text, const std::string& origin)
{
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(origin + ":" + std::to_string(detail::line_of_offset(text, e.byte)) + ": " + e.what());
    }
}

inline std::string read_text(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path + ": cannot read config");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline LoadedConfig load_config(const std::string& path)
{
    const std::string text = read_text(path);
    return config_from_json(parse_json_text(text, path), text, path);
}

// 17 significant digits; non-finite values as nan/inf tokens.
inline std::string format_real(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline json real_json(double v)
{
    if (std::isfinite(v)) return v;
    return format_real(v);
}

inline json report_json(const ExperimentReport& r)
{
    json j;
    j["experiment"] = r.experiment;
    j["passed"] = r.passed();
    j["seed"] = r.seed ? json(*r.seed) : json(nullptr);
    json checks = json::array();
    for (const auto& c : r.checks)
        checks.push_back({{"name", c.name},
                          {"anchor", c.anchor},
                          {"measured", real_json(c.measured)},
                          {"relation", c.relation},
                          {"bound", real_json(c.bound)},
                          {"pass", c.pass}});
    j["checks"] = checks;
    json head = json::object();
    for (const auto& [k, v] : r.headline) head[k] = real_json(v);
    j["headline"] = head;
    json env = json::object();
    for (const auto& [k, v] : r.environment) env[k] = real_json(v);
    j["environment"] = env;
    j["notes"] = r.notes;
    json tr = json::array();
    for (const auto& t : r.traces) tr.push_back("trace_" + t.name + ".csv");
    j["traces"] = tr;
    return j;
}

inline std::string table_csv(const Table& t)
{
    std::string s;
    for (std::size_t k = 0; k < t.columns.size(); ++k) s += (k ? "," : "") + t.columns[k];
    s += '\n';
    for (const auto& row : t.rows) {
        for (std::size_t k = 0; k < row.size(); ++k) s += (k ? "," : "") + format_real(row[k]);
        s += '\n';
    }
    return s;
}

inline void write_file(const std::filesystem::path& p, const std::string& content)
{
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << content;
    if (!out) throw std::runtime_error("write failed for " + p.string());
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline json document(json body)
{
    json j;
    j["schema"] = 1;
    for (auto& [k, v] : body.items()) j[k] = v;
    return j;
}

inline json metadata_json(double wall_seconds, int threads)
{
    json j;
    j["schema"] = 1;
    j["wall_time_seconds"] = wall_seconds;
    j["threads"] = threads;
    j["generated_at_unix"] = std::chrono::duration_cast<std::chrono::seconds>(
                                 std::chrono::system_clock::now().time_since_epoch())
                                 .count();
    return j;
}

inline void write_run_outputs(const std::filesystem::path& dir, const ExperimentReport& r)
{
    std::filesystem::create_directories(dir);
    for (const auto& t : r.traces) write_file(dir / ("trace_" + t.name + ".csv"), table_csv(t));
    write_file(dir / "report.json", dump(document(report_json(r))));
}

inline int worker_count()
{
    const char* env = std::getenv("FDE_LAB_THREADS");
    if (!env || !*env) return 1;
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1) throw ConfigError("FDE_LAB_THREADS must be a positive integer");
    return int(std::min<long>(v, 256));
}

struct RunResult {
    int code = kExitError;
    std::optional<ExperimentReport> report;
};

inline void print_summary(std::ostream& os, const ExperimentReport& r)
{
    for (const auto& c : r.checks)
        os << (c.pass ? "PASS  " : "FAIL  ") << c.name << ": " << format_real(c.measured) << ' ' << c.relation << ' '
           << format_real(c.bound) << "  [" << c.anchor << "]\n";
    os << r.experiment << ": " << (r.passed() ? "all checks passed" : "check failure") << '\n';
}

// Loads, runs and writes. Nothing is written unless the experiment finishes.
inline int run_command(const std::string& config_path, const std::optional<std::string>& out_dir, std::ostream& os,
                       std::ostream& err)
{
    try {
        const auto t0 = std::chrono::steady_clock::now();
        LoadedConfig lc = load_config(config_path);
        ExperimentReport r = run_experiment(lc.cfg);
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const std::filesystem::path dir = out_dir ? *out_dir : lc.out.value_or("fdelab_out");
        write_run_outputs(dir, r);
        write_file(dir / "metadata.json", dump(metadata_json(wall, 1)));
        print_summary(os, r);
        return r.passed() ? kExitPass : kExitCheckFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitError;
    }
}

inline std::vector<double> parse_value_list(const std::string& csv)
{
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t"), e = item.find_last_not_of(" \t");
        if (b == std::string::npos) throw ConfigError("--values: empty entry");
        const std::string tok = item.substr(b, e - b + 1);
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(tok, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != tok.size() || !std::isfinite(v)) throw ConfigError("--values: \"" + tok + "\" is not a number");
        out.push_back(v);
    }
    if (out.empty()) throw ConfigError("--values: empty list");
    return out;
}

inline json with_value(json j, const std::string& key, double v)
{
    const KeyKind kind = config_keys().at(key);
    if (kind == KeyKind::Int) {
        if (std::floor(v) != v || std::abs(v) >= 1e15)
            throw ConfigError("--values: \"" + key + "\" takes integer values, got " + format_real(v));
        j[key] = static_cast<long long>(v);
    } else {
        j[key] = v;
    }
    if (key == "p") j.erase("p_list");
    return j;
}

// Runs one experiment per value on a pool of FDE_LAB_THREADS workers and
// assembles outputs in input order.
inline int sweep_command(const std::string& config_path, const std::string& key, const std::string& values_csv,
                         const std::optional<std::string>& out_dir, std::ostream& os, std::ostream& err)
{
    try {
        const auto t0 = std::chrono::steady_clock::now();
        const std::string text = read_text(config_path);
        const json base = parse_json_text(text, config_path);
        LoadedConfig base_cfg = config_from_json(base, text, config_path);
        if (!is_numeric_key(key)) throw ConfigError("--key: \"" + key + "\" is not a numeric config field");
        const std::vector<double> values = parse_value_list(values_csv);
        std::vector<ExperimentConfig> cfgs;
        for (double v : values)
            cfgs.push_back(config_from_json(with_value(base, key, v), text, config_path + " with " + key + " = " +
                                                                                  format_real(v))
                               .cfg);
        const int threads = std::min<int>(worker_count(), int(cfgs.size()));
        std::vector<std::optional<ExperimentReport>> reports(cfgs.size());
        std::vector<std::string> errors(cfgs.size());
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t k; (k = next++) < cfgs.size();) {
                try {
                    reports[k] = run_experiment(cfgs[k]);
                } catch (const std::exception& e) {
                    errors[k] = e.what();
                }
            }
        };
        std::vector<std::thread> pool;
        for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
        worker();
        for (auto& t : pool) t.join();
        for (std::size_t k = 0; k < cfgs.size(); ++k)
            if (!reports[k]) throw std::runtime_error(key + " = " + format_real(values[k]) + ": " + errors[k]);

        // union of headline keys in first-seen order
        std::vector<std::string> cols;
        for (const auto& r : reports)
            for (const auto& [k, v] : r->headline)
                if (k != key && std::find(cols.begin(), cols.end(), k) == cols.end()) cols.push_back(k);
        std::string csv = key + ",passed";
        for (const auto& c : cols) csv += "," + c;
        csv += '\n';
        bool all = true;
        json runs = json::array();
        for (std::size_t k = 0; k < values.size(); ++k) {
            const ExperimentReport& r = *reports[k];
            all = all && r.passed();
            csv += format_real(values[k]) + "," + (r.passed() ? "1" : "0");
            for (const auto& c : cols) {
                auto it = std::find_if(r.headline.begin(), r.headline.end(), [&](const auto& h) { return h.first == c; });
                csv += "," + (it == r.headline.end() ? std::string() : format_real(it->second));
            }
            csv += '\n';
            json rj = report_json(r);
            rj["sweep_value"] = values[k];
            rj["trace_dir"] = "run_" + std::to_string(k);
            runs.push_back(rj);
        }
        const std::filesystem::path dir = out_dir ? *out_dir : base_cfg.out.value_or("fdelab_out");
        std::filesystem::create_directories(dir);
        for (std::size_t k = 0; k < values.size(); ++k) {
            const std::filesystem::path sub = dir / ("run_" + std::to_string(k));
            std::filesystem::create_directories(sub);
            for (const auto& t : reports[k]->traces) write_file(sub / ("trace_" + t.name + ".csv"), table_csv(t));
        }
        write_file(dir / "sweep.csv", csv);
        json body;
        body["experiment"] = base_cfg.cfg.experiment;
        body["sweep_key"] = key;
        body["sweep_values"] = values;
        body["passed"] = all;
        body["runs"] = runs;
        write_file(dir / "report.json", dump(document(body)));
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        write_file(dir / "metadata.json", dump(metadata_json(wall, threads)));
        for (std::size_t k = 0; k < values.size(); ++k)
            os << key << " = " << format_real(values[k]) << ": " << (reports[k]->passed() ? "PASS" : "FAIL") << '\n';
        os << csv;
        return all ? kExitPass : kExitCheckFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitError;
    }
}

inline int list_command(std::ostream& os)
{
    for (const auto& e : experiment_catalog())
        os << e.name << "  " << e.anchor << (e.needs_seed ? "  (seed required)" : "") << '\n';
    return kExitPass;
}

}  // namespace fdelab::cli

#endif
