#pragma once

// Experiment harness: run configurations, trace CSV files, JSON reports and
// comparison tables.
//
// Configuration grammar (one assignment per line, '#' starts a comment):
//
//     [problem]           kind, seed, lambda, m_rows, n_cols, sparsity, n_samples, x_dim
//     [run]               x0 = auto | zeros | random:SEED | v1,v2,...
//                         repeats, output_dir, formats = csv,json
//     [solver NAME]       method = dppm | dppm_accelerated | subgradient | gd_backtracking | ppm
//                         plus the keys of that method (see solver_keys())
//
// NAME is used in file names and may contain letters, digits, '_', '-', '.'.

#include "dppm/baselines.hpp"
#include "dppm/core.hpp"
#include "dppm/diagnostics.hpp"
#include "dppm/dppm_solver.hpp"
#include "dppm/trace.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace dppm {

/// Configuration error tied to a line of the configuration text.
class ConfigParseError : public ConfigError {
public:
    ConfigParseError(int line, const std::string& message)
        : ConfigError("line " + std::to_string(line) + ": " + message), line_(line) {}

    int line() const noexcept { return line_; }

private:
    int line_;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr const char* kOutputDirEnv = "DPPM_OUTPUT_DIR";
inline constexpr const char* kTraceCsvHeader = "iter,f_value,step_w,dir_dot_sgrad_next,step_norm,dist_to_opt,elapsed_ns";

enum class SolverMethod { dppm, dppm_accelerated, subgradient, gd_backtracking, ppm };

inline std::string_view to_string(SolverMethod method) {
    switch (method) {
        case SolverMethod::dppm: return "dppm";
        case SolverMethod::dppm_accelerated: return "dppm_accelerated";
        case SolverMethod::subgradient: return "subgradient";
        case SolverMethod::gd_backtracking: return "gd_backtracking";
        case SolverMethod::ppm: return "ppm";
    }
    return "?";
}

inline SolverMethod parse_solver_method(std::string_view text) {
    for (auto m : {SolverMethod::dppm, SolverMethod::dppm_accelerated, SolverMethod::subgradient,
                   SolverMethod::gd_backtracking, SolverMethod::ppm}) {
        if (text == to_string(m)) return m;
    }
    throw ConfigError("unknown solver method '" + std::string(text) + "'");
}

inline bool is_directional(SolverMethod m) { return m == SolverMethod::dppm || m == SolverMethod::dppm_accelerated; }

struct SolverEntry {
    std::string name;
    SolverMethod method = SolverMethod::dppm;
    std::variant<SolverConfig, BaselineConfig> config;

    const SolverConfig& dppm() const { return std::get<SolverConfig>(config); }
    const BaselineConfig& baseline() const { return std::get<BaselineConfig>(config); }

    bool operator==(const SolverEntry&) const = default;
};

struct X0Spec {
    enum class Mode { automatic, zeros, explicit_vector, random };
    Mode mode = Mode::automatic;  // (10, 10) for 2-D problems, zeros otherwise
    std::vector<double> values;
    std::uint64_t seed = 0;

    bool operator==(const X0Spec&) const = default;
};

struct RunConfig {
    ProblemSpec problem;
    std::vector<SolverEntry> solvers;
    X0Spec x0;
    int repeats = 1;
    std::string output_dir = "dppm_out";
    bool write_csv = true;
    bool write_json = true;

    bool operator==(const RunConfig&) const = default;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double parse_double(std::string_view text, const char* what) {
    const std::string s(text);
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
        throw ConfigError(std::string(what) + " expects a finite number, got '" + s + "'");
    }
    return v;
}

template <class Int>
Int parse_integer(std::string_view text, const char* what) {
    Int v{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
        throw ConfigError(std::string(what) + " expects an integer, got '" + std::string(text) + "'");
    }
    return v;
}

inline bool parse_bool(std::string_view text, const char* what) {
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw ConfigError(std::string(what) + " expects true or false, got '" + std::string(text) + "'");
}

inline std::string format_bool(bool b) { return b ? "true" : "false"; }

struct Assignment {
    std::string key;
    std::string value;
    int line = 0;
};

struct Section {
    std::string kind;  // problem, run, solver
    std::string name;  // solver name
    int line = 0;
    std::vector<Assignment> entries;
};

inline bool valid_solver_name(std::string_view name) {
    if (name.empty()) return false;
    return std::all_of(name.begin(), name.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
    });
}

inline std::vector<Section> split_sections(std::string_view text) {
    std::vector<Section> sections;
    int line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto nl = text.find('\n', start);
        std::string_view raw = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
        start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
        const std::string_view line = trim(raw);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigParseError(line_no, "malformed section header");
            const std::string_view inner = trim(line.substr(1, line.size() - 2));
            Section sec;
            sec.line = line_no;
            const auto space = inner.find_first_of(" \t");
            sec.kind = std::string(inner.substr(0, space));
            if (sec.kind == "solver") {
                if (space == std::string_view::npos) throw ConfigParseError(line_no, "solver section needs a name");
                sec.name = std::string(trim(inner.substr(space)));
                if (!valid_solver_name(sec.name)) {
                    throw ConfigParseError(line_no, "invalid solver name '" + sec.name + "'");
                }
            } else if (sec.kind != "problem" && sec.kind != "run") {
                throw ConfigParseError(line_no, "unknown section '" + std::string(inner) + "'");
            } else if (space != std::string_view::npos) {
                throw ConfigParseError(line_no, "section '" + sec.kind + "' takes no name");
            }
            sections.push_back(std::move(sec));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigParseError(line_no, "expected 'key = value'");
        if (sections.empty()) throw ConfigParseError(line_no, "assignment outside any section");
        Assignment a{std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))), line_no};
        if (a.key.empty()) throw ConfigParseError(line_no, "empty key");
        for (const Assignment& prev : sections.back().entries) {
            if (prev.key == a.key) throw ConfigParseError(line_no, "duplicate key '" + a.key + "'");
        }
        sections.back().entries.push_back(std::move(a));
    }
    return sections;
}

// Key table for solver sections. Each key applies to a set of methods.
struct SolverKey {
    const char* name;
    std::vector<SolverMethod> methods;
    std::function<void(SolverEntry&, std::string_view)> set;
    std::function<std::optional<std::string>(const SolverEntry&)> get;
};

inline SolverConfig& dppm_cfg(SolverEntry& e) { return std::get<SolverConfig>(e.config); }
inline BaselineConfig& base_cfg(SolverEntry& e) { return std::get<BaselineConfig>(e.config); }

inline const std::vector<SolverKey>& solver_keys() {
    using M = SolverMethod;
    static const std::vector<M> dir = {M::dppm, M::dppm_accelerated};
    static const std::vector<M> all = {M::dppm, M::dppm_accelerated, M::subgradient, M::gd_backtracking, M::ppm};
    static const std::vector<M> base = {M::subgradient, M::gd_backtracking, M::ppm};

    auto num = [](auto member_of) {
        return std::make_pair(
            [member_of](SolverEntry& e, std::string_view v) { member_of(e) = parse_double(v, "value"); },
            [member_of](const SolverEntry& e) -> std::optional<std::string> {
                return format_double(member_of(const_cast<SolverEntry&>(e)));
            });
    };
    auto integer = [](auto member_of) {
        return std::make_pair(
            [member_of](SolverEntry& e, std::string_view v) {
                using T = std::remove_reference_t<decltype(member_of(e))>;
                member_of(e) = parse_integer<T>(v, "value");
            },
            [member_of](const SolverEntry& e) -> std::optional<std::string> {
                return std::to_string(member_of(const_cast<SolverEntry&>(e)));
            });
    };
    auto boolean = [](auto member_of) {
        return std::make_pair([member_of](SolverEntry& e, std::string_view v) { member_of(e) = parse_bool(v, "value"); },
                              [member_of](const SolverEntry& e) -> std::optional<std::string> {
                                  return format_bool(member_of(const_cast<SolverEntry&>(e)));
                              });
    };
    auto key = [](const char* name, const std::vector<M>& methods, auto accessors) {
        return SolverKey{name, methods, accessors.first, accessors.second};
    };

    // Accessors dispatch on the variant so shared keys work for either config type.
    auto either = [](auto dppm_member, auto base_member) {
        return [dppm_member, base_member](SolverEntry& e) -> auto& {
            if (auto* d = std::get_if<SolverConfig>(&e.config)) return dppm_member(*d);
            return base_member(std::get<BaselineConfig>(e.config));
        };
    };

    static const std::vector<SolverKey> keys = [&] {
        std::vector<SolverKey> k;
        k.push_back(key("max_iters", all,
                        integer(either([](SolverConfig& c) -> int& { return c.max_iters; },
                                       [](BaselineConfig& c) -> int& { return c.max_iters; }))));
        k.push_back(key("eps_stop", {M::dppm, M::dppm_accelerated, M::gd_backtracking, M::ppm},
                        num(either([](SolverConfig& c) -> double& { return c.eps_stop; },
                                   [](BaselineConfig& c) -> double& { return c.eps_stop; }))));
        k.push_back(key("record_distances", all,
                        boolean(either([](SolverConfig& c) -> bool& { return c.record_distances; },
                                       [](BaselineConfig& c) -> bool& { return c.record_distances; }))));
        k.push_back(SolverKey{
            "target_value", all,
            [](SolverEntry& e, std::string_view v) {
                const double d = parse_double(v, "value");
                if (auto* c = std::get_if<SolverConfig>(&e.config)) {
                    c->target_value = d;
                } else {
                    base_cfg(e).target_value = d;
                }
            },
            [](const SolverEntry& e) -> std::optional<std::string> {
                const auto& tv = std::holds_alternative<SolverConfig>(e.config) ? e.dppm().target_value
                                                                                : e.baseline().target_value;
                if (!tv) return std::nullopt;
                return format_double(*tv);
            }});
        k.push_back(key("t", {M::dppm, M::dppm_accelerated, M::ppm},
                        num(either([](SolverConfig& c) -> double& { return c.t; },
                                   [](BaselineConfig& c) -> double& { return c.t; }))));

        auto dir_kind = [](auto member) {
            return std::make_pair(
                [member](SolverEntry& e, std::string_view v) { member(dppm_cfg(e)) = parse_direction_kind(v); },
                [member](const SolverEntry& e) -> std::optional<std::string> {
                    return std::string(to_string(member(const_cast<SolverConfig&>(e.dppm()))));
                });
        };
        k.push_back(key("direction", dir, dir_kind([](SolverConfig& c) -> DirectionKind& { return c.strategy.kind; })));
        k.push_back(key("inner", dir, dir_kind([](SolverConfig& c) -> DirectionKind& { return c.strategy.inner; })));
        k.push_back(key("beta", dir, num([](SolverEntry& e) -> double& { return dppm_cfg(e).strategy.beta; })));
        k.push_back(key("sample_radius", {M::dppm, M::dppm_accelerated, M::subgradient},
                        num(either([](SolverConfig& c) -> double& { return c.strategy.sample_radius; },
                                   [](BaselineConfig& c) -> double& { return c.sample_radius; }))));
        k.push_back(key("sample_count", {M::dppm, M::dppm_accelerated, M::subgradient},
                        integer(either([](SolverConfig& c) -> int& { return c.strategy.sample_count; },
                                       [](BaselineConfig& c) -> int& { return c.sample_count; }))));
        k.push_back(key("sample_seed", {M::dppm, M::dppm_accelerated, M::subgradient},
                        integer(either([](SolverConfig& c) -> std::uint64_t& { return c.strategy.sample_seed; },
                                       [](BaselineConfig& c) -> std::uint64_t& { return c.sample_seed; }))));
        k.push_back(SolverKey{"scalar_method", dir,
                              [](SolverEntry& e, std::string_view v) {
                                  dppm_cfg(e).scalar_cfg.method = parse_scalar_method(v);
                              },
                              [](const SolverEntry& e) -> std::optional<std::string> {
                                  return std::string(to_string(e.dppm().scalar_cfg.method));
                              }});
        k.push_back(key("scalar_tol", dir, num([](SolverEntry& e) -> double& { return dppm_cfg(e).scalar_cfg.tol; })));
        k.push_back(key("scalar_max_evals", dir,
                        integer([](SolverEntry& e) -> int& { return dppm_cfg(e).scalar_cfg.max_evals; })));
        k.push_back(key("accel_restart", {M::dppm_accelerated},
                        boolean([](SolverEntry& e) -> bool& { return dppm_cfg(e).accel_restart; })));

        k.push_back(key("sampled", {M::subgradient}, boolean([](SolverEntry& e) -> bool& { return base_cfg(e).sampled; })));
        k.push_back(key("armijo_c", {M::gd_backtracking, M::ppm},
                        num([](SolverEntry& e) -> double& { return base_cfg(e).armijo_c; })));
        k.push_back(key("shrink", {M::gd_backtracking, M::ppm},
                        num([](SolverEntry& e) -> double& { return base_cfg(e).shrink; })));
        k.push_back(key("initial_step", {M::gd_backtracking, M::ppm},
                        num([](SolverEntry& e) -> double& { return base_cfg(e).initial_step; })));
        k.push_back(key("inner_iters", {M::ppm}, integer([](SolverEntry& e) -> int& { return base_cfg(e).inner_iters; })));
        k.push_back(key("inner_step_exponent", {M::ppm},
                        num([](SolverEntry& e) -> double& { return base_cfg(e).inner_step_exponent; })));
        k.push_back(SolverKey{"inner_mode", {M::ppm},
                              [](SolverEntry& e, std::string_view v) {
                                  if (v == "schedule") {
                                      base_cfg(e).inner_mode = PpmInnerMode::schedule;
                                  } else if (v == "converged") {
                                      base_cfg(e).inner_mode = PpmInnerMode::converged;
                                  } else {
                                      throw ConfigError("inner_mode expects schedule or converged, got '" +
                                                        std::string(v) + "'");
                                  }
                              },
                              [](const SolverEntry& e) -> std::optional<std::string> {
                                  return e.baseline().inner_mode == PpmInnerMode::schedule ? "schedule" : "converged";
                              }});
        k.push_back(key("inner_tol", {M::ppm}, num([](SolverEntry& e) -> double& { return base_cfg(e).inner_tol; })));
        k.push_back(key("inner_cap", {M::ppm}, integer([](SolverEntry& e) -> int& { return base_cfg(e).inner_cap; })));
        return k;
    }();
    return keys;
}

inline bool applies(const SolverKey& key, SolverMethod m) {
    return std::find(key.methods.begin(), key.methods.end(), m) != key.methods.end();
}

inline SolverEntry make_entry(std::string name, SolverMethod method) {
    SolverEntry e;
    e.name = std::move(name);
    e.method = method;
    if (is_directional(method)) {
        e.config = SolverConfig{};
    } else {
        BaselineConfig b;
        b.kind = method == SolverMethod::subgradient      ? BaselineKind::subgradient
                 : method == SolverMethod::gd_backtracking ? BaselineKind::gd_backtracking
                                                           : BaselineKind::ppm;
        e.config = b;
    }
    return e;
}

inline SolverEntry parse_solver_section(const Section& sec) {
    const auto method_it = std::find_if(sec.entries.begin(), sec.entries.end(),
                                        [](const Assignment& a) { return a.key == "method"; });
    if (method_it == sec.entries.end()) throw ConfigParseError(sec.line, "solver '" + sec.name + "' has no method");
    SolverMethod method;
    try {
        method = parse_solver_method(method_it->value);
    } catch (const ConfigError& e) {
        throw ConfigParseError(method_it->line, e.what());
    }
    SolverEntry entry = make_entry(sec.name, method);
    for (const Assignment& a : sec.entries) {
        if (a.key == "method") continue;
        const auto& keys = solver_keys();
        const auto it = std::find_if(keys.begin(), keys.end(), [&](const SolverKey& k) { return a.key == k.name; });
        if (it == keys.end() || !applies(*it, method)) {
            throw ConfigParseError(a.line, "unknown key '" + a.key + "' for method " + std::string(to_string(method)));
        }
        try {
            it->set(entry, a.value);
        } catch (const ConfigError& e) {
            throw ConfigParseError(a.line, a.key + ": " + e.what());
        }
    }
    try {
        std::visit([](const auto& c) { c.validate(); }, entry.config);
    } catch (const ConfigError& e) {
        throw ConfigParseError(sec.line, "solver '" + sec.name + "': " + e.what());
    }
    return entry;
}

inline void set_problem_key(ProblemSpec& p, const std::string& key, std::string_view v) {
    if (key == "kind") {
        p.kind = parse_problem_kind(v);
    } else if (key == "seed") {
        p.seed = parse_integer<std::uint64_t>(v, "seed");
    } else if (key == "lambda") {
        p.lambda = parse_double(v, "lambda");
    } else if (key == "m_rows") {
        p.m_rows = parse_integer<int>(v, "m_rows");
    } else if (key == "n_cols") {
        p.n_cols = parse_integer<int>(v, "n_cols");
    } else if (key == "sparsity") {
        p.sparsity = parse_integer<int>(v, "sparsity");
    } else if (key == "n_samples") {
        p.n_samples = parse_integer<int>(v, "n_samples");
    } else if (key == "x_dim") {
        p.x_dim = parse_integer<int>(v, "x_dim");
    } else {
        throw std::out_of_range(key);
    }
}

inline X0Spec parse_x0(std::string_view v) {
    X0Spec x0;
    if (v == "auto") return x0;
    if (v == "zeros") {
        x0.mode = X0Spec::Mode::zeros;
        return x0;
    }
    if (v.starts_with("random:")) {
        x0.mode = X0Spec::Mode::random;
        x0.seed = parse_integer<std::uint64_t>(v.substr(7), "x0 seed");
        return x0;
    }
    x0.mode = X0Spec::Mode::explicit_vector;
    for (std::string_view item : split(v, ',')) x0.values.push_back(parse_double(item, "x0"));
    return x0;
}

inline std::string format_x0(const X0Spec& x0) {
    switch (x0.mode) {
        case X0Spec::Mode::automatic: return "auto";
        case X0Spec::Mode::zeros: return "zeros";
        case X0Spec::Mode::random: return "random:" + std::to_string(x0.seed);
        case X0Spec::Mode::explicit_vector: {
            std::string s;
            for (std::size_t i = 0; i < x0.values.size(); ++i) s += (i ? "," : "") + format_double(x0.values[i]);
            return s;
        }
    }
    return "auto";
}

}  // namespace detail

/// Parses and validates a run configuration; errors carry the line number.
inline RunConfig parse_config(std::string_view text) {
    const std::vector<detail::Section> sections = detail::split_sections(text);
    RunConfig cfg;
    bool have_problem = false;
    bool have_run = false;
    std::set<std::string> names;
    const int last_line = static_cast<int>(std::count(text.begin(), text.end(), '\n')) + 1;

    for (const detail::Section& sec : sections) {
        if (sec.kind == "problem") {
            if (have_problem) throw ConfigParseError(sec.line, "duplicate [problem] section");
            have_problem = true;
            bool have_kind = false;
            for (const detail::Assignment& a : sec.entries) {
                try {
                    detail::set_problem_key(cfg.problem, a.key, a.value);
                } catch (const std::out_of_range&) {
                    throw ConfigParseError(a.line, "unknown key '" + a.key + "' in [problem]");
                } catch (const ConfigError& e) {
                    throw ConfigParseError(a.line, e.what());
                }
                have_kind = have_kind || a.key == "kind";
            }
            if (!have_kind) throw ConfigParseError(sec.line, "[problem] needs a kind");
        } else if (sec.kind == "run") {
            if (have_run) throw ConfigParseError(sec.line, "duplicate [run] section");
            have_run = true;
            for (const detail::Assignment& a : sec.entries) {
                try {
                    if (a.key == "x0") {
                        cfg.x0 = detail::parse_x0(a.value);
                    } else if (a.key == "repeats") {
                        cfg.repeats = detail::parse_integer<int>(a.value, "repeats");
                        if (cfg.repeats < 1) throw ConfigError("repeats must be at least 1");
                    } else if (a.key == "output_dir") {
                        if (a.value.empty()) throw ConfigError("output_dir must not be empty");
                        cfg.output_dir = a.value;
                    } else if (a.key == "formats") {
                        cfg.write_csv = cfg.write_json = false;
                        for (std::string_view f : detail::split(a.value, ',')) {
                            if (f == "csv") {
                                cfg.write_csv = true;
                            } else if (f == "json") {
                                cfg.write_json = true;
                            } else {
                                throw ConfigError("formats expects a subset of csv,json, got '" + std::string(f) + "'");
                            }
                        }
                    } else {
                        throw ConfigParseError(a.line, "unknown key '" + a.key + "' in [run]");
                    }
                } catch (const ConfigParseError&) {
                    throw;
                } catch (const ConfigError& e) {
                    throw ConfigParseError(a.line, e.what());
                }
            }
        } else {
            if (!names.insert(sec.name).second) {
                throw ConfigParseError(sec.line, "duplicate solver name '" + sec.name + "'");
            }
            cfg.solvers.push_back(detail::parse_solver_section(sec));
        }
    }
    if (!have_problem) throw ConfigParseError(last_line, "missing [problem] section");
    if (cfg.solvers.empty()) throw ConfigParseError(last_line, "no [solver NAME] sections");
    return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

/// Inverse of parse_config; doubles are written with 17 significant digits.
inline std::string serialize_config(const RunConfig& cfg) {
    using detail::format_double;
    std::ostringstream out;
    const ProblemSpec& p = cfg.problem;
    out << "[problem]\n"
        << "kind = " << to_string(p.kind) << "\n"
        << "seed = " << p.seed << "\n"
        << "lambda = " << format_double(p.lambda) << "\n"
        << "m_rows = " << p.m_rows << "\n"
        << "n_cols = " << p.n_cols << "\n"
        << "sparsity = " << p.sparsity << "\n"
        << "n_samples = " << p.n_samples << "\n"
        << "x_dim = " << p.x_dim << "\n\n";
    out << "[run]\n"
        << "x0 = " << detail::format_x0(cfg.x0) << "\n"
        << "repeats = " << cfg.repeats << "\n"
        << "output_dir = " << cfg.output_dir << "\n";
    std::vector<std::string> formats;
    if (cfg.write_csv) formats.emplace_back("csv");
    if (cfg.write_json) formats.emplace_back("json");
    if (!formats.empty()) {
        out << "formats = ";
        for (std::size_t i = 0; i < formats.size(); ++i) out << (i ? "," : "") << formats[i];
        out << "\n";
    }
    for (const SolverEntry& s : cfg.solvers) {
        out << "\n[solver " << s.name << "]\nmethod = " << to_string(s.method) << "\n";
        for (const detail::SolverKey& key : detail::solver_keys()) {
            if (!detail::applies(key, s.method)) continue;
            if (auto v = key.get(s)) out << key.name << " = " << *v << "\n";
        }
    }
    return out.str();
}

/// Parses "kind" or "kind:key=value,key=value" (keys as in [problem]).
inline ProblemSpec parse_problem_spec(std::string_view text) {
    ProblemSpec spec;
    const auto colon = text.find(':');
    spec.kind = parse_problem_kind(detail::trim(text.substr(0, colon)));
    if (colon == std::string_view::npos) return spec;
    for (std::string_view item : detail::split(text.substr(colon + 1), ',')) {
        const auto eq = item.find('=');
        if (eq == std::string_view::npos) throw ConfigError("problem option '" + std::string(item) + "' needs '='");
        const std::string key(detail::trim(item.substr(0, eq)));
        if (key == "kind") throw ConfigError("problem kind given twice");
        try {
            detail::set_problem_key(spec, key, detail::trim(item.substr(eq + 1)));
        } catch (const std::out_of_range&) {
            throw ConfigError("unknown problem option '" + key + "'");
        }
    }
    return spec;
}

/// Starting point for `problem` under the x0 rule; random points are uniform in [-1, 1]^n.
inline Vector resolve_x0(const X0Spec& spec, const Problem& problem) {
    const Eigen::Index n = problem.dimension;
    switch (spec.mode) {
        case X0Spec::Mode::automatic: return n == 2 ? Vector::Constant(2, 10.0) : Vector::Zero(n);
        case X0Spec::Mode::zeros: return Vector::Zero(n);
        case X0Spec::Mode::random: {
            Xoshiro256 rng(spec.seed);
            Vector x(n);
            for (Eigen::Index i = 0; i < n; ++i) x[i] = rng.uniform(-1.0, 1.0);
            return x;
        }
        case X0Spec::Mode::explicit_vector: {
            if (static_cast<Eigen::Index>(spec.values.size()) != n) {
                throw ConfigError("x0 has " + std::to_string(spec.values.size()) + " entries, problem dimension is " +
                                  std::to_string(n));
            }
            return Eigen::Map<const Vector>(spec.values.data(), n);
        }
    }
    throw ConfigError("invalid x0 mode");
}

// ---------------------------------------------------------------------------
// Trace CSV

inline void write_trace_csv(const Trace& trace, std::ostream& out) {
    auto cell = [&](double v) {
        if (!std::isnan(v)) out << detail::format_double(v);
    };
    out << kTraceCsvHeader << "\n";
    for (const IterRecord& r : trace.records) {
        out << r.k << ",";
        cell(r.f);
        out << ",";
        cell(r.step_w);
        out << ",";
        cell(r.dir_dot_sgrad_next);
        out << ",";
        cell(r.step_norm);
        out << ",";
        cell(r.dist_to_opt);
        out << "," << r.elapsed_ns << "\n";
    }
}

/// Reads a trace CSV. Only the scalar columns are restored; solver, t and
/// scalar_tol must be filled in by the caller when checks need them.
inline Trace read_trace_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || detail::trim(line) != kTraceCsvHeader) {
        throw ConfigError("trace CSV: unexpected header");
    }
    Trace trace;
    int line_no = 1;
    double best = std::numeric_limits<double>::infinity();
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto cells = detail::split(line, ',');
        if (cells.size() != 7) throw ConfigParseError(line_no, "trace CSV: expected 7 columns");
        auto num = [&](std::string_view c) {
            try {
                return c.empty() ? kNaN : detail::parse_double(c, "trace CSV cell");
            } catch (const ConfigError& e) {
                throw ConfigParseError(line_no, e.what());
            }
        };
        IterRecord r;
        try {
            r.k = detail::parse_integer<int>(cells[0], "iter");
            r.elapsed_ns = detail::parse_integer<std::int64_t>(cells[6], "elapsed_ns");
        } catch (const ConfigError& e) {
            throw ConfigParseError(line_no, e.what());
        }
        r.f = num(cells[1]);
        r.step_w = num(cells[2]);
        r.dir_dot_sgrad_next = num(cells[3]);
        r.step_norm = num(cells[4]);
        r.dist_to_opt = num(cells[5]);
        best = std::min(best, r.f);
        r.best_f = best;
        trace.records.push_back(std::move(r));
    }
    if (trace.records.empty()) throw ConfigError("trace CSV: no records");
    return trace;
}

inline Trace read_trace_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open trace '" + path.string() + "'");
    return read_trace_csv(in);
}

// ---------------------------------------------------------------------------
// Checks and reports

inline nlohmann::json to_json(const CheckReport& r) {
    return {{"check_name", r.check_name},       {"pass", r.pass},
            {"worst_violation", r.worst_violation}, {"worst_index", r.worst_index},
            {"tolerance", r.tolerance},         {"inconclusive", r.inconclusive},
            {"proxy", r.proxy},                 {"note", r.note}};
}

/// Checks that apply to a trace of the given solver. Point checks (envelope
/// sandwich, directional monotonicity) run at up to five recorded iterates
/// when the trace carries x and the directions.
inline std::vector<CheckReport> run_checks(const Problem& problem, const Trace& trace) {
    std::vector<CheckReport> out;
    auto append = [&](std::vector<CheckReport> reports) {
        for (auto& r : reports) out.push_back(std::move(r));
    };
    const auto& opt = problem.known_optimum;
    out.push_back(check_trace_monotone(trace));
    if (trace.solver == "dppm") {
        out.push_back(check_descent_inequality(trace));
        out.push_back(check_stepsize_bound(trace));
        append(check_relatedness_proxies(trace, opt));
        if (opt) {
            append(check_fejer(trace, opt));
            out.push_back(check_rate(trace, opt, false));
        }
    } else if (trace.solver == "dppm_accelerated") {
        out.push_back(check_stepsize_bound(trace));
        if (opt) out.push_back(check_rate(trace, opt, true));
    }

    if (detail::is_directional_solver(trace)) {
        std::vector<std::size_t> with_dir;
        for (std::size_t i = 0; i < trace.records.size(); ++i) {
            const IterRecord& r = trace.records[i];
            if (r.has_step() && r.direction.size() == problem.dimension && r.x.size() == problem.dimension) {
                with_dir.push_back(i);
            }
        }
        if (!with_dir.empty()) {
            ScalarSolverConfig scfg;
            if (!std::isnan(trace.scalar_tol)) scfg.tol = trace.scalar_tol;
            CheckReport sandwich;
            sandwich.check_name = "envelope_sandwich_at_iterates";
            CheckReport monotone;
            monotone.check_name = "monotone_directional_subgradient_at_iterates";
            auto merge = [](CheckReport& acc, const CheckReport& cur, int k, bool first) {
                acc.tolerance = cur.tolerance;
                if (first || cur.worst_violation > acc.worst_violation) {
                    acc.worst_violation = cur.worst_violation;
                    acc.worst_index = k;
                }
                acc.pass = acc.worst_violation <= acc.tolerance;
            };
            const std::size_t picks = std::min<std::size_t>(5, with_dir.size());
            for (std::size_t j = 0; j < picks; ++j) {
                const IterRecord& r = trace.records[with_dir[j * with_dir.size() / picks]];
                merge(sandwich, check_envelope_sandwich(problem, r.x, r.direction, trace.t, 2.0 * trace.t, scfg), r.k,
                      j == 0);
                const double span = std::max(2.0 * r.step_w, 1e-6);
                std::vector<double> grid(11);
                for (int g = 0; g <= 10; ++g) grid[g] = span * g / 10.0;
                merge(monotone, check_monotone_directional_subgradient(problem, r.x, r.direction, grid, trace.t, scfg),
                      r.k, j == 0);
            }
            out.push_back(sandwich);
            out.push_back(monotone);
        }
    }
    return out;
}

struct SolverOutcome {
    std::string name;
    SolverMethod method = SolverMethod::dppm;
    Trace trace;
    std::vector<CheckReport> checks;
    std::vector<std::int64_t> wall_ns;
    double median_wall_ns = 0.0;
    std::string error;  // set when the solver or its checks threw

    bool pass() const {
        return error.empty() && std::all_of(checks.begin(), checks.end(), [](const CheckReport& c) { return c.pass; });
    }
};

struct ExperimentResult {
    std::vector<SolverOutcome> solvers;
    nlohmann::json report;
    std::filesystem::path output_dir;

    bool all_checks_pass() const {
        return std::all_of(solvers.begin(), solvers.end(), [](const SolverOutcome& s) { return s.pass(); });
    }
};

inline double median(std::vector<std::int64_t> v) {
    if (v.empty()) return kNaN;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? static_cast<double>(v[n / 2]) : 0.5 * (static_cast<double>(v[n / 2 - 1]) + v[n / 2]);
}

inline Trace run_solver(const SolverEntry& entry, const Problem& problem, const Vector& x0) {
    switch (entry.method) {
        case SolverMethod::dppm: return run_dppm(problem, x0, entry.dppm());
        case SolverMethod::dppm_accelerated: return run_accelerated_dppm(problem, x0, entry.dppm());
        default: return run_baseline(problem, x0, entry.baseline());
    }
}

inline nlohmann::json problem_json(const ProblemSpec& p) {
    return {{"kind", to_string(p.kind)}, {"seed", p.seed},         {"lambda", p.lambda},
            {"m_rows", p.m_rows},         {"n_cols", p.n_cols},     {"sparsity", p.sparsity},
            {"n_samples", p.n_samples},   {"x_dim", p.x_dim}};
}

/// Runs every solver `repeats` times from the same start, writes
/// `<name>_trace.csv` and `report.json`, and returns the outcomes.
/// DPPM_OUTPUT_DIR, when set, replaces cfg.output_dir.
inline ExperimentResult run_experiment(const RunConfig& cfg) {
    namespace fs = std::filesystem;
    ExperimentResult result;
    const char* env_dir = std::getenv(kOutputDirEnv);
    result.output_dir = env_dir && *env_dir ? fs::path(env_dir) : fs::path(cfg.output_dir);

    const Problem problem = build_problem(cfg.problem);
    const Vector x0 = resolve_x0(cfg.x0, problem);

    for (const SolverEntry& entry : cfg.solvers) {
        SolverOutcome out;
        out.name = entry.name;
        out.method = entry.method;
        try {
            for (int r = 0; r < cfg.repeats; ++r) {
                const auto start = std::chrono::steady_clock::now();
                Trace trace = run_solver(entry, problem, x0);
                const auto stop = std::chrono::steady_clock::now();
                out.wall_ns.push_back(std::chrono::duration_cast<std::chrono::nanoseconds>(stop - start).count());
                if (r == 0) out.trace = std::move(trace);
            }
            out.median_wall_ns = median(out.wall_ns);
            out.checks = run_checks(problem, out.trace);
        } catch (const std::exception& e) {
            out.error = e.what();
        }
        result.solvers.push_back(std::move(out));
    }

    nlohmann::json report;
    report["generator"] = kGeneratorName;
    report["problem"] = problem_json(cfg.problem);
    report["problem"]["label"] = problem.label;
    report["x0"] = detail::format_x0(cfg.x0);
    report["repeats"] = cfg.repeats;
    report["solvers"] = nlohmann::json::array();
    for (const SolverOutcome& s : result.solvers) {
        nlohmann::json j;
        j["name"] = s.name;
        j["method"] = to_string(s.method);
        j["error"] = s.error;
        if (!s.trace.records.empty()) {
            j["termination"] = to_string(s.trace.termination);
            j["termination_message"] = s.trace.error_message;
            j["iterations"] = s.trace.iterations();
            j["final_value"] = s.trace.final_value();
            j["best_value"] = s.trace.best_value();
            j["metadata"] = s.trace.metadata;
            if (s.method == SolverMethod::ppm) {
                double worst = 0.0;
                for (const IterRecord& r : s.trace.records) {
                    if (!std::isnan(r.prox_residual)) worst = std::max(worst, r.prox_residual);
                }
                j["max_prox_residual"] = worst;
            }
        }
        j["wall_ns"] = s.wall_ns;
        j["median_wall_ns"] = s.median_wall_ns;
        j["checks"] = nlohmann::json::array();
        for (const CheckReport& c : s.checks) j["checks"].push_back(to_json(c));
        j["pass"] = s.pass();
        report["solvers"].push_back(std::move(j));
    }
    report["all_checks_pass"] = result.all_checks_pass();
    result.report = report;

    if (!cfg.write_csv && !cfg.write_json) return result;
    std::error_code ec;
    fs::create_directories(result.output_dir, ec);
    if (ec) throw IoError("cannot create output directory '" + result.output_dir.string() + "': " + ec.message());
    auto open = [](const fs::path& path) {
        std::ofstream f(path);
        if (!f) throw IoError("cannot write '" + path.string() + "'");
        return f;
    };
    if (cfg.write_csv) {
        for (const SolverOutcome& s : result.solvers) {
            if (s.trace.records.empty()) continue;
            const fs::path path = result.output_dir / (s.name + "_trace.csv");
            std::ofstream f = open(path);
            write_trace_csv(s.trace, f);
            if (!f) throw IoError("write failed for '" + path.string() + "'");
        }
    }
    if (cfg.write_json) {
        const fs::path path = result.output_dir / "report.json";
        std::ofstream f = open(path);
        f << report.dump(2) << "\n";
        if (!f) throw IoError("write failed for '" + path.string() + "'");
    }
    return result;
}

// ---------------------------------------------------------------------------
// Comparison tables

struct ComparisonTable {
    std::vector<std::string> problems;
    std::vector<std::string> solvers;
    // cells[row][col]: terminated value and median wall time in milliseconds
    std::vector<std::vector<std::pair<double, double>>> cells;
    std::string text;
    std::string csv;
};

inline std::string problem_identity(const nlohmann::json& report) {
    const auto& p = report.at("problem");
    std::string id = p.at("kind").get<std::string>();
    const std::string kind = id;
    if (kind == "compressed_sensing") {
        id += "(seed=" + std::to_string(p.at("seed").get<std::uint64_t>()) + ",m=" + std::to_string(p.at("m_rows").get<int>()) +
              ",n=" + std::to_string(p.at("n_cols").get<int>()) + ",s=" + std::to_string(p.at("sparsity").get<int>()) + ")";
    } else if (kind == "logistic_l1") {
        id += "(seed=" + std::to_string(p.at("seed").get<std::uint64_t>()) +
              ",N=" + std::to_string(p.at("n_samples").get<int>()) + ",d=" + std::to_string(p.at("x_dim").get<int>()) +
              ",lambda=" + detail::format_double(p.at("lambda").get<double>()) + ")";
    }
    return id;
}

/// One row per report (problem), one column per solver. Every report must
/// list the same solver names, and no problem may appear twice.
inline ComparisonTable compare(const std::vector<nlohmann::json>& reports) {
    if (reports.empty()) throw ArgumentError("compare: no reports");
    ComparisonTable table;
    try {
        for (const auto& s : reports.front().at("solvers")) table.solvers.push_back(s.at("name").get<std::string>());
        for (const nlohmann::json& report : reports) {
            const std::string id = problem_identity(report);
            if (std::find(table.problems.begin(), table.problems.end(), id) != table.problems.end()) {
                throw ArgumentError("compare: problem " + id + " appears in more than one report");
            }
            std::vector<std::string> names;
            std::vector<std::pair<double, double>> row;
            for (const auto& s : report.at("solvers")) {
                names.push_back(s.at("name").get<std::string>());
                const double v = s.contains("final_value") && s["final_value"].is_number() ? s["final_value"].get<double>()
                                                                                           : kNaN;
                const double ms = s.at("median_wall_ns").is_number() ? s["median_wall_ns"].get<double>() / 1e6 : kNaN;
                row.emplace_back(v, ms);
            }
            if (names != table.solvers) {
                throw ArgumentError("compare: report for " + id + " has a different solver set");
            }
            table.problems.push_back(id);
            table.cells.push_back(std::move(row));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ArgumentError(std::string("compare: malformed report: ") + e.what());
    }

    auto fmt = [](const char* f, double v) {
        char buf[64];
        std::snprintf(buf, sizeof buf, f, v);
        return std::string(buf);
    };
    std::size_t w0 = std::string_view("problem").size();
    for (const auto& p : table.problems) w0 = std::max(w0, p.size());
    std::vector<std::string> header{"problem"};
    for (const auto& s : table.solvers) header.push_back(s);
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < table.problems.size(); ++i) {
        std::vector<std::string> r{table.problems[i]};
        for (const auto& [v, ms] : table.cells[i]) r.push_back(fmt("%.6g", v) + " / " + fmt("%.3f", ms) + " ms");
        rows.push_back(std::move(r));
    }
    std::vector<std::size_t> widths(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) {
        widths[c] = header[c].size();
        for (const auto& r : rows) widths[c] = std::max(widths[c], r[c].size());
    }
    std::ostringstream text;
    auto emit = [&](const std::vector<std::string>& r) {
        for (std::size_t c = 0; c < r.size(); ++c) {
            text << (c ? "  " : "") << r[c] << std::string(widths[c] - r[c].size(), ' ');
        }
        text << "\n";
    };
    emit(header);
    emit([&] {
        std::vector<std::string> rule;
        for (std::size_t w : widths) rule.emplace_back(w, '-');
        return rule;
    }());
    for (const auto& r : rows) emit(r);
    table.text = text.str();

    std::ostringstream csv;
    csv << "problem";
    for (const auto& s : table.solvers) csv << "," << s << "_value," << s << "_ms";
    csv << "\n";
    for (std::size_t i = 0; i < table.problems.size(); ++i) {
        csv << '"' << table.problems[i] << '"';
        for (const auto& [v, ms] : table.cells[i]) {
            csv << ",";
            if (!std::isnan(v)) csv << detail::format_double(v);
            csv << ",";
            if (!std::isnan(ms)) csv << detail::format_double(ms);
        }
        csv << "\n";
    }
    table.csv = csv.str();
    return table;
}

inline nlohmann::json load_report(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open report '" + path.string() + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("report '" + path.string() + "': " + e.what());
    }
}

}  // namespace dppm
