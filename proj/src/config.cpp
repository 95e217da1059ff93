/*
   Copyright 2026 The amswave Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#include "amswave/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "amswave/expression.hpp"
#include "amswave/levelset.hpp"
#include "amswave/models.hpp"

namespace amswave {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

std::string join(const std::vector<std::string>& v, const char* sep)
{
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + v[i];
    return out;
}

} // namespace

ConfigError::ConfigError(std::vector<std::string> errors)
    : std::runtime_error("invalid config: " + join(errors, "; ")), errors_(std::move(errors))
{}

const std::vector<std::string>& known_checks()
{
    static const std::vector<std::string> names{"naive", "bounds", "clt", "j1", "l2", "path_time"};
    return names;
}

const std::map<std::string, std::map<std::string, double>>& builtin_catalog()
{
    static const std::map<std::string, std::map<std::string, double>> catalog{
        {"bm1d", {{"mu", -1.0}, {"sigma", 1.0}}},
        {"bm2d", {{"mu", 0.0}}},
        {"coupled2d", {{"coupling", 2.0}}},
    };
    return catalog;
}

namespace {

/// Walks a JSON object, recording errors with their paths instead of throwing.
class Reader {
  public:
    explicit Reader(std::vector<std::string>& errors) : errors_(errors) {}

    void error(const std::string& path, const std::string& msg) { errors_.push_back(path + ": " + msg); }

    bool object(const json& j, const std::string& path, const std::set<std::string>& allowed)
    {
        if (!j.is_object()) {
            error(path, "expected an object");
            return false;
        }
        for (const auto& [key, value] : j.items()) {
            if (!allowed.count(key)) error(path + "." + key, "unknown key");
        }
        return true;
    }

    void real(const json& j, const std::string& key, const std::string& path, double& out)
    {
        if (!j.contains(key)) return;
        const json& v = j.at(key);
        if (!v.is_number()) {
            error(path + "." + key, "expected a number");
            return;
        }
        out = v.get<double>();
        if (!std::isfinite(out)) error(path + "." + key, "must be finite");
    }

    template <class Int>
    void integer(const json& j, const std::string& key, const std::string& path, Int& out)
    {
        if (!j.contains(key)) return;
        const json& v = j.at(key);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
            error(path + "." + key, "expected a non-negative integer");
            return;
        }
        out = static_cast<Int>(v.get<std::uint64_t>());
    }

    void string(const json& j, const std::string& key, const std::string& path, std::string& out)
    {
        if (!j.contains(key)) return;
        const json& v = j.at(key);
        if (!v.is_string()) {
            error(path + "." + key, "expected a string");
            return;
        }
        out = v.get<std::string>();
    }

    bool reals(const json& v, const std::string& path, std::vector<double>& out)
    {
        if (!v.is_array()) {
            error(path, "expected an array of numbers");
            return false;
        }
        out.clear();
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number()) {
                error(path + "[" + std::to_string(i) + "]", "expected a number");
                return false;
            }
            out.push_back(v[i].get<double>());
        }
        return true;
    }

    void reals(const json& j, const std::string& key, const std::string& path, std::vector<double>& out)
    {
        if (j.contains(key)) reals(j.at(key), path + "." + key, out);
    }

  private:
    std::vector<std::string>& errors_;
};

void check_expression(Reader& rd, const std::string& src, std::size_t dim, const std::string& path)
{
    try {
        (void)Expression::parse(src, dim);
    } catch (const ParseError& e) {
        rd.error(path, e.what());
    }
}

void read_model(Reader& rd, const json& j, ModelSpec& m)
{
    const std::string path = "$.model";
    if (!rd.object(j, path, {"builtin", "params", "dim", "noise_dim", "drift", "diffusion", "level",
                             "initial_state", "initial_std", "absorb_threshold"})) {
        return;
    }
    rd.real(j, "absorb_threshold", path, m.absorb_threshold);
    if (!(m.absorb_threshold < 0.0)) rd.error(path + ".absorb_threshold", "must be negative");

    if (j.contains("builtin")) {
        rd.string(j, "builtin", path, m.builtin);
        for (const char* key : {"dim", "noise_dim", "drift", "diffusion", "level", "initial_state", "initial_std"}) {
            if (j.contains(key)) rd.error(path + "." + key, "not allowed together with 'builtin'");
        }
        const auto& catalog = builtin_catalog();
        const auto it = catalog.find(m.builtin);
        if (it == catalog.end()) {
            std::vector<std::string> names;
            for (const auto& [name, params] : catalog) names.push_back(name);
            rd.error(path + ".builtin", "unknown model '" + m.builtin + "' (known: " + join(names, ", ") + ")");
            return;
        }
        m.params = it->second;
        if (j.contains("params")) {
            const json& p = j.at("params");
            std::set<std::string> allowed;
            for (const auto& [name, value] : it->second) allowed.insert(name);
            if (rd.object(p, path + ".params", allowed)) {
                for (auto& [name, value] : m.params) rd.real(p, name, path + ".params", value);
            }
        }
        if (m.builtin == "bm1d" && !(m.params["sigma"] > 0.0)) rd.error(path + ".params.sigma", "must be positive");
        return;
    }

    if (j.contains("params")) rd.error(path + ".params", "only allowed with 'builtin'");
    for (const char* key : {"dim", "drift", "diffusion", "level", "initial_state"}) {
        if (!j.contains(key)) rd.error(path + "." + key, "missing required field");
    }
    rd.integer(j, "dim", path, m.dim);
    m.noise_dim = m.dim;
    rd.integer(j, "noise_dim", path, m.noise_dim);
    if (m.dim == 0 || m.noise_dim == 0) {
        rd.error(path + ".dim", "dimensions must be positive");
        return;
    }
    if (j.contains("drift")) {
        const json& d = j.at("drift");
        if (!d.is_array() || d.size() != m.dim) {
            rd.error(path + ".drift", "expected an array of " + std::to_string(m.dim) + " expressions");
        } else {
            for (std::size_t i = 0; i < d.size(); ++i) {
                const std::string p = path + ".drift[" + std::to_string(i) + "]";
                if (!d[i].is_string()) {
                    rd.error(p, "expected a string");
                    continue;
                }
                m.drift.push_back(d[i].get<std::string>());
                check_expression(rd, m.drift.back(), m.dim, p);
            }
        }
    }
    if (j.contains("diffusion")) {
        const json& s = j.at("diffusion");
        if (!s.is_array() || s.size() != m.dim) {
            rd.error(path + ".diffusion", "expected " + std::to_string(m.dim) + " rows");
        } else {
            for (std::size_t i = 0; i < s.size(); ++i) {
                const std::string prow = path + ".diffusion[" + std::to_string(i) + "]";
                if (!s[i].is_array() || s[i].size() != m.noise_dim) {
                    rd.error(prow, "expected a row of " + std::to_string(m.noise_dim) + " expressions");
                    continue;
                }
                std::vector<std::string> row;
                for (std::size_t k = 0; k < s[i].size(); ++k) {
                    const std::string p = prow + "[" + std::to_string(k) + "]";
                    if (!s[i][k].is_string()) {
                        rd.error(p, "expected a string");
                        continue;
                    }
                    row.push_back(s[i][k].get<std::string>());
                    check_expression(rd, row.back(), m.dim, p);
                }
                m.diffusion.push_back(std::move(row));
            }
        }
    }
    rd.string(j, "level", path, m.level);
    if (j.contains("level")) check_expression(rd, m.level, m.dim, path + ".level");
    rd.reals(j, "initial_state", path, m.initial_state);
    if (j.contains("initial_state") && m.initial_state.size() != m.dim) {
        rd.error(path + ".initial_state", "expected " + std::to_string(m.dim) + " coordinates");
    }
    rd.reals(j, "initial_std", path, m.initial_std);
    if (!m.initial_std.empty()) {
        if (m.initial_std.size() != m.dim) {
            rd.error(path + ".initial_std", "expected " + std::to_string(m.dim) + " coordinates");
        }
        for (double s : m.initial_std) {
            if (!(s >= 0.0)) rd.error(path + ".initial_std", "standard deviations must be non-negative");
        }
    }
}

std::size_t model_dim(const ModelSpec& m)
{
    if (m.builtin.empty()) return m.dim;
    return m.builtin == "bm1d" ? 1 : 2;
}

} // namespace

ExperimentConfig parse_config(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError({std::string("$: malformed JSON: ") + e.what()});
    }
    std::vector<std::string> errors;
    Reader rd(errors);
    ExperimentConfig cfg;
    if (!rd.object(j, "$", {"model", "N", "h", "max_steps", "level_grid", "replicates", "seed", "workers",
                            "out_dir", "censor_policy", "checks", "committor", "wave", "variance", "validate",
                            "naive"})) {
        throw ConfigError(errors);
    }
    if (!j.contains("model")) {
        rd.error("$.model", "missing required field");
    } else {
        read_model(rd, j.at("model"), cfg.model);
    }
    const std::size_t dim = model_dim(cfg.model);

    rd.integer(j, "N", "$", cfg.N);
    if (cfg.N < 2) rd.error("$.N", "need at least 2 particles");
    rd.real(j, "h", "$", cfg.h);
    if (!(cfg.h > 0.0)) rd.error("$.h", "must be positive");
    rd.integer(j, "max_steps", "$", cfg.max_steps);
    if (cfg.max_steps == 0) rd.error("$.max_steps", "must be positive");
    rd.reals(j, "level_grid", "$", cfg.level_grid);
    if (cfg.level_grid.empty()) rd.error("$.level_grid", "must not be empty");
    for (std::size_t i = 0; i < cfg.level_grid.size(); ++i) {
        const double t = cfg.level_grid[i];
        if (t < 0.0 || t > 1.0 || (i && t <= cfg.level_grid[i - 1])) {
            rd.error("$.level_grid", "levels must be strictly increasing within [0, 1]");
            break;
        }
    }
    rd.integer(j, "replicates", "$", cfg.replicates);
    if (cfg.replicates == 0) rd.error("$.replicates", "must be positive");
    rd.integer(j, "seed", "$", cfg.seed);
    rd.integer(j, "workers", "$", cfg.workers);
    if (cfg.workers == 0) rd.error("$.workers", "must be positive");
    rd.string(j, "out_dir", "$", cfg.out_dir);
    rd.string(j, "censor_policy", "$", cfg.censor_policy);
    if (cfg.censor_policy != "abort" && cfg.censor_policy != "absorb") {
        rd.error("$.censor_policy", "expected 'abort' or 'absorb'");
    }
    if (j.contains("checks")) {
        const json& c = j.at("checks");
        if (!c.is_array()) {
            rd.error("$.checks", "expected an array of strings");
        } else {
            for (std::size_t i = 0; i < c.size(); ++i) {
                const std::string p = "$.checks[" + std::to_string(i) + "]";
                if (!c[i].is_string()) {
                    rd.error(p, "expected a string");
                    continue;
                }
                const std::string name = c[i].get<std::string>();
                const auto& known = known_checks();
                if (std::find(known.begin(), known.end(), name) == known.end()) {
                    rd.error(p, "unknown check '" + name + "' (known: " + join(known, ", ") + ")");
                }
                cfg.checks.push_back(name);
            }
        }
    }

    if (j.contains("committor")) {
        const json& c = j.at("committor");
        const std::string path = "$.committor";
        if (rd.object(c, path, {"probes", "m"})) {
            rd.integer(c, "m", path, cfg.committor.m);
            if (cfg.committor.m == 0) rd.error(path + ".m", "must be positive");
            if (c.contains("probes")) {
                const json& p = c.at("probes");
                if (!p.is_array()) {
                    rd.error(path + ".probes", "expected an array of points");
                } else {
                    for (std::size_t i = 0; i < p.size(); ++i) {
                        const std::string pp = path + ".probes[" + std::to_string(i) + "]";
                        Point y;
                        if (!rd.reals(p[i], pp, y)) continue;
                        if (dim && y.size() != dim) rd.error(pp, "expected " + std::to_string(dim) + " coordinates");
                        cfg.committor.probes.push_back(std::move(y));
                    }
                }
            }
        }
    }
    if (j.contains("wave")) {
        const json& w = j.at("wave");
        const std::string path = "$.wave";
        if (rd.object(w, path, {"levels", "x0", "jump_tol", "samples"})) {
            rd.integer(w, "levels", path, cfg.wave.levels);
            if (cfg.wave.levels == 0) rd.error(path + ".levels", "must be positive");
            rd.reals(w, "x0", path, cfg.wave.x0);
            if (!cfg.wave.x0.empty() && dim && cfg.wave.x0.size() != dim) {
                rd.error(path + ".x0", "expected " + std::to_string(dim) + " coordinates");
            }
            rd.real(w, "jump_tol", path, cfg.wave.jump_tol);
            if (cfg.wave.jump_tol < 0.0) rd.error(path + ".jump_tol", "must be non-negative");
            rd.integer(w, "samples", path, cfg.wave.samples);
            if (cfg.wave.samples == 0) rd.error(path + ".samples", "must be positive");
        }
    }
    if (j.contains("variance")) {
        const json& v = j.at("variance");
        const std::string path = "$.variance";
        if (rd.object(v, path, {"K", "M_p", "M_q", "cloud_cap", "observable"})) {
            rd.integer(v, "K", path, cfg.variance.K);
            if (cfg.variance.K < 2) rd.error(path + ".K", "need at least 2 intervals");
            rd.integer(v, "M_p", path, cfg.variance.M_p);
            if (cfg.variance.M_p == 0) rd.error(path + ".M_p", "must be positive");
            rd.integer(v, "M_q", path, cfg.variance.M_q);
            if (cfg.variance.M_q < 2) rd.error(path + ".M_q", "must be at least 2");
            rd.integer(v, "cloud_cap", path, cfg.variance.cloud_cap);
            if (cfg.variance.cloud_cap < 2) rd.error(path + ".cloud_cap", "must be at least 2");
            rd.string(v, "observable", path, cfg.variance.observable);
            check_expression(rd, cfg.variance.observable, dim, path + ".observable");
        }
    }
    if (j.contains("validate")) {
        const json& v = j.at("validate");
        const std::string path = "$.validate";
        if (rd.object(v, path, {"box_lo", "box_hi", "per_axis", "delta_min"})) {
            rd.reals(v, "box_lo", path, cfg.validate.box_lo);
            rd.reals(v, "box_hi", path, cfg.validate.box_hi);
            for (const auto* box : {&cfg.validate.box_lo, &cfg.validate.box_hi}) {
                if (!box->empty() && dim && box->size() != dim) {
                    rd.error(path + (box == &cfg.validate.box_lo ? ".box_lo" : ".box_hi"),
                             "expected " + std::to_string(dim) + " coordinates");
                }
            }
            if (cfg.validate.box_lo.size() == cfg.validate.box_hi.size()) {
                for (std::size_t i = 0; i < cfg.validate.box_lo.size(); ++i) {
                    if (!(cfg.validate.box_lo[i] < cfg.validate.box_hi[i])) {
                        rd.error(path, "box_lo must be below box_hi on every axis");
                        break;
                    }
                }
            } else if (!cfg.validate.box_lo.empty() && !cfg.validate.box_hi.empty()) {
                rd.error(path, "box_lo and box_hi must have the same length");
            }
            rd.integer(v, "per_axis", path, cfg.validate.per_axis);
            if (cfg.validate.per_axis < 2) rd.error(path + ".per_axis", "must be at least 2");
            rd.real(v, "delta_min", path, cfg.validate.delta_min);
            if (cfg.validate.delta_min < 0.0) rd.error(path + ".delta_min", "must be non-negative");
        }
    }
    if (j.contains("naive")) {
        const json& n = j.at("naive");
        const std::string path = "$.naive";
        if (rd.object(n, path, {"M"})) {
            rd.integer(n, "M", path, cfg.naive.M);
            if (cfg.naive.M == 0) rd.error(path + ".M", "must be positive");
        }
    }
    if (!errors.empty()) throw ConfigError(errors);
    return cfg;
}

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError({"$: cannot open config file '" + path + "'"});
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

ojson config_to_json(const ExperimentConfig& cfg)
{
    ojson model = ojson::object();
    if (!cfg.model.builtin.empty()) {
        model["builtin"] = cfg.model.builtin;
        model["params"] = ojson::object();
        for (const auto& [name, value] : cfg.model.params) model["params"][name] = value;
    } else {
        model["dim"] = cfg.model.dim;
        model["noise_dim"] = cfg.model.noise_dim;
        model["drift"] = cfg.model.drift;
        model["diffusion"] = cfg.model.diffusion;
        model["level"] = cfg.model.level;
        model["initial_state"] = cfg.model.initial_state;
        if (!cfg.model.initial_std.empty()) model["initial_std"] = cfg.model.initial_std;
    }
    model["absorb_threshold"] = cfg.model.absorb_threshold;

    ojson j = ojson::object();
    j["model"] = model;
    j["N"] = cfg.N;
    j["h"] = cfg.h;
    j["max_steps"] = cfg.max_steps;
    j["level_grid"] = cfg.level_grid;
    j["replicates"] = cfg.replicates;
    j["seed"] = cfg.seed;
    j["workers"] = cfg.workers;
    j["out_dir"] = cfg.out_dir;
    j["censor_policy"] = cfg.censor_policy;
    j["checks"] = cfg.checks;
    j["committor"] = {{"probes", cfg.committor.probes}, {"m", cfg.committor.m}};
    j["wave"] = {{"levels", cfg.wave.levels},
                 {"x0", cfg.wave.x0},
                 {"jump_tol", cfg.wave.jump_tol},
                 {"samples", cfg.wave.samples}};
    j["variance"] = {{"K", cfg.variance.K},
                     {"M_p", cfg.variance.M_p},
                     {"M_q", cfg.variance.M_q},
                     {"cloud_cap", cfg.variance.cloud_cap},
                     {"observable", cfg.variance.observable}};
    j["validate"] = {{"box_lo", cfg.validate.box_lo},
                     {"box_hi", cfg.validate.box_hi},
                     {"per_axis", cfg.validate.per_axis},
                     {"delta_min", cfg.validate.delta_min}};
    j["naive"] = {{"M", cfg.naive.M}};
    return j;
}

namespace {

DiffusionModel expression_model(const ModelSpec& spec)
{
    const std::size_t d = spec.dim;
    const std::size_t n = spec.noise_dim;
    std::vector<Expression> drift, diffusion;
    for (const auto& s : spec.drift) drift.push_back(Expression::parse(s, d));
    for (const auto& row : spec.diffusion)
        for (const auto& s : row) diffusion.push_back(Expression::parse(s, d));
    const Expression level = Expression::parse(spec.level, d);

    DiffusionModel m;
    m.name = "expression";
    m.dim = d;
    m.noise_dim = n;
    m.drift = [drift](std::span<const double> y, std::span<double> b) {
        for (std::size_t i = 0; i < drift.size(); ++i) b[i] = drift[i](y);
    };
    m.diffusion = [diffusion](std::span<const double> y, std::span<double> s) {
        for (std::size_t i = 0; i < diffusion.size(); ++i) s[i] = diffusion[i](y);
    };
    m.level.eval = [level](std::span<const double> y) { return level(y); };
    const Point x0 = spec.initial_state;
    const Point sd = spec.initial_std;
    m.init_sampler = [x0, sd](RngStream& rng) {
        Point x = x0;
        for (std::size_t i = 0; i < sd.size(); ++i) {
            if (sd[i] > 0.0) x[i] += sd[i] * rng.normal();
        }
        return x;
    };
    return m;
}

} // namespace

DiffusionModel build_model(const ExperimentConfig& cfg)
{
    const ModelSpec& spec = cfg.model;
    DiffusionModel m;
    if (spec.builtin == "bm1d") {
        m = models::bm1d(spec.params.at("mu"), spec.params.at("sigma"));
    } else if (spec.builtin == "bm2d") {
        m = models::bm2d(spec.params.at("mu"));
    } else if (spec.builtin == "coupled2d") {
        m = models::coupled2d(spec.params.at("coupling"));
    } else if (spec.builtin.empty()) {
        m = expression_model(spec);
    } else {
        throw ConfigError({"$.model.builtin: unknown model '" + spec.builtin + "'"});
    }
    m.step = cfg.h;
    m.max_steps = cfg.max_steps;
    m.absorb_threshold = spec.absorb_threshold;
    try {
        m.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError({std::string("$.model: ") + e.what()});
    }

    const Point origin(m.dim, 0.0);
    std::vector<double> b(m.dim), s(m.dim * m.noise_dim);
    m.drift(origin, b);
    m.diffusion(origin, s);
    std::vector<std::string> errors;
    for (std::size_t i = 0; i < b.size(); ++i) {
        if (!std::isfinite(b[i])) errors.push_back("$.model.drift[" + std::to_string(i) + "]: not finite at the origin");
    }
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!std::isfinite(s[i])) {
            errors.push_back("$.model.diffusion[" + std::to_string(i / m.noise_dim) + "][" +
                             std::to_string(i % m.noise_dim) + "]: not finite at the origin");
        }
    }
    if (!std::isfinite(m.level(origin))) errors.push_back("$.model.level: not finite at the origin");
    if (!errors.empty()) throw ConfigError(errors);
    return m;
}

std::optional<double> analytic_probability(const ExperimentConfig& cfg)
{
    if (cfg.model.builtin != "bm1d") return std::nullopt;
    return committor_1d_analytic(cfg.model.params.at("mu"), cfg.model.params.at("sigma"),
                                 cfg.model.absorb_threshold, 1.0, 0.0);
}

} // namespace amswave
