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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>
#include <json.hpp>

#include "amswave/config.hpp"
#include "amswave/experiment.hpp"
#include "amswave/expression.hpp"
#include "amswave/models.hpp"
#include "amswave/report.hpp"

using namespace amswave;
namespace fs = std::filesystem;

namespace {

double eval(const std::string& src, std::vector<double> y = {})
{
    return Expression::parse(src, y.size())(y);
}

ParseError parse_error(const std::string& src, std::size_t dim = 1)
{
    try {
        Expression::parse(src, dim);
    } catch (const ParseError& e) {
        return e;
    }
    FAIL("expected a parse error for " << src);
    return ParseError("", 0, 0);
}

std::vector<std::string> config_errors(const std::string& text)
{
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.errors();
    }
    return {};
}

bool mentions(const std::vector<std::string>& errors, const std::string& needle)
{
    for (const auto& e : errors) {
        if (e.find(needle) != std::string::npos) return true;
    }
    return false;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch_dir(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("amswave_test_" + name);
    fs::remove_all(p);
    return p;
}

double rel_err(double a, double b)
{
    const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
    return std::abs(a - b) / scale;
}

} // namespace

TEST_CASE("expression precedence and associativity")
{
    CHECK(eval("1 + 2 * 3") == 7);
    CHECK(eval("(1 + 2) * 3") == 9);
    CHECK(eval("2^3^2") == 512);
    CHECK(eval("-2^2") == -4);
    CHECK(eval("2 - 3 - 4") == -5);
    CHECK(eval("8 / 4 / 2") == 1);
    CHECK(eval("2 * -3") == -6);
    CHECK(eval("1.5e2 + .5") == 150.5);
    CHECK(eval("exp(0) + cos(0) + sin(0) + tanh(0)") == 2);
    CHECK(eval("y1 * y2 - y3", {2, 3, 4}) == 2);
}

TEST_CASE("double-well drift")
{
    const auto e = Expression::parse("-(y1^3 - y1)", 1);
    CHECK(e(std::vector<double>{0.0}) == 0.0);
    CHECK(e(std::vector<double>{2.0}) == -6.0);
    CHECK(e(std::vector<double>{-1.0}) == 0.0);
    CHECK(e.max_variable() == 1);
}

TEST_CASE("expression errors carry positions")
{
    const auto unclosed = parse_error("exp(");
    CHECK(unclosed.line() == 1);
    CHECK(unclosed.column() == 1);
    CHECK(std::string(unclosed.what()) == "1:1: unclosed call to 'exp'");
    CHECK(parse_error("1 + sin(y1").column() == 5);
    CHECK(parse_error("(1 + 2").column() == 1);
    CHECK(parse_error("1 +").column() == 4);
    CHECK(parse_error("y0").column() == 1);
    CHECK(parse_error("y3", 2).column() == 1);
    CHECK(parse_error("foo(1)").column() == 1);
    CHECK(parse_error("2 3").column() == 3);
    CHECK(parse_error("1 +\n  * 2").line() == 2);
    CHECK(parse_error("1 +\n  * 2").column() == 3);
}

TEST_CASE("builtin bm1d config")
{
    const auto cfg = parse_config(R"({"model": {"builtin": "bm1d", "params": {"mu": -1}}})");
    CHECK(cfg.model.builtin == "bm1d");
    CHECK(cfg.model.params.at("mu") == -1.0);
    CHECK(cfg.model.params.at("sigma") == 1.0);
    CHECK(analytic_probability(cfg).value() == doctest::Approx(0.119203).epsilon(1e-5));
    const auto m = build_model(cfg);
    CHECK(m.name == "bm1d");
    CHECK(m.step == cfg.h);
}

TEST_CASE("schema errors are collected with field paths")
{
    const auto errs = config_errors(R"({
        "model": {"dim": 1, "noise_dim": 1, "drift": ["exp("], "diffusion": [["1"]],
                  "level": "y1", "initial_state": [0]},
        "N": 1, "h": -1, "bogus": true, "checks": ["clt", "nope"]})");
    CHECK(mentions(errs, "$.bogus: unknown key"));
    CHECK(mentions(errs, "$.model.drift[0]: 1:1: unclosed call to 'exp'"));
    CHECK(mentions(errs, "$.N"));
    CHECK(mentions(errs, "$.h"));
    CHECK(mentions(errs, "nope"));
    CHECK(mentions(config_errors("{}"), "$.model"));
    CHECK(mentions(config_errors(R"({"model": {"builtin": "nope"}})"), "$.model.builtin"));
    CHECK(mentions(config_errors(R"({"model": {"builtin": "bm1d", "params": {"kappa": 1}}})"), "kappa"));
    CHECK(mentions(config_errors("{ not json"), "$"));
    CHECK(mentions(config_errors(R"({"model": {"dim": 2, "noise_dim": 1, "drift": ["y1"],
        "diffusion": [["1"], ["1"]], "level": "y1", "initial_state": [0, 0]}})"), "$.model.drift"));
}

TEST_CASE("config round trip")
{
    const std::vector<std::string> texts{
        R"({"model": {"builtin": "bm1d"}})",
        R"j({"model": {"builtin": "coupled2d", "params": {"coupling": 1.5}}, "N": 400, "replicates": 500,
            "checks": ["naive", "clt", "bounds"], "seed": 99, "workers": 3, "censor_policy": "absorb",
            "variance": {"K": 10, "observable": "tanh(y2)"}, "committor": {"probes": [[0.1, 0.2]], "m": 50},
            "wave": {"levels": 100, "x0": [0, 0]}, "validate": {"box_lo": [-1, -3], "box_hi": [1, 3]}})j",
        R"({"model": {"dim": 2, "noise_dim": 2, "drift": ["-(y1^3 - y1) + y2", "-y2"],
            "diffusion": [["1", "0"], ["0", "0.5"]], "level": "y1", "initial_state": [0, 0],
            "initial_std": [0, 0.7071], "absorb_threshold": -0.8}, "level_grid": [0, 0.5, 1]})"};
    for (const auto& t : texts) {
        const auto cfg = parse_config(t);
        const std::string dumped = dump_json(config_to_json(cfg));
        const auto again = parse_config(dumped);
        CHECK(again == cfg);
        CHECK(dump_json(config_to_json(again)) == dumped);
    }
}

TEST_CASE("expression models agree with the builtins")
{
    const auto builtin = build_model(parse_config(R"({"model": {"builtin": "coupled2d"}})"));
    const auto expr = build_model(parse_config(R"({"model": {"dim": 2, "noise_dim": 2,
        "drift": ["2*y2 - y1^3 + y1", "-y2"], "diffusion": [["1", "0"], ["0", "1"]],
        "level": "y1", "initial_state": [0, 0]}})"));
    const auto b1 = build_model(parse_config(R"({"model": {"builtin": "bm1d", "params": {"mu": -1, "sigma": 1.3}}})"));
    const auto e1 = build_model(parse_config(R"({"model": {"dim": 1, "noise_dim": 1,
        "drift": ["-1"], "diffusion": [["1.3"]], "level": "y1", "initial_state": [0]}})"));
    RngStream rng(1, 1);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double y[2] = {4 * rng.uniform() - 2, 4 * rng.uniform() - 2};
        double bd[2], ed[2], bs[4], es[4];
        builtin.drift(y, bd);
        expr.drift(y, ed);
        builtin.diffusion(y, bs);
        expr.diffusion(y, es);
        for (int k = 0; k < 2; ++k) worst = std::max(worst, rel_err(bd[k], ed[k]));
        for (int k = 0; k < 4; ++k) worst = std::max(worst, rel_err(bs[k], es[k]));
        worst = std::max(worst, rel_err(builtin.level(y), expr.level(y)));
        double b1d[1], e1d[1], b1s[1], e1s[1];
        b1.drift({y, 1}, b1d);
        e1.drift({y, 1}, e1d);
        b1.diffusion({y, 1}, b1s);
        e1.diffusion({y, 1}, e1s);
        worst = std::max({worst, rel_err(b1d[0], e1d[0]), rel_err(b1s[0], e1s[0])});
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("expression models must be finite at the origin")
{
    CHECK_THROWS_AS(build_model(parse_config(R"({"model": {"dim": 1, "noise_dim": 1,
        "drift": ["1 / y1"], "diffusion": [["1"]], "level": "y1", "initial_state": [0]}})")),
                    ConfigError);
}

TEST_CASE("number formatting and JSON emission")
{
    CHECK(format_double(0.1) == "0.10000000000000001");
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(std::nan("")) == "nan");
    nlohmann::ordered_json j = {{"a", 1.0}, {"b", std::vector<double>{0.5, 2.0}}, {"c", std::nan("")}, {"d", 3}};
    CHECK(dump_json(j) == "{\n  \"a\": 1.0,\n  \"b\": [0.5, 2.0],\n  \"c\": null,\n  \"d\": 3\n}\n");
    const auto back = nlohmann::json::parse(dump_json({{"x", 0.1 + 0.2}}));
    CHECK(back["x"].get<double>() == 0.1 + 0.2);
}

TEST_CASE("CSV tables")
{
    CsvTable t({"a", "b", "c"});
    t.add_row({0.1, std::int64_t{-2}, std::string("x,y")});
    t.add_row({1.0, std::uint64_t{3}, std::string("q\"q")});
    CHECK(t.str() == "a,b,c\n0.10000000000000001,-2,\"x,y\"\n1,3,\"q\"\"q\"\n");
    CHECK_THROWS_AS(t.add_row({1.0}), std::invalid_argument);
    CHECK(t.rows() == 2);
}

TEST_CASE("validate on bm1d")
{
    const auto cfg = parse_config(R"({"model": {"builtin": "bm1d"}})");
    const auto r = run_experiment(cfg, "validate");
    CHECK(r.exit_code == 0);
    CHECK(r.results["ellipticity"]["passed"].get<bool>());
    CHECK(r.results["ellipticity"]["min_quadratic"].get<double>() == doctest::Approx(1.0));
}

TEST_CASE("validate flags a degenerate expression model")
{
    const auto cfg = parse_config(R"({"model": {"dim": 2, "noise_dim": 2, "drift": ["0", "0"],
        "diffusion": [["0", "0"], ["0", "1"]], "level": "y1", "initial_state": [0, 0]}})");
    const auto r = run_experiment(cfg, "validate");
    CHECK(r.exit_code == 1);
    CHECK_FALSE(r.results["ellipticity"]["passed"].get<bool>());
}

TEST_CASE("report with an empty check list echoes the config")
{
    auto cfg = parse_config(R"({"model": {"builtin": "bm1d"}, "replicates": 20, "N": 20})");
    const auto r = run_experiment(cfg, "replicate");
    const auto report = make_report(cfg, r, "2026-01-01T00:00:00Z");
    CHECK(report["config"] == config_to_json(cfg));
    CHECK(r.results["checks"].empty());
    CHECK(report["header"]["generated_at"] == "2026-01-01T00:00:00Z");
    CHECK(report["provenance"]["seed"] == cfg.seed);
    CHECK(r.results["per_replicate"]["p_N"].size() == 20);
    CHECK(r.results["per_replicate"]["J1"].size() == 20);
    REQUIRE(r.tables.size() == 2);
    CHECK(r.tables[0].first == "replicates.csv");
    CHECK(r.tables[0].second.rows() == 20);
    CHECK(r.tables[0].second.columns()[1] == "p_N");
    CHECK(r.tables[0].second.columns()[2] == "J1");
}

TEST_CASE("identical configs give identical reports")
{
    auto cfg = parse_config(R"({"model": {"builtin": "coupled2d"}, "replicates": 6, "N": 20, "workers": 3})");
    const auto a = dump_json(make_report(cfg, run_experiment(cfg, "replicate"), "t"));
    cfg.workers = 1;
    const auto b = make_report(cfg, run_experiment(cfg, "replicate"), "t");
    auto b_cfg = b;
    b_cfg["config"]["workers"] = 3;
    CHECK(dump_json(b_cfg) == a);
}

TEST_CASE("wave on 2-D Brownian motion")
{
    const auto cfg = parse_config(R"({"model": {"builtin": "bm2d"}, "seed": 3, "wave": {"samples": 20}})");
    const auto r = run_experiment(cfg, "wave");
    const auto& wave = r.tables.at(0);
    CHECK(wave.first == "wave.csv");
    CHECK(wave.second.columns() == std::vector<std::string>{"level", "x1", "x2"});
    std::istringstream in(wave.second.str());
    std::string line;
    std::getline(in, line);
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        double level = 0, x1 = 0;
        REQUIRE(std::sscanf(line.c_str(), "%lf,%lf", &level, &x1) == 2);
        CHECK(x1 - level >= 0.0);
        ++rows;
    }
    CHECK(rows > 0);
}

TEST_CASE("outputs land in the requested directory")
{
    const auto dir = scratch_dir("outputs");
    auto cfg = parse_config(R"({"model": {"builtin": "bm1d"}, "N": 10})");
    const auto r = run_experiment(cfg, "run");
    write_outputs(dir.string(), make_report(cfg, r, "t"), r);
    CHECK(fs::exists(dir / "report.json"));
    CHECK(fs::exists(dir / "events.csv"));
    CHECK(fs::exists(dir / "snapshots.csv"));
    const auto events = slurp(dir / "events.csv");
    CHECK(events.find('\r') == std::string::npos);
    CHECK(events.rfind("j,tau,killed,parent,sigma_index\n", 0) == 0);
    CHECK_THROWS(write_outputs("/proc/amswave_cannot_write", make_report(cfg, r, "t"), r));
    fs::remove_all(dir);
}

TEST_CASE("command line end to end")
{
    const auto dir = scratch_dir("cli");
    fs::create_directories(dir);
    const std::string cli = AMSWAVE_CLI;
    const auto cfg_path = (dir / "bad.json").string();
    std::ofstream(cfg_path) << R"({"model": {"builtin": "bm1d"}, "extra": 1})";
    const std::string err = (dir / "err.json").string();
    int status = std::system((cli + " run --config " + cfg_path + " 2> " + err + " > /dev/null").c_str());
    CHECK(status != 0);
    const auto error = nlohmann::json::parse(slurp(err));
    CHECK(error["error"]["type"] == "config");
    CHECK(error["error"]["details"][0] == "$.extra: unknown key");

    const std::string good = std::string(AMSWAVE_CONFIG_DIR) + "/bm1d.json";
    status = std::system((cli + " validate --config " + good + " --out-dir " + (dir / "v").string() +
                          " --seed 5 > /dev/null").c_str());
    CHECK(status == 0);
    const auto report = nlohmann::json::parse(slurp(dir / "v" / "report.json"));
    CHECK(report["config"]["seed"] == 5);
    CHECK(report["header"]["subcommand"] == "validate");
    status = std::system((cli + " frobnicate --config " + good + " 2> /dev/null").c_str());
    CHECK(status != 0);
    fs::remove_all(dir);
}

TEST_CASE("shipped configs parse")
{
    for (const auto& entry : fs::directory_iterator(AMSWAVE_CONFIG_DIR)) {
        CAPTURE(entry.path().string());
        const auto cfg = load_config(entry.path().string());
        CHECK_NOTHROW(build_model(cfg));
    }
}
