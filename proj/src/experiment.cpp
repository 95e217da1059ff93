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

#include "amswave/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>

#include "amswave/ams.hpp"
#include "amswave/analysis.hpp"
#include "amswave/expression.hpp"
#include "amswave/flemingviot.hpp"
#include "amswave/levelset.hpp"
#include "amswave/parallel.hpp"

namespace amswave {

using ojson = nlohmann::ordered_json;

const std::vector<std::string>& subcommands()
{
    static const std::vector<std::string> names{"run", "replicate", "committor", "wave", "variance", "validate"};
    return names;
}

namespace {

bool wants(const ExperimentConfig& cfg, const std::string& check)
{
    return std::find(cfg.checks.begin(), cfg.checks.end(), check) != cfg.checks.end();
}

CensorPolicy policy_of(const ExperimentConfig& cfg)
{
    return cfg.censor_policy == "absorb" ? CensorPolicy::TreatAsAbsorbed : CensorPolicy::Abort;
}

double one(std::span<const double>) { return 1.0; }

std::vector<std::string> coordinate_columns(const char* prefix, std::size_t dim)
{
    std::vector<std::string> cols;
    for (std::size_t i = 1; i <= dim; ++i) cols.push_back(prefix + std::to_string(i));
    return cols;
}

ojson diagnostics_json(const AmsDiagnostics& d)
{
    return {{"steps", d.steps},
            {"ties", d.ties},
            {"tie_rate", d.tie_rate()},
            {"tau_decreases", d.tau_decreases},
            {"tau_repeats", d.tau_repeats},
            {"entrance_violations", d.entrance_violations},
            {"censored", d.censored},
            {"simulated_steps", d.simulated_steps}};
}

ojson check_json(const BoundCheck& c)
{
    return {{"name", c.name}, {"value", c.value}, {"bound", c.bound}, {"margin", c.margin}, {"passed", c.passed}};
}

double mean_level(const DiffusionModel& model, const LevelSnapshot& snap, double* min_level)
{
    double sum = 0.0;
    double lo = std::numeric_limits<double>::infinity();
    for (const Point& x : snap.entrance_states) {
        const double l = model.level(x);
        sum += l;
        lo = std::min(lo, l);
    }
    if (min_level) *min_level = lo;
    return sum / static_cast<double>(snap.entrance_states.size());
}

// ---------------------------------------------------------------------------

ExperimentResult cmd_run(const ExperimentConfig& cfg)
{
    const DiffusionModel model = build_model(cfg);
    const ParticleStreams streams{cfg.seed, 0};
    AmsOptions opts;
    opts.censor_policy = policy_of(cfg);
    const AmsRun run = run_ams(model, cfg.N, cfg.level_grid, streams, opts);

    ExperimentResult out;
    out.subcommand = "run";
    ojson& r = out.results;
    r["N"] = cfg.N;
    r["p_N"] = run.p_N();
    r["J1"] = run.J1();
    r["diagnostics"] = diagnostics_json(run.diagnostics);
    r["final_scores_min"] = *std::min_element(run.final_scores.begin(), run.final_scores.end());

    CsvTable events({"j", "tau", "killed", "parent", "sigma_index"});
    for (const BranchingEvent& e : run.events) {
        events.add_row({static_cast<std::uint64_t>(e.j), e.tau, static_cast<std::uint64_t>(e.killed),
                        static_cast<std::uint64_t>(e.parent), static_cast<std::uint64_t>(e.sigma_index)});
    }
    CsvTable snaps({"t", "J_t", "p_t_N", "eta_level", "min_entrance_level"});
    ojson snap_json = ojson::array();
    for (const LevelSnapshot& s : run.snapshots) {
        double lo = 0.0;
        const double eta = mean_level(model, s, &lo);
        snaps.add_row({s.t, static_cast<std::uint64_t>(s.J_t), s.p_t_N, eta, lo});
        snap_json.push_back({{"t", s.t}, {"J_t", s.J_t}, {"p_t_N", s.p_t_N}, {"eta_level", eta}});
    }
    r["snapshots"] = snap_json;

    // Same streams through the Fleming-Viot driver on the realised branching levels.
    const auto grid = event_grid(run);
    const auto fv = run_fleming_viot(AmsSampler(model, opts.censor_policy), cfg.N, grid, streams);
    bool same_log = fv.log.size() == run.events.size();
    for (std::size_t i = 0; same_log && i < fv.log.size(); ++i) {
        same_log = fv.log[i].level == run.events[i].tau && fv.log[i].killed == run.events[i].killed &&
                   fv.log[i].parent == run.events[i].parent;
    }
    r["fleming_viot"] = {{"grid_levels", grid.size()},
                         {"p_N", fv.final_p()},
                         {"branchings", fv.log.size()},
                         {"identical_to_ams", same_log && fv.final_p() == run.p_N()},
                         {"resurrections", fv.resurrections}};

    out.tables.emplace_back("events.csv", std::move(events));
    out.tables.emplace_back("snapshots.csv", std::move(snaps));
    return out;
}

// ---------------------------------------------------------------------------

struct ReplicateSlot {
    double p = 0.0;
    std::size_t J1 = 0;
    AmsDiagnostics diag;
    std::vector<double> p_t, eta_level;
    std::vector<std::size_t> J_t;
    double eta_S1 = 0.0;
};

ExperimentResult cmd_replicate(const ExperimentConfig& cfg)
{
    const DiffusionModel model = build_model(cfg);
    const std::size_t R = cfg.replicates;
    const bool path_time = wants(cfg, "path_time");
    AmsOptions opts;
    opts.censor_policy = policy_of(cfg);
    opts.keep_final_paths = path_time;
    const double h = model.step;
    const double cap = static_cast<double>(model.max_steps) * h;
    auto entrance_time = [h, cap](const Trajectory& path) {
        return std::min(static_cast<double>(path.steps()) * h, cap);
    };

    std::vector<ReplicateSlot> slots(R);
    parallel_for(R, cfg.workers, [&](std::size_t i) {
        AmsRun run = run_ams(model, cfg.N, cfg.level_grid, ParticleStreams{cfg.seed, i}, opts);
        ReplicateSlot& s = slots[i];
        s.p = run.p_N();
        s.J1 = run.J1();
        s.diag = run.diagnostics;
        for (const LevelSnapshot& snap : run.snapshots) {
            s.p_t.push_back(snap.p_t_N);
            s.J_t.push_back(snap.J_t);
            s.eta_level.push_back(mean_level(model, snap, nullptr));
        }
        if (path_time) s.eta_S1 = path_observable_estimate(run, entrance_time).eta;
    });

    ExperimentResult out;
    out.subcommand = "replicate";
    ojson& r = out.results;
    std::vector<double> p, j1, eta_s1;
    AmsDiagnostics total;
    for (const ReplicateSlot& s : slots) {
        p.push_back(s.p);
        j1.push_back(static_cast<double>(s.J1));
        eta_s1.push_back(s.eta_S1);
        total.steps += s.diag.steps;
        total.ties += s.diag.ties;
        total.tau_decreases += s.diag.tau_decreases;
        total.tau_repeats += s.diag.tau_repeats;
        total.entrance_violations += s.diag.entrance_violations;
        total.censored += s.diag.censored;
        total.simulated_steps += s.diag.simulated_steps;
    }
    const EstimatorReport pr = summarize(p, cfg.N, h);
    const Moments jm = sample_moments(j1);
    r["R"] = R;
    r["N"] = cfg.N;
    r["h"] = h;
    r["p_N"] = {{"mean", pr.mean}, {"variance", pr.variance}, {"std_error", pr.std_error},
                {"skewness", pr.skewness}, {"excess_kurtosis", pr.excess_kurtosis}};
    r["J1"] = {{"mean", jm.mean}, {"variance", jm.variance}, {"std_error", jm.std_error}};
    r["diagnostics"] = diagnostics_json(total);
    std::vector<std::uint64_t> j1_counts;
    for (const ReplicateSlot& s : slots) j1_counts.push_back(s.J1);
    r["per_replicate"] = {{"p_N", p}, {"J1", j1_counts}};

    std::optional<NaiveReport> naive;
    if (wants(cfg, "naive") || path_time) {
        NaiveOptions no;
        no.workers = cfg.workers;
        no.censor_policy = opts.censor_policy;
        if (path_time) no.psi = entrance_time;
        naive = naive_monte_carlo(model, cfg.naive.M, cfg.seed, 0, no);
    }

    ojson p_ref_json;
    double p_ref = pr.mean;
    if (const auto a = analytic_probability(cfg)) {
        p_ref = *a;
        p_ref_json = {{"value", p_ref}, {"source", "analytic"}};
    } else if (naive) {
        p_ref = naive->p;
        p_ref_json = {{"value", p_ref}, {"source", "naive_monte_carlo"}};
    } else {
        p_ref_json = {{"value", p_ref}, {"source", "replicate_mean"}};
    }
    r["p_ref"] = p_ref_json;

    ojson checks = ojson::object();
    std::vector<BoundCheck> verdicts;
    if (naive) {
        const double se = std::sqrt(pr.std_error * pr.std_error + naive->p_std_error * naive->p_std_error);
        BoundCheck c{"ams_vs_naive", std::abs(pr.mean - naive->p), 3.0 * se, 0.0, false};
        c.margin = c.bound - c.value;
        c.passed = c.value <= c.bound;
        verdicts.push_back(c);
        checks["naive"] = {{"M", naive->M},
                           {"p", naive->p},
                           {"std_error", naive->p_std_error},
                           {"indicator_variance", naive->indicator_variance},
                           {"censored", naive->censored},
                           {"agreement", check_json(c)}};
    }
    const bool enough = R >= 100;
    auto skipped = [&](const char* why) { return ojson{{"skipped", why}}; };
    if (wants(cfg, "clt") || wants(cfg, "bounds")) {
        if (!enough) {
            if (wants(cfg, "clt")) checks["clt"] = skipped("needs at least 100 replicates");
            if (wants(cfg, "bounds")) checks["bounds"] = skipped("needs at least 100 replicates");
        } else {
            const CltReport c = clt_diagnostics(p, cfg.N, p_ref);
            if (wants(cfg, "clt")) {
                checks["clt"] = {{"variance_about_mean", c.variance_about_mean},
                                 {"variance_about_ref", c.variance_about_ref},
                                 {"variance_std_error", c.variance_std_error},
                                 {"skewness", c.skewness},
                                 {"excess_kurtosis", c.excess_kurtosis},
                                 {"skew_gate", c.skew_gate},
                                 {"kurt_gate", c.kurt_gate},
                                 {"normal_ok", c.normal_ok}};
                verdicts.push_back({"clt_normality", 0.0, 0.0, 0.0, c.normal_ok});
            }
            if (wants(cfg, "bounds")) {
                checks["bounds"] = {{"lower", c.lower},
                                    {"upper", c.upper},
                                    {"empirical", c.variance_about_mean},
                                    {"allowance", 3.0 * c.variance_std_error},
                                    {"in_bracket", c.in_bracket}};
                verdicts.push_back({"variance_bracket", c.variance_about_mean, c.upper, 0.0, c.in_bracket});
            }
        }
    }
    if (wants(cfg, "j1")) {
        if (!enough) {
            checks["j1"] = skipped("needs at least 100 replicates");
        } else {
            const J1Report j = j1_scaling_check(j1, cfg.N, p_ref);
            checks["j1"] = {{"mean", j.mean},
                            {"expected", j.expected},
                            {"relative_error", j.relative_error},
                            {"dispersion", j.dispersion},
                            {"expected_dispersion", j.expected_dispersion}};
        }
    }
    if (wants(cfg, "l2")) {
        if (!enough) {
            checks["l2"] = skipped("needs at least 100 replicates");
        } else {
            const L2Report l = l2_bound_check(p, p_ref, 1.0, cfg.N);
            checks["l2"] = {{"mse", l.mse},     {"mse_std_error", l.mse_std_error}, {"bound", l.bound},
                            {"N_mse", l.scaled}, {"passed", l.passed}};
            verdicts.push_back({"l2_bound", l.mse, l.bound, l.bound - l.mse, l.passed});
        }
    }
    if (path_time) {
        const Moments em = sample_moments(eta_s1);
        ojson pt = {{"ams_mean", em.mean}, {"ams_std_error", em.std_error}};
        if (naive && naive->path_eta) {
            const double se = std::sqrt(em.std_error * em.std_error + *naive->path_eta_std_error * *naive->path_eta_std_error);
            BoundCheck c{"path_time_agreement", std::abs(em.mean - *naive->path_eta), 3.0 * se, 0.0, false};
            c.margin = c.bound - c.value;
            c.passed = c.value <= c.bound;
            pt["naive_mean"] = *naive->path_eta;
            pt["naive_std_error"] = *naive->path_eta_std_error;
            pt["agreement"] = check_json(c);
            verdicts.push_back(c);
        } else {
            pt["naive_mean"] = nullptr;
        }
        checks["path_time"] = pt;
    }
    r["checks"] = checks;
    const bool all = std::all_of(verdicts.begin(), verdicts.end(), [](const BoundCheck& c) { return c.passed; });
    r["all_checks_passed"] = all;
    out.exit_code = all ? 0 : 1;

    std::vector<std::string> cols{"replicate", "p_N", "J1", "ties", "tau_decreases", "entrance_violations",
                                  "censored", "simulated_steps"};
    if (path_time) cols.push_back("eta_S1");
    CsvTable reps(cols);
    for (std::size_t i = 0; i < R; ++i) {
        const ReplicateSlot& s = slots[i];
        std::vector<CsvTable::Cell> row{static_cast<std::uint64_t>(i),
                                        s.p,
                                        static_cast<std::uint64_t>(s.J1),
                                        static_cast<std::uint64_t>(s.diag.ties),
                                        static_cast<std::uint64_t>(s.diag.tau_decreases),
                                        static_cast<std::uint64_t>(s.diag.entrance_violations),
                                        static_cast<std::uint64_t>(s.diag.censored),
                                        static_cast<std::uint64_t>(s.diag.simulated_steps)};
        if (path_time) row.emplace_back(s.eta_S1);
        reps.add_row(std::move(row));
    }
    CsvTable levels({"t", "mean_J_t", "mean_p_t_N", "std_error_p_t_N", "mean_eta_level"});
    for (std::size_t k = 0; k < cfg.level_grid.size(); ++k) {
        std::vector<double> pk, jk, ek;
        for (const ReplicateSlot& s : slots) {
            pk.push_back(s.p_t[k]);
            jk.push_back(static_cast<double>(s.J_t[k]));
            ek.push_back(s.eta_level[k]);
        }
        const Moments mp = sample_moments(pk);
        levels.add_row({cfg.level_grid[k], sample_moments(jk).mean, mp.mean, mp.std_error, sample_moments(ek).mean});
    }
    out.tables.emplace_back("replicates.csv", std::move(reps));
    out.tables.emplace_back("levels.csv", std::move(levels));
    return out;
}

// ---------------------------------------------------------------------------

ExperimentResult cmd_committor(const ExperimentConfig& cfg)
{
    const DiffusionModel model = build_model(cfg);
    std::vector<Point> probes = cfg.committor.probes;
    if (probes.empty()) {
        for (int k = 0; k < 10; ++k) {
            Point y(model.dim, 0.0);
            y[0] = k / 10.0;
            probes.push_back(y);
        }
    }
    const auto analytic = analytic_probability(cfg);
    std::vector<std::string> cols{"probe", "level"};
    for (auto& c : coordinate_columns("y", model.dim)) cols.push_back(c);
    for (const char* c : {"q", "q_std_error", "semigroup", "semigroup_std_error"}) cols.emplace_back(c);
    if (analytic) cols.emplace_back("analytic");
    CsvTable table(cols);

    ExperimentResult out;
    out.subcommand = "committor";
    ojson list = ojson::array();
    std::size_t worst = 0;
    double worst_z = 0.0;
    for (std::size_t i = 0; i < probes.size(); ++i) {
        const Point& y = probes[i];
        const double lvl = model.level(y);
        if (lvl <= model.absorb_threshold) throw ModelError("committor probe " + std::to_string(i) + " is absorbed");
        const CommittorEstimate q =
            estimate_q(model, y, one, cfg.committor.m, make_stream(cfg.seed, i, Purpose::Committor, 0), cfg.workers);
        const CommittorEstimate s = semigroup_apply(model, y, 1.0 - lvl, one, cfg.committor.m,
                                                    make_stream(cfg.seed, i, Purpose::Semigroup, 0), cfg.workers);
        const double se = std::hypot(q.std_error, s.std_error);
        const double z = se > 0.0 ? std::abs(q.value - s.value) / se : (q.value == s.value ? 0.0 : INFINITY);
        if (z > worst_z) {
            worst_z = z;
            worst = i;
        }
        std::vector<CsvTable::Cell> row{static_cast<std::uint64_t>(i), lvl};
        for (double v : y) row.emplace_back(v);
        row.insert(row.end(), {q.value, q.std_error, s.value, s.std_error});
        ojson e = {{"probe", y}, {"level", lvl}, {"q", q.value}, {"q_std_error", q.std_error},
                   {"semigroup", s.value}, {"semigroup_std_error", s.std_error}, {"censored", q.censored + s.censored}};
        if (analytic) {
            const double a = committor_1d_analytic(cfg.model.params.at("mu"), cfg.model.params.at("sigma"),
                                                   model.absorb_threshold, 1.0, y[0]);
            row.emplace_back(a);
            e["analytic"] = a;
        }
        table.add_row(std::move(row));
        list.push_back(e);
    }
    out.results["m"] = cfg.committor.m;
    out.results["probes"] = list;
    out.results["semigroup_agreement"] = {{"max_z", worst_z}, {"worst_probe", worst}, {"passed", worst_z <= 3.0}};
    out.exit_code = worst_z <= 3.0 ? 0 : 1;
    out.tables.emplace_back("committor.csv", std::move(table));
    return out;
}

// ---------------------------------------------------------------------------

std::pair<Point, Point> validate_box(const ExperimentConfig& cfg, std::size_t dim)
{
    Point lo = cfg.validate.box_lo.empty() ? Point(dim, -2.0) : cfg.validate.box_lo;
    Point hi = cfg.validate.box_hi.empty() ? Point(dim, 2.0) : cfg.validate.box_hi;
    return {lo, hi};
}

std::vector<double> uniform_grid(std::size_t intervals)
{
    std::vector<double> g;
    for (std::size_t k = 0; k <= intervals; ++k) g.push_back(static_cast<double>(k) / static_cast<double>(intervals));
    return g;
}

ExperimentResult cmd_wave(const ExperimentConfig& cfg)
{
    const DiffusionModel model = build_model(cfg);
    const auto [lo, hi] = validate_box(cfg, model.dim);
    const double tol = cfg.wave.jump_tol > 0.0 ? cfg.wave.jump_tol : default_jump_tol(lo, hi);
    const std::vector<double> grid = uniform_grid(cfg.wave.levels);

    Point x0 = cfg.wave.x0;
    if (x0.empty()) {
        RngStream init = make_stream(cfg.seed, 0, Purpose::Wave, 0);
        x0 = model.sample_initial(init);
    }
    RngStream rng = make_stream(cfg.seed, 0, Purpose::Wave, 1);
    const LevelIndexedPath wave = level_indexed_sample(model, x0, grid, rng, tol);

    std::vector<std::string> cols{"level"};
    for (auto& c : coordinate_columns("x", model.dim)) cols.push_back(c);
    CsvTable table(cols);
    double min_overshoot = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (!wave.alive(k)) continue;
        std::vector<CsvTable::Cell> row{grid[k]};
        for (double v : *wave.states[k]) row.emplace_back(v);
        table.add_row(std::move(row));
        min_overshoot = std::min(min_overshoot, model.level(*wave.states[k]) - grid[k]);
    }
    CsvTable jumps({"grid_level", "state_level", "size"});
    for (const WaveJump& j : wave.jumps) jumps.add_row({j.grid_level, j.state_level, j.size});

    // Jump counts of the same paths read on nested grids.
    const std::vector<std::size_t> refinements{std::max<std::size_t>(1, cfg.wave.levels / 4),
                                               std::max<std::size_t>(1, cfg.wave.levels / 2), cfg.wave.levels};
    std::vector<double> mean_jumps(refinements.size(), 0.0);
    std::vector<double> jump_levels;
    std::size_t resurrections = wave.resurrections();
    for (std::size_t s = 0; s < cfg.wave.samples; ++s) {
        RngStream init = make_stream(cfg.seed, s, Purpose::Wave, 2);
        const Point xs = model.sample_initial(init);
        for (std::size_t r = 0; r < refinements.size(); ++r) {
            RngStream path_rng = make_stream(cfg.seed, s, Purpose::Wave, 3);
            const LevelIndexedPath w = level_indexed_sample(model, xs, uniform_grid(refinements[r]), path_rng, tol);
            mean_jumps[r] += static_cast<double>(w.jumps.size());
            resurrections += w.resurrections();
            if (r + 1 == refinements.size()) {
                for (const WaveJump& j : w.jumps) jump_levels.push_back(j.state_level);
            }
        }
    }
    for (double& m : mean_jumps) m /= static_cast<double>(cfg.wave.samples);
    bool monotone = true;
    for (std::size_t r = 1; r < mean_jumps.size(); ++r) monotone = monotone && mean_jumps[r] >= mean_jumps[r - 1];
    std::sort(jump_levels.begin(), jump_levels.end());
    const std::size_t distinct =
        static_cast<std::size_t>(std::unique(jump_levels.begin(), jump_levels.end()) - jump_levels.begin());

    ExperimentResult out;
    out.subcommand = "wave";
    ojson& r = out.results;
    r["x0"] = x0;
    r["levels"] = cfg.wave.levels;
    r["jump_tol"] = tol;
    r["death_level"] = wave.death_level ? ojson(*wave.death_level) : ojson(nullptr);
    r["alive_rows"] = table.rows();
    r["jumps"] = wave.jumps.size();
    r["min_overshoot"] = table.rows() ? min_overshoot : 0.0;
    r["path_steps"] = wave.path_steps;
    r["refinement"] = {{"levels", refinements},
                       {"mean_jumps", mean_jumps},
                       {"monotone", monotone},
                       {"samples", cfg.wave.samples},
                       {"jump_levels", jump_levels.size()},
                       {"distinct_jump_levels", distinct}};
    r["resurrections"] = resurrections;
    out.tables.emplace_back("wave.csv", std::move(table));
    out.tables.emplace_back("jumps.csv", std::move(jumps));
    return out;
}

// ---------------------------------------------------------------------------

ExperimentResult cmd_variance(const ExperimentConfig& cfg)
{
    const DiffusionModel model = build_model(cfg);
    const Expression obs = Expression::parse(cfg.variance.observable, model.dim);
    const StateFunction phi = [obs](std::span<const double> y) { return obs(y); };
    const QuadratureBudgets budgets{cfg.variance.M_p, cfg.variance.M_q, cfg.variance.cloud_cap};
    const VarianceDecomposition d =
        variance_formula_quadrature(model, phi, uniform_grid(cfg.variance.K), budgets, cfg.seed, cfg.workers);

    ExperimentResult out;
    out.subcommand = "variance";
    ojson& r = out.results;
    auto decomp_json = [](const VarianceDecomposition& v) {
        return ojson{{"nodes", v.nodes.size()},
                     {"term_V_eta1", v.term_V_eta1},
                     {"term_log", v.term_log},
                     {"term_integral", v.term_integral},
                     {"total", v.total},
                     {"unit_total", v.unit_total}};
    };
    r["observable"] = cfg.variance.observable;
    r["p1"] = d.p1;
    r["eta1_phi"] = d.eta1_phi;
    r["V_eta1_phi"] = d.V_eta1_phi;
    r["decomposition"] = decomp_json(d);
    if (cfg.variance.K % 2 == 0) {
        const VarianceDecomposition c = coarsen(d, 2);
        r["coarse"] = decomp_json(c);
        r["node_doubling_change"] = c.total != 0.0 ? std::abs(d.total - c.total) / std::abs(c.total) : 0.0;
    }
    if (d.p1 > 0.0 && d.p1 < 1.0) {
        const auto [lower, upper] = variance_bounds(d.p1);
        r["bounds"] = {{"lower", lower}, {"upper", upper}, {"unit_total", d.unit_total}};
    }
    if (d.p1 > 0.0) {
        const EtaVarianceReport e = eta_variance_formula(d);
        r["eta_variance"] = {{"value", e.value},          {"lower", e.lower},
                             {"upper", e.upper},          {"inside", e.inside},
                             {"centering_max_z", e.centering_max_z}, {"centering_ok", e.centering_ok}};
    }
    bool bernoulli = true;
    for (const QuadratureNode& n : d.nodes) bernoulli = bernoulli && n.bernoulli_ok;
    r["bernoulli_audit_passed"] = bernoulli;

    CsvTable nodes({"t", "p_hat", "survivors", "cloud", "V_q", "V_q_raw", "inner_noise", "V_q_centered",
                    "eta_q_centered", "eta_q_centered_se", "V_q_one", "eta_q_one", "bernoulli_bound"});
    for (const QuadratureNode& n : d.nodes) {
        nodes.add_row({n.t, n.p_hat, static_cast<std::uint64_t>(n.survivors), static_cast<std::uint64_t>(n.cloud),
                       n.V_q, n.V_q_raw, n.inner_noise, n.V_q_centered, n.eta_q_centered, n.eta_q_centered_se,
                       n.V_q_one, n.eta_q_one, n.bernoulli_bound});
    }
    out.tables.emplace_back("variance_nodes.csv", std::move(nodes));
    return out;
}

// ---------------------------------------------------------------------------

ExperimentResult cmd_validate(const ExperimentConfig& cfg)
{
    const DiffusionModel model = build_model(cfg);
    const auto [lo, hi] = validate_box(cfg, model.dim);
    const std::vector<Point> probes = slab_probe_grid(model, lo, hi, cfg.validate.per_axis);
    const EllipticityReport e = check_ellipticity(model, probes, cfg.validate.delta_min);

    ExperimentResult out;
    out.subcommand = "validate";
    ojson& r = out.results;
    r["schema"] = "ok";
    r["model"] = {{"name", model.name}, {"dim", model.dim}, {"noise_dim", model.noise_dim}};
    r["box_lo"] = lo;
    r["box_hi"] = hi;
    r["ellipticity"] = {{"probes", e.probes},
                        {"delta_min", e.delta_min},
                        {"min_quadratic", e.min_quadratic},
                        {"argmin", e.argmin},
                        {"max_drift_norm", e.max_drift_norm},
                        {"max_diffusion_norm", e.max_diffusion_norm},
                        {"max_level_hessian", e.max_level_hessian},
                        {"max_gradient_mismatch", e.max_gradient_mismatch},
                        {"passed", e.passed}};
    out.exit_code = e.passed ? 0 : 1;
    return out;
}

} // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::string& subcommand)
{
    if (subcommand == "run") return cmd_run(cfg);
    if (subcommand == "replicate") return cmd_replicate(cfg);
    if (subcommand == "committor") return cmd_committor(cfg);
    if (subcommand == "wave") return cmd_wave(cfg);
    if (subcommand == "variance") return cmd_variance(cfg);
    if (subcommand == "validate") return cmd_validate(cfg);
    throw std::invalid_argument("unknown subcommand '" + subcommand + "'");
}

ojson make_report(const ExperimentConfig& cfg, const ExperimentResult& result, const std::string& generated_at)
{
    ojson report = ojson::object();
    report["header"] = {{"tool", "amswave"},
                        {"version", tool_version},
                        {"subcommand", result.subcommand},
                        {"generated_at", generated_at}};
    report["config"] = config_to_json(cfg);
    report["provenance"] = {{"seed", cfg.seed},
                            {"rng", "philox4x32-10"},
                            {"streams", "(seed, replicate, purpose, index)"},
                            {"compiler", __VERSION__},
                            {"cxx_standard", static_cast<std::int64_t>(__cplusplus)}};
    report["results"] = result.results;
    ojson tables = ojson::array();
    for (const auto& [name, table] : result.tables) {
        tables.push_back({{"file", name}, {"columns", table.columns()}, {"rows", table.rows()}});
    }
    report["tables"] = tables;
    return report;
}

void write_outputs(const std::string& dir, const ojson& report, const ExperimentResult& result)
{
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory '" + dir + "': " + ec.message());
    auto write = [&](const std::string& name, const std::string& text) {
        const fs::path p = fs::path(dir) / name;
        std::ofstream out(p, std::ios::binary);
        out << text;
        if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
    };
    write("report.json", dump_json(report));
    for (const auto& [name, table] : result.tables) write(name, table.str());
}

std::string utc_timestamp()
{
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

ojson error_object(const std::string& type, const std::string& message, const std::vector<std::string>& details)
{
    ojson e = {{"type", type}, {"message", message}};
    if (!details.empty()) e["details"] = details;
    return {{"error", e}};
}

} // namespace amswave
