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

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "amswave/process.hpp"

namespace amswave {

/// Schema violations, one entry per problem, each prefixed by its field path.
class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(std::vector<std::string> errors);
    const std::vector<std::string>& errors() const { return errors_; }

  private:
    std::vector<std::string> errors_;
};

/// Either a built-in catalog entry with parameters or an expression model.
struct ModelSpec {
    std::string builtin;  // empty for expression models
    std::map<std::string, double> params;

    std::size_t dim = 0;
    std::size_t noise_dim = 0;
    std::vector<std::string> drift;                   // dim entries
    std::vector<std::vector<std::string>> diffusion;  // dim rows of noise_dim entries
    std::string level;
    Point initial_state;
    Point initial_std;  // per coordinate; empty means a fixed start
    double absorb_threshold = -1.0;

    friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

struct CommittorSection {
    std::vector<Point> probes;  // empty: ten points along the level axis
    std::size_t m = 10'000;
    friend bool operator==(const CommittorSection&, const CommittorSection&) = default;
};

struct WaveSection {
    std::size_t levels = 1000;  // grid has levels + 1 points on [0, 1]
    Point x0;                   // empty: drawn from the initial law
    double jump_tol = 0.0;      // 0: 1e-3 times the validate box diagonal
    std::size_t samples = 200;  // waves used for the refinement statistics
    friend bool operator==(const WaveSection&, const WaveSection&) = default;
};

struct VarianceSection {
    std::size_t K = 20;
    std::size_t M_p = 10'000;
    std::size_t M_q = 1'000;
    std::size_t cloud_cap = 100;
    std::string observable = "1";
    friend bool operator==(const VarianceSection&, const VarianceSection&) = default;
};

struct ValidateSection {
    Point box_lo;  // empty: -2 on every axis
    Point box_hi;  // empty: +2 on every axis
    std::size_t per_axis = 100;
    double delta_min = 1e-3;
    friend bool operator==(const ValidateSection&, const ValidateSection&) = default;
};

struct NaiveSection {
    std::size_t M = 100'000;
    friend bool operator==(const NaiveSection&, const NaiveSection&) = default;
};

struct ExperimentConfig {
    ModelSpec model;
    std::size_t N = 100;
    double h = 1e-3;
    std::size_t max_steps = 1'000'000;
    std::vector<double> level_grid{0.0, 0.25, 0.5, 0.75, 1.0};
    std::size_t replicates = 100;
    std::uint64_t seed = 20261015;
    std::size_t workers = 1;
    std::string out_dir = "out";
    std::string censor_policy = "abort";  // or "absorb"
    std::vector<std::string> checks;      // naive, bounds, clt, j1, l2, path_time
    CommittorSection committor;
    WaveSection wave;
    VarianceSection variance;
    ValidateSection validate;
    NaiveSection naive;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Names accepted in `checks`.
const std::vector<std::string>& known_checks();

/// Built-in catalog names and their parameter defaults.
const std::map<std::string, std::map<std::string, double>>& builtin_catalog();

/// Parses and validates JSON text. Throws ConfigError listing every problem.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Full config with defaults filled in; parse_config(dump) gives it back.
nlohmann::ordered_json config_to_json(const ExperimentConfig& cfg);

/// Builds the model (validated, finite at the origin). Throws ConfigError.
DiffusionModel build_model(const ExperimentConfig& cfg);

/// Analytic p for the bm1d catalog entry, if the config is one.
std::optional<double> analytic_probability(const ExperimentConfig& cfg);

} // namespace amswave
