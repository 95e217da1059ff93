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

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "amswave/config.hpp"
#include "amswave/report.hpp"

namespace amswave {

inline constexpr const char* tool_version = "1.0.0";

/// run, replicate, committor, wave, variance, validate.
const std::vector<std::string>& subcommands();

struct ExperimentResult {
    std::string subcommand;
    nlohmann::ordered_json results = nlohmann::ordered_json::object();
    std::vector<std::pair<std::string, CsvTable>> tables;  // file name, table
    int exit_code = 0;  // 1 when a requested check fails
};

/// Runs one subcommand. Randomness comes only from cfg.seed.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::string& subcommand);

/// Structured report: header (the only time-dependent field is
/// header.generated_at), config echo, provenance, results, table list.
nlohmann::ordered_json make_report(const ExperimentConfig& cfg, const ExperimentResult& result,
                                   const std::string& generated_at);

/// Writes report.json and the tables into `dir` (created if needed).
/// Throws std::runtime_error when a file cannot be written.
void write_outputs(const std::string& dir, const nlohmann::ordered_json& report, const ExperimentResult& result);

/// Current UTC time, ISO 8601 with a trailing Z.
std::string utc_timestamp();

/// Machine-readable error object for the command line.
nlohmann::ordered_json error_object(const std::string& type, const std::string& message,
                                    const std::vector<std::string>& details = {});

} // namespace amswave
