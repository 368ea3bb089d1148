// Copyright (C) 2026 The dtbeam Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dtbeam::cli
{

inline constexpr int exit_ok = 0;
inline constexpr int exit_usage = 1; // bad flags or inconsistent configuration
inline constexpr int exit_data = 2;  // missing, malformed or unusable input data

inline constexpr const char* data_dir_env = "DTBEAM_DATA_DIR";

enum class Verbosity
{
    Quiet,
    Normal,
    Verbose
};

// Parsed command line. Empty strings mean "not given".
struct CliConfig
{
    std::string subcommand;
    std::string config; // consumed before parsing

    // inputs
    std::string spec;
    std::string dataset; // manifest path or dataset directory
    std::string scene;
    std::string pairs;
    std::string mapping;
    std::string mapping_dir;
    std::string reflectance;
    std::string sample;
    std::string split; // empty: subcommand default

    // outputs; "-" writes to standard output where supported
    std::string out;
    std::string out_dir;
    std::string diagnostics;
    std::string report;
    std::string losses_csv;
    std::string pairs_out;

    // numeric overrides
    std::size_t k = 16;
    std::optional<double> wavelength;
    std::optional<double> alpha_hw;
    double lr = 1e-3;
    std::size_t batch = 256;
    std::size_t epochs = 200;
    std::optional<std::uint64_t> seed;

    std::string method = "dt";
    std::string db_convention = "20log10";
    std::string init = "identity";
    std::string normalization = "peak";
    std::string format; // mapping: binary|csv, report: csv|json
    bool global = false;
    bool closed_form = false;
    bool no_early_stop = false;
    std::vector<std::size_t> l1_k{1, 2};
    std::vector<std::size_t> l2_k{1, 2, 3};
    std::size_t dba_k_max = 3;
    int dba_delta = 5;

    Verbosity verbosity = Verbosity::Normal;

    // Throws ConfigError on inconsistent flags.
    void validate() const;
};

// Parses args (without the program name), runs the subcommand and returns
// the exit code. Results go to out, JSON-line logs and usage text to err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

} // namespace dtbeam::cli
