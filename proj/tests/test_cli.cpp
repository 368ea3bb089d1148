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

#include <catch_amalgamated.hpp>

#include "cli.hpp"

#include "dtbeam/dtbeam.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

using namespace dtbeam;
namespace fs = std::filesystem;
using nlohmann::json;

namespace
{

struct CliResult
{
    int code = -1;
    std::string out;
    std::string err;
};

CliResult run_cli(const std::vector<std::string>& args)
{
    std::ostringstream out;
    std::ostringstream err;
    CliResult r;
    r.code = cli::run(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

fs::path scratch(const std::string& name)
{
    const char* env = std::getenv("DTBEAM_TEST_TMP");
    const fs::path root = env ? fs::path(env) : fs::temp_directory_path() / "dtbeam_test_cli";
    const auto dir = root / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& p, const std::string& text)
{
    std::ofstream out(p, std::ios::binary);
    out << text;
}

std::vector<json> log_lines(const std::string& err)
{
    std::vector<json> out;
    std::istringstream in(err);
    std::string line;
    while (std::getline(in, line))
        if (!line.empty() && line.front() == '{')
            out.push_back(json::parse(line));
    return out;
}

json los_spec(std::size_t n_samples, std::uint64_t seed)
{
    return json{{"calibration_fraction", 0.0},
                {"georef", {{"origin_lat", 33.42}, {"origin_lon", -111.93}, {"camera_yaw_deg", 25.0}}},
                {"scenarios",
                 json::array({{{"id", "los"}, {"n_samples", n_samples}, {"seed", seed}, {"n_reflectors", 0}}})}};
}

json mixed_spec()
{
    json scenarios = json::array();
    const char* ids[] = {"31", "32", "33", "34"};
    for (int i = 0; i < 4; ++i)
        scenarios.push_back({{"id", ids[i]}, {"seen", i != 0}, {"n_samples", 12}, {"seed", 100 + i}, {"n_reflectors", 3}});
    return json{{"calibration_fraction", 0.5}, {"distortion", {{"random_seed", 3}}}, {"scenarios", scenarios}};
}

fs::path write_spec(const fs::path& dir, const json& spec)
{
    const auto p = dir / "spec.json";
    spit(p, spec.dump(2));
    return p;
}

std::vector<std::string> data_lines(const std::string& text)
{
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line))
        if (!line.empty() && line.front() != '#')
            out.push_back(line);
    return out;
}

std::size_t count_fields(const std::string& line) { return static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1; }

std::map<std::string, std::string> files_under(const fs::path& dir)
{
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file())
            out[fs::relative(e.path(), dir).string()] = slurp(e.path());
    return out;
}

} // namespace

TEST_CASE("noiseless LoS pipeline: synth, simulate, evaluate", "[cli]")
{
    const auto dir = scratch("pipeline");
    const auto spec = write_spec(dir, los_spec(60, 5));
    const auto data = (dir / "data").string();

    REQUIRE(run_cli({"synth", "--spec", spec.string(), "--out-dir", data}).code == 0);
    REQUIRE(fs::exists(dir / "data" / "manifest.json"));

    const auto sim = run_cli({"simulate", "--dataset", data, "--out", (dir / "sim.csv").string()});
    REQUIRE(sim.code == 0);
    const auto rows = data_lines(slurp(dir / "sim.csv"));
    REQUIRE(rows.size() == 60);
    for (const auto& r : rows)
        CHECK(count_fields(r) == 180);
    const auto diag = json::parse(slurp(dir / "sim.diagnostics.json"));
    CHECK(diag.at("profiles").size() == 60);
    CHECK(diag.at("profiles").at(0).at("id") == "los_00000");

    const auto report = (dir / "dt.json").string();
    const auto losses = (dir / "losses.csv").string();
    const auto ev = run_cli({"evaluate", "--dataset", data, "--method", "dt", "--split", "all", "--report", report,
                             "--losses-csv", losses});
    REQUIRE(ev.code == 0);
    const auto j = json::parse(slurp(report));
    CHECK(j.at("sample_count") == 60);
    CHECK(j.at("method") == "dt");
    CHECK(j.at("power_loss_db").at("top1").at("aggregate").get<double>() <= 1e-9);
    CHECK(j.at("power_loss_db").at("top1").at("p95").get<double>() <= 1e-9);
    CHECK(j.at("dba").at("overall").get<double>() == 1.0);
    // The L1 decision uses the L1 gains over the profile while the truth
    // goes through the L2 winner, so samples close to an L1 boundary can
    // land on the neighbouring L1 beam. Top-2 always contains the truth.
    CHECK(j.at("l1_accuracy").at("top2").get<double>() == 1.0);
    CHECK(j.at("l1_accuracy").at("top1").get<double>() >= 0.9);
    CHECK(data_lines(slurp(losses)).size() == 1 + 3 * 60);

    // Same decisions through the library: every top-1 miss is an adjacent beam.
    const auto d = load_dataset(fs::path(data) / "manifest.json");
    const auto l1 = load_dataset_l1_codebook(d);
    const auto l2 = load_dataset_l2_codebook(d);
    EvalOptions opt;
    opt.split = std::nullopt;
    const auto rep = evaluate_dataset(d, l1, l2, opt);
    for (std::size_t n = 0; n < rep.predictions.size(); ++n)
    {
        const int pred = rep.predictions[n].predicted_l1.front();
        const int truth = rep.truths[n].best_l1;
        CHECK(std::abs(pred - truth) <= 1);
        CHECK(rep.predictions[n].predicted_l2.front() == rep.truths[n].best_l2);
    }
}

TEST_CASE("evaluate with a missing dataset exits 2 with a structured error", "[cli]")
{
    const auto dir = scratch("missing");
    const auto r = run_cli({"evaluate", "--dataset", (dir / "nope" / "manifest.json").string(), "--method", "dt"});
    CHECK(r.code == 2);
    const auto lines = log_lines(r.err);
    REQUIRE(!lines.empty());
    const auto& last = lines.back();
    CHECK(last.at("level") == "error");
    CHECK(last.at("error") == "NotFoundError");
    CHECK(last.at("command") == "evaluate");
    CHECK(last.contains("ts"));
}

TEST_CASE("usage errors exit 1", "[cli]")
{
    SECTION("unknown flag prints usage")
    {
        const auto r = run_cli({"evaluate", "--dataset", "x", "--bogus"});
        CHECK(r.code == 1);
        CHECK(r.err.find("--method") != std::string::npos);
        CHECK(log_lines(r.err).front().at("error") == "UsageError");
    }
    SECTION("unknown subcommand")
    {
        CHECK(run_cli({"frobnicate"}).code == 1);
    }
    SECTION("no subcommand")
    {
        CHECK(run_cli({}).code == 1);
    }
    SECTION("bad enum value")
    {
        CHECK(run_cli({"evaluate", "--dataset", "x", "--method", "oracle"}).code == 1);
    }
    SECTION("inconsistent flags are rejected before any work")
    {
        const auto dir = scratch("usage");
        CHECK(run_cli({"evaluate", "--dataset", "x", "--method", "dt-adapt"}).code == 1);
        CHECK(run_cli({"evaluate", "--dataset", "x", "--method", "dt", "--mapping", "m.bin"}).code == 1);
        CHECK(run_cli({"adapt", "--dataset", "x"}).code == 1);
        CHECK(run_cli({"adapt", "--dataset", "x", "--global", "--out-dir", dir.string()}).code == 1);
        CHECK(run_cli({"adapt", "--pairs", "p.csv", "--out", "m.bin", "--lr", "-1"}).code == 1);
        CHECK(run_cli({"reconstruct", "--dataset", "x", "--k", "0", "--out", "-"}).code == 1);
        CHECK(run_cli({"simulate", "--out", "-"}).code == 1);
        CHECK(fs::is_empty(dir));
    }
    SECTION("help exits 0")
    {
        const auto r = run_cli({"--help"});
        CHECK(r.code == 0);
        CHECK(r.out.find("synth") != std::string::npos);
    }
}

TEST_CASE("reconstruct on a one-sample dataset emits one 180-value line", "[cli]")
{
    const auto dir = scratch("reconstruct");
    const auto spec = write_spec(dir, los_spec(1, 9));
    const auto data = (dir / "data").string();
    REQUIRE(run_cli({"synth", "--spec", spec.string(), "--out-dir", data}).code == 0);

    const auto r = run_cli({"reconstruct", "--dataset", data, "--k", "16", "--out", "-"});
    REQUIRE(r.code == 0);
    const auto lines = data_lines(r.out);
    REQUIRE(lines.size() == 1);
    CHECK(count_fields(lines[0]) == 180);

    // Same numbers as the library call.
    const auto d = load_dataset(fs::path(data) / "manifest.json");
    const auto expected = reconstruct_profile(d.samples.front().measurements, load_dataset_l2_codebook(d), 16);
    std::istringstream in(r.out);
    const auto parsed = parse_profiles(in);
    REQUIRE(parsed.size() == 1);
    CHECK(parsed.front().vector() == expected.vector());

    CHECK(run_cli({"reconstruct", "--dataset", data, "--k", "65", "--out", "-"}).code == 1);
}

TEST_CASE("simulate a single scene with a diagnostics sidecar", "[cli]")
{
    const auto dir = scratch("simulate");
    Scene s;
    s.ue_position = {0.0, 0.0, 10.0};
    s.reflectors.push_back({"car", {-3.0, 0.0, -4.0}, "car", 0.9}); // behind the camera
    s.reflectors.push_back({"wall", {4.0, 0.0, 8.0}, "building", 0.5});
    save_scene(s, dir / "scene.json");

    const auto out = dir / "profile.csv";
    const auto r = run_cli({"simulate", "--scene", (dir / "scene.json").string(), "--wavelength", "0.005", "--alpha-hw",
                            "10", "--out", out.string()});
    REQUIRE(r.code == 0);
    const auto rows = data_lines(slurp(out));
    REQUIRE(rows.size() == 1);
    std::istringstream in(slurp(out));
    const auto got = parse_profiles(in).front();
    const auto table = ReflectanceTable::standard();
    SimConfig cfg;
    const auto want = simulate_profile(load_scene(dir / "scene.json", table), cfg);
    CHECK(got.vector() == want.vector());

    const auto diag = json::parse(slurp(dir / "profile.diagnostics.json"));
    CHECK(diag.at("wavelength_m") == 0.005);
    const auto& p = diag.at("profiles").at(0);
    CHECK(p.at("dropped_out_of_grid") == json::array({"car"}));
    CHECK(p.at("clamp_mass").get<double>() > 0.0);
    CHECK(diag.at("clamp_mass").get<double>() == p.at("clamp_mass").get<double>());

    SECTION("bad scene is a data error")
    {
        spit(dir / "broken.json", "{\"format_version\": 1}");
        CHECK(run_cli({"simulate", "--scene", (dir / "broken.json").string(), "--out", "-"}).code == 2);
    }
}

TEST_CASE("adapt per scenario, then evaluate dt-adapt and report", "[cli]")
{
    const auto dir = scratch("adapt");
    const auto spec = write_spec(dir, mixed_spec());
    const auto data = (dir / "data").string();
    REQUIRE(run_cli({"synth", "--spec", spec.string(), "--out-dir", data}).code == 0);

    const auto maps = (dir / "maps").string();
    const auto a = run_cli({"adapt", "--dataset", data, "--out-dir", maps, "--lr", "0.01", "--epochs", "50", "--seed", "4"});
    REQUIRE(a.code == 0);
    for (const char* id : {"31", "32", "33", "34"})
    {
        const auto m = load_mapping(fs::path(maps) / (std::string("mapping_") + id + ".bin"));
        CHECK(m.size() == 180);
        CHECK(m.trained_on.scenario == id);
        CHECK(m.trained_on.sample_count == 6);
        CHECK(m.trained_on.seed == 4);
        CHECK(m.trained_on.normalization == "peak");
    }

    const auto ev = run_cli({"evaluate", "--dataset", data, "--method", "dt-adapt", "--mapping-dir", maps, "--report", "-"});
    REQUIRE(ev.code == 0);
    const auto j = json::parse(ev.out);
    CHECK(j.at("method") == "dt-adapt");
    CHECK(j.at("split") == "test");
    CHECK(j.at("sample_count") == 24);
    CHECK(j.at("dba").at("overall_weighting") == "unseen-1/2-seen-1/6");

    SECTION("global mapping with pairs written out, then retrained from the pairs file")
    {
        const auto global = (dir / "global.csv").string();
        const auto pairs = (dir / "pairs.csv").string();
        REQUIRE(run_cli({"adapt", "--dataset", data, "--global", "--closed-form", "--out", global, "--pairs-out", pairs})
                    .code == 0);
        const auto m = load_mapping(global);
        CHECK(m.trained_on.method == "closed_form");
        CHECK(m.trained_on.sample_count == 24);
        CHECK(load_pairs(pairs).size() == 24);

        const auto again = (dir / "again.csv").string();
        REQUIRE(run_cli({"adapt", "--pairs", pairs, "--closed-form", "--out", again}).code == 0);
        CHECK((load_mapping(again).matrix - m.matrix).cwiseAbs().maxCoeff() <= 1e-12);

        CHECK(run_cli({"evaluate", "--dataset", data, "--method", "dt-adapt", "--mapping", global}).code == 0);
    }

    SECTION("report overlay CSV")
    {
        const auto r = run_cli({"report", "--dataset", data, "--sample", "32_00007", "--mapping-dir", maps, "--out", "-"});
        REQUIRE(r.code == 0);
        const auto lines = data_lines(r.out);
        REQUIRE(lines.size() == 181);
        CHECK(lines[0] == "angle_deg,measured,dt,dt_adapt,end_to_end");
        CHECK(lines[1].rfind("-90,", 0) == 0);
        CHECK(lines[180].rfind("89,", 0) == 0);
        double peak_measured = 0.0;
        for (std::size_t i = 1; i < lines.size(); ++i)
        {
            CHECK(count_fields(lines[i]) == 5);
            CHECK(lines[i].back() == ','); // end-to-end slot stays empty
            peak_measured = std::max(peak_measured, std::stod(lines[i].substr(lines[i].find(',') + 1)));
        }
        CHECK(peak_measured == 1.0);
    }

    SECTION("report JSON without a mapping leaves the adapted slot null")
    {
        const auto r = run_cli({"report", "--dataset", data, "--format", "json", "--out", "-"});
        REQUIRE(r.code == 0);
        const auto j2 = json::parse(r.out);
        CHECK(j2.at("sample_id") == "31_00000");
        CHECK(j2.at("angle_deg").size() == 180);
        CHECK(j2.at("dt_adapt").is_null());
        CHECK(j2.at("end_to_end").is_null());
        CHECK(run_cli({"report", "--dataset", data, "--sample", "99_00000", "--out", "-"}).code == 2);
    }

    SECTION("a missing per-scenario mapping is a data error")
    {
        fs::remove(fs::path(maps) / "mapping_33.bin");
        CHECK(run_cli({"evaluate", "--dataset", data, "--method", "dt-adapt", "--mapping-dir", maps}).code == 2);
    }
}

TEST_CASE("config file and data directory defaults", "[cli]")
{
    const auto dir = scratch("config");
    const auto spec = write_spec(dir, los_spec(10, 2));
    const auto data = (dir / "data").string();
    REQUIRE(run_cli({"synth", "--spec", spec.string(), "--out-dir", data}).code == 0);

    spit(dir / "cfg.json", json{{"dataset", data},
                                {"k", 8},
                                {"evaluate", {{"method", "gps-los"}, {"split", "all"}, {"l2_k", json::array({1, 5})}}}}
                               .dump());
    const auto cfg = (dir / "cfg.json").string();

    const auto r = run_cli({"evaluate", "--config", cfg, "--report", "-"});
    REQUIRE(r.code == 0);
    auto j = json::parse(r.out);
    CHECK(j.at("method") == "gps-los");
    CHECK(j.at("sample_count") == 10);
    CHECK(j.at("power_loss_db").contains("top5"));

    // Command-line flags win over the file.
    const auto r2 = run_cli({"evaluate", "--config", cfg, "--method", "dt", "--report", "-"});
    REQUIRE(r2.code == 0);
    CHECK(json::parse(r2.out).at("method") == "dt");

    // Top-level keys reach every subcommand that has the option.
    const auto r3 = run_cli({"reconstruct", "--config", cfg, "--out", "-"});
    REQUIRE(r3.code == 0);
    CHECK(data_lines(r3.out).size() == 10);

    SECTION("section keys must exist")
    {
        spit(dir / "bad.json", json{{"evaluate", {{"metod", "dt"}}}}.dump());
        CHECK(run_cli({"evaluate", "--config", (dir / "bad.json").string(), "--dataset", data}).code == 1);
        CHECK(run_cli({"evaluate", "--config", (dir / "missing.json").string(), "--dataset", data}).code == 1);
    }

    SECTION("data directory from the environment")
    {
        ::setenv(cli::data_dir_env, data.c_str(), 1);
        const auto r4 = run_cli({"evaluate", "--split", "all", "--report", "-"});
        ::unsetenv(cli::data_dir_env);
        REQUIRE(r4.code == 0);
        CHECK(json::parse(r4.out).at("sample_count") == 10);
    }
}

TEST_CASE("pipeline reruns are byte-identical", "[cli]")
{
    const auto dir = scratch("determinism");
    const auto spec = write_spec(dir, mixed_spec());
    std::vector<std::map<std::string, std::string>> runs;
    for (int rep = 0; rep < 2; ++rep)
    {
        const auto root = dir / ("run" + std::to_string(rep));
        const auto data = (root / "data").string();
        REQUIRE(run_cli({"-q", "synth", "--spec", spec.string(), "--out-dir", data}).code == 0);
        REQUIRE(run_cli({"-q", "simulate", "--dataset", data, "--out", (root / "out" / "sim.csv").string()}).code == 0);
        REQUIRE(run_cli({"-q", "reconstruct", "--dataset", data, "--out", (root / "out" / "rec.csv").string()}).code == 0);
        REQUIRE(run_cli({"-q", "adapt", "--dataset", data, "--out-dir", (root / "out" / "maps").string(), "--epochs",
                         "20", "--lr", "0.05", "--seed", "11"})
                    .code == 0);
        REQUIRE(run_cli({"-q", "evaluate", "--dataset", data, "--method", "dt-adapt", "--mapping-dir",
                         (root / "out" / "maps").string(), "--report", (root / "out" / "report.json").string(),
                         "--losses-csv", (root / "out" / "losses.csv").string()})
                    .code == 0);
        REQUIRE(run_cli({"-q", "report", "--dataset", data, "--mapping-dir", (root / "out" / "maps").string(), "--out",
                         (root / "out" / "fig.csv").string()})
                    .code == 0);
        runs.push_back(files_under(root));
    }
    REQUIRE(runs[0].size() == runs[1].size());
    CHECK(runs[0].size() > 50);
    for (const auto& [name, bytes] : runs[0])
    {
        INFO(name);
        REQUIRE(runs[1].count(name) == 1);
        CHECK(runs[1].at(name) == bytes);
    }
    // No temp files left behind by the atomic writes.
    for (const auto& [name, _] : runs[0])
        CHECK(name.find(".tmp") == std::string::npos);
}

TEST_CASE("synth seed override changes the data deterministically", "[cli]")
{
    const auto dir = scratch("seed");
    const auto spec = write_spec(dir, los_spec(5, 1));
    for (const char* out : {"a", "b", "c"})
    {
        const std::string seed = std::string(out) == "c" ? "8" : "7";
        REQUIRE(run_cli({"-q", "synth", "--spec", spec.string(), "--out-dir", (dir / out).string(), "--seed", seed}).code ==
                0);
    }
    CHECK(slurp(dir / "a" / "samples.csv") == slurp(dir / "b" / "samples.csv"));
    CHECK(slurp(dir / "a" / "samples.csv") != slurp(dir / "c" / "samples.csv"));
}
