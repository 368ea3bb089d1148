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

#include "cli.hpp"

#include "dtbeam/dtbeam.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

namespace dtbeam::cli
{

namespace fs = std::filesystem;
using nlohmann::json;

namespace
{

const std::vector<std::string> subcommands = {"synth", "reconstruct", "simulate", "adapt", "evaluate", "report"};

std::string utc_timestamp()
{
    const auto now = std::chrono::system_clock::now();
    const auto t = std::chrono::system_clock::to_time_t(now);
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%S", &tm);
    char out[40];
    std::snprintf(out, sizeof(out), "%s.%03dZ", buf, static_cast<int>(ms));
    return out;
}

// One JSON object per line on the error stream.
class Logger
{
public:
    Logger(std::ostream& sink, Verbosity v, std::string command) : sink_(sink), verbosity_(v), command_(std::move(command)) {}

    void debug(const std::string& event, json fields = json::object()) { emit("debug", event, std::move(fields)); }
    void info(const std::string& event, json fields = json::object()) { emit("info", event, std::move(fields)); }
    void warn(const std::string& event, json fields = json::object()) { emit("warn", event, std::move(fields)); }
    void error(const std::string& event, json fields = json::object()) { emit("error", event, std::move(fields)); }

private:
    void emit(const char* level, const std::string& event, json fields)
    {
        const std::string lv(level);
        if (verbosity_ == Verbosity::Quiet && lv != "error")
            return;
        if (verbosity_ == Verbosity::Normal && lv == "debug")
            return;
        json line{{"ts", utc_timestamp()}, {"level", lv}, {"command", command_}, {"event", event}};
        if (fields.is_object())
            line.update(fields);
        sink_ << line.dump() << '\n';
    }

    std::ostream& sink_;
    Verbosity verbosity_;
    std::string command_;
};

std::string error_kind(const std::exception& e)
{
    if (dynamic_cast<const ConfigError*>(&e))
        return "ConfigError";
    if (dynamic_cast<const FormatError*>(&e))
        return "FormatError";
    if (dynamic_cast<const NotFoundError*>(&e))
        return "NotFoundError";
    if (dynamic_cast<const GeometryError*>(&e))
        return "GeometryError";
    if (dynamic_cast<const DivergenceError*>(&e))
        return "DivergenceError";
    if (dynamic_cast<const DataError*>(&e))
        return "DataError";
    if (dynamic_cast<const Error*>(&e))
        return "Error";
    return "InternalError";
}

// ------------------------------------------------------------ config file

std::string option_name(std::string key)
{
    std::replace(key.begin(), key.end(), '_', '-');
    return "--" + key;
}

bool given_on_command_line(const std::vector<std::string>& args, const std::string& flag)
{
    return std::any_of(args.begin(), args.end(),
                       [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
}

void append_config_value(std::vector<std::string>& tokens, const std::string& flag, const json& v)
{
    if (v.is_boolean())
    {
        if (v.get<bool>())
            tokens.push_back(flag);
        return;
    }
    auto scalar = [](const json& x) {
        if (x.is_string())
            return x.get<std::string>();
        if (x.is_number_integer() || x.is_number_unsigned())
            return x.dump();
        if (x.is_number_float())
            return detail::format_double(x.get<double>());
        throw ConfigError("config: values must be strings, numbers, booleans or arrays of those");
    };
    tokens.push_back(flag);
    if (v.is_array())
    {
        for (const auto& x : v)
            tokens.push_back(scalar(x));
        return;
    }
    tokens.push_back(scalar(v));
}

// Strips --config FILE from args and splices the file's settings in right
// after the subcommand. Top-level keys apply where the subcommand has a
// matching option; keys under an object named after the subcommand must
// match. Flags given on the command line win.
std::vector<std::string> expand_config(const std::vector<std::string>& args, const CLI::App& app, Logger& log)
{
    std::vector<std::string> rest;
    std::optional<std::string> config_path;
    for (std::size_t i = 0; i < args.size(); ++i)
    {
        if (args[i] == "--config")
        {
            if (i + 1 >= args.size())
                throw CLI::ArgumentMismatch("--config requires a file argument");
            config_path = args[++i];
        }
        else if (args[i].rfind("--config=", 0) == 0)
        {
            config_path = args[i].substr(9);
        }
        else
        {
            rest.push_back(args[i]);
        }
    }
    if (!config_path)
        return rest;

    const auto it = std::find_if(rest.begin(), rest.end(), [](const std::string& a) {
        return std::find(subcommands.begin(), subcommands.end(), a) != subcommands.end();
    });
    if (it == rest.end())
        return rest; // CLI11 reports the missing subcommand
    const std::string name = *it;
    const CLI::App* sub = app.get_subcommand(name);

    json cfg;
    try
    {
        cfg = parse_json_file(*config_path);
    }
    catch (const NotFoundError& e)
    {
        throw ConfigError(std::string("config: ") + e.what());
    }
    catch (const FormatError& e)
    {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (!cfg.is_object())
        throw ConfigError("config: top level must be a JSON object");

    std::vector<std::string> injected;
    auto take = [&](const std::string& key, const json& v, bool strict) {
        const auto flag = option_name(key);
        if (!sub->get_option_no_throw(flag))
        {
            if (strict)
                throw ConfigError("config: '" + name + "' has no option " + flag);
            log.debug("config_key_ignored", {{"key", key}});
            return;
        }
        if (!given_on_command_line(rest, flag))
            append_config_value(injected, flag, v);
    };
    for (const auto& [key, v] : cfg.items())
    {
        if (v.is_object())
            continue;
        take(key, v, false);
    }
    if (cfg.contains(name))
    {
        if (!cfg.at(name).is_object())
            throw ConfigError("config: section '" + name + "' must be an object");
        for (const auto& [key, v] : cfg.at(name).items())
            take(key, v, true);
    }
    rest.insert(it + 1, injected.begin(), injected.end());
    return rest;
}

// ------------------------------------------------------------ helpers

void write_output(const std::string& path, const std::string& content, std::ostream& out)
{
    if (path == "-")
        out << content;
    else
        detail::write_atomic(path, content);
}

fs::path manifest_path(const std::string& dataset)
{
    const fs::path p(dataset);
    if (fs::is_directory(p))
        return p / "manifest.json";
    return p;
}

std::optional<Split> split_or(const std::string& s, std::optional<Split> fallback)
{
    if (s.empty())
        return fallback;
    if (s == "all")
        return std::nullopt;
    return split_from_string(s);
}

ReflectanceTable reflectance_table(const CliConfig& c)
{
    if (c.reflectance.empty())
        return ReflectanceTable::standard();
    return reflectance_table_from_json(parse_json_file(c.reflectance));
}

SimConfig sim_config(const CliConfig& c, const std::optional<double>& dataset_wavelength = std::nullopt)
{
    SimConfig sim;
    if (dataset_wavelength)
        sim.wavelength_m = *dataset_wavelength;
    if (c.wavelength)
        sim.wavelength_m = *c.wavelength;
    if (c.alpha_hw)
        sim.alpha_hw_deg = *c.alpha_hw;
    sim.validate();
    return sim;
}

DbConvention db_convention(const std::string& s) { return s == "10log10" ? DbConvention::Power : DbConvention::Amplitude; }

MappingFormat mapping_format(const CliConfig& c, const std::string& path)
{
    if (c.format == "csv")
        return MappingFormat::Csv;
    if (c.format == "binary")
        return MappingFormat::Binary;
    return fs::path(path).extension() == ".csv" ? MappingFormat::Csv : MappingFormat::Binary;
}

std::string mapping_file_name(const std::string& scenario, MappingFormat f)
{
    return "mapping_" + scenario + (f == MappingFormat::Csv ? ".csv" : ".bin");
}

// Mappings for dt-adapt: one global file or mapping_<scenario>.{bin,csv}
// files in a directory, loaded on first use.
class MappingStore
{
public:
    MappingStore(std::string file, std::string dir) : file_(std::move(file)), dir_(std::move(dir)) {}

    const AdaptationMapping* get(const std::string& scenario)
    {
        if (!file_.empty())
        {
            if (!global_)
                global_ = std::make_unique<AdaptationMapping>(load_mapping(file_));
            return global_.get();
        }
        if (auto it = cache_.find(scenario); it != cache_.end())
            return it->second.get();
        std::unique_ptr<AdaptationMapping> m;
        for (auto f : {MappingFormat::Binary, MappingFormat::Csv})
        {
            const auto p = fs::path(dir_) / mapping_file_name(scenario, f);
            if (fs::exists(p))
            {
                m = std::make_unique<AdaptationMapping>(load_mapping(p));
                break;
            }
        }
        return cache_.emplace(scenario, std::move(m)).first->second.get();
    }

    bool empty() const { return file_.empty() && dir_.empty(); }

private:
    std::string file_;
    std::string dir_;
    std::unique_ptr<AdaptationMapping> global_;
    std::map<std::string, std::unique_ptr<AdaptationMapping>> cache_;
};

TrainConfig train_config(const CliConfig& c)
{
    TrainConfig t;
    t.batch_size = c.batch;
    t.learning_rate = c.lr;
    t.epochs = c.epochs;
    t.seed = c.seed.value_or(0);
    t.init = c.init == "zeros" ? MappingInit::Zeros : MappingInit::Identity;
    t.early_stop = !c.no_early_stop;
    return t;
}

// ------------------------------------------------------------ subcommands

int cmd_synth(const CliConfig& c, Logger& log)
{
    auto spec = synth_spec_from_json(parse_json_file(c.spec));
    if (c.seed)
        for (std::size_t i = 0; i < spec.scenarios.size(); ++i)
            spec.scenarios[i].spec.seed = mix_seed(*c.seed, i);
    if (c.wavelength)
        spec.sim.wavelength_m = *c.wavelength;
    if (c.alpha_hw)
        spec.sim.alpha_hw_deg = *c.alpha_hw;
    const auto ds = generate_dataset(spec);
    const auto manifest = write_synth_dataset(ds, c.out_dir);
    log.info("dataset_written", {{"manifest", manifest.string()},
                                 {"samples", ds.dataset.samples.size()},
                                 {"scenarios", ds.dataset.scenarios.size()}});
    return exit_ok;
}

int cmd_reconstruct(const CliConfig& c, Logger& log, std::ostream& out)
{
    const auto d = load_dataset(manifest_path(c.dataset));
    const auto l2 = load_dataset_l2_codebook(d);
    std::vector<AngularPowerProfile> profiles;
    for (const auto* s : d.select(split_or(c.split, std::nullopt)))
        profiles.push_back(reconstruct_profile(s->measurements, l2, c.k));
    write_output(c.out, profiles_to_csv(profiles), out);
    log.info("profiles_written", {{"out", c.out}, {"rows", profiles.size()}, {"k", c.k}});
    return exit_ok;
}

json diagnostics_json(const std::string& id, const SimDiagnostics& d)
{
    return json{{"id", id},
                {"dropped_out_of_grid", d.dropped_out_of_grid},
                {"warnings", d.warnings},
                {"clamp_mass", d.clamp_mass},
                {"total_mass", d.total_mass}};
}

int cmd_simulate(const CliConfig& c, Logger& log, std::ostream& out)
{
    const auto table = reflectance_table(c);
    std::vector<AngularPowerProfile> profiles;
    json entries = json::array();
    double clamp_total = 0.0;
    SimConfig sim;
    auto one = [&](const Scene& scene, const std::string& id) {
        SimDiagnostics diag;
        profiles.push_back(simulate_profile(scene, sim, &diag));
        clamp_total += diag.clamp_mass;
        for (const auto& w : diag.warnings)
            log.warn("path_skipped", {{"id", id}, {"detail", w}});
        entries.push_back(diagnostics_json(id, diag));
    };

    if (!c.scene.empty())
    {
        sim = sim_config(c);
        one(load_scene(c.scene, table, sim.grid.size()), c.scene);
    }
    else
    {
        const auto d = load_dataset(manifest_path(c.dataset));
        sim = sim_config(c, d.wavelength_m);
        for (const auto* s : d.select(split_or(c.split, std::nullopt)))
            one(load_scene(d.resolve(s->scene_ref), table, sim.grid.size()), s->sample_id);
    }

    write_output(c.out, profiles_to_csv(profiles), out);
    std::string diag_path = c.diagnostics;
    if (diag_path.empty() && c.out != "-")
        diag_path = fs::path(c.out).replace_extension(".diagnostics.json").string();
    if (!diag_path.empty())
    {
        const json sidecar{{"wavelength_m", sim.wavelength_m},
                           {"alpha_hw_deg", sim.alpha_hw_deg},
                           {"clamp_mass", clamp_total},
                           {"profiles", entries}};
        detail::write_atomic(diag_path, sidecar.dump(2) + "\n");
    }
    log.info("profiles_written", {{"out", c.out}, {"rows", profiles.size()}, {"clamp_mass", clamp_total}});
    return exit_ok;
}

AdaptationMapping train(const CliConfig& c, const std::vector<ProfilePair>& pairs, Logger& log, const std::string& scenario)
{
    AdaptationMapping m;
    if (c.closed_form)
    {
        m = closed_form_mapping(pairs);
    }
    else
    {
        auto fit = fit_mapping(pairs, train_config(c));
        log.debug("loss_curve", {{"scenario", scenario}, {"initial", fit.initial_loss}, {"curve", fit.loss_curve}});
        m = std::move(fit.mapping);
    }
    m.trained_on.scenario = scenario;
    m.trained_on.normalization = c.normalization;
    if (!c.closed_form)
        m.trained_on.seed = c.seed.value_or(0);
    log.info("mapping_trained", {{"scenario", scenario},
                                 {"pairs", pairs.size()},
                                 {"method", m.trained_on.method},
                                 {"epochs", m.trained_on.epochs},
                                 {"final_loss", m.trained_on.final_loss}});
    return m;
}

int cmd_adapt(const CliConfig& c, Logger& log)
{
    if (!c.pairs.empty())
    {
        const auto pairs = load_pairs(c.pairs);
        const auto m = train(c, pairs, log, "*");
        save_mapping(m, c.out, mapping_format(c, c.out));
        return exit_ok;
    }

    const auto d = load_dataset(manifest_path(c.dataset));
    const auto l2 = load_dataset_l2_codebook(d);
    const auto sim = sim_config(c, d.wavelength_m);
    const auto table = reflectance_table(c);
    const auto split = split_or(c.split, Split::Calibration);
    const bool normalize = c.normalization == "peak";

    if (c.global)
    {
        const auto pairs = build_adaptation_pairs(d, l2, split, c.k, sim, table, std::nullopt, normalize);
        if (pairs.empty())
            throw DataError("adapt: no samples in the selected split");
        if (!c.pairs_out.empty())
            save_pairs(pairs, c.pairs_out);
        save_mapping(train(c, pairs, log, "*"), c.out, mapping_format(c, c.out));
        return exit_ok;
    }

    std::size_t written = 0;
    const auto format = c.format == "csv" ? MappingFormat::Csv : MappingFormat::Binary;
    for (const auto& sc : d.scenarios)
    {
        const auto pairs = build_adaptation_pairs(d, l2, split, c.k, sim, table, sc.id, normalize);
        if (pairs.empty())
        {
            log.warn("scenario_skipped", {{"scenario", sc.id}, {"reason", "no calibration samples"}});
            continue;
        }
        save_mapping(train(c, pairs, log, sc.id), fs::path(c.out_dir) / mapping_file_name(sc.id, format), format);
        ++written;
    }
    if (written == 0)
        throw DataError("adapt: no scenario has samples in the selected split");
    return exit_ok;
}

int cmd_evaluate(const CliConfig& c, Logger& log, std::ostream& out)
{
    const auto d = load_dataset(manifest_path(c.dataset));
    const auto l1 = load_dataset_l1_codebook(d);
    const auto l2 = load_dataset_l2_codebook(d);

    EvalOptions opt;
    opt.method = method_from_string(c.method);
    opt.split = split_or(c.split, Split::Test);
    opt.l1_ks = c.l1_k;
    opt.l2_ks = c.l2_k;
    opt.dba_k_max = c.dba_k_max;
    opt.dba_delta = c.dba_delta;
    opt.db_convention = db_convention(c.db_convention);
    opt.sim = sim_config(c, d.wavelength_m);
    opt.reflectance = reflectance_table(c);
    MappingStore store(c.mapping, c.mapping_dir);
    if (!store.empty())
        opt.mapping = [&store](const std::string& id) { return store.get(id); };

    const auto rep = evaluate_dataset(d, l1, l2, opt);
    for (const auto& w : rep.warnings)
        log.warn("evaluation_warning", {{"detail", w}});
    if (!c.report.empty())
        write_output(c.report, report_to_json(rep).dump(2) + "\n", out);
    if (!c.losses_csv.empty())
        detail::write_atomic(c.losses_csv, per_sample_losses_csv(rep));

    json summary{{"method", to_string(rep.method)}, {"samples", rep.sample_count}, {"overall_dba", rep.overall_dba}};
    if (auto it = rep.l1_accuracy.find(1); it != rep.l1_accuracy.end())
        summary["l1_top1"] = it->second;
    if (auto it = rep.power_loss.find(1); it != rep.power_loss.end())
        summary["l2_top1_loss_db"] = detail::finite_or_null(it->second.aggregate_db);
    log.info("evaluation_done", summary);
    return exit_ok;
}

// Overlay data for one sample: measured (reconstructed), simulated and
// adapted profiles on the angle grid, each scaled to unit peak.
int cmd_report(const CliConfig& c, Logger& log, std::ostream& out)
{
    const auto d = load_dataset(manifest_path(c.dataset));
    const auto l2 = load_dataset_l2_codebook(d);
    const auto sim = sim_config(c, d.wavelength_m);
    const auto table = reflectance_table(c);

    const SampleRecord* sample = nullptr;
    if (c.sample.empty())
    {
        const auto candidates = d.select(split_or(c.split, std::nullopt));
        if (candidates.empty())
            throw DataError("report: no samples in the selected split");
        sample = candidates.front();
    }
    else
    {
        for (const auto& s : d.samples)
            if (s.sample_id == c.sample)
                sample = &s;
        if (!sample)
            throw DataError("report: unknown sample '" + c.sample + "'");
    }

    const auto measured = peak_normalized(reconstruct_profile(sample->measurements, l2, c.k));
    const Scene scene = load_scene(d.resolve(sample->scene_ref), table, sim.grid.size());
    const auto simulated = simulate_profile(scene, sim);
    const auto dt = peak_normalized(simulated);
    std::optional<AngularPowerProfile> adapted;
    MappingStore store(c.mapping, c.mapping_dir);
    if (!store.empty())
    {
        const auto* m = store.get(sample->scenario_id);
        if (!m)
            throw DataError("report: no adaptation mapping for scenario '" + sample->scenario_id + "'");
        adapted = peak_normalized(method_profile(scene, Method::DigitalTwinAdapt, sim, m));
    }

    std::string text;
    if (c.format == "json")
    {
        std::vector<double> angles;
        for (std::size_t j = 0; j < sim.grid.size(); ++j)
            angles.push_back(sim.grid.angle(j));
        const json j{{"sample_id", sample->sample_id},
                     {"scenario_id", sample->scenario_id},
                     {"angle_deg", angles},
                     {"measured", measured.vector()},
                     {"dt", dt.vector()},
                     {"dt_adapt", adapted ? json(adapted->vector()) : json(nullptr)},
                     {"end_to_end", nullptr}};
        text = j.dump(2) + "\n";
    }
    else
    {
        text = "# sample " + sample->sample_id + " scenario " + sample->scenario_id + "\n";
        text += "angle_deg,measured,dt,dt_adapt,end_to_end\n";
        for (std::size_t j = 0; j < sim.grid.size(); ++j)
        {
            text += detail::format_double(sim.grid.angle(j)) + "," + detail::format_double(measured[j]) + "," +
                    detail::format_double(dt[j]) + ",";
            if (adapted)
                text += detail::format_double((*adapted)[j]);
            text += ",\n";
        }
    }
    write_output(c.out, text, out);
    log.info("report_written", {{"out", c.out}, {"sample", sample->sample_id}});
    return exit_ok;
}

// ------------------------------------------------------------ parser

void build_parser(CLI::App& app, CliConfig& c)
{
    app.require_subcommand(1);
    app.fallthrough();
    app.add_flag_callback("-v,--verbose", [&c] { c.verbosity = Verbosity::Verbose; }, "Also log debug events");
    app.add_flag_callback("-q,--quiet", [&c] { c.verbosity = Verbosity::Quiet; }, "Only log errors");
    // Consumed before parsing; declared for the help text.
    app.add_option("--config", c.config, "JSON file with option defaults; a section named after a subcommand applies to it only");

    auto dataset_opt = [&c](CLI::App* s) {
        return s->add_option("--dataset", c.dataset, "Dataset manifest or directory")->envname(data_dir_env);
    };
    auto split_opt = [&c](CLI::App* s, const std::string& def) {
        s->add_option("--split", c.split, "Sample split: train, calibration, test or all (default " + def + ")")
            ->check(CLI::IsMember({"train", "calibration", "test", "all"}));
    };
    auto sim_opts = [&c](CLI::App* s) {
        s->add_option("--wavelength", c.wavelength, "Carrier wavelength in meters");
        s->add_option("--alpha-hw", c.alpha_hw, "Sinc half-width in degrees");
        s->add_option("--reflectance", c.reflectance, "Reflectance table JSON");
    };
    auto mapping_opts = [&c](CLI::App* s) {
        auto* f = s->add_option("--mapping", c.mapping, "Mapping file shared by every scenario");
        auto* d = s->add_option("--mapping-dir", c.mapping_dir, "Directory of mapping_<scenario> files");
        f->excludes(d);
    };

    auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
    synth->add_option("--spec", c.spec, "Synthetic dataset spec JSON")->required();
    synth->add_option("--out-dir", c.out_dir, "Output directory")->envname(data_dir_env)->required();
    synth->add_option("--seed", c.seed, "Override every scenario seed (derived per scenario)");
    synth->add_option("--wavelength", c.wavelength, "Carrier wavelength in meters");
    synth->add_option("--alpha-hw", c.alpha_hw, "Sinc half-width in degrees");

    auto* rec = app.add_subcommand("reconstruct", "Reconstruct angular profiles from beam measurements");
    dataset_opt(rec);
    split_opt(rec, "all");
    rec->add_option("--k", c.k, "Number of strongest beams to combine")->capture_default_str();
    rec->add_option("--out", c.out, "Profile CSV, '-' for standard output")->required();

    auto* simc = app.add_subcommand("simulate", "Simulate angular profiles from scenes");
    simc->add_option("--scene", c.scene, "Scene JSON (takes precedence over --dataset)");
    dataset_opt(simc);
    split_opt(simc, "all");
    sim_opts(simc);
    simc->add_option("--out", c.out, "Profile CSV, '-' for standard output")->required();
    simc->add_option("--diagnostics", c.diagnostics, "Diagnostics JSON (default <out>.diagnostics.json)");

    auto* adapt = app.add_subcommand("adapt", "Train sim-to-real adaptation mappings");
    adapt->add_option("--pairs", c.pairs, "Pairs CSV, simulated then measured profile per row (takes precedence over --dataset)");
    dataset_opt(adapt);
    split_opt(adapt, "calibration");
    sim_opts(adapt);
    adapt->add_flag("--global", c.global, "One mapping for all scenarios instead of one per scenario");
    adapt->add_option("--out", c.out, "Mapping file (global mapping or --pairs)");
    adapt->add_option("--out-dir", c.out_dir, "Directory for per-scenario mappings");
    adapt->add_option("--pairs-out", c.pairs_out, "Also write the training pairs (global only)");
    adapt->add_option("--k", c.k, "Beams combined when reconstructing measured profiles")->capture_default_str();
    adapt->add_option("--lr", c.lr, "Learning rate")->capture_default_str();
    adapt->add_option("--batch", c.batch, "Mini-batch size")->capture_default_str();
    adapt->add_option("--epochs", c.epochs, "Maximum epochs")->capture_default_str();
    adapt->add_option("--seed", c.seed, "Shuffle seed (default 0)");
    adapt->add_option("--init", c.init, "Initial mapping")->check(CLI::IsMember({"identity", "zeros"}))->capture_default_str();
    adapt->add_flag("--no-early-stop", c.no_early_stop, "Always run every epoch");
    adapt->add_flag("--closed-form", c.closed_form, "Least-squares solution instead of gradient descent");
    adapt->add_option("--normalization", c.normalization, "Profile scaling before fitting")
        ->check(CLI::IsMember({"peak", "none"}))
        ->capture_default_str();
    adapt->add_option("--format", c.format, "Mapping file format (default: from extension)")
        ->check(CLI::IsMember({"binary", "csv"}));

    auto* eval = app.add_subcommand("evaluate", "Score a beam prediction method on a dataset");
    dataset_opt(eval);
    split_opt(eval, "test");
    sim_opts(eval);
    mapping_opts(eval);
    eval->add_option("--method", c.method, "Prediction method")
        ->check(CLI::IsMember({"dt", "dt-adapt", "gps-los"}))
        ->capture_default_str();
    eval->add_option("--report", c.report, "Report JSON, '-' for standard output");
    eval->add_option("--losses-csv", c.losses_csv, "Per-sample power losses CSV");
    eval->add_option("--db-convention", c.db_convention, "dB scale of the power loss")
        ->check(CLI::IsMember({"20log10", "10log10"}))
        ->capture_default_str();
    eval->add_option("--l1-k", c.l1_k, "Top-k values for L1 accuracy")->capture_default_str();
    eval->add_option("--l2-k", c.l2_k, "Top-k values for L2 power loss")->capture_default_str();
    eval->add_option("--dba-k-max", c.dba_k_max, "Largest k in the DBA score")->capture_default_str();
    eval->add_option("--dba-delta", c.dba_delta, "DBA saturation distance in beams")->capture_default_str();

    auto* rep = app.add_subcommand("report", "Profile overlay data for one sample");
    dataset_opt(rep);
    split_opt(rep, "all");
    sim_opts(rep);
    mapping_opts(rep);
    rep->add_option("--sample", c.sample, "Sample id (default: first sample of the split)");
    rep->add_option("--k", c.k, "Beams combined for the measured profile")->capture_default_str();
    rep->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    rep->add_option("--out", c.out, "Output file, '-' for standard output")->required();
}

} // namespace

void CliConfig::validate() const
{
    auto need = [&](bool ok, const std::string& msg) {
        if (!ok)
            throw ConfigError(subcommand + ": " + msg);
    };
    const bool uses_dataset = subcommand != "synth" && !(subcommand == "simulate" && !scene.empty()) &&
                              !(subcommand == "adapt" && !pairs.empty());
    if (uses_dataset)
        need(!dataset.empty(), "--dataset is required (or set " + std::string(data_dir_env) + ")");
    need(k >= 1, "--k must be >= 1");
    if (wavelength)
        need(*wavelength > 0.0 && std::isfinite(*wavelength), "--wavelength must be positive");
    if (alpha_hw)
        need(*alpha_hw > 0.0 && std::isfinite(*alpha_hw), "--alpha-hw must be positive");

    if (subcommand == "adapt")
    {
        need(lr > 0.0 && std::isfinite(lr), "--lr must be positive");
        need(batch >= 1, "--batch must be >= 1");
        need(epochs >= 1, "--epochs must be >= 1");
        const bool single = global || !pairs.empty();
        if (single)
        {
            need(!out.empty(), "--out is required for a single mapping");
            need(out_dir.empty(), "--out-dir only applies to per-scenario mappings");
        }
        else
        {
            need(!out_dir.empty(), "--out-dir is required for per-scenario mappings (or pass --global)");
            need(out.empty(), "--out only applies with --global or --pairs");
        }
        need(pairs_out.empty() || (global && pairs.empty()), "--pairs-out requires --global with --dataset");
        need(!(global && !pairs.empty()), "--global has no effect with --pairs");
    }
    if (subcommand == "evaluate")
    {
        const bool has_mapping = !mapping.empty() || !mapping_dir.empty();
        if (method == "dt-adapt")
            need(has_mapping, "dt-adapt needs --mapping or --mapping-dir");
        else
            need(!has_mapping, "--mapping only applies to dt-adapt");
        need(!l1_k.empty() && !l2_k.empty(), "top-k lists must not be empty");
        for (auto v : l1_k)
            need(v >= 1, "--l1-k values must be >= 1");
        for (auto v : l2_k)
            need(v >= 1, "--l2-k values must be >= 1");
        need(dba_k_max >= 1, "--dba-k-max must be >= 1");
        need(dba_delta >= 1, "--dba-delta must be >= 1");
    }
    if (subcommand == "simulate")
        need(!scene.empty() || !dataset.empty(), "--scene or --dataset is required");
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CliConfig c;
    CLI::App app{"dtbeam: digital-twin beam prediction toolkit", "dtbeam"};
    app.option_defaults()->always_capture_default(false);
    build_parser(app, c);

    Logger boot(err, Verbosity::Normal, "dtbeam");
    std::vector<std::string> argv;
    try
    {
        argv = expand_config(args, app, boot);
        std::vector<std::string> reversed(argv.rbegin(), argv.rend());
        app.parse(reversed);
    }
    catch (const CLI::CallForHelp&)
    {
        const auto subs = app.get_subcommands();
        out << (subs.empty() ? app.help() : subs.front()->help());
        return exit_ok;
    }
    catch (const CLI::ParseError& e)
    {
        boot.error("usage", {{"error", "UsageError"}, {"message", e.what()}});
        const auto subs = app.get_subcommands();
        err << (subs.empty() ? app.help() : subs.front()->help());
        return exit_usage;
    }
    catch (const ConfigError& e)
    {
        boot.error("usage", {{"error", "ConfigError"}, {"message", e.what()}});
        return exit_usage;
    }

    c.subcommand = app.get_subcommands().front()->get_name();
    Logger log(err, c.verbosity, c.subcommand);
    try
    {
        c.validate();
        log.debug("start", {{"args", args}});
        if (c.subcommand == "synth")
            return cmd_synth(c, log);
        if (c.subcommand == "reconstruct")
            return cmd_reconstruct(c, log, out);
        if (c.subcommand == "simulate")
            return cmd_simulate(c, log, out);
        if (c.subcommand == "adapt")
            return cmd_adapt(c, log);
        if (c.subcommand == "evaluate")
            return cmd_evaluate(c, log, out);
        if (c.subcommand == "report")
            return cmd_report(c, log, out);
        throw ConfigError("unknown subcommand '" + c.subcommand + "'");
    }
    catch (const ConfigError& e)
    {
        log.error("failed", {{"error", "ConfigError"}, {"message", e.what()}});
        return exit_usage;
    }
    catch (const std::exception& e)
    {
        log.error("failed", {{"error", error_kind(e)}, {"message", e.what()}});
        return exit_data;
    }
}

int run(int argc, char** argv)
{
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i)
        args.emplace_back(argv[i]);
    return run(args, std::cout, std::cerr);
}

} // namespace dtbeam::cli
