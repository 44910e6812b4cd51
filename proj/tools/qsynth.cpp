// qsynth command line: data generation, target training, attacks and budget sweeps.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qsynth/qsynth.hpp"

namespace fs = std::filesystem;
namespace ex = qsynth::experiment;
using nlohmann::json;

namespace {

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string method;
    std::optional<std::size_t> budget;
    std::string input;
    std::string shape;
    std::string delimiter = ",";
    std::vector<std::string> files;
};

ex::ExperimentConfig resolve(const Options& o) {
    ex::ExperimentConfig cfg = o.config.empty() ? ex::ExperimentConfig{} : ex::load_config(o.config);
    if (o.seed) cfg.seed = *o.seed;
    if (!o.out.empty()) cfg.output_dir = o.out;
    if (!o.method.empty()) cfg.method = ex::parse_method(o.method);
    return cfg;
}

std::string run_dir_name(std::size_t run) {
    std::ostringstream os;
    os << "run-" << std::setw(3) << std::setfill('0') << run;
    return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw qsynth::Error("cannot write '" + path.string() + "'");
}

/// manifest.json of one command. Written with status "running" up front and
/// rewritten on exit, so a crashed run leaves a manifest that says so.
class Manifest {
public:
    Manifest(fs::path dir, std::string command, const ex::ExperimentConfig& cfg) : dir_(std::move(dir)) {
        doc_["command"] = std::move(command);
        doc_["version"] = qsynth::kVersion;
        doc_["libraries"] = {{"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                                   std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                                   std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                             {"cli11", CLI11_VERSION},
                             {"compiler", __VERSION__}};
        doc_["master_seed"] = cfg.seed;
        doc_["config"] = ex::to_json(cfg).flatten();
        doc_["runs"] = json::array();
        doc_["files"] = json::array();
        fs::create_directories(dir_);
        write("running");
    }

    void set(const std::string& key, json value) { doc_[key] = std::move(value); }
    void add_run(json run) { doc_["runs"].push_back(std::move(run)); }
    void add_file(const fs::path& p) { doc_["files"].push_back(fs::relative(p, dir_).generic_string()); }

    void complete() { write("complete"); }

    void fail(const std::exception& e) {
        doc_["error"] = e.what();
        if (const auto* s = dynamic_cast<const qsynth::StageError*>(&e)) doc_["failed_stage"] = s->stage();
        doc_["partial"] = !doc_["files"].empty();
        write("failed");
    }

private:
    void write(const char* status) {
        doc_["status"] = status;
        write_text(dir_ / "manifest.json", doc_.dump(2) + "\n");
    }

    fs::path dir_;
    json doc_;
};

/// Runs body(manifest); any exception marks the manifest failed and yields exit code 1.
template <class Body>
int with_manifest(const char* command, const ex::ExperimentConfig& cfg, Body&& body) {
    std::optional<Manifest> manifest;
    try {
        manifest.emplace(cfg.output_dir, command, cfg);
        body(*manifest);
        manifest->complete();
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "qsynth " << command << ": error: " << e.what() << "\n";
        if (manifest) {
            try {
                manifest->fail(e);
            } catch (const std::exception& inner) {
                std::cerr << "qsynth " << command << ": cannot update manifest: " << inner.what() << "\n";
            }
        }
        return 1;
    }
}

std::string summary(const qsynth::LabeledSet& set) {
    const auto counts = set.class_counts();
    std::ostringstream os;
    os << "n=" << set.size() << " C=" << set.shape().channels << " T=" << set.shape().samples
       << " k1=" << counts.size();
    return os.str();
}

std::string fmt(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << v;
    return os.str();
}

int cmd_gen_data(const Options& o) {
    const auto cfg = resolve(o);
    return with_manifest("gen-data", cfg, [&](Manifest& m) {
        const ex::RunSeeds seeds(qsynth::eval::sweep_run_seed(cfg.seed, 0));
        const ex::Splits splits = ex::generate_splits(cfg.dataset, seeds.data);
        const fs::path dir(cfg.output_dir);
        for (const auto& [name, set] : {std::pair{"train.epo", &splits.train}, std::pair{"test.epo", &splits.test}}) {
            qsynth::data::write_epochs((dir / name).string(), *set);
            m.add_file(dir / name);
            std::cout << name << ": " << summary(*set) << "\n";
        }
        m.add_run(seeds.to_json());
    });
}

int cmd_train_target(const Options& o) {
    const auto cfg = resolve(o);
    return with_manifest("train-target", cfg, [&](Manifest& m) {
        const ex::RunSeeds seeds(qsynth::eval::sweep_run_seed(cfg.seed, 0));
        const ex::Splits splits = ex::load_splits(cfg.dataset, seeds.data);
        const auto target = ex::detail::in_stage("train-target", [&] { return ex::train_target(cfg, splits.train, seeds); });
        const auto preds = qsynth::eval::predict_all(target, std::span<const qsynth::Epoch>(splits.test.epochs()));
        const auto report = qsynth::eval::evaluate(preds, splits.test.labels(), cfg.dataset.num_classes);
        const fs::path path = fs::path(cfg.output_dir) / "target.json";
        qsynth::nn::write_checkpoint(path.string(), target);
        m.add_file(path);
        m.add_run(seeds.to_json());
        m.set("test", {{"rca", report.rca}, {"bca", report.bca}});
        std::cout << "target " << ex::model_label(cfg.target) << ": test rca " << fmt(report.rca) << " bca "
                  << fmt(report.bca) << " -> " << path.string() << "\n";
    });
}

std::optional<std::size_t> single_budget(const Options& o, const ex::ExperimentConfig& cfg) {
    if (o.budget) return o.budget;
    if (cfg.budgets.size() == 1) return cfg.budgets.front();
    if (cfg.budgets.size() > 1) throw qsynth::ConfigError("attack: several budgets configured; pass --budget or use sweep");
    return std::nullopt;
}

void write_run_files(const fs::path& dir, const ex::ExperimentConfig& cfg, const ex::Task& task,
                     const ex::RunOutcome& r, Manifest& m) {
    fs::create_directories(dir);
    {
        std::ostringstream trace;
        ex::write_trace(trace, r);
        write_text(dir / "trace.csv", trace.str());
        m.add_file(dir / "trace.csv");
    }
    qsynth::data::write_epochs((dir / "original.epo").string(), task.splits.test);
    m.add_file(dir / "original.epo");
    if (r.adversarial.empty()) return;

    qsynth::LabeledSet adv;
    for (std::size_t i = 0; i < r.adversarial.size(); ++i) adv.add(r.adversarial[i].perturbed, task.splits.test.label(i));
    qsynth::data::write_epochs((dir / "adversarial.epo").string(), adv);
    m.add_file(dir / "adversarial.epo");
    const json adv_manifest = {{"gradient_source", "substitute"},
                               {"attack", std::string(qsynth::attack::to_string(cfg.attack.method))},
                               {"epsilon", cfg.attack.epsilon},
                               {"count", adv.size()},
                               {"labels", "true test labels"},
                               {"substitute", ex::model_label(cfg.substitute)},
                               {"method", std::string(ex::to_string(r.method))},
                               {"budget", r.budget}};
    write_text(dir / "adversarial_manifest.json", adv_manifest.dump(2) + "\n");
    m.add_file(dir / "adversarial_manifest.json");
}

int cmd_attack(const Options& o) {
    const auto cfg = resolve(o);
    return with_manifest("attack", cfg, [&](Manifest& m) {
        const ex::Plan plan = ex::make_plan(cfg, cfg.method, single_budget(o, cfg));
        m.set("method", std::string(ex::to_string(plan.method)));
        m.set("budget", plan.budget);
        const fs::path dir(cfg.output_dir);
        std::ofstream results(dir / "results.csv");
        results << ex::kResultsHeader << "\n";
        m.add_file(dir / "results.csv");
        for (std::size_t run = 0; run < cfg.runs; ++run) {
            const std::uint64_t seed = qsynth::eval::sweep_run_seed(cfg.seed, run);
            const ex::Task task = ex::detail::in_stage("prepare", [&] { return ex::prepare_task(cfg, seed); });
            const ex::RunOutcome r = ex::run_method(cfg, task, plan);
            results << ex::results_row(cfg, r) << "\n" << std::flush;
            write_run_files(dir / run_dir_name(run), cfg, task, r, m);
            json run_info = r.seeds.to_json();
            run_info["directory"] = run_dir_name(run);
            run_info["balancing_queries"] = r.balancing_queries;
            run_info["target_queries"] = r.total_target_queries;
            m.add_run(std::move(run_info));
            std::cout << run_dir_name(run) << " " << ex::to_string(r.method) << " budget " << r.budget << ": rca "
                      << fmt(r.baseline.rca) << " -> " << fmt(r.attacked.rca) << " (noise " << fmt(r.noisy.rca)
                      << "), target queries " << r.total_target_queries << "\n";
        }
    });
}

int cmd_sweep(const Options& o) {
    auto cfg = resolve(o);
    if (o.budget) cfg.budgets = {*o.budget};
    return with_manifest("sweep", cfg, [&](Manifest& m) {
        if (cfg.budgets.empty()) throw qsynth::ConfigError("sweep: no budgets configured");
        for (std::size_t b : cfg.budgets) (void)ex::make_plan(cfg, cfg.method, b);
        m.set("method", std::string(ex::to_string(cfg.method)));

        const fs::path dir(cfg.output_dir);
        std::ofstream runs_csv(dir / "runs.csv");
        runs_csv << ex::kResultsHeader << "\n";
        m.add_file(dir / "runs.csv");

        // Tasks depend only on the run seed; every budget reuses them.
        std::map<std::uint64_t, ex::Task> tasks;
        const auto result = qsynth::eval::run_sweep(
            cfg.budgets, cfg.runs, cfg.seed, [&](std::size_t budget, std::size_t, std::uint64_t seed) {
                auto it = tasks.find(seed);
                if (it == tasks.end()) {
                    it = tasks.emplace(seed, ex::detail::in_stage("prepare", [&] { return ex::prepare_task(cfg, seed); }))
                             .first;
                }
                const ex::RunOutcome r = ex::run_method(cfg, it->second, cfg.method, budget);
                runs_csv << ex::results_row(cfg, r) << "\n" << std::flush;
                return r.attacked;
            });

        std::ostringstream curve;
        result.curve.write_csv(curve);
        write_text(dir / "sweep.csv", curve.str());
        m.add_file(dir / "sweep.csv");
        for (std::size_t run = 0; run < cfg.runs; ++run) {
            m.add_run(ex::RunSeeds(qsynth::eval::sweep_run_seed(cfg.seed, run)).to_json());
        }
        std::vector<double> budgets, means;
        for (const auto& p : result.curve.points) {
            budgets.push_back(static_cast<double>(p.budget));
            means.push_back(p.mean_rca);
            std::cout << "budget " << p.budget << ": mean rca " << fmt(p.mean_rca) << " (sd " << fmt(p.std_rca)
                      << ", " << p.runs << " runs)\n";
        }
        if (budgets.size() >= 2) {
            const double rho = qsynth::eval::spearman(budgets, means);
            m.set("spearman_budget_vs_rca", rho);
            std::cout << "spearman(budget, mean rca) = " << fmt(rho) << "\n";
        }
        if (!result.complete) throw qsynth::Error("sweep incomplete: " + result.error);
    });
}

/// Aggregates results.csv / runs.csv rows by (dataset, models, method, budget).
int cmd_report(const Options& o) {
    try {
        std::vector<std::string> files = o.files;
        if (files.empty()) {
            const fs::path dir(o.out.empty() ? "out" : o.out);
            for (const char* name : {"results.csv", "runs.csv"}) {
                if (fs::exists(dir / name)) files.push_back((dir / name).string());
            }
        }
        if (files.empty()) throw qsynth::Error("report: no results.csv or runs.csv found");

        using Key = std::tuple<std::string, std::string, std::string, std::string, std::size_t>;
        struct Acc {
            std::vector<double> rca, bca, base, noisy;
        };
        std::map<Key, Acc> groups;
        for (const auto& file : files) {
            std::ifstream in(file);
            if (!in) throw qsynth::Error("report: cannot open '" + file + "'");
            std::string line;
            std::getline(in, line);
            if (line != ex::kResultsHeader) throw qsynth::Error("report: '" + file + "' is not a results file");
            std::size_t line_no = 1;
            while (std::getline(in, line)) {
                ++line_no;
                if (line.empty()) continue;
                std::vector<std::string> f;
                std::stringstream ss(line);
                for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
                if (f.size() != 12) {
                    throw qsynth::Error("report: " + file + ":" + std::to_string(line_no) + ": expected 12 fields");
                }
                auto& a = groups[{f[0], f[1], f[2], f[3], std::stoul(f[4])}];
                a.rca.push_back(std::stod(f[6]));
                a.bca.push_back(std::stod(f[7]));
                a.base.push_back(std::stod(f[8]));
                a.noisy.push_back(std::stod(f[10]));
            }
        }
        std::cout << "dataset,target_model,substitute_model,method,budget,runs,mean_rca,mean_bca,mean_baseline_rca,"
                     "mean_noisy_rca,attack_drop,noise_drop\n";
        for (const auto& [k, a] : groups) {
            using qsynth::eval::mean;
            const double base = mean(a.base);
            std::cout << std::get<0>(k) << ',' << std::get<1>(k) << ',' << std::get<2>(k) << ',' << std::get<3>(k)
                      << ',' << std::get<4>(k) << ',' << a.rca.size() << ',' << fmt(mean(a.rca)) << ','
                      << fmt(mean(a.bca)) << ',' << fmt(base) << ',' << fmt(mean(a.noisy)) << ','
                      << fmt(base - mean(a.rca)) << ',' << fmt(base - mean(a.noisy)) << '\n';
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "qsynth report: error: " << e.what() << "\n";
        return 1;
    }
}

qsynth::Shape parse_shape(const std::string& s) {
    const auto x = s.find('x');
    if (x == std::string::npos) throw qsynth::InvalidArgument("shape must look like CxT, got '" + s + "'");
    return {std::stoul(s.substr(0, x)), std::stoul(s.substr(x + 1))};
}

int cmd_convert(const Options& o) {
    try {
        std::ifstream in(o.input);
        if (!in) throw qsynth::Error("convert: cannot open '" + o.input + "'");
        const char delim = o.delimiter == "space" || o.delimiter == " " ? ' ' : o.delimiter == "tab" ? '\t' : o.delimiter.at(0);
        const auto set = qsynth::data::read_delimited(in, parse_shape(o.shape), delim);
        const fs::path out = o.out.empty() ? fs::path(o.input).replace_extension(".epo") : fs::path(o.out);
        if (out.has_parent_path()) fs::create_directories(out.parent_path());
        qsynth::data::write_epochs(out.string(), set);
        std::cout << out.string() << ": " << summary(set) << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "qsynth convert: error: " << e.what() << "\n";
        return 1;
    }
}

void add_common(CLI::App* cmd, Options& o, bool method, bool budget) {
    cmd->add_option("--config", o.config, "JSON experiment config (defaults apply to absent keys)");
    cmd->add_option("--seed", o.seed, "master seed, overrides the config");
    cmd->add_option("--out", o.out, "output directory, overrides the config");
    if (method) {
        cmd->add_option("--method", o.method, "substitute training method")
            ->check(CLI::IsMember({"active", "jacobian", "noise"}));
    }
    if (budget) cmd->add_option("--budget", o.budget, "target-query budget for |S0| plus augmentation");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"qsynth: black-box attacks with query-synthesis substitute training"};
    app.set_version_flag("--version", std::string(qsynth::kVersion));
    app.require_subcommand(1);

    Options o;
    auto* gen = app.add_subcommand("gen-data", "generate train.epo and test.epo");
    add_common(gen, o, false, false);
    auto* tt = app.add_subcommand("train-target", "train the target model and write target.json");
    add_common(tt, o, false, false);
    auto* atk = app.add_subcommand("attack", "train a substitute, attack the target, write results and traces");
    add_common(atk, o, true, true);
    auto* sw = app.add_subcommand("sweep", "attacked accuracy over the configured budgets");
    add_common(sw, o, true, true);
    auto* rep = app.add_subcommand("report", "aggregate results.csv / runs.csv files");
    rep->add_option("--out", o.out, "directory holding results.csv or runs.csv");
    rep->add_option("files", o.files, "results files");
    auto* conv = app.add_subcommand("convert", "convert delimited text epochs to an epoch file");
    conv->add_option("--input", o.input, "text file: C*T values then the label per row")->required();
    conv->add_option("--shape", o.shape, "epoch shape as CxT")->required();
    conv->add_option("--delimiter", o.delimiter, "field delimiter: a character, 'space' or 'tab'");
    conv->add_option("--out", o.out, "output epoch file");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen_data(o);
        if (tt->parsed()) return cmd_train_target(o);
        if (atk->parsed()) return cmd_attack(o);
        if (sw->parsed()) return cmd_sweep(o);
        if (rep->parsed()) return cmd_report(o);
        if (conv->parsed()) return cmd_convert(o);
    } catch (const std::exception& e) {
        // Config errors raised before a manifest exists.
        std::cerr << "qsynth: error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
