// Command-line front end: generate reference data, learn cross-process
// edges, fit/sample pipeline models, score structure learners, and report
// marginal fidelity. Exit codes: 0 success, 2 input/schema errors,
// 3 numerical failures.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "causalsynth/discovery.hpp"
#include "causalsynth/metrics.hpp"
#include "causalsynth/refline.hpp"
#include "causalsynth/spam.hpp"
#include "causalsynth/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace causal;

namespace {

LineConfig line_config_from_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError(IoError::Kind::open, "cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError(IoError::Kind::parse, path + ": " + e.what());
    }
    LineConfig config;
    try {
        if (j.contains("station_node_counts"))
            config.station_node_counts = j["station_node_counts"].get<std::vector<int>>();
        if (j.contains("processes_per_station"))
            config.processes_per_station = j["processes_per_station"].get<int>();
        if (j.contains("within_process_edge_density"))
            config.within_process_edge_density = j["within_process_edge_density"].get<double>();
        if (j.contains("cross_edge_density"))
            config.cross_edge_density = j["cross_edge_density"].get<double>();
        if (j.contains("mechanism_fraction"))
            config.mechanism_fraction = j["mechanism_fraction"].get<double>();
        if (j.contains("mechanism_family")) {
            const auto name = j["mechanism_family"].get<std::string>();
            if (name == "linear")
                config.mechanism_family = LineConfig::Mechanism::linear;
            else if (name == "spline-nonlinear")
                config.mechanism_family = LineConfig::Mechanism::spline_nonlinear;
            else if (name == "mixed")
                config.mechanism_family = LineConfig::Mechanism::mixed;
            else
                throw InputError("unknown mechanism_family: " + name);
        }
        if (j.contains("noise_family")) {
            const auto name = j["noise_family"].get<std::string>();
            if (name == "gaussian")
                config.noise_family = LineConfig::Noise::gaussian;
            else if (name == "uniform")
                config.noise_family = LineConfig::Noise::uniform;
            else if (name == "mixed")
                config.noise_family = LineConfig::Noise::mixed;
            else
                throw InputError("unknown noise_family: " + name);
        }
    } catch (const json::exception& e) {
        throw IoError(IoError::Kind::parse, path + ": " + e.what());
    }
    return config;
}

void write_json_file(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError(IoError::Kind::open, "cannot write " + path);
    out << j.dump(2) << '\n';
    if (!out) throw IoError(IoError::Kind::open, "write failed: " + path);
}

std::string cells_path(const std::string& base, int station) {
    const fs::path p(base);
    fs::path out = p.parent_path() / (p.stem().string() + "_station" + std::to_string(station) +
                                      p.extension().string());
    return out.string();
}

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : csv) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

struct BenchmarkRow {
    std::string algorithm;
    int run = 0;
    std::uint64_t seed = 0;
    std::size_t n = 0;
    bool standardized = true;
    StructuralScore score;
    double varsortability_value = 0.0;
    double wall_time_seconds = 0.0;
};

int cmd_genref(const std::string& config_path, const std::string& out_dir, std::uint64_t seed,
               std::size_t rows) {
    LineConfig config = config_path.empty() ? LineConfig{} : line_config_from_json(config_path);
    config.seed = seed;
    const auto line = generate_line(config, rows);
    fs::create_directories(out_dir);
    line.data.write_csv((fs::path(out_dir) / "data.csv").string());
    save_layered_dag_json(line.truth, (fs::path(out_dir) / "truth.json").string());
    save_prior_json(line.prior, (fs::path(out_dir) / "prior.json").string());
    std::cout << "wrote " << line.data.rows() << " rows x " << line.data.cols() << " columns, "
              << line.truth.edges().size() << " truth edges\n";
    return 0;
}

int cmd_learn_edges(const std::string& data_path, const std::string& prior_path,
                    const std::string& out_dir, std::uint64_t seed, bool naive) {
    const auto data = DatasetTable::read_csv(data_path);
    const auto prior = load_prior_json(prior_path);
    CrossLearnConfig config;
    config.seed = seed;
    config.mode = naive ? CrossLearnMode::naive : CrossLearnMode::with_prior;
    const auto across = learn_cross_process_edges(data, prior, config);
    const auto merged = merge_ground_truth(prior, across);
    fs::create_directories(out_dir);
    json cross_json;
    cross_json["edges"] = json::array();
    for (const auto& [src, dst] : across) cross_json["edges"].push_back(json::array({src, dst}));
    write_json_file(cross_json, (fs::path(out_dir) / "cross_edges.json").string());
    save_layered_dag_json(merged, (fs::path(out_dir) / "truth_merged.json").string());
    std::cout << "learned " << across.size() << " cross-process edges\n";
    return 0;
}

int cmd_fit(const std::string& data_path, const std::string& graph_path, const std::string& out_path,
            bool cells, std::uint64_t seed, const DrfConfig& drf) {
    const auto data = DatasetTable::read_csv(data_path);
    const auto dag = load_layered_dag_json(graph_path);
    PipelineConfig config;
    config.seed = seed;
    config.drf = drf;
    if (cells) {
        const auto models = fit_cell_pipelines(data, dag, config);
        for (const auto& [station, model] : models) {
            const auto path = cells_path(out_path, station);
            save_model(model, path);
            std::cout << "station " << station << ": " << model.dag().nodes().size() << " nodes -> "
                      << path << "\n";
        }
    } else {
        const auto model = fit_pipeline(data, dag, config);
        save_model(model, out_path);
        std::cout << model.sources().size() << " sources, " << model.conditionals().size()
                  << " forests -> " << out_path << "\n";
    }
    return 0;
}

int cmd_sample(const std::string& model_path, std::size_t rows, std::uint64_t seed,
               const std::string& out_path) {
    const auto model = load_model(model_path);
    Rng rng(seed);
    const auto table = sample(model, rows, rng);
    table.write_csv(out_path);
    std::cout << "wrote " << table.rows() << " rows x " << table.cols() << " columns\n";
    return 0;
}

int cmd_fidelity(const std::string& data_path, const std::string& model_path, std::size_t rows,
                 std::uint64_t seed, const std::string& out_path) {
    const auto data = DatasetTable::read_csv(data_path);
    const auto model = load_model(model_path);
    const auto fp = data_fingerprint(data, model.dag().nodes());
    if (fp != model.meta().data_fingerprint)
        throw InputError("data fingerprint does not match the model's training data");
    Rng rng(seed);
    const auto report = fidelity_report(data, model, rows, rng);
    save_fidelity_json(report, out_path);
    std::cout << "max non-source KS " << report.max_non_source << ", mean "
              << report.mean_non_source << " over " << report.entries.size() << " nodes\n";
    return 0;
}

int cmd_benchmark(const std::string& model_path, const std::string& truth_path,
                  const std::string& algorithms_csv, int runs, std::size_t n, bool standardize,
                  std::uint64_t seed, const std::string& out_path, std::string csv_path) {
    const auto model = load_model(model_path);
    const auto truth = load_layered_dag_json(truth_path).as_digraph();
    auto algorithms = split_list(algorithms_csv);
    if (algorithms.empty()) throw InputError("no algorithms requested");
    if (std::find(algorithms.begin(), algorithms.end(), "empty") == algorithms.end())
        algorithms.push_back("empty");  // reference point in every report
    if (runs < 1) throw InputError("runs must be >= 1");
    if (csv_path.empty()) {
        const fs::path p(out_path);
        csv_path = (p.parent_path() / (p.stem().string() + "_results.csv")).string();
    }

    std::vector<std::vector<BenchmarkRow>> per_run(static_cast<std::size_t>(runs));
    parallel_for(static_cast<std::size_t>(runs), [&](std::size_t run) {
        const std::uint64_t run_seed = Rng::derive_seed(seed, run * 64);
        Rng sample_rng(run_seed);
        const auto raw = sample(model, n, sample_rng);
        const auto data = standardize ? raw.standardized() : raw;
        const double vs = varsortability(data, truth);
        for (std::size_t a = 0; a < algorithms.size(); ++a) {
            BenchmarkRow row;
            row.algorithm = algorithms[a];
            row.run = static_cast<int>(run);
            row.seed = run_seed;
            row.n = n;
            row.standardized = standardize;
            row.varsortability_value = vs;
            Rng algo_rng(Rng::derive_seed(seed, run * 64 + 1 + a));
            const auto start = std::chrono::steady_clock::now();
            const auto learned = run_algorithm(algorithms[a], data, algo_rng);
            row.wall_time_seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            row.score = precision_recall_f1(truth, learned);
            per_run[run].push_back(std::move(row));
        }
    });

    json report;
    report["version"] = CAUSALSYNTH_VERSION;
    report["config"] = {{"data_model", model_path}, {"truth", truth_path},
                        {"algorithms", algorithms}, {"runs", runs},
                        {"n", n},                   {"standardize", standardize},
                        {"seed", seed},             {"out", out_path},
                        {"csv", csv_path}};
    report["runs"] = json::array();
    std::ofstream csv(csv_path);
    if (!csv) throw IoError(IoError::Kind::open, "cannot write " + csv_path);
    csv << "algorithm,run,n,standardized,varsortability,shd,precision,recall,f1,true_edges,learned_edges\n";
    char buf[64];
    auto fmt = [&buf](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    for (const auto& rows : per_run) {
        for (const auto& row : rows) {
            report["runs"].push_back({{"algorithm", row.algorithm},
                                      {"run", row.run},
                                      {"seed", row.seed},
                                      {"n", row.n},
                                      {"standardized", row.standardized},
                                      {"shd", row.score.shd},
                                      {"precision", row.score.precision},
                                      {"recall", row.score.recall},
                                      {"f1", row.score.f1},
                                      {"true_edges", row.score.true_edges},
                                      {"learned_edges", row.score.learned_edges},
                                      {"varsortability", row.varsortability_value},
                                      {"wall_time_seconds", row.wall_time_seconds}});
            csv << row.algorithm << ',' << row.run << ',' << row.n << ','
                << (row.standardized ? 1 : 0) << ',' << fmt(row.varsortability_value) << ','
                << row.score.shd << ',' << fmt(row.score.precision) << ',' << fmt(row.score.recall)
                << ',' << fmt(row.score.f1) << ',' << row.score.true_edges << ','
                << row.score.learned_edges << '\n';
        }
    }
    write_json_file(report, out_path);

    // per-algorithm summary table
    std::cout << "algorithm      mean_shd  mean_precision  mean_recall  mean_f1\n";
    for (const auto& algo : algorithms) {
        double shd_sum = 0, p_sum = 0, r_sum = 0, f_sum = 0;
        int count = 0;
        for (const auto& rows : per_run)
            for (const auto& row : rows)
                if (row.algorithm == algo) {
                    shd_sum += static_cast<double>(row.score.shd);
                    p_sum += row.score.precision;
                    r_sum += row.score.recall;
                    f_sum += row.score.f1;
                    ++count;
                }
        std::printf("%-14s %8.2f  %14.3f  %11.3f  %7.3f\n", algo.c_str(), shd_sum / count,
                    p_sum / count, r_sum / count, f_sum / count);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"semisynthetic assembly-line data generation and causal-discovery benchmarking"};
    app.require_subcommand(1);

    // genref
    std::string genref_config, genref_out;
    std::uint64_t genref_seed = 0;
    std::size_t genref_rows = 15581;
    auto* genref = app.add_subcommand("genref", "generate reference line data, truth, and prior");
    genref->add_option("--config", genref_config, "line config JSON (defaults when omitted)");
    genref->add_option("--out-dir", genref_out, "output directory")->required();
    genref->add_option("--seed", genref_seed, "master seed");
    genref->add_option("--rows", genref_rows, "sample size");

    // learn-edges
    std::string learn_data, learn_prior, learn_out;
    std::uint64_t learn_seed = 0;
    bool learn_naive = false;
    auto* learn = app.add_subcommand("learn-edges", "learn cross-process edges from data and prior");
    learn->add_option("--data", learn_data, "training CSV")->required();
    learn->add_option("--prior", learn_prior, "prior JSON")->required();
    learn->add_option("--out-dir", learn_out, "output directory")->required();
    learn->add_option("--seed", learn_seed, "cv fold seed");
    learn->add_flag("--naive", learn_naive, "diagnostic mode: ignore parents and mechanisms");

    // fit
    std::string fit_data, fit_graph, fit_out;
    bool fit_cells = false;
    std::uint64_t fit_seed = 0;
    DrfConfig fit_drf_config;
    auto* fit = app.add_subcommand("fit", "fit per-node conditionals along a ground-truth graph");
    fit->add_option("--data", fit_data, "training CSV")->required();
    fit->add_option("--graph", fit_graph, "ground-truth graph JSON")->required();
    fit->add_option("--out", fit_out, "model output path")->required();
    fit->add_flag("--cells", fit_cells, "fit one model per station");
    fit->add_option("--seed", fit_seed, "fit seed");
    fit->add_option("--trees", fit_drf_config.num_trees, "trees per forest");
    fit->add_option("--min-node-size", fit_drf_config.min_node_size, "minimum node size");
    fit->add_option("--fourier", fit_drf_config.num_fourier_features, "fourier features per split");
    fit->add_option("--mtry", fit_drf_config.mtry, "predictors per split (0 = sqrt)");
    fit->add_option("--subsample", fit_drf_config.subsample_fraction, "per-tree row fraction");

    // sample
    std::string sample_model, sample_out;
    std::size_t sample_rows = 500;
    std::uint64_t sample_seed = 0;
    auto* samp = app.add_subcommand("sample", "draw synthetic rows from a fitted model");
    samp->add_option("--model", sample_model, "model path")->required();
    samp->add_option("-n,--rows", sample_rows, "rows to draw")->required();
    samp->add_option("--seed", sample_seed, "sampling seed");
    samp->add_option("--out", sample_out, "output CSV")->required();

    // fidelity
    std::string fid_data, fid_model, fid_out;
    std::size_t fid_rows = 5000;
    std::uint64_t fid_seed = 0;
    auto* fid = app.add_subcommand("fidelity", "per-node KS distance of fresh samples vs data");
    fid->add_option("--data", fid_data, "training CSV")->required();
    fid->add_option("--model", fid_model, "model path")->required();
    fid->add_option("-n,--rows", fid_rows, "synthetic sample size");
    fid->add_option("--seed", fid_seed, "sampling seed");
    fid->add_option("--out", fid_out, "report JSON path")->required();

    // benchmark
    std::string bench_model, bench_truth, bench_algos = "pc,lingam,notears,snr", bench_out,
                bench_csv;
    int bench_runs = 100;
    std::size_t bench_n = 500;
    bool bench_standardize = true;
    std::uint64_t bench_seed = 0;
    auto* bench = app.add_subcommand("benchmark", "score structure learners on fresh samples");
    bench->add_option("--data-model", bench_model, "fitted model path")->required();
    bench->add_option("--truth", bench_truth, "ground-truth graph JSON")->required();
    bench->add_option("--algorithms", bench_algos, "comma-separated registry keys");
    bench->add_option("--runs", bench_runs, "simulation runs");
    bench->add_option("-n,--rows", bench_n, "sample size per run");
    bench->add_flag("--standardize,!--no-standardize", bench_standardize,
                    "z-score data before learning (default on)");
    bench->add_option("--seed", bench_seed, "master seed");
    bench->add_option("--out", bench_out, "report JSON path")->required();
    bench->add_option("--csv", bench_csv, "results CSV path (default: alongside the report)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (genref->parsed()) return cmd_genref(genref_config, genref_out, genref_seed, genref_rows);
        if (learn->parsed())
            return cmd_learn_edges(learn_data, learn_prior, learn_out, learn_seed, learn_naive);
        if (fit->parsed())
            return cmd_fit(fit_data, fit_graph, fit_out, fit_cells, fit_seed, fit_drf_config);
        if (samp->parsed()) return cmd_sample(sample_model, sample_rows, sample_seed, sample_out);
        if (fid->parsed()) return cmd_fidelity(fid_data, fid_model, fid_rows, fid_seed, fid_out);
        if (bench->parsed())
            return cmd_benchmark(bench_model, bench_truth, bench_algos, bench_runs, bench_n,
                                 bench_standardize, bench_seed, bench_out, bench_csv);
    } catch (const NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
