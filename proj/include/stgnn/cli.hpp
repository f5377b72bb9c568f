#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "stgnn/checkpoint.hpp"
#include "stgnn/dataio.hpp"
#include "stgnn/graph.hpp"
#include "stgnn/interpret.hpp"
#include "stgnn/metrics.hpp"
#include "stgnn/model.hpp"
#include "stgnn/train.hpp"

namespace stgnn {

// Configuration or argument problems: reported on one line, exit code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Run configuration: flat key = value file plus flag overrides
// ---------------------------------------------------------------------------

struct RunConfig {
    // data source: CSV paths when meter_csv is set, synthetic otherwise
    std::string meter_csv, weather_csv, metadata_csv;
    std::vector<std::string> buildings;
    int max_gap = 24;
    int synth_clusters = 3;
    int synth_per_cluster = 4;
    int synth_length = 2000;
    double synth_noise = 0.05;

    // model
    int conv_channels = 16;
    int gcn_blocks = 4;
    int gcn_depth = 2;
    int gru_layers = 2;
    int gru_dim = 16;
    int att_dim = 32;
    int embed_dim = 16;
    int k = 0;  // 0 = N-dependent default
    double dropout = 0.3;
    std::string variant = "att_gcn";  // att_gcn | plain_gcn | gru | fcnn | naive

    // training
    double lr = 0.001;
    int batch_size = 32;
    int epochs = 100;
    int T = 12;
    int M = 1;

    // experiments
    int trials = 5;

    // run plumbing
    uint64_t seed = 0;
    bool seed_set = false;
    std::string out = "out";
    std::string checkpoint;  // default: <out>/checkpoint.txt

    std::string checkpoint_path() const {
        return checkpoint.empty() ? out + "/checkpoint.txt" : checkpoint;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline int parse_int(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        const int r = std::stoi(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw UsageError("config: '" + key + "' expects an integer, got '" + v + "'");
    }
}

inline double parse_real(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        const double r = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw UsageError("config: '" + key + "' expects a number, got '" + v + "'");
    }
}

inline uint64_t parse_u64(const std::string& key, const std::string& v) {
    try {
        // stoull accepts and wraps negative input, so reject it up front
        if (v.find('-') != std::string::npos) throw std::invalid_argument(v);
        size_t pos = 0;
        const uint64_t r = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw UsageError("config: '" + key + "' expects an unsigned integer, got '" + v + "'");
    }
}

inline std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace detail

inline void apply_config_entry(RunConfig& rc, const std::string& key, const std::string& value) {
    using detail::parse_int;
    using detail::parse_real;
    using detail::parse_u64;
    if (key == "meter_csv") rc.meter_csv = value;
    else if (key == "weather_csv") rc.weather_csv = value;
    else if (key == "metadata_csv") rc.metadata_csv = value;
    else if (key == "buildings") rc.buildings = detail::split_list(value);
    else if (key == "max_gap") rc.max_gap = parse_int(key, value);
    else if (key == "synth_clusters") rc.synth_clusters = parse_int(key, value);
    else if (key == "synth_per_cluster") rc.synth_per_cluster = parse_int(key, value);
    else if (key == "synth_length") rc.synth_length = parse_int(key, value);
    else if (key == "synth_noise") rc.synth_noise = parse_real(key, value);
    else if (key == "conv_channels") rc.conv_channels = parse_int(key, value);
    else if (key == "gcn_blocks") rc.gcn_blocks = parse_int(key, value);
    else if (key == "gcn_depth") rc.gcn_depth = parse_int(key, value);
    else if (key == "gru_layers") rc.gru_layers = parse_int(key, value);
    else if (key == "gru_dim") rc.gru_dim = parse_int(key, value);
    else if (key == "att_dim") rc.att_dim = parse_int(key, value);
    else if (key == "embed_dim") rc.embed_dim = parse_int(key, value);
    else if (key == "k") rc.k = parse_int(key, value);
    else if (key == "dropout") rc.dropout = parse_real(key, value);
    else if (key == "variant") rc.variant = value;
    else if (key == "lr") rc.lr = parse_real(key, value);
    else if (key == "batch_size") rc.batch_size = parse_int(key, value);
    else if (key == "epochs") rc.epochs = parse_int(key, value);
    else if (key == "T") rc.T = parse_int(key, value);
    else if (key == "M") rc.M = parse_int(key, value);
    else if (key == "trials") rc.trials = parse_int(key, value);
    else if (key == "seed") {
        rc.seed = parse_u64(key, value);
        rc.seed_set = true;
    } else if (key == "out") rc.out = value;
    else if (key == "checkpoint") rc.checkpoint = value;
    else throw UsageError("config: unknown key '" + key + "'");
}

inline void load_config_file(RunConfig& rc, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("config file not found: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError("config: line " + std::to_string(lineno) +
                             " is not 'key = value': " + line);
        apply_config_entry(rc, detail::trim(line.substr(0, eq)),
                           detail::trim(line.substr(eq + 1)));
    }
}

inline void validate_run_config(const RunConfig& rc, const std::string& command) {
    static const std::vector<std::string> variants{"att_gcn", "plain_gcn", "gru", "fcnn",
                                                   "naive"};
    bool ok = false;
    for (const auto& v : variants) ok = ok || v == rc.variant;
    if (!ok) throw UsageError("unknown variant '" + rc.variant +
                              "' (expected att_gcn, plain_gcn, gru, fcnn or naive)");
    if (!rc.seed_set && command != "gradcheck")
        throw UsageError("seed is required: pass --seed or set 'seed' in the config");
    if (rc.T < 1 || rc.M < 1) throw UsageError("T and M must be positive");
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

inline uint64_t fnv1a_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("manifest: cannot hash missing file " + path);
    uint64_t h = 14695981039346656037ULL;
    char buf[65536];
    while (in.read(buf, sizeof(buf)), in.gcount() > 0)
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
    return h;
}

inline std::vector<std::pair<std::string, std::string>> config_echo(const RunConfig& rc) {
    auto join = [](const std::vector<std::string>& v) {
        std::string s;
        for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
        return s;
    };
    return {{"meter_csv", rc.meter_csv},
            {"weather_csv", rc.weather_csv},
            {"metadata_csv", rc.metadata_csv},
            {"buildings", join(rc.buildings)},
            {"max_gap", std::to_string(rc.max_gap)},
            {"synth_clusters", std::to_string(rc.synth_clusters)},
            {"synth_per_cluster", std::to_string(rc.synth_per_cluster)},
            {"synth_length", std::to_string(rc.synth_length)},
            {"synth_noise", format_double(rc.synth_noise)},
            {"conv_channels", std::to_string(rc.conv_channels)},
            {"gcn_blocks", std::to_string(rc.gcn_blocks)},
            {"gcn_depth", std::to_string(rc.gcn_depth)},
            {"gru_layers", std::to_string(rc.gru_layers)},
            {"gru_dim", std::to_string(rc.gru_dim)},
            {"att_dim", std::to_string(rc.att_dim)},
            {"embed_dim", std::to_string(rc.embed_dim)},
            {"k", std::to_string(rc.k)},
            {"dropout", format_double(rc.dropout)},
            {"variant", rc.variant},
            {"lr", format_double(rc.lr)},
            {"batch_size", std::to_string(rc.batch_size)},
            {"epochs", std::to_string(rc.epochs)},
            {"T", std::to_string(rc.T)},
            {"M", std::to_string(rc.M)},
            {"trials", std::to_string(rc.trials)},
            {"seed", std::to_string(rc.seed)},
            {"out", rc.out},
            {"checkpoint", rc.checkpoint_path()}};
}

// Written once per run: resolved config, seed, and a hash per artifact.
inline void write_manifest(const std::string& command, const RunConfig& rc,
                           const std::vector<std::string>& artifacts) {
    const std::string path = rc.out + "/manifest_" + command + ".txt";
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write manifest " + path);
    out << "command = " << command << "\n";
    for (const auto& [k, v] : config_echo(rc)) out << k << " = " << v << "\n";
    char hex[32];
    for (const auto& a : artifacts) {
        std::snprintf(hex, sizeof(hex), "%016llx",
                      static_cast<unsigned long long>(fnv1a_file(rc.out + "/" + a)));
        out << "hash." << a << " = " << hex << "\n";
    }
}

// ---------------------------------------------------------------------------
// Data loading shared by the commands
// ---------------------------------------------------------------------------

struct LoadedData {
    BuildingDataset ds;
    std::vector<std::string> ids;
    std::vector<int> synth_labels;  // empty for CSV data
};

inline LoadedData load_run_data(const RunConfig& rc) {
    namespace fs = std::filesystem;
    LoadedData out;
    if (!rc.meter_csv.empty()) {
        const std::vector<std::pair<std::string, std::string>> inputs = {
            {"meter CSV", rc.meter_csv},
            {"weather CSV", rc.weather_csv},
            {"metadata CSV", rc.metadata_csv}};
        for (const auto& [label, path] : inputs) {
            if (path.empty()) throw UsageError(label + " path is not set");
            if (!fs::exists(path)) throw UsageError(label + " not found: " + path);
        }
        if (rc.buildings.empty())
            throw UsageError("CSV data needs a 'buildings' list (config or --buildings)");
        try {
            std::vector<BuildingSeries> series =
                load_bdg2(rc.meter_csv, rc.weather_csv, rc.metadata_csv, rc.buildings,
                          rc.max_gap);
            for (auto& s : series) s = clean_series(s, rc.max_gap);
            out.ds = build_dataset(series);
        } catch (const std::exception& e) {
            throw UsageError(e.what());
        }
        out.ids = rc.buildings;
    } else {
        SynthResult synth = synth_generate(rc.synth_clusters, rc.synth_per_cluster,
                                           rc.synth_length, rc.synth_noise, rc.seed);
        out.ds = std::move(synth.dataset);
        out.synth_labels = std::move(synth.labels);
        for (const auto& s : synth.series) out.ids.push_back(s.building_id);
    }
    return out;
}

inline SampleSplit windows_and_split(const BuildingDataset& ds, const RunConfig& rc) {
    std::vector<SpatioTemporalSample> samples = make_windows(ds, rc.T, rc.M);
    if (samples.size() < 3)
        throw UsageError("series of length " + std::to_string(ds.L) +
                         " is too short for T=" + std::to_string(rc.T) +
                         ", M=" + std::to_string(rc.M));
    return split_chrono(std::move(samples));
}

inline ModelConfig model_config_from_run(const RunConfig& rc, int N, int d) {
    ModelConfig mc;
    mc.N = N;
    mc.d = d;
    mc.T = rc.T;
    mc.M = rc.M;
    mc.conv_channels = rc.conv_channels;
    mc.gcn_blocks = rc.gcn_blocks;
    mc.gcn_depth = rc.gcn_depth;
    mc.gru_layers = rc.gru_layers;
    mc.gru_dim = rc.gru_dim;
    mc.att_dim = rc.att_dim;
    mc.embed_dim = rc.embed_dim;
    mc.k = rc.k;
    mc.dropout_p = rc.dropout;
    mc.variant = variant_from_string(rc.variant);
    return mc;
}

inline TrainConfig train_config_from_run(const RunConfig& rc) {
    TrainConfig tc;
    tc.lr = rc.lr;
    tc.batch_size = rc.batch_size;
    tc.epochs = rc.epochs;
    tc.dropout_p = rc.dropout;
    tc.seed = rc.seed;
    tc.T = rc.T;
    tc.M = rc.M;
    tc.k = rc.k;
    return tc;
}

inline Checkpoint load_checkpoint_for(const RunConfig& rc) {
    if (!std::filesystem::exists(rc.checkpoint_path()))
        throw UsageError("checkpoint not found: " + rc.checkpoint_path() +
                         " (run 'train' first or set 'checkpoint')");
    return load_checkpoint(rc.checkpoint_path());
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

inline int cmd_synth(const RunConfig& rc) {
    SynthResult synth = synth_generate(rc.synth_clusters, rc.synth_per_cluster, rc.synth_length,
                                       rc.synth_noise, rc.seed);
    write_dataset_csv(rc.out, synth.series);
    std::vector<std::vector<std::string>> rows;
    for (size_t i = 0; i < synth.series.size(); ++i)
        rows.push_back({synth.series[i].building_id, std::to_string(synth.labels[i])});
    write_csv(rc.out + "/labels.csv", {"building_id", "cluster"}, rows);
    write_manifest("synth", rc, {"meter.csv", "weather.csv", "metadata.csv", "labels.csv"});
    std::cout << "synth: wrote " << synth.series.size() << " buildings x " << rc.synth_length
              << " hours to " << rc.out << "\n";
    return 0;
}

inline int cmd_train(const RunConfig& rc) {
    if (rc.variant == "naive")
        throw UsageError("variant 'naive' has no parameters to train; use 'evaluate'");
    LoadedData data = load_run_data(rc);
    SampleSplit split = windows_and_split(data.ds, rc);
    std::vector<std::string> artifacts;

    if (rc.variant == "att_gcn" || rc.variant == "plain_gcn") {
        AttGcnModel model(model_config_from_run(rc, data.ds.N, data.ds.d), &data.ds, rc.seed);
        const TrainHistory history = train(model, split, train_config_from_run(rc));
        write_history_csv(rc.out + "/history.csv", history);
        save_checkpoint(rc.checkpoint_path(), make_model_checkpoint(model, data.ids));
        artifacts = {"history.csv"};
        std::cout << "train: best val MSE " << format_double(history.best_val_mse)
                  << " at epoch " << history.best_epoch << "\n";
    } else {
        const BaselineKind kind =
            rc.variant == "gru" ? BaselineKind::gru_only : BaselineKind::fcnn;
        BaselineResult res = train_baseline(kind, split, data.ids, train_config_from_run(rc));
        for (size_t i = 0; i < res.histories.size(); ++i) {
            const std::string name = "history_" + data.ids[i] + ".csv";
            write_history_csv(rc.out + "/" + name, res.histories[i]);
            artifacts.push_back(name);
        }
        save_checkpoint(rc.checkpoint_path(),
                        make_baseline_checkpoint(kind, res.gru_models, res.fcnn_models,
                                                 data.ids));
        std::cout << "train: test MSE " << format_double(res.report.overall.mse) << " over "
                  << data.ids.size() << " buildings\n";
    }
    if (rc.checkpoint_path().rfind(rc.out + "/", 0) == 0)
        artifacts.push_back(rc.checkpoint_path().substr(rc.out.size() + 1));
    write_manifest("train", rc, artifacts);
    return 0;
}

inline int cmd_evaluate(const RunConfig& rc) {
    LoadedData data = load_run_data(rc);
    SampleSplit split = windows_and_split(data.ds, rc);

    PooledPredictions pooled;
    if (rc.variant == "naive") {
        pooled = collect_naive(split.test);
    } else {
        Checkpoint cp = load_checkpoint_for(rc);
        if (cp.building_ids != data.ids)
            throw UsageError("checkpoint buildings do not match the dataset; "
                             "use 'predict' for new building sets");
        const std::string& kind = cp.get("kind");
        if (kind == "att_gcn" || kind == "plain_gcn") {
            AttGcnModel model = model_from_checkpoint(cp);
            pooled = collect_predictions(model, split.test);
        } else {
            BaselineModels models = baseline_from_checkpoint(cp);
            pooled = baseline_predictions(models.kind, models.gru_models, models.fcnn_models,
                                          split.test);
        }
    }
    const MetricsReport rep = metrics(pooled.yhat, pooled.y, data.ids);
    write_metrics_csv(rc.out + "/metrics.csv", rep);
    write_manifest("evaluate", rc, {"metrics.csv"});
    std::cout << "evaluate: test MSE " << format_double(rep.overall.mse) << ", MAE "
              << format_double(rep.overall.mae) << "\n";
    return 0;
}

inline int cmd_predict(const RunConfig& rc) {
    LoadedData data = load_run_data(rc);
    Checkpoint cp = load_checkpoint_for(rc);
    const std::string& kind = cp.get("kind");
    if (kind != "att_gcn" && kind != "plain_gcn")
        throw UsageError("predict requires a graph-model checkpoint, got '" + kind + "'");

    const bool same_buildings = cp.building_ids == data.ids;
    AttGcnModel model =
        model_from_checkpoint(cp, same_buildings ? nullptr : &data.ds, rc.seed);
    if (data.ds.L < model.cfg.T)
        throw UsageError("dataset has " + std::to_string(data.ds.L) +
                         " hours, fewer than the model window T=" +
                         std::to_string(model.cfg.T));

    std::vector<DenseMatrix> x;
    for (int t = data.ds.L - model.cfg.T; t < data.ds.L; ++t) x.push_back(data.ds.step(t));
    const DenseMatrix pred = model.predict(x);

    std::vector<std::vector<std::string>> rows;
    for (int n = 0; n < data.ds.N; ++n)
        for (int m = 0; m < model.cfg.M; ++m) {
            const double load = data.ds.scalers[n][0].inverse(pred(m, n));
            rows.push_back({data.ids[n], std::to_string(m + 1),
                            format_timestamp(data.ds.timestamps.back() + m + 1),
                            format_double(load)});
        }
    write_csv(rc.out + "/predictions.csv", {"building_id", "step", "timestamp", "load"}, rows);
    write_manifest("predict", rc, {"predictions.csv"});
    std::cout << "predict: wrote " << rows.size() << " rows"
              << (same_buildings ? "" : " (fresh embeddings for a new building set)") << "\n";
    return 0;
}

inline int cmd_robustness(const RunConfig& rc) {
    LoadedData data = load_run_data(rc);
    SampleSplit split = windows_and_split(data.ds, rc);
    Checkpoint cp = load_checkpoint_for(rc);
    const std::string& kind = cp.get("kind");
    if (kind != "att_gcn" && kind != "plain_gcn")
        throw UsageError("robustness requires a graph-model checkpoint, got '" + kind + "'");
    if (cp.building_ids != data.ids)
        throw UsageError("checkpoint buildings do not match the dataset");

    AttGcnModel model = model_from_checkpoint(cp);
    const auto rows = shuffle_robustness(model, split.test, rc.seed, rc.trials);
    write_robustness_csv(rc.out + "/robustness.csv", rows);
    write_manifest("robustness", rc, {"robustness.csv"});
    std::cout << "robustness: MSE " << format_double(rows.front().mse) << " at 0% -> "
              << format_double(rows.back().mse) << " at 100%\n";
    return 0;
}

inline int cmd_interpret(const RunConfig& rc) {
    LoadedData data = load_run_data(rc);
    Checkpoint cp = load_checkpoint_for(rc);
    const std::string& kind = cp.get("kind");
    if (kind != "att_gcn" && kind != "plain_gcn")
        throw UsageError("interpret requires a graph-model checkpoint, got '" + kind + "'");
    if (cp.building_ids != data.ids)
        throw UsageError("checkpoint buildings do not match the dataset");

    AttGcnModel model = model_from_checkpoint(cp);
    const AdjacencyMatrix adj = model.current_graph();
    write_adjacency_sparse(rc.out + "/adjacency_sparse.csv", adj.A);
    write_adjacency_dense(rc.out + "/adjacency_dense.csv", adj.A);

    const ClusterAssignment conn = connectivity_clusters(adj.A);
    const DenseMatrix X = building_feature_matrix(data.ds);
    const SilhouetteScan scan = select_k_by_silhouette(X, rc.seed);
    const KMeansResult km =
        kmeans(X, scan.best_k, derive_seed(rc.seed, 100 + static_cast<uint64_t>(scan.best_k)));
    write_clusters_csv(rc.out + "/clusters.csv", data.ids, conn, km.assignment);
    write_silhouette_csv(rc.out + "/silhouette.csv", scan);
    write_manifest("interpret", rc,
                   {"adjacency_sparse.csv", "adjacency_dense.csv", "clusters.csv",
                    "silhouette.csv"});
    std::cout << "interpret: " << conn.k << " connectivity components, k*=" << scan.best_k
              << " by silhouette " << format_double(scan.best_score) << "\n";
    return 0;
}

inline int cmd_gradcheck(const RunConfig& rc) {
    const GradCheckReport report = tiny_model_gradcheck(rc.seed_set ? rc.seed : 9);
    for (const auto& e : report.entries)
        std::printf("%-24s max rel err %.3e  max |grad| %.3e\n", e.name.c_str(),
                    e.max_rel_err, e.max_abs_grad);
    std::printf("max relative error %.3e (tolerance 1e-4): %s\n", report.max_rel_err,
                report.max_rel_err < 1e-4 ? "PASS" : "FAIL");
    write_manifest("gradcheck", rc, {});
    return report.max_rel_err < 1e-4 ? 0 : 1;
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

inline int run_command(const std::string& command, const RunConfig& rc) {
    std::filesystem::create_directories(rc.out);
    if (command == "synth") return cmd_synth(rc);
    if (command == "train") return cmd_train(rc);
    if (command == "evaluate") return cmd_evaluate(rc);
    if (command == "predict") return cmd_predict(rc);
    if (command == "robustness") return cmd_robustness(rc);
    if (command == "interpret") return cmd_interpret(rc);
    if (command == "gradcheck") return cmd_gradcheck(rc);
    throw UsageError("unknown command '" + command + "'");
}

inline int cli_main(int argc, char** argv) {
    CLI::App app{"spatio-temporal graph forecaster for building energy loads"};
    app.fallthrough(true);
    app.require_subcommand(1);

    std::string config_path, seed, out, variant, buildings, k;
    app.add_option("--config", config_path, "flat key = value configuration file");
    app.add_option("--seed", seed, "RNG seed (required except for gradcheck)");
    app.add_option("--out", out, "output directory (default: out)");
    app.add_option("--variant", variant, "att_gcn | plain_gcn | gru | fcnn | naive");
    app.add_option("--buildings", buildings, "comma-separated building ids");
    app.add_option("--k", k, "neighbours kept per node in the learned adjacency");

    app.add_subcommand("synth", "generate a synthetic multi-building dataset");
    app.add_subcommand("train", "fit the selected variant and save a checkpoint");
    app.add_subcommand("evaluate", "score a checkpoint on the chronological test split");
    app.add_subcommand("predict", "forecast the steps after the end of the series");
    app.add_subcommand("robustness", "input-shuffle robustness sweep for a graph model");
    app.add_subcommand("interpret", "export the learned graph and cluster structure");
    app.add_subcommand("gradcheck", "finite-difference check of the model gradients");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << "error: " << e.get_name() << ": " << e.what() << "\n";
        return 2;
    }

    try {
        RunConfig rc;
        if (!config_path.empty()) load_config_file(rc, config_path);
        if (!seed.empty()) apply_config_entry(rc, "seed", seed);
        if (!out.empty()) apply_config_entry(rc, "out", out);
        if (!variant.empty()) apply_config_entry(rc, "variant", variant);
        if (!buildings.empty()) apply_config_entry(rc, "buildings", buildings);
        if (!k.empty()) apply_config_entry(rc, "k", k);
        const std::string command = app.get_subcommands().front()->get_name();
        validate_run_config(rc, command);
        return run_command(command, rc);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace stgnn
