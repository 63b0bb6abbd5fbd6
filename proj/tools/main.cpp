// Command line front end: dataset generation, training, evaluation,
// ensembling, component sweeps and gradient checking.

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vidcls/ensemble.hpp"
#include "vidcls/gradcheck.hpp"
#include "vidcls/sweep.hpp"
#include "vidcls/trainer.hpp"

namespace {

using namespace vidcls;

std::string split_path(const std::string& dir, const std::string& split) {
    return dir + "/" + split + ".y8ms";
}

Dataset load_split(const std::string& dir, const std::string& split) {
    return read_dataset(split_path(dir, split));
}

std::vector<std::string> split_commas(const std::string& joined) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= joined.size()) {
        auto comma = joined.find(',', start);
        if (comma == std::string::npos) {
            out.push_back(joined.substr(start));
            break;
        }
        out.push_back(joined.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

void print_metrics_header() { std::cout << "step,lr,train_loss,val_gap\n"; }

void print_metrics(std::ostream& os, const MetricsRecord& rec) {
    char line[160];
    std::snprintf(line, sizeof(line), "%lld,%.8g,%.8g,%.8g\n",
                  static_cast<long long>(rec.step), rec.lr, rec.train_loss, rec.val_gap);
    os << line;
}

int cmd_generate(const std::string& spec_path, const std::string& out_dir) {
    auto spec = dataset_spec_from_json_file(spec_path);
    auto splits = generate_dataset(spec);
    write_dataset(splits.train, split_path(out_dir, "train"));
    write_dataset(splits.validate, split_path(out_dir, "validate"));
    write_dataset(splits.test, split_path(out_dir, "test"));
    std::cout << "train=" << splits.train.videos.size()
              << " validate=" << splits.validate.videos.size()
              << " test=" << splits.test.videos.size() << " classes=" << spec.num_classes
              << " feature_dim=" << spec.feature_dim << "\n";
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& data_dir,
              const std::string& out_path, const std::string& log_path,
              const std::string& label_matrix_out) {
    auto cfg = config_from_json_file(config_path);
    auto train = load_split(data_dir, "train");
    auto validate = load_split(data_dir, "validate");
    if (cfg.merge_validation) {
        for (auto& v : validate.videos) train.videos.push_back(std::move(v));
        validate.videos.clear();
    }

    RngStream rng(cfg.seed);
    Model model = Model::build(cfg, rng);
    model.attach_train_data(train);

    AdamConfig adam_cfg;
    adam_cfg.learning_rate = cfg.learning_rate;
    adam_cfg.decay_rate = cfg.decay_rate;
    adam_cfg.decay_steps = cfg.decay_steps;
    AdamOptimizer opt(model.parameters(), adam_cfg);

    std::ofstream log;
    if (!log_path.empty()) {
        log.open(log_path, std::ios::trunc);
        if (!log) throw FormatError("cannot open " + log_path + " for writing");
        log << "step,lr,train_loss,val_gap\n";
    }
    print_metrics_header();
    auto sink = [&](const MetricsRecord& rec) {
        print_metrics(std::cout, rec);
        if (log) print_metrics(log, rec);
    };

    auto result = train_model(model, opt, train, validate, sink);
    save_checkpoint(out_path, model, opt);
    if (!label_matrix_out.empty()) {
        if (!model.correlation().frozen) {
            throw ConfigError("label layer disabled; no correlation matrix to write");
        }
        write_correlation(*model.correlation().frozen, label_matrix_out);
    }
    std::cout << "steps=" << result.steps << " final_val_gap=" << result.final_gap
              << " checkpoint=" << out_path << "\n";
    return 0;
}

int cmd_evaluate(const std::string& ckpt_path, const std::string& data_dir,
                 const std::string& split, int k, const std::string& csv_path) {
    auto loaded = load_checkpoint(ckpt_path);
    auto data = load_split(data_dir, split);
    if (data.num_classes != loaded.model.config().num_classes ||
        data.feature_dim != loaded.model.config().feature_dim) {
        throw ConfigError("checkpoint dims (C=" + std::to_string(loaded.model.config().num_classes) +
                          ", D=" + std::to_string(loaded.model.config().feature_dim) +
                          ") do not match dataset (C=" + std::to_string(data.num_classes) +
                          ", D=" + std::to_string(data.feature_dim) + ")");
    }
    auto result = evaluate_model(loaded.model, data, k);
    if (!csv_path.empty()) write_predictions_csv(result.predictions, csv_path);
    char line[64];
    std::snprintf(line, sizeof(line), "gap=%.6f\n", result.gap);
    std::cout << line;
    return 0;
}

int cmd_ensemble(const std::string& inputs, const std::string& out, int k) {
    auto paths = split_commas(inputs);
    if (paths.empty() || paths[0].empty()) throw ConfigError("--inputs needs at least one CSV");
    ensemble_csv_files(paths, out, k);
    std::cout << "members=" << paths.size() << " out=" << out << "\n";
    return 0;
}

int cmd_sweep(const std::string& base_path, const std::string& component,
              const std::string& candidates_path, const std::string& data_dir,
              const std::string& out_path) {
    auto base = config_from_json_file(base_path);
    auto candidates = read_candidates_file(candidates_path);
    auto train = load_split(data_dir, "train");
    auto validate = load_split(data_dir, "validate");
    auto report = greedy_sweep(base, component, candidates, train, validate);
    auto csv = format_report_csv(report);
    std::cout << csv;
    if (!out_path.empty()) {
        std::ofstream os(out_path, std::ios::trunc);
        if (!os) throw FormatError("cannot open " + out_path + " for writing");
        os << csv;
    }
    for (const auto& row : report.rows) {
        if (row.failed) return 2;  // results printed, but a member run failed
    }
    return 0;
}

int cmd_gradcheck(const std::string& config_path, GradCheckDims dims, double tol,
                  std::uint64_t seed) {
    ModelConfig cfg = config_path.empty() ? ModelConfig{} : config_from_json_file(config_path);
    auto report = run_gradcheck(cfg, dims, seed);
    for (const auto& group : report.groups) {
        char line[160];
        std::snprintf(line, sizeof(line), "%-24s coords=%-6zu rel_err=%.3e\n", group.name.c_str(),
                      group.coords, group.rel_err);
        std::cout << line;
    }
    std::cout << "max_rel_err=" << report.max_rel_err << " tol=" << tol << " "
              << (report.passed(tol) ? "PASS" : "FAIL") << "\n";
    return report.passed(tol) ? 0 : 1;
}

int cmd_stats(const std::string& data_dir, const std::string& split, const std::string& out_dir,
              const std::string& lgc_path) {
    auto data = load_split(data_dir, split);
    auto stats = label_stats(data);
    write_label_stats_csv(stats, out_dir + "/label_stats.csv");
    write_cooccurrence_csv(data, out_dir + "/cooccurrence.csv");
    if (!lgc_path.empty()) {
        auto cm = build_correlation(build_cooccurrence(data));
        write_correlation(*cm.frozen, lgc_path);
    }
    std::cout << "videos=" << data.videos.size() << " classes=" << data.num_classes
              << " out=" << out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-label video sequence classification toolkit"};
    app.require_subcommand(1);

    std::string spec_path, out_dir;
    auto* generate = app.add_subcommand("generate", "synthesize a dataset from a spec");
    generate->add_option("--spec", spec_path, "dataset spec JSON")->required();
    generate->add_option("--out", out_dir, "output directory")->required();

    std::string config_path, data_dir, ckpt_path, log_path, label_matrix_out;
    auto* train = app.add_subcommand("train", "train a model");
    train->add_option("--config", config_path, "model config JSON")->required();
    train->add_option("--data", data_dir, "dataset directory")->required();
    train->add_option("--out", ckpt_path, "checkpoint output path")->required();
    train->add_option("--log", log_path, "metrics log CSV path");
    train->add_option("--label-matrix-out", label_matrix_out,
                      "write the frozen correlation matrix (LGC1) here");

    std::string eval_ckpt, eval_data, eval_split = "test", eval_csv;
    int eval_k = 20;
    auto* evaluate = app.add_subcommand("evaluate", "evaluate a checkpoint");
    evaluate->add_option("--ckpt", eval_ckpt, "checkpoint path")->required();
    evaluate->add_option("--data", eval_data, "dataset directory")->required();
    evaluate->add_option("--split", eval_split, "train|validate|test (default test)");
    evaluate->add_option("--k", eval_k, "predictions kept per video");
    evaluate->add_option("--csv", eval_csv, "prediction CSV output path");

    std::string ens_inputs, ens_out;
    int ens_k = 20;
    auto* ensemble = app.add_subcommand("ensemble", "average prediction CSVs");
    ensemble->add_option("--inputs", ens_inputs, "comma-separated CSV paths")->required();
    ensemble->add_option("--out", ens_out, "merged CSV path")->required();
    ensemble->add_option("--k", ens_k, "predictions kept per video");

    std::string sweep_base, sweep_component, sweep_candidates, sweep_data, sweep_out;
    auto* sweep = app.add_subcommand("sweep", "greedy per-component comparison");
    sweep->add_option("--base", sweep_base, "base config JSON")->required();
    sweep->add_option("--component", sweep_component, "pooling|classifier|labelgraph|loss")
        ->required();
    sweep->add_option("--candidates", sweep_candidates, "candidates JSON file")->required();
    sweep->add_option("--data", sweep_data, "dataset directory")->required();
    sweep->add_option("--out", sweep_out, "report CSV path");

    std::string gc_config;
    GradCheckDims dims;
    double gc_tol = 1e-4;
    std::uint64_t gc_seed = 7;
    auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient audit");
    gradcheck->add_option("--config", gc_config, "model config JSON (defaults when omitted)");
    gradcheck->add_option("--feature-dim", dims.feature_dim, "probe feature width");
    gradcheck->add_option("--cell-dim", dims.cell_dim, "probe cell width");
    gradcheck->add_option("--classes", dims.num_classes, "probe class count");
    gradcheck->add_option("--experts", dims.num_experts, "probe expert count");
    gradcheck->add_option("--frames", dims.num_frames, "probe sequence length");
    gradcheck->add_option("--step", dims.fd_step, "finite-difference step");
    gradcheck->add_option("--tol", gc_tol, "max relative error accepted");
    gradcheck->add_option("--seed", gc_seed, "probe seed");

    std::string stats_data, stats_split = "train", stats_out, stats_lgc;
    auto* stats = app.add_subcommand("stats", "dump label statistics as CSV");
    stats->add_option("--data", stats_data, "dataset directory")->required();
    stats->add_option("--split", stats_split, "train|validate|test (default train)");
    stats->add_option("--out", stats_out, "output directory")->required();
    stats->add_option("--lgc", stats_lgc, "also write the correlation matrix here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (generate->parsed()) return cmd_generate(spec_path, out_dir);
        if (train->parsed())
            return cmd_train(config_path, data_dir, ckpt_path, log_path, label_matrix_out);
        if (evaluate->parsed())
            return cmd_evaluate(eval_ckpt, eval_data, eval_split, eval_k, eval_csv);
        if (ensemble->parsed()) return cmd_ensemble(ens_inputs, ens_out, ens_k);
        if (sweep->parsed())
            return cmd_sweep(sweep_base, sweep_component, sweep_candidates, sweep_data, sweep_out);
        if (gradcheck->parsed()) return cmd_gradcheck(gc_config, dims, gc_tol, gc_seed);
        if (stats->parsed()) return cmd_stats(stats_data, stats_split, stats_out, stats_lgc);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::cerr << "error: no subcommand\n";
    return 1;
}
