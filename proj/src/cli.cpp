#include "ei/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "ei/archive.hpp"
#include "ei/config.hpp"
#include "ei/csv.hpp"
#include "ei/engine.hpp"
#include "ei/error.hpp"
#include "ei/interpreter.hpp"
#include "ei/manifest.hpp"

namespace ei {
namespace {

namespace fs = std::filesystem;

struct CommonFlags {
    std::string config;
    std::string manifest;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> k_outer;
    std::optional<std::size_t> k_inner;
    std::optional<std::size_t> workers;
    std::string mode;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool with_mode) {
    cmd->add_option("--config", f.config, "Run configuration (JSON)");
    cmd->add_option("--manifest", f.manifest, "Dataset manifest; overrides the config's data source");
    cmd->add_option("--out-dir", f.out_dir, "Output directory");
    cmd->add_option("--seed", f.seed, "Master seed");
    cmd->add_option("--k-outer", f.k_outer, "Outer cross-validation folds");
    cmd->add_option("--k-inner", f.k_inner, "Inner cross-validation folds");
    cmd->add_option("--workers", f.workers, "Parallel training tasks (default: $EI_WORKERS or 1)");
    if (with_mode) cmd->add_option("--mode", f.mode, "evaluate, build_final or both");
}

std::size_t env_workers() {
    const char* v = std::getenv("EI_WORKERS");
    if (!v || !*v) return 0;
    try {
        const auto n = std::stoll(v);
        if (n < 1) throw UsageError("EI_WORKERS must be a positive integer");
        return static_cast<std::size_t>(n);
    } catch (const std::logic_error&) {
        throw UsageError("EI_WORKERS must be a positive integer");
    }
}

RunConfig resolve_config(const CommonFlags& f) {
    RunConfig cfg = f.config.empty() ? RunConfig{} : load_run_config(f.config);
    if (!f.manifest.empty()) {
        cfg.manifest = fs::path(f.manifest);
        cfg.synthetic.reset();
    }
    if (!f.out_dir.empty()) cfg.out_dir = f.out_dir;
    if (f.seed) cfg.cv.seed = *f.seed;
    if (f.k_outer) cfg.cv.k_outer = *f.k_outer;
    if (f.k_inner) cfg.cv.k_inner = *f.k_inner;
    if (!f.mode.empty()) cfg.cv.mode = parse_cv_mode(f.mode);
    if (f.workers) cfg.workers = *f.workers;
    else if (auto env = env_workers()) cfg.workers = env;
    if (cfg.workers && *cfg.workers < 1) throw UsageError("--workers must be at least 1");
    if (cfg.cv.k_outer < 2 || cfg.cv.k_inner < 2) throw UsageError("--k-outer and --k-inner must be at least 2");
    return cfg;
}

EnsembleIntegration run_engine(const RunConfig& cfg) {
    const auto ds = load_config_dataset(cfg);
    EnsembleIntegration engine(cfg.cv, cfg.workers.value_or(1));
    engine.fit_base(ds, resolve_assignment(cfg, ds));
    engine.fit_ensemble(cfg.ensembles);
    return engine;
}

void write_summaries(const EnsembleIntegration& engine, const fs::path& dir, std::ostream& out) {
    csv::write_file(dir / "base_summary.csv", summary_to_csv(engine.base_summary()));
    csv::write_file(dir / "ensemble_summary.csv", summary_to_csv(engine.ensemble_summary()));
    out << "wrote " << (dir / "base_summary.csv").string() << "\n";
    out << "wrote " << (dir / "ensemble_summary.csv").string() << "\n";
}

std::string pick_ensemble(const EnsembleIntegration& engine, const std::string& requested) {
    if (!requested.empty()) return requested;
    try {
        const auto& summary = engine.ensemble_summary();
        if (!summary.empty()) return summary.front().name;
    } catch (const UsageError&) {
    }
    const auto& ens = engine.final_model().ensembles;
    if (ens.empty()) throw UsageError("model archive holds no ensembles");
    return ens.front().spec.id;
}

int cmd_synth(const std::string& spec_path, const std::string& out_dir, std::ostream& out) {
    std::ifstream in(spec_path, std::ios::binary);
    if (!in) throw UsageError("cannot open synthetic spec: " + spec_path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("synthetic spec " + spec_path + ": malformed JSON: " + e.what());
    }
    SyntheticSpec spec;
    try {
        spec = parse_synthetic_spec(doc, "");
    } catch (const SchemaError& e) {
        throw UsageError(std::string("synthetic spec: ") + e.what());
    }
    const auto manifest = write_dataset(generate_synthetic(spec), out_dir);
    out << "wrote " << manifest.string() << "\n";
    return kExitOk;
}

int cmd_evaluate(CommonFlags f, std::ostream& out) {
    auto cfg = resolve_config(f);
    cfg.cv.mode = CvMode::evaluate;
    fs::create_directories(cfg.out_dir);
    const auto engine = run_engine(cfg);
    write_summaries(engine, cfg.out_dir, out);
    return kExitOk;
}

int cmd_train(const CommonFlags& f, const std::string& model_path, std::ostream& out) {
    auto cfg = resolve_config(f);
    if (cfg.cv.mode == CvMode::evaluate) throw UsageError("train needs mode build_final or both");
    fs::create_directories(cfg.out_dir);
    const auto engine = run_engine(cfg);
    const fs::path archive = model_path.empty() ? cfg.out_dir / "model.json" : fs::path(model_path);
    save_model(engine, archive);
    out << "wrote " << archive.string() << "\n";
    if (cfg.cv.evaluates()) write_summaries(engine, cfg.out_dir, out);
    return kExitOk;
}

int cmd_predict(const std::string& model_path, const std::string& manifest, const std::string& ensemble,
                const std::string& out_path, std::ostream& out) {
    const auto engine = load_model(model_path);
    const auto ds = load_features(manifest);
    const auto id = pick_ensemble(engine, ensemble);
    const auto scores = engine.predict(ds, id);
    std::ostringstream csv_out;
    csv_out << "sample_id,score\n";
    for (std::size_t i = 0; i < ds.sample_ids.size(); ++i)
        csv_out << csv::escape(ds.sample_ids[i]) << ',' << csv::format_double(scores(static_cast<Eigen::Index>(i))) << '\n';
    csv::write_file(out_path, csv_out.str());
    out << "wrote " << out_path << " (ensemble " << id << ")\n";
    return kExitOk;
}

int cmd_interpret(const std::string& model_path, const std::string& manifest, const InterpretOptions& opts,
                  const std::string& out_path, std::ostream& out) {
    const auto engine = load_model(model_path);
    const auto ds = load_manifest(manifest);
    const auto id = pick_ensemble(engine, opts.ensemble);
    const auto ranking = interpret(engine, ds, id, opts.metric, opts.n_repeats, opts.seed);
    csv::write_file(out_path, ranking_to_csv(ranking));
    out << "wrote " << out_path << " (ensemble " << id << ")\n";
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multi-modal heterogeneous ensembles with nested cross-validation", "ei"};
    app.require_subcommand(1);

    std::string synth_spec, synth_out;
    auto* synth = app.add_subcommand("synth", "Write a synthetic dataset and manifest from a spec file");
    synth->add_option("--spec", synth_spec, "Synthetic spec (JSON)")->required();
    synth->add_option("--out-dir", synth_out, "Output directory")->required();

    CommonFlags eval_flags;
    auto* evaluate = app.add_subcommand("evaluate", "Nested-CV evaluation; writes base and ensemble summaries");
    add_common(evaluate, eval_flags, false);

    CommonFlags train_flags;
    std::string train_model;
    auto* train = app.add_subcommand("train", "Fit base predictors and ensembles; save a model archive");
    add_common(train, train_flags, true);
    train->add_option("--model", train_model, "Archive path (default: <out-dir>/model.json)");

    std::string pred_model, pred_manifest, pred_ensemble, pred_out = "scores.csv";
    auto* predict = app.add_subcommand("predict", "Score a manifest-described feature set with a saved model");
    predict->add_option("--model", pred_model, "Model archive")->required();
    predict->add_option("--manifest", pred_manifest, "Feature manifest")->required();
    predict->add_option("--ensemble", pred_ensemble, "Ensemble id (default: best by summary AUC)");
    predict->add_option("--out", pred_out, "Scores CSV");

    std::string int_model, int_manifest, int_out = "ranking.csv", int_metric = "auc", int_config;
    InterpretOptions int_opts;
    auto* interp = app.add_subcommand("interpret", "Rank features of a saved model by permutation importance");
    interp->add_option("--model", int_model, "Model archive")->required();
    interp->add_option("--manifest", int_manifest, "Training data manifest")->required();
    interp->add_option("--config", int_config, "Run configuration; its interpretation block supplies defaults");
    auto* int_ensemble_opt = interp->add_option("--ensemble", int_opts.ensemble, "Ensemble id (default: best by summary AUC)");
    auto* int_metric_opt = interp->add_option("--metric", int_metric, "auc or fmax");
    auto* int_repeats_opt = interp->add_option("--repeats", int_opts.n_repeats, "Permutation repeats");
    auto* int_seed_opt = interp->add_option("--seed", int_opts.seed, "Permutation seed");
    interp->add_option("--out", int_out, "Ranking CSV");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (*synth) return cmd_synth(synth_spec, synth_out, out);
        if (*evaluate) return cmd_evaluate(eval_flags, out);
        if (*train) return cmd_train(train_flags, train_model, out);
        if (*predict) return cmd_predict(pred_model, pred_manifest, pred_ensemble, pred_out, out);
        if (*interp) {
            if (!int_config.empty()) {
                // Flags given on the command line win over the config file.
                const auto base = load_run_config(int_config).interpretation;
                if (!*int_ensemble_opt) int_opts.ensemble = base.ensemble;
                if (!*int_repeats_opt) int_opts.n_repeats = base.n_repeats;
                if (!*int_seed_opt) int_opts.seed = base.seed;
                if (!*int_metric_opt) int_metric = std::string(metric_name(base.metric));
            }
            int_opts.metric = parse_metric(int_metric);
            if (int_opts.n_repeats < 1) throw UsageError("--repeats must be at least 1");
            return cmd_interpret(int_model, int_manifest, int_opts, int_out, out);
        }
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const TrainingError& e) {
        err << "training failure: " << e.what() << "\n";
        return kExitTraining;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const fs::filesystem_error& e) {
        err << "data error: " << e.what() << "\n";
        return kExitData;
    }
    err << "error: no subcommand\n";
    return kExitUsage;
}

}  // namespace ei
