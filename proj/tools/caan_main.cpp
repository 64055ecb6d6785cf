// caan: unsupervised video summarization pipeline.
//
// Subcommands: synth, train, summarize, eval, verify.
// Exit codes: 0 success, 2 flag/configuration errors, 1 runtime failures.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "caan/checkpoint.hpp"
#include "caan/checks.hpp"
#include "caan/data_io.hpp"
#include "caan/evaluation.hpp"
#include "caan/postprocess.hpp"
#include "caan/training.hpp"
#include "caan/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

json config_to_json(const caan::TrainingConfig& c) {
    return json{{"alpha", c.alpha},
                {"lr_generator", c.lr_generator},
                {"lr_discriminator", c.lr_discriminator},
                {"epochs", c.epochs},
                {"steps_per_video", c.steps_per_video},
                {"seed", c.seed},
                {"feature_dim", c.feature_dim},
                {"base_channels", c.base_channels},
                {"score_hidden", c.score_hidden},
                {"disc_hidden", c.disc_hidden},
                {"supervised", c.supervised},
                {"non_saturating_g_loss", c.non_saturating_g_loss},
                {"clip_norm", c.clip_norm},
                {"checkpoint_every", c.checkpoint_every},
                {"early_stop_patience", c.early_stop_patience}};
}

void config_from_json(const json& j, caan::TrainingConfig& c) {
    auto get = [&j](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("alpha", c.alpha);
    get("lr_generator", c.lr_generator);
    get("lr_discriminator", c.lr_discriminator);
    get("epochs", c.epochs);
    get("steps_per_video", c.steps_per_video);
    get("seed", c.seed);
    get("feature_dim", c.feature_dim);
    get("base_channels", c.base_channels);
    get("score_hidden", c.score_hidden);
    get("disc_hidden", c.disc_hidden);
    get("supervised", c.supervised);
    get("non_saturating_g_loss", c.non_saturating_g_loss);
    get("clip_norm", c.clip_norm);
    get("checkpoint_every", c.checkpoint_every);
    get("early_stop_patience", c.early_stop_patience);
}

class ManifestTimer {
public:
    ManifestTimer() : start_(std::chrono::steady_clock::now()) {}
    double elapsed_seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

void write_manifest(const fs::path& out_dir, const std::string& command, std::uint64_t seed,
                    const json& config, const std::vector<std::string>& inputs,
                    const ManifestTimer& timer) {
    json manifest{{"command", command},
                  {"version", caan::kVersion},
                  {"seed", seed},
                  {"config", config},
                  {"inputs", inputs},
                  {"elapsed_seconds", timer.elapsed_seconds()}};
    std::ofstream f(out_dir / "manifest.json", std::ios::trunc);
    if (!f) throw caan::IoError("cannot write manifest under " + out_dir.string());
    f << manifest.dump(2) << "\n";
}

void ensure_out_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw caan::ConfigError("output directory " + dir.string() + " is not writable");
}

// Training config flags shared by train and eval.
struct ConfigFlags {
    std::string config_path;

    void attach(CLI::App* cmd, caan::TrainingConfig& cfg) {
        cmd->add_option("--config", config_path, "JSON config file; flags override its values");
        cmd->add_option("--seed", cfg.seed, "random seed");
        cmd->add_option("--alpha", cfg.alpha, "target mean score (sparsity)");
        cmd->add_option("--lr-generator", cfg.lr_generator, "generator learning rate");
        cmd->add_option("--lr-discriminator", cfg.lr_discriminator, "discriminator learning rate");
        cmd->add_option("--epochs", cfg.epochs, "training epochs");
        cmd->add_option("--steps-per-video", cfg.steps_per_video, "updates per video per epoch");
        cmd->add_option("--feature-dim", cfg.feature_dim,
                        "feature dimension (defaults to the dataset's)");
        cmd->add_option("--base-channels", cfg.base_channels, "first encoder width");
        cmd->add_option("--score-hidden", cfg.score_hidden, "score head hidden width");
        cmd->add_option("--disc-hidden", cfg.disc_hidden, "discriminator hidden units");
        cmd->add_flag("--supervised", cfg.supervised, "add the mse term against gt scores");
        cmd->add_flag("--non-saturating", cfg.non_saturating_g_loss,
                      "use -log D(weighted) for the generator");
        cmd->add_option("--clip-norm", cfg.clip_norm, "gradient norm clip");
        cmd->add_option("--checkpoint-every", cfg.checkpoint_every, "epochs between checkpoints");
        cmd->add_option("--early-stop-patience", cfg.early_stop_patience,
                        "epochs without improvement before stopping (0 = off)");
    }

    // File first, then re-apply any flags the user passed.
    void resolve(CLI::App* cmd, caan::TrainingConfig& cfg) const {
        if (config_path.empty()) return;
        std::ifstream f(config_path);
        if (!f) throw caan::ConfigError("cannot read config file " + config_path);
        json j;
        try {
            j = json::parse(f);
        } catch (const json::parse_error& e) {
            throw caan::ConfigError("config file " + config_path + ": " + e.what());
        }
        caan::TrainingConfig from_file;
        config_from_json(j, from_file);
        // fields not set on the command line take the file's value
        auto keep = [&](const char* flag, auto member) {
            if (cmd->count(flag) == 0) cfg.*member = from_file.*member;
        };
        keep("--seed", &caan::TrainingConfig::seed);
        keep("--alpha", &caan::TrainingConfig::alpha);
        keep("--lr-generator", &caan::TrainingConfig::lr_generator);
        keep("--lr-discriminator", &caan::TrainingConfig::lr_discriminator);
        keep("--epochs", &caan::TrainingConfig::epochs);
        keep("--steps-per-video", &caan::TrainingConfig::steps_per_video);
        keep("--feature-dim", &caan::TrainingConfig::feature_dim);
        keep("--base-channels", &caan::TrainingConfig::base_channels);
        keep("--score-hidden", &caan::TrainingConfig::score_hidden);
        keep("--disc-hidden", &caan::TrainingConfig::disc_hidden);
        keep("--supervised", &caan::TrainingConfig::supervised);
        keep("--non-saturating", &caan::TrainingConfig::non_saturating_g_loss);
        keep("--clip-norm", &caan::TrainingConfig::clip_norm);
        keep("--checkpoint-every", &caan::TrainingConfig::checkpoint_every);
        keep("--early-stop-patience", &caan::TrainingConfig::early_stop_patience);
    }
};

int cmd_synth(const std::string& out, caan::SyntheticSpec spec) {
    ManifestTimer timer;
    spec.validate();
    ensure_out_dir(out);
    auto records = caan::gen_synthetic(spec);
    caan::save_dataset(out, records);
    json cfg{{"videos", spec.videos},
             {"frames_min", spec.frames_min},
             {"frames_max", spec.frames_max},
             {"dim", spec.dim},
             {"segments_min", spec.segments_min},
             {"segments_max", spec.segments_max},
             {"important_fraction", spec.important_fraction},
             {"noise_sigma", spec.noise_sigma},
             {"importance_boost", spec.importance_boost},
             {"seed", spec.seed}};
    write_manifest(out, "synth", spec.seed, cfg, {}, timer);
    std::cout << "wrote " << records.size() << " videos to " << out << "\n";
    return 0;
}

int cmd_train(const CLI::App* cmd, const std::string& data, const std::string& out,
              caan::TrainingConfig cfg) {
    ManifestTimer timer;
    ensure_out_dir(out);
    auto records = caan::load_dataset(data);
    if (cmd->count("--feature-dim") == 0) cfg.feature_dim = records.front().features.dim;
    for (const auto& rec : records) {
        if (rec.features.dim != cfg.feature_dim)
            throw caan::DimensionError("video " + rec.id + " has dimension " +
                                       std::to_string(rec.features.dim) + ", config requires " +
                                       std::to_string(cfg.feature_dim));
        if (cfg.supervised && !rec.gt_scores)
            throw caan::ConfigError("supervised training requires gt_scores, missing for video " +
                                    rec.id);
    }
    cfg.validate();

    std::vector<caan::TrainVideo> items;
    items.reserve(records.size());
    for (const auto& rec : records) items.push_back({rec.features, rec.gt_scores});

    caan::Trainer trainer(cfg);
    std::ofstream log(fs::path(out) / "loss_log.tsv", std::ios::trunc);
    log << "epoch\tadv_d\tadv_g\trec\tspar\tsup\ttotal\n";
    auto on_epoch = [&](int epoch, const caan::LossReport& r) {
        log << epoch << "\t" << fixed6(r.adv_d) << "\t" << fixed6(r.adv_g) << "\t" << fixed6(r.rec)
            << "\t" << fixed6(r.spar) << "\t" << fixed6(r.sup) << "\t" << fixed6(r.total) << "\n";
        std::cout << "epoch " << epoch << " total " << fixed6(r.total) << "\n";
    };
    auto on_checkpoint = [&](int epoch) {
        caan::save_checkpoint(fs::path(out) / ("checkpoint_e" + std::to_string(epoch + 1) + ".caan"),
                              cfg, trainer.generator(), trainer.discriminator());
    };
    trainer.train(items, on_epoch, on_checkpoint);
    caan::save_checkpoint(fs::path(out) / "checkpoint.caan", cfg, trainer.generator(),
                          trainer.discriminator());

    std::vector<std::string> inputs;
    for (const auto& rec : records) inputs.push_back(rec.id);
    write_manifest(out, "train", cfg.seed, config_to_json(cfg), inputs, timer);
    std::cout << "checkpoint written to " << (fs::path(out) / "checkpoint.caan").string() << "\n";
    return 0;
}

int cmd_summarize(const std::string& checkpoint, const std::string& features_path,
                  const std::string& annotations_path, const std::string& out, double ratio,
                  bool value_by_length) {
    ManifestTimer timer;
    ensure_out_dir(out);
    caan::LoadedModel model = caan::load_checkpoint(checkpoint);
    caan::FeatureSequence x = caan::load_features(features_path);
    if (x.dim != model.config.feature_dim)
        throw caan::DimensionError("features have dimension " + std::to_string(x.dim) +
                                   ", checkpoint expects " +
                                   std::to_string(model.config.feature_dim));
    std::optional<caan::ShotSegmentation> change_points;
    if (!annotations_path.empty()) {
        caan::VideoRecord rec;
        rec.features = x;
        caan::load_annotations(annotations_path, rec);
        change_points = rec.change_points;
    }

    caan::GenerateResult gen = model.generator->generate(x);
    caan::Summary summary =
        caan::scores_to_summary(x, gen.score_values, change_points, ratio, value_by_length);

    {
        std::ofstream f(fs::path(out) / "scores.tsv", std::ios::trunc);
        f << "frame\tscore\n";
        for (int i = 0; i < x.frames; ++i)
            f << i << "\t" << fixed6(gen.score_values.values[static_cast<std::size_t>(i)]) << "\n";
    }
    {
        std::ofstream f(fs::path(out) / "summary.tsv", std::ios::trunc);
        f << "begin\tend\n";
        int begin = -1;
        for (int i = 0; i <= x.frames; ++i) {
            const bool on = i < x.frames && summary.frame_mask[static_cast<std::size_t>(i)];
            if (on && begin < 0) begin = i;
            if (!on && begin >= 0) {
                f << begin << "\t" << i << "\n";
                begin = -1;
            }
        }
    }
    json cfg{{"ratio", ratio},
             {"value_by_length", value_by_length},
             {"checkpoint", checkpoint},
             {"budget_frames", summary.budget_frames}};
    write_manifest(out, "summarize", model.config.seed, cfg, {features_path}, timer);
    std::cout << "selected " << summary.selected_frames() << " of " << x.frames << " frames\n";
    return 0;
}

void write_reports(const fs::path& out, const caan::EvalReport& report) {
    {
        std::ofstream f(out / "report.tsv", std::ios::trunc);
        f << "fold\tid\tprecision\trecall\tfscore\ttau\trho\n";
        for (const auto& fold : report.folds)
            for (const auto& v : fold.videos) {
                f << fold.fold << "\t" << v.id << "\t" << fixed6(v.precision) << "\t"
                  << fixed6(v.recall) << "\t" << fixed6(v.fscore) << "\t"
                  << (v.has_correlation ? fixed6(v.tau) : "nan") << "\t"
                  << (v.has_correlation ? fixed6(v.rho) : "nan") << "\n";
            }
    }
    {
        std::ofstream f(out / "report.txt", std::ios::trunc);
        f << "fold  mean_fscore\n";
        for (const auto& fold : report.folds)
            f << "  " << fold.fold << "   " << fixed6(fold.mean_fscore) << "\n";
        f << "overall mean fscore: " << fixed6(report.mean_fscore) << "\n";
        if (report.correlation_count > 0) {
            f << "mean kendall tau:    " << fixed6(report.mean_tau) << "\n";
            f << "mean spearman rho:   " << fixed6(report.mean_rho) << "\n";
        }
    }
}

int cmd_eval(const CLI::App* cmd, const std::string& mode, const std::string& data,
             const std::vector<std::string>& aux_dirs, const std::string& out, double ratio,
             const std::string& fscore_mode, caan::TrainingConfig cfg) {
    ManifestTimer timer;
    ensure_out_dir(out);
    auto target = caan::load_dataset(data);
    if (cmd->count("--feature-dim") == 0) cfg.feature_dim = target.front().features.dim;
    cfg.validate();

    std::vector<caan::VideoRecord> aux;
    for (std::size_t d = 0; d < aux_dirs.size(); ++d) {
        auto records = caan::load_dataset(aux_dirs[d]);
        for (auto& rec : records) {
            rec.id = "aux" + std::to_string(d) + "/" + rec.id;  // namespace per dataset
            aux.push_back(std::move(rec));
        }
    }
    const caan::AggregationMode agg =
        fscore_mode == "mean" ? caan::AggregationMode::Mean : caan::AggregationMode::Max;

    caan::EvalReport report;
    if (mode == "canonical") {
        report = caan::five_fold_cv(target, cfg, cfg.seed, agg, {}, ratio);
    } else if (mode == "augmented") {
        if (aux.empty()) throw caan::ConfigError("augmented mode needs at least one --aux dataset");
        report = caan::five_fold_cv(target, cfg, cfg.seed, agg, aux, ratio);
    } else if (mode == "transfer") {
        if (aux.empty()) throw caan::ConfigError("transfer mode needs at least one --aux dataset");
        report = caan::transfer_eval(aux, target, cfg, cfg.seed, agg, ratio);
    } else {
        throw caan::ConfigError("unknown eval mode '" + mode + "'");
    }
    write_reports(out, report);

    json jcfg = config_to_json(cfg);
    jcfg["mode"] = mode;
    jcfg["ratio"] = ratio;
    jcfg["fscore_mode"] = fscore_mode;
    std::vector<std::string> inputs{data};
    inputs.insert(inputs.end(), aux_dirs.begin(), aux_dirs.end());
    write_manifest(out, "eval", cfg.seed, jcfg, inputs, timer);
    std::cout << "mean fscore " << fixed6(report.mean_fscore) << " over "
              << report.folds.size() << " fold(s)\n";
    return 0;
}

int cmd_verify(const std::string& suite, bool list) {
    if (list) {
        for (const auto& name : caan::checks::suite_names()) std::cout << name << "\n";
        return 0;
    }
    std::vector<caan::checks::SuiteResult> results;
    if (suite == "all") {
        results = caan::checks::run_all_suites();
    } else {
        results.push_back(caan::checks::run_suite(suite));
    }
    bool ok = true;
    for (const auto& r : results) {
        std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << "\n";
        for (const auto& f : r.failures) std::cout << "       " << f << "\n";
        ok = ok && r.pass;
    }
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"caan: adversarial video summarization pipeline"};
    app.require_subcommand(1);
    app.set_version_flag("--version", caan::kVersion);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset with planted structure");
    caan::SyntheticSpec spec;
    std::string synth_out;
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--seed", spec.seed, "random seed");
    synth->add_option("--videos", spec.videos, "number of videos");
    synth->add_option("--frames-min", spec.frames_min, "minimum frame count");
    synth->add_option("--frames-max", spec.frames_max, "maximum frame count");
    synth->add_option("--dim", spec.dim, "feature dimension");
    synth->add_option("--segments-min", spec.segments_min, "minimum segment count");
    synth->add_option("--segments-max", spec.segments_max, "maximum segment count");
    synth->add_option("--important-fraction", spec.important_fraction,
                      "fraction of segments marked important");
    synth->add_option("--noise", spec.noise_sigma, "feature noise sigma");
    synth->add_option("--boost", spec.importance_boost, "magnitude factor for important segments");

    // train
    auto* train = app.add_subcommand("train", "train the adversarial summarizer");
    std::string train_data, train_out;
    caan::TrainingConfig train_cfg;
    ConfigFlags train_flags;
    train->add_option("--data", train_data, "dataset directory")->required();
    train->add_option("--out", train_out, "output directory")->required();
    train_flags.attach(train, train_cfg);

    // summarize
    auto* summarize = app.add_subcommand("summarize", "score a video and select key shots");
    std::string sum_ckpt, sum_features, sum_annotations, sum_out;
    double sum_ratio = 0.15;
    bool sum_by_length = false;
    summarize->add_option("--checkpoint", sum_ckpt, "trained checkpoint")->required();
    summarize->add_option("--features", sum_features, "feature file")->required();
    summarize->add_option("--annotations", sum_annotations,
                          "annotation sidecar; stored change points bypass segmentation");
    summarize->add_option("--out", sum_out, "output directory")->required();
    summarize->add_option("--ratio", sum_ratio, "summary length budget as a fraction of frames");
    summarize->add_flag("--value-by-length", sum_by_length,
                        "weight shot scores by length in the selection");

    // eval
    auto* eval = app.add_subcommand("eval", "run the cross-validation evaluation protocol");
    std::string eval_mode = "canonical", eval_data, eval_out, eval_fmode = "max";
    std::vector<std::string> eval_aux;
    double eval_ratio = 0.15;
    caan::TrainingConfig eval_cfg;
    ConfigFlags eval_flags;
    eval->add_option("--mode", eval_mode, "canonical | augmented | transfer")
        ->check(CLI::IsMember({"canonical", "augmented", "transfer"}));
    eval->add_option("--data", eval_data, "target dataset directory")->required();
    eval->add_option("--aux", eval_aux, "auxiliary dataset directories");
    eval->add_option("--out", eval_out, "output directory")->required();
    eval->add_option("--ratio", eval_ratio, "summary length budget");
    eval->add_option("--fscore-mode", eval_fmode, "multi-user aggregation: max | mean")
        ->check(CLI::IsMember({"max", "mean"}));
    eval_flags.attach(eval, eval_cfg);

    // verify
    auto* verify = app.add_subcommand("verify", "run the built-in verification suites");
    std::string verify_suite = "all";
    bool verify_list = false;
    verify->add_option("--suite", verify_suite, "suite name (default: all)");
    verify->add_flag("--list", verify_list, "list available suites");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
        app.exit(e);
        return 2;
    }

    try {
        if (synth->parsed()) return cmd_synth(synth_out, spec);
        if (train->parsed()) {
            train_flags.resolve(train, train_cfg);
            return cmd_train(train, train_data, train_out, train_cfg);
        }
        if (summarize->parsed())
            return cmd_summarize(sum_ckpt, sum_features, sum_annotations, sum_out, sum_ratio,
                                 sum_by_length);
        if (eval->parsed()) {
            eval_flags.resolve(eval, eval_cfg);
            return cmd_eval(eval, eval_mode, eval_data, eval_aux, eval_out, eval_ratio, eval_fmode,
                            eval_cfg);
        }
        if (verify->parsed()) return cmd_verify(verify_suite, verify_list);
    } catch (const caan::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
