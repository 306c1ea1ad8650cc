// flowpat command line: generate data, train, evaluate, cross-validate,
// predict. Exit codes: 0 ok, 1 usage, 2 I/O, 3 data validation, 4 training
// divergence.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "flowpat/data.hpp"
#include "flowpat/errors.hpp"
#include "flowpat/eval.hpp"
#include "flowpat/kernels.hpp"
#include "flowpat/mlp.hpp"
#include "flowpat/synth.hpp"
#include "flowpat/text.hpp"
#include "flowpat/train.hpp"

namespace fs = std::filesystem;
using namespace flowpat;

namespace {

constexpr const char* kVersion = "1.0.0";

const LabelScheme& scheme_from_flag(const std::string& name) {
    const auto id = LabelScheme::parse_id(name);
    if (!id) {
        throw ValidationError("unknown scheme \"" + name +
                              "\" (expected Test1, Test2 or Test3)");
    }
    return LabelScheme::get(*id);
}

const LabelScheme& scheme_of_model(const Model& model) {
    const LabelScheme* scheme = model.scheme_or_null();
    if (scheme == nullptr) {
        throw ValidationError("model class list matches no known scheme");
    }
    return *scheme;
}

/// Loads a labeled CSV under whichever scheme fits and merges it into
/// `target`; refuses files already coarser than the target.
Dataset load_for_scheme(const fs::path& path, const LabelScheme& target) {
    Dataset ds = load_csv_auto(path);
    if (ds.scheme().id() == target.id()) return ds;
    return merge_labels(ds, target);
}

fs::path scaler_path(const fs::path& model_path) {
    return fs::path(model_path.string() + ".scaler");
}

std::string report_body(const ConfusionMatrix& cm, const std::string& rules,
                        const std::string& seed_line) {
    std::ostringstream out;
    out << "scheme: " << cm.scheme().name() << "\n";
    out << "rules: " << (rules.empty() ? "unknown" : rules) << "\n";
    if (!seed_line.empty()) out << "seed: " << seed_line << "\n";
    out << "samples: " << cm.total() << "\n\n";
    out << render_table(cm);
    out << "\ncells:\n" << render_flat(cm);
    return out.str();
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << content;
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

std::string banner() {
    const std::time_t now =
        std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    std::ostringstream out;
    out << "# flowpat " << kVersion << " (" << kernels::active().name << " kernels) "
        << stamp << "\n";
    return out.str();
}

// ---------------------------------------------------------------------------

struct GenDataArgs {
    std::size_t n = 5676;
    std::uint64_t seed = 1;
    double noise = 0.0;
    std::string out;
};

int cmd_gen_data(const GenDataArgs& args) {
    GenSpec spec;
    spec.n_samples = args.n;
    spec.seed = args.seed;
    spec.noise_fraction = args.noise;
    const Dataset ds = generate_dataset(spec);
    save_csv(ds, args.out);

    std::cout << "wrote " << ds.size() << " samples to " << args.out << " (rules "
              << kFlowMapRulesVersion << ", seed " << args.seed << ")\n";
    const auto counts = ds.class_counts();
    for (std::size_t i = 0; i < counts.size(); ++i) {
        std::cout << "  " << to_string(ds.scheme().classes()[i]) << ": " << counts[i]
                  << "\n";
    }
    return 0;
}

struct TrainArgs {
    std::string data;
    std::string config_path;
    std::string scheme = "Test1";
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string out;
    std::string report_dir;
};

int cmd_train(const TrainArgs& args) {
    TrainConfig config =
        args.config_path.empty() ? TrainConfig{} : load_config(args.config_path);
    if (args.seed_given) config.seed = args.seed;
    config.validate();

    const LabelScheme& scheme = scheme_from_flag(args.scheme);
    const Dataset ds = load_for_scheme(args.data, scheme);

    SplitSpec split_spec;
    split_spec.seed = config.seed;
    const SplitIndices idx = stratified_split_indices(ds, split_spec);
    auto [train_raw, val_raw, test_raw] =
        std::array{subset(ds, idx.train), subset(ds, idx.validation), subset(ds, idx.test)};

    auto [train_ds, scaler] = standardize_fit(train_raw);
    const Dataset val_ds = standardize_apply(val_raw, scaler);
    const Dataset test_ds = standardize_apply(test_raw, scaler);

    const Topology topology =
        Topology::dense(kFeatureCount, config.hidden_topology, scheme.size());
    Model model = init_model(topology, scheme.classes(), config.seed);
    TrainReport report = train(std::move(model), train_ds, config, &val_ds);

    save_model(report.model, args.out);
    save_standardization(scaler, scaler_path(args.out));

    const fs::path report_dir = args.report_dir.empty()
                                    ? fs::path(args.out).parent_path()
                                    : fs::path(args.report_dir);
    if (!report_dir.empty()) fs::create_directories(report_dir);

    // Split manifest: original sample index -> assignment, audit trail for
    // the randomly selected splits.
    {
        std::vector<std::string> assignment(ds.size());
        for (const std::size_t i : idx.train) assignment[i] = "train";
        for (const std::size_t i : idx.validation) assignment[i] = "validation";
        for (const std::size_t i : idx.test) assignment[i] = "test";
        std::ostringstream manifest;
        manifest << "# split manifest (seed " << config.seed << ")\nindex,split\n";
        for (std::size_t i = 0; i < assignment.size(); ++i) {
            manifest << i << ',' << assignment[i] << "\n";
        }
        write_file(report_dir / "split_manifest.txt", manifest.str());
    }
    {
        std::ostringstream losses;
        losses << "epoch,mean_loss,validation_accuracy\n";
        for (std::size_t e = 0; e < report.epoch_loss.size(); ++e) {
            losses << e << ',' << text::fmt17(report.epoch_loss[e]) << ','
                   << text::fmt17(report.validation_accuracy[e]) << "\n";
        }
        write_file(report_dir / "training_loss.txt", losses.str());
    }
    const std::string seed_line = std::to_string(config.seed);
    const ConfusionMatrix val_cm = confusion_matrix(report.model, val_ds);
    const ConfusionMatrix test_cm = confusion_matrix(report.model, test_ds);
    write_file(report_dir / "validation_report.txt",
               report_body(val_cm, ds.rules_version(), seed_line));
    write_file(report_dir / "test_report.txt",
               report_body(test_cm, ds.rules_version(), seed_line));

    std::cout << "trained " << args.scheme << " model on " << train_ds.size()
              << " samples (" << config.epochs << " epochs)\n";
    std::cout << "  final training loss: " << text::fmt17(report.epoch_loss.back())
              << "\n";
    std::cout << "  validation accuracy: " << text::fmt17(class_report(val_cm).accuracy)
              << "\n";
    std::cout << "  test accuracy:       " << text::fmt17(class_report(test_cm).accuracy)
              << "\n";
    std::cout << "  model: " << args.out << " (+ " << scaler_path(args.out).string()
              << ")\n";
    std::cout << "  reports: " << (report_dir.empty() ? fs::path(".") : report_dir).string()
              << "\n";
    return 0;
}

struct EvaluateArgs {
    std::string model;
    std::string data;
    std::string merge;
    bool no_banner = false;
};

int cmd_evaluate(const EvaluateArgs& args) {
    const Model model = load_model(args.model);
    const LabelScheme& scheme = scheme_of_model(model);
    const Standardization scaler = load_standardization(scaler_path(args.model));

    Dataset ds = load_for_scheme(args.data, scheme);
    const std::string rules = ds.rules_version();
    ds = standardize_apply(ds, scaler);

    ConfusionMatrix cm = confusion_matrix(model, ds);
    if (!args.merge.empty()) {
        cm = merge_confusion(cm, scheme_from_flag(args.merge));
    }
    if (!args.no_banner) std::cout << banner();
    std::cout << report_body(cm, rules, "");
    return 0;
}

struct CrossvalArgs {
    std::string data;
    std::string config_path;
    std::string scheme = "Test1";
    std::size_t nfolds = 0;
};

int cmd_crossval(const CrossvalArgs& args) {
    TrainConfig config =
        args.config_path.empty() ? TrainConfig{} : load_config(args.config_path);
    if (args.nfolds != 0) config.nfolds = args.nfolds;
    config.validate();

    const LabelScheme& scheme = scheme_from_flag(args.scheme);
    const Dataset ds = load_for_scheme(args.data, scheme);
    const Topology topology =
        Topology::dense(kFeatureCount, config.hidden_topology, scheme.size());

    const CvResult result = k_fold_cv(ds, topology, config);

    std::cout << "scheme: " << scheme.name() << "\n";
    std::cout << "rules: " << (ds.rules_version().empty() ? "unknown" : ds.rules_version())
              << "\n";
    std::cout << "seed: " << config.seed << "\n";
    std::cout << "nfolds: " << config.nfolds << "\n";
    std::cout << "samples: " << ds.size() << "\n";
    for (std::size_t f = 0; f < result.per_fold.size(); ++f) {
        std::cout << "\nfold " << (f + 1) << " of " << result.per_fold.size() << ":\n"
                  << render_table(result.per_fold[f]);
    }
    std::cout << "\npooled:\n" << render_table(result.pooled);
    return 0;
}

struct PredictArgs {
    std::string model;
    std::string data;
    std::string out;
};

int cmd_predict(const PredictArgs& args) {
    const Model model = load_model(args.model);
    const LabelScheme& scheme = scheme_of_model(model);
    const Standardization scaler = load_standardization(scaler_path(args.model));
    const std::vector<FeatureVector> rows = load_csv_unlabeled(args.data);
    if (rows.empty()) {
        throw ValidationError(args.data + ": no rows to predict");
    }

    Dataset out_ds(scheme);
    for (const FeatureVector& raw : rows) {
        FeatureVector x = raw;
        for (std::size_t col = 0; col < kFeatureCount; ++col) {
            x[col] = (x[col] - scaler.mean[col]) / scaler.stddev[col];
        }
        out_ds.add(raw, predict_class(model, x));
    }
    save_csv(out_ds, args.out);
    std::cout << "wrote " << out_ds.size() << " predictions to " << args.out << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-phase flow pattern MLP toolkit"};
    app.set_version_flag("--version", std::string("flowpat ") + kVersion);
    app.require_subcommand(1);

    GenDataArgs gen_args;
    CLI::App* gen = app.add_subcommand("gen-data", "Generate a synthetic labeled CSV");
    gen->add_option("--n", gen_args.n, "Number of samples");
    gen->add_option("--seed", gen_args.seed, "Generator seed");
    gen->add_option("--noise", gen_args.noise, "Label noise fraction in [0, 0.5)");
    gen->add_option("--out", gen_args.out, "Output CSV path")->required();

    TrainArgs train_args;
    CLI::App* tr = app.add_subcommand("train", "Split, standardize and train a model");
    tr->add_option("--data", train_args.data, "Labeled CSV")->required();
    tr->add_option("--config", train_args.config_path, "Training config file");
    tr->add_option("--test-scheme", train_args.scheme,
                   "Label scheme to train under (Test1|Test2|Test3)");
    CLI::Option* seed_opt = tr->add_option("--seed", train_args.seed, "Seed override");
    tr->add_option("--out", train_args.out, "Model output path")->required();
    tr->add_option("--report-dir", train_args.report_dir,
                   "Directory for reports and the split manifest");

    EvaluateArgs eval_args;
    CLI::App* ev = app.add_subcommand("evaluate", "Evaluate a model on a labeled CSV");
    ev->add_option("--model", eval_args.model, "Model file")->required();
    ev->add_option("--data", eval_args.data, "Labeled CSV")->required();
    ev->add_option("--merge", eval_args.merge,
                   "Merge the confusion matrix into a coarser scheme");
    ev->add_flag("--no-banner", eval_args.no_banner,
                 "Suppress the timestamped banner line");

    CrossvalArgs cv_args;
    CLI::App* cv = app.add_subcommand("crossval", "Stratified k-fold cross-validation");
    cv->add_option("--data", cv_args.data, "Labeled CSV")->required();
    cv->add_option("--config", cv_args.config_path, "Training config file");
    cv->add_option("--test-scheme", cv_args.scheme,
                   "Label scheme to evaluate under (Test1|Test2|Test3)");
    cv->add_option("--nfolds", cv_args.nfolds, "Fold count override");

    PredictArgs pred_args;
    CLI::App* pr = app.add_subcommand("predict", "Label an unlabeled CSV");
    pr->add_option("--model", pred_args.model, "Model file")->required();
    pr->add_option("--data", pred_args.data, "Unlabeled CSV (11 feature columns)")
        ->required();
    pr->add_option("--out", pred_args.out, "Output CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    train_args.seed_given = seed_opt->count() > 0;

    try {
        if (gen->parsed()) return cmd_gen_data(gen_args);
        if (tr->parsed()) return cmd_train(train_args);
        if (ev->parsed()) return cmd_evaluate(eval_args);
        if (cv->parsed()) return cmd_crossval(cv_args);
        if (pr->parsed()) return cmd_predict(pred_args);
        std::cerr << "error: no subcommand\n";
        return 1;
    } catch (const DivergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
