#include "flowpat/train.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include "flowpat/errors.hpp"
#include "flowpat/kernels.hpp"
#include "flowpat/rng.hpp"
#include "flowpat/text.hpp"

namespace flowpat {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be > 0");
    if (epochs == 0) throw ValidationError("epochs must be a positive integer");
    if (l1_weight < 0.0 || l2_weight < 0.0) {
        throw ValidationError("penalty weights must be >= 0");
    }
    if (nfolds < 2) throw ValidationError("nfolds must be >= 2");
    if (hidden_topology.empty()) {
        throw ValidationError("hidden_topology must name at least one layer");
    }
    for (const std::size_t h : hidden_topology) {
        if (h == 0) throw ValidationError("hidden layer sizes must be positive");
    }
}

TrainConfig parse_config_text(std::string_view content) {
    TrainConfig config;
    std::size_t line_no = 0;
    for (const std::string_view raw_line : text::split(content, '\n')) {
        ++line_no;
        const std::string_view line = text::trim(raw_line);
        if (line.empty() || line.front() == '#') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ValidationError("config line " + std::to_string(line_no) +
                                  ": expected key = value");
        }
        const std::string key = text::to_lower(text::trim(line.substr(0, eq)));
        const std::string_view value = text::trim(line.substr(eq + 1));
        const auto numeric = [&]() {
            const auto v = text::parse_double(value);
            if (!v) {
                throw ValidationError("config key " + key + ": bad number \"" +
                                      std::string(value) + "\"");
            }
            return *v;
        };
        if (key == "learning_rate") {
            config.learning_rate = numeric();
        } else if (key == "epochs") {
            config.epochs = static_cast<std::size_t>(numeric());
        } else if (key == "l1") {
            config.l1_weight = numeric();
        } else if (key == "l2") {
            config.l2_weight = numeric();
        } else if (key == "seed") {
            config.seed = static_cast<std::uint64_t>(numeric());
        } else if (key == "nfolds") {
            config.nfolds = static_cast<std::size_t>(numeric());
        } else if (key == "loss") {
            const std::string v = text::to_lower(value);
            if (v == "mse" || v == "mean_squared_error") {
                config.loss = LossKind::MeanSquaredError;
            } else if (v == "cross_entropy" || v == "cross_entropy_softmax") {
                config.loss = LossKind::CrossEntropySoftmax;
            } else {
                throw ValidationError("config key loss: unknown value \"" +
                                      std::string(value) + "\"");
            }
        } else if (key == "hidden_topology") {
            config.hidden_topology.clear();
            for (const std::string_view field : text::split(value, ',')) {
                const auto v = text::parse_double(text::trim(field));
                if (!v || *v < 1.0 || *v != std::floor(*v)) {
                    throw ValidationError("config key hidden_topology: bad layer size");
                }
                config.hidden_topology.push_back(static_cast<std::size_t>(*v));
            }
        } else {
            throw ValidationError("config: unknown key \"" + key + "\"");
        }
    }
    config.validate();
    return config;
}

TrainConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

std::vector<double> one_hot(FlowLabel label, const LabelScheme& scheme) {
    std::vector<double> v(scheme.size(), 0.0);
    v[scheme.index_of(label)] = 1.0;
    return v;
}

double mse_loss(std::span<const double> output, std::span<const double> target,
                std::span<double> grad) {
    if (output.size() != target.size() || grad.size() != output.size()) {
        throw ValidationError("mse_loss: length mismatch");
    }
    const double k = static_cast<double>(output.size());
    double loss = 0.0;
    for (std::size_t i = 0; i < output.size(); ++i) {
        const double d = output[i] - target[i];
        loss += d * d;
        grad[i] = (2.0 / k) * d;
    }
    return loss / k;
}

double cross_entropy_softmax_loss(std::span<const double> output,
                                  std::span<const double> target,
                                  std::span<double> grad) {
    if (output.size() != target.size() || grad.size() != output.size()) {
        throw ValidationError("cross_entropy_softmax_loss: length mismatch");
    }
    const double max = *std::max_element(output.begin(), output.end());
    double sum = 0.0;
    for (const double v : output) sum += std::exp(v - max);
    const double log_sum = std::log(sum) + max;
    double loss = 0.0;
    for (std::size_t i = 0; i < output.size(); ++i) {
        const double log_p = output[i] - log_sum;
        loss -= target[i] * log_p;
        grad[i] = std::exp(log_p) - target[i];
    }
    return loss;
}

namespace {

void apply_sgd(Model& model, const Gradients& grads, double lr, double l1, double l2) {
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        Matrix& w = model.weights[l];
        const Matrix& gw = grads.weights[l];
        if (gw.rows != w.rows || gw.cols != w.cols ||
            grads.biases[l].size() != model.biases[l].size()) {
            throw ValidationError("gradient shapes do not match the model");
        }
        kernels::sgd_weights(w.data.data(), gw.data.data(), w.data.size(), lr, l1, l2);
        kernels::sgd_biases(model.biases[l].data(), grads.biases[l].data(),
                            model.biases[l].size(), lr);
    }
}

double sample_loss(LossKind kind, std::span<const double> output,
                   std::span<const double> target, std::span<double> grad) {
    return kind == LossKind::MeanSquaredError
               ? mse_loss(output, target, grad)
               : cross_entropy_softmax_loss(output, target, grad);
}

} // namespace

void sgd_step(Model& model, const Gradients& grads, const TrainConfig& config) {
    apply_sgd(model, grads, config.learning_rate, config.l1_weight, config.l2_weight);
}

TrainReport train(Model model, const Dataset& train_set, const TrainConfig& config,
                  const Dataset* validation_set) {
    config.validate();
    if (train_set.empty()) {
        throw ValidationError("training set is empty");
    }
    if (!train_set.standardization()) {
        throw ValidationError("training set must be standardized (fit on train)");
    }
    if (train_set.scheme().classes() != model.classes) {
        throw ValidationError("training set scheme does not match the model class list");
    }
    if (validation_set != nullptr) {
        if (validation_set->scheme().classes() != model.classes) {
            throw ValidationError("validation set scheme does not match the model");
        }
        if (!validation_set->standardization()) {
            throw ValidationError("validation set must use the training standardization");
        }
    }

    const std::size_t n = train_set.size();
    const std::size_t k = model.topology.output_size();

    // One-hot targets are just class indices; materialize per-class vectors.
    std::vector<std::vector<double>> targets;
    for (const FlowLabel label : train_set.scheme().classes()) {
        targets.push_back(one_hot(label, train_set.scheme()));
    }
    std::vector<std::size_t> label_idx(n);
    for (std::size_t i = 0; i < n; ++i) {
        label_idx[i] = train_set.scheme().index_of(train_set.label(i));
    }

    TrainReport report;
    report.epoch_loss.reserve(config.epochs);
    rng::Engine engine(config.seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    ForwardTrace trace;
    Gradients grads;
    grads.resize_like(model);
    std::vector<double> out_grad(k);

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        if (config.shuffle_each_epoch) rng::shuffle(order, engine);
        const double lr = config.lr_time_decay
                              ? config.learning_rate /
                                    (1.0 + static_cast<double>(epoch) /
                                               static_cast<double>(config.epochs))
                              : config.learning_rate;
        double loss_sum = 0.0;
        for (const std::size_t i : order) {
            const std::vector<double>& output = forward(model, train_set.features(i), trace);
            const double loss =
                sample_loss(config.loss, output, targets[label_idx[i]], out_grad);
            if (!std::isfinite(loss)) {
                throw DivergenceError("training diverged (non-finite loss) at epoch " +
                                          std::to_string(epoch),
                                      epoch);
            }
            loss_sum += loss;
            backprop(model, trace, out_grad, grads);
            apply_sgd(model, grads, lr, config.l1_weight, config.l2_weight);
        }
        report.epoch_loss.push_back(loss_sum / static_cast<double>(n));
        if (validation_set != nullptr) {
            report.validation_accuracy.push_back(accuracy(model, *validation_set));
        }
    }
    report.model = std::move(model);
    return report;
}

CvResult k_fold_cv(const Dataset& ds, const Topology& topology,
                   const TrainConfig& config) {
    config.validate();
    const std::size_t nfolds = config.nfolds;
    const auto folds = stratified_folds(ds, nfolds, config.seed);

    std::vector<std::size_t> all(ds.size());
    std::iota(all.begin(), all.end(), 0);

    std::vector<std::optional<ConfusionMatrix>> results(nfolds);
    std::vector<std::exception_ptr> errors(nfolds);

    const auto run_fold = [&](std::size_t f) {
        std::vector<bool> held(ds.size(), false);
        for (const std::size_t i : folds[f]) held[i] = true;
        std::vector<std::size_t> train_idx;
        train_idx.reserve(ds.size() - folds[f].size());
        for (const std::size_t i : all) {
            if (!held[i]) train_idx.push_back(i);
        }

        auto [train_ds, params] = standardize_fit(subset(ds, train_idx));
        const Dataset eval_ds = standardize_apply(subset(ds, folds[f]), params);

        TrainConfig fold_config = config;
        fold_config.seed = config.seed + f;
        Model model = init_model(topology, ds.scheme().classes(), fold_config.seed);
        TrainReport fold_report = train(std::move(model), train_ds, fold_config);
        results[f] = confusion_matrix(fold_report.model, eval_ds);
    };

    std::size_t workers = std::thread::hardware_concurrency();
    if (workers == 0) workers = 1;
    workers = std::min(workers, nfolds);
    if (workers <= 1) {
        for (std::size_t f = 0; f < nfolds; ++f) run_fold(f);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                while (true) {
                    const std::size_t f = next.fetch_add(1);
                    if (f >= nfolds) return;
                    try {
                        run_fold(f);
                    } catch (...) {
                        errors[f] = std::current_exception();
                    }
                }
            });
        }
        for (std::thread& t : pool) t.join();
        for (const std::exception_ptr& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }

    CvResult result{{}, ConfusionMatrix(ds.scheme())};
    for (std::size_t f = 0; f < nfolds; ++f) {
        result.pooled += *results[f];
        result.per_fold.push_back(std::move(*results[f]));
    }
    return result;
}

} // namespace flowpat
