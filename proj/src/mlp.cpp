#include "flowpat/mlp.hpp"

#include <cmath>
#include <fstream>

#include "flowpat/errors.hpp"
#include "flowpat/kernels.hpp"
#include "flowpat/rng.hpp"
#include "flowpat/text.hpp"

namespace flowpat {

std::string_view to_string(Activation a) {
    return a == Activation::Relu ? "relu" : "linear";
}

Topology Topology::dense(std::size_t n_in, std::span<const std::size_t> hidden,
                         std::size_t n_out) {
    Topology t;
    t.layer_sizes.push_back(n_in);
    for (const std::size_t h : hidden) {
        t.layer_sizes.push_back(h);
        t.activations.push_back(Activation::Relu);
    }
    t.layer_sizes.push_back(n_out);
    t.activations.push_back(Activation::Linear);
    t.validate();
    return t;
}

std::size_t Topology::parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        n += layer_sizes[l + 1] * layer_sizes[l] + layer_sizes[l + 1];
    }
    return n;
}

void Topology::validate() const {
    if (layer_sizes.size() < 2) {
        throw ValidationError("topology needs an input and an output layer");
    }
    for (const std::size_t s : layer_sizes) {
        if (s == 0) throw ValidationError("layer sizes must be positive");
    }
    if (activations.size() != layer_sizes.size() - 1) {
        throw ValidationError("one activation required per non-input layer");
    }
}

const LabelScheme* Model::scheme_or_null() const {
    for (const SchemeId id : {SchemeId::Test1, SchemeId::Test2, SchemeId::Test3}) {
        const LabelScheme& scheme = LabelScheme::get(id);
        if (scheme.classes() == classes) return &scheme;
    }
    return nullptr;
}

Model init_model(const Topology& topology, std::vector<FlowLabel> classes,
                 std::uint64_t seed) {
    topology.validate();
    if (classes.size() != topology.output_size()) {
        throw ValidationError("class count does not match the output layer size");
    }
    Model m;
    m.topology = topology;
    m.classes = std::move(classes);
    rng::Engine engine(seed);
    for (std::size_t l = 0; l + 1 < topology.layer_sizes.size(); ++l) {
        const std::size_t fan_in = topology.layer_sizes[l];
        const std::size_t fan_out = topology.layer_sizes[l + 1];
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
        Matrix w(fan_out, fan_in);
        for (double& v : w.data) v = rng::uniform(engine, -limit, limit);
        m.weights.push_back(std::move(w));
        m.biases.emplace_back(fan_out, 0.0);
    }
    return m;
}

const std::vector<double>& forward(const Model& model, std::span<const double> x,
                                   ForwardTrace& trace) {
    const Topology& t = model.topology;
    if (x.size() != t.input_size()) {
        throw ValidationError("input size does not match the topology");
    }
    const std::size_t layers = t.layer_count();
    trace.input.assign(x.begin(), x.end());
    trace.pre.resize(layers);
    trace.post.resize(layers);
    const double* prev = trace.input.data();
    for (std::size_t l = 0; l < layers; ++l) {
        const std::size_t rows = t.layer_sizes[l + 1];
        trace.pre[l].resize(rows);
        trace.post[l].resize(rows);
        kernels::matvec_bias(model.weights[l].data.data(), prev,
                             model.biases[l].data(), trace.pre[l].data(), rows,
                             t.layer_sizes[l]);
        if (t.activations[l] == Activation::Relu) {
            kernels::relu(trace.pre[l].data(), trace.post[l].data(), rows);
        } else {
            trace.post[l] = trace.pre[l];
        }
        prev = trace.post[l].data();
    }
    return trace.post.back();
}

std::vector<double> forward_output(const Model& model, std::span<const double> x) {
    ForwardTrace trace;
    return forward(model, x, trace);
}

std::size_t predict_index(const Model& model, std::span<const double> x) {
    const std::vector<double> out = forward_output(model, x);
    std::size_t best = 0;
    for (std::size_t i = 1; i < out.size(); ++i) {
        if (out[i] > out[best]) best = i;
    }
    return best;
}

FlowLabel predict_class(const Model& model, std::span<const double> x) {
    return model.classes[predict_index(model, x)];
}

void Gradients::resize_like(const Model& model) {
    const std::size_t layers = model.topology.layer_count();
    weights.resize(layers);
    biases.resize(layers);
    for (std::size_t l = 0; l < layers; ++l) {
        const std::size_t rows = model.topology.layer_sizes[l + 1];
        const std::size_t cols = model.topology.layer_sizes[l];
        if (weights[l].rows != rows || weights[l].cols != cols) {
            weights[l] = Matrix(rows, cols);
        }
        biases[l].resize(rows);
    }
}

void backprop(const Model& model, const ForwardTrace& trace,
              std::span<const double> output_gradient, Gradients& out) {
    const Topology& t = model.topology;
    const std::size_t layers = t.layer_count();
    if (output_gradient.size() != t.output_size()) {
        throw ValidationError("output gradient size does not match the topology");
    }
    if (trace.pre.size() != layers || trace.input.size() != t.input_size()) {
        throw ValidationError("trace does not match the model");
    }
    out.resize_like(model);

    // d(loss)/d(post) of the layer being processed.
    static thread_local std::vector<double> d_post;
    d_post.assign(output_gradient.begin(), output_gradient.end());

    for (std::size_t l = layers; l-- > 0;) {
        const std::size_t rows = t.layer_sizes[l + 1];
        const std::size_t cols = t.layer_sizes[l];
        // d(loss)/d(pre) lands directly in the bias gradient.
        std::vector<double>& d_pre = out.biases[l];
        if (t.activations[l] == Activation::Relu) {
            kernels::relu_backward(trace.pre[l].data(), d_post.data(), d_pre.data(), rows);
        } else {
            std::copy(d_post.begin(), d_post.end(), d_pre.begin());
        }
        const double* prev = l == 0 ? trace.input.data() : trace.post[l - 1].data();
        for (std::size_t r = 0; r < rows; ++r) {
            kernels::scale(d_pre[r], prev, out.weights[l].row(r), cols);
        }
        if (l > 0) {
            d_post.assign(cols, 0.0);
            for (std::size_t r = 0; r < rows; ++r) {
                kernels::axpy(d_pre[r], model.weights[l].row(r), d_post.data(), cols);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

void check_finite(const Model& m) {
    for (const Matrix& w : m.weights) {
        for (const double v : w.data) {
            if (!std::isfinite(v)) throw ValidationError("non-finite weight");
        }
    }
    for (const auto& b : m.biases) {
        for (const double v : b) {
            if (!std::isfinite(v)) throw ValidationError("non-finite bias");
        }
    }
}

std::vector<double> parse_number_line(const std::string& line, std::size_t expected,
                                      const char* what) {
    std::vector<double> values;
    for (const std::string_view field : text::split(line, ' ')) {
        const std::string_view token = text::trim(field);
        if (token.empty()) continue;
        const auto v = text::parse_double(token);
        if (!v) {
            throw ValidationError(std::string("model file: bad number in ") + what);
        }
        values.push_back(*v);
    }
    if (values.size() != expected) {
        throw ValidationError(std::string("model file: ") + what + " has " +
                              std::to_string(values.size()) + " numbers, expected " +
                              std::to_string(expected));
    }
    return values;
}

std::string next_line(std::ifstream& in, const char* what) {
    std::string line;
    if (!std::getline(in, line)) {
        throw ValidationError(std::string("model file truncated: missing ") + what);
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

} // namespace

void save_model(const Model& model, const std::filesystem::path& path) {
    model.topology.validate();
    check_finite(model);
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << kModelMagic << "\n";
    for (std::size_t i = 0; i < model.topology.layer_sizes.size(); ++i) {
        out << (i ? " " : "") << model.topology.layer_sizes[i];
    }
    out << "\n";
    for (std::size_t i = 0; i < model.topology.activations.size(); ++i) {
        out << (i ? " " : "") << to_string(model.topology.activations[i]);
    }
    out << "\n";
    for (std::size_t i = 0; i < model.classes.size(); ++i) {
        out << (i ? " " : "") << to_string(model.classes[i]);
    }
    out << "\n";
    for (std::size_t l = 0; l < model.topology.layer_count(); ++l) {
        const Matrix& w = model.weights[l];
        for (std::size_t r = 0; r < w.rows; ++r) {
            for (std::size_t c = 0; c < w.cols; ++c) {
                out << (c ? " " : "") << text::fmt17(w.at(r, c));
            }
            out << "\n";
        }
        const auto& b = model.biases[l];
        for (std::size_t i = 0; i < b.size(); ++i) {
            out << (i ? " " : "") << text::fmt17(b[i]);
        }
        out << "\n";
    }
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

Model load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    if (next_line(in, "magic") != kModelMagic) {
        throw ValidationError("model file: unsupported format or version (expected \"" +
                              std::string(kModelMagic) + "\")");
    }
    Model m;
    const std::string sizes_line = next_line(in, "layer sizes");
    for (const std::string_view field : text::split(sizes_line, ' ')) {
        const std::string_view token = text::trim(field);
        if (token.empty()) continue;
        const auto v = text::parse_double(token);
        if (!v || *v < 1.0 || *v != std::floor(*v)) {
            throw ValidationError("model file: bad layer size");
        }
        m.topology.layer_sizes.push_back(static_cast<std::size_t>(*v));
    }
    const std::string activations_line = next_line(in, "activations");
    for (const std::string_view field : text::split(activations_line, ' ')) {
        const std::string_view token = text::trim(field);
        if (token.empty()) continue;
        if (token == "relu") {
            m.topology.activations.push_back(Activation::Relu);
        } else if (token == "linear") {
            m.topology.activations.push_back(Activation::Linear);
        } else {
            throw ValidationError("model file: unknown activation \"" +
                                  std::string(token) + "\"");
        }
    }
    m.topology.validate();
    const std::string classes_line = next_line(in, "class list");
    for (const std::string_view field : text::split(classes_line, ' ')) {
        const std::string_view token = text::trim(field);
        if (token.empty()) continue;
        const auto label = parse_label(token);
        if (!label) {
            throw ValidationError("model file: unknown class \"" + std::string(token) + "\"");
        }
        m.classes.push_back(*label);
    }
    if (m.classes.size() != m.topology.output_size()) {
        throw ValidationError("model file: class list does not match the output layer");
    }
    for (std::size_t l = 0; l < m.topology.layer_count(); ++l) {
        const std::size_t rows = m.topology.layer_sizes[l + 1];
        const std::size_t cols = m.topology.layer_sizes[l];
        Matrix w(rows, cols);
        for (std::size_t r = 0; r < rows; ++r) {
            const auto values = parse_number_line(next_line(in, "weight row"), cols,
                                                  "weight row");
            std::copy(values.begin(), values.end(), w.row(r));
        }
        m.weights.push_back(std::move(w));
        m.biases.push_back(parse_number_line(next_line(in, "bias line"),
                                             rows, "bias line"));
    }
    std::string line;
    while (std::getline(in, line)) {
        if (!text::trim(line).empty()) {
            throw ValidationError("model file: trailing data after parameters");
        }
    }
    check_finite(m);
    return m;
}

} // namespace flowpat
