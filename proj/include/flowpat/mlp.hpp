#pragma once

// Feed-forward network: topology, parameters, forward pass, reverse-mode
// gradients, class prediction, text serialization.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "flowpat/data.hpp"

namespace flowpat {

enum class Activation : std::uint8_t { Relu, Linear };

std::string_view to_string(Activation a);

/// Row-major dense matrix.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    double* row(std::size_t r) { return data.data() + r * cols; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }
};

struct Topology {
    /// [n_in, hidden..., n_out]; at least two entries, all positive.
    std::vector<std::size_t> layer_sizes;
    /// One activation per non-input layer.
    std::vector<Activation> activations;

    /// ReLU hidden layers, linear output.
    static Topology dense(std::size_t n_in, std::span<const std::size_t> hidden,
                          std::size_t n_out);

    std::size_t layer_count() const { return activations.size(); }
    std::size_t input_size() const { return layer_sizes.front(); }
    std::size_t output_size() const { return layer_sizes.back(); }
    std::size_t parameter_count() const;

    void validate() const; // throws ValidationError
};

struct Model {
    Topology topology;
    std::vector<Matrix> weights;              // weights[l]: sizes[l+1] x sizes[l]
    std::vector<std::vector<double>> biases;  // biases[l]: sizes[l+1]
    std::vector<FlowLabel> classes;           // output index -> label

    const LabelScheme* scheme_or_null() const;
};

/// Seeded He-style init: weights uniform in +-sqrt(6/fan_in), biases zero.
/// Identical seeds give bitwise-identical models.
Model init_model(const Topology& topology, std::vector<FlowLabel> classes,
                 std::uint64_t seed);

/// Per-layer buffers kept for backprop. post[l] = activation(pre[l]);
/// post.back() is the network output.
struct ForwardTrace {
    std::vector<double> input;
    std::vector<std::vector<double>> pre;
    std::vector<std::vector<double>> post;
};

/// Runs the network, filling the trace. Returns the output vector
/// (trace.post.back()).
const std::vector<double>& forward(const Model& model, std::span<const double> x,
                                   ForwardTrace& trace);

std::vector<double> forward_output(const Model& model, std::span<const double> x);

/// argmax over the output, lowest index on exact ties.
FlowLabel predict_class(const Model& model, std::span<const double> x);
std::size_t predict_index(const Model& model, std::span<const double> x);

struct Gradients {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;

    void resize_like(const Model& model);
};

/// Reverse-mode gradients of the loss given d(loss)/d(output). The trace
/// must come from forward() on this model. ReLU derivative at 0 is 0.
void backprop(const Model& model, const ForwardTrace& trace,
              std::span<const double> output_gradient, Gradients& out);

inline constexpr std::string_view kModelMagic = "FLOWPAT-MLP v1";

/// Line-oriented text format: magic, layer sizes, activation tags, class
/// list, then per layer the weight rows and the bias line, every number
/// with 17 significant digits. Round-trips bit-exactly.
void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

} // namespace flowpat
