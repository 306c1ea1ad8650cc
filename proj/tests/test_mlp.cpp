#include <doctest.h>

#include <cstring>
#include <fstream>
#include <sstream>

#include "flowpat/errors.hpp"
#include "flowpat/mlp.hpp"
#include "flowpat/rng.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace flowpat;
using testutil::TempDir;

namespace {

Model random_model(rng::Engine& g, const Topology& topology,
                   std::vector<FlowLabel> classes) {
    Model m = init_model(topology, std::move(classes), g());
    return m;
}

std::vector<FlowLabel> fake_classes(std::size_t k) {
    // Any k distinct labels will do for structural tests.
    const std::vector<FlowLabel> pool = {
        FlowLabel::A,  FlowLabel::B,  FlowLabel::DB, FlowLabel::I,  FlowLabel::SS,
        FlowLabel::SW, FlowLabel::ST, FlowLabel::Intermittent, FlowLabel::Dispersed,
        FlowLabel::Segregate};
    return {pool.begin(), pool.begin() + k};
}

Topology small_topology(rng::Engine& g) {
    std::vector<std::size_t> hidden;
    const std::size_t depth = rng::below(g, 3); // 0..2 hidden layers
    for (std::size_t i = 0; i < depth; ++i) hidden.push_back(1 + rng::below(g, 7));
    return Topology::dense(1 + rng::below(g, 5), hidden, 1 + rng::below(g, 6));
}

} // namespace

TEST_CASE("init_model is deterministic with zero biases") {
    const std::size_t hidden[] = {25, 25, 25};
    const Topology topology = Topology::dense(11, hidden, 6);
    const Model a = init_model(topology, LabelScheme::test1().classes(), 123);
    const Model b = init_model(topology, LabelScheme::test1().classes(), 123);
    const Model c = init_model(topology, LabelScheme::test1().classes(), 124);

    bool identical = true;
    bool differs_from_c = false;
    for (std::size_t l = 0; l < a.weights.size(); ++l) {
        if (a.weights[l].data != b.weights[l].data) identical = false;
        if (a.weights[l].data != c.weights[l].data) differs_from_c = true;
        for (const double bias : a.biases[l]) CHECK(bias == 0.0);
    }
    CHECK(identical);
    CHECK(differs_from_c);

    CHECK_THROWS_AS((void)init_model(topology, LabelScheme::test3().classes(), 1),
                    ValidationError);
}

TEST_CASE("parameter count follows the shape rules") {
    const std::size_t hidden[] = {25, 25, 25};
    const Topology topology = Topology::dense(11, hidden, 6);
    // Independent tally from the shape definition.
    std::size_t expected = 0;
    for (std::size_t l = 0; l + 1 < topology.layer_sizes.size(); ++l) {
        expected += topology.layer_sizes[l + 1] * (topology.layer_sizes[l] + 1);
    }
    CHECK(expected == 1756); // 11*25+25 + 25*25+25 + 25*25+25 + 25*6+6
    CHECK(topology.parameter_count() == expected);
}

TEST_CASE("forward matches hand-traced networks") {
    SUBCASE("all-zero parameters give zero output") {
        const std::size_t hidden[] = {4};
        Model m = init_model(Topology::dense(3, hidden, 2), fake_classes(2), 9);
        for (Matrix& w : m.weights) std::fill(w.data.begin(), w.data.end(), 0.0);
        const std::vector<double> x = {1.5, -2.0, 0.25};
        for (const double v : forward_output(m, x)) CHECK(v == 0.0);
    }
    SUBCASE("1-1 linear network: w*x + b") {
        Model m = init_model(Topology::dense(1, {}, 1), fake_classes(1), 0);
        m.weights[0].at(0, 0) = 2.0;
        m.biases[0][0] = 1.0;
        CHECK(forward_output(m, std::vector<double>{3.0})[0] == doctest::Approx(7.0));
    }
    SUBCASE("relu clamp kills the hidden signal") {
        const std::size_t hidden[] = {1};
        Model m = init_model(Topology::dense(1, hidden, 1), fake_classes(1), 0);
        m.weights[0].at(0, 0) = -1.0;
        m.biases[0][0] = 0.0;
        m.weights[1].at(0, 0) = 5.0;
        m.biases[1][0] = 0.0;
        ForwardTrace trace;
        const auto& out = forward(m, std::vector<double>{2.0}, trace);
        CHECK(trace.pre[0][0] == doctest::Approx(-2.0));
        CHECK(trace.post[0][0] == 0.0);
        CHECK(out[0] == 0.0);
    }
    SUBCASE("dimension mismatch is rejected") {
        Model m = init_model(Topology::dense(3, {}, 2), fake_classes(2), 1);
        CHECK_THROWS_AS((void)forward_output(m, std::vector<double>{1.0}), ValidationError);
    }
}

TEST_CASE("hidden post-activations are never negative") {
    rng::Engine g(21);
    const std::size_t hidden[] = {25, 25, 25};
    const Model m = init_model(Topology::dense(11, hidden, 6),
                               LabelScheme::test1().classes(), 77);
    ForwardTrace trace;
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> x(11);
        for (double& v : x) v = rng::uniform(g, -3.0, 3.0);
        forward(m, x, trace);
        for (std::size_t l = 0; l + 1 < trace.post.size(); ++l) {
            for (const double v : trace.post[l]) CHECK(v >= 0.0);
        }
    }
}

TEST_CASE("predict_class takes the argmax with lowest-index ties") {
    // Bias-only model: output equals the bias vector for any input.
    Model m = init_model(Topology::dense(1, {}, 6), LabelScheme::test1().classes(), 0);
    std::fill(m.weights[0].data.begin(), m.weights[0].data.end(), 0.0);

    m.biases[0] = {0.9, 0.1, 0.0, 0.0, 0.0, 0.0};
    CHECK(predict_class(m, std::vector<double>{0.0}) == FlowLabel::A);

    m.biases[0] = {0.5, 0.5, 0.0, 0.0, 0.0, 0.0};
    CHECK(predict_class(m, std::vector<double>{0.0}) == FlowLabel::A);

    m.biases[0] = {0.0, 0.0, 0.0, 0.2, 0.0, 0.1};
    CHECK(predict_class(m, std::vector<double>{0.0}) == FlowLabel::I);
}

TEST_CASE("prediction is invariant to a constant shift of the output biases") {
    rng::Engine g(33);
    const std::size_t hidden[] = {12, 9};
    for (int rep = 0; rep < 30; ++rep) {
        Model m = init_model(Topology::dense(5, hidden, 4), fake_classes(4), g());
        std::vector<double> x(5);
        for (double& v : x) v = rng::uniform(g, -2.0, 2.0);
        const FlowLabel before = predict_class(m, x);
        const double shift = rng::uniform(g, -5.0, 5.0);
        for (double& b : m.biases.back()) b += shift;
        CHECK(predict_class(m, x) == before);
    }
}

TEST_CASE("backprop handles the trivial cases") {
    SUBCASE("zero output gradient gives zero gradients") {
        rng::Engine g(41);
        const std::size_t hidden[] = {6, 5};
        const Model m = init_model(Topology::dense(4, hidden, 3), fake_classes(3), 5);
        ForwardTrace trace;
        forward(m, std::vector<double>{1.0, -1.0, 0.5, 2.0}, trace);
        Gradients grads;
        backprop(m, trace, std::vector<double>{0.0, 0.0, 0.0}, grads);
        for (const Matrix& w : grads.weights) {
            for (const double v : w.data) CHECK(v == 0.0);
        }
        for (const auto& b : grads.biases) {
            for (const double v : b) CHECK(v == 0.0);
        }
    }
    SUBCASE("1-1 linear network: d/dw = x, d/db = 1") {
        Model m = init_model(Topology::dense(1, {}, 1), fake_classes(1), 0);
        m.weights[0].at(0, 0) = 1.7;
        m.biases[0][0] = -0.3;
        ForwardTrace trace;
        forward(m, std::vector<double>{3.0}, trace);
        Gradients grads;
        backprop(m, trace, std::vector<double>{1.0}, grads);
        CHECK(grads.weights[0].at(0, 0) == doctest::Approx(3.0));
        CHECK(grads.biases[0][0] == doctest::Approx(1.0));
    }
}

TEST_CASE("backprop matches central finite differences on random models") {
    rng::Engine g(2025);
    int models_checked = 0;
    while (models_checked < 12) {
        const Topology topology = small_topology(g);
        const Model m = random_model(g, topology, fake_classes(topology.output_size()));
        const std::vector<double> x = oracles::smooth_input(m, g, 1e-6);
        std::vector<double> target(topology.output_size(), 0.0);
        target[rng::below(g, target.size())] = 1.0;
        const auto result = oracles::check_gradients(m, x, target, 1e-5, 1e-4, 1e-8, 1e-8);
        CHECK(result.ok);
        CHECK(result.checked == topology.parameter_count());
        ++models_checked;
    }
}

TEST_CASE("model files round trip bit-exactly") {
    TempDir tmp("model");
    rng::Engine g(55);
    for (int rep = 0; rep < 20; ++rep) {
        const Topology topology = small_topology(g);
        const Model m = random_model(g, topology, fake_classes(topology.output_size()));
        save_model(m, tmp.file("m.txt"));
        const Model back = load_model(tmp.file("m.txt"));

        REQUIRE(back.topology.layer_sizes == m.topology.layer_sizes);
        CHECK(back.classes == m.classes);
        for (std::size_t l = 0; l < m.weights.size(); ++l) {
            CHECK(back.weights[l].data == m.weights[l].data);
            CHECK(back.biases[l] == m.biases[l]);
        }
        std::vector<double> x(topology.input_size());
        for (double& v : x) v = rng::uniform(g, -2.0, 2.0);
        CHECK(predict_class(back, x) == predict_class(m, x));
    }
}

TEST_CASE("model loader rejects malformed files") {
    TempDir tmp("model_err");
    const std::size_t hidden[] = {3};
    const Model m = init_model(Topology::dense(2, hidden, 2), fake_classes(2), 11);
    save_model(m, tmp.file("good.txt"));

    std::ifstream in(tmp.file("good.txt"));
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    in.close();

    const auto write_lines = [&](const std::filesystem::path& p,
                                 const std::vector<std::string>& ls) {
        std::ofstream out(p);
        for (const auto& l : ls) out << l << "\n";
    };

    SUBCASE("altered magic is a version error") {
        auto bad = lines;
        bad[0] = "FLOWPAT-MLP v2";
        write_lines(tmp.file("bad.txt"), bad);
        CHECK_THROWS_WITH_AS((void)load_model(tmp.file("bad.txt")),
                             doctest::Contains("version"), ValidationError);
    }
    SUBCASE("wrong number count in a weight row is a shape error") {
        auto bad = lines;
        bad[4] += " 1.0"; // first weight row gains an extra number
        write_lines(tmp.file("bad.txt"), bad);
        CHECK_THROWS_WITH_AS((void)load_model(tmp.file("bad.txt")),
                             doctest::Contains("expected"), ValidationError);
    }
    SUBCASE("truncated file is rejected") {
        auto bad = lines;
        bad.pop_back();
        bad.pop_back();
        write_lines(tmp.file("bad.txt"), bad);
        CHECK_THROWS_WITH_AS((void)load_model(tmp.file("bad.txt")),
                             doctest::Contains("truncated"), ValidationError);
    }
    SUBCASE("missing file is an i/o error") {
        CHECK_THROWS_AS((void)load_model(tmp.file("absent.txt")), IoError);
    }
}
