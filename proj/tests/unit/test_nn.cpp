#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numeric>

#include "qsynth/data/generators.hpp"
#include "qsynth/errors.hpp"
#include "qsynth/nn/checkpoint.hpp"
#include "qsynth/nn/model.hpp"
#include "qsynth/nn/train.hpp"
#include "fixtures.hpp"

using namespace qsynth;
using namespace qsynth::nn;

namespace {

ModelSpec linear_spec(Shape input, std::size_t k) {
    ModelSpec s;
    s.architecture = Architecture::linear_softmax;
    s.input = input;
    s.num_classes = k;
    s.hidden = {};
    return s;
}

LabeledSet separable_blobs(std::uint64_t seed) {
    return data::gen_blobs(100, 2, Shape{2, 4}, 6.0, 1.0, seed);
}

}  // namespace

TEST(ModelSpec, Validation) {
    ModelSpec s = linear_spec({1, 4}, 2);
    EXPECT_NO_THROW(s.validate());
    s.hidden = {3};
    EXPECT_THROW(s.validate(), InvalidArgument);

    s = linear_spec({1, 4}, 1);
    EXPECT_THROW(s.validate(), InvalidArgument);

    s = linear_spec({1, 4}, 2);
    s.architecture = Architecture::mlp;
    EXPECT_THROW(s.validate(), InvalidArgument);  // no hidden layer
    s.hidden = {0};
    EXPECT_THROW(s.validate(), InvalidArgument);

    s.architecture = Architecture::temporal_conv;
    s.hidden = {4};
    s.kernel_width = 5;  // longer than the 4 samples
    EXPECT_THROW(s.validate(), InvalidArgument);
    s.kernel_width = 3;
    EXPECT_NO_THROW(s.validate());

    EXPECT_EQ(parse_architecture("temporal_conv"), Architecture::temporal_conv);
    EXPECT_THROW(parse_architecture("eegnet"), InvalidArgument);
}

TEST(Model, LinearLogitsByHand) {
    // W = [[1, 2], [-1, 0.5]], b = [0.25, -1]
    const Model m(linear_spec({1, 2}, 2), {1, 2, -1, 0.5, 0.25, -1});
    const Epoch x(Shape{1, 2}, {3, -1});
    const auto z = m.logits(x);
    EXPECT_DOUBLE_EQ(z[0], 3 - 2 + 0.25);
    EXPECT_DOUBLE_EQ(z[1], -3 - 0.5 - 1);
    EXPECT_EQ(m.predict(x), 0);

    const auto p = m.forward(x);
    EXPECT_NEAR(p[0] + p[1], 1.0, 1e-15);
    EXPECT_NEAR(p[0], 1.0 / (1.0 + std::exp(z[1] - z[0])), 1e-15);
    EXPECT_NEAR(m.loss(x, 1), std::log(1.0 + std::exp(z[0] - z[1])), 1e-12);
    EXPECT_NEAR(m.loss(x, 1, 2.5), 2.5 * m.loss(x, 1), 1e-12);
}

TEST(Model, LinearGradientClosedForm) {
    // d/dx (lse(Wx + b) - z_y) = W^T (p - e_y)
    const Model m(linear_spec({1, 2}, 2), {1, 2, -1, 0.5, 0.25, -1});
    const Epoch x(Shape{1, 2}, {0.3, -0.7});
    const auto p = m.forward(x);
    const auto g = m.input_gradient(x, 0);
    EXPECT_NEAR(g[0], (p[0] - 1) * 1 + p[1] * -1, 1e-14);
    EXPECT_NEAR(g[1], (p[0] - 1) * 2 + p[1] * 0.5, 1e-14);
}

TEST(Model, TiesPredictLowestIndex) {
    const Model m(linear_spec({1, 3}, 3), std::vector<double>(12, 0.0));
    EXPECT_EQ(m.predict(Epoch(Shape{1, 3}, {1, 2, 3})), 0);
}

TEST(Model, RejectsWrongShapesAndLabels) {
    const Model m(linear_spec({2, 3}, 2));
    EXPECT_THROW(m.predict(Epoch(Shape{3, 2})), ShapeMismatch);
    EXPECT_THROW(m.loss(Epoch(Shape{2, 3}), 2), InvalidArgument);
    EXPECT_THROW(m.input_gradient(Epoch(Shape{2, 3}), -1), InvalidArgument);
    EXPECT_THROW(Model(linear_spec({2, 3}, 2), {1.0, 2.0}), InvalidArgument);
}

TEST(Model, InitializationIsSeeded) {
    ModelSpec s = linear_spec({2, 3}, 2);
    s.seed = 11;
    const Model a(s), b(s);
    EXPECT_TRUE(std::equal(a.parameters().begin(), a.parameters().end(), b.parameters().begin()));
    s.seed = 12;
    const Model c(s);
    EXPECT_FALSE(std::equal(a.parameters().begin(), a.parameters().end(), c.parameters().begin()));
    const double bound = 1.0 / std::sqrt(6.0);
    for (double v : a.parameters()) EXPECT_LE(std::fabs(v), bound);
}

TEST(Model, ParameterLayout) {
    ModelSpec s;
    s.architecture = Architecture::mlp;
    s.input = {2, 3};
    s.num_classes = 4;
    s.hidden = {5, 3};
    const Model m(s);
    const auto layers = m.layer_parameters();
    ASSERT_EQ(layers.size(), 3u);
    EXPECT_EQ(layers[0].size(), 6u * 5u + 5u);
    EXPECT_EQ(layers[1].size(), 5u * 3u + 3u);
    EXPECT_EQ(layers[2].size(), 3u * 4u + 4u);
    EXPECT_EQ(m.parameter_count(), 35u + 18u + 16u);

    s.architecture = Architecture::temporal_conv;
    s.input = {2, 10};
    s.hidden = {3};
    s.kernel_width = 4;
    s.pool_width = 2;
    const Model t(s);
    // conv 3 x 2 x 4 + 3, pool (10 - 4 + 1) / 2 = 3 windows per filter, dense 9 -> 4
    EXPECT_EQ(t.parameter_count(), 24u + 3u + 9u * 4u + 4u);
}

class InputGradient : public ::testing::TestWithParam<Architecture> {};

TEST_P(InputGradient, MatchesWideCentralDifferences) {
    Rng rng(derive_seed(3, static_cast<std::size_t>(GetParam()), "grad"));
    for (int trial = 0; trial < 5; ++trial) {
        const Model m = fixtures::random_model(GetParam(), rng);
        for (int i = 0; i < 5; ++i) {
            const Label y = static_cast<Label>(rng() % m.num_classes());
            Epoch x = fixtures::random_epoch(m.input_shape(), rng);
            while (!fixtures::smooth_at(m, x, y, 1e-3)) x = fixtures::random_epoch(m.input_shape(), rng);
            const auto numeric = fixtures::numeric_input_gradient(m, x, y, 1e-3);
            EXPECT_LT(fixtures::relative_error(m.input_gradient(x, y), numeric), 1e-4);
        }
    }
}

INSTANTIATE_TEST_SUITE_P(AllArchitectures, InputGradient,
                         ::testing::Values(Architecture::linear_softmax, Architecture::mlp,
                                           Architecture::temporal_conv));

TEST(Model, ParameterGradientMatchesCentralDifferences) {
    Rng rng(77);
    for (auto arch : {Architecture::linear_softmax, Architecture::mlp, Architecture::temporal_conv}) {
        Model m = fixtures::random_model(arch, rng);
        const Epoch x = fixtures::random_epoch(m.input_shape(), rng);
        const Label y = 1;
        std::vector<double> grad(m.parameter_count(), 0.0);
        const double loss = m.accumulate_parameter_gradient(x, y, 1.5, grad);
        EXPECT_NEAR(loss, m.loss(x, y, 1.5), 1e-12);

        double worst = 0.0, scale = 0.0;
        const double h = 1e-6;
        for (std::size_t i = 0; i < m.parameter_count(); ++i) {
            const double orig = m.parameters()[i];
            m.parameters()[i] = orig + h;
            const double up = m.loss(x, y, 1.5);
            m.parameters()[i] = orig - h;
            const double down = m.loss(x, y, 1.5);
            m.parameters()[i] = orig;
            const double fd = (up - down) / (2 * h);
            worst = std::max(worst, std::fabs(fd - grad[i]));
            scale = std::max(scale, std::fabs(fd));
        }
        EXPECT_LT(worst / scale, 1e-5) << to_string(arch);
    }
}

TEST(ClassWeights, InverseFrequencyHasMeanOne) {
    const std::vector<Label> labels{0, 0, 0, 1};
    const auto w = class_weights(labels, 3, ClassWeighting::inverse_frequency);
    EXPECT_DOUBLE_EQ(w[0], 0.5);
    EXPECT_DOUBLE_EQ(w[1], 1.5);
    EXPECT_DOUBLE_EQ(w[2], 0.0);
    EXPECT_EQ(class_weights(labels, 3, ClassWeighting::uniform), (std::vector<double>{1, 1, 1}));
    EXPECT_THROW(class_weights(std::vector<Label>{1, 1}, 2, ClassWeighting::inverse_frequency), InvalidArgument);
}

TEST(Train, SeparableBlobsReachHighAccuracy) {
    const auto data = separable_blobs(5);
    ModelSpec s = linear_spec(data.shape(), 2);
    s.seed = 9;
    Model m(s);
    TrainConfig cfg;
    cfg.shuffle_seed = 4;
    train(m, data, cfg);
    EXPECT_GE(accuracy(m, data), 0.99);
}

TEST(Train, DeterministicGivenSeeds) {
    const auto data = separable_blobs(6);
    ModelSpec s;
    s.architecture = Architecture::mlp;
    s.input = data.shape();
    s.num_classes = 2;
    s.hidden = {6};
    s.seed = 2;
    TrainConfig cfg;
    cfg.shuffle_seed = 8;
    cfg.max_epochs = 15;
    Model a(s), b(s);
    const auto ha = train(a, data, cfg);
    const auto hb = train(b, data, cfg);
    EXPECT_EQ(ha.validation_loss, hb.validation_loss);
    EXPECT_TRUE(std::equal(a.parameters().begin(), a.parameters().end(), b.parameters().begin()));
}

TEST(Train, EarlyStoppingKeepsBestEpoch) {
    // Labels independent of inputs: validation loss stops improving quickly.
    Rng rng(1);
    LabeledSet data;
    for (int i = 0; i < 60; ++i) data.add(fixtures::random_epoch(Shape{1, 8}, rng), i % 2);
    ModelSpec s;
    s.architecture = Architecture::mlp;
    s.input = {1, 8};
    s.num_classes = 2;
    s.hidden = {16};
    Model m(s);
    TrainConfig cfg;
    cfg.learning_rate = 0.05;
    cfg.patience = 3;
    cfg.max_epochs = 500;
    const auto h = train(m, data, cfg);
    ASSERT_TRUE(h.stopped_early);
    EXPECT_EQ(h.validation_loss.size(), h.best_epoch + cfg.patience);
    EXPECT_DOUBLE_EQ(h.best_validation_loss,
                     *std::min_element(h.validation_loss.begin(), h.validation_loss.end()));
}

TEST(Train, SecondCallContinuesOptimizer) {
    const auto data = separable_blobs(7);
    Model m(linear_spec(data.shape(), 2));
    TrainConfig cfg;
    cfg.max_epochs = 3;
    train(m, data, cfg);
    const auto steps = m.optimizer_state().step;
    EXPECT_GT(steps, 0u);
    train(m, data, cfg);
    EXPECT_GT(m.optimizer_state().step, steps);
    m.initialize();
    EXPECT_EQ(m.optimizer_state().step, 0u);
}

TEST(Train, RejectsBadInput) {
    Model m(linear_spec({1, 2}, 2));
    TrainConfig cfg;
    EXPECT_THROW(train(m, LabeledSet{}, cfg), InvalidArgument);
    LabeledSet bad;
    bad.add(Epoch(Shape{1, 2}), 5);
    EXPECT_THROW(train(m, bad, cfg), InvalidArgument);
    cfg.validation_fraction = 1.0;
    EXPECT_THROW(cfg.validate(), InvalidArgument);
}

TEST(Train, SingleExampleValidatesOnItself) {
    LabeledSet one;
    one.add(Epoch(Shape{1, 2}, {1.0, -1.0}), 1);
    Model m(linear_spec({1, 2}, 2));
    TrainConfig cfg;
    cfg.max_epochs = 50;
    cfg.learning_rate = 0.1;
    const auto h = train(m, one, cfg);
    EXPECT_EQ(m.predict(one.epoch(0)), 1);
    EXPECT_LT(h.best_validation_loss, h.validation_loss.front() + 1e-12);
}

TEST(Checkpoint, RoundTripIsExact) {
    Rng rng(21);
    const auto path = std::filesystem::temp_directory_path() / "qsynth_ckpt_test.json";
    for (auto arch : {Architecture::linear_softmax, Architecture::mlp, Architecture::temporal_conv}) {
        const Model m = fixtures::random_model(arch, rng);
        write_checkpoint(path.string(), m);
        const Model r = read_checkpoint(path.string());
        EXPECT_EQ(r.spec().architecture, arch);
        EXPECT_EQ(r.spec().hidden, m.spec().hidden);
        EXPECT_EQ(r.spec().seed, m.spec().seed);
        ASSERT_EQ(r.parameter_count(), m.parameter_count());
        EXPECT_TRUE(std::equal(m.parameters().begin(), m.parameters().end(), r.parameters().begin()));
        const Epoch x = fixtures::random_epoch(m.input_shape(), rng);
        EXPECT_EQ(m.logits(x), r.logits(x));
    }
    std::filesystem::remove(path);
}

TEST(Checkpoint, RejectsForeignDocuments) {
    const Model m(linear_spec({1, 2}, 2));
    auto doc = checkpoint_to_json(m);
    doc["format"] = "something-else";
    EXPECT_THROW(checkpoint_from_json(doc), InvalidArgument);
    doc = checkpoint_to_json(m);
    doc.erase("parameters");
    EXPECT_THROW(checkpoint_from_json(doc), InvalidArgument);
    doc = checkpoint_to_json(m);
    doc["parameters"].push_back(1.0);
    EXPECT_THROW(checkpoint_from_json(doc), InvalidArgument);
}
