#include "fairsvt/checkpoint.hpp"
#include "fairsvt/gradcheck.hpp"
#include "fairsvt/ops.hpp"
#include "fairsvt/optim.hpp"

#include "doctest.h"
#include "test_util.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

using namespace fairsvt;
using nn::Matrix;
using nn::Tensor;

namespace {

constexpr double kGradTol = 1e-4;

double check(const std::function<Tensor()>& loss, std::vector<Tensor>& params) {
    return nn::grad_check<double>(loss, params);
}

// Soft targets in (0, 1) keep every output entry in play.
Matrix soft_targets(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
    return (testutil::randn(r, c, rng).array() * 0.3 + 0.5).cwiseMax(0.05).cwiseMin(0.95).matrix();
}

}  // namespace

TEST_CASE("linear gradient") {
    std::mt19937_64 rng(1);
    Tensor x = Tensor::parameter(testutil::randn(4, 3, rng));
    Tensor w = Tensor::parameter(testutil::randn(3, 5, rng));
    Tensor b = Tensor::parameter(testutil::randn(1, 5, rng));
    const Matrix probe = soft_targets(4, 5, rng);
    std::vector<Tensor> params{x, w, b};
    CHECK(check([&] { return nn::bce_with_logits(nn::linear(x, w, b), probe); }, params) < kGradTol);
}

TEST_CASE("linear matches a hand product") {
    Matrix x(2, 2), w(2, 1), b(1, 1);
    x << 1, 2, 3, 4;
    w << 0.5, -1;
    b << 0.25;
    const Matrix y = nn::linear(Tensor::constant(x), Tensor::constant(w), Tensor::constant(b)).value();
    CHECK(y(0, 0) == doctest::Approx(1 * 0.5 - 2 + 0.25));
    CHECK(y(1, 0) == doctest::Approx(3 * 0.5 - 4 + 0.25));
}

TEST_CASE("shape errors are reported") {
    Tensor x = Tensor::constant(Matrix::Ones(2, 3));
    CHECK_THROWS_AS(nn::linear(x, Tensor::constant(Matrix::Ones(2, 2)), Tensor::constant(Matrix::Ones(1, 2))),
                    nn::ShapeError);
    CHECK_THROWS_AS(nn::concat(x, Tensor::constant(Matrix::Ones(3, 1))), nn::ShapeError);
    CHECK_THROWS_AS(nn::conv1d(x, Tensor::constant(Matrix::Ones(6, 1)), Tensor::constant(Matrix::Ones(1, 1)), 2),
                    nn::ShapeError);
}

TEST_CASE("conv1d gradient, including stacked sequences") {
    std::mt19937_64 rng(2);
    for (Eigen::Index seq_len : {Eigen::Index(0), Eigen::Index(3)}) {
        Tensor x = Tensor::parameter(testutil::randn(6, 2, rng));
        Tensor w = Tensor::parameter(testutil::randn(3 * 2, 4, rng));
        Tensor b = Tensor::parameter(testutil::randn(1, 4, rng));
        std::vector<Tensor> params{x, w, b};
        const Matrix probe = soft_targets(6, 4, rng);
        auto loss = [&] { return nn::bce_with_logits(nn::conv1d(x, w, b, 3, seq_len), probe); };
        CHECK(check(loss, params) < kGradTol);
    }
}

TEST_CASE("conv1d against a direct sum with zero padding") {
    std::mt19937_64 rng(3);
    const Matrix x = testutil::randn(5, 2, rng);
    const Matrix w = testutil::randn(3 * 2, 3, rng);
    const Matrix b = testutil::randn(1, 3, rng);
    const Matrix y = nn::conv1d(Tensor::constant(x), Tensor::constant(w), Tensor::constant(b), 3).value();
    REQUIRE(y.rows() == 5);
    for (int t = 0; t < 5; ++t)
        for (int o = 0; o < 3; ++o) {
            double acc = b(0, o);
            for (int k = 0; k < 3; ++k) {
                const int src = t + k - 1;
                if (src < 0 || src >= 5) continue;
                for (int c = 0; c < 2; ++c) acc += x(src, c) * w(k * 2 + c, o);
            }
            CHECK(y(t, o) == doctest::Approx(acc).epsilon(1e-12));
        }
}

TEST_CASE("conv1d keeps stacked sequences independent") {
    std::mt19937_64 rng(4);
    const Matrix a = testutil::randn(4, 2, rng), c = testutil::randn(4, 2, rng);
    Matrix both(8, 2);
    both << a, c;
    const Tensor w = Tensor::constant(testutil::randn(5 * 2, 3, rng));
    const Tensor b = Tensor::constant(testutil::randn(1, 3, rng));
    const Matrix ya = nn::conv1d(Tensor::constant(a), w, b, 5).value();
    const Matrix yc = nn::conv1d(Tensor::constant(c), w, b, 5).value();
    const Matrix y = nn::conv1d(Tensor::constant(both), w, b, 5, 4).value();
    CHECK((y.topRows(4) - ya).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((y.bottomRows(4) - yc).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("elementwise and structural op gradients") {
    std::mt19937_64 rng(5);
    Tensor x = Tensor::parameter(testutil::randn(4, 3, rng));
    Tensor y = Tensor::parameter(testutil::randn(4, 2, rng));
    // Keep relu inputs away from the kink.
    for (Eigen::Index i = 0; i < x.value().size(); ++i)
        if (std::abs(x.value()(i)) < 0.1) x.mutable_value()(i) = 0.5;
    const Matrix targets = soft_targets(4, 5, rng);
    std::vector<Tensor> params{x, y};

    SUBCASE("relu") { CHECK(check([&] { return nn::bce_with_logits(nn::relu(x), Matrix(targets.leftCols(3))); }, params) < kGradTol); }
    SUBCASE("sigmoid") {
        CHECK(check([&] { return nn::bce_with_logits(nn::sigmoid(x), Matrix(targets.leftCols(3))); }, params) < kGradTol);
    }
    SUBCASE("softmax") {
        CHECK(check([&] { return nn::bce_with_logits(nn::softmax(x), Matrix(targets.leftCols(3))); }, params) < kGradTol);
    }
    SUBCASE("concat") { CHECK(check([&] { return nn::bce_with_logits(nn::concat(x, y), targets); }, params) < kGradTol); }
    SUBCASE("temporal_mean") {
        CHECK(check([&] { return nn::bce_with_logits(nn::temporal_mean(x), Matrix(targets.topLeftCorner(1, 3))); }, params) <
              kGradTol);
    }
    SUBCASE("slices") {
        auto loss = [&] {
            return nn::bce_with_logits(nn::slice_rows(nn::slice_cols(x, 1, 2), 1, 2), Matrix(targets.topLeftCorner(2, 2)));
        };
        CHECK(check(loss, params) < kGradTol);
    }
    SUBCASE("add and scale") {
        auto loss = [&] { return nn::bce_with_logits(nn::add(nn::scale(x, 0.7), x), Matrix(targets.leftCols(3))); };
        CHECK(check(loss, params) < kGradTol);
    }
    SUBCASE("cross-entropy") {
        const std::vector<int> cls{0, 2, 1, 2};
        CHECK(check([&] { return nn::ce_with_logits(x, cls); }, params) < kGradTol);
    }
}

TEST_CASE("relu derivative is 0 at 0") {
    Tensor x = Tensor::parameter(Matrix::Zero(1, 3));
    nn::backward(nn::bce_with_logits(nn::relu(x), Matrix::Zero(1, 3)));
    CHECK(x.grad().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("grad_reverse is identity forward and -lambda backward") {
    std::mt19937_64 rng(6);
    for (double lambda : {0.2, 0.5, 1.0, 2.0}) {
        Tensor x = Tensor::parameter(testutil::randn(3, 2, rng));
        Tensor x2 = Tensor::parameter(x.value());
        const Matrix targets = Matrix::Ones(3, 2);
        Tensor r = nn::grad_reverse(x, lambda);
        CHECK(r.value() == x.value());
        nn::backward(nn::bce_with_logits(r, targets));
        nn::backward(nn::bce_with_logits(x2, targets));
        CHECK((x.grad() + lambda * x2.grad()).cwiseAbs().maxCoeff() == doctest::Approx(0).epsilon(1e-15));
    }
}

TEST_CASE("detach blocks gradient") {
    Tensor x = Tensor::parameter(Matrix::Ones(2, 2));
    nn::backward(nn::bce_with_logits(nn::add(nn::detach(x), x), Matrix::Zero(2, 2)));
    Tensor y = Tensor::parameter(Matrix::Ones(2, 2));
    nn::backward(nn::bce_with_logits(nn::add(Tensor::constant(y.value()), y), Matrix::Zero(2, 2)));
    CHECK(x.grad() == y.grad());
}

TEST_CASE("sigmoid and softmax stay finite for huge logits") {
    Matrix big(1, 3);
    big << 1000, -1000, 0;
    const Matrix s = nn::sigmoid(Tensor::constant(big)).value();
    CHECK(s(0, 0) == 1.0);
    CHECK(s(0, 1) == doctest::Approx(0.0));
    const Matrix p = nn::softmax(Tensor::constant(big)).value();
    CHECK(p.allFinite());
    CHECK(p.sum() == doctest::Approx(1.0));
    const double bce = nn::bce_with_logits(Tensor::constant(big), Matrix::Zero(1, 3)).item();
    CHECK(std::isfinite(bce));
}

TEST_CASE("cross-entropy of uniform logits is ln K") {
    const std::vector<int> cls{4, 0};
    CHECK(nn::ce_with_logits(Tensor::constant(Matrix::Zero(2, 13)), cls).item() == doctest::Approx(std::log(13.0)));
    CHECK(std::log(13.0) == doctest::Approx(2.5649).epsilon(1e-4));
    const std::vector<int> bad{13, 0};
    CHECK_THROWS_AS(nn::ce_with_logits(Tensor::constant(Matrix::Zero(2, 13)), bad), std::out_of_range);
}

TEST_CASE("non-finite values raise") {
    Matrix m = Matrix::Ones(1, 1);
    m(0, 0) = std::nan("");
    CHECK_THROWS_AS(nn::linear(Tensor::constant(m), Tensor::constant(Matrix::Ones(1, 1)),
                               Tensor::constant(Matrix::Zero(1, 1))),
                    nn::NonFiniteError);
}

TEST_CASE("backward twice on one graph does not double count") {
    Tensor x = Tensor::parameter(Matrix::Constant(2, 2, 0.3));
    Tensor loss = nn::bce_with_logits(nn::relu(nn::scale(x, 2.0)), Matrix::Ones(2, 2));
    nn::backward(loss);
    const Matrix once = x.grad();
    x.zero_grad();
    nn::backward(loss);
    CHECK((x.grad() - once).cwiseAbs().maxCoeff() == 0.0);
    nn::backward(loss);  // leaves accumulate
    CHECK((x.grad() - 2 * once).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("adam first step moves by lr * sign(g)") {
    Tensor p = Tensor::parameter(Matrix::Constant(1, 2, 1.0));
    std::vector<Tensor> params{p};
    auto state = nn::make_adam_state<double>(params, 0.1);
    p.node()->grad_buffer() << 0.5, -2.0;
    nn::adam_step<double>(params, state);
    // m_hat = g, v_hat = g^2 after one bias-corrected step.
    CHECK(p.value()(0, 0) == doctest::Approx(1.0 - 0.1 * 0.5 / (0.5 + 1e-8)));
    CHECK(p.value()(0, 1) == doctest::Approx(1.0 + 0.1 * 2.0 / (2.0 + 1e-8)));
}

TEST_CASE("adam second step matches the recurrence") {
    Tensor p = Tensor::parameter(Matrix::Constant(1, 1, 0.0));
    std::vector<Tensor> params{p};
    auto state = nn::make_adam_state<double>(params, 0.01);
    const double g1 = 1.0, g2 = -3.0;
    p.node()->grad_buffer()(0, 0) = g1;
    nn::adam_step<double>(params, state);
    p.zero_grad();
    p.node()->grad_buffer()(0, 0) = g2;
    nn::adam_step<double>(params, state);
    double m = 0, v = 0, x = 0;
    for (int t = 1; t <= 2; ++t) {
        const double g = t == 1 ? g1 : g2;
        m = 0.9 * m + 0.1 * g;
        v = 0.999 * v + 0.001 * g * g;
        x -= 0.01 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
    }
    CHECK(p.value()(0, 0) == doctest::Approx(x).epsilon(1e-14));
}

TEST_CASE("float instantiation works") {
    using TF = nn::BasicTensor<float>;
    TF x = TF::parameter(nn::Mat<float>::Constant(2, 2, 0.5f));
    TF y = nn::linear(x, TF::constant(nn::Mat<float>::Ones(2, 1)), TF::constant(nn::Mat<float>::Zero(1, 1)));
    nn::backward(nn::bce_with_logits(y, nn::Mat<float>::Ones(2, 1)));
    CHECK(x.grad().allFinite());
    CHECK(x.grad()(0, 0) < 0.0f);
}

TEST_CASE("checkpoint round trip and corruption") {
    testutil::TempDir dir;
    std::mt19937_64 rng(7);
    std::vector<nn::NamedMatrix> recs{{"a.weight", testutil::randn(3, 4, rng)}, {"b", testutil::randn(1, 1, rng)}};
    const auto path = dir.path() / "m.ckpt";
    nn::write_checkpoint(path, recs);
    const auto back = nn::read_checkpoint(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].name == "a.weight");
    CHECK(back[0].value == recs[0].value);
    CHECK(back[1].value == recs[1].value);

    // Truncate.
    const auto size = std::filesystem::file_size(path);
    std::filesystem::resize_file(path, size - 3);
    CHECK_THROWS(nn::read_checkpoint(path));
    std::ofstream(path, std::ios::binary) << "NOTACKPT";
    CHECK_THROWS(nn::read_checkpoint(path));
}

namespace {

// w^T w assembled from 1x1 slices, so the same parameter feeds both operands.
Tensor sum_of_squares(const Tensor& w) {
    Tensor total;
    for (Eigen::Index i = 0; i < w.cols(); ++i) {
        Tensor s = nn::slice_cols(w, i, 1);
        Tensor sq = nn::linear(s, s, Tensor::constant(Matrix::Zero(1, 1)));
        total = total.defined() ? nn::add(total, sq) : sq;
    }
    return total;
}

Tensor dot_with(const Tensor& x, std::initializer_list<double> c) {
    Matrix w(static_cast<Eigen::Index>(c.size()), 1);
    Eigen::Index i = 0;
    for (double v : c) w(i++, 0) = v;
    return nn::linear(x, Tensor::constant(w), Tensor::constant(Matrix::Zero(1, 1)));
}

}  // namespace

TEST_CASE("bce of logit 0 against target 1 is ln 2") {
    CHECK(nn::bce_with_logits(Tensor::constant(Matrix::Zero(1, 1)), Matrix::Ones(1, 1)).item() ==
          doctest::Approx(std::log(2.0)));
}

TEST_CASE("relu backward masks negative inputs") {
    Matrix v(1, 2);
    v << -1, 2;
    Tensor x = Tensor::parameter(v);
    nn::backward(dot_with(nn::relu(x), {1, 1}));
    CHECK(x.grad()(0, 0) == 0.0);
    CHECK(x.grad()(0, 1) == 1.0);
}

TEST_CASE("grad_reverse example values") {
    Matrix v(1, 2);
    v << 3.0, -1.0;
    Tensor x = Tensor::parameter(v);
    Tensor r = nn::grad_reverse(x, 0.5);
    CHECK(r.value() == v);
    nn::backward(dot_with(r, {2, -4}));
    CHECK(x.grad()(0, 0) == -1.0);
    CHECK(x.grad()(0, 1) == 2.0);
}

TEST_CASE("grad_check on a quadratic") {
    Matrix v(1, 3);
    v << 1, 2, 3;
    Tensor w = Tensor::parameter(v);
    std::vector<Tensor> params{w};
    CHECK(sum_of_squares(w).item() == 14.0);
    CHECK(nn::grad_check<double>([&] { return sum_of_squares(w); }, params) <= 1e-7);
    nn::backward(sum_of_squares(w));
    CHECK(w.grad() == 2 * v);
}

TEST_CASE("grad_check rejects a non-finite loss and a bad step") {
    Tensor w = Tensor::parameter(Matrix::Ones(1, 1));
    std::vector<Tensor> params{w};
    CHECK_THROWS_AS(nn::grad_check<double>([&] { return sum_of_squares(w); }, params, 0.0), std::invalid_argument);
    Matrix bad(1, 1);
    bad << std::numeric_limits<double>::infinity();
    w.mutable_value() = bad;
    CHECK_THROWS_AS(nn::grad_check<double>([&] { return sum_of_squares(w); }, params), nn::NonFiniteError);
}

TEST_CASE("sgd step on w^2") {
    Tensor w = Tensor::parameter(Matrix::Ones(1, 1));
    std::vector<Tensor> params{w};
    nn::backward(sum_of_squares(w));
    nn::sgd_step<double>(params, 0.1);
    CHECK(w.value()(0, 0) == doctest::Approx(0.8));
}

TEST_CASE("adam: zero gradient leaves parameters, first step is about lr at any scale") {
    Tensor p = Tensor::parameter(Matrix::Constant(1, 1, 2.0));
    std::vector<Tensor> params{p};
    auto state = nn::make_adam_state<double>(params, 0.05);
    p.node()->grad_buffer()(0, 0) = 0.0;
    nn::adam_step<double>(params, state);
    CHECK(p.value()(0, 0) == 2.0);
    CHECK(state.step == 1);

    for (double g : {1e-3, 1.0, 1e3}) {
        Tensor q = Tensor::parameter(Matrix::Zero(1, 1));
        std::vector<Tensor> qs{q};
        auto s = nn::make_adam_state<double>(qs, 0.05);
        q.node()->grad_buffer()(0, 0) = g;
        nn::adam_step<double>(qs, s);
        CHECK(std::abs(q.value()(0, 0)) == doctest::Approx(0.05).epsilon(1e-4));
    }
}

TEST_CASE("adam rejects a mismatched state") {
    Tensor p = Tensor::parameter(Matrix::Zero(2, 2));
    std::vector<Tensor> params{p};
    std::vector<Tensor> other{Tensor::parameter(Matrix::Zero(3, 1))};
    auto state = nn::make_adam_state<double>(other, 0.1);
    CHECK_THROWS_AS(nn::adam_step<double>(params, state), nn::ShapeError);
}
