#include "doctest.h"

#include <random>

#include "stgnn/matrix.hpp"
#include "stgnn/rng.hpp"

using namespace stgnn;

TEST_CASE("matmul identity leaves matrix unchanged") {
    DenseMatrix m(2, 2);
    m(0, 0) = 3.0; m(0, 1) = -1.5; m(1, 0) = 0.25; m(1, 1) = 7.0;
    DenseMatrix out = matmul(DenseMatrix::identity(2), m);
    CHECK(max_abs_diff(out, m) == 0.0);
}

TEST_CASE("matmul hand-evaluated product") {
    DenseMatrix a(2, 2);
    a(0, 0) = 1; a(0, 1) = 2; a(1, 0) = 3; a(1, 1) = 4;
    DenseMatrix b(2, 1);
    b(0, 0) = 1; b(1, 0) = 1;
    DenseMatrix c = matmul(a, b);
    CHECK(c.rows == 2);
    CHECK(c.cols == 1);
    CHECK(c(0, 0) == doctest::Approx(3.0));
    CHECK(c(1, 0) == doctest::Approx(7.0));
}

TEST_CASE("matmul shape mismatch names both shapes") {
    DenseMatrix a(1, 3), b(2, 2);
    try {
        matmul(a, b);
        FAIL("expected dimension error");
    } catch (const std::invalid_argument& e) {
        std::string msg = e.what();
        CHECK(msg.find("1x3") != std::string::npos);
        CHECK(msg.find("2x2") != std::string::npos);
    }
}

TEST_CASE("matmul is associative on random conformable triples") {
    Rng rng(42);
    for (int trial = 0; trial < 20; ++trial) {
        DenseMatrix a = uniform_matrix(4, 5, -2.0, 2.0, rng);
        DenseMatrix b = uniform_matrix(5, 3, -2.0, 2.0, rng);
        DenseMatrix c = uniform_matrix(3, 6, -2.0, 2.0, rng);
        DenseMatrix lhs = matmul(matmul(a, b), c);
        DenseMatrix rhs = matmul(a, matmul(b, c));
        double rel = frobenius_norm(sub(lhs, rhs)) / frobenius_norm(lhs);
        CHECK(rel < 1e-9);
    }
}

TEST_CASE("activation basics") {
    DenseMatrix x(1, 4);
    x(0, 0) = -1.0; x(0, 1) = 2.0; x(0, 2) = 0.0; x(0, 3) = 0.5;
    DenseMatrix r = activation(Activation::relu, x);
    CHECK(r(0, 0) == 0.0);
    CHECK(r(0, 1) == 2.0);
    DenseMatrix s = activation(Activation::sigmoid, x);
    CHECK(s(0, 2) == doctest::Approx(0.5));
    DenseMatrix t = activation(Activation::tanh, x);
    CHECK(t(0, 3) == doctest::Approx(0.46211715726000974));
}

TEST_CASE("activation ranges on random input") {
    Rng rng(7);
    DenseMatrix x = uniform_matrix(10, 10, -15.0, 15.0, rng);
    DenseMatrix s = activation(Activation::sigmoid, x);
    DenseMatrix t = activation(Activation::tanh, x);
    DenseMatrix r = activation(Activation::relu, x);
    for (size_t i = 0; i < x.size(); ++i) {
        CHECK(s.data[i] > 0.0);
        CHECK(s.data[i] < 1.0);
        CHECK(t.data[i] > -1.0);
        CHECK(t.data[i] < 1.0);
        CHECK(r.data[i] >= 0.0);
    }
}

TEST_CASE("softmax_rows equal scores give uniform row") {
    DenseMatrix x(1, 3, 4.2);
    DenseMatrix y = softmax_rows(x);
    for (int j = 0; j < 3; ++j) CHECK(y(0, j) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("softmax_rows closed-form two-entry row") {
    DenseMatrix x(1, 2);
    x(0, 0) = 0.0;
    x(0, 1) = std::log(3.0);
    DenseMatrix y = softmax_rows(x);
    CHECK(y(0, 0) == doctest::Approx(0.25));
    CHECK(y(0, 1) == doctest::Approx(0.75));
}

TEST_CASE("softmax_rows stays finite under large scores") {
    DenseMatrix x(1, 2);
    x(0, 0) = 1000.0;
    x(0, 1) = 0.0;
    DenseMatrix y = softmax_rows(x);
    CHECK(y.all_finite());
    CHECK(y(0, 0) == doctest::Approx(1.0));
    CHECK(y(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("softmax_rows rows sum to one on random input") {
    Rng rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        DenseMatrix x = uniform_matrix(6, 9, -30.0, 30.0, rng);
        DenseMatrix y = softmax_rows(x);
        for (int i = 0; i < y.rows; ++i) {
            double s = 0.0;
            for (int j = 0; j < y.cols; ++j) {
                CHECK(y(i, j) >= 0.0);
                s += y(i, j);
            }
            CHECK(std::abs(s - 1.0) < 1e-9);
        }
    }
}
