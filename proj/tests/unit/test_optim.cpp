#include "ssal/optim.hpp"

#include <doctest.h>

#include <cmath>

using namespace ssal;

TEST_CASE("first Adam step moves by lr times the gradient sign")
{
    ad::Parameter p{"p", Matrix::Zero(1, 3), false};
    AdamW opt({&p}, AdamOptions{0.1, 0.9, 0.999, 1e-8, 0.0});
    Matrix g(1, 3);
    g << 2.0, -0.001, 0.0;
    opt.step({g});
    CHECK(p.value(0, 0) == doctest::Approx(-0.1).epsilon(1e-6));
    CHECK(p.value(0, 1) == doctest::Approx(0.1).epsilon(1e-4));
    CHECK(p.value(0, 2) == 0.0);
    CHECK(opt.steps() == 1);
}

TEST_CASE("second step matches the bias-corrected formula")
{
    ad::Parameter p{"p", Matrix::Constant(1, 1, 1.0), false};
    const double lr = 0.01, b1 = 0.9, b2 = 0.999, eps = 1e-8;
    AdamW opt({&p}, AdamOptions{lr, b1, b2, eps, 0.0});
    opt.step({Matrix::Constant(1, 1, 1.0)});
    opt.step({Matrix::Constant(1, 1, 3.0)});
    const double m = b1 * (1 - b1) * 1.0 + (1 - b1) * 3.0;
    const double v = b2 * (1 - b2) * 1.0 + (1 - b2) * 9.0;
    const double mh = m / (1 - b1 * b1), vh = v / (1 - b2 * b2);
    const double expected = 1.0 - lr * 1.0 / (1.0 + eps) - lr * mh / (std::sqrt(vh) + eps);
    CHECK(p.value(0, 0) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("weight decay is decoupled and limited to decaying parameters")
{
    ad::Parameter w{"w", Matrix::Constant(2, 2, 4.0), true};
    ad::Parameter b{"b", Matrix::Constant(1, 2, 4.0), false};
    AdamW opt({&w, &b}, AdamOptions{0.1, 0.9, 0.999, 1e-8, 0.5});
    opt.step({Matrix::Zero(2, 2), Matrix::Zero(1, 2)});
    CHECK(w.value(0, 0) == doctest::Approx(4.0 * (1.0 - 0.05)));
    CHECK(b.value(0, 0) == 4.0);
}

TEST_CASE("zero gradients never move a parameter without decay")
{
    ad::Parameter p{"p", Matrix::Random(3, 3), false};
    const Matrix before = p.value;
    AdamW opt({&p}, AdamOptions{1.0});
    for (int i = 0; i < 50; ++i) opt.step({Matrix::Zero(3, 3)});
    CHECK(p.value == before);
}

TEST_CASE("reads gradients from a tape")
{
    ad::Parameter p{"p", Matrix::Constant(1, 1, 3.0), false};
    AdamW opt({&p}, AdamOptions{0.5});
    for (int i = 0; i < 200; ++i) {
        ad::Tape t;
        ad::Var x = t.param(p);
        ad::Var loss = ad::sum(ad::mul(x, x));
        t.backward(loss);
        opt.step(t);
    }
    CHECK(std::abs(p.value(0, 0)) < 0.1);
}

TEST_CASE("optimizer errors")
{
    ad::Parameter p{"p", Matrix::Zero(1, 1), false};
    CHECK_THROWS_AS(AdamW({&p}, AdamOptions{0.0}), ValidationError);
    AdamW opt({&p}, AdamOptions{});
    CHECK_THROWS_AS(opt.step(std::vector<Matrix>{}), ValidationError);
}
