#include "ssal/autodiff.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace ssal;
using namespace ssal::ad;

namespace {

Matrix row(std::initializer_list<double> v)
{
    Matrix m(1, static_cast<Index>(v.size()));
    Index i = 0;
    for (double x : v) m(0, i++) = x;
    return m;
}

Parameter random_param(const std::string& name, Index r, Index c, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Parameter p{name, Matrix(r, c), true};
    for (Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = u(rng);
    return p;
}

} // namespace

TEST_CASE("forward examples")
{
    Tape t;
    CHECK(sigmoid(t.scalar_constant(0.0)).scalar() == 0.5);
    CHECK(mse(t.constant(row({1, 2})), t.constant(row({1, 2}))).scalar() == 0.0);
    Matrix in(3, 1), k(2, 1);
    in << 1, 2, 3;
    k << 1, 1;
    const Matrix out = conv1d_causal(t.constant(in), t.constant(k), 2).value();
    CHECK(out(0, 0) == 1.0);
    CHECK(out(1, 0) == 3.0);
    CHECK(out(2, 0) == 5.0);
}

TEST_CASE("x^2 and bilinear gradients")
{
    Parameter x{"x", Matrix::Constant(1, 1, 3.0), true};
    Tape t;
    Var vx = t.param(x);
    t.backward(mul(vx, vx));
    CHECK(t.gradient(x)(0, 0) == 6.0);

    Parameter a = random_param("a", 3, 4, 1), b = random_param("b", 3, 4, 2);
    Tape t2;
    t2.backward(sum(mul(t2.param(a), t2.param(b))));
    CHECK(t2.gradient(a) == b.value);
    CHECK(t2.gradient(b) == a.value);
}

TEST_CASE("binding a parameter twice reuses the node")
{
    Parameter x{"x", Matrix::Constant(1, 1, 2.0), true};
    Tape t;
    CHECK(t.param(x).id() == t.param(x).id());
    Var y = add(t.param(x), t.param(x));
    t.backward(y);
    CHECK(t.gradient(x)(0, 0) == 2.0);
}

TEST_CASE("shape errors name the op and shapes")
{
    Tape t;
    Var a = t.constant(Matrix::Zero(2, 3)), b = t.constant(Matrix::Zero(3, 2));
    CHECK_THROWS_WITH_AS(add(a, b), doctest::Contains("2x3"), ValidationError);
    CHECK_THROWS_AS(matmul(a, a), ValidationError);
    CHECK_THROWS_AS(mul(a, b), ValidationError);
    CHECK_THROWS_AS(slice(a, 1, 1, 2, 2), ValidationError);
    CHECK_THROWS_AS(concat(a, b, 0), ValidationError);
    CHECK_THROWS_AS(t.backward(a), ValidationError);
    CHECK_THROWS_AS(lag_dot(a, t.constant(Matrix::Zero(3, 5))), ValidationError);
}

TEST_CASE("cycles are detected")
{
    Tape t;
    Var a = t.scalar_constant(1.0);
    Var b = add_scalar(a, 1.0);
    t.node(a.id()).parents.push_back(b.id());
    t.node(a.id()).requires_grad = true;
    t.node(b.id()).requires_grad = true;
    CHECK_THROWS_WITH_AS(t.backward(b), doctest::Contains("cycle"), ValidationError);
}

TEST_CASE("explicit tracking skips untracked parameters")
{
    Parameter w{"w", Matrix::Constant(1, 1, 2.0), true};
    Parameter m{"m", Matrix::Constant(1, 1, 3.0), false};
    Tape t(TrackPolicy::explicit_only);
    t.track(m);
    t.backward(mul(t.param(w), t.param(m)));
    CHECK(t.gradient(m)(0, 0) == 2.0);
    CHECK(t.gradient(w)(0, 0) == 0.0);
}

TEST_CASE("backward is deterministic")
{
    Parameter a = random_param("a", 4, 3, 7);
    auto run = [&] {
        Tape t;
        Var h = tanh(matmul(t.param(a), transpose(t.param(a))));
        t.backward(mean(pow(h, 2.0)));
        return t.gradient(a);
    };
    CHECK(run() == run());
}

TEST_CASE("relative error definition")
{
    CHECK(relative_error(1.0, 1.0) == 0.0);
    CHECK(relative_error(1.0, 3.0) == doctest::Approx(0.5));
    CHECK(relative_error(0.0, 1e-12) == doctest::Approx(1e-4));
}

TEST_CASE("grad_check on a quadratic is exact")
{
    Parameter x = random_param("x", 2, 3, 3);
    auto f = [&](Tape& t) { return sum(mul(t.param(x), t.param(x))); };
    Parameter* ps[] = {&x};
    const auto rep = grad_check(f, ps);
    CHECK(rep.max_rel_error < 1e-10);
    CHECK(rep.checked == 6);
    CHECK(rep.excluded == 0);
}

TEST_CASE("grad_check excludes relu kinks")
{
    Parameter x{"x", row({0.0, 1.0, -1.0}), true};
    auto f = [&](Tape& t) { return sum(relu(t.param(x))); };
    Parameter* ps[] = {&x};
    const auto rep = grad_check(f, ps);
    CHECK(rep.excluded == 1);
    CHECK(rep.checked == 2);
    CHECK(rep.max_rel_error < 1e-10);
}

TEST_CASE("every primitive passes grad_check")
{
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Parameter a = random_param("a", 3, 4, 10 + seed), b = random_param("b", 3, 4, 20 + seed);
        Parameter c = random_param("c", 4, 2, 30 + seed), k = random_param("k", 9, 2, 40 + seed);
        Parameter lw = random_param("lw", 4, 2, 50 + seed);
        Matrix pos = a.value.cwiseAbs().array() + 0.5;
        Parameter p{"p", pos, true};
        Parameter* ps[] = {&a, &b, &c, &k, &lw, &p};
        auto f = [&](Tape& t) {
            Var va = t.param(a), vb = t.param(b), vc = t.param(c), vp = t.param(p);
            Var terms = sum(mul(sigmoid(va), tanh(vb)));
            terms = add(terms, mean(matmul(sub(va, vb), vc)));
            terms = add(terms, sum(softmax(va, 1)) * 0.0 + sum(mul(softmax(va, 0), vb)));
            terms = add(terms, sum(mul(softmax(vb, 1), va)));
            terms = add(terms, mse(va, scale(vb, 0.5)));
            terms = add(terms, mean(pow(vp, 1.5)));
            terms = add(terms, sum(sqrt(vp)));
            terms = add(terms, sum(concat(slice(va, 0, 1, 2, 2), slice(vb, 1, 0, 2, 2), 1)));
            terms = add(terms, sum(mul(flatten(va), flatten(vb))));
            terms = add(terms, sum(mul(repeat_rows(slice(va, 0, 0, 1, 4), 3), vb)));
            terms = add(terms, sum(tanh(conv1d_causal(transpose(vb), t.param(k), 3))));
            terms = add(terms, sum(pow(lag_dot(va, slice(t.param(lw), 0, 0, 4, 2)), 2.0)));
            terms = add(terms, sum(mul(layer_norm_rows(va), vb)));
            terms = add(terms, add_scalar(sum(transpose(va)), 2.0));
            return terms;
        };
        const auto rep = grad_check(f, ps);
        CHECK(rep.max_rel_error < 1e-4);
        CHECK(rep.checked > 0);
    }
}
