#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"

using namespace liequant;
using lqtest::P;

namespace {

// the expression strings every other module leans on
const std::vector<std::string> golden_corpus = {
    "sqrt(1 - 2*k/(3*omega^2)*X)",
    "27*omega^6/(2*k^2)/(k*xdot + k^2/3*x^2 + 3*omega^2) + 3*omega^2/(2*k)*xdot - 9*omega^4/(2*k^2)",
    "-27*omega^6/(2*k)/(k*xdot + k^2/3*x^2 + 3*omega^2)^2 + 3*omega^2/(2*k)",
    "3*omega^2/(2*k)*x - 9*omega^4/(2*k^2)*t",
    "9*omega^3*A*sin(omega*t + delta)/(k - 3*omega^2*k*A*cos(omega*t + delta))",
    "Xdot^2/(2*omega^2*(1 - 2*k/(3*omega^2)*X)) - 9*omega^4/(2*k^2)*(1 - sqrt(1 - 2*k/(3*omega^2)*X))^2",
    "x^2 + sin(omega*t)",
    "exp(-x^2/2)*cos(2*omega*t)",
    "x/(xdot + k/3*x^2 + 3*omega^2/k)",
};

}  // namespace

TEST_CASE("parse builds the expected trees") {
    Expr e = P("x^2 + sin(w*t)");
    REQUIRE(e.kind() == NodeKind::Add);
    REQUIRE(e.nchildren() == 2);
    bool saw_pow = false, saw_sin = false;
    for (const auto& k : e.children()) {
        if (k.kind() == NodeKind::Pow) {
            saw_pow = true;
            CHECK(k.child(0).same(Expr::variable("x")));
            CHECK(k.child(1).integer_value() == 2);
        }
        if (k.kind() == NodeKind::Func && k.func_kind() == FuncKind::Sin) {
            saw_sin = true;
            CHECK(k.child(0).kind() == NodeKind::Mul);
        }
    }
    CHECK(saw_pow);
    CHECK(saw_sin);

    Expr r = P("sqrt(1 - 2*k/(3*w^2)*X)");
    REQUIRE(r.kind() == NodeKind::Pow);
    CHECK(r.child(1).real_value() == 0.5);
}

TEST_CASE("constants fold eagerly") {
    Expr e = P("2*(3+4)");
    REQUIRE(e.kind() == NodeKind::Constant);
    CHECK(e.integer_value() == 14);

    CHECK(P("2^10").integer_value() == 1024);
    CHECK(P("(1+2*i)*(1-2*i)").integer_value() == 5);
    // no node may keep all-constant children
    Expr f = P("sin(0) + cos(0)*exp(0)");
    CHECK(f.integer_value() == 1);
}

TEST_CASE("parse errors carry a byte offset") {
    CHECK_THROWS_AS(P("x +* y"), ParseError);
    CHECK_THROWS_AS(P("foo(x)"), ParseError);
    try {
        P("1 + bar(2)");
    } catch (const ParseError& err) {
        CHECK(err.offset == 4);
    }
    try {
        P("x ) y");
    } catch (const ParseError& err) {
        CHECK(err.offset == 2);
    }
}

TEST_CASE("render round-trips structurally") {
    for (const auto& s : golden_corpus) {
        Expr e = P(s);
        Expr back = P(render(e));
        CAPTURE(s);
        CAPTURE(render(e));
        CHECK(back.same(e));
    }
    // nested and signed shapes
    for (const char* s : {"-x^2", "2^-3*x", "(x+1)^(3/2)", "1/sqrt(x)", "-(x - y)/(x*y)",
                          "exp(i*omega*t)", "pow(x, y+1)"}) {
        Expr e = P(s);
        CHECK(P(render(e)).same(e));
    }
}

TEST_CASE("differentiate: basic identities") {
    Expr d1 = differentiate(P("sin(omega*t)"), "t");
    CHECK(d1.same(P("omega*cos(omega*t)")));

    Expr rad = P("sqrt(1 - 2*k/(3*omega^2)*X)");
    Expr d2 = differentiate(rad, "X");
    CHECK(d2.same(P("-k/(3*omega^2*sqrt(1 - 2*k/(3*omega^2)*X))")));

    // derivative with respect to an absent name is zero
    CHECK(differentiate(P("x^2 + 1"), "q").is_zero());
    // parameters are differentiable too
    CHECK(differentiate(P("k^2*x"), "k").same(P("2*k*x")));
}

TEST_CASE("differentiate matches the finite-difference oracle on the corpus") {
    Domain dom = lqtest::golden_domain();
    Rng rng(101);
    for (const auto& s : golden_corpus) {
        Expr e = P(s);
        for (const auto& name : free_names(e)) {
            CAPTURE(s);
            CAPTURE(name);
            CHECK(lqtest::max_deriv_mismatch(e, name, dom, rng) <= 1e-6);
        }
    }
}

TEST_CASE("d/dx of the inverse-cubic Lagrangian at the pinned point") {
    Expr L = P(golden_corpus[1]);
    Bindings pt{{"k", 1.0}, {"omega", 1.0}, {"x", 0.2}, {"xdot", 0.1}};
    Complex sym = eval_numeric(differentiate(L, "x"), pt);
    Complex fd = lqtest::central_diff(L, "x", pt, 1e-6);
    CHECK(std::abs(sym - fd) <= 1e-7 * std::max(1.0, std::abs(sym)));
}

TEST_CASE("eval_numeric basics and principal branches") {
    CHECK(eval_numeric(P("x^2"), {{"x", 3.0}}) == Complex(9.0, 0.0));

    // zero-amplitude classical solution vanishes identically
    Expr sol = P(golden_corpus[4]);
    for (double tv : {0.0, 0.4, 1.7}) {
        Complex v = eval_numeric(sol, {{"A", 0.0}, {"delta", 0.0}, {"t", tv},
                                       {"k", 1.3}, {"omega", 0.8}});
        CHECK(std::abs(v) == 0.0);
    }

    // principal sqrt of a negative radicand
    Complex r = eval_numeric(P("sqrt(1 - 2*k/(3*omega^2)*X)"),
                             {{"k", 1.0}, {"omega", 1.0}, {"X", 2.0}});
    CHECK(r.real() == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(r.imag() == doctest::Approx(0.5773502691896257).epsilon(1e-12));

    CHECK_THROWS_AS(eval_numeric(P("x + y"), {{"x", 1.0}}), UnboundNameError);
    CHECK_THROWS_AS(eval_numeric(P("1/x"), {{"x", 0.0}}), PoleError);
    CHECK_THROWS_AS(eval_numeric(P("ln(x)"), {{"x", 0.0}}), PoleError);
}

TEST_CASE("equivalent: trig identity and gauge split") {
    Domain dom = lqtest::golden_domain();
    Rng rng(7);
    CHECK(equivalent(P("sin(x)^2 + cos(x)^2"), P("1"), dom, rng));
    CHECK_FALSE(equivalent(P("sin(x)^2"), P("1"), dom, rng));

    // the last two terms of the Lagrangian are exactly Dt of the gauge
    Expr L = P(golden_corpus[1]);
    Expr G = P(golden_corpus[3]);
    Expr DtG = differentiate(G, "t") + Expr::variable("xdot") * differentiate(G, "x");
    Expr head = P("27*omega^6/(2*k^2)/(k*xdot + k^2/3*x^2 + 3*omega^2)");
    CHECK(equivalent(head, L - DtG, dom, rng));

    // momentum is dL/dxdot
    Expr mom = P(golden_corpus[2]);
    CHECK(equivalent(mom, differentiate(L, "xdot"), dom, rng));
}

TEST_CASE("equivalent is reflexive, symmetric and transitive on the corpus") {
    Domain dom = lqtest::golden_domain();
    for (const auto& s : golden_corpus) {
        Expr e = P(s);
        Rng r1(42), r2(42);
        CHECK(equivalent(e, e, dom, r1));
        // symmetric under a shared sample stream
        Expr shifted = simplify(e + P("x - x"));
        Rng r3(9), r4(9);
        CHECK(equivalent(e, shifted, dom, r3) == equivalent(shifted, e, dom, r4));
    }
}

TEST_CASE("simplify preserves value") {
    Domain dom = lqtest::golden_domain();
    Rng rng(11);
    std::vector<Expr> shapes = {
        Expr::exp(P("ln(x^2+1)") * Expr::real(0.5)),
        Expr::exp(P("x") + P("omega*t")),
        P("sqrt(1 - 2*k/(3*omega^2)*X)^3"),
        P("(x+1)^2/(x+1)"),
    };
    for (const Expr& e : shapes) {
        Expr s = simplify(e);
        CAPTURE(render(e));
        CHECK(equivalent(e, s, dom, rng));
    }
}

TEST_CASE("the recurring radical squares back to its radicand") {
    Expr u = P("sqrt(1 - 2*k/(3*omega^2)*X)");
    Expr u2 = Expr::pow(u, Expr::integer(2));
    CHECK(u2.same(P("1 - 2*k/(3*omega^2)*X")));
    // and stays exact through products
    Expr prod = u * u * P("k");
    CHECK(prod.same(P("k*(1 - 2*k/(3*omega^2)*X)")));
}

TEST_CASE("domain constraints reject and resample") {
    Domain d;
    d.range("X", -4.0, 4.0).range("k", 0.5, 2.0).range("omega", 0.5, 2.0);
    d.constrain(P("1 - 2*k/(3*omega^2)*X - 0.05"));
    Rng rng(5);
    for (int i = 0; i < 50; ++i) {
        Bindings b = d.sample(rng);
        double kv = b["k"].real(), wv = b["omega"].real(), Xv = b["X"].real();
        CHECK(1 - 2 * kv / (3 * wv * wv) * Xv > 0.05 - 1e-12);
    }
    // degenerate: impossible constraint exhausts the retry budget
    Domain bad;
    bad.range("x", 0.0, 1.0).constrain(P("-1 - x"));
    CHECK_THROWS_AS(bad.sample(rng, 50), DomainError);
}

TEST_CASE("deterministic sampling under a fixed seed") {
    Domain dom = lqtest::golden_domain();
    Rng a(123), b(123);
    Bindings s1 = dom.sample(a), s2 = dom.sample(b);
    CHECK(s1 == s2);
}
