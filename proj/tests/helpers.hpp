#ifndef LIEQUANT_TESTS_HELPERS_HPP
#define LIEQUANT_TESTS_HELPERS_HPP

#include <cmath>
#include <string>
#include <vector>

#include "liequant/expr.hpp"

namespace lqtest {

using namespace liequant;

inline Expr P(const std::string& s) { return parse(s); }

/// Central finite difference of e along `name` at a real point, step h.
inline Complex central_diff(const Expr& e, const std::string& name, Bindings pt,
                            double h = 1e-6) {
    Bindings hi = pt, lo = pt;
    hi[name] += Complex(h, 0.0);
    lo[name] -= Complex(h, 0.0);
    return (eval_numeric(e, hi) - eval_numeric(e, lo)) / Complex(2.0 * h, 0.0);
}

/// Relative agreement of symbolic derivative with central differences at
/// `points` accepted samples of dom.
inline double max_deriv_mismatch(const Expr& e, const std::string& name, const Domain& dom,
                                 Rng& rng, int points = 20) {
    Expr de = differentiate(e, name);
    double worst = 0.0;
    int accepted = 0, attempts = 0;
    while (accepted < points && attempts < 50 * points) {
        ++attempts;
        Bindings pt;
        try {
            pt = dom.sample(rng);
            Complex sym = eval_numeric(de, pt);
            Complex fd = central_diff(e, name, pt);
            double scale = std::max({1.0, std::abs(sym), std::abs(fd)});
            worst = std::max(worst, std::abs(sym - fd) / scale);
            ++accepted;
        } catch (const EvalError&) {
            continue;
        }
    }
    return worst;
}

/// Standard sampling domain: parameters k, omega in [0.5,2], time and state
/// windows safe for every golden expression of the corpus.
inline Domain golden_domain() {
    Domain d;
    d.range("k", 0.5, 2.0)
        .range("omega", 0.5, 2.0)
        .range("t", -2.0, 2.0)
        .range("x", -0.8, 0.8)
        .range("xdot", -0.8, 0.8)
        .range("X", -2.0, 0.8)
        .range("Xdot", -0.8, 0.8)
        .range("p", -2.0, 0.3)
        .range("P", -0.8, 0.8)
        .range("A", -0.25, 0.25)
        .range("delta", 0.0, 6.28);
    // keep radicands away from their zero locus
    d.constrain(P("1 - 2*k/(3*omega^2)*X - 0.05"));
    d.constrain(P("1 - 2*k/(3*omega^2)*p - 0.05"));
    return d;
}

}  // namespace lqtest

#endif
