#include "liequant/solve.hpp"

#include <cmath>

namespace liequant {

int occurrence_count(const Expr& e, const std::string& name) {
    if (e.kind() == NodeKind::Parameter || e.kind() == NodeKind::Variable)
        return e.name() == name ? 1 : 0;
    int n = 0;
    for (const Expr& k : e.children()) n += occurrence_count(k, name);
    return n;
}

namespace {

void solve_rec(const Expr& lhs, Expr rhs, const std::string& name, std::vector<Expr>& out) {
    if ((lhs.kind() == NodeKind::Variable || lhs.kind() == NodeKind::Parameter) &&
        lhs.name() == name) {
        out.push_back(simplify(rhs));
        return;
    }
    switch (lhs.kind()) {
        case NodeKind::Add: {
            std::vector<Expr> rest;
            const Expr* carrier = nullptr;
            for (const Expr& k : lhs.children()) {
                if (occurrence_count(k, name) > 0)
                    carrier = &k;
                else
                    rest.push_back(k);
            }
            Expr moved = rhs - Expr::add(std::move(rest));
            solve_rec(*carrier, moved, name, out);
            return;
        }
        case NodeKind::Mul: {
            std::vector<Expr> rest;
            const Expr* carrier = nullptr;
            for (const Expr& k : lhs.children()) {
                if (occurrence_count(k, name) > 0)
                    carrier = &k;
                else
                    rest.push_back(k);
            }
            Expr moved = rhs / Expr::mul(std::move(rest));
            solve_rec(*carrier, moved, name, out);
            return;
        }
        case NodeKind::Pow: {
            if (occurrence_count(lhs.child(1), name) > 0)
                throw SolveError("cannot invert power with unknown in the exponent");
            const Expr& u = lhs.child(0);
            const Expr& c = lhs.child(1);
            if (c.kind() != NodeKind::Constant)
                throw SolveError("cannot invert power with symbolic exponent");
            Complex cv = c.constant_value();
            Expr inv = Expr::pow(rhs, Expr::constant(Complex(1.0, 0.0) / cv));
            auto n = c.integer_value();
            if (n && (*n % 2 == 0)) {
                // even integer power: two branches
                solve_rec(u, inv, name, out);
                solve_rec(u, -inv, name, out);
            } else {
                solve_rec(u, inv, name, out);
            }
            return;
        }
        case NodeKind::Func: {
            const Expr& u = lhs.child(0);
            switch (lhs.func_kind()) {
                case FuncKind::Exp: solve_rec(u, Expr::ln(rhs), name, out); return;
                case FuncKind::Ln: solve_rec(u, Expr::exp(rhs), name, out); return;
                default: throw SolveError("cannot invert trigonometric function");
            }
        }
        default:
            throw SolveError("cannot isolate unknown");
    }
}

}  // namespace

std::vector<Expr> solve_for(const Expr& lhs, const Expr& rhs, const std::string& name) {
    Expr l = simplify(lhs);
    int n = occurrence_count(l, name);
    if (n == 0) throw SolveError("unknown '" + name + "' does not occur");
    if (n > 1) throw SolveError("unknown '" + name + "' occurs more than once");
    std::vector<Expr> out;
    solve_rec(l, rhs, name, out);
    if (out.size() > 4) throw SolveError("too many solution branches");
    return out;
}

std::optional<std::pair<Expr, Expr>> linear_in(const Expr& e, const std::string& var) {
    Expr b = simplify(differentiate(e, var));
    if (depends_on(b, var)) return std::nullopt;
    Expr a = simplify(e - b * Expr::variable(var));
    if (depends_on(a, var)) return std::nullopt;
    return std::make_pair(a, b);
}

namespace {

// antiderivative of a single multiplicative term
std::optional<Expr> integrate_term(const Expr& e, const std::string& var) {
    Expr x = Expr::variable(var);
    if (!depends_on(e, var)) return e * x;

    if (e.kind() == NodeKind::Mul) {
        std::vector<Expr> coef, dep;
        for (const Expr& k : e.children())
            (depends_on(k, var) ? dep : coef).push_back(k);
        if (dep.size() != 1) return std::nullopt;
        auto inner = integrate_term(dep[0], var);
        if (!inner) return std::nullopt;
        return Expr::mul(std::move(coef)) * *inner;
    }

    if ((e.kind() == NodeKind::Variable || e.kind() == NodeKind::Parameter) &&
        e.name() == var)
        return Expr::real(0.5) * x * x;

    if (e.kind() == NodeKind::Pow) {
        const Expr& base = e.child(0);
        const Expr& c = e.child(1);
        if (c.kind() != NodeKind::Constant || depends_on(c, var)) return std::nullopt;
        auto lin = linear_in(base, var);
        if (!lin) return std::nullopt;
        auto [b0, b1] = *lin;  // base = b0 + b1 var
        Complex cv = c.constant_value();
        if (cv == Complex(-1.0, 0.0)) return Expr::ln(base) / b1;
        Expr p1 = Expr::constant(cv + Complex(1.0, 0.0));
        return Expr::pow(base, p1) / (b1 * p1);
    }

    if (e.kind() == NodeKind::Func) {
        auto lin = linear_in(e.child(0), var);
        if (!lin) return std::nullopt;
        auto [a0, a1] = *lin;
        if (a1.is_zero()) return std::nullopt;
        switch (e.func_kind()) {
            case FuncKind::Sin: return -Expr::cos(e.child(0)) / a1;
            case FuncKind::Cos: return Expr::sin(e.child(0)) / a1;
            case FuncKind::Exp: return Expr::exp(e.child(0)) / a1;
            case FuncKind::Ln: {
                // int ln(a0 + a1 x) dx = ((a0+a1 x) ln(a0+a1 x) - (a0+a1 x))/a1
                Expr u = e.child(0);
                return (u * Expr::ln(u) - u) / a1;
            }
        }
    }
    return std::nullopt;
}

}  // namespace

std::optional<Expr> integrate_simple(const Expr& e, const std::string& var) {
    Expr ex = expand(e);
    std::vector<Expr> parts;
    if (ex.kind() == NodeKind::Add) {
        for (const Expr& term : ex.children()) {
            auto anti = integrate_term(term, var);
            if (!anti) return std::nullopt;
            parts.push_back(*anti);
        }
    } else {
        auto anti = integrate_term(ex, var);
        if (!anti) return std::nullopt;
        parts.push_back(*anti);
    }
    return simplify(Expr::add(std::move(parts)));
}

}  // namespace liequant
