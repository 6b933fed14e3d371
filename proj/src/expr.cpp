#include "liequant/expr.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

namespace liequant {

namespace {

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t hash_u64(std::uint64_t h, std::uint64_t v) { return fnv1a(h, &v, sizeof v); }

double norm_zero(double d) { return d == 0.0 ? 0.0 : d; }

bool is_finite(Complex c) { return std::isfinite(c.real()) && std::isfinite(c.imag()); }

}  // namespace

struct ExprNode {
    NodeKind kind;
    Complex value{};
    std::string name;
    FuncKind func = FuncKind::Sin;
    std::vector<Expr> kids;
    std::uint64_t hash = 0;

    void compute_hash() {
        std::uint64_t h = 14695981039346656037ull;
        h = hash_u64(h, static_cast<std::uint64_t>(kind));
        switch (kind) {
            case NodeKind::Constant: {
                double re = norm_zero(value.real()), im = norm_zero(value.imag());
                h = fnv1a(h, &re, sizeof re);
                h = fnv1a(h, &im, sizeof im);
                break;
            }
            case NodeKind::Parameter:
            case NodeKind::Variable:
                h = fnv1a(h, name.data(), name.size());
                break;
            case NodeKind::Func:
                h = hash_u64(h, static_cast<std::uint64_t>(func));
                break;
            default:
                break;
        }
        for (const Expr& k : kids) h = hash_u64(h, k.hash());
        hash = h;
    }
};

Expr wrap_expr_node(std::shared_ptr<const ExprNode> p) { return Expr(std::move(p)); }

Expr Expr::constant(Complex c) {
    if (!is_finite(c)) throw PoleError("non-finite constant");
    ExprNode n;
    n.kind = NodeKind::Constant;
    n.value = Complex(norm_zero(c.real()), norm_zero(c.imag()));
    n.compute_hash();
    return Expr(std::make_shared<const ExprNode>(std::move(n)));
}

Expr::Expr() { *this = constant(0.0); }

Expr Expr::integer(long long v) { return constant(Complex(static_cast<double>(v), 0.0)); }
Expr Expr::real(double d) { return constant(Complex(d, 0.0)); }
Expr Expr::imaginary_unit() { return constant(Complex(0.0, 1.0)); }

Expr Expr::parameter(const std::string& name) {
    ExprNode n;
    n.kind = NodeKind::Parameter;
    n.name = name;
    n.compute_hash();
    return Expr(std::make_shared<const ExprNode>(std::move(n)));
}

Expr Expr::variable(const std::string& name) {
    ExprNode n;
    n.kind = NodeKind::Variable;
    n.name = name;
    n.compute_hash();
    return Expr(std::make_shared<const ExprNode>(std::move(n)));
}

NodeKind Expr::kind() const { return node_->kind; }
Complex Expr::constant_value() const { return node_->value; }
const std::string& Expr::name() const { return node_->name; }
FuncKind Expr::func_kind() const { return node_->func; }
const std::vector<Expr>& Expr::children() const { return node_->kids; }
std::size_t Expr::nchildren() const { return node_->kids.size(); }
const Expr& Expr::child(std::size_t i) const { return node_->kids[i]; }
std::uint64_t Expr::hash() const { return node_->hash; }

bool Expr::same(const Expr& o) const {
    if (node_ == o.node_) return true;
    if (hash() != o.hash()) return false;
    return compare(*this, o) == 0;
}

bool Expr::is_zero() const {
    return kind() == NodeKind::Constant && node_->value == Complex(0.0, 0.0);
}
bool Expr::is_one() const {
    return kind() == NodeKind::Constant && node_->value == Complex(1.0, 0.0);
}

std::optional<long long> Expr::integer_value() const {
    if (kind() != NodeKind::Constant) return std::nullopt;
    Complex c = node_->value;
    if (c.imag() != 0.0) return std::nullopt;
    double r = c.real();
    if (r != std::nearbyint(r) || std::abs(r) > 9.0e15) return std::nullopt;
    return static_cast<long long>(r);
}

std::optional<double> Expr::real_value() const {
    if (kind() != NodeKind::Constant) return std::nullopt;
    if (node_->value.imag() != 0.0) return std::nullopt;
    return node_->value.real();
}

std::size_t Expr::node_count() const {
    std::size_t n = 1;
    for (const Expr& k : children()) n += k.node_count();
    return n;
}

int compare(const Expr& a, const Expr& b) {
    if (a.node_ == b.node_) return 0;
    auto rank = [](NodeKind k) {
        switch (k) {
            case NodeKind::Constant: return 0;
            case NodeKind::Parameter: return 1;
            case NodeKind::Variable: return 2;
            case NodeKind::Func: return 3;
            case NodeKind::Pow: return 4;
            case NodeKind::Mul: return 5;
            case NodeKind::Add: return 6;
        }
        return 7;
    };
    if (rank(a.kind()) != rank(b.kind())) return rank(a.kind()) < rank(b.kind()) ? -1 : 1;
    switch (a.kind()) {
        case NodeKind::Constant: {
            Complex x = a.constant_value(), y = b.constant_value();
            if (x.real() != y.real()) return x.real() < y.real() ? -1 : 1;
            if (x.imag() != y.imag()) return x.imag() < y.imag() ? -1 : 1;
            return 0;
        }
        case NodeKind::Parameter:
        case NodeKind::Variable: {
            int c = a.name().compare(b.name());
            return c < 0 ? -1 : (c > 0 ? 1 : 0);
        }
        case NodeKind::Func:
            if (a.func_kind() != b.func_kind())
                return static_cast<int>(a.func_kind()) < static_cast<int>(b.func_kind()) ? -1 : 1;
            return compare(a.child(0), b.child(0));
        default: {
            std::size_t n = std::min(a.nchildren(), b.nchildren());
            for (std::size_t i = 0; i < n; ++i) {
                int c = compare(a.child(i), b.child(i));
                if (c != 0) return c;
            }
            if (a.nchildren() != b.nchildren()) return a.nchildren() < b.nchildren() ? -1 : 1;
            return 0;
        }
    }
}

namespace {

bool expr_less(const Expr& a, const Expr& b) { return compare(a, b) < 0; }

Expr make(NodeKind kind, std::vector<Expr> kids, FuncKind f = FuncKind::Sin) {
    auto n = std::make_shared<ExprNode>();
    n->kind = kind;
    n->func = f;
    n->kids = std::move(kids);
    n->compute_hash();
    return wrap_expr_node(std::move(n));
}

// ---- decomposition helpers on canonical forms ------------------------------

// Split a canonical factor into (base, constant exponent) when the exponent is
// constant; otherwise (factor, 1).
std::pair<Expr, Complex> base_exp(const Expr& f) {
    if (f.kind() == NodeKind::Pow && f.child(1).kind() == NodeKind::Constant)
        return {f.child(0), f.child(1).constant_value()};
    return {f, Complex(1.0, 0.0)};
}

bool near_integer(Complex c, long long& out) {
    if (c.imag() != 0.0) return false;
    double r = c.real();
    if (r != std::nearbyint(r) || std::abs(r) > 1e15) return false;
    out = static_cast<long long>(r);
    return true;
}

Complex cpow_int(Complex b, long long n) {
    if (n == 0) return Complex(1.0, 0.0);
    bool neg = n < 0;
    unsigned long long m = neg ? -static_cast<unsigned long long>(n) : n;
    Complex acc(1.0, 0.0), cur = b;
    while (m) {
        if (m & 1) acc *= cur;
        cur *= cur;
        m >>= 1;
    }
    if (neg) {
        if (acc == Complex(0.0, 0.0)) throw PoleError("division by zero");
        acc = Complex(1.0, 0.0) / acc;
    }
    return acc;
}

Complex fold_pow(Complex b, Complex e) {
    long long n;
    if (near_integer(e, n) && std::abs(static_cast<double>(n)) <= 1024) return cpow_int(b, n);
    if (b == Complex(0.0, 0.0)) {
        if (e.imag() == 0.0 && e.real() > 0.0) return Complex(0.0, 0.0);
        throw PoleError("pole: 0 raised to a non-positive power");
    }
    Complex r = std::pow(b, e);
    if (!is_finite(r)) throw PoleError("non-finite power");
    return r;
}

std::pair<Complex, Expr> coeff_core(const Expr& t) {
    if (t.kind() == NodeKind::Constant) return {t.constant_value(), Expr::integer(1)};
    if (t.kind() == NodeKind::Mul) {
        Complex c(1.0, 0.0);
        std::vector<Expr> rest;
        for (const Expr& k : t.children()) {
            if (k.kind() == NodeKind::Constant)
                c *= k.constant_value();
            else
                rest.push_back(k);
        }
        if (rest.empty()) return {c, Expr::integer(1)};
        if (rest.size() == 1) return {c, rest[0]};
        return {c, make(NodeKind::Mul, std::move(rest))};
    }
    return {Complex(1.0, 0.0), t};
}

}  // namespace

Expr Expr::add(std::vector<Expr> terms) {
    // flatten
    std::vector<Expr> flat;
    for (Expr& t : terms) {
        if (t.kind() == NodeKind::Add)
            for (const Expr& k : t.children()) flat.push_back(k);
        else
            flat.push_back(std::move(t));
    }
    // collect by core
    Complex cconst(0.0, 0.0);
    std::vector<std::pair<Expr, Complex>> cores;  // core -> coefficient
    for (const Expr& t : flat) {
        auto [c, core] = coeff_core(t);
        if (core.is_one()) {
            cconst += c;
            continue;
        }
        bool found = false;
        for (auto& [k, v] : cores)
            if (k.same(core)) {
                v += c;
                found = true;
                break;
            }
        if (!found) cores.emplace_back(core, c);
    }
    std::vector<Expr> out;
    if (cconst != Complex(0.0, 0.0)) out.push_back(constant(cconst));
    std::sort(cores.begin(), cores.end(),
              [](const auto& a, const auto& b) { return expr_less(a.first, b.first); });
    for (auto& [core, c] : cores) {
        if (c == Complex(0.0, 0.0)) continue;
        if (c == Complex(1.0, 0.0))
            out.push_back(core);
        else
            out.push_back(mul({constant(c), core}));
    }
    if (out.empty()) return integer(0);
    if (out.size() == 1) return out[0];
    return make(NodeKind::Add, std::move(out));
}

Expr Expr::mul(std::vector<Expr> factors) {
    std::vector<Expr> flat;
    for (Expr& f : factors) {
        if (f.kind() == NodeKind::Mul)
            for (const Expr& k : f.children()) flat.push_back(k);
        else
            flat.push_back(std::move(f));
    }
    Complex cconst(1.0, 0.0);
    std::vector<std::pair<Expr, Complex>> bases;  // base -> constant exponent
    std::vector<Expr> opaque;                     // factors with symbolic exponents
    for (const Expr& f : flat) {
        if (f.kind() == NodeKind::Constant) {
            cconst *= f.constant_value();
            continue;
        }
        if (f.kind() == NodeKind::Pow && f.child(1).kind() != NodeKind::Constant) {
            opaque.push_back(f);
            continue;
        }
        auto [b, e] = base_exp(f);
        bool found = false;
        for (auto& [k, v] : bases)
            if (k.same(b)) {
                v += e;
                found = true;
                break;
            }
        if (!found) bases.emplace_back(b, e);
    }
    if (cconst == Complex(0.0, 0.0)) return integer(0);
    std::vector<Expr> out;
    bool recollect = false;
    for (auto& [b, e] : bases) {
        if (e == Complex(0.0, 0.0)) continue;
        Expr f = (e == Complex(1.0, 0.0)) ? b : pow(b, constant(e));
        if (f.kind() == NodeKind::Constant) {
            cconst *= f.constant_value();
            continue;
        }
        // merging exponents can resurface a composite (e.g. sqrt(A)^2 -> A);
        // anything pow() rewrote must go through collection again
        bool plain = f.same(b) ||
                     (f.kind() == NodeKind::Pow && f.child(0).same(b) &&
                      f.child(1).kind() == NodeKind::Constant &&
                      f.child(1).constant_value() == e);
        if (!plain) recollect = true;
        out.push_back(f);
    }
    for (Expr& f : opaque) out.push_back(std::move(f));
    if (cconst == Complex(0.0, 0.0)) return integer(0);
    if (recollect) {
        out.push_back(constant(cconst));
        return mul(std::move(out));
    }
    std::sort(out.begin(), out.end(), expr_less);
    if (out.empty()) return constant(cconst);
    // distribute a bare constant over a single sum: c*(a+b) -> c*a + c*b
    if (out.size() == 1 && cconst != Complex(1.0, 0.0) && out[0].kind() == NodeKind::Add) {
        std::vector<Expr> terms;
        for (const Expr& t : out[0].children()) terms.push_back(mul({constant(cconst), t}));
        return add(std::move(terms));
    }
    if (cconst != Complex(1.0, 0.0)) out.insert(out.begin(), constant(cconst));
    if (out.size() == 1) return out[0];
    return make(NodeKind::Mul, std::move(out));
}

Expr Expr::pow(Expr base, Expr exponent) {
    if (exponent.is_zero()) return integer(1);
    if (exponent.is_one()) return base;
    if (base.is_one()) return integer(1);
    if (base.kind() == NodeKind::Constant && exponent.kind() == NodeKind::Constant)
        return constant(fold_pow(base.constant_value(), exponent.constant_value()));

    long long n;
    bool exp_is_int = exponent.kind() == NodeKind::Constant &&
                      near_integer(exponent.constant_value(), n);

    // (y^a)^m -> y^(a m) for integer m when |a| <= 1 (principal-branch safe)
    if (exp_is_int && base.kind() == NodeKind::Pow &&
        base.child(1).kind() == NodeKind::Constant) {
        Complex a = base.child(1).constant_value();
        if (a.imag() == 0.0 && std::abs(a.real()) <= 1.0)
            return pow(base.child(0), constant(a * exponent.constant_value()));
    }
    // (e^z)^m -> e^(m z) for integer m
    if (exp_is_int && base.kind() == NodeKind::Func && base.func_kind() == FuncKind::Exp)
        return func(FuncKind::Exp, mul({exponent, base.child(0)}));
    // (a*b)^m -> a^m * b^m for integer m
    if (exp_is_int && base.kind() == NodeKind::Mul) {
        std::vector<Expr> fs;
        for (const Expr& k : base.children()) fs.push_back(pow(k, exponent));
        return mul(std::move(fs));
    }
    return make(NodeKind::Pow, {std::move(base), std::move(exponent)});
}

Expr Expr::func(FuncKind f, Expr arg) {
    if (arg.kind() == NodeKind::Constant) {
        Complex a = arg.constant_value();
        Complex r;
        switch (f) {
            case FuncKind::Sin: r = std::sin(a); break;
            case FuncKind::Cos: r = std::cos(a); break;
            case FuncKind::Exp: r = std::exp(a); break;
            case FuncKind::Ln:
                if (a == Complex(0.0, 0.0)) throw PoleError("ln(0)");
                r = std::log(a);
                break;
        }
        if (!is_finite(r)) throw PoleError("non-finite function value");
        return constant(r);
    }
    // sin(-x) = -sin(x), cos(-x) = cos(x)
    if (f == FuncKind::Sin || f == FuncKind::Cos) {
        auto [c, core] = coeff_core(arg);
        if (c.imag() == 0.0 && c.real() < 0.0 && !core.is_one()) {
            Expr flipped = mul({constant(-c), core});
            Expr inner = make(NodeKind::Func, {flipped}, f);
            return f == FuncKind::Sin ? mul({integer(-1), inner}) : inner;
        }
    }
    return make(NodeKind::Func, {std::move(arg)}, f);
}

Expr Expr::sqrt(Expr a) { return pow(std::move(a), real(0.5)); }
Expr Expr::neg(Expr a) { return mul({integer(-1), std::move(a)}); }
Expr Expr::sub(Expr a, Expr b) { return add({std::move(a), neg(std::move(b))}); }
Expr Expr::div(Expr a, Expr b) { return mul({std::move(a), pow(std::move(b), integer(-1))}); }

Expr operator+(const Expr& a, const Expr& b) { return Expr::add({a, b}); }
Expr operator-(const Expr& a, const Expr& b) { return Expr::sub(a, b); }
Expr operator-(const Expr& a) { return Expr::neg(a); }
Expr operator*(const Expr& a, const Expr& b) { return Expr::mul({a, b}); }
Expr operator/(const Expr& a, const Expr& b) { return Expr::div(a, b); }

// ---------------------------------------------------------------------------
// evaluation

Complex eval_numeric(const Expr& e, const Bindings& point) {
    switch (e.kind()) {
        case NodeKind::Constant: return e.constant_value();
        case NodeKind::Parameter:
        case NodeKind::Variable: {
            auto it = point.find(e.name());
            if (it == point.end()) throw UnboundNameError(e.name());
            return it->second;
        }
        case NodeKind::Add: {
            Complex s(0.0, 0.0);
            for (const Expr& k : e.children()) s += eval_numeric(k, point);
            if (!is_finite(s)) throw PoleError("non-finite sum");
            return s;
        }
        case NodeKind::Mul: {
            Complex p(1.0, 0.0);
            for (const Expr& k : e.children()) p *= eval_numeric(k, point);
            if (!is_finite(p)) throw PoleError("non-finite product");
            return p;
        }
        case NodeKind::Pow: {
            Complex b = eval_numeric(e.child(0), point);
            Complex x = eval_numeric(e.child(1), point);
            return fold_pow(b, x);
        }
        case NodeKind::Func: {
            Complex a = eval_numeric(e.child(0), point);
            Complex r;
            switch (e.func_kind()) {
                case FuncKind::Sin: r = std::sin(a); break;
                case FuncKind::Cos: r = std::cos(a); break;
                case FuncKind::Exp: r = std::exp(a); break;
                case FuncKind::Ln:
                    if (a == Complex(0.0, 0.0)) throw PoleError("ln(0)");
                    r = std::log(a);
                    break;
            }
            if (!is_finite(r)) throw PoleError("non-finite function value");
            return r;
        }
    }
    throw EvalError("corrupt expression node");
}

// ---------------------------------------------------------------------------
// differentiation

Expr differentiate(const Expr& e, const std::string& var) {
    switch (e.kind()) {
        case NodeKind::Constant: return Expr::integer(0);
        case NodeKind::Parameter:
        case NodeKind::Variable: return Expr::integer(e.name() == var ? 1 : 0);
        case NodeKind::Add: {
            std::vector<Expr> ts;
            for (const Expr& k : e.children()) ts.push_back(differentiate(k, var));
            return Expr::add(std::move(ts));
        }
        case NodeKind::Mul: {
            std::vector<Expr> terms;
            const auto& ks = e.children();
            for (std::size_t i = 0; i < ks.size(); ++i) {
                if (!depends_on(ks[i], var)) continue;
                std::vector<Expr> fs;
                for (std::size_t j = 0; j < ks.size(); ++j)
                    fs.push_back(i == j ? differentiate(ks[j], var) : ks[j]);
                terms.push_back(Expr::mul(std::move(fs)));
            }
            return Expr::add(std::move(terms));
        }
        case NodeKind::Pow: {
            const Expr& u = e.child(0);
            const Expr& v = e.child(1);
            if (!depends_on(v, var)) {
                // v u^(v-1) u'
                Expr du = differentiate(u, var);
                if (du.is_zero()) return Expr::integer(0);
                return Expr::mul({v, Expr::pow(u, v - Expr::integer(1)), du});
            }
            // u^v (v' ln u + v u'/u)
            Expr du = differentiate(u, var);
            Expr dv = differentiate(v, var);
            Expr inner = dv * Expr::ln(u) + v * du / u;
            return Expr::mul({e, inner});
        }
        case NodeKind::Func: {
            const Expr& u = e.child(0);
            Expr du = differentiate(u, var);
            if (du.is_zero()) return Expr::integer(0);
            Expr outer;
            switch (e.func_kind()) {
                case FuncKind::Sin: outer = Expr::cos(u); break;
                case FuncKind::Cos: outer = Expr::neg(Expr::sin(u)); break;
                case FuncKind::Exp: outer = e; break;
                case FuncKind::Ln: outer = Expr::pow(u, Expr::integer(-1)); break;
            }
            return outer * du;
        }
    }
    throw EvalError("corrupt expression node");
}

// ---------------------------------------------------------------------------
// substitution

Expr substitute(const Expr& e, const std::map<std::string, Expr>& repl) {
    switch (e.kind()) {
        case NodeKind::Constant: return e;
        case NodeKind::Parameter:
        case NodeKind::Variable: {
            auto it = repl.find(e.name());
            return it == repl.end() ? e : it->second;
        }
        case NodeKind::Add: {
            std::vector<Expr> ks;
            for (const Expr& k : e.children()) ks.push_back(substitute(k, repl));
            return Expr::add(std::move(ks));
        }
        case NodeKind::Mul: {
            std::vector<Expr> ks;
            for (const Expr& k : e.children()) ks.push_back(substitute(k, repl));
            return Expr::mul(std::move(ks));
        }
        case NodeKind::Pow:
            return Expr::pow(substitute(e.child(0), repl), substitute(e.child(1), repl));
        case NodeKind::Func:
            return Expr::func(e.func_kind(), substitute(e.child(0), repl));
    }
    throw EvalError("corrupt expression node");
}

Expr substitute(const Expr& e, const std::string& name, const Expr& value) {
    return substitute(e, std::map<std::string, Expr>{{name, value}});
}

// ---------------------------------------------------------------------------
// simplification

namespace {

Expr simplify_once(const Expr& e) {
    switch (e.kind()) {
        case NodeKind::Constant:
        case NodeKind::Parameter:
        case NodeKind::Variable: return e;
        case NodeKind::Add: {
            std::vector<Expr> ks;
            for (const Expr& k : e.children()) ks.push_back(simplify_once(k));
            return Expr::add(std::move(ks));
        }
        case NodeKind::Mul: {
            std::vector<Expr> ks;
            for (const Expr& k : e.children()) ks.push_back(simplify_once(k));
            return Expr::mul(std::move(ks));
        }
        case NodeKind::Pow:
            return Expr::pow(simplify_once(e.child(0)), simplify_once(e.child(1)));
        case NodeKind::Func: {
            Expr a = simplify_once(e.child(0));
            if (e.func_kind() == FuncKind::Exp) {
                // e^(x+y) -> e^x e^y
                if (a.kind() == NodeKind::Add) {
                    std::vector<Expr> fs;
                    for (const Expr& t : a.children()) fs.push_back(Expr::exp(t));
                    return Expr::mul(std::move(fs));
                }
                // e^(c ln y) -> y^c, e^(ln y) -> y
                if (a.kind() == NodeKind::Func && a.func_kind() == FuncKind::Ln)
                    return a.child(0);
                if (a.kind() == NodeKind::Mul) {
                    Complex c(1.0, 0.0);
                    const Expr* lnpart = nullptr;
                    bool clean = true;
                    for (const Expr& f : a.children()) {
                        if (f.kind() == NodeKind::Constant)
                            c *= f.constant_value();
                        else if (f.kind() == NodeKind::Func && f.func_kind() == FuncKind::Ln &&
                                 !lnpart)
                            lnpart = &f;
                        else
                            clean = false;
                    }
                    if (clean && lnpart)
                        return Expr::pow(lnpart->child(0), Expr::constant(c));
                }
            }
            return Expr::func(e.func_kind(), std::move(a));
        }
    }
    throw EvalError("corrupt expression node");
}

}  // namespace

Expr simplify(const Expr& e) {
    Expr cur = e;
    for (int i = 0; i < 8; ++i) {
        Expr next = simplify_once(cur);
        if (next.same(cur)) return next;
        cur = next;
    }
    return cur;
}

namespace {

Expr expand_node(const Expr& e) {
    switch (e.kind()) {
        case NodeKind::Constant:
        case NodeKind::Parameter:
        case NodeKind::Variable: return e;
        case NodeKind::Add: {
            std::vector<Expr> ks;
            for (const Expr& k : e.children()) ks.push_back(expand_node(k));
            return Expr::add(std::move(ks));
        }
        case NodeKind::Mul: {
            // expand children, then distribute pairwise over sums
            std::vector<Expr> terms{Expr::integer(1)};
            for (const Expr& kraw : e.children()) {
                Expr k = expand_node(kraw);
                std::vector<Expr> kt;
                if (k.kind() == NodeKind::Add)
                    kt.assign(k.children().begin(), k.children().end());
                else
                    kt.push_back(k);
                std::vector<Expr> next;
                next.reserve(terms.size() * kt.size());
                for (const Expr& a : terms)
                    for (const Expr& b : kt) next.push_back(Expr::mul({a, b}));
                terms = std::move(next);
                if (terms.size() > 4096) return e;  // swell guard: give up
            }
            return Expr::add(std::move(terms));
        }
        case NodeKind::Pow: {
            Expr b = expand_node(e.child(0));
            Expr x = e.child(1);
            auto n = x.integer_value();
            if (b.kind() == NodeKind::Add && n && *n >= 2 && *n <= 6) {
                Expr acc = b;
                for (long long i = 1; i < *n; ++i) acc = expand_node(Expr::mul({acc, b}));
                return acc;
            }
            return Expr::pow(std::move(b), x);
        }
        case NodeKind::Func:
            return Expr::func(e.func_kind(), expand_node(e.child(0)));
    }
    throw EvalError("corrupt expression node");
}

}  // namespace

Expr expand(const Expr& e) { return simplify(expand_node(simplify(e))); }

// ---------------------------------------------------------------------------

namespace {
void collect_names(const Expr& e, std::set<std::string>& out) {
    if (e.kind() == NodeKind::Parameter || e.kind() == NodeKind::Variable) {
        out.insert(e.name());
        return;
    }
    for (const Expr& k : e.children()) collect_names(k, out);
}
}  // namespace

std::set<std::string> free_names(const Expr& e) {
    std::set<std::string> s;
    collect_names(e, s);
    return s;
}

bool depends_on(const Expr& e, const std::string& name) {
    if (e.kind() == NodeKind::Parameter || e.kind() == NodeKind::Variable)
        return e.name() == name;
    for (const Expr& k : e.children())
        if (depends_on(k, name)) return true;
    return false;
}

// ---------------------------------------------------------------------------
// sampling

double Rng::uniform(double lo, double hi) {
    // fixed 53-bit construction, independent of the standard library
    std::uint64_t bits = engine_() >> 11;
    double u = static_cast<double>(bits) * 0x1.0p-53;
    return lo + (hi - lo) * u;
}

std::uint64_t Rng::seed_for_child() { return engine_(); }

Domain& Domain::range(const std::string& name, double lo, double hi, bool complex_valued) {
    ranges[name] = Interval{lo, hi, complex_valued};
    return *this;
}

Domain& Domain::constrain(Expr positive) {
    constraints.push_back(std::move(positive));
    return *this;
}

bool Domain::covers(const std::set<std::string>& names) const {
    for (const auto& n : names)
        if (!ranges.count(n)) return false;
    return true;
}

Bindings Domain::sample(Rng& rng, int retry_budget) const {
    for (int attempt = 0; attempt < retry_budget; ++attempt) {
        Bindings b;
        for (const auto& [name, iv] : ranges) {
            if (iv.hi < iv.lo) throw DomainError("empty interval for '" + name + "'");
            double re = rng.uniform(iv.lo, iv.hi);
            double im = iv.complex_valued ? rng.uniform(iv.lo, iv.hi) : 0.0;
            b[name] = Complex(re, im);
        }
        bool ok = true;
        for (const Expr& c : constraints) {
            try {
                Complex v = eval_numeric(c, b);
                if (!(v.real() > 0.0)) {
                    ok = false;
                    break;
                }
            } catch (const EvalError&) {
                ok = false;
                break;
            }
        }
        if (ok) return b;
    }
    throw DomainError("domain sampling retry budget exhausted (degenerate domain)");
}

Domain Domain::with_fixed(const Bindings& fixed) const {
    Domain d = *this;
    for (const auto& [name, val] : fixed)
        d.ranges[name] = Interval{val.real(), val.real(), false};
    return d;
}

bool equivalent(const Expr& a, const Expr& b, const Domain& dom, Rng& rng,
                const EquivOptions& opts) {
    std::set<std::string> names = free_names(a);
    for (const auto& n : free_names(b)) names.insert(n);
    if (!dom.covers(names)) {
        std::string missing;
        for (const auto& n : names)
            if (!dom.ranges.count(n)) missing += (missing.empty() ? "" : ", ") + n;
        throw DomainError("domain does not cover free names: " + missing);
    }
    int accepted = 0, attempts = 0;
    while (accepted < opts.samples) {
        if (++attempts > opts.retry_budget)
            throw DomainError("equivalence sampling retry budget exhausted");
        Bindings pt;
        try {
            pt = dom.sample(rng);
        } catch (const DomainError&) {
            throw;
        }
        Complex va, vb;
        try {
            va = eval_numeric(a, pt);
            vb = eval_numeric(b, pt);
        } catch (const PoleError&) {
            continue;  // resample
        }
        ++accepted;
        double scale = std::max(std::abs(va), std::abs(vb));
        if (std::abs(va - vb) > opts.atol + opts.rtol * scale) return false;
    }
    return true;
}

double max_abs_on(const Expr& e, const Domain& dom, Rng& rng, int samples) {
    if (!dom.covers(free_names(e)))
        throw DomainError("domain does not cover expression names");
    double mx = 0.0;
    int accepted = 0, attempts = 0;
    while (accepted < samples) {
        if (++attempts > 50 * samples)
            throw DomainError("sampling retry budget exhausted (all samples at poles)");
        Bindings pt = dom.sample(rng);
        try {
            mx = std::max(mx, std::abs(eval_numeric(e, pt)));
        } catch (const PoleError&) {
            continue;
        }
        ++accepted;
    }
    return mx;
}

}  // namespace liequant
