#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "liequant/expr.hpp"

namespace liequant {

const std::set<std::string>& default_variable_names() {
    static const std::set<std::string> names = {
        "t",  "x", "xdot", "xddot", "X",   "Xdot", "Xddot", "p",   "P",
        "q",  "s", "eta",  "tau",   "xi",  "y",    "u",     "Phi", "Psi",
        "Theta"};
    return names;
}

namespace {

struct Parser {
    std::string_view text;
    std::size_t pos = 0;
    const std::set<std::string>& vars;

    explicit Parser(std::string_view s, const std::set<std::string>& v) : text(s), vars(v) {}

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }
    char peek() {
        skip_ws();
        return pos < text.size() ? text[pos] : '\0';
    }
    bool accept(char c) {
        if (peek() == c) {
            ++pos;
            return true;
        }
        return false;
    }
    void expect(char c) {
        if (!accept(c)) throw ParseError(pos, std::string("expected '") + c + "'");
    }

    Expr parse_expr() {
        Expr e = parse_term();
        for (;;) {
            if (accept('+'))
                e = e + parse_term();
            else if (accept('-'))
                e = e - parse_term();
            else
                return e;
        }
    }

    Expr parse_term() {
        Expr e = parse_unary();
        for (;;) {
            if (accept('*'))
                e = e * parse_unary();
            else if (accept('/'))
                e = e / parse_unary();
            else
                return e;
        }
    }

    Expr parse_unary() {
        if (accept('-')) return -parse_unary();
        if (accept('+')) return parse_unary();
        return parse_power();
    }

    Expr parse_power() {
        Expr base = parse_atom();
        if (accept('^')) return Expr::pow(base, parse_unary());  // right-assoc
        return base;
    }

    Expr parse_atom() {
        char c = peek();
        if (c == '(') {
            ++pos;
            Expr e = parse_expr();
            expect(')');
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
        throw ParseError(pos, "unexpected character");
    }

    Expr parse_number() {
        skip_ws();
        std::size_t start = pos;
        while (pos < text.size() &&
               (std::isdigit(static_cast<unsigned char>(text[pos])) || text[pos] == '.'))
            ++pos;
        // exponent part
        if (pos < text.size() && (text[pos] == 'e' || text[pos] == 'E')) {
            std::size_t save = pos;
            ++pos;
            if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) ++pos;
            if (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
                while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos])))
                    ++pos;
            } else {
                pos = save;  // 'e' belongs to an identifier context, not this literal
            }
        }
        std::string tok(text.substr(start, pos - start));
        try {
            std::size_t used = 0;
            double d = std::stod(tok, &used);
            if (used != tok.size()) throw std::invalid_argument(tok);
            return Expr::real(d);
        } catch (const std::exception&) {
            throw ParseError(start, "malformed number '" + tok + "'");
        }
    }

    Expr parse_ident() {
        skip_ws();
        std::size_t start = pos;
        while (pos < text.size() && (std::isalnum(static_cast<unsigned char>(text[pos])) ||
                                     text[pos] == '_'))
            ++pos;
        std::string name(text.substr(start, pos - start));
        if (peek() == '(') {
            ++pos;
            std::vector<Expr> args;
            if (peek() != ')') {
                args.push_back(parse_expr());
                while (accept(',')) args.push_back(parse_expr());
            }
            expect(')');
            return apply_function(name, std::move(args), start);
        }
        if (name == "i") return Expr::imaginary_unit();
        if (name == "pi") return Expr::real(M_PI);
        if (vars.count(name)) return Expr::variable(name);
        return Expr::parameter(name);
    }

    Expr apply_function(const std::string& name, std::vector<Expr> args, std::size_t at) {
        auto arity = [&](std::size_t n) {
            if (args.size() != n)
                throw ParseError(at, "function '" + name + "' expects " + std::to_string(n) +
                                         " argument(s)");
        };
        if (name == "sin") { arity(1); return Expr::sin(args[0]); }
        if (name == "cos") { arity(1); return Expr::cos(args[0]); }
        if (name == "exp") { arity(1); return Expr::exp(args[0]); }
        if (name == "ln")  { arity(1); return Expr::ln(args[0]); }
        if (name == "sqrt") { arity(1); return Expr::sqrt(args[0]); }
        if (name == "pow") { arity(2); return Expr::pow(args[0], args[1]); }
        throw ParseError(at, "unknown function '" + name + "'");
    }
};

}  // namespace

Expr parse(std::string_view text, const std::set<std::string>& variables) {
    Parser p(text, variables);
    Expr e = p.parse_expr();
    p.skip_ws();
    if (p.pos != text.size()) throw ParseError(p.pos, "trailing input");
    return e;
}

Expr parse(std::string_view text) { return parse(text, default_variable_names()); }

// ---------------------------------------------------------------------------
// rendering

namespace {

// exact small-rational reconstruction for display; falls back to %.17g
std::string render_double(double d) {
    if (d == std::nearbyint(d) && std::abs(d) < 1e15) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.0f", d);
        return buf;
    }
    for (long long q = 2; q <= 3600; ++q) {
        double p = d * static_cast<double>(q);
        if (p == std::nearbyint(p) && std::abs(p) < 1e9 &&
            static_cast<double>(static_cast<long long>(p)) / static_cast<double>(q) == d) {
            return std::to_string(static_cast<long long>(p)) + "/" + std::to_string(q);
        }
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", d);
    return buf;
}

// precedence levels: add=1, mul=2, unary=3, pow=4, atom=5
std::string render_prec(const Expr& e, int parent);

std::string render_constant(Complex c, int parent) {
    if (c.imag() == 0.0) {
        std::string s = render_double(c.real());
        bool needs = (c.real() < 0.0 && parent >= 2) || (s.find('/') != std::string::npos && parent >= 2);
        return needs ? "(" + s + ")" : s;
    }
    if (c.real() == 0.0) {
        if (c.imag() == 1.0) return "i";
        if (c.imag() == -1.0) return parent >= 2 ? "(-i)" : "-i";
        std::string s = render_double(c.imag()) + "*i";
        return parent >= 2 ? "(" + s + ")" : s;
    }
    std::string s = render_double(c.real()) +
                    (c.imag() < 0 ? " - " + render_double(-c.imag()) : " + " + render_double(c.imag())) +
                    "*i";
    return "(" + s + ")";
}

std::string render_mul(const Expr& e, int parent) {
    // split factors into numerator and denominator by sign of constant exponent
    std::vector<std::string> num, den;
    for (const Expr& f : e.children()) {
        if (f.kind() == NodeKind::Pow && f.child(1).kind() == NodeKind::Constant) {
            Complex ex = f.child(1).constant_value();
            if (ex.imag() == 0.0 && ex.real() < 0.0) {
                Expr inv = Expr::pow(f.child(0), Expr::constant(-ex));
                den.push_back(render_prec(inv, 3));
                continue;
            }
        }
        num.push_back(render_prec(f, 2));
    }
    std::string s;
    if (num.empty())
        s = "1";
    else {
        for (std::size_t i = 0; i < num.size(); ++i) s += (i ? "*" : "") + num[i];
    }
    if (!den.empty()) {
        if (den.size() == 1)
            s += "/" + den[0];
        else {
            s += "/(";
            for (std::size_t i = 0; i < den.size(); ++i) s += (i ? "*" : "") + den[i];
            s += ")";
        }
    }
    return parent > 2 ? "(" + s + ")" : s;
}

std::string render_prec(const Expr& e, int parent) {
    switch (e.kind()) {
        case NodeKind::Constant: return render_constant(e.constant_value(), parent);
        case NodeKind::Parameter:
        case NodeKind::Variable: return e.name();
        case NodeKind::Add: {
            std::string s;
            bool first = true;
            for (const Expr& term : e.children()) {
                // pull a leading negative constant out as subtraction
                Complex c(1.0, 0.0);
                Expr rest = term;
                if (term.kind() == NodeKind::Constant) {
                    c = term.constant_value();
                    rest = Expr::integer(1);
                } else if (term.kind() == NodeKind::Mul &&
                           term.child(0).kind() == NodeKind::Constant) {
                    c = term.child(0).constant_value();
                    std::vector<Expr> fs(term.children().begin() + 1, term.children().end());
                    rest = Expr::mul(std::move(fs));
                }
                bool negative = c.imag() == 0.0 && c.real() < 0.0;
                Expr shown = negative ? Expr::mul({Expr::constant(-c), rest})
                                      : Expr::mul({Expr::constant(c), rest});
                std::string piece = render_prec(shown, 1);
                if (first) {
                    s = negative ? "-" + piece : piece;
                    first = false;
                } else {
                    s += negative ? " - " + piece : " + " + piece;
                }
            }
            return parent > 1 ? "(" + s + ")" : s;
        }
        case NodeKind::Mul: return render_mul(e, parent);
        case NodeKind::Pow: {
            const Expr& b = e.child(0);
            const Expr& x = e.child(1);
            if (x.kind() == NodeKind::Constant && x.constant_value() == Complex(0.5, 0.0))
                return "sqrt(" + render_prec(b, 0) + ")";
            std::string s = render_prec(b, 5) + "^" + render_prec(x, 4);
            return parent > 4 ? "(" + s + ")" : s;
        }
        case NodeKind::Func: {
            const char* n = "";
            switch (e.func_kind()) {
                case FuncKind::Sin: n = "sin"; break;
                case FuncKind::Cos: n = "cos"; break;
                case FuncKind::Exp: n = "exp"; break;
                case FuncKind::Ln: n = "ln"; break;
            }
            return std::string(n) + "(" + render_prec(e.child(0), 0) + ")";
        }
    }
    return "?";
}

}  // namespace

std::string render(const Expr& e) { return render_prec(e, 0); }

}  // namespace liequant
