#ifndef LIEQUANT_EXPR_HPP
#define LIEQUANT_EXPR_HPP

#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace liequant {

using Complex = std::complex<double>;

enum class NodeKind { Constant, Parameter, Variable, Add, Mul, Pow, Func };
enum class FuncKind { Sin, Cos, Exp, Ln };

struct ExprNode;

/// Immutable symbolic expression over complex constants, named parameters,
/// named variables, +,*,^ and {sin,cos,exp,ln}. sqrt(x) is Pow(x,1/2),
/// a/b is a*b^-1, a-b is a+(-1)*b. Constants fold at construction.
class Expr {
public:
    Expr();  // the constant 0

    static Expr constant(Complex c);
    static Expr integer(long long n);
    static Expr real(double d);
    static Expr imaginary_unit();
    static Expr parameter(const std::string& name);
    static Expr variable(const std::string& name);
    static Expr add(std::vector<Expr> terms);
    static Expr mul(std::vector<Expr> factors);
    static Expr pow(Expr base, Expr exponent);
    static Expr func(FuncKind f, Expr arg);

    static Expr sin(Expr a) { return func(FuncKind::Sin, std::move(a)); }
    static Expr cos(Expr a) { return func(FuncKind::Cos, std::move(a)); }
    static Expr exp(Expr a) { return func(FuncKind::Exp, std::move(a)); }
    static Expr ln(Expr a) { return func(FuncKind::Ln, std::move(a)); }
    static Expr sqrt(Expr a);
    static Expr neg(Expr a);
    static Expr sub(Expr a, Expr b);
    static Expr div(Expr a, Expr b);

    NodeKind kind() const;
    Complex constant_value() const;        // Constant only
    const std::string& name() const;       // Parameter/Variable only
    FuncKind func_kind() const;            // Func only
    const std::vector<Expr>& children() const;
    std::size_t nchildren() const;
    const Expr& child(std::size_t i) const;

    std::uint64_t hash() const;
    bool same(const Expr& other) const;    // structural equality
    bool is_zero() const;
    bool is_one() const;
    bool is_constant() const { return kind() == NodeKind::Constant; }
    /// Constant with an (exact) small-integer value.
    std::optional<long long> integer_value() const;
    /// Constant with zero imaginary part.
    std::optional<double> real_value() const;

    std::size_t node_count() const;

private:
    explicit Expr(std::shared_ptr<const ExprNode> n) : node_(std::move(n)) {}
    std::shared_ptr<const ExprNode> node_;
    friend struct ExprNode;
    friend int compare(const Expr&, const Expr&);
    friend Expr wrap_expr_node(std::shared_ptr<const ExprNode> p);
};

/// Internal: adopt a prepared node (hash already computed).
Expr wrap_expr_node(std::shared_ptr<const ExprNode> p);

/// Deterministic total order on expressions (used for canonical child order).
int compare(const Expr& a, const Expr& b);

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);

// ---------------------------------------------------------------------------

struct ParseError : std::runtime_error {
    std::size_t offset;
    ParseError(std::size_t off, const std::string& msg)
        : std::runtime_error(msg + " at offset " + std::to_string(off)), offset(off) {}
};

struct EvalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UnboundNameError : EvalError {
    std::string name;
    explicit UnboundNameError(const std::string& n)
        : EvalError("unbound name '" + n + "'"), name(n) {}
};
/// Division by zero, log/power pole, or non-finite value at the sample point.
struct PoleError : EvalError {
    using EvalError::EvalError;
};

/// Names parsed as Variable nodes when no explicit set is given; every other
/// non-reserved identifier becomes a Parameter.
const std::set<std::string>& default_variable_names();

Expr parse(std::string_view text);
Expr parse(std::string_view text, const std::set<std::string>& variables);

std::string render(const Expr& e);

// ---------------------------------------------------------------------------

using Bindings = std::map<std::string, Complex>;

Complex eval_numeric(const Expr& e, const Bindings& point);

/// d e / d name (name may be a variable or a parameter); result simplified.
Expr differentiate(const Expr& e, const std::string& name);

Expr substitute(const Expr& e, const std::map<std::string, Expr>& repl);
Expr substitute(const Expr& e, const std::string& name, const Expr& value);

/// Canonical cleanup: flatten, fold constants, collect terms/factors, merge
/// powers on a shared base, push exp over sums. Value-preserving on principal
/// branches; not a full canonical form.
Expr simplify(const Expr& e);

/// Distribute products over sums (and expand small positive integer powers of
/// sums), then simplify.
Expr expand(const Expr& e);

std::set<std::string> free_names(const Expr& e);
bool depends_on(const Expr& e, const std::string& name);

// ---------------------------------------------------------------------------

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    double uniform(double lo, double hi);
    std::uint64_t seed_for_child();  // derive a sub-stream deterministically
    std::mt19937_64& engine() { return engine_; }
private:
    std::mt19937_64 engine_;
};

struct Interval {
    double lo = 0.0, hi = 1.0;
    bool complex_valued = false;  // sample imaginary part from the same interval
};

/// Per-name real sampling intervals plus strict positivity constraints
/// (each constraint expression must evaluate > 0 at an accepted sample).
struct Domain {
    std::map<std::string, Interval> ranges;
    std::vector<Expr> constraints;

    Domain() = default;
    Domain& range(const std::string& name, double lo, double hi, bool complex_valued = false);
    Domain& constrain(Expr positive);
    bool covers(const std::set<std::string>& names) const;
    /// One accepted sample; throws PoleError-like domain error when the retry
    /// budget is exhausted.
    Bindings sample(Rng& rng, int retry_budget = 400) const;
    Domain with_fixed(const Bindings& fixed) const;
};

struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EquivOptions {
    int samples = 24;
    double rtol = 1e-9;
    double atol = 1e-12;
    int retry_budget = 600;
};

/// Randomized identity test: |a-b| <= atol + rtol*max(|a|,|b|) at `samples`
/// accepted points of dom. Poles trigger resampling within the retry budget.
bool equivalent(const Expr& a, const Expr& b, const Domain& dom, Rng& rng,
                const EquivOptions& opts = {});

/// max |e| over accepted samples (raw magnitude probe for residual checks).
double max_abs_on(const Expr& e, const Domain& dom, Rng& rng, int samples = 24);

}  // namespace liequant

#endif
