#ifndef LIEQUANT_VECTORFIELD_HPP
#define LIEQUANT_VECTORFIELD_HPP

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "liequant/expr.hpp"

namespace liequant {

/// Total derivative along solutions: d/dt + sum over chain pairs
/// (name, name_dot) of name_dot * d/d name.
Expr total_derivative(const Expr& e, const std::string& tvar,
                      const std::vector<std::pair<std::string, std::string>>& chain);

/// Point-symmetry generator xi(t,x) d/dt + eta(t,x) d/dx.
struct VectorField {
    Expr xi, eta;
    std::string tvar = "t";
    std::string xvar = "x";

    VectorField() = default;
    VectorField(Expr xi_, Expr eta_, std::string t = "t", std::string x = "x")
        : xi(std::move(xi_)), eta(std::move(eta_)), tvar(std::move(t)), xvar(std::move(x)) {}

    /// Apply as a first-order derivation to a scalar in (t, x).
    Expr apply(const Expr& g) const;
};

/// Second-order ODE  x'' = rhs(t, x, x'), with a sampling domain covering
/// t, x, xdot and every parameter.
struct Ode2 {
    Expr rhs;
    std::string tvar = "t";
    std::string xvar = "x";
    std::string vvar = "xdot";
    std::string avar = "xddot";
    Domain domain;
};

/// Invertible change of dependent/independent variables (T(t,x), Y(t,x)).
struct PointMap {
    Expr new_time, new_position;
    bool time_preserving = false;
};

struct Prolongation {
    Expr eta1;  // in (t, x, xdot)
    Expr eta2;  // in (t, x, xdot, xddot)
};

Prolongation prolong2(const VectorField& vf, const std::string& vvar = "xdot",
                      const std::string& avar = "xddot");

/// eta2 - xi f_t - eta f_x - eta1 f_xdot with xddot eliminated through f.
Expr determining_expression(const VectorField& vf, const Ode2& ode);

bool is_ode_symmetry(const VectorField& vf, const Ode2& ode, Rng& rng,
                     const EquivOptions& opts = {});

VectorField vf_commutator(const VectorField& a, const VectorField& b);

struct StructureConstants {
    // c[i][j][k]: [b_i, b_j] = sum_k c[i][j][k] b_k, at fixed parameter values
    std::vector<std::vector<std::vector<double>>> c;
    bool closed = false;
    double max_residual = 0.0;
    int bad_i = -1, bad_j = -1;  // offending pair when not closed
};

struct LinearDependenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Least-squares expansion of every bracket in the basis, sampled on dom
/// (parameters must be pinned in dom for the constants to be numbers).
StructureConstants structure_constants(const std::vector<VectorField>& basis,
                                       const Domain& dom, Rng& rng, int samples = 48,
                                       double residual_tol = 1e-8);

/// [a,b] = 0, a and b independent over constants, and xi_a eta_b - xi_b eta_a = 0.
bool is_abelian_intransitive_pair(const VectorField& a, const VectorField& b,
                                  const Domain& dom, Rng& rng);

/// Push src through (T, Y) by the chain rule and compare with dst's rhs.
bool verify_point_transform(const PointMap& map, const Ode2& src, const Ode2& dst,
                            Rng& rng, const EquivOptions& opts = {});

struct AnsatzResult {
    std::vector<VectorField> fields;         // re-verified candidates
    std::vector<double> singular_values;     // of the sampling matrix
    double condition = 0.0;
};

/// Expand xi and eta in the given (t,x) basis functions, sample the
/// determining expression, and extract the numeric nullspace. Parameters must
/// be pinned in ode.domain.
AnsatzResult find_symmetries_ansatz(const Ode2& ode, const std::vector<Expr>& basis,
                                    Rng& rng, double nullspace_rel_tol = 1e-7);

}  // namespace liequant

#endif
