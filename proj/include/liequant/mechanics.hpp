#ifndef LIEQUANT_MECHANICS_HPP
#define LIEQUANT_MECHANICS_HPP

#include <optional>
#include <string>
#include <vector>

#include "liequant/expr.hpp"
#include "liequant/vectorfield.hpp"

namespace liequant {

struct Lagrangian {
    Expr L;
    std::optional<Expr> gauge;  // G(t,x) whose total derivative may be split off
    std::string tvar = "t";
    std::string xvar = "x";
    std::string vvar = "xdot";
    std::string avar = "xddot";
    Domain domain;
};

struct Hamiltonian {
    Expr H;
    std::string xvar = "x";
    std::string pvar = "p";
    Domain domain;
};

/// Old canonical pair (x, p) expressed in new variables; {x,p} = 1 in the new
/// pair is checked where the map is produced.
struct CanonicalMap {
    Expr x_of, p_of;
    std::string xvar = "x";
    std::string pvar = "p";
    std::vector<std::string> new_vars;
};

struct DegenerateLagrangianError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NonInvertibleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// xddot solved from Dt(dL/dxdot) - dL/dx = 0. A declared gauge term is
/// checked to leave the equation unchanged.
Ode2 euler_lagrange(const Lagrangian& lag, Rng& rng);

struct LegendreResult {
    Hamiltonian hamiltonian;
    Expr momentum;  // dL/dxdot as a function of (t, x, xdot)
    Expr velocity;  // xdot as a function of (x, p), on the selected branch
    int branch = 0;
};

/// Forward Legendre transform; branch selection picks the inverse consistent
/// with the sampled domain (reference xdot = 0 lies inside it).
LegendreResult legendre_to_hamiltonian(const Lagrangian& lag, const std::string& pvar,
                                       Rng& rng);

Lagrangian hamiltonian_to_lagrangian(const Hamiltonian& ham, const std::string& tvar,
                                     const std::string& vvar, Rng& rng);

/// R = a(t,x) + b(t,x) xdot with da/dx = db/dt; reconstructs the gauge by line
/// integration from (t0, x0) and verifies Dt G == R. nullopt when R is not a
/// total derivative; residual_out carries the failing magnitude.
std::optional<Expr> is_total_derivative(const Expr& R, const std::string& tvar,
                                        const std::string& xvar, const std::string& vvar,
                                        const Domain& dom, Rng& rng,
                                        double t0 = 0.0, double x0 = 0.0,
                                        double* residual_out = nullptr);

struct NoetherCertificate {
    Expr gauge;
    Expr first_integral;
};

/// Noether condition pr1(vf)(L) + L Dt(xi) = Dt(G); on success returns the
/// gauge and the first integral (whose Dt vanishes along the EL equation).
std::optional<NoetherCertificate> is_noether_symmetry(const VectorField& vf,
                                                      const Lagrangian& lag, Rng& rng);

/// Jacobi-Last-Multiplier Lagrangian for xddot + f(x) xdot + g(x) = 0 when
/// d/dx (g/f) = alpha (1-alpha) f holds; L = (xdot + g/(alpha f))^(2-1/alpha).
std::optional<Lagrangian> jlm_lagrangian(const Expr& f, const Expr& g, const Expr& alpha,
                                         const std::string& xvar, const Domain& dom,
                                         Rng& rng, double* residual_out = nullptr);

Expr poisson_bracket(const Expr& A, const Expr& B,
                     const std::vector<std::pair<std::string, std::string>>& pairs);

/// Impose x = df3/dp and s = df3/dq, solve for the map (x,p) <-> (q,s), and
/// verify canonicity {x,p}_(q,s) = 1 on dom.
CanonicalMap derive_canonical_map_f3(const Expr& f3, const std::string& qvar,
                                     const std::string& pvar, const std::string& svar,
                                     const std::string& xvar, const Domain& dom, Rng& rng);

/// Dt^2 q + freq_sq q == 0 modulo the ODE.
bool verify_contact_oscillator(const Expr& q_expr, const Ode2& ode, const Expr& freq_sq,
                               Rng& rng);

/// L1 == cmul * L2 + Dt G for the given constant; gauge reconstruction reuses
/// is_total_derivative.
bool lagrangian_equiv_mod_gauge(const Lagrangian& L1, const Lagrangian& L2,
                                const Expr& cmul, Rng& rng);

}  // namespace liequant

#endif
