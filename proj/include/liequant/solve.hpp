#ifndef LIEQUANT_SOLVE_HPP
#define LIEQUANT_SOLVE_HPP

#include <optional>
#include <string>
#include <vector>

#include "liequant/expr.hpp"

namespace liequant {

struct SolveError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Count leaf occurrences of a name.
int occurrence_count(const Expr& e, const std::string& name);

/// Solve lhs == rhs for `name` by peeling operations; requires the name to
/// occur exactly once in lhs. Even constant powers fork into two candidate
/// branches. Throws SolveError when an operation cannot be inverted.
std::vector<Expr> solve_for(const Expr& lhs, const Expr& rhs, const std::string& name);

/// Antiderivative of e with respect to var for the closed-form family
/// c, var^p, (a var + b)^p, sin/cos/exp of linear arguments, and sums /
/// constant multiples thereof (the integrand is expanded first). Returns
/// nullopt when a term falls outside the family.
std::optional<Expr> integrate_simple(const Expr& e, const std::string& var);

/// Decompose e as a + b*var when e is affine in var; nullopt otherwise.
std::optional<std::pair<Expr, Expr>> linear_in(const Expr& e, const std::string& var);

}  // namespace liequant

#endif
