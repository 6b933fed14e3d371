#include "liequant/vectorfield.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

namespace liequant {

Expr total_derivative(const Expr& e, const std::string& tvar,
                      const std::vector<std::pair<std::string, std::string>>& chain) {
    Expr d = differentiate(e, tvar);
    for (const auto& [name, dname] : chain)
        d = d + Expr::variable(dname) * differentiate(e, name);
    return d;
}

Expr VectorField::apply(const Expr& g) const {
    return xi * differentiate(g, tvar) + eta * differentiate(g, xvar);
}

Prolongation prolong2(const VectorField& vf, const std::string& vvar,
                      const std::string& avar) {
    const auto chain1 = std::vector<std::pair<std::string, std::string>>{{vf.xvar, vvar}};
    const auto chain2 =
        std::vector<std::pair<std::string, std::string>>{{vf.xvar, vvar}, {vvar, avar}};
    Expr v = Expr::variable(vvar);
    Expr a = Expr::variable(avar);
    Expr Dxi1 = total_derivative(vf.xi, vf.tvar, chain1);
    Expr eta1 = total_derivative(vf.eta, vf.tvar, chain1) - v * Dxi1;
    Expr Dxi2 = total_derivative(vf.xi, vf.tvar, chain2);
    Expr eta2 = total_derivative(eta1, vf.tvar, chain2) - a * Dxi2;
    return {simplify(eta1), simplify(eta2)};
}

Expr determining_expression(const VectorField& vf, const Ode2& ode) {
    auto [eta1, eta2] = prolong2(vf, ode.vvar, ode.avar);
    const Expr& f = ode.rhs;
    Expr det = eta2 - vf.xi * differentiate(f, ode.tvar) - vf.eta * differentiate(f, ode.xvar) -
               eta1 * differentiate(f, ode.vvar);
    det = substitute(det, ode.avar, f);
    return simplify(det);
}

bool is_ode_symmetry(const VectorField& vf, const Ode2& ode, Rng& rng,
                     const EquivOptions& opts) {
    Expr det = determining_expression(vf, ode);
    return equivalent(det, Expr::integer(0), ode.domain, rng, opts);
}

VectorField vf_commutator(const VectorField& a, const VectorField& b) {
    Expr cxi = a.apply(b.xi) - b.apply(a.xi);
    Expr ceta = a.apply(b.eta) - b.apply(a.eta);
    return {simplify(cxi), simplify(ceta), a.tvar, a.xvar};
}

namespace {

// Evaluate the two components of each field at `samples` accepted points,
// stacking into a 2S x n real matrix (imaginary parts must be negligible).
Eigen::MatrixXd sample_matrix(const std::vector<VectorField>& basis, const Domain& dom,
                              Rng& rng, int samples, std::vector<Bindings>& pts_out) {
    const int n = static_cast<int>(basis.size());
    Eigen::MatrixXd m(2 * samples, n);
    pts_out.clear();
    int row = 0, attempts = 0;
    while (row < samples) {
        if (++attempts > 60 * samples)
            throw DomainError("structure-constant sampling exhausted its retry budget");
        Bindings pt = dom.sample(rng);
        bool ok = true;
        Eigen::VectorXd colxi(n), coleta(n);
        for (int j = 0; j < n && ok; ++j) {
            try {
                Complex a = eval_numeric(basis[j].xi, pt);
                Complex b = eval_numeric(basis[j].eta, pt);
                colxi(j) = a.real();
                coleta(j) = b.real();
            } catch (const PoleError&) {
                ok = false;
            }
        }
        if (!ok) continue;
        m.row(2 * row) = colxi.transpose();
        m.row(2 * row + 1) = coleta.transpose();
        pts_out.push_back(pt);
        ++row;
    }
    return m;
}

}  // namespace

StructureConstants structure_constants(const std::vector<VectorField>& basis,
                                       const Domain& dom, Rng& rng, int samples,
                                       double residual_tol) {
    const int n = static_cast<int>(basis.size());
    std::vector<Bindings> pts;
    Eigen::MatrixXd m = sample_matrix(basis, dom, rng, samples, pts);

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (sv(n - 1) < 1e-10 * sv(0))
        throw LinearDependenceError("basis fields are numerically linearly dependent");

    StructureConstants out;
    out.c.assign(n, std::vector<std::vector<double>>(n, std::vector<double>(n, 0.0)));
    out.closed = true;

    double scale = m.cwiseAbs().maxCoeff();
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            VectorField comm = vf_commutator(basis[i], basis[j]);
            Eigen::VectorXd rhs(2 * static_cast<int>(pts.size()));
            for (std::size_t s = 0; s < pts.size(); ++s) {
                rhs(2 * s) = eval_numeric(comm.xi, pts[s]).real();
                rhs(2 * s + 1) = eval_numeric(comm.eta, pts[s]).real();
            }
            Eigen::VectorXd coef = svd.solve(rhs);
            double resid = (m * coef - rhs).cwiseAbs().maxCoeff() /
                           std::max(1.0, std::max(scale, rhs.cwiseAbs().maxCoeff()));
            if (resid > out.max_residual) out.max_residual = resid;
            if (resid > residual_tol && out.closed) {
                out.closed = false;
                out.bad_i = i;
                out.bad_j = j;
            }
            for (int kk = 0; kk < n; ++kk) {
                out.c[i][j][kk] = coef(kk);
                out.c[j][i][kk] = -coef(kk);
            }
        }
    }
    return out;
}

bool is_abelian_intransitive_pair(const VectorField& a, const VectorField& b,
                                  const Domain& dom, Rng& rng) {
    VectorField comm = vf_commutator(a, b);
    Expr zero = Expr::integer(0);
    if (!equivalent(comm.xi, zero, dom, rng) || !equivalent(comm.eta, zero, dom, rng))
        return false;
    // linear independence over constants
    try {
        std::vector<Bindings> pts;
        Eigen::MatrixXd m = sample_matrix({a, b}, dom, rng, 12, pts);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
        if (svd.singularValues()(1) < 1e-9 * svd.singularValues()(0)) return false;
    } catch (const DomainError&) {
        return false;
    }
    // rank-1 direction fields: xi_a eta_b - xi_b eta_a = 0
    Expr det = a.xi * b.eta - b.xi * a.eta;
    return equivalent(det, zero, dom, rng);
}

bool verify_point_transform(const PointMap& map, const Ode2& src, const Ode2& dst,
                            Rng& rng, const EquivOptions& opts) {
    const std::string& t = src.tvar;
    const std::string& x = src.xvar;
    const std::string& v = src.vvar;
    const std::string& a = src.avar;
    const auto chain1 = std::vector<std::pair<std::string, std::string>>{{x, v}};
    const auto chain2 = std::vector<std::pair<std::string, std::string>>{{x, v}, {v, a}};

    // Jacobian must be nonsingular somewhere on the domain
    Expr jac = differentiate(map.new_time, t) * differentiate(map.new_position, x) -
               differentiate(map.new_time, x) * differentiate(map.new_position, t);
    bool nonsingular = false;
    for (int trial = 0; trial < 40 && !nonsingular; ++trial) {
        try {
            Bindings pt = src.domain.sample(rng);
            if (std::abs(eval_numeric(jac, pt)) > 1e-10) nonsingular = true;
        } catch (const EvalError&) {
            continue;
        }
    }
    if (!nonsingular) throw DomainError("point map has a singular Jacobian at all samples");

    Expr Td = total_derivative(map.new_time, t, chain1);
    Expr Yd = total_derivative(map.new_position, t, chain1);
    Expr slope = Yd / Td;
    Expr slope_dot = substitute(total_derivative(slope, t, chain2), a, src.rhs);
    Expr second = simplify(slope_dot / Td);

    // dst rhs written in src coordinates
    Expr target = substitute(dst.rhs, {{dst.tvar, map.new_time},
                                       {dst.xvar, map.new_position},
                                       {dst.vvar, slope}});
    Expr residual = simplify(second - target);
    return equivalent(residual, Expr::integer(0), src.domain, rng, opts);
}

AnsatzResult find_symmetries_ansatz(const Ode2& ode, const std::vector<Expr>& basis,
                                    Rng& rng, double nullspace_rel_tol) {
    const int nb = static_cast<int>(basis.size());
    const int unknowns = 2 * nb;

    // determining expression is linear in (xi, eta); one column per unit field
    std::vector<Expr> columns;
    columns.reserve(unknowns);
    Expr zero = Expr::integer(0);
    for (int j = 0; j < nb; ++j)
        columns.push_back(
            determining_expression({basis[j], zero, ode.tvar, ode.xvar}, ode));
    for (int j = 0; j < nb; ++j)
        columns.push_back(
            determining_expression({zero, basis[j], ode.tvar, ode.xvar}, ode));

    const int rows = 3 * unknowns + 8;
    Eigen::MatrixXd m(rows, unknowns);
    int r = 0, attempts = 0;
    while (r < rows) {
        if (++attempts > 50 * rows)
            throw DomainError("ansatz sampling exhausted its retry budget");
        Bindings pt = ode.domain.sample(rng);
        Eigen::RowVectorXd row(unknowns);
        bool ok = true;
        for (int j = 0; j < unknowns && ok; ++j) {
            try {
                row(j) = eval_numeric(columns[j], pt).real();
            } catch (const PoleError&) {
                ok = false;
            }
        }
        if (!ok) continue;
        m.row(r++) = row;
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    AnsatzResult out;
    for (int i = 0; i < sv.size(); ++i) out.singular_values.push_back(sv(i));
    double smax = sv(0);
    if (smax <= 0.0) throw DomainError("degenerate ansatz sampling matrix");
    double smin_nonzero = smax;
    for (int i = 0; i < sv.size(); ++i)
        if (sv(i) > nullspace_rel_tol * smax) smin_nonzero = sv(i);
    out.condition = smax / smin_nonzero;

    for (int col = 0; col < sv.size(); ++col) {
        if (sv(col) > nullspace_rel_tol * smax) continue;
        Eigen::VectorXd vvec = svd.matrixV().col(col);
        std::vector<Expr> xits, etats;
        for (int j = 0; j < nb; ++j) {
            if (std::abs(vvec(j)) > 1e-10)
                xits.push_back(Expr::real(vvec(j)) * basis[j]);
            if (std::abs(vvec(nb + j)) > 1e-10)
                etats.push_back(Expr::real(vvec(nb + j)) * basis[j]);
        }
        VectorField cand{simplify(Expr::add(xits)), simplify(Expr::add(etats)), ode.tvar,
                         ode.xvar};
        Rng verify_rng(rng.seed_for_child());
        EquivOptions lax;
        lax.rtol = 1e-6;  // nullspace vectors carry O(svd) rounding
        lax.atol = 1e-7;
        if (is_ode_symmetry(cand, ode, verify_rng, lax)) out.fields.push_back(cand);
    }
    return out;
}

}  // namespace liequant
