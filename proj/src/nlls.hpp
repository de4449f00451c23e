// Small dense Levenberg-Marquardt helper shared by the profile fits. Numeric
// central-difference Jacobian, optional lower bounds via clamping.
#pragma once

#include <Eigen/Dense>
#include <functional>
#include <limits>
#include <vector>

#include "cavitykit/errors.hpp"

namespace cavitykit::detail {

struct NllsResult {
    Eigen::VectorXd q;
    Eigen::MatrixXd covariance;
    double chi2_reduced = 0.0;
    int iterations = 0;
};

struct NllsProblem {
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> residual;
    Eigen::VectorXd lower;  // element-wise lower bounds (-inf allowed)
    int max_iterations = 200;
    double fd_rel_step = 1e-6;
    double chi2_rel_tol = 1e-12;
};

inline NllsResult levenberg_marquardt(const NllsProblem& prob, Eigen::VectorXd q) {
    const int np = (int)q.size();
    auto clamp = [&](Eigen::VectorXd v) {
        if (prob.lower.size() == np)
            for (int i = 0; i < np; ++i) v(i) = std::max(v(i), prob.lower(i));
        return v;
    };
    q = clamp(q);
    Eigen::VectorXd r = prob.residual(q);
    double chi2 = r.squaredNorm();
    double lambda = 1e-3;
    int it = 0;
    int stall = 0;
    for (; it < prob.max_iterations; ++it) {
        // central-difference Jacobian
        Eigen::MatrixXd jac(r.size(), np);
        for (int j = 0; j < np; ++j) {
            const double h = prob.fd_rel_step * std::max(1.0, std::abs(q(j)));
            Eigen::VectorXd qp = q, qm = q;
            qp(j) += h;
            qm(j) -= h;
            if (prob.lower.size() == np && qm(j) < prob.lower(j)) {
                // one-sided at the bound
                jac.col(j) = (prob.residual(qp) - r) / h;
            } else {
                jac.col(j) = (prob.residual(qp) - prob.residual(qm)) / (2.0 * h);
            }
        }
        const Eigen::MatrixXd h_mat = jac.transpose() * jac;
        const Eigen::VectorXd g = jac.transpose() * r;
        if (!h_mat.allFinite() || !g.allFinite())
            throw SingularJacobian("nlls: non-finite normal equations");

        bool accepted = false;
        for (int trial = 0; trial < 40; ++trial) {
            Eigen::MatrixXd damped = h_mat;
            for (int d = 0; d < np; ++d)
                damped(d, d) += lambda * std::max(h_mat(d, d), 1e-300);
            Eigen::LDLT<Eigen::MatrixXd> ldlt(damped);
            if (ldlt.info() != Eigen::Success)
                throw SingularJacobian("nlls: damped normal matrix not decomposable");
            const Eigen::VectorXd step = ldlt.solve(-g);
            if (!step.allFinite())
                throw SingularJacobian("nlls: singular step (degenerate direction)");
            const Eigen::VectorXd qt = clamp(q + step);
            const Eigen::VectorXd rt = prob.residual(qt);
            const double chi2t = rt.squaredNorm();
            if (chi2t <= chi2) {
                const double drop = chi2 - chi2t;
                q = qt;
                r = rt;
                chi2 = chi2t;
                lambda = std::max(lambda / 3.0, 1e-12);
                accepted = true;
                stall = (drop <= prob.chi2_rel_tol * std::max(chi2, 1e-300)) ? stall + 1 : 0;
                break;
            }
            lambda *= 4.0;
        }
        if (!accepted || stall >= 2) break;
    }
    if (it >= prob.max_iterations)
        throw MaxIterations("nlls: no convergence within iteration budget");

    NllsResult out;
    out.q = q;
    out.iterations = it;
    // covariance from the Jacobian at the optimum
    Eigen::MatrixXd jac(r.size(), np);
    for (int j = 0; j < np; ++j) {
        const double h = prob.fd_rel_step * std::max(1.0, std::abs(q(j)));
        Eigen::VectorXd qp = q, qm = q;
        qp(j) += h;
        qm(j) -= h;
        if (prob.lower.size() == np && qm(j) < prob.lower(j))
            jac.col(j) = (prob.residual(qp) - r) / h;
        else
            jac.col(j) = (prob.residual(qp) - prob.residual(qm)) / (2.0 * h);
    }
    const int dof = std::max<int>(1, (int)r.size() - np);
    out.chi2_reduced = chi2 / dof;
    Eigen::MatrixXd h_mat = jac.transpose() * jac;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(h_mat);
    if (ldlt.info() == Eigen::Success) {
        out.covariance = ldlt.solve(Eigen::MatrixXd::Identity(np, np)) * out.chi2_reduced;
    } else {
        out.covariance = Eigen::MatrixXd::Constant(np, np,
                                                   std::numeric_limits<double>::quiet_NaN());
    }
    return out;
}

}  // namespace cavitykit::detail
