#include "faslim/concave_program.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "faslim/errors.hpp"

namespace faslim {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// slacks of every constraint (positive inside), in check_feasible index order
VectorXd constraint_slacks(const ConcaveProgram& prog, const VectorXd& x)
{
    VectorXd s(prog.constraint_count());
    int idx = 0;
    for (const auto& row : prog.affine)
        s[idx++] = row.b - row.a.dot(x);
    for (const auto& row : prog.quad)
        s[idx++] = row.c - x.dot(row.Q * x) - row.q.dot(x);
    for (const auto& [i, v] : prog.lower_bounds)
        s[idx++] = x[i] - v;
    return s;
}

bool in_log_domain(const ConcaveProgram& prog, const VectorXd& x)
{
    for (const auto& term : prog.log_terms)
        if (x[term.index] <= -1.0)
            return false;
    return true;
}

// barrier objective -t f(x) - sum log(slack); +inf outside the domain
double barrier_value(const ConcaveProgram& prog, const VectorXd& x, double t)
{
    if (!in_log_domain(prog, x))
        return kInf;
    const VectorXd s = constraint_slacks(prog, x);
    if ((s.array() <= 0.0).any())
        return kInf;
    return -t * program_objective(prog, x) - s.array().log().sum();
}

}  // namespace

double program_objective(const ConcaveProgram& prog, const VectorXd& x)
{
    double f = prog.linear_objective.size() ? prog.linear_objective.dot(x) : 0.0;
    for (const auto& term : prog.log_terms)
        f += term.weight * std::log1p(x[term.index]);
    return f;
}

FeasibilityCheck check_feasible(const ConcaveProgram& prog, const Eigen::VectorXd& x)
{
    if (x.size() != prog.n_vars)
        throw SolverError("check_feasible: dimension mismatch");
    FeasibilityCheck out;
    const VectorXd s = constraint_slacks(prog, x);
    out.worst_violation = -kInf;
    for (int i = 0; i < s.size(); ++i) {
        if (-s[i] > out.worst_violation) {
            out.worst_violation = -s[i];
            out.worst_constraint = i;
        }
    }
    if (s.size() == 0) {
        out.worst_violation = 0.0;
        out.worst_constraint = -1;
    }
    out.feasible = out.worst_violation <= 0.0;
    return out;
}

SolverResult solve_concave_program(const ConcaveProgram& prog, const SolverSettings& settings)
{
    const int n = prog.n_vars;
    if (prog.x0.size() != n)
        throw SolverError("solver: x0 has wrong dimension");
    {
        const VectorXd s0 = constraint_slacks(prog, prog.x0);
        if ((s0.array() <= 0.0).any() || !in_log_domain(prog, prog.x0))
            throw SolverError("solver: x0 is not strictly feasible");
    }

    const int m = prog.constraint_count();
    VectorXd x = prog.x0;
    double t = settings.t0;
    SolverResult result;
    result.status = SolveStatus::converged;

    VectorXd grad(n);
    MatrixXd hess(n, n);

    for (;;) {
        // centering at the current t
        for (int it = 0; it < settings.max_newton_per_stage; ++it) {
            if (result.newton_iters >= settings.max_newton_total) {
                result.status = SolveStatus::max_iter;
                break;
            }
            grad.setZero();
            hess.setZero();

            // -t * objective
            if (prog.linear_objective.size())
                grad -= t * prog.linear_objective;
            for (const auto& term : prog.log_terms) {
                const double denom = 1.0 + x[term.index];
                grad[term.index] -= t * term.weight / denom;
                hess(term.index, term.index) += t * term.weight / (denom * denom);
            }

            // barrier terms
            bool slack_ok = true;
            for (const auto& row : prog.affine) {
                const double s = row.b - row.a.dot(x);
                if (s <= 0.0) { slack_ok = false; break; }
                grad += row.a / s;
                hess.selfadjointView<Eigen::Lower>().rankUpdate(row.a, 1.0 / (s * s));
            }
            if (slack_ok) {
                for (const auto& row : prog.quad) {
                    const VectorXd qx = row.Q * x;
                    const double s = row.c - x.dot(qx) - row.q.dot(x);
                    if (s <= 0.0) { slack_ok = false; break; }
                    const VectorXd gq = 2.0 * qx + row.q;
                    grad += gq / s;
                    hess.selfadjointView<Eigen::Lower>().rankUpdate(gq, 1.0 / (s * s));
                    hess.triangularView<Eigen::Lower>() += (2.0 / s) * row.Q;
                }
            }
            if (slack_ok) {
                for (const auto& [i, v] : prog.lower_bounds) {
                    const double s = x[i] - v;
                    if (s <= 0.0) { slack_ok = false; break; }
                    grad[i] -= 1.0 / s;
                    hess(i, i) += 1.0 / (s * s);
                }
            }
            if (!slack_ok) {
                result.status = SolveStatus::numerical_failure;
                break;
            }
            hess.triangularView<Eigen::StrictlyUpper>() =
                hess.triangularView<Eigen::StrictlyLower>().transpose();

            // diagonal equilibration keeps the Newton system well scaled when
            // variables span many orders of magnitude
            VectorXd scale(n);
            for (int i = 0; i < n; ++i)
                scale[i] = 1.0 / std::sqrt(std::max(hess(i, i), 1e-300));
            const MatrixXd hs = scale.asDiagonal() * hess * scale.asDiagonal() +
                                1e-12 * MatrixXd::Identity(n, n);
            const VectorXd gs = scale.asDiagonal() * grad;
            Eigen::LDLT<MatrixXd> ldlt(hs);
            VectorXd step;
            if (ldlt.info() == Eigen::Success)
                step = scale.asDiagonal() * VectorXd(-ldlt.solve(gs));
            if (ldlt.info() != Eigen::Success || !step.allFinite()) {
                result.status = SolveStatus::numerical_failure;
                break;
            }

            const double decrement = -grad.dot(step);  // lambda^2
            ++result.newton_iters;
            if (decrement / 2.0 <= settings.newton_tol)
                break;

            // backtracking line search on the barrier objective
            const double psi0 = barrier_value(prog, x, t);
            double stride = 1.0;
            bool moved = false;
            while (stride > 1e-16) {
                const VectorXd cand = x + stride * step;
                const double psi = barrier_value(prog, cand, t);
                if (psi <= psi0 - settings.alpha * stride * decrement) {
                    x = cand;
                    moved = true;
                    break;
                }
                stride *= settings.beta;
            }
            if (!moved)
                break;  // stalled; numerically centered
        }
        if (result.status == SolveStatus::numerical_failure ||
            result.status == SolveStatus::max_iter)
            break;
        if (m == 0 || static_cast<double>(m) / t <= settings.tol)
            break;
        t *= settings.mu;
    }

    result.x = x;
    result.objective = program_objective(prog, x);
    result.max_violation = m > 0 ? check_feasible(prog, x).worst_violation : 0.0;
    return result;
}

void dump_program(const ConcaveProgram& prog, const std::string& path)
{
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write program dump: " + path);
    out.precision(17);
    out << "n_vars " << prog.n_vars << "\n";
    out << "objective";
    for (const auto& term : prog.log_terms)
        out << " + " << term.weight << "*log(1+x" << term.index << ")";
    if (prog.linear_objective.size()) {
        for (int i = 0; i < prog.linear_objective.size(); ++i)
            if (prog.linear_objective[i] != 0.0)
                out << " + " << prog.linear_objective[i] << "*x" << i;
    }
    out << "\n";
    for (const auto& row : prog.affine) {
        out << "affine:";
        for (int i = 0; i < row.a.size(); ++i)
            if (row.a[i] != 0.0)
                out << " " << row.a[i] << "*x" << i;
        out << " <= " << row.b << "\n";
    }
    for (const auto& row : prog.quad) {
        out << "quad: x'Qx";
        for (int i = 0; i < row.q.size(); ++i)
            if (row.q[i] != 0.0)
                out << " + " << row.q[i] << "*x" << i;
        out << " <= " << row.c << "  (Q " << row.Q.rows() << "x" << row.Q.cols() << ")\n";
    }
    for (const auto& [i, v] : prog.lower_bounds)
        out << "bound: x" << i << " >= " << v << "\n";
    out << "x0";
    for (int i = 0; i < prog.x0.size(); ++i)
        out << " " << prog.x0[i];
    out << "\n";
}

}  // namespace faslim
