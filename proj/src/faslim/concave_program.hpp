#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace faslim {

/// weight * log(1 + x[index]), weight > 0; the implicit domain x > -1 is
/// maintained by the line search.
struct LogTerm {
    double weight = 1.0;
    int index = 0;
};

/// a^T x <= b
struct AffineConstraint {
    Eigen::VectorXd a;
    double b = 0.0;
};

/// x^T Q x + q^T x <= c with Q symmetric PSD
struct QuadConstraint {
    Eigen::MatrixXd Q;
    Eigen::VectorXd q;
    double c = 0.0;
};

/// Canonical concave maximization: maximize sum of log terms plus a linear
/// form subject to affine rows, convex quadratic rows and coordinate lower
/// bounds. x0 must be strictly feasible.
struct ConcaveProgram {
    int n_vars = 0;
    std::vector<LogTerm> log_terms;
    Eigen::VectorXd linear_objective;
    std::vector<AffineConstraint> affine;
    std::vector<QuadConstraint> quad;
    std::vector<std::pair<int, double>> lower_bounds;  // x[i] >= v
    Eigen::VectorXd x0;

    int constraint_count() const
    {
        return static_cast<int>(affine.size() + quad.size() + lower_bounds.size());
    }
};

struct SolverSettings {
    double mu = 10.0;          ///< barrier parameter growth
    double t0 = 1.0;           ///< initial barrier weight
    double tol = 1e-6;         ///< stop when m/t <= tol
    double newton_tol = 1e-9;  ///< stop centering when lambda^2/2 <= this
    double alpha = 0.1;        ///< backtracking sufficient-decrease fraction
    double beta = 0.5;         ///< backtracking step shrink
    int max_newton_per_stage = 120;
    int max_newton_total = 4000;
};

enum class SolveStatus { converged, max_iter, numerical_failure };

struct SolverResult {
    Eigen::VectorXd x;
    double objective = 0.0;  ///< concave objective at x
    SolveStatus status = SolveStatus::numerical_failure;
    int newton_iters = 0;
    double max_violation = 0.0;
};

struct FeasibilityCheck {
    bool feasible = false;
    double worst_violation = 0.0;  ///< max over constraints of lhs - rhs
    int worst_constraint = -1;     ///< affine rows, then quad rows, then bounds
};

FeasibilityCheck check_feasible(const ConcaveProgram& prog, const Eigen::VectorXd& x);

double program_objective(const ConcaveProgram& prog, const Eigen::VectorXd& x);

/// Log-barrier interior-point method with damped Newton centering and
/// backtracking line search. Throws SolverError when x0 is not strictly
/// feasible; numerical trouble is reported through the status instead.
SolverResult solve_concave_program(const ConcaveProgram& prog,
                                   const SolverSettings& settings = {});

/// Writes the program in a readable canonical form (debugging aid).
void dump_program(const ConcaveProgram& prog, const std::string& path);

}  // namespace faslim
