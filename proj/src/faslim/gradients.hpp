#pragma once

#include <array>
#include <functional>
#include <utility>
#include <vector>

#include "faslim/channel.hpp"
#include "faslim/solution.hpp"

namespace faslim {

/// Which position coordinate a derivative refers to.
struct CoordRef {
    enum Kind { antenna, element } kind = antenna;
    int index = 0;  ///< antenna n or element m
    int axis = 0;   ///< 0 = x, 1 = y
};

/// Real gradient of a scalar with respect to every antenna and element
/// position.
struct PositionGradient {
    std::vector<Vec2> d_p;
    std::vector<Vec2> d_r;
};

/// Derivative of the steering-vector entry `index` with respect to its own
/// position: (-j 2pi/lambda) * sin(tilt) * (cos(bearing), sin(bearing)) *
/// a_index. Other entries do not depend on this position.
std::pair<std::complex<double>, std::complex<double>>
grad_steering(const std::vector<Vec2>& positions, SteerAngles angles, double lambda_m,
              int index);

/// d/dx_n and d/dy_n of the Jakes matrix: row/column n carry
/// -(2pi/lambda) J1(2pi d/lambda) * (unit direction component); the result is
/// symmetric and zero elsewhere. Throws ModelError when point n coincides
/// with another point (the direction is undefined there).
std::pair<MatrixXd, MatrixXd> grad_correlation(const std::vector<Vec2>& positions,
                                               double lambda_m, int n_index);

struct SylvesterSolve {
    MatrixXd X;              ///< derivative of the PSD square root
    double residual = 0.0;   ///< ||sqrt_R X + X sqrt_R - dR||_F
};

/// Solves sqrt_R X + X sqrt_R = dR for symmetric dR via the eigenbasis of
/// sqrt_R: Xt_ij = dRt_ij / (s_i + s_j). Requires every eigenvalue pair sum
/// to stay above 1e-8 (throws ModelError otherwise).
SylvesterSolve sylvester_sqrt_grad(const MatrixXd& sqrt_r, const MatrixXd& dr);
/// Same with a precomputed eigendecomposition of R (s_i = sqrt(eval_i)).
SylvesterSolve sylvester_sqrt_grad(const VectorXd& evals_r, const MatrixXd& evecs_r,
                                   const MatrixXd& dr);

/// Caches per-coordinate square-root derivatives so that effective-channel
/// gradients for all users/coordinates reuse one Sylvester solve each.
class PositionGradientEngine {
public:
    PositionGradientEngine(const SystemConfig& cfg, const LinkGeometry& geo,
                           const ChannelRealization& chan, const SolutionState& sol);

    /// Row vector d h_k^eff / d coordinate, assembled from the six-term
    /// LoS/NLoS decomposition with the product rule on the cascade terms.
    RowVectorXcd grad_eff_channel(int user, CoordRef coord) const;

    /// Real gradient of |h_k^eff w_j|^2 over all positions (chain rule
    /// 2 Re{ (d h^eff w_j)^* s_kj }).
    PositionGradient grad_g(int user, int j) const;

    const ChannelRealization& channel() const { return *chan_; }

private:
    const SystemConfig* cfg_;
    const LinkGeometry* geo_;
    const ChannelRealization* chan_;
    const SolutionState* sol_;
    // square-root derivatives, indexed [index][axis]
    std::vector<std::array<MatrixXd, 2>> sqrt_grad_fas_;
    std::vector<std::array<MatrixXd, 2>> sqrt_grad_lim_;
    // g_k^H Theta precomputed per user (row vector over elements)
    std::vector<RowVectorXcd> glos_theta_, gnlos_theta_;
    MatrixXcd theta_h_los_, theta_h_nlos_;  // Theta * H_los, Theta * H_nlos
    MatrixXcd sqrtlr_draw_;                 // sqrt_lim_rx * draw (for antenna-side NLoS)
    MatrixXcd draw_sqrtfas_;                // draw * sqrt_fas (for element-side NLoS)
};

/// One-off wrappers for the engine.
RowVectorXcd grad_effective_channel(const SystemConfig& cfg, const LinkGeometry& geo,
                                    const ChannelRealization& chan, const SolutionState& sol,
                                    int user, CoordRef coord);
PositionGradient grad_g_kj(const SystemConfig& cfg, const LinkGeometry& geo,
                           const ChannelRealization& chan, const SolutionState& sol,
                           int user, int j);

/// Central finite differences of an arbitrary scalar of the positions.
/// The callable sees the perturbed layouts and must rebuild whatever it
/// evaluates (channels are reassembled from the frozen draw by the caller).
PositionGradient finite_difference_gradient(
    const std::function<double(const std::vector<Vec2>&, const std::vector<Vec2>&)>& f,
    std::vector<Vec2> p, std::vector<Vec2> r, double step);

/// |h_k^eff w_j|^2 rebuilt from scratch at the given positions; the
/// independent quantity the analytic gradients are checked against.
double g_kj_value(const SystemConfig& cfg, const LinkGeometry& geo, const SmallScaleDraw& draw,
                  const VectorXcd& theta, const MatrixXcd& w, const std::vector<Vec2>& p,
                  const std::vector<Vec2>& r, int user, int j, bool correlation_enabled = true);

}  // namespace faslim
