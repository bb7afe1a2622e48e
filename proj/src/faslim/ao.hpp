#pragma once

#include <optional>
#include <string>
#include <vector>

#include "faslim/channel.hpp"
#include "faslim/concave_program.hpp"
#include "faslim/solution.hpp"

namespace faslim {

/// Previous-iterate anchors and cached bilinear pieces consumed by the
/// subproblem builders. Anchors always come from the current accepted
/// solution's true SINR values, so a_t/b_t = gamma_t holds exactly.
struct SurrogateState {
    VectorXd gamma_t, a_t, b_t;            // per user, noise-normalized a/b
    MatrixXcd w_t;                          // N x K
    VectorXcd theta_t;                      // M
    std::vector<Vec2> p_t, r_t;
    MatrixXcd s_kj;                         // direct-channel part h_k^H w_j
    MatrixXcd mu_kj;                        // s_kj + theta_t^T v_kj = h_k^eff w_j
    std::vector<std::vector<VectorXcd>> v_kj;  // coupling-matrix part D_k w_j

    static SurrogateState compute(const SystemConfig& cfg, const ChannelRealization& chan,
                                  const SolutionState& sol);
};

/// One affine row encoding a >= gamma_t b_t + b_t (gamma - gamma_t) +
/// gamma_t (b - b_t), i.e. -a + b_t gamma + gamma_t b <= gamma_t b_t.
AffineConstraint build_bilinear_sca_constraint(double gamma_t, double b_t, int idx_a,
                                               int idx_b, int idx_gamma, int n_vars);

struct TraceRow {
    int iter = 0;
    std::string stage;
    double sum_rate = 0.0;
    double objective = 0.0;   ///< subproblem surrogate objective
    double penalty = 0.0;     ///< sum_m | |theta_m|^2 - 1 |
    double violation = 0.0;   ///< worst physical constraint violation
    double ms = 0.0;
};

struct AOTrace {
    std::vector<TraceRow> rows;
};

struct AOOptions {
    int i_outer = 20;
    double rel_tol = 1e-4;        ///< outer stop on relative sum-rate change
    bool optimize_w = true;
    bool optimize_theta = true;
    std::vector<bool> movable_p;  ///< empty = all movable
    std::vector<bool> movable_r;
    bool record_trace = true;
};

struct SubproblemResult {
    SolutionState sol;          ///< accepted solution (safeguarded)
    VectorXd a, b, gamma;       ///< auxiliaries at the solver optimum
    double objective = 0.0;     ///< surrogate objective (bits/s/Hz scale)
    double sum_rate = 0.0;      ///< true rate at the accepted solution
    bool b_row_clamped = false; ///< an interference surrogate dipped below sigma^2
    bool step_accepted = false; ///< solver step survived the true-rate check
};

/// Beamformer block update at fixed phases/positions (problem over
/// {w, a, b, gamma}); the returned w never exceeds the power budget and never
/// decreases the true sum rate by more than 1e-9 (backtracks toward the
/// anchor otherwise).
SubproblemResult solve_beamforming_subproblem(const SystemConfig& cfg,
                                              const ChannelRealization& chan,
                                              const SolutionState& sol,
                                              const SurrogateState& state);

/// Phase block update ({theta, a, b, gamma, c}) with the penalized
/// unit-modulus relaxation. Acceptance requires both the true rate and the
/// penalized objective (rate - xi * modulus residual) not to decrease.
/// `xi_override` < 0 uses cfg.xi; the alternating loop passes a ramped value
/// (the linearized lower bound prices a rotation by phi at xi*phi^2, so the
/// full penalty weight would freeze the phases from the first iteration).
SubproblemResult solve_phase_subproblem(const SystemConfig& cfg,
                                        const ChannelRealization& chan,
                                        const SolutionState& sol,
                                        const SurrogateState& state,
                                        double xi_override = -1.0);

/// Position block update over the movable coordinates, linearized around the
/// anchor inside an inf-norm trust region. Solves, re-evaluates the true rate
/// on the rebuilt channel, halves the radius on rejection (<= 6 times) and
/// keeps the previous positions if no radius is accepted. `trust_radius` is
/// updated in place (x1.5 growth on acceptance, capped).
struct PositionStepResult {
    SubproblemResult sub;
    ChannelRealization chan;   ///< rebuilt at the accepted positions
    bool gradient_failure = false;
};
PositionStepResult solve_position_subproblem(const SystemConfig& cfg, const LinkGeometry& geo,
                                             const ChannelRealization& chan,
                                             const SolutionState& sol,
                                             const SurrogateState& state,
                                             double& trust_radius,
                                             const std::vector<bool>& movable_p,
                                             const std::vector<bool>& movable_r);

struct AOResult {
    SolutionState sol;          ///< best accepted solution, phases projected
    double sum_rate = 0.0;      ///< rate at the projected phases
    double pre_projection_rate = 0.0;
    double pre_projection_modulus_dev = 0.0;
    AOTrace trace;
    int outer_iters = 0;
    bool failed = false;        ///< a subproblem failed hard; best-so-far returned
    ChannelRealization chan;    ///< realization matching sol's positions
};

/// Alternating loop (w, then theta, then positions) with best-so-far
/// tracking; stops after i_outer rounds or two consecutive relative changes
/// below rel_tol. Phases are normalized to unit modulus at the end and the
/// reported rate uses the projected phases.
AOResult alternating_optimize(const SystemConfig& cfg, const LinkGeometry& geo,
                              const ChannelRealization& chan0, const SolutionState& sol0,
                              const AOOptions& options = {});

}  // namespace faslim
