#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "faslim/config.hpp"
#include "faslim/geometry.hpp"
#include "faslim/rng.hpp"

namespace faslim {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::RowVectorXcd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

/// Array response: entry n is exp(-j 2pi/lambda * sin(tilt) *
/// (x_n cos(bearing) + y_n sin(bearing))). Unit modulus per entry.
VectorXcd steering_vector(const std::vector<Vec2>& positions, SteerAngles angles,
                          double lambda_m);

/// [R]_ij = J0(2 pi |x_i - x_j| / lambda); symmetric, unit diagonal.
MatrixXd jakes_correlation(const std::vector<Vec2>& positions, double lambda_m);

/// Spatial correlations for the current antenna/element layout together with
/// their PSD square roots and cached eigendecompositions. The departure and
/// arrival correlations of the surface share positions and therefore values,
/// but stay separate objects because their derivatives enter different terms.
struct CorrelationSet {
    MatrixXd fas;      // antennas
    MatrixXd lim_tx;   // elements, departure side
    MatrixXd lim_rx;   // elements, arrival side
    MatrixXd sqrt_fas, sqrt_lim_tx, sqrt_lim_rx;
    // eigendecompositions of the clamped matrices (ascending eigenvalues)
    VectorXd eval_fas, eval_lim_tx, eval_lim_rx;
    MatrixXd evec_fas, evec_lim_tx, evec_lim_rx;
};

/// Symmetric PSD square root U diag(sqrt(max(lambda,0))) U^T. Eigenvalues
/// below -1e-10 raise ModelError; small negative noise is clamped to zero.
MatrixXd psd_sqrt(const MatrixXd& r);
/// Same, also returning the clamped eigendecomposition.
MatrixXd psd_sqrt(const MatrixXd& r, VectorXd* evals, MatrixXd* evecs);

CorrelationSet build_correlations(const std::vector<Vec2>& p, const std::vector<Vec2>& r,
                                  double lambda_m, bool enabled = true);

/// Small-scale fading, frozen per Monte Carlo drop. Entries are CN(0,1).
/// Draw order is fixed: fas_lim row-major, then fas_user per user, then
/// lim_user per user.
struct SmallScaleDraw {
    MatrixXcd fas_lim;                    // M x N
    std::vector<VectorXcd> fas_user;      // per user, length N
    std::vector<VectorXcd> lim_user;      // per user, length M
};

SmallScaleDraw draw_small_scale(const SystemConfig& cfg, RngStream& rng);

/// The five composite gain constants of the effective-channel decomposition
/// (direct/cascade x LoS/NLoS and the mixed cascade term) for one user.
struct RicianScaling {
    double direct_los = 0.0;    // c1
    double cascade_los = 0.0;   // c2
    double direct_nlos = 0.0;   // c3
    double cascade_nlos = 0.0;  // c4
    double cascade_mixed = 0.0; // c5, satisfies c5^2 = c2*c4
};

RicianScaling rician_scaling(const SystemConfig& cfg, const LinkGeometry& geo, int user);

/// One assembled channel drop: mixed channels plus the LoS/NLoS pieces,
/// steering vectors, correlations and the frozen draw needed to rebuild or
/// differentiate it. Pure function of (positions, draw, cfg, geo).
struct ChannelRealization {
    MatrixXcd H;                     // surface x antennas
    std::vector<VectorXcd> h;        // direct, per user (length N)
    std::vector<VectorXcd> g;        // reflected hop, per user (length M)

    // components (unscaled; RicianScaling carries all gains)
    VectorXcd steer_fas_lim;                 // transmit array toward surface
    VectorXcd steer_lim_rx;                  // surface, arrival
    std::vector<VectorXcd> steer_fas_user;   // transmit array toward user k
    std::vector<VectorXcd> steer_lim_user;   // surface toward user k
    MatrixXcd H_los;                         // steer_lim_rx * steer_fas_lim^H
    MatrixXcd H_nlos;                        // sqrt_lim_rx * draw * sqrt_fas
    std::vector<VectorXcd> h_nlos;           // sqrt_fas * draw_k
    std::vector<VectorXcd> g_nlos;           // sqrt_lim_tx * draw_k

    std::vector<RicianScaling> scaling;
    CorrelationSet corr;
    SmallScaleDraw draw;
    bool correlation_enabled = true;
};

ChannelRealization assemble_channels(const SystemConfig& cfg, const LinkGeometry& geo,
                                     const std::vector<Vec2>& antenna_pos,
                                     const std::vector<Vec2>& element_pos,
                                     const SmallScaleDraw& draw,
                                     bool correlation_enabled = true);

/// h_k^H + g_k^H diag(theta) H, as a row vector.
RowVectorXcd effective_channel(const ChannelRealization& chan, const VectorXcd& theta, int user);

/// All users stacked, row k = effective channel of user k.
MatrixXcd effective_channel_matrix(const ChannelRealization& chan, const VectorXcd& theta);

/// diag(conj(g_k)) * H; the effective channel equals h_k^H + theta^T * this.
MatrixXcd phase_coupling_matrix(const ChannelRealization& chan, int user);

struct RateReport {
    VectorXd sinr;
    VectorXd rate;       // log2(1 + sinr), bits/s/Hz
    double sum_rate = 0.0;
};

RateReport sinr_and_rate(const MatrixXcd& eff, const MatrixXcd& w, double sigma2_w);

/// Debugging snapshot: writes the assembled channels and the frozen draw in
/// a readable text form.
void dump_channel(const ChannelRealization& chan, const std::string& path);

}  // namespace faslim
