#include "faslim/gradients.hpp"

#include <array>
#include <cmath>
#include <string>

#include "faslim/bessel.hpp"
#include "faslim/errors.hpp"

namespace faslim {

namespace {
constexpr double kTwoPi = 6.28318530717958647693;
constexpr double kSylvesterTolerance = 1e-8;
constexpr std::complex<double> kImag{0.0, 1.0};

double direction_component(SteerAngles angles, int axis)
{
    const double st = std::sin(angles.tilt);
    return axis == 0 ? st * std::cos(angles.bearing) : st * std::sin(angles.bearing);
}
}  // namespace

std::pair<std::complex<double>, std::complex<double>>
grad_steering(const std::vector<Vec2>& positions, SteerAngles angles, double lambda_m,
              int index)
{
    const VectorXcd a = steering_vector(positions, angles, lambda_m);
    const double wavenumber = kTwoPi / lambda_m;
    const std::complex<double> base = -kImag * wavenumber * a[index];
    return {base * direction_component(angles, 0), base * direction_component(angles, 1)};
}

std::pair<MatrixXd, MatrixXd> grad_correlation(const std::vector<Vec2>& positions,
                                               double lambda_m, int n_index)
{
    const auto n = static_cast<Eigen::Index>(positions.size());
    MatrixXd dx = MatrixXd::Zero(n, n);
    MatrixXd dy = MatrixXd::Zero(n, n);
    const double wavenumber = kTwoPi / lambda_m;
    const Vec2 pn = positions[static_cast<size_t>(n_index)];
    for (Eigen::Index j = 0; j < n; ++j) {
        if (j == n_index)
            continue;
        const Vec2 diff = pn - positions[static_cast<size_t>(j)];
        const double d = norm(diff);
        if (d <= 0.0)
            throw ModelError("coincident points " + std::to_string(n_index) + " and " +
                             std::to_string(j) + ": correlation gradient direction undefined");
        const double mag = -wavenumber * bessel_j1(wavenumber * d) / d;
        dx(n_index, j) = mag * diff.x;
        dx(j, n_index) = mag * diff.x;
        dy(n_index, j) = mag * diff.y;
        dy(j, n_index) = mag * diff.y;
    }
    return {dx, dy};
}

SylvesterSolve sylvester_sqrt_grad(const VectorXd& evals_r, const MatrixXd& evecs_r,
                                   const MatrixXd& dr)
{
    const Eigen::Index n = evals_r.size();
    const VectorXd s = evals_r.cwiseMax(0.0).cwiseSqrt();
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i; j < n; ++j)
            if (s[i] + s[j] < kSylvesterTolerance)
                throw ModelError("square-root derivative nearly singular: eigenvalue pair sum " +
                                 std::to_string(s[i] + s[j]));
    const MatrixXd dr_t = evecs_r.transpose() * dr * evecs_r;
    MatrixXd x_t(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            x_t(i, j) = dr_t(i, j) / (s[i] + s[j]);
    SylvesterSolve out;
    out.X = evecs_r * x_t * evecs_r.transpose();
    const MatrixXd sqrt_r = evecs_r * s.asDiagonal() * evecs_r.transpose();
    out.residual = (sqrt_r * out.X + out.X * sqrt_r - dr).norm();
    return out;
}

SylvesterSolve sylvester_sqrt_grad(const MatrixXd& sqrt_r, const MatrixXd& dr)
{
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(sqrt_r);
    if (eig.info() != Eigen::Success)
        throw ModelError("eigendecomposition failed on square-root matrix");
    // eigenvalues of sqrt_r are the square roots of R's eigenvalues
    const VectorXd s = eig.eigenvalues().cwiseMax(0.0);
    return sylvester_sqrt_grad(s.cwiseProduct(s), eig.eigenvectors(), dr);
}

PositionGradientEngine::PositionGradientEngine(const SystemConfig& cfg, const LinkGeometry& geo,
                                               const ChannelRealization& chan,
                                               const SolutionState& sol)
    : cfg_(&cfg), geo_(&geo), chan_(&chan), sol_(&sol)
{
    const int n_ant = cfg.n_antennas;
    const int n_el = cfg.n_elements;

    sqrt_grad_fas_.resize(static_cast<size_t>(n_ant));
    sqrt_grad_lim_.resize(static_cast<size_t>(n_el));
    if (chan.correlation_enabled) {
        for (int n = 0; n < n_ant; ++n) {
            auto [dx, dy] = grad_correlation(sol.p, cfg.lambda_m, n);
            sqrt_grad_fas_[static_cast<size_t>(n)][0] =
                sylvester_sqrt_grad(chan.corr.eval_fas, chan.corr.evec_fas, dx).X;
            sqrt_grad_fas_[static_cast<size_t>(n)][1] =
                sylvester_sqrt_grad(chan.corr.eval_fas, chan.corr.evec_fas, dy).X;
        }
        for (int m = 0; m < n_el; ++m) {
            auto [dx, dy] = grad_correlation(sol.r, cfg.lambda_m, m);
            sqrt_grad_lim_[static_cast<size_t>(m)][0] =
                sylvester_sqrt_grad(chan.corr.eval_lim_tx, chan.corr.evec_lim_tx, dx).X;
            sqrt_grad_lim_[static_cast<size_t>(m)][1] =
                sylvester_sqrt_grad(chan.corr.eval_lim_tx, chan.corr.evec_lim_tx, dy).X;
        }
    } else {
        // identity correlation does not move with the points
        const MatrixXd zn = MatrixXd::Zero(n_ant, n_ant);
        const MatrixXd zm = MatrixXd::Zero(n_el, n_el);
        for (int n = 0; n < n_ant; ++n)
            sqrt_grad_fas_[static_cast<size_t>(n)] = {zn, zn};
        for (int m = 0; m < n_el; ++m)
            sqrt_grad_lim_[static_cast<size_t>(m)] = {zm, zm};
    }

    const auto theta_diag = sol.theta.asDiagonal();
    theta_h_los_ = theta_diag * chan.H_los;
    theta_h_nlos_ = theta_diag * chan.H_nlos;
    sqrtlr_draw_ = chan.corr.sqrt_lim_rx * chan.draw.fas_lim;
    draw_sqrtfas_ = chan.draw.fas_lim * chan.corr.sqrt_fas;

    const auto k_count = static_cast<size_t>(cfg.n_users);
    glos_theta_.resize(k_count);
    gnlos_theta_.resize(k_count);
    for (size_t k = 0; k < k_count; ++k) {
        glos_theta_[k] = chan.steer_lim_user[k].adjoint() * theta_diag;
        gnlos_theta_[k] = chan.g_nlos[k].adjoint() * theta_diag;
    }
}

RowVectorXcd PositionGradientEngine::grad_eff_channel(int user, CoordRef coord) const
{
    const auto ku = static_cast<size_t>(user);
    const RicianScaling& c = chan_->scaling[ku];
    const double wavenumber = kTwoPi / cfg_->lambda_m;
    const Eigen::Index n_ant = chan_->H.cols();
    RowVectorXcd grad = RowVectorXcd::Zero(n_ant);

    if (coord.kind == CoordRef::antenna) {
        const int n = coord.index;
        const MatrixXd& x = sqrt_grad_fas_[static_cast<size_t>(n)][static_cast<size_t>(coord.axis)];

        // direct LoS: only entry n of a_FA(user) moves
        const double u_user = direction_component(geo_->fas_to_user[ku], coord.axis);
        grad[n] += c.direct_los * kImag * wavenumber * u_user *
                   std::conj(chan_->steer_fas_user[ku][n]);

        // cascade terms with d H_los: scalar (g^H Theta a_rx) times the
        // conjugated steering derivative row
        const double u_lim = direction_component(geo_->fas_to_lim, coord.axis);
        const std::complex<double> dsteer_conj =
            kImag * wavenumber * u_lim * std::conj(chan_->steer_fas_lim[n]);
        const std::complex<double> s_los = (glos_theta_[ku] * chan_->steer_lim_rx).value();
        const std::complex<double> s_nlos = (gnlos_theta_[ku] * chan_->steer_lim_rx).value();
        grad[n] += (c.cascade_los * s_los + c.cascade_mixed * s_nlos) * dsteer_conj;

        // NLoS pieces through the square-root derivative
        grad += c.direct_nlos * (chan_->draw.fas_user[ku].adjoint() * x);
        const RowVectorXcd row_nlos = gnlos_theta_[ku] * sqrtlr_draw_;
        const RowVectorXcd row_los = glos_theta_[ku] * sqrtlr_draw_;
        grad += (c.cascade_nlos * row_nlos + c.cascade_mixed * row_los) * x;
        return grad;
    }

    const int m = coord.index;
    const MatrixXd& x = sqrt_grad_lim_[static_cast<size_t>(m)][static_cast<size_t>(coord.axis)];

    // element steering derivatives (entry m only)
    const double u_tx = direction_component(geo_->lim_to_user[ku], coord.axis);
    const double u_rx = direction_component(geo_->lim_from_fas, coord.axis);
    const std::complex<double> dtx_conj =
        kImag * wavenumber * u_tx * std::conj(chan_->steer_lim_user[ku][m]);
    const std::complex<double> drx = -kImag * wavenumber * u_rx * chan_->steer_lim_rx[m];

    // (d g_los)^H Theta B picks row m of Theta*B
    grad += c.cascade_los * dtx_conj * theta_h_los_.row(m);
    grad += c.cascade_mixed * dtx_conj * theta_h_nlos_.row(m);

    // g^H Theta (d H_los) with d H_los = (d a_rx) a_fas_lim^H (row m only)
    const std::complex<double> glos_m = glos_theta_[ku][m] * drx;
    const std::complex<double> gnlos_m = gnlos_theta_[ku][m] * drx;
    grad += (c.cascade_los * glos_m + c.cascade_mixed * gnlos_m) *
            chan_->steer_fas_lim.adjoint();

    // (d g_nlos)^H Theta B with d g_nlos = X g_draw
    const RowVectorXcd dgn = chan_->draw.lim_user[ku].adjoint() * x;
    grad += c.cascade_nlos * dgn * theta_h_nlos_;
    grad += c.cascade_mixed * dgn * theta_h_los_;

    // g^H Theta (d H_nlos) with d H_nlos = X draw sqrt_fas
    const RowVectorXcd xdsf_nlos = (gnlos_theta_[ku] * x) * draw_sqrtfas_;
    const RowVectorXcd xdsf_los = (glos_theta_[ku] * x) * draw_sqrtfas_;
    grad += c.cascade_nlos * xdsf_nlos + c.cascade_mixed * xdsf_los;
    return grad;
}

PositionGradient PositionGradientEngine::grad_g(int user, int j) const
{
    const RowVectorXcd eff = effective_channel(*chan_, sol_->theta, user);
    const std::complex<double> s_kj = (eff * sol_->w.col(j)).value();

    PositionGradient out;
    out.d_p.resize(sol_->p.size());
    out.d_r.resize(sol_->r.size());
    for (size_t n = 0; n < sol_->p.size(); ++n) {
        for (int axis = 0; axis < 2; ++axis) {
            const RowVectorXcd dh =
                grad_eff_channel(user, CoordRef{CoordRef::antenna, static_cast<int>(n), axis});
            const std::complex<double> dhw = (dh * sol_->w.col(j)).value();
            const double val = 2.0 * std::real(std::conj(dhw) * s_kj);
            (axis == 0 ? out.d_p[n].x : out.d_p[n].y) = val;
        }
    }
    for (size_t m = 0; m < sol_->r.size(); ++m) {
        for (int axis = 0; axis < 2; ++axis) {
            const RowVectorXcd dh =
                grad_eff_channel(user, CoordRef{CoordRef::element, static_cast<int>(m), axis});
            const std::complex<double> dhw = (dh * sol_->w.col(j)).value();
            const double val = 2.0 * std::real(std::conj(dhw) * s_kj);
            (axis == 0 ? out.d_r[m].x : out.d_r[m].y) = val;
        }
    }
    return out;
}

RowVectorXcd grad_effective_channel(const SystemConfig& cfg, const LinkGeometry& geo,
                                    const ChannelRealization& chan, const SolutionState& sol,
                                    int user, CoordRef coord)
{
    return PositionGradientEngine(cfg, geo, chan, sol).grad_eff_channel(user, coord);
}

PositionGradient grad_g_kj(const SystemConfig& cfg, const LinkGeometry& geo,
                           const ChannelRealization& chan, const SolutionState& sol,
                           int user, int j)
{
    return PositionGradientEngine(cfg, geo, chan, sol).grad_g(user, j);
}

PositionGradient finite_difference_gradient(
    const std::function<double(const std::vector<Vec2>&, const std::vector<Vec2>&)>& f,
    std::vector<Vec2> p, std::vector<Vec2> r, double step)
{
    if (step <= 0.0)
        throw ModelError("finite-difference step must be positive");
    PositionGradient out;
    out.d_p.resize(p.size());
    out.d_r.resize(r.size());
    auto central = [&](double& coord) {
        const double saved = coord;
        coord = saved + step;
        const double fp = f(p, r);
        coord = saved - step;
        const double fm = f(p, r);
        coord = saved;
        return (fp - fm) / (2.0 * step);
    };
    for (size_t n = 0; n < p.size(); ++n) {
        out.d_p[n].x = central(p[n].x);
        out.d_p[n].y = central(p[n].y);
    }
    for (size_t m = 0; m < r.size(); ++m) {
        out.d_r[m].x = central(r[m].x);
        out.d_r[m].y = central(r[m].y);
    }
    return out;
}

double g_kj_value(const SystemConfig& cfg, const LinkGeometry& geo, const SmallScaleDraw& draw,
                  const VectorXcd& theta, const MatrixXcd& w, const std::vector<Vec2>& p,
                  const std::vector<Vec2>& r, int user, int j, bool correlation_enabled)
{
    const ChannelRealization chan = assemble_channels(cfg, geo, p, r, draw, correlation_enabled);
    const RowVectorXcd eff = effective_channel(chan, theta, user);
    return std::norm((eff * w.col(j)).value());
}

}  // namespace faslim
