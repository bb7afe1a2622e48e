#include "faslim/channel.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include "faslim/bessel.hpp"
#include "faslim/errors.hpp"

namespace faslim {

namespace {
constexpr double kTwoPi = 6.28318530717958647693;
constexpr double kPsdTolerance = 1e-10;
}  // namespace

VectorXcd steering_vector(const std::vector<Vec2>& positions, SteerAngles angles,
                          double lambda_m)
{
    const double st = std::sin(angles.tilt);
    const double ux = st * std::cos(angles.bearing);
    const double uy = st * std::sin(angles.bearing);
    const double wavenumber = kTwoPi / lambda_m;
    VectorXcd a(positions.size());
    for (size_t n = 0; n < positions.size(); ++n) {
        const double phase = -wavenumber * (positions[n].x * ux + positions[n].y * uy);
        a[static_cast<Eigen::Index>(n)] = std::polar(1.0, phase);
    }
    return a;
}

MatrixXd jakes_correlation(const std::vector<Vec2>& positions, double lambda_m)
{
    const auto n = static_cast<Eigen::Index>(positions.size());
    MatrixXd r = MatrixXd::Identity(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double d = norm(positions[static_cast<size_t>(i)] - positions[static_cast<size_t>(j)]);
            const double v = bessel_j0(kTwoPi * d / lambda_m);
            r(i, j) = v;
            r(j, i) = v;
        }
    }
    return r;
}

MatrixXd psd_sqrt(const MatrixXd& r, VectorXd* evals, MatrixXd* evecs)
{
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(r);
    if (eig.info() != Eigen::Success)
        throw ModelError("eigendecomposition failed on correlation matrix");
    VectorXd lam = eig.eigenvalues();
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
        if (lam[i] < -kPsdTolerance)
            throw ModelError("correlation matrix not PSD: eigenvalue " + std::to_string(lam[i]));
        lam[i] = std::max(lam[i], 0.0);
    }
    const MatrixXd& u = eig.eigenvectors();
    MatrixXd root = u * lam.cwiseSqrt().asDiagonal() * u.transpose();
    // force exact symmetry against rounding
    root = 0.5 * (root + root.transpose()).eval();
    if (evals)
        *evals = lam;
    if (evecs)
        *evecs = u;
    return root;
}

MatrixXd psd_sqrt(const MatrixXd& r) { return psd_sqrt(r, nullptr, nullptr); }

CorrelationSet build_correlations(const std::vector<Vec2>& p, const std::vector<Vec2>& r,
                                  double lambda_m, bool enabled)
{
    CorrelationSet c;
    if (enabled) {
        c.fas = jakes_correlation(p, lambda_m);
        c.lim_tx = jakes_correlation(r, lambda_m);
        c.lim_rx = c.lim_tx;
    } else {
        c.fas = MatrixXd::Identity(static_cast<Eigen::Index>(p.size()),
                                   static_cast<Eigen::Index>(p.size()));
        c.lim_tx = MatrixXd::Identity(static_cast<Eigen::Index>(r.size()),
                                      static_cast<Eigen::Index>(r.size()));
        c.lim_rx = c.lim_tx;
    }
    c.sqrt_fas = psd_sqrt(c.fas, &c.eval_fas, &c.evec_fas);
    c.sqrt_lim_tx = psd_sqrt(c.lim_tx, &c.eval_lim_tx, &c.evec_lim_tx);
    c.sqrt_lim_rx = psd_sqrt(c.lim_rx, &c.eval_lim_rx, &c.evec_lim_rx);
    return c;
}

SmallScaleDraw draw_small_scale(const SystemConfig& cfg, RngStream& rng)
{
    SmallScaleDraw d;
    d.fas_lim.resize(cfg.n_elements, cfg.n_antennas);
    for (int m = 0; m < cfg.n_elements; ++m)
        for (int n = 0; n < cfg.n_antennas; ++n)
            d.fas_lim(m, n) = rng.cgauss();
    d.fas_user.resize(static_cast<size_t>(cfg.n_users));
    for (auto& v : d.fas_user) {
        v.resize(cfg.n_antennas);
        for (int n = 0; n < cfg.n_antennas; ++n)
            v[n] = rng.cgauss();
    }
    d.lim_user.resize(static_cast<size_t>(cfg.n_users));
    for (auto& v : d.lim_user) {
        v.resize(cfg.n_elements);
        for (int m = 0; m < cfg.n_elements; ++m)
            v[m] = rng.cgauss();
    }
    return d;
}

RicianScaling rician_scaling(const SystemConfig& cfg, const LinkGeometry& geo, int user)
{
    const double h0 = cfg.h0_lin();
    const double kap = cfg.kappa;
    const double dk = geo.fas_user_dist[static_cast<size_t>(user)];
    const double d2k = geo.lim_user_dist[static_cast<size_t>(user)];
    const double d1 = geo.fas_lim_dist;
    const double direct = h0 / std::pow(dk, cfg.alpha);
    const double cascade = h0 * h0 / std::pow(d1 * d2k, cfg.alpha);
    RicianScaling s;
    s.direct_los = std::sqrt(direct * kap / (kap + 1.0));
    s.direct_nlos = std::sqrt(direct / (kap + 1.0));
    s.cascade_los = std::sqrt(cascade) * kap / (kap + 1.0);
    s.cascade_nlos = std::sqrt(cascade) / (kap + 1.0);
    s.cascade_mixed = std::sqrt(cascade * kap) / (kap + 1.0);
    return s;
}

ChannelRealization assemble_channels(const SystemConfig& cfg, const LinkGeometry& geo,
                                     const std::vector<Vec2>& antenna_pos,
                                     const std::vector<Vec2>& element_pos,
                                     const SmallScaleDraw& draw,
                                     bool correlation_enabled)
{
    ChannelRealization ch;
    ch.draw = draw;
    ch.correlation_enabled = correlation_enabled;
    ch.corr = build_correlations(antenna_pos, element_pos, cfg.lambda_m, correlation_enabled);

    ch.steer_fas_lim = steering_vector(antenna_pos, geo.fas_to_lim, cfg.lambda_m);
    ch.steer_lim_rx = steering_vector(element_pos, geo.lim_from_fas, cfg.lambda_m);
    ch.H_los = ch.steer_lim_rx * ch.steer_fas_lim.adjoint();
    ch.H_nlos = ch.corr.sqrt_lim_rx * draw.fas_lim * ch.corr.sqrt_fas;

    const double kap = cfg.kappa;
    const double w_los = std::sqrt(kap / (kap + 1.0));
    const double w_nlos = std::sqrt(1.0 / (kap + 1.0));
    const double h0 = cfg.h0_lin();
    const double scale_h = std::sqrt(h0 / std::pow(geo.fas_lim_dist, cfg.alpha));
    ch.H = scale_h * (w_los * ch.H_los + w_nlos * ch.H_nlos);

    ch.h.resize(static_cast<size_t>(cfg.n_users));
    ch.g.resize(static_cast<size_t>(cfg.n_users));
    ch.steer_fas_user.resize(static_cast<size_t>(cfg.n_users));
    ch.steer_lim_user.resize(static_cast<size_t>(cfg.n_users));
    ch.h_nlos.resize(static_cast<size_t>(cfg.n_users));
    ch.g_nlos.resize(static_cast<size_t>(cfg.n_users));
    ch.scaling.resize(static_cast<size_t>(cfg.n_users));
    for (int k = 0; k < cfg.n_users; ++k) {
        const auto ku = static_cast<size_t>(k);
        ch.steer_fas_user[ku] = steering_vector(antenna_pos, geo.fas_to_user[ku], cfg.lambda_m);
        ch.steer_lim_user[ku] = steering_vector(element_pos, geo.lim_to_user[ku], cfg.lambda_m);
        ch.h_nlos[ku] = ch.corr.sqrt_fas * draw.fas_user[ku];
        ch.g_nlos[ku] = ch.corr.sqrt_lim_tx * draw.lim_user[ku];
        const double scale_hk = std::sqrt(h0 / std::pow(geo.fas_user_dist[ku], cfg.alpha));
        const double scale_gk = std::sqrt(h0 / std::pow(geo.lim_user_dist[ku], cfg.alpha));
        ch.h[ku] = scale_hk * (w_los * ch.steer_fas_user[ku] + w_nlos * ch.h_nlos[ku]);
        ch.g[ku] = scale_gk * (w_los * ch.steer_lim_user[ku] + w_nlos * ch.g_nlos[ku]);
        ch.scaling[ku] = rician_scaling(cfg, geo, k);
    }
    return ch;
}

RowVectorXcd effective_channel(const ChannelRealization& chan, const VectorXcd& theta, int user)
{
    const auto ku = static_cast<size_t>(user);
    if (theta.size() != chan.H.rows())
        throw ModelError("phase vector length does not match element count");
    return chan.h[ku].adjoint() + chan.g[ku].adjoint() * theta.asDiagonal() * chan.H;
}

MatrixXcd effective_channel_matrix(const ChannelRealization& chan, const VectorXcd& theta)
{
    const auto k_count = static_cast<Eigen::Index>(chan.h.size());
    MatrixXcd eff(k_count, chan.H.cols());
    for (Eigen::Index k = 0; k < k_count; ++k)
        eff.row(k) = effective_channel(chan, theta, static_cast<int>(k));
    return eff;
}

MatrixXcd phase_coupling_matrix(const ChannelRealization& chan, int user)
{
    const auto ku = static_cast<size_t>(user);
    return chan.g[ku].conjugate().asDiagonal() * chan.H;
}

void dump_channel(const ChannelRealization& chan, const std::string& path)
{
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write channel dump: " + path);
    out.precision(17);
    auto matrix = [&out](const char* name, const MatrixXcd& m) {
        out << name << " " << m.rows() << "x" << m.cols() << "\n";
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            for (Eigen::Index j = 0; j < m.cols(); ++j)
                out << m(i, j).real() << (m(i, j).imag() < 0 ? "" : "+") << m(i, j).imag()
                    << "j ";
            out << "\n";
        }
    };
    matrix("H", chan.H);
    for (size_t k = 0; k < chan.h.size(); ++k) {
        matrix(("h_" + std::to_string(k)).c_str(), chan.h[k].transpose());
        matrix(("g_" + std::to_string(k)).c_str(), chan.g[k].transpose());
    }
    matrix("draw_fas_lim", chan.draw.fas_lim);
    out << "correlation_enabled " << (chan.correlation_enabled ? 1 : 0) << "\n";
}

RateReport sinr_and_rate(const MatrixXcd& eff, const MatrixXcd& w, double sigma2_w)
{
    if (sigma2_w <= 0.0)
        throw ModelError("noise power must be positive");
    const Eigen::Index k_count = eff.rows();
    RateReport rep;
    rep.sinr.resize(k_count);
    rep.rate.resize(k_count);
    const MatrixXcd prod = eff * w;  // (k, j) = h_k^eff w_j
    for (Eigen::Index k = 0; k < k_count; ++k) {
        double interference = 0.0;
        for (Eigen::Index j = 0; j < w.cols(); ++j)
            if (j != k)
                interference += std::norm(prod(k, j));
        const double signal = std::norm(prod(k, k));
        rep.sinr[k] = signal / (interference + sigma2_w);
        rep.rate[k] = std::log2(1.0 + rep.sinr[k]);
        rep.sum_rate += rep.rate[k];
    }
    return rep;
}

}  // namespace faslim
