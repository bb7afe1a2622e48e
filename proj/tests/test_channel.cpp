#include <doctest.h>

#include <cmath>
#include <complex>

#include "faslim/bessel.hpp"
#include "faslim/channel.hpp"
#include "faslim/errors.hpp"
#include "faslim/geometry.hpp"
#include <fstream>

#include "faslim/solution.hpp"

using namespace faslim;
using std::complex;

namespace {

SystemConfig desk_cfg(int n, int m, int k)
{
    SystemConfig cfg;
    cfg.n_antennas = n;
    cfg.n_elements = m;
    cfg.n_users = k;
    return cfg;
}

LinkGeometry desk_geo(const SystemConfig& cfg, RngStream& rng)
{
    std::vector<Vec2> users;
    for (int k = 0; k < cfg.n_users; ++k)
        users.push_back(rng.in_disk(cfg.user_center, cfg.user_radius));
    return derive_link_geometry(cfg, users);
}

}  // namespace

TEST_CASE("steering vector basics")
{
    const std::vector<Vec2> origin = {{0.0, 0.0}, {0.0, 0.0}};
    const VectorXcd ones = steering_vector(origin, {1.2, 0.7}, 0.1);
    CHECK(std::abs(ones[0] - 1.0) < 1e-15);
    CHECK(std::abs(ones[1] - 1.0) < 1e-15);

    // zero tilt: broadside, no phase progression
    const std::vector<Vec2> pts = {{0.3, -0.2}, {0.1, 0.4}};
    const VectorXcd flat = steering_vector(pts, {0.0, 1.1}, 0.1);
    CHECK(std::abs(flat[0] - 1.0) < 1e-15);

    // single point at (lambda/4, 0), tilt pi/2, bearing 0 -> exp(-j pi/2) = -j
    const VectorXcd quarter = steering_vector({{0.025, 0.0}}, {1.5707963267948966, 0.0}, 0.1);
    CHECK(std::abs(quarter[0] - complex<double>(0.0, -1.0)) < 1e-12);
}

TEST_CASE("steering entries are unit modulus and translation covariant")
{
    RngStream rng(7);
    std::vector<Vec2> pts;
    for (int i = 0; i < 6; ++i)
        pts.push_back({rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)});
    const SteerAngles angles{1.1, -2.4};
    const VectorXcd a = steering_vector(pts, angles, 0.1);
    for (int i = 0; i < a.size(); ++i)
        CHECK(std::abs(std::abs(a[i]) - 1.0) < 1e-14);

    const Vec2 shift{0.123, -0.456};
    std::vector<Vec2> moved;
    for (const Vec2& p : pts)
        moved.push_back(p + shift);
    const VectorXcd b = steering_vector(moved, angles, 0.1);
    const complex<double> ratio = b[0] / a[0];
    CHECK(std::abs(std::abs(ratio) - 1.0) < 1e-14);
    for (int i = 1; i < a.size(); ++i)
        CHECK(std::abs(b[i] - ratio * a[i]) < 1e-12);
}

TEST_CASE("jakes correlation structure")
{
    const MatrixXd ones2 = jakes_correlation({{0.1, 0.1}, {0.1, 0.1}}, 0.1);
    CHECK((ones2 - MatrixXd::Ones(2, 2)).norm() < 1e-15);

    // spacing at the first J0 root nulls the off-diagonal
    const double d = kBesselJ0FirstRoot * 0.1 / (2.0 * 3.14159265358979324);
    const MatrixXd r = jakes_correlation({{0.0, 0.0}, {d, 0.0}}, 0.1);
    CHECK(std::abs(r(0, 1)) < 1e-9);
    CHECK(r(0, 0) == 1.0);

    RngStream rng(3);
    std::vector<Vec2> pts;
    for (int i = 0; i < 5; ++i)
        pts.push_back({rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)});
    const MatrixXd rr = jakes_correlation(pts, 0.1);
    CHECK((rr - rr.transpose()).norm() == 0.0);
    CHECK((rr.diagonal() - VectorXd::Ones(5)).norm() == 0.0);
}

TEST_CASE("psd square root")
{
    CHECK((psd_sqrt(MatrixXd::Identity(3, 3)) - MatrixXd::Identity(3, 3)).norm() < 1e-12);

    MatrixXd rank1(2, 2);
    rank1 << 1.0, 1.0, 1.0, 1.0;
    const MatrixXd root = psd_sqrt(rank1);
    CHECK((root - MatrixXd::Constant(2, 2, 1.0 / std::sqrt(2.0))).norm() < 1e-12);

    MatrixXd indefinite(2, 2);
    indefinite << 1.0, 0.0, 0.0, -0.1;
    CHECK_THROWS_AS(psd_sqrt(indefinite), ModelError);

    RngStream rng(11);
    MatrixXd g(6, 6);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j)
            g(i, j) = rng.normal();
    const MatrixXd psd = g * g.transpose();
    const MatrixXd s = psd_sqrt(psd);
    CHECK((s * s - psd).norm() <= 1e-8 * (1.0 + psd.norm()));
    CHECK((s - s.transpose()).norm() < 1e-12);
}

TEST_CASE("small-scale draws are deterministic with unit variance")
{
    const SystemConfig cfg = desk_cfg(4, 4, 2);
    RngStream a(42), b(42);
    const SmallScaleDraw da = draw_small_scale(cfg, a);
    const SmallScaleDraw db = draw_small_scale(cfg, b);
    CHECK((da.fas_lim - db.fas_lim).norm() == 0.0);
    CHECK((da.fas_user[0] - db.fas_user[0]).norm() == 0.0);
    CHECK((da.lim_user[1] - db.lim_user[1]).norm() == 0.0);

    RngStream rng(5);
    const int count = 100000;
    double sum_re = 0.0, sum_sq = 0.0;
    for (int i = 0; i < count; ++i) {
        const complex<double> z = rng.cgauss();
        sum_re += z.real() + z.imag();
        sum_sq += std::norm(z);
    }
    CHECK(std::abs(sum_re / count) < 0.02);
    CHECK(sum_sq / count == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("rician assembly limits")
{
    SystemConfig cfg = desk_cfg(4, 4, 2);
    RngStream rng(17);
    const LinkGeometry geo = desk_geo(cfg, rng);
    const std::vector<Vec2> p = initial_grid(4, cfg.aperture_fa, cfg.dth_fa);
    const std::vector<Vec2> r = initial_grid(4, cfg.aperture_lm, cfg.dth_lm);
    RngStream fade(23);
    const SmallScaleDraw draw = draw_small_scale(cfg, fade);

    SUBCASE("LoS-only limit")
    {
        cfg.kappa = 1e9;
        const ChannelRealization chan = assemble_channels(cfg, geo, p, r, draw);
        const double scale = std::sqrt(cfg.h0_lin() / std::pow(geo.fas_lim_dist, cfg.alpha));
        const MatrixXcd los = scale * chan.H_los;
        CHECK((chan.H - los).norm() / chan.H.norm() <= 1e-4);
    }

    SUBCASE("zero LoS weight makes angles irrelevant")
    {
        cfg.kappa = 0.0;
        const ChannelRealization chan = assemble_channels(cfg, geo, p, r, draw);
        LinkGeometry other = geo;
        other.fas_to_lim.bearing += 0.8;
        other.lim_from_fas.bearing -= 0.3;
        for (auto& a : other.fas_to_user)
            a.bearing += 0.5;
        const ChannelRealization chan2 = assemble_channels(cfg, other, p, r, draw);
        CHECK((chan.H - chan2.H).norm() == 0.0);
        CHECK((chan.h[0] - chan2.h[0]).norm() == 0.0);
    }

    SUBCASE("path scale")
    {
        // h0 = -20 dB, alpha = 2.2, d = 100 -> sqrt(0.01 / 100^2.2)
        const double expect = std::sqrt(0.01 / std::pow(100.0, 2.2));
        SystemConfig c2 = cfg;
        c2.kappa = 1e12;
        c2.n_users = 1;
        const LinkGeometry g2 = derive_link_geometry(c2, {{100.0, 0.0}});
        RngStream f2(3);
        const SmallScaleDraw d2 = draw_small_scale(c2, f2);
        const ChannelRealization chan = assemble_channels(c2, g2, p, r, d2);
        // every LoS entry of the direct channel has magnitude = path scale
        for (int n = 0; n < 4; ++n)
            CHECK(std::abs(chan.h[0][n]) == doctest::Approx(expect).epsilon(1e-4));
    }
}

TEST_CASE("rician scaling constants satisfy their identities")
{
    const SystemConfig cfg = desk_cfg(4, 4, 2);
    RngStream rng(29);
    const LinkGeometry geo = desk_geo(cfg, rng);
    for (int k = 0; k < cfg.n_users; ++k) {
        const RicianScaling s = rician_scaling(cfg, geo, k);
        CHECK(s.cascade_mixed * s.cascade_mixed ==
              doctest::Approx(s.cascade_los * s.cascade_nlos).epsilon(1e-12));
        const double direct = cfg.h0_lin() / std::pow(geo.fas_user_dist[k], cfg.alpha);
        CHECK(s.direct_los * s.direct_los + s.direct_nlos * s.direct_nlos ==
              doctest::Approx(direct).epsilon(1e-12));
    }
}

TEST_CASE("scattered energy scales as 1/(kappa+1)")
{
    SystemConfig cfg = desk_cfg(4, 4, 1);
    RngStream rng(31);
    const LinkGeometry geo = desk_geo(cfg, rng);
    const std::vector<Vec2> p = initial_grid(4, cfg.aperture_fa, cfg.dth_fa);
    const std::vector<Vec2> r = initial_grid(4, cfg.aperture_lm, cfg.dth_lm);

    auto mc_nlos_energy = [&](double kappa) {
        cfg.kappa = kappa;
        RngStream fade(77);
        const double scale2 = cfg.h0_lin() / std::pow(geo.fas_lim_dist, cfg.alpha);
        const double w_los = std::sqrt(kappa / (kappa + 1.0));
        double acc = 0.0;
        const int draws = 10000;
        for (int i = 0; i < draws; ++i) {
            const SmallScaleDraw d = draw_small_scale(cfg, fade);
            const ChannelRealization chan = assemble_channels(cfg, geo, p, r, d);
            const MatrixXcd diff = chan.H - std::sqrt(scale2) * w_los * chan.H_los;
            acc += diff.squaredNorm();
        }
        return acc / draws;
    };

    const double e0 = mc_nlos_energy(0.0);
    const double e3 = mc_nlos_energy(3.0);
    // expectation: scale2 * M * N / (kappa + 1)
    const SystemConfig base = desk_cfg(4, 4, 1);
    const double scale2 = base.h0_lin() / std::pow(geo.fas_lim_dist, base.alpha);
    CHECK(e0 == doctest::Approx(scale2 * 16.0).epsilon(0.05));
    CHECK(e3 == doctest::Approx(scale2 * 16.0 / 4.0).epsilon(0.05));
    CHECK(e0 / e3 == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("effective channel forms")
{
    const SystemConfig cfg = desk_cfg(3, 4, 2);
    RngStream rng(41);
    const LinkGeometry geo = desk_geo(cfg, rng);
    const std::vector<Vec2> p = initial_grid(3, cfg.aperture_fa, cfg.dth_fa);
    const std::vector<Vec2> r = initial_grid(4, cfg.aperture_lm, cfg.dth_lm);
    RngStream fade(43);
    const SmallScaleDraw draw = draw_small_scale(cfg, fade);
    const ChannelRealization chan = assemble_channels(cfg, geo, p, r, draw);

    VectorXcd theta(4);
    for (int m = 0; m < 4; ++m)
        theta[m] = std::polar(1.0, 0.3 + 0.9 * m);

    SUBCASE("reflection off")
    {
        const RowVectorXcd eff = effective_channel(chan, VectorXcd::Zero(4), 0);
        CHECK((eff - chan.h[0].adjoint()).norm() < 1e-15);
    }

    SUBCASE("coupling-matrix form agrees with the diagonal form")
    {
        for (int k = 0; k < 2; ++k) {
            const RowVectorXcd direct = effective_channel(chan, theta, k);
            const RowVectorXcd via_coupling =
                chan.h[static_cast<size_t>(k)].adjoint() +
                theta.transpose() * phase_coupling_matrix(chan, k);
            CHECK((direct - via_coupling).norm() <= 1e-12 * direct.norm() + 1e-15);
        }
    }

    SUBCASE("all-scalar expansion")
    {
        const SystemConfig c1 = desk_cfg(1, 1, 1);
        RngStream r1(47);
        const LinkGeometry g1 = desk_geo(c1, r1);
        RngStream f1(53);
        const SmallScaleDraw d1 = draw_small_scale(c1, f1);
        const ChannelRealization ch1 = assemble_channels(c1, g1, {{0.1, 0.0}}, {{0.0, 0.2}}, d1);
        VectorXcd th(1);
        th[0] = std::polar(1.0, 1.234);
        const complex<double> expect =
            std::conj(ch1.h[0][0]) + th[0] * std::conj(ch1.g[0][0]) * ch1.H(0, 0);
        const RowVectorXcd eff = effective_channel(ch1, th, 0);
        CHECK(std::abs(eff[0] - expect) < 1e-15);
    }

    SUBCASE("dimension mismatch")
    {
        CHECK_THROWS_AS(effective_channel(chan, VectorXcd::Ones(3), 0), ModelError);
    }
}

TEST_CASE("sinr and rate against an independent scalar recomputation")
{
    const SystemConfig cfg = desk_cfg(4, 4, 2);
    RngStream rng(59);
    const LinkGeometry geo = desk_geo(cfg, rng);
    const std::vector<Vec2> p = initial_grid(4, cfg.aperture_fa, cfg.dth_fa);
    const std::vector<Vec2> r = initial_grid(4, cfg.aperture_lm, cfg.dth_lm);
    RngStream fade(61);
    const SmallScaleDraw draw = draw_small_scale(cfg, fade);
    const ChannelRealization chan = assemble_channels(cfg, geo, p, r, draw);

    VectorXcd theta = VectorXcd::Ones(4);
    MatrixXcd w(4, 2);
    RngStream wr(67);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 2; ++j)
            w(i, j) = wr.cgauss();
    const double sigma2 = cfg.sigma2_w();
    const MatrixXcd eff = effective_channel_matrix(chan, theta);
    const RateReport rep = sinr_and_rate(eff, w, sigma2);

    double expect_sum = 0.0;
    for (int k = 0; k < 2; ++k) {
        complex<double> sig{};
        for (int n = 0; n < 4; ++n)
            sig += eff(k, n) * w(n, k);
        double interference = 0.0;
        for (int j = 0; j < 2; ++j) {
            if (j == k)
                continue;
            complex<double> cross{};
            for (int n = 0; n < 4; ++n)
                cross += eff(k, n) * w(n, j);
            interference += std::norm(cross);
        }
        const double gamma = std::norm(sig) / (interference + sigma2);
        CHECK(rep.sinr[k] == doctest::Approx(gamma).epsilon(1e-12));
        expect_sum += std::log2(1.0 + gamma);
    }
    CHECK(rep.sum_rate == doctest::Approx(expect_sum).epsilon(1e-12));

    SUBCASE("no interference when other beams are off")
    {
        MatrixXcd w2 = MatrixXcd::Zero(4, 2);
        w2.col(0) = w.col(0);
        const RateReport solo = sinr_and_rate(eff, w2, sigma2);
        complex<double> sig{};
        for (int n = 0; n < 4; ++n)
            sig += eff(0, n) * w2(n, 0);
        CHECK(solo.sinr[0] == doctest::Approx(std::norm(sig) / sigma2).epsilon(1e-12));
        CHECK(solo.rate[1] == 0.0);
    }

    SUBCASE("all beams off")
    {
        CHECK(sinr_and_rate(eff, MatrixXcd::Zero(4, 2), sigma2).sum_rate == 0.0);
    }
}

TEST_CASE("assembly is a pure function of its inputs")
{
    const SystemConfig cfg = desk_cfg(4, 4, 2);
    RngStream rng(71);
    const LinkGeometry geo = desk_geo(cfg, rng);
    const std::vector<Vec2> p = initial_grid(4, cfg.aperture_fa, cfg.dth_fa);
    const std::vector<Vec2> r = initial_grid(4, cfg.aperture_lm, cfg.dth_lm);
    RngStream fade(73);
    const SmallScaleDraw draw = draw_small_scale(cfg, fade);
    const ChannelRealization a = assemble_channels(cfg, geo, p, r, draw);
    const ChannelRealization b = assemble_channels(cfg, geo, p, r, draw);
    CHECK((a.H - b.H).norm() == 0.0);
    CHECK((a.h[0] - b.h[0]).norm() == 0.0);
    CHECK((a.g[1] - b.g[1]).norm() == 0.0);
    CHECK((a.corr.sqrt_fas - b.corr.sqrt_fas).norm() == 0.0);
}

TEST_CASE("identity correlation when disabled")
{
    const SystemConfig cfg = desk_cfg(4, 4, 1);
    RngStream rng(79);
    const LinkGeometry geo = desk_geo(cfg, rng);
    const std::vector<Vec2> p = initial_grid(4, cfg.aperture_fa, cfg.dth_fa);
    const std::vector<Vec2> r = initial_grid(4, cfg.aperture_lm, cfg.dth_lm);
    RngStream fade(83);
    const SmallScaleDraw draw = draw_small_scale(cfg, fade);
    const ChannelRealization chan = assemble_channels(cfg, geo, p, r, draw, false);
    CHECK((chan.corr.fas - MatrixXd::Identity(4, 4)).norm() == 0.0);
    CHECK((chan.H_nlos - draw.fas_lim).norm() < 1e-12);
}

TEST_CASE("deterministic initial solution")
{
    const SystemConfig cfg = desk_cfg(4, 16, 2);
    RngStream rng(91);
    const LinkGeometry geo = desk_geo(cfg, rng);
    RngStream fade(93);
    const SmallScaleDraw draw = draw_small_scale(cfg, fade);
    const std::vector<Vec2> p = initial_grid(cfg.n_antennas, cfg.aperture_fa, cfg.dth_fa);
    const std::vector<Vec2> r = initial_grid(cfg.n_elements, cfg.aperture_lm, cfg.dth_lm);
    const ChannelRealization chan = assemble_channels(cfg, geo, p, r, draw);
    const SolutionState sol = init_solution(cfg, geo, chan);

    // 4 antennas in a square meter: 2x2 grid, squared spacing comfortably
    // above the 0.1 threshold
    REQUIRE(sol.p.size() == 4);
    double min_sq = 1e300;
    for (size_t a = 0; a < sol.p.size(); ++a)
        for (size_t b = a + 1; b < sol.p.size(); ++b) {
            const Vec2 d = sol.p[a] - sol.p[b];
            min_sq = std::min(min_sq, dot(d, d));
        }
    CHECK(min_sq >= 0.25 * (1.0 - 1e-5));
    CHECK(min_sq >= cfg.dth_fa);

    // full power at start, split across users
    CHECK(sol.w.squaredNorm() == doctest::Approx(cfg.pmax_w()).epsilon(1e-12));

    // unit phases
    for (Eigen::Index m = 0; m < sol.theta.size(); ++m)
        CHECK(sol.theta[m] == std::complex<double>(1.0, 0.0));

    const FeasibilityReport rep = check_feasibility(cfg, sol);
    CHECK(rep.power_excess <= 1e-12);
    CHECK(rep.spacing_deficit <= 0.0);
    CHECK(rep.aperture_excess <= 0.0);
    CHECK(rep.modulus_deviation == 0.0);

    // matched filter direction: w_k parallel to the conjugated channel
    const RowVectorXcd eff = effective_channel(chan, sol.theta, 0);
    const std::complex<double> inner = (eff * sol.w.col(0)).value();
    CHECK(std::abs(inner) ==
          doctest::Approx(eff.norm() * sol.w.col(0).norm()).epsilon(1e-12));
}

TEST_CASE("channel snapshot lands on disk")
{
    const SystemConfig cfg = desk_cfg(2, 2, 1);
    RngStream rng(97);
    const LinkGeometry geo = desk_geo(cfg, rng);
    RngStream fade(101);
    const SmallScaleDraw draw = draw_small_scale(cfg, fade);
    const std::vector<Vec2> p = initial_grid(2, cfg.aperture_fa, cfg.dth_fa);
    const std::vector<Vec2> r = initial_grid(2, cfg.aperture_lm, cfg.dth_lm);
    const ChannelRealization chan = assemble_channels(cfg, geo, p, r, draw);
    dump_channel(chan, "/tmp/faslim_chan_dump.txt");
    std::ifstream in("/tmp/faslim_chan_dump.txt");
    std::string first;
    std::getline(in, first);
    CHECK(first == "H 2x2");
}
