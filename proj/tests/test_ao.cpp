#include <doctest.h>

#include <cmath>
#include <complex>

#include "faslim/ao.hpp"
#include "faslim/geometry.hpp"
#include "faslim/rng.hpp"

using namespace faslim;
using std::complex;

namespace {

SystemConfig small_cfg(int n, int m, int k)
{
    SystemConfig cfg;
    cfg.n_antennas = n;
    cfg.n_elements = m;
    cfg.n_users = k;
    cfg.i_outer = 8;
    return cfg;
}

struct Drop {
    SystemConfig cfg;
    LinkGeometry geo;
    ChannelRealization chan;
    SolutionState sol;
};

Drop make_drop(const SystemConfig& cfg, std::uint64_t seed)
{
    Drop d{cfg, {}, {}, {}};
    RngStream rng(seed);
    std::vector<Vec2> users;
    for (int k = 0; k < cfg.n_users; ++k)
        users.push_back(rng.in_disk(cfg.user_center, cfg.user_radius));
    d.geo = derive_link_geometry(cfg, users);
    const SmallScaleDraw draw = draw_small_scale(cfg, rng);
    const auto p0 = initial_grid(cfg.n_antennas, cfg.aperture_fa, cfg.dth_fa);
    const auto r0 = initial_grid(cfg.n_elements, cfg.aperture_lm, cfg.dth_lm);
    d.chan = assemble_channels(cfg, d.geo, p0, r0, draw);
    d.sol = init_solution(cfg, d.geo, d.chan);
    return d;
}

double rate_of(const SystemConfig& cfg, const ChannelRealization& chan,
               const SolutionState& sol)
{
    return sinr_and_rate(effective_channel_matrix(chan, sol.theta), sol.w, cfg.sigma2_w())
        .sum_rate;
}

}  // namespace

TEST_CASE("bilinear surrogate row")
{
    SUBCASE("coefficients and anchor")
    {
        const AffineConstraint c = build_bilinear_sca_constraint(2.5, 4.0, 0, 1, 2, 3);
        CHECK(c.a[0] == -1.0);
        CHECK(c.a[1] == 2.5);
        CHECK(c.a[2] == 4.0);
        CHECK(c.b == 10.0);
        // at the anchor (a = gamma_t b_t, b = b_t, gamma = gamma_t) the row
        // holds with equality
        Eigen::Vector3d anchor(10.0, 4.0, 2.5);
        CHECK(c.a.dot(anchor) == doctest::Approx(c.b));
    }
    SUBCASE("zero-rate anchor reduces to a >= b_t gamma")
    {
        const AffineConstraint c = build_bilinear_sca_constraint(0.0, 4.0, 0, 1, 2, 3);
        CHECK(c.a[0] == -1.0);
        CHECK(c.a[1] == 0.0);
        CHECK(c.a[2] == 4.0);
        CHECK(c.b == 0.0);
    }
    SUBCASE("under-estimates the product along the anchor rays")
    {
        const double gamma_t = 1.7, b_t = 3.1;
        const AffineConstraint c = build_bilinear_sca_constraint(gamma_t, b_t, 0, 1, 2, 3);
        RngStream rng(5);
        for (int i = 0; i < 1000; ++i) {
            // both offsets share a sign: surrogate <= true product there
            const double sign = rng.uniform01() < 0.5 ? -1.0 : 1.0;
            const double gamma = gamma_t + sign * rng.uniform(0.0, 0.5 * gamma_t);
            const double b = b_t + sign * rng.uniform(0.0, 0.5 * b_t);
            const double surrogate = b_t * gamma + gamma_t * b - gamma_t * b_t;
            CHECK(surrogate <= gamma * b + 1e-12);
        }
    }
}

TEST_CASE("beamforming subproblem")
{
    SUBCASE("single user reaches the matched-filter capacity")
    {
        const SystemConfig cfg = small_cfg(4, 4, 1);
        Drop d = make_drop(cfg, 3);
        const RowVectorXcd eff = effective_channel(d.chan, d.sol.theta, 0);
        const double capacity =
            std::log2(1.0 + cfg.pmax_w() * eff.squaredNorm() / cfg.sigma2_w());
        double achieved = 0.0;
        for (int pass = 0; pass < 5; ++pass) {
            const SurrogateState st = SurrogateState::compute(cfg, d.chan, d.sol);
            const SubproblemResult r = solve_beamforming_subproblem(cfg, d.chan, d.sol, st);
            d.sol = r.sol;
            achieved = r.sum_rate;
        }
        CHECK(std::abs(achieved - capacity) <= 1e-4);
    }

    SUBCASE("zero channel stays at zero rate")
    {
        const SystemConfig cfg = small_cfg(3, 2, 2);
        Drop d = make_drop(cfg, 5);
        d.chan.H.setZero();
        for (auto& h : d.chan.h)
            h.setZero();
        for (auto& g : d.chan.g)
            g.setZero();
        d.sol.w.setZero();
        const SurrogateState st = SurrogateState::compute(cfg, d.chan, d.sol);
        const SubproblemResult r = solve_beamforming_subproblem(cfg, d.chan, d.sol, st);
        CHECK(r.sum_rate == 0.0);
        CHECK(r.sol.w.squaredNorm() <= cfg.pmax_w() + 1e-8);
    }

    SUBCASE("accepted steps never decrease the rate and keep the power budget")
    {
        const SystemConfig cfg = small_cfg(4, 4, 2);
        Drop d = make_drop(cfg, 7);
        double prev = rate_of(cfg, d.chan, d.sol);
        for (int pass = 0; pass < 6; ++pass) {
            const SurrogateState st = SurrogateState::compute(cfg, d.chan, d.sol);
            const SubproblemResult r = solve_beamforming_subproblem(cfg, d.chan, d.sol, st);
            CHECK(r.sum_rate >= prev - 1e-9);
            CHECK(r.sol.w.squaredNorm() <= cfg.pmax_w() + 1e-8);
            d.sol = r.sol;
            prev = r.sum_rate;
        }
    }
}

TEST_CASE("phase subproblem")
{
    SUBCASE("scalar line-of-sight alignment")
    {
        SystemConfig cfg = small_cfg(1, 1, 1);
        cfg.kappa = 1e9;
        cfg.h0_db = 0.0;
        cfg.fas_center = {0.0, 0.0};
        cfg.lim_center = {2.0, 1.0};
        cfg.user_center = {3.0, 0.0};
        cfg.user_radius = 0.5;
        Drop d = make_drop(cfg, 11);

        // optimum aligns the reflected path with the direct one
        const complex<double> h = d.chan.h[0][0];
        const complex<double> g = d.chan.g[0][0];
        const complex<double> big_h = d.chan.H(0, 0);
        const double best = std::abs(h) + std::abs(g * big_h);

        for (int pass = 0; pass < 80; ++pass) {
            const SurrogateState st = SurrogateState::compute(cfg, d.chan, d.sol);
            const double xi_eff = pass < 60 ? 0.05 : 1e3;
            const SubproblemResult r = solve_phase_subproblem(cfg, d.chan, d.sol, st, xi_eff);
            d.sol = r.sol;
        }
        d.sol.theta[0] /= std::abs(d.sol.theta[0]);
        const double achieved = std::abs(effective_channel(d.chan, d.sol.theta, 0)[0]);
        CHECK(achieved == doctest::Approx(best).epsilon(1e-4));
    }

    SUBCASE("huge penalty forces the modulus slack to zero")
    {
        SystemConfig cfg = small_cfg(2, 3, 2);
        cfg.xi = 1e9;
        Drop d = make_drop(cfg, 13);
        const SurrogateState st = SurrogateState::compute(cfg, d.chan, d.sol);
        const SubproblemResult r = solve_phase_subproblem(cfg, d.chan, d.sol, st);
        for (Eigen::Index m = 0; m < r.sol.theta.size(); ++m)
            CHECK(std::abs(std::norm(r.sol.theta[m]) - 1.0) <= 1e-6);
    }

    SUBCASE("an already-stationary symmetric instance stays put")
    {
        // real, positive channel entries make theta = 1 optimal
        SystemConfig cfg = small_cfg(1, 1, 1);
        Drop d = make_drop(cfg, 17);
        d.chan.h[0][0] = 0.5;
        d.chan.g[0][0] = 0.3;
        d.chan.H(0, 0) = 0.4;
        d.sol.theta[0] = 1.0;
        d.sol.w(0, 0) = std::sqrt(cfg.pmax_w());
        const double before = rate_of(cfg, d.chan, d.sol);
        const SurrogateState st = SurrogateState::compute(cfg, d.chan, d.sol);
        const SubproblemResult r = solve_phase_subproblem(cfg, d.chan, d.sol, st);
        CHECK(std::abs(r.sum_rate - before) <= 1e-8 * (1.0 + before));
    }

    SUBCASE("acceptance keeps the unit-modulus residual from growing")
    {
        const SystemConfig cfg = small_cfg(3, 4, 2);
        Drop d = make_drop(cfg, 19);
        for (int pass = 0; pass < 6; ++pass) {
            const SurrogateState st = SurrogateState::compute(cfg, d.chan, d.sol);
            const SubproblemResult r = solve_phase_subproblem(cfg, d.chan, d.sol, st, 0.05);
            d.sol = r.sol;
        }
        double residual = 0.0;
        for (Eigen::Index m = 0; m < d.sol.theta.size(); ++m)
            residual += std::abs(std::norm(d.sol.theta[m]) - 1.0);
        CHECK(residual <= 6 * 1e-5 + 1e-12);
    }
}

TEST_CASE("position subproblem")
{
    SUBCASE("no scatter, no line of sight: stationary")
    {
        SystemConfig cfg = small_cfg(3, 3, 2);
        cfg.kappa = 0.0;
        Drop d = make_drop(cfg, 23);
        d.chan.draw.fas_lim.setZero();
        for (auto& v : d.chan.draw.fas_user)
            v.setZero();
        for (auto& v : d.chan.draw.lim_user)
            v.setZero();
        d.chan = assemble_channels(cfg, d.geo, d.sol.p, d.sol.r, d.chan.draw);
        const SurrogateState st = SurrogateState::compute(cfg, d.chan, d.sol);
        double trust = cfg.lambda_m / 8.0;
        const std::vector<bool> all_p(3, true), all_r(3, true);
        const PositionStepResult r = solve_position_subproblem(cfg, d.geo, d.chan, d.sol, st,
                                                               trust, all_p, all_r);
        for (size_t n = 0; n < d.sol.p.size(); ++n) {
            CHECK(r.sub.sol.p[n].x == doctest::Approx(d.sol.p[n].x).epsilon(1e-9));
            CHECK(r.sub.sol.p[n].y == doctest::Approx(d.sol.p[n].y).epsilon(1e-9));
        }
    }

    SUBCASE("single antenna, reflection muted: phase-only moves change nothing")
    {
        SystemConfig cfg = small_cfg(1, 2, 1);
        cfg.kappa = 1e9;
        Drop d = make_drop(cfg, 29);
        // line of sight only: zero the scatter so |h^eff| is exactly flat
        d.chan.draw.fas_lim.setZero();
        for (auto& v : d.chan.draw.fas_user)
            v.setZero();
        for (auto& v : d.chan.draw.lim_user)
            v.setZero();
        d.chan = assemble_channels(cfg, d.geo, d.sol.p, d.sol.r, d.chan.draw);
        d.sol = init_solution(cfg, d.geo, d.chan);
        d.sol.theta.setZero();  // mute the surface
        const double before = rate_of(cfg, d.chan, d.sol);
        const SurrogateState st = SurrogateState::compute(cfg, d.chan, d.sol);
        double trust = cfg.lambda_m / 8.0;
        const std::vector<bool> mv_p(1, true), mv_r(2, false);
        const PositionStepResult r = solve_position_subproblem(cfg, d.geo, d.chan, d.sol, st,
                                                               trust, mv_p, mv_r);
        CHECK(std::abs(r.sub.sum_rate - before) <= 1e-9 * (1.0 + before));
    }

    SUBCASE("safeguard never decreases the true rate")
    {
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            const SystemConfig cfg = small_cfg(4, 4, 2);
            Drop d = make_drop(cfg, seed * 101);
            const double before = rate_of(cfg, d.chan, d.sol);
            const SurrogateState st = SurrogateState::compute(cfg, d.chan, d.sol);
            double trust = cfg.lambda_m / 8.0;
            const std::vector<bool> all_p(4, true), all_r(4, true);
            const PositionStepResult r = solve_position_subproblem(cfg, d.geo, d.chan, d.sol,
                                                                   st, trust, all_p, all_r);
            CHECK(r.sub.sum_rate >= before - 1e-9);
            // spacing and aperture hold at the accepted positions
            const FeasibilityReport rep = check_feasibility(cfg, r.sub.sol);
            CHECK(rep.spacing_deficit <= 1e-8);
            CHECK(rep.aperture_excess <= 1e-9);
        }
    }
}

TEST_CASE("alternating loop")
{
    SUBCASE("zero outer iterations returns the start")
    {
        const SystemConfig base = small_cfg(3, 3, 2);
        Drop d = make_drop(base, 31);
        AOOptions opts;
        opts.i_outer = 0;
        const AOResult res = alternating_optimize(base, d.geo, d.chan, d.sol, opts);
        CHECK(res.outer_iters == 0);
        CHECK(res.sum_rate == doctest::Approx(rate_of(base, d.chan, d.sol)).epsilon(1e-12));
    }

    SUBCASE("trace is monotone within tolerance and feasible throughout")
    {
        for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
            const SystemConfig cfg = small_cfg(4, 4, 2);
            Drop d = make_drop(cfg, seed);
            AOOptions opts;
            opts.i_outer = 6;
            const AOResult res = alternating_optimize(cfg, d.geo, d.chan, d.sol, opts);
            REQUIRE(res.trace.rows.size() > 1);
            for (size_t i = 1; i < res.trace.rows.size(); ++i) {
                CHECK(res.trace.rows[i].sum_rate >=
                      res.trace.rows[i - 1].sum_rate - 1e-6);
                CHECK(res.trace.rows[i].violation <= 1e-8);
            }
            CHECK(res.pre_projection_modulus_dev <= 1e-3);
            // final phases are exactly unit modulus
            for (Eigen::Index m = 0; m < res.sol.theta.size(); ++m)
                CHECK(std::abs(std::abs(res.sol.theta[m]) - 1.0) <= 1e-12);
        }
    }

    SUBCASE("running from a converged solution is a fixed point")
    {
        const SystemConfig cfg = small_cfg(4, 4, 2);
        Drop d = make_drop(cfg, 37);
        AOOptions opts;
        opts.i_outer = 10;
        const AOResult first = alternating_optimize(cfg, d.geo, d.chan, d.sol, opts);
        const AOResult second =
            alternating_optimize(cfg, d.geo, first.chan, first.sol, opts);
        CHECK(std::abs(second.sum_rate - first.sum_rate) <=
              1e-4 * std::max(1.0, std::abs(first.sum_rate)));
    }
}
