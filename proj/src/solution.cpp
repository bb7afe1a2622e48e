#include "faslim/solution.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "faslim/errors.hpp"

namespace faslim {

std::vector<Vec2> initial_grid(int count, Vec2 aperture, double dth)
{
    int nx = 0, ny = 0;
    if (!grid_fits(count, aperture, dth, &nx, &ny))
        throw ConfigError("grid of " + std::to_string(count) + " points at spacing sqrt(" +
                          std::to_string(dth) + ") does not fit the aperture");
    const double wx = aperture.x * (1.0 - kGridInteriorMargin);
    const double wy = aperture.y * (1.0 - kGridInteriorMargin);
    std::vector<Vec2> pts;
    pts.reserve(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) {
        const int col = i % nx;
        const int row = i / nx;
        const double x = (nx == 1) ? 0.0 : -wx / 2.0 + wx * col / (nx - 1);
        const double y = (ny == 1) ? 0.0 : -wy / 2.0 + wy * row / (ny - 1);
        pts.push_back({x, y});
    }
    return pts;
}

std::vector<Vec2> centered_grid(int count, Vec2 aperture, double spacing_m)
{
    const int nx = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(count))));
    const int ny = (count + nx - 1) / nx;
    const double half_w = spacing_m * (nx - 1) / 2.0;
    const double half_h = spacing_m * (ny - 1) / 2.0;
    if (2.0 * half_w > aperture.x || 2.0 * half_h > aperture.y)
        throw ConfigError("rigid grid spacing " + std::to_string(spacing_m) +
                          " m does not fit the aperture");
    std::vector<Vec2> pts;
    pts.reserve(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) {
        const int col = i % nx;
        const int row = i / nx;
        pts.push_back({-half_w + spacing_m * col, -half_h + spacing_m * row});
    }
    return pts;
}

SolutionState init_solution(const SystemConfig& cfg, const LinkGeometry& geo,
                            const ChannelRealization& chan)
{
    (void)geo;
    SolutionState sol;
    sol.p = initial_grid(cfg.n_antennas, cfg.aperture_fa, cfg.dth_fa);
    sol.r = initial_grid(cfg.n_elements, cfg.aperture_lm, cfg.dth_lm);
    sol.theta = VectorXcd::Ones(cfg.n_elements);

    const double per_user = cfg.pmax_w() / cfg.n_users;
    sol.w.resize(cfg.n_antennas, cfg.n_users);
    for (int k = 0; k < cfg.n_users; ++k) {
        const RowVectorXcd eff = effective_channel(chan, sol.theta, k);
        const double nrm = eff.norm();
        if (nrm > 0.0)
            sol.w.col(k) = std::sqrt(per_user) * eff.adjoint() / nrm;
        else
            sol.w.col(k) = VectorXcd::Zero(cfg.n_antennas);  // dead channel, no power helps
    }
    return sol;
}

namespace {

double pair_spacing_deficit(const std::vector<Vec2>& pts, double dth)
{
    double deficit = 0.0;
    for (size_t i = 0; i < pts.size(); ++i)
        for (size_t j = i + 1; j < pts.size(); ++j) {
            const Vec2 d = pts[i] - pts[j];
            deficit = std::max(deficit, dth - dot(d, d));
        }
    return deficit;
}

double box_excess(const std::vector<Vec2>& pts, Vec2 aperture)
{
    double excess = 0.0;
    for (const Vec2& p : pts) {
        excess = std::max(excess, std::abs(p.x) - aperture.x / 2.0);
        excess = std::max(excess, std::abs(p.y) - aperture.y / 2.0);
    }
    return excess;
}

}  // namespace

double FeasibilityReport::worst_physical() const
{
    return std::max({power_excess, spacing_deficit, aperture_excess, 0.0});
}

FeasibilityReport check_feasibility(const SystemConfig& cfg, const SolutionState& sol)
{
    FeasibilityReport rep;
    rep.power_excess = sol.w.squaredNorm() - cfg.pmax_w();
    rep.spacing_deficit = std::max(pair_spacing_deficit(sol.p, cfg.dth_fa),
                                   pair_spacing_deficit(sol.r, cfg.dth_lm));
    rep.aperture_excess = std::max(box_excess(sol.p, cfg.aperture_fa),
                                   box_excess(sol.r, cfg.aperture_lm));
    for (Eigen::Index m = 0; m < sol.theta.size(); ++m)
        rep.modulus_deviation = std::max(rep.modulus_deviation,
                                         std::abs(std::abs(sol.theta[m]) - 1.0));
    return rep;
}

}  // namespace faslim
