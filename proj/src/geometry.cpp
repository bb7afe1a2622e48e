#include "faslim/geometry.hpp"

#include <cmath>
#include <string>

#include "faslim/errors.hpp"

namespace faslim {

namespace {

constexpr double kHalfPi = 1.57079632679489661923;

struct Link {
    double dist;
    SteerAngles angles;
};

Link link_between(Vec2 from, Vec2 to, const std::string& what)
{
    const Vec2 d = to - from;
    const double dist = norm(d);
    if (dist <= 0.0)
        throw GeometryError("coincident sites: " + what);
    return {dist, SteerAngles{kHalfPi, std::atan2(d.y, d.x)}};
}

}  // namespace

LinkGeometry derive_link_geometry(const SystemConfig& cfg,
                                  const std::vector<Vec2>& user_positions)
{
    if (static_cast<int>(user_positions.size()) != cfg.n_users)
        throw GeometryError("expected " + std::to_string(cfg.n_users) + " user positions, got " +
                            std::to_string(user_positions.size()));

    LinkGeometry geo;
    const Link fas_lim = link_between(cfg.fas_center, cfg.lim_center, "fas/lim");
    geo.fas_lim_dist = fas_lim.dist;
    geo.fas_to_lim = fas_lim.angles;
    const Link lim_fas = link_between(cfg.lim_center, cfg.fas_center, "lim/fas");
    geo.lim_from_fas = lim_fas.angles;

    geo.fas_user_dist.reserve(user_positions.size());
    geo.lim_user_dist.reserve(user_positions.size());
    for (size_t k = 0; k < user_positions.size(); ++k) {
        const std::string who = "user " + std::to_string(k);
        const Link direct = link_between(cfg.fas_center, user_positions[k], "fas/" + who);
        const Link reflected = link_between(cfg.lim_center, user_positions[k], "lim/" + who);
        geo.fas_user_dist.push_back(direct.dist);
        geo.lim_user_dist.push_back(reflected.dist);
        geo.fas_to_user.push_back(direct.angles);
        geo.lim_to_user.push_back(reflected.angles);
    }
    return geo;
}

}  // namespace faslim
