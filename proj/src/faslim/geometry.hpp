#pragma once

#include <vector>

#include "faslim/config.hpp"

namespace faslim {

/// Plane-wave direction relative to a planar aperture. `tilt` is measured
/// from the array broadside (sin(tilt) scales the in-plane projection),
/// `bearing` is the direction within the aperture plane.
struct SteerAngles {
    double tilt = 0.0;
    double bearing = 0.0;
};

/// Large-scale link geometry: center-to-center distances and departure /
/// arrival directions. Fixed for the whole optimization; sub-meter antenna
/// and element moves do not change path loss.
struct LinkGeometry {
    double fas_lim_dist = 0.0;                ///< transmitter to surface
    std::vector<double> fas_user_dist;        ///< per user, direct link
    std::vector<double> lim_user_dist;        ///< per user, reflected hop

    SteerAngles fas_to_lim;                   ///< departure toward the surface
    SteerAngles lim_from_fas;                 ///< arrival at the surface
    std::vector<SteerAngles> lim_to_user;     ///< departure per user
    std::vector<SteerAngles> fas_to_user;     ///< direct departure per user
};

/// Computes distances and angles from site centers and fixed user positions.
/// Apertures lie in the ground plane, so every link has tilt = pi/2 and the
/// bearing is the in-plane direction of the link. Throws GeometryError on
/// coincident sites.
LinkGeometry derive_link_geometry(const SystemConfig& cfg,
                                  const std::vector<Vec2>& user_positions);

}  // namespace faslim
