#pragma once

#include <vector>

#include "faslim/channel.hpp"
#include "faslim/config.hpp"
#include "faslim/geometry.hpp"

namespace faslim {

/// The four decision blocks of the joint design.
struct SolutionState {
    MatrixXcd w;              ///< beamformers, column k (N x K), volts
    VectorXcd theta;          ///< element phase-shifts (M)
    std::vector<Vec2> p;      ///< antenna positions within the transmit aperture
    std::vector<Vec2> r;      ///< element positions within the surface aperture
};

/// Full-span rectangular grid of `count` points inside an aperture centered
/// at the origin, row-major, pulled inward by a relative margin so the points
/// are strictly interior. Spacing stays >= sqrt(dth) whenever grid_fits holds.
std::vector<Vec2> initial_grid(int count, Vec2 aperture, double dth);

/// Same grid with spacing fixed to spacing_m (for rigid-array baselines),
/// centered in the aperture. Throws ConfigError if it does not fit.
std::vector<Vec2> centered_grid(int count, Vec2 aperture, double spacing_m);

/// Deterministic start: grid positions, unit phases, matched-filter
/// beamformers at full power split evenly across users. `chan` must have been
/// assembled at the grid positions with unit phases.
SolutionState init_solution(const SystemConfig& cfg, const LinkGeometry& geo,
                            const ChannelRealization& chan);

/// Worst-case violations of the physical constraints (0 when satisfied).
struct FeasibilityReport {
    double power_excess = 0.0;        ///< sum ||w_k||^2 - Pmax
    double spacing_deficit = 0.0;     ///< dth - min squared pair distance
    double aperture_excess = 0.0;     ///< distance outside the box
    double modulus_deviation = 0.0;   ///< max | |theta_m| - 1 |
    double worst_physical() const;    ///< max of the first three
};

FeasibilityReport check_feasibility(const SystemConfig& cfg, const SolutionState& sol);

}  // namespace faslim
