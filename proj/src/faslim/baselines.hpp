#pragma once

#include <string>

#include "faslim/ao.hpp"
#include "faslim/rng.hpp"

namespace faslim {

enum class BaselineKind {
    proposed,      ///< full alternating optimization
    wo_bf,         ///< random beamformers at full power, rest optimized
    wo_theta,      ///< random unit-modulus phases, rest optimized
    wo_fa,         ///< antenna positions frozen at the grid, rest optimized
    wo_lim,        ///< reflection path removed, beamformers optimized
    rigid_bs_ris,  ///< both layouts frozen at half-wavelength grids
    zf,            ///< zero-forcing beamformers at the initial state
    ga,            ///< genetic search over phases and positions
    partial,       ///< only a leading fraction of positions adjustable
};

struct BaselineSpec {
    BaselineKind kind = BaselineKind::proposed;
    double rho_fa = 1.0;    ///< adjustable fraction of antennas (partial)
    double rho_lm = 1.0;    ///< adjustable fraction of elements (partial)
    int ga_budget = 2000;   ///< fitness evaluations for the genetic search
};

BaselineKind baseline_kind_from_string(const std::string& name);
std::string baseline_kind_name(BaselineKind kind);

struct BaselineResult {
    SolutionState sol;
    double sum_rate = 0.0;
    int iters = 0;          ///< outer iterations (AO) or generations (GA)
    AOTrace trace;
    bool zf_regularized = false;  ///< rank-deficient ZF fell back to a damped inverse
};

/// Runs one scheme on a fixed channel drop. All schemes start from the same
/// deterministic initial state; randomized schemes consume `rng`.
BaselineResult run_baseline(const BaselineSpec& spec, const SystemConfig& cfg,
                            const LinkGeometry& geo, const ChannelRealization& chan,
                            RngStream& rng, const AOOptions& base_options = {});

/// Pseudoinverse beamformers with equal per-user power. Throws ModelError
/// when K > N; a condition number above 1e10 switches to a damped inverse and
/// sets *regularized.
MatrixXcd zf_beamforming(const MatrixXcd& eff, double pmax_w, bool* regularized = nullptr);

/// Real-coded genetic search over (phase angles, positions) with a two-pass
/// SCA beamforming evaluation per candidate. Population 32, tournament
/// selection of 2, Gaussian mutation sigma = lambda/10, elitism 2; aperture
/// and spacing violations are repaired by projection.
BaselineResult ga_optimize(const SystemConfig& cfg, const LinkGeometry& geo,
                           const ChannelRealization& chan, int budget, RngStream& rng);

}  // namespace faslim
