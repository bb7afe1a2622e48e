#pragma once

#include <cstdint>
#include <string>

namespace faslim {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }

double dot(Vec2 a, Vec2 b);
double norm(Vec2 a);

/// Scenario constants. dB/dBm quantities stay in dB form; use the _lin/_w
/// accessors for linear-scale values.
struct SystemConfig {
    int n_antennas = 16;   ///< transmit-side fluid antennas
    int n_elements = 16;   ///< reflecting surface liquid elements
    int n_users = 8;

    double h0_db = -20.0;      ///< reference path gain at 1 m
    double alpha = 2.2;        ///< path-loss exponent
    double kappa = 3.0;        ///< LoS/NLoS power ratio
    double lambda_m = 0.1;     ///< carrier wavelength [m]
    double sigma2_dbm = -95.0; ///< noise power
    double pmax_dbm = 30.0;    ///< transmit power budget

    Vec2 aperture_fa{1.0, 1.0};  ///< antenna region width x height [m]
    Vec2 aperture_lm{1.0, 1.0};  ///< element region width x height [m]
    double dth_fa = 0.1;         ///< min squared antenna spacing [m^2]
    double dth_lm = 0.1;         ///< min squared element spacing [m^2]

    double xi = 1e3;   ///< unit-modulus penalty weight
    int i_outer = 20;  ///< outer alternating-optimization iteration cap

    Vec2 fas_center{0.0, 0.0};
    Vec2 lim_center{50.0, 20.0};
    Vec2 user_center{100.0, 0.0};
    double user_radius = 10.0;

    std::uint64_t seed = 1;

    double h0_lin() const;     ///< 10^(h0_db/10)
    double sigma2_w() const;   ///< watts
    double pmax_w() const;     ///< watts
};

/// Parses a flat TOML-like document (key = value lines, optional [section]
/// headers that are organizational only, # comments). Missing keys take the
/// defaults above; unknown keys are rejected. Validates positivity and that
/// the requested point counts pack into their apertures at the minimum
/// spacing. Throws ConfigError naming the offending field.
SystemConfig load_config(const std::string& text);
SystemConfig load_config_file(const std::string& path);

/// Emits a document that load_config parses back to the same values.
std::string serialize_config(const SystemConfig& cfg);

/// Relative inset applied to aperture spans when placing grid points, so
/// that initial layouts are strictly interior (barrier subproblems need an
/// interior start). grid_fits uses the same inset, keeping validation and
/// placement consistent.
inline constexpr double kGridInteriorMargin = 1e-6;

/// Largest per-axis grid counts whose full-span spacing (after the interior
/// inset) stays >= sqrt(dth). Returns false if count points cannot be placed.
bool grid_fits(int count, Vec2 aperture, double dth, int* nx_out = nullptr,
               int* ny_out = nullptr);

}  // namespace faslim
