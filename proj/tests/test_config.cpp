#include <doctest.h>

#include "faslim/config.hpp"
#include "faslim/errors.hpp"

using namespace faslim;

TEST_CASE("empty document yields the paper-scale defaults")
{
    const SystemConfig cfg = load_config("");
    CHECK(cfg.n_antennas == 16);
    CHECK(cfg.n_elements == 16);
    CHECK(cfg.n_users == 8);
    CHECK(cfg.h0_db == -20.0);
    CHECK(cfg.alpha == 2.2);
    CHECK(cfg.kappa == 3.0);
    CHECK(cfg.lambda_m == 0.1);
    CHECK(cfg.sigma2_dbm == -95.0);
    CHECK(cfg.pmax_dbm == 30.0);
    CHECK(cfg.aperture_fa.x == 1.0);
    CHECK(cfg.aperture_fa.y == 1.0);
    CHECK(cfg.aperture_lm.x == 1.0);
    CHECK(cfg.dth_fa == 0.1);
    CHECK(cfg.dth_lm == 0.1);
    CHECK(cfg.xi == 1e3);
    CHECK(cfg.i_outer == 20);
    CHECK(cfg.fas_center.x == 0.0);
    CHECK(cfg.lim_center.x == 50.0);
    CHECK(cfg.lim_center.y == 20.0);
    CHECK(cfg.user_center.x == 100.0);
    CHECK(cfg.user_radius == 10.0);
}

TEST_CASE("dB conversions")
{
    const SystemConfig cfg = load_config("");
    CHECK(cfg.h0_lin() == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(cfg.pmax_w() == doctest::Approx(1.0).epsilon(1e-12));       // 30 dBm
    CHECK(cfg.sigma2_w() == doctest::Approx(3.1622776601683794e-13).epsilon(1e-12));
}

TEST_CASE("non-positive dimension is rejected")
{
    CHECK_THROWS_AS(load_config("n_antennas = 0"), ConfigError);
    CHECK_THROWS_AS(load_config("n_users = -3"), ConfigError);
    CHECK_THROWS_AS(load_config("lambda_m = 0"), ConfigError);
    CHECK_THROWS_AS(load_config("xi = -1"), ConfigError);
}

TEST_CASE("infeasible packing is rejected and names the field")
{
    // 16 points at spacing sqrt(0.1) cannot fit a 5 cm square
    const std::string doc = "aperture_fa = [0.05, 0.05]\n";
    try {
        load_config(doc);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("dth_fa") != std::string::npos);
    }
}

TEST_CASE("grid feasibility boundary cases")
{
    CHECK(grid_fits(16, {1.0, 1.0}, 0.1));
    CHECK_FALSE(grid_fits(16, {0.05, 0.05}, 0.1));
    CHECK(grid_fits(1, {0.01, 0.01}, 0.1));  // single point always fits
    int nx = 0, ny = 0;
    CHECK(grid_fits(4, {1.0, 1.0}, 0.1, &nx, &ny));
    CHECK(nx == 2);
    CHECK(ny == 2);
}

TEST_CASE("serialize/load round trip is exact")
{
    SystemConfig cfg = load_config("n_antennas = 7\nkappa = 2.75\nseed = 123456789012345\n"
                                   "aperture_lm = [1.1, 1.25]\nuser_radius = 4.5");
    const SystemConfig back = load_config(serialize_config(cfg));
    CHECK(back.n_antennas == cfg.n_antennas);
    CHECK(back.n_elements == cfg.n_elements);
    CHECK(back.n_users == cfg.n_users);
    CHECK(back.h0_db == cfg.h0_db);
    CHECK(back.alpha == cfg.alpha);
    CHECK(back.kappa == cfg.kappa);
    CHECK(back.lambda_m == cfg.lambda_m);
    CHECK(back.sigma2_dbm == cfg.sigma2_dbm);
    CHECK(back.pmax_dbm == cfg.pmax_dbm);
    CHECK(back.aperture_fa.x == cfg.aperture_fa.x);
    CHECK(back.aperture_lm.x == cfg.aperture_lm.x);
    CHECK(back.aperture_lm.y == cfg.aperture_lm.y);
    CHECK(back.dth_fa == cfg.dth_fa);
    CHECK(back.dth_lm == cfg.dth_lm);
    CHECK(back.xi == cfg.xi);
    CHECK(back.i_outer == cfg.i_outer);
    CHECK(back.fas_center.x == cfg.fas_center.x);
    CHECK(back.lim_center.y == cfg.lim_center.y);
    CHECK(back.user_center.x == cfg.user_center.x);
    CHECK(back.user_radius == cfg.user_radius);
    CHECK(back.seed == cfg.seed);
}

TEST_CASE("unknown keys are rejected")
{
    CHECK_THROWS_AS(load_config("n_antenas = 4"), ConfigError);
    CHECK_THROWS_AS(load_config("extra = 1"), ConfigError);
}

TEST_CASE("duplicate keys are rejected")
{
    CHECK_THROWS_AS(load_config("kappa = 1\nkappa = 2"), ConfigError);
}

TEST_CASE("sections and comments are tolerated")
{
    const SystemConfig cfg = load_config("# scenario\n[sites]\nlim_center = [40, 10]\n"
                                         "[radio]\nkappa = 5  # strong LoS\n");
    CHECK(cfg.lim_center.x == 40.0);
    CHECK(cfg.kappa == 5.0);
}

TEST_CASE("malformed values are rejected")
{
    CHECK_THROWS_AS(load_config("kappa = abc"), ConfigError);
    CHECK_THROWS_AS(load_config("aperture_fa = [1.0]"), ConfigError);
    CHECK_THROWS_AS(load_config("aperture_fa = 1.0"), ConfigError);
    CHECK_THROWS_AS(load_config("n_antennas = 2.5"), ConfigError);
    CHECK_THROWS_AS(load_config("just a line"), ConfigError);
}
