#include "faslim/config.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <vector>

#include "faslim/errors.hpp"

namespace faslim {

double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
double norm(Vec2 a) { return std::hypot(a.x, a.y); }

double SystemConfig::h0_lin() const { return std::pow(10.0, h0_db / 10.0); }
double SystemConfig::sigma2_w() const { return std::pow(10.0, (sigma2_dbm - 30.0) / 10.0); }
double SystemConfig::pmax_w() const { return std::pow(10.0, (pmax_dbm - 30.0) / 10.0); }

bool grid_fits(int count, Vec2 aperture, double dth, int* nx_out, int* ny_out)
{
    if (count < 1)
        return false;
    const double spacing = std::sqrt(dth);
    const double wx = aperture.x * (1.0 - kGridInteriorMargin);
    const double wy = aperture.y * (1.0 - kGridInteriorMargin);
    const int nx_max = static_cast<int>(std::floor(wx / spacing)) + 1;
    const int ny_max = static_cast<int>(std::floor(wy / spacing)) + 1;
    if (static_cast<long long>(nx_max) * ny_max < count)
        return false;
    // Prefer a near-square layout, widening columns until the rows fit.
    int nx = std::min(nx_max, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(count)))));
    while (nx <= nx_max && (count + nx - 1) / nx > ny_max)
        ++nx;
    if (nx > nx_max)
        return false;
    if (nx_out)
        *nx_out = nx;
    if (ny_out)
        *ny_out = (count + nx - 1) / nx;
    return true;
}

namespace {

std::string trim(const std::string& s)
{
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

struct RawValue {
    std::string text;
    int line;
};

// key = value lines; [section] headers are accepted and ignored (keys are
// globally unique); '#' starts a comment outside of values.
std::map<std::string, RawValue> parse_document(const std::string& text)
{
    std::map<std::string, RawValue> out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config line " + std::to_string(lineno) + ": malformed section header");
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key or value");
        if (out.count(key))
            throw ConfigError("config: duplicate key '" + key + "'");
        out[key] = RawValue{value, lineno};
    }
    return out;
}

double parse_number(const std::string& key, const std::string& text)
{
    try {
        size_t pos = 0;
        const double v = std::stod(text, &pos);
        if (pos != text.size())
            throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': not a number: '" + text + "'");
    }
}

Vec2 parse_pair(const std::string& key, const std::string& text)
{
    std::string body = trim(text);
    if (body.size() < 2 || body.front() != '[' || body.back() != ']')
        throw ConfigError("config key '" + key + "': expected [x, y]");
    body = body.substr(1, body.size() - 2);
    const size_t comma = body.find(',');
    if (comma == std::string::npos)
        throw ConfigError("config key '" + key + "': expected two comma-separated numbers");
    return {parse_number(key, trim(body.substr(0, comma))),
            parse_number(key, trim(body.substr(comma + 1)))};
}

void validate(const SystemConfig& cfg)
{
    auto require = [](bool ok, const std::string& field, const std::string& why) {
        if (!ok)
            throw ConfigError("config field '" + field + "': " + why);
    };
    require(cfg.n_antennas >= 1, "n_antennas", "must be >= 1");
    require(cfg.n_elements >= 1, "n_elements", "must be >= 1");
    require(cfg.n_users >= 1, "n_users", "must be >= 1");
    require(cfg.kappa >= 0.0, "kappa", "must be >= 0");
    require(cfg.lambda_m > 0.0, "lambda_m", "must be > 0");
    require(cfg.alpha > 0.0, "alpha", "must be > 0");
    require(cfg.xi > 0.0, "xi", "must be > 0");
    require(cfg.i_outer >= 0, "i_outer", "must be >= 0");
    require(cfg.dth_fa > 0.0, "dth_fa", "must be > 0");
    require(cfg.dth_lm > 0.0, "dth_lm", "must be > 0");
    require(cfg.aperture_fa.x > 0.0 && cfg.aperture_fa.y > 0.0, "aperture_fa", "must be positive");
    require(cfg.aperture_lm.x > 0.0 && cfg.aperture_lm.y > 0.0, "aperture_lm", "must be positive");
    require(cfg.user_radius >= 0.0, "user_radius", "must be >= 0");
    if (!grid_fits(cfg.n_antennas, cfg.aperture_fa, cfg.dth_fa))
        throw ConfigError("config field 'dth_fa': " + std::to_string(cfg.n_antennas) +
                          " antennas at spacing sqrt(" + std::to_string(cfg.dth_fa) +
                          ") do not fit aperture_fa");
    if (!grid_fits(cfg.n_elements, cfg.aperture_lm, cfg.dth_lm))
        throw ConfigError("config field 'dth_lm': " + std::to_string(cfg.n_elements) +
                          " elements at spacing sqrt(" + std::to_string(cfg.dth_lm) +
                          ") do not fit aperture_lm");
}

}  // namespace

SystemConfig load_config(const std::string& text)
{
    auto doc = parse_document(text);
    SystemConfig cfg;

    auto take = [&doc](const std::string& key) -> const RawValue* {
        auto it = doc.find(key);
        if (it == doc.end())
            return nullptr;
        return &it->second;
    };
    auto num = [&](const std::string& key, double& field) {
        if (const RawValue* rv = take(key)) {
            field = parse_number(key, rv->text);
            doc.erase(key);
        }
    };
    auto integer = [&](const std::string& key, int& field) {
        if (const RawValue* rv = take(key)) {
            const double v = parse_number(key, rv->text);
            if (v != std::floor(v))
                throw ConfigError("config key '" + key + "': must be an integer");
            field = static_cast<int>(v);
            doc.erase(key);
        }
    };
    auto pair = [&](const std::string& key, Vec2& field) {
        if (const RawValue* rv = take(key)) {
            field = parse_pair(key, rv->text);
            doc.erase(key);
        }
    };

    integer("n_antennas", cfg.n_antennas);
    integer("n_elements", cfg.n_elements);
    integer("n_users", cfg.n_users);
    num("h0_db", cfg.h0_db);
    num("alpha", cfg.alpha);
    num("kappa", cfg.kappa);
    num("lambda_m", cfg.lambda_m);
    num("sigma2_dbm", cfg.sigma2_dbm);
    num("pmax_dbm", cfg.pmax_dbm);
    pair("aperture_fa", cfg.aperture_fa);
    pair("aperture_lm", cfg.aperture_lm);
    num("dth_fa", cfg.dth_fa);
    num("dth_lm", cfg.dth_lm);
    num("xi", cfg.xi);
    integer("i_outer", cfg.i_outer);
    pair("fas_center", cfg.fas_center);
    pair("lim_center", cfg.lim_center);
    pair("user_center", cfg.user_center);
    num("user_radius", cfg.user_radius);
    if (const RawValue* rv = take("seed")) {
        try {
            cfg.seed = std::stoull(rv->text);
        } catch (const std::exception&) {
            throw ConfigError("config key 'seed': not an unsigned integer");
        }
        doc.erase("seed");
    }

    if (!doc.empty())
        throw ConfigError("config: unknown key '" + doc.begin()->first + "'");

    validate(cfg);
    return cfg;
}

SystemConfig load_config_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return load_config(ss.str());
}

std::string serialize_config(const SystemConfig& cfg)
{
    std::ostringstream out;
    out.precision(17);
    auto pair = [](std::ostringstream& o, Vec2 v) { o << "[" << v.x << ", " << v.y << "]"; };
    out << "n_antennas = " << cfg.n_antennas << "\n";
    out << "n_elements = " << cfg.n_elements << "\n";
    out << "n_users = " << cfg.n_users << "\n";
    out << "h0_db = " << cfg.h0_db << "\n";
    out << "alpha = " << cfg.alpha << "\n";
    out << "kappa = " << cfg.kappa << "\n";
    out << "lambda_m = " << cfg.lambda_m << "\n";
    out << "sigma2_dbm = " << cfg.sigma2_dbm << "\n";
    out << "pmax_dbm = " << cfg.pmax_dbm << "\n";
    out << "aperture_fa = ";
    pair(out, cfg.aperture_fa);
    out << "\naperture_lm = ";
    pair(out, cfg.aperture_lm);
    out << "\ndth_fa = " << cfg.dth_fa << "\n";
    out << "dth_lm = " << cfg.dth_lm << "\n";
    out << "xi = " << cfg.xi << "\n";
    out << "i_outer = " << cfg.i_outer << "\n";
    out << "fas_center = ";
    pair(out, cfg.fas_center);
    out << "\nlim_center = ";
    pair(out, cfg.lim_center);
    out << "\nuser_center = ";
    pair(out, cfg.user_center);
    out << "\nuser_radius = " << cfg.user_radius << "\n";
    out << "seed = " << cfg.seed << "\n";
    return out.str();
}

}  // namespace faslim
