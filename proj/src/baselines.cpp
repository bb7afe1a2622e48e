#include "faslim/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "faslim/errors.hpp"

namespace faslim {

BaselineKind baseline_kind_from_string(const std::string& name)
{
    if (name == "proposed") return BaselineKind::proposed;
    if (name == "wo_bf") return BaselineKind::wo_bf;
    if (name == "wo_theta") return BaselineKind::wo_theta;
    if (name == "wo_fa") return BaselineKind::wo_fa;
    if (name == "wo_lim") return BaselineKind::wo_lim;
    if (name == "rigid_bs_ris") return BaselineKind::rigid_bs_ris;
    if (name == "zf") return BaselineKind::zf;
    if (name == "ga") return BaselineKind::ga;
    if (name == "partial") return BaselineKind::partial;
    throw ConfigError("unknown scheme: '" + name + "'");
}

std::string baseline_kind_name(BaselineKind kind)
{
    switch (kind) {
        case BaselineKind::proposed: return "proposed";
        case BaselineKind::wo_bf: return "wo_bf";
        case BaselineKind::wo_theta: return "wo_theta";
        case BaselineKind::wo_fa: return "wo_fa";
        case BaselineKind::wo_lim: return "wo_lim";
        case BaselineKind::rigid_bs_ris: return "rigid_bs_ris";
        case BaselineKind::zf: return "zf";
        case BaselineKind::ga: return "ga";
        case BaselineKind::partial: return "partial";
    }
    return "?";
}

MatrixXcd zf_beamforming(const MatrixXcd& eff, double pmax_w, bool* regularized)
{
    const Eigen::Index k_count = eff.rows();
    const Eigen::Index n_ant = eff.cols();
    if (regularized)
        *regularized = false;
    if (k_count > n_ant)
        throw ModelError("zero-forcing needs K <= N");

    Eigen::JacobiSVD<MatrixXcd> svd(eff, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const VectorXd sv = svd.singularValues();
    const double smax = sv[0];
    const double smin = sv[sv.size() - 1];
    VectorXd inv(sv.size());
    if (smax <= 0.0 || smin <= 0.0 || smax / smin > 1e10) {
        if (regularized)
            *regularized = true;
        const double damp = std::max(smax, 1e-300) * 1e-10;
        for (Eigen::Index i = 0; i < sv.size(); ++i)
            inv[i] = sv[i] / (sv[i] * sv[i] + damp * damp);
    } else {
        inv = sv.cwiseInverse();
    }
    const MatrixXcd pinv = svd.matrixV() * inv.asDiagonal() * svd.matrixU().adjoint();

    MatrixXcd w(n_ant, k_count);
    const double per_user = pmax_w / static_cast<double>(k_count);
    for (Eigen::Index k = 0; k < k_count; ++k) {
        const double nrm = pinv.col(k).norm();
        w.col(k) = nrm > 0.0 ? VectorXcd(std::sqrt(per_user) * pinv.col(k) / nrm)
                             : VectorXcd(VectorXcd::Zero(n_ant));
    }
    return w;
}

namespace {

std::vector<bool> leading_mask(int total, double rho)
{
    const int adjustable = std::min(total, static_cast<int>(std::ceil(rho * total)));
    std::vector<bool> mask(static_cast<size_t>(total), false);
    for (int i = 0; i < adjustable; ++i)
        mask[static_cast<size_t>(i)] = true;
    return mask;
}

double state_rate(const SystemConfig& cfg, const ChannelRealization& chan,
                  const SolutionState& sol)
{
    return sinr_and_rate(effective_channel_matrix(chan, sol.theta), sol.w, cfg.sigma2_w())
        .sum_rate;
}

// --- genetic search ---------------------------------------------------------

struct Genome {
    VectorXd phases;          // element phase angles
    std::vector<Vec2> p, r;
    double fitness = -1.0;
    bool evaluated = false;
};

void clamp_to_aperture(std::vector<Vec2>& pts, Vec2 aperture)
{
    for (Vec2& v : pts) {
        v.x = std::clamp(v.x, -aperture.x / 2.0, aperture.x / 2.0);
        v.y = std::clamp(v.y, -aperture.y / 2.0, aperture.y / 2.0);
    }
}

bool repair_spacing(std::vector<Vec2>& pts, Vec2 aperture, double dth)
{
    const double dmin = std::sqrt(dth);
    for (int round = 0; round < 50; ++round) {
        bool ok = true;
        for (size_t i = 0; i < pts.size(); ++i) {
            for (size_t j = i + 1; j < pts.size(); ++j) {
                Vec2 diff = pts[i] - pts[j];
                double d = norm(diff);
                if (d * d >= dth)
                    continue;
                ok = false;
                if (d < 1e-9)
                    diff = {dmin, 0.0};  // coincident: separate along x
                else
                    diff = (1.0 / d) * diff;
                const double push = (dmin - std::max(d, 0.0)) / 2.0 + 1e-9;
                pts[i] = pts[i] + push * diff;
                pts[j] = pts[j] - push * diff;
            }
        }
        clamp_to_aperture(pts, aperture);
        if (ok)
            return true;
    }
    // final verification after the last clamp
    for (size_t i = 0; i < pts.size(); ++i)
        for (size_t j = i + 1; j < pts.size(); ++j) {
            const Vec2 d = pts[i] - pts[j];
            if (dot(d, d) < dth)
                return false;
        }
    return true;
}

double evaluate_genome(const SystemConfig& cfg, const LinkGeometry& geo,
                       const ChannelRealization& chan, const Genome& genome)
{
    VectorXcd theta(cfg.n_elements);
    for (int m = 0; m < cfg.n_elements; ++m)
        theta[m] = std::polar(1.0, genome.phases[m]);
    const ChannelRealization cand =
        assemble_channels(cfg, geo, genome.p, genome.r, chan.draw, chan.correlation_enabled);
    SolutionState sol;
    sol.theta = theta;
    sol.p = genome.p;
    sol.r = genome.r;
    // matched-filter start, then two SCA beamforming passes
    sol.w.resize(cfg.n_antennas, cfg.n_users);
    const double per_user = cfg.pmax_w() / cfg.n_users;
    for (int k = 0; k < cfg.n_users; ++k) {
        const RowVectorXcd eff = effective_channel(cand, theta, k);
        const double nrm = eff.norm();
        sol.w.col(k) = nrm > 0.0 ? VectorXcd(std::sqrt(per_user) * eff.adjoint() / nrm)
                                 : VectorXcd(VectorXcd::Zero(cfg.n_antennas));
    }
    double rate = state_rate(cfg, cand, sol);
    for (int pass = 0; pass < 2; ++pass) {
        const SurrogateState state = SurrogateState::compute(cfg, cand, sol);
        const SubproblemResult res = solve_beamforming_subproblem(cfg, cand, sol, state);
        sol = res.sol;
        rate = res.sum_rate;
    }
    return rate;
}

}  // namespace

BaselineResult ga_optimize(const SystemConfig& cfg, const LinkGeometry& geo,
                           const ChannelRealization& chan, int budget, RngStream& rng)
{
    constexpr int kPopulation = 32;
    constexpr int kElitism = 2;

    BaselineResult out;
    SolutionState init = init_solution(cfg, geo, chan);
    out.sol = init;
    out.sum_rate = state_rate(cfg, chan, init);
    if (budget <= 0)
        return out;

    const double pos_sigma = cfg.lambda_m / 10.0;
    const double phase_sigma = 0.62831853071795864769;  // same step measured in phase

    Genome seed;
    seed.phases = VectorXd::Zero(cfg.n_elements);
    seed.p = init.p;
    seed.r = init.r;

    auto mutate = [&](Genome g) {
        for (int m = 0; m < cfg.n_elements; ++m)
            g.phases[m] += phase_sigma * rng.normal();
        for (Vec2& v : g.p) {
            v.x += pos_sigma * rng.normal();
            v.y += pos_sigma * rng.normal();
        }
        for (Vec2& v : g.r) {
            v.x += pos_sigma * rng.normal();
            v.y += pos_sigma * rng.normal();
        }
        g.evaluated = false;
        return g;
    };
    auto repair = [&](Genome& g, const Genome& fallback) {
        clamp_to_aperture(g.p, cfg.aperture_fa);
        clamp_to_aperture(g.r, cfg.aperture_lm);
        if (!repair_spacing(g.p, cfg.aperture_fa, cfg.dth_fa))
            g.p = fallback.p;
        if (!repair_spacing(g.r, cfg.aperture_lm, cfg.dth_lm))
            g.r = fallback.r;
    };

    int evals = 0;
    std::vector<Genome> pop;
    pop.reserve(kPopulation);
    pop.push_back(seed);
    while (static_cast<int>(pop.size()) < kPopulation) {
        Genome g = mutate(seed);
        repair(g, seed);
        pop.push_back(std::move(g));
    }
    for (Genome& g : pop) {
        if (evals >= budget)
            break;
        g.fitness = evaluate_genome(cfg, geo, chan, g);
        g.evaluated = true;
        ++evals;
    }
    auto by_fitness = [](const Genome& a, const Genome& b) { return a.fitness > b.fitness; };
    std::stable_sort(pop.begin(), pop.end(), by_fitness);

    int generations = 0;
    while (evals < budget) {
        ++generations;
        std::vector<Genome> next(pop.begin(), pop.begin() + kElitism);
        auto tournament = [&]() -> const Genome& {
            const auto a = static_cast<size_t>(rng.uniform01() * pop.size());
            const auto b = static_cast<size_t>(rng.uniform01() * pop.size());
            const Genome& ga_ = pop[std::min(a, pop.size() - 1)];
            const Genome& gb = pop[std::min(b, pop.size() - 1)];
            return ga_.fitness >= gb.fitness ? ga_ : gb;
        };
        while (static_cast<int>(next.size()) < kPopulation) {
            const Genome& pa = tournament();
            const Genome& pb = tournament();
            Genome child;
            child.phases = pa.phases;
            child.p = pa.p;
            child.r = pa.r;
            // blend crossover gene by gene
            for (int m = 0; m < cfg.n_elements; ++m) {
                const double u = rng.uniform01();
                child.phases[m] = pa.phases[m] + u * (pb.phases[m] - pa.phases[m]);
            }
            for (size_t n = 0; n < child.p.size(); ++n) {
                const double u = rng.uniform01();
                child.p[n] = pa.p[n] + u * (pb.p[n] - pa.p[n]);
            }
            for (size_t m = 0; m < child.r.size(); ++m) {
                const double u = rng.uniform01();
                child.r[m] = pa.r[m] + u * (pb.r[m] - pa.r[m]);
            }
            child = mutate(child);
            repair(child, pa);
            next.push_back(std::move(child));
        }
        for (Genome& g : next) {
            if (g.evaluated)
                continue;
            if (evals >= budget)
                break;
            g.fitness = evaluate_genome(cfg, geo, chan, g);
            g.evaluated = true;
            ++evals;
        }
        next.erase(std::remove_if(next.begin(), next.end(),
                                  [](const Genome& g) { return !g.evaluated; }),
                   next.end());
        pop = std::move(next);
        std::stable_sort(pop.begin(), pop.end(), by_fitness);
    }

    const Genome& best = pop.front();
    VectorXcd theta(cfg.n_elements);
    for (int m = 0; m < cfg.n_elements; ++m)
        theta[m] = std::polar(1.0, best.phases[m]);
    const ChannelRealization cand =
        assemble_channels(cfg, geo, best.p, best.r, chan.draw, chan.correlation_enabled);
    SolutionState sol;
    sol.theta = theta;
    sol.p = best.p;
    sol.r = best.r;
    sol.w = init.w;
    const double per_user = cfg.pmax_w() / cfg.n_users;
    for (int k = 0; k < cfg.n_users; ++k) {
        const RowVectorXcd eff = effective_channel(cand, theta, k);
        const double nrm = eff.norm();
        sol.w.col(k) = nrm > 0.0 ? VectorXcd(std::sqrt(per_user) * eff.adjoint() / nrm)
                                 : VectorXcd(VectorXcd::Zero(cfg.n_antennas));
    }
    for (int pass = 0; pass < 2; ++pass) {
        const SurrogateState state = SurrogateState::compute(cfg, cand, sol);
        const SubproblemResult res = solve_beamforming_subproblem(cfg, cand, sol, state);
        sol = res.sol;
    }
    out.sol = sol;
    out.sum_rate = state_rate(cfg, cand, sol);
    out.iters = generations;
    return out;
}

BaselineResult run_baseline(const BaselineSpec& spec, const SystemConfig& cfg,
                            const LinkGeometry& geo, const ChannelRealization& chan,
                            RngStream& rng, const AOOptions& base_options)
{
    BaselineKind kind = spec.kind;
    if (kind == BaselineKind::partial && std::ceil(spec.rho_fa * cfg.n_antennas) == 0 &&
        std::ceil(spec.rho_lm * cfg.n_elements) == 0)
        kind = BaselineKind::rigid_bs_ris;  // nothing adjustable: same frozen design

    AOOptions opts = base_options;
    SolutionState sol0 = init_solution(cfg, geo, chan);
    const ChannelRealization* chan_run = &chan;
    ChannelRealization rigid_chan;

    switch (kind) {
        case BaselineKind::proposed:
            break;
        case BaselineKind::wo_bf: {
            MatrixXcd w(cfg.n_antennas, cfg.n_users);
            for (int k = 0; k < cfg.n_users; ++k)
                for (int n = 0; n < cfg.n_antennas; ++n)
                    w(n, k) = rng.cgauss();
            const double nrm = w.norm();
            if (nrm > 0.0)
                w *= std::sqrt(cfg.pmax_w()) / nrm;
            sol0.w = w;
            opts.optimize_w = false;
            break;
        }
        case BaselineKind::wo_theta: {
            for (int m = 0; m < cfg.n_elements; ++m)
                sol0.theta[m] = std::polar(1.0, rng.uniform(0.0, 6.283185307179586));
            opts.optimize_theta = false;
            break;
        }
        case BaselineKind::wo_fa:
            opts.movable_p.assign(static_cast<size_t>(cfg.n_antennas), false);
            break;
        case BaselineKind::wo_lim:
            sol0.theta.setZero();  // reflection off: h_eff collapses to the direct channel
            opts.optimize_theta = false;
            opts.movable_p.assign(static_cast<size_t>(cfg.n_antennas), false);
            opts.movable_r.assign(static_cast<size_t>(cfg.n_elements), false);
            break;
        case BaselineKind::rigid_bs_ris: {
            const double spacing = cfg.lambda_m / 2.0;
            sol0.p = centered_grid(cfg.n_antennas, cfg.aperture_fa, spacing);
            sol0.r = centered_grid(cfg.n_elements, cfg.aperture_lm, spacing);
            rigid_chan = assemble_channels(cfg, geo, sol0.p, sol0.r, chan.draw,
                                           chan.correlation_enabled);
            chan_run = &rigid_chan;
            const double per_user = cfg.pmax_w() / cfg.n_users;
            for (int k = 0; k < cfg.n_users; ++k) {
                const RowVectorXcd eff = effective_channel(*chan_run, sol0.theta, k);
                const double nrm = eff.norm();
                sol0.w.col(k) = nrm > 0.0
                                    ? VectorXcd(std::sqrt(per_user) * eff.adjoint() / nrm)
                                    : VectorXcd(VectorXcd::Zero(cfg.n_antennas));
            }
            opts.movable_p.assign(static_cast<size_t>(cfg.n_antennas), false);
            opts.movable_r.assign(static_cast<size_t>(cfg.n_elements), false);
            break;
        }
        case BaselineKind::zf: {
            BaselineResult out;
            out.sol = sol0;
            out.sol.w = zf_beamforming(effective_channel_matrix(chan, sol0.theta),
                                       cfg.pmax_w(), &out.zf_regularized);
            out.sum_rate = state_rate(cfg, chan, out.sol);
            return out;
        }
        case BaselineKind::ga:
            return ga_optimize(cfg, geo, chan, spec.ga_budget, rng);
        case BaselineKind::partial:
            opts.movable_p = leading_mask(cfg.n_antennas, spec.rho_fa);
            opts.movable_r = leading_mask(cfg.n_elements, spec.rho_lm);
            break;
    }

    const AOResult ao = alternating_optimize(cfg, geo, *chan_run, sol0, opts);
    BaselineResult out;
    out.sol = ao.sol;
    out.sum_rate = ao.sum_rate;
    out.iters = ao.outer_iters;
    out.trace = ao.trace;
    return out;
}

}  // namespace faslim
