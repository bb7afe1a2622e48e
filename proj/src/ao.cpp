#include "faslim/ao.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "faslim/baselines.hpp"
#include "faslim/errors.hpp"
#include "faslim/gradients.hpp"

namespace faslim {

namespace {

constexpr double kAcceptSlack = 1e-9;    // true-objective acceptance tolerance
constexpr double kRelaxEps = 1e-6;       // interior margin for anchored rows
constexpr double kGammaFloor = -1.0 + 1e-9;
constexpr int kMaxTrustHalvings = 6;
constexpr int kStagePasses = 6;      // convex solves per stage per outer iteration
// Phase iterates live in a thin annulus around the unit circle: the slack
// cap bounds both the modulus drift (so enforcement and the final projection
// stay cheap) and the per-pass rotation (~sqrt(cap) through the linearized
// lower bound).
constexpr double kPhaseSlackCap = 0.02;

double now_ms()
{
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double, std::milli>(clock::now().time_since_epoch()).count();
}

// coefficients of Re{rho * z} over a realified block [offset, offset + 2n)
void add_real_inner(VectorXd& row, const RowVectorXcd& rho, int offset)
{
    const int n = static_cast<int>(rho.size());
    for (int i = 0; i < n; ++i) {
        row[offset + i] += rho[i].real();
        row[offset + n + i] += -rho[i].imag();
    }
}

// |h z|^2 as a rank-2 PSD quadratic over the realified block
void add_abs2_quadratic(MatrixXd& q_mat, const RowVectorXcd& h, int offset)
{
    const int n = static_cast<int>(h.size());
    VectorXd v1 = VectorXd::Zero(q_mat.rows());
    VectorXd v2 = VectorXd::Zero(q_mat.rows());
    for (int i = 0; i < n; ++i) {
        v1[offset + i] = h[i].real();
        v1[offset + n + i] = -h[i].imag();
        v2[offset + i] = h[i].imag();
        v2[offset + n + i] = h[i].real();
    }
    q_mat += v1 * v1.transpose() + v2 * v2.transpose();
}

void write_complex_block(VectorXd& x, const VectorXcd& z, int offset)
{
    const int n = static_cast<int>(z.size());
    for (int i = 0; i < n; ++i) {
        x[offset + i] = z[i].real();
        x[offset + n + i] = z[i].imag();
    }
}

VectorXcd read_complex_block(const VectorXd& x, int offset, int n)
{
    VectorXcd z(n);
    for (int i = 0; i < n; ++i)
        z[i] = {x[offset + i], x[offset + n + i]};
    return z;
}

// Shifts the right-hand side of tagged anchored rows so x0 sits strictly
// inside them; real constraints (power, apertures, spacing, moduli) are
// never touched.
void ensure_interior(ConcaveProgram& prog, const std::vector<int>& relaxable_rows)
{
    for (int idx : relaxable_rows) {
        AffineConstraint& row = prog.affine[static_cast<size_t>(idx)];
        const double slack = row.b - row.a.dot(prog.x0);
        const double need = kRelaxEps * (1.0 + std::abs(row.b));
        if (slack < need)
            row.b += need - slack;
    }
}

double true_sum_rate(const SystemConfig& cfg, const ChannelRealization& chan,
                     const SolutionState& sol)
{
    return sinr_and_rate(effective_channel_matrix(chan, sol.theta), sol.w, cfg.sigma2_w())
        .sum_rate;
}

double modulus_residual(const VectorXcd& theta)
{
    double sum = 0.0;
    for (Eigen::Index m = 0; m < theta.size(); ++m)
        sum += std::abs(std::norm(theta[m]) - 1.0);
    return sum;
}

}  // namespace

SurrogateState SurrogateState::compute(const SystemConfig& cfg, const ChannelRealization& chan,
                                       const SolutionState& sol)
{
    SurrogateState st;
    const int k_count = cfg.n_users;
    const double sigma2 = cfg.sigma2_w();
    st.w_t = sol.w;
    st.theta_t = sol.theta;
    st.p_t = sol.p;
    st.r_t = sol.r;

    const MatrixXcd eff = effective_channel_matrix(chan, sol.theta);
    const MatrixXcd prod = eff * sol.w;
    st.mu_kj = prod;
    st.gamma_t.resize(k_count);
    st.a_t.resize(k_count);
    st.b_t.resize(k_count);
    st.s_kj.resize(k_count, k_count);
    st.v_kj.assign(static_cast<size_t>(k_count), {});
    for (int k = 0; k < k_count; ++k) {
        const MatrixXcd d_k = phase_coupling_matrix(chan, k);
        auto& row = st.v_kj[static_cast<size_t>(k)];
        row.resize(static_cast<size_t>(k_count));
        double interference = 0.0;
        for (int j = 0; j < k_count; ++j) {
            st.s_kj(k, j) = (chan.h[static_cast<size_t>(k)].adjoint() * sol.w.col(j)).value();
            row[static_cast<size_t>(j)] = d_k * sol.w.col(j);
            if (j != k)
                interference += std::norm(prod(k, j));
        }
        st.a_t[k] = std::norm(prod(k, k)) / sigma2;
        st.b_t[k] = interference / sigma2 + 1.0;
        st.gamma_t[k] = st.a_t[k] / st.b_t[k];
    }
    return st;
}

AffineConstraint build_bilinear_sca_constraint(double gamma_t, double b_t, int idx_a,
                                               int idx_b, int idx_gamma, int n_vars)
{
    AffineConstraint row;
    row.a = VectorXd::Zero(n_vars);
    row.a[idx_a] = -1.0;
    row.a[idx_gamma] = b_t;
    row.a[idx_b] = gamma_t;
    row.b = gamma_t * b_t;
    return row;
}

// ---------------------------------------------------------------------------
// beamforming block

SubproblemResult solve_beamforming_subproblem(const SystemConfig& cfg,
                                              const ChannelRealization& chan,
                                              const SolutionState& sol,
                                              const SurrogateState& state)
{
    const int n_ant = cfg.n_antennas;
    const int k_count = cfg.n_users;
    const double pmax = cfg.pmax_w();
    const double inv_sigma = 1.0 / cfg.sigma2_w();
    const double inv_sigma_rt = std::sqrt(inv_sigma);

    const int w_vars = 2 * n_ant * k_count;
    const int n_vars = w_vars + 3 * k_count;
    const auto off_w = [n_ant](int k) { return 2 * n_ant * k; };
    const auto idx_a = [&](int k) { return w_vars + k; };
    const auto idx_b = [&](int k) { return w_vars + k_count + k; };
    const auto idx_g = [&](int k) { return w_vars + 2 * k_count + k; };

    // anchor: current beamformers pulled strictly inside the power ball
    MatrixXcd w0 = state.w_t;
    const double w0_power = w0.squaredNorm();
    if (w0_power > pmax * (1.0 - 1e-9))
        w0 *= std::sqrt(pmax * (1.0 - 1e-9) / w0_power);

    const MatrixXcd eff = effective_channel_matrix(chan, sol.theta);
    std::vector<RowVectorXcd> eff_scaled(static_cast<size_t>(k_count));
    for (int k = 0; k < k_count; ++k)
        eff_scaled[static_cast<size_t>(k)] = eff.row(k) * inv_sigma_rt;

    ConcaveProgram prog;
    prog.n_vars = n_vars;
    prog.linear_objective = VectorXd::Zero(n_vars);
    prog.x0 = VectorXd::Zero(n_vars);
    for (int k = 0; k < k_count; ++k)
        prog.log_terms.push_back({1.0 / std::log(2.0), idx_g(k)});

    // power budget
    {
        QuadConstraint power;
        power.Q = MatrixXd::Zero(n_vars, n_vars);
        power.Q.topLeftCorner(w_vars, w_vars).setIdentity();
        power.q = VectorXd::Zero(n_vars);
        power.c = pmax;
        prog.quad.push_back(std::move(power));
    }

    std::vector<int> relaxable;
    for (int k = 0; k < k_count; ++k) {
        const auto ku = static_cast<size_t>(k);
        // interference bound: sum_{j != k} |h w_j|^2 - b_k <= -1
        QuadConstraint intf;
        intf.Q = MatrixXd::Zero(n_vars, n_vars);
        intf.q = VectorXd::Zero(n_vars);
        for (int j = 0; j < k_count; ++j)
            if (j != k)
                add_abs2_quadratic(intf.Q, eff_scaled[ku], off_w(j));
        intf.q[idx_b(k)] = -1.0;
        intf.c = -1.0;
        prog.quad.push_back(std::move(intf));

        // bilinear SCA row
        relaxable.push_back(static_cast<int>(prog.affine.size()));
        prog.affine.push_back(build_bilinear_sca_constraint(state.gamma_t[k], state.b_t[k],
                                                            idx_a(k), idx_b(k), idx_g(k),
                                                            n_vars));

        // signal lower-linearization: a_k <= |s_t|^2 + 2 Re{conj(s_t) h (w_k - w0_k)}
        const std::complex<double> s_t = (eff_scaled[ku] * w0.col(k)).value();
        AffineConstraint sig;
        sig.a = VectorXd::Zero(n_vars);
        sig.a[idx_a(k)] = 1.0;
        add_real_inner(sig.a, (-2.0 * std::conj(s_t)) * eff_scaled[ku], off_w(k));
        sig.b = -std::norm(s_t);
        relaxable.push_back(static_cast<int>(prog.affine.size()));
        prog.affine.push_back(std::move(sig));

        // generous cap keeps the feasible set bounded in b_k
        AffineConstraint cap;
        cap.a = VectorXd::Zero(n_vars);
        cap.a[idx_b(k)] = 1.0;
        cap.b = 10.0 * (1.0 + pmax * eff_scaled[ku].squaredNorm()) + 10.0 * state.b_t[k];
        prog.affine.push_back(std::move(cap));

        prog.lower_bounds.push_back({idx_g(k), kGammaFloor});
    }

    // start at the anchor with inflated interference slack
    for (int k = 0; k < k_count; ++k) {
        write_complex_block(prog.x0, w0.col(k), off_w(k));
        double intf = 0.0;
        for (int j = 0; j < k_count; ++j)
            if (j != k)
                intf += std::norm((eff_scaled[static_cast<size_t>(k)] * w0.col(j)).value());
        const double a0 = std::norm((eff_scaled[static_cast<size_t>(k)] * w0.col(k)).value());
        const double b0 = (intf + 1.0) * (1.0 + kRelaxEps);
        prog.x0[idx_a(k)] = a0;
        prog.x0[idx_b(k)] = b0;
        prog.x0[idx_g(k)] = a0 / b0;
    }
    ensure_interior(prog, relaxable);

    const SolverResult res = solve_concave_program(prog);
    if (res.status == SolveStatus::numerical_failure)
        throw SolverError("beamforming subproblem: numerical failure in barrier solver");

    SubproblemResult out;
    out.sol = sol;
    out.a.resize(k_count);
    out.b.resize(k_count);
    out.gamma.resize(k_count);
    MatrixXcd w_new(n_ant, k_count);
    for (int k = 0; k < k_count; ++k) {
        w_new.col(k) = read_complex_block(res.x, off_w(k), n_ant);
        out.a[k] = res.x[idx_a(k)];
        out.b[k] = res.x[idx_b(k)];
        out.gamma[k] = res.x[idx_g(k)];
    }
    out.objective = res.objective;

    // safeguarded acceptance on the true rate
    const double rate_prev = true_sum_rate(cfg, chan, sol);
    SolutionState cand = sol;
    cand.w = w_new;
    double rate_new = true_sum_rate(cfg, chan, cand);
    double shrink = 1.0;
    while (rate_new < rate_prev - kAcceptSlack && shrink > 1e-9) {
        shrink *= 0.5;
        cand.w = state.w_t + shrink * (w_new - state.w_t);
        rate_new = true_sum_rate(cfg, chan, cand);
    }
    if (rate_new < rate_prev - kAcceptSlack) {
        cand.w = state.w_t;
        rate_new = rate_prev;
        out.step_accepted = false;
    } else {
        out.step_accepted = true;
    }
    out.sol = cand;
    out.sum_rate = rate_new;
    return out;
}

// ---------------------------------------------------------------------------
// phase block

SubproblemResult solve_phase_subproblem(const SystemConfig& cfg,
                                        const ChannelRealization& chan,
                                        const SolutionState& sol,
                                        const SurrogateState& state,
                                        double xi_override)
{
    const int m_count = cfg.n_elements;
    const int k_count = cfg.n_users;
    const double inv_sigma = 1.0 / cfg.sigma2_w();
    const double xi = xi_override > 0.0 ? xi_override : cfg.xi;

    const int theta_vars = 2 * m_count;
    const int n_vars = theta_vars + 3 * k_count + m_count;
    const auto idx_a = [&](int k) { return theta_vars + k; };
    const auto idx_b = [&](int k) { return theta_vars + k_count + k; };
    const auto idx_g = [&](int k) { return theta_vars + 2 * k_count + k; };
    const auto idx_c = [&](int m) { return theta_vars + 3 * k_count + m; };

    const VectorXcd& theta0 = state.theta_t;
    VectorXcd theta_start = theta0;  // pulled strictly inside the annulus
    for (int m = 0; m < m_count; ++m) {
        const double mag = std::abs(theta_start[m]);
        const double lo = std::sqrt(1.0 - 0.9 * kPhaseSlackCap);
        if (mag > 1.0 - 1e-9)
            theta_start[m] *= (1.0 - 1e-9) / mag;
        else if (mag < lo)
            theta_start[m] = mag > 0.0 ? std::complex<double>(theta_start[m] * (lo / mag))
                                       : std::complex<double>(lo, 0.0);
    }

    ConcaveProgram prog;
    prog.n_vars = n_vars;
    prog.linear_objective = VectorXd::Zero(n_vars);
    prog.x0 = VectorXd::Zero(n_vars);
    for (int k = 0; k < k_count; ++k)
        prog.log_terms.push_back({1.0 / std::log(2.0), idx_g(k)});
    for (int m = 0; m < m_count; ++m)
        prog.linear_objective[idx_c(m)] = -xi;

    std::vector<int> relaxable;
    for (int k = 0; k < k_count; ++k) {
        const auto ku = static_cast<size_t>(k);
        // signal surrogate: a_k <= |mu_kk|^2 + 2 Re{mu* v^T (theta - theta0)}
        {
            const std::complex<double> mu = state.mu_kj(k, k);
            const RowVectorXcd vrow = state.v_kj[ku][ku].transpose();
            AffineConstraint sig;
            sig.a = VectorXd::Zero(n_vars);
            sig.a[idx_a(k)] = 1.0;
            const RowVectorXcd rho = (-2.0 * inv_sigma * std::conj(mu)) * vrow;
            add_real_inner(sig.a, rho, 0);
            sig.b = inv_sigma * std::norm(mu) +
                    (rho * theta0).value().real();
            relaxable.push_back(static_cast<int>(prog.affine.size()));
            prog.affine.push_back(std::move(sig));
        }
        // interference surrogate: b_k >= sum_{j != k} f~_kj + 1
        {
            AffineConstraint intf;
            intf.a = VectorXd::Zero(n_vars);
            intf.a[idx_b(k)] = -1.0;
            double rhs = -1.0;
            for (int j = 0; j < k_count; ++j) {
                if (j == k)
                    continue;
                const auto ju = static_cast<size_t>(j);
                const std::complex<double> mu = state.mu_kj(k, j);
                const RowVectorXcd vrow = state.v_kj[ku][ju].transpose();
                const RowVectorXcd rho = (2.0 * inv_sigma * std::conj(mu)) * vrow;
                add_real_inner(intf.a, rho, 0);
                rhs -= inv_sigma * std::norm(mu) - (rho * theta0).value().real();
            }
            intf.b = rhs;
            relaxable.push_back(static_cast<int>(prog.affine.size()));
            prog.affine.push_back(std::move(intf));
        }
        // affine surrogates can dip below the noise floor; keep b_k >= 1
        {
            AffineConstraint floor_row;
            floor_row.a = VectorXd::Zero(n_vars);
            floor_row.a[idx_b(k)] = -1.0;
            floor_row.b = -1.0;
            relaxable.push_back(static_cast<int>(prog.affine.size()));
            prog.affine.push_back(std::move(floor_row));
        }
        relaxable.push_back(static_cast<int>(prog.affine.size()));
        prog.affine.push_back(build_bilinear_sca_constraint(state.gamma_t[k], state.b_t[k],
                                                            idx_a(k), idx_b(k), idx_g(k),
                                                            n_vars));
        // b cap (assumes |theta_m| stays below ~2, far outside the penalty optimum)
        {
            double reach = 0.0;
            for (int j = 0; j < k_count; ++j) {
                if (j == k)
                    continue;
                const auto ju = static_cast<size_t>(j);
                const double l1 = state.v_kj[ku][ju].cwiseAbs().sum();
                const double peak = std::abs(state.mu_kj(k, j)) + 3.0 * l1;
                reach += peak * peak;
            }
            AffineConstraint cap;
            cap.a = VectorXd::Zero(n_vars);
            cap.a[idx_b(k)] = 1.0;
            cap.b = 10.0 * (1.0 + inv_sigma * reach) + 10.0 * state.b_t[k];
            prog.affine.push_back(std::move(cap));
        }
        prog.lower_bounds.push_back({idx_g(k), kGammaFloor});
    }

    for (int m = 0; m < m_count; ++m) {
        // hard passive cap |theta_m|^2 <= 1: tighter than the relaxed
        // |theta_m|^2 <= 1 + c_m and keeps relaxed iterates from borrowing
        // rate through amplification
        QuadConstraint modulus;
        modulus.Q = MatrixXd::Zero(n_vars, n_vars);
        modulus.Q(m, m) = 1.0;
        modulus.Q(m_count + m, m_count + m) = 1.0;
        modulus.q = VectorXd::Zero(n_vars);
        modulus.c = 1.0;
        prog.quad.push_back(std::move(modulus));

        // linearized |theta_m|^2 >= 1 - c_m
        AffineConstraint pccp;
        pccp.a = VectorXd::Zero(n_vars);
        RowVectorXcd rho = RowVectorXcd::Zero(m_count);
        rho[m] = -2.0 * std::conj(theta0[m]);
        add_real_inner(pccp.a, rho, 0);
        pccp.a[idx_c(m)] = -1.0;
        pccp.b = -1.0 - std::norm(theta0[m]);
        relaxable.push_back(static_cast<int>(prog.affine.size()));
        prog.affine.push_back(std::move(pccp));

        AffineConstraint slack_cap;
        slack_cap.a = VectorXd::Zero(n_vars);
        slack_cap.a[idx_c(m)] = 1.0;
        slack_cap.b = kPhaseSlackCap;
        prog.affine.push_back(std::move(slack_cap));

        prog.lower_bounds.push_back({idx_c(m), 0.0});
    }

    write_complex_block(prog.x0, theta_start, 0);
    for (int k = 0; k < k_count; ++k) {
        prog.x0[idx_a(k)] = state.a_t[k];
        prog.x0[idx_b(k)] = state.b_t[k] * (1.0 + kRelaxEps);
        prog.x0[idx_g(k)] = state.gamma_t[k];
    }
    for (int m = 0; m < m_count; ++m)
        prog.x0[idx_c(m)] = std::min(std::abs(std::norm(theta_start[m]) - 1.0) + kRelaxEps,
                                     kPhaseSlackCap * (1.0 - 1e-3));
    ensure_interior(prog, relaxable);

    const SolverResult res = solve_concave_program(prog);
    if (res.status == SolveStatus::numerical_failure)
        throw SolverError("phase subproblem: numerical failure in barrier solver");

    SubproblemResult out;
    out.a.resize(k_count);
    out.b.resize(k_count);
    out.gamma.resize(k_count);
    VectorXcd theta_new = read_complex_block(res.x, 0, m_count);
    for (int k = 0; k < k_count; ++k) {
        out.a[k] = res.x[idx_a(k)];
        out.b[k] = res.x[idx_b(k)];
        out.gamma[k] = res.x[idx_g(k)];
        // flag when the affine interference surrogate went below the noise
        // floor at the solution (the b_k >= sigma^2 row then carries it)
        double surrogate = 0.0;
        for (int j = 0; j < k_count; ++j) {
            if (j == k)
                continue;
            const auto ju = static_cast<size_t>(j);
            const std::complex<double> mu = state.mu_kj(k, j);
            const std::complex<double> shift =
                (state.v_kj[static_cast<size_t>(k)][ju].transpose() * (theta_new - theta0))
                    .value();
            surrogate += inv_sigma * (std::norm(mu) + 2.0 * std::real(std::conj(mu) * shift));
        }
        if (surrogate < 0.0)
            out.b_row_clamped = true;
    }
    out.objective = res.objective;

    // acceptance: the rate and the penalized objective may not decrease, and
    // the off-circle residual may not grow (rotations are free, transient
    // absorption is not: it cannot be clawed back monotonically later)
    const double rate_prev = true_sum_rate(cfg, chan, sol);
    const double res_prev = modulus_residual(theta0);
    const double pen_prev = rate_prev - xi * res_prev;
    const double res_allow = res_prev + 1e-5;
    SolutionState cand = sol;
    cand.theta = theta_new;
    double rate_new = true_sum_rate(cfg, chan, cand);
    double pen_new = rate_new - xi * modulus_residual(cand.theta);
    double shrink = 1.0;
    auto rejected = [&] {
        return rate_new < rate_prev - kAcceptSlack || pen_new < pen_prev - kAcceptSlack ||
               modulus_residual(cand.theta) > res_allow;
    };
    while (rejected() && shrink > 1e-9) {
        shrink *= 0.5;
        cand.theta = theta0 + shrink * (theta_new - theta0);
        rate_new = true_sum_rate(cfg, chan, cand);
        pen_new = rate_new - xi * modulus_residual(cand.theta);
    }
    if (rejected()) {
        cand.theta = theta0;
        rate_new = rate_prev;
        out.step_accepted = false;
    } else {
        out.step_accepted = true;
    }
    out.sol = cand;
    out.sum_rate = rate_new;
    return out;
}

// ---------------------------------------------------------------------------
// position block

namespace {

struct PositionProgram {
    ConcaveProgram prog;
    std::vector<int> movable_p_idx, movable_r_idx;
    int base_r = 0, aux = 0;
};

PositionProgram build_position_program(const SystemConfig& cfg, const LinkGeometry& geo,
                                       const ChannelRealization& chan,
                                       const SolutionState& sol, const SurrogateState& state,
                                       double trust_radius, const std::vector<bool>& movable_p,
                                       const std::vector<bool>& movable_r)
{
    const int k_count = cfg.n_users;
    const double inv_sigma = 1.0 / cfg.sigma2_w();

    PositionProgram pp;
    for (int n = 0; n < cfg.n_antennas; ++n)
        if (movable_p[static_cast<size_t>(n)])
            pp.movable_p_idx.push_back(n);
    for (int m = 0; m < cfg.n_elements; ++m)
        if (movable_r[static_cast<size_t>(m)])
            pp.movable_r_idx.push_back(m);
    const int np = static_cast<int>(pp.movable_p_idx.size());
    const int nr = static_cast<int>(pp.movable_r_idx.size());
    pp.base_r = 2 * np;
    pp.aux = 2 * (np + nr);
    const int n_vars = pp.aux + 3 * k_count;
    const auto idx_a = [&](int k) { return pp.aux + k; };
    const auto idx_b = [&](int k) { return pp.aux + k_count + k; };
    const auto idx_g = [&](int k) { return pp.aux + 2 * k_count + k; };

    ConcaveProgram& prog = pp.prog;
    prog.n_vars = n_vars;
    prog.linear_objective = VectorXd::Zero(n_vars);
    prog.x0 = VectorXd::Zero(n_vars);
    for (int k = 0; k < k_count; ++k)
        prog.log_terms.push_back({1.0 / std::log(2.0), idx_g(k)});

    // analytic gradients of every |h^eff w_j|^2 at the anchor
    PositionGradientEngine engine(cfg, geo, chan, sol);
    std::vector<std::vector<PositionGradient>> grads(static_cast<size_t>(k_count));
    for (int k = 0; k < k_count; ++k) {
        grads[static_cast<size_t>(k)].reserve(static_cast<size_t>(k_count));
        for (int j = 0; j < k_count; ++j)
            grads[static_cast<size_t>(k)].push_back(engine.grad_g(k, j));
    }

    // scaled affine form of g~_kj over the movable coordinates; returns the
    // constant part at the anchor and fills coefficients
    auto surrogate_row = [&](int k, int j, VectorXd& coeffs) {
        const PositionGradient& g = grads[static_cast<size_t>(k)][static_cast<size_t>(j)];
        double constant = inv_sigma * std::norm(state.mu_kj(k, j));
        for (int i = 0; i < np; ++i) {
            const int n = pp.movable_p_idx[static_cast<size_t>(i)];
            const Vec2 grad = inv_sigma * g.d_p[static_cast<size_t>(n)];
            coeffs[2 * i] += grad.x;
            coeffs[2 * i + 1] += grad.y;
            constant -= grad.x * state.p_t[static_cast<size_t>(n)].x +
                        grad.y * state.p_t[static_cast<size_t>(n)].y;
        }
        for (int i = 0; i < nr; ++i) {
            const int m = pp.movable_r_idx[static_cast<size_t>(i)];
            const Vec2 grad = inv_sigma * g.d_r[static_cast<size_t>(m)];
            coeffs[pp.base_r + 2 * i] += grad.x;
            coeffs[pp.base_r + 2 * i + 1] += grad.y;
            constant -= grad.x * state.r_t[static_cast<size_t>(m)].x +
                        grad.y * state.r_t[static_cast<size_t>(m)].y;
        }
        return constant;
    };

    std::vector<int> relaxable;
    for (int k = 0; k < k_count; ++k) {
        // a_k <= g~_kk
        {
            AffineConstraint sig;
            VectorXd coeffs = VectorXd::Zero(n_vars);
            const double constant = surrogate_row(k, k, coeffs);
            sig.a = -coeffs;
            sig.a[idx_a(k)] = 1.0;
            sig.b = constant;
            relaxable.push_back(static_cast<int>(prog.affine.size()));
            prog.affine.push_back(std::move(sig));
        }
        // b_k >= sum_{j != k} g~_kj + 1
        {
            AffineConstraint intf;
            intf.a = VectorXd::Zero(n_vars);
            intf.a[idx_b(k)] = -1.0;
            double rhs = -1.0;
            double reach = 1.0;
            for (int j = 0; j < k_count; ++j) {
                if (j == k)
                    continue;
                VectorXd coeffs = VectorXd::Zero(n_vars);
                rhs -= surrogate_row(k, j, coeffs);
                intf.a += coeffs;
                reach += inv_sigma * std::norm(state.mu_kj(k, j)) +
                         coeffs.cwiseAbs().sum() * trust_radius;
            }
            intf.b = rhs;
            relaxable.push_back(static_cast<int>(prog.affine.size()));
            prog.affine.push_back(std::move(intf));

            AffineConstraint floor_row;
            floor_row.a = VectorXd::Zero(n_vars);
            floor_row.a[idx_b(k)] = -1.0;
            floor_row.b = -1.0;
            relaxable.push_back(static_cast<int>(prog.affine.size()));
            prog.affine.push_back(std::move(floor_row));

            AffineConstraint cap;
            cap.a = VectorXd::Zero(n_vars);
            cap.a[idx_b(k)] = 1.0;
            cap.b = 10.0 * (reach + state.b_t[k] + 1.0);
            prog.affine.push_back(std::move(cap));
        }
        relaxable.push_back(static_cast<int>(prog.affine.size()));
        prog.affine.push_back(build_bilinear_sca_constraint(state.gamma_t[k], state.b_t[k],
                                                            idx_a(k), idx_b(k), idx_g(k),
                                                            n_vars));
        prog.lower_bounds.push_back({idx_g(k), kGammaFloor});
    }

    // spacing linearizations, aperture boxes and the trust region
    auto add_spacing_rows = [&](const std::vector<Vec2>& pts, const std::vector<bool>& movable,
                                const std::vector<int>& mv_idx, int block_base, double dth) {
        const double dth_eff = dth - 1e-9 * std::max(1.0, dth);
        std::vector<int> pos_of(pts.size(), -1);
        for (size_t i = 0; i < mv_idx.size(); ++i)
            pos_of[static_cast<size_t>(mv_idx[i])] = static_cast<int>(i);
        for (size_t i = 0; i < pts.size(); ++i) {
            for (size_t j = i + 1; j < pts.size(); ++j) {
                if (!movable[i] && !movable[j])
                    continue;
                const Vec2 delta = pts[i] - pts[j];
                AffineConstraint row;
                row.a = VectorXd::Zero(n_vars);
                double rhs = -dot(delta, delta) - dth_eff;
                if (movable[i]) {
                    const int slot = block_base + 2 * pos_of[i];
                    row.a[slot] -= 2.0 * delta.x;
                    row.a[slot + 1] -= 2.0 * delta.y;
                } else {
                    rhs += 2.0 * dot(delta, pts[i]);
                }
                if (movable[j]) {
                    const int slot = block_base + 2 * pos_of[j];
                    row.a[slot] += 2.0 * delta.x;
                    row.a[slot + 1] += 2.0 * delta.y;
                } else {
                    rhs -= 2.0 * dot(delta, pts[j]);
                }
                row.b = rhs;
                prog.affine.push_back(std::move(row));
            }
        }
    };
    add_spacing_rows(state.p_t, movable_p, pp.movable_p_idx, 0, cfg.dth_fa);
    add_spacing_rows(state.r_t, movable_r, pp.movable_r_idx, pp.base_r, cfg.dth_lm);

    auto add_box_rows = [&](int slot, double center, double half_width, double anchor) {
        AffineConstraint hi;
        hi.a = VectorXd::Zero(n_vars);
        hi.a[slot] = 1.0;
        hi.b = center + half_width;
        prog.affine.push_back(std::move(hi));
        AffineConstraint lo;
        lo.a = VectorXd::Zero(n_vars);
        lo.a[slot] = -1.0;
        lo.b = -(center - half_width);
        prog.affine.push_back(std::move(lo));
        // trust region around the anchor
        AffineConstraint t_hi;
        t_hi.a = VectorXd::Zero(n_vars);
        t_hi.a[slot] = 1.0;
        t_hi.b = anchor + trust_radius;
        prog.affine.push_back(std::move(t_hi));
        AffineConstraint t_lo;
        t_lo.a = VectorXd::Zero(n_vars);
        t_lo.a[slot] = -1.0;
        t_lo.b = -(anchor - trust_radius);
        prog.affine.push_back(std::move(t_lo));
    };
    for (int i = 0; i < np; ++i) {
        const auto n = static_cast<size_t>(pp.movable_p_idx[static_cast<size_t>(i)]);
        add_box_rows(2 * i, 0.0, cfg.aperture_fa.x / 2.0, state.p_t[n].x);
        add_box_rows(2 * i + 1, 0.0, cfg.aperture_fa.y / 2.0, state.p_t[n].y);
    }
    for (int i = 0; i < nr; ++i) {
        const auto m = static_cast<size_t>(pp.movable_r_idx[static_cast<size_t>(i)]);
        add_box_rows(pp.base_r + 2 * i, 0.0, cfg.aperture_lm.x / 2.0, state.r_t[m].x);
        add_box_rows(pp.base_r + 2 * i + 1, 0.0, cfg.aperture_lm.y / 2.0, state.r_t[m].y);
    }

    for (int i = 0; i < np; ++i) {
        const auto n = static_cast<size_t>(pp.movable_p_idx[static_cast<size_t>(i)]);
        prog.x0[2 * i] = state.p_t[n].x;
        prog.x0[2 * i + 1] = state.p_t[n].y;
    }
    for (int i = 0; i < nr; ++i) {
        const auto m = static_cast<size_t>(pp.movable_r_idx[static_cast<size_t>(i)]);
        prog.x0[pp.base_r + 2 * i] = state.r_t[m].x;
        prog.x0[pp.base_r + 2 * i + 1] = state.r_t[m].y;
    }
    for (int k = 0; k < k_count; ++k) {
        prog.x0[idx_a(k)] = state.a_t[k];
        prog.x0[idx_b(k)] = state.b_t[k] * (1.0 + kRelaxEps);
        prog.x0[idx_g(k)] = state.gamma_t[k];
    }
    ensure_interior(prog, relaxable);
    return pp;
}

}  // namespace

PositionStepResult solve_position_subproblem(const SystemConfig& cfg, const LinkGeometry& geo,
                                             const ChannelRealization& chan,
                                             const SolutionState& sol,
                                             const SurrogateState& state,
                                             double& trust_radius,
                                             const std::vector<bool>& movable_p,
                                             const std::vector<bool>& movable_r)
{
    const int k_count = cfg.n_users;
    PositionStepResult out;
    out.chan = chan;
    out.sub.sol = sol;
    out.sub.sum_rate = true_sum_rate(cfg, chan, sol);
    out.sub.a = state.a_t;
    out.sub.b = state.b_t;
    out.sub.gamma = state.gamma_t;

    const double trust_floor = cfg.lambda_m * 1e-6;
    const double trust_cap = cfg.lambda_m / 4.0;
    const double rate_prev = out.sub.sum_rate;

    for (int attempt = 0; attempt <= kMaxTrustHalvings; ++attempt) {
        PositionProgram pp;
        try {
            pp = build_position_program(cfg, geo, chan, sol, state, trust_radius, movable_p,
                                        movable_r);
        } catch (const ModelError&) {
            out.gradient_failure = true;  // coincident points or singular root derivative
            return out;
        }
        const SolverResult res = solve_concave_program(pp.prog);
        if (res.status == SolveStatus::numerical_failure)
            throw SolverError("position subproblem: numerical failure in barrier solver");

        SolutionState cand = sol;
        for (size_t i = 0; i < pp.movable_p_idx.size(); ++i) {
            const auto n = static_cast<size_t>(pp.movable_p_idx[i]);
            cand.p[n] = {res.x[2 * static_cast<int>(i)], res.x[2 * static_cast<int>(i) + 1]};
        }
        for (size_t i = 0; i < pp.movable_r_idx.size(); ++i) {
            const auto m = static_cast<size_t>(pp.movable_r_idx[i]);
            cand.r[m] = {res.x[pp.base_r + 2 * static_cast<int>(i)],
                         res.x[pp.base_r + 2 * static_cast<int>(i) + 1]};
        }
        ChannelRealization chan_new = assemble_channels(cfg, geo, cand.p, cand.r, chan.draw,
                                                        chan.correlation_enabled);
        const double rate_new = true_sum_rate(cfg, chan_new, cand);
        if (rate_new <= rate_prev + kAcceptSlack && rate_new >= rate_prev - kAcceptSlack) {
            // no measurable gain: stay put instead of letting the barrier
            // drift the layout toward the analytic center
            out.sub.step_accepted = true;
            return out;
        }
        if (rate_new >= rate_prev - kAcceptSlack) {
            out.sub.sol = cand;
            out.sub.sum_rate = rate_new;
            out.sub.objective = res.objective;
            out.sub.step_accepted = true;
            out.chan = std::move(chan_new);
            for (int k = 0; k < k_count; ++k) {
                out.sub.a[k] = res.x[pp.aux + k];
                out.sub.b[k] = res.x[pp.aux + k_count + k];
                out.sub.gamma[k] = res.x[pp.aux + 2 * k_count + k];
            }
            trust_radius = std::min(trust_radius * 1.5, trust_cap);
            return out;
        }
        trust_radius = std::max(trust_radius / 2.0, trust_floor);
    }
    // every radius was rejected around this anchor; start fresh next time so
    // one bad anchor does not disable the stage for the rest of the run
    trust_radius = cfg.lambda_m / 8.0;
    return out;  // keep previous positions
}

// ---------------------------------------------------------------------------
// alternating loop

AOResult alternating_optimize(const SystemConfig& cfg, const LinkGeometry& geo,
                              const ChannelRealization& chan0, const SolutionState& sol0,
                              const AOOptions& options)
{
    AOResult out;
    SolutionState sol = sol0;
    ChannelRealization chan = chan0;

    std::vector<bool> movable_p = options.movable_p.empty()
                                      ? std::vector<bool>(static_cast<size_t>(cfg.n_antennas), true)
                                      : options.movable_p;
    std::vector<bool> movable_r = options.movable_r.empty()
                                      ? std::vector<bool>(static_cast<size_t>(cfg.n_elements), true)
                                      : options.movable_r;
    const bool any_movable =
        std::any_of(movable_p.begin(), movable_p.end(), [](bool b) { return b; }) ||
        std::any_of(movable_r.begin(), movable_r.end(), [](bool b) { return b; });

    double rate = true_sum_rate(cfg, chan, sol);
    auto push_trace = [&](int iter, const char* stage, double objective, double stage_ms) {
        if (!options.record_trace)
            return;
        TraceRow row;
        row.iter = iter;
        row.stage = stage;
        row.sum_rate = rate;
        row.objective = objective;
        row.penalty = modulus_residual(sol.theta);
        row.violation = check_feasibility(cfg, sol).worst_physical();
        row.ms = stage_ms;
        out.trace.rows.push_back(std::move(row));
    };
    push_trace(0, "init", rate, 0.0);

    SolutionState best_sol = sol;
    ChannelRealization best_chan = chan;
    double best_rate = rate;

    double trust_radius = cfg.lambda_m / 8.0;
    double prev_rate = rate;
    int consecutive_small = 0;
    // Penalty schedule: explore at a small weight while the rate still moves
    // (the linearized unit-modulus bound prices a rotation by phi at
    // xi*phi^2, so the full weight would freeze the phases), then grow it to
    // the configured value before termination is allowed.
    double xi_eff = std::min(0.05, cfg.xi);

    for (int iter = 1; iter <= options.i_outer; ++iter) {
        out.outer_iters = iter;
        try {
            // each stage repeats its convex solve with fresh anchors while it
            // keeps paying; a single pass per iteration moves the phases by
            // at most ~sqrt(slack cap) radians and strands most of the gain
            const double stage_tol = std::max(1e-6, options.rel_tol * 0.1 * std::abs(rate));
            if (options.optimize_w) {
                // early iterations get one pass only: letting the beamformers
                // converge against the initial geometry digs interference
                // nulls that freeze the position stage for the rest of the
                // run; afterwards extra passes speed the plateau
                const double t0 = now_ms();
                const int w_passes = iter <= 3 ? 1 : kStagePasses;
                SubproblemResult r;
                for (int pass = 0; pass < w_passes; ++pass) {
                    const SurrogateState state = SurrogateState::compute(cfg, chan, sol);
                    r = solve_beamforming_subproblem(cfg, chan, sol, state);
                    const double gain = r.sum_rate - rate;
                    sol = r.sol;
                    rate = r.sum_rate;
                    if (gain < stage_tol)
                        break;
                }
                // the signal linearization is flat at w_k = 0, so a user whose
                // beam collapsed can never be revived from this anchor; when
                // zero-forcing is available, retry once from its anchor and
                // keep the better block
                if (cfg.n_users > 1 && cfg.n_users <= cfg.n_antennas) {

                    const RateReport rep = sinr_and_rate(
                        effective_channel_matrix(chan, sol.theta), sol.w, cfg.sigma2_w());
                    if (rep.sinr.minCoeff() < 1e-3 && rep.sinr.maxCoeff() > 10.0) {
                        try {
                            SolutionState anchor = sol;
                            anchor.w = zf_beamforming(
                                effective_channel_matrix(chan, anchor.theta), cfg.pmax_w());
                            const SurrogateState zf_state =
                                SurrogateState::compute(cfg, chan, anchor);
                            const SubproblemResult rz =
                                solve_beamforming_subproblem(cfg, chan, anchor, zf_state);
                            if (rz.sum_rate > rate) {
                                sol = rz.sol;
                                rate = rz.sum_rate;
                                r = rz;
                            }
                        } catch (const ModelError&) {
                            // rank-deficient effective channel: keep the block
                        }
                    }
                }
                push_trace(iter, "w", r.objective, now_ms() - t0);
            }
            if (options.optimize_theta) {
                const double t0 = now_ms();
                double objective = 0.0;
                for (int pass = 0; pass < kStagePasses; ++pass) {
                    const SurrogateState state = SurrogateState::compute(cfg, chan, sol);
                    const SubproblemResult r =
                        solve_phase_subproblem(cfg, chan, sol, state, xi_eff);
                    const double gain = r.sum_rate - rate;
                    sol = r.sol;
                    rate = r.sum_rate;
                    objective = r.objective;
                    if (gain < stage_tol)
                        break;
                }
                push_trace(iter, "theta", objective, now_ms() - t0);
            }
            if (any_movable) {
                const double t0 = now_ms();
                double objective = 0.0;
                for (int pass = 0; pass < kStagePasses; ++pass) {
                    trust_radius = std::max(trust_radius, cfg.lambda_m / 32.0);
                    const SurrogateState state = SurrogateState::compute(cfg, chan, sol);
                    PositionStepResult r = solve_position_subproblem(cfg, geo, chan, sol,
                                                                     state, trust_radius,
                                                                     movable_p, movable_r);
                    const double gain = r.sub.sum_rate - rate;
                    sol = r.sub.sol;
                    chan = std::move(r.chan);
                    rate = r.sub.sum_rate;
                    objective = r.sub.objective;
                    if (gain < stage_tol)
                        break;
                }
                push_trace(iter, "positions", objective, now_ms() - t0);
            }
        } catch (const SolverError&) {
            out.failed = true;
            break;
        }

        if (rate > best_rate) {
            best_rate = rate;
            best_sol = sol;
            best_chan = chan;
        }
        const double rel = std::abs(rate - prev_rate) / std::max(std::abs(prev_rate), 1e-9);
        consecutive_small = rel <= options.rel_tol ? consecutive_small + 1 : 0;
        prev_rate = rate;
        if (consecutive_small >= 2) {
            if (!options.optimize_theta || xi_eff >= cfg.xi)
                break;
            xi_eff = std::min(cfg.xi, std::max(1.0, xi_eff) * 10.0);
            consecutive_small = 0;
        }
    }

    out.pre_projection_rate = best_rate;
    FeasibilityReport rep = check_feasibility(cfg, best_sol);
    out.pre_projection_modulus_dev = rep.modulus_deviation;

    // exact unit modulus for the reported solution
    for (Eigen::Index m = 0; m < best_sol.theta.size(); ++m) {
        const double mag = std::abs(best_sol.theta[m]);
        if (mag > 1e-12)
            best_sol.theta[m] /= mag;
    }
    out.sum_rate = true_sum_rate(cfg, best_chan, best_sol);
    out.sol = std::move(best_sol);
    out.chan = std::move(best_chan);
    return out;
}

}  // namespace faslim
