#include "cuspvb/cavi.hpp"

#include <algorithm>

#include <cmath>
#include <iostream>
#include <stdexcept>

#include "cuspvb/kernels.hpp"
#include "cuspvb/rng.hpp"

namespace cuspvb {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

void matvec(const Matrix& a, const double* x, double* out) {
    for (std::size_t i = 0; i < a.rows(); ++i) out[i] = kernels::dot(a.row(i), x, a.cols());
}

// G = mu_eta^T mu_eta + n V_eta = sum_i E[eta_i eta_i^T]
Matrix expected_gram_eta(const VariationalState& s) {
    Matrix g = matmul_tn(s.mu_eta, s.mu_eta);
    const double n = static_cast<double>(s.n());
    kernels::axpy(n, s.V_eta.matrix().data(), g.data(), g.size());
    return g;
}

// row j = mu_eta^T y_{.j}
Matrix data_factor_crossmoment(const Dataset& data, const VariationalState& s) {
    return matmul_tn(data.y, s.mu_eta);
}

// E[lambda_j lambda_j^T] = mu_j mu_j^T + V_j
Matrix expected_lambda_outer(const VariationalState& s, int j) {
    Matrix e = s.V_lambda[j].matrix();
    const double* mu = s.mu_lambda.row(j);
    for (int h = 0; h < s.H(); ++h) kernels::axpy(mu[h], mu, e.row(h), s.H());
    return e;
}

std::vector<double> column_sum_squares(const Matrix& y) {
    std::vector<double> css(y.cols(), 0.0);
    for (std::size_t i = 0; i < y.rows(); ++i)
        kernels::add_squares(y.row(i), css.data(), y.cols());
    return css;
}

// spike mass c_h = sum_{l<=h} kappa_hl and slab mass t_h = sum_{l>h} kappa_hl,
// both as direct sums so neither is contaminated by cancellation in 1 - x
void spike_slab_masses(const Matrix& kappa, std::vector<double>& spike,
                       std::vector<double>& slab) {
    const std::size_t H = kappa.rows();
    spike.assign(H, 0.0);
    slab.assign(H, 0.0);
    for (std::size_t h = 0; h < H; ++h) {
        const double* row = kappa.row(h);
        double c = 0.0, t = 0.0;
        for (std::size_t l = 0; l <= h; ++l) c += row[l];
        for (std::size_t l = h + 1; l < H; ++l) t += row[l];
        spike[h] = c;
        slab[h] = t;
    }
}

// E[lambda_{.h}^T lambda_{.h}] per column
std::vector<double> expected_column_norms(const VariationalState& s) {
    const int p = s.p(), H = s.H();
    std::vector<double> L(H, 0.0);
    for (int j = 0; j < p; ++j) {
        const double* mu = s.mu_lambda.row(j);
        const Matrix& v = s.V_lambda[j].matrix();
        for (int h = 0; h < H; ++h) L[h] += mu[h] * mu[h] + v(h, h);
    }
    return L;
}

double lbeta(double a, double b) {
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

}  // namespace

void Hyperparams::validate() const {
    if (p < 1) throw std::invalid_argument("Hyperparams: p must be >= 1");
    if (H < 2) throw std::invalid_argument("Hyperparams: H must be >= 2");
    if (!(a_sigma > 0.0) || !(b_sigma > 0.0))
        throw std::invalid_argument("Hyperparams: a_sigma, b_sigma must be positive");
    if (!(alpha > 0.0)) throw std::invalid_argument("Hyperparams: alpha must be positive");
    if (!(theta0 > theta_inf) || !(theta_inf > 0.0))
        throw std::invalid_argument("Hyperparams: need theta0 > theta_inf > 0");
}

VariationalState init_state(const Dataset& data, const Hyperparams& hyper,
                            std::uint64_t seed) {
    hyper.validate();
    if (static_cast<int>(data.p()) != hyper.p)
        throw std::invalid_argument("init_state: data has " + std::to_string(data.p()) +
                                    " columns, hyperparameters expect " +
                                    std::to_string(hyper.p));
    if (data.n() < 1) throw std::invalid_argument("init_state: empty dataset");

    const int p = hyper.p, H = hyper.H;
    const int n = static_cast<int>(data.n());
    RngStream rng(seed, stream_tag::init);

    VariationalState s;
    s.mu_lambda = Matrix(p, H);
    for (std::size_t k = 0; k < s.mu_lambda.size(); ++k) s.mu_lambda.data()[k] = rng.normal();
    s.mu_eta = Matrix(n, H);
    for (std::size_t k = 0; k < s.mu_eta.size(); ++k) s.mu_eta.data()[k] = rng.normal();
    s.V_lambda.assign(p, SpdMatrix::identity(H));
    s.V_eta = SpdMatrix::identity(H);
    s.A_sigma = hyper.a_sigma + 0.5 * n;

    // noise rates at the scale of a zero-loadings noise update, so the first
    // loadings update is regularized sanely instead of through E[1/sigma^2]
    // of order n / b_sigma
    std::vector<double> css = column_sum_squares(data.y);
    s.B_sigma.resize(p);
    for (int j = 0; j < p; ++j) s.B_sigma[j] = hyper.b_sigma + 0.5 * css[j];

    // Random truncation commitment: columns above a per-restart cut start in
    // the spike, columns up to it in the slab. A symmetric assignment
    // initialization cannot work here: with a tiny spike variance the first
    // assignment update locks every free column into the slab (or, with sane
    // noise rates, into the spike) and no restart ever separates active from
    // inactive columns. Committed rows let each restart explore one model
    // size and the ELBO pick the winner across restarts.
    const int cut = 1 + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(H - 1));
    s.kappa = Matrix(H, H, 0.0);
    for (int h = 0; h < H; ++h) {
        if (h < cut)
            s.kappa(h, H - 1) = 1.0;  // slab: category beyond the column index
        else
            s.kappa(h, 0) = 1.0;  // spike: first category
    }

    s.A_v.assign(H - 1, 1.0);
    s.B_v.assign(H - 1, hyper.alpha);
    return s;
}

void update_loadings(VariationalState& s, const Dataset& data, const Hyperparams& hyper) {
    const int p = s.p(), H = s.H();
    Matrix g = expected_gram_eta(s);
    Matrix yt_eta = data_factor_crossmoment(data, s);

    std::vector<double> spike, slab;
    spike_slab_masses(s.kappa, spike, slab);
    std::vector<double> theta_star(H);
    for (int h = 0; h < H; ++h)
        theta_star[h] = slab[h] / hyper.theta0 + spike[h] / hyper.theta_inf;

    Matrix precision(H, H);
    for (int j = 0; j < p; ++j) {
        const double r = s.A_sigma / s.B_sigma[j];
        for (int a = 0; a < H; ++a)
            for (int b = 0; b < H; ++b) precision(a, b) = r * g(a, b);
        for (int h = 0; h < H; ++h) precision(h, h) += theta_star[h];
        s.V_lambda[j] = spd_inverse(SpdMatrix(precision));
        matvec(s.V_lambda[j].matrix(), yt_eta.row(j), s.mu_lambda.row(j));
        for (int h = 0; h < H; ++h) s.mu_lambda(j, h) *= r;
    }
}

void update_noise(VariationalState& s, const Dataset& data, const Hyperparams& hyper) {
    const int p = s.p(), H = s.H();
    const int n = static_cast<int>(data.y.rows());
    s.A_sigma = hyper.a_sigma + 0.5 * n;

    Matrix g = expected_gram_eta(s);
    Matrix yt_eta = data_factor_crossmoment(data, s);
    std::vector<double> css = column_sum_squares(data.y);

    for (int j = 0; j < p; ++j) {
        Matrix e_lambda = expected_lambda_outer(s, j);
        double cross = kernels::dot(yt_eta.row(j), s.mu_lambda.row(j), H);
        s.B_sigma[j] =
            hyper.b_sigma + 0.5 * (css[j] - 2.0 * cross + frobenius_dot(g, e_lambda));
    }
}

void update_factors(VariationalState& s, const Dataset& data, const Hyperparams&) {
    const int p = s.p(), H = s.H();
    Matrix precision(H, H);
    for (int j = 0; j < p; ++j) {
        const double r = s.A_sigma / s.B_sigma[j];
        add_scaled_outer(precision, s.mu_lambda.row(j), r);
        kernels::axpy(r, s.V_lambda[j].matrix().data(), precision.data(), precision.size());
    }
    for (int h = 0; h < H; ++h) precision(h, h) += 1.0;
    s.V_eta = spd_inverse(SpdMatrix(precision));

    // mu_i = V_eta mu_lambda^T diag(r) y_i, batched as (y W) V_eta
    Matrix w(p, H);
    for (int j = 0; j < p; ++j) {
        const double r = s.A_sigma / s.B_sigma[j];
        for (int h = 0; h < H; ++h) w(j, h) = r * s.mu_lambda(j, h);
    }
    s.mu_eta = matmul(matmul(data.y, w), s.V_eta.matrix());
}

std::vector<double> expected_log_omega(const std::vector<double>& A_v,
                                       const std::vector<double>& B_v) {
    const int H = static_cast<int>(A_v.size()) + 1;
    std::vector<double> out(H, 0.0);
    double log_stick_left = 0.0;  // sum_{m<l} E[log(1 - v_m)]
    for (int l = 0; l < H; ++l) {
        out[l] = log_stick_left;
        if (l < H - 1) {
            out[l] += digamma(A_v[l]) - digamma(A_v[l] + B_v[l]);
            log_stick_left += digamma(B_v[l]) - digamma(A_v[l] + B_v[l]);
        }
    }
    return out;
}

void update_assignments(VariationalState& s, const Hyperparams& hyper) {
    const int p = s.p(), H = s.H();
    std::vector<double> e_log_omega = expected_log_omega(s.A_v, s.B_v);
    std::vector<double> col_norm = expected_column_norms(s);

    const double log_theta0 = std::log(hyper.theta0);
    const double log_theta_inf = std::log(hyper.theta_inf);
    std::vector<double> logits(H);
    for (int h = 0; h < H; ++h) {
        // spike likelihood term for l <= h, slab for l > h; magnitudes reach
        // ~1e7 when theta_inf is tiny, hence the log-domain normalization
        double spike_term = -0.5 * (p * log_theta_inf + col_norm[h] / hyper.theta_inf);
        double slab_term = -0.5 * (p * log_theta0 + col_norm[h] / hyper.theta0);
        for (int l = 0; l < H; ++l)
            logits[l] = e_log_omega[l] + (l <= h ? spike_term : slab_term);
        // shift by the row maximum before log_sum_exp: the normalizer is then
        // O(log H) instead of O(|logit|), so the row sums to 1 at machine
        // precision even when logits are ~1e7 in magnitude
        double m = *std::max_element(logits.begin(), logits.end());
        for (int l = 0; l < H; ++l) logits[l] -= m;
        double lse = log_sum_exp(logits);
        for (int l = 0; l < H; ++l) s.kappa(h, l) = std::exp(logits[l] - lse);
    }
}

void update_sticks(VariationalState& s, const Hyperparams& hyper) {
    const int H = s.H();
    std::vector<double> col_sum(H, 0.0);
    for (int l = 0; l < H; ++l) kernels::axpy(1.0, s.kappa.row(l), col_sum.data(), H);
    double tail = 0.0;  // sum_l sum_{m>h} kappa_lm
    std::vector<double> tail_sum(H, 0.0);
    for (int h = H - 1; h >= 0; --h) {
        tail_sum[h] = tail;
        tail += col_sum[h];
    }
    for (int h = 0; h < H - 1; ++h) {
        s.A_v[h] = 1.0 + col_sum[h];
        s.B_v[h] = hyper.alpha + tail_sum[h];
    }
}

double elbo(const VariationalState& s, const Dataset& data, const Hyperparams& hyper) {
    const int p = s.p(), H = s.H(), n = s.n();
    const double A = s.A_sigma;
    const double psi_A = digamma(A);

    Matrix g = expected_gram_eta(s);
    Matrix yt_eta = data_factor_crossmoment(data, s);
    std::vector<double> css = column_sum_squares(data.y);
    std::vector<double> e_log_omega = expected_log_omega(s.A_v, s.B_v);
    std::vector<double> spike, slab;
    spike_slab_masses(s.kappa, spike, slab);

    double value = 0.0;

    // E[log p(y | lambda, eta, sigma)]
    std::vector<double> col_norm(H, 0.0);
    {
        double total = -0.5 * n * p * kLog2Pi;
        for (int j = 0; j < p; ++j) {
            const double r = A / s.B_sigma[j];
            Matrix e_lambda = expected_lambda_outer(s, j);
            for (int h = 0; h < H; ++h) col_norm[h] += e_lambda(h, h);
            double quad = css[j] - 2.0 * kernels::dot(yt_eta.row(j), s.mu_lambda.row(j), H) +
                          frobenius_dot(g, e_lambda);
            total += 0.5 * n * (psi_A - std::log(s.B_sigma[j])) - 0.5 * r * quad;
        }
        value += total;
    }

    // E[log p(eta)]
    {
        double trace_g = 0.0;
        for (int h = 0; h < H; ++h) trace_g += g(h, h);
        value += -0.5 * n * H * kLog2Pi - 0.5 * trace_g;
    }

    // E[log p(sigma)]
    {
        double total = p * (hyper.a_sigma * std::log(hyper.b_sigma) - std::lgamma(hyper.a_sigma));
        for (int j = 0; j < p; ++j)
            total += (hyper.a_sigma + 1.0) * (psi_A - std::log(s.B_sigma[j])) -
                     hyper.b_sigma * A / s.B_sigma[j];
        value += total;
    }

    // E[log p(lambda | z)]
    {
        const double log_theta0 = std::log(hyper.theta0);
        const double log_theta_inf = std::log(hyper.theta_inf);
        double total = -0.5 * p * H * kLog2Pi;
        for (int h = 0; h < H; ++h) {
            total -= 0.5 * p * (spike[h] * log_theta_inf + slab[h] * log_theta0);
            total -= 0.5 * (spike[h] / hyper.theta_inf + slab[h] / hyper.theta0) * col_norm[h];
        }
        value += total;
    }

    // E[log p(z | v)]
    for (int h = 0; h < H; ++h)
        value += kernels::dot(s.kappa.row(h), e_log_omega.data(), H);

    // E[log p(v)]
    {
        double total = (H - 1) * std::log(hyper.alpha);
        for (int h = 0; h < H - 1; ++h)
            total += (hyper.alpha - 1.0) * (digamma(s.B_v[h]) - digamma(s.A_v[h] + s.B_v[h]));
        value += total;
    }

    // entropies of the five factors
    for (int j = 0; j < p; ++j)
        value += 0.5 * H * (kLog2Pi + 1.0) +
                 0.5 * logdet_from_cholesky(cholesky_lower(s.V_lambda[j]));
    value += n * 0.5 * H * (kLog2Pi + 1.0) +
             0.5 * n * logdet_from_cholesky(cholesky_lower(s.V_eta));
    for (int j = 0; j < p; ++j)
        value += A + std::log(s.B_sigma[j]) + std::lgamma(A) - (1.0 + A) * psi_A;
    for (int h = 0; h < H; ++h)
        for (int l = 0; l < H; ++l) value -= xlogx(s.kappa(h, l));
    for (int h = 0; h < H - 1; ++h) {
        const double a = s.A_v[h], b = s.B_v[h];
        value += lbeta(a, b) - (a - 1.0) * digamma(a) - (b - 1.0) * digamma(b) +
                 (a + b - 2.0) * digamma(a + b);
    }
    return value;
}

double elbo_via_kl(const VariationalState& s, const Dataset& data, const Hyperparams& hyper) {
    const int p = s.p(), H = s.H(), n = s.n();
    const double A = s.A_sigma;
    const double psi_A = digamma(A);

    std::vector<double> e_log_omega = expected_log_omega(s.A_v, s.B_v);
    std::vector<double> spike, slab;
    spike_slab_masses(s.kappa, spike, slab);

    // expected log-likelihood accumulated per observation
    double loglik = 0.0;
    {
        std::vector<Matrix> e_lambda;
        std::vector<double> v_eta_fro(p);
        e_lambda.reserve(p);
        for (int j = 0; j < p; ++j) {
            e_lambda.push_back(expected_lambda_outer(s, j));
            v_eta_fro[j] = frobenius_dot(s.V_eta.matrix(), e_lambda[j]);
        }
        std::vector<double> tmp(H);
        for (int i = 0; i < n; ++i) {
            const double* mu_i = s.mu_eta.row(i);
            for (int j = 0; j < p; ++j) {
                const double r = A / s.B_sigma[j];
                matvec(e_lambda[j], mu_i, tmp.data());
                double quad = kernels::dot(mu_i, tmp.data(), H) + v_eta_fro[j];
                double resid = data.y(i, j) * data.y(i, j) -
                               2.0 * data.y(i, j) *
                                   kernels::dot(mu_i, s.mu_lambda.row(j), H) +
                               quad;
                loglik += -0.5 * kLog2Pi + 0.5 * (psi_A - std::log(s.B_sigma[j])) -
                          0.5 * r * resid;
            }
        }
    }

    // KL(q(eta) || N(0, I)) summed over observations
    double kl_eta = 0.0;
    {
        double trace_v = 0.0;
        for (int h = 0; h < H; ++h) trace_v += s.V_eta(h, h);
        double logdet_v = logdet_from_cholesky(cholesky_lower(s.V_eta));
        double mu_ss = kernels::sum_squares(s.mu_eta.data(), s.mu_eta.size());
        kl_eta = 0.5 * (n * trace_v + mu_ss - n * H - n * logdet_v);
    }

    // KL(q(sigma_j) || InvGa(a, b))
    double kl_sigma = 0.0;
    for (int j = 0; j < p; ++j) {
        const double B = s.B_sigma[j];
        kl_sigma += A * std::log(B) - hyper.a_sigma * std::log(hyper.b_sigma) -
                    std::lgamma(A) + std::lgamma(hyper.a_sigma) +
                    (hyper.a_sigma - A) * (std::log(B) - psi_A) +
                    (hyper.b_sigma - B) * A / B;
    }

    // E_q(z) KL(q(lambda_j) || p(lambda_j | z)); the conditional prior is
    // diagonal with mixture variances, so the Gaussian KL is averaged over z
    double kl_lambda = 0.0;
    {
        const double log_theta0 = std::log(hyper.theta0);
        const double log_theta_inf = std::log(hyper.theta_inf);
        std::vector<double> theta_star(H), e_log_prior_var(H);
        for (int h = 0; h < H; ++h) {
            theta_star[h] = spike[h] / hyper.theta_inf + slab[h] / hyper.theta0;
            e_log_prior_var[h] = spike[h] * log_theta_inf + slab[h] * log_theta0;
        }
        for (int j = 0; j < p; ++j) {
            const Matrix& v = s.V_lambda[j].matrix();
            const double* mu = s.mu_lambda.row(j);
            double acc = -H - logdet_from_cholesky(cholesky_lower(s.V_lambda[j]));
            for (int h = 0; h < H; ++h)
                acc += theta_star[h] * (mu[h] * mu[h] + v(h, h)) + e_log_prior_var[h];
            kl_lambda += 0.5 * acc;
        }
    }

    // E_q(v) KL(q(z_h) || p(z_h | v))
    double kl_z = 0.0;
    for (int h = 0; h < H; ++h)
        for (int l = 0; l < H; ++l) {
            const double k = s.kappa(h, l);
            if (k > 0.0) kl_z += k * (std::log(k) - e_log_omega[l]);
        }

    // KL(q(v_h) || Beta(1, alpha))
    double kl_v = 0.0;
    for (int h = 0; h < H - 1; ++h) {
        const double a = s.A_v[h], b = s.B_v[h];
        const double e_log_v = digamma(a) - digamma(a + b);
        const double e_log_1mv = digamma(b) - digamma(a + b);
        kl_v += -std::log(hyper.alpha) - lbeta(a, b) + (a - 1.0) * e_log_v +
                (b - hyper.alpha) * e_log_1mv;
    }

    return loglik - kl_eta - kl_sigma - kl_lambda - kl_z - kl_v;
}

double cycle(VariationalState& s, const Dataset& data, const Hyperparams& hyper) {
    update_loadings(s, data, hyper);
    update_noise(s, data, hyper);
    update_factors(s, data, hyper);
    update_assignments(s, hyper);
    update_sticks(s, hyper);
    return elbo(s, data, hyper);
}

double expected_active(const Matrix& kappa) {
    const std::size_t H = kappa.rows();
    if (kappa.cols() != H) throw std::invalid_argument("expected_active: kappa not square");
    double total = 0.0;
    for (std::size_t h = 0; h < H; ++h) {
        double row_sum = 0.0;
        for (std::size_t l = 0; l < H; ++l) row_sum += kappa(h, l);
        if (std::fabs(row_sum - 1.0) > 1e-8)
            throw std::invalid_argument("expected_active: row " + std::to_string(h + 1) +
                                        " sums to " + std::to_string(row_sum));
        for (std::size_t l = h + 1; l < H; ++l) total += kappa(h, l);
    }
    return total;
}

FitResult fit(const Dataset& data, const Hyperparams& hyper, const FitOptions& opts) {
    if (opts.restarts < 1) throw std::invalid_argument("fit: restarts must be >= 1");
    if (!(opts.tol > 0.0)) throw std::invalid_argument("fit: tol must be positive");
    if (opts.max_cycles < 1) throw std::invalid_argument("fit: max_cycles must be >= 1");

    auto warn = opts.warn ? opts.warn : [](const std::string& msg) {
        std::cerr << "warning: " << msg << '\n';
    };

    FitResult result;
    result.restart_traces.resize(opts.restarts);
    bool have_best = false;
    VariationalState best_state;
    std::vector<double> best_trace;
    bool best_converged = false;
    int best_restart = -1;

    for (int r = 0; r < opts.restarts; ++r) {
        try {
            VariationalState state =
                init_state(data, hyper, derive_stream_seed(opts.seed, r));
            std::vector<double> trace;
            trace.push_back(elbo(state, data, hyper));
            bool converged = false;
            for (int c = 0; c < opts.max_cycles; ++c) {
                double e = cycle(state, data, hyper);
                double gain = e - trace.back();
                trace.push_back(e);
                if (gain < opts.tol) {
                    converged = true;
                    break;
                }
            }
            result.restart_traces[r] = trace;
            if (!have_best || trace.back() > best_trace.back()) {
                have_best = true;
                best_state = std::move(state);
                best_trace = std::move(trace);
                best_converged = converged;
                best_restart = r;
            }
        } catch (const NotPositiveDefinite& ex) {
            warn("restart " + std::to_string(r) + " discarded: " + ex.what());
            result.failed_restarts.push_back(r);
        }
    }
    if (!have_best) throw std::runtime_error("fit: all restarts failed numerically");

    result.state = std::move(best_state);
    result.elbo_trace = std::move(best_trace);
    result.converged = best_converged;
    result.cycles = static_cast<int>(result.elbo_trace.size()) - 1;
    result.restart_index = best_restart;
    result.expected_active = expected_active(result.state.kappa);
    return result;
}

}  // namespace cuspvb
