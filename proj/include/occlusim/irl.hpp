#ifndef OCCLUSIM_IRL_HPP
#define OCCLUSIM_IRL_HPP

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "occlusim/costs.hpp"
#include "occlusim/world.hpp"

namespace occlusim {

struct Demonstration {
    WorldState x0;
    SocialInfo info;
    ControlSequence u_R;
    ControlSequence u_H;  // demonstrated human actions
    std::size_t human_index = 0;
    double dt = 0.1;
};

struct IrlOptions {
    double tol = 1e-6;
    int max_iter = 500;
    bool locally_optimal = false;  // drop the gradient term of the Laplace partition
    double hessian_reg = 1e-6;
    double hessian_reg_trigger = 1e-8;
    double fd_step = 1e-4;  // control-space finite differences for feature derivatives
};

struct IrlResult {
    Weights theta_star;
    double final_nll = 0.0;
    double gradient_norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

struct DegenerateDemoError : std::runtime_error {
    explicit DegenerateDemoError(std::size_t demo_index)
        : std::runtime_error("non-positive-definite cost Hessian for demonstration " +
                             std::to_string(demo_index)),
          index(demo_index) {}
    std::size_t index;
};

namespace irl_detail {

/// Per-demo quantities that are independent of theta: cumulative features Phi,
/// their control-gradient G (N x F) and per-feature control-Hessians (F of N x N).
/// The cost, its gradient g and Hessian H are then linear in theta:
///   C = Phi^T theta,  g = G theta,  H = sum_j theta_j Hf[j].
struct DemoTerms {
    Eigen::VectorXd phi;              // F
    Eigen::MatrixXd grad;             // N x F
    std::vector<Eigen::MatrixXd> hess;  // F matrices, N x N
    std::size_t horizon = 0;
};

inline Eigen::VectorXd cumulative_phi(const Demonstration& demo,
                                      const std::vector<double>& accels) {
    ControlSequence u_h = demo.u_H;
    for (std::size_t k = 0; k < u_h.size(); ++k) u_h[k].accel = accels[k];
    const FeatureVector phi = cumulative_features(demo.x0, demo.info, demo.u_R, u_h,
                                                  demo.human_index, VehicleParams{}, demo.dt);
    return Eigen::Map<const Eigen::VectorXd>(phi.data(), static_cast<long>(phi.size()));
}

inline DemoTerms precompute(const Demonstration& demo, double h) {
    const std::size_t n = demo.u_H.size();
    std::vector<double> base(n);
    for (std::size_t k = 0; k < n; ++k) base[k] = demo.u_H[k].accel;

    DemoTerms terms;
    terms.horizon = n;
    terms.phi = cumulative_phi(demo, base);
    const long F = terms.phi.size();
    terms.grad = Eigen::MatrixXd::Zero(static_cast<long>(n), F);
    terms.hess.assign(static_cast<std::size_t>(F),
                      Eigen::MatrixXd::Zero(static_cast<long>(n), static_cast<long>(n)));

    std::vector<Eigen::VectorXd> plus(n), minus(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> up = base, um = base;
        up[i] += h;
        um[i] -= h;
        plus[i] = cumulative_phi(demo, up);
        minus[i] = cumulative_phi(demo, um);
        terms.grad.row(static_cast<long>(i)) = ((plus[i] - minus[i]) / (2.0 * h)).transpose();
        const Eigen::VectorXd dii = (plus[i] - 2.0 * terms.phi + minus[i]) / (h * h);
        for (long j = 0; j < F; ++j) terms.hess[static_cast<std::size_t>(j)](i, i) = dii(j);
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            std::vector<double> upp = base, upm = base, ump = base, umm = base;
            upp[i] += h;
            upp[j] += h;
            upm[i] += h;
            upm[j] -= h;
            ump[i] -= h;
            ump[j] += h;
            umm[i] -= h;
            umm[j] -= h;
            const Eigen::VectorXd dij =
                (cumulative_phi(demo, upp) - cumulative_phi(demo, upm) -
                 cumulative_phi(demo, ump) + cumulative_phi(demo, umm)) /
                (4.0 * h * h);
            for (long f = 0; f < F; ++f) {
                terms.hess[static_cast<std::size_t>(f)](static_cast<long>(i),
                                                        static_cast<long>(j)) = dij(f);
                terms.hess[static_cast<std::size_t>(f)](static_cast<long>(j),
                                                        static_cast<long>(i)) = dij(f);
            }
        }
    }
    return terms;
}

struct EvalResult {
    double value = 0.0;
    Eigen::VectorXd grad;
    bool valid = false;           // false iff some Hessian was not positive definite
    std::size_t bad_demo = 0;
};

/// Laplace-approximated negative log likelihood and its analytic theta-gradient.
/// Per demo:  1/2 g^T H^-1 g + (N/2) log 2pi - 1/2 log det H
/// (the demo cost cancels against the partition integral expanded around the demo).
inline EvalResult evaluate(const Eigen::VectorXd& theta, const std::vector<DemoTerms>& demos,
                           const IrlOptions& opts) {
    EvalResult out;
    out.grad = Eigen::VectorXd::Zero(theta.size());
    out.valid = true;
    for (std::size_t d = 0; d < demos.size(); ++d) {
        const DemoTerms& t = demos[d];
        const long N = static_cast<long>(t.horizon);
        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(N, N);
        for (long j = 0; j < theta.size(); ++j)
            H += theta(j) * t.hess[static_cast<std::size_t>(j)];
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
        if (es.eigenvalues().minCoeff() < opts.hessian_reg_trigger) {
            H += opts.hessian_reg * Eigen::MatrixXd::Identity(N, N);
            es.compute(H);
            if (es.eigenvalues().minCoeff() <= 0.0) {
                out.valid = false;
                out.bad_demo = d;
                return out;
            }
        }
        const Eigen::MatrixXd Hinv = es.eigenvectors() *
                                     es.eigenvalues().cwiseInverse().asDiagonal() *
                                     es.eigenvectors().transpose();
        double logdet = 0.0;
        for (long i = 0; i < N; ++i) logdet += std::log(es.eigenvalues()(i));

        out.value += 0.5 * static_cast<double>(N) * std::log(2.0 * M_PI) - 0.5 * logdet;
        for (long j = 0; j < theta.size(); ++j) {
            out.grad(j) +=
                -0.5 * (Hinv * t.hess[static_cast<std::size_t>(j)]).trace();
        }
        if (!opts.locally_optimal) {
            const Eigen::VectorXd g = t.grad * theta;
            const Eigen::VectorXd Hig = Hinv * g;
            out.value += 0.5 * g.dot(Hig);
            for (long j = 0; j < theta.size(); ++j) {
                out.grad(j) += t.grad.col(j).dot(Hig) -
                               0.5 * Hig.dot(t.hess[static_cast<std::size_t>(j)] * Hig);
            }
        }
    }
    return out;
}

}  // namespace irl_detail

class LaplaceIrl {
  public:
    explicit LaplaceIrl(const std::vector<Demonstration>& demos, IrlOptions opts = {})
        : opts_(opts) {
        if (demos.empty()) throw std::invalid_argument("LaplaceIrl: no demonstrations");
        terms_.reserve(demos.size());
        for (const Demonstration& d : demos) {
            if (d.u_R.size() != d.u_H.size())
                throw std::invalid_argument("LaplaceIrl: sequence length mismatch");
            terms_.push_back(irl_detail::precompute(d, opts_.fd_step));
        }
    }

    double neg_log_likelihood(const Weights& theta) const {
        const auto r = irl_detail::evaluate(as_vec(theta), terms_, opts_);
        if (!r.valid) throw DegenerateDemoError(r.bad_demo);
        return r.value;
    }

    Weights grad_neg_log_likelihood(const Weights& theta) const {
        const auto r = irl_detail::evaluate(as_vec(theta), terms_, opts_);
        if (!r.valid) throw DegenerateDemoError(r.bad_demo);
        return {r.grad.data(), r.grad.data() + r.grad.size()};
    }

    /// First-order minimization: Barzilai-Borwein step lengths with monotone
    /// Armijo backtracking. Candidates with a non-PD Hessian are rejected by
    /// the line search.
    IrlResult learn(const Weights& theta0) const {
        Eigen::VectorXd theta = as_vec(theta0);
        auto cur = irl_detail::evaluate(theta, terms_, opts_);
        if (!cur.valid) throw DegenerateDemoError(cur.bad_demo);

        IrlResult result;
        double step = 1.0 / std::max(1.0, cur.grad.norm());
        Eigen::VectorXd prev_theta = theta;
        Eigen::VectorXd prev_grad = cur.grad;
        bool have_prev = false;

        int it = 0;
        for (; it < opts_.max_iter; ++it) {
            const double gn = cur.grad.norm();
            if (gn <= opts_.tol) {
                result.converged = true;
                break;
            }
            if (have_prev) {
                const Eigen::VectorXd s = theta - prev_theta;
                const Eigen::VectorXd y = cur.grad - prev_grad;
                const double sy = s.dot(y);
                if (sy > 1e-30) step = s.dot(s) / sy;
            }
            step = std::clamp(step, 1e-12, 1e6);

            double t = step;
            bool accepted = false;
            while (t >= 1e-14) {
                const Eigen::VectorXd cand = theta - t * cur.grad;
                const auto r = irl_detail::evaluate(cand, terms_, opts_);
                if (r.valid && r.value <= cur.value - 1e-4 * t * gn * gn) {
                    prev_theta = theta;
                    prev_grad = cur.grad;
                    theta = cand;
                    cur = r;
                    have_prev = true;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if (!accepted) break;  // no descent step found
        }
        result.theta_star.assign(theta.data(), theta.data() + theta.size());
        result.final_nll = cur.value;
        result.gradient_norm = cur.grad.norm();
        result.iterations = it;
        if (cur.grad.norm() <= opts_.tol) result.converged = true;
        return result;
    }

  private:
    static Eigen::VectorXd as_vec(const Weights& w) {
        return Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<long>(w.size()));
    }

    IrlOptions opts_;
    std::vector<irl_detail::DemoTerms> terms_;
};

inline IrlResult learn_weights(const std::vector<Demonstration>& demos, const Weights& theta0,
                               const IrlOptions& opts = {}) {
    return LaplaceIrl(demos, opts).learn(theta0);
}

}  // namespace occlusim

#endif  // OCCLUSIM_IRL_HPP
