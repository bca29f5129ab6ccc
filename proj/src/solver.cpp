#include "geocalc/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace geocalc {

// ---------------------------------------------------------------------------
// Discrete path energy

double path_energy(const LocalEnergy& energy, const DiscretePath& path) {
    const int k = path.segments();
    if (k < 1) throw std::invalid_argument("path needs at least one segment");
    double sum = 0.0;
    for (int i = 1; i <= k; ++i) sum += energy.eval(path.points.col(i - 1), path.points.col(i));
    return k * sum;
}

double path_energy_grad(const LocalEnergy& energy, const DiscretePath& path,
                        Matrix& interior_grad) {
    const int k = path.segments();
    if (k < 1) throw std::invalid_argument("path needs at least one segment");
    const int l = path.dim();
    interior_grad = Matrix::Zero(l, std::max(k - 1, 0));
    double sum = 0.0;
    Vector ga(l), gb(l);
    for (int i = 1; i <= k; ++i) {
        sum += energy.eval_grad(path.points.col(i - 1), path.points.col(i), ga, gb);
        if (i - 1 >= 1) interior_grad.col(i - 2) += ga;
        if (i <= k - 1) interior_grad.col(i - 1) += gb;
    }
    interior_grad *= k;
    return k * sum;
}

// ---------------------------------------------------------------------------
// BFGS with strong-Wolfe line search

namespace {

constexpr double kWolfeC1 = 1e-4;
constexpr double kWolfeC2 = 0.9;

struct LinePoint {
    double step = 0.0;
    double value = 0.0;
    double slope = 0.0;
};

// Minimizer of the cubic through two (step, value, slope) samples, clipped
// to the interior of the bracket; falls back to bisection.
double cubic_step(const LinePoint& a, const LinePoint& b) {
    const double d1 = a.slope + b.slope - 3.0 * (a.value - b.value) / (a.step - b.step);
    const double disc = d1 * d1 - a.slope * b.slope;
    const double lo = std::min(a.step, b.step);
    const double hi = std::max(a.step, b.step);
    if (disc >= 0.0) {
        const double d2 = std::copysign(std::sqrt(disc), b.step - a.step);
        const double t = b.step - (b.step - a.step) * (b.slope + d2 - d1) /
                                      (b.slope - a.slope + 2.0 * d2);
        const double margin = 0.1 * (hi - lo);
        if (std::isfinite(t) && t > lo + margin && t < hi - margin) return t;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

BfgsReport bfgs_minimize(const std::function<double(const Vector&, Vector&)>& objective,
                         Vector& x, const BfgsOptions& options) {
    const int n = static_cast<int>(x.size());
    BfgsReport report;

    Vector grad(n);
    double value = objective(x, grad);
    Matrix inv_hessian = Matrix::Identity(n, n);

    Vector x_trial(n), grad_trial(n);

    for (int iter = 0; iter < options.max_iter; ++iter) {
        report.iterations = iter;
        if (grad.lpNorm<Eigen::Infinity>() <= options.grad_tol) {
            report.converged = true;
            break;
        }

        Vector direction = -(inv_hessian * grad);
        double slope0 = direction.dot(grad);
        if (!(slope0 < 0.0)) {  // not a descent direction; restart from steepest descent
            inv_hessian.setIdentity();
            direction = -grad;
            slope0 = direction.dot(grad);
        }

        // strong-Wolfe line search: bracket then zoom
        auto eval_line = [&](double step) {
            x_trial = x + step * direction;
            const double v = objective(x_trial, grad_trial);
            return LinePoint{step, v, direction.dot(grad_trial)};
        };

        const LinePoint origin{0.0, value, slope0};
        LinePoint lo, hi;
        bool bracketed = false;
        bool accepted = false;
        LinePoint accept;

        LinePoint prev = origin;
        double step = 1.0;
        for (int ls = 0; ls < 20 && !bracketed && !accepted; ++ls) {
            const LinePoint cur = eval_line(step);
            if (cur.value > origin.value + kWolfeC1 * cur.step * origin.slope ||
                (ls > 0 && cur.value >= prev.value)) {
                lo = prev;
                hi = cur;
                bracketed = true;
                break;
            }
            if (std::abs(cur.slope) <= -kWolfeC2 * origin.slope) {
                accept = cur;
                accepted = true;
                break;
            }
            if (cur.slope >= 0.0) {
                lo = cur;
                hi = prev;
                bracketed = true;
                break;
            }
            prev = cur;
            step = std::min(step * 2.0, 1e6);
        }

        if (bracketed) {
            for (int zi = 0; zi < 40; ++zi) {
                if (std::abs(hi.step - lo.step) <
                    1e-14 * std::max(1.0, std::max(std::abs(lo.step), std::abs(hi.step))))
                    break;
                const LinePoint cur = eval_line(cubic_step(lo, hi));
                if (cur.value > origin.value + kWolfeC1 * cur.step * origin.slope ||
                    cur.value >= lo.value) {
                    hi = cur;
                } else {
                    if (std::abs(cur.slope) <= -kWolfeC2 * origin.slope) {
                        accept = cur;
                        accepted = true;
                        break;
                    }
                    if (cur.slope * (hi.step - lo.step) >= 0.0) hi = lo;
                    lo = cur;
                }
            }
            if (!accepted && lo.step > 0.0 && lo.value < origin.value) {
                accept = eval_line(lo.step);  // sufficient decrease only; curvature unmet
                accepted = true;
            }
        }

        if (!accepted) {
            report.line_search_failed = true;
            break;
        }

        x_trial = x + accept.step * direction;
        const Vector s = accept.step * direction;
        const Vector y = grad_trial - grad;
        const double sy = s.dot(y);

        if (iter == 0) {
            const double yy = y.squaredNorm();
            if (sy > 0.0 && yy > 0.0) inv_hessian *= sy / yy;
        }
        if (sy > 1e-10 * s.norm() * y.norm()) {
            const double rho = 1.0 / sy;
            const Vector hy = inv_hessian * y;
            const double yhy = y.dot(hy);
            inv_hessian.noalias() -= rho * (s * hy.transpose() + hy * s.transpose());
            inv_hessian.noalias() += (rho * rho * yhy + rho) * (s * s.transpose());
        }

        x = x_trial;
        value = accept.value;
        grad = grad_trial;
        report.iterations = iter + 1;
    }

    report.objective = value;
    report.grad_norm = grad.lpNorm<Eigen::Infinity>();
    if (!report.converged) report.converged = report.grad_norm <= options.grad_tol;
    return report;
}

// ---------------------------------------------------------------------------
// Geodesic interpolation

namespace {

// Interior points stacked column-by-column into one vector of size l (K-1).
Matrix unstack(const Vector& x, int l, int interior) {
    return Eigen::Map<const Matrix>(x.data(), l, interior);
}

Vector stack(const Matrix& m) {
    return Eigen::Map<const Vector>(m.data(), m.size());
}

DiscretePath assemble_path(const Vector& z0, const Vector& zK, const Vector& interior) {
    const int l = static_cast<int>(z0.size());
    const int k = static_cast<int>(interior.size()) / l + 1;
    DiscretePath path;
    path.points.resize(l, k + 1);
    path.points.col(0) = z0;
    path.points.rightCols(1) = zK;
    if (k > 1) path.points.block(0, 1, l, k - 1) = unstack(interior, l, k - 1);
    return path;
}

// Initial guess: constant on each half, jumping at the middle time point.
Vector constant_jump_interior(const Vector& z0, const Vector& zK, int K) {
    const int l = static_cast<int>(z0.size());
    Matrix interior(l, K - 1);
    for (int k = 1; k <= K - 1; ++k)
        interior.col(k - 1) = (k <= K / 2) ? z0 : zK;
    return stack(interior);
}

void check_endpoints(const Vector& z0, const Vector& zK, int K, int min_K) {
    if (z0.size() != zK.size()) throw std::invalid_argument("endpoint dimensions differ");
    if (K < min_K)
        throw std::invalid_argument("K must be at least " + std::to_string(min_K));
}

}  // namespace

double constraint_tol_rule_of_thumb(const ImplicitRep& rep, const PointCloud& cloud, int K) {
    if (cloud.size() < 1) throw std::invalid_argument("cloud is empty");
    double mean = 0.0;
    for (int i = 0; i < cloud.size(); ++i)
        mean += rep.residual(cloud.points.col(i)).norm();
    return K * mean / cloud.size();
}

std::string to_string(StopReason reason) {
    switch (reason) {
        case StopReason::accuracy: return "accuracy";
        case StopReason::max_penalty: return "max_penalty";
        case StopReason::max_iter: return "max_iter";
    }
    return "unknown";
}

std::pair<DiscretePath, SolverReport> geodesic_auglag(const LocalEnergy& energy,
                                                      const ImplicitRep& rep, const Vector& z0,
                                                      const Vector& zK, int K,
                                                      const GeodesicConfig& cfg) {
    check_endpoints(z0, zK, K, 2);
    const int l = static_cast<int>(z0.size());
    const int interior = K - 1;

    Vector x = constant_jump_interior(z0, zK, K);
    Matrix multiplier = Matrix::Zero(l, interior);
    double mu = cfg.mu0;
    double omega = std::max(1.0 / mu, cfg.omega_star);
    double eta = std::max(1.0 / std::pow(mu, 0.1), cfg.eta_star);

    SolverReport report;

    // residuals of all interior points, one per column
    auto constraint = [&](const Vector& xv, Matrix& residuals) {
        const Matrix pts = unstack(xv, l, interior);
        residuals.resize(l, interior);
        Vector r;
        Matrix j;
        for (int k = 0; k < interior; ++k) {
            rep.eval(pts.col(k), r, j);
            residuals.col(k) = r;
        }
    };

    auto lagrangian = [&](const Vector& xv, Vector& grad) {
        const DiscretePath path = assemble_path(z0, zK, xv);
        Matrix e_grad;
        double value = path_energy_grad(energy, path, e_grad);
        Vector r;
        Matrix j;
        for (int k = 0; k < interior; ++k) {
            rep.eval(path.points.col(k + 1), r, j);
            value += -multiplier.col(k).dot(r) + 0.5 * mu * r.squaredNorm();
            e_grad.col(k) += j.transpose() * (mu * r - multiplier.col(k));
        }
        grad = stack(e_grad);
        return value;
    };

    for (int outer = 0; outer < cfg.max_outer; ++outer) {
        report.outer_iterations = outer + 1;
        BfgsOptions inner_opts;
        inner_opts.grad_tol = omega;
        inner_opts.max_iter = cfg.max_inner;
        const BfgsReport inner = bfgs_minimize(lagrangian, x, inner_opts);
        report.inner_iterations += inner.iterations;
        report.grad_norm = inner.grad_norm;

        Matrix residuals;
        constraint(x, residuals);
        const double c = residuals.norm();
        report.constraint_norm = c;

        if (c <= eta) {
            if (c <= cfg.eta_star && inner.grad_norm <= cfg.omega_star) {
                report.converged = true;
                report.stop_reason = StopReason::accuracy;
                break;
            }
            multiplier -= mu * residuals;
            eta = std::max(eta / std::pow(mu, 0.9), cfg.eta_star);
            omega = std::max(omega / mu, cfg.omega_star);
        } else {
            mu *= cfg.alpha;
            eta = std::max(1.0 / std::pow(mu, 0.1), cfg.eta_star);
            omega = std::max(1.0 / mu, cfg.omega_star);
            if (mu > cfg.mu_max) {
                report.stop_reason = StopReason::max_penalty;
                break;
            }
        }
    }

    DiscretePath path = assemble_path(z0, zK, x);
    report.energy = path_energy(energy, path);
    return {std::move(path), report};
}

DistanceField make_distance_field(const AnalyticManifold& manifold) {
    return [manifold](const Vector& p) -> std::pair<double, Vector> {
        Vector residual;
        Matrix jacobian;
        projection_residual(manifold, p, residual, jacobian);
        const double d = residual.norm();
        if (d < 1e-12) return {d, Vector::Zero(p.size())};
        // unit gradient of the unsigned nearest-point distance
        return {d, residual / d};
    };
}

std::pair<DiscretePath, SolverReport> geodesic_penalty(const LocalEnergy& energy,
                                                       const DistanceField& distance,
                                                       const Vector& z0, const Vector& zK, int K,
                                                       const GeodesicConfig& cfg) {
    check_endpoints(z0, zK, K, 1);
    const int l = static_cast<int>(z0.size());
    SolverReport report;

    if (K == 1) {  // no interior unknowns
        DiscretePath path;
        path.points.resize(l, 2);
        path.points.col(0) = z0;
        path.points.col(1) = zK;
        report.converged = true;
        report.stop_reason = StopReason::accuracy;
        report.energy = path_energy(energy, path);
        return {std::move(path), report};
    }

    const int interior = K - 1;
    Vector x = constant_jump_interior(z0, zK, K);
    double mu = cfg.mu0;

    auto violation = [&](const Vector& xv) {
        const Matrix pts = unstack(xv, l, interior);
        double sum = 0.0;
        for (int k = 0; k < interior; ++k) {
            const double d = distance(pts.col(k)).first;
            sum += d * d;
        }
        return sum;
    };

    auto penalized = [&](const Vector& xv, Vector& grad) {
        const DiscretePath path = assemble_path(z0, zK, xv);
        Matrix e_grad;
        double value = path_energy_grad(energy, path, e_grad);
        for (int k = 0; k < interior; ++k) {
            const auto [d, dgrad] = distance(path.points.col(k + 1));
            value += 0.5 * mu * d * d;
            e_grad.col(k) += mu * d * dgrad;
        }
        grad = stack(e_grad);
        return value;
    };

    const double target_sq = cfg.eta_star * cfg.eta_star;
    double omega = std::max(1.0 / mu, cfg.omega_star);
    for (int outer = 0; outer < cfg.max_outer; ++outer) {
        report.outer_iterations = outer + 1;
        BfgsOptions inner_opts;
        inner_opts.grad_tol = omega;
        inner_opts.max_iter = cfg.max_inner;
        const BfgsReport inner = bfgs_minimize(penalized, x, inner_opts);
        report.inner_iterations += inner.iterations;
        report.grad_norm = inner.grad_norm;

        const double v = violation(x);
        report.constraint_norm = std::sqrt(v);
        if (v <= target_sq) {
            if (omega <= cfg.omega_star) {
                report.converged = true;
                report.stop_reason = StopReason::accuracy;
                break;
            }
            omega = cfg.omega_star;  // polish at final accuracy, penalty unchanged
        } else {
            mu *= cfg.alpha;
            omega = std::max(1.0 / mu, cfg.omega_star);
            if (mu > cfg.mu_max) {
                report.stop_reason = StopReason::max_penalty;
                break;
            }
        }
    }

    DiscretePath path = assemble_path(z0, zK, x);
    report.energy = path_energy(energy, path);
    return {std::move(path), report};
}

// ---------------------------------------------------------------------------
// Geodesic extrapolation

ExpStepResult exp_step(const LocalEnergy& energy, const ImplicitRep& rep, const Vector& z_prev,
                       const Vector& z_cur, const ExpConfig& cfg) {
    if (z_prev.size() != z_cur.size()) throw std::invalid_argument("point dimensions differ");
    if ((z_cur - z_prev).norm() < 1e-12)
        throw DegenerateStep("consecutive points coincide; no extrapolation direction");
    const int l = static_cast<int>(z_cur.size());
    const double scale = cfg.K > 0 ? static_cast<double>(cfg.K) : 1.0;

    // pieces that do not depend on the unknowns
    Vector ga(l), gb(l);
    energy.eval_grad(z_prev, z_cur, ga, gb);
    const Vector prev_term = gb;
    Vector r0;
    Matrix jac_cur;
    rep.eval(z_cur, r0, jac_cur);
    const Matrix normal_map = jac_cur.transpose();  // multiplier enters through this

    auto functional = [&](const Vector& xv, Vector& grad) {
        const Vector z_next = xv.head(l);
        const Vector lambda = xv.tail(l);
        energy.eval_grad(z_cur, z_next, ga, gb);
        const Vector residual = scale * (prev_term + ga) - normal_map * lambda;

        Vector zeta_next;
        Matrix jac_next;
        rep.eval(z_next, zeta_next, jac_next);

        const double value =
            residual.squaredNorm() + 0.5 * cfg.penalty * zeta_next.squaredNorm();
        grad.resize(2 * l);
        grad.head(l) = 2.0 * scale * energy.cross_hessian_apply(z_cur, z_next, residual) +
                       cfg.penalty * jac_next.transpose() * zeta_next;
        grad.tail(l) = -2.0 * normal_map.transpose() * residual;
        return value;
    };

    Vector x(2 * l);
    x.head(l) = 2.0 * z_cur - z_prev;
    x.tail(l).setZero();

    BfgsOptions opts;
    opts.grad_tol = cfg.grad_tol;
    opts.max_iter = cfg.max_iter;
    ExpStepResult result;
    result.report = bfgs_minimize(functional, x, opts);
    result.next = x.head(l);
    result.multiplier = x.tail(l);
    result.functional_value = result.report.objective;
    return result;
}

namespace {

// One Gauss-Newton step toward the zero set of the residual, so the first
// extrapolation segment starts on the manifold.
Vector refine_onto_manifold(const ImplicitRep& rep, const Vector& z) {
    Vector residual;
    Matrix jacobian;
    rep.eval(z, residual, jacobian);
    const Vector step = jacobian.completeOrthogonalDecomposition().solve(residual);
    return z - step;
}

}  // namespace

DiscretePath discrete_exp(const LocalEnergy& energy, const ImplicitRep& rep, const Vector& z0,
                          const Vector& v0, int K, const ExpConfig& cfg) {
    if (K < 1) throw std::invalid_argument("K must be at least 1");
    if (v0.size() != z0.size()) throw std::invalid_argument("velocity dimension mismatch");
    const int l = static_cast<int>(z0.size());

    DiscretePath path;
    path.points.resize(l, K + 1);
    path.points.col(0) = z0;
    path.points.col(1) = refine_onto_manifold(rep, z0 + v0 / static_cast<double>(K));

    ExpConfig step_cfg = cfg;
    step_cfg.K = K;
    for (int k = 1; k < K; ++k) {
        const ExpStepResult step =
            exp_step(energy, rep, path.points.col(k - 1), path.points.col(k), step_cfg);
        path.points.col(k + 1) = step.next;
    }
    return path;
}

}  // namespace geocalc
