#pragma once

#include "geocalc/energy.hpp"
#include "geocalc/manifold.hpp"
#include "geocalc/types.hpp"

#include <functional>
#include <string>
#include <utility>

namespace geocalc {

/// Ordered points z_0..z_K of a discrete path, one per column. Endpoints stay
/// fixed during interpolation; the interior columns are the unknowns.
struct DiscretePath {
    Matrix points;  // l x (K+1)

    int dim() const { return static_cast<int>(points.rows()); }
    int segments() const { return static_cast<int>(points.cols()) - 1; }
};

/// K times the sum of local energies over consecutive segments.
double path_energy(const LocalEnergy& energy, const DiscretePath& path);

/// Energy together with its gradient with respect to the interior points
/// (l x (K-1), column k-1 belongs to z_k).
double path_energy_grad(const LocalEnergy& energy, const DiscretePath& path,
                        Matrix& interior_grad);

// ---------------------------------------------------------------------------
// Quasi-Newton inner solver

struct BfgsOptions {
    double grad_tol = 1e-8;  // infinity norm of the gradient
    int max_iter = 1000;
};

struct BfgsReport {
    bool converged = false;
    bool line_search_failed = false;
    int iterations = 0;
    double objective = 0.0;
    double grad_norm = 0.0;
};

/// Dense inverse-Hessian BFGS with strong-Wolfe line search (c1 = 1e-4,
/// c2 = 0.9). The callback returns the objective and fills the gradient.
/// On line-search failure the best iterate found is kept in x.
BfgsReport bfgs_minimize(const std::function<double(const Vector&, Vector&)>& objective,
                         Vector& x, const BfgsOptions& options = {});

// ---------------------------------------------------------------------------
// Geodesic interpolation

enum class StopReason { accuracy, max_penalty, max_iter };

std::string to_string(StopReason reason);

struct SolverReport {
    bool converged = false;
    StopReason stop_reason = StopReason::max_iter;
    int outer_iterations = 0;
    int inner_iterations = 0;
    double constraint_norm = 0.0;  // stacked residual over interior points
    double grad_norm = 0.0;
    double energy = 0.0;
};

struct GeodesicConfig {
    double mu0 = 10.0;
    double alpha = 2.0;
    double mu_max = 1e8;
    double omega_star = 1e-6;  // final gradient tolerance
    double eta_star = 1e-6;    // final constraint tolerance
    int max_outer = 200;
    int max_inner = 2000;
};

/// The paper-of-record rule of thumb for the final constraint tolerance:
/// K times the mean residual norm of the representation on the cloud.
double constraint_tol_rule_of_thumb(const ImplicitRep& rep, const PointCloud& cloud, int K);

/// Constrained geodesic interpolation by the augmented Lagrangian method
/// (multiplier updates when the constraint meets the current tolerance,
/// penalty growth otherwise). Initial path jumps from z0 to zK at the middle.
std::pair<DiscretePath, SolverReport> geodesic_auglag(const LocalEnergy& energy,
                                                      const ImplicitRep& rep, const Vector& z0,
                                                      const Vector& zK, int K,
                                                      const GeodesicConfig& cfg = {});

/// Unsigned distance to the manifold and its gradient (zero within 1e-12 of
/// the zero set, where the distance is not differentiable).
using DistanceField = std::function<std::pair<double, Vector>(const Vector&)>;

DistanceField make_distance_field(const AnalyticManifold& manifold);

/// Quadratic-penalty geodesic interpolation for manifolds given only through
/// a distance function. K = 1 returns the endpoints unchanged.
std::pair<DiscretePath, SolverReport> geodesic_penalty(const LocalEnergy& energy,
                                                       const DistanceField& distance,
                                                       const Vector& z0, const Vector& zK, int K,
                                                       const GeodesicConfig& cfg = {});

// ---------------------------------------------------------------------------
// Geodesic extrapolation

struct ExpConfig {
    double penalty = 1e4;      // weight of the constraint term
    double grad_tol = 1e-10;   // BFGS tolerance for the step functional
    int max_iter = 2000;
    int K = 0;                 // number of segments of the underlying path
};

struct ExpStepResult {
    Vector next;
    Vector multiplier;
    BfgsReport report;
    double functional_value = 0.0;
};

/// One extrapolation step: solves the interior stationarity condition for
/// (z_next, multiplier) given the previous two points.
ExpStepResult exp_step(const LocalEnergy& energy, const ImplicitRep& rep, const Vector& z_prev,
                       const Vector& z_cur, const ExpConfig& cfg);

/// Discrete exponential map: iterates exp_step K-1 times from z0 with initial
/// velocity v0 scaled as K (z1 - z0). Returns the full path; its last column
/// is the extrapolated endpoint.
DiscretePath discrete_exp(const LocalEnergy& energy, const ImplicitRep& rep, const Vector& z0,
                          const Vector& v0, int K, const ExpConfig& cfg = {});

}  // namespace geocalc
