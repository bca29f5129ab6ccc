#pragma once

#include "geocalc/types.hpp"

#include <cstdint>
#include <variant>

namespace geocalc {

// Analytic ground-truth manifolds. They provide exact nearest-point
// projections, residuals and Jacobians against which learned
// representations are validated.

struct Torus {
    double major_radius = 2.0 / 3.0;
    double tube_radius = 1.0 / 3.0;  // outer radius defaults to 1
};

struct Sphere {
    double radius = 1.0;
};

struct Circle2D {
    double radius = 1.0;
};

struct AffineSubspace {
    Vector basepoint;  // in R^l
    Matrix basis;      // l x m, orthonormal columns
};

class AnalyticManifold {
public:
    using Kind = std::variant<Torus, Sphere, Circle2D, AffineSubspace>;

    explicit AnalyticManifold(Kind kind);

    int ambient_dim() const { return ambient_dim_; }
    int intrinsic_dim() const { return intrinsic_dim_; }
    const Kind& kind() const { return kind_; }

private:
    Kind kind_;
    int ambient_dim_ = 0;
    int intrinsic_dim_ = 0;
};

struct PointCloud {
    Matrix points;  // l x n, one point per column
    std::uint64_t seed = 0;
    double noise_sd = 0.0;

    int dim() const { return static_cast<int>(points.rows()); }
    int size() const { return static_cast<int>(points.cols()); }
};

/// Implicit representation of a manifold: a residual map vanishing on it
/// together with its exact Jacobian. Implementations are pure and safe to
/// share across threads.
class ImplicitRep {
public:
    virtual ~ImplicitRep() = default;

    virtual int dim() const = 0;
    virtual void eval(const Vector& z, Vector& residual, Matrix& jacobian) const = 0;

    Vector residual(const Vector& z) const {
        Vector r;
        Matrix j;
        eval(z, r, j);
        return r;
    }
};

/// Unique nearest point on the manifold. Throws SingularPoint within 1e-9 of
/// the equidistant set (torus axis and spine circle, sphere/circle center).
Vector nearest_point(const AnalyticManifold& m, const Vector& p);

/// Residual p - nearest_point(p) and its exact Jacobian.
void projection_residual(const AnalyticManifold& m, const Vector& p, Vector& residual,
                         Matrix& jacobian);

/// Unsigned Euclidean distance to the manifold.
double ambient_distance(const AnalyticManifold& m, const Vector& p);

/// Orthonormal basis of the normal space at a point on (or near) the manifold,
/// l x (l - m). Columns are deterministic functions of the point.
Matrix normal_frame(const AnalyticManifold& m, const Vector& p);

/// n points drawn area-uniformly on the manifold plus isotropic Gaussian noise.
/// Deterministic for a fixed seed.
PointCloud sample_cloud(const AnalyticManifold& m, int n, double noise_sd, std::uint64_t seed);

/// Gaussian-weighted barycenter of the cloud: sum_i z_i w_i / sum_i w_i with
/// w_i = exp(-|y - z_i|^2 / (2 sigma^2)), evaluated with the max-shift trick.
Vector kernel_projection(const Vector& y, const PointCloud& cloud, double sigma);

/// Exact implicit representation backed by an analytic manifold.
class AnalyticRep final : public ImplicitRep {
public:
    explicit AnalyticRep(AnalyticManifold manifold) : manifold_(std::move(manifold)) {}

    int dim() const override { return manifold_.ambient_dim(); }
    void eval(const Vector& z, Vector& residual, Matrix& jacobian) const override {
        projection_residual(manifold_, z, residual, jacobian);
    }
    const AnalyticManifold& manifold() const { return manifold_; }

private:
    AnalyticManifold manifold_;
};

/// Training-free oracle representation built from the kernel barycenter.
/// The Jacobian of the barycenter is the weighted covariance of the cloud
/// divided by sigma^2.
class KernelBarycenterRep final : public ImplicitRep {
public:
    KernelBarycenterRep(PointCloud cloud, double sigma);

    int dim() const override { return cloud_.dim(); }
    void eval(const Vector& z, Vector& residual, Matrix& jacobian) const override;

    Vector project(const Vector& y) const { return kernel_projection(y, cloud_, sigma_); }
    double sigma() const { return sigma_; }

private:
    PointCloud cloud_;
    double sigma_;
};

}  // namespace geocalc
