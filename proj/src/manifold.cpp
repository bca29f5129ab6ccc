#include "geocalc/manifold.hpp"

#include "geocalc/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace geocalc {

namespace {

constexpr double kSingularGuard = 1e-9;
constexpr double kPi = std::numbers::pi;

int ambient_dim_of(const AnalyticManifold::Kind& kind) {
    if (std::holds_alternative<Torus>(kind)) return 3;
    if (std::holds_alternative<Sphere>(kind)) return 3;
    if (std::holds_alternative<Circle2D>(kind)) return 2;
    return static_cast<int>(std::get<AffineSubspace>(kind).basepoint.size());
}

int intrinsic_dim_of(const AnalyticManifold::Kind& kind) {
    if (std::holds_alternative<Torus>(kind)) return 2;
    if (std::holds_alternative<Sphere>(kind)) return 2;
    if (std::holds_alternative<Circle2D>(kind)) return 1;
    return static_cast<int>(std::get<AffineSubspace>(kind).basis.cols());
}

void check_dim(const AnalyticManifold& m, const Vector& p) {
    if (p.size() != m.ambient_dim())
        throw std::invalid_argument("point dimension " + std::to_string(p.size()) +
                                    " does not match ambient dimension " +
                                    std::to_string(m.ambient_dim()));
    if (!p.allFinite()) throw std::invalid_argument("point has non-finite entries");
}

// Nearest point on a centered sphere of given radius, any dimension.
Vector project_sphere(double radius, const Vector& p) {
    const double n = p.norm();
    if (n < kSingularGuard) throw SingularPoint("point at sphere center");
    return (radius / n) * p;
}

// Spine-circle foot point of the torus, i.e. R * (x, y, 0) / |(x, y)|.
Vector torus_spine_point(const Torus& t, const Vector& p) {
    const double rho = std::hypot(p[0], p[1]);
    if (rho < kSingularGuard) throw SingularPoint("point on torus axis");
    Vector c(3);
    c << t.major_radius * p[0] / rho, t.major_radius * p[1] / rho, 0.0;
    return c;
}

}  // namespace

AnalyticManifold::AnalyticManifold(Kind kind) : kind_(std::move(kind)) {
    ambient_dim_ = ambient_dim_of(kind_);
    intrinsic_dim_ = intrinsic_dim_of(kind_);
    if (const auto* t = std::get_if<Torus>(&kind_)) {
        if (!(t->tube_radius > 0.0 && t->tube_radius < t->major_radius))
            throw std::invalid_argument("torus requires 0 < tube_radius < major_radius");
    } else if (const auto* s = std::get_if<Sphere>(&kind_)) {
        if (!(s->radius > 0.0)) throw std::invalid_argument("sphere radius must be positive");
    } else if (const auto* c = std::get_if<Circle2D>(&kind_)) {
        if (!(c->radius > 0.0)) throw std::invalid_argument("circle radius must be positive");
    } else if (const auto* a = std::get_if<AffineSubspace>(&kind_)) {
        if (a->basepoint.size() != a->basis.rows())
            throw std::invalid_argument("affine basepoint/basis dimensions disagree");
        if (a->basis.cols() < 1 || a->basis.cols() >= a->basis.rows())
            throw std::invalid_argument("affine basis must have 1 <= m < l columns");
        const Matrix gram = a->basis.transpose() * a->basis;
        if ((gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() > 1e-12)
            throw std::invalid_argument("affine basis columns must be orthonormal to 1e-12");
    }
}

Vector nearest_point(const AnalyticManifold& m, const Vector& p) {
    check_dim(m, p);
    if (const auto* t = std::get_if<Torus>(&m.kind())) {
        const Vector c = torus_spine_point(*t, p);
        const Vector v = p - c;
        const double vn = v.norm();
        if (vn < kSingularGuard) throw SingularPoint("point on torus spine circle");
        return c + (t->tube_radius / vn) * v;
    }
    if (const auto* s = std::get_if<Sphere>(&m.kind())) return project_sphere(s->radius, p);
    if (const auto* c = std::get_if<Circle2D>(&m.kind())) return project_sphere(c->radius, p);
    const auto& a = std::get<AffineSubspace>(m.kind());
    return a.basepoint + a.basis * (a.basis.transpose() * (p - a.basepoint));
}

void projection_residual(const AnalyticManifold& m, const Vector& p, Vector& residual,
                         Matrix& jacobian) {
    check_dim(m, p);
    const int l = m.ambient_dim();
    if (const auto* t = std::get_if<Torus>(&m.kind())) {
        // Two-stage projection: onto the spine circle, then onto the tube.
        const double rho = std::hypot(p[0], p[1]);
        if (rho < kSingularGuard) throw SingularPoint("point on torus axis");
        Vector nhat(3);
        nhat << p[0] / rho, p[1] / rho, 0.0;
        const Vector c = t->major_radius * nhat;
        const Vector v = p - c;
        const double vn = v.norm();
        if (vn < kSingularGuard) throw SingularPoint("point on torus spine circle");
        const Vector vhat = v / vn;

        Matrix planar = Matrix::Zero(3, 3);
        planar(0, 0) = planar(1, 1) = 1.0;
        const Matrix spine_jac =
            (t->major_radius / rho) * (planar - nhat * nhat.transpose());
        const Matrix tube_jac = (t->tube_radius / vn) *
                                (Matrix::Identity(3, 3) - vhat * vhat.transpose()) *
                                (Matrix::Identity(3, 3) - spine_jac);
        const Matrix proj_jac = spine_jac + tube_jac;
        residual = p - (c + t->tube_radius * vhat);
        jacobian = Matrix::Identity(3, 3) - proj_jac;
        return;
    }
    double radius = 0.0;
    if (const auto* s = std::get_if<Sphere>(&m.kind())) radius = s->radius;
    if (const auto* c = std::get_if<Circle2D>(&m.kind())) radius = c->radius;
    if (radius > 0.0) {
        const double n = p.norm();
        if (n < kSingularGuard) throw SingularPoint("point at center");
        const Vector phat = p / n;
        residual = p - radius * phat;
        jacobian = Matrix::Identity(l, l) -
                   (radius / n) * (Matrix::Identity(l, l) - phat * phat.transpose());
        return;
    }
    const auto& a = std::get<AffineSubspace>(m.kind());
    const Matrix tangent_proj = a.basis * a.basis.transpose();
    residual = (p - a.basepoint) - tangent_proj * (p - a.basepoint);
    jacobian = Matrix::Identity(l, l) - tangent_proj;
}

double ambient_distance(const AnalyticManifold& m, const Vector& p) {
    return (p - nearest_point(m, p)).norm();
}

Matrix normal_frame(const AnalyticManifold& m, const Vector& p) {
    check_dim(m, p);
    if (const auto* t = std::get_if<Torus>(&m.kind())) {
        const Vector c = torus_spine_point(*t, p);
        Vector v = p - c;
        const double vn = v.norm();
        if (vn < kSingularGuard) throw SingularPoint("normal undefined on spine circle");
        return v / vn;
    }
    if (std::holds_alternative<Sphere>(m.kind()) || std::holds_alternative<Circle2D>(m.kind())) {
        const double n = p.norm();
        if (n < kSingularGuard) throw SingularPoint("normal undefined at center");
        return p / n;
    }
    // Orthonormal complement of the tangent basis via full QR.
    const auto& a = std::get<AffineSubspace>(m.kind());
    const int l = m.ambient_dim();
    const int mdim = m.intrinsic_dim();
    Eigen::HouseholderQR<Matrix> qr(a.basis);
    const Matrix q = qr.householderQ() * Matrix::Identity(l, l);
    return q.rightCols(l - mdim);
}

PointCloud sample_cloud(const AnalyticManifold& m, int n, double noise_sd, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("sample_cloud requires n >= 1");
    if (noise_sd < 0.0) throw std::invalid_argument("noise_sd must be nonnegative");
    const int l = m.ambient_dim();
    PointCloud cloud;
    cloud.points.resize(l, n);
    cloud.seed = seed;
    cloud.noise_sd = noise_sd;
    Rng rng(seed);

    for (int i = 0; i < n; ++i) {
        Vector z(l);
        if (const auto* t = std::get_if<Torus>(&m.kind())) {
            const double theta = 2.0 * kPi * rng.uniform01();
            // Area element is proportional to R + r cos(phi); rejection-sample phi.
            double phi;
            do {
                phi = 2.0 * kPi * rng.uniform01();
            } while (rng.uniform01() * (t->major_radius + t->tube_radius) >
                     t->major_radius + t->tube_radius * std::cos(phi));
            const double ring = t->major_radius + t->tube_radius * std::cos(phi);
            z << ring * std::cos(theta), ring * std::sin(theta), t->tube_radius * std::sin(phi);
        } else if (const auto* s = std::get_if<Sphere>(&m.kind())) {
            Vector g(3);
            do {
                for (int d = 0; d < 3; ++d) g[d] = rng.normal();
            } while (g.norm() < kSingularGuard);
            z = (s->radius / g.norm()) * g;
        } else if (const auto* c = std::get_if<Circle2D>(&m.kind())) {
            const double theta = 2.0 * kPi * rng.uniform01();
            z << c->radius * std::cos(theta), c->radius * std::sin(theta);
        } else {
            // Uniform over the unit-box patch of tangent coefficients.
            const auto& a = std::get<AffineSubspace>(m.kind());
            Vector coeff(a.basis.cols());
            for (int d = 0; d < coeff.size(); ++d) coeff[d] = rng.uniform(-1.0, 1.0);
            z = a.basepoint + a.basis * coeff;
        }
        if (noise_sd > 0.0)
            for (int d = 0; d < l; ++d) z[d] += noise_sd * rng.normal();
        cloud.points.col(i) = z;
    }
    return cloud;
}

Vector kernel_projection(const Vector& y, const PointCloud& cloud, double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
    if (cloud.size() < 1) throw std::invalid_argument("cloud is empty");
    if (y.size() != cloud.dim())
        throw std::invalid_argument("query dimension does not match cloud dimension");

    const int n = cloud.size();
    Vector sq_dist(n);
    for (int i = 0; i < n; ++i) sq_dist[i] = (cloud.points.col(i) - y).squaredNorm();
    const double shift = sq_dist.minCoeff();

    const double inv = 1.0 / (2.0 * sigma * sigma);
    double total = 0.0;
    Vector acc = Vector::Zero(y.size());
    for (int i = 0; i < n; ++i) {
        const double w = std::exp(-(sq_dist[i] - shift) * inv);
        total += w;
        acc += w * cloud.points.col(i);
    }
    if (!(total > 0.0) || !acc.allFinite())
        throw DegenerateWeights("all kernel weights vanished");
    return acc / total;
}

KernelBarycenterRep::KernelBarycenterRep(PointCloud cloud, double sigma)
    : cloud_(std::move(cloud)), sigma_(sigma) {
    if (!(sigma_ > 0.0)) throw std::invalid_argument("sigma must be positive");
    if (cloud_.size() < 1) throw std::invalid_argument("cloud is empty");
}

void KernelBarycenterRep::eval(const Vector& z, Vector& residual, Matrix& jacobian) const {
    const int n = cloud_.size();
    const int l = cloud_.dim();
    if (z.size() != l) throw std::invalid_argument("query dimension mismatch");

    Vector sq_dist(n);
    for (int i = 0; i < n; ++i) sq_dist[i] = (cloud_.points.col(i) - z).squaredNorm();
    const double shift = sq_dist.minCoeff();
    const double inv = 1.0 / (2.0 * sigma_ * sigma_);

    double total = 0.0;
    Vector mean = Vector::Zero(l);
    Matrix second = Matrix::Zero(l, l);
    for (int i = 0; i < n; ++i) {
        const double w = std::exp(-(sq_dist[i] - shift) * inv);
        total += w;
        mean += w * cloud_.points.col(i);
        second += w * cloud_.points.col(i) * cloud_.points.col(i).transpose();
    }
    if (!(total > 0.0)) throw DegenerateWeights("all kernel weights vanished");
    mean /= total;
    // d(barycenter)/dz = Cov_w(z_i) / sigma^2.
    const Matrix cov = second / total - mean * mean.transpose();
    residual = z - mean;
    jacobian = Matrix::Identity(l, l) - cov / (sigma_ * sigma_);
}

}  // namespace geocalc
