#include "geocalc/energy.hpp"

#include <cmath>
#include <stdexcept>

namespace geocalc {

namespace {

void check_pair(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw std::invalid_argument("energy arguments differ in dimension");
}

constexpr double kNearAligned = 1e-6;   // switch to series expansions above 1 - this
constexpr double kAntipodalTol = 1e-9;  // dot <= -1 + this is treated as antipodal

// d/dt arccos(t)^2 = -2 arccos(t) / sqrt(1 - t^2); removable singularity at t = 1.
double angle_sq_d1(double t) {
    if (t > 1.0 - kNearAligned) {
        const double e = 1.0 - t;
        return -2.0 * (1.0 + e / 3.0 + 2.0 * e * e / 15.0);
    }
    const double beta = std::acos(t);
    return -2.0 * beta / std::sqrt(1.0 - t * t);
}

// second derivative of arccos(t)^2.
double angle_sq_d2(double t) {
    if (t > 1.0 - kNearAligned) {
        const double e = 1.0 - t;
        return 2.0 / 3.0 + 8.0 * e / 15.0;
    }
    const double beta = std::acos(t);
    const double s = std::sin(beta);
    return 2.0 * (s - beta * std::cos(beta)) / (s * s * s);
}

}  // namespace

// ---------------------------------------------------------------------------
// EuclideanEnergy

double EuclideanEnergy::eval(const Vector& a, const Vector& b) const {
    check_pair(a, b);
    return (b - a).squaredNorm();
}

double EuclideanEnergy::eval_grad(const Vector& a, const Vector& b, Vector& grad_a,
                                  Vector& grad_b) const {
    check_pair(a, b);
    const Vector d = b - a;
    grad_a = -2.0 * d;
    grad_b = 2.0 * d;
    return d.squaredNorm();
}

Vector EuclideanEnergy::cross_hessian_apply(const Vector& a, const Vector& b,
                                            const Vector& r) const {
    check_pair(a, b);
    return -2.0 * r;
}

// ---------------------------------------------------------------------------
// PullbackEnergy

double PullbackEnergy::eval(const Vector& a, const Vector& b) const {
    check_pair(a, b);
    return (decoder_->eval(a) - decoder_->eval(b)).squaredNorm();
}

double PullbackEnergy::eval_grad(const Vector& a, const Vector& b, Vector& grad_a,
                                 Vector& grad_b) const {
    check_pair(a, b);
    const Vector d = decoder_->eval(a) - decoder_->eval(b);
    grad_a = 2.0 * decoder_->jacobian(a).transpose() * d;
    grad_b = -2.0 * decoder_->jacobian(b).transpose() * d;
    return d.squaredNorm();
}

Vector PullbackEnergy::cross_hessian_apply(const Vector& a, const Vector& b,
                                           const Vector& r) const {
    check_pair(a, b);
    return -2.0 * decoder_->jacobian(b).transpose() * (decoder_->jacobian(a) * r);
}

// ---------------------------------------------------------------------------
// SphereLiftDecoder

SphereLiftDecoder::SphereLiftDecoder(int num_blocks) : num_blocks_(num_blocks) {
    if (num_blocks < 1) throw std::invalid_argument("need at least one block");
}

Vector SphereLiftDecoder::eval(const Vector& z) const {
    if (z.size() != in_dim()) throw std::invalid_argument("input dimension mismatch");
    Vector out(z.size());
    for (int i = 0; i < num_blocks_; ++i) {
        const Vector u = z.segment(3 * i, 3);
        const double n = u.norm();
        if (n < 1e-12) throw std::domain_error("sphere lift block has near-zero norm");
        out.segment(3 * i, 3) = u / n;
    }
    return out;
}

Matrix SphereLiftDecoder::jacobian(const Vector& z) const {
    if (z.size() != in_dim()) throw std::invalid_argument("input dimension mismatch");
    Matrix jac = Matrix::Zero(z.size(), z.size());
    for (int i = 0; i < num_blocks_; ++i) {
        const Vector u = z.segment(3 * i, 3);
        const double n = u.norm();
        if (n < 1e-12) throw std::domain_error("sphere lift block has near-zero norm");
        const Vector uhat = u / n;
        jac.block(3 * i, 3 * i, 3, 3) =
            (Matrix::Identity(3, 3) - uhat * uhat.transpose()) / n;
    }
    return jac;
}

// ---------------------------------------------------------------------------
// ProductSphereEnergy

ProductSphereEnergy::ProductSphereEnergy(std::shared_ptr<const Decoder> decoder)
    : decoder_(std::move(decoder)) {
    if (decoder_->out_dim() % 3 != 0)
        throw std::invalid_argument("product-sphere energy needs a decoder with 3k outputs");
}

namespace {

struct BlockGeometry {
    Vector unit_a, unit_b;  // renormalized decoded blocks
    double norm_a, norm_b;  // pre-normalization norms
    double dot;             // clamped to [-1, 1]
};

BlockGeometry block_geometry(const Vector& da, const Vector& db, int block) {
    BlockGeometry g;
    const Vector ua = da.segment(3 * block, 3);
    const Vector ub = db.segment(3 * block, 3);
    g.norm_a = ua.norm();
    g.norm_b = ub.norm();
    if (g.norm_a < 1e-12 || g.norm_b < 1e-12)
        throw std::domain_error("decoded block has near-zero norm");
    g.unit_a = ua / g.norm_a;
    g.unit_b = ub / g.norm_b;
    g.dot = std::min(1.0, std::max(-1.0, g.unit_a.dot(g.unit_b)));
    return g;
}

}  // namespace

double ProductSphereEnergy::eval(const Vector& a, const Vector& b) const {
    check_pair(a, b);
    const Vector da = decoder_->eval(a);
    const Vector db = decoder_->eval(b);
    double total = 0.0;
    for (int i = 0; i < da.size() / 3; ++i) {
        const BlockGeometry g = block_geometry(da, db, i);
        const double angle = std::acos(g.dot);
        total += angle * angle;
    }
    return total;
}

double ProductSphereEnergy::eval_grad(const Vector& a, const Vector& b, Vector& grad_a,
                                      Vector& grad_b) const {
    check_pair(a, b);
    const Vector da = decoder_->eval(a);
    const Vector db = decoder_->eval(b);
    const int blocks = static_cast<int>(da.size()) / 3;
    Vector up_a(da.size()), up_b(db.size());
    double total = 0.0;
    for (int i = 0; i < blocks; ++i) {
        const BlockGeometry g = block_geometry(da, db, i);
        if (g.dot <= -1.0 + kAntipodalTol)
            throw AntipodalBlock("block " + std::to_string(i) + " is antipodal");
        const double angle = std::acos(g.dot);
        total += angle * angle;
        const double d1 = angle_sq_d1(g.dot);
        // chain through the internal renormalization of each block
        const Matrix pa =
            (Matrix::Identity(3, 3) - g.unit_a * g.unit_a.transpose()) / g.norm_a;
        const Matrix pb =
            (Matrix::Identity(3, 3) - g.unit_b * g.unit_b.transpose()) / g.norm_b;
        up_a.segment(3 * i, 3) = d1 * (pa * g.unit_b);
        up_b.segment(3 * i, 3) = d1 * (pb * g.unit_a);
    }
    grad_a = decoder_->jacobian(a).transpose() * up_a;
    grad_b = decoder_->jacobian(b).transpose() * up_b;
    return total;
}

Vector ProductSphereEnergy::cross_hessian_apply(const Vector& a, const Vector& b,
                                                const Vector& r) const {
    check_pair(a, b);
    const Vector da = decoder_->eval(a);
    const Vector db = decoder_->eval(b);
    const Vector push = decoder_->jacobian(a) * r;  // d(decoded a)/da . r
    const int blocks = static_cast<int>(da.size()) / 3;
    Vector up_b(db.size());
    for (int i = 0; i < blocks; ++i) {
        const BlockGeometry g = block_geometry(da, db, i);
        if (g.dot <= -1.0 + kAntipodalTol)
            throw AntipodalBlock("block " + std::to_string(i) + " is antipodal");
        const Matrix pa =
            (Matrix::Identity(3, 3) - g.unit_a * g.unit_a.transpose()) / g.norm_a;
        const Matrix pb =
            (Matrix::Identity(3, 3) - g.unit_b * g.unit_b.transpose()) / g.norm_b;
        const Vector q = pa * push.segment(3 * i, 3);
        // d/db [ d1(dot) * (unit_b . q) ] with dot = unit_a . unit_b
        up_b.segment(3 * i, 3) = angle_sq_d2(g.dot) * g.unit_b.dot(q) * (pb * g.unit_a) +
                                 angle_sq_d1(g.dot) * (pb * q);
    }
    return decoder_->jacobian(b).transpose() * up_b;
}

// ---------------------------------------------------------------------------

std::unique_ptr<LocalEnergy> make_energy(const std::string& name,
                                         std::shared_ptr<const Decoder> decoder) {
    if (name == "euclid") return std::make_unique<EuclideanEnergy>();
    if (!decoder) throw std::invalid_argument("energy '" + name + "' requires a decoder");
    if (name == "pullback") return std::make_unique<PullbackEnergy>(std::move(decoder));
    if (name == "product-sphere")
        return std::make_unique<ProductSphereEnergy>(std::move(decoder));
    if (name == "kl-gauss") return std::make_unique<GaussianKlEnergy>(std::move(decoder));
    throw std::invalid_argument("unknown energy '" + name + "'");
}

}  // namespace geocalc
