#pragma once

#include "geocalc/types.hpp"

#include <functional>
#include <memory>
#include <string>

namespace geocalc {

/// Smooth map from latent space into a data space, with analytic Jacobian.
class Decoder {
public:
    virtual ~Decoder() = default;
    virtual int in_dim() const = 0;
    virtual int out_dim() const = 0;
    virtual Vector eval(const Vector& z) const = 0;
    virtual Matrix jacobian(const Vector& z) const = 0;
};

class IdentityDecoder final : public Decoder {
public:
    explicit IdentityDecoder(int dim) : dim_(dim) {}
    int in_dim() const override { return dim_; }
    int out_dim() const override { return dim_; }
    Vector eval(const Vector& z) const override { return z; }
    Matrix jacobian(const Vector& z) const override {
        return Matrix::Identity(z.size(), z.size());
    }

private:
    int dim_;
};

class LinearDecoder final : public Decoder {
public:
    explicit LinearDecoder(Matrix map) : map_(std::move(map)) {}
    int in_dim() const override { return static_cast<int>(map_.cols()); }
    int out_dim() const override { return static_cast<int>(map_.rows()); }
    Vector eval(const Vector& z) const override { return map_ * z; }
    Matrix jacobian(const Vector&) const override { return map_; }

private:
    Matrix map_;
};

/// Splits the input into blocks of three and normalizes each block onto the
/// unit sphere; stands in for decoders into products of spheres.
class SphereLiftDecoder final : public Decoder {
public:
    explicit SphereLiftDecoder(int num_blocks);
    int in_dim() const override { return 3 * num_blocks_; }
    int out_dim() const override { return 3 * num_blocks_; }
    int num_blocks() const { return num_blocks_; }
    Vector eval(const Vector& z) const override;
    Matrix jacobian(const Vector& z) const override;

private:
    int num_blocks_;
};

class CustomDecoder final : public Decoder {
public:
    using EvalFn = std::function<Vector(const Vector&)>;
    using JacobianFn = std::function<Matrix(const Vector&)>;

    CustomDecoder(int in_dim, int out_dim, EvalFn eval, JacobianFn jacobian)
        : in_dim_(in_dim), out_dim_(out_dim), eval_(std::move(eval)),
          jacobian_(std::move(jacobian)) {}
    int in_dim() const override { return in_dim_; }
    int out_dim() const override { return out_dim_; }
    Vector eval(const Vector& z) const override { return eval_(z); }
    Matrix jacobian(const Vector& z) const override { return jacobian_(z); }

private:
    int in_dim_, out_dim_;
    EvalFn eval_;
    JacobianFn jacobian_;
};

/// Local approximation of the squared Riemannian distance between nearby
/// points: symmetric, nonnegative, zero on the diagonal. The cross-Hessian
/// product is what geodesic extrapolation differentiates.
class LocalEnergy {
public:
    virtual ~LocalEnergy() = default;

    virtual double eval(const Vector& a, const Vector& b) const = 0;
    virtual double eval_grad(const Vector& a, const Vector& b, Vector& grad_a,
                             Vector& grad_b) const = 0;

    /// gradient with respect to b of (d/da W(a, b)) . r, analytic per variant.
    virtual Vector cross_hessian_apply(const Vector& a, const Vector& b,
                                       const Vector& r) const = 0;
};

/// |b - a|^2, the chain-of-springs energy of the ambient metric.
class EuclideanEnergy final : public LocalEnergy {
public:
    double eval(const Vector& a, const Vector& b) const override;
    double eval_grad(const Vector& a, const Vector& b, Vector& grad_a,
                     Vector& grad_b) const override;
    Vector cross_hessian_apply(const Vector& a, const Vector& b, const Vector& r) const override;
};

/// |psi(a) - psi(b)|^2 for a decoder psi: the pulled-back ambient data metric.
class PullbackEnergy final : public LocalEnergy {
public:
    explicit PullbackEnergy(std::shared_ptr<const Decoder> decoder)
        : decoder_(std::move(decoder)) {}
    double eval(const Vector& a, const Vector& b) const override;
    double eval_grad(const Vector& a, const Vector& b, Vector& grad_a,
                     Vector& grad_b) const override;
    Vector cross_hessian_apply(const Vector& a, const Vector& b, const Vector& r) const override;

private:
    std::shared_ptr<const Decoder> decoder_;
};

/// Sum of squared great-circle angles between decoded unit blocks.
class ProductSphereEnergy final : public LocalEnergy {
public:
    explicit ProductSphereEnergy(std::shared_ptr<const Decoder> decoder);
    double eval(const Vector& a, const Vector& b) const override;
    double eval_grad(const Vector& a, const Vector& b, Vector& grad_a,
                     Vector& grad_b) const override;
    Vector cross_hessian_apply(const Vector& a, const Vector& b, const Vector& r) const override;

private:
    std::shared_ptr<const Decoder> decoder_;
};

/// KL divergence between fixed-variance Gaussian decoders reduces to half the
/// squared distance of the means.
class GaussianKlEnergy final : public LocalEnergy {
public:
    explicit GaussianKlEnergy(std::shared_ptr<const Decoder> mean_map)
        : pullback_(std::move(mean_map)) {}
    double eval(const Vector& a, const Vector& b) const override {
        return 0.5 * pullback_.eval(a, b);
    }
    double eval_grad(const Vector& a, const Vector& b, Vector& grad_a,
                     Vector& grad_b) const override {
        const double value = 0.5 * pullback_.eval_grad(a, b, grad_a, grad_b);
        grad_a *= 0.5;
        grad_b *= 0.5;
        return value;
    }
    Vector cross_hessian_apply(const Vector& a, const Vector& b, const Vector& r) const override {
        return 0.5 * pullback_.cross_hessian_apply(a, b, r);
    }

private:
    PullbackEnergy pullback_;
};

/// Builds an energy from its config name: "euclid" | "pullback" |
/// "product-sphere" | "kl-gauss". Variants other than "euclid" require a
/// decoder.
std::unique_ptr<LocalEnergy> make_energy(const std::string& name,
                                         std::shared_ptr<const Decoder> decoder);

}  // namespace geocalc
