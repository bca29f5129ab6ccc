#pragma once

#include "geocalc/types.hpp"

#include <cstdint>
#include <vector>

namespace geocalc {

/// Fully connected network with ELU activations on all layers except the
/// affine output layer. Models are immutable values for inference; training
/// mutates a single owned instance.
struct Mlp {
    std::vector<Matrix> weights;  // weights[i] maps layer i to layer i+1
    std::vector<Vector> biases;

    int input_dim() const { return static_cast<int>(weights.front().cols()); }
    int output_dim() const { return static_cast<int>(weights.back().rows()); }
    int num_layers() const { return static_cast<int>(weights.size()); }
    std::vector<int> layer_dims() const;
};

/// Parameter-shaped container used for gradients and optimizer moments.
struct MlpParams {
    std::vector<Matrix> weights;
    std::vector<Vector> biases;

    static MlpParams zeros_like(const Mlp& model);
};

struct AdamState {
    MlpParams first_moment;
    MlpParams second_moment;
    long step_count = 0;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 1e-5;

    explicit AdamState(const Mlp& model)
        : first_moment(MlpParams::zeros_like(model)),
          second_moment(MlpParams::zeros_like(model)) {}
};

inline double elu(double t) { return t >= 0.0 ? t : std::expm1(t); }
inline double elu_derivative(double t) { return t >= 0.0 ? 1.0 : std::exp(t); }

/// Glorot-uniform weights, zero biases; bit-identical for a fixed seed.
Mlp mlp_init(const std::vector<int>& layer_dims, std::uint64_t seed);

Vector mlp_forward(const Mlp& model, const Vector& x);

/// Batched forward pass, one sample per column.
Matrix mlp_forward_batch(const Mlp& model, const Matrix& x);

/// Exact Jacobian of the output with respect to the input.
Matrix mlp_input_jacobian(const Mlp& model, const Vector& x);

/// Gradient of <upstream, output(x)> with respect to every weight and bias.
MlpParams mlp_param_gradients(const Mlp& model, const Vector& x, const Vector& upstream);

/// Sum over columns of per-sample <upstream_j, output(x_j)> gradients.
MlpParams mlp_param_gradients_batch(const Mlp& model, const Matrix& x, const Matrix& upstream);

/// Bias-corrected Adam update with decoupled weight decay applied
/// multiplicatively before the moment update.
void adam_step(Mlp& model, AdamState& state, const MlpParams& gradients);

}  // namespace geocalc
