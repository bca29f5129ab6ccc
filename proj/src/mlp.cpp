#include "geocalc/mlp.hpp"

#include "geocalc/rng.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace geocalc {

namespace {

void check_shapes(const Mlp& model, const MlpParams& p) {
    if (p.weights.size() != model.weights.size() || p.biases.size() != model.biases.size())
        throw std::invalid_argument("parameter container has wrong number of layers");
    for (size_t i = 0; i < p.weights.size(); ++i) {
        if (p.weights[i].rows() != model.weights[i].rows() ||
            p.weights[i].cols() != model.weights[i].cols() ||
            p.biases[i].size() != model.biases[i].size())
            throw std::invalid_argument("parameter shape mismatch at layer " + std::to_string(i));
    }
}

}  // namespace

std::vector<int> Mlp::layer_dims() const {
    std::vector<int> dims;
    dims.push_back(input_dim());
    for (const auto& w : weights) dims.push_back(static_cast<int>(w.rows()));
    return dims;
}

MlpParams MlpParams::zeros_like(const Mlp& model) {
    MlpParams p;
    for (const auto& w : model.weights) p.weights.push_back(Matrix::Zero(w.rows(), w.cols()));
    for (const auto& b : model.biases) p.biases.push_back(Vector::Zero(b.size()));
    return p;
}

Mlp mlp_init(const std::vector<int>& layer_dims, std::uint64_t seed) {
    if (layer_dims.size() < 2) throw std::invalid_argument("need at least two layer dimensions");
    for (int d : layer_dims)
        if (d < 1) throw std::invalid_argument("layer dimensions must be >= 1");

    Mlp model;
    Rng rng(seed);
    for (size_t i = 0; i + 1 < layer_dims.size(); ++i) {
        const int fan_in = layer_dims[i];
        const int fan_out = layer_dims[i + 1];
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        Matrix w(fan_out, fan_in);
        for (int r = 0; r < fan_out; ++r)
            for (int c = 0; c < fan_in; ++c) w(r, c) = rng.uniform(-bound, bound);
        model.weights.push_back(std::move(w));
        model.biases.push_back(Vector::Zero(fan_out));
    }
    return model;
}

Vector mlp_forward(const Mlp& model, const Vector& x) {
    if (x.size() != model.input_dim()) throw std::invalid_argument("input dimension mismatch");
    Vector a = x;
    const int layers = model.num_layers();
    for (int i = 0; i < layers; ++i) {
        Vector z = model.weights[i] * a + model.biases[i];
        if (i + 1 < layers)
            a = z.unaryExpr([](double t) { return elu(t); });
        else
            a = std::move(z);
    }
    return a;
}

Matrix mlp_forward_batch(const Mlp& model, const Matrix& x) {
    if (x.rows() != model.input_dim()) throw std::invalid_argument("input dimension mismatch");
    Matrix a = x;
    const int layers = model.num_layers();
    for (int i = 0; i < layers; ++i) {
        Matrix z = (model.weights[i] * a).colwise() + model.biases[i];
        if (i + 1 < layers)
            a = z.unaryExpr([](double t) { return elu(t); });
        else
            a = std::move(z);
    }
    return a;
}

Matrix mlp_input_jacobian(const Mlp& model, const Vector& x) {
    if (x.size() != model.input_dim()) throw std::invalid_argument("input dimension mismatch");
    Vector a = x;
    Matrix jac = model.weights[0];
    const int layers = model.num_layers();
    for (int i = 0; i < layers; ++i) {
        if (i > 0) jac = model.weights[i] * jac;
        if (i + 1 < layers) {
            Vector z = model.weights[i] * a + model.biases[i];
            jac.array().colwise() *=
                z.unaryExpr([](double t) { return elu_derivative(t); }).array();
            a = z.unaryExpr([](double t) { return elu(t); });
        }
    }
    return jac;
}

MlpParams mlp_param_gradients(const Mlp& model, const Vector& x, const Vector& upstream) {
    return mlp_param_gradients_batch(model, x, upstream);
}

MlpParams mlp_param_gradients_batch(const Mlp& model, const Matrix& x, const Matrix& upstream) {
    if (x.rows() != model.input_dim()) throw std::invalid_argument("input dimension mismatch");
    if (upstream.rows() != model.output_dim() || upstream.cols() != x.cols())
        throw std::invalid_argument("upstream shape mismatch");

    const int layers = model.num_layers();
    std::vector<Matrix> activations;  // activations[i] feeds layer i
    std::vector<Matrix> pre_acts;     // pre-activation of hidden layers
    activations.reserve(layers);
    pre_acts.reserve(layers - 1);
    activations.push_back(x);
    for (int i = 0; i + 1 < layers; ++i) {
        Matrix z = (model.weights[i] * activations.back()).colwise() + model.biases[i];
        activations.push_back(z.unaryExpr([](double t) { return elu(t); }));
        pre_acts.push_back(std::move(z));
    }

    MlpParams grads = MlpParams::zeros_like(model);
    Matrix delta = upstream;
    for (int i = layers - 1; i >= 0; --i) {
        grads.weights[i] = delta * activations[i].transpose();
        grads.biases[i] = delta.rowwise().sum();
        if (i > 0) {
            delta = model.weights[i].transpose() * delta;
            delta.array() *=
                pre_acts[i - 1].unaryExpr([](double t) { return elu_derivative(t); }).array();
        }
    }
    return grads;
}

void adam_step(Mlp& model, AdamState& state, const MlpParams& gradients) {
    check_shapes(model, gradients);
    state.step_count += 1;
    const double t = static_cast<double>(state.step_count);
    const double bias1 = 1.0 - std::pow(state.beta1, t);
    const double bias2 = 1.0 - std::pow(state.beta2, t);
    const double decay = 1.0 - state.learning_rate * state.weight_decay;

    auto update = [&](auto& theta, auto& m, auto& v, const auto& g) {
        theta *= decay;
        m = state.beta1 * m + (1.0 - state.beta1) * g;
        v = state.beta2 * v + (1.0 - state.beta2) * g.cwiseProduct(g);
        theta.array() -= state.learning_rate * (m.array() / bias1) /
                         ((v.array() / bias2).sqrt() + state.epsilon);
    };

    for (size_t i = 0; i < model.weights.size(); ++i) {
        update(model.weights[i], state.first_moment.weights[i], state.second_moment.weights[i],
               gradients.weights[i]);
        update(model.biases[i], state.first_moment.biases[i], state.second_moment.biases[i],
               gradients.biases[i]);
    }
}

}  // namespace geocalc
