// Copyright 2026 The irsce Authors
// SPDX-License-Identifier: Apache-2.0

#include "irsce/nn/model.hpp"

#include <fmt/format.h>

#include <cmath>

#include "irsce/core/error.hpp"
#include "irsce/simd/kernels.hpp"

namespace irsce::nn {

void ModelArchitecture::validate() const {
  if (middle_repeats < 1) {
    throw ValidationError(fmt::format("middle_repeats must be >= 1, got {}", middle_repeats));
  }
  if (width < 1) throw ValidationError(fmt::format("width must be >= 1, got {}", width));
}

template <typename T>
Model<T>::Model(const ModelArchitecture& arch) : arch_(arch) {
  arch_.validate();
  units_.reserve(arch_.num_layers());
  for (int block = 0; block < ModelArchitecture::kBlocks; ++block) {
    ConvUnit<T> input{Conv2d<T>(ModelArchitecture::kIoChannels, arch_.width),
                      BatchNorm2d<T>(arch_.width), {}};
    units_.push_back(std::move(input));
    for (int i = 0; i < arch_.middle_layers_per_block(); ++i) {
      units_.push_back(ConvUnit<T>{Conv2d<T>(arch_.width, arch_.width), BatchNorm2d<T>(arch_.width), {}});
    }
    units_.push_back(ConvUnit<T>{Conv2d<T>(arch_.width, ModelArchitecture::kIoChannels), std::nullopt, {}});
  }
  for (auto& p : parameters()) {
    first_moments_.emplace_back(p.value.size(), T(0));
    second_moments_.emplace_back(p.value.size(), T(0));
  }
}

template <typename T>
void Model<T>::initialize(Rng& rng) {
  for (auto& u : units_) {
    u.conv.init_he(rng);
    if (u.norm) *u.norm = BatchNorm2d<T>(u.norm->channels);
  }
}

template <typename T>
Tensor4<T> Model<T>::forward(const Tensor4<T>& x, Mode mode) {
  if (x.channels() != ModelArchitecture::kIoChannels) {
    throw DimensionError(fmt::format("model input {} must have {} channels", x.shape(),
                                     ModelArchitecture::kIoChannels));
  }
  const bool keep = mode == Mode::training;
  const auto& k = simd::active_kernels<T>();
  FeatureMap<T> block_input = to_feature_map(x);
  std::size_t u = 0;
  for (int block = 0; block < ModelArchitecture::kBlocks; ++block) {
    FeatureMap<T> h = block_input;
    for (int i = 0; i < arch_.layers_per_block(); ++i, ++u) {
      ConvUnit<T>& unit = units_[u];
      h = unit.conv.forward(std::move(h), keep);
      if (unit.norm) {
        FeatureMap<T> z = unit.norm->forward(h, mode, keep);
        k.relu(z.size(), z.data(), h.data());
        if (keep) unit.pre_activation = std::move(z);
      }
    }
    if (arch_.residual_skip) {
      for (std::size_t i = 0; i < h.size(); ++i) h.data()[i] += block_input.data()[i];
    }
    block_input = std::move(h);
  }
  return to_tensor(block_input);
}

template <typename T>
Tensor4<T> Model<T>::infer(const Tensor4<T>& x) const {
  if (x.channels() != ModelArchitecture::kIoChannels) {
    throw DimensionError(fmt::format("model input {} must have {} channels", x.shape(),
                                     ModelArchitecture::kIoChannels));
  }
  const auto& k = simd::active_kernels<T>();
  FeatureMap<T> block_input = to_feature_map(x);
  std::size_t u = 0;
  for (int block = 0; block < ModelArchitecture::kBlocks; ++block) {
    FeatureMap<T> h = block_input;
    for (int i = 0; i < arch_.layers_per_block(); ++i, ++u) {
      const ConvUnit<T>& unit = units_[u];
      h = conv2d_forward<T>(h, unit.conv.weight, unit.conv.bias, unit.conv.out_channels);
      if (unit.norm) {
        FeatureMap<T> z = unit.norm->infer(h);
        k.relu(z.size(), z.data(), h.data());
      }
    }
    if (arch_.residual_skip) {
      for (std::size_t i = 0; i < h.size(); ++i) h.data()[i] += block_input.data()[i];
    }
    block_input = std::move(h);
  }
  return to_tensor(block_input);
}

template <typename T>
Tensor4<T> Model<T>::backward(const Tensor4<T>& d_output) {
  const auto& k = simd::active_kernels<T>();
  FeatureMap<T> d_block_out = to_feature_map(d_output);
  std::size_t u = units_.size();
  for (int block = ModelArchitecture::kBlocks - 1; block >= 0; --block) {
    FeatureMap<T> g = d_block_out;
    for (int i = 0; i < arch_.layers_per_block(); ++i) {
      ConvUnit<T>& unit = units_[--u];
      if (unit.norm) {
        k.relu_backward(g.size(), unit.pre_activation.data(), g.data(), g.data());
        g = unit.norm->backward(g);
      }
      g = unit.conv.backward(g);
    }
    if (arch_.residual_skip) {
      for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] += d_block_out.data()[i];
    }
    d_block_out = std::move(g);
  }
  return to_tensor(d_block_out);
}

template <typename T>
void Model<T>::zero_grad() {
  for (auto& p : parameters()) std::fill(p.grad.begin(), p.grad.end(), T(0));
}

template <typename T>
std::vector<ParamView<T>> Model<T>::parameters() {
  std::vector<ParamView<T>> out;
  const bool have_moments = !first_moments_.empty();
  auto push = [&](std::string name, std::vector<T>& value, std::vector<T>& grad) {
    const std::size_t idx = out.size();
    ParamView<T> view{std::move(name), value, grad, {}, {}};
    if (have_moments) {
      view.first_moment = first_moments_[idx];
      view.second_moment = second_moments_[idx];
    }
    out.push_back(std::move(view));
  };
  for (std::size_t i = 0; i < units_.size(); ++i) {
    auto& unit = units_[i];
    push(fmt::format("layer{}.weight", i), unit.conv.weight, unit.conv.grad_weight);
    push(fmt::format("layer{}.bias", i), unit.conv.bias, unit.conv.grad_bias);
    if (unit.norm) {
      push(fmt::format("layer{}.gamma", i), unit.norm->gamma, unit.norm->grad_gamma);
      push(fmt::format("layer{}.beta", i), unit.norm->beta, unit.norm->grad_beta);
    }
  }
  return out;
}

template <typename T>
std::size_t Model<T>::parameter_count() const {
  std::size_t total = 0;
  for (const auto& unit : units_) {
    total += unit.conv.weight.size() + unit.conv.bias.size();
    if (unit.norm) total += unit.norm->gamma.size() + unit.norm->beta.size();
  }
  return total;
}

template <typename T>
void adam_step(Model<T>& model, const AdamConfig& cfg) {
  auto params = model.parameters();
  for (const auto& p : params) {
    for (const T g : p.grad) {
      if (!std::isfinite(g)) throw NumericalError(fmt::format("non-finite gradient in {}", p.name));
    }
  }
  const std::uint64_t t = model.step() + 1;
  const simd::AdamCoefficients<T> c{
      static_cast<T>(cfg.learning_rate),
      static_cast<T>(cfg.beta1),
      static_cast<T>(cfg.beta2),
      static_cast<T>(cfg.epsilon),
      static_cast<T>(1.0 - std::pow(cfg.beta1, static_cast<double>(t))),
      static_cast<T>(1.0 - std::pow(cfg.beta2, static_cast<double>(t))),
  };
  const auto& k = simd::active_kernels<T>();
  for (auto& p : params) {
    k.adam_update(p.value.size(), p.value.data(), p.grad.data(), p.first_moment.data(),
                  p.second_moment.data(), c);
  }
  model.set_step(t);
}

template class Model<float>;
template class Model<double>;
template void adam_step<float>(Model<float>&, const AdamConfig&);
template void adam_step<double>(Model<double>&, const AdamConfig&);

}  // namespace irsce::nn
