// Copyright 2026 The TCN Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tcn/param_store.h"

#include <cmath>
#include <cstring>
#include <fstream>

#include "tcn/binary_io.h"
#include "tcn/errors.h"

namespace tcn {

namespace {

constexpr char kMagic[8] = {'T', 'C', 'N', 'C', 'K', 'P', 'T', '\0'};
constexpr uint32_t kVersion = 1;

}  // namespace

ParamStore::ParamStore(const ParamStore& other) : by_name_(other.by_name_) {
  params_.reserve(other.params_.size());
  for (const auto& p : other.params_) params_.push_back(std::make_unique<Parameter>(*p));
}

ParamStore& ParamStore::operator=(const ParamStore& other) {
  if (this != &other) {
    ParamStore copy(other);
    *this = std::move(copy);
  }
  return *this;
}

Parameter& ParamStore::Add(const std::string& name, Tensor value) {
  if (by_name_.count(name)) throw ShapeError("duplicate parameter name '" + name + "'");
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->value = std::move(value);
  by_name_[name] = params_.size();
  params_.push_back(std::move(p));
  return *params_.back();
}

bool ParamStore::Has(const std::string& name) const { return by_name_.count(name) > 0; }

Parameter& ParamStore::Get(const std::string& name) {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) throw ShapeError("unknown parameter '" + name + "'");
  return *params_[it->second];
}

const Parameter& ParamStore::Get(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) throw ShapeError("unknown parameter '" + name + "'");
  return *params_[it->second];
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  for (const auto& p : params_) out.push_back(p->name);
  return out;
}

size_t ParamStore::num_values() const {
  size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

void ParamStore::ZeroGrad() {
  for (auto& p : params_) p->grad = Tensor();
}

bool ParamStore::SameValues(const ParamStore& other) const {
  if (size() != other.size()) return false;
  for (size_t i = 0; i < size(); ++i) {
    const Parameter& a = at(i);
    const Parameter& b = other.at(i);
    if (a.name != b.name || a.value.shape() != b.value.shape()) return false;
    if (std::memcmp(a.value.data(), b.value.data(), a.value.size() * sizeof(double)) != 0) {
      return false;
    }
  }
  return true;
}

void AdamStep(ParamStore& store, const AdamOptions& options) {
  bool any = false;
  for (size_t i = 0; i < store.size(); ++i) any |= !store.at(i).grad.empty();
  if (!any) throw NumericError("optimizer step without gradients; run a backward pass first");

  for (size_t i = 0; i < store.size(); ++i) {
    Parameter& p = store.at(i);
    if (!p.trainable || p.grad.empty()) continue;
    if (p.grad.shape() != p.value.shape()) {
      throw ShapeError("gradient of '" + p.name + "' has shape " +
                       ShapeToString(p.grad.shape()) + ", parameter " +
                       ShapeToString(p.value.shape()));
    }
    if (p.first_moment.empty()) {
      p.first_moment = Tensor::ZerosLike(p.value);
      p.second_moment = Tensor::ZerosLike(p.value);
    }
    ++p.steps;
    const double bias1 = 1.0 - std::pow(options.beta1, static_cast<double>(p.steps));
    const double bias2 = 1.0 - std::pow(options.beta2, static_cast<double>(p.steps));
    double* w = p.value.data();
    double* m = p.first_moment.data();
    double* v = p.second_moment.data();
    const double* g = p.grad.data();
    for (size_t j = 0; j < p.value.size(); ++j) {
      m[j] = options.beta1 * m[j] + (1.0 - options.beta1) * g[j];
      v[j] = options.beta2 * v[j] + (1.0 - options.beta2) * g[j] * g[j];
      const double m_hat = m[j] / bias1;
      const double v_hat = v[j] / bias2;
      w[j] -= options.lr * m_hat / (std::sqrt(v_hat) + options.epsilon);
    }
  }
  store.ZeroGrad();
}

void WriteCheckpoint(std::ostream& out, const ParamStore& params,
                     const std::string& header) {
  using namespace binary;
  out.write(kMagic, sizeof(kMagic));
  WriteU32(out, kVersion);
  WriteString(out, header);
  WriteU64(out, params.size());
  for (size_t i = 0; i < params.size(); ++i) {
    const Parameter& p = params.at(i);
    WriteString(out, p.name);
    WriteU32(out, static_cast<uint32_t>(p.value.rank()));
    for (size_t d : p.value.shape()) WriteU64(out, d);
    for (double v : p.value.values()) WriteF64(out, v);
  }
}

void SaveCheckpoint(const std::filesystem::path& path, const ParamStore& params,
                    const std::string& header) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  WriteCheckpoint(out, params, header);
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

Checkpoint ReadCheckpoint(std::istream& in) {
  using namespace binary;
  char magic[sizeof(kMagic)];
  ReadExact(in, magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw DataError("not a checkpoint file");
  }
  uint32_t version = ReadU32(in);
  if (version != kVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.header = ReadString(in);
  uint64_t count = ReadU64(in);
  if (count > (1u << 20)) throw DataError("corrupt checkpoint: parameter count");
  for (uint64_t i = 0; i < count; ++i) {
    std::string name = ReadString(in, 1 << 16);
    uint32_t rank = ReadU32(in);
    if (rank == 0 || rank > 8) throw DataError("corrupt checkpoint: rank of '" + name + "'");
    Shape shape(rank);
    uint64_t total = 1;
    for (auto& d : shape) {
      d = ReadU64(in);
      total *= d;
      if (total > (1ULL << 32)) throw DataError("corrupt checkpoint: size of '" + name + "'");
    }
    std::vector<double> values(total);
    for (double& v : values) v = ReadF64(in);
    ckpt.params.Add(name, Tensor(std::move(shape), std::move(values)));
  }
  return ckpt;
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  return ReadCheckpoint(in);
}

}  // namespace tcn
