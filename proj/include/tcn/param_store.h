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

#ifndef TCN_PARAM_STORE_H_
#define TCN_PARAM_STORE_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "tcn/tensor.h"

namespace tcn {

// A named trainable tensor with its accumulated gradient and Adam moments.
// An empty `grad` means no backward pass has reached the parameter since the
// last optimizer step.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  Tensor first_moment;
  Tensor second_moment;
  int64_t steps = 0;
  bool trainable = true;
};

// Insertion-ordered collection of parameters. Addresses are stable, so tapes
// may hold pointers to parameters across a training step.
class ParamStore {
 public:
  ParamStore() = default;
  ParamStore(const ParamStore& other);
  ParamStore& operator=(const ParamStore& other);
  ParamStore(ParamStore&&) = default;
  ParamStore& operator=(ParamStore&&) = default;

  Parameter& Add(const std::string& name, Tensor value);
  bool Has(const std::string& name) const;
  Parameter& Get(const std::string& name);
  const Parameter& Get(const std::string& name) const;

  size_t size() const { return params_.size(); }
  Parameter& at(size_t i) { return *params_[i]; }
  const Parameter& at(size_t i) const { return *params_[i]; }
  std::vector<std::string> names() const;
  size_t num_values() const;

  void ZeroGrad();

  // Values only; equal names, shapes and bits.
  bool SameValues(const ParamStore& other) const;

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::unordered_map<std::string, size_t> by_name_;
};

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// One bias-corrected Adam update on every trainable parameter that received
// a gradient, then clears all gradients. Throws if no parameter has a
// gradient, i.e. no backward pass ran since the last step.
void AdamStep(ParamStore& store, const AdamOptions& options);

// Checkpoint file: magic, version, a UTF-8 header string (JSON by
// convention), then per parameter its name, rank, dims and little-endian
// float64 values. Loading reproduces every value bit for bit.
void WriteCheckpoint(std::ostream& out, const ParamStore& params,
                     const std::string& header);
void SaveCheckpoint(const std::filesystem::path& path, const ParamStore& params,
                    const std::string& header);

struct Checkpoint {
  ParamStore params;
  std::string header;
};
Checkpoint ReadCheckpoint(std::istream& in);
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

}  // namespace tcn

#endif  // TCN_PARAM_STORE_H_
