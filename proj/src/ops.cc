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

#include "tcn/ops.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tcn/errors.h"

namespace tcn {

namespace {

Tape& SameTape(const Var& a, const Var& b) {
  if (!a.valid() || !b.valid()) throw ShapeError("operation on an invalid Var");
  if (a.tape() != b.tape()) throw ShapeError("operands recorded on different tapes");
  return *a.tape();
}

Tape& TapeOf(const Var& a) {
  if (!a.valid()) throw ShapeError("operation on an invalid Var");
  return *a.tape();
}

[[noreturn]] void Mismatch(const char* op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + ShapeToString(a) +
                   " and " + ShapeToString(b));
}

void RequireRank(const char* op, const Tensor& t, size_t rank) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) +
                     ", got shape " + ShapeToString(t.shape()));
  }
}

void CheckRowIndex(const char* op, int index, size_t rows) {
  if (index < 0 || static_cast<size_t>(index) >= rows) {
    throw ShapeError(std::string(op) + ": row index " + std::to_string(index) +
                     " out of range for " + std::to_string(rows) + " rows");
  }
}

double Dot(const double* a, const double* b, size_t n) {
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

// log(sum(exp(v))) with max shift.
double LogSumExp(std::span<const double> v) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : v) mx = std::max(mx, x);
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

}  // namespace

void SoftmaxInPlace(std::span<double> v) {
  if (v.empty()) throw ShapeError("softmax of an empty vector");
  double mx = v[0];
  for (double x : v) mx = std::max(mx, x);
  double s = 0.0;
  for (double& x : v) {
    x = std::exp(x - mx);
    s += x;
  }
  for (double& x : v) x /= s;
}

Var MatMul(const Var& a, const Var& b) {
  Tape& tape = SameTape(a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  RequireRank("MatMul", A, 2);
  RequireRank("MatMul", B, 2);
  const size_t n = A.shape()[0], k = A.shape()[1], m = B.shape()[1];
  if (B.shape()[0] != k) Mismatch("MatMul", A.shape(), B.shape());
  Tensor C({n, m});
  for (size_t i = 0; i < n; ++i) {
    double* c = C.data() + i * m;
    for (size_t l = 0; l < k; ++l) {
      const double x = A.data()[i * k + l];
      const double* brow = B.data() + l * m;
      for (size_t j = 0; j < m; ++j) c[j] += x * brow[j];
    }
  }
  const bool rg = a.requires_grad() || b.requires_grad();
  const int ia = a.id(), ib = b.id();
  return tape.Record(std::move(C), rg, [ia, ib, n, k, m](Tape& t, int self) {
    const Tensor& dC = t.grad(self);
    const Tensor& A = t.value(ia);
    const Tensor& B = t.value(ib);
    if (t.requires_grad(ia)) {
      Tensor& dA = t.grad(ia);
      for (size_t i = 0; i < n; ++i) {
        for (size_t l = 0; l < k; ++l) {
          dA.data()[i * k + l] += Dot(dC.data() + i * m, B.data() + l * m, m);
        }
      }
    }
    if (t.requires_grad(ib)) {
      Tensor& dB = t.grad(ib);
      for (size_t i = 0; i < n; ++i) {
        const double* dc = dC.data() + i * m;
        for (size_t l = 0; l < k; ++l) {
          const double x = A.data()[i * k + l];
          double* db = dB.data() + l * m;
          for (size_t j = 0; j < m; ++j) db[j] += x * dc[j];
        }
      }
    }
  });
}

Var Linear(const Var& w, const Var& x) {
  Tape& tape = SameTape(w, x);
  const Tensor& W = w.value();
  const Tensor& X = x.value();
  RequireRank("Linear", W, 2);
  if (X.rank() != 1 && X.rank() != 2) Mismatch("Linear", W.shape(), X.shape());
  const size_t p = W.shape()[0], q = W.shape()[1];
  if (X.cols() != q) Mismatch("Linear", W.shape(), X.shape());
  const size_t n = X.rows();
  Tensor Y = X.rank() == 1 ? Tensor({p}) : Tensor({n, p});
  for (size_t i = 0; i < n; ++i) {
    const double* xr = X.data() + i * q;
    double* yr = Y.data() + i * p;
    for (size_t o = 0; o < p; ++o) yr[o] = Dot(W.data() + o * q, xr, q);
  }
  const bool rg = w.requires_grad() || x.requires_grad();
  const int iw = w.id(), ix = x.id();
  return tape.Record(std::move(Y), rg, [iw, ix, n, p, q](Tape& t, int self) {
    const Tensor& dY = t.grad(self);
    const Tensor& W = t.value(iw);
    const Tensor& X = t.value(ix);
    if (t.requires_grad(ix)) {
      Tensor& dX = t.grad(ix);
      for (size_t i = 0; i < n; ++i) {
        double* dx = dX.data() + i * q;
        for (size_t o = 0; o < p; ++o) {
          const double g = dY.data()[i * p + o];
          if (g == 0.0) continue;
          const double* wr = W.data() + o * q;
          for (size_t l = 0; l < q; ++l) dx[l] += g * wr[l];
        }
      }
    }
    if (t.requires_grad(iw)) {
      Tensor& dW = t.grad(iw);
      for (size_t i = 0; i < n; ++i) {
        const double* xr = X.data() + i * q;
        for (size_t o = 0; o < p; ++o) {
          const double g = dY.data()[i * p + o];
          if (g == 0.0) continue;
          double* dw = dW.data() + o * q;
          for (size_t l = 0; l < q; ++l) dw[l] += g * xr[l];
        }
      }
    }
  });
}

Var Add(const Var& a, const Var& b) {
  Tape& tape = SameTape(a, b);
  if (a.shape() != b.shape()) Mismatch("Add", a.shape(), b.shape());
  Tensor y = a.value();
  y.AddInPlace(b.value());
  const int ia = a.id(), ib = b.id();
  return tape.Record(std::move(y), a.requires_grad() || b.requires_grad(),
                     [ia, ib](Tape& t, int self) {
                       const Tensor& dy = t.grad(self);
                       if (t.requires_grad(ia)) t.grad(ia).AddInPlace(dy);
                       if (t.requires_grad(ib)) t.grad(ib).AddInPlace(dy);
                     });
}

Var Scale(const Var& x, double factor) {
  Tape& tape = TapeOf(x);
  Tensor y = x.value();
  for (double& v : y.values()) v *= factor;
  const int ix = x.id();
  return tape.Record(std::move(y), x.requires_grad(), [ix, factor](Tape& t, int self) {
    const Tensor& dy = t.grad(self);
    Tensor& dx = t.grad(ix);
    for (size_t i = 0; i < dy.size(); ++i) dx[i] += factor * dy[i];
  });
}

Var Relu(const Var& x) {
  Tape& tape = TapeOf(x);
  Tensor y = x.value();
  for (double& v : y.values()) v = v > 0.0 ? v : 0.0;
  const int ix = x.id();
  return tape.Record(std::move(y), x.requires_grad(), [ix](Tape& t, int self) {
    const Tensor& dy = t.grad(self);
    const Tensor& xv = t.value(ix);
    Tensor& dx = t.grad(ix);
    for (size_t i = 0; i < dy.size(); ++i) {
      if (xv[i] > 0.0) dx[i] += dy[i];
    }
  });
}

Var Softmax(const Var& x) {
  Tape& tape = TapeOf(x);
  const Tensor& X = x.value();
  if (X.rank() != 1 && X.rank() != 2) {
    throw ShapeError("Softmax: expected a vector or matrix, got " + ShapeToString(X.shape()));
  }
  if (X.size() == 0 && X.rank() == 1) throw ShapeError("softmax of an empty vector");
  Tensor y = X;
  const size_t rows = y.rows(), cols = y.cols();
  if (cols == 0) throw ShapeError("softmax of an empty vector");
  for (size_t r = 0; r < rows; ++r) SoftmaxInPlace(y.row(r));
  const int ix = x.id();
  return tape.Record(std::move(y), x.requires_grad(), [ix, rows, cols](Tape& t, int self) {
    const Tensor& dy = t.grad(self);
    const Tensor& yv = t.value(self);
    Tensor& dx = t.grad(ix);
    for (size_t r = 0; r < rows; ++r) {
      const double* yr = yv.data() + r * cols;
      const double* gr = dy.data() + r * cols;
      const double s = Dot(yr, gr, cols);
      double* d = dx.data() + r * cols;
      for (size_t c = 0; c < cols; ++c) d[c] += yr[c] * (gr[c] - s);
    }
  });
}

Var Concat(std::initializer_list<Var> parts) {
  return Concat(std::span<const Var>(parts.begin(), parts.size()));
}

Var Concat(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("Concat of zero parts");
  Tape& tape = TapeOf(parts[0]);
  const size_t rank = parts[0].value().rank();
  if (rank != 1 && rank != 2) throw ShapeError("Concat: expected vectors or matrices");
  const size_t rows = parts[0].value().rows();
  size_t total_cols = 0;
  bool rg = false;
  std::vector<int> ids;
  std::vector<size_t> widths;
  for (const Var& p : parts) {
    SameTape(parts[0], p);
    const Tensor& v = p.value();
    if (v.rank() != rank || v.rows() != rows) Mismatch("Concat", parts[0].shape(), v.shape());
    ids.push_back(p.id());
    widths.push_back(v.cols());
    total_cols += v.cols();
    rg |= p.requires_grad();
  }
  Tensor y = rank == 1 ? Tensor({total_cols}) : Tensor({rows, total_cols});
  size_t offset = 0;
  for (size_t k = 0; k < parts.size(); ++k) {
    const Tensor& v = parts[k].value();
    for (size_t r = 0; r < rows; ++r) {
      std::copy(v.data() + r * widths[k], v.data() + (r + 1) * widths[k],
                y.data() + r * total_cols + offset);
    }
    offset += widths[k];
  }
  return tape.Record(std::move(y), rg,
                     [ids, widths, rows, total_cols](Tape& t, int self) {
                       const Tensor& dy = t.grad(self);
                       size_t offset = 0;
                       for (size_t k = 0; k < ids.size(); ++k) {
                         if (t.requires_grad(ids[k])) {
                           Tensor& dx = t.grad(ids[k]);
                           for (size_t r = 0; r < rows; ++r) {
                             const double* src = dy.data() + r * total_cols + offset;
                             double* dst = dx.data() + r * widths[k];
                             for (size_t c = 0; c < widths[k]; ++c) dst[c] += src[c];
                           }
                         }
                         offset += widths[k];
                       }
                     });
}

Var MeanRows(const Var& m) {
  Tape& tape = TapeOf(m);
  const Tensor& M = m.value();
  RequireRank("MeanRows", M, 2);
  const size_t n = M.shape()[0], d = M.shape()[1];
  if (n == 0) throw ShapeError("MeanRows of a matrix with no rows");
  Tensor y({d});
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < d; ++j) y[j] += M.at(i, j);
  }
  for (size_t j = 0; j < d; ++j) y[j] /= static_cast<double>(n);
  const int im = m.id();
  return tape.Record(std::move(y), m.requires_grad(), [im, n, d](Tape& t, int self) {
    const Tensor& dy = t.grad(self);
    Tensor& dm = t.grad(im);
    const double inv = 1.0 / static_cast<double>(n);
    for (size_t i = 0; i < n; ++i) {
      for (size_t j = 0; j < d; ++j) dm.data()[i * d + j] += dy[j] * inv;
    }
  });
}

Var Sum(const Var& x) {
  Tape& tape = TapeOf(x);
  double s = 0.0;
  for (double v : x.value().values()) s += v;
  const int ix = x.id();
  return tape.Record(Tensor::Scalar(s), x.requires_grad(), [ix](Tape& t, int self) {
    const double g = t.grad(self)[0];
    Tensor& dx = t.grad(ix);
    for (double& v : dx.values()) v += g;
  });
}

Var Reshape(const Var& x, Shape shape) {
  Tape& tape = TapeOf(x);
  Tensor y = x.value().Reshaped(std::move(shape));
  const int ix = x.id();
  return tape.Record(std::move(y), x.requires_grad(), [ix](Tape& t, int self) {
    const Tensor& dy = t.grad(self);
    Tensor& dx = t.grad(ix);
    for (size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i];
  });
}

Var GatherRows(const Var& x, std::vector<int> index) {
  Tape& tape = TapeOf(x);
  const Tensor& X = x.value();
  RequireRank("GatherRows", X, 2);
  const size_t rows = X.shape()[0], d = X.shape()[1];
  Tensor y({index.size(), d});
  for (size_t i = 0; i < index.size(); ++i) {
    CheckRowIndex("GatherRows", index[i], rows);
    std::copy(X.data() + index[i] * d, X.data() + (index[i] + 1) * d, y.data() + i * d);
  }
  const int ix = x.id();
  return tape.Record(std::move(y), x.requires_grad(),
                     [ix, index = std::move(index), d](Tape& t, int self) {
                       const Tensor& dy = t.grad(self);
                       Tensor& dx = t.grad(ix);
                       for (size_t i = 0; i < index.size(); ++i) {
                         double* dst = dx.data() + index[i] * d;
                         const double* src = dy.data() + i * d;
                         for (size_t c = 0; c < d; ++c) dst[c] += src[c];
                       }
                     });
}

Var SegmentMean(const Var& x, std::vector<std::vector<int>> segments) {
  Tape& tape = TapeOf(x);
  const Tensor& X = x.value();
  RequireRank("SegmentMean", X, 2);
  const size_t rows = X.shape()[0], d = X.shape()[1];
  Tensor y({segments.size(), d});
  for (size_t s = 0; s < segments.size(); ++s) {
    if (segments[s].empty()) continue;
    double* dst = y.data() + s * d;
    for (int r : segments[s]) {
      CheckRowIndex("SegmentMean", r, rows);
      const double* src = X.data() + r * d;
      for (size_t c = 0; c < d; ++c) dst[c] += src[c];
    }
    const double inv = 1.0 / static_cast<double>(segments[s].size());
    for (size_t c = 0; c < d; ++c) dst[c] *= inv;
  }
  const int ix = x.id();
  return tape.Record(std::move(y), x.requires_grad(),
                     [ix, segments = std::move(segments), d](Tape& t, int self) {
                       const Tensor& dy = t.grad(self);
                       Tensor& dx = t.grad(ix);
                       for (size_t s = 0; s < segments.size(); ++s) {
                         if (segments[s].empty()) continue;
                         const double inv = 1.0 / static_cast<double>(segments[s].size());
                         const double* src = dy.data() + s * d;
                         for (int r : segments[s]) {
                           double* dst = dx.data() + r * d;
                           for (size_t c = 0; c < d; ++c) dst[c] += src[c] * inv;
                         }
                       }
                     });
}

Var CrossEntropy(const Var& logits, int true_class) {
  const Tensor& L = logits.value();
  RequireRank("CrossEntropy", L, 1);
  const int targets[1] = {true_class};
  Var as_row = Reshape(logits, {1, L.size()});
  return CrossEntropyRows(as_row, targets);
}

Var CrossEntropyRows(const Var& logits, std::span<const int> targets) {
  Tape& tape = TapeOf(logits);
  const Tensor& L = logits.value();
  RequireRank("CrossEntropyRows", L, 2);
  const size_t n = L.shape()[0], c = L.shape()[1];
  if (targets.size() != n) {
    throw ShapeError("CrossEntropyRows: " + std::to_string(targets.size()) +
                     " targets for " + std::to_string(n) + " rows");
  }
  if (c == 0) throw ShapeError("CrossEntropyRows: no classes");
  double loss = 0.0;
  for (size_t i = 0; i < n; ++i) {
    if (targets[i] < 0 || static_cast<size_t>(targets[i]) >= c) {
      throw ShapeError("cross entropy class " + std::to_string(targets[i]) +
                       " out of range for " + std::to_string(c) + " classes");
    }
    loss += LogSumExp(L.row(i)) - L.at(i, targets[i]);
  }
  const int il = logits.id();
  std::vector<int> tgt(targets.begin(), targets.end());
  return tape.Record(Tensor::Scalar(loss), logits.requires_grad(),
                     [il, tgt = std::move(tgt), n, c](Tape& t, int self) {
                       const double g = t.grad(self)[0];
                       const Tensor& L = t.value(il);
                       Tensor& dL = t.grad(il);
                       std::vector<double> p(c);
                       for (size_t i = 0; i < n; ++i) {
                         std::copy(L.data() + i * c, L.data() + (i + 1) * c, p.begin());
                         SoftmaxInPlace(p);
                         p[tgt[i]] -= 1.0;
                         for (size_t k = 0; k < c; ++k) dL.data()[i * c + k] += g * p[k];
                       }
                     });
}

std::vector<std::vector<double>> PeerAttentionWeights(
    const Tensor& query, const Tensor& key, const std::vector<std::vector<int>>& peers) {
  const size_t d = query.cols();
  std::vector<std::vector<double>> weights(peers.size());
  for (size_t i = 0; i < peers.size(); ++i) {
    if (peers[i].empty()) continue;
    auto& w = weights[i];
    w.resize(peers[i].size());
    for (size_t j = 0; j < peers[i].size(); ++j) {
      w[j] = Dot(query.data() + i * d, key.data() + peers[i][j] * d, d);
    }
    SoftmaxInPlace(w);
  }
  return weights;
}

Var PeerAttention(const Var& query, const Var& key, const Var& value,
                  std::vector<std::vector<int>> peers) {
  Tape& tape = SameTape(query, key);
  SameTape(query, value);
  const Tensor& Q = query.value();
  const Tensor& K = key.value();
  const Tensor& V = value.value();
  RequireRank("PeerAttention", Q, 2);
  RequireRank("PeerAttention", K, 2);
  RequireRank("PeerAttention", V, 2);
  if (Q.shape()[1] != K.shape()[1]) Mismatch("PeerAttention", Q.shape(), K.shape());
  if (K.shape()[0] != V.shape()[0]) Mismatch("PeerAttention", K.shape(), V.shape());
  if (peers.size() != Q.shape()[0]) {
    throw ShapeError("PeerAttention: " + std::to_string(peers.size()) +
                     " peer lists for " + std::to_string(Q.shape()[0]) + " queries");
  }
  const size_t nk = K.shape()[0], d = Q.shape()[1], dv = V.shape()[1];
  for (const auto& list : peers) {
    for (int j : list) CheckRowIndex("PeerAttention", j, nk);
  }
  auto weights = PeerAttentionWeights(Q, K, peers);
  Tensor out({peers.size(), dv});
  for (size_t i = 0; i < peers.size(); ++i) {
    double* o = out.data() + i * dv;
    for (size_t j = 0; j < peers[i].size(); ++j) {
      const double a = weights[i][j];
      const double* v = V.data() + peers[i][j] * dv;
      for (size_t c = 0; c < dv; ++c) o[c] += a * v[c];
    }
  }
  const bool rg = query.requires_grad() || key.requires_grad() || value.requires_grad();
  const int iq = query.id(), ik = key.id(), iv = value.id();
  return tape.Record(
      std::move(out), rg,
      [iq, ik, iv, d, dv, peers = std::move(peers), weights = std::move(weights)](
          Tape& t, int self) {
        const Tensor& dO = t.grad(self);
        const Tensor& Q = t.value(iq);
        const Tensor& K = t.value(ik);
        const Tensor& V = t.value(iv);
        const bool gq = t.requires_grad(iq), gk = t.requires_grad(ik),
                   gv = t.requires_grad(iv);
        std::vector<double> g;
        for (size_t i = 0; i < peers.size(); ++i) {
          const auto& list = peers[i];
          if (list.empty()) continue;
          const double* dout = dO.data() + i * dv;
          const auto& a = weights[i];
          if (gv) {
            Tensor& dV = t.grad(iv);
            for (size_t j = 0; j < list.size(); ++j) {
              double* dst = dV.data() + list[j] * dv;
              for (size_t c = 0; c < dv; ++c) dst[c] += a[j] * dout[c];
            }
          }
          if (!gq && !gk) continue;
          g.assign(list.size(), 0.0);
          double mean = 0.0;
          for (size_t j = 0; j < list.size(); ++j) {
            g[j] = Dot(dout, V.data() + list[j] * dv, dv);
            mean += a[j] * g[j];
          }
          for (size_t j = 0; j < list.size(); ++j) {
            const double ds = a[j] * (g[j] - mean);
            if (ds == 0.0) continue;
            if (gq) {
              double* dq = t.grad(iq).data() + i * d;
              const double* k = K.data() + list[j] * d;
              for (size_t c = 0; c < d; ++c) dq[c] += ds * k[c];
            }
            if (gk) {
              double* dk = t.grad(ik).data() + list[j] * d;
              const double* q = Q.data() + i * d;
              for (size_t c = 0; c < d; ++c) dk[c] += ds * q[c];
            }
          }
        }
      });
}

std::vector<Tensor> MultiViewWeights(const Tensor& scores,
                                     const std::vector<std::vector<int>>& neighbors) {
  const size_t views = scores.cols();
  std::vector<Tensor> out(neighbors.size());
  std::vector<double> col;
  for (size_t t = 0; t < neighbors.size(); ++t) {
    const auto& list = neighbors[t];
    if (list.empty()) continue;
    Tensor omega({views, list.size()});
    for (size_t v = 0; v < views; ++v) {
      for (size_t j = 0; j < list.size(); ++j) omega.at(v, j) = scores.at(list[j], v);
      SoftmaxInPlace(omega.row(v));
    }
    out[t] = std::move(omega);
  }
  return out;
}

Var MultiViewPool(const Var& contexts, const Var& scores,
                  std::vector<std::vector<int>> neighbors) {
  Tape& tape = SameTape(contexts, scores);
  const Tensor& A = contexts.value();
  const Tensor& S = scores.value();
  RequireRank("MultiViewPool", A, 2);
  RequireRank("MultiViewPool", S, 2);
  if (A.shape()[0] != S.shape()[0]) Mismatch("MultiViewPool", A.shape(), S.shape());
  const size_t n = A.shape()[0], dim = A.shape()[1], views = S.shape()[1];
  if (views == 0) throw ShapeError("MultiViewPool: at least one view is required");
  for (const auto& list : neighbors) {
    for (int j : list) CheckRowIndex("MultiViewPool", j, n);
  }
  std::vector<Tensor> omegas = MultiViewWeights(S, neighbors);
  // Averaging the views first gives one weight per neighbor.
  std::vector<std::vector<double>> pooled(neighbors.size());
  Tensor out({neighbors.size(), dim});
  const double inv_views = 1.0 / static_cast<double>(views);
  for (size_t t = 0; t < neighbors.size(); ++t) {
    const auto& list = neighbors[t];
    if (list.empty()) continue;
    auto& w = pooled[t];
    w.assign(list.size(), 0.0);
    for (size_t v = 0; v < views; ++v) {
      for (size_t j = 0; j < list.size(); ++j) w[j] += omegas[t].at(v, j);
    }
    for (double& x : w) x *= inv_views;
    double* o = out.data() + t * dim;
    for (size_t j = 0; j < list.size(); ++j) {
      const double* a = A.data() + list[j] * dim;
      for (size_t c = 0; c < dim; ++c) o[c] += w[j] * a[c];
    }
  }
  const bool rg = contexts.requires_grad() || scores.requires_grad();
  const int ia = contexts.id(), is = scores.id();
  return tape.Record(
      std::move(out), rg,
      [ia, is, dim, views, inv_views, neighbors = std::move(neighbors),
       omegas = std::move(omegas), pooled = std::move(pooled)](Tape& t, int self) {
        const Tensor& dO = t.grad(self);
        const Tensor& A = t.value(ia);
        const bool ga = t.requires_grad(ia), gs = t.requires_grad(is);
        std::vector<double> g;
        for (size_t tg = 0; tg < neighbors.size(); ++tg) {
          const auto& list = neighbors[tg];
          if (list.empty()) continue;
          const double* dout = dO.data() + tg * dim;
          if (ga) {
            Tensor& dA = t.grad(ia);
            for (size_t j = 0; j < list.size(); ++j) {
              double* dst = dA.data() + list[j] * dim;
              for (size_t c = 0; c < dim; ++c) dst[c] += pooled[tg][j] * dout[c];
            }
          }
          if (!gs) continue;
          Tensor& dS = t.grad(is);
          g.assign(list.size(), 0.0);
          for (size_t j = 0; j < list.size(); ++j) {
            g[j] = Dot(dout, A.data() + list[j] * dim, dim);
          }
          for (size_t v = 0; v < views; ++v) {
            double mean = 0.0;
            for (size_t j = 0; j < list.size(); ++j) mean += omegas[tg].at(v, j) * g[j];
            for (size_t j = 0; j < list.size(); ++j) {
              dS.data()[list[j] * views + v] +=
                  inv_views * omegas[tg].at(v, j) * (g[j] - mean);
            }
          }
        }
      });
}

}  // namespace tcn
