// Copyright 2026 The xlvc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "xlvc/netcore/sequence_net.h"

#include <cmath>

namespace xlvc {

namespace {

using Array = Eigen::Array<double, 1, Eigen::Dynamic>;

inline Array Sigmoid(const Array& a) { return 1.0 / (1.0 + (-a).exp()); }

bool IsLstm(LayerKind k) {
  return k == LayerKind::kLstmForward || k == LayerKind::kLstmBackward || k == LayerKind::kBlstm;
}

int Directions(LayerKind k) { return k == LayerKind::kBlstm ? 2 : 1; }

int HiddenUnits(const LayerSpec& s) { return s.kind == LayerKind::kBlstm ? s.out_dim / 2 : s.out_dim; }

// Processing order for a direction: frame index of step s.
inline int FrameAt(int s, int frames, bool reverse) { return reverse ? frames - 1 - s : s; }

void LstmForward(const Matrix& wx, const Matrix& wh, const Matrix& bias, const Matrix& x, bool reverse,
                 LstmCache& cache) {
  const int frames = static_cast<int>(x.rows());
  const int h = static_cast<int>(wh.cols());
  cache.input = x;
  cache.gates.noalias() = x * wx.transpose();
  cache.gates.rowwise() += bias.row(0);
  cache.cell.resize(frames, h);
  cache.tanh_cell.resize(frames, h);
  cache.hidden.resize(frames, h);

  RowVector a(4 * h);
  for (int s = 0; s < frames; ++s) {
    const int t = FrameAt(s, frames, reverse);
    a = cache.gates.row(t);
    if (s > 0) {
      const int tp = FrameAt(s - 1, frames, reverse);
      a.noalias() += cache.hidden.row(tp) * wh.transpose();
    }
    const Array i = Sigmoid(a.segment(0, h).array());
    const Array f = Sigmoid(a.segment(h, h).array());
    const Array g = a.segment(2 * h, h).array().tanh();
    const Array o = Sigmoid(a.segment(3 * h, h).array());
    Array c = i * g;
    if (s > 0) c += f * cache.cell.row(FrameAt(s - 1, frames, reverse)).array();
    const Array tc = c.tanh();
    cache.gates.row(t) << i.matrix(), f.matrix(), g.matrix(), o.matrix();
    cache.cell.row(t) = c.matrix();
    cache.tanh_cell.row(t) = tc.matrix();
    cache.hidden.row(t) = (o * tc).matrix();
  }
}

// Returns d input; accumulates into the three gradient slots.
Matrix LstmBackward(const Matrix& wx, const Matrix& wh, const LstmCache& cache, const Matrix& d_hidden,
                    bool reverse, Matrix& g_wx, Matrix& g_wh, Matrix& g_bias) {
  const int frames = static_cast<int>(cache.input.rows());
  const int h = static_cast<int>(wh.cols());
  Matrix d_pre(frames, 4 * h);
  RowVector dh_rec = RowVector::Zero(h);
  Array dc_next = Array::Zero(h);
  for (int s = frames - 1; s >= 0; --s) {
    const int t = FrameAt(s, frames, reverse);
    const Array dh = (d_hidden.row(t) + dh_rec).array();
    const auto gates = cache.gates.row(t).array();
    const Array i = gates.segment(0, h), f = gates.segment(h, h), g = gates.segment(2 * h, h),
                o = gates.segment(3 * h, h);
    const Array tc = cache.tanh_cell.row(t).array();
    const Array d_o = dh * tc;
    const Array dc = dh * o * (1.0 - tc * tc) + dc_next;
    Array d_f = Array::Zero(h);
    if (s > 0) d_f = dc * cache.cell.row(FrameAt(s - 1, frames, reverse)).array();
    const Array d_i = dc * g;
    const Array d_g = dc * i;
    dc_next = dc * f;
    d_pre.row(t) << (d_i * i * (1.0 - i)).matrix(), (d_f * f * (1.0 - f)).matrix(),
        (d_g * (1.0 - g * g)).matrix(), (d_o * o * (1.0 - o)).matrix();
    dh_rec.noalias() = d_pre.row(t) * wh;
  }
  g_wx.noalias() += d_pre.transpose() * cache.input;
  g_bias += d_pre.colwise().sum();
  if (frames > 1) {
    // Step s uses the hidden state of step s-1.
    if (reverse)
      g_wh.noalias() += d_pre.topRows(frames - 1).transpose() * cache.hidden.bottomRows(frames - 1);
    else
      g_wh.noalias() += d_pre.bottomRows(frames - 1).transpose() * cache.hidden.topRows(frames - 1);
  }
  return d_pre * wx;
}

bool SameSpecs(const std::vector<LayerSpec>& a, const std::vector<LayerSpec>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].kind != b[i].kind || a[i].in_dim != b[i].in_dim || a[i].out_dim != b[i].out_dim) return false;
  return true;
}

}  // namespace

std::string_view LayerKindName(LayerKind kind) {
  switch (kind) {
    case LayerKind::kLinear: return "linear";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kLstmForward: return "lstm_forward";
    case LayerKind::kLstmBackward: return "lstm_backward";
    case LayerKind::kBlstm: return "blstm";
  }
  return "?";
}

LayerStack::LayerStack(std::string prefix, std::vector<LayerSpec> specs)
    : prefix_(std::move(prefix)), specs_(std::move(specs)) {
  if (specs_.empty()) throw Error("LayerStack '" + prefix_ + "': no layers");
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    LayerSpec& s = specs_[i];
    if (s.name.empty()) s.name = "l" + std::to_string(i);
    if (s.in_dim < 1 || s.out_dim < 1) throw Error("LayerStack '" + prefix_ + "': non-positive width");
    if (s.kind == LayerKind::kRelu && s.in_dim != s.out_dim)
      throw Error("LayerStack '" + prefix_ + "': relu must preserve width");
    if (s.kind == LayerKind::kBlstm && s.out_dim % 2 != 0)
      throw Error("LayerStack '" + prefix_ + "': blstm width must be even");
    if (i > 0 && specs_[i - 1].out_dim != s.in_dim)
      throw Error("LayerStack '" + prefix_ + "': layer " + std::to_string(i) + " expects width " +
                  std::to_string(s.in_dim) + ", previous layer produces " + std::to_string(specs_[i - 1].out_dim));
  }
}

std::string LayerStack::TensorName(int layer, const std::string& suffix) const {
  return prefix_ + "." + specs_[layer].name + "." + suffix;
}

void LayerStack::Register(ParamStore& params) { Resolve(params, &params); }

void LayerStack::Bind(const ParamStore& params) { Resolve(params, nullptr); }

void LayerStack::Resolve(const ParamStore& params, ParamStore* registering) {
  slots_.assign(specs_.size(), Slots{});
  auto slot = [&](int layer, const std::string& suffix, int rows, int cols) {
    const std::string n = TensorName(layer, suffix);
    if (registering) return registering->Add(n, rows, cols);
    const int i = params.IndexOf(n);
    if (params.value(i).rows() != rows || params.value(i).cols() != cols)
      throw Error("ParamStore: tensor '" + n + "' has wrong shape");
    return i;
  };
  for (int l = 0; l < static_cast<int>(specs_.size()); ++l) {
    const LayerSpec& s = specs_[l];
    Slots& sl = slots_[l];
    if (s.kind == LayerKind::kLinear) {
      sl.w = slot(l, "W", s.out_dim, s.in_dim);
      sl.b = slot(l, "b", 1, s.out_dim);
    } else if (IsLstm(s.kind)) {
      const int h = HiddenUnits(s);
      for (int d = 0; d < Directions(s.kind); ++d) {
        const std::string dir = s.kind == LayerKind::kBlstm ? (d == 0 ? "fw." : "bw.") : "";
        sl.wx[d] = slot(l, dir + "Wx", 4 * h, s.in_dim);
        sl.wh[d] = slot(l, dir + "Wh", 4 * h, h);
        sl.bias[d] = slot(l, dir + "b", 1, 4 * h);
      }
    }
  }
}

std::vector<int> LayerStack::TensorIndices() const {
  std::vector<int> out;
  for (const Slots& sl : slots_) {
    for (int i : {sl.w, sl.b, sl.wx[0], sl.wh[0], sl.bias[0], sl.wx[1], sl.wh[1], sl.bias[1]})
      if (i >= 0) out.push_back(i);
  }
  return out;
}

void LayerStack::Initialize(ParamStore& params, std::mt19937_64& rng) const {
  if (slots_.size() != specs_.size()) throw Error("LayerStack '" + prefix_ + "': not bound to parameters");
  auto uniform = [&](Matrix& m, int fan_in, int fan_out) {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = dist(rng);
  };
  for (std::size_t l = 0; l < specs_.size(); ++l) {
    const LayerSpec& s = specs_[l];
    const Slots& sl = slots_[l];
    if (s.kind == LayerKind::kLinear) {
      uniform(params.value(sl.w), s.in_dim, s.out_dim);
      params.value(sl.b).setZero();
    } else if (IsLstm(s.kind)) {
      const int h = HiddenUnits(s);
      for (int d = 0; d < Directions(s.kind); ++d) {
        uniform(params.value(sl.wx[d]), s.in_dim, h);
        uniform(params.value(sl.wh[d]), h, h);
        Matrix& b = params.value(sl.bias[d]);
        b.setZero();
        b.middleCols(h, h).setConstant(1.0);
      }
    }
  }
}

Matrix LayerStack::Forward(const ParamStore& params, const Matrix& input, Tape* tape) const {
  if (slots_.size() != specs_.size()) throw Error("LayerStack '" + prefix_ + "': not bound to parameters");
  if (input.rows() < 1) throw Error("LayerStack '" + prefix_ + "': empty input sequence");
  if (input.cols() != in_dim())
    throw Error("LayerStack '" + prefix_ + "': input width " + std::to_string(input.cols()) + ", expected " +
                std::to_string(in_dim()));
  if (!input.allFinite()) throw Error("LayerStack '" + prefix_ + "': non-finite input");

  const int frames = static_cast<int>(input.rows());
  if (tape) {
    tape->frames_ = frames;
    tape->specs_ = specs_;
    tape->layers_.assign(specs_.size(), LayerTape{});
  }
  LstmCache scratch[2];
  Matrix x = input;
  for (std::size_t l = 0; l < specs_.size(); ++l) {
    const LayerSpec& s = specs_[l];
    const Slots& sl = slots_[l];
    LayerTape* lt = tape ? &tape->layers_[l] : nullptr;
    switch (s.kind) {
      case LayerKind::kLinear: {
        Matrix y = x * params.value(sl.w).transpose();
        y.rowwise() += params.value(sl.b).row(0);
        if (lt) lt->input = std::move(x);
        x = std::move(y);
        break;
      }
      case LayerKind::kRelu: {
        Matrix y = x.cwiseMax(0.0);
        if (lt) lt->input = std::move(x);
        x = std::move(y);
        break;
      }
      case LayerKind::kLstmForward:
      case LayerKind::kLstmBackward: {
        LstmCache& c = lt ? lt->dir[0] : scratch[0];
        LstmForward(params.value(sl.wx[0]), params.value(sl.wh[0]), params.value(sl.bias[0]), x,
                    s.kind == LayerKind::kLstmBackward, c);
        x = c.hidden;
        break;
      }
      case LayerKind::kBlstm: {
        LstmCache& fw = lt ? lt->dir[0] : scratch[0];
        LstmCache& bw = lt ? lt->dir[1] : scratch[1];
        LstmForward(params.value(sl.wx[0]), params.value(sl.wh[0]), params.value(sl.bias[0]), x, false, fw);
        LstmForward(params.value(sl.wx[1]), params.value(sl.wh[1]), params.value(sl.bias[1]), x, true, bw);
        const int h = HiddenUnits(s);
        Matrix y(frames, 2 * h);
        y.leftCols(h) = fw.hidden;
        y.rightCols(h) = bw.hidden;
        x = std::move(y);
        break;
      }
    }
  }
  return x;
}

Matrix LayerStack::Backward(const ParamStore& params, const Tape& tape, const Matrix& output_grad,
                            GradientList& grads) const {
  if (!SameSpecs(tape.specs_, specs_) || tape.layers_.size() != specs_.size())
    throw Error("LayerStack '" + prefix_ + "': tape was recorded by a different network");
  if (static_cast<int>(grads.size()) != params.size())
    throw Error("LayerStack '" + prefix_ + "': gradient list does not match parameters");
  if (output_grad.rows() != tape.frames_ || output_grad.cols() != out_dim())
    throw Error("LayerStack '" + prefix_ + "': output gradient shape mismatch");

  Matrix dy = output_grad;
  for (int l = static_cast<int>(specs_.size()) - 1; l >= 0; --l) {
    const LayerSpec& s = specs_[l];
    const Slots& sl = slots_[l];
    const LayerTape& lt = tape.layers_[l];
    switch (s.kind) {
      case LayerKind::kLinear: {
        const Matrix& w = params.value(sl.w);
        grads[sl.w].noalias() += dy.transpose() * lt.input;
        grads[sl.b] += dy.colwise().sum();
        dy = dy * w;
        break;
      }
      case LayerKind::kRelu:
        dy = (lt.input.array() > 0.0).select(dy, 0.0);
        break;
      case LayerKind::kLstmForward:
      case LayerKind::kLstmBackward:
        dy = LstmBackward(params.value(sl.wx[0]), params.value(sl.wh[0]), lt.dir[0], dy,
                          s.kind == LayerKind::kLstmBackward, grads[sl.wx[0]], grads[sl.wh[0]], grads[sl.bias[0]]);
        break;
      case LayerKind::kBlstm: {
        const int h = HiddenUnits(s);
        Matrix dx = LstmBackward(params.value(sl.wx[0]), params.value(sl.wh[0]), lt.dir[0], dy.leftCols(h), false,
                                 grads[sl.wx[0]], grads[sl.wh[0]], grads[sl.bias[0]]);
        dx += LstmBackward(params.value(sl.wx[1]), params.value(sl.wh[1]), lt.dir[1], dy.rightCols(h), true,
                           grads[sl.wx[1]], grads[sl.wh[1]], grads[sl.bias[1]]);
        dy = std::move(dx);
        break;
      }
    }
  }
  return dy;
}

}  // namespace xlvc
