#pragma once

// Recurrent cells (Elman RNN, peephole LSTM, GRU) with single-step forward,
// full-sequence forward, and exact backpropagation through time.
//
// Each parameter struct doubles as its own gradient container: gradients are
// accumulated into a zero-initialized instance of the same type.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "seqtext/errors.hpp"
#include "seqtext/numeric.hpp"
#include "seqtext/random.hpp"

namespace seqtext {

enum class Nonlinearity { Tanh, Sigmoid };

// Which blocks a visitor sees. Frozen blocks (literal-mode U and b, disabled
// peepholes) are skipped by Trainable but still serialized under All.
enum class Blocks { All, Trainable };

enum class InitScheme {
  Centered,  // U(-1,1) / sqrt(fan_in)
  Scaled,    // U(0,1) / sqrt(fan_in)
  Literal,   // U(0,1)
};

namespace detail {

inline void init_block(Matrix& m, Rng& rng, InitScheme scheme) {
  const double scale = scheme == InitScheme::Literal ? 1.0 : 1.0 / std::sqrt(static_cast<double>(m.cols()));
  const double lo = scheme == InitScheme::Centered ? -1.0 : 0.0;
  for (auto& w : m.values()) w = rng.uniform(lo, 1.0) * scale;
}

inline void require(bool ok, const char* cell, const std::string& what) {
  if (!ok) throw ShapeError(std::string(cell) + ": " + what);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elman RNN: h = g(W x + U h_prev + b). In literal mode U is the identity and
// b is zero, so h = g(W x + h_prev).

struct RnnParams {
  Matrix W;  // hidden x input
  Matrix U;  // hidden x hidden
  Vector b;
  Nonlinearity g = Nonlinearity::Tanh;
  bool literal_mode = false;

  static RnnParams zeros(std::size_t input, std::size_t hidden, Nonlinearity g = Nonlinearity::Tanh,
                         bool literal = false) {
    RnnParams p{Matrix(hidden, input), literal ? Matrix::identity(hidden) : Matrix(hidden, hidden),
                Vector(hidden), g, literal};
    return p;
  }

  std::size_t input_size() const noexcept { return W.cols(); }
  std::size_t hidden_size() const noexcept { return W.rows(); }

  void validate() const {
    const auto h = hidden_size();
    detail::require(U.rows() == h && U.cols() == h && b.size() == h, "rnn", "parameter shapes disagree");
  }

  template <class Self, class F>
  static void visit(Self& self, F&& f, Blocks which) {
    f("W", self.W);
    if (which == Blocks::All || !self.literal_mode) {
      f("U", self.U);
      f("b", self.b);
    }
  }
};

struct RnnTrace {
  Vector x;
  Vector h_prev;
  Vector h;
};

inline double activate(Nonlinearity g, double a) noexcept {
  return g == Nonlinearity::Tanh ? std::tanh(a) : sigmoid(a);
}
// Derivative written in terms of the activation output.
inline double activate_prime_from_output(Nonlinearity g, double y) noexcept {
  return g == Nonlinearity::Tanh ? 1.0 - y * y : y * (1.0 - y);
}

struct RnnStep {
  Vector h;
  RnnTrace trace;
};

inline RnnStep rnn_step(const Vector& x, const Vector& h_prev, const RnnParams& p) {
  detail::require(x.size() == p.input_size() && h_prev.size() == p.hidden_size(), "rnn_step",
                  "input or state length does not match parameters");
  Vector a = matvec(p.W, x);
  if (p.literal_mode) {
    add_inplace(a, h_prev);
  } else {
    matvec_acc(p.U, h_prev, a);
    add_inplace(a, p.b);
  }
  Vector h = map(a, [g = p.g](double v) { return activate(g, v); });
  return {h, {x, h_prev, h}};
}

struct RnnStepGrad {
  Vector dx;
  Vector dh_prev;
};

inline RnnStepGrad rnn_backward(const RnnTrace& tr, const Vector& dh, const RnnParams& p, RnnParams& grads) {
  Vector da(dh.size());
  for (std::size_t k = 0; k < da.size(); ++k) da[k] = dh[k] * activate_prime_from_output(p.g, tr.h[k]);
  add_outer(grads.W, da, tr.x);
  RnnStepGrad out{Vector(p.input_size()), Vector(p.hidden_size())};
  matvec_t_acc(p.W, da, out.dx);
  if (p.literal_mode) {
    out.dh_prev = da;
  } else {
    add_outer(grads.U, da, tr.h_prev);
    add_inplace(grads.b, da);
    matvec_t_acc(p.U, da, out.dh_prev);
  }
  return out;
}

// ---------------------------------------------------------------------------
// LSTM with full-matrix peepholes. Forward order is i, f, c~, c, o, h because
// the output gate reads the new cell state:
//   i  = σ(W_i x + U_i h_prev + V_i c_prev + b_i)
//   f  = σ(W_f x + U_f h_prev + V_f c_prev + b_f)
//   c~ = tanh(W_c x + U_c h_prev + b_c)
//   c  = f ⊙ c_prev + i ⊙ c~
//   o  = σ(W_o x + U_o h_prev + V_o c + b_o)
//   h  = o ⊙ tanh(c)

struct LstmParams {
  Matrix W_i, W_f, W_o, W_c;
  Matrix U_i, U_f, U_o, U_c;
  Matrix V_i, V_f, V_o;
  Vector b_i, b_f, b_o, b_c;
  bool peepholes = true;

  static LstmParams zeros(std::size_t input, std::size_t hidden, bool peepholes = true) {
    const Matrix w(hidden, input), u(hidden, hidden);
    const Vector b(hidden);
    return {w, w, w, w, u, u, u, u, u, u, u, b, b, b, b, peepholes};
  }

  std::size_t input_size() const noexcept { return W_i.cols(); }
  std::size_t hidden_size() const noexcept { return W_i.rows(); }

  void validate() const {
    const auto h = hidden_size(), in = input_size();
    bool ok = true;
    for (const Matrix* m : {&W_i, &W_f, &W_o, &W_c}) ok = ok && m->rows() == h && m->cols() == in;
    for (const Matrix* m : {&U_i, &U_f, &U_o, &U_c, &V_i, &V_f, &V_o}) ok = ok && m->rows() == h && m->cols() == h;
    for (const Vector* v : {&b_i, &b_f, &b_o, &b_c}) ok = ok && v->size() == h;
    detail::require(ok, "lstm", "parameter shapes disagree");
  }

  template <class Self, class F>
  static void visit(Self& self, F&& f, Blocks which) {
    f("W_i", self.W_i);
    f("W_f", self.W_f);
    f("W_o", self.W_o);
    f("W_c", self.W_c);
    f("U_i", self.U_i);
    f("U_f", self.U_f);
    f("U_o", self.U_o);
    f("U_c", self.U_c);
    if (which == Blocks::All || self.peepholes) {
      f("V_i", self.V_i);
      f("V_f", self.V_f);
      f("V_o", self.V_o);
    }
    f("b_i", self.b_i);
    f("b_f", self.b_f);
    f("b_o", self.b_o);
    f("b_c", self.b_c);
  }
};

struct LstmTrace {
  Vector x, h_prev, c_prev;
  Vector i, f, o, cand;  // gate activations and candidate c~
  Vector c, tanh_c;
};

struct LstmStep {
  Vector h;
  Vector c;
  LstmTrace trace;
};

inline LstmStep lstm_step(const Vector& x, const Vector& h_prev, const Vector& c_prev, const LstmParams& p) {
  const auto H = p.hidden_size();
  detail::require(x.size() == p.input_size() && h_prev.size() == H && c_prev.size() == H, "lstm_step",
                  "input or state length does not match parameters");
  auto gate = [&](const Matrix& W, const Matrix& U, const Vector& b) {
    Vector a = matvec(W, x);
    matvec_acc(U, h_prev, a);
    add_inplace(a, b);
    return a;
  };
  Vector ai = gate(p.W_i, p.U_i, p.b_i);
  Vector af = gate(p.W_f, p.U_f, p.b_f);
  if (p.peepholes) {
    matvec_acc(p.V_i, c_prev, ai);
    matvec_acc(p.V_f, c_prev, af);
  }
  LstmTrace tr;
  tr.i = sigmoid(ai);
  tr.f = sigmoid(af);
  tr.cand = tanh(gate(p.W_c, p.U_c, p.b_c));
  tr.c = Vector(H);
  for (std::size_t k = 0; k < H; ++k) tr.c[k] = tr.f[k] * c_prev[k] + tr.i[k] * tr.cand[k];
  Vector ao = gate(p.W_o, p.U_o, p.b_o);
  if (p.peepholes) matvec_acc(p.V_o, tr.c, ao);
  tr.o = sigmoid(ao);
  tr.tanh_c = tanh(tr.c);
  Vector h = hadamard(tr.o, tr.tanh_c);
  tr.x = x;
  tr.h_prev = h_prev;
  tr.c_prev = c_prev;
  Vector c = tr.c;
  return {std::move(h), std::move(c), std::move(tr)};
}

struct LstmStepGrad {
  Vector dx;
  Vector dh_prev;
  Vector dc_prev;
};

// dh and dc are the total upstream gradients reaching h_t and c_t from later
// steps (dc excludes the path through h_t, which is added here).
inline LstmStepGrad lstm_backward(const LstmTrace& tr, const Vector& dh, const Vector& dc_next, const LstmParams& p,
                                  LstmParams& g) {
  const auto H = p.hidden_size();
  Vector dao(H), dc(H), dai(H), daf(H), dac(H);
  for (std::size_t k = 0; k < H; ++k) {
    const double o = tr.o[k];
    dao[k] = dh[k] * tr.tanh_c[k] * o * (1.0 - o);
    dc[k] = dc_next[k] + dh[k] * o * (1.0 - tr.tanh_c[k] * tr.tanh_c[k]);
  }
  if (p.peepholes) matvec_t_acc(p.V_o, dao, dc);
  for (std::size_t k = 0; k < H; ++k) {
    const double i = tr.i[k], f = tr.f[k], cand = tr.cand[k];
    dai[k] = dc[k] * cand * i * (1.0 - i);
    daf[k] = dc[k] * tr.c_prev[k] * f * (1.0 - f);
    dac[k] = dc[k] * i * (1.0 - cand * cand);
  }

  LstmStepGrad out{Vector(p.input_size()), Vector(H), hadamard(dc, tr.f)};
  auto gate_back = [&](const Vector& da, const Matrix& W, const Matrix& U, Matrix& gW, Matrix& gU, Vector& gb) {
    add_outer(gW, da, tr.x);
    add_outer(gU, da, tr.h_prev);
    add_inplace(gb, da);
    matvec_t_acc(W, da, out.dx);
    matvec_t_acc(U, da, out.dh_prev);
  };
  gate_back(dai, p.W_i, p.U_i, g.W_i, g.U_i, g.b_i);
  gate_back(daf, p.W_f, p.U_f, g.W_f, g.U_f, g.b_f);
  gate_back(dac, p.W_c, p.U_c, g.W_c, g.U_c, g.b_c);
  gate_back(dao, p.W_o, p.U_o, g.W_o, g.U_o, g.b_o);
  if (p.peepholes) {
    add_outer(g.V_i, dai, tr.c_prev);
    add_outer(g.V_f, daf, tr.c_prev);
    add_outer(g.V_o, dao, tr.c);
    matvec_t_acc(p.V_i, dai, out.dc_prev);
    matvec_t_acc(p.V_f, daf, out.dc_prev);
  }
  return out;
}

// ---------------------------------------------------------------------------
// GRU with the reset gate applied before the recurrent matrix:
//   z  = σ(W_z x + U_z h_prev + b_z)
//   r  = σ(W_r x + U_r h_prev + b_r)
//   h~ = tanh(W x + U (r ⊙ h_prev) + b)
//   h  = (1 - z) ⊙ h_prev + z ⊙ h~

struct GruParams {
  Matrix W_z, W_r, W;
  Matrix U_z, U_r, U;
  Vector b_z, b_r, b;

  static GruParams zeros(std::size_t input, std::size_t hidden) {
    const Matrix w(hidden, input), u(hidden, hidden);
    const Vector b(hidden);
    return {w, w, w, u, u, u, b, b, b};
  }

  std::size_t input_size() const noexcept { return W.cols(); }
  std::size_t hidden_size() const noexcept { return W.rows(); }

  void validate() const {
    const auto h = hidden_size(), in = input_size();
    bool ok = true;
    for (const Matrix* m : {&W_z, &W_r, &W}) ok = ok && m->rows() == h && m->cols() == in;
    for (const Matrix* m : {&U_z, &U_r, &U}) ok = ok && m->rows() == h && m->cols() == h;
    for (const Vector* v : {&b_z, &b_r, &b}) ok = ok && v->size() == h;
    detail::require(ok, "gru", "parameter shapes disagree");
  }

  template <class Self, class F>
  static void visit(Self& self, F&& f, Blocks) {
    f("W_z", self.W_z);
    f("W_r", self.W_r);
    f("W", self.W);
    f("U_z", self.U_z);
    f("U_r", self.U_r);
    f("U", self.U);
    f("b_z", self.b_z);
    f("b_r", self.b_r);
    f("b", self.b);
  }
};

struct GruTrace {
  Vector x, h_prev;
  Vector z, r, reset_h, cand;
  Vector h;
};

struct GruStep {
  Vector h;
  GruTrace trace;
};

inline GruStep gru_step(const Vector& x, const Vector& h_prev, const GruParams& p) {
  const auto H = p.hidden_size();
  detail::require(x.size() == p.input_size() && h_prev.size() == H, "gru_step",
                  "input or state length does not match parameters");
  GruTrace tr;
  Vector az = matvec(p.W_z, x);
  matvec_acc(p.U_z, h_prev, az);
  add_inplace(az, p.b_z);
  Vector ar = matvec(p.W_r, x);
  matvec_acc(p.U_r, h_prev, ar);
  add_inplace(ar, p.b_r);
  tr.z = sigmoid(az);
  tr.r = sigmoid(ar);
  tr.reset_h = hadamard(tr.r, h_prev);
  Vector ah = matvec(p.W, x);
  matvec_acc(p.U, tr.reset_h, ah);
  add_inplace(ah, p.b);
  tr.cand = tanh(ah);
  tr.h = Vector(H);
  for (std::size_t k = 0; k < H; ++k) tr.h[k] = (1.0 - tr.z[k]) * h_prev[k] + tr.z[k] * tr.cand[k];
  tr.x = x;
  tr.h_prev = h_prev;
  Vector h = tr.h;
  return {std::move(h), std::move(tr)};
}

struct GruStepGrad {
  Vector dx;
  Vector dh_prev;
};

inline GruStepGrad gru_backward(const GruTrace& tr, const Vector& dh, const GruParams& p, GruParams& g) {
  const auto H = p.hidden_size();
  Vector daz(H), dah(H);
  GruStepGrad out{Vector(p.input_size()), Vector(H)};
  for (std::size_t k = 0; k < H; ++k) {
    const double z = tr.z[k];
    daz[k] = dh[k] * (tr.cand[k] - tr.h_prev[k]) * z * (1.0 - z);
    dah[k] = dh[k] * z * (1.0 - tr.cand[k] * tr.cand[k]);
    out.dh_prev[k] = dh[k] * (1.0 - z);
  }
  Vector d_reset_h(H);
  matvec_t_acc(p.U, dah, d_reset_h);
  Vector dar(H);
  for (std::size_t k = 0; k < H; ++k) {
    const double r = tr.r[k];
    dar[k] = d_reset_h[k] * tr.h_prev[k] * r * (1.0 - r);
    out.dh_prev[k] += d_reset_h[k] * r;
  }

  add_outer(g.W, dah, tr.x);
  add_outer(g.U, dah, tr.reset_h);
  add_inplace(g.b, dah);
  add_outer(g.W_z, daz, tr.x);
  add_outer(g.U_z, daz, tr.h_prev);
  add_inplace(g.b_z, daz);
  add_outer(g.W_r, dar, tr.x);
  add_outer(g.U_r, dar, tr.h_prev);
  add_inplace(g.b_r, dar);

  matvec_t_acc(p.W, dah, out.dx);
  matvec_t_acc(p.W_z, daz, out.dx);
  matvec_t_acc(p.W_r, dar, out.dx);
  matvec_t_acc(p.U_z, daz, out.dh_prev);
  matvec_t_acc(p.U_r, dar, out.dh_prev);
  return out;
}

// ---------------------------------------------------------------------------
// Generic parameter handling.

template <class P, class F>
void for_each_block(P& p, F&& f, Blocks which = Blocks::Trainable) {
  std::remove_const_t<P>::visit(p, std::forward<F>(f), which);
}

// Zero-valued container with the same shapes and flags as `p`.
template <class P>
P zeros_like(const P& p) {
  P out = p;
  for_each_block(out, [](std::string_view, auto& block) { block.fill(0.0); }, Blocks::All);
  return out;
}

inline void init_params(RnnParams& p, Rng& rng, InitScheme scheme) {
  detail::init_block(p.W, rng, scheme);
  if (p.literal_mode) {
    p.U = Matrix::identity(p.hidden_size());
  } else {
    detail::init_block(p.U, rng, scheme);
  }
  p.b.fill(0.0);
}

inline void init_params(LstmParams& p, Rng& rng, InitScheme scheme) {
  for (Matrix* m : {&p.W_i, &p.W_f, &p.W_o, &p.W_c, &p.U_i, &p.U_f, &p.U_o, &p.U_c}) detail::init_block(*m, rng, scheme);
  for (Matrix* m : {&p.V_i, &p.V_f, &p.V_o}) {
    if (p.peepholes) {
      detail::init_block(*m, rng, scheme);
    } else {
      m->fill(0.0);
    }
  }
  for (Vector* v : {&p.b_i, &p.b_f, &p.b_o, &p.b_c}) v->fill(0.0);
}

inline void init_params(GruParams& p, Rng& rng, InitScheme scheme) {
  for (Matrix* m : {&p.W_z, &p.W_r, &p.W, &p.U_z, &p.U_r, &p.U}) detail::init_block(*m, rng, scheme);
  for (Vector* v : {&p.b_z, &p.b_r, &p.b}) v->fill(0.0);
}

// ---------------------------------------------------------------------------
// Sequences. The fold starts from h_0 = 0 (and c_0 = 0 for the LSTM).

template <class Trace>
struct SequenceResult {
  Vector h_final;
  std::vector<Trace> traces;
};

template <class P>
struct SequenceGrad {
  P params;
  std::vector<Vector> dxs;
  Vector dh0;
  Vector dc0;  // LSTM only
};

namespace detail {
inline void require_nonempty(std::size_t n) {
  if (n == 0) throw ContractError("run_sequence: empty input sequence");
}
}  // namespace detail

inline SequenceResult<RnnTrace> run_sequence(std::span<const Vector> xs, const RnnParams& p) {
  detail::require_nonempty(xs.size());
  SequenceResult<RnnTrace> out{Vector(p.hidden_size()), {}};
  out.traces.reserve(xs.size());
  for (const auto& x : xs) {
    auto step = rnn_step(x, out.h_final, p);
    out.h_final = std::move(step.h);
    out.traces.push_back(std::move(step.trace));
  }
  return out;
}

inline SequenceResult<LstmTrace> run_sequence(std::span<const Vector> xs, const LstmParams& p) {
  detail::require_nonempty(xs.size());
  SequenceResult<LstmTrace> out{Vector(p.hidden_size()), {}};
  out.traces.reserve(xs.size());
  Vector c(p.hidden_size());
  for (const auto& x : xs) {
    auto step = lstm_step(x, out.h_final, c, p);
    out.h_final = std::move(step.h);
    c = std::move(step.c);
    out.traces.push_back(std::move(step.trace));
  }
  return out;
}

inline SequenceResult<GruTrace> run_sequence(std::span<const Vector> xs, const GruParams& p) {
  detail::require_nonempty(xs.size());
  SequenceResult<GruTrace> out{Vector(p.hidden_size()), {}};
  out.traces.reserve(xs.size());
  for (const auto& x : xs) {
    auto step = gru_step(x, out.h_final, p);
    out.h_final = std::move(step.h);
    out.traces.push_back(std::move(step.trace));
  }
  return out;
}

namespace detail {
template <class Trace>
void check_traces(std::span<const Trace> traces, std::size_t input, std::size_t hidden, const Vector& dh) {
  if (traces.empty()) throw ContractError("backward_sequence: no traces");
  if (dh.size() != hidden) throw ContractError("backward_sequence: upstream gradient has wrong length");
  for (const auto& t : traces)
    if (t.x.size() != input || t.h_prev.size() != hidden)
      throw ContractError("backward_sequence: trace does not match parameters");
}
}  // namespace detail

inline SequenceGrad<RnnParams> backward_sequence(std::span<const RnnTrace> traces, const Vector& grad_h_final,
                                                 const RnnParams& p) {
  detail::check_traces(traces, p.input_size(), p.hidden_size(), grad_h_final);
  SequenceGrad<RnnParams> out{zeros_like(p), std::vector<Vector>(traces.size()), grad_h_final, {}};
  for (std::size_t t = traces.size(); t-- > 0;) {
    auto g = rnn_backward(traces[t], out.dh0, p, out.params);
    out.dxs[t] = std::move(g.dx);
    out.dh0 = std::move(g.dh_prev);
  }
  return out;
}

inline SequenceGrad<LstmParams> backward_sequence(std::span<const LstmTrace> traces, const Vector& grad_h_final,
                                                  const LstmParams& p) {
  detail::check_traces(traces, p.input_size(), p.hidden_size(), grad_h_final);
  SequenceGrad<LstmParams> out{zeros_like(p), std::vector<Vector>(traces.size()), grad_h_final,
                               Vector(p.hidden_size())};
  for (std::size_t t = traces.size(); t-- > 0;) {
    auto g = lstm_backward(traces[t], out.dh0, out.dc0, p, out.params);
    out.dxs[t] = std::move(g.dx);
    out.dh0 = std::move(g.dh_prev);
    out.dc0 = std::move(g.dc_prev);
  }
  return out;
}

inline SequenceGrad<GruParams> backward_sequence(std::span<const GruTrace> traces, const Vector& grad_h_final,
                                                 const GruParams& p) {
  detail::check_traces(traces, p.input_size(), p.hidden_size(), grad_h_final);
  SequenceGrad<GruParams> out{zeros_like(p), std::vector<Vector>(traces.size()), grad_h_final, {}};
  for (std::size_t t = traces.size(); t-- > 0;) {
    auto g = gru_backward(traces[t], out.dh0, p, out.params);
    out.dxs[t] = std::move(g.dx);
    out.dh0 = std::move(g.dh_prev);
  }
  return out;
}

}  // namespace seqtext
