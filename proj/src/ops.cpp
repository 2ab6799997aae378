#include "ntm/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ntm/error.hpp"

namespace ntm::ad {
namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank)
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) +
                         ", got " + shape_string(t.shape()));
}

void require_same(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                         " vs " + shape_string(b.shape()));
}

template <class F, class DF>
Var unary(Var x, const char* /*name*/, F f, DF df) {
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i]);
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), {x}, [ix, df](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& xv = t.value(ix);
    const Tensor& yv = t.value(self);
    Tensor& gx = t.grad_buffer(ix);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * df(xv[i], yv[i]);
  });
}

// Binary entrywise op with single-element broadcasting on either side.
// da(a, b, y) and db(a, b, y) are the local partial derivatives.
template <class F, class DA, class DB>
Var binary(Var a, Var b, const char* name, F f, DA da, DB db) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const bool a_bcast = av.size() == 1 && bv.size() != 1;
  const bool b_bcast = bv.size() == 1 && av.size() != 1;
  if (!a_bcast && !b_bcast) require_same(av, bv, name);
  Tensor out(a_bcast ? bv.shape() : av.shape());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = f(av[a_bcast ? 0 : i], bv[b_bcast ? 0 : i]);
  const std::size_t ia = a.id();
  const std::size_t ib = b.id();
  return a.tape().record(
      std::move(out), {a, b},
      [ia, ib, a_bcast, b_bcast, da, db](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        const Tensor& av = t.value(ia);
        const Tensor& bv = t.value(ib);
        const Tensor& yv = t.value(self);
        if (t.requires_grad(ia)) {
          Tensor& ga = t.grad_buffer(ia);
          for (std::size_t i = 0; i < g.size(); ++i) {
            const double av_i = av[a_bcast ? 0 : i];
            const double bv_i = bv[b_bcast ? 0 : i];
            ga[a_bcast ? 0 : i] += g[i] * da(av_i, bv_i, yv[i]);
          }
        }
        if (t.requires_grad(ib)) {
          Tensor& gb = t.grad_buffer(ib);
          for (std::size_t i = 0; i < g.size(); ++i) {
            const double av_i = av[a_bcast ? 0 : i];
            const double bv_i = bv[b_bcast ? 0 : i];
            gb[b_bcast ? 0 : i] += g[i] * db(av_i, bv_i, yv[i]);
          }
        }
      });
}

double stable_softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double dot(std::span<const double> u, std::span<const double> v) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s;
}

// Accumulates d cos(u, v) / du scaled by g into gu.
void cosine_grad(std::span<const double> u, std::span<const double> v, double eps, double g,
                 std::span<double> gu, std::span<double> gv) {
  const double nu = norm(u);
  const double nv = norm(v);
  const double p = dot(u, v);
  const double d = nu * nv + eps;
  const double cu = nu > 0 ? p * nv / (d * d * nu) : 0.0;
  const double cv = nv > 0 ? p * nu / (d * d * nv) : 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!gu.empty()) gu[i] += g * (v[i] / d - cu * u[i]);
    if (!gv.empty()) gv[i] += g * (u[i] / d - cv * v[i]);
  }
}

}  // namespace

Var matmul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank(av, 2, "matmul");
  require_rank(bv, 2, "matmul");
  const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
  if (bv.rows() != k)
    throw DimensionError("matmul: inner dimensions disagree " + shape_string(av.shape()) +
                         " x " + shape_string(bv.shape()));
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av.at(i, p);
      for (std::size_t j = 0; j < n; ++j) out.at(i, j) += aip * bv.at(p, j);
    }
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {a, b}, [ia, ib, m, k, n](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& av = t.value(ia);
    const Tensor& bv = t.value(ib);
    if (t.requires_grad(ia)) {
      Tensor& ga = t.grad_buffer(ia);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += g.at(i, j) * bv.at(p, j);
          ga.at(i, p) += s;
        }
    }
    if (t.requires_grad(ib)) {
      Tensor& gb = t.grad_buffer(ib);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = av.at(i, p);
          for (std::size_t j = 0; j < n; ++j) gb.at(p, j) += aip * g.at(i, j);
        }
    }
  });
}

Var matvec(Var a, Var x) {
  const Tensor& av = a.value();
  const Tensor& xv = x.value();
  require_rank(av, 2, "matvec");
  require_rank(xv, 1, "matvec");
  const std::size_t m = av.rows(), k = av.cols();
  if (xv.size() != k)
    throw DimensionError("matvec: " + shape_string(av.shape()) + " x " +
                         shape_string(xv.shape()));
  Tensor out({m});
  for (std::size_t i = 0; i < m; ++i) out[i] = dot(av.row(i), xv.data());
  const std::size_t ia = a.id(), ix = x.id();
  return a.tape().record(std::move(out), {a, x}, [ia, ix, m, k](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& av = t.value(ia);
    const Tensor& xv = t.value(ix);
    if (t.requires_grad(ia)) {
      Tensor& ga = t.grad_buffer(ia);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) ga.at(i, p) += g[i] * xv[p];
    }
    if (t.requires_grad(ix)) {
      Tensor& gx = t.grad_buffer(ix);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) gx[p] += g[i] * av.at(i, p);
    }
  });
}

Var matvec_transposed(Var a, Var x) {
  const Tensor& av = a.value();
  const Tensor& xv = x.value();
  require_rank(av, 2, "matvec_transposed");
  require_rank(xv, 1, "matvec_transposed");
  const std::size_t n = av.rows(), m = av.cols();
  if (xv.size() != n)
    throw DimensionError("matvec_transposed: " + shape_string(av.shape()) + "^T x " +
                         shape_string(xv.shape()));
  Tensor out({m});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out[j] += xv[i] * av.at(i, j);
  const std::size_t ia = a.id(), ix = x.id();
  return a.tape().record(std::move(out), {a, x}, [ia, ix, n, m](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& av = t.value(ia);
    const Tensor& xv = t.value(ix);
    if (t.requires_grad(ia)) {
      Tensor& ga = t.grad_buffer(ia);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) ga.at(i, j) += xv[i] * g[j];
    }
    if (t.requires_grad(ix)) {
      Tensor& gx = t.grad_buffer(ix);
      for (std::size_t i = 0; i < n; ++i) gx[i] += dot(av.row(i), g.data());
    }
  });
}

Var outer(Var u, Var v) {
  const Tensor& uv = u.value();
  const Tensor& vv = v.value();
  require_rank(uv, 1, "outer");
  require_rank(vv, 1, "outer");
  const std::size_t n = uv.size(), m = vv.size();
  Tensor out({n, m});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out.at(i, j) = uv[i] * vv[j];
  const std::size_t iu = u.id(), iv = v.id();
  return u.tape().record(std::move(out), {u, v}, [iu, iv, n, m](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& uv = t.value(iu);
    const Tensor& vv = t.value(iv);
    if (t.requires_grad(iu)) {
      Tensor& gu = t.grad_buffer(iu);
      for (std::size_t i = 0; i < n; ++i) gu[i] += dot(g.row(i), vv.data());
    }
    if (t.requires_grad(iv)) {
      Tensor& gv = t.grad_buffer(iv);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) gv[j] += g.at(i, j) * uv[i];
    }
  });
}

Var add(Var a, Var b) {
  return binary(
      a, b, "add", [](double x, double y) { return x + y; },
      [](double, double, double) { return 1.0; }, [](double, double, double) { return 1.0; });
}

Var sub(Var a, Var b) {
  return binary(
      a, b, "sub", [](double x, double y) { return x - y; },
      [](double, double, double) { return 1.0; }, [](double, double, double) { return -1.0; });
}

Var mul(Var a, Var b) {
  return binary(
      a, b, "mul", [](double x, double y) { return x * y; },
      [](double, double y, double) { return y; }, [](double x, double, double) { return x; });
}

Var div(Var a, Var b) {
  for (double d : b.value().data())
    if (d == 0.0) throw DomainError("div: division by zero");
  return binary(
      a, b, "div", [](double x, double y) { return x / y; },
      [](double, double y, double) { return 1.0 / y; },
      [](double, double y, double out) { return -out / y; });
}

Var affine(Var x, double scale, double offset) {
  return unary(
      x, "affine", [=](double v) { return scale * v + offset; },
      [=](double, double) { return scale; });
}

Var sigmoid(Var x) {
  return unary(x, "sigmoid", stable_sigmoid, [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var x) {
  return unary(
      x, "tanh", [](double v) { return std::tanh(v); },
      [](double, double y) { return 1.0 - y * y; });
}

Var softplus(Var x) {
  return unary(x, "softplus", stable_softplus,
               [](double v, double) { return stable_sigmoid(v); });
}

Var oneplus(Var x) {
  return unary(
      x, "oneplus", [](double v) { return 1.0 + stable_softplus(v); },
      [](double v, double) { return stable_sigmoid(v); });
}

Var exp(Var x) {
  return unary(
      x, "exp", [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Var log(Var x) {
  for (double v : x.value().data())
    if (!(v > 0.0)) throw DomainError("log of non-positive entry " + std::to_string(v));
  return unary(
      x, "log", [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Var pow_scalar(Var x, Var p) {
  const Tensor& xv = x.value();
  if (p.value().size() != 1)
    throw DimensionError("pow_scalar: exponent must be a single element, got " +
                         shape_string(p.value().shape()));
  for (double v : xv.data())
    if (v < 0.0) throw DomainError("pow_scalar of negative entry " + std::to_string(v));
  const double pv = p.value()[0];
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = std::pow(xv[i], pv);
  const std::size_t ix = x.id(), ip = p.id();
  return x.tape().record(std::move(out), {x, p}, [ix, ip](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& xv = t.value(ix);
    const Tensor& yv = t.value(self);
    const double pv = t.value(ip)[0];
    if (t.requires_grad(ix)) {
      Tensor& gx = t.grad_buffer(ix);
      for (std::size_t i = 0; i < g.size(); ++i)
        if (xv[i] > 0.0) gx[i] += g[i] * pv * yv[i] / xv[i];
        else if (pv == 1.0) gx[i] += g[i];
    }
    if (t.requires_grad(ip)) {
      double s = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i)
        if (xv[i] > 0.0) s += g[i] * yv[i] * std::log(xv[i]);
      t.grad_buffer(ip)[0] += s;
    }
  });
}

Var clamp(Var x, double lo, double hi) {
  return unary(
      x, "clamp", [=](double v) { return std::clamp(v, lo, hi); },
      [=](double v, double) { return (v >= lo && v <= hi) ? 1.0 : 0.0; });
}

Var sum(Var x) {
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  const std::size_t ix = x.id();
  return x.tape().record(Tensor::scalar(s), {x}, [ix](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    Tensor& gx = t.grad_buffer(ix);
    for (double& v : gx.data()) v += g;
  });
}

Var softmax(Var x) {
  const Tensor& xv = x.value();
  require_rank(xv, 1, "softmax");
  const double mx = *std::ranges::max_element(xv.data());
  Tensor out(xv.shape());
  double z = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) z += (out[i] = std::exp(xv[i] - mx));
  for (double& v : out.data()) v /= z;
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), {x}, [ix](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& y = t.value(self);
    const double gy = dot(g.data(), y.data());
    Tensor& gx = t.grad_buffer(ix);
    for (std::size_t i = 0; i < y.size(); ++i) gx[i] += y[i] * (g[i] - gy);
  });
}

Var cosine_similarity(Var u, Var v, double eps) {
  const Tensor& uv = u.value();
  const Tensor& vv = v.value();
  require_rank(uv, 1, "cosine_similarity");
  require_same(uv, vv, "cosine_similarity");
  if (!(eps > 0.0)) throw ContractError("cosine_similarity: eps must be positive");
  const double c = dot(uv.data(), vv.data()) / (norm(uv.data()) * norm(vv.data()) + eps);
  const std::size_t iu = u.id(), iv = v.id();
  return u.tape().record(Tensor::scalar(c), {u, v}, [iu, iv, eps](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    std::span<double> gu, gv;
    if (t.requires_grad(iu)) gu = t.grad_buffer(iu).data();
    if (t.requires_grad(iv)) gv = t.grad_buffer(iv).data();
    cosine_grad(t.value(iu).data(), t.value(iv).data(), eps, g, gu, gv);
  });
}

Var row_cosine_similarity(Var rows, Var key, double eps) {
  const Tensor& rv = rows.value();
  const Tensor& kv = key.value();
  require_rank(rv, 2, "row_cosine_similarity");
  require_rank(kv, 1, "row_cosine_similarity");
  if (rv.cols() != kv.size())
    throw DimensionError("row_cosine_similarity: rows " + shape_string(rv.shape()) +
                         " vs key " + shape_string(kv.shape()));
  if (!(eps > 0.0)) throw ContractError("row_cosine_similarity: eps must be positive");
  const std::size_t n = rv.rows();
  const double nk = norm(kv.data());
  Tensor out({n});
  for (std::size_t i = 0; i < n; ++i)
    out[i] = dot(rv.row(i), kv.data()) / (norm(rv.row(i)) * nk + eps);
  const std::size_t ir = rows.id(), ik = key.id();
  return rows.tape().record(std::move(out), {rows, key}, [ir, ik, n, eps](Tape& t,
                                                                          std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& rv = t.value(ir);
    const Tensor& kv = t.value(ik);
    Tensor* gr = t.requires_grad(ir) ? &t.grad_buffer(ir) : nullptr;
    std::span<double> gk;
    if (t.requires_grad(ik)) gk = t.grad_buffer(ik).data();
    for (std::size_t i = 0; i < n; ++i) {
      if (g[i] == 0.0) continue;
      cosine_grad(rv.row(i), kv.data(), eps, g[i], gr ? gr->row(i) : std::span<double>(), gk);
    }
  });
}

Var circular_convolve(Var w, Var s) {
  const Tensor& wv = w.value();
  const Tensor& sv = s.value();
  require_rank(wv, 1, "circular_convolve");
  require_rank(sv, 1, "circular_convolve");
  const std::size_t k = sv.size();
  if (k % 2 == 0)
    throw ConfigError("circular_convolve: shift kernel width must be odd, got " +
                      std::to_string(k));
  const std::size_t n = wv.size();
  const auto half = static_cast<long>(k / 2);
  const auto nn = static_cast<long>(n);
  // Source index for output i and kernel slot j.
  auto src = [=](std::size_t i, std::size_t j) {
    const long offset = static_cast<long>(j) - half;
    return static_cast<std::size_t>(((static_cast<long>(i) - offset) % nn + nn) % nn);
  };
  Tensor out({n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) out[i] += wv[src(i, j)] * sv[j];
  const std::size_t iw = w.id(), is = s.id();
  return w.tape().record(std::move(out), {w, s}, [iw, is, n, k, src](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& wv = t.value(iw);
    const Tensor& sv = t.value(is);
    Tensor* gw = t.requires_grad(iw) ? &t.grad_buffer(iw) : nullptr;
    Tensor* gs = t.requires_grad(is) ? &t.grad_buffer(is) : nullptr;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < k; ++j) {
        const std::size_t from = src(i, j);
        if (gw) (*gw)[from] += g[i] * sv[j];
        if (gs) (*gs)[j] += g[i] * wv[from];
      }
  });
}

Var concat(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank(av, 1, "concat");
  require_rank(bv, 1, "concat");
  const std::size_t na = av.size(), nb = bv.size();
  std::vector<double> data(av.data().begin(), av.data().end());
  data.insert(data.end(), bv.data().begin(), bv.data().end());
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape().record(Tensor::vector(std::move(data)), {a, b},
                         [ia, ib, na, nb](Tape& t, std::size_t self) {
                           const Tensor& g = t.grad(self);
                           if (t.requires_grad(ia)) {
                             Tensor& ga = t.grad_buffer(ia);
                             for (std::size_t i = 0; i < na; ++i) ga[i] += g[i];
                           }
                           if (t.requires_grad(ib)) {
                             Tensor& gb = t.grad_buffer(ib);
                             for (std::size_t i = 0; i < nb; ++i) gb[i] += g[na + i];
                           }
                         });
}

Var slice(Var x, std::size_t offset, std::size_t length) {
  const Tensor& xv = x.value();
  require_rank(xv, 1, "slice");
  if (length == 0 || offset + length > xv.size())
    throw DimensionError("slice [" + std::to_string(offset) + ", +" + std::to_string(length) +
                         ") out of range for " + shape_string(xv.shape()));
  auto first = xv.data().begin() + static_cast<std::ptrdiff_t>(offset);
  std::vector<double> data(first, first + static_cast<std::ptrdiff_t>(length));
  const std::size_t ix = x.id();
  return x.tape().record(Tensor::vector(std::move(data)), {x},
                         [ix, offset, length](Tape& t, std::size_t self) {
                           const Tensor& g = t.grad(self);
                           Tensor& gx = t.grad_buffer(ix);
                           for (std::size_t i = 0; i < length; ++i) gx[offset + i] += g[i];
                         });
}

Var stack(std::span<const Var> rows) {
  if (rows.empty()) throw DimensionError("stack of zero rows");
  const std::size_t n = rows.size();
  const std::size_t c = rows.front().size();
  Tensor out({n, c});
  std::vector<std::size_t> ids;
  ids.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    const Tensor& rv = rows[r].value();
    require_rank(rv, 1, "stack");
    if (rv.size() != c) throw DimensionError("stack: ragged rows");
    std::ranges::copy(rv.data(), out.row(r).begin());
    ids.push_back(rows[r].id());
  }
  return rows.front().tape().record(std::move(out), rows,
                                    [ids = std::move(ids), c](Tape& t, std::size_t self) {
                                      const Tensor& g = t.grad(self);
                                      for (std::size_t r = 0; r < ids.size(); ++r) {
                                        if (!t.requires_grad(ids[r])) continue;
                                        Tensor& gr = t.grad_buffer(ids[r]);
                                        for (std::size_t j = 0; j < c; ++j) gr[j] += g.at(r, j);
                                      }
                                    });
}

}  // namespace ntm::ad
