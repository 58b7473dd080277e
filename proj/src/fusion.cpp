#include "ttp/fusion.hpp"

#include <cmath>
#include <string>

#include "ttp/error.hpp"

namespace ttp::fusion {

namespace {

// (D*d)-vector -> D-vector summing each group of d consecutive entries.
Vector group_sum(const Vector& v, int d) {
  const Eigen::Index D = v.size() / d;
  return Eigen::Map<const Matrix>(v.data(), d, D).colwise().sum().transpose();
}

// D-vector -> (D*d)-vector repeating each entry d times.
Vector expand(const Vector& v, int d) {
  Vector out(v.size() * d);
  for (Eigen::Index i = 0; i < v.size(); ++i) out.segment(i * d, d).setConstant(v(i));
  return out;
}

void check_projection(const Matrix& P, Eigen::Index c, int d, const char* name) {
  if (d < 1 || P.rows() % d != 0 || P.cols() != c) {
    throw ShapeError(std::string("projection ") + name + " is " + std::to_string(P.rows()) + "x" +
                     std::to_string(P.cols()) + ", expected (D*" + std::to_string(d) + ")x" + std::to_string(c));
  }
}

void check_same(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError(std::string("shape mismatch: ") + what);
}

}  // namespace

Vector mfb(const Vector& x, const Vector& y, const Matrix& U, const Matrix& V, int d) {
  if (x.size() != y.size()) throw ShapeError("mfb: x and y differ in length");
  check_projection(U, x.size(), d, "U");
  check_projection(V, x.size(), d, "V");
  check_same(U, V, "mfb: U vs V");
  const Vector prod = (U * x).cwiseProduct(V * y);
  return group_sum(prod, d);
}

Vector trilinear_pool(const Vector& x, const Vector& y, const Vector& z, const Matrix& U, const Matrix& V,
                      const Matrix& W, int d) {
  if (x.size() != y.size() || x.size() != z.size()) throw ShapeError("trilinear_pool: input lengths differ");
  check_projection(U, x.size(), d, "U");
  check_projection(V, x.size(), d, "V");
  check_projection(W, x.size(), d, "W");
  check_same(U, V, "trilinear_pool: U vs V");
  check_same(U, W, "trilinear_pool: U vs W");
  const Vector prod = (U * x).cwiseProduct(V * y).cwiseProduct(W * z);
  return group_sum(prod, d);
}

Vector trilinear_pool_maps(const FeatureMap& X, const FeatureMap& Y, const FeatureMap& Z, const Matrix& U,
                           const Matrix& V, const Matrix& W, int d) {
  check_same(X, Y, "trilinear_pool_maps: X vs Y");
  check_same(X, Z, "trilinear_pool_maps: X vs Z");
  check_projection(U, X.rows(), d, "U");
  check_projection(V, X.rows(), d, "V");
  check_projection(W, X.rows(), d, "W");
  check_same(U, V, "trilinear_pool_maps: U vs V");
  check_same(U, W, "trilinear_pool_maps: U vs W");
  const Matrix prod = (U * X).cwiseProduct(V * Y).cwiseProduct(W * Z);
  return group_sum(prod.rowwise().sum(), d);
}

Vector bilinear_pool_maps(const FeatureMap& X, const FeatureMap& Y, const Matrix& U, const Matrix& V, int d) {
  check_same(X, Y, "bilinear_pool_maps: X vs Y");
  check_projection(U, X.rows(), d, "U");
  check_projection(V, X.rows(), d, "V");
  check_same(U, V, "bilinear_pool_maps: U vs V");
  const Matrix prod = (U * X).cwiseProduct(V * Y);
  return group_sum(prod.rowwise().sum(), d);
}

NormalizedVector signed_sqrt_l2(const Vector& f) {
  if (!f.allFinite()) throw NumericError("signed_sqrt_l2: non-finite input");
  NormalizedVector out;
  Vector g = f.unaryExpr([](double v) { return v >= 0.0 ? std::sqrt(v) : -std::sqrt(-v); });
  out.norm = g.norm();
  if (out.norm == 0.0) {
    out.values = Vector::Zero(f.size());
    out.normalized = false;
  } else {
    out.values = g / out.norm;
    out.normalized = true;
  }
  return out;
}

Vector signed_sqrt_l2_backward(const Vector& grad_out, const Vector& f, const NormalizedVector& out) {
  if (!out.normalized) return Vector::Zero(f.size());
  const Vector& y = out.values;
  const Vector grad_g = (grad_out - y * y.dot(grad_out)) / out.norm;
  Vector grad_f(f.size());
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    const double a = std::abs(f(i));
    grad_f(i) = a == 0.0 ? 0.0 : grad_g(i) / (2.0 * std::sqrt(a));
  }
  return grad_f;
}

FusionParams FusionParams::zeros(int c, int d, int D, int C) {
  if (c < 1 || d < 1 || D < 1) throw InvalidArgument("fusion dimensions must be positive");
  if (C < 2) throw InvalidArgument("fusion needs at least 2 classes");
  FusionParams p;
  p.c = c;
  p.d = d;
  p.D = D;
  p.C = C;
  p.U = Matrix::Zero(static_cast<Eigen::Index>(D) * d, c);
  p.V = p.U;
  p.W = p.U;
  p.P = Matrix::Zero(D, C);
  return p;
}

FusionParams FusionParams::random(int c, int d, int D, int C, Rng& rng) {
  FusionParams p = zeros(c, d, D, C);
  const double a = 1.0 / std::sqrt(static_cast<double>(c));
  fill_uniform(p.U, a, rng);
  fill_uniform(p.V, a, rng);
  fill_uniform(p.W, a, rng);
  fill_uniform(p.P, 1.0 / std::sqrt(static_cast<double>(D)), rng);
  return p;
}

std::vector<ParamRef> FusionParams::params(const std::string& prefix) {
  return {param_ref(prefix + ".U", U), param_ref(prefix + ".V", V), param_ref(prefix + ".W", W),
          param_ref(prefix + ".P", P)};
}

TtpOutput ttp_forward(const FeatureMap& i_t, const FeatureMap& mv, const FeatureMap& r,
                      const FeatureMap& i_neighbor, const FusionParams& params, const TtpOptions& options,
                      TtpCache* cache) {
  check_same(i_t, mv, "ttp_forward: I_t vs MV_t");
  check_same(i_t, r, "ttp_forward: I_t vs R_t");
  if (options.temporal) check_same(i_t, i_neighbor, "ttp_forward: I_t vs I_neighbor");
  if (i_t.rows() != params.c) throw ShapeError("ttp_forward: feature width differs from fusion c");
  const int d = params.d;

  Matrix proj_mv = params.V * mv;
  Matrix proj_r = params.W * r;
  const Matrix mv_r = proj_mv.cwiseProduct(proj_r);
  Matrix proj_i = params.U * i_t;
  Vector f_tp0 = group_sum(proj_i.cwiseProduct(mv_r).rowwise().sum(), d);
  Matrix proj_nb;
  Vector f_tp1;
  if (options.temporal) {
    proj_nb = params.U * i_neighbor;
    f_tp1 = group_sum(proj_nb.cwiseProduct(mv_r).rowwise().sum(), d);
  }

  NormalizedVector n0, n1, n_sum;
  Vector f_ttp;
  if (options.normalization == Normalization::kPerBranch) {
    n0 = signed_sqrt_l2(f_tp0);
    f_ttp = n0.values;
    if (options.temporal) {
      n1 = signed_sqrt_l2(f_tp1);
      f_ttp += n1.values;
    }
  } else {
    n_sum = signed_sqrt_l2(options.temporal ? Vector(f_tp0 + f_tp1) : f_tp0);
    f_ttp = n_sum.values;
  }
  TtpOutput out;
  out.scores = params.P.transpose() * f_ttp;
  out.f_ttp = f_ttp;

  if (cache != nullptr) {
    cache->filled = true;
    cache->options = options;
    cache->i_t = i_t;
    cache->mv = mv;
    cache->r = r;
    cache->i_neighbor = options.temporal ? i_neighbor : FeatureMap();
    cache->proj_i = std::move(proj_i);
    cache->proj_neighbor = std::move(proj_nb);
    cache->proj_mv = std::move(proj_mv);
    cache->proj_r = std::move(proj_r);
    cache->f_tp0 = std::move(f_tp0);
    cache->f_tp1 = std::move(f_tp1);
    cache->n0 = std::move(n0);
    cache->n1 = std::move(n1);
    cache->n_sum = std::move(n_sum);
    cache->f_ttp = std::move(f_ttp);
    cache->scores = out.scores;
  }
  return out;
}

TtpGrads ttp_backward(const Vector& grad_scores, const TtpCache& cache, const FusionParams& params) {
  if (!cache.filled) throw StaleCacheError("ttp_backward called without a forward cache");
  if (grad_scores.size() != params.C || cache.scores.size() != params.C ||
      cache.proj_i.rows() != params.U.rows() || cache.i_t.rows() != params.c) {
    throw StaleCacheError("ttp cache does not match parameters or upstream gradient");
  }
  const int d = params.d;
  const bool temporal = cache.options.temporal;

  TtpGrads g;
  g.P.noalias() = cache.f_ttp * grad_scores.transpose();
  const Vector grad_f = params.P * grad_scores;

  Vector grad_tp0, grad_tp1;
  if (cache.options.normalization == Normalization::kPerBranch) {
    grad_tp0 = signed_sqrt_l2_backward(grad_f, cache.f_tp0, cache.n0);
    if (temporal) grad_tp1 = signed_sqrt_l2_backward(grad_f, cache.f_tp1, cache.n1);
  } else {
    const Vector summed = temporal ? Vector(cache.f_tp0 + cache.f_tp1) : cache.f_tp0;
    grad_tp0 = signed_sqrt_l2_backward(grad_f, summed, cache.n_sum);
    if (temporal) grad_tp1 = grad_tp0;
  }

  const Vector e0 = expand(grad_tp0, d);
  const Matrix mv_r = cache.proj_mv.cwiseProduct(cache.proj_r);
  const Matrix grad_proj_i = e0.asDiagonal() * mv_r;
  Matrix weighted_i = e0.asDiagonal() * cache.proj_i;  // sum over branches of e_b .* (U * I_b)

  g.U.noalias() = grad_proj_i * cache.i_t.transpose();
  g.i_t.noalias() = params.U.transpose() * grad_proj_i;
  if (temporal) {
    const Vector e1 = expand(grad_tp1, d);
    const Matrix grad_proj_nb = e1.asDiagonal() * mv_r;
    weighted_i += e1.asDiagonal() * cache.proj_neighbor;
    g.U.noalias() += grad_proj_nb * cache.i_neighbor.transpose();
    g.i_neighbor.noalias() = params.U.transpose() * grad_proj_nb;
  } else {
    g.i_neighbor = FeatureMap::Zero(cache.i_t.rows(), cache.i_t.cols());
  }

  const Matrix grad_proj_mv = weighted_i.cwiseProduct(cache.proj_r);
  const Matrix grad_proj_r = weighted_i.cwiseProduct(cache.proj_mv);
  g.V.noalias() = grad_proj_mv * cache.mv.transpose();
  g.mv.noalias() = params.V.transpose() * grad_proj_mv;
  g.W.noalias() = grad_proj_r * cache.r.transpose();
  g.r.noalias() = params.W.transpose() * grad_proj_r;
  return g;
}

PairParams PairParams::zeros(int c, int d, int D, int C) {
  if (c < 1 || d < 1 || D < 1) throw InvalidArgument("pair dimensions must be positive");
  if (C < 2) throw InvalidArgument("pair head needs at least 2 classes");
  PairParams p;
  p.c = c;
  p.d = d;
  p.D = D;
  p.C = C;
  p.U = Matrix::Zero(static_cast<Eigen::Index>(D) * d, c);
  p.V = p.U;
  p.P = Matrix::Zero(D, C);
  return p;
}

PairParams PairParams::random(int c, int d, int D, int C, Rng& rng) {
  PairParams p = zeros(c, d, D, C);
  const double a = 1.0 / std::sqrt(static_cast<double>(c));
  fill_uniform(p.U, a, rng);
  fill_uniform(p.V, a, rng);
  fill_uniform(p.P, 1.0 / std::sqrt(static_cast<double>(D)), rng);
  return p;
}

std::vector<ParamRef> PairParams::params(const std::string& prefix) {
  return {param_ref(prefix + ".U", U), param_ref(prefix + ".V", V), param_ref(prefix + ".P", P)};
}

Vector pair_forward(const FeatureMap& x, const FeatureMap& y, const PairParams& params, PairCache* cache) {
  check_same(x, y, "pair_forward: X vs Y");
  if (x.rows() != params.c) throw ShapeError("pair_forward: feature width differs from c");
  Matrix proj_x = params.U * x;
  Matrix proj_y = params.V * y;
  Vector f = group_sum(proj_x.cwiseProduct(proj_y).rowwise().sum(), params.d);
  NormalizedVector n = signed_sqrt_l2(f);
  Vector scores = params.P.transpose() * n.values;
  if (cache != nullptr) {
    cache->filled = true;
    cache->x = x;
    cache->y = y;
    cache->proj_x = std::move(proj_x);
    cache->proj_y = std::move(proj_y);
    cache->f = std::move(f);
    cache->n = std::move(n);
  }
  return scores;
}

PairGrads pair_backward(const Vector& grad_scores, const PairCache& cache, const PairParams& params) {
  if (!cache.filled) throw StaleCacheError("pair_backward called without a forward cache");
  if (grad_scores.size() != params.C || cache.proj_x.rows() != params.U.rows() || cache.x.rows() != params.c)
    throw StaleCacheError("pair cache does not match parameters or upstream gradient");
  PairGrads g;
  g.P.noalias() = cache.n.values * grad_scores.transpose();
  const Vector grad_f = signed_sqrt_l2_backward(params.P * grad_scores, cache.f, cache.n);
  const Vector e = expand(grad_f, params.d);
  const Matrix grad_proj_x = e.asDiagonal() * cache.proj_y;
  const Matrix grad_proj_y = e.asDiagonal() * cache.proj_x;
  g.U.noalias() = grad_proj_x * cache.x.transpose();
  g.x.noalias() = params.U.transpose() * grad_proj_x;
  g.V.noalias() = grad_proj_y * cache.y.transpose();
  g.y.noalias() = params.V.transpose() * grad_proj_y;
  return g;
}

}  // namespace ttp::fusion
