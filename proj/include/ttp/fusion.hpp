#pragma once

#include <string>
#include <vector>

#include "ttp/features.hpp"
#include "ttp/linalg.hpp"
#include "ttp/rng.hpp"

namespace ttp::fusion {

using features::FeatureMap;

// Projection tensors (c x d x D in the math) are stored as (D*d) x c
// matrices: row i*d + j holds column j of the i-th c x d factor, so one
// product U * x yields every U_i^T x at once.

/// Factorized bilinear pooling of two vectors:
/// out_i = sum_j (U_i^T x)_j * (V_i^T y)_j.
Vector mfb(const Vector& x, const Vector& y, const Matrix& U, const Matrix& V, int d);

/// Three-way Hadamard fusion: out_i = 1^T (U_i^T x .* V_i^T y .* W_i^T z).
Vector trilinear_pool(const Vector& x, const Vector& y, const Vector& z, const Matrix& U, const Matrix& V,
                      const Matrix& W, int d);

/// Sum pooling of trilinear_pool over the K columns of three c x K maps.
Vector trilinear_pool_maps(const FeatureMap& X, const FeatureMap& Y, const FeatureMap& Z, const Matrix& U,
                           const Matrix& V, const Matrix& W, int d);

/// Sum pooling of mfb over the K columns of two c x K maps.
Vector bilinear_pool_maps(const FeatureMap& X, const FeatureMap& Y, const Matrix& U, const Matrix& V, int d);

struct NormalizedVector {
  Vector values;
  bool normalized = false;  // false only for the all-zero input
  double norm = 0.0;        // l2 norm of the signed-sqrt vector
};

/// g = sign(f) * sqrt(|f|), then g / ||g||. Zero input maps to zero.
/// Throws NumericError on non-finite input.
NormalizedVector signed_sqrt_l2(const Vector& f);

/// Gradient w.r.t. f given the forward input, output and dL/d(output). The
/// signed-sqrt derivative at f_i == 0 is taken as 0.
Vector signed_sqrt_l2_backward(const Vector& grad_out, const Vector& f, const NormalizedVector& out);

enum class Normalization { kPerBranch, kAfterSum };

struct FusionParams {
  int c = 0;
  int d = 0;
  int D = 0;
  int C = 0;
  Matrix U;  // (D*d) x c
  Matrix V;
  Matrix W;
  Matrix P;  // D x C

  /// U, V, W uniform in +-1/sqrt(c); P uniform in +-1/sqrt(D).
  static FusionParams random(int c, int d, int D, int C, Rng& rng);
  static FusionParams zeros(int c, int d, int D, int C);
  FusionParams zeros_like() const { return zeros(c, d, D, C); }
  std::vector<ParamRef> params(const std::string& prefix);
};

struct TtpOptions {
  bool temporal = true;  // false: plain trilinear pooling, no neighbor branch
  Normalization normalization = Normalization::kPerBranch;
};

/// Forward state kept for the backward pass.
struct TtpCache {
  bool filled = false;
  TtpOptions options;
  FeatureMap i_t, mv, r, i_neighbor;
  Matrix proj_i, proj_neighbor, proj_mv, proj_r;  // U*I_t, U*I_nb, V*MV, W*R
  Vector f_tp0, f_tp1;                            // raw pooled branches
  NormalizedVector n0, n1, n_sum;
  Vector f_ttp;
  Vector scores;
};

struct TtpOutput {
  Vector f_ttp;
  Vector scores;
};

struct TtpGrads {
  Matrix U, V, W, P;
  FeatureMap i_t, mv, r, i_neighbor;
};

/// f_TP(t,0) = pool(I_t, MV_t, R_t), f_TP(t,dt) = pool(I_{t+dt}, MV_t, R_t);
/// with per-branch normalization f_TTP = ssl2(f_TP(t,0)) + ssl2(f_TP(t,dt)),
/// scores = P^T f_TTP. With temporal == false only the first branch is used
/// and i_neighbor is ignored.
TtpOutput ttp_forward(const FeatureMap& i_t, const FeatureMap& mv, const FeatureMap& r,
                      const FeatureMap& i_neighbor, const FusionParams& params, const TtpOptions& options = {},
                      TtpCache* cache = nullptr);

TtpGrads ttp_backward(const Vector& grad_scores, const TtpCache& cache, const FusionParams& params);

/// Pairwise MFB head used for the bilinear-pooling ablation:
/// scores = P^T ssl2(bilinear_pool_maps(X, Y)).
struct PairParams {
  int c = 0;
  int d = 0;
  int D = 0;
  int C = 0;
  Matrix U;  // (D*d) x c
  Matrix V;
  Matrix P;  // D x C

  static PairParams random(int c, int d, int D, int C, Rng& rng);
  static PairParams zeros(int c, int d, int D, int C);
  PairParams zeros_like() const { return zeros(c, d, D, C); }
  std::vector<ParamRef> params(const std::string& prefix);
};

struct PairCache {
  bool filled = false;
  FeatureMap x, y;
  Matrix proj_x, proj_y;
  Vector f;
  NormalizedVector n;
};

struct PairGrads {
  Matrix U, V, P;
  FeatureMap x, y;
};

Vector pair_forward(const FeatureMap& x, const FeatureMap& y, const PairParams& params, PairCache* cache = nullptr);
PairGrads pair_backward(const Vector& grad_scores, const PairCache& cache, const PairParams& params);

}  // namespace ttp::fusion
