#pragma once

#include <cstddef>
#include <span>

#include "ntm/tape.hpp"

namespace ntm::ad {

// Linear algebra. Vectors are rank-1, matrices rank-2.
Var matmul(Var a, Var b);             // [m x k] * [k x n] -> [m x n]
Var matvec(Var a, Var x);             // [m x k] * [k] -> [m]
Var matvec_transposed(Var a, Var x);  // [n x m]^T * [n] -> [m]
Var outer(Var u, Var v);              // [n], [m] -> [n x m]

// Entrywise binary ops. Shapes must match, or one side holds a single element
// which is broadcast.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);

/// scale * x + offset
Var affine(Var x, double scale, double offset);
inline Var one_minus(Var x) { return affine(x, -1.0, 1.0); }

Var sigmoid(Var x);
Var tanh(Var x);
Var softplus(Var x);
/// 1 + softplus(x); strictly greater than 1.
Var oneplus(Var x);
Var exp(Var x);
/// Throws DomainError on non-positive entries.
Var log(Var x);
/// x^p with p a single-element node; x must be non-negative.
Var pow_scalar(Var x, Var p);
/// Gradient passes only where lo <= x <= hi.
Var clamp(Var x, double lo, double hi);

Var sum(Var x);
/// Softmax of a vector, computed with max subtraction.
Var softmax(Var x);

inline constexpr double kCosineEps = 1e-8;

/// u.v / (|u||v| + eps)
Var cosine_similarity(Var u, Var v, double eps = kCosineEps);
/// Cosine similarity of `key` against every row of `rows`: [n x m], [m] -> [n].
Var row_cosine_similarity(Var rows, Var key, double eps = kCosineEps);

/// out[i] = sum_j w[(i - o_j) mod n] * s[j], offsets o_j = j - k/2 for odd k.
Var circular_convolve(Var w, Var s);

Var concat(Var a, Var b);
Var slice(Var x, std::size_t offset, std::size_t length);
/// Stacks equally sized vectors into the rows of a matrix.
Var stack(std::span<const Var> rows);

}  // namespace ntm::ad
