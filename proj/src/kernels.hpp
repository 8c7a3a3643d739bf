#pragma once

// Dense affine kernels with a fixed accumulation order. Each output is the
// bias plus a 16-lane strided dot product reduced by a fixed tree, so a row
// computed alone, in a block of rows, or for a batch of inputs rounds
// identically.

#include <cstddef>

namespace egospeak::detail {

template <typename Real>
Real dot(const Real *a, const Real *b, std::size_t n);

// Y[f * rows + o] = bias[o] + dot(W + o * cols, X + f * cols) for f < num_inputs.
// bias may be null.
template <typename Real>
void affine(const Real *W, const Real *bias, std::size_t rows, std::size_t cols, const Real *X,
            std::size_t num_inputs, Real *Y);

// y[o] = dot(W + o * cols, x), no bias.
template <typename Real>
void matvec(const Real *W, std::size_t rows, std::size_t cols, const Real *x, Real *y);

// y[i] += sum_o W[o * cols + i] * d[o]; accumulates over o in ascending order.
template <typename Real>
void matvec_transposed_acc(const Real *W, std::size_t rows, std::size_t cols, const Real *d,
                           Real *y);

// G[o * cols + i] += d[o] * x[i].
template <typename Real>
void outer_acc(const Real *d, std::size_t rows, const Real *x, std::size_t cols, Real *G);

} // namespace egospeak::detail
