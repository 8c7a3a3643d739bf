#include "kernels.hpp"

namespace egospeak::detail {

namespace {

constexpr std::size_t kLanes = 16;

// R rows of W against F inputs. Every (row, input) pair accumulates the same
// products in the same lane order regardless of R and F.
template <typename Real, std::size_t R, std::size_t F>
inline void dot_block(const Real *const *w, const Real *const *x, std::size_t n, Real (*out)[F]) {
    Real acc[R][F][kLanes] = {};
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        for (std::size_t r = 0; r < R; ++r) {
            for (std::size_t f = 0; f < F; ++f) {
                for (std::size_t l = 0; l < kLanes; ++l) {
                    acc[r][f][l] += w[r][i + l] * x[f][i + l];
                }
            }
        }
    }
    for (std::size_t l = 0; i + l < n; ++l) {
        for (std::size_t r = 0; r < R; ++r) {
            for (std::size_t f = 0; f < F; ++f) {
                acc[r][f][l] += w[r][i + l] * x[f][i + l];
            }
        }
    }
    for (std::size_t r = 0; r < R; ++r) {
        for (std::size_t f = 0; f < F; ++f) {
            for (std::size_t width = kLanes / 2; width > 0; width /= 2) {
                for (std::size_t l = 0; l < width; ++l) {
                    acc[r][f][l] += acc[r][f][l + width];
                }
            }
            out[r][f] = acc[r][f][0];
        }
    }
}

template <typename Real, std::size_t R, std::size_t F>
inline void affine_tile(const Real *W, const Real *bias, std::size_t row0, std::size_t rows,
                        std::size_t cols, const Real *X, std::size_t f0, Real *Y) {
    const Real *w[R];
    const Real *x[F];
    for (std::size_t r = 0; r < R; ++r) w[r] = W + (row0 + r) * cols;
    for (std::size_t f = 0; f < F; ++f) x[f] = X + (f0 + f) * cols;
    Real out[R][F];
    dot_block<Real, R, F>(w, x, cols, out);
    for (std::size_t r = 0; r < R; ++r) {
        const Real b = bias ? bias[row0 + r] : Real(0);
        for (std::size_t f = 0; f < F; ++f) {
            Y[(f0 + f) * rows + row0 + r] = bias ? b + out[r][f] : out[r][f];
        }
    }
}

} // namespace

template <typename Real>
Real dot(const Real *a, const Real *b, std::size_t n) {
    const Real *w[1] = {a};
    const Real *x[1] = {b};
    Real out[1][1];
    dot_block<Real, 1, 1>(w, x, n, out);
    return out[0][0];
}

template <typename Real>
void affine(const Real *W, const Real *bias, std::size_t rows, std::size_t cols, const Real *X,
            std::size_t num_inputs, Real *Y) {
    std::size_t f = 0;
    // Input-blocked tiles reuse each weight row across four inputs.
    for (; f + 4 <= num_inputs; f += 4) {
        std::size_t o = 0;
        for (; o + 2 <= rows; o += 2) affine_tile<Real, 2, 4>(W, bias, o, rows, cols, X, f, Y);
        for (; o < rows; ++o) affine_tile<Real, 1, 4>(W, bias, o, rows, cols, X, f, Y);
    }
    for (; f < num_inputs; ++f) {
        std::size_t o = 0;
        for (; o + 4 <= rows; o += 4) affine_tile<Real, 4, 1>(W, bias, o, rows, cols, X, f, Y);
        for (; o < rows; ++o) affine_tile<Real, 1, 1>(W, bias, o, rows, cols, X, f, Y);
    }
}

template <typename Real>
void matvec(const Real *W, std::size_t rows, std::size_t cols, const Real *x, Real *y) {
    affine<Real>(W, nullptr, rows, cols, x, 1, y);
}

template <typename Real>
void matvec_transposed_acc(const Real *W, std::size_t rows, std::size_t cols, const Real *d,
                           Real *y) {
    for (std::size_t o = 0; o < rows; ++o) {
        const Real g = d[o];
        const Real *w = W + o * cols;
        for (std::size_t i = 0; i < cols; ++i) y[i] += w[i] * g;
    }
}

template <typename Real>
void outer_acc(const Real *d, std::size_t rows, const Real *x, std::size_t cols, Real *G) {
    for (std::size_t o = 0; o < rows; ++o) {
        const Real g = d[o];
        Real *out = G + o * cols;
        for (std::size_t i = 0; i < cols; ++i) out[i] += g * x[i];
    }
}

template float dot<float>(const float *, const float *, std::size_t);
template double dot<double>(const double *, const double *, std::size_t);
template void affine<float>(const float *, const float *, std::size_t, std::size_t, const float *,
                            std::size_t, float *);
template void affine<double>(const double *, const double *, std::size_t, std::size_t,
                             const double *, std::size_t, double *);
template void matvec<float>(const float *, std::size_t, std::size_t, const float *, float *);
template void matvec<double>(const double *, std::size_t, std::size_t, const double *, double *);
template void matvec_transposed_acc<float>(const float *, std::size_t, std::size_t, const float *,
                                           float *);
template void matvec_transposed_acc<double>(const double *, std::size_t, std::size_t,
                                            const double *, double *);
template void outer_acc<float>(const float *, std::size_t, const float *, std::size_t, float *);
template void outer_acc<double>(const double *, std::size_t, const double *, std::size_t,
                                double *);

} // namespace egospeak::detail
