#pragma once
#include <algorithm>

#include <vector>

// Shared dense kernels. All loops accumulate in a fixed order so results are
// bit-identical across runs; callers parallelize only over disjoint outputs.
namespace lexcd::detail {

// Register-blocked micro-kernel: 4 C-rows x 32 C-columns accumulated across
// the full k loop. Plain C++ so the compiler vectorizes the j dimension.
template <typename T>
void gemm_tile(int K, int N, const T* A, int lda, const T* B, T* C, int ldc, int rows,
               int cols) {
    constexpr int TJ = 32;
    if (rows == 4 && cols == TJ) {
        T acc[4][TJ];
        for (int r = 0; r < 4; ++r)
            for (int j = 0; j < TJ; ++j) acc[r][j] = C[r * ldc + j];
        for (int k = 0; k < K; ++k) {
            const T* brow = B + static_cast<long long>(k) * N;
            const T a0 = A[0 * lda + k];
            const T a1 = A[1 * lda + k];
            const T a2 = A[2 * lda + k];
            const T a3 = A[3 * lda + k];
            for (int j = 0; j < TJ; ++j) {
                const T b = brow[j];
                acc[0][j] += a0 * b;
                acc[1][j] += a1 * b;
                acc[2][j] += a2 * b;
                acc[3][j] += a3 * b;
            }
        }
        for (int r = 0; r < 4; ++r)
            for (int j = 0; j < TJ; ++j) C[r * ldc + j] = acc[r][j];
        return;
    }
    // ragged edges
    for (int r = 0; r < rows; ++r) {
        T* crow = C + static_cast<long long>(r) * ldc;
        for (int k = 0; k < K; ++k) {
            const T a = A[r * lda + k];
            const T* brow = B + static_cast<long long>(k) * N;
            for (int j = 0; j < cols; ++j) crow[j] += a * brow[j];
        }
    }
}

// C(MxN) += A(MxK) * B(KxN), row-major.
template <typename T>
void gemm_ab(int M, int K, int N, const T* A, const T* B, T* C) {
    constexpr int TI = 4;
    constexpr int TJ = 32;
    for (int i0 = 0; i0 < M; i0 += TI) {
        const int rows = std::min(TI, M - i0);
        for (int j0 = 0; j0 < N; j0 += TJ) {
            const int cols = std::min(TJ, N - j0);
            gemm_tile(K, N, A + static_cast<long long>(i0) * K, K, B + j0,
                      C + static_cast<long long>(i0) * N + j0, N, rows, cols);
        }
    }
}

// dst(NxM) = src(MxN)^T, row-major.
template <typename T>
void transpose(int M, int N, const T* src, T* dst) {
    constexpr int TB = 16;
    for (int i0 = 0; i0 < M; i0 += TB)
        for (int j0 = 0; j0 < N; j0 += TB) {
            const int imax = std::min(M, i0 + TB);
            const int jmax = std::min(N, j0 + TB);
            for (int i = i0; i < imax; ++i)
                for (int j = j0; j < jmax; ++j) {
                    dst[static_cast<long long>(j) * M + i] =
                        src[static_cast<long long>(i) * N + j];
                }
        }
}

// C(MxK) += A(MxN) * B(KxN)^T via an explicit transpose of B.
template <typename T>
void gemm_abt(int M, int N, int K, const T* A, const T* B, T* C) {
    static thread_local std::vector<T> bt;
    bt.resize(static_cast<size_t>(N) * K);
    transpose(K, N, B, bt.data());
    gemm_ab(M, N, K, A, bt.data(), C);
}

// C(KxN) += A(MxK)^T * B(MxN) via an explicit transpose of A.
template <typename T>
void gemm_atb(int M, int K, int N, const T* A, const T* B, T* C) {
    static thread_local std::vector<T> at;
    at.resize(static_cast<size_t>(K) * M);
    transpose(M, K, A, at.data());
    gemm_ab(K, M, N, at.data(), B, C);
}

}  // namespace lexcd::detail
