#pragma once

// Data-parallel inner loops. Each kernel has a serial reference and an
// OpenMP version; the OpenMP versions parallelize only over independent
// samples (or model pairs) and do any reduction afterwards in index order,
// so both produce bit-identical results.

#include <cstddef>
#include <span>
#include <vector>

#include "edde/matrix.hpp"
#include "edde/nn.hpp"

namespace edde::kernels {

/// Whether an OpenMP runtime was compiled in.
bool openmp_enabled();
int max_threads();

/// Resolves Exec::automatic: parallel only when OpenMP is on, more than one
/// thread is available and `work` (roughly, scalar multiply-adds) is large.
bool use_parallel(nn::Exec exec, std::size_t work);

// Softmax outputs of `rows` of `inputs`, written to out.row(i) for the i-th entry of rows.
void forward_rows_serial(const nn::Network& net, const Matrix& inputs, std::span<const std::size_t> rows,
                         Matrix& out);
void forward_rows_parallel(const nn::Network& net, const Matrix& inputs, std::span<const std::size_t> rows,
                           Matrix& out);

void trace_rows_serial(const nn::Network& net, const Matrix& inputs, std::span<const std::size_t> rows,
                       std::vector<nn::Trace>& traces);
void trace_rows_parallel(const nn::Network& net, const Matrix& inputs, std::span<const std::size_t> rows,
                         std::vector<nn::Trace>& traces);

/// Per-sample gradient buffers reused across batches.
struct GradientWorkspace {
    std::vector<nn::Parameters> per_sample;
    std::vector<std::vector<double>> scratch;
};

/// out = sum over s of the gradient of sample s (traces[s], output_grads.row(s)),
/// summed in s order starting from zero.
void gradient_serial(const nn::Network& net, std::span<const nn::Trace> traces, const Matrix& output_grads,
                     GradientWorkspace& ws, nn::Parameters& out);
void gradient_parallel(const nn::Network& net, std::span<const nn::Trace> traces, const Matrix& output_grads,
                       GradientWorkspace& ws, nn::Parameters& out);

/// Row-wise sum_t alphas[t] * preds[t] / sum_t alphas[t].
Matrix combine_serial(std::span<const Matrix> preds, std::span<const double> alphas);
Matrix combine_parallel(std::span<const Matrix> preds, std::span<const double> alphas);

/// (1/N) * sum_i ||a_i - b_i||_2 over rows.
double mean_row_distance_serial(const Matrix& a, const Matrix& b);
double mean_row_distance_parallel(const Matrix& a, const Matrix& b);

// Dispatching wrappers.
void forward_rows(const nn::Network& net, const Matrix& inputs, std::span<const std::size_t> rows, Matrix& out,
                  nn::Exec exec);
void trace_rows(const nn::Network& net, const Matrix& inputs, std::span<const std::size_t> rows,
                std::vector<nn::Trace>& traces, nn::Exec exec);
void gradient(const nn::Network& net, std::span<const nn::Trace> traces, const Matrix& output_grads,
              GradientWorkspace& ws, nn::Parameters& out, nn::Exec exec);
Matrix combine(std::span<const Matrix> preds, std::span<const double> alphas, nn::Exec exec = nn::Exec::automatic);
double mean_row_distance(const Matrix& a, const Matrix& b, nn::Exec exec = nn::Exec::automatic);

}  // namespace edde::kernels
