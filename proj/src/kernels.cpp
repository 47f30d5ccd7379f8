#include "edde/kernels.hpp"

#include <cmath>
#include <string>

#include "edde/error.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace edde::kernels {

namespace {

// Below this many multiply-adds the thread start-up costs more than it saves.
constexpr std::size_t kParallelWork = std::size_t{1} << 16;

std::size_t forward_cost(const nn::Network& net) {
    std::size_t c = 0;
    for (const auto& l : net.layers) c += l.weights.size();
    return c;
}

void check_rows(const nn::Network& net, const Matrix& inputs, std::span<const std::size_t> rows) {
    if (inputs.cols() != net.arch.inputs())
        throw ValidationError("input matrix has " + std::to_string(inputs.cols()) + " columns, network expects " +
                              std::to_string(net.arch.inputs()));
    for (std::size_t r : rows)
        if (r >= inputs.rows()) throw ValidationError("row index " + std::to_string(r) + " out of range");
}

void prepare_workspace(const nn::Network& net, std::size_t n, GradientWorkspace& ws) {
    if (ws.per_sample.size() < n) {
        ws.per_sample.reserve(n);
        while (ws.per_sample.size() < n) ws.per_sample.push_back(nn::zeros_like(net));
        ws.scratch.resize(n);
    }
}

void sum_in_order(const nn::Network& net, const GradientWorkspace& ws, std::size_t n, nn::Parameters& out) {
    if (out.size() != net.layers.size()) out = nn::zeros_like(net);
    for (auto& l : out) {
        for (double& x : l.weights.flat()) x = 0.0;
        for (double& x : l.bias) x = 0.0;
    }
    for (std::size_t s = 0; s < n; ++s) nn::add_in_place(out, ws.per_sample[s]);
}

void check_combine(std::span<const Matrix> preds, std::span<const double> alphas) {
    if (preds.empty()) throw ValidationError("combine: no models");
    if (preds.size() != alphas.size()) throw ValidationError("combine: one alpha per model required");
    for (const auto& p : preds) require_same_shape(p, preds.front(), "combine");
}

double alpha_total(std::span<const double> alphas) {
    double total = 0.0;
    for (double a : alphas) total += a;
    if (!(total > 0.0)) throw ValidationError("combine: alphas must have a positive sum");
    return total;
}

void combine_row(std::span<const Matrix> preds, std::span<const double> alphas, double total, std::size_t i,
                 Matrix& out) {
    auto dst = out.row(i);
    for (double& x : dst) x = 0.0;
    for (std::size_t t = 0; t < preds.size(); ++t) {
        const auto src = preds[t].row(i);
        for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += alphas[t] * src[c];
    }
    for (double& x : dst) x /= total;
}

double row_distance(const Matrix& a, const Matrix& b, std::size_t i) {
    const auto x = a.row(i);
    const auto y = b.row(i);
    double s = 0.0;
    for (std::size_t c = 0; c < x.size(); ++c) {
        const double d = x[c] - y[c];
        s += d * d;
    }
    return std::sqrt(s);
}

}  // namespace

bool openmp_enabled() {
#ifdef _OPENMP
    return true;
#else
    return false;
#endif
}

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

bool use_parallel(nn::Exec exec, std::size_t work) {
    switch (exec) {
        case nn::Exec::serial: return false;
        case nn::Exec::parallel: return true;
        case nn::Exec::automatic: break;
    }
    return openmp_enabled() && max_threads() > 1 && work >= kParallelWork;
}

void forward_rows_serial(const nn::Network& net, const Matrix& inputs, std::span<const std::size_t> rows,
                         Matrix& out) {
    check_rows(net, inputs, rows);
    nn::Trace t;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        nn::forward_trace(net, inputs.row(rows[i]), t);
        const auto& p = t.values.back();
        std::copy(p.begin(), p.end(), out.row(i).begin());
    }
}

void forward_rows_parallel(const nn::Network& net, const Matrix& inputs, std::span<const std::size_t> rows,
                           Matrix& out) {
    check_rows(net, inputs, rows);
    const auto n = static_cast<std::ptrdiff_t>(rows.size());
#pragma omp parallel
    {
        nn::Trace t;
#pragma omp for schedule(static)
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            nn::forward_trace(net, inputs.row(rows[i]), t);
            const auto& p = t.values.back();
            std::copy(p.begin(), p.end(), out.row(static_cast<std::size_t>(i)).begin());
        }
    }
}

void trace_rows_serial(const nn::Network& net, const Matrix& inputs, std::span<const std::size_t> rows,
                       std::vector<nn::Trace>& traces) {
    check_rows(net, inputs, rows);
    if (traces.size() < rows.size()) traces.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) nn::forward_trace(net, inputs.row(rows[i]), traces[i]);
}

void trace_rows_parallel(const nn::Network& net, const Matrix& inputs, std::span<const std::size_t> rows,
                         std::vector<nn::Trace>& traces) {
    check_rows(net, inputs, rows);
    if (traces.size() < rows.size()) traces.resize(rows.size());
    const auto n = static_cast<std::ptrdiff_t>(rows.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) nn::forward_trace(net, inputs.row(rows[i]), traces[i]);
}

void gradient_serial(const nn::Network& net, std::span<const nn::Trace> traces, const Matrix& output_grads,
                     GradientWorkspace& ws, nn::Parameters& out) {
    if (output_grads.rows() != traces.size()) throw ValidationError("gradient: trace/gradient count mismatch");
    const std::size_t n = traces.size();
    prepare_workspace(net, n, ws);
    for (std::size_t s = 0; s < n; ++s)
        nn::sample_gradient(net, traces[s], output_grads.row(s), ws.per_sample[s], ws.scratch[s]);
    sum_in_order(net, ws, n, out);
}

void gradient_parallel(const nn::Network& net, std::span<const nn::Trace> traces, const Matrix& output_grads,
                       GradientWorkspace& ws, nn::Parameters& out) {
    if (output_grads.rows() != traces.size()) throw ValidationError("gradient: trace/gradient count mismatch");
    const std::size_t n = traces.size();
    prepare_workspace(net, n, ws);
    if (n > 0 && output_grads.cols() != traces[0].values.back().size())
        throw ValidationError("gradient: output gradient width mismatch");
    const auto sn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t s = 0; s < sn; ++s)
        nn::sample_gradient(net, traces[s], output_grads.row(static_cast<std::size_t>(s)), ws.per_sample[s],
                            ws.scratch[s]);
    sum_in_order(net, ws, n, out);
}

Matrix combine_serial(std::span<const Matrix> preds, std::span<const double> alphas) {
    check_combine(preds, alphas);
    const double total = alpha_total(alphas);
    Matrix out(preds.front().rows(), preds.front().cols());
    for (std::size_t i = 0; i < out.rows(); ++i) combine_row(preds, alphas, total, i, out);
    return out;
}

Matrix combine_parallel(std::span<const Matrix> preds, std::span<const double> alphas) {
    check_combine(preds, alphas);
    const double total = alpha_total(alphas);
    Matrix out(preds.front().rows(), preds.front().cols());
    const auto n = static_cast<std::ptrdiff_t>(out.rows());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) combine_row(preds, alphas, total, static_cast<std::size_t>(i), out);
    return out;
}

double mean_row_distance_serial(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "mean_row_distance");
    if (a.rows() == 0) throw ValidationError("mean_row_distance: no rows");
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) s += row_distance(a, b, i);
    return s / static_cast<double>(a.rows());
}

double mean_row_distance_parallel(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "mean_row_distance");
    if (a.rows() == 0) throw ValidationError("mean_row_distance: no rows");
    std::vector<double> d(a.rows());
    const auto n = static_cast<std::ptrdiff_t>(a.rows());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) d[i] = row_distance(a, b, static_cast<std::size_t>(i));
    double s = 0.0;
    for (double x : d) s += x;
    return s / static_cast<double>(a.rows());
}

void forward_rows(const nn::Network& net, const Matrix& inputs, std::span<const std::size_t> rows, Matrix& out,
                  nn::Exec exec) {
    if (out.rows() != rows.size() || out.cols() != net.arch.classes()) out = Matrix(rows.size(), net.arch.classes());
    if (use_parallel(exec, rows.size() * forward_cost(net)))
        forward_rows_parallel(net, inputs, rows, out);
    else
        forward_rows_serial(net, inputs, rows, out);
}

void trace_rows(const nn::Network& net, const Matrix& inputs, std::span<const std::size_t> rows,
                std::vector<nn::Trace>& traces, nn::Exec exec) {
    if (use_parallel(exec, rows.size() * forward_cost(net)))
        trace_rows_parallel(net, inputs, rows, traces);
    else
        trace_rows_serial(net, inputs, rows, traces);
}

void gradient(const nn::Network& net, std::span<const nn::Trace> traces, const Matrix& output_grads,
              GradientWorkspace& ws, nn::Parameters& out, nn::Exec exec) {
    if (use_parallel(exec, 2 * traces.size() * forward_cost(net)))
        gradient_parallel(net, traces, output_grads, ws, out);
    else
        gradient_serial(net, traces, output_grads, ws, out);
}

Matrix combine(std::span<const Matrix> preds, std::span<const double> alphas, nn::Exec exec) {
    const std::size_t work = preds.empty() ? 0 : preds.size() * preds.front().size();
    return use_parallel(exec, work) ? combine_parallel(preds, alphas) : combine_serial(preds, alphas);
}

double mean_row_distance(const Matrix& a, const Matrix& b, nn::Exec exec) {
    return use_parallel(exec, a.size()) ? mean_row_distance_parallel(a, b) : mean_row_distance_serial(a, b);
}

}  // namespace edde::kernels
