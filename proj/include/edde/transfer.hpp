#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "edde/data.hpp"
#include "edde/nn.hpp"

namespace edde::transfer {

struct TransferSpec {
    /// Fraction of weight layers, counted from the input, copied from the teacher.
    double beta = 1.0;
    /// Seed for the layers that are not copied.
    std::uint64_t fresh_seed = 0;
};

/// floor(beta * layers), tolerant of beta values produced by repeated
/// subtraction (0.7 * 10 must give 7, not 6).
std::size_t copied_layers(double beta, std::size_t layers);

/// Student with the teacher's architecture: the first copied_layers(beta, L)
/// layers are the teacher's, the rest are those of init_network(arch, fresh_seed).
nn::Network transfer_init(const nn::Network& teacher, const TransferSpec& spec);

struct BetaSearchConfig {
    std::size_t n_folds = 6;
    int probe_epochs = 5;
    double beta_step = 0.1;
    /// Accuracy units: 0.01 is one percentage point.
    double gap_tolerance = 0.01;
    int teacher_epochs = 20;
    /// Length of the student's learning-rate schedule; only the first
    /// probe_epochs of it are run.
    int student_epochs = 5;

    void validate() const;
};

/// Optimizer settings shared by teacher and probe students.
struct TrainSettings {
    nn::LrSchedule schedule;  // total_epochs is overwritten per run
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
    nn::Exec exec = nn::Exec::automatic;
};

/// Fold layout of the search: the teacher sees folds 1..n-1, the student
/// folds 1..n-2; fold n-1 is "seen" (by the teacher only), fold n "unseen".
struct ProbeFolds {
    data::Dataset teacher_train;
    data::Dataset student_train;
    data::Dataset seen;
    data::Dataset unseen;
};

ProbeFolds make_probe_folds(const data::Dataset& ds, const data::FoldSplit& split);

struct ProbeResult {
    double acc_seen = 0.0;
    double acc_unseen = 0.0;

    double gap() const;
};

/// Trains a transferred student on student_train and averages its accuracy
/// on the seen and unseen folds over the first probe_epochs epochs. With
/// probe_epochs == 0 the untrained student is measured.
ProbeResult probe_gap(const nn::Network& teacher, double beta, const ProbeFolds& folds, const BetaSearchConfig& cfg,
                      const TrainSettings& train);

struct BetaTraceRow {
    double beta = 0.0;
    std::size_t layers_copied = 0;
    double acc_seen = 0.0;
    double acc_unseen = 0.0;
    double gap = 0.0;
};

struct BetaSearchResult {
    double beta = 0.0;
    std::vector<BetaTraceRow> trace;
    /// Trained on folds 1..n-1; reusable as the first ensemble member.
    nn::Network teacher;
    std::vector<double> teacher_losses;
};

/// 1, 1 - step, 1 - 2 step, ..., ending at exactly 0.
std::vector<double> beta_candidates(double step);

/// Scans beta downward from 1 and returns the first candidate whose seen /
/// unseen accuracy gap is within tolerance, or 0 when none is.
BetaSearchResult beta_search(const data::Dataset& ds, const nn::Architecture& arch, const BetaSearchConfig& cfg,
                             const TrainSettings& train);

/// Columns beta,acc_seen,acc_unseen,gap; one row per probed candidate.
void write_trace_csv(const std::vector<BetaTraceRow>& trace, const std::filesystem::path& path);

/// Initialization seed of the probe students' fresh layers. The teacher uses
/// the first ensemble member's seeds (see seeds.hpp).
std::uint64_t student_init_seed(std::uint64_t seed);

}  // namespace edde::transfer
