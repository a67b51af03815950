#pragma once

#include "physml/core.hpp"

#include <string>
#include <vector>

namespace physml {

// Acceptance-experiment drivers. Each runner executes one benchmark end to
// end and, when out_dir is nonempty, writes its data tables there as CSV.
// The same runners back the `reproduce-all` CLI subcommand.

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    double value = 0.0;       // headline metric; pass iff value <= threshold
    double threshold = 0.0;
    double seconds = 0.0;
    std::string detail;       // human-readable sub-check summary
};

CriterionResult run_oracle_suite(std::uint64_t seed, const std::string& out_dir);
CriterionResult run_jgp_benchmark_experiment(std::uint64_t seed,
                                             const std::string& out_dir);
CriterionResult run_distmatch_experiment(std::uint64_t seed, const std::string& out_dir);
CriterionResult run_fkl_ranking_experiment(std::uint64_t seed,
                                           const std::string& out_dir);
CriterionResult run_emulation_experiment(std::uint64_t seed, const std::string& out_dir,
                                         int runs = 50);
CriterionResult run_prior_recovery_experiment(std::uint64_t seed,
                                              const std::string& out_dir);
CriterionResult run_lfm_recovery_experiment(std::uint64_t seed,
                                            const std::string& out_dir);
CriterionResult run_ode_rediscovery_experiment(std::uint64_t seed,
                                               const std::string& out_dir);
CriterionResult run_sampler_contrast_experiment(std::uint64_t seed,
                                                const std::string& out_dir,
                                                int trials = 50);
CriterionResult run_determinism_check(std::uint64_t seed, const std::string& out_dir);

// Runs every criterion in order; writes summary.csv plus each criterion's
// tables when out_dir is nonempty.
std::vector<CriterionResult> reproduce_all(std::uint64_t seed,
                                           const std::string& out_dir,
                                           int emulation_runs = 50,
                                           int sampler_trials = 50);

// ---------------------------------------------------------------------------
// CSV utilities shared with the CLI: UTF-8, comma separators, header row,
// floats at 17 significant digits.

std::string csv_double(double v);
void csv_write(const std::string& path, const std::string& header,
               const std::vector<std::vector<std::string>>& rows);

}  // namespace physml
