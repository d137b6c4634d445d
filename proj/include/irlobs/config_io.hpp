#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "irlobs/harness.hpp"

namespace irlobs {

/// Schema or dimension problem in a configuration file; the message names
/// the offending field (dotted path).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses the JSON experiment schema (see README). Runs
/// ExperimentConfig::validate, so dimension mismatches surface here.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

std::string dump_config(const ExperimentConfig& config);
void save_config(const ExperimentConfig& config, const std::string& path);

/// Columns: t, metric, wtilde_1..k, xtilde_1..n, cond_number, gate.
void write_trial_csv(const TrialResult& result, const std::string& path);

/// Columns: variant, noise_sd, tt_mean, tt_sd, ss_mean, ss_sd, diverged.
/// Values are printed with 17 significant digits so they reparse exactly.
std::string format_summary_csv(const std::vector<SummaryRow>& rows);
void write_summary_csv(const std::vector<SummaryRow>& rows, const std::string& path);
std::vector<SummaryRow> read_summary_csv(const std::string& path);

}  // namespace irlobs
