#pragma once

#include "dde/sample_set.hpp"
#include "dde/synthpdf/expr.hpp"
#include "dde/synthpdf/synthetic_pdf.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <vector>

namespace dde::synthpdf {

struct GenerationConfig
{
  std::size_t dim = 1;
  std::size_t n_functions = 1000;
  std::size_t points_per_sample = 1000;
  Scheme scheme = Scheme::per_axis_then_combine;
  TagFilter filter;
  std::uint64_t seed = 0;
  /// Minimum base-function maximum; forced to 0.01 for dim >= 50.
  double min_base_max = 0.0;
  /// Regeneration attempts per PDF before giving up.
  std::size_t max_attempts = 200;

  /// Fills in the d >= 50 constraints and checks invariants. Throws
  /// InvalidConfig.
  GenerationConfig validated() const;
  bool add_only() const { return dim >= 50; }

  nlohmann::json to_json() const;
  static GenerationConfig from_json(const nlohmann::json& j);
};

/// One generated distribution: its PDF and a sample in unit-range
/// coordinates with unit-range ground-truth densities.
struct GeneratedPdf
{
  SyntheticPdf pdf;
  SampleSet sample;
  std::size_t retries = 0;
};

struct Dataset
{
  GenerationConfig config;
  std::vector<GeneratedPdf> items;
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;

  std::size_t total_retries() const;
};

/// Draws one PDF: n_c uniform in [2, 7], per-axis extents S ~ U[1, 10],
/// composition per the config scheme, normalization, rejection sampling.
/// Regenerates (new child seed) on DegeneratePdf or LowAcceptance.
GeneratedPdf
generate_pdf(const GenerationConfig& config, std::size_t index);

/// config.n_functions independent PDFs; the last quarter is the validation
/// split. Each PDF's stream is seeded from (seed, index, attempt) only.
Dataset
generate_dataset(const GenerationConfig& config);

/// Writes manifest.json, pdf_%06d.json and sample_%06d.csv into `dir`.
void
write_dataset(const Dataset& ds, const std::filesystem::path& dir);

/// Reads a dataset directory. PDFs are loaded when present.
Dataset
read_dataset(const std::filesystem::path& dir);

/// Sample CSV: header x0..x{d-1},p_true, 17 significant digits.
void
write_sample_csv(const SampleSet& s, const std::filesystem::path& path);
SampleSet
read_sample_csv(const std::filesystem::path& path);

} // namespace dde::synthpdf
