#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "tobit_iht/datagen.hpp"
#include "tobit_iht/dataset.hpp"
#include "tobit_iht/solver_dist.hpp"
#include "tobit_iht/solver_local.hpp"

// File formats shared by the CLI and by tests.
//
//   dataset CSV   header "y,censored,x1,...,xd"; one row per observation in
//                 input order; the intercept is implicit.
//   truth JSON    {"beta": [...], "sigma": s, "c0": c, "s0": k}
//   shard JSON    {"c0": c, "shards": [{"machine_id": m, "file": f, "rows": n}]}
//   theta JSON    {"delta": [...], "gamma": g} (or a result JSON with "theta")
//
// Reals are written in shortest round-trip decimal form.

namespace tobit::io {

std::string format_double(double v);

void write_dataset_csv(const std::filesystem::path& path, const CensoredDataset& data);
/// Schema problems throw Error(schema) naming the 1-based line; a censored
/// flag that disagrees with y <= c0 throws Error(data).
CensoredDataset read_dataset_csv(const std::filesystem::path& path, double c0 = 0.0);

void write_truth_json(const std::filesystem::path& path, const GroundTruth& truth);
GroundTruth read_truth_json(const std::filesystem::path& path);

struct ShardEntry {
  int machine_id = 0;
  std::string file;  ///< relative to the manifest's directory
  Index rows = 0;
};

struct ShardManifest {
  double c0 = 0.0;
  std::vector<ShardEntry> shards;
};

void write_shard_manifest(const std::filesystem::path& path, const ShardManifest& manifest);
ShardManifest read_shard_manifest(const std::filesystem::path& path);
/// Loads every shard; a missing file throws Error(io) naming the shard id.
std::vector<Shard> load_shards(const std::filesystem::path& manifest_path);

std::string theta_json(const Theta& theta);
Theta read_theta_json(const std::filesystem::path& path);

/// iter,nll,step_norm,support_size,eta_used
void write_trace_csv(const std::filesystem::path& path, const FitResult& fit);
/// round,iter,nll,step_norm,support_size,eta_used; nll is the surrogate
/// objective of that round.
void write_round_trace_csv(const std::filesystem::path& path, const FitResult& fit);

void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

}  // namespace tobit::io
