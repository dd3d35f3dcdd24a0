#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "rangecap/experiments.hpp"

namespace rangecap {

/// Provenance stamped into every artifact.
struct Provenance {
  std::string config_hash;
  std::string version;
  std::uint64_t seed = 0;
  std::string command;
};

/// Version string compiled into the library.
std::string artifact_version();

/// Writes to a sibling temporary file and renames it over `path`, so readers
/// never see a half-written file. Throws IoError.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// Output directory: explicit value, else $RANGECAP_OUTPUT_DIR, else ".".
std::filesystem::path resolve_output_dir(const std::string& configured);

/// Shortest round-trip decimal form of x.
std::string format_double(double x);

/// CSV with columns d,n,replicas,mean,var,se_mean,se_var,backend,bias_bound,seed,
/// preceded by '#' provenance lines. Contains nothing time- or host-dependent.
std::string report_csv(const EstimateReport& r, const Provenance& p);
std::string report_json(const EstimateReport& r, const Provenance& p);
/// "x y yerr" rows of an extras key (and its "_se" companion when present); the
/// key "mean" plots the grid means.
std::string plot_data(const EstimateReport& r, const std::string& key);

std::string clt_sample_csv(const CltDiagnostics& c, const Provenance& p);
std::string clt_json(const CltDiagnostics& c, const Provenance& p);
/// "n eps normalized raw" rows of the Lindeberg curve.
std::string clt_lindeberg_plot(const CltDiagnostics& c);

/// Files written for one campaign under a common stem.
struct ArtifactSet {
  std::filesystem::path dir;
  std::string stem;

  std::filesystem::path file(const std::string& suffix) const { return dir / (stem + suffix); }
};

/// Runtime metadata kept apart from the deterministic outputs.
std::string sidecar_json(const Provenance& p, const std::string& full_config, double seconds, int workers, bool partial);

/// Creates or removes <stem>.partial to match `partial`.
void set_partial_marker(const ArtifactSet& a, bool partial, const std::string& note);

void write_report(const ArtifactSet& a, const EstimateReport& r, const Provenance& p);
void write_clt(const ArtifactSet& a, const CltDiagnostics& c, const Provenance& p);

}  // namespace rangecap
