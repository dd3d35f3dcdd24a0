#include "rangecap/output.hpp"

#include <json.hpp>

#include <unistd.h>

#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <set>

#include "rangecap/errors.hpp"

namespace rangecap {

namespace fs = std::filesystem;
using nlohmann::json;

std::string artifact_version() { return RANGECAP_VERSION; }

void write_file_atomic(const fs::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
  }
  const fs::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
  FILE* f = std::fopen(tmp.c_str(), "wb");
  if (!f) throw IoError("cannot open '" + tmp.string() + "' for writing");
  const bool ok = std::fwrite(content.data(), 1, content.size(), f) == content.size() && std::fflush(f) == 0 &&
                  ::fsync(::fileno(f)) == 0;
  if (std::fclose(f) != 0 || !ok) {
    fs::remove(tmp, ec);
    throw IoError("failed writing '" + tmp.string() + "'");
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot rename onto '" + path.string() + "'");
  }
}

fs::path resolve_output_dir(const std::string& configured) {
  if (!configured.empty()) return configured;
  if (const char* env = std::getenv("RANGECAP_OUTPUT_DIR"); env && *env) return env;
  return ".";
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

namespace {

std::string header_lines(const Provenance& p, const std::string& campaign, bool partial) {
  std::string s;
  s += "# campaign=" + campaign + "\n";
  s += "# command=" + p.command + "\n";
  s += "# config_hash=" + p.config_hash + "\n";
  s += "# version=" + p.version + "\n";
  s += "# master_seed=" + std::to_string(p.seed) + "\n";
  if (partial) s += "# partial=1\n";
  return s;
}

json provenance_json(const Provenance& p) {
  return {{"config_hash", p.config_hash}, {"version", p.version}, {"master_seed", p.seed}, {"command", p.command}};
}

json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json map_json(const std::map<std::string, double>& m) {
  json j = json::object();
  for (const auto& [k, v] : m) j[k] = number(v);
  return j;
}

}  // namespace

std::string report_csv(const EstimateReport& r, const Provenance& p) {
  std::string s = header_lines(p, r.campaign, r.partial);
  s += "d,n,replicas,mean,var,se_mean,se_var,backend,bias_bound,seed\n";
  for (const auto& pt : r.points) {
    s += std::to_string(pt.d) + "," + std::to_string(pt.n) + "," + std::to_string(pt.replicas) + "," +
         format_double(pt.stats.mean) + "," + format_double(pt.stats.var) + "," + format_double(pt.stats.se_mean) + "," +
         format_double(pt.stats.se_var) + "," + pt.backend + "," + format_double(pt.bias_bound) + "," +
         std::to_string(pt.seed) + "\n";
  }
  return s;
}

std::string report_json(const EstimateReport& r, const Provenance& p) {
  json j;
  j["provenance"] = provenance_json(p);
  j["campaign"] = r.campaign;
  j["d"] = r.d;
  j["partial"] = r.partial;
  j["fitted"] = map_json(r.fitted);
  j["labels"] = r.labels;
  json pts = json::array();
  for (const auto& pt : r.points) {
    pts.push_back({{"n", pt.n},
                   {"replicas", pt.replicas},
                   {"mean", number(pt.stats.mean)},
                   {"var", number(pt.stats.var)},
                   {"se_mean", number(pt.stats.se_mean)},
                   {"se_var", number(pt.stats.se_var)},
                   {"batches", pt.stats.batches},
                   {"backend", pt.backend},
                   {"bias_bound", number(pt.bias_bound)},
                   {"mc_se", number(pt.mc_se)},
                   {"seed", pt.seed},
                   {"extras", map_json(pt.extras)}});
  }
  j["points"] = pts;
  return j.dump(2) + "\n";
}

std::string plot_data(const EstimateReport& r, const std::string& key) {
  std::string s = "# x y yerr (" + r.campaign + ": " + key + ")\n";
  for (const auto& pt : r.points) {
    double y, e = 0;
    if (key == "mean") {
      y = pt.stats.mean;
      e = pt.stats.se_mean;
    } else {
      const auto it = pt.extras.find(key);
      if (it == pt.extras.end()) continue;
      y = it->second;
      const auto se = pt.extras.find(key + "_se");
      if (se != pt.extras.end()) e = se->second;
    }
    s += std::to_string(pt.n) + " " + format_double(y) + " " + format_double(e) + "\n";
  }
  return s;
}

std::string clt_sample_csv(const CltDiagnostics& c, const Provenance& p) {
  std::string s = header_lines(p, "clt", c.partial);
  s += "replica,standardized\n";
  for (std::size_t i = 0; i < c.standardized.size(); ++i)
    s += std::to_string(i) + "," + format_double(c.standardized[i]) + "\n";
  return s;
}

std::string clt_json(const CltDiagnostics& c, const Provenance& p) {
  json j;
  j["provenance"] = provenance_json(p);
  j["campaign"] = "clt";
  j["d"] = c.d;
  j["n"] = c.n;
  j["replicas"] = c.replicas;
  j["backend"] = c.backend;
  j["partial"] = c.partial;
  j["mean"] = number(c.mean);
  j["variance"] = number(c.variance);
  j["ks_distance"] = number(c.ks_distance);
  j["ks_pvalue"] = number(c.ks_pvalue);
  j["ks_pvalue_simple"] = number(c.ks_pvalue_simple);
  j["fourth_moment_ratio"] = number(c.fourth_moment_ratio);
  json lind = json::array();
  for (const auto& lp : c.lindeberg) {
    json sums = json::array();
    for (const auto& v : lp.sums) sums.push_back({{"eps", v.eps}, {"raw", number(v.raw)}, {"normalized", number(v.normalized)}});
    lind.push_back({{"n", lp.n},
                    {"m", lp.m},
                    {"levels", lp.levels},
                    {"replicas", lp.replicas},
                    {"fourth_moment_ratio", number(lp.fourth_moment_ratio)},
                    {"sums", sums}});
  }
  j["lindeberg"] = lind;
  return j.dump(2) + "\n";
}

std::string clt_lindeberg_plot(const CltDiagnostics& c) {
  std::string s = "# n eps normalized raw\n";
  for (const auto& lp : c.lindeberg)
    for (const auto& v : lp.sums)
      s += std::to_string(lp.n) + " " + format_double(v.eps) + " " + format_double(v.normalized) + " " +
           format_double(v.raw) + "\n";
  return s;
}

std::string sidecar_json(const Provenance& p, const std::string& full_config, double seconds, int workers,
                         bool partial) {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  json j;
  j["provenance"] = provenance_json(p);
  j["finished_at"] = stamp;
  j["wall_seconds"] = seconds;
  j["workers"] = workers;
  j["partial"] = partial;
  j["config"] = full_config;
  return j.dump(2) + "\n";
}

void set_partial_marker(const ArtifactSet& a, bool partial, const std::string& note) {
  const auto marker = a.file(".partial");
  if (partial) {
    write_file_atomic(marker, note + "\n");
  } else {
    std::error_code ec;
    fs::remove(marker, ec);
  }
}

void write_report(const ArtifactSet& a, const EstimateReport& r, const Provenance& p) {
  write_file_atomic(a.file(".csv"), report_csv(r, p));
  write_file_atomic(a.file(".json"), report_json(r, p));
  write_file_atomic(a.file("_mean.dat"), plot_data(r, "mean"));
  std::set<std::string> keys;
  for (const auto& pt : r.points)
    for (const auto& [k, v] : pt.extras)
      if (k != "mc_noise_var" && !(k.size() > 3 && k.compare(k.size() - 3, 3, "_se") == 0)) keys.insert(k);
  for (const auto& k : keys) write_file_atomic(a.file("_" + k + ".dat"), plot_data(r, k));
}

void write_clt(const ArtifactSet& a, const CltDiagnostics& c, const Provenance& p) {
  write_file_atomic(a.file(".csv"), clt_sample_csv(c, p));
  write_file_atomic(a.file(".json"), clt_json(c, p));
  write_file_atomic(a.file("_lindeberg.dat"), clt_lindeberg_plot(c));
}

}  // namespace rangecap
