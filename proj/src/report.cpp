#include "mazerl/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace mazerl {

using nlohmann::json;

void write_report(std::span<const ResultRow> rows,
                  const std::filesystem::path& out_dir,
                  const std::string& config_hash) {
  std::filesystem::create_directories(out_dir);

  {
    std::ofstream csv(out_dir / "results.csv");
    if (!csv) throw std::runtime_error("cannot write results.csv");
    csv << "setting,dev_mean,dev_std,test_mean,test_std,train_mean,n_seeds,"
           "complete\n";
    for (const ResultRow& r : rows) {
      char line[256];
      std::snprintf(line, sizeof(line), "%s,%.6f,%.6f,%.6f,%.6f,%.6f,%zu,%d\n",
                    r.setting.c_str(), r.dev_mean, r.dev_std, r.test_mean,
                    r.test_std, r.train_mean, r.per_seed.size(),
                    r.complete ? 1 : 0);
      csv << line;
    }
  }

  {
    json j;
    j["config_hash"] = config_hash;
    json jrows = json::array();
    for (const ResultRow& r : rows) {
      json jr;
      jr["setting"] = r.setting;
      jr["dev_mean"] = r.dev_mean;
      jr["dev_std"] = r.dev_std;
      jr["test_mean"] = r.test_mean;
      jr["test_std"] = r.test_std;
      jr["train_mean"] = r.train_mean;
      jr["complete"] = r.complete;
      json seeds = json::array();
      for (const SeedOutcome& o : r.per_seed) {
        json jo;
        jo["seed"] = o.seed;
        jo["train_acc"] = o.train_acc;
        jo["dev_acc"] = o.dev_acc;
        jo["test_acc"] = o.test_acc;
        jo["failed"] = o.failed;
        seeds.push_back(std::move(jo));
      }
      jr["per_seed"] = std::move(seeds);
      jrows.push_back(std::move(jr));
    }
    j["rows"] = std::move(jrows);
    std::ofstream out(out_dir / "results.json");
    if (!out) throw std::runtime_error("cannot write results.json");
    out << j.dump(2) << "\n";
  }

  {
    std::ofstream txt(out_dir / "results.txt");
    if (!txt) throw std::runtime_error("cannot write results.txt");
    txt << format_results_table(rows);
    txt << "config " << config_hash << "\n";
  }
}

std::vector<ResultRow> load_results_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  json j;
  in >> j;
  std::vector<ResultRow> rows;
  for (const json& jr : j.at("rows")) {
    ResultRow r;
    r.setting = jr.at("setting");
    r.dev_mean = jr.at("dev_mean");
    r.dev_std = jr.at("dev_std");
    r.test_mean = jr.at("test_mean");
    r.test_std = jr.at("test_std");
    r.train_mean = jr.at("train_mean");
    r.complete = jr.at("complete");
    for (const json& jo : jr.at("per_seed")) {
      SeedOutcome o;
      o.seed = jo.at("seed");
      o.train_acc = jo.at("train_acc");
      o.dev_acc = jo.at("dev_acc");
      o.test_acc = jo.at("test_acc");
      o.failed = jo.at("failed");
      r.per_seed.push_back(o);
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string format_results_table(std::span<const ResultRow> rows) {
  std::ostringstream out;
  out << "Reward structure                 Dev            Test\n";
  for (const ResultRow& r : rows) {
    char line[160];
    std::snprintf(line, sizeof(line), "%-30s %5.1f +/- %4.1f %5.1f +/- %4.1f%s\n",
                  r.setting.c_str(), 100.0 * r.dev_mean, 100.0 * r.dev_std,
                  100.0 * r.test_mean, 100.0 * r.test_std,
                  r.complete ? "" : "  (incomplete)");
    out << line;
  }
  return out.str();
}

}  // namespace mazerl
