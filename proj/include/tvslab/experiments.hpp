#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "tvslab/io.hpp"

namespace tvslab {

// a, b, r are in units of lambda.
struct ExperimentConfig {
  std::string experiment;
  std::vector<int> radii;  // empty: experiment default
  std::optional<double> a;
  std::optional<double> b;
  std::optional<double> r;
  int replicas = 0;  // 0: experiment default
  std::uint64_t seed = 0;
  int workers = 1;
  std::filesystem::path out;  // empty: nothing written
  bool svg = false;
  double dt = 1e-3;  // levy1d step
};

struct Gate {
  std::string name;
  bool pass = false;
  Json detail;
};

struct ExperimentReport {
  Json config;   // echo without scheduling fields
  Json metrics;
  std::vector<Gate> gates;
  std::vector<std::pair<std::string, std::string>> tables;   // file name, CSV
  std::vector<std::pair<std::string, std::string>> figures;  // file name, SVG
  double wall_clock_s = 0.0;
  int workers = 1;

  bool pass() const;
  std::vector<std::string> failing() const;
  // Deterministic part of the report.
  Json body() const;
  Json full() const;
};

const std::vector<std::string>& experiment_names();
bool known_experiment(const std::string& name);

// Throws InvalidParameter on unknown names or bad parameters.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

// Writes report.json, the CSV tables and figures into cfg.out/<experiment>.
void write_report(const ExperimentReport& rep, const ExperimentConfig& cfg);

std::string version_string();

// Results in index order regardless of scheduling.
template <class T, class F>
std::vector<T> parallel_map(std::size_t n, int workers, F&& fn) {
  std::vector<T> out(n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex m;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        out[i] = fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(m);
        if (!err) err = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  const std::size_t w = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), 1, std::max<std::size_t>(n, 1));
  std::vector<std::thread> threads;
  for (std::size_t k = 1; k < w; ++k) threads.emplace_back(work);
  work();
  for (auto& t : threads) t.join();
  if (err) std::rethrow_exception(err);
  return out;
}

}  // namespace tvslab
