// Acceptance checks C1-C9. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "sanc/sanc.hpp"

using namespace sanc;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string id;
  double budget_s;  // 0 = no runtime limit
  std::function<Outcome()> check;
};

Outcome from_suite(const SuiteResult& r) { return {r.pass, r.detail}; }

struct EnsembleCache {
  EnsembleResult first;
  bool ready = false;

  const EnsembleResult& get() {
    if (!ready) {
      first = monte_carlo(section4_config());
      ready = true;
    }
    return first;
  }
};

}  // namespace

int main() {
  EnsembleCache cache;
  double c5_seconds = 0.0;

  const std::vector<Criterion> criteria{
      {"C1", 1.0, [] { return from_suite(tanh_gap_suite()); }},
      {"C2", 1.0, [] { return from_suite(young_suite()); }},
      {"C3", 5.0, [] { return from_suite(derivative_suite(1e-4, 1e-2)); }},
      {"C4", 0.0, [] { return from_suite(lambda_suite()); }},
      {"C5", 300.0,
       [&] {
         const auto t0 = std::chrono::steady_clock::now();
         const auto& res = cache.get();
         c5_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
         const bool pass = res.runs.size() == 50 && res.tail.median < 0.05 && res.diverged == 0 &&
                           res.max_estimate_norm < 1e3;
         return Outcome{pass, "runs=" + std::to_string(res.runs.size()) +
                                  " tail_median=" + format_double(res.tail.median) +
                                  " tail_p90=" + format_double(res.tail.p90) +
                                  " diverged=" + std::to_string(res.diverged) +
                                  " max_estimate_norm=" + format_double(res.max_estimate_norm)};
       }},
      {"C6", 0.0,
       [] {
         auto cfg = section4_config();
         cfg.truth.noise = false;
         cfg.truth.disturbance = false;
         const auto run = run_closed_loop(cfg, 0);
         const double final_norm = run.record.states.back().norm();
         return Outcome{!run.record.diverged && final_norm < 1e-2, "final_norm=" + format_double(final_norm)};
       }},
      {"C7", 0.0,
       [&] {
         const auto& res = cache.get();
         const double level = 10.0 * res.bounds.residual();
         double peak = 0.0;
         for (double v : res.drift.mean) peak = std::max(peak, v);
         std::string detail = "threshold=" + format_double(level) + " peak_mean_Vx=" + format_double(peak) +
                              " checked=" + std::to_string(res.drift_checked) +
                              " violations=" + std::to_string(res.drift_violations);
         if (res.drift_checked == 0) detail += " (vacuous: mean Vx never exceeds the threshold)";
         return Outcome{!res.drift.times.empty() && res.drift_violations == 0, detail};
       }},
      {"C8", 0.0,
       [&] {
         const auto& a = cache.get();
         const auto b = monte_carlo(section4_config());
         const auto cfg = section4_config();
         int mismatched = 0;
         for (std::size_t r = 0; r < a.runs.size(); ++r)
           if (csv_text(a.runs[r].record, a.order) != csv_text(b.runs[r].record, b.order)) ++mismatched;
         const auto ra = make_report(cfg, a).text();
         const auto rb = make_report(cfg, b).text();
         return Outcome{mismatched == 0 && ra == rb && a.runs.size() == b.runs.size(),
                        "csv_mismatches=" + std::to_string(mismatched) + " report_digest=" +
                            hex64(make_report(cfg, a).digest()) + (ra == rb ? " (equal)" : " (differs)")};
       }},
      {"C9", 0.0, [] { return from_suite(wiener_suite()); }},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.check();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.id == "C5") seconds = c5_seconds;
    if (c.budget_s > 0.0 && seconds > c.budget_s) {
      out.pass = false;
      out.detail += " runtime over budget of " + format_double(c.budget_s) + " s";
    }
    if (!out.pass) ++failures;
    std::printf("%s %s (%.2f s) %s\n", c.id.c_str(), out.pass ? "PASS" : "FAIL", seconds, out.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
