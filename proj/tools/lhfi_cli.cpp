// Command-line front end: ingest, pilot, fit, report, validate.
// Exit codes: 0 ok, 1 runtime failure, 2 usage error, 3 validation failure.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lhfi/ingest.hpp"
#include "lhfi/model.hpp"
#include "lhfi/posterior.hpp"
#include "lhfi/sampler.hpp"
#include "lhfi/samples_io.hpp"
#include "lhfi/validation.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw lhfi::Error("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const std::string& path, const std::string& text) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw lhfi::Error("cannot write file: " + path);
  out << text;
}

int resolve_threads(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("LHFI_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// --- ingest ---

int cmd_ingest(const std::string& csv_path, const std::string& schema_path,
               const std::string& transform_path, const std::string& anchor,
               std::optional<long> year, const std::string& out_path) {
  const lhfi::Schema schema = lhfi::Schema::from_json(read_file(schema_path));
  const lhfi::TransformSpec transform =
      lhfi::TransformSpec::from_json(read_file(transform_path));
  lhfi::RawTable table = lhfi::load_csv(csv_path, schema);
  const size_t loaded = table.rows.size();
  if (year) table = lhfi::filter_year(table, *year);

  std::set<std::string> modeled;
  for (const auto& m : schema.metric_names()) modeled.insert(m);
  for (const auto& c : schema.covariate_names()) modeled.insert(c);
  modeled.insert(schema.treatment_name());
  modeled.insert(schema.column_with_role(lhfi::ColumnRole::kCapitalLat));
  modeled.insert(schema.column_with_role(lhfi::ColumnRole::kCapitalLon));
  const lhfi::RawTable kept = lhfi::drop_incomplete(table, modeled);

  const lhfi::Dataset ds = lhfi::build_dataset(kept, schema, transform, anchor);
  ds.save(out_path);

  const auto treated = static_cast<long>(ds.T.sum());
  const std::vector<double> raw_t = kept.complete_column(schema.treatment_name());
  std::cout << "rows loaded: " << loaded << "\n"
            << "complete cases: " << kept.rows.size() << " (dropped "
            << table.rows.size() - kept.rows.size() << ")\n"
            << "treatment rule: strictly above median ("
            << lhfi::sample_median(raw_t) << ")\n"
            << "treatment split: control=" << ds.n() - treated
            << ", treated=" << treated << "\n"
            << "dataset: " << out_path << " (N=" << ds.n() << ", P=" << ds.p()
            << ", K=" << ds.k() << ")\n";
  return 0;
}

// --- pilot ---

int cmd_pilot(const std::string& dataset_path, long iterations, long burn_in,
              int chains, std::uint64_t seed, const std::string& out_path) {
  lhfi::Dataset ds = lhfi::Dataset::load(dataset_path);
  lhfi::ModelConfig model;
  model.variant = lhfi::Variant::A;
  model.spatial = false;
  model.anchored = false;
  lhfi::McmcConfig mcmc;
  mcmc.iterations = iterations;
  mcmc.burn_in = burn_in >= 0 ? burn_in : iterations / 2;
  mcmc.thin = 1;
  mcmc.chains = chains;
  mcmc.seed = seed;
  mcmc.validate();

  lhfi::PosteriorSamples samples = lhfi::run_chains(ds, model, mcmc);

  // The anchor-free factor model is reflection invariant; fix each draw's
  // sign by its alignment with the first metric before summarizing.
  for (auto& chain : samples.chains) {
    auto& h = chain.blocks.at("H");
    auto& a = chain.blocks.at("a");
    for (long r = 0; r < chain.kept; ++r) {
      const double align = (h.row(r) * ds.Y.col(0))(0, 0);
      if (align < 0) {
        h.row(r) = -h.row(r);
        a.row(r) = -a.row(r);
      }
    }
  }

  const auto ranking = lhfi::rank_report(samples, ds);
  double rhat_max = 0;
  for (int i = 0; i < ds.n(); ++i) {
    std::vector<Eigen::VectorXd> per_chain;
    for (int c = 0; c < static_cast<int>(samples.chains.size()); ++c)
      per_chain.push_back(
          samples.chain_column(c, "H[" + ds.countries[i].id + "]"));
    rhat_max = std::max(rhat_max, lhfi::split_rhat(per_chain));
  }

  json j;
  j["mode"] = "pilot";
  j["note"] =
      "anchor-free base model; the latent scale is unidentified and the sign "
      "is fixed per draw by correlation with the first metric";
  j["rhat_max"] = rhat_max;
  json cands = json::array();
  const size_t n_cand = std::min<size_t>(10, ranking.size());
  for (size_t i = 0; i < n_cand; ++i) {
    const auto& r = ranking[ranking.size() - 1 - i];
    cands.push_back({{"id", r.id},
                     {"name", r.name},
                     {"income_group", r.income_group},
                     {"median_H", r.median},
                     {"q025", r.q025},
                     {"q975", r.q975}});
  }
  j["anchor_candidates"] = cands;
  write_text(out_path, j.dump(2) + "\n");
  if (rhat_max > 1.5)
    std::cerr << "warning: split-Rhat " << rhat_max
              << " > 1.5; pilot run may not have converged\n";
  std::cout << "pilot report: " << out_path << "\n";
  return 0;
}

// --- fit ---

int cmd_fit(const std::string& dataset_path, const std::string& model_path,
            const std::string& mcmc_path, const std::string& out_dir,
            std::optional<int> chains_override,
            std::optional<std::uint64_t> seed_override, int threads_flag,
            bool resume, std::optional<long> stop_after) {
  const lhfi::Dataset ds = lhfi::Dataset::load(dataset_path);
  ds.validate();
  const lhfi::ModelConfig model = lhfi::ModelConfig::load(model_path);
  lhfi::McmcConfig mcmc = lhfi::McmcConfig::load(mcmc_path);
  if (chains_override) mcmc.chains = *chains_override;
  if (seed_override) mcmc.seed = *seed_override;
  mcmc.validate();

  const std::string started = lhfi::now_iso8601();
  lhfi::write_prelim_manifest(out_dir, model, mcmc, ds.hash(), started);

  const int threads = std::max(1, std::min(resolve_threads(threads_flag),
                                           mcmc.chains));
  std::vector<std::unique_ptr<lhfi::ChainRunner>> runners;
  for (int c = 0; c < mcmc.chains; ++c) {
    runners.push_back(std::make_unique<lhfi::ChainRunner>(ds, model, mcmc, c));
    const std::string ckpt =
        (fs::path(out_dir) / ("chain_" + std::to_string(c) + ".ckpt")).string();
    if (mcmc.checkpoint_every > 0)
      runners.back()->set_checkpoint_path(ckpt, mcmc.checkpoint_every);
    if (resume && runners.back()->resume_from(ckpt))
      std::cout << "chain " << c << ": resumed at iteration "
                << runners.back()->iteration() << "\n";
  }

  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  std::atomic<int> next{0};
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const int c = next.fetch_add(1);
        if (c >= mcmc.chains) return;
        try {
          runners[c]->run(stop_after);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);

  if (stop_after && !runners.front()->finished()) {
    std::cout << "stopped after " << runners.front()->iteration()
              << " iterations; checkpoints in " << out_dir << "\n";
    return 0;
  }

  lhfi::PosteriorSamples samples;
  samples.variant = model.variant;
  samples.spatial = model.spatial;
  samples.anchored = model.anchored;
  for (const auto& [block, cols] : lhfi::sample_schema(ds, model)) {
    samples.block_names.push_back(block);
    samples.columns[block] = cols;
  }
  for (auto& r : runners) samples.chains.push_back(r->samples());

  lhfi::save_samples(out_dir, samples, model, mcmc, ds.hash(), started,
                     lhfi::now_iso8601());
  for (const auto& c : samples.chains) {
    std::cout << "chain " << c.chain_id << ": kept " << c.kept << " draws";
    if (model.spatial) std::cout << ", phi acceptance " << c.phi_accept_rate;
    if (model.variant == lhfi::Variant::B)
      std::cout << ", gamma acceptance " << c.gamma_accept_rate;
    std::cout << "\n";
  }
  std::cout << "samples: " << out_dir << "\n";
  return 0;
}

// --- report ---

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    out += c;
  }
  return out + "\"";
}

int cmd_report(const std::string& samples_dir, const std::string& what,
               const std::string& dataset_path,
               const std::vector<std::string>& pair, double ref,
               const std::string& out_dir) {
  const lhfi::LoadedSamples loaded = lhfi::load_samples(samples_dir);
  const lhfi::PosteriorSamples& samples = loaded.samples;
  fs::create_directories(out_dir);
  auto out_path = [&out_dir](const std::string& name) {
    return (fs::path(out_dir) / name).string();
  };

  if (what == "summary") {
    const auto report = lhfi::summarize(samples, samples.scalar_names());
    json rows = json::array();
    std::ostringstream csv;
    csv << "name,mean,median,q2.5,q97.5\n";
    for (const auto& r : report.rows) {
      rows.push_back({{"name", r.name},
                      {"mean", r.mean},
                      {"median", r.median},
                      {"q025", r.q025},
                      {"q975", r.q975}});
      csv << csv_quote(r.name) << "," << r.mean << "," << r.median << ","
          << r.q025 << "," << r.q975 << "\n";
    }
    json j;
    j["report"] = "summary";
    j["rows"] = rows;
    write_text(out_path("summary.json"), j.dump(2) + "\n");
    write_text(out_path("summary.csv"), csv.str());
  } else if (what == "ranking") {
    if (dataset_path.empty())
      throw lhfi::Error("ranking requires --dataset for country annotations");
    const lhfi::Dataset ds = lhfi::Dataset::load(dataset_path);
    const auto ranking = lhfi::rank_report(samples, ds);
    json rows = json::array();
    std::ostringstream csv;
    csv << "rank,id,name,income_group,median,q2.5,q97.5\n";
    for (const auto& r : ranking) {
      rows.push_back({{"rank", r.rank},
                      {"id", r.id},
                      {"name", r.name},
                      {"income_group", r.income_group},
                      {"median", r.median},
                      {"q025", r.q025},
                      {"q975", r.q975}});
      csv << r.rank << "," << csv_quote(r.id) << "," << csv_quote(r.name) << ","
          << csv_quote(r.income_group) << "," << r.median << "," << r.q025
          << "," << r.q975 << "\n";
    }
    json j;
    j["report"] = "ranking";
    j["order"] = "posterior median descending; ties break on country id";
    j["rows"] = rows;
    write_text(out_path("ranking.json"), j.dump(2) + "\n");
    write_text(out_path("ranking.csv"), csv.str());
  } else if (what == "dominance") {
    const auto& ids = samples.columns.at("H");
    auto id_of = [&ids](size_t i) {
      // strip "H[...]"
      return ids[i].substr(2, ids[i].size() - 3);
    };
    if (!pair.empty()) {
      if (pair.size() != 2) throw lhfi::Error("--pair needs two country ids");
      const Eigen::VectorXd hi = samples.pooled_column("H[" + pair[0] + "]");
      const Eigen::VectorXd hj = samples.pooled_column("H[" + pair[1] + "]");
      const double p = lhfi::dominance_probability(hi, hj);
      json j;
      j["report"] = "dominance";
      j["pair"] = {pair[0], pair[1]};
      j["p"] = p;
      write_text(out_path("dominance.json"), j.dump(2) + "\n");
      std::cout << "P(H[" << pair[0] << "] > H[" << pair[1] << "]) = " << p
                << "\n";
    } else {
      const Eigen::MatrixXd m = lhfi::dominance_matrix(samples);
      std::ostringstream csv;
      csv << "id_i,id_j,p_i_gt_j\n";
      for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
          if (i != j)
            csv << csv_quote(id_of(i)) << "," << csv_quote(id_of(j)) << ","
                << m(i, j) << "\n";
      write_text(out_path("dominance.csv"), csv.str());
      json j;
      j["report"] = "dominance";
      j["n"] = m.rows();
      j["csv"] = "dominance.csv";
      write_text(out_path("dominance.json"), j.dump(2) + "\n");
    }
  } else if (what == "effect") {
    const auto r = lhfi::treatment_effect_report(samples, ref);
    json j;
    j["report"] = "effect";
    j["parameter"] = "beta[1]";
    j["label"] = r.causal ? "causal" : "non-causal";
    j["median"] = r.median;
    j["q025"] = r.q025;
    j["q975"] = r.q975;
    j["p_positive"] = r.p_positive;
    j["ref"] = r.ref;
    j["p_greater_ref"] = r.p_greater_ref;
    write_text(out_path("effect.json"), j.dump(2) + "\n");
    std::cout << (r.causal ? "causal" : "non-causal")
              << " treatment effect beta[1]: median " << r.median << ", 95% CI ("
              << r.q025 << ", " << r.q975 << "), P(>0) = " << r.p_positive
              << "\n";
  } else if (what == "rho-curve") {
    if (!samples.has_block("phi"))
      throw lhfi::Error("rho-curve requires a spatial fit (no phi samples)");
    const Eigen::VectorXd phi = samples.pooled_column("phi");
    Eigen::VectorXd grid(81);
    for (int g = 0; g < 81; ++g) grid(g) = 0.25 * g;
    const std::vector<double> thresholds{0.1, 0.2};
    const auto curve = lhfi::correlation_curve(phi, grid, thresholds);
    std::ostringstream csv;
    csv << "d_mm,mean,median,q2.5,q97.5,p_gt_0.1,p_gt_0.2\n";
    json rows = json::array();
    for (const auto& row : curve) {
      csv << row.d << "," << row.mean << "," << row.median << "," << row.q025
          << "," << row.q975 << "," << row.p_over[0] << "," << row.p_over[1]
          << "\n";
      rows.push_back({{"d", row.d},
                      {"mean", row.mean},
                      {"median", row.median},
                      {"q025", row.q025},
                      {"q975", row.q975},
                      {"p_over", row.p_over}});
    }
    json j;
    j["report"] = "rho-curve";
    j["thresholds"] = thresholds;
    j["rows"] = rows;
    write_text(out_path("rho_curve.json"), j.dump(2) + "\n");
    write_text(out_path("rho_curve.csv"), csv.str());
  } else if (what == "residuals") {
    if (dataset_path.empty())
      throw lhfi::Error("residuals requires --dataset");
    const lhfi::Dataset ds = lhfi::Dataset::load(dataset_path);
    const Eigen::VectorXd res = lhfi::h_residuals(samples, ds);
    std::ostringstream csv;
    csv << "id,residual\n";
    json rows = json::array();
    for (int i = 0; i < ds.n(); ++i) {
      csv << csv_quote(ds.countries[i].id) << "," << res(i) << "\n";
      rows.push_back({{"id", ds.countries[i].id}, {"residual", res(i)}});
    }
    json j;
    j["report"] = "residuals";
    j["rows"] = rows;
    write_text(out_path("residuals.json"), j.dump(2) + "\n");
    write_text(out_path("residuals.csv"), csv.str());
  } else if (what == "diagnostics") {
    const auto rows = lhfi::diagnostics(samples, samples.scalar_names());
    std::ostringstream csv;
    csv << "name,ess,split_rhat,geweke_z\n";
    json jrows = json::array();
    for (const auto& r : rows) {
      csv << csv_quote(r.name) << "," << r.ess << "," << r.split_rhat << ","
          << r.geweke_z << "\n";
      jrows.push_back({{"name", r.name},
                       {"ess", r.ess},
                       {"split_rhat", r.split_rhat},
                       {"geweke_z", r.geweke_z}});
    }
    json j;
    j["report"] = "diagnostics";
    j["rows"] = jrows;
    write_text(out_path("diagnostics.json"), j.dump(2) + "\n");
    write_text(out_path("diagnostics.csv"), csv.str());
  } else {
    std::cerr << "unknown report: " << what << "\n";
    return 2;
  }
  return 0;
}

// --- validate ---

int cmd_validate(const std::string& suite, const std::string& model_name,
                 long replicas, const std::string& inject_typo,
                 std::uint64_t seed, double budget_seconds,
                 const std::string& out_path) {
  json j;
  j["suite"] = suite;
  bool pass = false;

  if (suite == "geweke") {
    lhfi::GewekeOptions opts;
    opts.variant = lhfi::variant_from_name(model_name);
    opts.replicas = replicas;
    opts.seed = seed;
    opts.mutation = lhfi::mutation_from_name(inject_typo);
    if (budget_seconds > 0) {
      // Probe a short run and scale the replica count to the budget.
      lhfi::GewekeOptions probe = opts;
      probe.replicas = 2000;
      const auto t0 = std::chrono::steady_clock::now();
      (void)lhfi::geweke_test(probe);
      const double dt =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
              .count();
      const auto affordable = static_cast<long>(
          2000.0 * std::max(1.0, 0.9 * budget_seconds / std::max(dt, 1e-6)));
      opts.replicas = std::max<long>(10000, std::min(opts.replicas, affordable));
    }
    const lhfi::GewekeReport report = lhfi::geweke_test(opts);
    pass = report.pass(4.0);
    j["variant"] = model_name;
    j["replicas"] = opts.replicas;
    j["mutation"] = lhfi::mutation_name(opts.mutation);
    j["diverged"] = report.diverged;
    // JSON has no infinity; a diverged chain reports a sentinel bound
    j["max_abs_z"] = report.diverged ? 1e30 : report.max_abs_z();
    json funcs = json::array();
    for (const auto& f : report.functions)
      funcs.push_back({{"name", f.name},
                       {"mean_marginal", f.mean_marginal},
                       {"se_marginal", f.se_marginal},
                       {"mean_successive", f.mean_successive},
                       {"se_successive", f.se_successive},
                       {"z", f.z}});
    j["functions"] = funcs;
  } else if (suite == "oracle") {
    const auto comparisons = lhfi::run_oracle_suite(seed);
    pass = !comparisons.empty();
    json rows = json::array();
    for (const auto& c : comparisons) {
      pass = pass && c.pass;
      rows.push_back({{"instance", c.instance},
                      {"param", c.param},
                      {"grid_mean", c.grid_mean},
                      {"grid_sd", c.grid_sd},
                      {"mcmc_mean", c.mcmc_mean},
                      {"mcse", c.mcse},
                      {"pass", c.pass}});
    }
    j["comparisons"] = rows;
  } else if (suite == "units") {
    const auto checks = lhfi::unit_suite();
    pass = !checks.empty();
    json rows = json::array();
    for (const auto& c : checks) {
      pass = pass && c.pass;
      rows.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    }
    j["checks"] = rows;
  } else {
    std::cerr << "unknown suite: " << suite << "\n";
    return 2;
  }

  j["pass"] = pass;
  write_text(out_path, j.dump(2) + "\n");
  std::cout << "validation suite '" << suite << "': "
            << (pass ? "PASS" : "FAIL") << " (" << out_path << ")\n";
  return pass ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatial latent-health-factor MCMC engine"};
  app.require_subcommand(1);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Build a model-ready dataset from CSV");
  std::string csv_path, schema_path, transform_path, anchor, out_file;
  long year_flag = std::numeric_limits<long>::min();
  ingest->add_option("--csv", csv_path, "input CSV")->required()->check(CLI::ExistingFile);
  ingest->add_option("--schema", schema_path, "column-role schema JSON")->required()->check(CLI::ExistingFile);
  ingest->add_option("--transform", transform_path, "transform spec JSON")->required()->check(CLI::ExistingFile);
  ingest->add_option("--anchor", anchor, "anchor country id")->required();
  ingest->add_option("--year", year_flag, "keep only this year");
  ingest->add_option("--out", out_file, "output dataset JSON")->required();

  // pilot
  auto* pilot = app.add_subcommand("pilot", "Anchor-free base run listing anchor candidates");
  std::string pilot_dataset, pilot_out;
  long pilot_iters = 20000, pilot_burn = -1;
  int pilot_chains = 2;
  std::uint64_t pilot_seed = 0;
  pilot->add_option("--dataset", pilot_dataset)->required()->check(CLI::ExistingFile);
  pilot->add_option("--iterations", pilot_iters);
  pilot->add_option("--burn-in", pilot_burn);
  pilot->add_option("--chains", pilot_chains);
  pilot->add_option("--seed", pilot_seed);
  pilot->add_option("--out", pilot_out)->required();

  // fit
  auto* fit = app.add_subcommand("fit", "Run the Metropolis-within-Gibbs sampler");
  std::string fit_dataset, fit_model, fit_mcmc, fit_out;
  int fit_chains = 0, fit_threads = 0;
  std::uint64_t fit_seed = 0;
  bool fit_has_seed = false, fit_resume = false;
  long fit_stop_after = 0;
  fit->add_option("--dataset", fit_dataset)->required()->check(CLI::ExistingFile);
  fit->add_option("--model-config", fit_model)->required()->check(CLI::ExistingFile);
  fit->add_option("--mcmc-config", fit_mcmc)->required()->check(CLI::ExistingFile);
  fit->add_option("--out", fit_out)->required();
  fit->add_option("--chains", fit_chains, "override chain count");
  fit->add_option("--seed", fit_seed, "override seed")
      ->each([&fit_has_seed](const std::string&) { fit_has_seed = true; });
  fit->add_option("--threads", fit_threads, "worker threads (env LHFI_THREADS)");
  fit->add_flag("--resume", fit_resume, "resume from checkpoints in --out");
  fit->add_option("--stop-after", fit_stop_after,
                  "stop after this many iterations (checkpoint and exit)");

  // report
  auto* report = app.add_subcommand("report", "Posterior reports from a samples directory");
  std::string rep_samples, rep_what, rep_dataset, rep_out = ".";
  std::vector<std::string> rep_pair;
  double rep_ref = 0.0;
  report->add_option("--samples", rep_samples)->required()->check(CLI::ExistingDirectory);
  report->add_option("--what", rep_what,
                     "summary|ranking|dominance|effect|rho-curve|residuals|diagnostics")
      ->required();
  report->add_option("--dataset", rep_dataset);
  report->add_option("--pair", rep_pair)->expected(2);
  report->add_option("--ref", rep_ref, "reference effect for P(beta1 > ref)");
  report->add_option("--out", rep_out);

  // validate
  auto* validate = app.add_subcommand("validate", "Sampler correctness suites");
  std::string val_suite, val_model = "A", val_typo, val_out = "validation.json";
  long val_replicas = 100000;
  std::uint64_t val_seed = 1;
  double val_budget = 0;
  validate->add_option("--suite", val_suite, "geweke|oracle|units")->required();
  validate->add_option("--model", val_model, "A or B (geweke)");
  validate->add_option("--replicas", val_replicas);
  validate->add_option("--inject-typo", val_typo,
                       "step_h|step_a|step_beta|sigma2h_rate|sigma2h_count|phi_product");
  validate->add_option("--seed", val_seed);
  validate->add_option("--budget", val_budget, "wall-clock budget in seconds");
  validate->add_option("--out", val_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (ingest->parsed()) {
      std::optional<long> year;
      if (year_flag != std::numeric_limits<long>::min()) year = year_flag;
      return cmd_ingest(csv_path, schema_path, transform_path, anchor, year,
                        out_file);
    }
    if (pilot->parsed())
      return cmd_pilot(pilot_dataset, pilot_iters, pilot_burn, pilot_chains,
                       pilot_seed, pilot_out);
    if (fit->parsed()) {
      std::optional<int> chains;
      if (fit_chains > 0) chains = fit_chains;
      std::optional<std::uint64_t> seed;
      if (fit_has_seed) seed = fit_seed;
      std::optional<long> stop_after;
      if (fit_stop_after > 0) stop_after = fit_stop_after;
      return cmd_fit(fit_dataset, fit_model, fit_mcmc, fit_out, chains, seed,
                     fit_threads, fit_resume, stop_after);
    }
    if (report->parsed())
      return cmd_report(rep_samples, rep_what, rep_dataset, rep_pair, rep_ref,
                        rep_out);
    if (validate->parsed())
      return cmd_validate(val_suite, val_model, val_replicas, val_typo,
                          val_seed, val_budget, val_out);
  } catch (const lhfi::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
