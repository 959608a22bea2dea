#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "mazerl/borl.hpp"
#include "mazerl/checkpoint.hpp"
#include "mazerl/config.hpp"
#include "mazerl/env.hpp"
#include "mazerl/harness.hpp"
#include "mazerl/merl.hpp"
#include "mazerl/objectives.hpp"
#include "mazerl/report.hpp"

namespace fs = std::filesystem;
using namespace mazerl;

namespace {

ExecMode exec_mode(bool serial) {
  return serial ? ExecMode::Serial : ExecMode::Parallel;
}

// Relative outputs land under $MAZERL_OUT when it is set; parent
// directories are created either way.
fs::path resolve_out(const std::string& path) {
  fs::path p(path);
  if (!p.is_absolute()) {
    if (const char* root = std::getenv("MAZERL_OUT")) p = fs::path(root) / p;
  }
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  return p;
}

TrainConfig train_config_from(const Config& cfg, TrainConfig base) {
  const std::string obj = cfg.get_string("objective", "mapo");
  if (obj == "iml") base.objective = Objective::Iml;
  else if (obj == "raml") base.objective = Objective::Raml;
  else if (obj == "mml") base.objective = Objective::Mml;
  else if (obj == "mapo") base.objective = Objective::Mapo;
  else throw std::runtime_error("unknown objective: " + obj);
  base.learning_rate = cfg.get_double("learning_rate", base.learning_rate);
  base.entropy_weight = cfg.get_double("entropy_weight", base.entropy_weight);
  base.raml_temperature =
      cfg.get_double("raml_temperature", base.raml_temperature);
  base.clip_weight = cfg.get_double("clip_weight", base.clip_weight);
  base.n_explore = cfg.get_int("n_explore", base.n_explore);
  base.n_samples = cfg.get_int("n_samples", base.n_samples);
  base.epochs = cfg.get_int("epochs", base.epochs);
  base.batch_size = cfg.get_int("batch_size", base.batch_size);
  if (cfg.has("grad_clip")) base.grad_clip = cfg.get_double("grad_clip", 0.0);
  base.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  base.metrics_every = cfg.get_int("metrics_every", base.metrics_every);
  return base;
}

MerlConfig merl_config_from(const Config& cfg, MerlConfig base) {
  base.inner_lr = cfg.get_double("inner_lr", base.inner_lr);
  base.meta_lr = cfg.get_double("meta_lr", base.meta_lr);
  base.entropy_weight = cfg.get_double("entropy_weight", base.entropy_weight);
  base.n_explore = cfg.get_int("n_explore", base.n_explore);
  base.epochs = cfg.get_int("epochs", base.epochs);
  base.grad_clip = cfg.get_double("grad_clip", base.grad_clip);
  base.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  base.batch_size = cfg.get_int("batch_size", base.batch_size);
  base.metrics_every = cfg.get_int("metrics_every", base.metrics_every);
  return base;
}

BorlConfig borl_config_from(const Config& cfg, BorlConfig base) {
  base.trials = cfg.get_int("trials", base.trials);
  base.trial_train = train_config_from(cfg, base.trial_train);
  base.trial_train.epochs = cfg.get_int("trial_epochs", base.trial_train.epochs);
  base.box_lo = cfg.get_double("box_lo", base.box_lo);
  base.box_hi = cfg.get_double("box_hi", base.box_hi);
  base.batch = cfg.get_int("batch", base.batch);
  base.n_explore = cfg.get_int("n_explore", base.n_explore);
  base.acq_restarts = cfg.get_int("acq_restarts", base.acq_restarts);
  base.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  return base;
}

void write_metrics_csv(const std::vector<EpochMetrics>& log,
                       const fs::path& path) {
  std::ofstream out(path);
  out << "epoch,train_acc,val_acc\n";
  for (const EpochMetrics& m : log) {
    out << m.epoch << "," << m.train_acc << "," << m.val_acc << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Instruction-following maze: policy optimization and reward "
               "learning"};
  app.require_subcommand(1);
  bool serial = false;
  app.add_flag("--serial", serial, "disable OpenMP parallelism");

  // --- gen-data --------------------------------------------------------
  auto* gen = app.add_subcommand("gen-data", "generate a dataset file");
  std::uint64_t g_seed = 0;
  int g_n = 7, g_k = 14, g_train_val = 300, g_test = 300;
  bool g_reverse = false;
  std::string g_out = "data.jsonl";
  gen->add_option("--seed", g_seed);
  gen->add_option("--n", g_n, "grid side length");
  gen->add_option("--k", g_k, "trap count");
  gen->add_option("--train-val", g_train_val);
  gen->add_option("--test", g_test);
  gen->add_flag("--reverse", g_reverse, "reverse instruction order");
  gen->add_option("--out", g_out);

  // --- train -----------------------------------------------------------
  auto* train = app.add_subcommand("train", "train a policy on fixed buffers");
  std::string t_setting = "underspecified", t_data, t_config, t_ckpt_out,
              t_metrics_out;
  std::uint64_t t_seed = 0;
  train->add_option("--setting", t_setting,
                    "oracle or underspecified buffers")
      ->check(CLI::IsMember({"oracle", "underspecified"}));
  train->add_option("--data", t_data)->required();
  train->add_option("--config", t_config);
  train->add_option("--seed", t_seed);
  train->add_option("--out", t_ckpt_out, "checkpoint path");
  train->add_option("--metrics", t_metrics_out, "metrics CSV path");

  // --- meta-train ------------------------------------------------------
  auto* meta = app.add_subcommand("meta-train",
                                  "jointly learn the policy and reward");
  std::string m_data, m_warm, m_config, m_ckpt_out, m_metrics_out;
  std::uint64_t m_seed = 0;
  meta->add_option("--data", m_data)->required();
  meta->add_option("--warm-start", m_warm, "underspecified checkpoint")
      ->required();
  meta->add_option("--config", m_config);
  meta->add_option("--seed", m_seed);
  meta->add_option("--out", m_ckpt_out);
  meta->add_option("--metrics", m_metrics_out);

  // --- borl ------------------------------------------------------------
  auto* borl = app.add_subcommand("borl", "reward search over trials");
  std::string b_data, b_buffer, b_warm, b_config, b_ckpt_out, b_trials_out;
  std::uint64_t b_seed = 0;
  borl->add_option("--data", b_data)->required();
  borl->add_option("--buffer", b_buffer, "buffer snapshot (JSONL)");
  borl->add_option("--warm-start", b_warm, "underspecified checkpoint");
  borl->add_option("--config", b_config);
  borl->add_option("--seed", b_seed);
  borl->add_option("--out", b_ckpt_out);
  borl->add_option("--trials-csv", b_trials_out);

  // --- eval ------------------------------------------------------------
  auto* eval_cmd = app.add_subcommand("eval", "greedy accuracy of a checkpoint");
  std::string e_data, e_ckpt, e_split = "test";
  eval_cmd->add_option("--data", e_data)->required();
  eval_cmd->add_option("--checkpoint", e_ckpt)->required();
  eval_cmd->add_option("--split", e_split)
      ->check(CLI::IsMember({"train", "val", "test"}));

  // --- rerank ----------------------------------------------------------
  auto* rerank = app.add_subcommand("rerank", "post-hoc reranking baseline");
  std::string r_data, r_ckpt, r_variant = "features";
  int r_samples = 10;
  std::uint64_t r_seed = 0;
  rerank->add_option("--data", r_data)->required();
  rerank->add_option("--checkpoint", r_ckpt)->required();
  rerank->add_option("--variant", r_variant)
      ->check(CLI::IsMember({"features", "features+logprob"}));
  rerank->add_option("--samples", r_samples);
  rerank->add_option("--seed", r_seed);

  // --- analyze-buffers -------------------------------------------------
  auto* analyze = app.add_subcommand("analyze-buffers",
                                     "buffer-diversity curve as CSV");
  std::string a_data, a_buffer, a_out = "diversity.csv";
  int a_max_k = 10;
  analyze->add_option("--data", a_data)->required();
  analyze->add_option("--buffer", a_buffer)->required();
  analyze->add_option("--max-k", a_max_k);
  analyze->add_option("--out", a_out);

  // --- run-experiment --------------------------------------------------
  auto* exp = app.add_subcommand("run-experiment",
                                 "full multi-seed sweep over reward settings");
  std::string x_data, x_out_dir = "results";
  int x_seeds = 5;
  exp->add_option("--data", x_data, "dataset (default: built-in fixture)");
  exp->add_option("--seeds", x_seeds);
  exp->add_option("--out", x_out_dir);

  // --- report ----------------------------------------------------------
  auto* report = app.add_subcommand("report", "reformat a results.json");
  std::string p_results;
  report->add_option("--results", p_results)->required();

  // --- tune ------------------------------------------------------------
  auto* tune = app.add_subcommand(
      "tune", "random search over learning rate and entropy weight");
  std::string u_data, u_setting = "underspecified";
  int u_points = 30, u_epochs = 2000;
  std::uint64_t u_seed = 30;
  tune->add_option("--data", u_data, "dataset (default: built-in fixture)");
  tune->add_option("--setting", u_setting)
      ->check(CLI::IsMember({"oracle", "underspecified"}));
  tune->add_option("--points", u_points);
  tune->add_option("--epochs", u_epochs);
  tune->add_option("--seed", u_seed);

  CLI11_PARSE(app, argc, argv);
  const ExecMode mode = exec_mode(serial);

  try {
    if (gen->parsed()) {
      const Dataset ds =
          generate_dataset(g_seed, g_n, g_k, g_train_val, g_test, g_reverse,
                           mode);
      const fs::path out = resolve_out(g_out);
      save_dataset(ds, out);
      std::printf("wrote %zu train / %zu val / %zu test contexts to %s\n",
                  ds.train.size(), ds.val.size(), ds.test.size(),
                  out.string().c_str());
      return 0;
    }

    if (train->parsed()) {
      const Dataset ds = load_dataset(t_data);
      const ExperimentSpec spec = default_experiment_spec();
      const bool oracle = t_setting == "oracle";
      TrainConfig cfg = oracle ? spec.oracle_cfg : spec.underspecified_cfg;
      if (!t_config.empty()) cfg = train_config_from(Config::load(t_config), cfg);
      cfg.seed = mix_seed({t_seed, oracle ? 0xB1u : 0xB2u});
      ExperienceBuffer buf = build_fixed_buffers(
          ds.train,
          oracle ? RewardSetting::Oracle : RewardSetting::Underspecified,
          spec.n_spurious, spec.spurious_budget, t_seed, mode);
      const TrainResult res = train_policy(ds.train, ds.val, buf, cfg,
                                           underspecified_reward_fn(), nullptr,
                                           mode);
      std::printf("train %.3f  val %.3f  test %.3f\n",
                  evaluate(res.theta, ds.train, mode),
                  evaluate(res.theta, ds.val, mode),
                  evaluate(res.theta, ds.test, mode));
      if (!t_ckpt_out.empty()) {
        Checkpoint ckpt;
        ckpt.theta = res.theta;
        ckpt.adam = res.adam;
        ckpt.epoch = cfg.epochs;
        ckpt.seed = t_seed;
        save_checkpoint(ckpt, resolve_out(t_ckpt_out));
      }
      if (!t_metrics_out.empty()) {
        write_metrics_csv(res.log, resolve_out(t_metrics_out));
      }
      return 0;
    }

    if (meta->parsed()) {
      const Dataset ds = load_dataset(m_data);
      const ExperimentSpec spec = default_experiment_spec();
      MerlConfig cfg = spec.merl_cfg;
      if (!m_config.empty()) cfg = merl_config_from(Config::load(m_config), cfg);
      cfg.seed = mix_seed({m_seed, 0xB3u});
      const Checkpoint warm = load_checkpoint(m_warm);
      ExperienceBuffer buf_train = build_fixed_buffers(
          ds.train, RewardSetting::Underspecified, spec.n_spurious,
          spec.spurious_budget, m_seed, mode);
      ExperienceBuffer buf_val = build_fixed_buffers(
          ds.val, RewardSetting::Underspecified, spec.n_spurious,
          spec.spurious_budget, mix_seed({m_seed, 0x7Au}), mode);
      const MerlResult res = merl_train(ds.train, ds.val, buf_train, buf_val,
                                        cfg, warm.theta, mode);
      std::printf("train %.3f  val %.3f  test %.3f\n",
                  evaluate(res.theta, ds.train, mode),
                  evaluate(res.theta, ds.val, mode),
                  evaluate(res.theta, ds.test, mode));
      if (!m_ckpt_out.empty()) {
        Checkpoint ckpt;
        ckpt.theta = res.theta;
        ckpt.phi = res.phi;
        ckpt.epoch = cfg.epochs;
        ckpt.seed = m_seed;
        save_checkpoint(ckpt, resolve_out(m_ckpt_out));
      }
      if (!m_metrics_out.empty()) {
        std::ofstream out(resolve_out(m_metrics_out));
        out << "epoch,train_acc,val_acc,o_val,meta_grad_norm\n";
        for (const MerlEpochMetrics& m : res.log) {
          out << m.epoch << "," << m.train_acc << "," << m.val_acc << ","
              << m.o_val << "," << m.meta_grad_norm << "\n";
        }
      }
      return 0;
    }

    if (borl->parsed()) {
      const Dataset ds = load_dataset(b_data);
      const ExperimentSpec spec = default_experiment_spec();
      BorlConfig cfg = spec.borl_cfg;
      if (!b_config.empty()) cfg = borl_config_from(Config::load(b_config), cfg);
      cfg.seed = mix_seed({b_seed, 0xB4u});
      ExperienceBuffer base =
          b_buffer.empty()
              ? build_fixed_buffers(ds.train, RewardSetting::Underspecified,
                                    spec.n_spurious, spec.spurious_budget,
                                    b_seed, mode)
              : ExperienceBuffer::load_jsonl(b_buffer, ds.train);
      PolicyParams warm;
      if (!b_warm.empty()) warm = load_checkpoint(b_warm).theta;
      const BorlResult res = borl_run(ds.train, ds.val, base, warm, cfg, mode);
      std::printf("best val %.3f  test %.3f\n", res.best_val_acc,
                  evaluate(res.best_theta, ds.test, mode));
      if (!b_ckpt_out.empty()) {
        Checkpoint ckpt;
        ckpt.theta = res.best_theta;
        ckpt.phi = res.best_phi;
        ckpt.seed = b_seed;
        save_checkpoint(ckpt, resolve_out(b_ckpt_out));
      }
      if (!b_trials_out.empty()) {
        std::ofstream out(resolve_out(b_trials_out));
        out << "k";
        for (int d = 0; d < AuxRewardParams::kDim; ++d) out << ",phi_" << d;
        out << ",val_acc,best_so_far\n";
        for (const TrialRecord& t : res.log) {
          out << t.k;
          for (double v : t.phi.flat()) out << "," << v;
          out << "," << t.val_acc << "," << t.best_so_far << "\n";
        }
      }
      return 0;
    }

    if (eval_cmd->parsed()) {
      const Dataset ds = load_dataset(e_data);
      const Checkpoint ckpt = load_checkpoint(e_ckpt);
      const std::span<const Context> split =
          e_split == "train" ? std::span<const Context>(ds.train)
          : e_split == "val" ? std::span<const Context>(ds.val)
                             : std::span<const Context>(ds.test);
      std::printf("%s accuracy %.4f\n", e_split.c_str(),
                  evaluate(ckpt.theta, split, mode));
      return 0;
    }

    if (rerank->parsed()) {
      const Dataset ds = load_dataset(r_data);
      const Checkpoint ckpt = load_checkpoint(r_ckpt);
      const RerankVariant variant = r_variant == "features"
                                        ? RerankVariant::FeaturesOnly
                                        : RerankVariant::FeaturesPlusLogProb;
      const RerankResult res =
          rerank_baseline(ckpt.theta, ds, variant, r_samples, r_seed,
                          kRerankSearchPoints, mode);
      std::printf("val %.4f  test %.4f\n", res.val_acc, res.test_acc);
      return 0;
    }

    if (analyze->parsed()) {
      const Dataset ds = load_dataset(a_data);
      std::vector<Context> all = ds.train;
      all.insert(all.end(), ds.val.begin(), ds.val.end());
      all.insert(all.end(), ds.test.begin(), ds.test.end());
      const ExperienceBuffer buf = ExperienceBuffer::load_jsonl(a_buffer, all);
      std::vector<int> ks;
      for (int k = 1; k <= a_max_k; ++k) ks.push_back(k);
      const auto curve = buffer_diversity_curve(buf, ks);
      std::ofstream out(resolve_out(a_out));
      out << "k,fraction\n";
      for (const auto& [k, frac] : curve) out << k << "," << frac << "\n";
      return 0;
    }

    if (exp->parsed()) {
      ExperimentSpec spec = default_experiment_spec();
      spec.n_seeds = x_seeds;
      const Dataset ds =
          x_data.empty() ? default_fixture_dataset(mode) : load_dataset(x_data);
      const ExperimentOutcome outcome = run_experiment(spec, ds, mode, true);
      const fs::path out_dir = resolve_out(x_out_dir);
      write_report(outcome.rows, out_dir, config_hash(std::string("default")));
      std::printf("%s", format_results_table(outcome.rows).c_str());
      std::printf("report written to %s\n", out_dir.string().c_str());
      return 0;
    }

    if (report->parsed()) {
      const std::vector<ResultRow> rows = load_results_json(p_results);
      std::printf("%s", format_results_table(rows).c_str());
      return 0;
    }

    if (tune->parsed()) {
      const Dataset ds =
          u_data.empty() ? default_fixture_dataset(mode) : load_dataset(u_data);
      const ExperimentSpec spec = default_experiment_spec();
      const bool oracle = u_setting == "oracle";
      const ExperienceBuffer base = build_fixed_buffers(
          ds.train,
          oracle ? RewardSetting::Oracle : RewardSetting::Underspecified,
          spec.n_spurious, spec.spurious_budget, 0, mode);
      Rng rng(u_seed);
      double best_dev = -1.0, best_lr = 0.0, best_tau = 0.0;
      std::printf("point,learning_rate,entropy_weight,train_acc,dev_acc\n");
      for (int p = 0; p < u_points; ++p) {
        TrainConfig cfg = oracle ? spec.oracle_cfg : spec.underspecified_cfg;
        cfg.learning_rate =
            std::exp(rng.uniform(std::log(1e-4), std::log(1e-1)));
        cfg.entropy_weight =
            std::exp(rng.uniform(std::log(1e-4), std::log(1e-1)));
        cfg.epochs = u_epochs;
        cfg.metrics_every = 0;
        cfg.seed = mix_seed({u_seed, static_cast<std::uint64_t>(p)});
        ExperienceBuffer buf = base;
        const TrainResult res = train_policy(ds.train, ds.val, buf, cfg,
                                             underspecified_reward_fn(),
                                             nullptr, mode);
        const double dev = evaluate(res.theta, ds.val, mode);
        std::printf("%d,%.6f,%.6f,%.4f,%.4f\n", p, cfg.learning_rate,
                    cfg.entropy_weight, evaluate(res.theta, ds.train, mode),
                    dev);
        if (dev > best_dev) {
          best_dev = dev;
          best_lr = cfg.learning_rate;
          best_tau = cfg.entropy_weight;
        }
      }
      std::printf("# best: dev %.4f at lr %.6f tau %.6f\n", best_dev, best_lr,
                  best_tau);
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
