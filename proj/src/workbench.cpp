#include "sfv/workbench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "sfv/initstate.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace sfv {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << text;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void require_path(const std::string& path, const char* what) {
  if (path.empty()) throw std::runtime_error(std::string(what) + " not set");
  if (!fs::exists(path))
    throw std::runtime_error(std::string(what) + " does not exist: " + path);
}

bool is_scripted_clip(const std::string& spec) {
  return spec == "walk" || spec == "hop" || spec == "backflip";
}

void apply_train_overrides(TrainConfig& t, const json& j) {
  if (j.contains("gamma")) t.gamma = j["gamma"].get<double>();
  if (j.contains("lambda")) t.lambda = j["lambda"].get<double>();
  if (j.contains("ppo_clip")) t.ppo_clip = j["ppo_clip"].get<double>();
  if (j.contains("action_std")) t.action_std = j["action_std"].get<double>();
  if (j.contains("policy_output_scale"))
    t.policy_output_scale = j["policy_output_scale"].get<double>();
  if (j.contains("momentum")) t.momentum = j["momentum"].get<double>();
  if (j.contains("policy_stepsize"))
    t.policy_stepsize = j["policy_stepsize"].get<double>();
  if (j.contains("value_stepsize"))
    t.value_stepsize = j["value_stepsize"].get<double>();
  if (j.contains("init_dist_stepsize"))
    t.init_dist_stepsize = j["init_dist_stepsize"].get<double>();
  if (j.contains("batch_samples"))
    t.batch_samples = j["batch_samples"].get<int>();
  if (j.contains("minibatch")) t.minibatch = j["minibatch"].get<int>();
  if (j.contains("epochs")) t.epochs = j["epochs"].get<int>();
  if (j.contains("init_dist_batch"))
    t.init_dist_batch = j["init_dist_batch"].get<int>();
  if (j.contains("policy_hidden"))
    t.policy_hidden = j["policy_hidden"].get<std::vector<int>>();
  if (j.contains("value_hidden"))
    t.value_hidden = j["value_hidden"].get<std::vector<int>>();
  if (j.contains("normalize_observations"))
    t.normalize_observations = j["normalize_observations"].get<bool>();
  if (j.contains("normalize_advantages"))
    t.normalize_advantages = j["normalize_advantages"].get<bool>();
  if (j.contains("init_dist_baseline"))
    t.init_dist_baseline = j["init_dist_baseline"].get<bool>();
  if (j.contains("threads")) t.threads = j["threads"].get<int>();
}

json train_config_to_json(const TrainConfig& t) {
  return json{{"gamma", t.gamma},
              {"lambda", t.lambda},
              {"ppo_clip", t.ppo_clip},
              {"action_std", t.action_std},
              {"policy_output_scale", t.policy_output_scale},
              {"momentum", t.momentum},
              {"policy_stepsize", t.policy_stepsize},
              {"value_stepsize", t.value_stepsize},
              {"init_dist_stepsize", t.init_dist_stepsize},
              {"batch_samples", t.batch_samples},
              {"minibatch", t.minibatch},
              {"epochs", t.epochs},
              {"init_dist_batch", t.init_dist_batch},
              {"policy_hidden", t.policy_hidden},
              {"value_hidden", t.value_hidden},
              {"normalize_observations", t.normalize_observations},
              {"normalize_advantages", t.normalize_advantages},
              {"init_dist_baseline", t.init_dist_baseline}};
}

// One deterministic evaluation episode of a restored policy.
struct EpisodeOutcome {
  double normalized_return = 0.0;
  int steps = 0;
};

EpisodeOutcome run_policy_episode(const CharacterModel& model,
                                  const ReferenceMotion& motion,
                                  const Checkpoint& ck,
                                  const GaussianPolicy& policy,
                                  const EpisodeConfig& episode_cfg,
                                  const RewardWeights& weights,
                                  std::uint64_t episode_seed,
                                  bool mean_actions) {
  ImitEnv env(model, motion, episode_cfg, weights);
  std::mt19937_64 rng(episode_seed);
  const InitSample init =
      sample_initial(ck.init_dist, model, motion, episode_cfg.contact, rng);
  ObsVector obs = env.reset(init.state, init.phase);
  double total = 0.0;
  int steps = 0;
  while (!env.done()) {
    ObsVector in = ck.config.normalize_observations
                       ? ck.normalizer.normalize(obs)
                       : obs;
    PdTargets action =
        mean_actions ? policy.mean_action(in) : policy.sample(in, rng);
    auto step = env.env_step(action);
    total += step.reward;
    obs = std::move(step.obs);
    ++steps;
  }
  EpisodeOutcome out;
  out.steps = steps;
  out.normalized_return = total / std::max(1, env.horizon_steps());
  return out;
}

// Runs a list of independent jobs on the worker pool.
void run_jobs(const std::vector<std::function<void()>>& jobs) {
  const int workers = std::max(1, worker_count());
  if (workers == 1 || jobs.size() <= 1) {
    for (const auto& job : jobs) job();
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < std::min<std::size_t>(workers, jobs.size()); ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= jobs.size()) return;
        jobs[i]();
      }
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace

void ExperimentConfig::validate() const {
  if (preset != "paper" && preset != "desk")
    throw std::runtime_error("unknown preset: " + preset);
  if (init_mode != "fsi" && init_mode != "rsi" && init_mode != "asi")
    throw std::runtime_error("unknown init mode: " + init_mode);
  if (seeds.empty()) throw std::runtime_error("seeds must be non-empty");
  if (k < 1) throw std::runtime_error("k must be >= 1");
  if (iterations < 1) throw std::runtime_error("iterations must be >= 1");
  require_path(character_path, "character path");
  if (!motion.empty() && !is_scripted_clip(motion))
    require_path(motion, "motion path");
  if (!predictions_path.empty()) require_path(predictions_path, "predictions path");
  if (!query_path.empty()) require_path(query_path, "query path");
  for (const auto& entry : library)
    if (!is_scripted_clip(entry.motion))
      require_path(entry.motion, "library motion path");
  train.validate();
  episode.validate();
  reward.validate();
}

TrainConfig preset_train_config(const std::string& preset) {
  if (preset == "paper") return TrainConfig{};
  if (preset == "desk") {
    TrainConfig t;
    t.policy_hidden = {128, 64};
    t.value_hidden = {128, 64};
    t.batch_samples = 2048;
    t.minibatch = 256;
    t.epochs = 1;
    t.policy_stepsize = 2e-4;
    t.value_stepsize = 5e-3;
    t.init_dist_stepsize = 1e-3;
    t.init_dist_batch = 200;
    t.threads = worker_count();
    return t;
  }
  throw std::runtime_error("unknown preset: " + preset);
}

ExperimentConfig experiment_config_from_json(const json& j) {
  ExperimentConfig cfg;
  if (j.contains("preset")) cfg.preset = j["preset"].get<std::string>();
  cfg.train = preset_train_config(cfg.preset);
  if (j.contains("character"))
    cfg.character_path = j["character"].get<std::string>();
  if (j.contains("motion")) cfg.motion = j["motion"].get<std::string>();
  if (j.contains("predictions"))
    cfg.predictions_path = j["predictions"].get<std::string>();
  if (j.contains("checkpoint"))
    cfg.checkpoint_path = j["checkpoint"].get<std::string>();
  if (j.contains("query")) cfg.query_path = j["query"].get<std::string>();
  if (j.contains("duration")) cfg.duration = j["duration"].get<double>();
  if (j.contains("init_mode")) cfg.init_mode = j["init_mode"].get<std::string>();
  if (j.contains("k")) cfg.k = j["k"].get<int>();
  if (j.contains("seeds"))
    cfg.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
  if (j.contains("iterations")) cfg.iterations = j["iterations"].get<int>();
  if (j.contains("eval_episodes"))
    cfg.eval_episodes = j["eval_episodes"].get<int>();
  if (j.contains("checkpoint_every"))
    cfg.checkpoint_every = j["checkpoint_every"].get<int>();
  if (j.contains("k_sweep")) cfg.k_sweep = j["k_sweep"].get<std::vector<int>>();
  if (j.contains("horizon")) cfg.episode.horizon = j["horizon"].get<double>();
  if (j.contains("allow_torso_contact"))
    cfg.episode.allow_torso_contact = j["allow_torso_contact"].get<bool>();
  if (j.contains("library")) {
    for (const json& e : j["library"]) {
      ExperimentConfig::LibraryRef ref;
      ref.name = e.at("name").get<std::string>();
      ref.motion = e.at("motion").get<std::string>();
      ref.checkpoint = e.at("checkpoint").get<std::string>();
      cfg.library.push_back(std::move(ref));
    }
  }
  if (j.contains("recon")) {
    const json& r = j["recon"];
    if (r.contains("w_2d")) cfg.recon.w_2d = r["w_2d"].get<double>();
    if (r.contains("w_3d")) cfg.recon.w_3d = r["w_3d"].get<double>();
    if (r.contains("w_sm")) cfg.recon.w_sm = r["w_sm"].get<double>();
    if (r.contains("max_iters")) cfg.recon.max_iters = r["max_iters"].get<int>();
    if (r.contains("tol")) cfg.recon.tol = r["tol"].get<double>();
  }
  if (j.contains("train")) apply_train_overrides(cfg.train, j["train"]);
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed config JSON " + path + ": " + e.what());
  }
  ExperimentConfig cfg = experiment_config_from_json(j);
  cfg.validate();
  return cfg;
}

ReferenceMotion resolve_motion(const CharacterModel& model,
                               const std::string& spec) {
  if (spec == "walk") return make_walk_cycle(model);
  if (spec == "hop") return make_hop(model);
  if (spec == "backflip") return make_backflip(model);
  if (spec.empty()) throw std::runtime_error("no motion specified");
  return load_motion(spec);
}

InitStateDist make_init_dist(const std::string& mode,
                             const CharacterModel& model,
                             const ReferenceMotion& motion, int k) {
  if (mode == "fsi") return make_fsi(model, motion);
  if (mode == "rsi") return make_rsi();
  if (mode == "asi") return make_asi(model, motion, k);
  throw std::runtime_error("unknown init mode: " + mode);
}

int worker_count() {
  if (const char* env = std::getenv("SFVLAB_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

EvalReport evaluate_checkpoint(const CharacterModel& model,
                               const ReferenceMotion& motion,
                               const Checkpoint& ck,
                               const EpisodeConfig& episode_cfg,
                               const RewardWeights& weights, int episodes,
                               std::uint64_t seed, bool mean_actions) {
  if (episodes < 1) throw std::runtime_error("episodes must be >= 1");
  GaussianPolicy policy(ck.policy_layers, ck.action_std, 0);
  policy.net().set_params(ck.policy_params);
  EvalReport report;
  report.episodes = episodes;
  report.min_normalized_return = std::numeric_limits<double>::infinity();
  report.max_normalized_return = -std::numeric_limits<double>::infinity();
  double sum = 0.0, len = 0.0;
  for (int e = 0; e < episodes; ++e) {
    const auto outcome = run_policy_episode(
        model, motion, ck, policy, episode_cfg, weights,
        splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(e))),
        mean_actions);
    sum += outcome.normalized_return;
    len += outcome.steps;
    report.min_normalized_return =
        std::min(report.min_normalized_return, outcome.normalized_return);
    report.max_normalized_return =
        std::max(report.max_normalized_return, outcome.normalized_return);
  }
  report.mean_normalized_return = sum / episodes;
  report.avg_episode_len = len / episodes;
  return report;
}

json eval_report_to_json(const EvalReport& report) {
  return json{{"episodes", report.episodes},
              {"mean_normalized_return", report.mean_normalized_return},
              {"min_normalized_return", report.min_normalized_return},
              {"max_normalized_return", report.max_normalized_return},
              {"avg_episode_len", report.avg_episode_len}};
}

int cmd_reconstruct(const ExperimentConfig& cfg, std::uint64_t /*seed*/,
                    const std::string& out_dir) {
  require_path(cfg.predictions_path, "predictions path");
  const CharacterModel model = load_character(cfg.character_path);
  const PosePredictionSet preds = load_predictions(cfg.predictions_path);
  fs::create_directories(out_dir);

  std::vector<ReconIterate> trace;
  const ReferenceMotion motion = reconstruct(model, preds, cfg.recon, &trace);
  save_motion(motion, out_dir + "/motion.json");

  std::ostringstream csv;
  csv << "iter,l_2d,l_3d,l_sm,l_rec\n";
  for (const ReconIterate& it : trace)
    csv << it.iter << ',' << format_double(it.l_2d) << ','
        << format_double(it.l_3d) << ',' << format_double(it.l_sm) << ','
        << format_double(it.l_rec) << '\n';
  write_text(out_dir + "/losses.csv", csv.str());
  return 0;
}

namespace {

// One training run: metrics CSV, periodic checkpoints and a final
// multi-episode evaluation. Resumes from checkpoint_last.ckpt when the
// output directory already holds one.
EvalReport run_training(const ExperimentConfig& cfg, const std::string& mode,
                        int k, std::uint64_t seed, const std::string& out_dir) {
  const CharacterModel model = load_character(cfg.character_path);
  const ReferenceMotion motion = resolve_motion(model, cfg.motion);
  fs::create_directories(out_dir);

  const InitStateDist init = make_init_dist(mode, model, motion, k);
  Trainer trainer(model, motion, cfg.episode, cfg.reward, cfg.train, init,
                  seed);

  const std::string last_path = out_dir + "/checkpoint_last.ckpt";
  const std::string metrics_path = out_dir + "/metrics.csv";
  std::vector<std::string> rows;
  if (fs::exists(last_path)) {
    trainer.load_checkpoint(last_path);
    // Keep only metric rows from before the resumed iteration.
    if (fs::exists(metrics_path)) {
      std::istringstream in(read_text(metrics_path));
      std::string line;
      std::getline(in, line);  // header
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (std::stoi(line.substr(0, line.find(','))) <= trainer.iteration())
          rows.push_back(line);
      }
    }
  }

  json meta{{"command", "train"},
            {"preset", cfg.preset},
            {"character", cfg.character_path},
            {"motion", cfg.motion},
            {"init_mode", mode},
            {"k", k},
            {"seed", seed},
            {"iterations", cfg.iterations},
            {"train", train_config_to_json(cfg.train)}};
  write_text(out_dir + "/run.json", meta.dump(2) + "\n");

  auto write_metrics = [&] {
    std::ostringstream csv;
    csv << "iteration,samples,avg_normalized_return,policy_loss,value_loss,"
           "avg_episode_len\n";
    for (const std::string& row : rows) csv << row << '\n';
    write_text(metrics_path, csv.str());
  };

  while (trainer.iteration() < cfg.iterations) {
    const IterationMetrics m = trainer.train_iteration();
    std::ostringstream row;
    row << m.iteration << ',' << m.total_samples << ','
        << format_double(m.avg_normalized_return) << ','
        << format_double(m.policy_loss) << ',' << format_double(m.value_loss)
        << ',' << format_double(m.avg_episode_len);
    rows.push_back(row.str());
    write_metrics();
    const bool last = trainer.iteration() >= cfg.iterations;
    if (last || (cfg.checkpoint_every > 0 &&
                 m.iteration % cfg.checkpoint_every == 0)) {
      std::ostringstream name;
      name << out_dir << "/checkpoint_" << m.iteration << ".ckpt";
      trainer.save_checkpoint(name.str());
      trainer.save_checkpoint(last_path);
    }
  }

  const Checkpoint ck = load_checkpoint(last_path);
  const EvalReport report =
      evaluate_checkpoint(model, motion, ck, cfg.episode, cfg.reward,
                          cfg.eval_episodes, seed, true);
  write_text(out_dir + "/eval.json", eval_report_to_json(report).dump(2) + "\n");
  return report;
}

}  // namespace

int cmd_train(const ExperimentConfig& cfg, std::uint64_t seed,
              const std::string& out_dir) {
  run_training(cfg, cfg.init_mode, cfg.k, seed, out_dir);
  return 0;
}

int cmd_eval(const ExperimentConfig& cfg, std::uint64_t seed,
             const std::string& out_dir) {
  require_path(cfg.checkpoint_path, "checkpoint path");
  const CharacterModel model = load_character(cfg.character_path);
  const ReferenceMotion motion = resolve_motion(model, cfg.motion);
  const Checkpoint ck = load_checkpoint(cfg.checkpoint_path);
  const EvalReport report =
      evaluate_checkpoint(model, motion, ck, cfg.episode, cfg.reward,
                          cfg.eval_episodes, seed, true);
  fs::create_directories(out_dir);
  write_text(out_dir + "/eval.json", eval_report_to_json(report).dump(2) + "\n");
  return 0;
}

int cmd_ablate(const ExperimentConfig& cfg, std::uint64_t seed,
               const std::string& out_dir) {
  fs::create_directories(out_dir);
  struct Run {
    std::string label;
    std::string mode;
    int k;
    std::uint64_t seed;
    double final_return = std::numeric_limits<double>::quiet_NaN();
    std::string error;
  };

  std::vector<Run> runs;
  const bool k_sweep = !cfg.k_sweep.empty();
  if (k_sweep) {
    for (int k : cfg.k_sweep)
      for (std::uint64_t s : cfg.seeds)
        runs.push_back({"k" + std::to_string(k) + "_seed" + std::to_string(s),
                        "asi", k, s});
  } else {
    for (const std::string& mode : {"fsi", "rsi", "asi"})
      for (std::uint64_t s : cfg.seeds)
        runs.push_back({mode + "_seed" + std::to_string(s), mode, cfg.k, s});
  }

  std::vector<std::function<void()>> jobs;
  for (Run& run : runs) {
    jobs.push_back([&cfg, &run, seed, out_dir] {
      try {
        ExperimentConfig local = cfg;
        // Run-level parallelism: keep each run single-threaded.
        local.train.threads = 1;
        const EvalReport report =
            run_training(local, run.mode, run.k, seed ^ run.seed,
                         out_dir + "/" + run.label);
        run.final_return = report.mean_normalized_return;
      } catch (const std::exception& e) {
        run.error = e.what();
      }
    });
  }
  run_jobs(jobs);

  std::ostringstream errors;
  for (const Run& run : runs)
    if (!run.error.empty())
      errors << run.label << ": " << run.error << '\n';
  if (!errors.str().empty()) write_text(out_dir + "/errors.txt", errors.str());

  auto mean_over = [&](const std::string& mode, int k) {
    double sum = 0.0;
    int n = 0;
    for (const Run& run : runs)
      if (run.mode == mode && run.k == k && run.error.empty()) {
        sum += run.final_return;
        ++n;
      }
    return n == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / n;
  };

  std::ostringstream csv;
  if (k_sweep) {
    csv << "k,mean_final_return\n";
    for (int k : cfg.k_sweep)
      csv << k << ',' << format_double(mean_over("asi", k)) << '\n';
    write_text(out_dir + "/ksweep_summary.csv", csv.str());
  } else {
    csv << "skill,fsi,rsi,asi\n";
    csv << cfg.motion << ',' << format_double(mean_over("fsi", cfg.k)) << ','
        << format_double(mean_over("rsi", cfg.k)) << ','
        << format_double(mean_over("asi", cfg.k)) << '\n';
    write_text(out_dir + "/summary.csv", csv.str());
  }
  return 0;
}

int cmd_complete(const ExperimentConfig& cfg, std::uint64_t /*seed*/,
                 const std::string& out_dir) {
  require_path(cfg.query_path, "query path");
  if (cfg.library.empty())
    throw std::runtime_error("completion requires a non-empty library");
  const CharacterModel model = load_character(cfg.character_path);

  MotionLibrary library;
  for (const auto& ref : cfg.library) {
    MotionLibraryEntry entry;
    entry.name = ref.name;
    entry.motion = resolve_motion(model, ref.motion);
    entry.checkpoint_path = ref.checkpoint;
    library.entries.push_back(std::move(entry));
  }
  library.validate();

  const ReferenceMotion query_clip = load_motion(cfg.query_path);
  if (query_clip.frames.empty())
    throw std::runtime_error("query motion has no frames: " + cfg.query_path);
  const Pose& query = query_clip.frames.front();

  const CompletionResult result = complete_motion(
      model, library, query, cfg.duration, cfg.episode, cfg.reward);

  json j;
  j["match"] = {
      {"entry", library.entries[result.match.motion_index].name},
      {"motion_index", result.match.motion_index},
      {"frame_index", result.match.frame_index},
      {"distance", result.match.distance}};
  j["phase"] = result.phase;
  j["normalized_return"] = result.normalized_return;
  j["rewards"] = result.rewards;
  j["states"] = json::array();
  for (const SimState& s : result.states) {
    json js;
    js["q"] = std::vector<double>(s.q.data(), s.q.data() + s.q.size());
    js["qdot"] =
        std::vector<double>(s.qdot.data(), s.qdot.data() + s.qdot.size());
    j["states"].push_back(std::move(js));
  }
  fs::create_directories(out_dir);
  write_text(out_dir + "/completion.json", j.dump(2) + "\n");
  return 0;
}

namespace {

void check_schema(const json& value, const json& schema,
                  const std::string& path) {
  if (schema.contains("type")) {
    const std::string type = schema["type"].get<std::string>();
    bool ok = (type == "object" && value.is_object()) ||
              (type == "array" && value.is_array()) ||
              (type == "string" && value.is_string()) ||
              (type == "number" && value.is_number()) ||
              (type == "integer" && value.is_number_integer()) ||
              (type == "boolean" && value.is_boolean());
    if (!ok)
      throw std::runtime_error("schema violation at " + path + ": expected " +
                               type);
  }
  if (schema.contains("enum")) {
    bool found = false;
    for (const json& opt : schema["enum"])
      if (opt == value) found = true;
    if (!found)
      throw std::runtime_error("schema violation at " + path +
                               ": value not in enum");
  }
  if (value.is_object()) {
    if (schema.contains("required"))
      for (const json& name : schema["required"])
        if (!value.contains(name.get<std::string>()))
          throw std::runtime_error("schema violation at " + path +
                                   ": missing required field '" +
                                   name.get<std::string>() + "'");
    if (schema.contains("properties"))
      for (const auto& [name, sub] : schema["properties"].items())
        if (value.contains(name))
          check_schema(value[name], sub, path + "/" + name);
  }
  if (value.is_array()) {
    if (schema.contains("minItems") &&
        value.size() < schema["minItems"].get<std::size_t>())
      throw std::runtime_error("schema violation at " + path +
                               ": too few items");
    if (schema.contains("items"))
      for (std::size_t i = 0; i < value.size(); ++i)
        check_schema(value[i], schema["items"],
                     path + "/" + std::to_string(i));
  }
}

}  // namespace

void validate_against_schema(const json& value, const json& schema) {
  check_schema(value, schema, "");
}

void validate_csv_columns(const std::string& csv_path, const json& schema) {
  const std::string text = read_text(csv_path);
  const std::string header = text.substr(0, text.find('\n'));
  std::vector<std::string> columns;
  std::stringstream ss(header);
  std::string col;
  while (std::getline(ss, col, ',')) columns.push_back(col);
  const auto expected = schema.at("columns").get<std::vector<std::string>>();
  if (columns != expected)
    throw std::runtime_error("CSV header mismatch in " + csv_path +
                             ": got '" + header + "'");
}

}  // namespace sfv
