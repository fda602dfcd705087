#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "sfv/completion.hpp"
#include "sfv/recon.hpp"
#include "sfv/rlcore.hpp"

// Experiment orchestration: JSON experiment configs with named
// hyperparameter presets, the five CLI commands (reconstruct, train,
// eval, ablate, complete), and lightweight schema validation for every
// emitted artifact. All commands are deterministic given config + seed.

namespace sfv {

struct ExperimentConfig {
  std::string preset = "desk";  // "paper" or "desk"
  std::string character_path;
  // Reference motion: a Motion JSON path or one of the scripted clip
  // names "walk", "hop", "backflip".
  std::string motion;
  std::string predictions_path;  // reconstruct input
  std::string checkpoint_path;   // eval input
  std::string query_path;        // complete input: Motion JSON, frame 0
  double duration = 2.0;         // complete rollout length, seconds

  std::string init_mode = "asi";  // "fsi", "rsi" or "asi"
  int k = 10;                     // ASI mixture components
  std::vector<std::uint64_t> seeds = {0};
  int iterations = 100;
  int eval_episodes = 32;
  int checkpoint_every = 25;
  std::vector<int> k_sweep;  // non-empty switches ablate to a k sweep

  struct LibraryRef {
    std::string name;
    std::string motion;      // path or scripted clip name
    std::string checkpoint;  // policy checkpoint path
  };
  std::vector<LibraryRef> library;  // complete input

  EpisodeConfig episode;
  RewardWeights reward;
  ReconConfig recon;
  TrainConfig train;

  // Checks referenced paths exist and seeds is non-empty.
  void validate() const;
};

// Hyperparameter presets: "paper" is the published full-scale
// configuration, "desk" a scaled-down one tuned for the bundled planar
// characters on a single workstation.
TrainConfig preset_train_config(const std::string& preset);

ExperimentConfig load_experiment_config(const std::string& path);
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);

// Loads a Motion JSON, or generates the named scripted clip.
ReferenceMotion resolve_motion(const CharacterModel& model,
                               const std::string& spec);

InitStateDist make_init_dist(const std::string& mode,
                             const CharacterModel& model,
                             const ReferenceMotion& motion, int k);

// Worker-pool width: SFVLAB_THREADS when set, else hardware concurrency.
int worker_count();

struct EvalReport {
  int episodes = 0;
  double mean_normalized_return = 0.0;
  double min_normalized_return = 0.0;
  double max_normalized_return = 0.0;
  double avg_episode_len = 0.0;
};

// Deterministic per-episode evaluation of a saved policy; episode e uses
// an RNG stream derived from (seed, e) so results are order-independent.
EvalReport evaluate_checkpoint(const CharacterModel& model,
                               const ReferenceMotion& motion,
                               const Checkpoint& ck,
                               const EpisodeConfig& episode_cfg,
                               const RewardWeights& weights, int episodes,
                               std::uint64_t seed, bool mean_actions = true);

nlohmann::json eval_report_to_json(const EvalReport& report);

// Commands. Each writes its artifacts under out_dir (created if missing)
// and returns 0 on success; failures throw std::runtime_error.
int cmd_reconstruct(const ExperimentConfig& cfg, std::uint64_t seed,
                    const std::string& out_dir);
int cmd_train(const ExperimentConfig& cfg, std::uint64_t seed,
              const std::string& out_dir);
int cmd_eval(const ExperimentConfig& cfg, std::uint64_t seed,
             const std::string& out_dir);
int cmd_ablate(const ExperimentConfig& cfg, std::uint64_t seed,
               const std::string& out_dir);
int cmd_complete(const ExperimentConfig& cfg, std::uint64_t seed,
                 const std::string& out_dir);

// Minimal JSON-schema checker covering the subset the shipped schemas
// use: type, properties, required, items, enum, minItems. Throws with a
// field path on the first violation.
void validate_against_schema(const nlohmann::json& value,
                             const nlohmann::json& schema);

// CSV analogue: the schema lists the exact header columns.
void validate_csv_columns(const std::string& csv_path,
                          const nlohmann::json& schema);

}  // namespace sfv
