#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "sfv/rlcore.hpp"

// Checkpoint layout: 8-byte magic, little-endian uint64 header length,
// JSON header, then one contiguous little-endian float64 block holding
// the policy parameters followed by the value parameters.

namespace sfv {

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'S', 'F', 'V', 'C', 'K', 'P', 'T', '1'};

json vec_to_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd vec_from_json(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(),
                                           static_cast<Eigen::Index>(values.size()));
}

json sim_state_to_json(const SimState& s) {
  return {{"q", vec_to_json(s.q)}, {"qdot", vec_to_json(s.qdot)}};
}

SimState sim_state_from_json(const json& j) {
  SimState s;
  s.q = vec_from_json(j.at("q"));
  s.qdot = vec_from_json(j.at("qdot"));
  return s;
}

json init_dist_to_json(const InitStateDist& d) {
  json j;
  switch (d.mode) {
    case InitMode::FSI: j["mode"] = "fsi"; break;
    case InitMode::RSI: j["mode"] = "rsi"; break;
    case InitMode::ASI: j["mode"] = "asi"; break;
  }
  j["fixed_state"] = sim_state_to_json(d.fixed_state);
  j["fixed_phase"] = d.fixed_phase;
  j["phases"] = d.phases;
  j["means"] = json::array();
  j["log_stds"] = json::array();
  for (const auto& m : d.means) j["means"].push_back(vec_to_json(m));
  for (const auto& s : d.log_stds) j["log_stds"].push_back(vec_to_json(s));
  j["use_baseline"] = d.use_baseline;
  j["baseline_rate"] = d.baseline_rate;
  j["baseline"] = d.baseline;
  j["baseline_ready"] = d.baseline_ready;
  return j;
}

InitStateDist init_dist_from_json(const json& j) {
  InitStateDist d;
  const std::string mode = j.at("mode").get<std::string>();
  if (mode == "fsi") d.mode = InitMode::FSI;
  else if (mode == "rsi") d.mode = InitMode::RSI;
  else if (mode == "asi") d.mode = InitMode::ASI;
  else throw std::runtime_error("unknown init mode: " + mode);
  d.fixed_state = sim_state_from_json(j.at("fixed_state"));
  d.fixed_phase = j.at("fixed_phase").get<double>();
  d.phases = j.at("phases").get<std::vector<double>>();
  for (const auto& m : j.at("means")) d.means.push_back(vec_from_json(m));
  for (const auto& s : j.at("log_stds"))
    d.log_stds.push_back(vec_from_json(s));
  d.use_baseline = j.at("use_baseline").get<bool>();
  d.baseline_rate = j.at("baseline_rate").get<double>();
  d.baseline = j.at("baseline").get<double>();
  d.baseline_ready = j.at("baseline_ready").get<bool>();
  return d;
}

json train_config_to_json(const TrainConfig& c) {
  return {{"gamma", c.gamma},
          {"lambda", c.lambda},
          {"ppo_clip", c.ppo_clip},
          {"action_std", c.action_std},
          {"policy_output_scale", c.policy_output_scale},
          {"center_actions_on_reference", c.center_actions_on_reference},
          {"momentum", c.momentum},
          {"policy_stepsize", c.policy_stepsize},
          {"value_stepsize", c.value_stepsize},
          {"init_dist_stepsize", c.init_dist_stepsize},
          {"batch_samples", c.batch_samples},
          {"minibatch", c.minibatch},
          {"epochs", c.epochs},
          {"init_dist_batch", c.init_dist_batch},
          {"policy_hidden", c.policy_hidden},
          {"value_hidden", c.value_hidden},
          {"normalize_observations", c.normalize_observations},
          {"normalize_advantages", c.normalize_advantages},
          {"init_dist_baseline", c.init_dist_baseline}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  c.gamma = j.at("gamma").get<double>();
  c.lambda = j.at("lambda").get<double>();
  c.ppo_clip = j.at("ppo_clip").get<double>();
  c.action_std = j.at("action_std").get<double>();
  c.policy_output_scale = j.at("policy_output_scale").get<double>();
  c.center_actions_on_reference =
      j.at("center_actions_on_reference").get<bool>();
  c.momentum = j.at("momentum").get<double>();
  c.policy_stepsize = j.at("policy_stepsize").get<double>();
  c.value_stepsize = j.at("value_stepsize").get<double>();
  c.init_dist_stepsize = j.at("init_dist_stepsize").get<double>();
  c.batch_samples = j.at("batch_samples").get<int>();
  c.minibatch = j.at("minibatch").get<int>();
  c.epochs = j.at("epochs").get<int>();
  c.init_dist_batch = j.at("init_dist_batch").get<int>();
  c.policy_hidden = j.at("policy_hidden").get<std::vector<int>>();
  c.value_hidden = j.at("value_hidden").get<std::vector<int>>();
  c.normalize_observations = j.at("normalize_observations").get<bool>();
  c.normalize_advantages = j.at("normalize_advantages").get<bool>();
  c.init_dist_baseline = j.at("init_dist_baseline").get<bool>();
  // The worker-pool width is a runtime resource knob, not model state; it
  // is deliberately absent from checkpoints so artifacts stay
  // byte-identical across machines with different core counts.
  return c;
}

void write_f64_le(std::ostream& out, const Eigen::VectorXd& v) {
  static_assert(sizeof(double) == 8);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    double x = v[i];
    unsigned char bytes[8];
    std::memcpy(bytes, &x, 8);
    if constexpr (std::endian::native == std::endian::big)
      std::reverse(std::begin(bytes), std::end(bytes));
    out.write(reinterpret_cast<const char*>(bytes), 8);
  }
}

Eigen::VectorXd read_f64_le(std::istream& in, Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    unsigned char bytes[8];
    in.read(reinterpret_cast<char*>(bytes), 8);
    if (!in) throw std::runtime_error("checkpoint parameter block truncated");
    if constexpr (std::endian::native == std::endian::big)
      std::reverse(std::begin(bytes), std::end(bytes));
    double x;
    std::memcpy(&x, bytes, 8);
    v[i] = x;
  }
  return v;
}

}  // namespace

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  json header;
  header["format"] = "sfv-checkpoint";
  header["version"] = 1;
  header["policy_layers"] = ck.policy_layers;
  header["value_layers"] = ck.value_layers;
  header["action_std"] = ck.action_std;
  header["iteration"] = ck.iteration;
  header["total_samples"] = ck.total_samples;
  header["episode_counter"] = ck.episode_counter;
  header["normalizer"] = {{"count", ck.normalizer.count()},
                          {"mean", vec_to_json(ck.normalizer.mean())},
                          {"m2", vec_to_json(ck.normalizer.m2())}};
  header["init_dist"] = init_dist_to_json(ck.init_dist);
  header["config"] = train_config_to_json(ck.config);
  header["policy_param_count"] = ck.policy_params.size();
  header["value_param_count"] = ck.value_params.size();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  const std::string text = header.dump();
  out.write(kMagic, 8);
  std::uint64_t len = text.size();
  unsigned char len_bytes[8];
  for (int i = 0; i < 8; ++i) len_bytes[i] = (len >> (8 * i)) & 0xff;
  out.write(reinterpret_cast<const char*>(len_bytes), 8);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  write_f64_le(out, ck.policy_params);
  write_f64_le(out, ck.value_params);
  if (!out) throw std::runtime_error("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error("not a checkpoint file: " + path);
  unsigned char len_bytes[8];
  in.read(reinterpret_cast<char*>(len_bytes), 8);
  if (!in) throw std::runtime_error("checkpoint header truncated: " + path);
  std::uint64_t len = 0;
  for (int i = 0; i < 8; ++i)
    len |= static_cast<std::uint64_t>(len_bytes[i]) << (8 * i);
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw std::runtime_error("checkpoint header truncated: " + path);

  const json header = json::parse(text);
  Checkpoint ck;
  ck.policy_layers = header.at("policy_layers").get<std::vector<int>>();
  ck.value_layers = header.at("value_layers").get<std::vector<int>>();
  ck.action_std = header.at("action_std").get<double>();
  ck.iteration = header.at("iteration").get<int>();
  ck.total_samples = header.at("total_samples").get<std::int64_t>();
  ck.episode_counter = header.at("episode_counter").get<std::int64_t>();
  ck.normalizer.set_state(header.at("normalizer").at("count").get<std::int64_t>(),
                          vec_from_json(header.at("normalizer").at("mean")),
                          vec_from_json(header.at("normalizer").at("m2")));
  ck.init_dist = init_dist_from_json(header.at("init_dist"));
  ck.config = train_config_from_json(header.at("config"));
  const auto n_policy = header.at("policy_param_count").get<Eigen::Index>();
  const auto n_value = header.at("value_param_count").get<Eigen::Index>();
  ck.policy_params = read_f64_le(in, n_policy);
  ck.value_params = read_f64_le(in, n_value);
  return ck;
}

}  // namespace sfv
