#include "irse/config.hpp"

#include <fstream>
#include <functional>
#include <map>

#include "irse/checkpoint.hpp"

namespace irse {

using nlohmann::json;

namespace {

using Setters = std::map<std::string, std::function<void(const json&)>>;

void apply(const json& j, const std::string& section, const Setters& setters) {
  if (!j.is_object()) throw ConfigError(section + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    auto it = setters.find(key);
    std::string path = section.empty() ? key : section + "." + key;
    if (it == setters.end()) throw ConfigError("unknown config key '" + path + "'");
    try {
      it->second(value);
    } catch (const json::exception& e) {
      throw ConfigError(path + ": " + e.what());
    }
  }
}

template <typename T>
std::function<void(const json&)> set(T& target) {
  return [&target](const json& v) { target = v.get<T>(); };
}

}  // namespace

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  Setters top = {
      {"seed", set(c.seed)},
      {"dims",
       [&](const json& v) {
         c.dims = dims_from_json(v);
         c.dims_explicit = true;
       }},
      {"train",
       [&](const json& v) {
         TrainConfig& t = c.train;
         apply(v, "train",
               {{"epochs_a", set(t.epochs_a)}, {"epochs_b", set(t.epochs_b)}, {"epochs_c", set(t.epochs_c)},
                {"batch_size", set(t.batch_size)}, {"dropout", set(t.dropout)}, {"l2", set(t.l2)},
                {"eta", set(t.eta)}, {"learning_rate", set(t.learning_rate)}, {"rho", set(t.rho)},
                {"epsilon", set(t.epsilon)}, {"patience", set(t.patience)}, {"reset_min", set(t.reset_min)},
                {"reset_max", set(t.reset_max)}, {"freeze_encoder", set(t.freeze_encoder)}});
       }},
      {"refine",
       [&](const json& v) {
         apply(v, "refine",
               {{"delta_min", set(c.refine.delta_min)}, {"delta_max", set(c.refine.delta_max)},
                {"k_max", set(c.refine.k_max)}});
       }},
      {"synth",
       [&](const json& v) {
         SynthConfig& s = c.synth;
         apply(v, "synth",
               {{"n_paragraphs", set(s.n_paragraphs)}, {"min_sentences", set(s.min_sentences)},
                {"max_sentences", set(s.max_sentences)}, {"entity_pool", set(s.entity_pool)},
                {"min_entities", set(s.min_entities)}, {"max_entities", set(s.max_entities)},
                {"cue_probability", set(s.cue_probability)}, {"seed", set(s.seed)}});
       }},
      {"eval",
       [&](const json& v) {
         apply(v, "eval",
               {{"decode", [&](const json& d) { c.eval.decode = decode_mode_from_string(d.get<std::string>()); }},
                {"beam_width", set(c.eval.beam_width)}, {"order_seed", set(c.eval.order_seed)}});
       }},
      {"split",
       [&](const json& v) {
         apply(v, "split", {{"ratios", [&](const json& r) {
                              auto ratios = r.get<std::vector<double>>();
                              if (ratios.size() != 3) throw ConfigError("split.ratios: expected three numbers");
                              std::copy(ratios.begin(), ratios.end(), c.split_ratios.begin());
                            }}});
       }},
      {"paths",
       [&](const json& v) {
         apply(v, "paths",
               {{"corpus", set(c.paths.corpus)}, {"output_dir", set(c.paths.output_dir)},
                {"embeddings", set(c.paths.embeddings)}});
       }},
  };
  apply(j, "", top);
  c.validate();
  return c;
}

json RunConfig::to_json() const {
  const TrainConfig& t = train;
  return {{"seed", seed},
          {"dims", dims_to_json(dims)},
          {"train",
           {{"epochs_a", t.epochs_a}, {"epochs_b", t.epochs_b}, {"epochs_c", t.epochs_c},
            {"batch_size", t.batch_size}, {"dropout", t.dropout}, {"l2", t.l2}, {"eta", t.eta},
            {"learning_rate", t.learning_rate}, {"rho", t.rho}, {"epsilon", t.epsilon},
            {"patience", t.patience}, {"reset_min", t.reset_min}, {"reset_max", t.reset_max},
            {"freeze_encoder", t.freeze_encoder}}},
          {"refine", {{"delta_min", refine.delta_min}, {"delta_max", refine.delta_max}, {"k_max", refine.k_max}}},
          {"synth",
           {{"n_paragraphs", synth.n_paragraphs}, {"min_sentences", synth.min_sentences},
            {"max_sentences", synth.max_sentences}, {"entity_pool", synth.entity_pool},
            {"min_entities", synth.min_entities}, {"max_entities", synth.max_entities},
            {"cue_probability", synth.cue_probability}, {"seed", synth.seed}}},
          {"eval", {{"decode", to_string(eval.decode)}, {"beam_width", eval.beam_width}, {"order_seed", eval.order_seed}}},
          {"split", {{"ratios", split_ratios}}},
          {"paths", {{"corpus", paths.corpus}, {"output_dir", paths.output_dir}, {"embeddings", paths.embeddings}}}};
}

void RunConfig::validate() const {
  dims.validate();
  train.validate();
  refine.validate();
  synth.validate();
  if (eval.beam_width < 1) throw ConfigError("eval.beam_width must be >= 1");
  for (double r : split_ratios) {
    if (!(r > 0.0)) throw ConfigError("split.ratios must be positive");
  }
}

TrainConfig RunConfig::effective_train() const {
  TrainConfig t = train;
  t.seed = seed;
  return t;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  return RunConfig::from_json(j);
}

}  // namespace irse
