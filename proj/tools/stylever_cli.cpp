// stylever: synthesize corpora, extract features, train style models, verify
// claims and run the evaluation protocol.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stylever/auth.hpp"
#include "stylever/config.hpp"
#include "stylever/corpus.hpp"
#include "stylever/error.hpp"
#include "stylever/eval.hpp"
#include "stylever/lpc.hpp"
#include "stylever/model_io.hpp"
#include "stylever/prosody.hpp"
#include "stylever/sphmm.hpp"

namespace fs = std::filesystem;
using namespace stylever;

namespace {

constexpr int kUsageError = 1;
constexpr int kDataError = 2;

struct ExperimentFlags {
  std::string corpus;
  std::string out;
  std::string config;
  std::string engine;
  std::string scenario;
  std::optional<double> alpha;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  bool multi_speaker = false;
};

void add_experiment_flags(CLI::App* cmd, ExperimentFlags& f) {
  cmd->add_option("--corpus", f.corpus, "Corpus directory holding manifest.csv")->required();
  cmd->add_option("--out", f.out, "Output directory")->required();
  cmd->add_option("--config", f.config, "key = value experiment config");
  cmd->add_option("--engine", f.engine, "hmm or sphmm")->check(CLI::IsMember({"hmm", "sphmm"}));
  cmd->add_option("--scenario", f.scenario, "score-only, max-imposter or pooled")
      ->check(CLI::IsMember({"score-only", "max-imposter", "pooled"}));
  cmd->add_option("--alpha", f.alpha, "Prosodic weight in [0,1]");
  cmd->add_option("--seed", f.seed, "Training seed");
  cmd->add_option("--jobs", f.jobs, "Worker threads");
  cmd->add_flag("--multi-speaker", f.multi_speaker, "Add other speakers' token 1 to training");
}

ExperimentConfig resolve_config(const ExperimentFlags& f) {
  ExperimentConfig cfg = f.config.empty() ? ExperimentConfig{} : load_config(f.config);
  if (!f.engine.empty()) cfg.engine = *parse_engine(f.engine);
  if (!f.scenario.empty()) cfg.scenario = *parse_scenario(f.scenario);
  if (f.alpha) cfg.alpha = *f.alpha;
  if (f.seed) cfg.seed = *f.seed;
  if (f.jobs) cfg.jobs = *f.jobs;
  if (f.multi_speaker) cfg.multi_speaker = true;
  cfg.validate();
  return cfg;
}

std::string model_file_name(const GroupKey& k) {
  return k.speaker_id + "_s" + std::to_string(k.sentence_id) + "_" +
         std::string(style_name(k.style)) + ".model";
}

void save_models(const fs::path& dir, const ExperimentRun& run, const EvaluationResult& result) {
  fs::create_directories(dir);
  for (const auto& [group, model] : run.models) {
    StoredModel stored;
    stored.claim = group;
    stored.theta = result.initial_thresholds.at(group);
    stored.model = model;
    save_model(dir / model_file_name(group), stored);
  }
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw Error("cannot write " + p.string());
  return out;
}

int cmd_synth(int speakers, const std::string& out_dir, std::uint64_t seed) {
  const fs::path root(out_dir);
  fs::create_directories(root / "wav");
  const auto manifest = make_synthetic_manifest(speakers);
  for (const auto& e : manifest.entries()) write_wav(root / e.locator, synth_corpus_clip(e.meta, seed));
  write_manifest(root / "manifest.csv", manifest);
  std::cout << "wrote " << manifest.size() << " utterances to " << root.string() << '\n';
  return 0;
}

int cmd_features(const std::string& clip_path, const std::string& out_path, bool prosody,
                 const std::string& model_path) {
  const AudioClip clip = read_wav(clip_path);
  const auto feats = analyze_utterance(clip);
  std::ofstream file;
  if (!out_path.empty()) file = open_out(out_path);
  std::ostream& out = out_path.empty() ? std::cout : file;
  if (!prosody) {
    write_feature_dump(out, feats.obs);
  } else {
    std::vector<FrameRange> segments;
    if (model_path.empty()) {
      segments.push_back({0, feats.prosody.size()});
    } else {
      const auto stored = load_model(model_path);
      const auto align =
          align_segments(viterbi_decode(stored.model.acoustic, feats.obs), stored.model.grouping);
      for (const auto& s : align.segments)
        if (!s.empty()) segments.push_back(s);
    }
    write_prosody_dump(out, build_prosodic_sequence(feats.prosody, segments));
  }
  if (feats.obs.skipped_frames > 0)
    std::cerr << "skipped " << feats.obs.skipped_frames << " degenerate frames\n";
  return 0;
}

int cmd_train(const ExperimentFlags& f) {
  const auto cfg = resolve_config(f);
  const fs::path corpus(f.corpus);
  const auto manifest = read_manifest(corpus / "manifest.csv");
  const auto run = prepare_experiment(cfg, manifest, disk_source(corpus));
  const auto result = evaluate_run(run, cfg);
  save_models(fs::path(f.out) / "models", run, result);
  std::cout << "trained " << run.models.size() << " models\n";
  return 0;
}

int cmd_evaluate(const ExperimentFlags& f, bool confusion_only) {
  const auto cfg = resolve_config(f);
  const fs::path corpus(f.corpus), out(f.out);
  const auto manifest = read_manifest(corpus / "manifest.csv");
  const auto run = prepare_experiment(cfg, manifest, disk_source(corpus));
  const auto result = evaluate_run(run, cfg);
  fs::create_directories(out);
  const std::string engine = cfg.engine == Engine::kSphmm ? "SPHMMs" : "HMMs";
  {
    auto txt = open_out(out / "confusion.txt");
    write_confusion_text(txt, result.confusion, "Confusion matrix based on " + engine);
    auto csv = open_out(out / "confusion.csv");
    write_confusion_csv(csv, result.confusion);
  }
  if (!confusion_only) {
    std::string title = "Speaking style authentication performance based on " + engine;
    if (cfg.multi_speaker) title += " (multi-speaker training)";
    auto txt = open_out(out / "performance.txt");
    write_performance_text(txt, result.table, title);
    char avg[64];
    std::snprintf(avg, sizeof avg, "\nAverage H0: %.1f%%\n", aggregate_average(result.table));
    txt << avg;
    auto csv = open_out(out / "performance.csv");
    write_performance_csv(csv, result.table);
    auto trials = open_out(out / "trials.csv");
    write_trial_log(trials, result.trials);
    save_models(out / "models", run, result);
    std::cout << "average H0 " << aggregate_average(result.table) << "%, " << result.trials.size()
              << " trials\n";
  }
  if (run.skipped_frames > 0) std::cerr << "skipped " << run.skipped_frames << " degenerate frames\n";
  return 0;
}

int cmd_verify(const std::string& model_path, const std::string& clip_path,
               const std::string& claim_text, const std::string& scenario_text,
               const std::vector<std::string>& imposter_paths, const std::string& engine_text,
               std::optional<double> theta_override) {
  const auto claim = parse_claim(claim_text);
  const auto stored = load_model(model_path);
  if (stored.claim && !(*stored.claim == claim))
    throw Error("model " + model_path + " belongs to " + to_string(*stored.claim) +
                ", not " + to_string(claim));
  ModelRegistry registry(*parse_engine(engine_text));
  registry.insert(claim, {stored.model, stored.theta});
  ScenarioConfig scenario;
  scenario.kind = *parse_scenario(scenario_text);
  for (const auto& p : imposter_paths) {
    auto imp = load_model(p);
    if (!imp.claim) throw Error("imposter model " + p + " has no claim identity");
    registry.insert(*imp.claim, {imp.model, imp.theta});
    scenario.imposter_keys.push_back(*imp.claim);
  }
  scenario.validate();
  ThresholdState threshold(theta_override.value_or(stored.theta));
  const auto trial = verify(read_wav(clip_path), claim, registry, scenario, threshold);
  std::printf("lambda %.6f\ntheta %.6f\n%s\n", trial.lambda, trial.theta,
              trial.decision == Decision::kAccept ? "ACCEPT" : "REJECT");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Speaking style authentication with suprasegmental HMMs"};
  app.require_subcommand(1);

  int speakers = 20;
  std::string synth_out;
  std::uint64_t synth_seed = 7;
  auto* synth = app.add_subcommand("synth", "Write a synthetic styled corpus");
  synth->add_option("--speakers", speakers, "Number of speakers")->check(CLI::PositiveNumber);
  synth->add_option("--out", synth_out, "Corpus directory")->required();
  synth->add_option("--seed", synth_seed, "Corpus seed");

  std::string feat_clip, feat_out, feat_model;
  bool feat_prosody = false;
  auto* features = app.add_subcommand("features", "Dump LPCC or prosodic features of a clip");
  features->add_option("--clip", feat_clip, "WAV file")->required();
  features->add_option("--out", feat_out, "Output file (default stdout)");
  features->add_flag("--prosody", feat_prosody, "Dump prosodic segments instead of LPCCs");
  features->add_option("--model", feat_model, "Model used to align prosodic segments");

  ExperimentFlags train_flags, eval_flags, conf_flags;
  auto* train = app.add_subcommand("train", "Train one model per speaker, sentence and style");
  add_experiment_flags(train, train_flags);
  auto* evaluate = app.add_subcommand("evaluate", "Run the verification protocol");
  add_experiment_flags(evaluate, eval_flags);
  auto* confusion = app.add_subcommand("confusion", "Build the style confusion matrix");
  add_experiment_flags(confusion, conf_flags);

  std::string v_model, v_clip, v_claim, v_scenario = "score-only", v_engine = "sphmm";
  std::vector<std::string> v_imposters;
  std::optional<double> v_theta;
  auto* verify_cmd = app.add_subcommand("verify", "Accept or reject a claimed style for one clip");
  verify_cmd->add_option("--model", v_model, "Claimant model file")->required();
  verify_cmd->add_option("--clip", v_clip, "WAV file")->required();
  verify_cmd->add_option("--claim", v_claim, "speaker:sentence:style")->required();
  verify_cmd->add_option("--scenario", v_scenario, "score-only, max-imposter or pooled")
      ->check(CLI::IsMember({"score-only", "max-imposter", "pooled"}));
  verify_cmd->add_option("--imposter", v_imposters, "Imposter model file (repeatable)");
  verify_cmd->add_option("--engine", v_engine, "hmm or sphmm")->check(CLI::IsMember({"hmm", "sphmm"}));
  verify_cmd->add_option("--theta", v_theta, "Override the stored threshold");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (*synth) return cmd_synth(speakers, synth_out, synth_seed);
    if (*features) return cmd_features(feat_clip, feat_out, feat_prosody, feat_model);
    if (*train) return cmd_train(train_flags);
    if (*evaluate) return cmd_evaluate(eval_flags, false);
    if (*confusion) return cmd_evaluate(conf_flags, true);
    if (*verify_cmd)
      return cmd_verify(v_model, v_clip, v_claim, v_scenario, v_imposters, v_engine, v_theta);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsageError;
}
