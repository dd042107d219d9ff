#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "socialego/diffusion.hpp"
#include "socialego/metrics.hpp"
#include "socialego/synth_data.hpp"

namespace socialego {

// Trained models used for generation. scene may be null when the denoiser
// does not condition on the scene.
struct ModelStack {
  const VaeModel* vae = nullptr;
  const DenoiserModel* denoiser = nullptr;
  const SceneEncoder* scene = nullptr;
  NoiseSchedule schedule;
  int inference_steps = 20;
};

struct EvalOptions {
  int frames = 60;
  int future_offset = 0;
  int samples_per_input = 1;
  double interactee_noise = 0.0;  // axis-angle noise applied before encoding the interactee
  std::uint64_t seed = 0;
};

struct SequenceMetrics {
  int index = 0;
  MetricsReport best;  // hypothesis with the lowest MPJPE
  MetricsReport mean;  // average over hypotheses
};

struct EvaluationResult {
  MetricsReport best_of_k;
  MetricsReport mean_of_k;
  int samples_per_input = 1;
  std::vector<SequenceMetrics> per_sequence;
};

// Throws PreconditionError when a required model is missing.
void check_stack(const ModelStack& stack);

// One wearer sequence for the given inputs.
PoseSequence generate_wearer(const ModelStack& stack, const DenoiserExample& input, std::uint64_t seed);

// hypotheses[i] holds the predictions for ground_truth[i].
EvaluationResult evaluate_predictions(const std::vector<std::vector<PoseSequence>>& hypotheses,
                                      std::span<const PoseSequence> ground_truth, const BodyModel& body);

// Generates samples_per_input wearer sequences per episode and scores them
// against the wearer window. Episodes are processed in parallel; seeds are
// derived from options.seed and the episode index.
EvaluationResult evaluate_model(const ModelStack& stack, std::span<const InteractionEpisode> episodes,
                                const EvalOptions& options);

// Mean of reports, field by field.
MetricsReport average_reports(std::span<const MetricsReport> reports);

}  // namespace socialego
