#pragma once

// Synthetic ground-truth traffic, scoring, tolerance sweeps and k-fold
// cross-validation.

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "athena/act_extract.hpp"
#include "athena/background_filter.hpp"
#include "athena/signature_gen.hpp"
#include "athena/traffic_model.hpp"

namespace athena {

struct ScheduledActivity {
  std::string activity_name;
  Micros trigger_t{0};
};

/// Background traffic mixed into synthetic logs.
struct NoiseModel {
  /// Well-known-port chatter (NTP, DNS, mDNS); removed by default_rules().
  double chatter_per_minute = 0.0;
  /// Expected confuser bursts per scheduled activity. A confuser replays
  /// the base packets of a scheduled activity's signature inside an idle
  /// period. `confuser_shifted_gaps` randomly chosen gaps are drawn from
  /// Normal(tau_j, (confuser_spread*sigma_j)^2), the others like a genuine
  /// instance.
  double confusers_per_activity = 0.0;
  double confuser_spread = 30.0;
  std::size_t confuser_shifted_gaps = 5;
  /// Number of leading signature packets a confuser copies; 0 copies all.
  std::size_t confuser_prefix = 0;
};

struct TruthEvent {
  std::string activity_name;
  Micros trigger_t{0};
  std::vector<std::size_t> packet_indices;  // positions in the synthesized log
  Micros end_t{0};                          // timestamp of the last packet
};

struct GroundTruthLog {
  TrafficLog log;
  std::vector<TruthEvent> events;
};

/// Upper bound on one synthesized instance: sum of tau_j + 4 sigma_j.
Micros worst_case_duration(const Signature& signature);

/// Triggers for `activities` in the given order, consecutive triggers
/// spaced uniformly in [min_spacing, max_spacing] but never closer than the
/// previous activity's worst-case duration plus one second.
std::vector<ScheduledActivity> make_schedule(const SignatureSet& signatures,
                                             std::span<const std::string> activities,
                                             std::uint64_t seed,
                                             Micros start = Micros{1'000'000},
                                             Micros min_spacing = Micros{3'000'000},
                                             Micros max_spacing = Micros{60'000'000});

/// Emits each scheduled activity as its signature's base packets with gap j
/// ~ Normal(tau_j, sigma_j^2) truncated at 4 sigma_j and floored at 1us,
/// then mixes in noise. Deterministic per seed. Errors: InvalidArgument for
/// unknown activities, ScheduleOverlap when `concurrent` is false and two
/// activities interleave.
GroundTruthLog synthesize(const SignatureSet& signatures,
                          std::span<const ScheduledActivity> schedule, const NoiseModel& noise,
                          std::uint64_t seed, bool concurrent = false);

struct ScoreReport {
  double accuracy = 1.0;
  double precision = 1.0;
  double recall = 1.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  /// precision = tp/(tp+fp), recall = tp/(tp+fn), accuracy = tp/(tp+fp+fn);
  /// an empty denominator yields 1.
  static ScoreReport from_counts(std::size_t tp, std::size_t fp, std::size_t fn);
};

/// Greedy one-to-one alignment: each extracted event (in order) claims the
/// unclaimed truth event of the same activity whose end time is closest,
/// provided it lies within `align_window_s`.
ScoreReport score(std::span<const ActivityEvent> events, const GroundTruthLog& truth,
                  double align_window_s = 5.0);

struct SweepConfig {
  std::vector<double> r_values;
  std::size_t trials = 50;                 // at least 20
  std::size_t activities_per_trial = 20;
  NoiseModel noise;
  std::uint64_t seed = 1;
  double eps_floor_us = kDefaultEpsFloorUs;
  double align_window_s = 5.0;
  BackgroundRuleSet rules = default_rules();
  std::vector<std::string> activities;     // empty: every signature
  std::size_t jobs = 1;
};

struct SweepRow {
  std::string activity;
  double r = 1.0;
  ScoreReport report;  // counts pooled over all trials
};

/// For every activity and trial, synthesizes a homogeneous log (the same
/// activity repeated), filters background, and extracts with the whole
/// signature set at each r. Trial logs depend on (seed, activity, trial)
/// only, so every r sees the same logs.
std::vector<SweepRow> sensitivity_sweep(const SignatureSet& signatures, const SweepConfig& config);

struct CrossValidationConfig {
  std::size_t folds = 6;
  double r = 11.0;
  double eps_floor_us = kDefaultEpsFloorUs;
  double align_window_s = 5.0;
  std::uint64_t seed = 1;
  SignatureGenOptions generation;
};

struct FoldScore {
  std::string activity;
  std::size_t fold = 0;
  std::size_t train_count = 0;
  std::size_t test_count = 0;
  ScoreReport report;
};

struct CrossValidationResult {
  std::vector<FoldScore> folds;                      // by activity, then fold
  std::map<std::string, ScoreReport> mean_by_activity;
  ScoreReport mean;
};

/// Capture i of an activity belongs to test fold i % folds. Per fold,
/// signatures for every activity come from the training captures and each
/// activity's held-out captures are spliced into one log with 3-60s gaps.
/// Errors: InvalidArgument when folds < 2, TooFewCaptures when an activity
/// cannot supply two training captures per fold.
CrossValidationResult cross_validate(std::span<const LabeledCapture> captures,
                                     const CrossValidationConfig& config);

}  // namespace athena
