#include "athena/eval_harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <random>

#include "athena/errors.hpp"
#include "athena/parallel.hpp"

namespace athena {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) { return splitmix64(a ^ splitmix64(b)); }

std::uint64_t name_hash(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

using Rng = std::mt19937_64;

/// Standard normal draw rejected outside [-limit, limit].
double truncated_normal(Rng& rng, double limit) {
  std::normal_distribution<double> unit(0.0, 1.0);
  for (;;) {
    const double z = unit(rng);
    if (std::abs(z) <= limit) return z;
  }
}

/// Gap j of one synthesized instance: tau_j + z * spread * sigma_j, floored at 1us.
Micros sample_gap(const Signature& sig, std::size_t j, double spread, Rng& rng) {
  const double sigma = sig.interval_stats()[j].stdev_us * spread;
  const double tau = static_cast<double>(sig.gap(j).count());
  const double value = sigma > 0.0 ? tau + truncated_normal(rng, 4.0) * sigma : tau;
  return Micros{std::max<std::int64_t>(1, std::llround(value))};
}

struct Pending {
  TimedPacket packet;
  std::optional<std::size_t> owner;  // truth event
  std::size_t order = 0;
};

const Signature& require(const SignatureSet& sigs, std::string_view name) {
  const Signature* s = sigs.find(name);
  if (!s) throw Error(ErrorCode::InvalidArgument, "unknown activity '" + std::string(name) + "'");
  return *s;
}

std::vector<BasePacket> chatter_bases(const std::string& device) {
  auto make = [&](const char* server, std::uint16_t port, Direction dir, std::uint32_t len) {
    BasePacket b;
    b.device_addr = device;
    b.server_name = server;
    b.server_port = port;
    b.protocol = Protocol::udp();
    b.direction = dir;
    b.length = len;
    return b;
  };
  return {
      make("pool.ntp.org", 123, Direction::DeviceToServer, 76),
      make("pool.ntp.org", 123, Direction::ServerToDevice, 76),
      make("dns.resolver", 53, Direction::DeviceToServer, 64),
      make("dns.resolver", 53, Direction::ServerToDevice, 112),
      make("224.0.0.251", 5353, Direction::DeviceToServer, 120),
  };
}

}  // namespace

Micros worst_case_duration(const Signature& signature) {
  double total = 0.0;
  for (std::size_t j = 0; j < signature.gap_count(); ++j) {
    total += static_cast<double>(signature.gap(j).count()) +
             4.0 * signature.interval_stats()[j].stdev_us;
  }
  return Micros{static_cast<std::int64_t>(std::ceil(total))};
}

std::vector<ScheduledActivity> make_schedule(const SignatureSet& signatures,
                                             std::span<const std::string> activities,
                                             std::uint64_t seed, Micros start, Micros min_spacing,
                                             Micros max_spacing) {
  if (min_spacing > max_spacing) {
    throw Error(ErrorCode::InvalidArgument, "min_spacing exceeds max_spacing");
  }
  Rng rng(splitmix64(seed));
  std::uniform_int_distribution<std::int64_t> spacing(min_spacing.count(), max_spacing.count());
  std::vector<ScheduledActivity> out;
  Micros t = start;
  for (std::size_t i = 0; i < activities.size(); ++i) {
    const Signature& sig = require(signatures, activities[i]);
    out.push_back({activities[i], t});
    const Micros floor = worst_case_duration(sig) + Micros{1'000'000};
    t += std::max(Micros{spacing(rng)}, floor);
  }
  return out;
}

GroundTruthLog synthesize(const SignatureSet& signatures,
                          std::span<const ScheduledActivity> schedule, const NoiseModel& noise,
                          std::uint64_t seed, bool concurrent) {
  Rng rng(splitmix64(seed));
  std::vector<std::size_t> order(schedule.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return schedule[a].trigger_t < schedule[b].trigger_t;
  });

  std::vector<Pending> pending;
  std::vector<TruthEvent> events;
  std::vector<std::pair<Micros, Micros>> spans;  // first and last packet per event
  for (std::size_t e : order) {
    const auto& item = schedule[e];
    const Signature& sig = require(signatures, item.activity_name);
    TruthEvent ev;
    ev.activity_name = item.activity_name;
    ev.trigger_t = item.trigger_t;
    Micros t = item.trigger_t;
    for (std::size_t j = 0; j < sig.size(); ++j) {
      if (j > 0) t += sample_gap(sig, j - 1, 1.0, rng);
      pending.push_back({{sig.packets()[j].base, t}, events.size(), pending.size()});
    }
    spans.emplace_back(item.trigger_t, t);
    events.push_back(std::move(ev));
  }
  if (!concurrent) {
    for (std::size_t k = 1; k < spans.size(); ++k) {
      if (spans[k].first <= spans[k - 1].second) {
        throw Error(ErrorCode::ScheduleOverlap,
                    "activity '" + events[k].activity_name + "' starts before '" +
                        events[k - 1].activity_name + "' ends");
      }
    }
  }

  const Micros horizon = spans.empty() ? Micros{0} : spans.back().second + Micros{5'000'000};

  if (noise.confusers_per_activity > 0.0 && !events.empty()) {
    std::poisson_distribution<std::size_t> count(noise.confusers_per_activity *
                                                 static_cast<double>(events.size()));
    const std::size_t bursts = count(rng);
    // Idle periods between (and around) the scheduled activities.
    std::vector<std::pair<Micros, Micros>> idle;
    Micros previous{0};
    for (const auto& [first, last] : spans) {
      if (first > previous) idle.emplace_back(previous, first);
      previous = std::max(previous, last);
    }
    idle.emplace_back(previous, horizon);
    const Micros margin{200'000};
    std::uniform_int_distribution<std::size_t> pick_event(0, events.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_idle(0, idle.size() - 1);
    for (std::size_t b = 0; b < bursts; ++b) {
      const Signature& sig = require(signatures, events[pick_event(rng)].activity_name);
      std::size_t length = sig.size();
      if (noise.confuser_prefix > 0) length = std::min(length, noise.confuser_prefix);
      std::vector<std::size_t> gaps(length - 1);
      std::iota(gaps.begin(), gaps.end(), std::size_t{0});
      std::shuffle(gaps.begin(), gaps.end(), rng);
      std::vector<char> shifted(length, 0);
      for (std::size_t k = 0; k < std::min(noise.confuser_shifted_gaps, gaps.size()); ++k) {
        shifted[gaps[k]] = 1;
      }
      std::vector<Micros> offsets{Micros{0}};
      for (std::size_t j = 1; j < length; ++j) {
        const double spread = shifted[j - 1] ? noise.confuser_spread : 1.0;
        offsets.push_back(offsets.back() + sample_gap(sig, j - 1, spread, rng));
      }
      const Micros burst = offsets.back();
      std::optional<Micros> start;
      if (concurrent) {
        const auto hi = std::max<std::int64_t>(0, (horizon - burst).count());
        start = Micros{std::uniform_int_distribution<std::int64_t>(0, hi)(rng)};
      } else {
        for (int attempt = 0; attempt < 16 && !start; ++attempt) {
          const auto& [lo, hi] = idle[pick_idle(rng)];
          const Micros room = hi - lo - burst - 2 * margin;
          if (room.count() < 0) continue;
          start = lo + margin +
                  Micros{std::uniform_int_distribution<std::int64_t>(0, room.count())(rng)};
        }
      }
      if (!start) continue;
      for (std::size_t j = 0; j < length; ++j) {
        pending.push_back({{sig.packets()[j].base, *start + offsets[j]}, std::nullopt,
                           pending.size()});
      }
    }
  }

  if (noise.chatter_per_minute > 0.0 && !schedule.empty()) {
    const Signature& first = require(signatures, schedule.front().activity_name);
    const auto bases = chatter_bases(first.packets()[0].base.device_addr);
    std::exponential_distribution<double> wait(noise.chatter_per_minute / 60e6);
    std::uniform_int_distribution<std::size_t> pick(0, bases.size() - 1);
    for (double t = wait(rng); t < static_cast<double>(horizon.count()); t += wait(rng)) {
      pending.push_back({{bases[pick(rng)], Micros{std::llround(t)}}, std::nullopt,
                         pending.size()});
    }
  }

  std::sort(pending.begin(), pending.end(), [](const Pending& a, const Pending& b) {
    if (a.packet.t != b.packet.t) return a.packet.t < b.packet.t;
    if (a.owner.has_value() != b.owner.has_value()) return a.owner.has_value();
    return a.order < b.order;
  });
  std::vector<TimedPacket> packets;
  packets.reserve(pending.size());
  for (std::size_t i = 0; i < pending.size(); ++i) {
    TimedPacket p = std::move(pending[i].packet);
    if (!packets.empty() && p.t <= packets.back().t) p.t = packets.back().t + Micros{1};
    if (pending[i].owner) {
      auto& ev = events[*pending[i].owner];
      ev.packet_indices.push_back(i);
      ev.end_t = p.t;
    }
    packets.push_back(std::move(p));
  }
  return {TrafficLog(std::move(packets)), std::move(events)};
}

ScoreReport ScoreReport::from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  auto ratio = [](std::size_t num, std::size_t den) {
    return den == 0 ? 1.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  ScoreReport r;
  r.tp = tp;
  r.fp = fp;
  r.fn = fn;
  r.precision = ratio(tp, tp + fp);
  r.recall = ratio(tp, tp + fn);
  r.accuracy = ratio(tp, tp + fp + fn);
  return r;
}

ScoreReport score(std::span<const ActivityEvent> events, const GroundTruthLog& truth,
                  double align_window_s) {
  if (!(align_window_s > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "align window must be positive");
  }
  const double window_us = align_window_s * 1e6;
  std::vector<char> claimed(truth.events.size(), 0);
  std::size_t tp = 0;
  for (const auto& e : events) {
    std::optional<std::size_t> best;
    std::int64_t best_gap = 0;
    for (std::size_t k = 0; k < truth.events.size(); ++k) {
      const auto& t = truth.events[k];
      if (claimed[k] || t.activity_name != e.activity_name) continue;
      const std::int64_t gap = std::abs((e.end_t - t.end_t).count());
      if (static_cast<double>(gap) > window_us) continue;
      if (!best || gap < best_gap) {
        best = k;
        best_gap = gap;
      }
    }
    if (best) {
      claimed[*best] = 1;
      ++tp;
    }
  }
  return ScoreReport::from_counts(tp, events.size() - tp, truth.events.size() - tp);
}

std::vector<SweepRow> sensitivity_sweep(const SignatureSet& signatures, const SweepConfig& config) {
  if (config.trials < 20) {
    throw Error(ErrorCode::InvalidArgument, "sensitivity sweep needs at least 20 trials");
  }
  if (config.r_values.empty()) throw Error(ErrorCode::InvalidArgument, "no r values");
  std::vector<std::string> activities = config.activities;
  if (activities.empty()) {
    for (const auto& s : signatures.signatures()) activities.push_back(s.activity_name());
  }
  for (const auto& a : activities) require(signatures, a);

  std::vector<ToleranceSet> tolerances;
  for (double r : config.r_values) {
    tolerances.push_back(tolerance_set(signatures, r, config.eps_floor_us));
  }

  const std::size_t n_r = config.r_values.size();
  const std::size_t tasks = activities.size() * config.trials;
  struct Counts {
    std::size_t tp = 0, fp = 0, fn = 0;
  };
  std::vector<Counts> counts(tasks * n_r);

  parallel_for(tasks, config.jobs, [&](std::size_t task) {
    const std::size_t a = task / config.trials;
    const std::size_t trial = task % config.trials;
    const std::uint64_t trial_seed = mix(mix(config.seed, name_hash(activities[a])), trial);
    const std::vector<std::string> names(config.activities_per_trial, activities[a]);
    const auto schedule = make_schedule(signatures, names, trial_seed);
    const auto truth = synthesize(signatures, schedule, config.noise, mix(trial_seed, 1));
    const auto foreground = filter_background(truth.log, config.rules).foreground;

    // Truth indices are positions in the unfiltered log; scoring only uses
    // names and end times, which filtering preserves.
    for (std::size_t ri = 0; ri < n_r; ++ri) {
      const auto result = act_extract(foreground, signatures, tolerances[ri]);
      const auto report = score(result.events, truth, config.align_window_s);
      counts[task * n_r + ri] = {report.tp, report.fp, report.fn};
    }
  });

  std::vector<SweepRow> rows;
  for (std::size_t a = 0; a < activities.size(); ++a) {
    for (std::size_t ri = 0; ri < n_r; ++ri) {
      Counts total;
      for (std::size_t trial = 0; trial < config.trials; ++trial) {
        const auto& c = counts[(a * config.trials + trial) * n_r + ri];
        total.tp += c.tp;
        total.fp += c.fp;
        total.fn += c.fn;
      }
      rows.push_back({activities[a], config.r_values[ri],
                      ScoreReport::from_counts(total.tp, total.fp, total.fn)});
    }
  }
  return rows;
}

namespace {

ScoreReport mean_of(std::span<const ScoreReport> reports) {
  ScoreReport out;
  if (reports.empty()) return out;
  out.accuracy = out.precision = out.recall = 0.0;
  for (const auto& r : reports) {
    out.accuracy += r.accuracy;
    out.precision += r.precision;
    out.recall += r.recall;
    out.tp += r.tp;
    out.fp += r.fp;
    out.fn += r.fn;
  }
  const auto n = static_cast<double>(reports.size());
  out.accuracy /= n;
  out.precision /= n;
  out.recall /= n;
  return out;
}

/// Concatenates captures with uniform 3-60s gaps between them.
GroundTruthLog splice(std::span<const LabeledCapture* const> captures, std::uint64_t seed) {
  Rng rng(splitmix64(seed));
  std::uniform_int_distribution<std::int64_t> spacing(3'000'000, 60'000'000);
  std::vector<TimedPacket> packets;
  std::vector<TruthEvent> events;
  Micros cursor{1'000'000};
  for (const LabeledCapture* c : captures) {
    const auto& fg = c->foreground;
    if (fg.empty()) continue;
    const Micros offset = cursor - fg[0].t;
    TruthEvent ev;
    ev.activity_name = c->activity_name;
    ev.trigger_t = cursor;
    for (const auto& p : fg.packets()) {
      ev.packet_indices.push_back(packets.size());
      packets.push_back({p.base, p.t + offset});
    }
    ev.end_t = packets.back().t;
    events.push_back(std::move(ev));
    cursor = packets.back().t + Micros{spacing(rng)};
  }
  return {TrafficLog(std::move(packets)), std::move(events)};
}

}  // namespace

CrossValidationResult cross_validate(std::span<const LabeledCapture> captures,
                                     const CrossValidationConfig& config) {
  if (config.folds < 2) throw Error(ErrorCode::InvalidArgument, "cross-validation needs >= 2 folds");
  if (captures.empty()) throw Error(ErrorCode::TooFewCaptures, "no captures");

  std::map<std::string, std::vector<const LabeledCapture*>> by_activity;
  for (const auto& c : captures) by_activity[c.activity_name].push_back(&c);
  for (const auto& [name, list] : by_activity) {
    // The smallest training split drops ceil(count / folds) captures.
    const std::size_t largest_test = (list.size() + config.folds - 1) / config.folds;
    if (list.size() < largest_test + 2) {
      throw Error(ErrorCode::TooFewCaptures,
                  "activity '" + name + "' has " + std::to_string(list.size()) +
                      " captures, too few for " + std::to_string(config.folds) + " folds");
    }
  }

  CrossValidationResult out;
  std::map<std::string, std::vector<ScoreReport>> per_activity;
  for (std::size_t fold = 0; fold < config.folds; ++fold) {
    std::vector<Signature> sigs;
    std::map<std::string, std::vector<const LabeledCapture*>> held_out;
    std::map<std::string, std::size_t> train_counts;
    for (const auto& [name, list] : by_activity) {
      std::vector<LabeledCapture> train;
      for (std::size_t i = 0; i < list.size(); ++i) {
        if (i % config.folds == fold) {
          held_out[name].push_back(list[i]);
        } else {
          train.push_back(*list[i]);
        }
      }
      train_counts[name] = train.size();
      sigs.push_back(generate_signature(train, config.generation));
    }
    const SignatureSet set(std::move(sigs));
    const ToleranceSet tolerances = tolerance_set(set, config.r, config.eps_floor_us);
    for (const auto& [name, tests] : held_out) {
      const auto truth = splice(tests, mix(mix(config.seed, name_hash(name)), fold));
      const auto result = act_extract(truth.log, set, tolerances);
      FoldScore fs;
      fs.activity = name;
      fs.fold = fold;
      fs.train_count = train_counts[name];
      fs.test_count = tests.size();
      fs.report = score(result.events, truth, config.align_window_s);
      per_activity[name].push_back(fs.report);
      out.folds.push_back(std::move(fs));
    }
  }
  std::sort(out.folds.begin(), out.folds.end(), [](const FoldScore& a, const FoldScore& b) {
    return a.activity != b.activity ? a.activity < b.activity : a.fold < b.fold;
  });
  std::vector<ScoreReport> all;
  for (const auto& [name, reports] : per_activity) {
    out.mean_by_activity[name] = mean_of(reports);
    all.insert(all.end(), reports.begin(), reports.end());
  }
  out.mean = mean_of(all);
  return out;
}

}  // namespace athena
