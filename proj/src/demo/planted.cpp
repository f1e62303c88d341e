#include "scenmine/demo/planted.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include <json.hpp>

#include "scenmine/dsl/evaluator.hpp"
#include "scenmine/dsl/parser.hpp"
#include "scenmine/pipeline/config.hpp"
#include "scenmine/traj/log_io.hpp"

namespace scenmine::demo {

namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr const char* kQuery = "vehicle with a pedestrian in front";
constexpr const char* kProgram =
    R"(output(has_in_front(category("VEHICLE"), category("PEDESTRIAN"), within=10.0)))";

const std::vector<std::string> kRing = {"ring_front_center", "ring_front_left", "ring_front_right",
                                        "ring_side_left",    "ring_side_right", "ring_rear_left",
                                        "ring_rear_right"};

traj::TrackState state_at(std::int64_t ts, double x, double y, double yaw, double l, double w,
                          double h) {
  traj::TrackState s;
  s.timestamp_ns = ts;
  s.tx = x;
  s.ty = y;
  s.tz = h / 2;
  s.qw = std::cos(yaw / 2);
  s.qz = std::sin(yaw / 2);
  s.length = l;
  s.width = w;
  s.height = h;
  return s;
}

std::vector<float> unit_vector(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> v(dim);
  double norm = 0;
  for (auto& x : v) {
    x = n(rng);
    norm += x * x;
  }
  norm = std::sqrt(norm);
  std::vector<float> out(dim);
  for (int k = 0; k < dim; ++k) out[k] = static_cast<float>(v[k] / norm);
  return out;
}

// `base` blended with fresh noise of relative weight `noise`, renormalized.
std::vector<float> near_vector(std::mt19937_64& rng, const std::vector<float>& base, double noise) {
  const auto n = unit_vector(rng, static_cast<int>(base.size()));
  std::vector<double> v(base.size());
  double norm = 0;
  for (std::size_t k = 0; k < base.size(); ++k) {
    v[k] = base[k] + noise * n[k];
    norm += v[k] * v[k];
  }
  std::vector<float> out(base.size());
  for (std::size_t k = 0; k < base.size(); ++k) out[k] = static_cast<float>(v[k] / std::sqrt(norm));
  return out;
}

void add_tokens(coarse::EmbeddingStore& store, std::mt19937_64& rng, const std::string& id,
                int count, int dim) {
  std::normal_distribution<double> n(0.0, 1.0);
  for (int t = 0; t < count; ++t) {
    std::vector<float> row(dim);
    for (auto& x : row) x = static_cast<float>(n(rng));
    store.add_token(id, row);
  }
}

}  // namespace

PlantedDataset make_planted_dataset(const PlantedOptions& o) {
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  PlantedDataset d;
  d.query = kQuery;
  d.program = kProgram;
  d.clip = coarse::EmbeddingStore(static_cast<std::uint32_t>(o.clip_dim));
  d.sentence = coarse::EmbeddingStore(static_cast<std::uint32_t>(o.sentence_dim));
  d.tokens = coarse::EmbeddingStore(static_cast<std::uint32_t>(o.token_dim));

  const auto q_clip = unit_vector(rng, o.clip_dim);
  d.clip.add_text(d.query, q_clip);

  const int frames = static_cast<int>(std::llround(o.duration_s * o.frame_rate));
  const int event_frames = static_cast<int>(std::llround(o.event_s * o.frame_rate));
  const double dt = 1.0 / o.frame_rate;
  const auto ts_of = [&](int k) { return traj::seconds_to_ns(k * dt); };
  std::vector<std::string> cameras(kRing.begin(), kRing.begin() + std::min<int>(o.cameras, 7));
  for (int c = 7; c < o.cameras; ++c) cameras.push_back("cam" + std::to_string(c));

  for (int li = 0; li < o.logs; ++li) {
    char id[32];
    std::snprintf(id, sizeof id, "planted-%02d", li);
    traj::LogManifest log;
    log.log_id = id;
    log.duration = o.duration_s;
    log.frame_rate = o.frame_rate;
    log.camera_ids = cameras;

    const bool positive = li < o.positive_logs;
    const int lo = static_cast<int>(4.0 * o.frame_rate);
    const int hi = frames - static_cast<int>(8.0 * o.frame_rate);
    const int e0 = lo + static_cast<int>(u(rng) * (hi - lo));
    const int e1 = e0 + event_frames;  // inclusive

    const double va = 7.0 + 2.0 * u(rng), vb = 6.0 + 2.0 * u(rng), vc = 5.0 + 2.0 * u(rng);
    traj::Track car{"car_a", "REGULAR_VEHICLE", {}};
    traj::Track follower{"car_b", "REGULAR_VEHICLE", {}};
    traj::Track truck{"truck_c", "BOX_TRUCK", {}};
    traj::Track walker_n{"ped_n", "PEDESTRIAN", {}};
    traj::Track walker_s{"ped_s", "PEDESTRIAN", {}};
    traj::Track crossing{"ped_event", "PEDESTRIAN", {}};
    for (int k = 0; k < frames; ++k) {
      const double t = k * dt;
      const auto ts = ts_of(k);
      const double xa = -60.0 + va * t;
      car.states.push_back(state_at(ts, xa, 0.0, 0.0, 4.6, 1.9, 1.6));
      follower.states.push_back(state_at(ts, -80.0 + vb * t, -3.5, 0.0, 4.4, 1.8, 1.5));
      truck.states.push_back(state_at(ts, 90.0 - vc * t, 3.5, kPi, 7.5, 2.5, 3.2));
      walker_n.states.push_back(state_at(ts, -20.0 + 1.2 * t, 8.0, 0.0, 0.6, 0.6, 1.7));
      walker_s.states.push_back(state_at(ts, 30.0 - 1.1 * t, -11.5, kPi, 0.6, 0.6, 1.7));
      if (positive && k >= e0 && k <= e1) {
        const double s = (k - e0) * dt;
        crossing.states.push_back(
            state_at(ts, xa + 6.0 - 1.5 * s, 1.0 - 0.6 * s, -kPi / 2, 0.6, 0.6, 1.7));
      }
    }
    log.tracks = {car, follower, truck, walker_n, walker_s};
    dsl::ScenarioMask planted;
    planted.log_id = log.log_id;
    if (positive) {
      log.tracks.push_back(crossing);
      for (int k = e0; k <= e1; ++k) planted.entries.insert({"car_a", ts_of(k)});
      d.events[log.log_id] = {e0 * dt, e1 * dt};
    }
    d.planted[log.log_id] = planted;

    for (std::size_t c = 0; c < cameras.size(); ++c) {
      for (int k = 0; k < frames; ++k) {
        std::vector<float> v(o.clip_dim);
        const bool in_event = positive && k >= e0 && k <= e1;
        for (int j = 0; j < o.clip_dim; ++j) {
          v[j] = static_cast<float>(gauss(rng) / std::sqrt(static_cast<double>(o.clip_dim)) +
                                    (in_event ? 1.5 * q_clip[j] : 0.0));
        }
        d.clip.add_frame(log.log_id, cameras[c], ts_of(k), v);
      }
    }
    d.logs.push_back(std::move(log));
  }

  // Sentence space: the mining query and a few knowledge-base queries, the
  // first two of them close to the mining query.
  const auto q_sent = unit_vector(rng, o.sentence_dim);
  d.sentence.add_text(d.query, q_sent);
  add_tokens(d.tokens, rng, d.query, o.tokens_per_query, o.token_dim);

  struct Seed {
    const char* id;
    const char* text;
    const char* program;
    double noise;
  };
  const std::vector<Seed> seeds = {
      {"kb-near", "pedestrian near a vehicle",
       R"(output(near(category("PEDESTRIAN"), category("VEHICLE"), distance=8.0)))", 0.6},
      {"kb-behind", "vehicle with another vehicle behind it",
       R"(output(has_behind(category("VEHICLE"), category("VEHICLE"), within=30.0)))", 0.9},
      {"kb-moving", "moving vehicle", R"(output(and(category("VEHICLE"), moving())))", 3.0},
      {"kb-wrong", "stationary pedestrian",
       R"(output(and(category("PEDESTRIAN"), stationary())))", 3.0},
  };
  const auto& home = d.logs.front();
  for (const auto& s : seeds) {
    pipeline::CandidateRecord c;
    c.triple_id = s.id;
    c.query_text = s.text;
    c.program_source = s.program;
    c.provenance = "demo";
    c.mask = dsl::evaluate(dsl::parse(c.program_source), home);
    c.mask.log_id = home.log_id;
    d.sentence.add_text(s.text, near_vector(rng, q_sent, s.noise));
    add_tokens(d.tokens, rng, s.text, o.tokens_per_query, o.token_dim);
    d.candidates.push_back(std::move(c));
  }
  // The last candidate's mask is replaced by cells its program does not produce.
  auto& wrong = d.candidates.back();
  wrong.mask.entries.clear();
  for (int k = 0; k < 3; ++k) wrong.mask.entries.insert({"car_a", ts_of(k)});
  return d;
}

void write_planted_dataset(const PlantedDataset& d, const fs::path& dir) {
  fs::create_directories(dir / "logs");
  fs::create_directories(dir / "embeddings");
  for (const auto& log : d.logs) traj::write_log_file(dir / "logs" / (log.log_id + ".jsonl"), log);
  const auto emb = dir / "embeddings";
  d.clip.save(pipeline::store_smeb(emb, pipeline::kClipStore),
              pipeline::store_index(emb, pipeline::kClipStore));
  d.sentence.save(pipeline::store_smeb(emb, pipeline::kSentenceStore),
                  pipeline::store_index(emb, pipeline::kSentenceStore));
  d.tokens.save(pipeline::store_smeb(emb, pipeline::kTokenStore),
                pipeline::store_index(emb, pipeline::kTokenStore));
  pipeline::write_candidates(dir / "kb_candidates.jsonl", d.candidates);

  std::vector<pipeline::MaskRecord> truth;
  for (const auto& log : d.logs) truth.push_back({d.query, d.planted.at(log.log_id)});
  pipeline::write_mask_file(dir / "ground_truth.jsonl", truth);

  {
    std::ofstream out(dir / "responses.jsonl");
    const std::string reply = "```\n" + d.program + "\n```";
    for (std::size_t i = 0; i < d.logs.size(); ++i) {
      out << nlohmann::json{{"text", reply}}.dump() << '\n';
    }
  }

  pipeline::PipelineConfig cfg;
  cfg.paths.checkpoint = "";
  cfg.synth.client = "scripted";
  cfg.synth.script = "responses.jsonl";
  // Matcher sized for the demo's 16-wide token rows.
  auto& m = cfg.matcher.model;
  m.patch = {16, 8, 32, 2, 4, 32};
  m.text_dim = static_cast<int>(d.tokens.dim());
  m.d_k = 16;
  m.embed_dim = 32;
  m.ff_dim = 64;
  cfg.matcher.train.batch_size = 32;
  cfg.matcher.train.learning_rate = 3e-3;
  cfg.matcher.train.max_steps = 50;
  pipeline::save_config(dir / "scenmine.conf", cfg);
}

}  // namespace scenmine::demo
