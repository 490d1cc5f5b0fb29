#include "morphkit/run.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>

#include "morphkit/adapter.hpp"
#include "morphkit/error.hpp"
#include "morphkit/hashing.hpp"
#include "morphkit/latent.hpp"
#include "morphkit/morph.hpp"
#include "morphkit/vulnerability.hpp"
#include "parallel.hpp"

#ifndef MORPHKIT_VERSION
#define MORPHKIT_VERSION "dev"
#endif

namespace morphkit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return {};
  const fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

template <typename T>
T get_as(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorKind::Validation, std::string("config field '") + key + "' has the wrong type");
  }
}

void require_known_keys(const json& j, std::initializer_list<const char*> keys, const char* where) {
  const std::set<std::string> known(keys.begin(), keys.end());
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) {
      throw Error(ErrorKind::Validation, std::string("unknown config field '") + key + "' in " + where);
    }
  }
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

void require_file(const fs::path& p, const char* what) {
  if (p.empty()) throw Error(ErrorKind::Validation, std::string(what) + " is not configured");
  if (!fs::is_regular_file(p)) {
    throw Error(ErrorKind::Io, std::string(what) + " not found: " + p.string());
  }
}

void require_dir(const fs::path& p, const char* what) {
  if (p.empty()) throw Error(ErrorKind::Validation, std::string(what) + " is not configured");
  if (!fs::is_directory(p)) {
    throw Error(ErrorKind::Io, std::string(what) + " not found: " + p.string());
  }
}

void require_target(double target) {
  if (!(target > 0.0 && target < 1.0)) {
    throw Error(ErrorKind::Validation, "target FMR must lie strictly between 0 and 1");
  }
}

std::chrono::milliseconds adapter_timeout(const RunConfig& c) {
  return std::chrono::milliseconds(static_cast<long long>(c.adapter_timeout_seconds * 1000.0));
}

class RunRecorder {
 public:
  RunRecorder(std::string command, const RunConfig& config, const CommandIo& io)
      : command_(std::move(command)), config_(config), argv_(io.argv), started_(timestamp()) {}

  void write(int exit_code, json extra = json::object()) const {
    const json cfg = config_to_json(config_);
    json meta{{"command", command_},
              {"config", cfg},
              {"config_sha256", sha256_hex(cfg.dump())},
              {"version", MORPHKIT_VERSION},
              {"argv", argv_},
              {"started", started_},
              {"finished", timestamp()},
              {"exit_code", exit_code}};
    if (config_.seed) meta["seed"] = *config_.seed;
    for (auto& [k, v] : extra.items()) meta[k] = v;
    write_text(config_.output_root / ("run_metadata_" + command_ + ".json"), meta.dump(2) + "\n");
  }

 private:
  std::string command_;
  const RunConfig& config_;
  std::vector<std::string> argv_;
  std::string started_;
};

MorphConfig morph_config(const RunConfig& c) {
  MorphConfig m;
  m.alpha = c.alpha;
  m.geometry_alpha = c.geometry_alpha;
  m.border_augmentation = c.border_augmentation;
  m.tool_name = c.effective_tool_name();
  m.validate();
  return m;
}

fs::path landmark_file_for(const fs::path& landmark_root, const std::string& sample) {
  fs::path rel(sample);
  std::string ext = rel.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") {
    rel.replace_extension(".txt");
  } else {
    rel += ".txt";
  }
  return landmark_root / rel;
}

int report_failures(const std::vector<ManifestEntry>& entries, CommandIo& io) {
  std::size_t failed = 0;
  for (const auto& e : entries) {
    if (e.status == MorphStatus::Failed) {
      ++failed;
      io.err << "pair " << e.index << " (" << e.subject_a << ", " << e.subject_b
             << ") failed: " << e.message << "\n";
    }
  }
  io.out << "wrote " << (entries.size() - failed) << " of " << entries.size() << " morphs\n";
  return failed ? kExitPartial : kExitOk;
}

}  // namespace

std::string RunConfig::effective_tool_name() const {
  if (!tool_name.empty()) return tool_name;
  return tool == MorphTool::Landmark ? "opencv" : "stylegan";
}

std::vector<Direction> parse_directions(std::string_view text) {
  if (text == "both") return {Direction::MorphsAsReferences, Direction::MorphsAsProbes};
  return {parse_direction(text)};
}

RunConfig config_from_json(const json& j, const fs::path& base) {
  if (!j.is_object()) throw Error(ErrorKind::Validation, "config must be a JSON object");
  require_known_keys(j,
                     {"image_root", "landmark_root", "protocol", "output_root", "images", "tool",
                      "tool_name", "alpha", "geometry_alpha", "border_augmentation",
                      "detector_command", "generator_command", "adapter_timeout_seconds",
                      "landmark_count", "projection_steps", "synthesis_size", "latent_cache",
                      "alignment", "evaluation", "target_fmr", "direction", "reports", "workers",
                      "seed"},
                     "run config");
  RunConfig c;
  auto path_field = [&](const char* key, fs::path& dst) {
    if (j.contains(key) && !j[key].is_null()) dst = resolve(base, get_as<std::string>(j, key));
  };
  path_field("image_root", c.image_root);
  path_field("landmark_root", c.landmark_root);
  path_field("protocol", c.protocol);
  path_field("output_root", c.output_root);
  if (!j.contains("output_root")) c.output_root = base;
  if (j.contains("images")) c.images = get_as<std::vector<std::string>>(j, "images");
  if (j.contains("tool")) {
    const auto tool = get_as<std::string>(j, "tool");
    if (tool == "landmark") {
      c.tool = MorphTool::Landmark;
    } else if (tool == "latent") {
      c.tool = MorphTool::Latent;
    } else {
      throw Error(ErrorKind::Validation, "tool must be 'landmark' or 'latent', got '" + tool + "'");
    }
  }
  if (j.contains("tool_name")) c.tool_name = get_as<std::string>(j, "tool_name");
  if (j.contains("alpha")) c.alpha = get_as<double>(j, "alpha");
  if (j.contains("geometry_alpha") && !j["geometry_alpha"].is_null()) {
    c.geometry_alpha = get_as<double>(j, "geometry_alpha");
  }
  if (j.contains("border_augmentation")) c.border_augmentation = get_as<bool>(j, "border_augmentation");
  if (j.contains("detector_command")) c.detector_command = get_as<std::string>(j, "detector_command");
  if (j.contains("generator_command")) c.generator_command = get_as<std::string>(j, "generator_command");
  if (j.contains("adapter_timeout_seconds")) {
    c.adapter_timeout_seconds = get_as<double>(j, "adapter_timeout_seconds");
  }
  if (j.contains("landmark_count") && !j["landmark_count"].is_null()) {
    c.landmark_count = get_as<std::size_t>(j, "landmark_count");
  }
  if (j.contains("projection_steps")) c.projection_steps = get_as<int>(j, "projection_steps");
  if (j.contains("synthesis_size") && !j["synthesis_size"].is_null()) {
    c.synthesis_size = get_as<int>(j, "synthesis_size");
  }
  if (j.contains("latent_cache") && !j["latent_cache"].is_null()) {
    c.latent_cache = resolve(base, get_as<std::string>(j, "latent_cache"));
  }
  if (j.contains("alignment") && !j["alignment"].is_null()) {
    const json& a = j["alignment"];
    require_known_keys(a, {"anchors", "targets", "width", "height"}, "alignment");
    AlignmentTemplate tpl;
    tpl.anchor_indices = get_as<std::vector<std::size_t>>(a, "anchors");
    for (const auto& t : a.at("targets")) {
      if (!t.is_array() || t.size() != 2) {
        throw Error(ErrorKind::Validation, "alignment targets must be [x, y] pairs");
      }
      tpl.targets.push_back({t[0].get<double>(), t[1].get<double>()});
    }
    tpl.output_width = get_as<int>(a, "width");
    tpl.output_height = get_as<int>(a, "height");
    c.alignment = tpl;
  }
  if (j.contains("evaluation")) {
    const json& e = j["evaluation"];
    require_known_keys(e, {"dataset", "frs", "tool", "manifests", "embeddings", "aggregation"},
                       "evaluation");
    if (e.contains("dataset")) c.evaluation.dataset = get_as<std::string>(e, "dataset");
    if (e.contains("frs")) c.evaluation.frs = get_as<std::string>(e, "frs");
    if (e.contains("tool")) c.evaluation.tool = get_as<std::string>(e, "tool");
    if (e.contains("manifests")) {
      for (const auto& [dir, p] : e["manifests"].items()) {
        c.evaluation.manifests[parse_direction(dir)] = resolve(base, p.get<std::string>());
      }
    }
    if (e.contains("embeddings")) {
      for (const auto& p : e["embeddings"]) {
        c.evaluation.embeddings.push_back(resolve(base, p.get<std::string>()));
      }
    }
    if (e.contains("aggregation")) {
      c.evaluation.aggregation = parse_aggregation(get_as<std::string>(e, "aggregation"));
    }
  }
  if (j.contains("target_fmr")) c.target_fmr = get_as<double>(j, "target_fmr");
  if (j.contains("direction")) c.directions = parse_directions(get_as<std::string>(j, "direction"));
  if (j.contains("reports")) {
    for (const auto& p : j["reports"]) c.reports.push_back(resolve(base, p.get<std::string>()));
  }
  if (j.contains("workers")) c.workers = get_as<unsigned>(j, "workers");
  if (j.contains("seed") && !j["seed"].is_null()) c.seed = get_as<long long>(j, "seed");
  return c;
}

json config_to_json(const RunConfig& c) {
  json j{{"image_root", c.image_root.string()},
         {"landmark_root", c.landmark_root.string()},
         {"protocol", c.protocol.string()},
         {"output_root", c.output_root.string()},
         {"images", c.images},
         {"tool", c.tool == MorphTool::Landmark ? "landmark" : "latent"},
         {"tool_name", c.tool_name},
         {"alpha", c.alpha},
         {"geometry_alpha", c.geometry_alpha ? json(*c.geometry_alpha) : json(nullptr)},
         {"border_augmentation", c.border_augmentation},
         {"detector_command", c.detector_command},
         {"generator_command", c.generator_command},
         {"adapter_timeout_seconds", c.adapter_timeout_seconds},
         {"landmark_count", c.landmark_count ? json(*c.landmark_count) : json(nullptr)},
         {"projection_steps", c.projection_steps},
         {"synthesis_size", c.synthesis_size ? json(*c.synthesis_size) : json(nullptr)},
         {"latent_cache", c.latent_cache ? json(c.latent_cache->string()) : json(nullptr)},
         {"target_fmr", c.target_fmr},
         {"workers", c.workers},
         {"seed", c.seed ? json(*c.seed) : json(nullptr)}};
  if (c.alignment) {
    json targets = json::array();
    for (const Point2& p : c.alignment->targets) targets.push_back({p.x, p.y});
    j["alignment"] = {{"anchors", c.alignment->anchor_indices},
                      {"targets", targets},
                      {"width", c.alignment->output_width},
                      {"height", c.alignment->output_height}};
  } else {
    j["alignment"] = nullptr;
  }
  if (c.directions.size() == 2) {
    j["direction"] = "both";
  } else if (c.directions.size() == 1) {
    j["direction"] = to_string(c.directions[0]);
  }
  json manifests = json::object();
  for (const auto& [dir, p] : c.evaluation.manifests) manifests[to_string(dir)] = p.string();
  json embeddings = json::array();
  for (const auto& p : c.evaluation.embeddings) embeddings.push_back(p.string());
  j["evaluation"] = {{"dataset", c.evaluation.dataset},
                     {"frs", c.evaluation.frs},
                     {"tool", c.evaluation.tool},
                     {"manifests", manifests},
                     {"embeddings", embeddings},
                     {"aggregation", to_string(c.evaluation.aggregation)}};
  json reports = json::array();
  for (const auto& p : c.reports) reports.push_back(p.string());
  j["reports"] = reports;
  return j;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "config file not found: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Format, "config " + path.string() + ": " + e.what());
  }
  return config_from_json(j, fs::absolute(path).parent_path());
}

RunConfig config_from_metadata(const fs::path& metadata, std::string* command) {
  std::ifstream in(metadata, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "run metadata not found: " + metadata.string());
  json meta;
  try {
    meta = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Format, "run metadata " + metadata.string() + ": " + e.what());
  }
  if (!meta.contains("config") || !meta.contains("config_sha256")) {
    throw Error(ErrorKind::Format, "run metadata lacks config or config_sha256");
  }
  if (sha256_hex(meta["config"].dump()) != meta["config_sha256"].get<std::string>()) {
    throw Error(ErrorKind::Validation, "run metadata config hash mismatch: " + metadata.string());
  }
  if (command) *command = meta.value("command", "");
  // Paths in stored configs are already resolved.
  return config_from_json(meta["config"], fs::current_path());
}

int cmd_landmarks(const RunConfig& config, CommandIo& io) {
  if (config.detector_command.empty()) {
    throw Error(ErrorKind::Validation, "detector_command is not configured");
  }
  require_dir(config.image_root, "image_root");
  if (config.landmark_root.empty()) throw Error(ErrorKind::Validation, "landmark_root is not configured");

  std::vector<std::string> images = config.images;
  if (images.empty()) {
    for (const auto& entry : fs::recursive_directory_iterator(config.image_root)) {
      if (!entry.is_regular_file()) continue;
      std::string ext = entry.path().extension().string();
      std::transform(ext.begin(), ext.end(), ext.begin(),
                     [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
      if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") {
        images.push_back(fs::relative(entry.path(), config.image_root).generic_string());
      }
    }
    std::sort(images.begin(), images.end());
  }

  RunRecorder recorder("landmarks", config, io);
  unsigned workers = config.workers ? config.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(1, images.size())));
  std::vector<std::unique_ptr<AdapterProcess>> adapters(workers);
  std::vector<std::string> failures(images.size());

  parallel_for(images.size(), workers, [&](unsigned worker, std::size_t i) {
    try {
      auto& adapter = adapters[worker];
      if (!adapter || !adapter->alive()) {
        adapter = std::make_unique<AdapterProcess>(config.detector_command, adapter_timeout(config));
      }
      const fs::path image = config.image_root / images[i];
      if (!fs::is_regular_file(image)) throw Error(ErrorKind::Io, "cannot read image " + image.string());
      const LandmarkSet lm = detect_landmarks_external(image, *adapter, config.landmark_count);
      write_text(landmark_file_for(config.landmark_root, images[i]), format_points_text(lm));
    } catch (const std::exception& e) {
      failures[i] = e.what();
    }
  });
  adapters.clear();

  std::size_t failed = 0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (!failures[i].empty()) {
      ++failed;
      io.err << images[i] << ": " << failures[i] << "\n";
    }
  }
  io.out << "wrote landmarks for " << (images.size() - failed) << " of " << images.size() << " images\n";
  const int code = failed ? kExitPartial : kExitOk;
  recorder.write(code, {{"failed_images", failed}});
  return code;
}

int cmd_morph(const RunConfig& config, CommandIo& io) {
  require_file(config.protocol, "protocol file");
  require_dir(config.image_root, "image_root");
  const MorphConfig mcfg = morph_config(config);
  const PairProtocol protocol = load_pair_protocol(config.protocol);
  const fs::path out_dir = config.output_root;
  RunRecorder recorder("morph", config, io);

  const bool need_landmarks = config.tool == MorphTool::Landmark || config.alignment.has_value();
  std::mutex detector_mutex;
  std::unique_ptr<AdapterProcess> detector;
  std::function<LandmarkSet(const std::string&, const fs::path&)> landmarks;
  if (need_landmarks) {
    if (!config.landmark_root.empty()) {
      require_dir(config.landmark_root, "landmark_root");
      landmarks = [&](const std::string& sample, const fs::path&) {
        return load_landmarks(landmark_file_for(config.landmark_root, sample));
      };
    } else if (!config.detector_command.empty()) {
      landmarks = [&](const std::string&, const fs::path& image) {
        std::lock_guard lock(detector_mutex);
        if (!detector || !detector->alive()) {
          detector = std::make_unique<AdapterProcess>(config.detector_command, adapter_timeout(config));
        }
        return detect_landmarks_external(image, *detector, config.landmark_count);
      };
    } else {
      throw Error(ErrorKind::Validation, "landmark_root or detector_command must be configured");
    }
  }
  SampleSource source;
  source.image_path = [&](const std::string& sample) { return resolve_image(config.image_root, sample); };
  source.landmarks = landmarks;

  std::vector<ManifestEntry> entries;
  if (config.tool == MorphTool::Landmark) {
    entries = generate_set(protocol, mcfg, source, out_dir, config.workers);
  } else {
    if (config.generator_command.empty()) {
      throw Error(ErrorKind::Validation, "generator_command is not configured");
    }
    const unsigned workers =
        config.workers ? config.workers : std::max(1u, std::thread::hardware_concurrency());
    std::vector<std::unique_ptr<AdapterProcess>> adapters(workers);
    const fs::path cache = config.latent_cache.value_or(out_dir / "latent_cache");
    std::mutex align_mutex;

    auto prepare = [&](const std::string& sample) -> fs::path {
      const fs::path image = source.image_path(sample);
      if (!config.alignment) return image;
      fs::path aligned = out_dir / "aligned" / fs::path(sample).filename();
      aligned.replace_extension(".png");
      // Pairs share samples; align each sample once.
      std::lock_guard lock(align_mutex);
      if (!fs::exists(aligned)) {
        const AlignedFace face =
            align_to_template(load_image(image), source.landmarks(sample, image), *config.alignment);
        fs::create_directories(aligned.parent_path());
        save_image(face.raster, aligned);
      }
      return aligned;
    };

    entries = run_pairs(protocol, out_dir, mcfg.tool_name, workers,
                        [&](unsigned worker, std::size_t i, const fs::path& output) {
                          auto& adapter = adapters[worker];
                          if (!adapter || !adapter->alive()) {
                            adapter = std::make_unique<AdapterProcess>(config.generator_command,
                                                                       adapter_timeout(config));
                          }
                          LatentClient client(*adapter);
                          client.set_seed(config.seed);
                          client.set_cache_dir(cache);
                          const PairRow& row = protocol.rows[i];
                          const LatentVector wa = client.project(prepare(row.sample_a), config.projection_steps);
                          const LatentVector wb = client.project(prepare(row.sample_b), config.projection_steps);
                          client.synthesize(lerp_latent(wa, wb, mcfg.alpha), output, config.synthesis_size);
                        });
  }
  write_manifest(out_dir / "manifest.csv", entries);
  const int code = report_failures(entries, io);
  recorder.write(code, {{"pairs", entries.size()}});
  return code;
}

int cmd_evaluate(const RunConfig& config, CommandIo& io) {
  require_target(config.target_fmr);
  if (config.directions.empty()) throw Error(ErrorKind::Validation, "no direction requested");
  if (config.evaluation.embeddings.empty()) {
    throw Error(ErrorKind::Validation, "evaluation.embeddings is not configured");
  }
  for (Direction d : config.directions) {
    const auto it = config.evaluation.manifests.find(d);
    if (it == config.evaluation.manifests.end()) {
      throw Error(ErrorKind::Validation,
                  std::string("no scenario manifest configured for morphs as ") + to_string(d));
    }
    require_file(it->second, "scenario manifest");
  }
  for (const auto& p : config.evaluation.embeddings) require_file(p, "embeddings file");
  RunRecorder recorder("evaluate", config, io);

  EmbeddingSet embeddings;
  for (const auto& p : config.evaluation.embeddings) embeddings.merge(load_embeddings(p));

  std::map<Direction, ScoreSet> scoresets;
  for (Direction d : config.directions) {
    const ScenarioManifest manifest = load_scenario_manifest(config.evaluation.manifests.at(d));
    if (manifest.direction && *manifest.direction != d) {
      throw Error(ErrorKind::Validation, std::string("manifest for morphs as ") + to_string(d) +
                                             " places its morphs on the other side");
    }
    const std::vector<Trial> trials = enumerate_trials(manifest);
    scoresets[d] = score_trials(manifest, trials, embeddings, config.evaluation.aggregation);
  }
  const ReportKey key{config.evaluation.dataset, config.evaluation.frs, config.evaluation.tool};
  const VulnerabilityReport report = evaluate(key, scoresets, config.target_fmr);

  const fs::path& out = config.output_root;
  const std::string table = render_report(report);
  write_text(out / "report.txt", table);
  write_text(out / "report.csv", format_report_csv(report));
  for (const auto& [d, scores] : scoresets) {
    write_text(out / (std::string("scores_") + to_string(d) + ".csv"), format_score_dump(scores));
  }
  io.out << table;
  recorder.write(kExitOk);
  return kExitOk;
}

int cmd_report(const RunConfig& config, CommandIo& io, const std::optional<fs::path>& output) {
  require_target(config.target_fmr);
  VulnerabilityReport report;
  report.target_fmr = config.target_fmr;
  for (const auto& p : config.reports) {
    require_file(p, "report CSV");
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
      report.merge(parse_report_csv(ss.str()));
    } catch (const Error& e) {
      throw Error(e.kind(), p.string() + ": " + e.what());
    }
  }
  const std::string table = render_report(report);
  if (output) write_text(*output, table);
  io.out << table;
  return kExitOk;
}

int run_command(const std::string& name, const RunConfig& config, CommandIo& io,
                const std::optional<fs::path>& report_output) {
  try {
    if (name == "landmarks") return cmd_landmarks(config, io);
    if (name == "morph") return cmd_morph(config, io);
    if (name == "evaluate") return cmd_evaluate(config, io);
    if (name == "report") return cmd_report(config, io, report_output);
    io.err << "unknown command '" << name << "'\n";
    return kExitInvalid;
  } catch (const Error& e) {
    io.err << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {
    io.err << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
}

}  // namespace morphkit
