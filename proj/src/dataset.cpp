#include "slr/dataset.hpp"

#include <openssl/evp.h>

#include <atomic>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace slr {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr Split kSplits[] = {Split::train, Split::eval, Split::test};

template <typename T>
T field(const json& j, const char* name) {
  if (!j.contains(name)) throw DatasetError(std::string("missing field ") + name);
  try {
    return j.at(name).get<T>();
  } catch (const json::exception&) {
    throw DatasetError(std::string("field ") + name + " has the wrong type");
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DatasetError("cannot write " + path.string());
  out << bytes;
  if (!out) throw DatasetError("write failed for " + path.string());
}

std::vector<TaskRecord> parse_jsonl(const std::string& text, const std::string& name) {
  std::vector<TaskRecord> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(record_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw DatasetError(name + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const DatasetError& e) {
      throw DatasetError(name + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

Language TaskRecord::task_language() const {
  if (language) return *language;
  if (level < 1) throw DatasetError("task " + id + " has neither a level nor a language");
  return level_language(level);
}

TaskRecord to_record(const TaskInstance& task, std::string id) {
  TaskRecord r;
  r.id = std::move(id);
  r.level = task.level.value_or(0);
  r.tier = task.level ? to_string(tier_of_level(*task.level)) : "";
  r.seed = task.seed;
  r.prompt_logic = task.prompt_logic;
  r.prompt_nl = task.prompt_nl;
  r.ground_truth_rule = render(task.rule);
  r.background = render(task.background());
  for (const auto& a : task.positives) r.positives.push_back(render(a));
  for (const auto& a : task.negatives) r.negatives.push_back(render(a));
  r.metadata = task.metadata;
  if (!task.twins.empty()) r.metadata["twins"] = task.twins;
  if (!task.level || !(task.language == level_language(*task.level))) r.language = task.language;
  return r;
}

json to_json(const TaskRecord& r) {
  json j = {{"id", r.id},
            {"level", r.level},
            {"tier", r.tier},
            {"seed", r.seed},
            {"prompt_logic", r.prompt_logic},
            {"prompt_nl", r.prompt_nl},
            {"ground_truth_rule", r.ground_truth_rule},
            {"background", r.background},
            {"positives", r.positives},
            {"negatives", r.negatives},
            {"metadata", r.metadata}};
  if (r.language) j["language"] = to_json(*r.language);
  return j;
}

TaskRecord record_from_json(const json& j) {
  if (!j.is_object()) throw DatasetError("task record must be an object");
  TaskRecord r;
  r.id = field<std::string>(j, "id");
  r.level = field<int>(j, "level");
  r.tier = field<std::string>(j, "tier");
  r.seed = field<std::uint64_t>(j, "seed");
  r.prompt_logic = field<std::string>(j, "prompt_logic");
  r.prompt_nl = field<std::string>(j, "prompt_nl");
  r.ground_truth_rule = field<std::string>(j, "ground_truth_rule");
  r.background = field<std::string>(j, "background");
  r.positives = field<std::vector<std::string>>(j, "positives");
  r.negatives = field<std::vector<std::string>>(j, "negatives");
  r.metadata = j.value("metadata", json::object());
  if (j.contains("language")) {
    try {
      r.language = language_from_json(j["language"]);
    } catch (const std::invalid_argument& e) {
      throw DatasetError(std::string("language: ") + e.what());
    }
  }
  if (r.level < 0 || r.level > kLevels) throw DatasetError("level out of range in " + r.id);
  return r;
}

JudgeTask judge_task(const TaskRecord& r) {
  JudgeTask t;
  t.language = r.task_language();
  try {
    t.background = parse_program(r.background);
    for (const auto& s : r.positives) t.positives.push_back(parse_atom(s));
    for (const auto& s : r.negatives) t.negatives.push_back(parse_atom(s));
  } catch (const SyntaxError& e) {
    throw DatasetError("task " + r.id + ": " + e.what());
  }
  return t;
}

std::string task_id(int level, Split split, std::size_t index) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "L%02d-%s-%04zu", level, to_string(split).c_str(), index);
  return buf;
}

json to_json(const DatasetManifest& m) {
  json counts = json::object();
  for (const auto& [split, per_level] : m.counts) {
    json row = json::object();
    for (const auto& [level, n] : per_level) row[std::to_string(level)] = n;
    counts[split] = row;
  }
  return {{"dataset_seed", m.dataset_seed}, {"levels", m.levels},     {"counts", counts},
          {"content_hash", m.content_hash}, {"config", m.config},     {"warnings", m.warnings}};
}

DatasetManifest manifest_from_json(const json& j) {
  if (!j.is_object()) throw DatasetError("manifest must be an object");
  DatasetManifest m;
  m.dataset_seed = field<std::uint64_t>(j, "dataset_seed");
  m.levels = field<std::vector<int>>(j, "levels");
  m.content_hash = field<std::string>(j, "content_hash");
  m.config = j.value("config", json::object());
  m.warnings = j.value("warnings", std::vector<std::string>{});
  const json counts = j.value("counts", json::object());
  try {
    for (const auto& [split, row] : counts.items())
      for (const auto& [level, n] : row.items()) m.counts[split][std::stoi(level)] = n.get<int>();
  } catch (const std::exception& e) {
    throw DatasetError(std::string("manifest counts: ") + e.what());
  }
  return m;
}

const std::vector<TaskRecord>& Dataset::split(Split s) const {
  return s == Split::train ? train : s == Split::eval ? eval : test;
}

std::vector<TaskRecord>& Dataset::split(Split s) { return s == Split::train ? train : s == Split::eval ? eval : test; }

const TaskRecord* Dataset::find(const std::string& id) const {
  for (Split s : kSplits)
    for (const auto& r : split(s))
      if (r.id == id) return &r;
  return nullptr;
}

std::string split_jsonl(const std::vector<TaskRecord>& records) {
  std::string out;
  for (const auto& r : records) out += to_json(r).dump() + "\n";
  return out;
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

std::string content_hash(const Dataset& d) {
  std::string all;
  for (Split s : kSplits) {
    all += to_string(s) + "\n";
    all += split_jsonl(d.split(s));
  }
  return sha256_hex(all);
}

Dataset build_dataset(const std::vector<LevelSpec>& specs, std::uint64_t dataset_seed, const BuildOptions& options,
                      int parallelism) {
  if (parallelism < 1) throw std::invalid_argument("parallelism must be >= 1");
  std::vector<std::optional<LevelBuild>> builds(specs.size());
  std::vector<std::exception_ptr> errors(specs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < specs.size();) {
      try {
        builds[i] = build_level(specs[i], dataset_seed, options);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int threads = std::min<int>(parallelism, static_cast<int>(specs.size()));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  Dataset d;
  d.manifest.dataset_seed = dataset_seed;
  for (const auto& b : builds) {
    const LevelSpec& spec = b->spec;
    d.manifest.levels.push_back(spec.level);
    for (Split s : kSplits) {
      const auto& tasks = b->split(s);
      auto& dst = d.split(s);
      for (std::size_t i = 0; i < tasks.size(); ++i) dst.push_back(to_record(tasks[i], task_id(spec.level, s, i)));
      d.manifest.counts[to_string(s)][spec.level] = static_cast<int>(tasks.size());
    }
    for (const auto& w : b->warnings) d.manifest.warnings.push_back(w);
  }
  json sizes = json::object();
  if (options.split_sizes)
    sizes = {{"train", options.split_sizes->train}, {"eval", options.split_sizes->eval}, {"test", options.split_sizes->test}};
  d.manifest.config = {{"split_sizes", sizes}, {"llm_policy", policy_name(options.llm_policy)}};
  d.manifest.content_hash = content_hash(d);
  return d;
}

void save_dataset(const Dataset& d, const fs::path& dir) {
  fs::create_directories(dir);
  for (Split s : kSplits) write_file(dir / (to_string(s) + ".jsonl"), split_jsonl(d.split(s)));
  write_file(dir / "manifest.json", to_json(d.manifest).dump(2) + "\n");
}

Dataset load_dataset(const fs::path& dir) {
  Dataset d;
  try {
    d.manifest = manifest_from_json(json::parse(read_file(dir / "manifest.json")));
  } catch (const json::exception& e) {
    throw DatasetError("manifest.json: " + std::string(e.what()));
  }
  for (Split s : kSplits) {
    const std::string name = to_string(s) + ".jsonl";
    d.split(s) = parse_jsonl(read_file(dir / name), name);
  }
  const std::string actual = content_hash(d);
  if (actual != d.manifest.content_hash)
    throw DatasetError("content hash mismatch: manifest has " + d.manifest.content_hash + ", files give " + actual);
  return d;
}

std::vector<int> parse_level_list(std::string_view text) {
  auto number = [&](std::string_view s) {
    int v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || s.empty())
      throw std::invalid_argument("bad level list: " + std::string(text));
    return v;
  };
  std::vector<int> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string_view::npos) comma = text.size();
    const std::string_view part = text.substr(pos, comma - pos);
    const std::size_t dash = part.find('-');
    const int lo = number(dash == std::string_view::npos ? part : part.substr(0, dash));
    const int hi = dash == std::string_view::npos ? lo : number(part.substr(dash + 1));
    if (lo < 1 || hi > kLevels || lo > hi) throw std::invalid_argument("bad level range: " + std::string(part));
    for (int l = lo; l <= hi; ++l)
      if (std::find(out.begin(), out.end(), l) == out.end()) out.push_back(l);
    pos = comma + 1;
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace slr
