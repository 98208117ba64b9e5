#include "slr/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "embedded_data.hpp"

namespace slr {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

Rational percentage(std::int64_t part, std::int64_t whole) {
  if (whole == 0) return 0;
  return Rational(part) * 100 / whole;
}

Rational rate_from_json(const nlohmann::json& v) {
  if (v.is_string()) return parse_decimal(v.get<std::string>());
  if (v.is_number_integer()) return Rational(v.get<std::int64_t>());
  if (v.is_number()) {
    std::ostringstream s;
    s.precision(12);
    s << std::fixed << v.get<double>();
    return parse_decimal(s.str());
  }
  throw std::invalid_argument("pricing rate must be a number or decimal string");
}

}  // namespace

void LevelStats::add(const Judgment& j) {
  ++tasks;
  solved += j.overall;
  syntax_valid += j.syntax;
  partial_sum += j.partial;
}

void LevelStats::validate() const {
  if (tasks < 0 || solved < 0 || syntax_valid < 0) throw std::invalid_argument("negative count");
  if (solved > syntax_valid || syntax_valid > tasks)
    throw std::invalid_argument("level " + std::to_string(level) + ": need solved <= syntax_valid <= tasks");
  if (partial_sum < 0 || partial_sum > tasks) throw std::invalid_argument("partial sum out of range");
}

std::vector<LevelStats> merge_levels(const std::vector<LevelStats>& stats) {
  std::map<int, LevelStats> by_level;
  for (const auto& s : stats) {
    auto [it, fresh] = by_level.try_emplace(s.level, s);
    if (fresh) continue;
    it->second.tasks += s.tasks;
    it->second.solved += s.solved;
    it->second.syntax_valid += s.syntax_valid;
    it->second.partial_sum += s.partial_sum;
  }
  std::vector<LevelStats> out;
  for (auto& [_, s] : by_level) out.push_back(s);
  return out;
}

Rational lrl(const std::vector<LevelStats>& per_level) {
  Rational total = 0;
  for (const auto& s : per_level) {
    if (s.tasks < 1) throw std::invalid_argument("level " + std::to_string(s.level) + " has no tasks");
    total += Rational(s.solved, s.tasks);
  }
  return total;
}

std::map<Tier, Rational> tier_accuracy(const std::vector<LevelStats>& per_level,
                                       const std::function<Tier(int)>& tier_of) {
  std::map<Tier, std::pair<std::int64_t, std::int64_t>> pooled;
  for (const auto& s : per_level) {
    auto& [solved, tasks] = pooled[tier_of(s.level)];
    solved += s.solved;
    tasks += s.tasks;
  }
  std::map<Tier, Rational> out;
  for (const auto& [tier, st] : pooled)
    if (st.second > 0) out[tier] = percentage(st.first, st.second);
  return out;
}

Rational syntax_proportion(const std::vector<LevelStats>& per_level) {
  std::int64_t valid = 0;
  std::int64_t tasks = 0;
  for (const auto& s : per_level) {
    valid += s.syntax_valid;
    tasks += s.tasks;
  }
  return percentage(valid, tasks);
}

double rounded(const Rational& r, int places) {
  BigInt scale = 1;
  for (int i = 0; i < places; ++i) scale *= 10;
  const Rational scaled = r * scale;
  BigInt n = boost::multiprecision::numerator(scaled);
  const BigInt d = boost::multiprecision::denominator(scaled);
  // Round half away from zero.
  BigInt q = (abs(n) * 2 + d) / (d * 2);
  if (n < 0) q = -q;
  return static_cast<double>(Rational(q, scale));
}

Rational parse_decimal(std::string_view text) {
  const std::string s = trim(text);
  std::size_t i = 0;
  bool negative = false;
  if (i < s.size() && (s[i] == '-' || s[i] == '+')) negative = s[i++] == '-';
  BigInt digits = 0;
  BigInt scale = 1;
  bool any = false;
  bool point = false;
  for (; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '.' && !point) {
      point = true;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      digits = digits * 10 + (c - '0');
      if (point) scale *= 10;
      any = true;
    } else {
      throw std::invalid_argument("not a decimal: " + s);
    }
  }
  if (!any) throw std::invalid_argument("not a decimal: " + s);
  Rational r(digits, scale);
  return negative ? Rational(-r) : r;
}

const PricingTable& PricingTable::reference() {
  static const PricingTable table = from_csv(detail::embedded_file("pricing.csv"));
  return table;
}

PricingTable PricingTable::from_csv(std::string_view text) {
  PricingTable out;
  std::istringstream in{std::string(text)};
  std::string line;
  bool header = true;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    if (header) {
      header = false;
      if (cells != std::vector<std::string>{"model", "input", "cached_input", "output"})
        throw std::invalid_argument("pricing header must be model,input,cached_input,output");
      continue;
    }
    if (cells.size() != 4 || cells[0].empty())
      throw std::invalid_argument("pricing line " + std::to_string(line_no) + ": expected 4 cells");
    ModelRates r;
    r.input = parse_decimal(cells[1]);
    if (!cells[2].empty()) r.cached_input = parse_decimal(cells[2]);
    r.output = parse_decimal(cells[3]);
    out.set(cells[0], r);
  }
  return out;
}

PricingTable PricingTable::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("pricing must be an object keyed by model");
  PricingTable out;
  for (const auto& [model, row] : j.items()) {
    if (!row.is_object() || !row.contains("input") || !row.contains("output"))
      throw std::invalid_argument("pricing for " + model + " needs input and output");
    ModelRates r;
    r.input = rate_from_json(row["input"]);
    r.output = rate_from_json(row["output"]);
    if (row.contains("cached_input") && !row["cached_input"].is_null()) r.cached_input = rate_from_json(row["cached_input"]);
    out.set(model, r);
  }
  return out;
}

void PricingTable::set(const std::string& model, ModelRates rates) {
  if (rates.input < 0 || rates.output < 0 || (rates.cached_input && *rates.cached_input < 0))
    throw std::invalid_argument("negative rate for " + model);
  rates_[model] = std::move(rates);
}

const ModelRates& PricingTable::at(const std::string& model) const {
  auto it = rates_.find(model);
  if (it == rates_.end()) throw UnknownModel(model);
  return it->second;
}

TokenCounts& TokenCounts::operator+=(const TokenCounts& o) {
  input += o.input;
  output += o.output;
  if (o.cached_input) cached_input = cached_input.value_or(0) + *o.cached_input;
  return *this;
}

CostReport compute_cost(const std::map<std::string, TokenCounts>& usage, const PricingTable& pricing) {
  CostReport out;
  for (const auto& [model, t] : usage) {
    if (t.input < 0 || t.output < 0 || t.cached_input.value_or(0) < 0)
      throw std::invalid_argument("negative token count for " + model);
    const ModelRates& r = pricing.at(model);
    Rational cost = r.input * t.input + r.output * t.output;
    if (t.cached_input) cost += r.cached_input.value_or(r.input) * *t.cached_input;
    cost /= 1000000;
    out.per_model[model] = cost;
    out.total += cost;
  }
  return out;
}

std::string to_string(ExtractionRule r) { return r == ExtractionRule::raw ? "raw" : "last_fence"; }

ExtractionRule extraction_rule_from_string(std::string_view s) {
  if (s == "last_fence") return ExtractionRule::last_fence;
  if (s == "raw") return ExtractionRule::raw;
  throw std::invalid_argument("unknown extraction rule: " + std::string(s));
}

std::string extract_hypothesis(std::string_view response, ExtractionRule rule) {
  return rule == ExtractionRule::raw ? trim(response) : extract_program_text(response);
}

EvalResult evaluate(const std::vector<EvalItem>& items, const ResourceLimits& limits, int parallelism,
                    ExtractionRule rule) {
  std::vector<JudgeItem> batch;
  batch.reserve(items.size());
  for (const auto& it : items) {
    if (!it.task) throw std::invalid_argument("evaluation item has no task");
    batch.push_back({it.response ? extract_hypothesis(*it.response, rule) : std::string(), it.task});
  }
  EvalResult out;
  out.judgments = judge_batch(batch, limits, parallelism);
  std::vector<LevelStats> stats;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!items[i].response || trim(*items[i].response).empty())
      out.judgments[i].diagnostics.insert(out.judgments[i].diagnostics.begin(), "missing response");
    else if (batch[i].hypothesis.empty())
      out.judgments[i].diagnostics.insert(out.judgments[i].diagnostics.begin(), "no program found in response");
    LevelStats s;
    s.level = items[i].level;
    s.add(out.judgments[i]);
    stats.push_back(s);
  }
  out.levels = merge_levels(stats);
  return out;
}

nlohmann::json report_json(const std::vector<LevelStats>& levels, const std::optional<CostReport>& cost) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& s : levels)
    rows.push_back({{"level", s.level},
                    {"tier", to_string(tier_of_level(s.level))},
                    {"tasks", s.tasks},
                    {"solved", s.solved},
                    {"syntax_valid", s.syntax_valid},
                    {"partial_sum", s.partial_sum.str()},
                    {"accuracy_pct", rounded(percentage(s.solved, s.tasks), 2)}});
  nlohmann::json tiers = nlohmann::json::object();
  for (const auto& [t, pct] : tier_accuracy(levels)) tiers[to_string(t)] = rounded(pct, 2);
  nlohmann::json out = {{"levels", rows},
                        {"lrl", rounded(lrl(levels), 4)},
                        {"lrl_exact", lrl(levels).str()},
                        {"syntax_pct", rounded(syntax_proportion(levels), 2)},
                        {"tier_accuracy_pct", tiers},
                        {"pass_at_k", nullptr}};
  if (cost) {
    nlohmann::json per = nlohmann::json::object();
    for (const auto& [m, c] : cost->per_model) per[m] = rounded(c, 6);
    out["cost_usd"] = {{"per_model", per}, {"total", rounded(cost->total, 6)}};
  }
  return out;
}

}  // namespace slr
